//! Textual assignment language used to edit behaviors per output pin.
//!
//! ```text
//! forward userData
//! set Encryption.Encrypted if TRUE
//! set Sensitivity.Public if !userData.Sensitivity.Personal && Location.onPremise
//! ```
//!
//! `forward` names an input pin or an incoming flow. `set` lists labels as
//! `Type.Label` and an optional condition (`TRUE` when omitted). Label
//! references in conditions are `Type.Label` or `flow.Type.Label`.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::lexer::{tokenize, Cursor, Token, TokenKind};
use crate::model::{Assignment, DataDictionary, LabelRef, Term};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Located<T> {
    pub value: T,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Forward(Vec<Located<String>>),
    Set {
        labels: Vec<Located<LabelRef>>,
        term: Term,
        /// Scoped flow names referenced by the term, with their positions.
        scopes: Vec<Located<String>>,
    },
}

/// Parses a condition such as `userData.Sensitivity.Personal && !TRUE`.
pub fn parse_term(text: &str) -> Result<Term, Diagnostic> {
    parse_term_at(text, 1)
}

pub(crate) fn parse_term_at(text: &str, first_line: usize) -> Result<Term, Diagnostic> {
    let tokens = tokenize(text, first_line).map_err(|e| Diagnostic::new(e.line, e.column, e.message))?;
    let end = (first_line, text.chars().count() + 1);
    let mut cursor = Cursor::new(&tokens, end);
    let mut scopes = Vec::new();
    let term = term_expr(&mut cursor, &mut scopes)?;
    if !cursor.at_end() {
        let (line, column) = cursor.position();
        return Err(Diagnostic::new(
            line,
            column,
            format!("unexpected {} after condition", cursor.describe_next()),
        ));
    }
    Ok(term)
}

/// Parses a term from a token cursor; shared with the architecture language.
pub(crate) fn term_expr(
    cursor: &mut Cursor<'_>,
    scopes: &mut Vec<Located<String>>,
) -> Result<Term, Diagnostic> {
    let mut left = conjunction(cursor, scopes)?;
    while cursor.eat_punct("||") || cursor.eat_punct("|") || cursor.eat_keyword("or") {
        let right = conjunction(cursor, scopes)?;
        left = Term::or(left, right);
    }
    Ok(left)
}

fn conjunction(cursor: &mut Cursor<'_>, scopes: &mut Vec<Located<String>>) -> Result<Term, Diagnostic> {
    let mut left = unary(cursor, scopes)?;
    while cursor.eat_punct("&&") || cursor.eat_punct("&") || cursor.eat_keyword("and") {
        let right = unary(cursor, scopes)?;
        left = Term::and(left, right);
    }
    Ok(left)
}

fn unary(cursor: &mut Cursor<'_>, scopes: &mut Vec<Located<String>>) -> Result<Term, Diagnostic> {
    if cursor.eat_punct("!") || cursor.eat_keyword("not") {
        return Ok(Term::not(unary(cursor, scopes)?));
    }
    let (line, column) = cursor.position();
    if cursor.eat_punct("(") {
        let inner = term_expr(cursor, scopes)?;
        if !cursor.eat_punct(")") {
            let (l, c) = cursor.position();
            return Err(Diagnostic::new(l, c, format!("expected `)`, found {}", cursor.describe_next())));
        }
        return Ok(inner);
    }
    if cursor.eat_keyword("true") {
        return Ok(Term::Constant(true));
    }
    if cursor.eat_keyword("false") {
        return Ok(Term::Constant(false));
    }
    let parts = dotted(cursor)?;
    match parts.as_slice() {
        [ty, label] => Ok(Term::label(LabelRef::new(ty, label))),
        [flow, ty, label] => {
            scopes.push(Located {
                value: flow.clone(),
                line,
                column,
            });
            Ok(Term::scoped(flow, LabelRef::new(ty, label)))
        }
        _ => Err(Diagnostic::new(
            line,
            column,
            "expected a label reference `Type.Label` or `flow.Type.Label`",
        )),
    }
}

/// Reads `ident ('.' ident)*`.
fn dotted(cursor: &mut Cursor<'_>) -> Result<Vec<String>, Diagnostic> {
    let mut parts = Vec::new();
    loop {
        let (line, column) = cursor.position();
        match cursor.next() {
            Some(Token {
                kind: TokenKind::Ident(s),
                ..
            }) => parts.push(s.clone()),
            other => {
                let found = other.map_or_else(|| "end of input".to_string(), |t| t.kind.to_string());
                return Err(Diagnostic::new(line, column, format!("expected a name, found {found}")));
            }
        }
        if !cursor.eat_punct(".") {
            return Ok(parts);
        }
    }
}

/// Syntax check of assignment text; one statement per line.
pub fn parse_assignments(text: &str) -> Result<Vec<Located<Statement>>, Vec<Diagnostic>> {
    let mut statements = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line, i + 1) {
            Ok(Some(s)) => statements.push(s),
            Ok(None) => {}
            Err(d) => diagnostics.push(d),
        }
    }
    if diagnostics.is_empty() {
        Ok(statements)
    } else {
        Err(diagnostics)
    }
}

fn parse_line(text: &str, line: usize) -> Result<Option<Located<Statement>>, Diagnostic> {
    let tokens = tokenize(text, line).map_err(|e| Diagnostic::new(e.line, e.column, e.message))?;
    let Some(first) = tokens.first() else {
        return Ok(None);
    };
    let mut cursor = Cursor::new(&tokens, (line, text.chars().count() + 1));
    let statement = if cursor.eat_keyword("forward") {
        let mut inputs = Vec::new();
        loop {
            let (l, c) = cursor.position();
            match cursor.next() {
                Some(Token {
                    kind: TokenKind::Ident(name),
                    ..
                }) => inputs.push(Located {
                    value: name.clone(),
                    line: l,
                    column: c,
                }),
                other => {
                    let found = other.map_or_else(|| "end of input".to_string(), |t| t.kind.to_string());
                    return Err(Diagnostic::new(l, c, format!("expected an input name, found {found}")));
                }
            }
            if !cursor.eat_punct(",") {
                break;
            }
        }
        Statement::Forward(inputs)
    } else if cursor.eat_keyword("set") {
        let mut labels = Vec::new();
        loop {
            let (l, c) = cursor.position();
            let parts = dotted(&mut cursor)?;
            let [ty, label] = parts.as_slice() else {
                return Err(Diagnostic::new(l, c, "expected a label `Type.Label`"));
            };
            labels.push(Located {
                value: LabelRef::new(ty, label),
                line: l,
                column: c,
            });
            if !cursor.eat_punct(",") {
                break;
            }
        }
        let mut scopes = Vec::new();
        let term = if cursor.eat_keyword("if") {
            term_expr(&mut cursor, &mut scopes)?
        } else {
            Term::Constant(true)
        };
        Statement::Set {
            labels,
            term,
            scopes,
        }
    } else {
        return Err(Diagnostic::new(
            first.line,
            first.column,
            format!("unknown keyword {}; expected `forward` or `set`", first.kind),
        ));
    };
    if !cursor.at_end() {
        let (l, c) = cursor.position();
        return Err(Diagnostic::new(l, c, format!("unexpected {}", cursor.describe_next())));
    }
    Ok(Some(Located {
        value: statement,
        line: first.line,
        column: first.column,
    }))
}

/// What an assignment can refer to: the behavior's pins and the flows that
/// arrive at its input pins.
#[derive(Debug, Clone, Default)]
pub struct AssignmentContext<'a> {
    /// (pin id, pin name)
    pub in_pins: Vec<(String, String)>,
    /// (flow name, target pin id)
    pub flows: Vec<(String, String)>,
    pub out_pin: String,
    pub dictionary: Option<&'a DataDictionary>,
}

impl AssignmentContext<'_> {
    fn input_by_name(&self, name: &str) -> Option<&str> {
        self.in_pins
            .iter()
            .find(|(id, n)| n == name || id == name)
            .map(|(id, _)| id.as_str())
    }

    fn flow_pins(&self, name: &str) -> Vec<&str> {
        self.flows
            .iter()
            .filter(|(f, _)| f == name)
            .map(|(_, p)| p.as_str())
            .collect()
    }
}

/// Turns parsed statements into model assignments for `ctx.out_pin`.
pub fn resolve_assignments(
    statements: &[Located<Statement>],
    ctx: &AssignmentContext<'_>,
) -> Result<Vec<Assignment>, Vec<Diagnostic>> {
    let mut out = Vec::new();
    let mut diagnostics = Vec::new();
    let check_label = |diagnostics: &mut Vec<Diagnostic>, label: &LabelRef, line, column| {
        if let Some(dict) = ctx.dictionary {
            if !dict.contains_label(label) {
                diagnostics.push(Diagnostic::new(line, column, format!("unknown label `{label}`")));
            }
        }
    };
    for statement in statements {
        match &statement.value {
            Statement::Forward(inputs) => {
                for input in inputs {
                    if let Some(pin) = ctx.input_by_name(&input.value) {
                        out.push(Assignment::Forward {
                            in_pins: vec![pin.to_string()],
                            out_pin: ctx.out_pin.clone(),
                            flow: None,
                        });
                    } else {
                        let pins = ctx.flow_pins(&input.value);
                        if pins.is_empty() {
                            diagnostics.push(Diagnostic::new(
                                input.line,
                                input.column,
                                format!("unknown input `{}`", input.value),
                            ));
                            continue;
                        }
                        let pins: BTreeSet<&str> = pins.into_iter().collect();
                        out.push(Assignment::Forward {
                            in_pins: pins.into_iter().map(str::to_string).collect(),
                            out_pin: ctx.out_pin.clone(),
                            flow: Some(input.value.clone()),
                        });
                    }
                }
            }
            Statement::Set {
                labels,
                term,
                scopes,
            } => {
                for label in labels {
                    check_label(&mut diagnostics, &label.value, label.line, label.column);
                }
                let mut unscoped = false;
                term.for_each_reference(&mut |label, flow| {
                    if flow.is_none() {
                        unscoped = true;
                    }
                    check_label(&mut diagnostics, label, statement.line, statement.column);
                });
                let mut pins = BTreeSet::new();
                if unscoped {
                    pins.extend(ctx.in_pins.iter().map(|(id, _)| id.as_str()));
                }
                for scope in scopes {
                    let found = ctx.flow_pins(&scope.value);
                    if found.is_empty() {
                        diagnostics.push(Diagnostic::new(
                            scope.line,
                            scope.column,
                            format!("unknown incoming flow `{}`", scope.value),
                        ));
                    }
                    pins.extend(found);
                }
                // Keep pin declaration order.
                let in_pins = ctx
                    .in_pins
                    .iter()
                    .filter(|(id, _)| pins.contains(id.as_str()))
                    .map(|(id, _)| id.clone())
                    .collect();
                out.push(Assignment::Set {
                    in_pins,
                    out_pin: ctx.out_pin.clone(),
                    term: term.clone(),
                    labels: labels.iter().map(|l| l.value.clone()).collect(),
                });
            }
        }
    }
    if diagnostics.is_empty() {
        Ok(out)
    } else {
        Err(diagnostics)
    }
}

/// All diagnostics for `text`: syntax first, then resolution when a context
/// is given.
pub fn check_assignments(text: &str, ctx: Option<&AssignmentContext<'_>>) -> Vec<Diagnostic> {
    match parse_assignments(text) {
        Err(diagnostics) => diagnostics,
        Ok(statements) => match ctx {
            Some(ctx) => resolve_assignments(&statements, ctx).err().unwrap_or_default(),
            None => Vec::new(),
        },
    }
}
