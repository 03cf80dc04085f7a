//! Textual constraint syntax.

use super::{Condition, Constraint, ConstraintError, Selection, SetExpr};
use crate::assignment::Diagnostic;
use crate::lexer::{tokenize, Cursor, TokenKind};
use crate::model::{LabelRef, NodeKind};

type Result<T> = std::result::Result<T, ConstraintError>;

fn error(pos: (usize, usize), message: impl Into<String>) -> ConstraintError {
    ConstraintError::Syntax(Diagnostic::new(pos.0, pos.1, message))
}

fn end_position(text: &str) -> (usize, usize) {
    let lines = text.lines().count().max(1);
    let last = text.lines().last().unwrap_or("");
    (lines, last.chars().count() + 1)
}

/// Parses a file of zero or more `constraint` blocks.
pub fn parse_constraints(text: &str) -> Result<Vec<Constraint>> {
    let tokens = tokenize(text, 1).map_err(|e| error((e.line, e.column), e.message))?;
    let mut cursor = Cursor::new(&tokens, end_position(text));
    let mut out = Vec::new();
    while !cursor.at_end() {
        out.push(constraint(&mut cursor)?);
    }
    Ok(out)
}

/// Parses exactly one constraint.
pub fn parse_constraint(text: &str) -> Result<Constraint> {
    let mut all = parse_constraints(text)?;
    match all.len() {
        1 => Ok(all.remove(0)),
        0 => Err(error(end_position(text), "expected `constraint`")),
        _ => Err(error((1, 1), "expected a single constraint")),
    }
}

fn expect_keyword(cursor: &mut Cursor<'_>, word: &str) -> Result<()> {
    let pos = cursor.position();
    if cursor.eat_keyword(word) {
        Ok(())
    } else {
        Err(error(pos, format!("expected `{word}`, found {}", cursor.describe_next())))
    }
}

fn expect_punct(cursor: &mut Cursor<'_>, p: &str) -> Result<()> {
    let pos = cursor.position();
    if cursor.eat_punct(p) {
        Ok(())
    } else {
        Err(error(pos, format!("expected `{p}`, found {}", cursor.describe_next())))
    }
}

fn ident(cursor: &mut Cursor<'_>, what: &str) -> Result<String> {
    let pos = cursor.position();
    match cursor.peek().map(|t| &t.kind) {
        Some(TokenKind::Ident(s)) => {
            cursor.next();
            Ok(s.clone())
        }
        _ => Err(error(pos, format!("expected {what}, found {}", cursor.describe_next()))),
    }
}

/// True when the next token is `word` used as a keyword rather than as the
/// first half of `Type.Label`.
fn at_keyword(cursor: &Cursor<'_>, word: &str) -> bool {
    cursor.peek().is_some_and(|t| t.is_keyword(word)) && !cursor.peek_at(1).is_some_and(|t| t.is_punct("."))
}

fn constraint(cursor: &mut Cursor<'_>) -> Result<Constraint> {
    expect_keyword(cursor, "constraint")?;
    let name = ident(cursor, "a constraint name")?;
    expect_punct(cursor, ":")?;
    expect_keyword(cursor, "data")?;
    let outgoing = if at_keyword(cursor, "outgoing") {
        cursor.next();
        true
    } else {
        false
    };
    let data = selections(cursor, false)?;
    expect_keyword(cursor, "never")?;
    expect_keyword(cursor, "flows")?;
    expect_keyword(cursor, "vertex")?;
    let vertex = if at_keyword(cursor, "any") {
        cursor.next();
        Vec::new()
    } else {
        selections(cursor, true)?
    };
    let condition = if at_keyword(cursor, "where") {
        cursor.next();
        Some(condition(cursor)?)
    } else {
        None
    };
    Ok(Constraint {
        name,
        outgoing,
        data,
        vertex,
        condition,
    })
}

fn selections(cursor: &mut Cursor<'_>, vertex_side: bool) -> Result<Vec<Selection>> {
    let side = if vertex_side { "vertex" } else { "data" };
    if cursor.at_end() || at_keyword(cursor, "never") || at_keyword(cursor, "where") {
        return Err(error(cursor.position(), format!("expected a {side} selection")));
    }
    let mut out = vec![selection(cursor, vertex_side)?];
    while cursor.eat_punct(",") {
        out.push(selection(cursor, vertex_side)?);
    }
    Ok(out)
}

fn selection(cursor: &mut Cursor<'_>, vertex_side: bool) -> Result<Selection> {
    let negated = cursor.eat_punct("!");
    let pos = cursor.position();
    if at_keyword(cursor, "named") {
        cursor.next();
        return match cursor.next().map(|t| &t.kind) {
            Some(TokenKind::Str(name)) => Ok(Selection::Name {
                name: name.clone(),
                negated,
            }),
            _ => Err(error(pos, "expected a quoted name after `named`")),
        };
    }
    if at_keyword(cursor, "kind") {
        cursor.next();
        if !vertex_side {
            return Err(error(pos, "`kind` selects vertices, not data"));
        }
        if negated {
            return Err(error(pos, "`kind` cannot be negated"));
        }
        let kind_pos = cursor.position();
        let word = ident(cursor, "a node kind")?;
        return NodeKind::parse(&word)
            .map(Selection::Kind)
            .ok_or_else(|| error(kind_pos, format!("unknown node kind `{word}`")));
    }
    let label_type = ident(cursor, "a selection")?;
    expect_punct(cursor, ".")?;
    match cursor.next().map(|t| &t.kind) {
        Some(TokenKind::Ident(label)) => Ok(Selection::Label {
            label: LabelRef::new(label_type, label.clone()),
            negated,
        }),
        Some(TokenKind::Var(variable)) if !negated => Ok(Selection::VariableLabel {
            label_type,
            variable: variable.clone(),
        }),
        Some(TokenKind::Var(_)) => Err(error(pos, "variable selections cannot be negated")),
        _ => Err(error(pos, "expected `Type.Label` or `Type.$variable`")),
    }
}

fn condition(cursor: &mut Cursor<'_>) -> Result<Condition> {
    let mut left = conjunction(cursor)?;
    while cursor.eat_punct("||") || cursor.eat_keyword("or") {
        left = Condition::Or(Box::new(left), Box::new(conjunction(cursor)?));
    }
    Ok(left)
}

fn conjunction(cursor: &mut Cursor<'_>) -> Result<Condition> {
    let mut left = primary(cursor)?;
    while cursor.eat_punct("&&") || cursor.eat_keyword("and") {
        left = Condition::And(Box::new(left), Box::new(primary(cursor)?));
    }
    Ok(left)
}

fn primary(cursor: &mut Cursor<'_>) -> Result<Condition> {
    if cursor.eat_punct("!") || cursor.eat_keyword("not") {
        return Ok(Condition::not(primary(cursor)?));
    }
    if cursor.eat_punct("(") {
        let inner = condition(cursor)?;
        expect_punct(cursor, ")")?;
        return Ok(inner);
    }
    let pos = cursor.position();
    let word = ident(cursor, "a condition")?;
    expect_punct(cursor, "(")?;
    let result = match word.to_ascii_lowercase().as_str() {
        "isempty" => Condition::IsEmpty(set_expr(cursor)?),
        "subset" | "equals" => {
            let a = set_expr(cursor)?;
            expect_punct(cursor, ",")?;
            let b = set_expr(cursor)?;
            if word.eq_ignore_ascii_case("subset") {
                Condition::Subset(a, b)
            } else {
                Condition::Equals(a, b)
            }
        }
        _ => return Err(error(pos, format!("unknown condition `{word}`"))),
    };
    expect_punct(cursor, ")")?;
    Ok(result)
}

fn set_expr(cursor: &mut Cursor<'_>) -> Result<SetExpr> {
    let pos = cursor.position();
    match cursor.next().map(|t| &t.kind) {
        Some(TokenKind::Var(v)) => Ok(SetExpr::Var(v.clone())),
        Some(TokenKind::Ident(word)) => {
            let word = word.to_ascii_lowercase();
            if word != "intersect" && word != "union" {
                return Err(error(pos, format!("unknown set operation `{word}`")));
            }
            expect_punct(cursor, "(")?;
            let a = set_expr(cursor)?;
            expect_punct(cursor, ",")?;
            let b = set_expr(cursor)?;
            expect_punct(cursor, ")")?;
            Ok(if word == "intersect" {
                SetExpr::intersect(a, b)
            } else {
                SetExpr::union(a, b)
            })
        }
        _ => Err(error(pos, "expected `$variable`, `intersect(..)` or `union(..)`")),
    }
}
