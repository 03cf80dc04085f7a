//! Parsing and checking of architecture files.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::{Action, ActionKind, AdlError, ArchitectureModel, Component, Container, Operation, Scenario};
use crate::assignment::term_expr;
use crate::lexer::{tokenize, Cursor, Token, TokenKind};
use crate::model::{LabelRef, NodeKind};

type Result<T> = std::result::Result<T, AdlError>;

/// Declared data with their labels, then the actions.
type ScenarioBody = (Vec<(String, Vec<LabelRef>)>, Vec<Action>);

/// (component, operation) to the operations it calls, with the call's line.
type CallGraph<'a> = BTreeMap<(&'a str, &'a str), Vec<(&'a str, &'a str, usize)>>;

const PROBABILISTIC: &[&str] = &["probability", "pbranch", "stochastic", "distribution"];

struct Line {
    number: usize,
    end: usize,
    tokens: Vec<Token>,
}

impl Line {
    fn first(&self) -> &Token {
        &self.tokens[0]
    }
}

fn err_at(pos: (usize, usize), message: impl Into<String>) -> AdlError {
    AdlError::new(pos.0, pos.1, message)
}

fn ident(c: &mut Cursor<'_>, what: &str) -> Result<String> {
    let pos = c.position();
    match c.peek().map(|t| &t.kind) {
        Some(TokenKind::Ident(s)) => {
            c.next();
            Ok(s.clone())
        }
        _ => Err(err_at(pos, format!("expected {what}, found {}", c.describe_next()))),
    }
}

fn expect_punct(c: &mut Cursor<'_>, p: &str) -> Result<()> {
    let pos = c.position();
    if c.eat_punct(p) {
        Ok(())
    } else {
        Err(err_at(pos, format!("expected `{p}`, found {}", c.describe_next())))
    }
}

fn expect_end(c: &Cursor<'_>) -> Result<()> {
    if c.at_end() {
        Ok(())
    } else {
        Err(err_at(c.position(), format!("unexpected {}", c.describe_next())))
    }
}

/// `name (, name)*`, optionally closed by `close`, which also allows an
/// empty list.
fn names(c: &mut Cursor<'_>, what: &str, close: Option<&str>) -> Result<Vec<String>> {
    let mut out = Vec::new();
    if let Some(close) = close {
        if c.eat_punct(close) {
            return Ok(out);
        }
    }
    loop {
        out.push(ident(c, what)?);
        if !c.eat_punct(",") {
            break;
        }
    }
    if let Some(close) = close {
        expect_punct(c, close)?;
    }
    Ok(out)
}

struct Parser {
    lines: Vec<Line>,
    pos: usize,
    /// Every label mentioned, with its position, checked once all types are known.
    label_uses: Vec<(LabelRef, (usize, usize))>,
}

impl Parser {
    fn label(&mut self, c: &mut Cursor<'_>) -> Result<LabelRef> {
        let pos = c.position();
        let ty = ident(c, "a label `Type.Label`")?;
        expect_punct(c, ".")?;
        let label = ident(c, "a label name")?;
        let l = LabelRef::new(ty, label);
        self.label_uses.push((l.clone(), pos));
        Ok(l)
    }

    fn labels(&mut self, c: &mut Cursor<'_>) -> Result<Vec<LabelRef>> {
        let mut out = vec![self.label(c)?];
        while c.eat_punct(",") {
            out.push(self.label(c)?);
        }
        Ok(out)
    }

    /// Optional `labels T.L, ...` suffix.
    fn annotation(&mut self, c: &mut Cursor<'_>) -> Result<Vec<LabelRef>> {
        if c.eat_keyword("labels") {
            self.labels(c)
        } else {
            Ok(Vec::new())
        }
    }

    fn next_line(&mut self, opener: (usize, usize), what: &str) -> Result<usize> {
        if self.pos >= self.lines.len() {
            return Err(err_at(opener, format!("{what} is missing its `end`")));
        }
        self.pos += 1;
        Ok(self.pos - 1)
    }

    fn parse(&mut self) -> Result<ArchitectureModel> {
        let mut model = ArchitectureModel::default();
        let mut deployed_at: HashMap<String, usize> = HashMap::new();
        while self.pos < self.lines.len() {
            let li = self.pos;
            self.pos += 1;
            let line = &self.lines[li];
            let pos = (line.first().line, line.first().column);
            let tokens = line.tokens.clone();
            let mut c = Cursor::new(&tokens, (line.number, line.end));
            if c.eat_keyword("labeltype") {
                let name = ident(&mut c, "a label type name")?;
                let mut labels = Vec::new();
                while !c.at_end() {
                    labels.push(ident(&mut c, "a label name")?);
                    c.eat_punct(",");
                }
                if labels.is_empty() {
                    return Err(err_at(pos, format!("label type `{name}` declares no labels")));
                }
                model.label_types.push((name, labels));
            } else if c.eat_keyword("container") {
                let name = ident(&mut c, "a container name")?;
                let labels = self.annotation(&mut c)?;
                expect_end(&c)?;
                model.containers.push(Container { name, labels });
            } else if c.eat_keyword("component") {
                let name = ident(&mut c, "a component name")?;
                let mut kind = NodeKind::Process;
                if c.eat_keyword("kind") {
                    let kpos = c.position();
                    let word = ident(&mut c, "a node kind")?;
                    kind = NodeKind::parse(&word).ok_or_else(|| err_at(kpos, format!("unknown node kind `{word}`")))?;
                }
                expect_end(&c)?;
                let operations = self.component_body(&name, pos)?;
                model.components.push(Component { name, kind, operations });
            } else if c.eat_keyword("deploy") {
                let component = ident(&mut c, "a component name")?;
                if !c.eat_keyword("on") {
                    return Err(err_at(c.position(), "expected `on`"));
                }
                let container = ident(&mut c, "a container name")?;
                expect_end(&c)?;
                if deployed_at.insert(component.clone(), pos.0).is_some() {
                    return Err(err_at(pos, format!("component `{component}` is deployed twice")));
                }
                model.deployments.insert(component, container);
            } else if c.eat_keyword("scenario") {
                let name = ident(&mut c, "a scenario name")?;
                let labels = self.annotation(&mut c)?;
                expect_end(&c)?;
                let (data, actions) = self.scenario_body(&name, pos)?;
                model.scenarios.push(Scenario {
                    name,
                    labels,
                    data,
                    actions,
                });
            } else {
                return Err(err_at(pos, format!("unknown statement {}", c.describe_next())));
            }
        }
        Ok(model)
    }

    fn component_body(&mut self, component: &str, opener: (usize, usize)) -> Result<Vec<Operation>> {
        let mut ops = Vec::new();
        loop {
            let li = self.next_line(opener, &format!("component `{component}`"))?;
            let tokens = self.lines[li].tokens.clone();
            let line = &self.lines[li];
            let pos = (line.first().line, line.first().column);
            let mut c = Cursor::new(&tokens, (line.number, line.end));
            if c.eat_keyword("end") {
                expect_end(&c)?;
                return Ok(ops);
            }
            if !c.eat_keyword("operation") {
                return Err(err_at(pos, format!("expected `operation` or `end`, found {}", c.describe_next())));
            }
            let name = ident(&mut c, "an operation name")?;
            expect_punct(&mut c, "(")?;
            let params = names(&mut c, "a parameter name", Some(")"))?;
            expect_end(&c)?;
            let prefix = format!("{component}.{name}");
            let (actions, _) = self.block(&prefix, pos, true, false)?;
            for (i, a) in actions.iter().enumerate() {
                if matches!(a.kind, ActionKind::Return(_)) && i + 1 != actions.len() {
                    return Err(AdlError::new(a.line, 1, "`return` must be the last action of an operation"));
                }
            }
            ops.push(Operation { name, params, actions });
        }
    }

    fn scenario_body(
        &mut self,
        scenario: &str,
        opener: (usize, usize),
    ) -> Result<ScenarioBody> {
        let mut data = Vec::new();
        while self.pos < self.lines.len() && self.lines[self.pos].first().is_keyword("data") {
            let tokens = self.lines[self.pos].tokens.clone();
            let line = &self.lines[self.pos];
            let mut c = Cursor::new(&tokens, (line.number, line.end));
            self.pos += 1;
            c.next();
            let name = ident(&mut c, "a variable name")?;
            let labels = if c.at_end() { Vec::new() } else { self.labels(&mut c)? };
            expect_end(&c)?;
            data.push((name, labels));
        }
        let (actions, _) = self.block(scenario, opener, false, false)?;
        Ok((data, actions))
    }

    /// Reads actions until `end` (or `or` inside a branch). Returns whether
    /// the block was closed by `or`.
    fn block(
        &mut self,
        prefix: &str,
        opener: (usize, usize),
        in_operation: bool,
        in_branch: bool,
    ) -> Result<(Vec<Action>, bool)> {
        let mut actions = Vec::new();
        loop {
            let li = self.next_line(opener, "block")?;
            let tokens = self.lines[li].tokens.clone();
            let line_no = self.lines[li].number;
            let line_end = self.lines[li].end;
            let pos = (tokens[0].line, tokens[0].column);
            let mut c = Cursor::new(&tokens, (line_no, line_end));
            let id = format!("{prefix}#{}", actions.len() + 1);
            if c.eat_keyword("end") {
                expect_end(&c)?;
                return Ok((actions, false));
            }
            if in_branch && c.eat_keyword("or") {
                expect_end(&c)?;
                return Ok((actions, true));
            }
            let kind = if c.eat_keyword("set") {
                let variable = ident(&mut c, "a variable name")?;
                let labels = if c.at_end() { Vec::new() } else { self.labels(&mut c)? };
                let term = if c.eat_keyword("if") {
                    let mut scopes = Vec::new();
                    let term = term_expr(&mut c, &mut scopes).map_err(|d| AdlError::new(d.line, d.column, d.message))?;
                    term.for_each_reference(&mut |l, _| self.label_uses.push((l.clone(), pos)));
                    term
                } else {
                    crate::model::Term::Constant(true)
                };
                ActionKind::SetVariable { variable, labels, term }
            } else if c.eat_keyword("call") {
                let component = ident(&mut c, "a component name")?;
                expect_punct(&mut c, ".")?;
                let operation = ident(&mut c, "an operation name")?;
                expect_punct(&mut c, "(")?;
                let args = names(&mut c, "a variable name", Some(")"))?;
                ActionKind::Call {
                    component,
                    operation,
                    args,
                }
            } else if c.eat_keyword("branch") {
                expect_end(&c)?;
                let mut alternatives = Vec::new();
                loop {
                    let alt_prefix = format!("{id}/{}", alternatives.len() + 1);
                    let (alt, more) = self.block(&alt_prefix, pos, in_operation, true)?;
                    if alt.is_empty() {
                        return Err(err_at(pos, "branch alternatives must not be empty"));
                    }
                    alternatives.push(alt);
                    if !more {
                        break;
                    }
                }
                if alternatives.len() < 2 {
                    return Err(err_at(pos, "a branch needs at least two alternatives"));
                }
                ActionKind::Branch(alternatives)
            } else if c.eat_keyword("return") {
                if !in_operation || in_branch {
                    return Err(err_at(pos, "`return` is only allowed at the end of an operation"));
                }
                ActionKind::Return(names(&mut c, "a variable name", None)?)
            } else if c.peek().is_some_and(|t| t.is_keyword("data")) {
                return Err(err_at(pos, "`data` must come before the first action of a scenario"));
            } else {
                return Err(err_at(pos, format!("unknown action {}", c.describe_next())));
            };
            expect_end(&c)?;
            actions.push(Action { id, line: line_no, kind });
        }
    }
}

/// Parses and checks an architecture file.
pub fn parse_adl(text: &str) -> Result<ArchitectureModel> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let tokens = tokenize(raw, number).map_err(|e| AdlError::new(e.line, e.column, e.message))?;
        if let Some(t) = tokens.iter().find(|t| PROBABILISTIC.iter().any(|p| t.is_keyword(p))) {
            return Err(AdlError::new(
                t.line,
                t.column,
                "probabilistic constructs are not supported; use deterministic `set ... if` terms",
            ));
        }
        if !tokens.is_empty() {
            lines.push(Line {
                number,
                end: raw.chars().count() + 1,
                tokens,
            });
        }
    }
    let mut parser = Parser {
        lines,
        pos: 0,
        label_uses: Vec::new(),
    };
    let model = parser.parse()?;
    check(&model, &parser.label_uses)?;
    Ok(model)
}

fn check(model: &ArchitectureModel, label_uses: &[(LabelRef, (usize, usize))]) -> Result<()> {
    let mut types: HashMap<&str, HashSet<&str>> = HashMap::new();
    for (t, labels) in &model.label_types {
        if types.insert(t, labels.iter().map(String::as_str).collect()).is_some() {
            return Err(AdlError::new(1, 1, format!("label type `{t}` is declared twice")));
        }
    }
    for (label, pos) in label_uses {
        match types.get(label.label_type.as_str()) {
            None => return Err(err_at(*pos, format!("unknown label type `{}`", label.label_type))),
            Some(ls) if !ls.contains(label.label.as_str()) => {
                return Err(err_at(*pos, format!("unknown label `{label}`")))
            }
            _ => {}
        }
    }
    let mut names = HashSet::new();
    for name in model
        .containers
        .iter()
        .map(|c| &c.name)
        .chain(model.components.iter().map(|c| &c.name))
        .chain(model.scenarios.iter().map(|s| &s.name))
    {
        if !names.insert(name.as_str()) {
            return Err(AdlError::new(1, 1, format!("name `{name}` is declared twice")));
        }
    }
    for (component, container) in &model.deployments {
        if model.component(component).is_none() {
            return Err(AdlError::new(1, 1, format!("deployment of unknown component `{component}`")));
        }
        if model.container(container).is_none() {
            return Err(AdlError::new(1, 1, format!("deployment on unknown container `{container}`")));
        }
    }
    for comp in &model.components {
        let mut seen = HashSet::new();
        for op in &comp.operations {
            if !seen.insert(op.name.as_str()) {
                return Err(AdlError::new(1, 1, format!("operation `{}.{}` is declared twice", comp.name, op.name)));
            }
            let mut params = HashSet::new();
            for p in &op.params {
                if !params.insert(p.as_str()) {
                    return Err(AdlError::new(1, 1, format!("parameter `{p}` of `{}.{}` is repeated", comp.name, op.name)));
                }
            }
            let mut scope: BTreeSet<String> = op.params.iter().cloned().collect();
            check_actions(model, &op.actions, &mut scope)?;
        }
    }
    for s in &model.scenarios {
        let mut scope = BTreeSet::new();
        for (v, _) in &s.data {
            if !scope.insert(v.clone()) {
                return Err(AdlError::new(1, 1, format!("data `{v}` of scenario `{}` is declared twice", s.name)));
            }
        }
        check_actions(model, &s.actions, &mut scope)?;
    }
    check_recursion(model)
}

fn check_actions(model: &ArchitectureModel, actions: &[Action], scope: &mut BTreeSet<String>) -> Result<()> {
    for a in actions {
        let at = |message: String| AdlError::new(a.line, 1, message);
        match &a.kind {
            ActionKind::SetVariable { variable, term, .. } => {
                let mut missing = None;
                term.for_each_reference(&mut |_, flow| {
                    if let Some(v) = flow {
                        if !scope.contains(v) && missing.is_none() {
                            missing = Some(v.to_string());
                        }
                    }
                });
                if let Some(v) = missing {
                    return Err(at(format!("variable `{v}` is not in scope")));
                }
                scope.insert(variable.clone());
            }
            ActionKind::Call {
                component,
                operation,
                args,
            } => {
                let comp = model
                    .component(component)
                    .ok_or_else(|| at(format!("unknown component `{component}`")))?;
                let op = comp
                    .operation(operation)
                    .ok_or_else(|| at(format!("unknown operation `{component}.{operation}`")))?;
                if !model.deployments.contains_key(component) {
                    return Err(at(format!("component `{component}` is not deployed")));
                }
                if op.params.len() != args.len() {
                    return Err(at(format!(
                        "`{component}.{operation}` takes {} argument(s), got {}",
                        op.params.len(),
                        args.len()
                    )));
                }
                for arg in args {
                    if !scope.contains(arg) {
                        return Err(at(format!("variable `{arg}` is not in scope")));
                    }
                }
                scope.extend(op.returns().iter().cloned());
            }
            ActionKind::Branch(alternatives) => {
                let mut joined: Option<BTreeSet<String>> = None;
                for alt in alternatives {
                    let mut s = scope.clone();
                    check_actions(model, alt, &mut s)?;
                    joined = Some(match joined {
                        None => s,
                        Some(j) => j.intersection(&s).cloned().collect(),
                    });
                }
                *scope = joined.unwrap_or_default();
            }
            ActionKind::Return(vars) => {
                for v in vars {
                    if !scope.contains(v) {
                        return Err(at(format!("variable `{v}` is not in scope")));
                    }
                }
            }
        }
    }
    Ok(())
}

fn calls<'a>(actions: &'a [Action], out: &mut Vec<(&'a str, &'a str, usize)>) {
    for a in actions {
        match &a.kind {
            ActionKind::Call {
                component, operation, ..
            } => out.push((component, operation, a.line)),
            ActionKind::Branch(alts) => alts.iter().for_each(|alt| calls(alt, out)),
            _ => {}
        }
    }
}

/// Calls are inlined, so the call graph must be acyclic.
fn check_recursion(model: &ArchitectureModel) -> Result<()> {
    let mut graph: CallGraph<'_> = BTreeMap::new();
    for comp in &model.components {
        for op in &comp.operations {
            let mut out = Vec::new();
            calls(&op.actions, &mut out);
            graph.insert((&comp.name, &op.name), out);
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: HashMap<(&str, &str), u8> = HashMap::new();
    for &start in graph.keys() {
        if state.contains_key(&start) {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state.insert(start, 1);
        while let Some(&mut (op, ref mut next)) = stack.last_mut() {
            let edges = &graph[&op];
            if *next < edges.len() {
                let (c, o, line) = edges[*next];
                *next += 1;
                match state.get(&(c, o)) {
                    Some(1) => {
                        return Err(AdlError::new(line, 1, format!("recursive call of `{c}.{o}` is not supported")))
                    }
                    Some(_) => {}
                    None => {
                        state.insert((c, o), 1);
                        stack.push(((c, o), 0));
                    }
                }
            } else {
                state.insert(op, 2);
                stack.pop();
            }
        }
    }
    Ok(())
}
