//! PRISM-syntax text for guarded-command MDPs.
//!
//! Covers the subset used here: `mdp`, typed constants, formulas, modules
//! with ranged and boolean variables, labelled and unlabelled commands,
//! labels and reward structures. `//` comments are skipped when reading.

use std::fmt::Write;

use crate::error::VerifyError;
use crate::expr::{BinOp, Expr, Func, UnOp};
use crate::model::*;

/// The property file: success, actuator fault and mission time bounds.
pub const PROPERTIES: &str = r#"// lower and upper bounds for the probability of a successfully mission
Pmin=? [ F "MissionSuccessful" ];
Pmax=? [ F "MissionSuccessful" ];
// lower and upper bounds for an actuator fault occuring
Pmin=? [ F "fault" ];
Pmax=? [ F "fault" ];
// lower and upper bounds for the expected mission time
R{"time"}min=? [ F "done" ];
R{"time"}max=? [ F "done" ];
"#;

fn write_updates(out: &mut String, updates: &[Update]) {
    for (i, u) in updates.iter().enumerate() {
        if i > 0 {
            out.push_str(" + ");
        }
        let prob = u.prob.to_string();
        if matches!(u.prob, Expr::Binary(..) | Expr::Ite(..) | Expr::Unary(..)) {
            let _ = write!(out, "({prob}):");
        } else {
            let _ = write!(out, "{prob}:");
        }
        if u.assignments.is_empty() {
            out.push_str("true");
        }
        for (j, (name, e)) in u.assignments.iter().enumerate() {
            if j > 0 {
                out.push('&');
            }
            let _ = write!(out, "({name}'={e})");
        }
    }
}

/// Model text. Reading it back gives an identical model.
pub fn export(model: &GuardedCommandModel) -> Result<String, VerifyError> {
    check_representable(model)?;
    let mut out = String::from("mdp\n\n");
    for c in &model.constants {
        let ty = match c.ty {
            ConstType::Int => "int",
            ConstType::Double => "double",
            ConstType::Bool => "bool",
        };
        let _ = writeln!(out, "const {ty} {} = {};", c.name, c.value);
    }
    if !model.constants.is_empty() {
        out.push('\n');
    }
    for f in &model.formulas {
        let _ = writeln!(out, "formula {} = {};", f.name, f.expr);
    }
    if !model.formulas.is_empty() {
        out.push('\n');
    }
    for m in &model.modules {
        let _ = writeln!(out, "module {}", m.name);
        for v in &m.vars {
            match &v.ty {
                VarType::Int { low, high } => {
                    let _ = writeln!(out, "  {} : [{low}..{high}] init {};", v.name, v.init);
                }
                VarType::Bool => {
                    let _ = writeln!(out, "  {} : bool init {};", v.name, v.init);
                }
            }
        }
        if !m.vars.is_empty() {
            out.push('\n');
        }
        for c in &m.commands {
            let _ = write!(out, "  [{}] {} -> ", c.action.as_deref().unwrap_or(""), c.guard);
            write_updates(&mut out, &c.updates);
            out.push_str(";\n");
        }
        out.push_str("endmodule\n\n");
    }
    for l in &model.labels {
        let _ = writeln!(out, "label \"{}\" = {};", l.name, l.expr);
    }
    if !model.labels.is_empty() {
        out.push('\n');
    }
    for r in &model.rewards {
        let _ = writeln!(out, "rewards \"{}\"", r.name);
        for it in &r.items {
            match &it.action {
                Some(a) => {
                    let _ = writeln!(out, "  [{a}] {} : {};", it.guard, it.value);
                }
                None => {
                    let _ = writeln!(out, "  {} : {};", it.guard, it.value);
                }
            }
        }
        out.push_str("endrewards\n\n");
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: [&str; 24] = [
    "->", "..", "<=", ">=", "!=", "=>", "'", "[", "]", "(", ")", "{", "}", ";", ":", ",", "+", "-", "*", "/", "=", "<",
    ">", "&",
];
const MORE_SYMBOLS: [&str; 3] = ["|", "!", "?"];

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
}

fn lex(src: &str) -> Result<Lexer, VerifyError> {
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut toks = Vec::new();
    let err = |line, col, msg: String| VerifyError::Parse { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let s: String = chars[i..].iter().take_while(|c| c.is_ascii_alphanumeric() || **c == '_').collect();
            i += s.len();
            col += s.len();
            toks.push((Tok::Ident(s), l0, c0));
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let mut real = false;
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                real = true;
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    real = true;
                    j = k;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
            }
            let s: String = chars[i..j].iter().collect();
            let tok = if real {
                Tok::Real(s.parse().map_err(|_| err(l0, c0, format!("bad number {s}")))?)
            } else {
                Tok::Int(s.parse().map_err(|_| err(l0, c0, format!("bad integer {s}")))?)
            };
            col += j - i;
            i = j;
            toks.push((tok, l0, c0));
            continue;
        }
        if c == '"' {
            let s: String = chars[i + 1..].iter().take_while(|c| **c != '"' && **c != '\n').collect();
            if chars.get(i + 1 + s.len()) != Some(&'"') {
                return Err(err(l0, c0, "unterminated string".into()));
            }
            i += s.len() + 2;
            col += s.len() + 2;
            toks.push((Tok::Str(s), l0, c0));
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = SYMBOLS.iter().chain(MORE_SYMBOLS.iter()).find(|s| rest.starts_with(**s));
        match sym {
            Some(s) => {
                i += s.len();
                col += s.len();
                toks.push((Tok::Sym(s), l0, c0));
            }
            None => return Err(err(l0, c0, format!("unexpected character {c:?}"))),
        }
    }
    toks.push((Tok::Eof, line, col));
    Ok(Lexer { toks })
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, VerifyError> {
        let (_, line, col) = &self.toks[self.pos];
        Err(VerifyError::Parse { line: *line, col: *col, msg: msg.into() })
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), VerifyError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {:?}", self.peek()))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), VerifyError> {
        if self.is_kw(s) {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {:?}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String, VerifyError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {t:?}")),
        }
    }

    fn string(&mut self) -> Result<String, VerifyError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.next();
                Ok(s)
            }
            t => self.err(format!("expected string, found {t:?}")),
        }
    }

    fn expr(&mut self) -> Result<Expr, VerifyError> {
        let c = self.binary(2)?;
        if self.eat_sym("?") {
            let a = self.expr()?;
            self.expect_sym(":")?;
            let b = self.expr()?;
            return Ok(crate::expr::ite(c, a, b));
        }
        Ok(c)
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Sym(s) = self.peek() else { return None };
        Some(match *s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "=" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "&" => BinOp::And,
            "|" => BinOp::Or,
            "=>" => BinOp::Implies,
            _ => return None,
        })
    }

    /// Operators of precedence at least `min`, left-associative; relational
    /// operators do not chain.
    fn binary(&mut self, min: u8) -> Result<Expr, VerifyError> {
        let mut lhs = if min <= 5 && self.is_sym("!") {
            self.next();
            Expr::Unary(UnOp::Not, Box::new(self.binary(5)?))
        } else if min > 5 {
            self.unary()?
        } else {
            self.binary(6)?
        };
        while let Some(op) = self.binop() {
            let p = op.precedence();
            if p < min {
                break;
            }
            self.next();
            let rhs = self.binary(p + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
            if p == 6 && self.binop().is_some_and(|o| o.precedence() == 6) {
                return self.err("relational operators do not chain");
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, VerifyError> {
        if self.eat_sym("-") {
            return Ok(match self.peek().clone() {
                Tok::Int(i) => {
                    self.next();
                    Expr::Int(-i)
                }
                Tok::Real(x) => {
                    self.next();
                    Expr::Real(-x)
                }
                _ => Expr::Unary(UnOp::Neg, Box::new(self.unary()?)),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, VerifyError> {
        let at = self.pos;
        match self.next() {
            Tok::Int(i) => Ok(Expr::Int(i)),
            Tok::Real(x) => Ok(Expr::Real(x)),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" => Ok(Expr::Bool(true)),
            Tok::Ident(s) if s == "false" => Ok(Expr::Bool(false)),
            Tok::Ident(s) => {
                if self.is_sym("(") {
                    let Some(f) = Func::from_name(&s) else {
                        return self.err(format!("unknown function {s}"));
                    };
                    self.next();
                    let mut args = vec![self.expr()?];
                    while self.eat_sym(",") {
                        args.push(self.expr()?);
                    }
                    self.expect_sym(")")?;
                    return Ok(Expr::Call(f, args));
                }
                Ok(Expr::Ident(s))
            }
            t => {
                self.pos = at;
                self.err(format!("expected expression, found {t:?}"))
            }
        }
    }

    fn assignments(&mut self) -> Result<Vec<(String, Expr)>, VerifyError> {
        if self.is_kw("true") {
            self.next();
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        loop {
            self.expect_sym("(")?;
            let name = self.ident()?;
            self.expect_sym("'")?;
            self.expect_sym("=")?;
            out.push((name, self.expr()?));
            self.expect_sym(")")?;
            if !self.eat_sym("&") {
                return Ok(out);
            }
        }
    }

    fn update(&mut self) -> Result<Update, VerifyError> {
        let bare_assign =
            self.is_sym("(") && matches!(self.peek_at(1), Tok::Ident(_)) && self.peek_at(2) == &Tok::Sym("'");
        let bare_true = self.is_kw("true") && matches!(self.peek_at(1), Tok::Sym(";") | Tok::Sym("+"));
        if bare_assign || bare_true {
            return Ok(Update { prob: Expr::Int(1), assignments: self.assignments()? });
        }
        let prob = self.expr()?;
        self.expect_sym(":")?;
        Ok(Update { prob, assignments: self.assignments()? })
    }

    fn command(&mut self) -> Result<Command, VerifyError> {
        self.expect_sym("[")?;
        let action = if self.is_sym("]") { None } else { Some(self.ident()?) };
        self.expect_sym("]")?;
        let guard = self.expr()?;
        self.expect_sym("->")?;
        let mut updates = vec![self.update()?];
        while self.eat_sym("+") {
            updates.push(self.update()?);
        }
        self.expect_sym(";")?;
        Ok(Command { action, guard, updates })
    }

    fn module(&mut self) -> Result<Module, VerifyError> {
        self.expect_kw("module")?;
        let name = self.ident()?;
        let mut vars = Vec::new();
        let mut commands = Vec::new();
        loop {
            if self.is_kw("endmodule") {
                self.next();
                return Ok(Module { name, vars, commands });
            }
            if self.is_sym("[") {
                commands.push(self.command()?);
                continue;
            }
            let vname = self.ident()?;
            self.expect_sym(":")?;
            let ty = if self.is_kw("bool") {
                self.next();
                VarType::Bool
            } else {
                self.expect_sym("[")?;
                let low = self.expr()?;
                self.expect_sym("..")?;
                let high = self.expr()?;
                self.expect_sym("]")?;
                VarType::Int { low, high }
            };
            let init = if self.is_kw("init") {
                self.next();
                self.expr()?
            } else {
                match &ty {
                    VarType::Bool => Expr::Bool(false),
                    VarType::Int { low, .. } => low.clone(),
                }
            };
            self.expect_sym(";")?;
            vars.push(Variable { name: vname, ty, init });
        }
    }

    fn model(&mut self) -> Result<GuardedCommandModel, VerifyError> {
        let mut m = GuardedCommandModel::default();
        if self.is_kw("mdp") || self.is_kw("nondeterministic") {
            self.next();
        } else {
            return self.err("only `mdp` models are supported");
        }
        loop {
            match self.peek().clone() {
                Tok::Eof => return Ok(m),
                Tok::Ident(k) if k == "const" => {
                    self.next();
                    let ty = if self.is_kw("int") {
                        ConstType::Int
                    } else if self.is_kw("double") {
                        ConstType::Double
                    } else if self.is_kw("bool") {
                        ConstType::Bool
                    } else {
                        return self.err("constant needs a type");
                    };
                    self.next();
                    let name = self.ident()?;
                    if !self.eat_sym("=") {
                        return self.err(format!("constant {name} has no value"));
                    }
                    let value = self.expr()?;
                    self.expect_sym(";")?;
                    m.constants.push(Constant { name, ty, value });
                }
                Tok::Ident(k) if k == "formula" => {
                    self.next();
                    let name = self.ident()?;
                    self.expect_sym("=")?;
                    let expr = self.expr()?;
                    self.expect_sym(";")?;
                    m.formulas.push(Formula { name, expr });
                }
                Tok::Ident(k) if k == "module" => m.modules.push(self.module()?),
                Tok::Ident(k) if k == "label" => {
                    self.next();
                    let name = self.string()?;
                    self.expect_sym("=")?;
                    let expr = self.expr()?;
                    self.expect_sym(";")?;
                    m.labels.push(Label { name, expr });
                }
                Tok::Ident(k) if k == "rewards" => {
                    self.next();
                    let name = self.string()?;
                    let mut items = Vec::new();
                    while !self.is_kw("endrewards") {
                        let action = if self.eat_sym("[") {
                            let a = if self.is_sym("]") { String::new() } else { self.ident()? };
                            self.expect_sym("]")?;
                            Some(a)
                        } else {
                            None
                        };
                        let guard = self.expr()?;
                        self.expect_sym(":")?;
                        let value = self.expr()?;
                        self.expect_sym(";")?;
                        items.push(RewardItem { action, guard, value });
                    }
                    self.next();
                    m.rewards.push(RewardStruct { name, items });
                }
                t => return self.err(format!("unexpected {t:?} at top level")),
            }
        }
    }
}

/// Reads model text.
pub fn parse(src: &str) -> Result<GuardedCommandModel, VerifyError> {
    let lx = lex(src)?;
    Parser { toks: lx.toks, pos: 0 }.model()
}

/// Reads a single expression.
pub fn parse_expr(src: &str) -> Result<Expr, VerifyError> {
    let lx = lex(src)?;
    let mut p = Parser { toks: lx.toks, pos: 0 };
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return p.err("trailing input after expression");
    }
    Ok(e)
}

const KEYWORDS: [&str; 17] = [
    "mdp",
    "nondeterministic",
    "const",
    "int",
    "double",
    "bool",
    "formula",
    "module",
    "endmodule",
    "init",
    "label",
    "rewards",
    "endrewards",
    "true",
    "false",
    "min",
    "max",
];

fn check_name(name: &str) -> Result<(), VerifyError> {
    let mut chars = name.chars();
    let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
        && Func::from_name(name).is_none();
    if ok {
        Ok(())
    } else {
        Err(VerifyError::Model(format!("`{name}` cannot be written as an identifier")))
    }
}

fn check_expr(e: &Expr) -> Result<(), VerifyError> {
    match e {
        Expr::Real(x) if !x.is_finite() => Err(VerifyError::Model(format!("literal {x} cannot be written"))),
        Expr::Int(i) if *i == i64::MIN => Err(VerifyError::Model("literal i64::MIN cannot be written".into())),
        Expr::Var(i) => Err(VerifyError::Model(format!("bound variable slot {i} in an unbound model"))),
        Expr::Ident(n) => check_name(n),
        Expr::Unary(_, a) => check_expr(a),
        Expr::Binary(_, a, b) => check_expr(a).and(check_expr(b)),
        Expr::Ite(c, a, b) => check_expr(c).and(check_expr(a)).and(check_expr(b)),
        Expr::Call(_, args) => args.iter().try_for_each(check_expr),
        _ => Ok(()),
    }
}

/// Checks that every name and literal can be written and read back.
pub fn check_representable(m: &GuardedCommandModel) -> Result<(), VerifyError> {
    for c in &m.constants {
        check_name(&c.name)?;
        check_expr(&c.value)?;
    }
    for f in &m.formulas {
        check_name(&f.name)?;
        check_expr(&f.expr)?;
    }
    for module in &m.modules {
        check_name(&module.name)?;
        for v in &module.vars {
            check_name(&v.name)?;
            check_expr(&v.init)?;
            if let VarType::Int { low, high } = &v.ty {
                check_expr(low)?;
                check_expr(high)?;
            }
        }
        for c in &module.commands {
            if let Some(a) = &c.action {
                check_name(a)?;
            }
            check_expr(&c.guard)?;
            for u in &c.updates {
                check_expr(&u.prob)?;
                for (n, e) in &u.assignments {
                    check_name(n)?;
                    check_expr(e)?;
                }
            }
        }
    }
    for l in &m.labels {
        if l.name.contains(['"', '\n']) {
            return Err(VerifyError::Model(format!("label name {:?} cannot be quoted", l.name)));
        }
        check_expr(&l.expr)?;
    }
    for r in &m.rewards {
        if r.name.contains(['"', '\n']) {
            return Err(VerifyError::Model(format!("reward name {:?} cannot be quoted", r.name)));
        }
        for it in &r.items {
            if let Some(a) = it.action.as_deref().filter(|a| !a.is_empty()) {
                check_name(a)?;
            }
            check_expr(&it.guard)?;
            check_expr(&it.value)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{ident, int};
    use proptest::prelude::*;

    #[test]
    fn command_shape() {
        let m = GuardedCommandModel {
            modules: vec![Module {
                name: "M".into(),
                vars: vec![Variable { name: "x".into(), ty: VarType::Int { low: int(0), high: int(4) }, init: int(0) }],
                commands: vec![Command::new(
                    Some("srch"),
                    ident("x").lt(int(4)),
                    vec![Update::certain(vec![("x", ident("x").add(int(1)))])],
                )],
            }],
            ..Default::default()
        };
        let text = export(&m).unwrap();
        assert!(text.contains("[srch] x < 4 -> 1:(x'=x + 1);"), "{text}");
        assert_eq!(parse(&text).unwrap(), m);
    }

    #[test]
    fn reads_paper_style_text() {
        let src = r#"
            mdp
            const double pf = 0.00018; // per second
            const int dt = 1;
            module TBA
              t : [0..10] init 0;
              c : [0..1];
              [srch] c=0 & t+dt<10 -> pow(1-pf,dt):(t'=t+dt) + (1-pow(1-pf,dt)):(c'=1);
              [] c=1 -> true;
            endmodule
            label "fault" = c=1;
            rewards "time"
              [srch] true : dt;
              c=0 : 0;
            endrewards
        "#;
        let m = parse(src).unwrap();
        assert_eq!(m.modules[0].commands[0].updates.len(), 2);
        assert_eq!(m.rewards[0].items[1].action, None);
        let again = parse(&export(&m).unwrap()).unwrap();
        assert_eq!(again, m);
        assert_eq!(export(&again).unwrap(), export(&m).unwrap());
    }

    #[test]
    fn errors_carry_positions() {
        match parse("mdp\nmodule M\n  x : [0..2];\n  [a] x = -> true;\nendmodule") {
            Err(VerifyError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(parse_expr("a < b < c").is_err());
        assert!(parse("dtmc").is_err());
    }

    #[test]
    fn unrepresentable_models_are_refused() {
        let mut m = GuardedCommandModel::default();
        m.constants.push(Constant { name: "x".into(), ty: ConstType::Double, value: Expr::Real(f64::NAN) });
        assert!(export(&m).is_err());
        m.constants[0] = Constant { name: "module".into(), ty: ConstType::Int, value: int(1) };
        assert!(export(&m).is_err());
        m.constants[0] = Constant { name: "neg".into(), ty: ConstType::Int, value: int(-4) };
        let text = export(&m).unwrap();
        assert_eq!(parse(&text).unwrap(), m);
    }

    #[test]
    fn properties_text() {
        assert!(PROPERTIES.contains("Pmin=? [ F \"MissionSuccessful\" ];"));
        assert!(PROPERTIES.contains("R{\"time\"}max=? [ F \"done\" ];"));
        assert_eq!(PROPERTIES.lines().filter(|l| l.ends_with("];")).count(), 6);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-5i64..20).prop_map(Expr::Int),
            (-1e3f64..1e3).prop_map(Expr::Real),
            any::<bool>().prop_map(Expr::Bool),
            "[a-d]".prop_map(Expr::Ident),
        ];
        leaf.prop_recursive(4, 32, 3, |inner| {
            let ops = [
                BinOp::Add,
                BinOp::Sub,
                BinOp::Mul,
                BinOp::Div,
                BinOp::Eq,
                BinOp::Ne,
                BinOp::Lt,
                BinOp::Le,
                BinOp::Gt,
                BinOp::Ge,
                BinOp::And,
                BinOp::Or,
                BinOp::Implies,
            ];
            prop_oneof![
                (0..ops.len(), inner.clone(), inner.clone()).prop_map(move |(i, a, b)| Expr::Binary(
                    ops[i],
                    Box::new(a),
                    Box::new(b)
                )),
                inner.clone().prop_map(|a| Expr::Unary(UnOp::Not, Box::new(a))),
                inner.clone().prop_map(|a| Expr::Unary(UnOp::Neg, Box::new(a))),
                (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, a, b)| crate::expr::ite(c, a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Call(Func::Pow, vec![a, b])),
                prop::collection::vec(inner, 1..4).prop_map(|v| Expr::Call(Func::Max, v)),
            ]
        })
    }

    proptest! {
        #[test]
        fn printed_expressions_read_back(e in arb_expr()) {
            let text = e.to_string();
            let back = parse_expr(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
            prop_assert_eq!(&back, &e, "{}", text);
            prop_assert_eq!(back.to_string(), text);
        }
    }
}
