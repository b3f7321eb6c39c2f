//! Expressions of the guarded-command language.
//!
//! Identifiers are kept by name after parsing; [`Expr::bind`] replaces
//! constants and formulas by their definitions and variables by slot
//! indices so evaluation needs no lookups.

use std::collections::HashMap;
use std::fmt;

use crate::error::VerifyError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
}

impl Value {
    pub fn as_f64(self) -> Result<f64, VerifyError> {
        match self {
            Value::Int(i) => Ok(i as f64),
            Value::Real(x) => Ok(x),
            Value::Bool(_) => Err(VerifyError::Type("expected a number, found a boolean".into())),
        }
    }

    pub fn as_i64(self) -> Result<i64, VerifyError> {
        match self {
            Value::Int(i) => Ok(i),
            Value::Real(x) => Err(VerifyError::Type(format!("expected an integer, found {x}"))),
            Value::Bool(_) => Err(VerifyError::Type("expected an integer, found a boolean".into())),
        }
    }

    pub fn as_bool(self) -> Result<bool, VerifyError> {
        match self {
            Value::Bool(b) => Ok(b),
            v => Err(VerifyError::Type(format!("expected a boolean, found {v:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Implies => "=>",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 2,
            BinOp::Or => 3,
            BinOp::And => 4,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 6,
            BinOp::Add | BinOp::Sub => 7,
            BinOp::Mul | BinOp::Div => 8,
        }
    }

    fn is_relational(self) -> bool {
        self.precedence() == 6
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Pow,
    Mod,
    Floor,
    Ceil,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
            Func::Mod => "mod",
            Func::Floor => "floor",
            Func::Ceil => "ceil",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            "mod" => Func::Mod,
            "floor" => Func::Floor,
            "ceil" => Func::Ceil,
            _ => return None,
        })
    }

    fn arity(self) -> Option<usize> {
        match self {
            Func::Min | Func::Max => None,
            Func::Pow | Func::Mod => Some(2),
            Func::Floor | Func::Ceil => Some(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Real(f64),
    Bool(bool),
    Ident(String),
    /// Variable slot, produced by [`Expr::bind`].
    Var(usize),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// What an identifier stands for during binding.
#[derive(Debug, Clone)]
pub enum Binding {
    Value(Value),
    Var(usize),
    Expr(Expr),
}

pub fn ident(s: &str) -> Expr {
    Expr::Ident(s.to_string())
}

pub fn int(i: i64) -> Expr {
    Expr::Int(i)
}

pub fn real(x: f64) -> Expr {
    Expr::Real(x)
}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    Expr::Binary(op, Box::new(a), Box::new(b))
}

pub fn call(f: Func, args: Vec<Expr>) -> Expr {
    Expr::Call(f, args)
}

pub fn ite(c: Expr, a: Expr, b: Expr) -> Expr {
    Expr::Ite(Box::new(c), Box::new(a), Box::new(b))
}

pub fn not(e: Expr) -> Expr {
    Expr::Unary(UnOp::Not, Box::new(e))
}

/// Conjunction of all terms; `true` when empty.
pub fn all(terms: impl IntoIterator<Item = Expr>) -> Expr {
    terms.into_iter().reduce(|a, b| a.and(b)).unwrap_or(Expr::Bool(true))
}

/// Disjunction of all terms; `false` when empty.
pub fn any(terms: impl IntoIterator<Item = Expr>) -> Expr {
    terms.into_iter().reduce(|a, b| a.or(b)).unwrap_or(Expr::Bool(false))
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn add(self, o: Expr) -> Expr {
        bin(BinOp::Add, self, o)
    }
    pub fn sub(self, o: Expr) -> Expr {
        bin(BinOp::Sub, self, o)
    }
    pub fn mul(self, o: Expr) -> Expr {
        bin(BinOp::Mul, self, o)
    }
    pub fn div(self, o: Expr) -> Expr {
        bin(BinOp::Div, self, o)
    }
    pub fn eq(self, o: Expr) -> Expr {
        bin(BinOp::Eq, self, o)
    }
    pub fn ne(self, o: Expr) -> Expr {
        bin(BinOp::Ne, self, o)
    }
    pub fn lt(self, o: Expr) -> Expr {
        bin(BinOp::Lt, self, o)
    }
    pub fn le(self, o: Expr) -> Expr {
        bin(BinOp::Le, self, o)
    }
    pub fn gt(self, o: Expr) -> Expr {
        bin(BinOp::Gt, self, o)
    }
    pub fn ge(self, o: Expr) -> Expr {
        bin(BinOp::Ge, self, o)
    }
    pub fn and(self, o: Expr) -> Expr {
        bin(BinOp::And, self, o)
    }
    pub fn or(self, o: Expr) -> Expr {
        bin(BinOp::Or, self, o)
    }

    /// Resolves identifiers. Unknown names are an error.
    pub fn bind(&self, env: &HashMap<String, Binding>) -> Result<Expr, VerifyError> {
        Ok(match self {
            Expr::Ident(name) => match env.get(name) {
                Some(Binding::Value(Value::Int(i))) => Expr::Int(*i),
                Some(Binding::Value(Value::Real(x))) => Expr::Real(*x),
                Some(Binding::Value(Value::Bool(b))) => Expr::Bool(*b),
                Some(Binding::Var(i)) => Expr::Var(*i),
                Some(Binding::Expr(e)) => e.clone(),
                None => return Err(VerifyError::Unknown(name.clone())),
            },
            Expr::Int(_) | Expr::Real(_) | Expr::Bool(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.bind(env)?)),
            Expr::Binary(op, a, b) => bin(*op, a.bind(env)?, b.bind(env)?),
            Expr::Ite(c, a, b) => ite(c.bind(env)?, a.bind(env)?, b.bind(env)?),
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| a.bind(env)).collect::<Result<_, _>>()?),
        })
    }

    /// Evaluates against variable slots. Identifiers must be bound first.
    pub fn eval(&self, vars: &[i64]) -> Result<Value, VerifyError> {
        Ok(match self {
            Expr::Int(i) => Value::Int(*i),
            Expr::Real(x) => Value::Real(*x),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Var(i) => Value::Int(vars[*i]),
            Expr::Ident(n) => return Err(VerifyError::Unknown(n.clone())),
            Expr::Unary(UnOp::Not, a) => Value::Bool(!a.eval(vars)?.as_bool()?),
            Expr::Unary(UnOp::Neg, a) => match a.eval(vars)? {
                Value::Int(i) => Value::Int(-i),
                v => Value::Real(-v.as_f64()?),
            },
            Expr::Binary(op, a, b) => eval_binary(*op, a, b, vars)?,
            Expr::Ite(c, a, b) => {
                if c.eval(vars)?.as_bool()? {
                    a.eval(vars)?
                } else {
                    b.eval(vars)?
                }
            }
            Expr::Call(f, args) => eval_call(*f, args, vars)?,
        })
    }

    pub fn eval_bool(&self, vars: &[i64]) -> Result<bool, VerifyError> {
        self.eval(vars)?.as_bool()
    }

    pub fn eval_f64(&self, vars: &[i64]) -> Result<f64, VerifyError> {
        self.eval(vars)?.as_f64()
    }

    /// Evaluates an expression without variables.
    pub fn eval_const(&self) -> Result<Value, VerifyError> {
        self.eval(&[])
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Ite(..) => 1,
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Unary(UnOp::Not, _) => 5,
            Expr::Unary(UnOp::Neg, _) => 9,
            Expr::Real(x) if x.is_sign_negative() => 9,
            Expr::Int(i) if *i < 0 => 9,
            _ => 10,
        }
    }
}

fn eval_binary(op: BinOp, a: &Expr, b: &Expr, vars: &[i64]) -> Result<Value, VerifyError> {
    // Short-circuit the boolean connectives.
    match op {
        BinOp::And => return Ok(Value::Bool(a.eval_bool(vars)? && b.eval_bool(vars)?)),
        BinOp::Or => return Ok(Value::Bool(a.eval_bool(vars)? || b.eval_bool(vars)?)),
        BinOp::Implies => return Ok(Value::Bool(!a.eval_bool(vars)? || b.eval_bool(vars)?)),
        _ => {}
    }
    let x = a.eval(vars)?;
    let y = b.eval(vars)?;
    if let (Value::Bool(p), Value::Bool(q)) = (x, y) {
        return match op {
            BinOp::Eq => Ok(Value::Bool(p == q)),
            BinOp::Ne => Ok(Value::Bool(p != q)),
            _ => Err(VerifyError::Type(format!("operator {} on booleans", op.symbol()))),
        };
    }
    if let (Value::Int(i), Value::Int(j)) = (x, y) {
        let v = match op {
            BinOp::Add => Value::Int(i + j),
            BinOp::Sub => Value::Int(i - j),
            BinOp::Mul => Value::Int(i * j),
            BinOp::Div => Value::Real(i as f64 / j as f64),
            BinOp::Eq => Value::Bool(i == j),
            BinOp::Ne => Value::Bool(i != j),
            BinOp::Lt => Value::Bool(i < j),
            BinOp::Le => Value::Bool(i <= j),
            BinOp::Gt => Value::Bool(i > j),
            BinOp::Ge => Value::Bool(i >= j),
            BinOp::And | BinOp::Or | BinOp::Implies => unreachable!(),
        };
        return Ok(v);
    }
    let (p, q) = (x.as_f64()?, y.as_f64()?);
    Ok(match op {
        BinOp::Add => Value::Real(p + q),
        BinOp::Sub => Value::Real(p - q),
        BinOp::Mul => Value::Real(p * q),
        BinOp::Div => Value::Real(p / q),
        BinOp::Eq => Value::Bool(p == q),
        BinOp::Ne => Value::Bool(p != q),
        BinOp::Lt => Value::Bool(p < q),
        BinOp::Le => Value::Bool(p <= q),
        BinOp::Gt => Value::Bool(p > q),
        BinOp::Ge => Value::Bool(p >= q),
        BinOp::And | BinOp::Or | BinOp::Implies => unreachable!(),
    })
}

fn eval_call(f: Func, args: &[Expr], vars: &[i64]) -> Result<Value, VerifyError> {
    if let Some(n) = f.arity() {
        if args.len() != n {
            return Err(VerifyError::Type(format!("{} takes {n} arguments, got {}", f.name(), args.len())));
        }
    } else if args.is_empty() {
        return Err(VerifyError::Type(format!("{} needs at least one argument", f.name())));
    }
    let vals: Vec<Value> = args.iter().map(|a| a.eval(vars)).collect::<Result<_, _>>()?;
    let all_int = vals.iter().all(|v| matches!(v, Value::Int(_)));
    Ok(match f {
        Func::Min | Func::Max if all_int => {
            let it = vals.iter().map(|v| v.as_i64().unwrap());
            Value::Int(if f == Func::Min { it.min().unwrap() } else { it.max().unwrap() })
        }
        Func::Min | Func::Max => {
            let mut acc = vals[0].as_f64()?;
            for v in &vals[1..] {
                let x = v.as_f64()?;
                acc = if f == Func::Min { acc.min(x) } else { acc.max(x) };
            }
            Value::Real(acc)
        }
        Func::Pow => match (vals[0], vals[1]) {
            (Value::Int(b), Value::Int(e)) if e >= 0 => Value::Int(b.pow(e as u32)),
            (b, e) => Value::Real(b.as_f64()?.powf(e.as_f64()?)),
        },
        Func::Mod => {
            let (a, b) = (vals[0].as_i64()?, vals[1].as_i64()?);
            if b == 0 {
                return Err(VerifyError::Type("mod by zero".into()));
            }
            Value::Int(a.rem_euclid(b))
        }
        Func::Floor => Value::Int(vals[0].as_f64()?.floor() as i64),
        Func::Ceil => Value::Int(vals[0].as_f64()?.ceil() as i64),
    })
}

/// Shortest text that parses back to the same double, always with a
/// decimal point or exponent so it stays a double.
pub fn format_real(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Real(x) => f.write_str(&format_real(*x)),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Ident(n) => f.write_str(n),
            Expr::Var(i) => write!(f, "_v{i}"),
            Expr::Unary(UnOp::Not, a) => {
                f.write_str("!")?;
                child(f, a, a.precedence() < 10)
            }
            Expr::Unary(UnOp::Neg, a) => {
                f.write_str("-")?;
                child(f, a, a.precedence() < 10 || matches!(**a, Expr::Int(_) | Expr::Real(_)))
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                // Left-associative; relational operators do not chain.
                let left_paren = a.precedence() < p || (op.is_relational() && a.precedence() == p);
                let right_paren = b.precedence() <= p;
                child(f, a, left_paren)?;
                write!(f, " {} ", op.symbol())?;
                child(f, b, right_paren)
            }
            Expr::Ite(c, a, b) => {
                child(f, c, c.precedence() <= 1)?;
                f.write_str(" ? ")?;
                child(f, a, a.precedence() <= 1)?;
                f.write_str(" : ")?;
                child(f, b, false)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn child(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> HashMap<String, Binding> {
        let mut m = HashMap::new();
        m.insert("x".to_string(), Binding::Var(0));
        m.insert("y".to_string(), Binding::Var(1));
        m.insert("pf".to_string(), Binding::Value(Value::Real(0.5)));
        m
    }

    fn ev(e: &Expr, vars: &[i64]) -> Value {
        e.bind(&env()).unwrap().eval(vars).unwrap()
    }

    #[test]
    fn arithmetic_and_logic() {
        let e = ident("x").add(int(2)).mul(ident("y"));
        assert_eq!(ev(&e, &[1, 4]), Value::Int(12));
        let g = ident("x").ge(int(0)).and(not(ident("y").eq(int(3))));
        assert_eq!(ev(&g, &[0, 3]), Value::Bool(false));
        assert_eq!(ev(&g, &[0, 2]), Value::Bool(true));
        assert_eq!(ev(&int(7).div(int(2)), &[]), Value::Real(3.5));
    }

    #[test]
    fn functions() {
        let p = call(Func::Pow, vec![real(1.0).sub(ident("pf")), int(3)]);
        assert_eq!(ev(&p, &[0, 0]), Value::Real(0.125));
        assert_eq!(ev(&call(Func::Mod, vec![int(-3), int(2)]), &[]), Value::Int(1));
        assert_eq!(ev(&call(Func::Max, vec![int(1), int(5), int(3)]), &[]), Value::Int(5));
        assert_eq!(ev(&call(Func::Ceil, vec![real(2.1)]), &[]), Value::Int(3));
        assert_eq!(ev(&call(Func::Pow, vec![int(2), int(10)]), &[]), Value::Int(1024));
    }

    #[test]
    fn type_errors() {
        let e = ident("x").and(int(1)).bind(&env()).unwrap();
        assert!(e.eval(&[1, 1]).is_err());
        assert!(ident("nope").bind(&env()).is_err());
    }

    #[test]
    fn printing_uses_minimal_parentheses() {
        let e = ident("a").add(ident("b")).mul(ident("c"));
        assert_eq!(e.to_string(), "(a + b) * c");
        let e = ident("a").sub(ident("b").sub(ident("c")));
        assert_eq!(e.to_string(), "a - (b - c)");
        let e = ident("a").sub(ident("b")).sub(ident("c"));
        assert_eq!(e.to_string(), "a - b - c");
        let e = not(ident("a").eq(int(1))).and(ident("b").lt(int(2)));
        assert_eq!(e.to_string(), "!(a = 1) & b < 2");
        assert_eq!(format_real(1.0), "1.0");
        assert_eq!(format_real(0.00018), "0.00018");
    }
}
