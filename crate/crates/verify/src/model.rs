//! Guarded-command models: constants, formulas, modules of finite-ranged
//! variables with probabilistic commands, labels and reward structures.

use std::collections::{BTreeSet, HashMap};

use crate::error::VerifyError;
use crate::expr::{Binding, Expr, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstType {
    Int,
    Double,
    Bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    pub name: String,
    pub ty: ConstType,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    pub name: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarType {
    Int { low: Expr, high: Expr },
    Bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub ty: VarType,
    pub init: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub prob: Expr,
    pub assignments: Vec<(String, Expr)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub action: Option<String>,
    pub guard: Expr,
    pub updates: Vec<Update>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub name: String,
    pub vars: Vec<Variable>,
    pub commands: Vec<Command>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub name: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardItem {
    /// `None` for a state reward, `Some("")` for unlabelled commands.
    pub action: Option<String>,
    pub guard: Expr,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardStruct {
    pub name: String,
    pub items: Vec<RewardItem>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GuardedCommandModel {
    pub constants: Vec<Constant>,
    pub formulas: Vec<Formula>,
    pub modules: Vec<Module>,
    pub labels: Vec<Label>,
    pub rewards: Vec<RewardStruct>,
}

impl Update {
    pub fn new(prob: Expr, assignments: Vec<(&str, Expr)>) -> Self {
        Self { prob, assignments: assignments.into_iter().map(|(n, e)| (n.to_string(), e)).collect() }
    }

    /// Probability one.
    pub fn certain(assignments: Vec<(&str, Expr)>) -> Self {
        Self::new(Expr::Int(1), assignments)
    }
}

impl Command {
    pub fn new(action: Option<&str>, guard: Expr, updates: Vec<Update>) -> Self {
        Self { action: action.map(str::to_string), guard, updates }
    }
}

impl Module {
    /// Action labels of the module's commands.
    pub fn alphabet(&self) -> BTreeSet<&str> {
        self.commands.iter().filter_map(|c| c.action.as_deref()).collect()
    }
}

/// A variable after constants are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct VarInfo {
    pub name: String,
    pub module: usize,
    pub low: i64,
    pub high: i64,
    pub init: i64,
    pub is_bool: bool,
}

#[derive(Debug, Clone)]
pub struct BoundUpdate {
    pub prob: Expr,
    pub assignments: Vec<(usize, Expr)>,
}

#[derive(Debug, Clone)]
pub struct BoundCommand {
    pub action: Option<String>,
    pub guard: Expr,
    pub updates: Vec<BoundUpdate>,
    /// `var = value` conjuncts of the guard, checked before the full guard.
    pub quick: Vec<(usize, i64)>,
}

#[derive(Debug, Clone)]
pub struct BoundReward {
    pub action: Option<String>,
    pub guard: Expr,
    pub value: Expr,
}

/// A model with every identifier resolved to a constant or a variable slot.
#[derive(Debug, Clone)]
pub struct BoundModel {
    pub vars: Vec<VarInfo>,
    /// Commands per module.
    pub commands: Vec<Vec<BoundCommand>>,
    pub alphabets: Vec<BTreeSet<String>>,
    pub labels: Vec<(String, Expr)>,
    pub rewards: Vec<(String, Vec<BoundReward>)>,
}

fn coerce(ty: ConstType, v: Value, name: &str) -> Result<Value, VerifyError> {
    match (ty, v) {
        (ConstType::Int, Value::Int(_)) | (ConstType::Bool, Value::Bool(_)) | (ConstType::Double, Value::Real(_)) => {
            Ok(v)
        }
        (ConstType::Double, Value::Int(i)) => Ok(Value::Real(i as f64)),
        _ => Err(VerifyError::Type(format!("constant {name} declared {ty:?} but has value {v:?}"))),
    }
}

fn quick_checks(e: &Expr, out: &mut Vec<(usize, i64)>) {
    match e {
        Expr::Binary(crate::expr::BinOp::And, a, b) => {
            quick_checks(a, out);
            quick_checks(b, out);
        }
        Expr::Binary(crate::expr::BinOp::Eq, a, b) => match (a.as_ref(), b.as_ref()) {
            (Expr::Var(i), Expr::Int(v)) | (Expr::Int(v), Expr::Var(i)) => out.push((*i, *v)),
            _ => {}
        },
        _ => {}
    }
}

impl GuardedCommandModel {
    pub fn module(&self, name: &str) -> Option<&Module> {
        self.modules.iter().find(|m| m.name == name)
    }

    /// Value of each constant, in declaration order.
    pub fn constant_values(&self) -> Result<Vec<(String, Value)>, VerifyError> {
        let mut env: HashMap<String, Binding> = HashMap::new();
        let mut out = Vec::new();
        for c in &self.constants {
            if env.contains_key(&c.name) {
                return Err(VerifyError::Model(format!("constant {} defined twice", c.name)));
            }
            let v = coerce(c.ty, c.value.bind(&env)?.eval_const()?, &c.name)?;
            env.insert(c.name.clone(), Binding::Value(v));
            out.push((c.name.clone(), v));
        }
        Ok(out)
    }

    /// Resolves constants and formulas and checks the model's structure.
    pub fn bind(&self) -> Result<BoundModel, VerifyError> {
        let mut env: HashMap<String, Binding> = HashMap::new();
        for (name, v) in self.constant_values()? {
            env.insert(name, Binding::Value(v));
        }
        let mut vars = Vec::new();
        for (mi, m) in self.modules.iter().enumerate() {
            for v in &m.vars {
                if env.contains_key(&v.name) {
                    return Err(VerifyError::Model(format!("name {} declared twice", v.name)));
                }
                let (low, high, is_bool) = match &v.ty {
                    VarType::Bool => (0, 1, true),
                    VarType::Int { low, high } => {
                        (low.bind(&env)?.eval_const()?.as_i64()?, high.bind(&env)?.eval_const()?.as_i64()?, false)
                    }
                };
                if low > high {
                    return Err(VerifyError::Model(format!("variable {} has empty range [{low}..{high}]", v.name)));
                }
                let init = match v.init.bind(&env)?.eval_const()? {
                    Value::Bool(b) if is_bool => b as i64,
                    Value::Int(i) if !is_bool => i,
                    other => return Err(VerifyError::Type(format!("bad initial value {other:?} for {}", v.name))),
                };
                if init < low || init > high {
                    return Err(VerifyError::Model(format!("initial value {init} of {} out of range", v.name)));
                }
                vars.push(VarInfo { name: v.name.clone(), module: mi, low, high, init, is_bool });
            }
        }
        // Bool variables evaluate as booleans.
        let mut var_env = env.clone();
        for (i, v) in vars.iter().enumerate() {
            let b = if v.is_bool { Binding::Expr(Expr::Var(i).ne(Expr::Int(0))) } else { Binding::Var(i) };
            var_env.insert(v.name.clone(), b);
        }
        for f in &self.formulas {
            if var_env.contains_key(&f.name) {
                return Err(VerifyError::Model(format!("formula {} clashes with another name", f.name)));
            }
            let e = f.expr.bind(&var_env)?;
            var_env.insert(f.name.clone(), Binding::Expr(e));
        }
        let slot: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
        let mut commands = Vec::new();
        let mut alphabets = Vec::new();
        for (mi, m) in self.modules.iter().enumerate() {
            let mut cmds = Vec::new();
            for c in &m.commands {
                let guard = c.guard.bind(&var_env)?;
                let mut quick = Vec::new();
                quick_checks(&guard, &mut quick);
                let mut updates = Vec::new();
                for u in &c.updates {
                    let mut assignments = Vec::new();
                    for (name, e) in &u.assignments {
                        let &i = slot.get(name.as_str()).ok_or_else(|| VerifyError::Unknown(name.clone()))?;
                        if vars[i].module != mi {
                            return Err(VerifyError::Model(format!(
                                "module {} updates variable {name} of module {}",
                                m.name, self.modules[vars[i].module].name
                            )));
                        }
                        assignments.push((i, e.bind(&var_env)?));
                    }
                    updates.push(BoundUpdate { prob: u.prob.bind(&var_env)?, assignments });
                }
                if updates.is_empty() {
                    return Err(VerifyError::Model(format!("command without updates in module {}", m.name)));
                }
                cmds.push(BoundCommand { action: c.action.clone(), guard, updates, quick });
            }
            commands.push(cmds);
            alphabets.push(m.alphabet().into_iter().map(str::to_string).collect());
        }
        let mut labels = Vec::new();
        for l in &self.labels {
            labels.push((l.name.clone(), l.expr.bind(&var_env)?));
        }
        let mut rewards = Vec::new();
        for r in &self.rewards {
            let items = r
                .items
                .iter()
                .map(|it| {
                    Ok(BoundReward {
                        action: it.action.clone(),
                        guard: it.guard.bind(&var_env)?,
                        value: it.value.bind(&var_env)?,
                    })
                })
                .collect::<Result<Vec<_>, VerifyError>>()?;
            rewards.push((r.name.clone(), items));
        }
        Ok(BoundModel { vars, commands, alphabets, labels, rewards })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{ident, int};

    fn counter() -> GuardedCommandModel {
        GuardedCommandModel {
            constants: vec![Constant { name: "N".into(), ty: ConstType::Int, value: int(3) }],
            modules: vec![Module {
                name: "M".into(),
                vars: vec![Variable {
                    name: "x".into(),
                    ty: VarType::Int { low: int(0), high: ident("N") },
                    init: int(0),
                }],
                commands: vec![Command::new(
                    Some("inc"),
                    ident("x").lt(ident("N")),
                    vec![Update::certain(vec![("x", ident("x").add(int(1)))])],
                )],
            }],
            ..Default::default()
        }
    }

    #[test]
    fn binds_constants_and_ranges() {
        let b = counter().bind().unwrap();
        assert_eq!(b.vars[0].high, 3);
        assert!(b.alphabets[0].contains("inc"));
        assert!(b.commands[0][0].guard.eval_bool(&[2]).unwrap());
        assert!(!b.commands[0][0].guard.eval_bool(&[3]).unwrap());
    }

    #[test]
    fn rejects_foreign_updates() {
        let mut m = counter();
        m.modules.push(Module {
            name: "Other".into(),
            vars: vec![Variable { name: "y".into(), ty: VarType::Bool, init: Expr::Bool(false) }],
            commands: vec![Command::new(None, Expr::Bool(true), vec![Update::certain(vec![("x", int(0))])])],
        });
        assert!(matches!(m.bind(), Err(VerifyError::Model(_))));
    }

    #[test]
    fn rejects_bad_constants() {
        let mut m = counter();
        m.constants[0].value = Expr::Real(2.5);
        assert!(matches!(m.bind(), Err(VerifyError::Type(_))));
    }
}
