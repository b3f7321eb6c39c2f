//! Reachable state-space construction with synchronising action labels.
//!
//! An unlabelled command forms a choice on its own. A labelled action is
//! enabled when every module whose alphabet contains the label has at
//! least one enabled command for it; each combination of one such command
//! per module is a separate choice whose distribution is the product of
//! the individual updates.

use std::collections::{BTreeMap, HashMap, VecDeque};

use log::warn;

use crate::error::VerifyError;
use crate::expr::Value;
use crate::mdp::{Mdp, MdpBuilder};
use crate::model::{BoundCommand, BoundModel, GuardedCommandModel};

/// Upper limit on explored states.
pub const MAX_STATES: usize = 5_000_000;

type Dist = Vec<(Vec<i64>, f64)>;

fn enabled(c: &BoundCommand, v: &[i64]) -> Result<bool, VerifyError> {
    if c.quick.iter().any(|&(i, x)| v[i] != x) {
        return Ok(false);
    }
    c.guard.eval_bool(v)
}

fn apply(bm: &BoundModel, c: &BoundCommand, v: &[i64], base: &Dist) -> Result<Dist, VerifyError> {
    let mut out = Vec::with_capacity(base.len() * c.updates.len());
    for u in &c.updates {
        let p = u.prob.eval_f64(v)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(VerifyError::Model(format!("probability {p} outside [0, 1] in state {v:?}")));
        }
        if p == 0.0 {
            continue;
        }
        for (w, q) in base {
            let mut next = w.clone();
            for (i, e) in &u.assignments {
                let info = &bm.vars[*i];
                let x = match (e.eval(v)?, info.is_bool) {
                    (Value::Bool(b), true) => b as i64,
                    (Value::Int(x), false) => x,
                    (val, _) => return Err(VerifyError::Type(format!("cannot assign {val:?} to {}", info.name))),
                };
                if x < info.low || x > info.high {
                    return Err(VerifyError::Model(format!(
                        "update sets {} = {x} outside [{}..{}] in state {v:?}",
                        info.name, info.low, info.high
                    )));
                }
                next[*i] = x;
            }
            out.push((next, q * p));
        }
    }
    Ok(out)
}

/// Choices of one state as (action, distribution over valuations).
fn successors(
    bm: &BoundModel,
    actions: &[(String, Vec<usize>)],
    v: &[i64],
) -> Result<Vec<(Option<String>, Dist)>, VerifyError> {
    let start: Dist = vec![(v.to_vec(), 1.0)];
    let mut choices = Vec::new();
    for cmds in &bm.commands {
        for c in cmds.iter().filter(|c| c.action.is_none()) {
            if enabled(c, v)? {
                choices.push((None, apply(bm, c, v, &start)?));
            }
        }
    }
    for (a, modules) in actions {
        let mut per_module: Vec<Vec<&BoundCommand>> = Vec::with_capacity(modules.len());
        for &m in modules {
            let mut en = Vec::new();
            for c in bm.commands[m].iter().filter(|c| c.action.as_deref() == Some(a)) {
                if enabled(c, v)? {
                    en.push(c);
                }
            }
            if en.is_empty() {
                break;
            }
            per_module.push(en);
        }
        if per_module.len() < modules.len() {
            continue;
        }
        let mut partial: Vec<Dist> = vec![start.clone()];
        for en in &per_module {
            let mut next = Vec::with_capacity(partial.len() * en.len());
            for d in &partial {
                for c in en {
                    next.push(apply(bm, c, v, d)?);
                }
            }
            partial = next;
        }
        choices.extend(partial.into_iter().map(|d| (Some(a.clone()), d)));
    }
    Ok(choices)
}

fn choice_rewards(bm: &BoundModel, action: Option<&str>, v: &[i64]) -> Result<Vec<f64>, VerifyError> {
    let mut out = Vec::with_capacity(bm.rewards.len());
    for (_, items) in &bm.rewards {
        let mut r = 0.0;
        for it in items {
            let applies = match (&it.action, action) {
                (None, _) => true,
                (Some(a), None) => a.is_empty(),
                (Some(a), Some(b)) => a == b,
            };
            if applies && it.guard.eval_bool(v)? {
                r += it.value.eval_f64(v)?;
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Builds the reachable MDP of a model.
pub fn build(model: &GuardedCommandModel) -> Result<Mdp, VerifyError> {
    let bm = model.bind()?;
    build_bound(&bm)
}

pub fn build_bound(bm: &BoundModel) -> Result<Mdp, VerifyError> {
    let mut labels_all: Vec<&String> = bm.alphabets.iter().flatten().collect();
    labels_all.sort();
    labels_all.dedup();
    let actions: Vec<(String, Vec<usize>)> = labels_all
        .into_iter()
        .map(|a| (a.clone(), (0..bm.alphabets.len()).filter(|&m| bm.alphabets[m].contains(a)).collect()))
        .collect();
    let reward_names: Vec<&str> = bm.rewards.iter().map(|(n, _)| n.as_str()).collect();
    let mut builder = MdpBuilder::new(&reward_names);

    let init: Vec<i64> = bm.vars.iter().map(|v| v.init).collect();
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut valuations = vec![init.clone()];
    index.insert(init, 0);
    let mut queue = VecDeque::from([0usize]);
    let mut deadlocks = Vec::new();
    let mut trans = Vec::new();

    while let Some(s) = queue.pop_front() {
        let v = valuations[s].clone();
        let choices = successors(bm, &actions, &v)?;
        if choices.is_empty() {
            deadlocks.push(s);
            builder.choice(None, &[(s, 1.0)], &vec![0.0; reward_names.len()]);
        }
        for (action, dist) in choices {
            trans.clear();
            for (w, p) in dist {
                let t = match index.get(&w) {
                    Some(&t) => t,
                    None => {
                        let t = valuations.len();
                        if t >= MAX_STATES {
                            return Err(VerifyError::Model(format!("more than {MAX_STATES} reachable states")));
                        }
                        index.insert(w.clone(), t);
                        valuations.push(w);
                        queue.push_back(t);
                        t
                    }
                };
                trans.push((t, p));
            }
            let r = choice_rewards(bm, action.as_deref(), &v)?;
            builder.choice(action.as_deref(), &trans, &r);
        }
        builder.end_state();
    }
    if !deadlocks.is_empty() {
        warn!("{} deadlock states made absorbing", deadlocks.len());
    }

    let mut labels = BTreeMap::new();
    for (name, e) in &bm.labels {
        let bits = valuations.iter().map(|v| e.eval_bool(v)).collect::<Result<Vec<_>, _>>()?;
        labels.insert(name.clone(), bits);
    }
    labels.insert("init".to_string(), (0..valuations.len()).map(|s| s == 0).collect());
    labels.insert("deadlock".to_string(), {
        let mut d = vec![false; valuations.len()];
        deadlocks.iter().for_each(|&s| d[s] = true);
        d
    });
    let mut mdp = builder.finish(0, labels)?;
    mdp.var_names = bm.vars.iter().map(|v| v.name.clone()).collect();
    mdp.valuations = valuations;
    mdp.deadlocks = deadlocks;
    Ok(mdp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{ident, int, real, Expr};
    use crate::model::*;

    fn var(name: &str, hi: i64) -> Variable {
        Variable { name: name.into(), ty: VarType::Int { low: int(0), high: int(hi) }, init: int(0) }
    }

    /// Two modules synchronising on `go`; A flips a coin.
    fn pair() -> GuardedCommandModel {
        let a = Module {
            name: "A".into(),
            vars: vec![var("x", 2)],
            commands: vec![Command::new(
                Some("go"),
                ident("x").eq(int(0)),
                vec![Update::new(real(0.3), vec![("x", int(1))]), Update::new(real(0.7), vec![("x", int(2))])],
            )],
        };
        let b = Module {
            name: "B".into(),
            vars: vec![var("y", 1)],
            commands: vec![
                Command::new(Some("go"), ident("y").eq(int(0)), vec![Update::certain(vec![("y", int(1))])]),
                Command::new(Some("go"), Expr::Bool(true), vec![Update::certain(vec![])]),
            ],
        };
        GuardedCommandModel {
            modules: vec![a, b],
            labels: vec![Label { name: "two".into(), expr: ident("x").eq(int(2)) }],
            rewards: vec![RewardStruct {
                name: "r".into(),
                items: vec![RewardItem { action: Some("go".into()), guard: Expr::Bool(true), value: int(5) }],
            }],
            ..Default::default()
        }
    }

    #[test]
    fn synchronised_product() {
        let m = build(&pair()).unwrap();
        // Initial state has one choice per B command.
        assert_eq!(m.choices(0).len(), 2);
        let c = m.choices(0).start;
        let t: Vec<_> = m.transitions(c).map(|(s, p)| (m.valuations[s].clone(), p)).collect();
        assert_eq!(t, vec![(vec![1, 1], 0.3), (vec![2, 1], 0.7)]);
        assert_eq!(m.reward("r").unwrap()[c], 5.0);
        // States with x != 0 block `go` and become absorbing.
        assert_eq!(m.deadlocks.len(), m.num_states() - 1);
        assert_eq!(m.label("two").unwrap().iter().filter(|b| **b).count(), 2);
    }

    #[test]
    fn out_of_range_update_is_an_error() {
        let mut model = pair();
        model.modules[0].commands[0].updates[1].assignments[0].1 = int(3);
        assert!(matches!(build(&model), Err(VerifyError::Model(_))));
    }

    #[test]
    fn blocked_when_a_participant_is_disabled() {
        let mut model = pair();
        model.modules[1].commands.truncate(1);
        model.modules[1].commands[0].guard = ident("y").eq(int(1));
        let m = build(&model).unwrap();
        assert_eq!(m.num_states(), 1);
        assert_eq!(m.deadlocks, vec![0]);
    }
}
