//! Optimal reachability probabilities and expected total rewards.
//!
//! Probabilities use interval iteration: a lower and an upper Bellman
//! iterate are swept Gauss-Seidel style, strongly connected component by
//! component with successors first, until they are within `epsilon` of
//! each other. Graph precomputation fixes the states whose value is 0 or 1,
//! and for maximum probabilities end components are collapsed first, which
//! makes the fixed point unique so the upper iterate converges to it.
//!
//! Expected rewards use policy iteration from a policy that reaches the
//! target almost surely, with exact evaluation of each policy by
//! back-substitution through its strongly connected components. Strict
//! improvement keeps the policy proper even when zero-reward cycles exist.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::error::VerifyError;
use crate::mdp::Mdp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Opt {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Width of the final lower/upper interval for probabilities.
    pub epsilon: f64,
    /// Cap on sweeps (probabilities) or improvement rounds (rewards).
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { epsilon: 1e-9, max_iterations: 1_000_000 }
    }
}

impl Opt {
    fn pick(self, a: f64, b: f64) -> f64 {
        match self {
            Opt::Min => a.min(b),
            Opt::Max => a.max(b),
        }
    }

    fn init(self) -> f64 {
        match self {
            Opt::Min => f64::INFINITY,
            Opt::Max => f64::NEG_INFINITY,
        }
    }

    fn better(self, candidate: f64, current: f64, tol: f64) -> bool {
        match self {
            Opt::Min => candidate < current - tol,
            Opt::Max => candidate > current + tol,
        }
    }
}

/// Choice index to owning state.
fn owners(mdp: &Mdp) -> Vec<usize> {
    let mut o = vec![0; mdp.num_choices()];
    for s in 0..mdp.num_states() {
        for c in mdp.choices(s) {
            o[c] = s;
        }
    }
    o
}

/// Choices with a transition into each state.
fn predecessors(mdp: &Mdp) -> Vec<Vec<usize>> {
    let mut pred = vec![Vec::new(); mdp.num_states()];
    for c in 0..mdp.num_choices() {
        for (t, p) in mdp.transitions(c) {
            if p > 0.0 && pred[t].last() != Some(&c) {
                pred[t].push(c);
            }
        }
    }
    pred
}

/// States from which `target` can be reached using allowed choices.
fn exists_reach(mdp: &Mdp, pred: &[Vec<usize>], own: &[usize], target: &[bool], allowed: &[bool]) -> Vec<bool> {
    let mut reach = target.to_vec();
    let mut stack: Vec<usize> = (0..mdp.num_states()).filter(|&s| target[s]).collect();
    while let Some(t) = stack.pop() {
        for &c in &pred[t] {
            let s = own[c];
            if allowed[c] && !reach[s] {
                reach[s] = true;
                stack.push(s);
            }
        }
    }
    reach
}

/// States with positive minimum probability of reaching `target`.
fn min_positive(mdp: &Mdp, pred: &[Vec<usize>], own: &[usize], target: &[bool]) -> Vec<bool> {
    let mut r = target.to_vec();
    let mut open: Vec<usize> = (0..mdp.num_states()).map(|s| mdp.choices(s).len()).collect();
    let mut hit = vec![false; mdp.num_choices()];
    let mut stack: Vec<usize> = (0..mdp.num_states()).filter(|&s| target[s]).collect();
    while let Some(t) = stack.pop() {
        for &c in &pred[t] {
            if hit[c] {
                continue;
            }
            hit[c] = true;
            let s = own[c];
            open[s] -= 1;
            if open[s] == 0 && !r[s] {
                r[s] = true;
                stack.push(s);
            }
        }
    }
    r
}

/// States where the minimum probability of reaching `target` is one.
fn min_one(mdp: &Mdp, pred: &[Vec<usize>], own: &[usize], target: &[bool]) -> Vec<bool> {
    let pos = min_positive(mdp, pred, own, target);
    let zero: Vec<bool> = pos.iter().map(|p| !p).collect();
    // States that can be steered into the zero set without passing the target.
    let allowed: Vec<bool> = (0..mdp.num_choices()).map(|c| !target[own[c]]).collect();
    let bad = exists_reach(mdp, pred, own, &zero, &allowed);
    bad.iter().map(|b| !b).collect()
}

/// States where some strategy reaches `target` with probability one, and
/// for each such non-target state a choice making progress towards it.
fn max_one(mdp: &Mdp, pred: &[Vec<usize>], own: &[usize], target: &[bool]) -> (Vec<bool>, Vec<Option<usize>>) {
    let n = mdp.num_states();
    let mut u = vec![true; n];
    loop {
        // Choices that stay inside the current candidate set.
        let inside: Vec<bool> = (0..mdp.num_choices()).map(|c| mdp.transitions(c).all(|(t, _)| u[t])).collect();
        let mut r = target.to_vec();
        let mut via = vec![None; n];
        let mut stack: Vec<usize> = (0..n).filter(|&s| target[s]).collect();
        while let Some(t) = stack.pop() {
            for &c in &pred[t] {
                let s = own[c];
                if inside[c] && u[s] && !r[s] {
                    r[s] = true;
                    via[s] = Some(c);
                    stack.push(s);
                }
            }
        }
        if r == u {
            return (r, via);
        }
        u = r;
    }
}

/// Strongly connected components of the graph restricted to `keep`
/// states and `allowed` choices, successors first.
fn sccs(mdp: &Mdp, keep: &[bool], allowed: impl Fn(usize) -> bool) -> Vec<Vec<usize>> {
    let n = mdp.num_states();
    let mut g = DiGraph::<(), ()>::with_capacity(n, mdp.num_transitions());
    for _ in 0..n {
        g.add_node(());
    }
    for s in (0..n).filter(|&s| keep[s]) {
        for c in mdp.choices(s).filter(|&c| allowed(c)) {
            for (t, p) in mdp.transitions(c) {
                if p > 0.0 && keep[t] {
                    g.add_edge(NodeIndex::new(s), NodeIndex::new(t), ());
                }
            }
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| c.into_iter().map(|i| i.index()).collect::<Vec<_>>())
        .filter(|c: &Vec<usize>| keep[c[0]])
        .collect()
}

/// Maximal end components inside `candidate`, as state lists, and the
/// choices internal to them.
fn maximal_end_components(mdp: &Mdp, candidate: &[bool]) -> (Vec<Vec<usize>>, Vec<bool>) {
    let mut keep = candidate.to_vec();
    let mut allowed: Vec<bool> = vec![false; mdp.num_choices()];
    for s in (0..mdp.num_states()).filter(|&s| keep[s]) {
        for c in mdp.choices(s) {
            allowed[c] = mdp.transitions(c).all(|(t, _)| keep[t]);
        }
    }
    loop {
        let comps = sccs(mdp, &keep, |c| allowed[c]);
        let mut comp = vec![usize::MAX; mdp.num_states()];
        for (i, c) in comps.iter().enumerate() {
            for &s in c {
                comp[s] = i;
            }
        }
        let mut changed = false;
        for s in 0..mdp.num_states() {
            if !keep[s] {
                continue;
            }
            let mut any = false;
            for c in mdp.choices(s) {
                if allowed[c] && mdp.transitions(c).any(|(t, _)| comp[t] != comp[s]) {
                    allowed[c] = false;
                    changed = true;
                }
                any |= allowed[c];
            }
            if !any {
                keep[s] = false;
                changed = true;
            }
        }
        if !changed {
            let mecs = comps.into_iter().filter(|c| c.iter().all(|&s| keep[s])).collect();
            return (mecs, allowed);
        }
    }
}

/// Interval iteration over `maybe` states; `fixed` holds all other values.
fn interval_iteration(
    mdp: &Mdp,
    maybe: &[bool],
    fixed: &[f64],
    opt: Opt,
    o: &SolveOptions,
) -> Result<Vec<f64>, VerifyError> {
    let mut lo = fixed.to_vec();
    let mut hi = fixed.to_vec();
    for s in 0..mdp.num_states() {
        if maybe[s] {
            lo[s] = 0.0;
            hi[s] = 1.0;
        }
    }
    let bellman = |v: &[f64], s: usize| {
        let mut best = opt.init();
        for c in mdp.choices(s) {
            best = opt.pick(best, mdp.transitions(c).map(|(t, p)| p * v[t]).sum());
        }
        best.clamp(0.0, 1.0)
    };
    // A lone state is solved in closed form, self-loop included.
    let single = |v: &[f64], s: usize| {
        let mut best = opt.init();
        for c in mdp.choices(s) {
            let (mut self_p, mut rest) = (0.0, 0.0);
            for (t, p) in mdp.transitions(c) {
                if t == s {
                    self_p += p;
                } else {
                    rest += p * v[t];
                }
            }
            let x = if self_p < 1.0 { rest / (1.0 - self_p) } else { v[s] };
            best = opt.pick(best, x);
        }
        best.clamp(0.0, 1.0)
    };
    let mut sweeps = 0usize;
    for comp in sccs(mdp, maybe, |_| true) {
        if let [s] = comp[..] {
            lo[s] = single(&lo, s);
            hi[s] = single(&hi, s).max(lo[s]);
            if hi[s] - lo[s] < o.epsilon {
                continue;
            }
        }
        loop {
            sweeps += 1;
            let mut gap: f64 = 0.0;
            for &s in &comp {
                lo[s] = bellman(&lo, s);
                hi[s] = bellman(&hi, s).max(lo[s]);
                gap = gap.max(hi[s] - lo[s]);
            }
            if gap < o.epsilon {
                break;
            }
            if sweeps >= o.max_iterations {
                return Err(VerifyError::NoConvergence { iterations: sweeps, residual: gap });
            }
        }
    }
    Ok(lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect())
}

/// MDP whose states are the given classes, keeping only choices that are
/// not internal to their class.
fn quotient(mdp: &Mdp, class: &[usize], classes: usize, internal: &[bool]) -> Mdp {
    let mut members = vec![Vec::new(); classes];
    for s in 0..mdp.num_states() {
        members[class[s]].push(s);
    }
    let mut b = crate::mdp::MdpBuilder::new(&[]);
    for (k, ms) in members.iter().enumerate() {
        let mut any = false;
        for &s in ms {
            for c in mdp.choices(s).filter(|&c| !internal[c]) {
                let t: Vec<(usize, f64)> = mdp.transitions(c).map(|(t, p)| (class[t], p)).collect();
                b.choice(None, &t, &[]);
                any = true;
            }
        }
        if !any {
            // Only reachable through internal choices; its value is fixed anyway.
            b.choice(None, &[(k, 1.0)], &[]);
        }
        b.end_state();
    }
    b.finish(class[mdp.initial], Default::default()).expect("quotient of a valid MDP is valid")
}

/// Optimal probability of eventually reaching `target`, per state.
pub fn reach_probability(mdp: &Mdp, target: &[bool], opt: Opt, o: &SolveOptions) -> Result<Vec<f64>, VerifyError> {
    let n = mdp.num_states();
    if target.len() != n {
        return Err(VerifyError::Model("target set has the wrong length".into()));
    }
    let pred = predecessors(mdp);
    let own = owners(mdp);
    let all = vec![true; mdp.num_choices()];
    let (zero, one) = match opt {
        Opt::Min => {
            let pos = min_positive(mdp, &pred, &own, target);
            (pos.iter().map(|p| !p).collect::<Vec<_>>(), min_one(mdp, &pred, &own, target))
        }
        Opt::Max => {
            let reach = exists_reach(mdp, &pred, &own, target, &all);
            (reach.iter().map(|r| !r).collect(), max_one(mdp, &pred, &own, target).0)
        }
    };
    let fixed: Vec<f64> = (0..n).map(|s| if one[s] { 1.0 } else { 0.0 }).collect();
    let maybe: Vec<bool> = (0..n).map(|s| !zero[s] && !one[s]).collect();
    if !maybe.iter().any(|&m| m) {
        return Ok(fixed);
    }
    if opt == Opt::Min {
        return interval_iteration(mdp, &maybe, &fixed, opt, o);
    }
    let (mecs, internal) = maximal_end_components(mdp, &maybe);
    if mecs.is_empty() {
        return interval_iteration(mdp, &maybe, &fixed, opt, o);
    }
    let mut class: Vec<usize> = (0..n).collect();
    let mut rep: Vec<usize> = (0..n).collect();
    for m in &mecs {
        for &s in m {
            class[s] = m[0];
        }
    }
    // Renumber classes densely.
    let mut id = vec![usize::MAX; n];
    let mut k = 0;
    for s in 0..n {
        if id[class[s]] == usize::MAX {
            id[class[s]] = k;
            rep[k] = class[s];
            k += 1;
        }
    }
    let dense: Vec<usize> = class.iter().map(|&c| id[c]).collect();
    let q = quotient(mdp, &dense, k, &internal);
    let qmaybe: Vec<bool> = (0..k).map(|i| maybe[rep[i]]).collect();
    let qfixed: Vec<f64> = (0..k).map(|i| fixed[rep[i]]).collect();
    let v = interval_iteration(&q, &qmaybe, &qfixed, opt, o)?;
    Ok((0..n).map(|s| v[dense[s]]).collect())
}

/// Exact value of a proper policy: `v = r + P v` off the target, 0 on it.
fn evaluate(mdp: &Mdp, reward: &[f64], active: &[bool], policy: &[usize]) -> Vec<f64> {
    let n = mdp.num_states();
    let mut v = vec![0.0; n];
    for comp in sccs(mdp, active, |c| policy.get(mdp_owner(mdp, c)).is_some_and(|&p| p == c)) {
        if comp.len() == 1 {
            let s = comp[0];
            let c = policy[s];
            let mut self_p = 0.0;
            let mut rhs = reward[c];
            for (t, p) in mdp.transitions(c) {
                if t == s {
                    self_p += p;
                } else {
                    rhs += p * v[t];
                }
            }
            v[s] = rhs / (1.0 - self_p);
            continue;
        }
        let m = comp.len();
        let mut pos = std::collections::HashMap::with_capacity(m);
        for (i, &s) in comp.iter().enumerate() {
            pos.insert(s, i);
        }
        let mut a = DMatrix::<f64>::identity(m, m);
        let mut b = DVector::<f64>::zeros(m);
        for (i, &s) in comp.iter().enumerate() {
            let c = policy[s];
            b[i] = reward[c];
            for (t, p) in mdp.transitions(c) {
                match pos.get(&t) {
                    Some(&j) => a[(i, j)] -= p,
                    None => b[i] += p * v[t],
                }
            }
        }
        let x = a.lu().solve(&b).expect("a proper policy gives a nonsingular system");
        for (i, &s) in comp.iter().enumerate() {
            v[s] = x[i];
        }
    }
    v
}

fn mdp_owner(mdp: &Mdp, c: usize) -> usize {
    mdp.state_start.partition_point(|&x| x <= c) - 1
}

/// Optimal expected reward accumulated before reaching `target`, per state.
///
/// The value is infinite where the target is not reached almost surely:
/// under some strategy for `Max`, under every strategy for `Min`.
pub fn expected_reward(
    mdp: &Mdp,
    reward: &[f64],
    target: &[bool],
    opt: Opt,
    o: &SolveOptions,
) -> Result<Vec<f64>, VerifyError> {
    let n = mdp.num_states();
    if target.len() != n || reward.len() != mdp.num_choices() {
        return Err(VerifyError::Model("target or reward vector has the wrong length".into()));
    }
    if reward.iter().any(|r| *r < 0.0 || !r.is_finite()) {
        return Err(VerifyError::Model("rewards must be finite and non-negative".into()));
    }
    let pred = predecessors(mdp);
    let own = owners(mdp);
    let (finite, attractor) = match opt {
        Opt::Max => (min_one(mdp, &pred, &own, target), None),
        Opt::Min => {
            let (one, via) = max_one(mdp, &pred, &own, target);
            (one, Some(via))
        }
    };
    let allowed: Vec<bool> = (0..mdp.num_choices()).map(|c| mdp.transitions(c).all(|(t, _)| finite[t])).collect();
    let active: Vec<bool> = (0..n).map(|s| finite[s] && !target[s]).collect();
    let mut policy: Vec<usize> = (0..n)
        .map(|s| {
            if !active[s] {
                return usize::MAX;
            }
            match &attractor {
                Some(via) => via[s].expect("attractor choice exists on the almost-sure set"),
                None => mdp.choices(s).find(|&c| allowed[c]).expect("every choice stays in the almost-sure set"),
            }
        })
        .collect();
    let mut rounds = 0;
    let v = loop {
        let v = evaluate(mdp, reward, &active, &policy);
        let mut changed = false;
        for s in (0..n).filter(|&s| active[s]) {
            let tol = 1e-12 * v[s].abs().max(1.0);
            let mut best = v[s];
            for c in mdp.choices(s).filter(|&c| allowed[c]) {
                let q = reward[c] + mdp.transitions(c).map(|(t, p)| p * v[t]).sum::<f64>();
                if opt.better(q, best, tol) {
                    best = q;
                    policy[s] = c;
                    changed = true;
                }
            }
        }
        rounds += 1;
        if !changed {
            break v;
        }
        if rounds >= o.max_iterations {
            return Err(VerifyError::NoConvergence { iterations: rounds, residual: f64::NAN });
        }
    };
    Ok((0..n)
        .map(|s| {
            if target[s] {
                0.0
            } else if finite[s] {
                v[s]
            } else {
                f64::INFINITY
            }
        })
        .collect())
}

/// Probability from the initial state for a named label.
pub fn initial_probability(mdp: &Mdp, label: &str, opt: Opt, o: &SolveOptions) -> Result<f64, VerifyError> {
    Ok(reach_probability(mdp, mdp.label(label)?, opt, o)?[mdp.initial])
}

/// Expected reward from the initial state for named reward and label.
pub fn initial_reward(mdp: &Mdp, reward: &str, label: &str, opt: Opt, o: &SolveOptions) -> Result<f64, VerifyError> {
    Ok(expected_reward(mdp, mdp.reward(reward)?, mdp.label(label)?, opt, o)?[mdp.initial])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;
    use std::collections::BTreeMap;

    type Choice = (Vec<(usize, f64)>, f64);

    /// States with (choices of (successor, prob) lists, reward) and a target set.
    fn mk(states: &[Vec<Choice>]) -> Mdp {
        let mut b = MdpBuilder::new(&["r"]);
        for s in states {
            for (t, r) in s {
                b.choice(None, t, &[*r]);
            }
            b.end_state();
        }
        b.finish(0, BTreeMap::new()).unwrap()
    }

    fn target(n: usize, ts: &[usize]) -> Vec<bool> {
        (0..n).map(|s| ts.contains(&s)).collect()
    }

    const O: SolveOptions = SolveOptions { epsilon: 1e-12, max_iterations: 1_000_000 };

    #[test]
    fn two_state_chain() {
        let m = mk(&[vec![(vec![(1, 0.3), (2, 0.7)], 0.0)], vec![(vec![(1, 1.0)], 0.0)], vec![(vec![(2, 1.0)], 0.0)]]);
        let t = target(3, &[1]);
        for opt in [Opt::Min, Opt::Max] {
            let v = reach_probability(&m, &t, opt, &O).unwrap();
            assert!((v[0] - 0.3).abs() < 1e-12);
            assert_eq!(v[1], 1.0);
        }
    }

    #[test]
    fn diamond() {
        let m = mk(&[
            vec![(vec![(1, 0.2), (2, 0.8)], 0.0), (vec![(1, 0.7), (2, 0.3)], 0.0)],
            vec![(vec![(1, 1.0)], 0.0)],
            vec![(vec![(2, 1.0)], 0.0)],
        ]);
        let t = target(3, &[1]);
        assert!((reach_probability(&m, &t, Opt::Min, &O).unwrap()[0] - 0.2).abs() < 1e-12);
        assert!((reach_probability(&m, &t, Opt::Max, &O).unwrap()[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn rewards_on_chains() {
        let chain = mk(&[
            vec![(vec![(1, 1.0)], 1.0)],
            vec![(vec![(2, 1.0)], 1.0)],
            vec![(vec![(3, 1.0)], 1.0)],
            vec![(vec![(3, 1.0)], 0.0)],
        ]);
        let t = target(4, &[3]);
        for opt in [Opt::Min, Opt::Max] {
            let v = expected_reward(&chain, chain.reward("r").unwrap(), &t, opt, &O).unwrap();
            assert_eq!(v[0], 3.0);
            assert_eq!(v[3], 0.0);
        }
        let retry = mk(&[vec![(vec![(0, 0.5), (1, 0.5)], 1.0)], vec![(vec![(1, 1.0)], 0.0)]]);
        let v = expected_reward(&retry, retry.reward("r").unwrap(), &target(2, &[1]), Opt::Max, &O).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn end_component_needs_collapsing() {
        // State 0 may loop to 1 and back forever or gamble.
        let m = mk(&[
            vec![(vec![(1, 1.0)], 0.0), (vec![(2, 0.6), (3, 0.4)], 0.0)],
            vec![(vec![(0, 1.0)], 0.0), (vec![(2, 0.9), (3, 0.1)], 0.0)],
            vec![(vec![(2, 1.0)], 0.0)],
            vec![(vec![(3, 1.0)], 0.0)],
        ]);
        let t = target(4, &[2]);
        let v = reach_probability(&m, &t, Opt::Max, &O).unwrap();
        assert!((v[0] - 0.9).abs() < 1e-12 && (v[1] - 0.9).abs() < 1e-12);
        let v = reach_probability(&m, &t, Opt::Min, &O).unwrap();
        assert_eq!(v[0], 0.0);
    }

    #[test]
    fn reward_infinity_semantics() {
        // Choice 0 loops for free, choice 1 pays 4 to finish.
        let m = mk(&[vec![(vec![(0, 1.0)], 0.0), (vec![(1, 1.0)], 4.0)], vec![(vec![(1, 1.0)], 0.0)]]);
        let t = target(2, &[1]);
        let r = m.reward("r").unwrap();
        assert_eq!(expected_reward(&m, r, &t, Opt::Min, &O).unwrap()[0], 4.0);
        assert_eq!(expected_reward(&m, r, &t, Opt::Max, &O).unwrap()[0], f64::INFINITY);
    }

    #[test]
    fn cap_is_reported() {
        let m = mk(&[vec![(vec![(0, 0.999), (1, 0.001)], 0.0)], vec![(vec![(1, 1.0)], 0.0)]]);
        let o = SolveOptions { epsilon: 1e-12, max_iterations: 10 };
        let e = reach_probability(&m, &target(2, &[1]), Opt::Min, &o);
        // One-state components are solved directly; a two-state loop is not.
        assert!(e.is_ok());
        let m = mk(&[
            vec![(vec![(1, 0.999), (2, 0.0005), (3, 0.0005)], 0.0)],
            vec![(vec![(0, 1.0)], 0.0)],
            vec![(vec![(2, 1.0)], 0.0)],
            vec![(vec![(3, 1.0)], 0.0)],
        ]);
        let e = reach_probability(&m, &target(4, &[2]), Opt::Min, &o);
        assert!(matches!(e, Err(VerifyError::NoConvergence { iterations: 10, .. })));
    }
}
