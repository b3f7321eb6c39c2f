//! Brute-force reference: enumerate every memoryless deterministic strategy,
//! solve the induced Markov chain with a dense linear solve, and take the
//! pointwise optimum.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use quadsim_verify::mdp::{Mdp, MdpBuilder};
use quadsim_verify::Opt;
use rand::Rng;

/// Random MDP with up to `max_states` states and `max_actions` choices per
/// state, a reward structure "r" with some zero rewards, and a target set.
pub fn random_mdp<R: Rng>(rng: &mut R, max_states: usize, max_actions: usize) -> (Mdp, Vec<bool>) {
    let n = rng.gen_range(2..=max_states);
    let mut b = MdpBuilder::new(&["r"]);
    for _ in 0..n {
        for _ in 0..rng.gen_range(1..=max_actions) {
            let k = rng.gen_range(1..=3.min(n));
            let mut succ: Vec<usize> = Vec::new();
            while succ.len() < k {
                let t = rng.gen_range(0..n);
                if !succ.contains(&t) {
                    succ.push(t);
                }
            }
            let w: Vec<f64> = succ.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            let trans: Vec<(usize, f64)> = succ.iter().zip(&w).map(|(&t, &x)| (t, x / total)).collect();
            let r = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..5.0) };
            b.choice(None, &trans, &[r]);
        }
        b.end_state();
    }
    let mut target: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.2)).collect();
    if !target.iter().any(|&t| t) {
        target[rng.gen_range(0..n)] = true;
    }
    let mdp = b.finish(0, BTreeMap::new()).unwrap();
    (mdp, target)
}

fn strategies(mdp: &Mdp) -> Vec<Vec<usize>> {
    let mut all = vec![Vec::new()];
    for s in 0..mdp.num_states() {
        all = all
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                mdp.choices(s).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    all
}

fn chain(mdp: &Mdp, sigma: &[usize]) -> DMatrix<f64> {
    let n = mdp.num_states();
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        for (t, q) in mdp.transitions(sigma[s]) {
            p[(s, t)] += q;
        }
    }
    p
}

/// States reachable from `s` in the chain, `s` included.
fn reachable(p: &DMatrix<f64>, s: usize, stop: &[bool]) -> Vec<bool> {
    let n = p.nrows();
    let mut seen = vec![false; n];
    let mut stack = vec![s];
    seen[s] = true;
    while let Some(u) = stack.pop() {
        if stop[u] {
            continue;
        }
        for v in 0..n {
            if p[(u, v)] > 0.0 && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Solves `x = b + P x` on `set`, with `x` known elsewhere.
fn solve_on(p: &DMatrix<f64>, set: &[usize], b: &[f64], known: &[f64]) -> Vec<f64> {
    let m = set.len();
    if m == 0 {
        return Vec::new();
    }
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for (i, &s) in set.iter().enumerate() {
        rhs[i] = b[s];
        for t in 0..p.ncols() {
            match set.iter().position(|&x| x == t) {
                Some(j) => a[(i, j)] -= p[(s, t)],
                None => rhs[i] += p[(s, t)] * known[t],
            }
        }
    }
    let x = a.lu().solve(&rhs).expect("transient states give a nonsingular system");
    x.iter().copied().collect()
}

fn chain_prob(p: &DMatrix<f64>, target: &[bool]) -> Vec<f64> {
    let n = p.nrows();
    let can: Vec<bool> =
        (0..n).map(|s| target[s] || reachable(p, s, target).iter().zip(target).any(|(r, t)| *r && *t)).collect();
    let set: Vec<usize> = (0..n).filter(|&s| can[s] && !target[s]).collect();
    let known: Vec<f64> = (0..n).map(|s| if target[s] { 1.0 } else { 0.0 }).collect();
    let x = solve_on(p, &set, &vec![0.0; n], &known);
    let mut out = known;
    for (i, &s) in set.iter().enumerate() {
        out[s] = x[i];
    }
    out
}

fn chain_reward(p: &DMatrix<f64>, r: &[f64], target: &[bool]) -> Vec<f64> {
    let n = p.nrows();
    let can: Vec<bool> =
        (0..n).map(|s| target[s] || reachable(p, s, target).iter().zip(target).any(|(r, t)| *r && *t)).collect();
    // Almost sure iff every state reachable before the target can still reach it.
    let sure: Vec<bool> =
        (0..n).map(|s| reachable(p, s, target).iter().enumerate().all(|(u, &seen)| !seen || can[u])).collect();
    let set: Vec<usize> = (0..n).filter(|&s| sure[s] && !target[s]).collect();
    let known = vec![0.0; n];
    let x = solve_on(p, &set, r, &known);
    let mut out: Vec<f64> = (0..n).map(|s| if target[s] { 0.0 } else { f64::INFINITY }).collect();
    for (i, &s) in set.iter().enumerate() {
        out[s] = x[i];
    }
    out
}

fn optimum(values: impl Iterator<Item = Vec<f64>>, opt: Opt) -> Vec<f64> {
    values
        .reduce(|a, b| a.iter().zip(&b).map(|(x, y)| if opt == Opt::Min { x.min(*y) } else { x.max(*y) }).collect())
        .unwrap()
}

pub fn reach_probability(mdp: &Mdp, target: &[bool], opt: Opt) -> Vec<f64> {
    optimum(strategies(mdp).iter().map(|sg| chain_prob(&chain(mdp, sg), target)), opt)
}

pub fn expected_reward(mdp: &Mdp, reward: &[f64], target: &[bool], opt: Opt) -> Vec<f64> {
    optimum(
        strategies(mdp).iter().map(|sg| {
            let r: Vec<f64> = sg.iter().map(|&c| reward[c]).collect();
            chain_reward(&chain(mdp, sg), &r, target)
        }),
        opt,
    )
}

/// Largest disagreement between solver and oracle over `count` random
/// MDPs; infinite values must agree exactly.
pub fn max_disagreement(count: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let o = quadsim_verify::SolveOptions::default();
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let (m, t) = random_mdp(&mut rng, 12, 2);
        let r = m.reward("r").unwrap();
        for opt in [Opt::Min, Opt::Max] {
            let a = quadsim_verify::reach_probability(&m, &t, opt, &o).unwrap();
            let b = reach_probability(&m, &t, opt);
            let c = quadsim_verify::expected_reward(&m, r, &t, opt, &o).unwrap();
            let d = expected_reward(&m, r, &t, opt);
            for (x, y) in a.iter().zip(&b).chain(c.iter().zip(&d)) {
                let e = if x.is_infinite() || y.is_infinite() {
                    if x == y {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (x - y).abs()
                };
                worst = worst.max(e);
            }
        }
    }
    worst
}
