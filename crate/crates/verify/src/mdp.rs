//! Explicit-state Markov decision processes in compressed row form.

use std::collections::BTreeMap;

use crate::error::VerifyError;

/// Tolerance on the sum of a choice's outgoing probabilities.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    /// Choices of state `s` are `state_start[s]..state_start[s + 1]`.
    pub state_start: Vec<usize>,
    /// Transitions of choice `c` are `choice_start[c]..choice_start[c + 1]`.
    pub choice_start: Vec<usize>,
    pub choice_action: Vec<Option<String>>,
    pub succ: Vec<usize>,
    pub prob: Vec<f64>,
    /// Reward per choice, by structure name.
    pub rewards: BTreeMap<String, Vec<f64>>,
    pub labels: BTreeMap<String, Vec<bool>>,
    pub initial: usize,
    /// Variable names and one valuation per state, when built from a model.
    pub var_names: Vec<String>,
    pub valuations: Vec<Vec<i64>>,
    /// States that had no enabled command and were given a self-loop.
    pub deadlocks: Vec<usize>,
}

impl Mdp {
    pub fn num_states(&self) -> usize {
        self.state_start.len() - 1
    }

    pub fn num_choices(&self) -> usize {
        self.choice_start.len() - 1
    }

    pub fn num_transitions(&self) -> usize {
        self.succ.len()
    }

    pub fn choices(&self, s: usize) -> std::ops::Range<usize> {
        self.state_start[s]..self.state_start[s + 1]
    }

    /// (successor, probability) pairs of a choice.
    pub fn transitions(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.choice_start[c]..self.choice_start[c + 1];
        self.succ[r.clone()].iter().copied().zip(self.prob[r].iter().copied())
    }

    pub fn label(&self, name: &str) -> Result<&[bool], VerifyError> {
        self.labels.get(name).map(Vec::as_slice).ok_or_else(|| VerifyError::UnknownLabel(name.to_string()))
    }

    pub fn reward(&self, name: &str) -> Result<&[f64], VerifyError> {
        self.rewards
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| VerifyError::Model(format!("no reward structure {name}")))
    }

    /// Checks that every state has a choice and every choice a distribution.
    pub fn validate(&self) -> Result<(), VerifyError> {
        let n = self.num_states();
        if self.initial >= n {
            return Err(VerifyError::Model("initial state out of range".into()));
        }
        for s in 0..n {
            if self.choices(s).is_empty() {
                return Err(VerifyError::Model(format!("state {s} has no choices")));
            }
            for c in self.choices(s) {
                let mut sum = 0.0;
                for (t, p) in self.transitions(c) {
                    if t >= n || !(0.0..=1.0 + PROB_SUM_TOL).contains(&p) {
                        return Err(VerifyError::Model(format!("bad transition {s} -> {t} with probability {p}")));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(VerifyError::Model(format!("choice {c} of state {s} sums to {sum}")));
                }
            }
        }
        for (name, v) in &self.labels {
            if v.len() != n {
                return Err(VerifyError::Model(format!("label {name} has {} entries for {n} states", v.len())));
            }
        }
        for (name, v) in &self.rewards {
            if v.len() != self.num_choices() || v.iter().any(|r| !r.is_finite() || *r < 0.0) {
                return Err(VerifyError::Model(format!("reward structure {name} is malformed or negative")));
            }
        }
        Ok(())
    }
}

/// Incremental construction, one state at a time in index order.
#[derive(Debug, Default)]
pub struct MdpBuilder {
    mdp: Option<Mdp>,
    reward_names: Vec<String>,
}

impl MdpBuilder {
    pub fn new(reward_names: &[&str]) -> Self {
        let mdp = Mdp {
            state_start: vec![0],
            choice_start: vec![0],
            choice_action: Vec::new(),
            succ: Vec::new(),
            prob: Vec::new(),
            rewards: reward_names.iter().map(|n| (n.to_string(), Vec::new())).collect(),
            labels: BTreeMap::new(),
            initial: 0,
            var_names: Vec::new(),
            valuations: Vec::new(),
            deadlocks: Vec::new(),
        };
        Self { mdp: Some(mdp), reward_names: reward_names.iter().map(|s| s.to_string()).collect() }
    }

    fn m(&mut self) -> &mut Mdp {
        self.mdp.as_mut().expect("builder used after finish")
    }

    /// Adds a choice to the current state. Repeated successors are merged.
    pub fn choice(&mut self, action: Option<&str>, transitions: &[(usize, f64)], rewards: &[f64]) {
        assert_eq!(rewards.len(), self.reward_names.len());
        let names = self.reward_names.clone();
        let m = self.m();
        let start = m.succ.len();
        for &(t, p) in transitions {
            if let Some(k) = m.succ[start..].iter().position(|&x| x == t) {
                m.prob[start + k] += p;
            } else {
                m.succ.push(t);
                m.prob.push(p);
            }
        }
        m.choice_start.push(m.succ.len());
        m.choice_action.push(action.map(str::to_string));
        for (name, r) in names.iter().zip(rewards) {
            m.rewards.get_mut(name).unwrap().push(*r);
        }
    }

    /// Closes the current state.
    pub fn end_state(&mut self) {
        let m = self.m();
        let c = m.choice_action.len();
        m.state_start.push(c);
    }

    pub fn finish(mut self, initial: usize, labels: BTreeMap<String, Vec<bool>>) -> Result<Mdp, VerifyError> {
        let mut m = self.mdp.take().unwrap();
        m.initial = initial;
        m.labels = labels;
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_merges_successors() {
        let mut b = MdpBuilder::new(&["r"]);
        b.choice(Some("a"), &[(1, 0.25), (1, 0.25), (0, 0.5)], &[2.0]);
        b.end_state();
        b.choice(None, &[(1, 1.0)], &[0.0]);
        b.end_state();
        let m = b.finish(0, BTreeMap::new()).unwrap();
        assert_eq!(m.num_states(), 2);
        assert_eq!(m.transitions(0).collect::<Vec<_>>(), vec![(1, 0.5), (0, 0.5)]);
        assert_eq!(m.reward("r").unwrap(), &[2.0, 0.0]);
    }

    #[test]
    fn rejects_defective_distribution() {
        let mut b = MdpBuilder::new(&[]);
        b.choice(None, &[(0, 0.9)], &[]);
        b.end_state();
        assert!(b.finish(0, BTreeMap::new()).is_err());
    }
}
