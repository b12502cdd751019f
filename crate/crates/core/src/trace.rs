//! Per-step and per-episode records of a single seeded run.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Played {
    Optimistic,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based time step.
    pub t: u64,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    /// 1-based episode index.
    pub episode: usize,
    pub played: Played,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub index: usize,
    /// Time (average reward) or episode number (finite horizon) at which it started.
    pub start: u64,
    pub length: u64,
    pub start_state: usize,
    pub played: Played,
    /// Index into [`RunTrace::policies`].
    pub policy: usize,
    /// Left-hand side of the agent's condition check, if one was made.
    pub condition_value: Option<f64>,
    /// Pessimistic gain (average reward) or stage-1 lower value (finite horizon).
    pub lower_value: Option<f64>,
    pub lower_span: Option<f64>,
    pub epsilon: f64,
}

/// Everything a run produced. `P` is the policy type played in episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace<P> {
    pub seed: u64,
    pub start_state: usize,
    pub steps: Vec<StepRecord>,
    pub episodes: Vec<EpisodeRecord>,
    /// Distinct policies, referenced by episode records; entry 0 is the baseline.
    pub policies: Vec<P>,
}

impl<P: PartialEq> RunTrace<P> {
    pub fn new(seed: u64, start_state: usize, baseline: P) -> Self {
        Self {
            seed,
            start_state,
            steps: Vec::new(),
            episodes: Vec::new(),
            policies: vec![baseline],
        }
    }

    /// Id of `policy`, storing it if it has not been seen.
    pub fn intern(&mut self, policy: &P) -> usize
    where
        P: Clone,
    {
        if let Some(id) = self.policies.iter().rposition(|p| p == policy) {
            return id;
        }
        self.policies.push(policy.clone());
        self.policies.len() - 1
    }

    pub fn baseline_episodes(&self) -> usize {
        self.episodes.iter().filter(|e| e.played == Played::Baseline).count()
    }

    /// Total steps spent in baseline episodes.
    pub fn baseline_steps(&self) -> u64 {
        self.episodes
            .iter()
            .filter(|e| e.played == Played::Baseline)
            .map(|e| e.length)
            .sum()
    }

    /// `(policy id, duration)` for each episode, in order.
    pub fn schedule(&self) -> Vec<(usize, u64)> {
        self.episodes.iter().map(|e| (e.policy, e.length)).collect()
    }
}
