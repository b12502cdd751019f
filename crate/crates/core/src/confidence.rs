//! Visit statistics and the two confidence-set families over rewards and
//! transitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{StateActionSpace, TabularMDP};

/// Slack used when checking membership of a model in a set.
const MEMBERSHIP_TOL: f64 = 1e-12;

/// Running counts over the legal pairs of a [`StateActionSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitStats {
    space: StateActionSpace,
    counts: Vec<u64>,
    episode_counts: Vec<u64>,
    reward_sum: Vec<f64>,
    reward_sq_sum: Vec<f64>,
    transition_counts: Vec<u64>,
    total_steps: u64,
}

impl VisitStats {
    pub fn new(space: StateActionSpace) -> Self {
        let pairs = space.n_pairs();
        let n = space.n_states();
        Self {
            counts: vec![0; pairs],
            episode_counts: vec![0; pairs],
            reward_sum: vec![0.0; pairs],
            reward_sq_sum: vec![0.0; pairs],
            transition_counts: vec![0; pairs * n],
            total_steps: 0,
            space,
        }
    }

    pub fn space(&self) -> &StateActionSpace {
        &self.space
    }

    pub fn record_sample(&mut self, s: usize, a: usize, reward: f64, next: usize) -> Result<()> {
        let pair = self.space.pair(s, a)?;
        let n = self.space.n_states();
        if next >= n {
            return Err(Error::InvalidModel(format!("next state {next} out of range")));
        }
        self.counts[pair] += 1;
        self.episode_counts[pair] += 1;
        self.reward_sum[pair] += reward;
        self.reward_sq_sum[pair] += reward * reward;
        self.transition_counts[pair * n + next] += 1;
        self.total_steps += 1;
        Ok(())
    }

    /// Resets the in-episode counts.
    pub fn start_episode(&mut self) {
        self.episode_counts.iter_mut().for_each(|c| *c = 0);
    }

    pub fn count(&self, pair: usize) -> u64 {
        self.counts[pair]
    }

    pub fn episode_count(&self, pair: usize) -> u64 {
        self.episode_counts[pair]
    }

    /// Count at the start of the current episode.
    pub fn count_before_episode(&self, pair: usize) -> u64 {
        self.counts[pair] - self.episode_counts[pair]
    }

    pub fn reward_sum(&self, pair: usize) -> f64 {
        self.reward_sum[pair]
    }

    pub fn transition_counts(&self, pair: usize) -> &[u64] {
        let n = self.space.n_states();
        &self.transition_counts[pair * n..(pair + 1) * n]
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    /// Empirical means; unvisited pairs get a uniform row and zero reward.
    pub fn empirical(&self, r_max: f64) -> EmpiricalModel {
        let n = self.space.n_states();
        let pairs = self.space.n_pairs();
        let mut r_hat = vec![0.0; pairs];
        let mut p_hat = vec![1.0 / n as f64; pairs * n];
        for pair in 0..pairs {
            let c = self.counts[pair];
            if c == 0 {
                continue;
            }
            r_hat[pair] = (self.reward_sum[pair] / c as f64).clamp(0.0, r_max);
            let row = &mut p_hat[pair * n..(pair + 1) * n];
            for (dst, &k) in row.iter_mut().zip(self.transition_counts(pair)) {
                *dst = k as f64 / c as f64;
            }
        }
        EmpiricalModel { r_hat, p_hat }
    }

    fn reward_std(&self, pair: usize) -> f64 {
        let c = self.counts[pair];
        if c == 0 {
            return 0.0;
        }
        let mean = self.reward_sum[pair] / c as f64;
        (self.reward_sq_sum[pair] / c as f64 - mean * mean).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalModel {
    pub r_hat: Vec<f64>,
    /// Row-major `n_pairs x n_states`.
    pub p_hat: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfidenceFamily {
    /// L1 ball around the empirical transition row.
    Hoeffding,
    /// Elementwise box intersected with the simplex.
    Bernstein,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TransitionRadii {
    /// One L1 radius per pair.
    L1(Vec<f64>),
    /// One radius per `(pair, next state)`, row-major.
    Elementwise(Vec<f64>),
}

/// A bounded-parameter MDP: per-pair reward intervals and transition sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSets {
    space: StateActionSpace,
    pub r_hat: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub beta_r: Vec<f64>,
    pub beta_p: TransitionRadii,
    pub delta: f64,
    pub built_at_t: u64,
    pub r_max: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDelta(delta))
    }
}

impl ConfidenceSets {
    /// L1 sets with `L = ln(5 SA T / delta)`.
    pub fn build_hoeffding(stats: &VisitStats, delta: f64, horizon: u64, r_max: f64) -> Result<Self> {
        check_delta(delta)?;
        if horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        let space = stats.space().clone();
        let s = space.n_states() as f64;
        let sa = space.n_pairs() as f64;
        let a = sa / s;
        let log_term = (5.0 * sa * horizon as f64 / delta).ln();
        let emp = stats.empirical(r_max);
        let mut beta_r = Vec::with_capacity(space.n_pairs());
        let mut beta_p = Vec::with_capacity(space.n_pairs());
        for pair in 0..space.n_pairs() {
            let n = stats.count(pair).max(1) as f64;
            beta_r.push((7.0 * s * a * log_term / (2.0 * n)).sqrt().min(r_max));
            beta_p.push((s * (14.0 * a * log_term / n).sqrt()).min(2.0));
        }
        Ok(Self {
            space,
            r_hat: emp.r_hat,
            p_hat: emp.p_hat,
            beta_r,
            beta_p: TransitionRadii::L1(beta_p),
            delta,
            built_at_t: stats.total_steps(),
            r_max,
        })
    }

    /// Elementwise sets with `L = ln(SA / delta)`.
    pub fn build_bernstein(stats: &VisitStats, delta: f64, r_max: f64) -> Result<Self> {
        check_delta(delta)?;
        let space = stats.space().clone();
        let n_states = space.n_states();
        let log_term = (space.n_pairs() as f64 / delta).ln();
        let emp = stats.empirical(r_max);
        let mut beta_r = Vec::with_capacity(space.n_pairs());
        let mut beta_p = Vec::with_capacity(space.n_pairs() * n_states);
        for pair in 0..space.n_pairs() {
            let n = stats.count(pair).max(1) as f64;
            let root = (log_term / n).sqrt();
            let lin = log_term / n;
            beta_r.push((stats.reward_std(pair) * root + r_max * lin).min(r_max));
            for &p in &emp.p_hat[pair * n_states..(pair + 1) * n_states] {
                let sigma = (p * (1.0 - p)).max(0.0).sqrt();
                beta_p.push((sigma * root + lin).min(1.0));
            }
        }
        Ok(Self {
            space,
            r_hat: emp.r_hat,
            p_hat: emp.p_hat,
            beta_r,
            beta_p: TransitionRadii::Elementwise(beta_p),
            delta,
            built_at_t: stats.total_steps(),
            r_max,
        })
    }

    pub fn build(
        family: ConfidenceFamily,
        stats: &VisitStats,
        delta: f64,
        horizon: u64,
        r_max: f64,
    ) -> Result<Self> {
        match family {
            ConfidenceFamily::Hoeffding => Self::build_hoeffding(stats, delta, horizon, r_max),
            ConfidenceFamily::Bernstein => Self::build_bernstein(stats, delta, r_max),
        }
    }

    /// Zero-radius sets centred on the true model.
    pub fn exact(mdp: &TabularMDP, family: ConfidenceFamily) -> Self {
        let space = mdp.space().clone();
        let n = space.n_states();
        let pairs = space.n_pairs();
        let mut p_hat = Vec::with_capacity(pairs * n);
        for pair in 0..pairs {
            p_hat.extend_from_slice(mdp.row(pair));
        }
        let beta_p = match family {
            ConfidenceFamily::Hoeffding => TransitionRadii::L1(vec![0.0; pairs]),
            ConfidenceFamily::Bernstein => TransitionRadii::Elementwise(vec![0.0; pairs * n]),
        };
        Self {
            space,
            r_hat: mdp.mean_rewards().to_vec(),
            p_hat,
            beta_r: vec![0.0; pairs],
            beta_p,
            delta: 0.5,
            built_at_t: 0,
            r_max: mdp.r_max(),
        }
    }

    pub fn space(&self) -> &StateActionSpace {
        &self.space
    }

    pub fn n_states(&self) -> usize {
        self.space.n_states()
    }

    pub fn family(&self) -> ConfidenceFamily {
        match self.beta_p {
            TransitionRadii::L1(_) => ConfidenceFamily::Hoeffding,
            TransitionRadii::Elementwise(_) => ConfidenceFamily::Bernstein,
        }
    }

    pub fn p_hat_row(&self, pair: usize) -> &[f64] {
        let n = self.n_states();
        &self.p_hat[pair * n..(pair + 1) * n]
    }

    /// Optimistic reward, kept inside `[0, r_max]`.
    pub fn reward_upper(&self, pair: usize) -> f64 {
        (self.r_hat[pair] + self.beta_r[pair]).clamp(0.0, self.r_max)
    }

    /// Pessimistic reward, kept inside `[0, r_max]`.
    pub fn reward_lower(&self, pair: usize) -> f64 {
        (self.r_hat[pair] - self.beta_r[pair]).clamp(0.0, self.r_max)
    }

    pub fn contains_model(&self, mdp: &TabularMDP) -> bool {
        if mdp.space() != &self.space {
            return false;
        }
        let n = self.n_states();
        for pair in 0..self.space.n_pairs() {
            if (mdp.reward(pair) - self.r_hat[pair]).abs() > self.beta_r[pair] + MEMBERSHIP_TOL {
                return false;
            }
            let row = mdp.row(pair);
            let hat = self.p_hat_row(pair);
            let inside = match &self.beta_p {
                TransitionRadii::L1(b) => {
                    let d: f64 = row.iter().zip(hat).map(|(p, q)| (p - q).abs()).sum();
                    d <= b[pair] + MEMBERSHIP_TOL
                }
                TransitionRadii::Elementwise(b) => row
                    .iter()
                    .zip(hat)
                    .zip(&b[pair * n..(pair + 1) * n])
                    .all(|((p, q), r)| (p - q).abs() <= r + MEMBERSHIP_TOL),
            };
            if !inside {
                return false;
            }
        }
        true
    }
}
