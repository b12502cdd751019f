//! Finite-horizon UCB-VI and its conservative variant.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::confidence::{EmpiricalModel, VisitStats};
use crate::error::{Error, Result};
use crate::mdp::{sample_step, FHPolicy, NoiseModel, StateActionSpace, StationaryPolicy, TabularMDP};
use crate::trace::{EpisodeRecord, Played, RunTrace, StepRecord};

/// Exploration bonus `H sqrt(2S L / N+) + 2 r_max sqrt(L / N+)` with `L = ln(3KSA/delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FHBonus {
    pub horizon: usize,
    pub episodes: usize,
    pub delta: f64,
    pub r_max: f64,
}

impl FHBonus {
    fn log_term(&self, space: &StateActionSpace) -> f64 {
        let sa = space.n_pairs() as f64;
        (3.0 * self.episodes as f64 * sa / self.delta).ln()
    }

    pub fn value(&self, space: &StateActionSpace, count: u64) -> f64 {
        let l = self.log_term(space);
        let n = count.max(1) as f64;
        let s = space.n_states() as f64;
        self.horizon as f64 * (2.0 * s * l / n).sqrt() + 2.0 * self.r_max * (l / n).sqrt()
    }

    pub fn per_pair(&self, stats: &VisitStats) -> Vec<f64> {
        let space = stats.space();
        (0..space.n_pairs()).map(|p| self.value(space, stats.count(p))).collect()
    }
}

fn continuation(p_hat: &[f64], pair: usize, next: &[f64]) -> f64 {
    let n = next.len();
    p_hat[pair * n..(pair + 1) * n].iter().zip(next).map(|(p, v)| p * v).sum()
}

/// Optimistic stage values (index 0 is stage 1) and the greedy policy.
pub fn backward_induction_optimistic(
    space: &StateActionSpace,
    model: &EmpiricalModel,
    bonus: &[f64],
    horizon: usize,
    r_max: f64,
    clip: bool,
) -> Result<(Vec<Vec<f64>>, FHPolicy)> {
    if horizon == 0 {
        return Err(Error::InvalidPolicy("horizon must be at least 1".into()));
    }
    let n = space.n_states();
    let mut values = vec![vec![0.0; n]; horizon];
    let mut rules = Vec::with_capacity(horizon);
    let mut next = vec![0.0; n];
    for h in (1..=horizon).rev() {
        let cap = r_max * (horizon - h + 1) as f64;
        let mut current = vec![0.0; n];
        let mut greedy = vec![0; n];
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for (a, pair) in space.pairs_of(s).enumerate() {
                let q = model.r_hat[pair] + bonus[pair] + continuation(&model.p_hat, pair, &next);
                if q > best {
                    best = q;
                    greedy[s] = a;
                }
            }
            current[s] = if clip { best.clamp(0.0, cap) } else { best };
        }
        rules.push(StationaryPolicy::deterministic(space, &greedy)?);
        values[h - 1] = current.clone();
        next = current;
    }
    rules.reverse();
    Ok((values, FHPolicy::new(rules)?))
}

/// Pessimistic stage values of `policy`; with `clip`, each action value is floored at 0.
pub fn backward_induction_pessimistic(
    space: &StateActionSpace,
    model: &EmpiricalModel,
    bonus: &[f64],
    policy: &FHPolicy,
    clip: bool,
) -> Vec<Vec<f64>> {
    let n = space.n_states();
    let horizon = policy.horizon();
    let mut values = vec![vec![0.0; n]; horizon];
    let mut next = vec![0.0; n];
    for h in (1..=horizon).rev() {
        let rule = policy.rule(h);
        let current: Vec<f64> = (0..n)
            .map(|s| {
                rule.probs(s)
                    .iter()
                    .zip(space.pairs_of(s))
                    .filter(|(&w, _)| w != 0.0)
                    .map(|(&w, pair)| {
                        let q = model.r_hat[pair] - bonus[pair] + continuation(&model.p_hat, pair, &next);
                        w * if clip { q.max(0.0) } else { q }
                    })
                    .sum()
            })
            .collect();
        values[h - 1] = current.clone();
        next = current;
    }
    values
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhEntry {
    pub start_state: usize,
    pub played: Played,
    /// Pessimistic stage-1 value; only used for optimistic episodes.
    pub v_lower: f64,
    pub v_baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FHLedger {
    pub entries: Vec<FhEntry>,
}

impl FHLedger {
    pub fn push(&mut self, entry: FhEntry) {
        self.entries.push(entry);
    }

    pub fn baseline_count(&self) -> usize {
        self.entries.iter().filter(|e| e.played == Played::Baseline).count()
    }
}

/// `lhs - rhs` of the finite-horizon condition for a candidate episode.
pub fn condition_margin_fh(ledger: &FHLedger, candidate_v_lower: f64, s_k1: usize, v_b: &[f64], alpha: f64) -> f64 {
    let mut lhs = candidate_v_lower;
    let mut rhs = v_b[s_k1];
    for e in &ledger.entries {
        lhs += match e.played {
            Played::Optimistic => e.v_lower,
            Played::Baseline => e.v_baseline,
        };
        rhs += e.v_baseline;
    }
    lhs - (1.0 - alpha) * rhs
}

pub fn check_condition_fh(ledger: &FHLedger, candidate_v_lower: f64, s_k1: usize, v_b: &[f64], alpha: f64) -> bool {
    condition_margin_fh(ledger, candidate_v_lower, s_k1, v_b, alpha) >= 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FhRunConfig {
    pub episodes: usize,
    pub horizon: usize,
    pub alpha: f64,
    pub delta: f64,
    pub conservative: bool,
    pub clip_values: bool,
    pub seed: u64,
    pub noise: NoiseModel,
    pub start_state: usize,
}

impl Default for FhRunConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            horizon: 10,
            alpha: 0.05,
            delta: 0.1,
            conservative: true,
            clip_values: true,
            seed: 0,
            noise: NoiseModel::new(0.1),
            start_state: 0,
        }
    }
}

impl FhRunConfig {
    pub fn validate(&self, n_states: usize) -> Result<()> {
        if self.episodes == 0 || self.horizon == 0 {
            return Err(Error::InvalidConfig("episodes and horizon must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidDelta(self.delta));
        }
        if self.start_state >= n_states {
            return Err(Error::InvalidConfig(format!("start state {} out of range", self.start_state)));
        }
        Ok(())
    }
}

/// Runs UCB-VI (`cfg.conservative = false`) or its conservative variant.
///
/// `v_b` holds the baseline's exact stage-1 values. Samples collected while
/// playing the baseline are not added to the history.
pub fn run_cucbvi<R: Rng + ?Sized>(
    mdp: &TabularMDP,
    baseline: &FHPolicy,
    v_b: &[f64],
    cfg: &FhRunConfig,
    rng: &mut R,
) -> Result<RunTrace<FHPolicy>> {
    cfg.validate(mdp.n_states())?;
    if baseline.horizon() != cfg.horizon {
        return Err(Error::InvalidConfig("baseline horizon does not match the run horizon".into()));
    }
    if v_b.len() != mdp.n_states() {
        return Err(Error::InvalidConfig("baseline value table has the wrong length".into()));
    }
    let space = mdp.space().clone();
    let r_max = mdp.r_max();
    let bonus_rule = FHBonus {
        horizon: cfg.horizon,
        episodes: cfg.episodes,
        delta: cfg.delta,
        r_max,
    };
    let mut stats = VisitStats::new(space.clone());
    let mut ledger = FHLedger::default();
    let mut trace = RunTrace::new(cfg.seed, cfg.start_state, baseline.clone());
    trace.steps.reserve(cfg.episodes * cfg.horizon);
    let mut t = 0u64;

    for k in 1..=cfg.episodes {
        let s1 = cfg.start_state;
        let model = stats.empirical(r_max);
        let bonus = bonus_rule.per_pair(&stats);
        let (_, optimistic) =
            backward_induction_optimistic(&space, &model, &bonus, cfg.horizon, r_max, cfg.clip_values)?;
        let mut played = Played::Optimistic;
        let mut condition_value = None;
        let mut v_lower = None;
        if cfg.conservative {
            let lower = backward_induction_pessimistic(&space, &model, &bonus, &optimistic, cfg.clip_values);
            let candidate = lower[0][s1];
            let margin = condition_margin_fh(&ledger, candidate, s1, v_b, cfg.alpha);
            condition_value = Some(margin);
            v_lower = Some(candidate);
            if margin < 0.0 {
                played = Played::Baseline;
            }
            ledger.push(FhEntry {
                start_state: s1,
                played,
                v_lower: candidate,
                v_baseline: v_b[s1],
            });
        }
        let policy = match played {
            Played::Optimistic => optimistic,
            Played::Baseline => baseline.clone(),
        };
        let id = trace.intern(&policy);
        let mut s = s1;
        for h in 1..=cfg.horizon {
            t += 1;
            let a = policy.rule(h).sample(s, rng);
            let (reward, next) = sample_step(mdp, s, a, rng, cfg.noise)?;
            if played == Played::Optimistic {
                stats.record_sample(s, a, reward, next)?;
            }
            trace.steps.push(StepRecord {
                t,
                state: s,
                action: a,
                reward,
                next_state: next,
                episode: k,
                played,
            });
            s = next;
        }
        trace.episodes.push(EpisodeRecord {
            index: k,
            start: k as u64,
            length: cfg.horizon as u64,
            start_state: s1,
            played,
            policy: id,
            condition_value,
            lower_value: v_lower,
            lower_span: None,
            epsilon: 0.0,
        });
    }
    Ok(trace)
}
