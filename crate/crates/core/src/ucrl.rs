//! UCRL2 and its conservative variant for average reward.
//!
//! Each episode builds confidence sets from all samples so far, plans an
//! optimistic policy with EVI and, in conservative mode, evaluates that policy
//! pessimistically. The policy is played only if the conservative condition
//! holds; otherwise the baseline is played for the episode. Episodes end when
//! the in-episode count of the current pair exceeds its prior count, or when
//! the episode would become longer than the previous one plus one step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::confidence::{ConfidenceFamily, ConfidenceSets, VisitStats};
use crate::error::{Error, Result};
use crate::evi::{evi, ExtendedOperator, DEFAULT_MAX_ITERS};
use crate::mdp::{sample_step, GainBias, NoiseModel, StationaryPolicy, TabularMDP};
use crate::trace::{EpisodeRecord, Played, RunTrace, StepRecord};

/// Smallest planning accuracy ever requested from EVI.
pub const EPSILON_FLOOR: f64 = 1e-9;

/// Which algebraic form of the conservative condition the agent checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionForm {
    /// Past optimistic episodes are charged against `(1 - alpha)` times the
    /// baseline gain, baseline episodes keep their `alpha` share, and every
    /// span (including the candidate's) is subtracted.
    #[default]
    Budgeted,
    /// Every past episode is charged against the full baseline gain; the
    /// candidate's span is not subtracted.
    MainText,
    /// As [`MainText`](Self::MainText), minus the candidate's span.
    MainTextWithSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub length: u64,
    pub played: Played,
    pub policy: usize,
    pub g_minus: f64,
    pub sp_minus: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeLedger {
    pub entries: Vec<LedgerEntry>,
}

impl EpisodeLedger {
    pub fn push(&mut self, entry: LedgerEntry) {
        self.entries.push(entry);
    }

    pub fn optimistic(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.played == Played::Optimistic)
            .map(|(i, _)| i)
    }

    pub fn baseline(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.played == Played::Baseline)
            .map(|(i, _)| i)
    }
}

/// Pessimistic estimates of the policy proposed for the next episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub g_minus: f64,
    pub sp_minus: f64,
    pub epsilon: f64,
}

/// Upper bound on the baseline's cumulative reward: `t * gain + span`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineBound {
    pub gain: f64,
    pub span: f64,
}

/// Left-hand side of the conservative condition; the check passes when it is `>= 0`.
pub fn condition_value(
    ledger: &EpisodeLedger,
    bound: BaselineBound,
    alpha: f64,
    candidate: Candidate,
    t_prev: u64,
    form: ConditionForm,
) -> f64 {
    let charge = match form {
        ConditionForm::Budgeted => (1.0 - alpha) * bound.gain,
        ConditionForm::MainText | ConditionForm::MainTextWithSpan => bound.gain,
    };
    let past: f64 = ledger
        .entries
        .iter()
        .map(|e| e.length as f64 * (e.g_minus - e.epsilon - charge) - e.sp_minus)
        .sum();
    let x = candidate.g_minus - candidate.epsilon - (1.0 - alpha) * bound.gain;
    let future = if x <= 0.0 { (t_prev + 1) as f64 * x } else { 0.0 };
    let baseline_span = match form {
        ConditionForm::Budgeted => (1.0 - alpha) * bound.span,
        _ => bound.span,
    };
    let candidate_span = match form {
        ConditionForm::MainText => 0.0,
        _ => candidate.sp_minus,
    };
    past - baseline_span - candidate_span + future
}

pub fn check_condition_avg(
    ledger: &EpisodeLedger,
    bound: BaselineBound,
    alpha: f64,
    candidate: Candidate,
    t_prev: u64,
    form: ConditionForm,
) -> bool {
    condition_value(ledger, bound, alpha, candidate, t_prev, form) >= 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgRunConfig {
    pub horizon: u64,
    pub alpha: f64,
    pub delta: f64,
    pub family: ConfidenceFamily,
    pub conservative: bool,
    pub reevaluate_past: bool,
    pub baseline_known: bool,
    pub max_evi_iters: usize,
    pub seed: u64,
    pub noise: NoiseModel,
    pub start_state: usize,
    pub condition_form: ConditionForm,
}

impl Default for AvgRunConfig {
    fn default() -> Self {
        Self {
            horizon: 10_000,
            alpha: 0.05,
            delta: 0.1,
            family: ConfidenceFamily::Bernstein,
            conservative: true,
            reevaluate_past: false,
            baseline_known: true,
            max_evi_iters: DEFAULT_MAX_ITERS,
            seed: 0,
            noise: NoiseModel::new(0.1),
            start_state: 0,
            condition_form: ConditionForm::Budgeted,
        }
    }
}

impl AvgRunConfig {
    pub fn validate(&self, n_states: usize) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
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
        if self.max_evi_iters == 0 {
            return Err(Error::InvalidConfig("max_evi_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Planning accuracy for an episode starting at time `t_k`.
pub fn planning_accuracy(r_max: f64, t_k: u64) -> f64 {
    (r_max / (t_k as f64).sqrt()).max(EPSILON_FLOOR)
}

/// Gain and span estimates of the baseline from one set of confidence sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineEstimate {
    pub lower_gain: f64,
    pub lower_span: f64,
    pub upper_gain: f64,
    pub upper_span: f64,
    pub epsilon: f64,
}

impl BaselineEstimate {
    /// Optimistic cumulative-reward bound used in place of the true baseline values.
    pub fn bound(&self) -> BaselineBound {
        BaselineBound {
            gain: self.upper_gain + self.epsilon,
            span: self.upper_span,
        }
    }
}

/// Pessimistic and optimistic EVI evaluations of the baseline.
pub fn estimate_baseline_unknown(
    sets: &ConfidenceSets,
    baseline: &StationaryPolicy,
    epsilon: f64,
    max_iters: usize,
) -> Result<BaselineEstimate> {
    let lower = evi(&ExtendedOperator::pessimistic_eval(sets, baseline), epsilon, max_iters)?;
    let upper = evi(&ExtendedOperator::optimistic_eval(sets, baseline), epsilon, max_iters)?;
    Ok(BaselineEstimate {
        lower_gain: lower.gain,
        lower_span: lower.span(),
        upper_gain: upper.gain,
        upper_span: upper.span(),
        epsilon,
    })
}

/// Runs UCRL2 (`cfg.conservative = false`) or its conservative variant.
///
/// `baseline_gb` must be supplied when `cfg.baseline_known` is set.
pub fn run_cucrl2<R: Rng + ?Sized>(
    mdp: &TabularMDP,
    baseline: &StationaryPolicy,
    baseline_gb: Option<&GainBias>,
    cfg: &AvgRunConfig,
    rng: &mut R,
) -> Result<RunTrace<StationaryPolicy>> {
    cfg.validate(mdp.n_states())?;
    let known = match (cfg.conservative && cfg.baseline_known, baseline_gb) {
        (true, Some(gb)) => Some(BaselineBound {
            gain: gb.gain,
            span: gb.span,
        }),
        (true, None) => {
            return Err(Error::InvalidConfig("known baseline requires its gain and bias".into()))
        }
        (false, _) => None,
    };
    let r_max = mdp.r_max();
    let space = mdp.space().clone();
    let mut stats = VisitStats::new(space.clone());
    let mut trace = RunTrace::new(cfg.seed, cfg.start_state, baseline.clone());
    trace.steps.reserve(cfg.horizon as usize);
    let mut ledger = EpisodeLedger::default();
    let mut t: u64 = 1;
    let mut s = cfg.start_state;
    let mut t_prev: u64 = 0;
    let mut k = 0;

    while t <= cfg.horizon {
        k += 1;
        let t_k = t;
        stats.start_episode();
        let sets = ConfidenceSets::build(cfg.family, &stats, cfg.delta, cfg.horizon, r_max)?;
        let eps = planning_accuracy(r_max, t_k);
        let plan = evi(&ExtendedOperator::optimistic_optimal(&sets), eps, cfg.max_evi_iters)?;
        let optimistic = plan.greedy_policy.expect("optimal mode yields a policy");

        let mut record = EpisodeRecord {
            index: k,
            start: t_k,
            length: 0,
            start_state: s,
            played: Played::Optimistic,
            policy: 0,
            condition_value: None,
            lower_value: None,
            lower_span: None,
            epsilon: eps,
        };
        let mut entry = None;

        if cfg.conservative {
            let pess = evi(
                &ExtendedOperator::pessimistic_eval(&sets, &optimistic),
                eps,
                cfg.max_evi_iters,
            )?;
            let candidate = Candidate {
                g_minus: pess.gain,
                sp_minus: pess.span(),
                epsilon: eps,
            };
            let estimate = match known {
                Some(_) => None,
                None => Some(estimate_baseline_unknown(&sets, baseline, eps, cfg.max_evi_iters)?),
            };
            let bound = known.unwrap_or_else(|| estimate.expect("estimated above").bound());
            if cfg.reevaluate_past {
                reevaluate(&mut ledger, &trace.policies, &sets, eps, cfg.max_evi_iters)?;
            }
            let value = condition_value(&ledger, bound, cfg.alpha, candidate, t_prev, cfg.condition_form);
            record.condition_value = Some(value);
            if value >= 0.0 {
                record.lower_value = Some(candidate.g_minus);
                record.lower_span = Some(candidate.sp_minus);
                entry = Some((Played::Optimistic, candidate.g_minus, candidate.sp_minus, eps));
            } else {
                record.played = Played::Baseline;
                let (g, sp, e) = match estimate {
                    None => (bound.gain, bound.span, 0.0),
                    Some(est) => (est.lower_gain, est.lower_span, eps),
                };
                record.lower_value = Some(g);
                record.lower_span = Some(sp);
                record.epsilon = e;
                entry = Some((Played::Baseline, g, sp, e));
            }
        }

        let policy = match record.played {
            Played::Optimistic => optimistic,
            Played::Baseline => baseline.clone(),
        };
        record.policy = trace.intern(&policy);

        let limit = t_k + t_prev;
        while t <= cfg.horizon && t <= limit {
            let a = policy.sample(s, rng);
            let pair = space.pair(s, a)?;
            if stats.episode_count(pair) > stats.count_before_episode(pair).max(1) {
                break;
            }
            let (reward, next) = sample_step(mdp, s, a, rng, cfg.noise)?;
            stats.record_sample(s, a, reward, next)?;
            trace.steps.push(StepRecord {
                t,
                state: s,
                action: a,
                reward,
                next_state: next,
                episode: k,
                played: record.played,
            });
            s = next;
            t += 1;
        }
        record.length = t - t_k;
        t_prev = record.length;
        if let Some((played, g_minus, sp_minus, epsilon)) = entry {
            ledger.push(LedgerEntry {
                length: record.length,
                played,
                policy: record.policy,
                g_minus,
                sp_minus,
                epsilon,
            });
        }
        trace.episodes.push(record);
    }
    Ok(trace)
}

/// Re-evaluates every past optimistic policy on the current sets.
fn reevaluate(
    ledger: &mut EpisodeLedger,
    policies: &[StationaryPolicy],
    sets: &ConfidenceSets,
    eps: f64,
    max_iters: usize,
) -> Result<()> {
    let mut cache: Vec<(usize, f64, f64)> = Vec::new();
    for entry in ledger.entries.iter_mut().filter(|e| e.played == Played::Optimistic) {
        let (g, sp) = match cache.iter().find(|c| c.0 == entry.policy) {
            Some(&(_, g, sp)) => (g, sp),
            None => {
                let res = evi(
                    &ExtendedOperator::pessimistic_eval(sets, &policies[entry.policy]),
                    eps,
                    max_iters,
                )?;
                cache.push((entry.policy, res.gain, res.span()));
                (res.gain, res.span())
            }
        };
        entry.g_minus = g;
        entry.sp_minus = sp;
        entry.epsilon = eps;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{exact_gain_bias, StateActionSpace};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn entry(length: u64, played: Played, g: f64, sp: f64, eps: f64) -> LedgerEntry {
        LedgerEntry {
            length,
            played,
            policy: 0,
            g_minus: g,
            sp_minus: sp,
            epsilon: eps,
        }
    }

    #[test]
    fn first_episode_with_zero_span_baseline_passes() {
        let ledger = EpisodeLedger::default();
        let bound = BaselineBound { gain: 0.4, span: 0.0 };
        let cand = Candidate {
            g_minus: 0.5,
            sp_minus: 0.0,
            epsilon: 0.01,
        };
        for form in [ConditionForm::Budgeted, ConditionForm::MainText, ConditionForm::MainTextWithSpan] {
            assert_eq!(condition_value(&ledger, bound, 0.1, cand, 0, form), 0.0);
            assert!(check_condition_avg(&ledger, bound, 0.1, cand, 0, form));
        }
    }

    #[test]
    fn first_episode_with_positive_baseline_span_fails() {
        let ledger = EpisodeLedger::default();
        let bound = BaselineBound { gain: 0.4, span: 0.3 };
        let cand = Candidate {
            g_minus: 0.5,
            sp_minus: 0.2,
            epsilon: 0.01,
        };
        for form in [ConditionForm::Budgeted, ConditionForm::MainText, ConditionForm::MainTextWithSpan] {
            assert!(!check_condition_avg(&ledger, bound, 0.1, cand, 0, form));
        }
        let v = condition_value(&ledger, bound, 0.1, cand, 0, ConditionForm::MainTextWithSpan);
        assert!((v - (-0.3 - 0.2)).abs() < 1e-15);
    }

    #[test]
    fn one_past_episode_by_hand() {
        let mut ledger = EpisodeLedger::default();
        ledger.push(entry(5, Played::Optimistic, 0.5, 0.2, 0.01));
        let bound = BaselineBound { gain: 0.4, span: 0.3 };
        let cand = Candidate {
            g_minus: 0.3,
            sp_minus: 0.2,
            epsilon: 0.01,
        };
        // 5*(0.49-0.40) - 0.2 - 0.3 + 6*(0.29-0.36) = -0.47, minus 0.2 for the candidate span.
        let v = condition_value(&ledger, bound, 0.1, cand, 5, ConditionForm::MainTextWithSpan);
        assert!((v - (-0.67)).abs() < 1e-12);
        let v = condition_value(&ledger, bound, 0.1, cand, 5, ConditionForm::MainText);
        assert!((v - (-0.47)).abs() < 1e-12);
        // 5*(0.49-0.36) - 0.2 - 0.27 - 0.2 - 0.42 = -0.44.
        let v = condition_value(&ledger, bound, 0.1, cand, 5, ConditionForm::Budgeted);
        assert!((v - (-0.44)).abs() < 1e-12);
    }

    #[test]
    fn baseline_history_builds_budget_only_in_budgeted_form() {
        let mut ledger = EpisodeLedger::default();
        for len in 1..=50 {
            ledger.push(entry(len, Played::Baseline, 0.5, 0.3, 0.0));
        }
        let bound = BaselineBound { gain: 0.5, span: 0.3 };
        let cand = Candidate {
            g_minus: 0.2,
            sp_minus: 0.3,
            epsilon: 0.01,
        };
        assert!(check_condition_avg(&ledger, bound, 0.1, cand, 50, ConditionForm::Budgeted));
        assert!(!check_condition_avg(&ledger, bound, 0.1, cand, 50, ConditionForm::MainText));
    }

    #[test]
    fn zero_baseline_gain_evaluates() {
        let ledger = EpisodeLedger::default();
        let bound = BaselineBound { gain: 0.0, span: 0.0 };
        let cand = Candidate {
            g_minus: 0.0,
            sp_minus: 0.0,
            epsilon: 0.0,
        };
        assert!(condition_value(&ledger, bound, 0.0, cand, 0, ConditionForm::Budgeted).is_finite());
    }

    fn ring(n: usize) -> TabularMDP {
        // Two actions: stay (reward 0.2 * s / n) or move right with probability 0.8.
        let space = StateActionSpace::uniform(n, 2).unwrap();
        let mut rewards = Vec::new();
        let mut rows = Vec::new();
        for s in 0..n {
            let mut stay = vec![0.0; n];
            stay[s] = 0.9;
            stay[(s + 1) % n] += 0.1;
            rows.extend(stay);
            rewards.push(0.2 * s as f64 / n as f64);
            let mut mv = vec![0.0; n];
            mv[(s + 1) % n] = 0.8;
            mv[s] += 0.2;
            rows.extend(mv);
            rewards.push(if s == n - 1 { 1.0 } else { 0.1 });
        }
        TabularMDP::new(space, rewards, rows, 1.0).unwrap()
    }

    fn run(mdp: &TabularMDP, cfg: &AvgRunConfig) -> RunTrace<StationaryPolicy> {
        let baseline = StationaryPolicy::deterministic(mdp.space(), &vec![0; mdp.n_states()]).unwrap();
        let gb = exact_gain_bias(&baseline, mdp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        run_cucrl2(mdp, &baseline, Some(&gb), cfg, &mut rng).unwrap()
    }

    #[test]
    fn episode_rules_hold() {
        let mdp = ring(4);
        let cfg = AvgRunConfig {
            horizon: 3000,
            seed: 4,
            ..AvgRunConfig::default()
        };
        let trace = run(&mdp, &cfg);
        assert_eq!(trace.steps.len(), 3000);
        let mut prev = 0;
        for (i, ep) in trace.episodes.iter().enumerate() {
            assert_eq!(ep.index, i + 1);
            assert!(ep.length >= 1);
            assert!(ep.length <= prev + 1, "episode {} too long", ep.index);
            prev = ep.length;
        }
        for (i, st) in trace.steps.iter().enumerate() {
            assert_eq!(st.t, i as u64 + 1);
        }
        assert!(trace.steps.windows(2).all(|w| w[0].episode <= w[1].episode));
    }

    #[test]
    fn episode_end_is_explained() {
        let mdp = ring(3);
        let cfg = AvgRunConfig {
            horizon: 2000,
            seed: 9,
            conservative: false,
            ..AvgRunConfig::default()
        };
        let trace = run(&mdp, &cfg);
        let mut counts = vec![0u64; mdp.space().n_pairs()];
        let mut prev_len = 0;
        let episodes = &trace.episodes;
        for (i, ep) in episodes.iter().enumerate() {
            let before = counts.clone();
            let begin = (ep.start - 1) as usize;
            let end = begin + ep.length as usize;
            let mut nu = vec![0u64; counts.len()];
            for st in &trace.steps[begin..end] {
                let p = mdp.space().pair(st.state, st.action).unwrap();
                nu[p] += 1;
                counts[p] += 1;
            }
            if i + 1 < episodes.len() {
                let cap_fired = ep.length == prev_len + 1;
                let next_state = trace.steps[end].state;
                let pi = &trace.policies[ep.policy];
                let a = pi.action(next_state).unwrap();
                let p = mdp.space().pair(next_state, a).unwrap();
                let doubled = nu[p] > before[p].max(1);
                assert!(cap_fired || doubled, "episode {} ended without cause", ep.index);
            }
            prev_len = ep.length;
        }
    }

    #[test]
    fn single_state_has_zero_regret() {
        let space = StateActionSpace::uniform(1, 1).unwrap();
        let mdp = TabularMDP::new(space.clone(), vec![0.6], vec![1.0], 1.0).unwrap();
        let baseline = StationaryPolicy::deterministic(&space, &[0]).unwrap();
        let gb = exact_gain_bias(&baseline, &mdp).unwrap();
        let cfg = AvgRunConfig {
            horizon: 5000,
            noise: NoiseModel::NONE,
            ..AvgRunConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trace = run_cucrl2(&mdp, &baseline, Some(&gb), &cfg, &mut rng).unwrap();
        assert!(trace.steps.iter().all(|s| s.reward == 0.6));
        let last = trace.episodes.last().unwrap();
        assert_eq!(last.played, Played::Optimistic);
    }

    #[test]
    fn alpha_one_flat_baseline_accepts_nonnegative_candidates() {
        let bound = BaselineBound { gain: 0.7, span: 0.0 };
        let cand = Candidate {
            g_minus: 0.05,
            sp_minus: 0.0,
            epsilon: 0.01,
        };
        let mut ledger = EpisodeLedger::default();
        for form in [ConditionForm::Budgeted, ConditionForm::MainTextWithSpan] {
            assert!(check_condition_avg(&ledger, bound, 1.0, cand, 0, form));
        }
        ledger.push(entry(3, Played::Optimistic, 0.1, 0.0, 0.01));
        assert!(check_condition_avg(&ledger, bound, 1.0, cand, 3, ConditionForm::Budgeted));
    }

    #[test]
    fn conservative_run_partitions_episodes() {
        let mdp = ring(4);
        let cfg = AvgRunConfig {
            horizon: 4000,
            seed: 12,
            ..AvgRunConfig::default()
        };
        let trace = run(&mdp, &cfg);
        let opt = trace.episodes.iter().filter(|e| e.played == Played::Optimistic).count();
        assert_eq!(opt + trace.baseline_episodes(), trace.episodes.len());
        assert!(trace.episodes.iter().all(|e| e.condition_value.is_some()));
        assert!(trace
            .episodes
            .iter()
            .all(|e| (e.played == Played::Optimistic) == (e.condition_value.unwrap() >= 0.0)));
    }

    #[test]
    fn unknown_baseline_and_reevaluation_runs_complete() {
        let mdp = ring(3);
        for (known, reeval) in [(false, false), (true, true), (false, true)] {
            let cfg = AvgRunConfig {
                horizon: 1500,
                baseline_known: known,
                reevaluate_past: reeval,
                seed: 3,
                ..AvgRunConfig::default()
            };
            let trace = run(&mdp, &cfg);
            assert_eq!(trace.steps.len(), 1500);
        }
    }

    #[test]
    fn zero_radius_baseline_estimate_matches_truth() {
        let mdp = ring(4);
        let sets = ConfidenceSets::exact(&mdp, ConfidenceFamily::Bernstein);
        let baseline = StationaryPolicy::deterministic(mdp.space(), &[1, 0, 1, 0]).unwrap();
        let gb = exact_gain_bias(&baseline, &mdp).unwrap();
        let eps = 1e-7;
        let est = estimate_baseline_unknown(&sets, &baseline, eps, DEFAULT_MAX_ITERS).unwrap();
        assert!((est.lower_gain - gb.gain).abs() <= eps);
        assert!((est.upper_gain - gb.gain).abs() <= eps);
        assert!((est.bound().gain - gb.gain).abs() <= 2.0 * eps);
        assert!((est.upper_span - gb.span).abs() <= 1e-5);
    }

    #[test]
    fn missing_known_baseline_is_rejected() {
        let mdp = ring(3);
        let baseline = StationaryPolicy::deterministic(mdp.space(), &[0, 0, 0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = run_cucrl2(&mdp, &baseline, None, &AvgRunConfig::default(), &mut rng).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
        let bad = AvgRunConfig {
            alpha: 1.5,
            ..AvgRunConfig::default()
        };
        assert!(bad.validate(3).is_err());
    }
}
