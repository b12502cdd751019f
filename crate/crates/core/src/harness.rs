//! Seeded experiment runner with exact regret and constraint-violation oracles.
//!
//! Violations are measured against the true model: at every step (or episode)
//! the expected cumulative reward of the executed policy schedule is compared
//! with `(1 - alpha)` times that of the baseline. The oracle never feeds back
//! into the agents.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceSets;
use crate::config::{Algorithm, Environment, ExperimentConfig};
use crate::envs::{build_gridworld, build_inventory, build_sigma_sigma_policy};
use crate::error::{Error, Result};
use crate::evi::{evi, ExtendedOperator};
use crate::mdp::{
    exact_fh_values, exact_gain_bias, optimal_fh_values, sample_step, FHPolicy, GainBias, NoiseModel,
    StateDistribution, StationaryPolicy, TabularMDP,
};
use crate::trace::{EpisodeRecord, Played, RunTrace, StepRecord};
use crate::ucbvi::{run_cucbvi, FhRunConfig};
use crate::ucrl::{run_cucrl2, AvgRunConfig};

/// Number of buckets the time axis is split into.
pub const BUCKETS: u64 = 100;

/// `t g* - sum_{i<=t} r_i` for every `t`.
pub fn regret_avg<P>(trace: &RunTrace<P>, g_star: f64) -> Vec<f64> {
    let mut total = 0.0;
    trace
        .steps
        .iter()
        .map(|s| {
            total += s.reward;
            s.t as f64 * g_star - total
        })
        .collect()
}

/// Prefix sums of `V*_1(s_k) - V^{pi_k}_1(s_k)`.
pub fn regret_fh(v_star: &[f64], v_played: &[f64]) -> Vec<f64> {
    let mut total = 0.0;
    v_star
        .iter()
        .zip(v_played)
        .map(|(a, b)| {
            total += a - b;
            total
        })
        .collect()
}

fn violation_tolerance(reference: f64) -> f64 {
    1e-9 * reference.abs().max(1.0)
}

/// Per-step violation flags of the conditional conservative condition.
pub fn check_violation_stream_avg(
    trace: &RunTrace<StationaryPolicy>,
    mdp: &TabularMDP,
    baseline: &StationaryPolicy,
    alpha: f64,
) -> Vec<bool> {
    let n = mdp.n_states();
    let (r_b, p_b) = mdp.induced_chain(baseline);
    let chains: Vec<(Vec<f64>, Vec<f64>)> = trace.policies.iter().map(|p| mdp.induced_chain(p)).collect();
    let mut d_alg = StateDistribution::point(n, trace.start_state);
    let mut d_base = d_alg.clone();
    let mut scratch = Vec::with_capacity(n);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let mut flags = Vec::with_capacity(trace.steps.len());
    for ep in &trace.episodes {
        let (r, p) = &chains[ep.policy];
        for _ in 0..ep.length {
            lhs += d_alg.expect(r);
            rhs += d_base.expect(&r_b);
            d_alg.advance(p, &mut scratch);
            d_base.advance(&p_b, &mut scratch);
            let target = (1.0 - alpha) * rhs;
            flags.push(lhs < target - violation_tolerance(rhs));
        }
    }
    flags
}

/// Per-episode violation flags of the finite-horizon condition.
pub fn check_violation_stream_fh(
    trace: &RunTrace<FHPolicy>,
    mdp: &TabularMDP,
    baseline: &FHPolicy,
    alpha: f64,
) -> Vec<bool> {
    let v_b = &exact_fh_values(baseline, mdp)[0];
    let values = played_values_fh(trace, mdp);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    trace
        .episodes
        .iter()
        .zip(values)
        .map(|(ep, v)| {
            lhs += v;
            rhs += v_b[ep.start_state];
            lhs < (1.0 - alpha) * rhs - violation_tolerance(rhs)
        })
        .collect()
}

/// Exact `V^{pi_k}_1(s_{k,1})` of every episode.
pub fn played_values_fh(trace: &RunTrace<FHPolicy>, mdp: &TabularMDP) -> Vec<f64> {
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; trace.policies.len()];
    trace
        .episodes
        .iter()
        .map(|ep| {
            let v = cache[ep.policy].get_or_insert_with(|| exact_fh_values(&trace.policies[ep.policy], mdp)[0].clone());
            v[ep.start_state]
        })
        .collect()
}

/// Optimal gain of a model, through EVI on zero-radius sets and an exact solve
/// of the resulting policy.
pub fn optimal_gain(mdp: &TabularMDP, family: crate::confidence::ConfidenceFamily) -> Result<(f64, StationaryPolicy)> {
    let sets = ConfidenceSets::exact(mdp, family);
    let res = evi(&ExtendedOperator::optimistic_optimal(&sets), 1e-12, crate::evi::DEFAULT_MAX_ITERS)?;
    let pi = res.greedy_policy.expect("optimal mode yields a policy");
    let gb = exact_gain_bias(&pi, mdp)?;
    Ok((gb.gain, pi))
}

/// Time grid `w, 2w, ..., total` with `w = max(1, total / BUCKETS)`.
pub fn time_grid(total: u64) -> Vec<u64> {
    if total == 0 {
        return Vec::new();
    }
    let w = (total / BUCKETS).max(1);
    let mut grid: Vec<u64> = (1..).map(|i| i * w).take_while(|&t| t <= total).collect();
    if grid.last() != Some(&total) {
        grid.push(total);
    }
    grid
}

/// Per-run series sampled on the time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub regret: Vec<f64>,
    /// Violating steps (or episodes) inside each bucket.
    pub bucket_violations: Vec<u64>,
    pub bucket_sizes: Vec<u64>,
    /// Baseline episodes started up to each grid point.
    pub conservative_episodes: Vec<u64>,
    /// Steps (or episodes) spent on the baseline up to each grid point.
    pub conservative_steps: Vec<u64>,
    pub total_violations: u64,
    pub first_violation: Option<u64>,
    pub episodes: usize,
}

fn summarize(
    seed: u64,
    grid: &[u64],
    regret: &[f64],
    flags: &[bool],
    episodes: &[EpisodeRecord],
    unit_of: impl Fn(&EpisodeRecord) -> (u64, u64),
) -> RunSummary {
    let mut bucket_violations = Vec::with_capacity(grid.len());
    let mut bucket_sizes = Vec::with_capacity(grid.len());
    let mut prev = 0u64;
    for &g in grid {
        let slice = &flags[prev as usize..g as usize];
        bucket_violations.push(slice.iter().filter(|&&f| f).count() as u64);
        bucket_sizes.push(g - prev);
        prev = g;
    }
    let mut conservative_episodes = Vec::with_capacity(grid.len());
    let mut conservative_steps = Vec::with_capacity(grid.len());
    for &g in grid {
        let (mut eps, mut steps) = (0u64, 0u64);
        for e in episodes.iter().filter(|e| e.played == Played::Baseline) {
            let (start, len) = unit_of(e);
            if start <= g {
                eps += 1;
                steps += len.min(g + 1 - start);
            }
        }
        conservative_episodes.push(eps);
        conservative_steps.push(steps);
    }
    RunSummary {
        seed,
        regret: grid.iter().map(|&g| regret[g as usize - 1]).collect(),
        bucket_violations,
        bucket_sizes,
        conservative_episodes,
        conservative_steps,
        total_violations: flags.iter().filter(|&&f| f).count() as u64,
        first_violation: flags.iter().position(|&f| f).map(|i| i as u64 + 1),
        episodes: episodes.len(),
    }
}

/// Exact quantities shared by every run of an average-reward experiment.
#[derive(Debug, Clone)]
pub struct AvgProblem {
    pub mdp: TabularMDP,
    pub baseline: StationaryPolicy,
    pub baseline_gb: GainBias,
    pub g_star: f64,
}

impl AvgProblem {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let Environment::Inventory(spec) = &cfg.environment else {
            return Err(Error::InvalidConfig("average-reward runs need the inventory environment".into()));
        };
        let (mdp, _) = build_inventory(spec)?;
        let baseline = build_sigma_sigma_policy(cfg.baseline.threshold, cfg.baseline.target, spec)?;
        let baseline_gb = exact_gain_bias(&baseline, &mdp)?;
        let (g_star, _) = optimal_gain(&mdp, cfg.confidence)?;
        Ok(Self {
            mdp,
            baseline,
            baseline_gb,
            g_star,
        })
    }
}

/// Exact quantities shared by every run of a finite-horizon experiment.
#[derive(Debug, Clone)]
pub struct FhProblem {
    pub mdp: TabularMDP,
    pub baseline: FHPolicy,
    pub v_baseline: Vec<f64>,
    pub v_star: Vec<f64>,
}

impl FhProblem {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let Environment::Gridworld(spec) = &cfg.environment else {
            return Err(Error::InvalidConfig("finite-horizon runs need the gridworld environment".into()));
        };
        let (mdp, baseline, _) = build_gridworld(spec)?;
        let v_baseline = exact_fh_values(&baseline, &mdp)[0].clone();
        let v_star = optimal_fh_values(&mdp, spec.horizon)?.0[0].clone();
        Ok(Self {
            mdp,
            baseline,
            v_baseline,
            v_star,
        })
    }

    pub fn horizon(&self) -> usize {
        self.baseline.horizon()
    }
}

pub fn avg_run_config(cfg: &ExperimentConfig, seed: u64) -> AvgRunConfig {
    AvgRunConfig {
        horizon: cfg.steps,
        alpha: cfg.alpha,
        delta: cfg.delta,
        family: cfg.confidence,
        conservative: cfg.algorithm.is_conservative(),
        reevaluate_past: cfg.reevaluate_past,
        baseline_known: cfg.baseline_known,
        max_evi_iters: cfg.max_evi_iters,
        seed,
        noise: NoiseModel::new(cfg.noise),
        start_state: cfg.start_state(),
        condition_form: cfg.condition_form,
    }
}

pub fn fh_run_config(cfg: &ExperimentConfig, problem: &FhProblem, seed: u64) -> FhRunConfig {
    FhRunConfig {
        episodes: cfg.episodes,
        horizon: problem.horizon(),
        alpha: cfg.alpha,
        delta: cfg.delta,
        conservative: cfg.algorithm.is_conservative(),
        clip_values: cfg.clip_values,
        seed,
        noise: NoiseModel::new(cfg.noise),
        start_state: cfg.start_state(),
    }
}

/// Plays a fixed stationary policy for `horizon` steps as a single episode.
pub fn run_fixed_avg(
    mdp: &TabularMDP,
    policy: &StationaryPolicy,
    horizon: u64,
    start_state: usize,
    noise: NoiseModel,
    seed: u64,
) -> Result<RunTrace<StationaryPolicy>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = RunTrace::new(seed, start_state, policy.clone());
    let mut s = start_state;
    for t in 1..=horizon {
        let a = policy.sample(s, &mut rng);
        let (reward, next) = sample_step(mdp, s, a, &mut rng, noise)?;
        trace.steps.push(StepRecord {
            t,
            state: s,
            action: a,
            reward,
            next_state: next,
            episode: 1,
            played: Played::Baseline,
        });
        s = next;
    }
    trace.episodes.push(EpisodeRecord {
        index: 1,
        start: 1,
        length: horizon,
        start_state,
        played: Played::Baseline,
        policy: 0,
        condition_value: None,
        lower_value: None,
        lower_span: None,
        epsilon: 0.0,
    });
    Ok(trace)
}

/// Plays a fixed finite-horizon policy in every episode.
pub fn run_fixed_fh(
    mdp: &TabularMDP,
    policy: &FHPolicy,
    cfg: &FhRunConfig,
) -> Result<RunTrace<FHPolicy>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = RunTrace::new(cfg.seed, cfg.start_state, policy.clone());
    let mut t = 0;
    for k in 1..=cfg.episodes {
        let mut s = cfg.start_state;
        for h in 1..=policy.horizon() {
            t += 1;
            let a = policy.rule(h).sample(s, &mut rng);
            let (reward, next) = sample_step(mdp, s, a, &mut rng, cfg.noise)?;
            trace.steps.push(StepRecord {
                t,
                state: s,
                action: a,
                reward,
                next_state: next,
                episode: k,
                played: Played::Baseline,
            });
            s = next;
        }
        trace.episodes.push(EpisodeRecord {
            index: k,
            start: k as u64,
            length: policy.horizon() as u64,
            start_state: cfg.start_state,
            played: Played::Baseline,
            policy: 0,
            condition_value: None,
            lower_value: None,
            lower_span: None,
            epsilon: 0.0,
        });
    }
    Ok(trace)
}

/// One seeded average-reward run and its trace.
pub fn run_avg_seed(
    cfg: &ExperimentConfig,
    problem: &AvgProblem,
    seed: u64,
) -> Result<RunTrace<StationaryPolicy>> {
    let run_cfg = avg_run_config(cfg, seed);
    match cfg.algorithm {
        Algorithm::BaselineOnly => run_fixed_avg(
            &problem.mdp,
            &problem.baseline,
            run_cfg.horizon,
            run_cfg.start_state,
            run_cfg.noise,
            seed,
        ),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            run_cucrl2(&problem.mdp, &problem.baseline, Some(&problem.baseline_gb), &run_cfg, &mut rng)
        }
    }
}

/// One seeded finite-horizon run and its trace.
pub fn run_fh_seed(cfg: &ExperimentConfig, problem: &FhProblem, seed: u64) -> Result<RunTrace<FHPolicy>> {
    let run_cfg = fh_run_config(cfg, problem, seed);
    match cfg.algorithm {
        Algorithm::BaselineOnly => run_fixed_fh(&problem.mdp, &problem.baseline, &run_cfg),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            run_cucbvi(&problem.mdp, &problem.baseline, &problem.v_baseline, &run_cfg, &mut rng)
        }
    }
}

pub fn summarize_avg(
    trace: &RunTrace<StationaryPolicy>,
    problem: &AvgProblem,
    alpha: f64,
    grid: &[u64],
) -> RunSummary {
    let regret = regret_avg(trace, problem.g_star);
    let flags = check_violation_stream_avg(trace, &problem.mdp, &problem.baseline, alpha);
    summarize(trace.seed, grid, &regret, &flags, &trace.episodes, |e| (e.start, e.length))
}

pub fn summarize_fh(trace: &RunTrace<FHPolicy>, problem: &FhProblem, alpha: f64, grid: &[u64]) -> RunSummary {
    let played = played_values_fh(trace, &problem.mdp);
    let v_star: Vec<f64> = trace.episodes.iter().map(|e| problem.v_star[e.start_state]).collect();
    let regret = regret_fh(&v_star, &played);
    let flags = check_violation_stream_fh(trace, &problem.mdp, &problem.baseline, alpha);
    summarize(trace.seed, grid, &regret, &flags, &trace.episodes, |e| (e.start, 1))
}

/// Mean and standard deviation over runs, per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    /// Time steps (average reward) or episodes (finite horizon).
    pub grid: Vec<u64>,
    pub regret_mean: Vec<f64>,
    pub regret_std: Vec<f64>,
    /// Violating fraction of all (run, step) pairs in each bucket.
    pub violation_fraction: Vec<f64>,
    /// Fraction of runs with at least one violation in each bucket.
    pub violating_run_fraction: Vec<f64>,
    pub conservative_episodes_mean: Vec<f64>,
    pub conservative_steps_mean: Vec<f64>,
    pub runs: usize,
    pub seeds: Vec<u64>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates summaries over a common grid, in ascending seed order.
pub fn aggregate(grid: Vec<u64>, mut runs: Vec<RunSummary>) -> Result<AggregateResult> {
    if runs.is_empty() {
        return Err(Error::InvalidConfig("no successful runs to aggregate".into()));
    }
    runs.sort_by_key(|r| r.seed);
    let m = grid.len();
    let count = runs.len() as f64;
    let mut out = AggregateResult {
        regret_mean: Vec::with_capacity(m),
        regret_std: Vec::with_capacity(m),
        violation_fraction: Vec::with_capacity(m),
        violating_run_fraction: Vec::with_capacity(m),
        conservative_episodes_mean: Vec::with_capacity(m),
        conservative_steps_mean: Vec::with_capacity(m),
        runs: runs.len(),
        seeds: runs.iter().map(|r| r.seed).collect(),
        grid,
    };
    for i in 0..m {
        let (mean, std) = mean_std(runs.iter().map(|r| r.regret[i]));
        out.regret_mean.push(mean);
        out.regret_std.push(std);
        let violating: u64 = runs.iter().map(|r| r.bucket_violations[i]).sum();
        let size: u64 = runs.iter().map(|r| r.bucket_sizes[i]).sum();
        out.violation_fraction.push(violating as f64 / size as f64);
        let any = runs.iter().filter(|r| r.bucket_violations[i] > 0).count() as f64;
        out.violating_run_fraction.push(any / count);
        out.conservative_episodes_mean
            .push(mean_std(runs.iter().map(|r| r.conservative_episodes[i] as f64)).0);
        out.conservative_steps_mean
            .push(mean_std(runs.iter().map(|r| r.conservative_steps[i] as f64)).0);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub aggregate: AggregateResult,
    pub runs: Vec<RunSummary>,
    /// Seeds whose run failed, with the error message.
    pub failed: Vec<(u64, String)>,
}

/// Runs `cfg.runs` seeds (`cfg.seed + i`) in parallel and aggregates them.
///
/// The result does not depend on scheduling: summaries are reduced in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.runs as u64).map(|i| cfg.seed + i).collect();
    let (grid, results): (Vec<u64>, Vec<(u64, Result<RunSummary>)>) = match cfg.environment {
        Environment::Inventory(_) => {
            let problem = AvgProblem::from_config(cfg)?;
            let grid = time_grid(cfg.steps);
            let results = seeds
                .par_iter()
                .map(|&seed| {
                    let summary =
                        run_avg_seed(cfg, &problem, seed).map(|t| summarize_avg(&t, &problem, cfg.alpha, &grid));
                    (seed, summary)
                })
                .collect();
            (grid, results)
        }
        Environment::Gridworld(_) => {
            let problem = FhProblem::from_config(cfg)?;
            let grid = time_grid(cfg.episodes as u64);
            let results = seeds
                .par_iter()
                .map(|&seed| {
                    let summary =
                        run_fh_seed(cfg, &problem, seed).map(|t| summarize_fh(&t, &problem, cfg.alpha, &grid));
                    (seed, summary)
                })
                .collect();
            (grid, results)
        }
    };
    let mut runs = Vec::new();
    let mut failed = Vec::new();
    let mut first_error = None;
    for (seed, r) in results {
        match r {
            Ok(s) => runs.push(s),
            Err(e) => {
                failed.push((seed, e.to_string()));
                first_error.get_or_insert(e);
            }
        }
    }
    if runs.is_empty() {
        return Err(first_error.expect("at least one run was attempted"));
    }
    let aggregate = aggregate(grid, runs.clone())?;
    Ok(ExperimentOutcome {
        aggregate,
        runs,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::InventorySpec;
    use crate::mdp::expected_cumulative_reward;

    fn inventory() -> (TabularMDP, StationaryPolicy) {
        let spec = InventorySpec::default();
        let (mdp, _) = build_inventory(&spec).unwrap();
        let pi = build_sigma_sigma_policy(4, 4, &spec).unwrap();
        (mdp, pi)
    }

    fn synthetic_trace(rewards: &[f64]) -> RunTrace<u8> {
        let mut trace = RunTrace::new(0, 0, 0u8);
        for (i, &r) in rewards.iter().enumerate() {
            trace.steps.push(StepRecord {
                t: i as u64 + 1,
                state: 0,
                action: 0,
                reward: r,
                next_state: 0,
                episode: 1,
                played: Played::Optimistic,
            });
        }
        trace
    }

    #[test]
    fn regret_examples() {
        let flat = regret_avg(&synthetic_trace(&[0.4; 10]), 0.4);
        assert!(flat.iter().all(|r| r.abs() < 1e-12));
        let zero = regret_avg(&synthetic_trace(&[0.0; 5]), 0.3);
        for (i, r) in zero.iter().enumerate() {
            assert!((r - 0.3 * (i + 1) as f64).abs() < 1e-12);
        }
        let fh = regret_fh(&[2.0, 2.0, 2.0], &[1.5, 2.0, 1.0]);
        assert_eq!(fh, vec![0.5, 0.5, 1.5]);
    }

    #[test]
    fn baseline_schedule_never_violates() {
        let (mdp, pi) = inventory();
        let trace = run_fixed_avg(&mdp, &pi, 2000, 0, NoiseModel::NONE, 1).unwrap();
        for alpha in [0.0, 0.05, 1.0] {
            let flags = check_violation_stream_avg(&trace, &mdp, &pi, alpha);
            assert_eq!(flags.len(), 2000);
            assert!(flags.iter().all(|&f| !f));
        }
    }

    fn worst_policy(mdp: &TabularMDP) -> StationaryPolicy {
        // Never ordering drains the stock and earns nothing afterwards.
        StationaryPolicy::deterministic(mdp.space(), &vec![0; mdp.n_states()]).unwrap()
    }

    #[test]
    fn incremental_oracle_matches_brute_force() {
        let (mdp, pi_b) = inventory();
        let worst = worst_policy(&mdp);
        let mut trace = RunTrace::new(0, 2, pi_b.clone());
        let w = trace.intern(&worst);
        let b = 0;
        let schedule = [(w, 7u64), (b, 3), (w, 20), (b, 15), (w, 40)];
        let mut start = 1;
        for (i, &(p, len)) in schedule.iter().enumerate() {
            trace.episodes.push(EpisodeRecord {
                index: i + 1,
                start,
                length: len,
                start_state: 0,
                played: if p == b { Played::Baseline } else { Played::Optimistic },
                policy: p,
                condition_value: None,
                lower_value: None,
                lower_span: None,
                epsilon: 0.0,
            });
            start += len;
        }
        let alpha = 0.1;
        let flags = check_violation_stream_avg(&trace, &mdp, &pi_b, alpha);
        let total: u64 = schedule.iter().map(|s| s.1).sum();
        assert_eq!(flags.len() as u64, total);
        for t in 1..=total {
            let mut seg = Vec::new();
            let mut left = t;
            for &(p, len) in &schedule {
                if left == 0 {
                    break;
                }
                let d = len.min(left);
                seg.push((&trace.policies[p], d as usize));
                left -= d;
            }
            let lhs = expected_cumulative_reward(2, &seg, &mdp);
            let rhs = expected_cumulative_reward(2, &[(&pi_b, t as usize)], &mdp);
            let brute = lhs < (1.0 - alpha) * rhs - 1e-9 * rhs.max(1.0);
            assert_eq!(flags[t as usize - 1], brute, "t = {t}");
        }
        assert!(flags.iter().any(|&f| f));
    }

    #[test]
    fn fh_oracle_examples() {
        let problem = FhProblem::from_config(
            &ExperimentConfig::parse("algorithm = \"cucbvi\"\n[environment]\nkind = \"gridworld\"\n").unwrap(),
        )
        .unwrap();
        let cfg = FhRunConfig {
            episodes: 20,
            horizon: problem.horizon(),
            start_state: 8,
            ..FhRunConfig::default()
        };
        let trace = run_fixed_fh(&problem.mdp, &problem.baseline, &cfg).unwrap();
        let flags = check_violation_stream_fh(&trace, &problem.mdp, &problem.baseline, 0.05);
        assert!(flags.iter().all(|&f| !f));
        let (_, star) = optimal_fh_values(&problem.mdp, problem.horizon()).unwrap();
        let trace = run_fixed_fh(&problem.mdp, &star, &cfg).unwrap();
        let flags = check_violation_stream_fh(&trace, &problem.mdp, &problem.baseline, 0.0);
        assert!(flags.iter().all(|&f| !f));
    }

    #[test]
    fn fh_oracle_mixed_ledger() {
        let problem = FhProblem::from_config(
            &ExperimentConfig::parse("algorithm = \"cucbvi\"\n[environment]\nkind = \"gridworld\"\n").unwrap(),
        )
        .unwrap();
        let h = problem.horizon();
        let stay = FHPolicy::stationary(
            StationaryPolicy::deterministic(problem.mdp.space(), &[3; 12]).unwrap(),
            h,
        )
        .unwrap();
        let mut trace = RunTrace::new(0, 8, problem.baseline.clone());
        let id = trace.intern(&stay);
        let pattern = [id, 0, 0, id, 0];
        for (k, &p) in pattern.iter().enumerate() {
            trace.episodes.push(EpisodeRecord {
                index: k + 1,
                start: k as u64 + 1,
                length: h as u64,
                start_state: 8,
                played: Played::Optimistic,
                policy: p,
                condition_value: None,
                lower_value: None,
                lower_span: None,
                epsilon: 0.0,
            });
        }
        let v_stay = exact_fh_values(&stay, &problem.mdp)[0][8];
        let v_b = problem.v_baseline[8];
        let alpha = 0.3;
        let flags = check_violation_stream_fh(&trace, &problem.mdp, &problem.baseline, alpha);
        let mut lhs = 0.0;
        for (k, &p) in pattern.iter().enumerate() {
            lhs += if p == id { v_stay } else { v_b };
            let rhs = (k + 1) as f64 * v_b;
            assert_eq!(flags[k], lhs < (1.0 - alpha) * rhs - 1e-9 * rhs.max(1.0));
        }
    }

    #[test]
    fn time_grid_shapes() {
        assert_eq!(time_grid(0), Vec::<u64>::new());
        assert_eq!(time_grid(5), vec![1, 2, 3, 4, 5]);
        let g = time_grid(70_000);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 700);
        assert_eq!(*g.last().unwrap(), 70_000);
        assert_eq!(time_grid(250).last(), Some(&250));
    }

    fn small_config(algorithm: &str, runs: usize) -> ExperimentConfig {
        ExperimentConfig::parse(&format!(
            "algorithm = \"{algorithm}\"\nsteps = 1500\nruns = {runs}\nseed = 40\n[environment]\nkind = \"inventory\"\n"
        ))
        .unwrap()
    }

    #[test]
    fn single_run_has_zero_std() {
        let out = run_experiment(&small_config("cucrl2", 1)).unwrap();
        assert_eq!(out.aggregate.runs, 1);
        assert!(out.aggregate.regret_std.iter().all(|&s| s == 0.0));
        assert!(out.failed.is_empty());
    }

    #[test]
    fn experiment_is_deterministic() {
        let cfg = small_config("ucrl2", 3);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.aggregate.seeds, vec![40, 41, 42]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| run_experiment(&cfg)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn conservative_counts_are_monotone() {
        let out = run_experiment(&small_config("cucrl2", 2)).unwrap();
        for run in &out.runs {
            assert!(run.conservative_episodes.windows(2).all(|w| w[0] <= w[1]));
            assert!(run.conservative_steps.windows(2).all(|w| w[0] <= w[1]));
            assert!(*run.conservative_steps.last().unwrap() <= 1500);
        }
    }
}
