//! Finite MDPs with state-dependent action sets, stationary and finite-horizon
//! policies, and exact evaluation.
//!
//! Legal `(state, action)` pairs are flattened into a contiguous index space by
//! [`StateActionSpace`]; every per-pair table in the crate (rewards, transition
//! rows, visit counts, radii) is indexed by that pair id.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on probability vectors summing to one.
pub const PROB_TOL: f64 = 1e-12;

/// Flattened table of legal state-action pairs.
///
/// Actions of state `s` are numbered `0..n_actions(s)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateActionSpace {
    offsets: Vec<usize>,
}

impl StateActionSpace {
    pub fn new(actions_per_state: &[usize]) -> Result<Self> {
        if actions_per_state.is_empty() {
            return Err(Error::InvalidModel("at least one state is required".into()));
        }
        let mut offsets = Vec::with_capacity(actions_per_state.len() + 1);
        offsets.push(0);
        for (s, &n) in actions_per_state.iter().enumerate() {
            if n == 0 {
                return Err(Error::InvalidModel(format!("state {s} has no action")));
            }
            offsets.push(offsets[s] + n);
        }
        Ok(Self { offsets })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Result<Self> {
        Self::new(&vec![n_actions; n_states])
    }

    pub fn n_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_pairs(&self) -> usize {
        self.offsets[self.n_states()]
    }

    pub fn n_actions(&self, s: usize) -> usize {
        self.offsets[s + 1] - self.offsets[s]
    }

    pub fn max_actions(&self) -> usize {
        (0..self.n_states()).map(|s| self.n_actions(s)).max().unwrap_or(0)
    }

    /// Pair ids of state `s`, in action order.
    pub fn pairs_of(&self, s: usize) -> Range<usize> {
        self.offsets[s]..self.offsets[s + 1]
    }

    pub fn is_legal(&self, s: usize, a: usize) -> bool {
        s < self.n_states() && a < self.n_actions(s)
    }

    pub fn pair(&self, s: usize, a: usize) -> Result<usize> {
        if self.is_legal(s, a) {
            Ok(self.offsets[s] + a)
        } else {
            Err(Error::IllegalAction { state: s, action: a })
        }
    }

    /// Inverse of [`pair`](Self::pair).
    pub fn state_action(&self, pair: usize) -> (usize, usize) {
        let s = self.offsets.partition_point(|&o| o <= pair) - 1;
        (s, pair - self.offsets[s])
    }
}

fn check_distribution(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidModel(format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidModel(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// Finite MDP with mean rewards in `[0, r_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMDP {
    space: StateActionSpace,
    mean_reward: Vec<f64>,
    /// Row-major `n_pairs x n_states`.
    transition: Vec<f64>,
    reward_support: (f64, f64),
    r_max: f64,
}

impl TabularMDP {
    /// `transition` holds one row of length `n_states` per pair, concatenated.
    pub fn new(
        space: StateActionSpace,
        mean_reward: Vec<f64>,
        transition: Vec<f64>,
        r_max: f64,
    ) -> Result<Self> {
        Self::with_support(space, mean_reward, transition, r_max, (0.0, r_max))
    }

    pub fn with_support(
        space: StateActionSpace,
        mean_reward: Vec<f64>,
        transition: Vec<f64>,
        r_max: f64,
        reward_support: (f64, f64),
    ) -> Result<Self> {
        let n = space.n_states();
        let pairs = space.n_pairs();
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidModel(format!("r_max must be positive, got {r_max}")));
        }
        if mean_reward.len() != pairs {
            return Err(Error::InvalidModel(format!(
                "expected {pairs} mean rewards, got {}",
                mean_reward.len()
            )));
        }
        if transition.len() != pairs * n {
            return Err(Error::InvalidModel(format!(
                "expected {} transition entries, got {}",
                pairs * n,
                transition.len()
            )));
        }
        for (p, &r) in mean_reward.iter().enumerate() {
            if !(0.0..=r_max).contains(&r) {
                let (s, a) = space.state_action(p);
                return Err(Error::InvalidModel(format!(
                    "mean reward {r} of ({s},{a}) is outside [0, {r_max}]"
                )));
            }
        }
        for p in 0..pairs {
            let (s, a) = space.state_action(p);
            check_distribution(&transition[p * n..(p + 1) * n], &format!("transition row ({s},{a})"))?;
        }
        Ok(Self {
            space,
            mean_reward,
            transition,
            reward_support,
            r_max,
        })
    }

    pub fn space(&self) -> &StateActionSpace {
        &self.space
    }

    pub fn n_states(&self) -> usize {
        self.space.n_states()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn reward_support(&self) -> (f64, f64) {
        self.reward_support
    }

    pub fn mean_rewards(&self) -> &[f64] {
        &self.mean_reward
    }

    pub fn reward(&self, pair: usize) -> f64 {
        self.mean_reward[pair]
    }

    pub fn row(&self, pair: usize) -> &[f64] {
        let n = self.n_states();
        &self.transition[pair * n..(pair + 1) * n]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> Result<&[f64]> {
        Ok(self.row(self.space.pair(s, a)?))
    }

    /// Reward vector and row-major transition matrix of the chain induced by `policy`.
    pub fn induced_chain(&self, policy: &StationaryPolicy) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_states();
        let mut r = vec![0.0; n];
        let mut p = vec![0.0; n * n];
        for s in 0..n {
            for (a, &w) in policy.probs(s).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let pair = self.space.pairs_of(s).start + a;
                r[s] += w * self.mean_reward[pair];
                for (dst, &q) in p[s * n..(s + 1) * n].iter_mut().zip(self.row(pair)) {
                    *dst += w * q;
                }
            }
        }
        (r, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Deterministic,
    Randomized,
}

/// Stationary Markov policy: one action distribution per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPolicy {
    kind: PolicyKind,
    rows: Vec<Vec<f64>>,
}

impl StationaryPolicy {
    pub fn deterministic(space: &StateActionSpace, actions: &[usize]) -> Result<Self> {
        if actions.len() != space.n_states() {
            return Err(Error::InvalidPolicy(format!(
                "expected {} actions, got {}",
                space.n_states(),
                actions.len()
            )));
        }
        let rows = actions
            .iter()
            .enumerate()
            .map(|(s, &a)| {
                if !space.is_legal(s, a) {
                    return Err(Error::IllegalAction { state: s, action: a });
                }
                let mut row = vec![0.0; space.n_actions(s)];
                row[a] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind: PolicyKind::Deterministic,
            rows,
        })
    }

    pub fn randomized(space: &StateActionSpace, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != space.n_states() {
            return Err(Error::InvalidPolicy(format!(
                "expected {} rows, got {}",
                space.n_states(),
                rows.len()
            )));
        }
        for (s, row) in rows.iter().enumerate() {
            if row.len() != space.n_actions(s) {
                return Err(Error::InvalidPolicy(format!(
                    "row {s} has {} entries but the state has {} actions",
                    row.len(),
                    space.n_actions(s)
                )));
            }
            check_distribution(row, &format!("policy row {s}"))
                .map_err(|e| Error::InvalidPolicy(e.to_string()))?;
        }
        let one_hot = rows
            .iter()
            .all(|row| row.iter().filter(|&&w| w != 0.0).count() == 1);
        let kind = if one_hot {
            PolicyKind::Deterministic
        } else {
            PolicyKind::Randomized
        };
        Ok(Self { kind, rows })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn probs(&self, s: usize) -> &[f64] {
        &self.rows[s]
    }

    /// The action of a deterministic row.
    pub fn action(&self, s: usize) -> Option<usize> {
        let row = &self.rows[s];
        let mut nonzero = row.iter().enumerate().filter(|(_, &w)| w != 0.0);
        match (nonzero.next(), nonzero.next()) {
            (Some((a, _)), None) => Some(a),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        if let Some(a) = self.action(s) {
            return a;
        }
        sample_index(&self.rows[s], rng)
    }
}

/// Inverse-CDF draw from a probability vector.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Finite-horizon Markov policy `(d_1, ..., d_H)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FHPolicy {
    rules: Vec<StationaryPolicy>,
}

impl FHPolicy {
    pub fn new(rules: Vec<StationaryPolicy>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::InvalidPolicy("horizon must be at least 1".into()));
        }
        let n = rules[0].n_states();
        if rules.iter().any(|r| r.n_states() != n) {
            return Err(Error::InvalidPolicy("decision rules disagree on the state count".into()));
        }
        Ok(Self { rules })
    }

    /// The same rule at every stage.
    pub fn stationary(rule: StationaryPolicy, horizon: usize) -> Result<Self> {
        Self::new(vec![rule; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.rules.len()
    }

    /// Decision rule of stage `h`, 1-based.
    pub fn rule(&self, h: usize) -> &StationaryPolicy {
        &self.rules[h - 1]
    }

    pub fn rules(&self) -> &[StationaryPolicy] {
        &self.rules
    }
}

/// Gain, bias and bias span of a stationary policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainBias {
    pub gain: f64,
    pub bias: Vec<f64>,
    pub span: f64,
}

/// Distribution over states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution(Vec<f64>);

impl StateDistribution {
    pub fn point(n_states: usize, s: usize) -> Self {
        let mut d = vec![0.0; n_states];
        d[s] = 1.0;
        Self(d)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    /// `d^T r`.
    pub fn expect(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// One step of `d <- d P` for a row-major chain matrix.
    pub fn advance(&mut self, chain: &[f64], scratch: &mut Vec<f64>) {
        let n = self.0.len();
        scratch.clear();
        scratch.resize(n, 0.0);
        for (i, &w) in self.0.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (dst, &q) in scratch.iter_mut().zip(&chain[i * n..(i + 1) * n]) {
                *dst += w * q;
            }
        }
        std::mem::swap(&mut self.0, scratch);
    }
}

pub fn span(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if v.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Relative pivot threshold below which the evaluation system is declared singular.
const SINGULAR_TOL: f64 = 1e-11;

fn solve_dense(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let scale = a.amax().max(1.0);
    let lu = a.lu();
    let u = lu.u();
    let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if !(min_pivot > SINGULAR_TOL * scale) {
        return Err(Error::SingularChain);
    }
    lu.solve(&b).ok_or(Error::SingularChain)
}

/// Stationary distribution of a unichain row-major transition matrix.
pub fn stationary_distribution(chain: &[f64], n: usize) -> Result<Vec<f64>> {
    // mu^T (I - P) = 0 with the last equation replaced by sum(mu) = 1.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            a[(j, i)] = id - chain[i * n + j];
        }
    }
    for i in 0..n {
        a[(n - 1, i)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let mu = solve_dense(a, b)?;
    Ok(mu.iter().copied().collect())
}

/// Exact gain and bias of a unichain stationary policy.
///
/// Solves `g e + h = r_pi + P_pi h` with `h(0) = 0`, then re-centres the bias
/// so that its stationary mean is zero.
pub fn exact_gain_bias(policy: &StationaryPolicy, mdp: &TabularMDP) -> Result<GainBias> {
    let n = mdp.n_states();
    if policy.n_states() != n {
        return Err(Error::InvalidPolicy("policy and MDP disagree on the state count".into()));
    }
    let (r, p) = mdp.induced_chain(policy);
    gain_bias_of_chain(&r, &p)
}

pub(crate) fn gain_bias_of_chain(r: &[f64], p: &[f64]) -> Result<GainBias> {
    let n = r.len();
    // Unknowns: [g, h_0, ..., h_{n-1}].
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut b = DVector::<f64>::zeros(n + 1);
    for s in 0..n {
        a[(s, 0)] = 1.0;
        for j in 0..n {
            let id = if s == j { 1.0 } else { 0.0 };
            a[(s, 1 + j)] = id - p[s * n + j];
        }
        b[s] = r[s];
    }
    a[(n, 1)] = 1.0;
    let x = solve_dense(a, b)?;
    let gain = x[0];
    let mut bias: Vec<f64> = x.iter().skip(1).copied().collect();
    let mu = stationary_distribution(p, n)?;
    let centre: f64 = mu.iter().zip(&bias).map(|(m, h)| m * h).sum();
    bias.iter_mut().for_each(|h| *h -= centre);
    let span = span(&bias);
    Ok(GainBias { gain, bias, span })
}

/// `max_s |g + h(s) - r_pi(s) - (P_pi h)(s)|`.
pub fn gain_bias_residual(gb: &GainBias, policy: &StationaryPolicy, mdp: &TabularMDP) -> f64 {
    let n = mdp.n_states();
    let (r, p) = mdp.induced_chain(policy);
    (0..n)
        .map(|s| {
            let ph: f64 = (0..n).map(|j| p[s * n + j] * gb.bias[j]).sum();
            (gb.gain + gb.bias[s] - r[s] - ph).abs()
        })
        .fold(0.0, f64::max)
}

fn expected_stage_value(mdp: &TabularMDP, rule: &StationaryPolicy, s: usize, next: &[f64]) -> f64 {
    let space = mdp.space();
    rule.probs(s)
        .iter()
        .zip(space.pairs_of(s))
        .filter(|(&w, _)| w != 0.0)
        .map(|(&w, pair)| {
            let cont: f64 = mdp.row(pair).iter().zip(next).map(|(q, v)| q * v).sum();
            w * (mdp.reward(pair) + cont)
        })
        .sum()
}

/// Stage values `V_1, ..., V_H` of a finite-horizon policy; index 0 is stage 1.
pub fn exact_fh_values(policy: &FHPolicy, mdp: &TabularMDP) -> Vec<Vec<f64>> {
    let n = mdp.n_states();
    let horizon = policy.horizon();
    let mut values = vec![vec![0.0; n]; horizon];
    let mut next = vec![0.0; n];
    for h in (1..=horizon).rev() {
        let rule = policy.rule(h);
        let current: Vec<f64> = (0..n)
            .map(|s| expected_stage_value(mdp, rule, s, &next))
            .collect();
        values[h - 1] = current.clone();
        next = current;
    }
    values
}

/// Optimal stage values and a greedy deterministic policy (lowest action id on ties).
pub fn optimal_fh_values(mdp: &TabularMDP, horizon: usize) -> Result<(Vec<Vec<f64>>, FHPolicy)> {
    if horizon == 0 {
        return Err(Error::InvalidPolicy("horizon must be at least 1".into()));
    }
    let n = mdp.n_states();
    let space = mdp.space();
    let mut values = vec![vec![0.0; n]; horizon];
    let mut rules = Vec::with_capacity(horizon);
    let mut next = vec![0.0; n];
    for h in (1..=horizon).rev() {
        let mut current = vec![0.0; n];
        let mut greedy = vec![0; n];
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for (a, pair) in space.pairs_of(s).enumerate() {
                let q = mdp.reward(pair)
                    + mdp.row(pair).iter().zip(&next).map(|(p, v)| p * v).sum::<f64>();
                if q > best {
                    best = q;
                    greedy[s] = a;
                }
            }
            current[s] = best;
        }
        rules.push(StationaryPolicy::deterministic(space, &greedy)?);
        values[h - 1] = current.clone();
        next = current;
    }
    rules.reverse();
    Ok((values, FHPolicy::new(rules)?))
}

/// Exact `E[sum_{i<=t} r_i | s_1 = start, mu_t]` for a piecewise-stationary
/// schedule, by forward propagation of the state distribution.
///
/// Segments with zero duration contribute nothing.
pub fn expected_cumulative_reward(
    start: usize,
    schedule: &[(&StationaryPolicy, usize)],
    mdp: &TabularMDP,
) -> f64 {
    let n = mdp.n_states();
    let mut dist = StateDistribution::point(n, start);
    let mut scratch = Vec::with_capacity(n);
    let mut total = 0.0;
    for &(policy, duration) in schedule {
        let (r, p) = mdp.induced_chain(policy);
        for _ in 0..duration {
            total += dist.expect(&r);
            dist.advance(&p, &mut scratch);
        }
    }
    total
}

/// Multiplicative Gaussian reward noise, `r = clip(mean * (1 + c * eta), 0, r_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub coefficient: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel { coefficient: 0.0 };

    pub fn new(coefficient: f64) -> Self {
        Self { coefficient }
    }

    pub fn sample<R: Rng + ?Sized>(&self, mean: f64, r_max: f64, rng: &mut R) -> f64 {
        if self.coefficient == 0.0 {
            return mean;
        }
        let eta: f64 = rng.sample(StandardNormal);
        (mean * (1.0 + self.coefficient * eta)).clamp(0.0, r_max)
    }
}

/// Draws a reward and a next state for a legal `(s, a)`.
pub fn sample_step<R: Rng + ?Sized>(
    mdp: &TabularMDP,
    s: usize,
    a: usize,
    rng: &mut R,
    noise: NoiseModel,
) -> Result<(f64, usize)> {
    let pair = mdp.space().pair(s, a)?;
    let next = sample_index(mdp.row(pair), rng);
    let reward = noise.sample(mdp.reward(pair), mdp.r_max(), rng);
    Ok((reward, next))
}
