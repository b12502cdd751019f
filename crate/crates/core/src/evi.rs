//! Extended Bellman operators over a bounded-parameter MDP and extended value
//! iteration with span-based stopping.

use serde::{Deserialize, Serialize};

use crate::confidence::{ConfidenceSets, TransitionRadii};
use crate::error::{Error, Result};
use crate::mdp::{span, StationaryPolicy};

pub const DEFAULT_MAX_ITERS: usize = 1_000_000;

const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Max,
    Min,
}

/// States sorted from most to least preferred for `direction`; ties keep index order.
pub fn preference_order(v: &[f64], direction: Direction) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    match direction {
        Direction::Max => order.sort_by(|&i, &j| v[j].total_cmp(&v[i])),
        Direction::Min => order.sort_by(|&i, &j| v[i].total_cmp(&v[j])),
    }
    order
}

fn l1_into(p_hat: &[f64], beta: f64, order: &[usize], out: &mut [f64]) {
    out.copy_from_slice(p_hat);
    let best = order[0];
    out[best] = (p_hat[best] + beta / 2.0).min(1.0);
    let mut excess = out[best] - p_hat[best];
    for &s in order.iter().rev() {
        if excess <= 0.0 {
            break;
        }
        if s == best {
            continue;
        }
        let cut = out[s].min(excess);
        out[s] -= cut;
        excess -= cut;
    }
}

fn box_into(p_hat: &[f64], beta: &[f64], order: &[usize], out: &mut [f64]) -> Result<()> {
    let mut lower_total = 0.0;
    let mut upper_total = 0.0;
    for ((o, &p), &b) in out.iter_mut().zip(p_hat).zip(beta) {
        *o = (p - b).max(0.0);
        lower_total += *o;
        upper_total += (p + b).min(1.0);
    }
    if lower_total > 1.0 + FEASIBILITY_TOL || upper_total < 1.0 - FEASIBILITY_TOL {
        return Err(Error::InfeasibleBox);
    }
    let mut remaining = 1.0 - lower_total;
    for &s in order {
        if remaining <= 0.0 {
            break;
        }
        let room = (p_hat[s] + beta[s]).min(1.0) - out[s];
        let add = room.min(remaining);
        out[s] += add;
        remaining -= add;
    }
    Ok(())
}

/// Extreme point of `{p in simplex : |p - p_hat|_1 <= beta}` for `p^T v`.
pub fn inner_opt_l1(p_hat: &[f64], beta: f64, v: &[f64], direction: Direction) -> Vec<f64> {
    let order = preference_order(v, direction);
    let mut out = vec![0.0; p_hat.len()];
    l1_into(p_hat, beta, &order, &mut out);
    out
}

/// Extreme point of `{p in simplex : |p(s) - p_hat(s)| <= beta(s)}` for `p^T v`.
pub fn inner_opt_box(p_hat: &[f64], beta: &[f64], v: &[f64], direction: Direction) -> Result<Vec<f64>> {
    let order = preference_order(v, direction);
    let mut out = vec![0.0; p_hat.len()];
    box_into(p_hat, beta, &order, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorMode {
    OptimisticOptimal,
    PessimisticEval,
    OptimisticEval,
}

/// An extended Bellman operator: mode, sets and (for the evaluation modes) a policy.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedOperator<'a> {
    mode: OperatorMode,
    sets: &'a ConfidenceSets,
    policy: Option<&'a StationaryPolicy>,
}

impl<'a> ExtendedOperator<'a> {
    pub fn optimistic_optimal(sets: &'a ConfidenceSets) -> Self {
        Self {
            mode: OperatorMode::OptimisticOptimal,
            sets,
            policy: None,
        }
    }

    pub fn pessimistic_eval(sets: &'a ConfidenceSets, policy: &'a StationaryPolicy) -> Self {
        Self {
            mode: OperatorMode::PessimisticEval,
            sets,
            policy: Some(policy),
        }
    }

    pub fn optimistic_eval(sets: &'a ConfidenceSets, policy: &'a StationaryPolicy) -> Self {
        Self {
            mode: OperatorMode::OptimisticEval,
            sets,
            policy: Some(policy),
        }
    }

    pub fn new(
        mode: OperatorMode,
        sets: &'a ConfidenceSets,
        policy: Option<&'a StationaryPolicy>,
    ) -> Result<Self> {
        let needs_policy = mode != OperatorMode::OptimisticOptimal;
        if needs_policy != policy.is_some() {
            return Err(Error::InvalidPolicy(format!(
                "{mode:?} {} a policy",
                if needs_policy { "requires" } else { "does not take" }
            )));
        }
        if let Some(pi) = policy {
            if pi.n_states() != sets.n_states() {
                return Err(Error::InvalidPolicy("policy and sets disagree on the state count".into()));
            }
        }
        Ok(Self { mode, sets, policy })
    }

    pub fn mode(&self) -> OperatorMode {
        self.mode
    }

    pub fn sets(&self) -> &ConfidenceSets {
        self.sets
    }

    fn direction(&self) -> Direction {
        match self.mode {
            OperatorMode::PessimisticEval => Direction::Min,
            _ => Direction::Max,
        }
    }

    /// `(L v, greedy actions)`; the greedy vector is empty outside the optimal mode.
    pub fn apply_with_greedy(&self, v: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
        let mut out = vec![0.0; v.len()];
        let mut greedy = Vec::new();
        let mut work = Workspace::new(v.len());
        self.apply_into(v, &mut out, &mut greedy, &mut work)?;
        Ok((out, greedy))
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_with_greedy(v)?.0)
    }

    fn pair_value(&self, pair: usize, v: &[f64], work: &mut Workspace) -> Result<f64> {
        let sets = self.sets;
        let n = sets.n_states();
        let hat = sets.p_hat_row(pair);
        match &sets.beta_p {
            TransitionRadii::L1(b) => l1_into(hat, b[pair], &work.order, &mut work.p),
            TransitionRadii::Elementwise(b) => {
                box_into(hat, &b[pair * n..(pair + 1) * n], &work.order, &mut work.p)?
            }
        }
        let cont: f64 = work.p.iter().zip(v).map(|(p, x)| p * x).sum();
        let reward = match self.mode {
            OperatorMode::PessimisticEval => sets.reward_lower(pair),
            _ => sets.reward_upper(pair),
        };
        Ok(reward + cont)
    }

    fn apply_into(
        &self,
        v: &[f64],
        out: &mut [f64],
        greedy: &mut Vec<usize>,
        work: &mut Workspace,
    ) -> Result<()> {
        work.set_order(v, self.direction());
        let space = self.sets.space();
        greedy.clear();
        for s in 0..space.n_states() {
            let pairs = space.pairs_of(s);
            match self.policy {
                None => {
                    let mut best = f64::NEG_INFINITY;
                    let mut arg = 0;
                    for (a, pair) in pairs.enumerate() {
                        let q = self.pair_value(pair, v, work)?;
                        if q > best {
                            best = q;
                            arg = a;
                        }
                    }
                    out[s] = best;
                    greedy.push(arg);
                }
                Some(pi) => {
                    let mut total = 0.0;
                    for (&w, pair) in pi.probs(s).iter().zip(pairs) {
                        if w != 0.0 {
                            total += w * self.pair_value(pair, v, work)?;
                        }
                    }
                    out[s] = total;
                }
            }
        }
        Ok(())
    }
}

struct Workspace {
    order: Vec<usize>,
    p: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            p: vec![0.0; n],
        }
    }

    fn set_order(&mut self, v: &[f64], direction: Direction) {
        self.order = preference_order(v, direction);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EviResult {
    pub gain: f64,
    /// The iterate before the final sweep.
    pub values: Vec<f64>,
    pub iterations: usize,
    pub accuracy: f64,
    pub greedy_policy: Option<StationaryPolicy>,
}

impl EviResult {
    pub fn span(&self) -> f64 {
        span(&self.values)
    }
}

/// Runs `v <- L v` from `v = 0` until `sp(v_{n+1} - v_n) <= epsilon`.
pub fn evi(op: &ExtendedOperator<'_>, epsilon: f64, max_iters: usize) -> Result<EviResult> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!("EVI accuracy must be positive, got {epsilon}")));
    }
    let n = op.sets().n_states();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut greedy = Vec::with_capacity(n);
    let mut work = Workspace::new(n);
    let mut last_span = f64::INFINITY;
    for iteration in 1..=max_iters {
        op.apply_into(&v, &mut next, &mut greedy, &mut work)?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (a, b) in next.iter().zip(&v) {
            let d = a - b;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        last_span = hi - lo;
        if last_span <= epsilon {
            let greedy_policy = match op.mode() {
                OperatorMode::OptimisticOptimal => {
                    Some(StationaryPolicy::deterministic(op.sets().space(), &greedy)?)
                }
                _ => None,
            };
            return Ok(EviResult {
                gain: 0.5 * (hi + lo),
                values: v,
                iterations: iteration,
                accuracy: epsilon,
                greedy_policy,
            });
        }
        let floor = next.iter().copied().fold(f64::INFINITY, f64::min);
        for (dst, x) in v.iter_mut().zip(&next) {
            *dst = x - floor;
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        span: last_span,
        epsilon,
    })
}
