//! Benchmark environments: stochastic inventory control and a small
//! deterministic gridworld, both with rewards rescaled to `[0, 1]`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{FHPolicy, StateActionSpace, StationaryPolicy, TabularMDP};

/// `original = offset + scale * normalized`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub offset: f64,
    pub scale: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap { offset: 0.0, scale: 1.0 };

    pub fn to_original(&self, x: f64) -> f64 {
        self.offset + self.scale * x
    }

    /// Spans and other differences only scale.
    pub fn span_to_original(&self, x: f64) -> f64 {
        self.scale * x
    }
}

/// An MDP with rewards in arbitrary units, before rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMdp {
    pub space: StateActionSpace,
    pub mean_reward: Vec<f64>,
    pub transition: Vec<f64>,
    /// Smallest and largest reward any single transition can produce.
    pub support: (f64, f64),
}

pub fn normalize_rewards(raw: RawMdp) -> Result<(TabularMDP, AffineMap)> {
    let (lo, hi) = raw.support;
    if !(hi > lo) {
        return Err(Error::DegenerateRange(lo));
    }
    let scale = hi - lo;
    let rewards = raw
        .mean_reward
        .iter()
        .map(|r| ((r - lo) / scale).clamp(0.0, 1.0))
        .collect();
    let mdp = TabularMDP::new(raw.space, rewards, raw.transition, 1.0)?;
    Ok((mdp, AffineMap { offset: lo, scale }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Demand {
    /// Uniform over `0..=capacity`.
    Uniform,
    /// Uniform over `0..capacity`.
    UniformBelowCapacity,
    /// Probabilities of demand `0, 1, ...`.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InventorySpec {
    pub capacity: usize,
    pub fixed_cost: f64,
    pub unit_cost: f64,
    pub holding_cost: f64,
    pub price: f64,
    pub demand: Demand,
}

impl Default for InventorySpec {
    fn default() -> Self {
        Self {
            capacity: 6,
            fixed_cost: 4.0,
            unit_cost: 2.0,
            holding_cost: 1.0,
            price: 8.0,
            demand: Demand::Uniform,
        }
    }
}

impl InventorySpec {
    pub fn demand_probabilities(&self) -> Result<Vec<f64>> {
        let probs = match &self.demand {
            Demand::Uniform => vec![1.0 / (self.capacity + 1) as f64; self.capacity + 1],
            Demand::UniformBelowCapacity => {
                if self.capacity == 0 {
                    return Err(Error::InvalidConfig("demand below capacity needs capacity >= 1".into()));
                }
                vec![1.0 / self.capacity as f64; self.capacity]
            }
            Demand::Custom(p) => p.clone(),
        };
        let total: f64 = probs.iter().sum();
        if probs.is_empty() || probs.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig("demand must be a probability vector".into()));
        }
        Ok(probs)
    }

    fn order_cost(&self, a: usize) -> f64 {
        if a == 0 {
            0.0
        } else {
            self.fixed_cost + self.unit_cost * a as f64
        }
    }

    /// Reward of ordering `a` in stock `s` when demand is `d`.
    pub fn reward(&self, s: usize, a: usize, d: usize) -> f64 {
        let stocked = s + a;
        let sold = stocked.min(d);
        -self.order_cost(a) - self.holding_cost * stocked as f64 + self.price * sold as f64
    }
}

/// Inventory MDP in original reward units; stock levels `0..=M`, orders `0..=M-s`.
pub fn build_inventory_raw(spec: &InventorySpec) -> Result<RawMdp> {
    let m = spec.capacity;
    let demand = spec.demand_probabilities()?;
    let n = m + 1;
    let actions: Vec<usize> = (0..n).map(|s| m - s + 1).collect();
    let space = StateActionSpace::new(&actions)?;
    let mut mean_reward = Vec::with_capacity(space.n_pairs());
    let mut transition = vec![0.0; space.n_pairs() * n];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in 0..n {
        for a in 0..=(m - s) {
            let pair = space.pair(s, a)?;
            let mut mean = 0.0;
            for (d, &p) in demand.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let r = spec.reward(s, a, d);
                lo = lo.min(r);
                hi = hi.max(r);
                mean += p * r;
                let next = (s + a).saturating_sub(d);
                transition[pair * n + next] += p;
            }
            mean_reward.push(mean);
        }
    }
    Ok(RawMdp {
        space,
        mean_reward,
        transition,
        support: (lo, hi),
    })
}

/// Normalized inventory MDP and the map back to original units.
///
/// A model whose rewards are all equal (for instance `capacity = 0`) keeps its
/// rewards at 0 with a map that only shifts.
pub fn build_inventory(spec: &InventorySpec) -> Result<(TabularMDP, AffineMap)> {
    let raw = build_inventory_raw(spec)?;
    let (lo, hi) = raw.support;
    if hi > lo {
        return normalize_rewards(raw);
    }
    let n_pairs = raw.space.n_pairs();
    let mdp = TabularMDP::new(raw.space, vec![0.0; n_pairs], raw.transition, 1.0)?;
    Ok((mdp, AffineMap { offset: lo, scale: 1.0 }))
}

/// Order up to `target` whenever stock is below `threshold`.
pub fn build_sigma_sigma_policy(threshold: usize, target: usize, spec: &InventorySpec) -> Result<StationaryPolicy> {
    let m = spec.capacity;
    if threshold > m || target > m {
        return Err(Error::InvalidPolicy(format!(
            "threshold {threshold} and target {target} must not exceed capacity {m}"
        )));
    }
    let space = StateActionSpace::new(&(0..=m).map(|s| m - s + 1).collect::<Vec<_>>())?;
    let actions: Vec<usize> = (0..=m)
        .map(|s| if s < threshold { target.saturating_sub(s).min(m - s) } else { 0 })
        .collect();
    StationaryPolicy::deterministic(&space, &actions)
}

pub const UP: usize = 0;
pub const RIGHT: usize = 1;
pub const DOWN: usize = 2;
pub const LEFT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridworldSpec {
    pub rows: usize,
    pub cols: usize,
    /// `(row, col)`, row 0 on top.
    pub start: (usize, usize),
    pub goal: (usize, usize),
    pub pit: (usize, usize),
    pub step_reward: f64,
    pub goal_reward: f64,
    pub pit_reward: f64,
    pub horizon: usize,
}

impl Default for GridworldSpec {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 4,
            start: (2, 0),
            goal: (0, 2),
            pit: (0, 1),
            step_reward: -2.0,
            goal_reward: 10.0,
            pit_reward: -20.0,
            horizon: 10,
        }
    }
}

impl GridworldSpec {
    pub fn n_states(&self) -> usize {
        self.rows * self.cols
    }

    pub fn state(&self, cell: (usize, usize)) -> usize {
        cell.0 * self.cols + cell.1
    }

    pub fn cell(&self, s: usize) -> (usize, usize) {
        (s / self.cols, s % self.cols)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.horizon == 0 {
            return Err(Error::InvalidConfig("gridworld needs positive rows, cols and horizon".into()));
        }
        for (name, (r, c)) in [("start", self.start), ("goal", self.goal), ("pit", self.pit)] {
            if r >= self.rows || c >= self.cols {
                return Err(Error::InvalidConfig(format!("{name} cell ({r},{c}) is outside the grid")));
            }
        }
        if self.start == self.goal || self.goal == self.pit || self.start == self.pit {
            return Err(Error::InvalidConfig("start, goal and pit must be distinct cells".into()));
        }
        Ok(())
    }

    /// Target of a move, or `None` if it would leave the grid.
    pub fn step_target(&self, s: usize, a: usize) -> Option<usize> {
        let (r, c) = self.cell(s);
        let (r, c) = match a {
            UP if r > 0 => (r - 1, c),
            RIGHT if c + 1 < self.cols => (r, c + 1),
            DOWN if r + 1 < self.rows => (r + 1, c),
            LEFT if c > 0 => (r, c - 1),
            _ => return None,
        };
        Some(self.state((r, c)))
    }

    fn is_terminal(&self, s: usize) -> bool {
        s == self.state(self.goal) || s == self.state(self.pit)
    }

    /// Next state under the deterministic dynamics; bumps and terminals stay put.
    pub fn next_state(&self, s: usize, a: usize) -> usize {
        if self.is_terminal(s) {
            return s;
        }
        self.step_target(s, a).unwrap_or(s)
    }

    fn state_reward(&self, s: usize) -> f64 {
        if s == self.state(self.goal) {
            self.goal_reward
        } else if s == self.state(self.pit) {
            self.pit_reward
        } else {
            self.step_reward
        }
    }
}

pub fn build_gridworld_raw(spec: &GridworldSpec) -> Result<RawMdp> {
    spec.validate()?;
    let n = spec.n_states();
    let space = StateActionSpace::uniform(n, 4)?;
    let mut mean_reward = Vec::with_capacity(4 * n);
    let mut transition = vec![0.0; 4 * n * n];
    for s in 0..n {
        for a in 0..4 {
            let pair = space.pair(s, a)?;
            mean_reward.push(spec.state_reward(s));
            transition[pair * n + spec.next_state(s, a)] = 1.0;
        }
    }
    let rewards = [spec.step_reward, spec.goal_reward, spec.pit_reward];
    let lo = rewards.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RawMdp {
        space,
        mean_reward,
        transition,
        support: (lo, hi),
    })
}

/// Distance to the goal along safe cells, `usize::MAX` if unreachable.
fn safe_distances(spec: &GridworldSpec) -> Vec<usize> {
    let n = spec.n_states();
    let goal = spec.state(spec.goal);
    let pit = spec.state(spec.pit);
    let mut dist = vec![usize::MAX; n];
    dist[goal] = 0;
    let mut queue = VecDeque::from([goal]);
    while let Some(u) = queue.pop_front() {
        for s in 0..n {
            if s == pit || spec.is_terminal(s) || dist[s] != usize::MAX {
                continue;
            }
            if (0..4).any(|a| spec.step_target(s, a) == Some(u)) {
                dist[s] = dist[u] + 1;
                queue.push_back(s);
            }
        }
    }
    dist
}

/// Cautious baseline rule for the gridworld.
///
/// Cells next to the goal step into it with probability 1/2 and otherwise take
/// the first safe in-grid move; bottom-row cells pick uniformly among safe
/// up/right moves; all other cells follow a shortest safe path.
pub fn gridworld_baseline_rule(spec: &GridworldSpec) -> Result<StationaryPolicy> {
    spec.validate()?;
    let n = spec.n_states();
    let space = StateActionSpace::uniform(n, 4)?;
    let goal = spec.state(spec.goal);
    let pit = spec.state(spec.pit);
    let dist = safe_distances(spec);
    let safe = |s: usize, a: usize| spec.step_target(s, a).filter(|&t| t != pit);
    let mut rows = Vec::with_capacity(n);
    for s in 0..n {
        let mut row = vec![0.0; 4];
        if spec.is_terminal(s) {
            row[UP] = 1.0;
            rows.push(row);
            continue;
        }
        let into_goal = (0..4).find(|&a| spec.step_target(s, a) == Some(goal));
        let (r, _) = spec.cell(s);
        if let Some(g) = into_goal {
            match (0..4).find(|&a| safe(s, a).is_some_and(|t| t != goal)) {
                Some(other) => {
                    row[g] = 0.5;
                    row[other] = 0.5;
                }
                None => row[g] = 1.0,
            }
        } else if r + 1 == spec.rows && (safe(s, UP).is_some() || safe(s, RIGHT).is_some()) {
            let moves: Vec<usize> = [UP, RIGHT].into_iter().filter(|&a| safe(s, a).is_some()).collect();
            for &a in &moves {
                row[a] = 1.0 / moves.len() as f64;
            }
        } else {
            let best = (0..4)
                .filter_map(|a| safe(s, a).map(|t| (dist[t], a)))
                .min()
                .map(|(_, a)| a)
                .unwrap_or(UP);
            row[best] = 1.0;
        }
        rows.push(row);
    }
    StationaryPolicy::randomized(&space, rows)
}

/// Normalized gridworld, its baseline and the reward map.
pub fn build_gridworld(spec: &GridworldSpec) -> Result<(TabularMDP, FHPolicy, AffineMap)> {
    let (mdp, map) = normalize_rewards(build_gridworld_raw(spec)?)?;
    let baseline = FHPolicy::stationary(gridworld_baseline_rule(spec)?, spec.horizon)?;
    Ok((mdp, baseline, map))
}
