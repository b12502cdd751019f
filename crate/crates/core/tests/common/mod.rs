#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use conservative_rl::confidence::{ConfidenceFamily, ConfidenceSets, EmpiricalModel, VisitStats};
use conservative_rl::mdp::{StateActionSpace, StationaryPolicy, TabularMDP};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_distribution(rng: &mut impl Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Full-support transitions, so every policy induces an ergodic chain.
pub fn random_ergodic_mdp(rng: &mut impl Rng, max_states: usize, max_actions: usize) -> TabularMDP {
    let s = rng.random_range(2..=max_states);
    let actions: Vec<usize> = (0..s).map(|_| rng.random_range(1..=max_actions)).collect();
    let space = StateActionSpace::new(&actions).unwrap();
    let rewards: Vec<f64> = (0..space.n_pairs()).map(|_| rng.random::<f64>()).collect();
    let mut rows = Vec::new();
    for _ in 0..space.n_pairs() {
        rows.extend(random_distribution(rng, s, 0.05));
    }
    TabularMDP::new(space, rewards, rows, 1.0).unwrap()
}

/// Sparse random model; some rows are deterministic.
pub fn random_fh_mdp(rng: &mut impl Rng, max_states: usize, max_actions: usize) -> TabularMDP {
    let s = rng.random_range(1..=max_states);
    let a = rng.random_range(1..=max_actions);
    let space = StateActionSpace::uniform(s, a).unwrap();
    let rewards: Vec<f64> = (0..space.n_pairs()).map(|_| rng.random::<f64>()).collect();
    let mut rows = Vec::new();
    for _ in 0..space.n_pairs() {
        let mut row = random_distribution(rng, s, 0.0);
        if rng.random_bool(0.3) {
            row.iter_mut().for_each(|p| *p = 0.0);
            row[rng.random_range(0..s)] = 1.0;
        }
        rows.extend(row);
    }
    TabularMDP::new(space, rewards, rows, 1.0).unwrap()
}

pub fn random_deterministic_policy(rng: &mut impl Rng, space: &StateActionSpace) -> StationaryPolicy {
    let actions: Vec<usize> = (0..space.n_states()).map(|s| rng.random_range(0..space.n_actions(s))).collect();
    StationaryPolicy::deterministic(space, &actions).unwrap()
}

/// `n` generative-model samples per pair with Bernoulli rewards.
pub fn generative_stats(mdp: &TabularMDP, n: usize, rng: &mut impl Rng) -> VisitStats {
    let space = mdp.space().clone();
    let mut stats = VisitStats::new(space.clone());
    for pair in 0..space.n_pairs() {
        let (s, a) = space.state_action(pair);
        let row = mdp.row(pair);
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut next = row.len() - 1;
            for (j, &p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    next = j;
                    break;
                }
            }
            let r = if rng.random::<f64>() < mdp.reward(pair) { 1.0 } else { 0.0 };
            stats.record_sample(s, a, r, next).unwrap();
        }
    }
    stats
}

/// Random Bernstein or Hoeffding sets; `None` when the sample misses the truth.
pub fn sets_containing_truth(
    mdp: &TabularMDP,
    family: ConfidenceFamily,
    n: usize,
    rng: &mut impl Rng,
) -> Option<ConfidenceSets> {
    let stats = generative_stats(mdp, n, rng);
    let sets = ConfidenceSets::build(family, &stats, 0.1, stats.total_steps(), 1.0).unwrap();
    sets.contains_model(mdp).then_some(sets)
}

/// Empirical model from `n` samples per pair, drawn via sequential binomials.
pub fn binomial_model(mdp: &TabularMDP, n: u64, rng: &mut impl Rng) -> EmpiricalModel {
    let pairs = mdp.space().n_pairs();
    let s = mdp.n_states();
    let mut r_hat = Vec::with_capacity(pairs);
    let mut p_hat = Vec::with_capacity(pairs * s);
    for pair in 0..pairs {
        let r = mdp.reward(pair).clamp(0.0, 1.0);
        r_hat.push(Binomial::new(n, r).unwrap().sample(rng) as f64 / n as f64);
        let mut left = n;
        let mut mass = 1.0;
        let row = mdp.row(pair);
        for (j, &p) in row.iter().enumerate() {
            let k = if j + 1 == s || mass <= 0.0 {
                left
            } else {
                Binomial::new(left, (p / mass).clamp(0.0, 1.0)).unwrap().sample(rng)
            };
            p_hat.push(k as f64 / n as f64);
            left -= k;
            mass -= p;
        }
    }
    EmpiricalModel { r_hat, p_hat }
}

pub fn dot(p: &[f64], v: &[f64]) -> f64 {
    p.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn best(candidates: impl Iterator<Item = f64>, maximize: bool) -> f64 {
    candidates.fold(if maximize { f64::NEG_INFINITY } else { f64::INFINITY }, |acc, x| {
        if maximize {
            acc.max(x)
        } else {
            acc.min(x)
        }
    })
}

const FEAS: f64 = 1e-12;

fn l1_feasible(p: &[f64], p_hat: &[f64], beta: f64) -> bool {
    let dist: f64 = p.iter().zip(p_hat).map(|(a, b)| (a - b).abs()).sum();
    p.iter().all(|&x| x >= -FEAS) && dist <= beta + 1e-10 && (p.iter().sum::<f64>() - 1.0).abs() < 1e-10
}

/// Optimum of `p^T v` over `{p in simplex : |p - p_hat|_1 <= beta}` by enumerating
/// vertices: inside a sign region every vertex has each coordinate at 0, at
/// `p_hat`, or free, with at most two free coordinates.
pub fn l1_vertex_oracle(p_hat: &[f64], beta: f64, v: &[f64], maximize: bool) -> f64 {
    let n = p_hat.len();
    let mut values = Vec::new();
    let mut assignment = vec![0u8; n];
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        for slot in assignment.iter_mut() {
            *slot = (c % 3) as u8;
            c /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| assignment[i] == 2).collect();
        if free.is_empty() || free.len() > 2 {
            continue;
        }
        let mut p: Vec<f64> = (0..n)
            .map(|i| match assignment[i] {
                0 => 0.0,
                1 => p_hat[i],
                _ => 0.0,
            })
            .collect();
        let fixed_mass: f64 = p.iter().sum();
        if free.len() == 1 {
            p[free[0]] = 1.0 - fixed_mass;
            if l1_feasible(&p, p_hat, beta) {
                values.push(dot(&p, v));
            }
            continue;
        }
        let (j, k) = (free[0], free[1]);
        let fixed_dist: f64 = (0..n)
            .filter(|i| assignment[*i] != 2)
            .map(|i| (p[i] - p_hat[i]).abs())
            .sum();
        for (sj, sk) in [(1.0, -1.0), (-1.0, 1.0)] {
            // p_j + p_k = 1 - fixed_mass; sj (p_j - p_hat_j) + sk (p_k - p_hat_k) = beta - fixed_dist.
            let m = 1.0 - fixed_mass;
            let rhs = beta - fixed_dist + sj * p_hat[j] + sk * p_hat[k];
            // sj p_j + sk (m - p_j) = rhs.
            let pj = (rhs - sk * m) / (sj - sk);
            let pk = m - pj;
            if sj * (pj - p_hat[j]) < -FEAS || sk * (pk - p_hat[k]) < -FEAS {
                continue;
            }
            p[j] = pj;
            p[k] = pk;
            if l1_feasible(&p, p_hat, beta) {
                values.push(dot(&p, v));
            }
        }
    }
    best(values.into_iter(), maximize)
}

/// Optimum of `p^T v` over the simplex intersected with a box, by enumerating
/// vertices with all but one coordinate at a bound.
pub fn box_vertex_oracle(lower: &[f64], upper: &[f64], v: &[f64], maximize: bool) -> Option<f64> {
    let n = lower.len();
    let mut values = Vec::new();
    for free in 0..n {
        for mask in 0..(1usize << (n - 1)) {
            let mut p = vec![0.0; n];
            let mut bit = 0;
            for i in 0..n {
                if i == free {
                    continue;
                }
                p[i] = if mask >> bit & 1 == 1 { upper[i] } else { lower[i] };
                bit += 1;
            }
            let rest: f64 = p.iter().sum();
            p[free] = 1.0 - rest;
            if p[free] >= lower[free] - 1e-12 && p[free] <= upper[free] + 1e-12 {
                values.push(dot(&p, v));
            }
        }
    }
    (!values.is_empty()).then(|| best(values.into_iter(), maximize))
}
