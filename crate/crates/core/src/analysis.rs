//! Correct-classification analysis of the random-centroid ISFE variant on
//! two-block stochastic block models.
//!
//! A vertex counts as correctly classified when it comes from the same block
//! as the majority of its class. The guarantee checked here: starting from a
//! partition into `k` classes that classifies a `tau > 1 - 1/(4k)` fraction
//! correctly, one random-centroid iteration classifies at least `tau' n`
//! vertices correctly with probability at least
//! `p_k (1 - 2 exp(-eps^2 n / 12k))^(k^2) (1 - 2 exp(-xi^2 n / 3))`,
//! provided conditions (i) and (ii) below hold.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generators::{sbm2, SbmSpec};
use crate::graph::{check_partition, ClassCounts, Graph, Partition};
use crate::graphon::sample_graph;
use crate::rng::{child_seeds, stream, StreamRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    A,
    B,
}

/// Block of origin of every vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    pub block_of: Vec<Block>,
}

impl GroundTruth {
    /// Vertex `i` is in block A iff `U_i < p`.
    pub fn from_latents(latents: &[f64], p: f64) -> Self {
        GroundTruth {
            block_of: latents.iter().map(|&u| if u < p { Block::A } else { Block::B }).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.block_of.len()
    }

    /// The two-class partition by block (A first when present).
    pub fn partition(&self) -> Result<Partition> {
        let labels: Vec<usize> = self.block_of.iter().map(|&b| usize::from(b == Block::B)).collect();
        Partition::from_labels_compacted(&labels)
    }
}

/// Size and majority of one class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassMajority {
    pub size: usize,
    pub majority: Block,
    /// `|C*_i|`: vertices of the class from its majority block.
    pub majority_size: usize,
}

/// Majority of each class; ties go to block A.
pub fn class_majorities(p: &Partition, truth: &GroundTruth) -> Result<Vec<ClassMajority>> {
    if p.n() != truth.n() {
        return Err(Error::invalid(format!("partition covers {} vertices, truth has {}", p.n(), truth.n())));
    }
    let mut a = vec![0usize; p.k()];
    let mut b = vec![0usize; p.k()];
    for (v, &blk) in truth.block_of.iter().enumerate() {
        match blk {
            Block::A => a[p.class_of(v)] += 1,
            Block::B => b[p.class_of(v)] += 1,
        }
    }
    Ok(a.iter()
        .zip(&b)
        .map(|(&na, &nb)| ClassMajority {
            size: na + nb,
            majority: if na >= nb { Block::A } else { Block::B },
            majority_size: na.max(nb),
        })
        .collect())
}

/// Fraction of vertices correctly classified by `p`.
pub fn majority_fraction(p: &Partition, truth: &GroundTruth) -> Result<f64> {
    let correct: usize = class_majorities(p, truth)?.iter().map(|c| c.majority_size).sum();
    Ok(correct as f64 / p.n() as f64)
}

/// `|C_i| >= delta n / k`.
pub fn is_delta_large(class: &ClassMajority, n: usize, k: usize, delta: f64) -> bool {
    class.size as f64 >= delta * n as f64 / k as f64
}

/// δ-large and `|C*_i| / |C_i| >= delta`.
pub fn is_delta_good(class: &ClassMajority, n: usize, k: usize, delta: f64) -> bool {
    is_delta_large(class, n, k, delta) && class.majority_size as f64 >= delta * class.size as f64
}

fn floor_count(fraction: f64, n: usize) -> usize {
    // Absorb representation error such as 0.05 * 1000 = 50.000000000000004
    // or 0.3 * 10 = 2.9999999999999996.
    (fraction * n as f64 + 1e-9).floor().max(0.0) as usize
}

/// Builds a `k`-class partition that misclassifies at most
/// `floor((1 - tau) n)` vertices: classes `0..ceil(k/2)` take block A,
/// the rest block B, then that many random vertices move to a random class
/// on the opposite side. Empty classes are refilled from the largest class.
pub fn corrupt_partition(truth: &GroundTruth, k: usize, tau: f64, seed: u64) -> Result<Partition> {
    let n = truth.n();
    if k < 2 {
        return Err(Error::invalid("corrupt_partition needs at least two classes"));
    }
    if k > n {
        return Err(Error::invalid(format!("{k} classes for {n} vertices")));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("tau = {tau} outside [0, 1]")));
    }
    let a_side = k.div_ceil(2);
    let b_side = k - a_side;
    let mut rng = stream("corrupt_partition", seed);
    let side_class = |blk: Block, rng: &mut StreamRng| match blk {
        Block::A => rng.gen_range(0..a_side),
        Block::B => a_side + rng.gen_range(0..b_side),
    };
    let mut assignment: Vec<usize> = truth.block_of.iter().map(|&b| side_class(b, &mut rng)).collect();
    let flips = floor_count(1.0 - tau, n);
    for v in index::sample(&mut rng, n, flips) {
        let opposite = match truth.block_of[v] {
            Block::A => Block::B,
            Block::B => Block::A,
        };
        assignment[v] = side_class(opposite, &mut rng);
    }
    let mut sizes = vec![0usize; k];
    for &c in &assignment {
        sizes[c] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let largest = (0..k).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).expect("k >= 2");
        let v = assignment.iter().position(|&c| c == largest).expect("largest class is nonempty");
        assignment[v] = empty;
        sizes[largest] -= 1;
        sizes[empty] = 1;
    }
    Partition::from_assignment(assignment)
}

/// Assigns every non-centroid vertex to the class of the centroid nearest
/// in L1 (density vectors against `p_old`), breaking ties uniformly with
/// `rng`. Centroid `centroids[j]` founds class `j`.
pub fn assign_to_centroids(g: &Graph, p_old: &Partition, centroids: &[usize], rng: &mut StreamRng) -> Result<Partition> {
    check_partition(g, p_old)?;
    let n = g.n();
    let mut assignment = vec![usize::MAX; n];
    for (j, &c) in centroids.iter().enumerate() {
        g.check_vertex(c)?;
        if assignment[c] != usize::MAX {
            return Err(Error::invalid(format!("centroid {c} repeated")));
        }
        assignment[c] = j;
    }
    if centroids.is_empty() {
        return Err(Error::invalid("no centroids"));
    }
    let counts = ClassCounts::new(g, p_old)?;
    let mut nearest = Vec::with_capacity(centroids.len());
    for (v, slot) in assignment.iter_mut().enumerate() {
        if *slot != usize::MAX {
            continue;
        }
        nearest.clear();
        let mut best = u64::MAX;
        for (j, &c) in centroids.iter().enumerate() {
            let d = counts.scaled_l1(v, c);
            if d < best {
                best = d;
                nearest.clear();
            }
            if d == best {
                nearest.push(j);
            }
        }
        *slot = if nearest.len() == 1 {
            nearest[0]
        } else {
            nearest[rng.gen_range(0..nearest.len())]
        };
    }
    Partition::from_assignment(assignment)
}

/// One iteration of the random-centroid variant: `k` centroids drawn
/// uniformly without replacement, then nearest-centroid assignment.
pub fn random_centroid_iteration(g: &Graph, p_old: &Partition, k: usize, seed: u64) -> Result<Partition> {
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("{k} centroids for {n} vertices")));
    }
    let mut rng = stream("random_centroid", seed);
    let centroids = index::sample(&mut rng, n, k).into_vec();
    assign_to_centroids(g, p_old, &centroids, &mut rng)
}

/// `delta = (1 + sqrt(1 - 4k(1 - tau))) / 2`, the larger root of
/// `delta - delta^2 = k (1 - tau)`.
pub fn delta_from_tau(k: usize, tau: f64) -> Result<f64> {
    Ok((1.0 + discriminant(k, tau)?.sqrt()) / 2.0)
}

/// `1 - 4k(1 - tau)`, with rounding noise at the boundary clamped to 0.
fn discriminant(k: usize, tau: f64) -> Result<f64> {
    let disc = 1.0 - 4.0 * k as f64 * (1.0 - tau);
    if disc < -1e-12 {
        return Err(Error::domain(format!("tau = {tau} too small for k = {k}: 4k(1 - tau) > 1")));
    }
    Ok(disc.max(0.0))
}

/// Parameters of a Monte-Carlo check of the classification guarantee.
#[derive(Clone, Debug, PartialEq)]
pub struct SbmAnalysisConfig {
    pub n: usize,
    pub k: usize,
    /// Width of block A, at most 1/2.
    pub p: f64,
    pub q0: f64,
    pub q1: f64,
    pub tau: f64,
    pub tau_prime: f64,
    pub epsilon: f64,
    pub xi: f64,
    pub trials: usize,
    pub seed: u64,
}

impl SbmAnalysisConfig {
    /// Checks what the simulation itself needs. The remaining hypotheses of
    /// the guarantee are reported by [`Self::hypothesis_issues`] instead.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if self.k < 2 || self.k > self.n {
            return bad(format!("need 2 <= k <= n (k = {}, n = {})", self.k, self.n));
        }
        if !(self.p > 0.0 && self.p <= 0.5) {
            return bad(format!("p = {} must lie in (0, 1/2]", self.p));
        }
        if !(0.0..=1.0).contains(&self.q0) || !(0.0..=1.0).contains(&self.q1) || !(self.q0 > self.q1) {
            return bad(format!("need 0 <= q1 < q0 <= 1 (q0 = {}, q1 = {})", self.q0, self.q1));
        }
        if !(self.tau > 1.0 - 1.0 / (4.0 * self.k as f64) && self.tau <= 1.0) {
            return bad(format!(
                "tau = {} must lie in (1 - 1/(4k), 1] = ({}, 1]",
                self.tau,
                1.0 - 1.0 / (4.0 * self.k as f64)
            ));
        }
        if !(self.tau_prime.is_finite() && self.epsilon.is_finite() && self.xi.is_finite()) {
            return bad("tau_prime, epsilon and xi must be finite".into());
        }
        Ok(())
    }

    /// Hypotheses of the guarantee that this configuration violates.
    pub fn hypothesis_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if !(self.tau_prime > self.tau) {
            issues.push(format!("tau' ({}) does not exceed tau ({})", self.tau_prime, self.tau));
        }
        if !(self.epsilon > 0.0 && self.xi > 0.0) {
            issues.push("epsilon and xi must be positive".into());
        }
        if self.tau_prime + self.xi > 1.0 {
            issues.push(format!("tau' + xi ({}) exceeds 1", self.tau_prime + self.xi));
        }
        issues
    }
}

const CONFIG_KEYS: [&str; 11] = ["n", "k", "p", "q0", "q1", "tau", "tau_prime", "epsilon", "xi", "trials", "seed"];

impl FromStr for SbmAnalysisConfig {
    type Err = Error;

    /// Flat `name=value` lines; `#` starts a comment. Every key is required.
    fn from_str(s: &str) -> Result<Self> {
        let mut vals: [Option<String>; 11] = Default::default();
        for (idx, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: idx + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected name=value, found '{line}'")))?;
            let slot = CONFIG_KEYS
                .iter()
                .position(|k| *k == key.trim())
                .ok_or_else(|| parse_err(format!("unknown key '{}'", key.trim())))?;
            vals[slot] = Some(value.trim().to_string());
        }
        let get = |i: usize| -> Result<&str> {
            vals[i]
                .as_deref()
                .ok_or_else(|| Error::invalid(format!("missing key '{}'", CONFIG_KEYS[i])))
        };
        let real = |i: usize| -> Result<f64> {
            get(i)?.parse::<f64>().map_err(|e| Error::invalid(format!("{}: {e}", CONFIG_KEYS[i])))
        };
        let int = |i: usize| -> Result<u64> {
            get(i)?.parse::<u64>().map_err(|e| Error::invalid(format!("{}: {e}", CONFIG_KEYS[i])))
        };
        Ok(SbmAnalysisConfig {
            n: int(0)? as usize,
            k: int(1)? as usize,
            p: real(2)?,
            q0: real(3)?,
            q1: real(4)?,
            tau: real(5)?,
            tau_prime: real(6)?,
            epsilon: real(7)?,
            xi: real(8)?,
            trials: int(9)? as usize,
            seed: int(10)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// Condition (i):
/// `q0 - q1 >= (3 - r)/tau - 2 + 4 eps + (1 - r) / (n tau (1 - tau))`
/// with `r = sqrt(1 - 4k(1 - tau))`. At `tau = 1` the last term is replaced
/// by its limit `2k / n`.
pub fn condition_i(cfg: &SbmAnalysisConfig) -> Result<ConditionCheck> {
    let k = cfg.k as f64;
    let n = cfg.n as f64;
    let tau = cfg.tau;
    let r = discriminant(cfg.k, tau)?.sqrt();
    let tail = if tau < 1.0 {
        (1.0 - r) / (n * tau * (1.0 - tau))
    } else {
        2.0 * k / n
    };
    let lhs = cfg.q0 - cfg.q1;
    let rhs = (3.0 - r) / tau - 2.0 + 4.0 * cfg.epsilon + tail;
    Ok(ConditionCheck {
        lhs,
        rhs,
        satisfied: lhs >= rhs,
    })
}

/// Condition (ii): `eps^2 n > -12k ln((1 - (tau' + xi)^(1/k)) / 2)`.
pub fn condition_ii(cfg: &SbmAnalysisConfig) -> Result<ConditionCheck> {
    let target = cfg.tau_prime + cfg.xi;
    if target >= 1.0 {
        return Err(Error::domain(format!("tau' + xi = {target} must be below 1")));
    }
    let k = cfg.k as f64;
    let lhs = cfg.epsilon * cfg.epsilon * cfg.n as f64;
    let rhs = -12.0 * k * ((1.0 - target.powf(1.0 / k)) / 2.0).ln();
    Ok(ConditionCheck {
        lhs,
        rhs,
        satisfied: lhs > rhs,
    })
}

/// `p_k = 1 - p^k - (1-p)^k`: probability that `k` uniform centroids hit
/// both blocks (in the large-`n` limit).
pub fn p_k(p: f64, k: usize) -> f64 {
    1.0 - p.powi(k as i32) - (1.0 - p).powi(k as i32)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoremBound {
    pub p_k: f64,
    /// `1 - 2 exp(-eps^2 n / 12k)`, before raising to `k^2`.
    pub centroid_base: f64,
    pub tail_factor: f64,
    /// Product of the three factors, clamped at 0.
    pub bound: f64,
    /// Set when a factor was negative and the bound clamped to 0.
    pub vacuous: bool,
}

pub fn theorem_bound(cfg: &SbmAnalysisConfig) -> TheoremBound {
    let n = cfg.n as f64;
    let k = cfg.k as f64;
    let pk = p_k(cfg.p, cfg.k);
    let centroid_base = 1.0 - 2.0 * (-cfg.epsilon * cfg.epsilon * n / (12.0 * k)).exp();
    let tail_factor = 1.0 - 2.0 * (-cfg.xi * cfg.xi * n / 3.0).exp();
    let vacuous = centroid_base < 0.0 || tail_factor < 0.0;
    let bound = if vacuous {
        0.0
    } else {
        pk * centroid_base.powi((cfg.k * cfg.k) as i32) * tail_factor
    };
    TheoremBound {
        p_k: pk,
        centroid_base,
        tail_factor,
        bound,
        vacuous,
    }
}

/// Lower bound `1 - 2 exp(-eps^2 n / (3 zeta))` on
/// `Pr(|Binomial(n, zeta)/n - zeta| < eps)`.
pub fn chernoff_lower_bound(n: usize, zeta: f64, eps: f64) -> Result<f64> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::domain(format!("zeta = {zeta} must lie in (0, 1]")));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!("eps = {eps} must be positive")));
    }
    Ok(1.0 - 2.0 * (-eps * eps * n as f64 / (3.0 * zeta)).exp())
}

/// Marks which vertices are (ε, δ)-good: for every δ-good class, the
/// vertex's density to that class's majority is within `eps` of its
/// expected value (`q0` when the vertex shares the majority's block, else
/// `q1`). Densities are taken in the graph with a self-loop added at each
/// vertex independently with probability `q0`; the loops are drawn from
/// the `seed` stream and `g` is left unchanged.
#[allow(clippy::too_many_arguments)]
pub fn eps_delta_good_vertices(
    g: &Graph,
    p: &Partition,
    truth: &GroundTruth,
    q0: f64,
    q1: f64,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<Vec<bool>> {
    check_partition(g, p)?;
    let n = g.n();
    let k = p.k();
    let majorities = class_majorities(p, truth)?;
    let mut rng = stream("self_loops", seed);
    let loops: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < q0).collect();
    let classes = p.classes();
    let good_classes: Vec<(Block, Vec<usize>)> = majorities
        .iter()
        .zip(&classes)
        .filter(|(m, _)| is_delta_good(m, n, k, delta))
        .map(|(m, members)| {
            let core: Vec<usize> = members.iter().copied().filter(|&v| truth.block_of[v] == m.majority).collect();
            (m.majority, core)
        })
        .collect();
    let masks: Vec<Vec<u64>> = good_classes.iter().map(|(_, core)| g.mask(core)).collect::<Result<_>>()?;
    Ok((0..n)
        .map(|x| {
            good_classes.iter().zip(&masks).all(|((blk, core), mask)| {
                let mut c: u32 = g.row(x).iter().zip(mask).map(|(a, b)| (a & b).count_ones()).sum();
                if loops[x] && truth.block_of[x] == *blk {
                    c += 1;
                }
                let density = f64::from(c) / core.len() as f64;
                let expected = if truth.block_of[x] == *blk { q0 } else { q1 };
                (density - expected).abs() < eps
            })
        })
        .collect())
}

/// Everything the Monte-Carlo check computes.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoremReport {
    pub config: SbmAnalysisConfig,
    pub delta: f64,
    pub condition_i: ConditionCheck,
    /// `None` when `tau' + xi` reaches 1 and the condition is undefined.
    pub condition_ii: Option<ConditionCheck>,
    pub bound: TheoremBound,
    pub hypothesis_issues: Vec<String>,
    /// `None` when no trials ran.
    pub empirical_frequency: Option<f64>,
    pub per_trial_fractions: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    ConditionsUnmet,
    NoTrials,
}

impl TheoremReport {
    pub fn conditions_met(&self) -> bool {
        self.hypothesis_issues.is_empty()
            && self.condition_i.satisfied
            && self.condition_ii.is_some_and(|c| c.satisfied)
    }

    /// Three-sigma binomial Monte-Carlo slack around the bound.
    pub fn mc_slack(&self) -> f64 {
        let b = self.bound.bound;
        if self.per_trial_fractions.is_empty() {
            return f64::NAN;
        }
        3.0 * (b * (1.0 - b) / self.per_trial_fractions.len() as f64).sqrt()
    }

    pub fn verdict(&self) -> Verdict {
        if !self.conditions_met() {
            return Verdict::ConditionsUnmet;
        }
        match self.empirical_frequency {
            None => Verdict::NoTrials,
            Some(f) if f >= self.bound.bound - self.mc_slack() => Verdict::Pass,
            Some(_) => Verdict::Fail,
        }
    }

    /// Flat `name=value` serialization, one entry per line.
    pub fn to_key_values(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("n", c.n.to_string());
        put("k", c.k.to_string());
        put("p", format!("{:?}", c.p));
        put("q0", format!("{:?}", c.q0));
        put("q1", format!("{:?}", c.q1));
        put("tau", format!("{:?}", c.tau));
        put("tau_prime", format!("{:?}", c.tau_prime));
        put("epsilon", format!("{:?}", c.epsilon));
        put("xi", format!("{:?}", c.xi));
        put("trials", c.trials.to_string());
        put("seed", c.seed.to_string());
        put("delta", format!("{:?}", self.delta));
        put("condition_i_lhs", format!("{:?}", self.condition_i.lhs));
        put("condition_i_rhs", format!("{:?}", self.condition_i.rhs));
        put("condition_i_satisfied", self.condition_i.satisfied.to_string());
        match self.condition_ii {
            Some(ii) => {
                put("condition_ii_lhs", format!("{:?}", ii.lhs));
                put("condition_ii_rhs", format!("{:?}", ii.rhs));
                put("condition_ii_satisfied", ii.satisfied.to_string());
            }
            None => {
                put("condition_ii_lhs", "undefined".into());
                put("condition_ii_rhs", "undefined".into());
                put("condition_ii_satisfied", "false".into());
            }
        }
        put("hypothesis_issues", self.hypothesis_issues.join("; "));
        put("conditions_met", self.conditions_met().to_string());
        put("p_k", format!("{:?}", self.bound.p_k));
        put("bound", format!("{:?}", self.bound.bound));
        put("vacuous", self.bound.vacuous.to_string());
        put(
            "empirical_frequency",
            self.empirical_frequency.map_or("undefined".into(), |f| format!("{f:?}")),
        );
        put("mc_slack", format!("{:?}", self.mc_slack()));
        let verdict = match self.verdict() {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::ConditionsUnmet => "conditions_unmet",
            Verdict::NoTrials => "no_trials",
        };
        put("verdict", verdict.into());
        out
    }

    /// `trial,majority_fraction` rows.
    pub fn trials_csv(&self) -> String {
        let mut out = String::from("trial,majority_fraction\n");
        for (t, f) in self.per_trial_fractions.iter().enumerate() {
            let _ = writeln!(out, "{t},{f:?}");
        }
        out
    }
}

/// One trial: sample an SBM graph, corrupt its ground truth to a
/// `tau`-correct partition, run one random-centroid iteration, and return
/// the resulting correctly-classified fraction.
pub fn theorem_trial(cfg: &SbmAnalysisConfig, seed: u64) -> Result<f64> {
    let w = sbm2(SbmSpec {
        p: cfg.p,
        q0: cfg.q0,
        q1: cfg.q1,
    })?;
    let (g, latents) = sample_graph(&w, cfg.n, seed)?;
    let truth = GroundTruth::from_latents(&latents, cfg.p);
    let initial = corrupt_partition(&truth, cfg.k, cfg.tau, seed)?;
    let refined = random_centroid_iteration(&g, &initial, cfg.k, seed)?;
    majority_fraction(&refined, &truth)
}

/// Runs all trials (in parallel, aggregated in trial order) and reports the
/// empirical frequency of reaching `tau'` next to the bound.
pub fn monte_carlo_theorem(cfg: &SbmAnalysisConfig) -> Result<TheoremReport> {
    cfg.validate()?;
    let delta = delta_from_tau(cfg.k, cfg.tau)?;
    let ci = condition_i(cfg)?;
    let cii = condition_ii(cfg).ok();
    let bound = theorem_bound(cfg);
    let seeds = child_seeds("theorem_trial", cfg.seed, cfg.trials);
    let per_trial_fractions = seeds
        .par_iter()
        .map(|&s| theorem_trial(cfg, s))
        .collect::<Result<Vec<f64>>>()?;
    let empirical_frequency = if per_trial_fractions.is_empty() {
        None
    } else {
        let hits = per_trial_fractions.iter().filter(|&&f| f >= cfg.tau_prime).count();
        Some(hits as f64 / per_trial_fractions.len() as f64)
    };
    Ok(TheoremReport {
        config: cfg.clone(),
        delta,
        condition_i: ci,
        condition_ii: cii,
        bound,
        hypothesis_issues: cfg.hypothesis_issues(),
        empirical_frequency,
        per_trial_fractions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(blocks: &str) -> GroundTruth {
        GroundTruth {
            block_of: blocks.chars().map(|c| if c == 'A' { Block::A } else { Block::B }).collect(),
        }
    }

    fn reference() -> SbmAnalysisConfig {
        SbmAnalysisConfig {
            n: 24_000,
            k: 3,
            p: 0.5,
            q0: 0.95,
            q1: 0.05,
            tau: 0.95,
            tau_prime: 0.96,
            epsilon: 0.1,
            xi: 0.03,
            trials: 100,
            seed: 1,
        }
    }

    #[test]
    fn majority_examples() {
        let t = truth("AABB");
        let gt = t.partition().unwrap();
        assert_eq!(majority_fraction(&gt, &t).unwrap(), 1.0);
        assert_eq!(majority_fraction(&Partition::trivial(4), &truth("AAAB")).unwrap(), 0.75);
        let m = class_majorities(&Partition::trivial(4), &t).unwrap();
        assert_eq!(m[0].majority, Block::A);
        assert_eq!(majority_fraction(&Partition::trivial(4), &t).unwrap(), 0.5);
        assert!(majority_fraction(&Partition::trivial(3), &t).is_err());
    }

    #[test]
    fn majority_ignores_class_labels() {
        let t = truth("AABABBBA");
        let p = Partition::from_assignment(vec![0, 1, 2, 0, 1, 2, 2, 0]).unwrap();
        let q = p.relabel(&[2, 0, 1]).unwrap();
        assert_eq!(majority_fraction(&p, &t).unwrap(), majority_fraction(&q, &t).unwrap());
    }

    #[test]
    fn corrupt_partition_examples() {
        let latents: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let t = GroundTruth::from_latents(&latents, 0.5);
        let clean = corrupt_partition(&t, 4, 1.0, 3).unwrap();
        assert_eq!(majority_fraction(&clean, &t).unwrap(), 1.0);
        for seed in 0..20 {
            let p = corrupt_partition(&t, 4, 0.95, seed).unwrap();
            assert_eq!(p.k(), 4);
            assert!(majority_fraction(&p, &t).unwrap() >= 0.95 - 4.0 / 1000.0);
            assert_eq!(p, corrupt_partition(&t, 4, 0.95, seed).unwrap());
        }
        assert!(corrupt_partition(&truth("AB"), 3, 1.0, 0).is_err());
        assert!(corrupt_partition(&truth("AB"), 1, 1.0, 0).is_err());
    }

    #[test]
    fn corrupt_partition_repairs_empty_classes() {
        // All vertices in A: the B-side classes start empty.
        let p = corrupt_partition(&truth("AAAAAA"), 4, 1.0, 0).unwrap();
        assert_eq!(p.k(), 4);
        assert!(p.class_sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn random_centroid_examples() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let halves = Partition::from_classes(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        let all = random_centroid_iteration(&g, &halves, 4, 0).unwrap();
        assert_eq!(all.k(), 4);
        let mut rng = stream("test", 0);
        let p = assign_to_centroids(&g, &halves, &[0, 2], &mut rng).unwrap();
        assert_eq!(p, halves);
        // Search for a seed whose draw is {0, 2} or {1, 3} and check the
        // public entry point agrees.
        let seed = (0..1000)
            .find(|&s| {
                let mut r = stream("random_centroid", s);
                let mut c = index::sample(&mut r, 4, 2).into_vec();
                c.sort_unstable();
                c == vec![0, 2]
            })
            .unwrap();
        let p = random_centroid_iteration(&g, &halves, 2, seed).unwrap();
        assert!(p.same_grouping(&halves));
        assert_eq!(p, random_centroid_iteration(&g, &halves, 2, seed).unwrap());
        assert!(random_centroid_iteration(&g, &halves, 5, 0).is_err());
    }

    #[test]
    fn ties_are_broken_at_random() {
        // Edgeless graph: every distance is zero, so each vertex picks a
        // uniformly random centroid.
        let g = Graph::new(200);
        let mut rng = stream("test", 5);
        let p = assign_to_centroids(&g, &Partition::trivial(200), &[0, 1], &mut rng).unwrap();
        let sizes = p.class_sizes();
        assert!(sizes[0] > 60 && sizes[1] > 60, "{sizes:?}");
    }

    #[test]
    fn delta_examples() {
        assert!((delta_from_tau(4, 0.95).unwrap() - (1.0 + 0.2f64.sqrt()) / 2.0).abs() < 1e-15);
        assert_eq!(delta_from_tau(4, 1.0).unwrap(), 1.0);
        assert!((delta_from_tau(3, 11.0 / 12.0).unwrap() - 0.5).abs() < 1e-7);
        assert!(delta_from_tau(3, 0.9).is_err());
    }

    #[test]
    fn condition_i_examples() {
        let c = condition_i(&SbmAnalysisConfig { q0: 0.95, q1: 0.05, ..reference() }).unwrap();
        // (3 - sqrt 0.4)/0.95 - 2 + 0.4 + (1 - sqrt 0.4)/(24000 * 0.95 * 0.05)
        assert!((c.rhs - 0.892_474_479).abs() < 1e-8, "{}", c.rhs);
        assert!(c.satisfied);
        let never = condition_i(&SbmAnalysisConfig { tau: 0.92, epsilon: 1e-9, ..reference() }).unwrap();
        assert!(never.rhs > 1.0);
        let limit = condition_i(&SbmAnalysisConfig { tau: 1.0, epsilon: 0.0, n: 1_000_000_000, ..reference() }).unwrap();
        assert!(limit.rhs.abs() < 1e-8);
        assert!(limit.satisfied);
    }

    #[test]
    fn condition_ii_examples() {
        let c = condition_ii(&reference()).unwrap();
        assert!((c.rhs - 230.169).abs() < 1e-3, "{}", c.rhs);
        assert!((c.lhs - 240.0).abs() < 1e-9);
        assert!(c.satisfied);
        let near = condition_ii(&SbmAnalysisConfig { xi: 0.04 - 1e-12, ..reference() }).unwrap();
        assert!(near.rhs > 1000.0);
        assert!(condition_ii(&SbmAnalysisConfig { xi: 0.04, ..reference() }).is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(p_k(0.5, 4), 0.875);
        let b = theorem_bound(&reference());
        assert_eq!(b.p_k, 0.75);
        assert!((b.bound - 0.731_899).abs() < 1e-5, "{}", b.bound);
        let huge = theorem_bound(&SbmAnalysisConfig { n: 100_000_000, ..reference() });
        assert!((huge.bound - huge.p_k).abs() < 1e-12);
        let tiny = theorem_bound(&SbmAnalysisConfig { n: 10, ..reference() });
        assert!(tiny.vacuous);
        assert_eq!(tiny.bound, 0.0);
    }

    #[test]
    fn bound_monotonicity() {
        let mut last = 0.0;
        for n in (1000..200_000).step_by(7919) {
            let b = theorem_bound(&SbmAnalysisConfig { n, ..reference() }).bound;
            assert!(b >= last);
            last = b;
        }
        for p in [0.05, 0.2, 0.35, 0.5] {
            for k in 1..20 {
                assert!(p_k(p, k + 1) >= p_k(p, k));
            }
        }
    }

    #[test]
    fn chernoff_examples() {
        assert!((chernoff_lower_bound(300, 0.5, 0.1).unwrap() - (1.0 - 2.0 * (-2.0f64).exp())).abs() < 1e-15);
        assert!(chernoff_lower_bound(100_000, 0.5, 1.0).unwrap() > 1.0 - 1e-12);
        assert!(chernoff_lower_bound(10, 0.0, 0.1).is_err());
        assert!(chernoff_lower_bound(10, 0.5, 0.0).is_err());
    }

    #[test]
    fn config_round_trip_and_errors() {
        let text = "# reference\nn=24000\nk=3\np=0.5\nq0=0.95\nq1=0.05\ntau=0.95\ntau_prime=0.96\nepsilon=0.1\nxi=0.03\ntrials=100\nseed=1\n";
        assert_eq!(text.parse::<SbmAnalysisConfig>().unwrap(), reference());
        assert!(matches!("n=1\nbogus".parse::<SbmAnalysisConfig>(), Err(Error::Parse { line: 2, .. })));
        assert!("n=1\nwho=2".parse::<SbmAnalysisConfig>().is_err());
        assert!("n=1".parse::<SbmAnalysisConfig>().is_err());
        assert!(SbmAnalysisConfig { p: 0.6, ..reference() }.validate().is_err());
        assert!(SbmAnalysisConfig { tau: 0.9, ..reference() }.validate().is_err());
        assert!(SbmAnalysisConfig { q1: 0.95, ..reference() }.validate().is_err());
        assert!(reference().validate().is_ok());
        assert!(reference().hypothesis_issues().is_empty());
        let loose = SbmAnalysisConfig { tau_prime: 0.95, xi: 0.06, ..reference() };
        assert!(loose.validate().is_ok());
        assert_eq!(loose.hypothesis_issues().len(), 2);
    }

    #[test]
    fn perfect_blocks_classify_everything() {
        let cfg = SbmAnalysisConfig {
            n: 300,
            k: 2,
            q0: 1.0,
            q1: 0.0,
            tau: 1.0,
            tau_prime: 1.0,
            epsilon: 0.5,
            xi: 1e-3,
            trials: 30,
            ..reference()
        };
        let report = monte_carlo_theorem(&cfg).unwrap();
        assert!(!report.conditions_met());
        assert_eq!(report.verdict(), Verdict::ConditionsUnmet);
        // Same-block vertices sit within 2/n of each other and far from the
        // other block, so a trial only falls short when both centroids land
        // in one block.
        let w = sbm2(SbmSpec { p: 0.5, q0: 1.0, q1: 0.0 }).unwrap();
        for (t, &s) in child_seeds("theorem_trial", cfg.seed, cfg.trials).iter().enumerate() {
            let (_, latents) = sample_graph(&w, cfg.n, s).unwrap();
            let truth = GroundTruth::from_latents(&latents, cfg.p);
            let mut r = stream("random_centroid", s);
            let c = index::sample(&mut r, cfg.n, 2).into_vec();
            if truth.block_of[c[0]] != truth.block_of[c[1]] {
                assert_eq!(report.per_trial_fractions[t], 1.0);
            }
        }
    }

    #[test]
    fn zero_trials_leave_frequency_undefined() {
        let cfg = SbmAnalysisConfig { n: 50, trials: 0, ..reference() };
        let report = monte_carlo_theorem(&cfg).unwrap();
        assert!(report.per_trial_fractions.is_empty());
        assert_eq!(report.empirical_frequency, None);
        assert!(report.to_key_values().contains("empirical_frequency=undefined"));
    }

    #[test]
    fn report_serialization_is_flat() {
        let cfg = SbmAnalysisConfig { n: 400, trials: 4, ..reference() };
        let report = monte_carlo_theorem(&cfg).unwrap();
        let kv = report.to_key_values();
        for line in kv.lines() {
            assert_eq!(line.matches('=').count(), 1, "{line}");
        }
        assert!(kv.contains("bound="));
        assert_eq!(report.trials_csv().lines().count(), 5);
        assert_eq!(kv, monte_carlo_theorem(&cfg).unwrap().to_key_values());
    }
}
