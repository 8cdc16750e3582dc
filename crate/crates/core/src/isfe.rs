//! Iterative step-function estimation: the single-iteration partition
//! refinement, the multi-iteration driver, initial partitioners, class
//! sorting, and the grid value estimator.

use std::cmp::Ordering;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{check_partition, quotient, ClassCounts, Graph, Partition};
use crate::graphon::{estimate_step_graphon, StepGraphon};
use crate::metrics::mse;
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq)]
pub struct IsfeConfig {
    /// Minimum number of classes a pass must produce (`ell`).
    pub min_classes: usize,
    /// Factor applied to the distance threshold after a pass that produced
    /// too few classes.
    pub decay: f64,
    /// Number of iterations `T`.
    pub max_iterations: usize,
    /// A pass sequence gives up once the threshold falls below this.
    pub epsilon_floor: f64,
    pub max_passes: usize,
    /// Early-stop threshold on MSE improvement; only used when latent values
    /// are supplied. Zero disables early stopping.
    pub stop_threshold: f64,
}

impl Default for IsfeConfig {
    fn default() -> Self {
        IsfeConfig {
            min_classes: 8,
            decay: 0.9,
            max_iterations: 10,
            epsilon_floor: 2f64.powi(-30),
            max_passes: 256,
            stop_threshold: 1e-3,
        }
    }
}

impl IsfeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_classes == 0 {
            return Err(Error::invalid("min_classes must be at least 1"));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::invalid(format!("decay {} must lie in (0, 1)", self.decay)));
        }
        if !(self.epsilon_floor > 0.0) {
            return Err(Error::invalid("epsilon_floor must be positive"));
        }
        if self.max_passes == 0 {
            return Err(Error::invalid("max_passes must be positive"));
        }
        if !(self.stop_threshold >= 0.0) {
            return Err(Error::invalid("stop_threshold must be nonnegative"));
        }
        Ok(())
    }
}

/// Why a single iteration stopped making passes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PassOutcome {
    /// The last pass produced at least `min_classes` classes.
    Reached,
    EpsilonFloor,
    MaxPasses,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationReport {
    pub partition: Partition,
    /// Threshold used by each pass, in order.
    pub epsilons: Vec<f64>,
    pub outcome: PassOutcome,
}

impl IterationReport {
    pub fn passes(&self) -> usize {
        self.epsilons.len()
    }
}

/// One greedy assignment sweep at threshold `eps`. Vertex 0 seeds class 0;
/// every later vertex joins the class whose centroid is nearest in L1
/// (lowest class index on ties) if that distance is below `eps`, and
/// otherwise founds a new class with itself as centroid.
fn assignment_pass(counts: &ClassCounts, n: usize, eps: f64) -> Vec<usize> {
    let mut assignment = vec![0usize; n];
    let mut centroids = vec![0usize];
    let scale = n as f64;
    for (i, slot) in assignment.iter_mut().enumerate().skip(1) {
        let (best, dist) = centroids
            .iter()
            .enumerate()
            .map(|(j, &c)| (j, counts.scaled_l1(i, c)))
            .min_by_key(|&(j, d)| (d, j))
            .expect("at least one centroid");
        if (dist as f64) / scale < eps {
            *slot = best;
        } else {
            *slot = centroids.len();
            centroids.push(i);
        }
    }
    assignment
}

/// A single ISFE iteration. Centroid density vectors are taken against
/// `p_old`. At least one pass always runs, so the output is a partition of
/// all vertices even when `min_classes` is 1.
pub fn isfe_iteration(g: &Graph, p_old: &Partition, cfg: &IsfeConfig) -> Result<IterationReport> {
    cfg.validate()?;
    check_partition(g, p_old)?;
    let n = g.n();
    let counts = ClassCounts::new(g, p_old)?;
    let mut eps = 1.0;
    let mut epsilons = Vec::new();
    loop {
        epsilons.push(eps);
        let assignment = assignment_pass(&counts, n, eps);
        let classes = assignment.iter().max().map_or(0, |m| m + 1);
        let outcome = if classes >= cfg.min_classes {
            Some(PassOutcome::Reached)
        } else {
            eps *= cfg.decay;
            if eps < cfg.epsilon_floor {
                Some(PassOutcome::EpsilonFloor)
            } else if epsilons.len() >= cfg.max_passes {
                Some(PassOutcome::MaxPasses)
            } else {
                None
            }
        };
        if let Some(outcome) = outcome {
            return Ok(IterationReport {
                partition: Partition::from_assignment(assignment)?,
                epsilons,
                outcome,
            });
        }
    }
}

/// Per-iteration record of an ISFE run; index 0 is the initial partition.
#[derive(Clone, Debug)]
pub struct EstimationTrace {
    /// Partitions with classes sorted by [`sort_classes`].
    pub partitions: Vec<Partition>,
    pub step_graphons: Vec<StepGraphon>,
    pub value_estimates: Vec<Array2<f64>>,
    /// Iteration details for entries `1..`.
    pub iterations: Vec<IterationReport>,
    /// MSE of each value estimate, when latent values were supplied.
    pub mses: Option<Vec<f64>>,
    /// Set when an iteration reproduced its input partition.
    pub converged: bool,
    /// Set when the MSE stop rule cut iterations off the end of the trace.
    pub stopped_early: bool,
}

impl EstimationTrace {
    /// Number of completed iterations `T` represented by the final entry.
    pub fn iterations_run(&self) -> usize {
        self.partitions.len() - 1
    }

    pub fn final_partition(&self) -> &Partition {
        self.partitions.last().expect("nonempty trace")
    }

    pub fn final_step_graphon(&self) -> &StepGraphon {
        self.step_graphons.last().expect("nonempty trace")
    }

    pub fn final_value_estimate(&self) -> &Array2<f64> {
        self.value_estimates.last().expect("nonempty trace")
    }

    fn truncate(&mut self, last: usize) {
        self.partitions.truncate(last + 1);
        self.step_graphons.truncate(last + 1);
        self.value_estimates.truncate(last + 1);
        self.iterations.truncate(last);
        if let Some(m) = self.mses.as_mut() {
            m.truncate(last + 1);
        }
    }

    pub fn final_mse(&self) -> Option<f64> {
        self.mses.as_ref().and_then(|m| m.last().copied())
    }
}

/// Runs up to `max_iterations` ISFE iterations from `p_init`.
///
/// Iteration stops early if a partition repeats, since every later iteration
/// would reproduce it. With latent values `truth` and a positive
/// `stop_threshold`, the trace is then cut at the first iteration `T` after
/// which the MSE never again improves by at least the threshold.
pub fn isfe_run(g: &Graph, p_init: &Partition, cfg: &IsfeConfig, truth: Option<&Array2<f64>>) -> Result<EstimationTrace> {
    cfg.validate()?;
    check_partition(g, p_init)?;
    if let Some(m) = truth {
        if m.dim() != (g.n(), g.n()) {
            return Err(Error::invalid(format!("latent matrix is {:?} for n = {}", m.dim(), g.n())));
        }
    }
    let mut trace = EstimationTrace {
        partitions: Vec::new(),
        step_graphons: Vec::new(),
        value_estimates: Vec::new(),
        iterations: Vec::new(),
        mses: truth.map(|_| Vec::new()),
        converged: false,
        stopped_early: false,
    };
    let record = |trace: &mut EstimationTrace, p: &Partition| -> Result<()> {
        let (sorted, w) = cluster_then_quotient(g, p)?;
        let estimate = value_estimate(g, &sorted)?;
        if let (Some(m), Some(mses)) = (truth, trace.mses.as_mut()) {
            mses.push(mse(&estimate, m)?);
        }
        trace.partitions.push(sorted);
        trace.step_graphons.push(w);
        trace.value_estimates.push(estimate);
        Ok(())
    };
    record(&mut trace, p_init)?;
    for _ in 0..cfg.max_iterations {
        let report = isfe_iteration(g, trace.final_partition(), cfg)?;
        let repeated = report.partition.same_grouping(trace.final_partition());
        record(&mut trace, &report.partition)?;
        trace.iterations.push(report);
        if repeated {
            trace.converged = true;
            break;
        }
    }
    if cfg.stop_threshold > 0.0 {
        if let Some(mses) = trace.mses.as_ref() {
            let keep = plateau_index(mses, cfg.stop_threshold);
            if keep + 1 < mses.len() {
                trace.truncate(keep);
                trace.stopped_early = true;
            }
        }
    }
    Ok(trace)
}

/// First index `t` such that no later value is below `values[t] - threshold`.
pub fn plateau_index(values: &[f64], threshold: f64) -> usize {
    let mut suffix_min = f64::INFINITY;
    let mut mins = vec![f64::INFINITY; values.len()];
    for t in (0..values.len()).rev() {
        mins[t] = suffix_min;
        suffix_min = suffix_min.min(values[t]);
    }
    (0..values.len())
        .find(|&t| !(mins[t] <= values[t] - threshold))
        .unwrap_or(0)
}

/// Built-in initial partitioners.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    Trivial,
    Discrete,
    /// Uniform iid labels in `0..k`; empty classes are dropped.
    RandomK { k: usize, seed: u64 },
    /// Contiguous near-equal bins of the vertices sorted by degree.
    DegreeBins(usize),
}

impl InitKind {
    /// Parses `trivial`, `discrete`, `random:k`, or `degree:k`; `seed` is
    /// used by `random:k`.
    pub fn parse(s: &str, seed: u64) -> Result<Self> {
        let parse_k = |a: &str| {
            a.trim()
                .parse::<usize>()
                .map_err(|e| Error::invalid(format!("init class count '{a}': {e}")))
        };
        match s.split_once(':') {
            None if s == "trivial" => Ok(InitKind::Trivial),
            None if s == "discrete" => Ok(InitKind::Discrete),
            Some(("random", a)) => Ok(InitKind::RandomK { k: parse_k(a)?, seed }),
            Some(("degree", a)) => Ok(InitKind::DegreeBins(parse_k(a)?)),
            _ => Err(Error::invalid(format!("unrecognized init '{s}'"))),
        }
    }
}

/// Parsed form of `trivial | discrete | random:k | degree:k` without a seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InitArg(pub InitKind);

impl FromStr for InitArg {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        InitKind::parse(s, 0).map(InitArg)
    }
}

impl InitArg {
    pub fn with_seed(self, seed: u64) -> InitKind {
        match self.0 {
            InitKind::RandomK { k, .. } => InitKind::RandomK { k, seed },
            other => other,
        }
    }
}

pub fn initial_partition(kind: InitKind, g: &Graph) -> Result<Partition> {
    let n = g.n();
    if n == 0 {
        return Err(Error::invalid("graph with no vertices"));
    }
    let check_k = |k: usize| {
        if k == 0 {
            Err(Error::invalid("class count must be positive"))
        } else if k > n {
            Err(Error::invalid(format!("class count {k} exceeds n = {n}")))
        } else {
            Ok(())
        }
    };
    match kind {
        InitKind::Trivial => Ok(Partition::trivial(n)),
        InitKind::Discrete => Ok(Partition::discrete(n)),
        InitKind::RandomK { k, seed } => {
            check_k(k)?;
            let mut rng = stream("random_partition", seed);
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            Partition::from_labels_compacted(&labels)
        }
        InitKind::DegreeBins(k) => {
            check_k(k)?;
            let degrees = g.degrees();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| degrees[b].cmp(&degrees[a]).then(a.cmp(&b)));
            let (base, extra) = (n / k, n % k);
            let mut assignment = vec![0; n];
            let mut pos = 0;
            for bin in 0..k {
                let size = base + usize::from(bin < extra);
                for &v in &order[pos..pos + size] {
                    assignment[v] = bin;
                }
                pos += size;
            }
            Partition::from_assignment(assignment)
        }
    }
}

/// Reindexes classes by descending edge density to the whole vertex set,
/// keeping the original order on ties.
pub fn sort_classes(g: &Graph, p: &Partition) -> Result<Partition> {
    check_partition(g, p)?;
    let sizes = p.class_sizes();
    let mut degree_sums = vec![0u64; p.k()];
    for v in 0..g.n() {
        degree_sums[p.class_of(v)] += g.degree(v) as u64;
    }
    // score_j = degree_sums[j] / (sizes[j] * n); compare as exact products.
    let score_cmp = |a: usize, b: usize| -> Ordering {
        let lhs = u128::from(degree_sums[a]) * sizes[b] as u128;
        let rhs = u128::from(degree_sums[b]) * sizes[a] as u128;
        rhs.cmp(&lhs).then(a.cmp(&b))
    };
    let mut order: Vec<usize> = (0..p.k()).collect();
    order.sort_by(|&a, &b| score_cmp(a, b));
    let mut new_index = vec![0; p.k()];
    for (rank, &c) in order.iter().enumerate() {
        new_index[c] = rank;
    }
    p.relabel(&new_index)
}

/// Graphon value estimate: entry `(i, j)` is the quotient edge weight
/// between the classes of `i` and `j`, i.e. `W_{G/P}` at the grid point of
/// those classes.
pub fn value_estimate(g: &Graph, p: &Partition) -> Result<Array2<f64>> {
    let q = quotient(g, p)?;
    let w = q.edge_weights();
    let n = g.n();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| w[[p.class_of(i), p.class_of(j)]]))
}

/// Estimator induced by any partition: sort its classes, then take the
/// quotient step graphon. Returns the sorted partition alongside.
pub fn cluster_then_quotient(g: &Graph, p: &Partition) -> Result<(Partition, StepGraphon)> {
    let sorted = sort_classes(g, p)?;
    let w = estimate_step_graphon(g, &sorted)?;
    Ok((sorted, w))
}
