//! Graphons, W-random graph sampling with retained latents, and step-function
//! constructions.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{check_symmetric_unit, quotient, Graph, Partition, WeightedGraph};
use crate::rng::{stream, StreamRng};

/// A symmetric measurable map `[0,1]^2 -> [0,1]`.
pub trait Graphon: Send + Sync {
    /// Value at `(x, y)`; callers guarantee both coordinates lie in `[0, 1]`.
    fn value(&self, x: f64, y: f64) -> f64;

    fn eval(&self, x: f64, y: f64) -> Result<f64> {
        check_unit("x", x)?;
        check_unit("y", y)?;
        Ok(self.value(x, y))
    }

    /// `(i, j) -> W(U_i, U_j)` for fixed latents.
    fn latent_kernel<'a>(&'a self, latents: &'a [f64]) -> Box<dyn Fn(usize, usize) -> f64 + 'a> {
        Box::new(move |i, j| self.value(latents[i], latents[j]))
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::invalid(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Graphon constant on `J_a x J_b` for consecutive intervals `J_1, ..., J_k`
/// of the given widths.
#[derive(Clone, Debug, PartialEq)]
pub struct StepGraphon {
    widths: Vec<f64>,
    values: Array2<f64>,
    /// Right endpoints of the steps; the last is pinned to exactly 1.
    ends: Vec<f64>,
}

impl StepGraphon {
    pub fn new(widths: Vec<f64>, values: Array2<f64>) -> Result<Self> {
        let k = widths.len();
        if k == 0 {
            return Err(Error::invalid("step graphon with no steps"));
        }
        if let Some(i) = widths.iter().position(|w| !(*w > 0.0)) {
            return Err(Error::invalid(format!("step {i} has non-positive width {}", widths[i])));
        }
        let total: f64 = widths.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("step widths sum to {total}")));
        }
        if values.dim() != (k, k) {
            return Err(Error::invalid(format!("values are {:?} for {k} steps", values.dim())));
        }
        check_symmetric_unit(&values)?;
        let mut acc = 0.0;
        let mut ends: Vec<f64> = widths
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        ends[k - 1] = 1.0;
        Ok(StepGraphon { widths, values, ends })
    }

    pub fn constant(c: f64) -> Result<Self> {
        check_unit("constant", c)?;
        StepGraphon::new(vec![1.0], Array2::from_elem((1, 1), c))
    }

    pub fn k(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Step containing `x`: intervals are `[a, b)` except the last, which is
    /// closed.
    pub fn step_of(&self, x: f64) -> usize {
        self.ends.partition_point(|&e| e <= x).min(self.k() - 1)
    }

    /// Left endpoints followed by 1, i.e. all `k + 1` breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.k() + 1);
        b.push(0.0);
        b.extend_from_slice(&self.ends);
        b
    }

    /// Reorders steps: step `order[a]` of `self` becomes step `a`.
    pub fn reorder(&self, order: &[usize]) -> Result<Self> {
        crate::graph::check_permutation(order, self.k())?;
        let widths = order.iter().map(|&i| self.widths[i]).collect();
        let values = Array2::from_shape_fn((self.k(), self.k()), |(a, b)| self.values[[order[a], order[b]]]);
        StepGraphon::new(widths, values)
    }
}

impl Graphon for StepGraphon {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.values[[self.step_of(x), self.step_of(y)]]
    }

    fn latent_kernel<'a>(&'a self, latents: &'a [f64]) -> Box<dyn Fn(usize, usize) -> f64 + 'a> {
        let steps: Vec<usize> = latents.iter().map(|&u| self.step_of(u)).collect();
        Box::new(move |i, j| self.values[[steps[i], steps[j]]])
    }
}

type Evaluator = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Graphon given by a closed-form evaluator.
#[derive(Clone)]
pub struct AnalyticGraphon {
    name: String,
    evaluator: Arc<Evaluator>,
}

impl AnalyticGraphon {
    pub fn new(name: impl Into<String>, evaluator: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        AnalyticGraphon {
            name: name.into(),
            evaluator: Arc::new(evaluator),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for AnalyticGraphon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticGraphon").field("name", &self.name).finish()
    }
}

impl Graphon for AnalyticGraphon {
    fn value(&self, x: f64, y: f64) -> f64 {
        (self.evaluator)(x, y)
    }
}

/// A sampled graph together with its latent positions `U_i` and the latent
/// value matrix `M_ij = W(U_i, U_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphonSample {
    pub graph: Graph,
    pub latents: Vec<f64>,
    pub value_matrix: Array2<f64>,
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    Ok(())
}

/// Bernoulli edge draws for `i < j` in row-major order; a pair is an edge
/// when the uniform draw falls below its value.
fn draw_edges(n: usize, kernel: &dyn Fn(usize, usize) -> f64, rng: &mut StreamRng) -> Graph {
    let mut g = Graph::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let u: f64 = rng.gen();
            if u < kernel(i, j) {
                g.set_edge_unchecked(i, j);
            }
        }
    }
    g
}

fn value_matrix(n: usize, kernel: &dyn Fn(usize, usize) -> f64) -> Array2<f64> {
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = kernel(i, j);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    m
}

fn draw_latents(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

/// Draws from the W-random graph `G(n, W)`, keeping latents and `M`.
pub fn sample(w: &dyn Graphon, n: usize, seed: u64) -> Result<GraphonSample> {
    check_size(n)?;
    let mut rng = stream("sample", seed);
    let latents = draw_latents(n, &mut rng);
    let kernel = w.latent_kernel(&latents);
    let graph = draw_edges(n, &*kernel, &mut rng);
    let value_matrix = value_matrix(n, &*kernel);
    drop(kernel);
    Ok(GraphonSample {
        graph,
        latents,
        value_matrix,
    })
}

/// Same draw as [`sample`] without materializing the `n x n` value matrix.
pub fn sample_graph(w: &dyn Graphon, n: usize, seed: u64) -> Result<(Graph, Vec<f64>)> {
    check_size(n)?;
    let mut rng = stream("sample", seed);
    let latents = draw_latents(n, &mut rng);
    let graph = {
        let kernel = w.latent_kernel(&latents);
        draw_edges(n, &*kernel, &mut rng)
    };
    Ok((graph, latents))
}

/// Samples edges for caller-fixed latents; the stream is used for edges only.
pub fn sample_with_latents(w: &dyn Graphon, latents: &[f64], seed: u64) -> Result<GraphonSample> {
    check_size(latents.len())?;
    for &u in latents {
        check_unit("latent", u)?;
    }
    let mut rng = stream("sample_with_latents", seed);
    let n = latents.len();
    let kernel = w.latent_kernel(latents);
    let graph = draw_edges(n, &*kernel, &mut rng);
    let value_matrix = value_matrix(n, &*kernel);
    drop(kernel);
    Ok(GraphonSample {
        graph,
        latents: latents.to_vec(),
        value_matrix,
    })
}

/// Like [`sample`] but with deterministic, sorted latents `U_i = (i - 1/2)/n`.
pub fn grid_sample(w: &dyn Graphon, n: usize, seed: u64) -> Result<GraphonSample> {
    check_size(n)?;
    let latents: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let mut rng = stream("grid_sample", seed);
    let kernel = w.latent_kernel(&latents);
    let graph = draw_edges(n, &*kernel, &mut rng);
    let value_matrix = value_matrix(n, &*kernel);
    drop(kernel);
    Ok(GraphonSample {
        graph,
        latents,
        value_matrix,
    })
}

/// Step-function graphon `W_H` of a weighted graph.
pub fn step_graphon_of_weighted_graph(h: &WeightedGraph) -> Result<StepGraphon> {
    if let Some(i) = h.vertex_weights().iter().position(|&w| w == 0.0) {
        return Err(Error::invalid(format!("node {i} has zero weight")));
    }
    StepGraphon::new(h.vertex_weights().to_vec(), h.edge_weights().clone())
}

/// Step graphon of the quotient `G/P`.
pub fn estimate_step_graphon(g: &Graph, p: &Partition) -> Result<StepGraphon> {
    step_graphon_of_weighted_graph(&quotient(g, p)?)
}

/// `r` equal steps with each cell valued at its midpoint.
pub fn discretize(w: &dyn Graphon, r: usize) -> Result<StepGraphon> {
    if r == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    let mid = |a: usize| (a as f64 + 0.5) / r as f64;
    let values = Array2::from_shape_fn((r, r), |(a, b)| w.value(mid(a), mid(b)));
    StepGraphon::new(vec![1.0 / r as f64; r], values)
}
