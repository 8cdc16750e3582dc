//! Evaluation metrics: MSE on latent values, L1/L2 between step graphons,
//! exact cut metrics at small scale, and upper bounds for the quantities
//! that take an infimum over measure-preserving rearrangements.

use itertools::Itertools;
use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graphon::StepGraphon;

/// Largest vertex count (or refinement size) for subset enumeration.
pub const MAX_SUBSET_ENUMERATION: usize = 24;
/// Largest vertex count (or step count) for permutation search.
pub const MAX_PERMUTATION_SEARCH: usize = 8;

/// `(1/n^2) sum_{i,j} (truth_ij - estimate_ij)^2`, diagonal included.
pub fn mse(estimate: &Array2<f64>, truth: &Array2<f64>) -> Result<f64> {
    if estimate.dim() != truth.dim() || estimate.nrows() != estimate.ncols() {
        return Err(Error::invalid(format!(
            "mse of {:?} against {:?}",
            estimate.dim(),
            truth.dim()
        )));
    }
    let n = estimate.nrows() as f64;
    let sum: f64 = estimate.iter().zip(truth.iter()).map(|(a, b)| (b - a).powi(2)).sum();
    Ok(sum / (n * n))
}

/// Two step graphons re-expressed on the union of their breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct CommonRefinement {
    pub widths: Vec<f64>,
    pub values_a: Array2<f64>,
    pub values_b: Array2<f64>,
}

impl CommonRefinement {
    pub fn k(&self) -> usize {
        self.widths.len()
    }

    fn difference(&self) -> Array2<f64> {
        &self.values_a - &self.values_b
    }
}

const MIN_WIDTH: f64 = 1e-15;

/// Largest grid on which equal-width refinements are built exactly.
const MAX_EXACT_GRID: usize = 1 << 20;

fn equal_widths(w: &StepGraphon) -> bool {
    w.widths().iter().all(|&x| x == w.widths()[0])
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Cells of the common refinement as `(step of a, step of b, weight)`, with
/// widths `weight / scale`. When both graphons have equal-width steps the
/// cells sit on the grid of `lcm(k_a, k_b)` points and weights are exact
/// integers, so sums over cells carry no width rounding.
fn refinement_cells(a: &StepGraphon, b: &StepGraphon) -> (Vec<(usize, usize, f64)>, f64) {
    let (ka, kb) = (a.k(), b.k());
    let grid = ka / gcd(ka, kb) * kb;
    if equal_widths(a) && equal_widths(b) && grid <= MAX_EXACT_GRID {
        let (sa, sb) = (grid / ka, grid / kb);
        let mut cells = Vec::new();
        let mut pos = 0;
        while pos < grid {
            let (ia, ib) = (pos / sa, pos / sb);
            let next = ((ia + 1) * sa).min((ib + 1) * sb);
            cells.push((ia, ib, (next - pos) as f64));
            pos = next;
        }
        return (cells, grid as f64);
    }
    let ea = &a.breakpoints()[1..];
    let eb = &b.breakpoints()[1..];
    let (mut ia, mut ib) = (0, 0);
    let mut pos = 0.0;
    let mut cells = Vec::new();
    while ia < ea.len() && ib < eb.len() {
        let next = ea[ia].min(eb[ib]);
        let width = next - pos;
        if width >= MIN_WIDTH {
            cells.push((ia, ib, width));
        }
        if ea[ia] - next < MIN_WIDTH {
            ia += 1;
        }
        if eb[ib] - next < MIN_WIDTH {
            ib += 1;
        }
        pos = next;
    }
    (cells, 1.0)
}

pub fn common_refinement(a: &StepGraphon, b: &StepGraphon) -> CommonRefinement {
    let (cells, scale) = refinement_cells(a, b);
    let k = cells.len();
    let values_a = Array2::from_shape_fn((k, k), |(r, c)| a.values()[[cells[r].0, cells[c].0]]);
    let values_b = Array2::from_shape_fn((k, k), |(r, c)| b.values()[[cells[r].1, cells[c].1]]);
    CommonRefinement {
        widths: cells.iter().map(|c| c.2 / scale).collect(),
        values_a,
        values_b,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lp {
    L1,
    L2,
}

/// Exact `L^p` distance between step graphons under the identity alignment.
pub fn lp_distance(a: &StepGraphon, b: &StepGraphon, p: Lp) -> f64 {
    let (cells, scale) = refinement_cells(a, b);
    let mut total = 0.0;
    for &(ra, rb, wi) in &cells {
        for &(ca, cb, wj) in &cells {
            let x = (a.values()[[ra, ca]] - b.values()[[rb, cb]]).abs();
            total += wi * wj * if p == Lp::L1 { x } else { x * x };
        }
    }
    total /= scale * scale;
    match p {
        Lp::L1 => total,
        Lp::L2 => total.sqrt(),
    }
}

/// Reorders steps by descending row average (ties: wider first, then
/// original index).
pub fn canonical_sort(w: &StepGraphon) -> StepGraphon {
    let widths = w.widths();
    let row_avg: Vec<f64> = (0..w.k())
        .map(|i| widths.iter().enumerate().map(|(j, wj)| wj * w.values()[[i, j]]).sum())
        .collect();
    let mut order: Vec<usize> = (0..w.k()).collect();
    order.sort_by(|&x, &y| {
        row_avg[y]
            .total_cmp(&row_avg[x])
            .then(widths[y].total_cmp(&widths[x]))
            .then(x.cmp(&y))
    });
    w.reorder(&order).expect("order is a permutation")
}

/// Squared L2 distance after canonically sorting both graphons; an upper
/// bound on the MISE-style infimum over measure-preserving maps.
pub fn mise_upper_bound(a: &StepGraphon, b: &StepGraphon) -> f64 {
    lp_distance(&canonical_sort(a), &canonical_sort(b), Lp::L2).powi(2)
}

/// Maximum over `s` in `{0,1}^k` of `max(sum_j max(d_j, 0), sum_j max(-d_j, 0))`
/// where `d = s^T M` column-weighted. `row_term(i)` is row `i` of the signed
/// matrix already scaled by any row weight; `col_weight(j)` scales column
/// contributions. For fixed `s` the objective is additive over membership of
/// each column in `T`, so the best `T` takes every column of one sign.
fn max_over_subsets<T>(k: usize, rows: &[Vec<T>], col_weights: &[T]) -> T
where
    T: Copy + Send + Sync + PartialOrd + Default + std::ops::AddAssign + std::ops::SubAssign + std::ops::Mul<Output = T> + std::ops::Neg<Output = T>,
{
    if k == 0 {
        return T::default();
    }
    // High bits pick a chunk; each chunk walks its low bits in Gray-code
    // order, recomputing the column sums from scratch at the chunk start.
    let low_bits = k.min(12);
    let high_bits = k - low_bits;
    let evaluate = |d: &[T]| {
        let mut pos = T::default();
        let mut neg = T::default();
        for (&x, &w) in d.iter().zip(col_weights) {
            if x > T::default() {
                pos += x * w;
            } else {
                neg += -x * w;
            }
        }
        if pos > neg { pos } else { neg }
    };
    let chunk_best = |high: u64| -> T {
        let mut d = vec![T::default(); k];
        for bit in 0..high_bits {
            if high >> bit & 1 == 1 {
                for (dj, &r) in d.iter_mut().zip(&rows[low_bits + bit]) {
                    *dj += r;
                }
            }
        }
        let mut best = evaluate(&d);
        let mut gray: u64 = 0;
        for step in 1u64..(1 << low_bits) {
            let bit = step.trailing_zeros() as usize;
            gray ^= 1 << bit;
            let row = &rows[bit];
            if gray >> bit & 1 == 1 {
                for (dj, &r) in d.iter_mut().zip(row) {
                    *dj += r;
                }
            } else {
                for (dj, &r) in d.iter_mut().zip(row) {
                    *dj -= r;
                }
            }
            let v = evaluate(&d);
            if v > best {
                best = v;
            }
        }
        best
    };
    (0..1u64 << high_bits)
        .into_par_iter()
        .map(chunk_best)
        .reduce(T::default, |a, b| if a > b { a } else { b })
}

fn check_enumeration_size(k: usize, what: &str) -> Result<()> {
    if k > MAX_SUBSET_ENUMERATION {
        return Err(Error::invalid(format!(
            "{what} has size {k}; exact cut enumeration is limited to {MAX_SUBSET_ENUMERATION}"
        )));
    }
    Ok(())
}

/// Exact cut metric `max_{S,T} |c_F(S,T) - c_G(S,T)| / n^2` for graphs on
/// the same vertex set, `n <= 24`.
pub fn cut_metric_graphs(f: &Graph, g: &Graph) -> Result<f64> {
    let n = f.n();
    if g.n() != n {
        return Err(Error::invalid(format!("graphs have {} and {} vertices", n, g.n())));
    }
    check_enumeration_size(n, "graph")?;
    if n == 0 {
        return Ok(0.0);
    }
    let rows: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(f.has_edge(i, j)) - i64::from(g.has_edge(i, j))).collect())
        .collect();
    let best = max_over_subsets(n, &rows, &vec![1i64; n]);
    Ok(best as f64 / (n * n) as f64)
}

/// Cut distance `min_pi d_cut(F, G^pi)` over all relabelings, `n <= 8`.
pub fn cut_distance_graphs(f: &Graph, g: &Graph) -> Result<f64> {
    let n = f.n();
    if g.n() != n {
        return Err(Error::invalid(format!("graphs have {} and {} vertices", n, g.n())));
    }
    if n > MAX_PERMUTATION_SEARCH {
        return Err(Error::invalid(format!(
            "graph has {n} vertices; permutation search is limited to {MAX_PERMUTATION_SEARCH}"
        )));
    }
    let mut best = f64::INFINITY;
    for perm in (0..n).permutations(n) {
        let d = cut_metric_graphs(f, &g.permute(&perm)?)?;
        if d < best {
            best = d;
        }
        if best == 0.0 {
            break;
        }
    }
    Ok(if n == 0 { 0.0 } else { best })
}

/// Exact cut metric between step graphons.
///
/// On the common refinement the objective `sum s_i t_j w_i w_j (A - B)_ij`
/// is bilinear in `(s, t)` in `[0,1]^k x [0,1]^k` (the fraction of each
/// refined interval that lies in `S` and `T`), so its extrema are attained
/// at 0/1 vertices and enumerating `s` with the best `t` per sign is exact.
pub fn cut_metric_step(a: &StepGraphon, b: &StepGraphon) -> Result<f64> {
    let r = common_refinement(a, b);
    check_enumeration_size(r.k(), "common refinement")?;
    let d = r.difference();
    let rows: Vec<Vec<f64>> = (0..r.k())
        .map(|i| (0..r.k()).map(|j| r.widths[i] * d[[i, j]]).collect())
        .collect();
    Ok(max_over_subsets(r.k(), &rows, &r.widths))
}

/// Upper bound on the cut distance between step graphons: the best step
/// permutation of `b` when both have at most 8 steps, otherwise the cut
/// metric after canonically sorting both.
pub fn cut_distance_step_upper(a: &StepGraphon, b: &StepGraphon) -> Result<f64> {
    if a.k() <= MAX_PERMUTATION_SEARCH && b.k() <= MAX_PERMUTATION_SEARCH {
        let mut best = f64::INFINITY;
        for perm in (0..b.k()).permutations(b.k()) {
            best = best.min(cut_metric_step(a, &b.reorder(&perm)?)?);
        }
        Ok(best)
    } else {
        cut_metric_step(&canonical_sort(a), &canonical_sort(b))
    }
}
