//! Simple undirected graphs, vertex partitions, and the edge-density
//! quantities built on them (counts, densities, quotients, density vectors).

use ndarray::Array2;

use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

/// Simple undirected graph on `0..n`, stored as one bitset row per vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Graph {
    /// Edgeless graph on `n` vertices.
    pub fn new(n: usize) -> Self {
        let words = words_for(n);
        Graph {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                g.set_edge_unchecked(i, j);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::new(n);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Builds a graph from a boolean adjacency matrix, which must be
    /// symmetric with a zero diagonal.
    pub fn from_adjacency(adj: &[Vec<bool>]) -> Result<Self> {
        let n = adj.len();
        let mut g = Graph::new(n);
        for (i, row) in adj.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("adjacency row {i} has length {} (expected {n})", row.len())));
            }
            if row[i] {
                return Err(Error::invalid(format!("adjacency has a self-loop at {i}")));
            }
            for (j, &e) in row.iter().enumerate() {
                if e != adj[j][i] {
                    return Err(Error::invalid(format!("adjacency is not symmetric at ({i}, {j})")));
                }
                if e && i < j {
                    g.set_edge_unchecked(i, j);
                }
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_vertex(i)?;
        self.check_vertex(j)?;
        if i == j {
            return Err(Error::invalid(format!("self-loop at vertex {i}")));
        }
        self.set_edge_unchecked(i, j);
        Ok(())
    }

    pub(crate) fn set_edge_unchecked(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / WORD] |= 1 << (j % WORD);
        self.bits[j * self.words + i / WORD] |= 1 << (i % WORD);
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / WORD] >> (j % WORD) & 1 == 1
    }

    /// Bitset row of vertex `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().flat_map(|(w, &bits)| {
            let mut rest = bits;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * WORD + b)
            })
        })
    }

    /// Undirected edges `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| self.neighbors(i).filter(move |&j| j > i).map(move |j| (i, j)))
            .collect()
    }

    /// Induced subgraph on `vertices`; vertex `vertices[a]` becomes `a`.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<Graph> {
        for &v in vertices {
            self.check_vertex(v)?;
        }
        let mut g = Graph::new(vertices.len());
        for (a, &u) in vertices.iter().enumerate() {
            for (b, &v) in vertices.iter().enumerate().skip(a + 1) {
                if u != v && self.has_edge(u, v) {
                    g.set_edge_unchecked(a, b);
                }
            }
        }
        Ok(g)
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        check_permutation(perm, self.n)?;
        let mut g = Graph::new(self.n);
        for (i, j) in self.edges() {
            g.set_edge_unchecked(perm[i], perm[j]);
        }
        Ok(g)
    }

    /// Adjacency as a 0/1 real matrix.
    pub fn adjacency_matrix(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n, self.n), |(i, j)| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    pub(crate) fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n {
            return Err(Error::invalid(format!("vertex {v} out of range for n = {}", self.n)));
        }
        Ok(())
    }

    /// Bitset mask over `0..n` for a vertex set; duplicates collapse.
    pub(crate) fn mask(&self, set: &[usize]) -> Result<Vec<u64>> {
        let mut m = vec![0u64; self.words];
        for &v in set {
            self.check_vertex(v)?;
            m[v / WORD] |= 1 << (v % WORD);
        }
        Ok(m)
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::invalid(format!("permutation has length {} (expected {n})", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::invalid("not a permutation"));
        }
    }
    Ok(())
}

fn and_popcount(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

/// Ordered-pair edge count `c_G(X, Y)`: the number of `(x, y)` in `X x Y`
/// with `x ~ y`. An edge inside `X = Y` is counted twice.
pub fn edge_count(g: &Graph, x: &[usize], y: &[usize]) -> Result<u64> {
    let mx = g.mask(x)?;
    let my = g.mask(y)?;
    let mut total = 0u64;
    for (w, &bits) in mx.iter().enumerate() {
        let mut rest = bits;
        while rest != 0 {
            let v = w * WORD + rest.trailing_zeros() as usize;
            rest &= rest - 1;
            total += u64::from(and_popcount(g.row(v), &my));
        }
    }
    Ok(total)
}

fn set_size(mask: &[u64]) -> usize {
    mask.iter().map(|w| w.count_ones() as usize).sum()
}

/// Edge density `e_G(X, Y) = c_G(X, Y) / (|X| |Y|)`.
pub fn edge_density(g: &Graph, x: &[usize], y: &[usize]) -> Result<f64> {
    let nx = set_size(&g.mask(x)?);
    let ny = set_size(&g.mask(y)?);
    if nx == 0 || ny == 0 {
        return Err(Error::invalid("edge density of an empty vertex set"));
    }
    Ok(edge_count(g, x, y)? as f64 / (nx as f64 * ny as f64))
}

/// Assignment of each vertex of `0..n` to one of `k` nonempty classes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Validates that the labels are exactly `0..k` with no empty class.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::invalid("partition of an empty vertex set"));
        }
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        let mut used = vec![false; k];
        for &c in &assignment {
            used[c] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            return Err(Error::invalid(format!("class {empty} of {k} is empty")));
        }
        Ok(Partition { assignment, k })
    }

    /// Accepts arbitrary labels, dropping unused ones and compacting the rest
    /// to `0..k` in increasing label order.
    pub fn from_labels_compacted(labels: &[usize]) -> Result<Self> {
        let mut distinct: Vec<usize> = labels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let assignment = labels
            .iter()
            .map(|l| distinct.binary_search(l).expect("label present"))
            .collect();
        Partition::from_assignment(assignment)
    }

    pub fn from_classes(n: usize, classes: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n];
        for (c, class) in classes.iter().enumerate() {
            for &v in class {
                if v >= n {
                    return Err(Error::invalid(format!("vertex {v} out of range for n = {n}")));
                }
                if assignment[v] != usize::MAX {
                    return Err(Error::invalid(format!("vertex {v} assigned twice")));
                }
                assignment[v] = c;
            }
        }
        if let Some(v) = assignment.iter().position(|&c| c == usize::MAX) {
            return Err(Error::invalid(format!("vertex {v} is unassigned")));
        }
        Partition::from_assignment(assignment)
    }

    pub fn trivial(n: usize) -> Self {
        assert!(n > 0, "partition of an empty vertex set");
        Partition {
            assignment: vec![0; n],
            k: 1,
        }
    }

    pub fn discrete(n: usize) -> Self {
        assert!(n > 0, "partition of an empty vertex set");
        Partition {
            assignment: (0..n).collect(),
            k: n,
        }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn class_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Classes as sorted vertex lists, indexed by class.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.k];
        for (v, &c) in self.assignment.iter().enumerate() {
            classes[c].push(v);
        }
        classes
    }

    /// Renames class `c` to `new_index[c]`; `new_index` must permute `0..k`.
    pub fn relabel(&self, new_index: &[usize]) -> Result<Self> {
        check_permutation(new_index, self.k)?;
        Ok(Partition {
            assignment: self.assignment.iter().map(|&c| new_index[c]).collect(),
            k: self.k,
        })
    }

    /// Same partition with classes numbered by first appearance.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let assignment = self
            .assignment
            .iter()
            .map(|&c| {
                if map[c] == usize::MAX {
                    map[c] = next;
                    next += 1;
                }
                map[c]
            })
            .collect();
        Partition { assignment, k: self.k }
    }

    /// Equality of the underlying set partitions, ignoring class labels.
    pub fn same_grouping(&self, other: &Partition) -> bool {
        self.canonical() == other.canonical()
    }
}

/// Weighted graph with normalized vertex weights and symmetric edge weights
/// in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    vertex_weights: Vec<f64>,
    edge_weights: Array2<f64>,
}

impl WeightedGraph {
    pub fn new(vertex_weights: Vec<f64>, edge_weights: Array2<f64>) -> Result<Self> {
        let k = vertex_weights.len();
        if k == 0 {
            return Err(Error::invalid("weighted graph with no nodes"));
        }
        if edge_weights.dim() != (k, k) {
            return Err(Error::invalid(format!("edge weights are {:?}, expected {k}x{k}", edge_weights.dim())));
        }
        if vertex_weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("negative vertex weight"));
        }
        let total: f64 = vertex_weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("vertex weights sum to {total}")));
        }
        check_symmetric_unit(&edge_weights)?;
        Ok(WeightedGraph {
            vertex_weights,
            edge_weights,
        })
    }

    /// Finite graph viewed as a weighted graph: every vertex weight `1/n`,
    /// edge weights the adjacency.
    pub fn of_graph(g: &Graph) -> Result<Self> {
        let n = g.n();
        if n == 0 {
            return Err(Error::invalid("graph with no vertices"));
        }
        WeightedGraph::new(vec![1.0 / n as f64; n], g.adjacency_matrix())
    }

    pub fn k(&self) -> usize {
        self.vertex_weights.len()
    }

    pub fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weights
    }

    pub fn edge_weights(&self) -> &Array2<f64> {
        &self.edge_weights
    }
}

pub(crate) fn check_symmetric_unit(m: &Array2<f64>) -> Result<()> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::invalid(format!("matrix is {r}x{c}, expected square")));
    }
    for i in 0..r {
        for j in 0..r {
            let v = m[[i, j]];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("entry ({i}, {j}) = {v} outside [0, 1]")));
            }
            if v != m[[j, i]] {
                return Err(Error::invalid(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Per-vertex neighbor counts into each class of a partition:
/// `count(v, j) = c_G({v}, P_j)`.
#[derive(Clone, Debug)]
pub struct ClassCounts {
    k: usize,
    counts: Vec<u32>,
}

impl ClassCounts {
    pub fn new(g: &Graph, p: &Partition) -> Result<Self> {
        check_partition(g, p)?;
        let k = p.k();
        let n = g.n();
        let masks: Vec<Vec<u64>> = p.classes().iter().map(|c| g.mask(c)).collect::<Result<_>>()?;
        let mut counts = vec![0u32; n * k];
        let degrees = g.degrees();
        for v in 0..n {
            let out = &mut counts[v * k..(v + 1) * k];
            // Pick whichever is cheaper: one popcount sweep per class, or a
            // walk over the neighbor list.
            if k * g.words <= degrees[v] {
                for (j, m) in masks.iter().enumerate() {
                    out[j] = and_popcount(g.row(v), m);
                }
            } else {
                for u in g.neighbors(v) {
                    out[p.class_of(u)] += 1;
                }
            }
        }
        Ok(ClassCounts { k, counts })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, v: usize) -> &[u32] {
        &self.counts[v * self.k..(v + 1) * self.k]
    }

    /// `n` times the L1 distance between the weighted density vectors of `u`
    /// and `v`; integral, so ties compare exactly.
    #[inline]
    pub fn scaled_l1(&self, u: usize, v: usize) -> u64 {
        self.row(u)
            .iter()
            .zip(self.row(v))
            .map(|(&a, &b)| u64::from(a.abs_diff(b)))
            .sum()
    }
}

pub(crate) fn check_partition(g: &Graph, p: &Partition) -> Result<()> {
    if p.n() != g.n() {
        return Err(Error::invalid(format!("partition covers {} vertices, graph has {}", p.n(), g.n())));
    }
    Ok(())
}

/// Quotient `G/P`: vertex weights `|P_i|/n`, edge weights `e_G(P_i, P_j)`.
pub fn quotient(g: &Graph, p: &Partition) -> Result<WeightedGraph> {
    let counts = ClassCounts::new(g, p)?;
    let k = p.k();
    let sizes = p.class_sizes();
    let mut between = vec![0u64; k * k];
    for v in 0..g.n() {
        let c = p.class_of(v);
        for (j, &x) in counts.row(v).iter().enumerate() {
            between[c * k + j] += u64::from(x);
        }
    }
    let n = g.n() as f64;
    let vertex_weights = sizes.iter().map(|&s| s as f64 / n).collect();
    let edge_weights =
        Array2::from_shape_fn((k, k), |(i, j)| between[i * k + j] as f64 / (sizes[i] as f64 * sizes[j] as f64));
    WeightedGraph::new(vertex_weights, edge_weights)
}

/// Weighted edge-density vector of a vertex against the classes of a
/// partition: entry `j` is `(|P_j|/n) e_G({x}, P_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityVector {
    pub values: Vec<f64>,
}

pub fn density_vector(g: &Graph, p: &Partition, x: usize) -> Result<DensityVector> {
    check_partition(g, p)?;
    g.check_vertex(x)?;
    let n = g.n() as f64;
    let mut counts = vec![0u32; p.k()];
    for u in g.neighbors(x) {
        counts[p.class_of(u)] += 1;
    }
    Ok(DensityVector {
        values: counts.into_iter().map(|c| f64::from(c) / n).collect(),
    })
}

pub fn l1_distance(a: &DensityVector, b: &DensityVector) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(Error::invalid(format!(
            "density vectors have lengths {} and {}",
            a.values.len(),
            b.values.len()
        )));
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    fn two_edges() -> Graph {
        Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap()
    }

    fn halves() -> Partition {
        Partition::from_classes(4, &[vec![0, 1], vec![2, 3]]).unwrap()
    }

    /// Enumerates all ordered pairs; independent of the bitset path.
    fn brute_count(g: &Graph, x: &[usize], y: &[usize]) -> u64 {
        let mut c = 0;
        for &i in x {
            for &j in y {
                if g.edges().contains(&(i.min(j), i.max(j))) {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn edge_count_examples() {
        let g = path4();
        assert_eq!(edge_count(&g, &[0, 1], &[2, 3]).unwrap(), 1);
        assert_eq!(edge_count(&g, &[], &[2, 3]).unwrap(), 0);
        assert_eq!(edge_count(&g, &[0, 1], &[0, 1]).unwrap(), 2);
        assert!(edge_count(&g, &[4], &[0]).is_err());
    }

    #[test]
    fn edge_density_examples() {
        assert_eq!(edge_density(&path4(), &[0, 1], &[2, 3]).unwrap(), 0.25);
        let k3 = Graph::complete(3);
        assert_eq!(edge_density(&k3, &[0, 1, 2], &[0, 1, 2]).unwrap(), 6.0 / 9.0);
        assert_eq!(edge_density(&Graph::new(5), &[0, 3], &[1]).unwrap(), 0.0);
        assert!(edge_density(&k3, &[], &[0]).is_err());
    }

    #[test]
    fn quotient_of_path() {
        let q = quotient(&path4(), &halves()).unwrap();
        assert_eq!(q.vertex_weights(), &[0.5, 0.5]);
        assert_eq!(q.edge_weights(), &ndarray::array![[0.5, 0.25], [0.25, 0.5]]);
    }

    #[test]
    fn quotient_trivial_and_empty() {
        let g = path4();
        let q = quotient(&g, &Partition::trivial(4)).unwrap();
        assert_eq!(q.vertex_weights(), &[1.0]);
        assert_eq!(q.edge_weights()[[0, 0]], edge_density(&g, &[0, 1, 2, 3], &[0, 1, 2, 3]).unwrap());
        let q = quotient(&Graph::new(4), &halves()).unwrap();
        assert!(q.edge_weights().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn density_vector_examples() {
        let g = two_edges();
        let p = halves();
        assert_eq!(density_vector(&g, &p, 0).unwrap().values, vec![0.25, 0.0]);
        assert_eq!(density_vector(&g, &p, 2).unwrap().values, vec![0.0, 0.25]);
        assert_eq!(density_vector(&Graph::new(4), &p, 1).unwrap().values, vec![0.0, 0.0]);
        assert!(density_vector(&g, &p, 4).is_err());
    }

    #[test]
    fn l1_examples() {
        let dv = |v: &[f64]| DensityVector { values: v.to_vec() };
        assert_eq!(l1_distance(&dv(&[0.25, 0.0]), &dv(&[0.0, 0.25])).unwrap(), 0.5);
        assert_eq!(l1_distance(&dv(&[0.3, 0.1]), &dv(&[0.3, 0.1])).unwrap(), 0.0);
        assert_eq!(l1_distance(&dv(&[1.0, 0.0]), &dv(&[0.0, 1.0])).unwrap(), 2.0);
        assert!(l1_distance(&dv(&[1.0]), &dv(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn partition_rejects_empty_classes() {
        assert!(Partition::from_assignment(vec![0, 2, 2]).is_err());
        assert!(Partition::from_classes(3, &[vec![0], vec![1]]).is_err());
        assert!(Partition::from_classes(2, &[vec![0, 1], vec![1]]).is_err());
        let p = Partition::from_labels_compacted(&[5, 9, 5, 2]).unwrap();
        assert_eq!(p.assignment(), &[1, 2, 1, 0]);
    }

    #[test]
    fn graph_rejects_bad_adjacency() {
        assert!(Graph::from_adjacency(&[vec![true]]).is_err());
        assert!(Graph::from_adjacency(&[vec![false, true], vec![false, false]]).is_err());
        assert!(Graph::from_edges(2, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(2, &[(0, 2)]).is_err());
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (1..max_n).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
                let mut g = Graph::new(n);
                let mut it = bits.into_iter();
                for i in 0..n {
                    for j in (i + 1)..n {
                        if it.next().unwrap() {
                            g.set_edge_unchecked(i, j);
                        }
                    }
                }
                g
            })
        })
    }

    fn arb_graph_partition(max_n: usize) -> impl Strategy<Value = (Graph, Partition)> {
        arb_graph(max_n).prop_flat_map(|g| {
            let n = g.n();
            proptest::collection::vec(0..n, n)
                .prop_map(move |labels| (g.clone(), Partition::from_labels_compacted(&labels).unwrap()))
        })
    }

    proptest! {
        #[test]
        fn counts_match_brute_force_and_are_symmetric(
            g in arb_graph(12),
            xs in proptest::collection::btree_set(0usize..12, 0..6),
            ys in proptest::collection::btree_set(0usize..12, 0..6),
        ) {
            let x: Vec<usize> = xs.into_iter().filter(|&v| v < g.n()).collect();
            let y: Vec<usize> = ys.into_iter().filter(|&v| v < g.n()).collect();
            let c = edge_count(&g, &x, &y).unwrap();
            prop_assert_eq!(c, brute_count(&g, &x, &y));
            prop_assert_eq!(c, edge_count(&g, &y, &x).unwrap());
        }

        #[test]
        fn whole_graph_density(g in arb_graph(16)) {
            let all: Vec<usize> = (0..g.n()).collect();
            let n = g.n() as f64;
            prop_assert_eq!(edge_density(&g, &all, &all).unwrap(), 2.0 * g.num_edges() as f64 / (n * n));
        }

        #[test]
        fn discrete_quotient_is_adjacency(g in arb_graph(12)) {
            let q = quotient(&g, &Partition::discrete(g.n())).unwrap();
            prop_assert_eq!(q.edge_weights(), &g.adjacency_matrix());
        }

        #[test]
        fn density_vector_sums_to_degree((g, p) in arb_graph_partition(14)) {
            for x in 0..g.n() {
                let s: f64 = density_vector(&g, &p, x).unwrap().values.iter().sum();
                prop_assert!((s - g.degree(x) as f64 / g.n() as f64).abs() < 1e-12);
                let bound = p.class_sizes();
                for (j, v) in density_vector(&g, &p, x).unwrap().values.iter().enumerate() {
                    prop_assert!(*v >= 0.0 && *v <= bound[j] as f64 / g.n() as f64);
                }
            }
        }

        #[test]
        fn class_counts_agree_with_density_vectors((g, p) in arb_graph_partition(14)) {
            let counts = ClassCounts::new(&g, &p).unwrap();
            let n = g.n() as f64;
            for u in 0..g.n() {
                for v in 0..g.n() {
                    let a = density_vector(&g, &p, u).unwrap();
                    let b = density_vector(&g, &p, v).unwrap();
                    let d = l1_distance(&a, &b).unwrap();
                    prop_assert!((d - counts.scaled_l1(u, v) as f64 / n).abs() < 1e-12);
                }
            }
        }
    }
}
