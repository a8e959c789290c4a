//! Directed weighted graphs in compressed sparse row form.
//!
//! A [`DiGraph`] stores the out-adjacency `W` together with a secondary
//! in-edge index. Construction enforces the model assumptions: positive
//! weights, no self-loops, no sink nodes, and at least one node that every
//! other node can reach by a directed path (which makes `rank(L_rw) = n − 1`).

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `(src, dst, weight)`
pub type Edge = (usize, usize, f64);

/// Square sparse matrix in CSR layout with ascending column order per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from triplets already sorted by `(row, col)` with no
    /// duplicates.
    fn from_sorted_triplets(n: usize, triplets: impl IntoIterator<Item = Edge>) -> Self {
        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for (r, c, v) in triplets {
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// `y = M x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut counts = vec![0usize; n + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let slot = next[j];
                col_indices[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        Self {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn triplets(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }
}

/// Directed weighted graph satisfying the sink-free, co-reachable model.
#[derive(Debug, Clone, PartialEq)]
pub struct DiGraph {
    out: CsrMatrix,
    // In-edge index: row `j` lists the sources of edges into `j`.
    inc: CsrMatrix,
}

impl DiGraph {
    /// Validates an edge list and builds the CSR graph.
    pub fn from_edges(n: usize, edges: &[Edge]) -> Result<Self> {
        let diag = validate(n, edges);
        if let Some(err) = diag.first_error() {
            return Err(err);
        }
        let mut sorted = edges.to_vec();
        sorted.sort_by_key(|&(s, d, _)| (s, d));
        let out = CsrMatrix::from_sorted_triplets(n, sorted);
        let inc = out.transpose();
        Ok(Self { out, inc })
    }

    pub fn n(&self) -> usize {
        self.out.n
    }

    pub fn num_edges(&self) -> usize {
        self.out.nnz()
    }

    /// The weighted out-adjacency `W`.
    pub fn adjacency(&self) -> &CsrMatrix {
        &self.out
    }

    /// `Wᵀ`, i.e. in-edges grouped by destination.
    pub fn in_edges(&self) -> &CsrMatrix {
        &self.inc
    }

    pub fn out_degrees(&self) -> Vec<f64> {
        self.out.row_sums()
    }

    pub fn to_edges(&self) -> Vec<Edge> {
        self.out.triplets().collect()
    }

    pub fn diagnostics(&self) -> Diagnostics {
        validate(self.n(), &self.to_edges())
    }

    pub fn normalized_adjacency(&self) -> NormalizedAdjacency {
        NormalizedAdjacency::new(self)
    }

    pub fn random_walk_laplacian(&self) -> RwLaplacian {
        RwLaplacian::new(self.normalized_adjacency())
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.n(),
            edges: self.to_edges(),
        }
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        file.into_graph()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string(&self.to_file())?)?;
        Ok(())
    }
}

/// On-disk graph representation: `{"n": int, "edges": [[src, dst, weight], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<Edge>,
}

impl GraphFile {
    pub fn into_graph(self) -> Result<DiGraph> {
        DiGraph::from_edges(self.n, &self.edges)
    }
}

/// Row-stochastic `W̄ = D⁻¹W`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    out: CsrMatrix,
    inc: CsrMatrix,
}

impl NormalizedAdjacency {
    pub fn new(g: &DiGraph) -> Self {
        let degrees = g.out_degrees();
        let mut out = g.out.clone();
        for (w, d) in out.row_offsets.windows(2).zip(&degrees) {
            for v in &mut out.values[w[0]..w[1]] {
                *v /= d;
            }
        }
        let inc = out.transpose();
        Self { out, inc }
    }

    pub fn n(&self) -> usize {
        self.out.n
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.out
    }

    /// Column access: row `i` of the returned matrix is column `i` of `W̄`.
    pub fn columns(&self) -> &CsrMatrix {
        &self.inc
    }
}

/// `L_rw = I − W̄`, stored explicitly together with its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct RwLaplacian {
    wbar: NormalizedAdjacency,
    lap: CsrMatrix,
    lap_t: CsrMatrix,
}

impl RwLaplacian {
    pub fn new(wbar: NormalizedAdjacency) -> Self {
        let n = wbar.n();
        let mut triplets = Vec::with_capacity(wbar.out.nnz() + n);
        for i in 0..n {
            let (cols, vals) = wbar.out.row(i);
            let mut diag_done = false;
            for (&j, &v) in cols.iter().zip(vals) {
                if !diag_done && j > i {
                    triplets.push((i, i, 1.0));
                    diag_done = true;
                }
                triplets.push((i, j, -v));
            }
            if !diag_done {
                triplets.push((i, i, 1.0));
            }
        }
        let lap = CsrMatrix::from_sorted_triplets(n, triplets);
        let lap_t = lap.transpose();
        Self { wbar, lap, lap_t }
    }

    pub fn n(&self) -> usize {
        self.lap.n
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.lap
    }

    pub fn transpose(&self) -> &CsrMatrix {
        &self.lap_t
    }

    pub fn wbar(&self) -> &NormalizedAdjacency {
        &self.wbar
    }

    /// `y = L_rw x`
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.lap.matvec(x, y);
    }

    /// `y = L_rwᵀ x`
    pub fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.lap_t.matvec(x, y);
    }

    /// Dense `L_rwᵀ L_rw`; only for generators and oracles.
    pub fn gram_dense(&self) -> DMatrix<f64> {
        let l = self.lap.to_dense();
        l.transpose() * &l
    }

    /// `‖L_rw e_i‖²` for every column `i`.
    pub fn column_norms_sq(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.lap_t.row(i).1.iter().map(|v| v * v).sum())
            .collect()
    }
}

/// Structural report for an edge list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub n: usize,
    pub out_of_range: Vec<(usize, usize)>,
    pub self_loops: Vec<usize>,
    pub non_positive: Vec<(usize, usize, f64)>,
    pub duplicates: Vec<(usize, usize)>,
    pub sinks: Vec<usize>,
    /// A node reachable from every other node, if one exists.
    pub universal_sink: Option<usize>,
}

impl Diagnostics {
    pub fn co_reachable(&self) -> bool {
        self.universal_sink.is_some()
    }

    pub fn is_ok(&self) -> bool {
        self.first_error().is_none()
    }

    pub fn first_error(&self) -> Option<Error> {
        if self.n == 0 {
            return Some(Error::TooFewNodes(1));
        }
        if let Some(&(s, d)) = self.out_of_range.first() {
            return Some(Error::NodeOutOfRange(s, d, self.n));
        }
        if let Some(&i) = self.self_loops.first() {
            return Some(Error::SelfLoop(i));
        }
        if let Some(&(s, d, w)) = self.non_positive.first() {
            return Some(Error::NonPositiveWeight(s, d, w));
        }
        if let Some(&(s, d)) = self.duplicates.first() {
            return Some(Error::DuplicateEdge(s, d));
        }
        if let Some(&i) = self.sinks.first() {
            return Some(Error::SinkNode(i));
        }
        if self.universal_sink.is_none() {
            return Some(Error::NotCoReachable);
        }
        None
    }
}

/// Reports every model violation in an edge list. Never fails.
pub fn validate(n: usize, edges: &[Edge]) -> Diagnostics {
    let mut diag = Diagnostics {
        n,
        ..Default::default()
    };
    let mut kept: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
    for &(s, d, w) in edges {
        if s >= n || d >= n {
            diag.out_of_range.push((s, d));
            continue;
        }
        if s == d {
            diag.self_loops.push(s);
            continue;
        }
        // NaN fails this comparison too.
        if !(w > 0.0) {
            diag.non_positive.push((s, d, w));
        }
        kept.push((s, d));
    }
    kept.sort_unstable();
    for pair in kept.windows(2) {
        if pair[0] == pair[1] {
            diag.duplicates.push(pair[0]);
        }
    }
    kept.dedup();

    let mut out_deg = vec![0usize; n];
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(s, d) in &kept {
        out_deg[s] += 1;
        rev[d].push(s);
    }
    diag.sinks = (0..n).filter(|&i| out_deg[i] == 0).collect();
    diag.universal_sink = universal_sink(&rev);
    diag
}

/// A node that every other node reaches, found as a mother vertex of the
/// reversed graph (`rev[v]` lists sources of edges into `v`).
fn universal_sink(rev: &[Vec<usize>]) -> Option<usize> {
    let n = rev.len();
    if n == 0 {
        return None;
    }
    let mut seen = vec![false; n];
    let mut stack = Vec::new();
    let mut candidate = 0;
    for root in 0..n {
        if seen[root] {
            continue;
        }
        candidate = root;
        seen[root] = true;
        stack.push(root);
        while let Some(v) = stack.pop() {
            for &u in &rev[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
    }

    let mut reached = vec![false; n];
    let mut queue = VecDeque::from([candidate]);
    reached[candidate] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &u in &rev[v] {
            if !reached[u] {
                reached[u] = true;
                count += 1;
                queue.push_back(u);
            }
        }
    }
    (count == n).then_some(candidate)
}

/// Erdős–Rényi digraph on `n − 1` nodes plus a hub node `n − 1` that every
/// node points to and that points back to one uniformly chosen node.
///
/// Weights are uniform on `(0, 1]`.
pub fn gen_er_digraph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<DiGraph> {
    if n < 2 {
        return Err(Error::TooFewNodes(2));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "edge probability {p} not in [0, 1)"
        )));
    }
    let hub = n - 1;
    let mut edges = Vec::new();
    for i in 0..hub {
        for j in 0..hub {
            if i != j && rng.random::<f64>() < p {
                edges.push((i, j, 1.0 - rng.random::<f64>()));
            }
        }
    }
    for i in 0..hub {
        edges.push((i, hub, 1.0 - rng.random::<f64>()));
    }
    let target = rng.random_range(0..hub);
    edges.push((hub, target, 1.0 - rng.random::<f64>()));
    DiGraph::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_cycle() -> DiGraph {
        DiGraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap()
    }

    #[test]
    fn smallest_legal_graph() {
        let g = two_cycle();
        assert_eq!(g.n(), 2);
        assert_eq!(g.num_edges(), 2);
        assert!(g.diagnostics().is_ok());
    }

    #[test]
    fn construction_errors() {
        let err = DiGraph::from_edges(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::SelfLoop(0)));
        let err = DiGraph::from_edges(2, &[(0, 1, 0.0), (1, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveWeight(0, 1, _)));
        let err = DiGraph::from_edges(2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge(0, 1)));
        let err = DiGraph::from_edges(3, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::SinkNode(2)));
        let err = DiGraph::from_edges(2, &[(0, 2, 1.0), (1, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::NodeOutOfRange(0, 2, 2)));
        let err = DiGraph::from_edges(
            4,
            &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotCoReachable));
    }

    #[test]
    fn three_cycle_reachability() {
        let g = DiGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        assert!(g.diagnostics().co_reachable());
    }

    #[test]
    fn out_star_has_sink_leaves() {
        let diag = validate(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]);
        assert_eq!(diag.sinks, vec![1, 2, 3]);
        assert!(!diag.is_ok());
    }

    #[test]
    fn disjoint_cycles_not_co_reachable() {
        let diag = validate(4, &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)]);
        assert!(diag.sinks.is_empty());
        assert!(!diag.co_reachable());
    }

    #[test]
    fn universal_sink_found_when_not_first_root() {
        // 0 -> 1 -> 2 <-> 3 ; node 2 and 3 are reachable from all.
        let diag = validate(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 2, 1.0)]);
        let u = diag.universal_sink.unwrap();
        assert!(u == 2 || u == 3);
    }

    #[test]
    fn normalized_rows() {
        let g = two_cycle();
        let wbar = g.normalized_adjacency();
        assert_eq!(wbar.matrix().to_dense(), DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]));

        let g = DiGraph::from_edges(3, &[(0, 1, 2.0), (0, 2, 6.0), (1, 0, 1.0), (2, 0, 1.0)])
            .unwrap();
        let wbar = g.normalized_adjacency();
        assert_eq!(wbar.matrix().get(0, 1), 0.25);
        assert_eq!(wbar.matrix().get(0, 2), 0.75);
    }

    #[test]
    fn laplacian_by_hand() {
        let l = two_cycle().random_walk_laplacian();
        assert_eq!(l.matrix().to_dense(), DMatrix::from_row_slice(2, 2, &[1., -1., -1., 1.]));

        let g = DiGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[1., -1., 0., 0., 1., -1., -1., 0., 1.]);
        assert_eq!(g.random_walk_laplacian().matrix().to_dense(), expect);
    }

    #[test]
    fn laplacian_kills_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = gen_er_digraph(60, 0.1, &mut rng).unwrap();
        let l = g.random_walk_laplacian();
        let x = vec![3.5; 60];
        let mut y = vec![0.0; 60];
        l.apply(&x, &mut y);
        assert!(y.iter().all(|v| v.abs() <= 1e-12));
        for i in 0..60 {
            assert_eq!(l.matrix().get(i, i), 1.0);
        }
        assert_eq!(l.transpose().transpose(), *l.matrix());
    }

    #[test]
    fn er_with_zero_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = gen_er_digraph(5, 0.0, &mut rng).unwrap();
        let edges = g.to_edges();
        assert_eq!(edges.len(), 5);
        for i in 0..4 {
            assert!(edges.iter().any(|&(s, d, _)| s == i && d == 4));
        }
        let hub_out: Vec<_> = edges.iter().filter(|e| e.0 == 4).collect();
        assert_eq!(hub_out.len(), 1);
        assert!(hub_out[0].1 < 4);
    }

    #[test]
    fn er_edge_count_and_determinism() {
        let g1 = gen_er_digraph(200, 0.1, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let g2 = gen_er_digraph(200, 0.1, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(g1, g2);
        let expected = 199.0 * 198.0 * 0.1 + 200.0;
        let m = g1.num_edges() as f64;
        // Binomial std is about 62 edges.
        assert!((m - expected).abs() < 400.0, "{m} vs {expected}");
        assert!(g1.diagnostics().is_ok());
        assert!(g1.adjacency().values().iter().all(|&w| w > 0.0 && w <= 1.0));
    }

    #[test]
    fn er_rejects_bad_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(gen_er_digraph(1, 0.1, &mut rng).is_err());
        assert!(gen_er_digraph(10, 1.0, &mut rng).is_err());
    }

    #[test]
    fn json_format() {
        let g = two_cycle();
        let text = serde_json::to_string(&g.to_file()).unwrap();
        assert_eq!(text, r#"{"n":2,"edges":[[0,1,1.0],[1,0,1.0]]}"#);
        let back: GraphFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_graph().unwrap(), g);
        let bad: GraphFile = serde_json::from_str(r#"{"n":2,"edges":[[0,0,1.0]]}"#).unwrap();
        assert!(bad.into_graph().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn generated_graphs_are_valid_and_round_trip(
                n in 2usize..60, p in 0.0f64..0.5, seed in any::<u64>()
            ) {
                let g = gen_er_digraph(n, p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                prop_assert!(g.diagnostics().is_ok());
                let back = DiGraph::from_edges(n, &g.to_edges()).unwrap();
                prop_assert_eq!(&back, &g);

                let wbar = g.normalized_adjacency();
                for s in wbar.matrix().row_sums() {
                    prop_assert!((s - 1.0).abs() <= 1e-12);
                }
                let l = g.random_walk_laplacian();
                for s in l.matrix().row_sums() {
                    prop_assert!(s.abs() <= 1e-12);
                }
            }
        }
    }
}
