//! Weighted undirected graphs, their Laplacians and validated spectra.
//!
//! Node ids are 0-based inside the library. The edge-list text format and
//! all user-facing reports use 1-based ids.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, Matrix};

/// An undirected edge between 0-based nodes `i < j` with positive weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

impl Edge {
    pub fn new(i: usize, j: usize, w: f64) -> Self {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        Self { i, j, w }
    }

    pub fn key(&self) -> (usize, usize) {
        (self.i, self.j)
    }
}

/// Simple, undirected, connected graph with positive edge weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// Builds and validates a graph. Edges are normalized to `i < j` and kept
    /// in the given order.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGraph(format!("need at least 2 nodes, got {n}")));
        }
        let mut seen = BTreeSet::new();
        let mut list = Vec::new();
        for e in edges {
            let e = Edge::new(e.i, e.j, e.w);
            if e.j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) references a node outside 1..={n}",
                    e.i + 1,
                    e.j + 1
                )));
            }
            if e.i == e.j {
                return Err(Error::InvalidGraph(format!("self-loop at node {}", e.i + 1)));
            }
            if !(e.w.is_finite() && e.w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has non-positive weight {}",
                    e.i + 1,
                    e.j + 1,
                    e.w
                )));
            }
            if !seen.insert(e.key()) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.i + 1,
                    e.j + 1
                )));
            }
            list.push(e);
        }
        let g = Self { n, edges: list };
        let components = g.components();
        if components.len() > 1 {
            return Err(Error::Disconnected {
                components: components
                    .into_iter()
                    .map(|c| c.into_iter().map(|v| v + 1).collect())
                    .collect(),
            });
        }
        Ok(g)
    }

    /// Unit-weight graph from 1-based node pairs.
    pub fn unit(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, pairs.iter().map(|&(i, j)| Edge::new(i - 1, j - 1, 1.0)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.edges.iter().any(|e| e.key() == key)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Connected components as sorted lists of 0-based nodes.
    fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut x = x;
            while p[x] != r {
                let nx = p[x];
                p[x] = r;
                x = nx;
            }
            r
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_index = vec![usize::MAX; self.n];
        for v in 0..self.n {
            let r = find(&mut parent, v);
            if root_index[r] == usize::MAX {
                root_index[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[root_index[r]].push(v);
        }
        groups
    }

    /// Copy with one more edge. Fails if the edge exists.
    pub fn with_edge(&self, e: Edge) -> Result<Graph> {
        if self.has_edge(e.i, e.j) {
            return Err(Error::InvalidGraph(format!(
                "edge ({}, {}) already present",
                e.i.min(e.j) + 1,
                e.i.max(e.j) + 1
            )));
        }
        let mut edges = self.edges.clone();
        edges.push(e);
        Graph::new(self.n, edges)
    }

    /// Copy without the edge `{i, j}`; errors if that disconnects the graph.
    pub fn without_edge(&self, i: usize, j: usize) -> Result<Graph> {
        let key = if i <= j { (i, j) } else { (j, i) };
        if !self.has_edge(i, j) {
            return Err(Error::InvalidGraph(format!(
                "edge ({}, {}) not present",
                key.0 + 1,
                key.1 + 1
            )));
        }
        Graph::new(self.n, self.edges.iter().copied().filter(|e| e.key() != key))
    }

    /// Copy with the weight of an existing edge replaced.
    pub fn with_weight(&self, i: usize, j: usize, w: f64) -> Result<Graph> {
        let key = if i <= j { (i, j) } else { (j, i) };
        if !self.has_edge(i, j) {
            return Err(Error::InvalidGraph(format!(
                "edge ({}, {}) not present",
                key.0 + 1,
                key.1 + 1
            )));
        }
        Graph::new(
            self.n,
            self.edges
                .iter()
                .map(|e| if e.key() == key { Edge { w, ..*e } } else { *e }),
        )
    }

    /// Relabels nodes: node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        assert_eq!(perm.len(), self.n);
        Graph::new(self.n, self.edges.iter().map(|e| Edge::new(perm[e.i], perm[e.j], e.w)))
    }

    /// Copy with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Graph> {
        Graph::new(self.n, self.edges.iter().map(|e| Edge { w: e.w * factor, ..*e }))
    }

    pub fn laplacian(&self) -> Matrix {
        let mut l = Matrix::zeros(self.n);
        for e in &self.edges {
            l[(e.i, e.j)] -= e.w;
            l[(e.j, e.i)] -= e.w;
            l[(e.i, e.i)] += e.w;
            l[(e.j, e.j)] += e.w;
        }
        l
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::from_laplacian(&self.laplacian())
    }

    /// Edge-list text: a `n <count>` header followed by `i j w` lines.
    /// Weights use the shortest representation that parses back exactly.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.i + 1, e.j + 1, e.w);
        }
        out
    }

    /// Parses the edge-list format: `i j w` per line (1-based), `#` comments,
    /// optional leading `n <count>` header; otherwise n is the largest id.
    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut declared_n = None;
        let mut raw = Vec::new();
        let mut saw_edge = false;
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0] == "n" {
                if saw_edge || declared_n.is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "`n` header must come before any edge".into(),
                    });
                }
                if fields.len() != 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "expected `n <count>`".into(),
                    });
                }
                let n: usize = fields[1].parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad node count `{}`", fields[1]),
                })?;
                declared_n = Some(n);
                continue;
            }
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected `i j w`, got `{line}`"),
                });
            }
            let id = |s: &str| -> Result<usize> {
                let v: usize = s.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad node id `{s}`"),
                })?;
                if v == 0 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "node ids are 1-based".into(),
                    });
                }
                Ok(v)
            };
            let i = id(fields[0])?;
            let j = id(fields[1])?;
            let w: f64 = fields[2].parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad weight `{}`", fields[2]),
            })?;
            saw_edge = true;
            raw.push((i, j, w));
        }
        let max_id = raw.iter().map(|&(i, j, _)| i.max(j)).max().unwrap_or(0);
        let n = declared_n.unwrap_or(max_id);
        if max_id > n {
            return Err(Error::InvalidGraph(format!(
                "node id {max_id} exceeds declared n = {n}"
            )));
        }
        Graph::new(n, raw.into_iter().map(|(i, j, w)| Edge::new(i - 1, j - 1, w)))
    }
}

/// Standard and bundled graphs.
pub mod generators {
    use super::*;

    /// Complete graph K_n with uniform weight.
    pub fn complete(n: usize, w: f64) -> Result<Graph> {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| Edge::new(i, j, w)));
        Graph::new(n, edges)
    }

    /// Path 1 - 2 - ... - n with unit weights.
    pub fn path(n: usize) -> Result<Graph> {
        Graph::new(n, (1..n).map(|i| Edge::new(i - 1, i, 1.0)))
    }

    /// Cycle on n nodes with unit weights.
    pub fn cycle(n: usize) -> Result<Graph> {
        Graph::new(n, (0..n).map(|i| Edge::new(i, (i + 1) % n, 1.0)))
    }

    /// Star with node 1 as the center and `leaves` unit-weight spokes.
    pub fn star(leaves: usize) -> Result<Graph> {
        Graph::new(leaves + 1, (1..=leaves).map(|v| Edge::new(0, v, 1.0)))
    }

    /// Six-node graph used for the edge-addition study.
    pub fn g1() -> Graph {
        Graph::parse_edge_list(include_str!("../data/g1.txt")).expect("bundled g1 is valid")
    }

    /// Ten-node, 27-edge graph used for the sparsification study.
    pub fn g2() -> Graph {
        Graph::parse_edge_list(include_str!("../data/g2.txt")).expect("bundled g2 is valid")
    }

    /// Five-node budget graph: a_12 = 1, a_23 = 2 - b, a_25 = b, a_45 = 1.
    pub fn g3(b: f64) -> Result<Graph> {
        if !(b > 0.0 && b < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "budget split b = {b} must lie in (0, 2)"
            )));
        }
        Graph::parse_edge_list(include_str!("../data/g3.txt"))
            .expect("bundled g3 is valid")
            .with_weight(1, 2, 2.0 - b)?
            .with_weight(1, 4, b)
    }

    /// Connected Erdős–Rényi graph G(n, p) with unit weights; redraws until
    /// connected.
    pub fn random_connected(n: usize, p: f64, seed: u64) -> Result<Graph> {
        if n < 2 || !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need n >= 2 and p in (0, 1], got n = {n}, p = {p}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let edges: Vec<Edge> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|_| rng.random::<f64>() < p)
                .map(|(i, j)| Edge::new(i, j, 1.0))
                .collect();
            match Graph::new(n, edges) {
                Ok(g) => return Ok(g),
                Err(Error::Disconnected { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
    }
}

/// Ordered eigenvalues and orthonormal eigenvectors of a graph Laplacian.
///
/// `eigenvalues[0]` is exactly zero and column 0 of `eigenvectors` is
/// exactly `1/√n`. The remaining columns have their first entry above
/// 1e-12 in magnitude made positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
}

const JACOBI_REL_TOL: f64 = 1e-12;
const EIGEN_REL_TOL: f64 = 1e-9;

impl Spectrum {
    /// Validation tolerance εₑ = 1e-9 · max(1, λ_n).
    pub fn tolerance(lambda_max: f64) -> f64 {
        EIGEN_REL_TOL * lambda_max.max(1.0)
    }

    pub fn from_laplacian(l: &Matrix) -> Result<Spectrum> {
        let n = l.dim();
        if n < 2 {
            return Err(Error::InvalidGraph("Laplacian must be at least 2 × 2".into()));
        }
        let scale = l.frobenius().max(1.0);
        if !l.is_symmetric(1e-12 * scale) {
            return Err(Error::InvalidGraph("Laplacian is not symmetric".into()));
        }
        for i in 0..n {
            let s: f64 = l.row(i).iter().sum();
            if s.abs() > 1e-12 * scale {
                return Err(Error::InvalidGraph(format!(
                    "row {} of the Laplacian sums to {s}",
                    i + 1
                )));
            }
        }
        let (vals, vecs) = jacobi_eigen(l, JACOBI_REL_TOL, 100)
            .ok_or_else(|| Error::Numerical("Jacobi iteration did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let mut eigenvalues: Vec<f64> = order.iter().map(|&k| vals[k]).collect();
        let mut q = Matrix::zeros(n);
        for (col, &k) in order.iter().enumerate() {
            for i in 0..n {
                q[(i, col)] = vecs[(i, k)];
            }
        }
        let lambda_max = eigenvalues[n - 1];
        let eps = Self::tolerance(lambda_max);
        if eigenvalues[0].abs() > eps {
            return Err(Error::Numerical(format!(
                "smallest eigenvalue {} is not zero",
                eigenvalues[0]
            )));
        }
        if eigenvalues[1] <= eps {
            return Err(Error::Numerical(format!(
                "algebraic connectivity {} is not positive: disconnected or degenerate graph",
                eigenvalues[1]
            )));
        }
        eigenvalues[0] = 0.0;
        canonicalize(&mut q);
        let spectrum = Spectrum {
            eigenvalues,
            eigenvectors: q,
        };
        spectrum.validate(l)?;
        Ok(spectrum)
    }

    fn validate(&self, l: &Matrix) -> Result<()> {
        let n = self.n();
        let eps = Self::tolerance(self.lambda_max());
        let q = &self.eigenvectors;
        let gram = q.transpose().matmul(q);
        let orth = gram.max_abs_diff(&Matrix::identity(n));
        if orth > eps {
            return Err(Error::Numerical(format!(
                "eigenvectors not orthonormal (defect {orth:e})"
            )));
        }
        let mut lam = Matrix::zeros(n);
        for k in 0..n {
            lam[(k, k)] = self.eigenvalues[k];
        }
        let rebuilt = q.matmul(&lam).matmul(&q.transpose());
        let defect = rebuilt.max_abs_diff(l);
        if defect > eps {
            return Err(Error::Numerical(format!(
                "reconstruction defect {defect:e} exceeds {eps:e}"
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// λ₂, …, λ_n.
    pub fn nonzero_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[1..]
    }

    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    pub fn lambda2(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.n() - 1]
    }

    /// True iff (λ_n − λ₂)/λ_n ≤ tol.
    pub fn is_complete_spectrum(&self, tol: f64) -> bool {
        (self.lambda_max() - self.lambda2()) / self.lambda_max() <= tol
    }

    /// Eigenvalues grouped into clusters closer than εₑ, each with the
    /// indices (≥ 1) of its eigenvectors.
    pub fn eigenspaces(&self) -> Vec<(f64, Vec<usize>)> {
        let eps = Self::tolerance(self.lambda_max());
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for k in 1..self.n() {
            let lam = self.eigenvalues[k];
            match groups.last_mut() {
                Some((_, ks)) if lam - self.eigenvalues[*ks.last().unwrap()] <= eps => ks.push(k),
                _ => groups.push((lam, vec![k])),
            }
        }
        for (lam, ks) in &mut groups {
            *lam = ks.iter().map(|&k| self.eigenvalues[k]).sum::<f64>() / ks.len() as f64;
        }
        groups
    }
}

fn canonicalize(q: &mut Matrix) {
    let n = q.dim();
    let c = 1.0 / (n as f64).sqrt();
    for i in 0..n {
        q[(i, 0)] = c;
    }
    // Modified Gram–Schmidt of columns 1.. against column 0 and each other.
    for k in 1..n {
        for m in 0..k {
            let dot: f64 = (0..n).map(|i| q[(i, k)] * q[(i, m)]).sum();
            for i in 0..n {
                q[(i, k)] -= dot * q[(i, m)];
            }
        }
        let norm: f64 = (0..n).map(|i| q[(i, k)] * q[(i, k)]).sum::<f64>().sqrt();
        for i in 0..n {
            q[(i, k)] /= norm;
        }
        if let Some(first) = (0..n).map(|i| q[(i, k)]).find(|v| v.abs() > 1e-12) {
            if first < 0.0 {
                for i in 0..n {
                    q[(i, k)] = -q[(i, k)];
                }
            }
        }
    }
}
