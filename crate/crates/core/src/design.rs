//! Topology searches minimizing Σ_α: single-edge addition, single-edge
//! removal and one-parameter budget reweighting.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fluctuation::sigma_alpha_total;
use crate::format::g9;
use crate::graph::{Edge, Graph};
use crate::kernel::SpectralKernel;

/// Relative tolerance on Σ_α within which candidates tie for the minimum.
pub const TIE_TOL: f64 = 1e-6;

/// Resolution in α of bisected switch points.
pub const CROSSOVER_RESOLUTION: f64 = 1e-3;

/// Width in b at which golden-section refinement stops.
pub const GOLDEN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub enum Candidate {
    /// 0-based node pair, `i < j`.
    Edge(usize, usize),
    /// Budget split b.
    Split(f64),
}

impl Candidate {
    fn edge(i: usize, j: usize) -> Self {
        Candidate::Edge(i.min(j), i.max(j))
    }
}

/// Edges render 1-based as `i-j`, splits as the number.
impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Candidate::Edge(i, j) => write!(f, "{}-{}", i + 1, j + 1),
            Candidate::Split(b) => f.write_str(&g9(*b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Addition,
    Removal,
    Reweighting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluated {
    pub candidate: Candidate,
    pub sigma_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignResult {
    pub kind: DesignKind,
    pub alpha: f64,
    /// In input order.
    pub evaluated: Vec<Evaluated>,
    /// Removal candidates that would disconnect the graph.
    pub skipped: Vec<Candidate>,
    /// Indices into `evaluated` within [`TIE_TOL`] of the minimum, sorted
    /// by (objective, candidate).
    pub argmin: Vec<usize>,
    /// Golden-section refinement (b*, Σ_α(b*)) for reweighting.
    pub refined: Option<Evaluated>,
}

impl DesignResult {
    fn new(kind: DesignKind, alpha: f64, evaluated: Vec<Evaluated>, skipped: Vec<Candidate>) -> Result<Self> {
        let min = evaluated.iter().map(|e| e.sigma_alpha).fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return invalid("no candidate could be evaluated");
        }
        let mut argmin: Vec<usize> = (0..evaluated.len())
            .filter(|&k| evaluated[k].sigma_alpha <= min + TIE_TOL * min.abs())
            .collect();
        argmin.sort_by(|&a, &b| {
            let (x, y) = (&evaluated[a], &evaluated[b]);
            x.sigma_alpha.total_cmp(&y.sigma_alpha).then(
                x.candidate
                    .partial_cmp(&y.candidate)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
        });
        Ok(Self {
            kind,
            alpha,
            evaluated,
            skipped,
            argmin,
            refined: None,
        })
    }

    pub fn best(&self) -> &Evaluated {
        self.refined.as_ref().unwrap_or(&self.evaluated[self.argmin[0]])
    }

    /// Tie set of minimizers, sorted lexicographically.
    pub fn argmin_set(&self) -> Vec<Candidate> {
        let mut set: Vec<Candidate> = self.argmin.iter().map(|&k| self.evaluated[k].candidate).collect();
        set.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        set
    }

    pub fn csv_header() -> &'static str {
        "candidate,alpha,sigma_alpha,is_argmin"
    }

    /// One row per evaluated candidate, without header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (k, e) in self.evaluated.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.candidate,
                g9(self.alpha),
                g9(e.sigma_alpha),
                self.argmin.contains(&k)
            ));
        }
        out
    }
}

fn objective(graph: &Graph, alpha: f64, tol: f64) -> Result<f64> {
    let kernel = SpectralKernel::from_graph(graph)?;
    Ok(sigma_alpha_total(&kernel, alpha, tol)?.value)
}

/// All node pairs that are not edges, lexicographic.
pub fn non_edges(graph: &Graph) -> Vec<(usize, usize)> {
    let n = graph.n();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !graph.has_edge(i, j))
        .collect()
}

/// Σ_α after adding each candidate unit-weight edge (all non-edges when
/// `candidates` is `None`).
pub fn best_addition(
    graph: &Graph,
    candidates: Option<&[(usize, usize)]>,
    alpha: f64,
    tol: f64,
) -> Result<DesignResult> {
    let pairs = candidates.map(<[_]>::to_vec).unwrap_or_else(|| non_edges(graph));
    if pairs.is_empty() {
        return invalid("no edge can be added");
    }
    for &(i, j) in &pairs {
        if i == j || i.max(j) >= graph.n() {
            return invalid(format!("candidate ({}, {}) is not a node pair", i + 1, j + 1));
        }
        if graph.has_edge(i, j) {
            return invalid(format!(
                "candidate ({}, {}) is already an edge",
                i.min(j) + 1,
                i.max(j) + 1
            ));
        }
    }
    let evaluated = pairs
        .par_iter()
        .map(|&(i, j)| {
            let g = graph.with_edge(Edge::new(i, j, 1.0))?;
            Ok(Evaluated {
                candidate: Candidate::edge(i, j),
                sigma_alpha: objective(&g, alpha, tol)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DesignResult::new(DesignKind::Addition, alpha, evaluated, Vec::new())
}

/// Σ_α after removing each candidate edge (all edges when `candidates` is
/// `None`). Removals that disconnect the graph are skipped and listed.
pub fn best_removal(
    graph: &Graph,
    candidates: Option<&[(usize, usize)]>,
    alpha: f64,
    tol: f64,
) -> Result<DesignResult> {
    let pairs = candidates
        .map(<[_]>::to_vec)
        .unwrap_or_else(|| graph.edges().iter().map(Edge::key).collect());
    for &(i, j) in &pairs {
        if !graph.has_edge(i, j) {
            return invalid(format!("candidate ({}, {}) is not an edge", i.min(j) + 1, i.max(j) + 1));
        }
    }
    let outcomes = pairs
        .par_iter()
        .map(|&(i, j)| {
            let candidate = Candidate::edge(i, j);
            match graph.without_edge(i, j) {
                Ok(g) => Ok(Ok(Evaluated {
                    candidate,
                    sigma_alpha: objective(&g, alpha, tol)?,
                })),
                Err(Error::Disconnected { .. }) => Ok(Err(candidate)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut evaluated = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(e) => evaluated.push(e),
            Err(c) => skipped.push(c),
        }
    }
    DesignResult::new(DesignKind::Removal, alpha, evaluated, skipped)
}

/// Σ_α(b) over `b_grid` for the graph family `template(b)`, then a
/// golden-section refinement on the grid cell pair around the minimum.
pub fn best_reweighting<F>(template: F, b_grid: &[f64], alpha: f64, tol: f64) -> Result<DesignResult>
where
    F: Fn(f64) -> Result<Graph> + Sync,
{
    if b_grid.is_empty() {
        return invalid("empty b grid");
    }
    if b_grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("b grid must be strictly increasing");
    }
    let eval = |b: f64| objective(&template(b)?, alpha, tol);
    let evaluated = b_grid
        .par_iter()
        .map(|&b| {
            Ok(Evaluated {
                candidate: Candidate::Split(b),
                sigma_alpha: eval(b)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = DesignResult::new(DesignKind::Reweighting, alpha, evaluated, Vec::new())?;
    let k = result.argmin[0];
    if b_grid.len() >= 3 {
        let lo = b_grid[k.saturating_sub(1)];
        let hi = b_grid[(k + 1).min(b_grid.len() - 1)];
        let (b, v) = golden_section(eval, lo, hi, GOLDEN_TOL)?;
        let grid_best = result.evaluated[k];
        result.refined = Some(if v <= grid_best.sigma_alpha {
            Evaluated {
                candidate: Candidate::Split(b),
                sigma_alpha: v,
            }
        } else {
            grid_best
        });
    }
    Ok(result)
}

/// Minimizer of a unimodal `f` on [lo, hi] to width `width`.
pub fn golden_section(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, width: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while hi - lo > width {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Edge design whose argmin can be tracked over α.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeDesign {
    Addition(Option<Vec<(usize, usize)>>),
    Removal(Option<Vec<(usize, usize)>>),
}

impl EdgeDesign {
    pub fn evaluate(&self, graph: &Graph, alpha: f64, tol: f64) -> Result<DesignResult> {
        match self {
            EdgeDesign::Addition(c) => best_addition(graph, c.as_deref(), alpha, tol),
            EdgeDesign::Removal(c) => best_removal(graph, c.as_deref(), alpha, tol),
        }
    }
}

/// Maximal α range over which the argmin set is constant. `from` and
/// `to` are bisected switch points, or grid ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArgminSegment {
    pub from: f64,
    pub to: f64,
    pub argmin: Vec<Candidate>,
}

/// Piecewise-constant argmin map over an increasing α grid, with switch
/// points refined by bisection to [`CROSSOVER_RESOLUTION`].
pub fn crossover_scan(graph: &Graph, design: &EdgeDesign, alpha_grid: &[f64], tol: f64) -> Result<Vec<ArgminSegment>> {
    if alpha_grid.is_empty() {
        return invalid("empty α grid");
    }
    if alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("α grid must be strictly increasing");
    }
    let sets = alpha_grid
        .iter()
        .map(|&a| Ok(design.evaluate(graph, a, tol)?.argmin_set()))
        .collect::<Result<Vec<_>>>()?;
    let mut segments = vec![ArgminSegment {
        from: alpha_grid[0],
        to: alpha_grid[0],
        argmin: sets[0].clone(),
    }];
    for k in 1..alpha_grid.len() {
        if sets[k] == sets[k - 1] {
            segments.last_mut().unwrap().to = alpha_grid[k];
            continue;
        }
        let (mut lo, mut hi) = (alpha_grid[k - 1], alpha_grid[k]);
        while hi - lo > CROSSOVER_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if design.evaluate(graph, mid, tol)?.argmin_set() == sets[k - 1] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let switch = 0.5 * (lo + hi);
        segments.last_mut().unwrap().to = switch;
        segments.push(ArgminSegment {
            from: switch,
            to: alpha_grid[k],
            argmin: sets[k].clone(),
        });
    }
    Ok(segments)
}
