//! Optimization of normalized eigenvalues and eigenvalue functionals over
//! boundary densities in a fixed conformal class.
//!
//! Densities are parametrized as `β = exp(w)` with `w` a trigonometric
//! polynomial of degree `d` on each boundary circle. Every objective is a
//! functional `f(σ̄_1, …, σ̄_m)` to be minimized (maximizing `σ̄_k` minimizes
//! `−σ̄_k`). Steps come from a first-order model in which each cluster of
//! nearly equal eigenvalues moves like the eigenvalues of a small symmetric
//! matrix; the resulting min-max subproblem is solved in its dual form over
//! Fantope sets, which handles multiplicity without splitting clusters.

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_dtn::Domain;
use crate::functionals::{criticality_check, CriticalityReport, FunctionalSpec};
use crate::scalar::{two_pi, Real};
use crate::spectrum::Spectrum;
use crate::trace::{project_interleaved, BoundaryWeight, TrigPolynomial};
use crate::weighted_eig::{assemble, solve_with, SolveOptions};

pub const DEFAULT_WEIGHT_DEGREE: usize = 16;
pub const DEFAULT_RESTARTS: usize = 8;
/// Relative agreement required between the optimization and verification degrees.
pub const CERTIFICATE_TOL: f64 = 1e-8;
/// Extra eigenvalues computed beyond the objective's arity, to see clusters.
const EXTRA_EIGENVALUES: usize = 4;
const DUAL_ITERATIONS: usize = 400;

/// What to optimize.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "")]
pub enum Objective<T: Real> {
    MaximizeNormalized { k: usize },
    MinimizeFunctional { functional: FunctionalSpec<T> },
}

impl<T: Real> Objective<T> {
    /// Functional that is minimized.
    pub fn functional(&self) -> FunctionalSpec<T> {
        match self {
            Objective::MaximizeNormalized { k } => FunctionalSpec::SingleEigenvalueNeg { k: *k },
            Objective::MinimizeFunctional { functional } => functional.clone(),
        }
    }

    /// Reported value for a functional value `f`.
    pub fn reported(&self, f: T) -> T {
        match self {
            Objective::MaximizeNormalized { .. } => -f,
            Objective::MinimizeFunctional { .. } => f,
        }
    }

    pub fn is_maximization(&self) -> bool {
        matches!(self, Objective::MaximizeNormalized { .. })
    }

    fn validate(&self) -> Result<()> {
        match self {
            Objective::MaximizeNormalized { k } if *k == 0 => {
                Err(Error::InvalidParameter("σ̄_0 = 0 cannot be optimized".into()))
            }
            Objective::MaximizeNormalized { .. } => Ok(()),
            Objective::MinimizeFunctional { functional } => functional.validate(),
        }
    }
}

/// Step and stopping parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub max_iterations: usize,
    /// Stop when the norm of the model's steepest-descent element drops below this.
    pub first_order_tol: f64,
    /// Initial step scale `Δ` (step `δ = −Δ g`).
    pub initial_step: f64,
    pub min_step: f64,
    /// Largest coefficient-space step norm.
    pub max_step_norm: f64,
    /// Minimal ratio of actual to predicted decrease for acceptance.
    pub accept_ratio: f64,
    /// Iterations given to every start before the best one is continued.
    pub screening_iterations: usize,
    /// Relative gap below which eigenvalues are modelled as one cluster.
    pub cluster_window: f64,
    /// `max(β dL/dθ) / mean` above which the run is reported as degenerating.
    pub degeneration_ratio: f64,
    /// Degree doublings allowed when the certificate check fails.
    pub refinements: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            first_order_tol: 1e-7,
            initial_step: 0.05,
            min_step: 1e-14,
            max_step_norm: 0.5,
            accept_ratio: 0.1,
            screening_iterations: 12,
            cluster_window: 1e-3,
            degeneration_ratio: 1e4,
            refinements: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeOptions<T: Real> {
    pub weight_degree: usize,
    /// Trace degree; chosen from the weight degree when absent.
    pub trace_degree: Option<usize>,
    /// Random smooth starts, in addition to the uniform start.
    pub restarts: usize,
    pub seed: u64,
    pub schedule: Schedule,
    /// Include the collar start on annuli and Möbius bands.
    pub collar_start: bool,
    /// Additional labelled starting densities (any representation).
    pub extra_starts: Vec<(String, BoundaryWeight<T>)>,
}

impl<T: Real> Default for OptimizeOptions<T> {
    fn default() -> Self {
        Self {
            weight_degree: DEFAULT_WEIGHT_DEGREE,
            trace_degree: None,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            schedule: Schedule::default(),
            collar_start: true,
            extra_starts: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// First-order measure below tolerance at a simple eigenvalue.
    Converged,
    /// First-order measure below tolerance with a multiple eigenvalue.
    CriticalCluster,
    MaxIterations,
    /// Step scale fell below its minimum.
    Stagnated,
    /// Density concentrating; the run drifts toward a disjoint union.
    DegeneratingTowardUnion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct IterationRecord<T: Real> {
    pub iteration: usize,
    /// Reported objective after the iteration.
    pub value: T,
    pub step_scale: T,
    pub first_order: T,
    /// Size of the largest active eigenvalue cluster.
    pub cluster_size: usize,
}

/// Re-evaluation at a higher trace degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Certificate<T: Real> {
    pub degree: usize,
    pub verification_degree: usize,
    pub value: T,
    pub verified_value: T,
    pub relative_agreement: T,
    pub agrees: bool,
}

/// Result of [`maximize_normalized`] or [`minimize_functional`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OptimizationRun<T: Real> {
    pub domain: Domain<T>,
    pub objective: Objective<T>,
    pub weight_degree: usize,
    pub trace_degree: usize,
    pub schedule: Schedule,
    /// Label of the start that produced the result.
    pub start: String,
    /// Best density, as `log β`.
    pub weight: BoundaryWeight<T>,
    /// Best reported value (σ̄_k, or the functional value).
    pub value: T,
    /// "certified lower bound" or "upper bound".
    pub bound_kind: String,
    pub normalized: Vec<T>,
    pub certificate: Certificate<T>,
    pub first_order: T,
    pub status: RunStatus,
    pub criticality: Option<CriticalityReport<T>>,
    /// `max(β dL/dθ) / mean(β dL/dθ)` for the best density.
    pub concentration: T,
    pub history: Vec<IterationRecord<T>>,
    /// Labelled reference values (start values, planar families, unions).
    pub references: Vec<(String, T)>,
}

impl<T: Real> OptimizationRun<T> {
    /// Sizes of the active cluster along the run.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.history.iter().map(|r| r.cluster_size).collect()
    }

    /// Margin of the verified value over `target` (maximization only meaningful).
    pub fn margin_over(&self, target: T) -> T {
        self.certificate.verified_value.min(self.certificate.value) - target
    }
}

/// Weight degree large enough to resolve a collar of the domain.
pub fn suggested_weight_degree<T: Real>(domain: &Domain<T>) -> usize {
    let width = collar_width(domain);
    match width {
        Some(h) => ((T::lit(8.0) / h).to_f64_lossy().ceil() as usize).clamp(DEFAULT_WEIGHT_DEGREE, 512),
        None => DEFAULT_WEIGHT_DEGREE,
    }
}

/// Conformal width of the collar between opposite boundary arcs.
fn collar_width<T: Real>(domain: &Domain<T>) -> Option<T> {
    match domain {
        Domain::Annulus { rho } => Some(-rho.ln()),
        Domain::Moebius { eps } => Some(T::lit(-2.0) * eps.ln()),
        _ => None,
    }
}

fn default_trace_degree(weight_degree: usize) -> usize {
    (3 * weight_degree + 16).max(64)
}

/// `log β` for the collar density: the uniform measure of a disk pushed into a
/// strip of width `h` across the collar (`(π/h) sech(πx/h)` on both sides),
/// plus a small floor.
pub fn collar_start<T: Real>(domain: &Domain<T>, degree: usize) -> Option<BoundaryWeight<T>> {
    let h = collar_width(domain)?;
    let pi = T::pi();
    let floor = T::lit(0.01);
    let tp = two_pi::<T>();
    let sech = move |x: T| {
        let mut y = x % tp;
        if y > pi {
            y -= tp;
        } else if y < -pi {
            y += tp;
        }
        (pi / h) / (pi * y / h).cosh()
    };
    let comps = match domain {
        Domain::Annulus { rho } => {
            let outer = TrigPolynomial::project_fn(degree, |t| (sech(t) + floor).ln());
            // Inner arclength is ρ dθ: the same measure per dθ needs β/ρ.
            let inner = outer.add(&TrigPolynomial::constant(-rho.ln()));
            vec![outer, inner]
        }
        Domain::Moebius { .. } => {
            let half = T::lit(0.5);
            vec![TrigPolynomial::project_fn(degree, |t| (half * (sech(t) + sech(t - pi)) + floor).ln())]
        }
        _ => return None,
    };
    Some(BoundaryWeight::log(comps))
}

fn random_start<T: Real>(comps: usize, degree: usize, seed: u64) -> BoundaryWeight<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let polys = (0..comps)
        .map(|_| {
            let mut cos = Vec::with_capacity(degree);
            let mut sin = Vec::with_capacity(degree);
            for k in 1..=degree {
                let amp = 0.5 / (k * k) as f64;
                cos.push(T::lit(amp * rng.gen_range(-1.0..1.0)));
                sin.push(T::lit(amp * rng.gen_range(-1.0..1.0)));
            }
            TrigPolynomial::new(T::zero(), cos, sin).expect("matching lengths")
        })
        .collect();
    BoundaryWeight::log(polys)
}

/// Flattened `log β` coefficients of degree `degree` for any weight.
fn log_coefficients<T: Real>(weight: &BoundaryWeight<T>, degree: usize) -> Vec<T> {
    use crate::trace::WeightRepresentation;
    let mut x = Vec::new();
    for c in 0..weight.component_count() {
        let poly = match weight.representation {
            WeightRepresentation::Log => weight.components[c].truncate(degree),
            WeightRepresentation::Direct => {
                let p = (4 * degree.max(weight.degree())).max(256).next_power_of_two();
                let logs: Vec<T> = weight.samples(c, p).into_iter().map(|v| v.ln()).collect();
                TrigPolynomial::fourier_of_samples(&logs, degree).expect("enough samples")
            }
        };
        let mut coeffs = poly.to_interleaved();
        coeffs.resize(2 * degree + 1, T::zero());
        x.extend(coeffs);
    }
    x
}

struct Evaluator<'a, T: Real> {
    domain: &'a Domain<T>,
    comps: usize,
    degree: usize,
    trace_degree: usize,
    f: FunctionalSpec<T>,
    window: T,
    max_step: T,
}

struct Point<T: Real> {
    x: Vec<T>,
    f: T,
    spectrum: Spectrum<T>,
}

/// First-order model of one eigenvalue cluster.
struct ClusterModel<T: Real> {
    offsets: Vec<T>,
    /// `∂f/∂σ̄_i` for the cluster members (zero beyond the arity).
    weights: Vec<T>,
    /// `gens[a][b]` is the coefficient-space generator of entry `(a, b)`.
    gens: Vec<Vec<Vec<T>>>,
}

impl<T: Real> ClusterModel<T> {
    fn size(&self) -> usize {
        self.offsets.len()
    }

    fn matrix(&self, delta: &[T]) -> DMatrix<T> {
        let n = self.size();
        DMatrix::from_fn(n, n, |a, b| {
            let g = &self.gens[a.min(b)][a.max(b)];
            let v = g.iter().zip(delta).fold(T::zero(), |acc, (&u, &d)| acc + u * d);
            if a == b {
                v + self.offsets[a]
            } else {
                v
            }
        })
    }

    /// `Σ_ab X_ab G_ab`.
    fn adjoint(&self, x: &DMatrix<T>, out: &mut [T], scale: T) {
        let n = self.size();
        for a in 0..n {
            for b in a..n {
                let w = if a == b { x[(a, a)] } else { x[(a, b)] + x[(b, a)] } * scale;
                if w == T::zero() {
                    continue;
                }
                for (o, &g) in out.iter_mut().zip(&self.gens[a][b]) {
                    *o += w * g;
                }
            }
        }
    }

    /// Model change of `Σ w_i σ̄_i` under `delta`.
    fn model_change(&self, delta: &[T]) -> T {
        let vals = sorted_eigenvalues(self.matrix(delta));
        vals.iter()
            .zip(&self.weights)
            .zip(&self.offsets)
            .fold(T::zero(), |acc, ((&l, &w), &o)| acc + w * (l - o))
    }
}

fn sorted_eigenvalues<T: Real>(m: DMatrix<T>) -> Vec<T> {
    let mut v: Vec<T> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    v
}

/// Projection of a symmetric matrix onto `{0 ⪯ X ⪯ I, tr X = r}`.
fn project_fantope<T: Real>(x: &DMatrix<T>, r: usize) -> DMatrix<T> {
    let eig = SymmetricEigen::new((x + x.transpose()) * T::lit(0.5));
    let mu: Vec<T> = eig.eigenvalues.iter().copied().collect();
    let target = T::from_usize_lossy(r);
    let clip = |tau: T| mu.iter().map(|&m| (m - tau).max(T::zero()).min(T::one())).collect::<Vec<_>>();
    let sum = |v: &[T]| v.iter().fold(T::zero(), |a, &b| a + b);
    let lo0 = mu.iter().fold(T::inf(), |a, &b| a.min(b)) - T::one();
    let hi0 = mu.iter().fold(-T::inf(), |a, &b| a.max(b));
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..100 {
        let mid = (lo + hi) * T::lit(0.5);
        if sum(&clip(mid)) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = clip((lo + hi) * T::lit(0.5));
    let v = &eig.eigenvectors;
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for (i, &l) in lam.iter().enumerate() {
        let col = v.column(i);
        out += col * col.transpose() * l;
    }
    out
}

/// Piece `coef · S_r` of the Abel decomposition of a cluster's weighted sum.
struct Piece {
    cluster: usize,
    rank: usize,
    coef: f64,
}

struct StepProposal<T: Real> {
    delta: Vec<T>,
    predicted: T,
    first_order: T,
}

impl<'a, T: Real> Evaluator<'a, T> {
    fn params(&self) -> usize {
        self.comps * (2 * self.degree + 1)
    }

    fn weight(&self, x: &[T]) -> BoundaryWeight<T> {
        let b = 2 * self.degree + 1;
        BoundaryWeight::log((0..self.comps).map(|c| TrigPolynomial::from_interleaved(&x[c * b..(c + 1) * b])).collect())
    }

    fn count(&self) -> usize {
        let dim = self.comps * (2 * self.trace_degree + 1);
        (self.f.arity() + 1 + EXTRA_EIGENVALUES).min(dim)
    }

    fn spectrum_at(&self, x: &[T], trace_degree: usize, traces: bool) -> Result<Spectrum<T>> {
        let problem = assemble(self.domain, &self.weight(x), trace_degree)?;
        let opts = SolveOptions { traces, ..SolveOptions::default() };
        solve_with(&problem, self.count(), opts)
    }

    fn value_of(&self, s: &Spectrum<T>) -> T {
        let m = self.f.arity();
        self.f.value(&s.normalized[1..=m])
    }

    fn point(&self, x: Vec<T>) -> Result<Point<T>> {
        let spectrum = self.spectrum_at(&x, self.trace_degree, true)?;
        let f = self.value_of(&spectrum);
        Ok(Point { x, f, spectrum })
    }

    /// Coefficient-space generators `∫ e_j β (σ δ_ab − Lσ φ_a φ_b) dL` for the
    /// eigenvalue indices in `idx`, with `σ` the cluster mean.
    fn generators(&self, s: &Spectrum<T>, idx: Range<usize>) -> Vec<Vec<Vec<T>>> {
        let tr = s.traces.as_ref().expect("traces requested");
        let l = s.weighted_length;
        let n = idx.len();
        let sigma = idx.clone().fold(T::zero(), |a, i| a + s.eigenvalues[i]) / T::from_usize_lossy(n);
        let mut gens = vec![vec![Vec::new(); n]; n];
        for a in 0..n {
            for b in a..n {
                let (ia, ib) = (idx.start + a, idx.start + b);
                let diag = if a == b { sigma } else { T::zero() };
                let mut g = Vec::with_capacity(self.params());
                for c in 0..self.comps {
                    let r = tr.component_range(c);
                    let samples: Vec<T> = r
                        .map(|j| tr.density[j] * (diag - l * sigma * tr.values[ia][j] * tr.values[ib][j]))
                        .collect();
                    g.extend(project_interleaved(&samples, self.degree));
                }
                gens[a][b] = g;
            }
        }
        gens
    }

    fn clusters(&self, s: &Spectrum<T>) -> Vec<Range<usize>> {
        let v = &s.normalized;
        let mut out = Vec::new();
        let mut start = 1;
        for i in 2..v.len() {
            if (v[i] - v[i - 1]).abs() > self.window * v[i].abs().max(T::machine_eps()) {
                out.push(start..i);
                start = i;
            }
        }
        out.push(start..v.len());
        out
    }

    fn models(&self, p: &Point<T>) -> Vec<ClusterModel<T>> {
        let m = self.f.arity();
        let grad = self.f.gradient(&p.spectrum.normalized[1..=m]);
        self.clusters(&p.spectrum)
            .into_iter()
            .filter(|r| r.start <= m)
            .map(|r| {
                let weights = r.clone().map(|i| if i <= m { grad[i - 1] } else { T::zero() }).collect();
                let offsets = r.clone().map(|i| p.spectrum.normalized[i]).collect();
                ClusterModel { offsets, weights, gens: self.generators(&p.spectrum, r) }
            })
            .filter(|cm| cm.weights.iter().any(|w| *w != T::zero()))
            .collect()
    }

    /// Minimizes `model(δ) + |δ|²/(2Δ)` through its dual over Fantope sets.
    fn propose(&self, models: &[ClusterModel<T>], step: T) -> StepProposal<T> {
        let p = self.params();
        let mut g_lin = vec![T::zero(); p];
        let mut pieces = Vec::new();
        for (ci, cm) in models.iter().enumerate() {
            let n = cm.size();
            for r in 1..=n {
                let coef = if r < n { cm.weights[r - 1] - cm.weights[r] } else { cm.weights[n - 1] };
                if coef == T::zero() {
                    continue;
                }
                if r < n && coef < T::zero() {
                    pieces.push(Piece { cluster: ci, rank: r, coef: coef.to_f64_lossy() });
                } else {
                    // Linear (trace) or concave piece: linearize at the
                    // current ordering, which bounds the model from above.
                    let x = DMatrix::from_fn(n, n, |a, b| if a == b && a < r { T::one() } else { T::zero() });
                    cm.adjoint(&x, &mut g_lin, coef);
                }
            }
        }
        // Remove the global scale direction (constant term on every circle).
        let b = 2 * self.degree + 1;
        let project_scale = |g: &mut Vec<T>| {
            let mean = (0..self.comps).fold(T::zero(), |a, c| a + g[c * b]) / T::from_usize_lossy(self.comps);
            for c in 0..self.comps {
                g[c * b] -= mean;
            }
        };

        let build_g = |xs: &[DMatrix<T>]| {
            let mut g = g_lin.clone();
            for (pc, x) in pieces.iter().zip(xs) {
                models[pc.cluster].adjoint(x, &mut g, T::lit(pc.coef));
            }
            project_scale(&mut g);
            g
        };

        let mut xs: Vec<DMatrix<T>> = pieces
            .iter()
            .map(|pc| {
                let n = models[pc.cluster].size();
                DMatrix::from_fn(n, n, |a, b| if a == b && a < pc.rank { T::one() } else { T::zero() })
            })
            .collect();
        if !pieces.is_empty() {
            // Lipschitz bound of X ↦ g(X) in Frobenius norms.
            let lip = pieces.iter().fold(T::zero(), |acc, pc| {
                let cm = &models[pc.cluster];
                let n = cm.size();
                let mut s = T::zero();
                for a in 0..n {
                    for bb in a..n {
                        let w = if a == bb { T::one() } else { T::lit(2.0) };
                        s += w * cm.gens[a][bb].iter().fold(T::zero(), |z, &v| z + v * v);
                    }
                }
                acc + T::lit(pc.coef * pc.coef) * s
            });
            let eta = (step * lip.max(T::machine_eps()) * T::from_usize_lossy(pieces.len())).recip();
            for _ in 0..DUAL_ITERATIONS {
                let g = build_g(&xs);
                let mut moved = T::zero();
                for (pc, x) in pieces.iter().zip(xs.iter_mut()) {
                    let cm = &models[pc.cluster];
                    let n = cm.size();
                    let coef = T::lit(pc.coef);
                    // ∂/∂X [coef tr(X D) − (Δ/2)|g(X)|²] = coef (D − Δ G(g)).
                    let gg = DMatrix::from_fn(n, n, |a, bb| {
                        let v = &cm.gens[a.min(bb)][a.max(bb)];
                        v.iter().zip(&g).fold(T::zero(), |z, (&u, &w)| z + u * w)
                    });
                    let d = DMatrix::from_fn(n, n, |a, bb| if a == bb { cm.offsets[a] } else { T::zero() });
                    let grad = (d - gg * step) * coef;
                    let next = project_fantope(&(&*x + grad * eta), pc.rank);
                    moved = moved.max((&next - &*x).amax());
                    *x = next;
                }
                if moved < T::lit(1e-12) {
                    break;
                }
            }
        }
        let g = build_g(&xs);
        let norm = g.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
        let mut delta: Vec<T> = g.iter().map(|&v| -v * step).collect();
        let dn = norm * step;
        let cap = self.max_step;
        if dn > cap {
            for d in &mut delta {
                *d *= cap / dn;
            }
        }
        let predicted = models.iter().fold(T::zero(), |a, cm| a + cm.model_change(&delta));
        StepProposal { delta, predicted, first_order: norm }
    }
}

fn concentration<T: Real>(s: &Spectrum<T>) -> T {
    let tr = s.traces.as_ref().expect("traces requested");
    let n = T::from_usize_lossy(tr.density.len());
    let mean = tr.density.iter().fold(T::zero(), |a, &b| a + b) / n;
    let max = tr.density.iter().fold(T::zero(), |a, &b| a.max(b));
    max / mean
}

struct LocalRun<T: Real> {
    best: Point<T>,
    history: Vec<IterationRecord<T>>,
    status: RunStatus,
    first_order: T,
    step: T,
}

fn descend<T: Real>(
    ev: &Evaluator<'_, T>,
    objective: &Objective<T>,
    start: Point<T>,
    iterations: usize,
    schedule: &Schedule,
    initial_step: T,
    offset: usize,
) -> LocalRun<T> {
    let mut cur = start;
    let mut step = initial_step;
    let mut history = Vec::new();
    let mut status = RunStatus::MaxIterations;
    let mut first_order = T::inf();
    for it in 0..iterations {
        if concentration(&cur.spectrum) > T::lit(schedule.degeneration_ratio) {
            status = RunStatus::DegeneratingTowardUnion;
            break;
        }
        let models = ev.models(&cur);
        let cluster_size = models.iter().map(|m| m.size()).max().unwrap_or(1);
        let mut accepted = false;
        let mut first = true;
        while step > T::lit(schedule.min_step) {
            let prop = ev.propose(&models, step);
            if first {
                first_order = prop.first_order;
                first = false;
            }
            if prop.first_order < T::lit(schedule.first_order_tol) {
                first_order = prop.first_order;
                break;
            }
            if !(prop.predicted < T::zero()) {
                step *= T::lit(0.25);
                continue;
            }
            let x: Vec<T> = cur.x.iter().zip(&prop.delta).map(|(&a, &d)| a + d).collect();
            let trial = ev.point(x);
            let Ok(trial) = trial else {
                step *= T::lit(0.25);
                continue;
            };
            let actual = trial.f - cur.f;
            let ratio = actual / prop.predicted;
            if actual < T::zero() && ratio >= T::lit(schedule.accept_ratio) {
                if ratio > T::lit(0.75) {
                    step *= T::lit(2.0);
                } else if ratio < T::lit(0.25) {
                    step *= T::lit(0.5);
                }
                cur = trial;
                accepted = true;
                break;
            }
            step *= T::lit(0.25);
        }
        history.push(IterationRecord {
            iteration: offset + it,
            value: objective.reported(cur.f),
            step_scale: step,
            first_order,
            cluster_size,
        });
        if first_order < T::lit(schedule.first_order_tol) {
            status = if cluster_size > 1 { RunStatus::CriticalCluster } else { RunStatus::Converged };
            break;
        }
        if !accepted {
            status = RunStatus::Stagnated;
            break;
        }
    }
    LocalRun { best: cur, history, status, first_order, step }
}

fn optimize<T: Real>(domain: &Domain<T>, objective: Objective<T>, opts: &OptimizeOptions<T>) -> Result<OptimizationRun<T>> {
    domain.validate()?;
    objective.validate()?;
    if let Domain::Curve { .. } = domain {
        return Err(Error::UnsupportedDomain("optimization runs on the disk, annulus and Möbius band"));
    }
    let d = opts.weight_degree;
    let comps = domain.boundary_components();
    let trace_degree = opts.trace_degree.unwrap_or_else(|| default_trace_degree(d));
    let mut ev = Evaluator {
        domain,
        comps,
        degree: d,
        trace_degree,
        f: objective.functional(),
        window: T::lit(opts.schedule.cluster_window),
        max_step: T::lit(opts.schedule.max_step_norm),
    };
    let mut starts: Vec<(String, BoundaryWeight<T>)> = vec![("uniform".into(), BoundaryWeight::log(vec![TrigPolynomial::constant(T::zero()); comps]))];
    if opts.collar_start {
        if let Some(w) = collar_start(domain, d) {
            starts.push(("collar".into(), w));
        }
    }
    for r in 0..opts.restarts {
        starts.push((format!("random-{r}"), random_start(comps, d, opts.seed.wrapping_add(r as u64))));
    }
    starts.extend(opts.extra_starts.iter().cloned());

    let schedule = opts.schedule;
    let step0 = T::lit(schedule.initial_step);
    let screened: Vec<(String, T, Result<LocalRun<T>>)> = starts
        .par_iter()
        .map(|(label, w)| {
            let res = ev.point(log_coefficients(w, d)).map(|p| {
                let f0 = p.f;
                (f0, descend(&ev, &objective, p, schedule.screening_iterations, &schedule, step0, 0))
            });
            match res {
                Ok((f0, run)) => (label.clone(), objective.reported(f0), Ok(run)),
                Err(e) => (label.clone(), T::zero(), Err(e)),
            }
        })
        .collect();
    let mut references: Vec<(String, T)> = Vec::new();
    let mut best: Option<(String, LocalRun<T>)> = None;
    let mut first_err = None;
    for (label, v0, res) in screened {
        match res {
            Ok(run) => {
                references.push((format!("start:{label}"), v0));
                if best.as_ref().is_none_or(|(_, b)| run.best.f < b.best.f) {
                    best = Some((label, run));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let (label, mut run) = match best {
        Some(b) => b,
        None => return Err(first_err.unwrap_or(Error::NoConvergence(0))),
    };
    let mut history = run.history.clone();
    let remaining = schedule.max_iterations.saturating_sub(schedule.screening_iterations);
    if matches!(run.status, RunStatus::MaxIterations) && remaining > 0 {
        let offset = history.len();
        let step = run.step;
        let cont = descend(&ev, &objective, run.best, remaining, &schedule, step, offset);
        history.extend(cont.history.iter().cloned());
        run = LocalRun { history: Vec::new(), ..cont };
    }

    // Certificate at doubled trace degree, refining when it disagrees.
    let mut certificate;
    let mut refinements = 0;
    loop {
        let verified = ev.spectrum_at(&run.best.x, 2 * ev.trace_degree, false)?;
        let vf = ev.value_of(&verified);
        let (a, b) = (objective.reported(run.best.f), objective.reported(vf));
        let rel = (a - b).abs() / b.abs().max(T::machine_eps());
        certificate = Certificate {
            degree: ev.trace_degree,
            verification_degree: 2 * ev.trace_degree,
            value: a,
            verified_value: b,
            relative_agreement: rel,
            agrees: rel <= T::lit(CERTIFICATE_TOL),
        };
        if certificate.agrees || refinements >= schedule.refinements {
            break;
        }
        refinements += 1;
        ev.trace_degree *= 2;
        let p = ev.point(run.best.x.clone())?;
        let offset = history.len();
        let cont = descend(&ev, &objective, p, schedule.screening_iterations, &schedule, run.step, offset);
        history.extend(cont.history.iter().cloned());
        run = cont;
    }

    let spectrum = run.best.spectrum.clone().with_tolerance(T::lit(schedule.cluster_window));
    let criticality = criticality_check(&ev.f, &spectrum).ok();
    let weight = ev.weight(&run.best.x);
    let concentration = concentration(&run.best.spectrum);
    if let Objective::MinimizeFunctional { functional: FunctionalSpec::HtPlus { t } } = &objective {
        let q = t.min(T::lit(3.0));
        references.push(("planar_ellipse_family".into(), (q + *t) / (two_pi::<T>() * q.sqrt())));
        // Two unit disks: σ̄_1 = 0 gives an infinite value for h_t^+.
    }
    if objective.is_maximization() {
        references.push(("two_pi".into(), two_pi()));
    }
    Ok(OptimizationRun {
        domain: domain.clone(),
        objective: objective.clone(),
        weight_degree: d,
        trace_degree: ev.trace_degree,
        schedule,
        start: label,
        weight,
        value: objective.reported(run.best.f),
        bound_kind: if objective.is_maximization() { "certified lower bound" } else { "upper bound" }.into(),
        normalized: run.best.spectrum.normalized.clone(),
        certificate,
        first_order: run.first_order,
        status: run.status,
        criticality,
        concentration,
        history,
        references,
    })
}

/// Maximizes `σ̄_k` over densities on `domain`.
pub fn maximize_normalized<T: Real>(domain: &Domain<T>, k: usize, opts: &OptimizeOptions<T>) -> Result<OptimizationRun<T>> {
    optimize(domain, Objective::MaximizeNormalized { k }, opts)
}

/// Minimizes `f(σ̄_1, …, σ̄_m)` over densities on `domain`.
pub fn minimize_functional<T: Real>(
    domain: &Domain<T>,
    f: &FunctionalSpec<T>,
    opts: &OptimizeOptions<T>,
) -> Result<OptimizationRun<T>> {
    optimize(domain, Objective::MinimizeFunctional { functional: f.clone() }, opts)
}

/// Derivative of `σ̄_k` with respect to `log β`.
///
/// Coefficients pair with a perturbation `δ` of `log β` (same interleaved
/// layout, one polynomial per circle) as `dσ̄_k[δ] = Σ δ_j g_j`.
#[derive(Clone, Debug, PartialEq)]
pub enum EigenvalueGradient<T: Real> {
    Simple { value: T, gradient: Vec<TrigPolynomial<T>> },
    /// `σ_k` is multiple; one generator per eigenvector of the cluster.
    Cluster { value: T, cluster: Range<usize>, generators: Vec<Vec<TrigPolynomial<T>>> },
}

impl<T: Real> EigenvalueGradient<T> {
    pub fn value(&self) -> T {
        match self {
            EigenvalueGradient::Simple { value, .. } | EigenvalueGradient::Cluster { value, .. } => *value,
        }
    }
}

fn split_polys<T: Real>(g: &[T], comps: usize, degree: usize) -> Vec<TrigPolynomial<T>> {
    let b = 2 * degree + 1;
    (0..comps).map(|c| TrigPolynomial::from_interleaved(&g[c * b..(c + 1) * b])).collect()
}

/// Gradient of `σ̄_k` at the log-density `log_beta` (one polynomial per
/// circle), with eigenvalues computed at `trace_degree`.
pub fn eigenvalue_gradient<T: Real>(
    domain: &Domain<T>,
    log_beta: &[TrigPolynomial<T>],
    k: usize,
    trace_degree: usize,
) -> Result<EigenvalueGradient<T>> {
    if k == 0 {
        return Err(Error::InvalidParameter("σ̄_0 is identically zero".into()));
    }
    let degree = log_beta.iter().map(|p| p.degree()).max().unwrap_or(0);
    let ev = Evaluator {
        domain,
        comps: domain.boundary_components(),
        degree,
        trace_degree,
        f: FunctionalSpec::SingleEigenvalueNeg { k },
        window: T::lit(crate::spectrum::DEFAULT_MULTIPLICITY_TOL),
        max_step: T::one(),
    };
    if log_beta.len() != ev.comps {
        return Err(Error::InvalidParameter("one log-density per boundary circle is required".into()));
    }
    let x = log_coefficients(&BoundaryWeight::log(log_beta.to_vec()), degree);
    let p = ev.point(x)?;
    let value = p.spectrum.normalized[k];
    let cluster = ev.clusters(&p.spectrum).into_iter().find(|r| r.contains(&k)).expect("k is computed");
    let gens = ev.generators(&p.spectrum, cluster.clone());
    if cluster.len() == 1 {
        return Ok(EigenvalueGradient::Simple { value, gradient: split_polys(&gens[0][0], ev.comps, degree) });
    }
    let generators = (0..cluster.len()).map(|a| split_polys(&gens[a][a], ev.comps, degree)).collect();
    Ok(EigenvalueGradient::Cluster { value, cluster, generators })
}

/// `σ̄_k` at a log-density; helper for finite-difference checks.
pub fn normalized_eigenvalue<T: Real>(domain: &Domain<T>, log_beta: &[TrigPolynomial<T>], k: usize, trace_degree: usize) -> Result<T> {
    let problem = assemble(domain, &BoundaryWeight::log(log_beta.to_vec()), trace_degree)?;
    let s = solve_with(&problem, k + 1, SolveOptions { traces: false, ..SolveOptions::default() })?;
    Ok(s.normalized[k])
}

/// Moduli family for [`moduli_sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFamily {
    Annulus,
    Moebius,
}

impl SweepFamily {
    pub fn domain<T: Real>(self, modulus: T) -> Domain<T> {
        match self {
            SweepFamily::Annulus => Domain::Annulus { rho: modulus },
            SweepFamily::Moebius => Domain::Moebius { eps: modulus },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepRow<T: Real> {
    pub modulus: T,
    pub weight_degree: usize,
    pub uniform_value: T,
    pub value: T,
    pub verified_value: T,
    pub margin: T,
    pub certified: bool,
    pub start: String,
    pub status: RunStatus,
}

/// Certified `σ̄_1` lower bounds over a grid of moduli. The weight degree of
/// each point is at least [`suggested_weight_degree`].
pub fn moduli_sweep<T: Real>(family: SweepFamily, grid: &[T], opts: &OptimizeOptions<T>) -> Result<Vec<SweepRow<T>>> {
    grid.par_iter()
        .map(|&m| {
            let domain = family.domain(m);
            let mut o = opts.clone();
            o.weight_degree = o.weight_degree.max(suggested_weight_degree(&domain));
            let run = maximize_normalized(&domain, 1, &o)?;
            let uniform_value = run
                .references
                .iter()
                .find(|(l, _)| l == "start:uniform")
                .map_or(T::zero(), |(_, v)| *v);
            let margin = run.margin_over(two_pi());
            Ok(SweepRow {
                modulus: m,
                weight_degree: o.weight_degree,
                uniform_value,
                value: run.value,
                verified_value: run.certificate.verified_value,
                margin,
                certified: run.certificate.agrees && margin > T::zero(),
                start: run.start,
                status: run.status,
            })
        })
        .collect()
}

/// CSV rendering of a sweep.
pub fn sweep_to_csv<T: Real>(rows: &[SweepRow<T>]) -> String {
    let mut s = String::from("modulus,weight_degree,uniform,value,verified,margin,certified,start,status\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{:.12e},{:.12e},{:.12e},{:.6e},{},{},{:?}\n",
            r.modulus.to_f64_lossy(),
            r.weight_degree,
            r.uniform_value.to_f64_lossy(),
            r.value.to_f64_lossy(),
            r.verified_value.to_f64_lossy(),
            r.margin.to_f64_lossy(),
            r.certified,
            r.start,
            r.status
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn fantope_projection() {
        let x = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, -1.0, 0.1, 0.0, 0.1, 0.5]);
        for r in 1..=3 {
            let p = project_fantope(&x, r);
            assert_relative_eq!(p.trace(), r as f64, epsilon = 1e-10);
            let ev = SymmetricEigen::new(p).eigenvalues;
            assert!(ev.iter().all(|&l| l > -1e-10 && l < 1.0 + 1e-10));
        }
    }

    #[test]
    fn disk_gradient_is_a_cluster_at_uniform() {
        let g = eigenvalue_gradient::<f64>(&Domain::Disk, &[TrigPolynomial::zero(4)], 2, 32).unwrap();
        match g {
            EigenvalueGradient::Cluster { cluster, generators, value } => {
                assert_eq!(cluster, 1..3);
                assert_eq!(generators.len(), 2);
                assert_relative_eq!(value, 2.0 * PI, max_relative = 1e-12);
            }
            _ => panic!("expected a cluster"),
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let w = vec![TrigPolynomial::new(0.0, vec![0.3, 0.1, -0.05], vec![0.2, 0.0, 0.04]).unwrap()];
        let EigenvalueGradient::Simple { value, gradient } = eigenvalue_gradient(&Domain::Disk, &w, 1, 48).unwrap() else {
            panic!("σ_1 should be simple");
        };
        let dir = TrigPolynomial::new(0.1, vec![0.2, -0.3, 0.1], vec![0.05, 0.1, -0.2]).unwrap();
        let analytic: f64 = gradient[0].to_interleaved().iter().zip(dir.to_interleaved()).map(|(a, b)| a * b).sum();
        let h = 1e-5;
        let plus = normalized_eigenvalue(&Domain::Disk, &[w[0].add(&dir.scale(h))], 1, 48).unwrap();
        let minus = normalized_eigenvalue(&Domain::Disk, &[w[0].add(&dir.scale(-h))], 1, 48).unwrap();
        assert_relative_eq!(analytic, (plus - minus) / (2.0 * h), max_relative = 1e-6);
        // Scale invariance.
        assert!(gradient[0].a0().abs() < 1e-12 * value);
    }

    #[test]
    fn disk_maximum_is_weinstock() {
        let opts = OptimizeOptions::<f64> {
            weight_degree: 4,
            restarts: 2,
            schedule: Schedule { max_iterations: 60, ..Schedule::default() },
            ..OptimizeOptions::default()
        };
        let run = maximize_normalized(&Domain::Disk, 1, &opts).unwrap();
        assert!(run.value <= 2.0 * PI + 1e-8);
        assert!(run.value > 2.0 * PI - 1e-6, "{}", run.value);
        assert!(run.certificate.agrees);
    }

    #[test]
    fn collar_start_shape() {
        let w = collar_start::<f64>(&Domain::Annulus { rho: 0.5 }, 32).unwrap();
        assert_eq!(w.component_count(), 2);
        assert_relative_eq!(w.eval(1, 0.3) * 0.5, w.eval(0, 0.3), max_relative = 1e-12);
        let m = collar_start::<f64>(&Domain::Moebius { eps: 0.5 }, 32).unwrap();
        assert_relative_eq!(m.eval(0, 0.2), m.eval(0, 0.2 + PI), max_relative = 1e-10);
        assert!(collar_start::<f64>(&Domain::Disk, 8).is_none());
    }
}
