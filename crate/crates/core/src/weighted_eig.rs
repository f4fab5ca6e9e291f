//! Assembly and solution of the weighted Steklov eigenproblem `K u = σ M u`
//! in the Fourier trace basis of the disk, annulus and Möbius band.
//!
//! Small problems are solved densely. Large single-circle problems with a
//! diagonal stiffness (disk, Möbius band) use a block Krylov method on the
//! inverse pencil, with the mass applied by FFT in `O(N log N)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_dtn::{annulus_mode_block, moebius_symbol, Domain};
use crate::linalg::{block_krylov_largest, generalized_symmetric_eigen, KrylovOptions};
use crate::scalar::{two_pi, Real};
use crate::spectrum::{EigenTraces, Spectrum, DEFAULT_MULTIPLICITY_TOL};
use crate::trace::{basis_mode, synthesize_interleaved, BoundaryWeight};

/// Largest dense problem dimension before switching to the iterative path.
pub const DENSE_LIMIT: usize = 257;

/// Stiffness (Dirichlet energy) matrix.
#[derive(Clone, Debug)]
pub enum Stiffness<T: Real> {
    /// One circle, diagonal in the Fourier basis (disk, Möbius band).
    Diagonal(DVector<T>),
    /// Two circles laid out as `[outer | inner]`; index `i` couples only with
    /// `i + block` through `forms[i]`.
    Paired { block: usize, forms: Vec<[[T; 2]; 2]> },
}

impl<T: Real> Stiffness<T> {
    pub fn dim(&self) -> usize {
        match self {
            Stiffness::Diagonal(d) => d.len(),
            Stiffness::Paired { block, .. } => 2 * block,
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        match self {
            Stiffness::Diagonal(d) => DMatrix::from_diagonal(d),
            Stiffness::Paired { block, forms } => {
                let b = *block;
                let mut k = DMatrix::zeros(2 * b, 2 * b);
                for (i, f) in forms.iter().enumerate() {
                    for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        k[(i + r * b, i + c * b)] = f[r][c];
                    }
                }
                k
            }
        }
    }

    /// Block-diagonal `T` with `Tᵀ K T = diag(0, 1, 1, …)`, whose column `0`
    /// spans the kernel (the constants).
    fn whitening(&self) -> Whitening<T> {
        match self {
            Stiffness::Diagonal(d) => Whitening::Diagonal(
                d.iter().enumerate().map(|(i, &v)| if i == 0 { T::one() } else { v.sqrt().recip() }).collect(),
            ),
            Stiffness::Paired { block, forms } => {
                let blocks = forms
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        if i == 0 {
                            // c [[1, −1], [−1, 1]]: kernel (1, 1), unit energy on (1, −1)/(2√c).
                            let h = (T::lit(4.0) * f[0][0]).sqrt().recip();
                            [[T::one(), h], [T::one(), -h]]
                        } else {
                            // [[d, o], [o, d]]: eigenvectors (1, ±1)/√2 with values d ± o.
                            let r = T::lit(0.5).sqrt();
                            let p = (f[0][0] + f[0][1]).sqrt().recip() * r;
                            let m = (f[0][0] - f[0][1]).sqrt().recip() * r;
                            [[p, m], [p, -m]]
                        }
                    })
                    .collect();
                Whitening::Paired { block: *block, blocks }
            }
        }
    }
}

enum Whitening<T: Real> {
    Diagonal(Vec<T>),
    /// Per index `i`, columns map `(y_i, y_{i+b})` to `(x_i, x_{i+b})`.
    Paired { block: usize, blocks: Vec<[[T; 2]; 2]> },
}

impl<T: Real> Whitening<T> {
    fn apply(&self, y: &[T]) -> Vec<T> {
        match self {
            Whitening::Diagonal(s) => y.iter().zip(s).map(|(&a, &b)| a * b).collect(),
            Whitening::Paired { block, blocks } => {
                let b = *block;
                let mut x = vec![T::zero(); 2 * b];
                for (i, t) in blocks.iter().enumerate() {
                    x[i] = t[0][0] * y[i] + t[0][1] * y[i + b];
                    x[i + b] = t[1][0] * y[i] + t[1][1] * y[i + b];
                }
                x
            }
        }
    }

    fn apply_transpose(&self, x: &[T]) -> Vec<T> {
        match self {
            Whitening::Diagonal(s) => x.iter().zip(s).map(|(&a, &b)| a * b).collect(),
            Whitening::Paired { block, blocks } => {
                let b = *block;
                let mut y = vec![T::zero(); 2 * b];
                for (i, t) in blocks.iter().enumerate() {
                    y[i] = t[0][0] * x[i] + t[1][0] * x[i + b];
                    y[i + b] = t[0][1] * x[i] + t[1][1] * x[i + b];
                }
                y
            }
        }
    }
}

/// Mass matrix, either explicit or applied through samples of the density.
#[derive(Clone, Debug)]
pub enum Mass<T: Real> {
    Dense(DMatrix<T>),
    /// One sampled operator per circle, block-diagonal.
    Sampled(Vec<SampledMass<T>>),
}

impl<T: Real> Mass<T> {
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        match self {
            Mass::Dense(m) => (m * DVector::from_column_slice(u)).iter().copied().collect(),
            Mass::Sampled(parts) => {
                let b = u.len() / parts.len();
                let mut out = Vec::with_capacity(u.len());
                for (c, p) in parts.iter().enumerate() {
                    out.extend(p.apply(&u[c * b..(c + 1) * b]));
                }
                out
            }
        }
    }
}

/// `u ↦ ∫ u e_i β dθ` on one circle, evaluated with FFTs on `nodes` points.
#[derive(Clone)]
pub struct SampledMass<T: Real> {
    pub degree: usize,
    pub density: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for SampledMass<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledMass")
            .field("degree", &self.degree)
            .field("nodes", &self.density.len())
            .finish()
    }
}

impl<T: Real> SampledMass<T> {
    pub fn new(degree: usize, density: Vec<T>) -> Self {
        let p = density.len();
        let mut planner = FftPlanner::new();
        Self { degree, forward: planner.plan_fft_forward(p), inverse: planner.plan_fft_inverse(p), density }
    }

    pub fn nodes(&self) -> usize {
        self.density.len()
    }

    pub fn apply(&self, u: &[T]) -> Vec<T> {
        let p = self.nodes();
        let n = self.degree;
        let zero = Complex::new(T::zero(), T::zero());
        let mut buf = vec![zero; p];
        buf[0].re = u[0];
        for k in 1..=n {
            buf[k % p] += Complex::new(u[2 * k - 1], -u[2 * k]);
        }
        self.inverse.process(&mut buf);
        for (b, &d) in buf.iter_mut().zip(&self.density) {
            *b = Complex::new(b.re * d, T::zero());
        }
        self.forward.process(&mut buf);
        let h = two_pi::<T>() / T::from_usize_lossy(p);
        let mut out = Vec::with_capacity(2 * n + 1);
        out.push(buf[0].re * h);
        for k in 1..=n {
            out.push(buf[k].re * h);
            out.push(-buf[k].im * h);
        }
        out
    }
}

/// Assembled eigenproblem for a domain, weight and trace degree `N`.
#[derive(Clone, Debug)]
pub struct AssembledProblem<T: Real> {
    pub domain: Domain<T>,
    pub weight: BoundaryWeight<T>,
    pub degree: usize,
    pub stiffness: Stiffness<T>,
    pub mass: Mass<T>,
    /// Kernel of the stiffness: the constant function.
    pub constant: DVector<T>,
    /// `L = ∫ β dL`.
    pub weighted_length: T,
}

impl<T: Real> AssembledProblem<T> {
    pub fn dim(&self) -> usize {
        self.constant.len()
    }

    /// Number of trace coefficients per circle.
    pub fn block(&self) -> usize {
        2 * self.degree + 1
    }

    /// Dense stiffness and mass matrices (the mass is formed column by column
    /// when it is only available as an operator).
    pub fn dense_matrices(&self) -> (DMatrix<T>, DMatrix<T>) {
        let k = self.stiffness.to_dense();
        let m = match &self.mass {
            Mass::Dense(m) => m.clone(),
            sampled => {
                let n = self.dim();
                let mut m = DMatrix::zeros(n, n);
                for j in 0..n {
                    let mut e = vec![T::zero(); n];
                    e[j] = T::one();
                    m.set_column(j, &DVector::from_vec(sampled.apply(&e)));
                }
                (&m + m.transpose()) * T::lit(0.5)
            }
        };
        (k, m)
    }

    /// Node count used for trace sampling on each circle.
    pub fn trace_nodes(&self) -> usize {
        let wd = self.weight.degree();
        (4 * self.degree + 4).max(2 * self.degree + 2 * wd + 1).max(256).next_power_of_two()
    }

    /// `β · dL/dθ` at the trace nodes, all circles concatenated.
    pub fn trace_density(&self, nodes: usize) -> Vec<T> {
        let factors = self.domain.arclength_factors();
        let mut out = Vec::with_capacity(nodes * factors.len());
        for (c, &f) in factors.iter().enumerate() {
            out.extend(self.weight.samples(c, nodes).into_iter().map(|b| b * f));
        }
        out
    }
}

/// Which linear-algebra path to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolverPath {
    /// Dense up to [`DENSE_LIMIT`], iterative beyond.
    #[default]
    Auto,
    Dense,
    Iterative,
}

/// Builds stiffness and mass for `domain` with density `weight` on trace
/// polynomials of degree `degree`.
pub fn assemble<T: Real>(domain: &Domain<T>, weight: &BoundaryWeight<T>, degree: usize) -> Result<AssembledProblem<T>> {
    assemble_with(domain, weight, degree, SolverPath::Auto)
}

pub fn assemble_with<T: Real>(
    domain: &Domain<T>,
    weight: &BoundaryWeight<T>,
    degree: usize,
    path: SolverPath,
) -> Result<AssembledProblem<T>> {
    domain.validate()?;
    weight.validate()?;
    let comps = domain.boundary_components();
    if let Domain::Curve { .. } = domain {
        return Err(Error::UnsupportedDomain("curve domains are solved by the boundary integral module"));
    }
    if weight.component_count() != comps {
        return Err(Error::InvalidParameter(format!(
            "domain has {comps} boundary circle(s) but the weight has {} component(s)",
            weight.component_count()
        )));
    }
    if degree == 0 {
        return Err(Error::InvalidParameter("trace degree must be at least 1".into()));
    }
    let b = 2 * degree + 1;
    let factors = domain.arclength_factors();
    let weighted_length = (0..comps).fold(T::zero(), |acc, c| acc + factors[c] * weight.mass(c));

    let (stiffness, constant) = match domain {
        Domain::Disk | Domain::Moebius { .. } => {
            let d = DVector::from_fn(b, |i, _| {
                let k = basis_mode(i);
                let symbol = match domain {
                    Domain::Moebius { eps } => moebius_symbol(*eps, k).expect("validated"),
                    _ => T::from_usize_lossy(k),
                };
                T::pi() * symbol
            });
            let mut z = DVector::zeros(b);
            z[0] = T::one();
            (Stiffness::Diagonal(d), z)
        }
        Domain::Annulus { rho } => {
            let forms = (0..b)
                .map(|i| annulus_mode_block(*rho, basis_mode(i)).map(|m| m.form))
                .collect::<Result<Vec<_>>>()?;
            let mut z = DVector::zeros(2 * b);
            z[0] = T::one();
            z[b] = T::one();
            (Stiffness::Paired { block: b, forms }, z)
        }
        Domain::Curve { .. } => unreachable!(),
    };

    let dim = constant.len();
    let iterative = match path {
        SolverPath::Auto => dim > DENSE_LIMIT,
        SolverPath::Dense => false,
        SolverPath::Iterative => true,
    };
    let mass = if iterative {
        let wd = match weight.representation {
            crate::trace::WeightRepresentation::Direct => weight.degree(),
            crate::trace::WeightRepresentation::Log => 2 * degree,
        };
        let p = (2 * degree + degree.max(wd) + 1).max(256).next_power_of_two();
        Mass::Sampled(
            (0..comps)
                .map(|c| {
                    let dens = weight.samples(c, p).into_iter().map(|v| v * factors[c]).collect();
                    SampledMass::new(degree, dens)
                })
                .collect(),
        )
    } else {
        let mut m = DMatrix::zeros(dim, dim);
        for c in 0..comps {
            let block = weight.mass_matrix(c, degree)? * factors[c];
            m.view_mut((c * b, c * b), (b, b)).copy_from(&block);
        }
        Mass::Dense(m)
    };
    Ok(AssembledProblem {
        domain: domain.clone(),
        weight: weight.clone(),
        degree,
        stiffness,
        mass,
        constant,
        weighted_length,
    })
}

/// Solver settings.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub multiplicity_tol: f64,
    pub traces: bool,
    pub krylov: KrylovOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { multiplicity_tol: DEFAULT_MULTIPLICITY_TOL, traces: true, krylov: KrylovOptions::default() }
    }
}

/// First `count` eigenvalues with traces.
pub fn solve<T: Real>(problem: &AssembledProblem<T>, count: usize) -> Result<Spectrum<T>> {
    solve_with(problem, count, SolveOptions::default())
}

pub fn solve_with<T: Real>(problem: &AssembledProblem<T>, count: usize, opts: SolveOptions) -> Result<Spectrum<T>> {
    let dim = problem.dim();
    if count > dim || count == 0 {
        return Err(Error::TooManyEigenvalues { requested: count, available: dim });
    }
    let (values, vectors) = match &problem.mass {
        Mass::Sampled(_) => solve_iterative(problem, count, opts.krylov)?,
        Mass::Dense(_) => {
            let (k, m) = problem.dense_matrices();
            let g = generalized_symmetric_eigen(&k, &m, Some(&problem.constant))?;
            let vecs = (0..count).map(|i| g.vectors.column(i).into_owned()).collect();
            (g.values[..count].to_vec(), vecs)
        }
    };
    let spectrum = Spectrum::from_sorted(values, problem.weighted_length, T::lit(opts.multiplicity_tol));
    if !opts.traces {
        return Ok(spectrum);
    }
    let traces = build_traces(problem, &vectors);
    Ok(spectrum.with_traces(traces))
}

fn build_traces<T: Real>(problem: &AssembledProblem<T>, vectors: &[DVector<T>]) -> EigenTraces<T> {
    let p = problem.trace_nodes();
    let comps = problem.domain.boundary_components();
    let b = problem.block();
    let values = vectors
        .iter()
        .map(|v| {
            let mut out = Vec::with_capacity(p * comps);
            for c in 0..comps {
                out.extend(synthesize_interleaved(&v.as_slice()[c * b..(c + 1) * b], p));
            }
            out
        })
        .collect();
    EigenTraces {
        nodes: p,
        components: comps,
        density: problem.trace_density(p),
        values,
        coefficients: Some(vectors.iter().map(|v| v.iter().copied().collect()).collect()),
    }
}

/// Iterative path.
///
/// With the whitening `T` (`Tᵀ K T = diag(0, I)`), the pencil reduces to the
/// nonconstant coordinates `w` with Schur complement mass
/// `Ŝ = (TᵀMT)_ww − m mᵀ/m₀₀`; the largest eigenvalues `μ = 1/σ` of `Ŝ` are
/// computed by block Krylov iteration.
fn solve_iterative<T: Real>(
    problem: &AssembledProblem<T>,
    count: usize,
    opts: KrylovOptions,
) -> Result<(Vec<T>, Vec<DVector<T>>)> {
    let n = problem.dim();
    let r = n - 1;
    let white = problem.stiffness.whitening();
    let mass = &problem.mass;
    let pencil = |y: &[T]| white.apply_transpose(&mass.apply(&white.apply(y)));
    let mut e0 = vec![T::zero(); n];
    e0[0] = T::one();
    let mcol = pencil(&e0);
    let m00 = mcol[0];
    let apply = |w: &DVector<T>| -> DVector<T> {
        let mut y = Vec::with_capacity(n);
        y.push(T::zero());
        y.extend(w.iter().copied());
        let my = pencil(&y);
        let c = my[0] / m00;
        DVector::from_fn(r, |i, _| my[i + 1] - mcol[i + 1] * c)
    };
    let (mus, ws) = block_krylov_largest(r, count - 1, apply, opts)?;
    let mut values = vec![T::zero()];
    let z = DVector::from_vec(white.apply(&e0)) / m00.sqrt();
    let mut vectors = vec![z];
    for (mu, w) in mus.into_iter().zip(ws) {
        if !(mu > T::zero()) {
            return Err(Error::MassNotPositiveDefinite);
        }
        values.push(mu.recip());
        // wᵀŜw = μ for unit w; rescale to unit mass.
        let w = w / mu.sqrt();
        let mut y = Vec::with_capacity(n);
        y.push(-(0..r).fold(T::zero(), |acc, i| acc + mcol[i + 1] * w[i]) / m00);
        y.extend(w.iter().copied());
        vectors.push(DVector::from_vec(white.apply(&y)));
    }
    Ok((values, vectors))
}

/// One-shot assembly and solve.
pub fn weighted_spectrum<T: Real>(
    domain: &Domain<T>,
    weight: &BoundaryWeight<T>,
    degree: usize,
    count: usize,
) -> Result<Spectrum<T>> {
    solve(&assemble(domain, weight, degree)?, count)
}

/// Normalized eigenvalues at a sequence of trace degrees.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ConvergenceTable<T: Real> {
    pub degrees: Vec<usize>,
    /// `normalized[i][k]` is `σ̄_k` at `degrees[i]`.
    pub normalized: Vec<Vec<T>>,
    /// `max_k |σ̄_k(N_i) − σ̄_k(N_{i−1})| / σ̄_k(N_i)`, empty for the first row.
    pub successive_change: Vec<T>,
}

impl<T: Real> ConvergenceTable<T> {
    pub fn to_csv(&self) -> String {
        let count = self.normalized.first().map_or(0, |v| v.len());
        let mut out = String::from("degree");
        for k in 0..count {
            out.push_str(&format!(",sigma_bar_{k}"));
        }
        out.push_str(",successive_change\n");
        for (i, &n) in self.degrees.iter().enumerate() {
            out.push_str(&n.to_string());
            for v in &self.normalized[i] {
                out.push_str(&format!(",{:.17e}", v.to_f64_lossy()));
            }
            let ch = if i == 0 { String::new() } else { format!("{:.3e}", self.successive_change[i - 1].to_f64_lossy()) };
            out.push_str(&format!(",{ch}\n"));
        }
        out
    }
}

/// Runs the solver at each trace degree and reports successive relative changes.
pub fn convergence_study<T: Real>(
    domain: &Domain<T>,
    weight: &BoundaryWeight<T>,
    count: usize,
    degrees: &[usize],
) -> Result<ConvergenceTable<T>> {
    let opts = SolveOptions { traces: false, ..SolveOptions::default() };
    let mut normalized: Vec<Vec<T>> = Vec::new();
    for &n in degrees {
        let s = solve_with(&assemble(domain, weight, n)?, count, opts)?;
        normalized.push(s.normalized);
    }
    let successive_change = normalized
        .windows(2)
        .map(|w| {
            w[0].iter().zip(&w[1]).skip(1).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs() / b.abs()))
        })
        .collect();
    Ok(ConvergenceTable { degrees: degrees.to_vec(), normalized, successive_change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_dtn::{annulus_uniform_spectrum, moebius_uniform_spectrum};
    use crate::trace::TrigPolynomial;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn uniform_disk_spectrum() {
        let s = weighted_spectrum::<f64>(&Domain::Disk, &BoundaryWeight::uniform(1), 10, 7).unwrap();
        let expect = [0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        for (a, b) in s.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_relative_eq!(s.normalized[1], 2.0 * PI, max_relative = 1e-12);
        assert_eq!(s.multiplicities[1], 2);
    }

    #[test]
    fn uniform_annulus_matches_closed_form() {
        let rho = 0.4_f64;
        let s = weighted_spectrum(&Domain::Annulus { rho }, &BoundaryWeight::uniform(2), 12, 10).unwrap();
        let exact = annulus_uniform_spectrum(rho, 10).unwrap();
        for (a, b) in s.eigenvalues.iter().zip(&exact.eigenvalues) {
            assert!((a - b).abs() < 1e-11 * (1.0 + b), "{a} vs {b}");
        }
    }

    #[test]
    fn uniform_moebius_matches_closed_form() {
        let eps = 0.5_f64;
        let s = weighted_spectrum(&Domain::Moebius { eps }, &BoundaryWeight::uniform(1), 12, 9).unwrap();
        let exact = moebius_uniform_spectrum(eps, 9).unwrap();
        for (a, b) in s.eigenvalues.iter().zip(&exact.eigenvalues) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b));
        }
    }

    #[test]
    fn residual_contract_and_trace_normalization() {
        let beta = TrigPolynomial::<f64>::new(1.0, vec![0.3, 0.1], vec![-0.2, 0.05]).unwrap();
        let w = BoundaryWeight::direct(vec![beta.clone(), beta]);
        let p = assemble(&Domain::Annulus { rho: 0.3 }, &w, 8).unwrap();
        let s = solve(&p, 8).unwrap();
        let (k, m) = p.dense_matrices();
        let tr = s.traces.as_ref().unwrap();
        for i in 0..8 {
            let u = DVector::from_vec(tr.coefficients.as_ref().unwrap()[i].clone());
            let r = &k * &u - &m * &u * s.eigenvalues[i];
            let bound = 1e-10 * (k.norm() + s.eigenvalues[i] * m.norm()) * u.norm();
            assert!(r.norm() <= bound);
            assert_relative_eq!(tr.inner(i, i), 1.0, max_relative = 1e-10);
        }
        assert!(tr.inner(1, 2).abs() < 1e-10);
    }

    #[test]
    fn iterative_path_agrees_with_dense() {
        let beta = TrigPolynomial::<f64>::new(1.0, vec![0.4, 0.0, 0.2], vec![0.0, 0.3, 0.0]).unwrap();
        let cases = [
            (Domain::Disk, BoundaryWeight::direct(vec![beta.clone()])),
            (Domain::Moebius { eps: 0.6 }, BoundaryWeight::direct(vec![beta.clone()])),
            (Domain::Annulus { rho: 0.4 }, BoundaryWeight::direct(vec![beta.clone(), beta.rotate(1.0)])),
        ];
        for (domain, w) in cases {
            let dense = solve(&assemble_with(&domain, &w, 40, SolverPath::Dense).unwrap(), 8).unwrap();
            let it = solve(&assemble_with(&domain, &w, 40, SolverPath::Iterative).unwrap(), 8).unwrap();
            for (a, b) in it.eigenvalues.iter().zip(&dense.eigenvalues) {
                assert!((a - b).abs() < 1e-10 * (1.0 + b), "{domain:?}: {a} vs {b}");
            }
            let tr = it.traces.unwrap();
            for i in 0..8 {
                assert_relative_eq!(tr.inner(i, i), 1.0, max_relative = 1e-8);
            }
            assert!(tr.inner(1, 3).abs() < 1e-8);
        }
    }

    #[test]
    fn sampled_mass_matches_dense() {
        let beta = TrigPolynomial::<f64>::new(2.0, vec![0.4, 0.3], vec![0.1, 0.0]).unwrap();
        let w = BoundaryWeight::direct(vec![beta]);
        let dense = w.mass_matrix(0, 6).unwrap();
        let s = SampledMass::new(6, w.samples(0, 64));
        for j in 0..13 {
            let mut e = vec![0.0; 13];
            e[j] = 1.0;
            let col = s.apply(&e);
            for i in 0..13 {
                assert!((col[i] - dense[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_mismatched_components() {
        assert!(assemble(&Domain::Annulus { rho: 0.5 }, &BoundaryWeight::uniform(1), 4).is_err());
    }

    #[test]
    fn convergence_table_shape() {
        let beta = TrigPolynomial::<f64>::new(1.0, vec![0.5], vec![0.0]).unwrap();
        let w = BoundaryWeight::log(vec![beta]);
        let t = convergence_study::<f64>(&Domain::Disk, &w, 4, &[8, 16, 32]).unwrap();
        assert_eq!(t.normalized.len(), 3);
        assert!(t.successive_change[1] < 1e-10);
    }
}
