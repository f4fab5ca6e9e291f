//! Disks bubbling off a base surface.
//!
//! A unit disk attached at boundary angle `p` is modelled on the base circle by
//! the Cauchy bump `βᵢ(2 atan(s/ε)) · 2ε/(ε² + s²)` in the arclength chart
//! `s = θ − p`, summed over `2π`-translates. As `ε → 0` the weighted disk
//! behaves like the disjoint union of the base and the attached disks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve_bem::{curve_steklov, CurveWeight};
use crate::error::{Error, Result};
use crate::exact_dtn::Domain;
use crate::scalar::{two_pi, Real};
use crate::spectrum::Spectrum;
use crate::trace::{check_positive, BoundaryWeight, TrigPolynomial, WeightRepresentation};
use crate::weighted_eig::{assemble, solve_with, SolveOptions};

/// Fourier degree per unit of `1/ε` for the bump.
pub const DEGREE_PER_INV_EPS: f64 = 40.0;
/// Hard cap on the bump degree.
pub const DEGREE_CAP: usize = 8000;
/// Bumps must satisfy `ε ≤ OVERLAP_RATIO · (minimal separation)`.
pub const OVERLAP_RATIO: f64 = 0.1;
/// Translates summed on each side for non-constant attached weights.
const TRANSLATES: i64 = 64;

/// Base surface with its density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BaseComponent<T: Real> {
    pub domain: Domain<T>,
    pub weight: BoundaryWeight<T>,
}

/// A base surface (possibly absent, meaning `β₀ = 0`) together with unit disks
/// attached at boundary angles of the base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DisjointUnionSpec<T: Real> {
    pub base: Option<BaseComponent<T>>,
    /// Density on the boundary circle of each attached disk.
    pub attached_disks: Vec<TrigPolynomial<T>>,
    pub attachment_points: Vec<T>,
}

/// Circular distance between two angles.
fn circular_distance<T: Real>(a: T, b: T) -> T {
    let tp = two_pi::<T>();
    let mut d = (a - b) % tp;
    if d < T::zero() {
        d += tp;
    }
    d.min(tp - d)
}

impl<T: Real> DisjointUnionSpec<T> {
    /// Disk with `β₀ = 1` and `count` unit-weight disks attached at equispaced angles.
    pub fn disk_with_unit_disks(count: usize) -> Self {
        let points = (0..count)
            .map(|i| two_pi::<T>() * T::from_usize_lossy(i) / T::from_usize_lossy(count.max(1)))
            .collect();
        Self {
            base: Some(BaseComponent { domain: Domain::Disk, weight: BoundaryWeight::uniform(1) }),
            attached_disks: vec![TrigPolynomial::constant(T::one()); count],
            attachment_points: points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base.is_none() && self.attached_disks.is_empty() {
            return Err(Error::InvalidParameter("a disjoint union needs at least one component".into()));
        }
        if self.attached_disks.len() != self.attachment_points.len() {
            return Err(Error::InvalidParameter(format!(
                "{} attached disks but {} attachment points",
                self.attached_disks.len(),
                self.attachment_points.len()
            )));
        }
        if let Some(base) = &self.base {
            base.domain.validate()?;
            base.weight.validate()?;
        }
        for w in &self.attached_disks {
            check_positive(w)?;
        }
        if self.min_separation() <= T::zero() {
            return Err(Error::InvalidParameter("attachment points must be pairwise distinct".into()));
        }
        Ok(())
    }

    /// Smallest circular distance between attachment points (`2π` for a single point).
    pub fn min_separation(&self) -> T {
        let pts = &self.attachment_points;
        let mut best = two_pi::<T>();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.min(circular_distance(pts[i], pts[j]));
            }
        }
        best
    }

    /// Sum of the weighted boundary lengths of all components.
    pub fn weighted_length(&self) -> T {
        let disks = self.attached_disks.iter().fold(T::zero(), |acc, w| acc + w.integral());
        let base = self.base.as_ref().map_or(T::zero(), |b| {
            let f = b.domain.arclength_factors();
            (0..b.weight.component_count()).fold(T::zero(), |acc, c| acc + f[c] * b.weight.mass(c))
        });
        base + disks
    }
}

fn component_spectrum<T: Real>(domain: &Domain<T>, weight: &BoundaryWeight<T>, degree: usize, count: usize) -> Result<Spectrum<T>> {
    let opts = SolveOptions { traces: false, ..SolveOptions::default() };
    match domain {
        Domain::Curve { curve } => {
            let beta = weight.components.first().cloned().ok_or_else(|| {
                Error::InvalidParameter("curve base needs one weight component".into())
            })?;
            let cw = match weight.representation {
                WeightRepresentation::Direct => CurveWeight::Fourier { beta },
                WeightRepresentation::Log => CurveWeight::Log { log_beta: beta },
            };
            let nodes = (4 * degree).max(64);
            curve_steklov(curve, &cw, nodes, count.min(nodes))
        }
        _ => {
            let problem = assemble(domain, weight, degree)?;
            solve_with(&problem, count.min(problem.dim()), opts)
        }
    }
}

/// First `count` eigenvalues of the disjoint union, normalized by its total
/// weighted length. `degree` is the trace degree used for every component.
pub fn union_spectrum<T: Real>(spec: &DisjointUnionSpec<T>, count: usize, degree: usize) -> Result<Spectrum<T>> {
    spec.validate()?;
    let mut values = Vec::new();
    if let Some(base) = &spec.base {
        values.extend(component_spectrum(&base.domain, &base.weight, degree, count)?.eigenvalues);
    }
    for w in &spec.attached_disks {
        let weight = BoundaryWeight::direct(vec![w.clone()]);
        values.extend(component_spectrum(&Domain::Disk, &weight, degree.max(w.degree()), count)?.eigenvalues);
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    values.truncate(count);
    Ok(Spectrum::new(values, spec.weighted_length()))
}

/// Fourier degree used for bumps of width `ε`.
pub fn bump_degree<T: Real>(eps: T) -> Result<usize> {
    let needed = (DEGREE_PER_INV_EPS / eps.to_f64_lossy()).ceil() as usize;
    if needed > DEGREE_CAP {
        return Err(Error::DegreeCap { needed, cap: DEGREE_CAP });
    }
    Ok(needed)
}

/// Periodized Cauchy bump of constant height `c` at angle `p`:
/// `c (1 + 2 Σ e^{-kε} cos k(θ − p))`, truncated at `degree`.
pub fn poisson_bump<T: Real>(c: T, p: T, eps: T, degree: usize) -> TrigPolynomial<T> {
    let two = T::lit(2.0);
    let (cos, sin) = (1..=degree)
        .map(|k| {
            let kk = T::from_usize_lossy(k);
            let a = two * c * (-kk * eps).exp();
            (a * (kk * p).cos(), a * (kk * p).sin())
        })
        .unzip();
    TrigPolynomial::new(c, cos, sin).expect("matching lengths")
}

/// Bump for a general attached weight `βᵢ`: the far-field value `βᵢ(π)` is
/// handled in closed form, the decaying remainder by summing translates.
fn attached_bump<T: Real>(beta: &TrigPolynomial<T>, p: T, eps: T, degree: usize) -> TrigPolynomial<T> {
    let far = beta.eval(T::pi());
    let mut bump = poisson_bump(far, p, eps, degree);
    if beta.degree() == 0 {
        return bump;
    }
    let nodes = (4 * degree + 4).max(256).next_power_of_two();
    let tp = two_pi::<T>();
    let two = T::lit(2.0);
    let samples: Vec<T> = (0..nodes)
        .map(|j| {
            let theta = tp * T::from_usize_lossy(j) / T::from_usize_lossy(nodes);
            let base = theta - p;
            (-TRANSLATES..=TRANSLATES).fold(T::zero(), |acc, n| {
                let s = base + tp * T::lit(n as f64);
                let phi = two * (s / eps).atan();
                acc + (beta.eval(phi) - far) * two * eps / (eps * eps + s * s)
            })
        })
        .collect();
    let rest = TrigPolynomial::fourier_of_samples(&samples, degree).expect("enough samples");
    bump = bump.add(&rest);
    bump
}

/// Density on the base circle that degenerates to `spec` as `ε → 0`.
pub fn make_degenerating_weight<T: Real>(spec: &DisjointUnionSpec<T>, eps: T) -> Result<BoundaryWeight<T>> {
    spec.validate()?;
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter("ε must be positive".into()));
    }
    let base_poly = match &spec.base {
        None => TrigPolynomial::constant(T::zero()),
        Some(b) => {
            if b.domain != Domain::Disk {
                return Err(Error::UnsupportedDomain("degenerating weights are built on the disk only"));
            }
            let d = b.weight.degree();
            b.weight.to_direct(d.max(1)).components[0].clone()
        }
    };
    let sep = spec.min_separation();
    if eps > T::lit(OVERLAP_RATIO) * sep {
        return Err(Error::OverlappingBumps { eps: eps.to_f64_lossy(), separation: sep.to_f64_lossy() });
    }
    let degree = bump_degree(eps)?.max(base_poly.degree());
    let mut total = base_poly;
    for (w, &p) in spec.attached_disks.iter().zip(&spec.attachment_points) {
        total = total.add(&attached_bump(w, p, eps, degree));
    }
    let weight = BoundaryWeight::direct(vec![total]);
    weight.validate()?;
    Ok(weight)
}

/// `exp(−2π/l)`, a lower bound for the modulus of a collar of boundary length `l`.
pub fn modulus_lower_bound<T: Real>(l: T) -> Result<T> {
    if !(l > T::zero()) {
        return Err(Error::InvalidParameter("length must be positive".into()));
    }
    Ok((-two_pi::<T>() / l).exp())
}

/// One line of a degeneration table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DegenerationRow<T: Real> {
    pub eps: T,
    pub k: usize,
    pub degree: usize,
    pub sigma_bar: T,
    pub union_sigma_bar: T,
    pub error: T,
}

/// Least-squares fit `error ≈ C / ln(1/ε)` for one index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrendFit<T: Real> {
    pub k: usize,
    pub constant: T,
    /// RMS misfit relative to the RMS error.
    pub relative_residual: T,
    /// Errors strictly decrease as `ε` decreases, or sit below the noise floor.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DegenerationTable<T: Real> {
    pub rows: Vec<DegenerationRow<T>>,
    pub fits: Vec<TrendFit<T>>,
}

impl<T: Real> DegenerationTable<T> {
    pub fn row(&self, eps: T, k: usize) -> Option<&DegenerationRow<T>> {
        self.rows.iter().find(|r| r.eps == eps && r.k == k)
    }

    pub fn fit(&self, k: usize) -> Option<&TrendFit<T>> {
        self.fits.iter().find(|f| f.k == k)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,k,sigma_bar,union_sigma_bar,error\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:e},{},{:.12e},{:.12e},{:.6e}\n",
                r.eps.to_f64_lossy(),
                r.k,
                r.sigma_bar.to_f64_lossy(),
                r.union_sigma_bar.to_f64_lossy(),
                r.error.to_f64_lossy()
            ));
        }
        s
    }
}

fn fit_trend<T: Real>(k: usize, eps: &[T], err: &[T]) -> TrendFit<T> {
    let x: Vec<T> = eps.iter().map(|&e| (-e.ln()).recip()).collect();
    let sxx = x.iter().fold(T::zero(), |a, &v| a + v * v);
    let sxy = x.iter().zip(err).fold(T::zero(), |a, (&u, &v)| a + u * v);
    let c = sxy / sxx;
    let n = T::from_usize_lossy(err.len());
    let misfit = x.iter().zip(err).fold(T::zero(), |a, (&u, &v)| a + (v - c * u) * (v - c * u));
    let scale = err.iter().fold(T::zero(), |a, &v| a + v * v);
    let relative_residual = if scale > T::zero() { (misfit / n).sqrt() / (scale / n).sqrt() } else { T::zero() };
    let floor = T::lit(1e-9);
    let monotone = err.windows(2).all(|w| w[1] < w[0] || w[0].max(w[1]) <= floor);
    TrendFit { k, constant: c, relative_residual, monotone }
}

/// `σ̄_k(𝔻, β_ε)` against `σ̄_k` of the union for `k = 1..=m` and each `ε`
/// (given in decreasing order).
pub fn degeneration_experiment<T: Real>(spec: &DisjointUnionSpec<T>, eps_list: &[T], m: usize) -> Result<DegenerationTable<T>> {
    if eps_list.is_empty() || m == 0 {
        return Err(Error::InvalidParameter("need at least one ε and one index".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("ε values must be strictly decreasing".into()));
    }
    let union_degree = 32.max(spec.attached_disks.iter().map(|w| w.degree()).max().unwrap_or(0));
    let union = union_spectrum(spec, m + 1, union_degree)?;
    let target = union.normalized.clone();
    for &e in eps_list {
        bump_degree(e)?;
    }
    let results: Vec<Result<(usize, Vec<T>)>> = eps_list
        .par_iter()
        .map(|&eps| {
            let weight = make_degenerating_weight(spec, eps)?;
            let degree = bump_degree(eps)?.max(weight.degree()).max(16);
            let problem = assemble(&Domain::Disk, &weight, degree)?;
            let s = solve_with(&problem, m + 1, SolveOptions { traces: false, ..SolveOptions::default() })?;
            Ok((degree, s.normalized))
        })
        .collect();
    let mut rows = Vec::new();
    let mut errs = vec![Vec::new(); m];
    for (&eps, res) in eps_list.iter().zip(results) {
        let (degree, normalized) = res?;
        for k in 1..=m {
            let error = (normalized[k] - target[k]).abs();
            errs[k - 1].push(error);
            rows.push(DegenerationRow { eps, k, degree, sigma_bar: normalized[k], union_sigma_bar: target[k], error });
        }
    }
    let fits = (1..=m).map(|k| fit_trend(k, eps_list, &errs[k - 1])).collect();
    Ok(DegenerationTable { rows, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn two_unit_disks() {
        let spec = DisjointUnionSpec::<f64>::disk_with_unit_disks(1);
        let s = union_spectrum(&spec, 8, 16).unwrap();
        let expected = [0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0];
        for (a, b) in s.eigenvalues.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_relative_eq!(s.weighted_length, 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(s.normalized[2], 4.0 * PI, max_relative = 1e-12);
    }

    #[test]
    fn k_disks_give_two_pi_k() {
        for k in 1..=4 {
            let spec = DisjointUnionSpec::<f64> {
                base: None,
                attached_disks: vec![TrigPolynomial::constant(1.0); k],
                attachment_points: (0..k).map(|i| i as f64).collect(),
            };
            let s = union_spectrum(&spec, k + 1, 8).unwrap();
            assert_relative_eq!(s.normalized[k], 2.0 * PI * k as f64, max_relative = 1e-12);
            assert_eq!(s.normalized[k - 1], 0.0);
        }
    }

    #[test]
    fn permutation_invariant() {
        let a = TrigPolynomial::new(1.0, vec![0.3], vec![0.1]).unwrap();
        let b = TrigPolynomial::constant(2.0);
        let s1 = DisjointUnionSpec { base: None, attached_disks: vec![a.clone(), b.clone()], attachment_points: vec![0.0, 1.0] };
        let s2 = DisjointUnionSpec { base: None, attached_disks: vec![b, a], attachment_points: vec![1.0, 0.0] };
        let x = union_spectrum(&s1, 6, 16).unwrap();
        let y = union_spectrum(&s2, 6, 16).unwrap();
        assert_eq!(x.eigenvalues, y.eigenvalues);
    }

    #[test]
    fn poisson_bump_matches_cauchy_sum() {
        // Oracle: direct sum of the Cauchy kernel over translates.
        let eps = 0.05;
        let bump = poisson_bump(1.0, 0.7, eps, bump_degree(eps).unwrap());
        for &theta in &[0.7, 0.72, 1.0, 3.0, 5.5] {
            let s0: f64 = theta - 0.7;
            let direct: f64 = (-20000..=20000)
                .map(|n| {
                    let s = s0 + 2.0 * PI * n as f64;
                    2.0 * eps / (eps * eps + s * s)
                })
                .sum();
            assert_relative_eq!(bump.eval(theta), direct, max_relative = 1e-5);
        }
        // Peak value coth(ε/2) ≈ 2/ε.
        assert_relative_eq!(bump.eval(0.7), 1.0 / (eps / 2.0).tanh(), max_relative = 1e-12);
    }

    #[test]
    fn total_mass() {
        let spec = DisjointUnionSpec::<f64>::disk_with_unit_disks(1);
        let w = make_degenerating_weight(&spec, 0.01).unwrap();
        assert_relative_eq!(w.mass(0), 4.0 * PI, max_relative = 1e-12);
    }

    #[test]
    fn nonconstant_attached_weight() {
        // Mass is preserved by the pullback; compare the sampled bump with a
        // direct translate sum of the displayed profile.
        let beta = TrigPolynomial::new(1.0, vec![0.4], vec![-0.2]).unwrap();
        let spec = DisjointUnionSpec { base: None, attached_disks: vec![beta.clone()], attachment_points: vec![2.0] };
        let eps = 0.1;
        let w = make_degenerating_weight(&spec, eps).unwrap();
        assert_relative_eq!(w.mass(0), beta.integral(), max_relative = 1e-6);
        for &theta in &[2.0, 2.05, 2.5, 4.0] {
            let direct: f64 = (-200000..=200000)
                .map(|n| {
                    let s: f64 = theta - 2.0 + 2.0 * PI * n as f64;
                    beta.eval(2.0 * (s / eps).atan()) * 2.0 * eps / (eps * eps + s * s)
                })
                .sum();
            assert_relative_eq!(w.eval(0, theta), direct, max_relative = 1e-5);
        }
    }

    #[test]
    fn errors() {
        let spec = DisjointUnionSpec::<f64>::disk_with_unit_disks(2);
        assert!(matches!(make_degenerating_weight(&spec, 0.5), Err(Error::OverlappingBumps { .. })));
        let one = DisjointUnionSpec::<f64>::disk_with_unit_disks(1);
        assert!(matches!(make_degenerating_weight(&one, 0.001), Err(Error::DegreeCap { .. })));
        let dup = DisjointUnionSpec::<f64> {
            base: None,
            attached_disks: vec![TrigPolynomial::constant(1.0); 2],
            attachment_points: vec![1.0, 1.0 + 2.0 * PI],
        };
        assert!(dup.validate().is_err());
        let empty = DisjointUnionSpec::<f64> { base: None, attached_disks: vec![], attachment_points: vec![] };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn modulus_bound() {
        assert_relative_eq!(modulus_lower_bound(2.0 * PI).unwrap(), (-1.0f64).exp());
        assert_relative_eq!(modulus_lower_bound(1.0).unwrap(), 0.001867442731707988, max_relative = 1e-12);
        assert!(modulus_lower_bound(1e12).unwrap() > 0.999_999);
        assert!(modulus_lower_bound(0.0).is_err());
    }

    #[test]
    fn experiment_trends_toward_union() {
        let spec = DisjointUnionSpec::<f64>::disk_with_unit_disks(1);
        let table = degeneration_experiment(&spec, &[0.2, 0.1, 0.05], 3).unwrap();
        for k in 1..=3 {
            assert!(table.fit(k).unwrap().monotone, "{}", table.to_csv());
        }
        let r = table.row(0.05, 2).unwrap();
        assert_relative_eq!(r.union_sigma_bar, 4.0 * PI, max_relative = 1e-12);
        println!("{}", table.to_csv());
    }
}
