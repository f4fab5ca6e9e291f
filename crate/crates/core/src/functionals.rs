//! Spectral functionals `f(σ̄_1, …, σ̄_m)`, their partial derivatives, and the
//! first-order criticality diagnostic over boundary densities.
//!
//! A density `β` is critical for `f ∘ σ̄` (within the conformal class) only if
//! there is a map `Φ` whose coordinates are eigenfunctions, with
//! `Σ_j σ_j φ_j² = 1` on the boundary and, for each cluster `I_i`,
//! `Σ_{j∈I_i} ∫ φ_j² β dL = L Σ_{k∈I_i, k≤m} ∂_k f / Σ_k σ_k ∂_k f`.
//! [`criticality_check`] fits the Gram matrices of `Φ` on every cluster by
//! least squares and compares both sides.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectrum::Spectrum;

/// Supported functionals; all are nonincreasing in each argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FunctionalSpec<T: Real> {
    /// `1/x₁ + t/x₂`.
    HtPlus { t: T },
    /// `1/(x₁ + t x₂)`.
    HtMinus { t: T },
    /// `(x₁^{−s} + t x₂^{−s})^{1/s}`.
    Hst { s: T, t: T },
    /// `1/(x_m x_n)`.
    Fmn { m: usize, n: usize },
    /// `−x_k`.
    SingleEigenvalueNeg { k: usize },
}

impl<T: Real> FunctionalSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        match *self {
            FunctionalSpec::HtPlus { t } | FunctionalSpec::HtMinus { t } if !(t >= T::zero()) => bad("t must be ≥ 0"),
            FunctionalSpec::Hst { s, t } if s == T::zero() || !(t >= T::zero()) => bad("need s ≠ 0 and t ≥ 0"),
            FunctionalSpec::Fmn { m, n } if m == 0 || n == 0 => bad("indices must be ≥ 1"),
            FunctionalSpec::SingleEigenvalueNeg { k: 0 } => bad("index must be ≥ 1"),
            _ => Ok(()),
        }
    }

    /// Number of normalized eigenvalues consumed.
    pub fn arity(&self) -> usize {
        match *self {
            FunctionalSpec::Fmn { m, n } => m.max(n),
            FunctionalSpec::SingleEigenvalueNeg { k } => k,
            _ => 2,
        }
    }

    /// `f(x)` for `x = (x₁, …, x_m)`; `+∞` where a negative power meets zero.
    pub fn value(&self, x: &[T]) -> T {
        assert!(x.len() >= self.arity());
        let inv = |v: T| if v > T::zero() { v.recip() } else { T::inf() };
        match *self {
            FunctionalSpec::HtPlus { t } => inv(x[0]) + t * inv(x[1]),
            FunctionalSpec::HtMinus { t } => inv(x[0] + t * x[1]),
            FunctionalSpec::Hst { s, t } => {
                let pw = |v: T| {
                    if v > T::zero() {
                        v.powf(-s)
                    } else if s > T::zero() {
                        T::inf()
                    } else {
                        T::zero()
                    }
                };
                let sum = pw(x[0]) + t * pw(x[1]);
                if sum == T::inf() {
                    if s > T::zero() {
                        T::zero()
                    } else {
                        T::inf()
                    }
                } else if sum == T::zero() {
                    if s > T::zero() {
                        T::inf()
                    } else {
                        T::zero()
                    }
                } else {
                    sum.powf(s.recip())
                }
            }
            FunctionalSpec::Fmn { m, n } => inv(x[m - 1] * x[n - 1]),
            FunctionalSpec::SingleEigenvalueNeg { k } => -x[k - 1],
        }
    }

    /// Analytic gradient at a point with positive coordinates.
    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        let m = self.arity();
        let mut g = vec![T::zero(); m];
        match *self {
            FunctionalSpec::HtPlus { t } => {
                g[0] = -(x[0] * x[0]).recip();
                g[1] = -t / (x[1] * x[1]);
            }
            FunctionalSpec::HtMinus { t } => {
                let d = x[0] + t * x[1];
                g[0] = -(d * d).recip();
                g[1] = -t / (d * d);
            }
            FunctionalSpec::Hst { s, t } => {
                let sum = x[0].powf(-s) + t * x[1].powf(-s);
                let outer = sum.powf(s.recip() - T::one());
                g[0] = -outer * x[0].powf(-s - T::one());
                g[1] = -outer * t * x[1].powf(-s - T::one());
            }
            FunctionalSpec::Fmn { m, n } => {
                let (a, b) = (x[m - 1], x[n - 1]);
                if m == n {
                    g[m - 1] = -T::lit(2.0) / (a * a * a);
                } else {
                    g[m - 1] = -(a * a * b).recip();
                    g[n - 1] = -(a * b * b).recip();
                }
            }
            FunctionalSpec::SingleEigenvalueNeg { k } => g[k - 1] = -T::one(),
        }
        g
    }
}

fn arguments<T: Real>(f: &FunctionalSpec<T>, spectrum: &Spectrum<T>) -> Result<Vec<T>> {
    f.validate()?;
    let m = f.arity();
    if spectrum.len() <= m {
        return Err(Error::TooManyEigenvalues { requested: m + 1, available: spectrum.len() });
    }
    Ok(spectrum.normalized[1..=m].to_vec())
}

/// `f(σ̄_1, …, σ̄_m)`.
pub fn evaluate<T: Real>(f: &FunctionalSpec<T>, spectrum: &Spectrum<T>) -> Result<T> {
    Ok(f.value(&arguments(f, spectrum)?))
}

/// Gradient with the clusters where `σ̄ ↦ f(σ̄)` is not differentiable.
#[derive(Clone, Debug, PartialEq)]
pub struct Partials<T: Real> {
    pub values: Vec<T>,
    /// Multiplicity clusters of size > 1 that meet `{1, …, m}`.
    pub flagged: Vec<Range<usize>>,
}

pub fn partials<T: Real>(f: &FunctionalSpec<T>, spectrum: &Spectrum<T>) -> Result<Partials<T>> {
    let x = arguments(f, spectrum)?;
    let m = f.arity();
    let flagged = spectrum
        .clusters()
        .into_iter()
        .filter(|c| c.len() > 1 && c.start <= m && c.end > 1)
        .collect();
    Ok(Partials { values: f.gradient(&x), flagged })
}

/// Both sides of the cluster condition for one index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CriticalityEntry<T: Real> {
    pub index: usize,
    pub cluster: Range<usize>,
    /// `Σ_{j∈I_i} ∫ φ_j² β dL` for the fitted map.
    pub lhs: T,
    /// `L Σ_{k∈I_i, k≤m} ∂_k f / Σ_k σ_k ∂_k f`.
    pub rhs: T,
    /// `|lhs − rhs| / L`.
    pub defect: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CriticalityReport<T: Real> {
    pub entries: Vec<CriticalityEntry<T>>,
    /// Largest pointwise deviation of the fitted `|Φ|²_σ` from 1.
    pub fit_residual: T,
    /// Whether every fitted Gram matrix is positive semidefinite.
    pub positive_semidefinite: bool,
    pub max_defect: T,
}

/// Criticality diagnostic for `f` at the density that produced `spectrum`.
pub fn criticality_check<T: Real>(f: &FunctionalSpec<T>, spectrum: &Spectrum<T>) -> Result<CriticalityReport<T>> {
    let x = arguments(f, spectrum)?;
    let m = f.arity();
    let traces = spectrum
        .traces
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("spectrum carries no eigenvector traces".into()))?;
    let clusters: Vec<Range<usize>> = spectrum
        .clusters()
        .into_iter()
        .filter(|c| c.start <= m && c.end > 1)
        .collect();
    for c in &clusters {
        if c.start == 0 {
            return Err(Error::Cluster { index: 1, size: c.len(), context: "first nonzero eigenvalue is zero" });
        }
        if c.end >= spectrum.len() {
            return Err(Error::Cluster {
                index: c.start,
                size: c.len(),
                context: "cluster reaches the last computed eigenvalue",
            });
        }
    }
    let grad = f.gradient(&x);
    let length = spectrum.weighted_length;
    let sigma = &spectrum.eigenvalues;
    let denom = (1..=m).fold(T::zero(), |acc, k| acc + sigma[k] * grad[k - 1]);

    // Least squares for Σ_c σ_c φ_cᵀ G_c φ_c = 1 with measure weights.
    let mut params: Vec<(usize, usize, usize)> = Vec::new();
    for (ci, c) in clusters.iter().enumerate() {
        for a in c.clone() {
            for b in a..c.end {
                params.push((ci, a, b));
            }
        }
    }
    let measure = traces.measure();
    let rows = measure.len();
    let a_mat = DMatrix::from_fn(rows, params.len(), |r, p| {
        let (ci, a, b) = params[p];
        let mult = if a == b { T::one() } else { T::lit(2.0) };
        let s = sigma[clusters[ci].start];
        measure[r].sqrt() * s * mult * traces.values[a][r] * traces.values[b][r]
    });
    let rhs_vec = DVector::from_fn(rows, |r, _| measure[r].sqrt());
    let svd = a_mat.clone().svd(true, true);
    let sol = svd
        .solve(&rhs_vec, T::lit(1e-13) * svd.singular_values.max())
        .map_err(|_| Error::SingularOperator)?;

    let mut fit_residual = T::zero();
    for r in 0..rows {
        let mut v = T::zero();
        for (p, &(ci, a, b)) in params.iter().enumerate() {
            let mult = if a == b { T::one() } else { T::lit(2.0) };
            v += sigma[clusters[ci].start] * mult * traces.values[a][r] * traces.values[b][r] * sol[p];
        }
        fit_residual = fit_residual.max((v - T::one()).abs());
    }

    let mut psd = true;
    let mut entries = Vec::new();
    for (ci, c) in clusters.iter().enumerate() {
        let size = c.len();
        let mut g = DMatrix::zeros(size, size);
        for (p, &(cj, a, b)) in params.iter().enumerate() {
            if cj == ci {
                g[(a - c.start, b - c.start)] = sol[p];
                g[(b - c.start, a - c.start)] = sol[p];
            }
        }
        let min_eig = SymmetricEigen::new(g.clone()).eigenvalues.min();
        if min_eig < -T::lit(1e-8) * g.amax().max(T::one()) {
            psd = false;
        }
        let lhs = g.trace();
        let num = c.clone().filter(|&k| (1..=m).contains(&k)).fold(T::zero(), |acc, k| acc + grad[k - 1]);
        let rhs = length * num / denom;
        for i in c.clone().filter(|&i| (1..=m).contains(&i)) {
            entries.push(CriticalityEntry { index: i, cluster: c.clone(), lhs, rhs, defect: (lhs - rhs).abs() / length });
        }
    }
    let max_defect = entries.iter().fold(T::zero(), |acc, e| acc.max(e.defect));
    Ok(CriticalityReport { entries, fit_residual, positive_semidefinite: psd, max_defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn disk_values() {
        let x = [2.0 * PI, 2.0 * PI];
        let t = 0.7;
        assert_relative_eq!(FunctionalSpec::HtPlus { t }.value(&x), (1.0 + t) / (2.0 * PI));
        assert_relative_eq!(FunctionalSpec::HtMinus { t }.value(&x), 1.0 / (2.0 * PI * (1.0 + t)));
        assert_relative_eq!(FunctionalSpec::Fmn { m: 1, n: 2 }.value(&x), 1.0 / (4.0 * PI * PI));
    }

    #[test]
    fn hst_on_disjoint_disks() {
        let (s, t) = (-0.5, 2.0);
        let v = FunctionalSpec::Hst { s, t }.value(&[0.0, 4.0 * PI]);
        assert_relative_eq!(v, t.powf(1.0 / s) / (4.0 * PI), max_relative = 1e-14);
        assert_eq!(FunctionalSpec::Hst { s: 1.0, t }.value(&[0.0, 1.0]), 0.0);
        assert_eq!(FunctionalSpec::HtPlus { t }.value(&[0.0, 1.0]), f64::INFINITY);
    }

    #[test]
    fn hst_on_ellipse_family() {
        // q = t^{1/s}: (σ̄₁, σ̄₂) = (2π/√q, 2π√q) gives (2π)^{-1} (2√t)^{1/s}.
        for &(s, t) in &[(1.0_f64, 2.0_f64), (2.0, 5.0), (-1.0, 0.5)] {
            let q = t.powf(1.0 / s);
            let x = [2.0 * PI / q.sqrt(), 2.0 * PI * q.sqrt()];
            let expect = (2.0 * t.sqrt()).powf(1.0 / s) / (2.0 * PI);
            assert_relative_eq!(FunctionalSpec::Hst { s, t }.value(&x), expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let specs = [
            FunctionalSpec::HtPlus { t: 1.3 },
            FunctionalSpec::HtMinus { t: 0.4 },
            FunctionalSpec::Hst { s: -0.7, t: 2.0 },
            FunctionalSpec::Hst { s: 1.5, t: 0.3 },
            FunctionalSpec::Fmn { m: 1, n: 2 },
            FunctionalSpec::Fmn { m: 2, n: 2 },
            FunctionalSpec::SingleEigenvalueNeg { k: 2 },
        ];
        let x = [3.1_f64, 5.7];
        for f in &specs {
            let g = f.gradient(&x);
            for i in 0..f.arity() {
                let h = 1e-5;
                let (mut xp, mut xm) = (x, x);
                xp[i] += h;
                xm[i] -= h;
                let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-7 * (1.0 + g[i].abs()), "{f:?} i={i}");
                assert!(g[i] <= 0.0);
            }
        }
    }

    #[test]
    fn json_shape() {
        let f = FunctionalSpec::HtPlus { t: 5.0 };
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"kind":"ht_plus","params":{"t":5.0}}"#);
        let g: FunctionalSpec<f64> = serde_json::from_str(r#"{"kind":"fmn","params":{"m":1,"n":2}}"#).unwrap();
        assert_eq!(g.arity(), 2);
    }

    #[test]
    fn validation() {
        assert!(FunctionalSpec::Hst { s: 0.0, t: 1.0 }.validate().is_err());
        assert!(FunctionalSpec::<f64>::Fmn { m: 0, n: 1 }.validate().is_err());
    }
}
