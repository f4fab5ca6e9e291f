//! Closed-form Dirichlet-to-Neumann data for the disk, the flat annulus and
//! the flat Möbius band, mode by mode in the Fourier trace basis.
//!
//! The annulus `{ρ < |z| < 1}` carries traces on the outer circle `|z| = 1`
//! and the inner circle `|z| = ρ`, both parametrized by the polar angle. The
//! Möbius band `M_ε` is the quotient of the annulus `{ε² < |z| < 1}` by the
//! fixed-point-free antiholomorphic involution `z ↦ −ε²/z̄`; its single
//! boundary circle is identified with the outer circle.

use serde::{Deserialize, Serialize};

use crate::curve_bem::Curve;
use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};
use crate::spectrum::Spectrum;

/// Domains handled by the solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain<T: Real> {
    Disk,
    Annulus { rho: T },
    Moebius { eps: T },
    /// Simply connected planar domain bounded by a smooth Jordan curve.
    Curve { curve: Curve<T> },
}

impl<T: Real> Domain<T> {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: T, name: &str| {
            if x > T::zero() && x < T::one() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {}", x.to_f64_lossy())))
            }
        };
        match self {
            Domain::Disk => Ok(()),
            Domain::Annulus { rho } => open_unit(*rho, "rho"),
            Domain::Moebius { eps } => open_unit(*eps, "eps"),
            Domain::Curve { curve } => curve.validate(),
        }
    }

    /// Number of boundary circles carrying a trace.
    pub fn boundary_components(&self) -> usize {
        match self {
            Domain::Annulus { .. } => 2,
            _ => 1,
        }
    }

    /// `dL/dθ` on each boundary circle (the inner annulus circle has radius `ρ`).
    pub fn arclength_factors(&self) -> Vec<T> {
        match self {
            Domain::Annulus { rho } => vec![T::one(), *rho],
            _ => vec![T::one()],
        }
    }
}

/// Boundary condition on the inner circle for the split annulus problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerCondition {
    Dirichlet,
    Neumann,
}

/// Dirichlet energy of a single Fourier mode.
///
/// For the disk this is `1×1`; for the annulus it is the `2×2` form in the
/// pair (outer coefficient, inner coefficient) of `cos kθ` (equivalently of
/// `sin kθ`).
#[derive(Clone, Debug, PartialEq)]
pub struct ModeBlock<T: Real> {
    pub mode: usize,
    pub form: [[T; 2]; 2],
    pub size: usize,
}

/// DtN symbol of the unit disk: `Λ e^{ikθ} = |k| e^{ikθ}`.
pub fn disk_symbol<T: Real>(k: usize) -> T {
    T::from_usize_lossy(k)
}

/// Energy `∫|∇u|²` of the harmonic extension of `cos kθ` into the disk.
pub fn disk_energy<T: Real>(k: usize) -> T {
    T::pi() * T::from_usize_lossy(k)
}

/// Energy form of mode `k` on the annulus `{ρ < |z| < 1}`.
///
/// `k = 0`: `2π (a_out − a_in)² / ln(1/ρ)`. `k ≥ 1`, with `t = ρ^k`:
/// `πk/(1 − t²) · [[1 + t², −2t], [−2t, 1 + t²]]`.
pub fn annulus_mode_block<T: Real>(rho: T, k: usize) -> Result<ModeBlock<T>> {
    Domain::Annulus { rho }.validate()?;
    let form = if k == 0 {
        let c = two_pi::<T>() / (-rho.ln());
        [[c, -c], [-c, c]]
    } else {
        let t = rho.powi(k as i32);
        let c = T::pi() * T::from_usize_lossy(k) / (T::one() - t * t);
        let d = c * (T::one() + t * t);
        let o = -c * T::lit(2.0) * t;
        [[d, o], [o, d]]
    };
    Ok(ModeBlock { mode: k, form, size: 2 })
}

/// Eigenvalue of mode `k ≥ 1` on the outer circle of `{ε < |z| < 1}` with the
/// given condition on the inner circle:
/// Dirichlet `k(1 + ε^{2k})/(1 − ε^{2k})`, Neumann `k(1 − ε^{2k})/(1 + ε^{2k})`.
pub fn annulus_split_eigenvalue<T: Real>(eps: T, k: usize, inner: InnerCondition) -> Result<T> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::InvalidParameter("eps must lie in (0, 1)".into()));
    }
    if k == 0 {
        return Ok(T::zero());
    }
    let t = eps.powi(2 * k as i32);
    let kk = T::from_usize_lossy(k);
    Ok(match inner {
        InnerCondition::Dirichlet => kk * (T::one() + t) / (T::one() - t),
        InnerCondition::Neumann => kk * (T::one() - t) / (T::one() + t),
    })
}

/// Per-mode DtN value on the Möbius band `M_ε`: odd modes see the Dirichlet
/// split of `{ε < |z| < 1}`, even modes the Neumann split, mode `0` is zero.
///
/// Invariant traces on the double cover satisfy `b_k = (−1)^k a_k`, so the
/// annulus form of `{ε² < |z| < 1}` restricts to `πk (1 ∓ ε^{2k})²/(1 − ε^{4k})`.
pub fn moebius_symbol<T: Real>(eps: T, k: usize) -> Result<T> {
    match k {
        0 => Ok(T::zero()),
        _ if k % 2 == 1 => annulus_split_eigenvalue(eps, k, InnerCondition::Dirichlet),
        _ => annulus_split_eigenvalue(eps, k, InnerCondition::Neumann),
    }
}

/// Boundary length of `M_ε` (the outer unit circle).
pub fn moebius_length<T: Real>() -> T {
    two_pi()
}

/// First `count` eigenvalues of `M_ε` with `β ≡ 1`; each nonzero mode has
/// multiplicity two.
pub fn moebius_uniform_spectrum<T: Real>(eps: T, count: usize) -> Result<Spectrum<T>> {
    Domain::Moebius { eps }.validate()?;
    let mut values = vec![T::zero()];
    let mut k = 1;
    loop {
        if values.len() >= count {
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            // Mode k has value ≥ k (1−ε^{2k})/(1+ε^{2k}), which is increasing in k.
            let bound = annulus_split_eigenvalue(eps, k, InnerCondition::Neumann)?;
            if bound > values[count - 1] {
                break;
            }
        }
        let v = moebius_symbol(eps, k)?;
        values.push(v);
        values.push(v);
        k += 1;
    }
    values.truncate(count);
    Ok(Spectrum::new(values, moebius_length()))
}

/// `σ̄_1(M_ε)` for `β ≡ 1`: `2π (1 + ε²)/(1 − ε²)`.
pub fn moebius_first_normalized<T: Real>(eps: T) -> Result<T> {
    Ok(moebius_length::<T>() * moebius_symbol(eps, 1)?)
}

/// First `count` eigenvalues of the flat annulus with `β ≡ 1` on both circles.
///
/// Mode `0` contributes `(1 + 1/ρ)/ln(1/ρ)`; mode `k ≥ 1` contributes the two
/// roots of `det(S_k/π − σ diag(1, ρ)) = 0`, each with multiplicity two.
pub fn annulus_uniform_spectrum<T: Real>(rho: T, count: usize) -> Result<Spectrum<T>> {
    Domain::Annulus { rho }.validate()?;
    let mut values = vec![T::zero(), (T::one() + rho.recip()) / (-rho.ln())];
    let mut k = 1;
    loop {
        if values.len() >= count {
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            // Smaller root of block k is at least the Neumann split value.
            let t = rho.powi(k as i32);
            let bound = T::from_usize_lossy(k) * (T::one() - t) / (T::one() + t);
            if bound > values[count - 1] {
                break;
            }
        }
        let (lo, hi) = annulus_mode_roots(rho, k);
        values.extend([lo, lo, hi, hi]);
        k += 1;
    }
    values.truncate(count);
    let length = two_pi::<T>() * (T::one() + rho);
    Ok(Spectrum::new(values, length))
}

/// Roots of the `2×2` pencil of mode `k ≥ 1` on the uniform annulus.
fn annulus_mode_roots<T: Real>(rho: T, k: usize) -> (T, T) {
    let t = rho.powi(k as i32);
    let c = T::from_usize_lossy(k) / (T::one() - t * t);
    let d = c * (T::one() + t * t);
    let o = c * T::lit(2.0) * t;
    // det([[d − σ, −o], [−o, d − ρσ]]) = ρσ² − (1 + ρ) d σ + d² − o² = 0
    let a = rho;
    let b = -(T::one() + rho) * d;
    let cc = d * d - o * o;
    let disc = (b * b - T::lit(4.0) * a * cc).max(T::zero()).sqrt();
    let hi = (-b + disc) / (T::lit(2.0) * a);
    let lo = cc / (a * hi);
    (lo, hi)
}

/// `σ̄_1` of the uniform flat annulus.
pub fn annulus_first_normalized<T: Real>(rho: T) -> Result<T> {
    Ok(annulus_uniform_spectrum(rho, 2)?.normalized[1])
}

/// Bisection for the annulus radius at which `σ̄_1 = target` on `[lo, hi]`.
pub fn annulus_threshold<T: Real>(target: T, lo: T, hi: T, tol: T) -> Result<T> {
    let f = |r: T| annulus_first_normalized(r).map(|v| v - target);
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a)?, f(b)?);
    if fa * fb > T::zero() {
        return Err(Error::InvalidParameter("threshold not bracketed".into()));
    }
    let sa = fa > T::zero();
    while b - a > tol {
        let m = (a + b) * T::lit(0.5);
        if (f(m)? > T::zero()) == sa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((a + b) * T::lit(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn annulus_mode_energy_of_r_power() {
        // u = r^k cos kθ: a_out = 1, a_in = ρ^k, energy πk(1 − ρ^{2k}).
        for &(rho, k) in &[(0.5_f64, 1usize), (0.3, 3), (0.9, 2)] {
            let b = annulus_mode_block(rho, k).unwrap();
            let t = rho.powi(k as i32);
            let v = [1.0, t];
            let e: f64 = (0..2).map(|i| (0..2).map(|j| v[i] * b.form[i][j] * v[j]).sum::<f64>()).sum();
            assert_relative_eq!(e, PI * k as f64 * (1.0 - t * t), max_relative = 1e-13);
        }
    }

    #[test]
    fn annulus_mode_zero_matches_log() {
        let b = annulus_mode_block(0.25_f64, 0).unwrap();
        assert_relative_eq!(b.form[0][0], 2.0 * PI / (4.0_f64).ln(), max_relative = 1e-14);
        assert_eq!(b.form[0][1], -b.form[0][0]);
    }

    #[test]
    fn split_values_large_mode_tend_to_k() {
        let d = annulus_split_eigenvalue(0.5_f64, 200, InnerCondition::Dirichlet).unwrap();
        let n = annulus_split_eigenvalue(0.5_f64, 200, InnerCondition::Neumann).unwrap();
        assert_relative_eq!(d, 200.0, max_relative = 1e-15);
        assert_relative_eq!(n, 200.0, max_relative = 1e-15);
    }

    #[test]
    fn split_values_from_block_schur_complement() {
        // Neumann on the inner circle: minimize the 2×2 form over a_in.
        let (eps, k) = (0.6_f64, 3);
        let b = annulus_mode_block(eps, k).unwrap();
        let schur = b.form[0][0] - b.form[0][1] * b.form[1][0] / b.form[1][1];
        let n = annulus_split_eigenvalue(eps, k, InnerCondition::Neumann).unwrap();
        assert_relative_eq!(schur / PI, n, max_relative = 1e-13);
        let d = annulus_split_eigenvalue(eps, k, InnerCondition::Dirichlet).unwrap();
        assert_relative_eq!(b.form[0][0] / PI, d, max_relative = 1e-13);
    }

    #[test]
    fn moebius_first_value() {
        let eps = 0.4_f64;
        let v = moebius_first_normalized(eps).unwrap();
        assert_relative_eq!(v, 2.0 * PI * (1.0 + eps * eps) / (1.0 - eps * eps), max_relative = 1e-14);
        let s = moebius_uniform_spectrum(eps, 5).unwrap();
        assert_eq!(s.multiplicities[1..5], [2, 2, 2, 2]);
    }

    #[test]
    fn annulus_mode_zero_value() {
        let rho = 0.5_f64;
        let s = annulus_uniform_spectrum(rho, 12).unwrap();
        let m0 = (1.0 + 1.0 / rho) / (1.0 / rho).ln();
        assert!(s.eigenvalues.iter().any(|&v| (v - m0).abs() < 1e-12));
        assert_relative_eq!(s.weighted_length, 2.0 * PI * 1.5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(annulus_mode_block(1.0_f64, 1).is_err());
        assert!(moebius_uniform_spectrum(0.0_f64, 3).is_err());
    }
}
