//! Closed-form weighted Steklov spectrum of the ellipse `x² + q y² = 1`
//! (`q ≥ 1`) with density `β_q = (x² + q² y²)^{-1/2}`.
//!
//! For every `n ≥ 1` the real and imaginary parts of the polynomial
//! `P_n^q(z) = 2^{1−n} Σ_k C(n, 2k) z^{n−2k} (z² − (1 − 1/q))^k` are
//! eigenfunctions, with eigenvalues `σ_n^q` (real part) and `τ_n^q`
//! (imaginary part).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::curve_bem::{Curve, CurveWeight};
use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};
use crate::spectrum::Spectrum;
use crate::trace::node;

fn check_q<T: Real>(q: T) -> Result<()> {
    if q >= T::one() && q.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("ellipse parameter q must be ≥ 1, got {}", q.to_f64_lossy())))
    }
}

fn check_n(n: usize) -> Result<()> {
    if n >= 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter("mode index n must be ≥ 1".into()))
    }
}

/// `r = (√q − 1)/(√q + 1)`.
fn ratio<T: Real>(q: T) -> T {
    let s = q.sqrt();
    (s - T::one()) / (s + T::one())
}

/// `σ_n^q = n√q ((√q+1)^n − (√q−1)^n)/((√q+1)^n + (√q−1)^n)`.
pub fn sigma<T: Real>(n: usize, q: T) -> Result<T> {
    check_n(n)?;
    check_q(q)?;
    let rn = ratio(q).powi(n as i32);
    Ok(T::from_usize_lossy(n) * q.sqrt() * (T::one() - rn) / (T::one() + rn))
}

/// `τ_n^q = n²q / σ_n^q`.
pub fn tau<T: Real>(n: usize, q: T) -> Result<T> {
    check_n(n)?;
    check_q(q)?;
    let rn = ratio(q).powi(n as i32);
    Ok(T::from_usize_lossy(n) * q.sqrt() * (T::one() + rn) / (T::one() - rn))
}

/// `A_n = ((1 + 1/√q)^n + (1 − 1/√q)^n) / 2^n`.
pub fn coeff_a<T: Real>(n: usize, q: T) -> T {
    let u = q.sqrt().recip();
    let two = T::lit(2.0);
    (((T::one() + u) / two).powi(n as i32)) + (((T::one() - u) / two).powi(n as i32))
}

/// `B_n = ((1 + 1/√q)^n − (1 − 1/√q)^n) / 2^n`.
pub fn coeff_b<T: Real>(n: usize, q: T) -> T {
    let u = q.sqrt().recip();
    let two = T::lit(2.0);
    (((T::one() + u) / two).powi(n as i32)) - (((T::one() - u) / two).powi(n as i32))
}

fn cabs<T: Real>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

fn binomial<T: Real>(n: usize, k: usize) -> T {
    let mut acc = T::one();
    for i in 0..k {
        acc = acc * T::from_usize_lossy(n - i) / T::from_usize_lossy(i + 1);
    }
    acc
}

/// Eigenpair data for mode `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EllipseEigenPair<T: Real> {
    pub n: usize,
    pub q: T,
    pub sigma: T,
    pub tau: T,
    pub a: T,
    pub b: T,
    /// Real coefficients of `P_n^q` in ascending powers of `z`.
    pub coefficients: Vec<T>,
}

pub fn eigen_pair<T: Real>(n: usize, q: T) -> Result<EllipseEigenPair<T>> {
    let sigma = sigma(n, q)?;
    let tau = tau(n, q)?;
    let c = T::one() - q.recip();
    let mut coefficients = vec![T::zero(); n + 1];
    let scale = T::lit(2.0).powi(1 - n as i32);
    for k in 0..=n / 2 {
        let outer = binomial::<T>(n, 2 * k);
        // (z² − c)^k = Σ_l C(k, l) z^{2l} (−c)^{k−l}
        for l in 0..=k {
            let term = binomial::<T>(k, l) * (-c).powi((k - l) as i32);
            coefficients[n - 2 * k + 2 * l] += scale * outer * term;
        }
    }
    Ok(EllipseEigenPair { n, q, sigma, tau, a: coeff_a(n, q), b: coeff_b(n, q), coefficients })
}

impl<T: Real> EllipseEigenPair<T> {
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.coefficients.iter().rev().fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
    }

    pub fn eval_derivative(&self, z: Complex<T>) -> Complex<T> {
        let zero = Complex::new(T::zero(), T::zero());
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(zero, |acc, (j, &c)| acc * z + c * T::from_usize_lossy(j))
    }

    /// Boundary point `(cos t, sin t/√q)` as a complex number.
    pub fn boundary_point(&self, t: T) -> Complex<T> {
        Complex::new(t.cos(), t.sin() / self.q.sqrt())
    }

    /// `Re P` and `Im P` at `t`.
    pub fn traces(&self, t: T) -> (T, T) {
        let p = self.eval(self.boundary_point(t));
        (p.re, p.im)
    }

    /// `c_n^q = √q n A_n B_n`, the constant value of `σ Re² P + τ Im² P`
    /// up to the weight on the boundary.
    pub fn quadrature_constant(&self) -> T {
        self.q.sqrt() * T::from_usize_lossy(self.n) * self.a * self.b
    }

    /// Largest deviation over `samples` boundary points of
    /// `P(cos t + i sin t/√q) = A cos nt + i B sin nt` and of
    /// `(x + iqy) P′ = σ Re P + iτ Im P`.
    pub fn boundary_identity_residual(&self, samples: usize) -> T {
        let mut worst = T::zero();
        let nf = T::from_usize_lossy(self.n);
        for j in 0..samples {
            let t = node::<T>(j, samples);
            let z = self.boundary_point(t);
            let p = self.eval(z);
            let expect = Complex::new(self.a * (nf * t).cos(), self.b * (nf * t).sin());
            worst = worst.max(cabs(p - expect));
            let lhs = Complex::new(z.re, self.q * z.im) * self.eval_derivative(z);
            let rhs = Complex::new(self.sigma * p.re, self.tau * p.im);
            worst = worst.max(cabs(lhs - rhs));
        }
        worst
    }

    /// Largest coefficient of `Δ Re P` and `Δ Im P` as bivariate polynomials.
    pub fn laplacian_residual(&self) -> T {
        let n = self.n;
        let mut re = vec![vec![T::zero(); n + 1]; n + 1];
        let mut im = vec![vec![T::zero(); n + 1]; n + 1];
        for (j, &c) in self.coefficients.iter().enumerate() {
            // z^j = Σ_l C(j, l) x^{j−l} (iy)^l
            for l in 0..=j {
                let v = c * binomial::<T>(j, l);
                match l % 4 {
                    0 => re[j - l][l] += v,
                    1 => im[j - l][l] += v,
                    2 => re[j - l][l] -= v,
                    _ => im[j - l][l] -= v,
                }
            }
        }
        let lap = |p: &Vec<Vec<T>>| {
            let mut worst = T::zero();
            for a in 0..=n {
                for b in 0..=n {
                    let xx = if a + 2 <= n { p[a + 2][b] * T::from_usize_lossy((a + 2) * (a + 1)) } else { T::zero() };
                    let yy = if b + 2 <= n { p[a][b + 2] * T::from_usize_lossy((b + 2) * (b + 1)) } else { T::zero() };
                    worst = worst.max((xx + yy).abs());
                }
            }
            worst
        };
        lap(&re).max(lap(&im))
    }
}

/// Which closed-form family an eigenvalue belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Constant,
    Sigma,
    Tau,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OrderedEntry<T: Real> {
    pub value: T,
    pub family: Family,
    pub n: usize,
}

/// First `count` eigenvalues in increasing order, labelled by family.
pub fn ordered_spectrum<T: Real>(q: T, count: usize) -> Result<(Spectrum<T>, Vec<OrderedEntry<T>>)> {
    check_q(q)?;
    let mut entries = vec![OrderedEntry { value: T::zero(), family: Family::Constant, n: 0 }];
    let mut n = 1;
    loop {
        if entries.len() >= count {
            entries.sort_by(|a, b| a.value.partial_cmp(&b.value).expect("finite"));
            // σ_n, τ_n ≥ n.
            if T::from_usize_lossy(n) > entries[count - 1].value {
                break;
            }
        }
        entries.push(OrderedEntry { value: sigma(n, q)?, family: Family::Sigma, n });
        entries.push(OrderedEntry { value: tau(n, q)?, family: Family::Tau, n });
        n += 1;
    }
    entries.truncate(count);
    let values = entries.iter().map(|e| e.value).collect();
    Ok((Spectrum::new(values, length(q)), entries))
}

/// `∫ β_q dL = 2π/√q`.
pub fn length<T: Real>(q: T) -> T {
    two_pi::<T>() / q.sqrt()
}

/// Closed-form integrals `(∫β dL, ∫x²β dL, ∫y²β dL) = (2π/√q, π/√q, π/(q√q))`.
pub fn mass_integrals<T: Real>(q: T) -> (T, T, T) {
    let s = q.sqrt();
    (two_pi::<T>() / s, T::pi() / s, T::pi() / (q * s))
}

/// The same integrals by the trapezoid rule on the parametrized boundary.
pub fn mass_integrals_quadrature<T: Real>(q: T, nodes: usize) -> (T, T, T) {
    let curve = Curve::Ellipse { q };
    let weight = CurveWeight::CriticalEllipse { q };
    let h = two_pi::<T>() / T::from_usize_lossy(nodes);
    let (mut l, mut xx, mut yy) = (T::zero(), T::zero(), T::zero());
    for j in 0..nodes {
        let t = node::<T>(j, nodes);
        let [x, y] = curve.point(t);
        let d = weight.eval(&curve, t) * curve.speed(t) * h;
        l += d;
        xx += x * x * d;
        yy += y * y * d;
    }
    (l, xx, yy)
}

/// Mass ratio `∫x²β dL / ∫y²β dL = q` of the first eigenfunction pair. A
/// functional of `(σ̄₁, σ̄₂)` can only be critical at the ellipse when
/// `∂₁f/∂₂f` equals this ratio.
pub fn criticality_ratio<T: Real>(q: T) -> T {
    let (_, xx, yy) = mass_integrals(q);
    xx / yy
}

/// `q` at which `σ_2^q = τ_1^q`, by bisection on `[lo, hi]`.
pub fn bifurcation_point<T: Real>(lo: T, hi: T, tol: T) -> Result<T> {
    let f = |q: T| -> Result<T> { Ok(sigma(2, q)? - tau(1, q)?) };
    let (mut a, mut b) = (lo, hi);
    if f(a)? * f(b)? > T::zero() {
        return Err(Error::InvalidParameter("crossing not bracketed".into()));
    }
    let sa = f(a)? > T::zero();
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

/// Critical ellipse value of `H_t^+` with `t = q ∈ [1, 3]`:
/// `σ̄₁ = 2π/√q`, `σ̄₂ = 2π√q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HpsPoint<T: Real> {
    pub q: T,
    pub sigma_bar_1: T,
    pub sigma_bar_2: T,
    /// `H_q^+(σ̄₁, σ̄₂) = 1/σ̄₁ + q/σ̄₂ = √q/π`.
    pub value: T,
}

pub fn hps_family<T: Real>(qs: &[T]) -> Result<Vec<HpsPoint<T>>> {
    qs.iter()
        .map(|&q| {
            check_q(q)?;
            if q > T::lit(3.0) {
                return Err(Error::InvalidParameter("second eigenvalue is τ₁ only for q ≤ 3".into()));
            }
            let (spec, _) = ordered_spectrum(q, 3)?;
            let (s1, s2) = (spec.normalized[1], spec.normalized[2]);
            Ok(HpsPoint { q, sigma_bar_1: s1, sigma_bar_2: s2, value: s1.recip() + q / s2 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn round_disk() {
        for n in 1..6 {
            assert_relative_eq!(sigma(n, 1.0_f64).unwrap(), n as f64);
            assert_relative_eq!(tau(n, 1.0_f64).unwrap(), n as f64);
        }
    }

    #[test]
    fn first_modes() {
        let q = 2.5_f64;
        assert_relative_eq!(sigma(1, q).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(tau(1, q).unwrap(), q, max_relative = 1e-14);
        assert_relative_eq!(sigma(2, q).unwrap(), 4.0 * q / (q + 1.0), max_relative = 1e-14);
    }

    #[test]
    fn polynomial_small_cases() {
        let p = eigen_pair(2, 4.0_f64).unwrap();
        // P₂ = z² − c/2, c = 3/4.
        assert_relative_eq!(p.coefficients[0], -0.375);
        assert_eq!(p.coefficients[1], 0.0);
        assert_relative_eq!(p.coefficients[2], 1.0);
        let p1 = eigen_pair(1, 7.0_f64).unwrap();
        assert_eq!(p1.coefficients, vec![0.0, 1.0]);
    }

    #[test]
    fn identities_hold() {
        for n in 1..9 {
            for &q in &[1.0_f64, 1.7, 3.0, 10.0] {
                let p = eigen_pair(n, q).unwrap();
                assert!(p.boundary_identity_residual(200) < 1e-12, "n={n} q={q}");
                assert!(p.laplacian_residual() < 1e-11);
            }
        }
    }

    #[test]
    fn crossing_at_three() {
        let q = bifurcation_point(1.5_f64, 10.0, 1e-13).unwrap();
        assert!((q - 3.0).abs() < 1e-9);
    }

    #[test]
    fn masses() {
        let (l, xx, yy) = mass_integrals(2.0_f64);
        let (lq, xq, yq) = mass_integrals_quadrature(2.0_f64, 256);
        assert_relative_eq!(l, lq, max_relative = 1e-13);
        assert_relative_eq!(xx, xq, max_relative = 1e-13);
        assert_relative_eq!(yy, yq, max_relative = 1e-13);
        assert_relative_eq!(l, 2.0 * PI / 2f64.sqrt());
        assert_relative_eq!(criticality_ratio(2.0_f64), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn hps_values() {
        let pts = hps_family(&[1.0_f64, 2.0, 3.0]).unwrap();
        for p in pts {
            assert_relative_eq!(p.value, p.q.sqrt() / PI, max_relative = 1e-13);
        }
        assert!(hps_family(&[3.5_f64]).is_err());
    }

    #[test]
    fn ordering_switches_at_three() {
        let (s, e) = ordered_spectrum(2.0_f64, 3).unwrap();
        assert_eq!(e[2].family, Family::Tau);
        assert_relative_eq!(s.eigenvalues[2], 2.0);
        let (_, e) = ordered_spectrum(4.0_f64, 3).unwrap();
        assert_eq!((e[2].family, e[2].n), (Family::Sigma, 2));
    }
}
