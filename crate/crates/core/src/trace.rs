//! Fourier trace space on the unit circle.
//!
//! Boundary traces and boundary densities are real trigonometric polynomials
//! in the basis `{1, cos kθ, sin kθ}`. Integrals of smooth periodic functions
//! use the trapezoid rule on equispaced nodes, which is spectrally accurate
//! and exact for trigonometric polynomials of degree below the node count.
//!
//! Coefficient vectors of length `2N + 1` are stored *interleaved*:
//! index `0` is the constant, `2k - 1` is `cos kθ` and `2k` is `sin kθ`.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};

/// Node count used for the positivity check of a density.
pub const POSITIVITY_NODES: usize = 4096;
/// A density is accepted when its sampled minimum exceeds this margin.
pub const POSITIVITY_MARGIN: f64 = 1e-10;

/// Default trapezoid node count for a function of the given degree.
pub fn default_nodes(degree: usize) -> usize {
    (4 * degree).max(256)
}

/// Angle of node `j` on an equispaced grid of `p` nodes.
#[inline]
pub fn node<T: Real>(j: usize, p: usize) -> T {
    two_pi::<T>() * T::from_usize_lossy(j) / T::from_usize_lossy(p)
}

/// Equispaced grid `2πj/p`, `j = 0..p`.
pub fn grid<T: Real>(p: usize) -> Vec<T> {
    (0..p).map(|j| node(j, p)).collect()
}

/// Trapezoid rule for a 2π-periodic integrand.
pub fn trapezoid<T: Real>(p: usize, f: impl Fn(T) -> T) -> T {
    let mut acc = T::zero();
    for j in 0..p {
        acc += f(node(j, p));
    }
    acc * two_pi::<T>() / T::from_usize_lossy(p)
}

/// Values at the `p` grid nodes of the trigonometric sum with constant `a0`
/// and coefficients `cos`, `sin`. Frequencies at or beyond `p` are folded,
/// which is exact at the nodes.
pub fn synthesize<T: Real>(a0: T, cos: &[T], sin: &[T], p: usize) -> Vec<T> {
    assert!(p > 0);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); p];
    buf[0].re += a0;
    for (k, (&a, &b)) in cos.iter().zip(sin).enumerate() {
        let slot = (k + 1) % p;
        buf[slot] += Complex::new(a, -b);
    }
    let mut planner = FftPlanner::<T>::new();
    planner.plan_fft_inverse(p).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Values at the grid nodes of an interleaved coefficient vector.
pub fn synthesize_interleaved<T: Real>(coeffs: &[T], p: usize) -> Vec<T> {
    let (a0, cos, sin) = split_interleaved(coeffs);
    synthesize(a0, &cos, &sin, p)
}

/// Trapezoid moments `(∫ f cos mθ dθ, ∫ f sin mθ dθ)` for `m = 0..=max_mode`
/// from samples of `f` at the equispaced nodes.
pub fn moments<T: Real>(samples: &[T], max_mode: usize) -> (Vec<T>, Vec<T>) {
    let p = samples.len();
    assert!(p > 0);
    let mut buf: Vec<Complex<T>> = samples.iter().map(|&v| Complex::new(v, T::zero())).collect();
    let mut planner = FftPlanner::<T>::new();
    planner.plan_fft_forward(p).process(&mut buf);
    let h = two_pi::<T>() / T::from_usize_lossy(p);
    let mut c = Vec::with_capacity(max_mode + 1);
    let mut s = Vec::with_capacity(max_mode + 1);
    for m in 0..=max_mode {
        let x = buf[m % p];
        c.push(x.re * h);
        s.push(-x.im * h);
    }
    (c, s)
}

/// Integrals `∫ f e_i dθ` against the interleaved basis of degree `n`.
pub fn project_interleaved<T: Real>(samples: &[T], n: usize) -> Vec<T> {
    let (c, s) = moments(samples, n);
    let mut out = Vec::with_capacity(2 * n + 1);
    out.push(c[0]);
    for k in 1..=n {
        out.push(c[k]);
        out.push(s[k]);
    }
    out
}

pub(crate) fn split_interleaved<T: Real>(coeffs: &[T]) -> (T, Vec<T>, Vec<T>) {
    assert!(coeffs.len() % 2 == 1, "interleaved vector must have odd length");
    let n = coeffs.len() / 2;
    let cos = (1..=n).map(|k| coeffs[2 * k - 1]).collect();
    let sin = (1..=n).map(|k| coeffs[2 * k]).collect();
    (coeffs[0], cos, sin)
}

/// `∫ e_i e_i dθ` for the interleaved basis: `2π` for the constant, `π` otherwise.
#[inline]
pub fn basis_norm_sq<T: Real>(i: usize) -> T {
    if i == 0 {
        two_pi()
    } else {
        T::pi()
    }
}

/// Frequency of interleaved basis index `i`.
#[inline]
pub fn basis_mode(i: usize) -> usize {
    i.div_ceil(2)
}

/// Real trigonometric polynomial `a0 + Σ (a_k cos kθ + b_k sin kθ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(try_from = "TrigRepr<T>", into = "TrigRepr<T>")]
pub struct TrigPolynomial<T: Real> {
    a0: T,
    cos: Vec<T>,
    sin: Vec<T>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "")]
struct TrigRepr<T: Real> {
    degree: usize,
    a0: T,
    cos: Vec<T>,
    sin: Vec<T>,
}

impl<T: Real> TryFrom<TrigRepr<T>> for TrigPolynomial<T> {
    type Error = Error;
    fn try_from(r: TrigRepr<T>) -> Result<Self> {
        if r.cos.len() != r.degree || r.sin.len() != r.degree {
            return Err(Error::InvalidParameter(format!(
                "degree {} but {} cosine and {} sine coefficients",
                r.degree,
                r.cos.len(),
                r.sin.len()
            )));
        }
        Ok(Self { a0: r.a0, cos: r.cos, sin: r.sin })
    }
}

impl<T: Real> From<TrigPolynomial<T>> for TrigRepr<T> {
    fn from(p: TrigPolynomial<T>) -> Self {
        Self { degree: p.degree(), a0: p.a0, cos: p.cos, sin: p.sin }
    }
}

impl<T: Real> TrigPolynomial<T> {
    pub fn new(a0: T, cos: Vec<T>, sin: Vec<T>) -> Result<Self> {
        if cos.len() != sin.len() {
            return Err(Error::InvalidParameter(format!(
                "{} cosine vs {} sine coefficients",
                cos.len(),
                sin.len()
            )));
        }
        Ok(Self { a0, cos, sin })
    }

    pub fn constant(c: T) -> Self {
        Self { a0: c, cos: Vec::new(), sin: Vec::new() }
    }

    pub fn zero(degree: usize) -> Self {
        Self { a0: T::zero(), cos: vec![T::zero(); degree], sin: vec![T::zero(); degree] }
    }

    /// `cos kθ` (or `sin kθ` when `sine` is set) scaled by `amp`.
    pub fn monomial(k: usize, amp: T, sine: bool) -> Self {
        if k == 0 {
            return Self::constant(amp);
        }
        let mut p = Self::zero(k);
        if sine {
            p.sin[k - 1] = amp;
        } else {
            p.cos[k - 1] = amp;
        }
        p
    }

    pub fn from_interleaved(coeffs: &[T]) -> Self {
        let (a0, cos, sin) = split_interleaved(coeffs);
        Self { a0, cos, sin }
    }

    pub fn to_interleaved(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(2 * self.degree() + 1);
        out.push(self.a0);
        for (&a, &b) in self.cos.iter().zip(&self.sin) {
            out.push(a);
            out.push(b);
        }
        out
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.cos.len()
    }

    #[inline]
    pub fn a0(&self) -> T {
        self.a0
    }

    pub fn cos_coeffs(&self) -> &[T] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[T] {
        &self.sin
    }

    /// Coefficient pair `(a_k, b_k)`; zero beyond the degree. `k = 0` gives `(a0, 0)`.
    pub fn coeff(&self, k: usize) -> (T, T) {
        if k == 0 {
            (self.a0, T::zero())
        } else if k <= self.degree() {
            (self.cos[k - 1], self.sin[k - 1])
        } else {
            (T::zero(), T::zero())
        }
    }

    pub fn eval(&self, theta: T) -> T {
        let mut acc = self.a0;
        for (k, (&a, &b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kt = T::from_usize_lossy(k + 1) * theta;
            acc += a * kt.cos() + b * kt.sin();
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let mut cos = Vec::with_capacity(self.degree());
        let mut sin = Vec::with_capacity(self.degree());
        for (k, (&a, &b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kk = T::from_usize_lossy(k + 1);
            cos.push(kk * b);
            sin.push(-kk * a);
        }
        Self { a0: T::zero(), cos, sin }
    }

    /// Values at `p` equispaced nodes.
    pub fn samples(&self, p: usize) -> Vec<T> {
        synthesize(self.a0, &self.cos, &self.sin, p)
    }

    /// Trapezoid Fourier projection of equispaced samples onto degree `degree`.
    /// Exact whenever the samples come from a polynomial of degree `≤ degree`.
    pub fn fourier_of_samples(values: &[T], degree: usize) -> Result<Self> {
        let m = values.len();
        if m < 2 * degree + 1 {
            return Err(Error::DegenerateSampling { samples: m, degree });
        }
        let (c, s) = moments(values, degree);
        let pi = T::pi();
        Ok(Self {
            a0: c[0] / two_pi::<T>(),
            cos: c[1..].iter().map(|&x| x / pi).collect(),
            sin: s[1..].iter().map(|&x| x / pi).collect(),
        })
    }

    /// Projection of a smooth periodic function, sampled with the default node count.
    pub fn project_fn(degree: usize, f: impl Fn(T) -> T) -> Self {
        let p = default_nodes(degree).max(2 * degree + 1);
        let values: Vec<T> = (0..p).map(|j| f(node(j, p))).collect();
        Self::fourier_of_samples(&values, degree).expect("node count covers degree")
    }

    /// `∫₀^{2π} p dθ`.
    pub fn integral(&self) -> T {
        two_pi::<T>() * self.a0
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            a0: self.a0 * c,
            cos: self.cos.iter().map(|&x| x * c).collect(),
            sin: self.sin.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.degree().max(other.degree());
        let mut out = Self::zero(n);
        out.a0 = self.a0 + other.a0;
        for k in 1..=n {
            let (a1, b1) = self.coeff(k);
            let (a2, b2) = other.coeff(k);
            out.cos[k - 1] = a1 + a2;
            out.sin[k - 1] = b1 + b2;
        }
        out
    }

    /// `θ ↦ p(θ − phi)`.
    pub fn rotate(&self, phi: T) -> Self {
        let mut out = self.clone();
        for k in 1..=self.degree() {
            let (a, b) = self.coeff(k);
            let kp = T::from_usize_lossy(k) * phi;
            let (s, c) = (kp.sin(), kp.cos());
            out.cos[k - 1] = a * c - b * s;
            out.sin[k - 1] = a * s + b * c;
        }
        out
    }

    /// Keeps modes up to `degree` (pads with zeros when larger).
    pub fn truncate(&self, degree: usize) -> Self {
        let mut out = Self::zero(degree);
        out.a0 = self.a0;
        for k in 1..=degree.min(self.degree()) {
            out.cos[k - 1] = self.cos[k - 1];
            out.sin[k - 1] = self.sin[k - 1];
        }
        out
    }

    /// Exact product, of degree `N₁ + N₂`.
    pub fn product(&self, other: &Self) -> Self {
        let n = self.degree() + other.degree();
        // complex coefficients c_k for k in -n..=n, offset n
        let to_c = |p: &Self| {
            let d = p.degree();
            let mut c = vec![Complex::new(T::zero(), T::zero()); 2 * d + 1];
            c[d] = Complex::new(p.a0, T::zero());
            let half = T::lit(0.5);
            for k in 1..=d {
                let (a, b) = p.coeff(k);
                c[d + k] = Complex::new(a * half, -b * half);
                c[d - k] = Complex::new(a * half, b * half);
            }
            c
        };
        let c1 = to_c(self);
        let c2 = to_c(other);
        let mut prod = vec![Complex::new(T::zero(), T::zero()); 2 * n + 1];
        for (i, &x) in c1.iter().enumerate() {
            if x.re == T::zero() && x.im == T::zero() {
                continue;
            }
            for (j, &y) in c2.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        let mut out = Self::zero(n);
        out.a0 = prod[n].re;
        for k in 1..=n {
            let c = prod[n + k];
            out.cos[k - 1] = c.re + c.re;
            out.sin[k - 1] = -(c.im + c.im);
        }
        out
    }

    /// Product truncated at `cap`; also returns the L² norm (w.r.t. dθ) of the dropped tail.
    pub fn product_capped(&self, other: &Self, cap: usize) -> (Self, T) {
        let full = self.product(other);
        let mut tail = T::zero();
        for k in (cap + 1)..=full.degree() {
            let (a, b) = full.coeff(k);
            tail += a * a + b * b;
        }
        (full.truncate(cap.min(full.degree())), (T::pi() * tail).sqrt())
    }

    /// Product with the default cap of four times the larger input degree.
    pub fn product_default_cap(&self, other: &Self) -> (Self, T) {
        let cap = 4 * self.degree().max(other.degree()).max(1);
        self.product_capped(other, cap)
    }

    /// Minimum over `p` equispaced samples.
    pub fn sampled_min(&self, p: usize) -> T {
        self.samples(p).into_iter().fold(T::inf(), |m, v| m.min(v))
    }

    pub fn sampled_max(&self, p: usize) -> T {
        self.samples(p).into_iter().fold(-T::inf(), |m, v| m.max(v))
    }
}

/// Checks `min β > margin` over a dense grid.
pub fn check_positive<T: Real>(beta: &TrigPolynomial<T>) -> Result<()> {
    let p = POSITIVITY_NODES.max(4 * beta.degree());
    let min = beta.sampled_min(p);
    if !(min > T::lit(POSITIVITY_MARGIN)) {
        return Err(Error::NonPositiveWeight { min: min.to_f64_lossy() });
    }
    Ok(())
}

/// Weighted mass matrix `∫ e_i e_j β dθ` from the moments
/// `c_m = ∫ β cos mθ`, `s_m = ∫ β sin mθ` (`m = 0..=2n`).
pub fn mass_matrix_from_moments<T: Real>(c: &[T], s: &[T], n: usize) -> DMatrix<T> {
    assert!(c.len() > 2 * n && s.len() > 2 * n);
    let dim = 2 * n + 1;
    let half = T::lit(0.5);
    let cm = |m: isize| c[m.unsigned_abs()];
    let sm = |m: isize| if m >= 0 { s[m as usize] } else { -s[m.unsigned_abs()] };
    DMatrix::from_fn(dim, dim, |i, j| {
        let (ki, kj) = (basis_mode(i) as isize, basis_mode(j) as isize);
        let ci = i == 0 || i % 2 == 1;
        let cj = j == 0 || j % 2 == 1;
        match (i == 0, j == 0) {
            (true, true) => c[0],
            (true, false) => {
                if cj {
                    cm(kj)
                } else {
                    sm(kj)
                }
            }
            (false, true) => {
                if ci {
                    cm(ki)
                } else {
                    sm(ki)
                }
            }
            (false, false) => match (ci, cj) {
                (true, true) => half * (cm(ki - kj) + cm(ki + kj)),
                (false, false) => half * (cm(ki - kj) - cm(ki + kj)),
                (true, false) => half * (sm(ki + kj) + sm(kj - ki)),
                (false, true) => half * (sm(ki + kj) + sm(ki - kj)),
            },
        }
    })
}

/// Symmetric positive definite matrix of the bilinear form `∫ φψ β dθ` over the
/// trace basis of degree `n`. Exact for polynomial `β`.
pub fn toeplitz_mass_matrix<T: Real>(beta: &TrigPolynomial<T>, n: usize) -> Result<DMatrix<T>> {
    check_positive(beta)?;
    let (c, s) = polynomial_moments(beta, 2 * n);
    Ok(mass_matrix_from_moments(&c, &s, n))
}

fn polynomial_moments<T: Real>(beta: &TrigPolynomial<T>, max_mode: usize) -> (Vec<T>, Vec<T>) {
    let pi = T::pi();
    let mut c = vec![T::zero(); max_mode + 1];
    let mut s = vec![T::zero(); max_mode + 1];
    c[0] = beta.integral();
    for m in 1..=max_mode {
        let (a, b) = beta.coeff(m);
        c[m] = a * pi;
        s[m] = b * pi;
    }
    (c, s)
}

/// How a [`BoundaryWeight`] component encodes the density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightRepresentation {
    /// Component is `β` itself.
    Direct,
    /// Component is `log β`; positive by construction.
    Log,
}

/// Positive density on each boundary circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoundaryWeight<T: Real> {
    pub components: Vec<TrigPolynomial<T>>,
    pub representation: WeightRepresentation,
}

impl<T: Real> BoundaryWeight<T> {
    pub fn direct(components: Vec<TrigPolynomial<T>>) -> Self {
        Self { components, representation: WeightRepresentation::Direct }
    }

    pub fn log(components: Vec<TrigPolynomial<T>>) -> Self {
        Self { components, representation: WeightRepresentation::Log }
    }

    /// `β ≡ 1` on `count` circles.
    pub fn uniform(count: usize) -> Self {
        Self::direct(vec![TrigPolynomial::constant(T::one()); count])
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Largest Fourier degree among the components.
    pub fn degree(&self) -> usize {
        self.components.iter().map(|c| c.degree()).max().unwrap_or(0)
    }

    /// Density values of component `c` at `p` equispaced nodes.
    pub fn samples(&self, c: usize, p: usize) -> Vec<T> {
        let raw = self.components[c].samples(p);
        match self.representation {
            WeightRepresentation::Direct => raw,
            WeightRepresentation::Log => raw.into_iter().map(|v| v.exp()).collect(),
        }
    }

    pub fn eval(&self, c: usize, theta: T) -> T {
        let v = self.components[c].eval(theta);
        match self.representation {
            WeightRepresentation::Direct => v,
            WeightRepresentation::Log => v.exp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for comp in &self.components {
            match self.representation {
                WeightRepresentation::Direct => check_positive(comp)?,
                WeightRepresentation::Log => {
                    let p = POSITIVITY_NODES.max(4 * comp.degree());
                    let max = comp.sampled_max(p);
                    let min = comp.sampled_min(p);
                    let limit = T::lit(600.0);
                    if !(max.abs() < limit && min.abs() < limit) {
                        return Err(Error::NonPositiveWeight { min: min.exp().to_f64_lossy() });
                    }
                }
            }
        }
        Ok(())
    }

    /// Moments `∫ β cos mθ`, `∫ β sin mθ` of component `c` for `m = 0..=max_mode`.
    pub fn moments(&self, c: usize, max_mode: usize) -> (Vec<T>, Vec<T>) {
        match self.representation {
            WeightRepresentation::Direct => polynomial_moments(&self.components[c], max_mode),
            WeightRepresentation::Log => {
                let p = (4 * max_mode.max(self.components[c].degree()))
                    .max(256)
                    .next_power_of_two();
                moments(&self.samples(c, p), max_mode)
            }
        }
    }

    /// `∫₀^{2π} β dθ` on component `c`.
    pub fn mass(&self, c: usize) -> T {
        self.moments(c, 0).0[0]
    }

    /// Mass matrix of component `c` over the trace basis of degree `n`.
    pub fn mass_matrix(&self, c: usize, n: usize) -> Result<DMatrix<T>> {
        if self.representation == WeightRepresentation::Direct {
            check_positive(&self.components[c])?;
        }
        let (cm, sm) = self.moments(c, 2 * n);
        Ok(mass_matrix_from_moments(&cm, &sm, n))
    }

    /// Every component multiplied by `c > 0`.
    pub fn scaled(&self, c: T) -> Self {
        let components = match self.representation {
            WeightRepresentation::Direct => self.components.iter().map(|p| p.scale(c)).collect(),
            WeightRepresentation::Log => self
                .components
                .iter()
                .map(|p| p.add(&TrigPolynomial::constant(c.ln())))
                .collect(),
        };
        Self { components, representation: self.representation }
    }

    /// Projection of a log-represented weight to a direct polynomial of `degree`.
    pub fn to_direct(&self, degree: usize) -> Self {
        match self.representation {
            WeightRepresentation::Direct => self.clone(),
            WeightRepresentation::Log => {
                let p = default_nodes(degree.max(self.degree())).next_power_of_two();
                let components = (0..self.component_count())
                    .map(|c| {
                        TrigPolynomial::fourier_of_samples(&self.samples(c, p), degree)
                            .expect("enough samples")
                    })
                    .collect();
                Self::direct(components)
            }
        }
    }

    /// Every component rotated by `phi`.
    pub fn rotated(&self, phi: T) -> Self {
        Self {
            components: self.components.iter().map(|p| p.rotate(phi)).collect(),
            representation: self.representation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Modified Bessel `I₀(x) = Σ (x/2)^{2k} / (k!)²`.
    fn bessel_i0(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= (x / 2.0) * (x / 2.0) / (k as f64 * k as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn eval_examples() {
        let one = TrigPolynomial::<f64>::constant(1.0);
        assert_eq!(one.eval(1.234), 1.0);
        let c = TrigPolynomial::<f64>::monomial(1, 1.0, false);
        assert_relative_eq!(c.eval(0.0), 1.0);
        let p = TrigPolynomial::new(1.0, vec![0.0, 0.5], vec![0.0, 0.0]).unwrap();
        assert_relative_eq!(p.eval(PI / 2.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn eval_is_periodic() {
        let p = TrigPolynomial::new(0.3, vec![1.0, -0.2, 0.7], vec![0.1, 0.4, -0.5]).unwrap();
        for &t in &[0.0, 0.3, 2.0, -1.1] {
            assert_relative_eq!(p.eval(t), p.eval(t + 2.0 * PI), epsilon = 1e-13);
        }
    }

    #[test]
    fn fourier_of_band_limited_samples() {
        let vals: Vec<f64> = grid::<f64>(16).iter().map(|t| (3.0 * t).cos()).collect();
        let p = TrigPolynomial::fourier_of_samples(&vals, 5).unwrap();
        for k in 0..=5 {
            let (a, b) = p.coeff(k);
            let expect = if k == 3 { 1.0 } else { 0.0 };
            assert!((a - expect).abs() < 1e-14, "a{k} = {a}");
            assert!(b.abs() < 1e-14);
        }
        let seven = TrigPolynomial::fourier_of_samples(&[7.0; 9], 3).unwrap();
        assert_relative_eq!(seven.a0(), 7.0, epsilon = 1e-14);
    }

    #[test]
    fn fourier_of_exp_cos_matches_bessel_series() {
        let vals: Vec<f64> = grid::<f64>(256).iter().map(|t| t.cos().exp()).collect();
        let p = TrigPolynomial::fourier_of_samples(&vals, 20).unwrap();
        let i0 = bessel_i0(1.0);
        assert_relative_eq!(i0, 1.266_065_877_75, epsilon = 1e-11);
        assert_relative_eq!(p.a0(), i0, epsilon = 1e-14);
    }

    #[test]
    fn undersampling_is_rejected() {
        let err = TrigPolynomial::<f64>::fourier_of_samples(&[1.0; 8], 4).unwrap_err();
        assert!(matches!(err, Error::DegenerateSampling { samples: 8, degree: 4 }));
    }

    #[test]
    fn uniform_mass_matrix_is_diagonal() {
        let m = toeplitz_mass_matrix(&TrigPolynomial::<f64>::constant(1.0), 2).unwrap();
        let expect = [2.0 * PI, PI, PI, PI, PI];
        for i in 0..5 {
            for j in 0..5 {
                let e = if i == j { expect[i] } else { 0.0 };
                assert!((m[(i, j)] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mass_entry_against_symbolic_integral() {
        let beta = TrigPolynomial::new(1.0, vec![0.5], vec![0.0]).unwrap();
        let m = toeplitz_mass_matrix(&beta, 3).unwrap();
        // ∫ cos θ (1 + 0.5 cos θ) dθ = 0.5π
        assert_relative_eq!(m[(0, 1)], 0.5 * PI, epsilon = 1e-14);
        assert!(m.clone().cholesky().is_some());
    }

    #[test]
    fn non_positive_weight_rejected() {
        let beta = TrigPolynomial::new(0.5, vec![1.0], vec![0.0]).unwrap();
        assert!(matches!(toeplitz_mass_matrix(&beta, 2), Err(Error::NonPositiveWeight { .. })));
    }

    #[test]
    fn product_matches_pointwise() {
        let p = TrigPolynomial::new(0.2, vec![1.0, -0.3], vec![0.5, 0.25]).unwrap();
        let q = TrigPolynomial::new(-1.0, vec![0.1, 0.0, 0.4], vec![0.0, 0.7, -0.2]).unwrap();
        let pq = p.product(&q);
        assert_eq!(pq.degree(), 5);
        let nodes = 2 * 5 + 1;
        for t in grid::<f64>(nodes) {
            assert_relative_eq!(pq.eval(t), p.eval(t) * q.eval(t), epsilon = 1e-13);
        }
        let (capped, tail) = p.product_capped(&q, 3);
        assert_eq!(capped.degree(), 3);
        assert!(tail > 0.0);
    }

    #[test]
    fn rotation_shifts_argument() {
        let p = TrigPolynomial::new(0.2, vec![1.0, -0.3], vec![0.5, 0.25]).unwrap();
        let r = p.rotate(0.7);
        assert_relative_eq!(r.eval(1.9), p.eval(1.2), epsilon = 1e-14);
    }

    #[test]
    fn log_weight_moments_and_mass() {
        let w = BoundaryWeight::log(vec![TrigPolynomial::new(0.0, vec![1.0], vec![0.0]).unwrap()]);
        // ∫ exp(cos θ) dθ = 2π I₀(1)
        assert_relative_eq!(w.mass(0), 2.0 * PI * bessel_i0(1.0), epsilon = 1e-12);
    }

    #[test]
    fn json_shape() {
        let p = TrigPolynomial::new(1.0, vec![0.5], vec![-0.25]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"degree":1,"a0":1.0,"cos":[0.5],"sin":[-0.25]}"#);
        let back: TrigPolynomial<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<TrigPolynomial<f64>>(
            r#"{"degree":2,"a0":1.0,"cos":[0.5],"sin":[-0.25]}"#
        )
        .is_err());
    }
}
