//! Weighted Steklov problem on smooth planar Jordan domains via a boundary
//! integral formulation.
//!
//! The Dirichlet-to-Neumann map is `Λ = (½I + K′) S⁻¹` where `S` is the
//! single-layer operator and `K′` the adjoint double layer. Both are
//! discretized by Nyström quadrature on `M = 2n` equispaced parameter nodes,
//! with the logarithmic singularity of `S` integrated exactly against the
//! interpolating trigonometric polynomial. The curve is dilated to unit
//! diameter first, which keeps its logarithmic capacity in `[1/4, 1/2]` and
//! `S` invertible; eigenvalues are mapped back afterwards.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::generalized_symmetric_eigen;
use crate::scalar::{two_pi, Real};
use crate::spectrum::{EigenTraces, Spectrum};
use crate::trace::{node, TrigPolynomial};

/// Closed parametrized curve `θ ↦ (x(θ), y(θ))`, `θ ∈ [0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Curve<T: Real> {
    Circle { radius: T },
    /// `(cos θ, sin θ / √q)`: the ellipse `x² + q y² = 1`.
    Ellipse { q: T },
    /// Trigonometric polynomial coordinates, e.g. fitted to tabulated points.
    Fourier { x: TrigPolynomial<T>, y: TrigPolynomial<T> },
}

impl<T: Real> Curve<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            Curve::Circle { radius } if !(*radius > T::zero()) => {
                Err(Error::InvalidParameter("circle radius must be positive".into()))
            }
            Curve::Ellipse { q } if !(*q > T::zero()) => {
                Err(Error::InvalidParameter("ellipse parameter q must be positive".into()))
            }
            Curve::Fourier { .. } => {
                let p = 1024;
                let min_speed = (0..p)
                    .map(|j| self.speed(node(j, p)))
                    .fold(T::inf(), |a, b| a.min(b));
                if min_speed > T::zero() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("curve parametrization is singular".into()))
                }
            }
            _ => Ok(()),
        }
    }

    /// Least-squares trigonometric fit of tabulated points at equispaced parameters.
    pub fn from_samples(xs: &[T], ys: &[T], degree: usize) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidParameter("coordinate columns differ in length".into()));
        }
        let x = TrigPolynomial::fourier_of_samples(xs, degree)?;
        let y = TrigPolynomial::fourier_of_samples(ys, degree)?;
        let c = Curve::Fourier { x, y };
        c.validate()?;
        Ok(c)
    }

    /// Equivalent Fourier representation.
    pub fn to_fourier(&self) -> Self {
        let unit = |amp: T, sine: bool| TrigPolynomial::monomial(1, amp, sine);
        match self {
            Curve::Circle { radius } => Curve::Fourier { x: unit(*radius, false), y: unit(*radius, true) },
            Curve::Ellipse { q } => Curve::Fourier { x: unit(T::one(), false), y: unit(q.sqrt().recip(), true) },
            f => f.clone(),
        }
    }

    /// Dilation by `lambda`.
    pub fn scaled(&self, lambda: T) -> Self {
        match self.to_fourier() {
            Curve::Fourier { x, y } => Curve::Fourier { x: x.scale(lambda), y: y.scale(lambda) },
            _ => unreachable!(),
        }
    }

    /// Point and its first two derivatives at `θ`.
    pub fn jet(&self, t: T) -> [[T; 2]; 3] {
        let (s, c) = t.sin_cos();
        match self {
            Curve::Circle { radius: r } => [[*r * c, *r * s], [-*r * s, *r * c], [-*r * c, -*r * s]],
            Curve::Ellipse { q } => {
                let b = q.sqrt().recip();
                [[c, b * s], [-s, b * c], [-c, -b * s]]
            }
            Curve::Fourier { x, y } => {
                let (dx, dy) = (x.derivative(), y.derivative());
                let (ddx, ddy) = (dx.derivative(), dy.derivative());
                [[x.eval(t), y.eval(t)], [dx.eval(t), dy.eval(t)], [ddx.eval(t), ddy.eval(t)]]
            }
        }
    }

    pub fn point(&self, t: T) -> [T; 2] {
        self.jet(t)[0]
    }

    pub fn speed(&self, t: T) -> T {
        let d = self.jet(t)[1];
        (d[0] * d[0] + d[1] * d[1]).sqrt()
    }

    /// Signed enclosed area; positive for counterclockwise curves.
    pub fn signed_area(&self, nodes: usize) -> T {
        let mut acc = T::zero();
        for j in 0..nodes {
            let [p, d, _] = self.jet(node(j, nodes));
            acc += p[0] * d[1] - p[1] * d[0];
        }
        acc * T::pi() / T::from_usize_lossy(nodes)
    }

    /// Boundary length by the trapezoid rule.
    pub fn length(&self, nodes: usize) -> T {
        let mut acc = T::zero();
        for j in 0..nodes {
            acc += self.speed(node(j, nodes));
        }
        acc * two_pi::<T>() / T::from_usize_lossy(nodes)
    }

    /// Largest distance between two of `nodes` sample points.
    pub fn diameter(&self, nodes: usize) -> T {
        let pts: Vec<[T; 2]> = (0..nodes).map(|j| self.point(node(j, nodes))).collect();
        let mut d2 = T::zero();
        for i in 0..nodes {
            for j in i + 1..nodes {
                let (dx, dy) = (pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
                d2 = d2.max(dx * dx + dy * dy);
            }
        }
        d2.sqrt()
    }
}

/// Boundary density on a curve, as a function of the curve parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CurveWeight<T: Real> {
    Uniform,
    Fourier { beta: TrigPolynomial<T> },
    Log { log_beta: TrigPolynomial<T> },
    /// `(x² + q² y²)^{-1/2}` evaluated at the curve point.
    CriticalEllipse { q: T },
}

impl<T: Real> CurveWeight<T> {
    pub fn eval(&self, curve: &Curve<T>, t: T) -> T {
        match self {
            CurveWeight::Uniform => T::one(),
            CurveWeight::Fourier { beta } => beta.eval(t),
            CurveWeight::Log { log_beta } => log_beta.eval(t).exp(),
            CurveWeight::CriticalEllipse { q } => {
                let [x, y] = curve.point(t);
                (x * x + *q * *q * y * y).sqrt().recip()
            }
        }
    }
}

/// Nyström discretization of a curve at `M` equispaced parameter nodes.
#[derive(Clone, Debug)]
pub struct CurveDiscretization<T: Real> {
    pub nodes: usize,
    /// Dilation applied before the integral equations are formed.
    pub scale: T,
    /// `|γ′(θ_j)|` of the original curve.
    pub speed: Vec<T>,
    /// DtN matrix of the original curve, acting on nodal values.
    pub dtn: DMatrix<T>,
}

/// Trapezoid weights `∫_{−π}^{π} log(4 sin²(s/2)) f(s) ds ≈ Σ R_d f(θ_d)` for
/// the offset index `d`, exact for trigonometric polynomials of degree `< n`.
fn log_weights<T: Real>(m: usize) -> Vec<T> {
    let n = m / 2;
    let nf = T::from_usize_lossy(n);
    (0..m)
        .map(|d| {
            let td = T::pi() * T::from_usize_lossy(d) / nf;
            let mut acc = T::zero();
            for k in 1..n {
                acc += (T::from_usize_lossy(k) * td).cos() / T::from_usize_lossy(k);
            }
            -two_pi::<T>() / nf * acc - T::pi() / (nf * nf) * (nf * td).cos()
        })
        .collect()
}

/// Builds the DtN matrix on `nodes` (even, ≥ 8) parameter nodes.
pub fn discretize<T: Real>(curve: &Curve<T>, nodes: usize) -> Result<CurveDiscretization<T>> {
    curve.validate()?;
    if nodes < 8 || !nodes.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("node count must be even and at least 8, got {nodes}")));
    }
    let m = nodes;
    let n = m / 2;
    let diam = curve.diameter(m.min(512));
    let scale = diam.recip();
    let scaled = curve.scaled(scale);
    let orient = if scaled.signed_area(m) > T::zero() { T::one() } else { -T::one() };

    let jets: Vec<[[T; 2]; 3]> = (0..m).map(|j| scaled.jet(node(j, m))).collect();
    let sp: Vec<T> = jets.iter().map(|j| (j[1][0] * j[1][0] + j[1][1] * j[1][1]).sqrt()).collect();
    let normal: Vec<[T; 2]> = jets
        .iter()
        .zip(&sp)
        .map(|(j, &s)| [orient * j[1][1] / s, -orient * j[1][0] / s])
        .collect();
    let r = log_weights::<T>(m);
    let h = T::pi() / T::from_usize_lossy(n);
    let four_pi = T::lit(4.0) * T::pi();

    let mut s_mat = DMatrix::zeros(m, m);
    let mut kp = DMatrix::zeros(m, m);
    for i in 0..m {
        let xi = jets[i][0];
        for j in 0..m {
            let d = (i + m - j) % m;
            let logpart = -sp[j] / four_pi * r[d];
            if i == j {
                let k2 = -sp[i] * (sp[i] * sp[i]).ln() / four_pi;
                s_mat[(i, j)] = logpart + h * k2;
                let curv = jets[i][2][0] * normal[i][0] + jets[i][2][1] * normal[i][1];
                kp[(i, j)] = h * (curv / (T::lit(2.0) * sp[i] * sp[i])) * sp[i] / two_pi::<T>();
            } else {
                let (dx, dy) = (xi[0] - jets[j][0][0], xi[1] - jets[j][0][1]);
                let r2 = dx * dx + dy * dy;
                let half = T::pi() * T::from_usize_lossy(d) / T::from_usize_lossy(n) * T::lit(0.5);
                let sn = half.sin();
                let k2 = -sp[j] / four_pi * (r2 / (T::lit(4.0) * sn * sn)).ln();
                s_mat[(i, j)] = logpart + h * k2;
                let dn = dx * normal[i][0] + dy * normal[i][1];
                kp[(i, j)] = -h * dn / r2 * sp[j] / two_pi::<T>();
            }
        }
    }
    let mut rhs = kp;
    for i in 0..m {
        rhs[(i, i)] += T::lit(0.5);
    }
    // Λ = (½I + K′) S⁻¹, i.e. Λᵀ = S⁻ᵀ (½I + K′)ᵀ.
    let lu = s_mat.transpose().lu();
    let lam_t = lu.solve(&rhs.transpose()).ok_or(Error::SingularOperator)?;
    let dtn = lam_t.transpose() * scale;
    let speed = (0..m).map(|j| curve.speed(node(j, m))).collect();
    Ok(CurveDiscretization { nodes: m, scale, speed, dtn })
}

/// First `count` weighted Steklov eigenvalues (raw `σ_k`) of the domain bounded
/// by `curve`, with normalized traces at the nodes.
pub fn curve_steklov<T: Real>(
    curve: &Curve<T>,
    weight: &CurveWeight<T>,
    nodes: usize,
    count: usize,
) -> Result<Spectrum<T>> {
    let disc = discretize(curve, nodes)?;
    steklov_from_discretization(curve, &disc, weight, count)
}

/// Eigenproblem for a prepared discretization.
pub fn steklov_from_discretization<T: Real>(
    curve: &Curve<T>,
    disc: &CurveDiscretization<T>,
    weight: &CurveWeight<T>,
    count: usize,
) -> Result<Spectrum<T>> {
    let m = disc.nodes;
    if count > m {
        return Err(Error::TooManyEigenvalues { requested: count, available: m });
    }
    let h = two_pi::<T>() / T::from_usize_lossy(m);
    let beta: Vec<T> = (0..m).map(|j| weight.eval(curve, node(j, m))).collect();
    if let Some(&b) = beta.iter().find(|&&b| !(b > T::zero())) {
        return Err(Error::NonPositiveWeight { min: b.to_f64_lossy() });
    }
    let w: Vec<T> = disc.speed.iter().map(|&s| s * h).collect();
    // Energy form W Λ, symmetrized.
    let mut a = DMatrix::from_fn(m, m, |i, j| w[i] * disc.dtn[(i, j)]);
    a = (&a + a.transpose()) * T::lit(0.5);
    let density: Vec<T> = beta.iter().zip(&disc.speed).map(|(&b, &s)| b * s).collect();
    let mass = DMatrix::from_diagonal(&DVector::from_fn(m, |i, _| density[i] * h));
    let ones = DVector::from_element(m, T::one());
    let eig = generalized_symmetric_eigen(&a, &mass, Some(&ones))?;
    let length = density.iter().fold(T::zero(), |acc, &d| acc + d) * h;
    let values: Vec<T> = eig.values[..count].to_vec();
    let traces = EigenTraces {
        nodes: m,
        components: 1,
        density,
        values: (0..count).map(|i| eig.vectors.column(i).iter().copied().collect()).collect(),
        coefficients: None,
    };
    Ok(Spectrum::new(values, length).with_traces(traces))
}

/// `max_j |Λf − σβf|_j / max_j |f_j|` for nodal values `f`.
pub fn boundary_residual<T: Real>(
    curve: &Curve<T>,
    disc: &CurveDiscretization<T>,
    weight: &CurveWeight<T>,
    f: &[T],
    sigma: T,
) -> T {
    let m = disc.nodes;
    let fv = DVector::from_column_slice(f);
    let lf = &disc.dtn * &fv;
    let mut res = T::zero();
    for j in 0..m {
        let b = weight.eval(curve, node(j, m));
        res = res.max((lf[j] - sigma * b * f[j]).abs());
    }
    res / fv.amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_weights_integrate_cos() {
        // ∫ log(4 sin²(s/2)) cos(ks) ds = −2π/k.
        let m = 32;
        let r = log_weights::<f64>(m);
        for k in 1..10 {
            let v: f64 = (0..m).map(|d| r[d] * (k as f64 * node::<f64>(d, m)).cos()).sum();
            assert_relative_eq!(v, -2.0 * std::f64::consts::PI / k as f64, max_relative = 1e-12);
        }
        let v0: f64 = r.iter().sum();
        assert!(v0.abs() < 1e-12);
    }

    #[test]
    fn unit_circle_dtn_on_fourier_modes() {
        let c = Curve::Circle { radius: 1.0 };
        let d = discretize(&c, 64).unwrap();
        for k in 0..10usize {
            let f: Vec<f64> = (0..64).map(|j| (k as f64 * node::<f64>(j, 64)).cos()).collect();
            let lf = &d.dtn * DVector::from_vec(f.clone());
            for j in 0..64 {
                assert!((lf[j] - k as f64 * f[j]).abs() < 1e-10, "k={k}");
            }
        }
    }

    #[test]
    fn circle_radius_scales_eigenvalues() {
        let c = Curve::Circle { radius: 2.0 };
        let s = curve_steklov(&c, &CurveWeight::Uniform, 64, 6).unwrap();
        assert_eq!(s.eigenvalues[0], 0.0);
        for (i, &v) in s.eigenvalues.iter().enumerate().skip(1) {
            assert_relative_eq!(v, i.div_ceil(2) as f64 / 2.0, max_relative = 1e-10);
        }
        assert_relative_eq!(s.weighted_length, 4.0 * std::f64::consts::PI, max_relative = 1e-12);
    }

    #[test]
    fn clockwise_parametrization_is_handled() {
        let c = Curve::Fourier {
            x: TrigPolynomial::monomial(1, 1.0, false),
            y: TrigPolynomial::monomial(1, -0.5, true),
        };
        let s = curve_steklov(&c, &CurveWeight::Uniform, 128, 3).unwrap();
        let cc = curve_steklov(&Curve::Ellipse { q: 4.0 }, &CurveWeight::Uniform, 128, 3).unwrap();
        assert_relative_eq!(s.eigenvalues[1], cc.eigenvalues[1], max_relative = 1e-10);
    }

    #[test]
    fn rejects_odd_node_count() {
        assert!(discretize(&Curve::Circle { radius: 1.0 }, 63).is_err());
    }
}
