//! Symmetric-definite generalized eigensolvers.
//!
//! Problems have the form `K u = σ M u` with `K` positive semidefinite and
//! `M` positive definite. When the kernel vector `z` of `K` is known it is
//! removed exactly: the eigenvalue `0` with eigenvector `z` is reported first
//! and the remaining pencil is reduced to the `M`-orthogonal complement of `z`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues ascending; column `i` of `vectors` is `M`-orthonormal.
#[derive(Clone, Debug)]
pub struct GeneralizedEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: DMatrix<T>,
}

/// Householder reflector `H = I − 2vvᵀ/vᵀv` with `H z ∝ e₀`.
fn householder<T: Real>(z: &DVector<T>) -> DVector<T> {
    let norm = z.norm();
    let mut v = z.clone();
    let sign = if z[0] >= T::zero() { T::one() } else { -T::one() };
    v[0] += sign * norm;
    v
}

/// `H A H` for the reflector with vector `v`.
fn reflect_both<T: Real>(a: &DMatrix<T>, v: &DVector<T>) -> DMatrix<T> {
    let two = T::lit(2.0);
    let vv = v.dot(v);
    let w = a * v * (two / vv);
    let mut out = a.clone();
    out -= v * w.transpose();
    out -= &w * v.transpose();
    let c = v.dot(&w) * two / vv;
    out += v * v.transpose() * c;
    out
}

fn reflect_vec<T: Real>(x: &DVector<T>, v: &DVector<T>) -> DVector<T> {
    let c = T::lit(2.0) * v.dot(x) / v.dot(v);
    x - v * c
}

/// `C = L⁻¹ K L⁻ᵀ` for the Cholesky factor `L`.
fn congruence<T: Real>(k: &DMatrix<T>, l: &DMatrix<T>) -> DMatrix<T> {
    let y = l.solve_lower_triangular(k).expect("nonsingular factor");
    let c = l.solve_lower_triangular(&y.transpose()).expect("nonsingular factor");
    (&c + c.transpose()) * T::lit(0.5)
}

fn sorted_eigen<T: Real>(c: DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite"));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Solves `K u = σ M u` densely.
///
/// With `kernel = Some(z)` the vector `z` must satisfy `K z = 0`; it is
/// returned as the first eigenpair with `σ = 0` exactly.
pub fn generalized_symmetric_eigen<T: Real>(
    k: &DMatrix<T>,
    m: &DMatrix<T>,
    kernel: Option<&DVector<T>>,
) -> Result<GeneralizedEigen<T>> {
    let n = k.nrows();
    assert!(k.is_square() && m.shape() == k.shape());
    let Some(z) = kernel else {
        let l = m.clone().cholesky().ok_or(Error::MassNotPositiveDefinite)?;
        let lm = l.l();
        let (values, y) = sorted_eigen(congruence(k, &lm));
        let vectors = lm.transpose().solve_upper_triangular(&y).expect("nonsingular factor");
        return Ok(GeneralizedEigen { values, vectors });
    };
    assert_eq!(z.len(), n);
    let v = householder(z);
    let kh = reflect_both(k, &v);
    let mh = reflect_both(m, &v);
    let m00 = mh[(0, 0)];
    if !(m00 > T::zero()) {
        return Err(Error::MassNotPositiveDefinite);
    }
    let r = n - 1;
    let kr = kh.view((1, 1), (r, r)).into_owned();
    let mcol = mh.view((1, 0), (r, 1)).column(0).into_owned();
    let schur = mh.view((1, 1), (r, r)).into_owned() - &mcol * mcol.transpose() / m00;
    let l = schur.cholesky().ok_or(Error::MassNotPositiveDefinite)?;
    let lm = l.l();
    let (mut values, y) = sorted_eigen(congruence(&kr, &lm));
    let w = lm.transpose().solve_upper_triangular(&y).expect("nonsingular factor");

    let mut vectors = DMatrix::zeros(n, n);
    let zn = z / (z.dot(&(m * z))).sqrt();
    vectors.set_column(0, &zn);
    for j in 0..r {
        let wj = w.column(j);
        let mut full = DVector::zeros(n);
        full[0] = -mcol.dot(&wj) / m00;
        full.rows_mut(1, r).copy_from(&wj);
        vectors.set_column(j + 1, &reflect_vec(&full, &v));
    }
    values.insert(0, T::zero());
    Ok(GeneralizedEigen { values, vectors })
}

/// Settings for [`block_krylov_largest`].
#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    pub block: usize,
    pub max_blocks: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { block: 8, max_blocks: 200, tol: 1e-12, seed: 0x5eed }
    }
}

/// Largest `count` eigenpairs of a symmetric operator given by `apply`.
///
/// Block Krylov subspace with full reorthogonalization and Rayleigh–Ritz
/// extraction, so repeated eigenvalues up to the block size are resolved.
/// Returned values are descending, vectors orthonormal.
pub fn block_krylov_largest<T: Real>(
    dim: usize,
    count: usize,
    apply: impl Fn(&DVector<T>) -> DVector<T>,
    opts: KrylovOptions,
) -> Result<(Vec<T>, Vec<DVector<T>>)> {
    if count > dim {
        return Err(Error::TooManyEigenvalues { requested: count, available: dim });
    }
    let b = opts.block.max(count + 2).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<DVector<T>> = Vec::new();
    let mut images: Vec<DVector<T>> = Vec::new();
    let mut block: Vec<DVector<T>> = (0..b)
        .map(|_| DVector::from_fn(dim, |_, _| T::lit(rng.gen::<f64>() - 0.5)))
        .collect();
    let tol = T::lit(opts.tol);

    for _ in 0..opts.max_blocks {
        // Orthonormalize the candidate block against the basis (twice) and itself.
        let mut added = Vec::new();
        for mut x in block.drain(..) {
            let scale0 = x.norm();
            for _ in 0..2 {
                for q in basis.iter().chain(added.iter()) {
                    let c = q.dot(&x);
                    x.axpy(-c, q, T::one());
                }
            }
            let nx = x.norm();
            if nx > T::lit(1e-10) * scale0 && nx > T::zero() {
                added.push(x / nx);
            }
        }
        if added.is_empty() {
            break;
        }
        for q in &added {
            images.push(apply(q));
        }
        basis.extend(added);

        let m = basis.len();
        if m < count {
            block = images[m - (m.min(b))..].to_vec();
            continue;
        }
        let h = DMatrix::from_fn(m, m, |i, j| {
            T::lit(0.5) * (basis[i].dot(&images[j]) + basis[j].dot(&images[i]))
        });
        let (vals, vecs) = sorted_eigen(h);
        let mut pairs = Vec::with_capacity(count);
        let mut converged = true;
        let top = vals[m - 1].abs().max(T::machine_eps());
        for r in 0..count {
            let idx = m - 1 - r;
            let theta = vals[idx];
            let mut x = DVector::zeros(dim);
            let mut ax = DVector::zeros(dim);
            for j in 0..m {
                let s = vecs[(j, idx)];
                x.axpy(s, &basis[j], T::one());
                ax.axpy(s, &images[j], T::one());
            }
            let res = (&ax - &x * theta).norm();
            if res > tol * top {
                converged = false;
            }
            pairs.push((theta, x));
        }
        if converged || m >= dim {
            let (values, vectors) = pairs.into_iter().unzip();
            return Ok((values, vectors));
        }
        let start = images.len().saturating_sub(b);
        block = images[start..].to_vec();
    }
    Err(Error::NoConvergence(opts.max_blocks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() - 0.5);
        &a * a.transpose() + DMatrix::identity(n, n) * (n as f64)
    }

    #[test]
    fn matches_standard_problem_with_identity_mass() {
        let k = spd(6, 1);
        let m = DMatrix::identity(6, 6);
        let g = generalized_symmetric_eigen(&k, &m, None).unwrap();
        let mut reference: Vec<f64> = SymmetricEigen::new(k.clone()).eigenvalues.iter().copied().collect();
        reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in g.values.iter().zip(&reference) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn residual_and_orthonormality() {
        let k = spd(8, 2);
        let m = spd(8, 3);
        let g = generalized_symmetric_eigen(&k, &m, None).unwrap();
        let gram = g.vectors.transpose() * &m * &g.vectors;
        assert!((gram - DMatrix::identity(8, 8)).amax() < 1e-10);
        for i in 0..8 {
            let u = g.vectors.column(i);
            let r = &k * u - &m * u * g.values[i];
            assert!(r.norm() < 1e-10 * (k.norm() + g.values[i] * m.norm()) * u.norm());
        }
    }

    #[test]
    fn kernel_deflation() {
        // K = Aᵀ A projected so that K z = 0 for z = (1, 1, 0, 1, 0).
        let n = 5;
        let z = DVector::from_vec(vec![1.0, 1.0, 0.0, 1.0, 0.0]);
        let p = DMatrix::identity(n, n) - &z * z.transpose() / z.dot(&z);
        let k = &p * spd(n, 4) * &p;
        let m = spd(n, 5);
        let g = generalized_symmetric_eigen(&k, &m, Some(&z)).unwrap();
        assert_eq!(g.values[0], 0.0);
        let full = generalized_symmetric_eigen(&k, &m, None).unwrap();
        for i in 1..n {
            assert_relative_eq!(g.values[i], full.values[i], max_relative = 1e-9);
            let u = g.vectors.column(i);
            assert!((&k * u - &m * u * g.values[i]).norm() < 1e-9);
        }
        let gram = g.vectors.transpose() * &m * &g.vectors;
        assert!((gram - DMatrix::identity(n, n)).amax() < 1e-10);
    }

    #[test]
    fn krylov_finds_repeated_top_eigenvalues() {
        let n = 300;
        let mut d: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        d[1] = 1.0; // double top eigenvalue
        let apply = |x: &DVector<f64>| DVector::from_fn(n, |i, _| d[i] * x[i]);
        let (vals, vecs) = block_krylov_largest(n, 4, apply, KrylovOptions::default()).unwrap();
        assert_relative_eq!(vals[0], 1.0, max_relative = 1e-11);
        assert_relative_eq!(vals[1], 1.0, max_relative = 1e-11);
        assert_relative_eq!(vals[2], 1.0 / 3.0, max_relative = 1e-11);
        assert_relative_eq!(vals[3], 0.25, max_relative = 1e-11);
        assert_relative_eq!(vecs[2][2].abs(), 1.0, max_relative = 1e-9);
    }
}
