//! Sorted Steklov spectra with multiplicity clusters and normalized values.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::scalar::{two_pi, Real};

/// Relative gap below which consecutive eigenvalues are clustered.
pub const DEFAULT_MULTIPLICITY_TOL: f64 = 1e-8;

/// Eigenvector traces sampled on the boundary quadrature grid.
///
/// Components are concatenated; each has `nodes` equispaced nodes in its own
/// angle. `density[j]` is `β · dL/dθ` at node `j`, so that
/// `∫ g β dL ≈ Σ_j g_j density_j · 2π/nodes`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenTraces<T: Real> {
    pub nodes: usize,
    pub components: usize,
    pub density: Vec<T>,
    /// `values[i]` is eigenvector `i` at every node, normalized so `∫ φ_i² β dL = 1`.
    pub values: Vec<Vec<T>>,
    /// Interleaved Fourier coefficients when the solver works in the trace basis.
    pub coefficients: Option<Vec<Vec<T>>>,
}

impl<T: Real> EigenTraces<T> {
    /// Quadrature weight of every node (`β dL` measure).
    pub fn measure(&self) -> Vec<T> {
        let h = two_pi::<T>() / T::from_usize_lossy(self.nodes);
        self.density.iter().map(|&d| d * h).collect()
    }

    pub fn component_range(&self, c: usize) -> Range<usize> {
        c * self.nodes..(c + 1) * self.nodes
    }

    /// `∫ φ_a φ_b β dL`.
    pub fn inner(&self, a: usize, b: usize) -> T {
        let h = two_pi::<T>() / T::from_usize_lossy(self.nodes);
        let mut acc = T::zero();
        for ((&x, &y), &d) in self.values[a].iter().zip(&self.values[b]).zip(&self.density) {
            acc += x * y * d;
        }
        acc * h
    }
}

/// Sorted eigenvalues `σ_0 = 0 ≤ σ_1 ≤ …` with normalized values `σ̄_k = σ_k L`,
/// where `L = ∫ β dL` is the weighted boundary length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Spectrum<T: Real> {
    pub eigenvalues: Vec<T>,
    /// Size of the cluster each eigenvalue belongs to.
    pub multiplicities: Vec<usize>,
    #[serde(rename = "boundary_length")]
    pub weighted_length: T,
    pub normalized: Vec<T>,
    #[serde(skip, default = "default_tol")]
    pub multiplicity_tolerance: T,
    #[serde(skip)]
    pub traces: Option<EigenTraces<T>>,
}

fn default_tol<T: Real>() -> T {
    T::lit(DEFAULT_MULTIPLICITY_TOL)
}

impl<T: Real> Spectrum<T> {
    /// Builds a spectrum from eigenvalues (sorted here) and the weighted length.
    pub fn new(mut eigenvalues: Vec<T>, weighted_length: T) -> Self {
        eigenvalues.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        Self::from_sorted(eigenvalues, weighted_length, T::lit(DEFAULT_MULTIPLICITY_TOL))
    }

    pub fn from_sorted(eigenvalues: Vec<T>, weighted_length: T, tol: T) -> Self {
        let normalized = eigenvalues.iter().map(|&s| s * weighted_length).collect();
        let mut out = Self {
            multiplicities: vec![1; eigenvalues.len()],
            eigenvalues,
            weighted_length,
            normalized,
            multiplicity_tolerance: tol,
            traces: None,
        };
        out.recluster();
        out
    }

    pub fn with_traces(mut self, traces: EigenTraces<T>) -> Self {
        self.traces = Some(traces);
        self
    }

    pub fn with_tolerance(mut self, tol: T) -> Self {
        self.multiplicity_tolerance = tol;
        self.recluster();
        self
    }

    fn recluster(&mut self) {
        let clusters = self.clusters();
        for c in clusters {
            let len = c.len();
            for i in c {
                self.multiplicities[i] = len;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    fn same_cluster(&self, a: T, b: T) -> bool {
        let scale = a.abs().max(b.abs());
        (b - a).abs() <= self.multiplicity_tolerance * scale
    }

    /// Maximal runs of eigenvalues whose consecutive relative gaps are within tolerance.
    pub fn clusters(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.eigenvalues.len() {
            if i == self.eigenvalues.len()
                || !self.same_cluster(self.eigenvalues[i - 1], self.eigenvalues[i])
            {
                if i > start {
                    out.push(start..i);
                }
                start = i;
            }
        }
        out
    }

    /// Cluster containing index `i`.
    pub fn cluster_of(&self, i: usize) -> Range<usize> {
        self.clusters()
            .into_iter()
            .find(|c| c.contains(&i))
            .expect("index within spectrum")
    }

    /// Indices whose eigenvalue lies within relative distance `window` of `σ_i`.
    pub fn window_of(&self, i: usize, window: T) -> Range<usize> {
        let s = self.eigenvalues[i];
        let near = |j: usize| (self.eigenvalues[j] - s).abs() <= window * s.abs();
        let mut lo = i;
        while lo > 0 && near(lo - 1) {
            lo -= 1;
        }
        let mut hi = i + 1;
        while hi < self.len() && near(hi) {
            hi += 1;
        }
        lo..hi
    }

    /// Smallest index `k` with `σ_k` equal (within tolerance) to `value`.
    pub fn index_of(&self, value: T) -> Option<usize> {
        self.eigenvalues.iter().position(|&s| self.same_cluster(s, value))
    }

    /// Spectrum of `β ↦ cβ`: every `σ_k` is divided by `c`.
    pub fn rescaled_weight(&self, c: T) -> Self {
        let eig = self.eigenvalues.iter().map(|&s| s / c).collect();
        Self::from_sorted(eig, self.weighted_length * c, self.multiplicity_tolerance)
    }

    /// CSV with header `index,sigma,sigma_bar,multiplicity`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,sigma,sigma_bar,multiplicity\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{}\n",
                i,
                self.eigenvalues[i].to_f64_lossy(),
                self.normalized[i].to_f64_lossy(),
                self.multiplicities[i]
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustering_and_normalization() {
        let s = Spectrum::new(vec![2.0, 0.0, 1.0, 1.0 + 1e-12, 2.0], 3.0);
        assert_eq!(s.eigenvalues, vec![0.0, 1.0, 1.0 + 1e-12, 2.0, 2.0]);
        assert_eq!(s.multiplicities, vec![1, 2, 2, 2, 2]);
        assert_eq!(s.clusters(), vec![0..1, 1..3, 3..5]);
        assert_eq!(s.normalized[3], 6.0);
        assert_eq!(s.index_of(2.0), Some(3));
        assert_eq!(s.cluster_of(2), 1..3);
    }

    #[test]
    fn zeros_cluster_together() {
        let s = Spectrum::new(vec![0.0, 0.0, 1.0], 4.0);
        assert_eq!(s.multiplicities, vec![2, 2, 1]);
    }

    #[test]
    fn json_schema() {
        let s = Spectrum::new(vec![0.0, 1.0], 2.0);
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, vec!["boundary_length", "eigenvalues", "multiplicities", "normalized"]);
    }

    #[test]
    fn csv_rows() {
        let s = Spectrum::new(vec![0.0, 1.0, 1.0], 1.0);
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(2).unwrap().ends_with(",2"));
    }
}
