//! Trigonometric series over a lattice torus.
//!
//! A `FourierSeries` stores complex amplitudes keyed by integer dual-lattice
//! coordinates and evaluates `f(q) = Σ c_m e^{i⟨λ_m, q⟩}`, where `λ_m` is the
//! dual vector with coordinates `m`.  Real-valued series (potentials, WKB
//! amplitude data) carry a Hermitian-symmetry flag.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::lattice::Lattice;

/// Amplitudes below this magnitude are dropped when pruning.
pub const PRUNE_EPS: f64 = 1e-300;

pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct FourierSeries {
    lattice: Lattice,
    coeffs: BTreeMap<Vec<i32>, Complex64>,
    cutoff: i32,
    hermitian: bool,
}

impl FourierSeries {
    /// Empty (identically zero) series.
    pub fn zero(lattice: Lattice, hermitian: bool) -> Self {
        FourierSeries {
            lattice,
            coeffs: BTreeMap::new(),
            cutoff: 0,
            hermitian,
        }
    }

    pub fn constant(lattice: Lattice, value: Complex64) -> Self {
        let dim = lattice.dim();
        let mut s = FourierSeries::zero(lattice, value.im == 0.0);
        s.coeffs.insert(vec![0; dim], value);
        s
    }

    /// Build from explicit coefficients.  A series flagged Hermitian must
    /// satisfy `c_{-m} = conj(c_m)` within `HERMITIAN_TOL`.
    pub fn from_coeffs<I>(lattice: Lattice, coeffs: I, hermitian: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i32>, Complex64)>,
    {
        let dim = lattice.dim();
        let mut map = BTreeMap::new();
        let mut cutoff = 0i32;
        for (idx, c) in coeffs {
            if idx.len() != dim {
                return Err(Error::PotentialFormat(format!(
                    "mode index {idx:?} has wrong dimension (expected {dim})"
                )));
            }
            cutoff = cutoff.max(idx.iter().map(|n| n.abs()).max().unwrap_or(0));
            *map.entry(idx).or_insert(Complex64::default()) += c;
        }
        let series = FourierSeries {
            lattice,
            coeffs: map,
            cutoff,
            hermitian,
        };
        if hermitian {
            let defect = series.hermitian_defect();
            if defect > HERMITIAN_TOL {
                return Err(Error::PotentialFormat(format!(
                    "series flagged real violates Hermitian symmetry by {defect:.3e}"
                )));
            }
        }
        Ok(series)
    }

    /// Transform grid samples into a series with `|m|_∞ ≤ cutoff`.
    pub fn from_grid(
        grid: &TorusGrid,
        values: &[Complex64],
        cutoff: i32,
        hermitian: bool,
    ) -> Self {
        let coeffs = grid.to_coeffs(values, cutoff);
        FourierSeries {
            lattice: grid.lattice().clone(),
            cutoff: coeffs
                .keys()
                .map(|idx| idx.iter().map(|n| n.abs()).max().unwrap_or(0))
                .max()
                .unwrap_or(0),
            coeffs,
            hermitian,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn cutoff(&self) -> i32 {
        self.cutoff
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, idx: &[i32]) -> Complex64 {
        self.coeffs.get(idx).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&Vec<i32>, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn set(&mut self, idx: Vec<i32>, c: Complex64) {
        self.cutoff = self
            .cutoff
            .max(idx.iter().map(|n| n.abs()).max().unwrap_or(0));
        self.coeffs.insert(idx, c);
    }

    /// Max violation of `c_{-m} = conj(c_m)`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for (idx, c) in &self.coeffs {
            let neg: Vec<i32> = idx.iter().map(|n| -n).collect();
            defect = defect.max((self.coeff(&neg) - c.conj()).norm());
        }
        defect
    }

    /// Value at `q`.
    pub fn eval(&self, q: &DVector<f64>) -> Complex64 {
        let mut acc = Complex64::default();
        for (idx, c) in &self.coeffs {
            let lam = self.lattice.dual_vector(idx);
            acc += c * Complex64::new(0.0, lam.dot(q)).exp();
        }
        acc
    }

    /// Value and gradient at `q`; the gradient picks up a factor `iλ_m`.
    pub fn eval_with_grad(&self, q: &DVector<f64>) -> (Complex64, Vec<Complex64>) {
        let d = self.dim();
        let mut value = Complex64::default();
        let mut grad = vec![Complex64::default(); d];
        for (idx, c) in &self.coeffs {
            let lam = self.lattice.dual_vector(idx);
            let term = c * Complex64::new(0.0, lam.dot(q)).exp();
            value += term;
            for a in 0..d {
                grad[a] += term * Complex64::new(0.0, lam[a]);
            }
        }
        (value, grad)
    }

    /// Real part of the value (for Hermitian series this is the value).
    pub fn eval_real(&self, q: &DVector<f64>) -> f64 {
        self.eval(q).re
    }

    /// Real gradient, valid for Hermitian-symmetric series.
    pub fn grad_real(&self, q: &DVector<f64>) -> DVector<f64> {
        let (_, grad) = self.eval_with_grad(q);
        DVector::from_iterator(self.dim(), grad.iter().map(|g| g.re))
    }

    /// Derivative along `axis`: multiply each mode by `i λ_axis`.
    pub fn derivative(&self, axis: usize) -> FourierSeries {
        let mut out = FourierSeries::zero(self.lattice.clone(), false);
        for (idx, c) in &self.coeffs {
            let lam = self.lattice.dual_vector(idx);
            out.set(idx.clone(), c * Complex64::new(0.0, lam[axis]));
        }
        out
    }

    /// Laplacian: multiply each mode by `-|λ|²`.
    pub fn laplacian(&self) -> FourierSeries {
        let mut out = FourierSeries::zero(self.lattice.clone(), self.hermitian);
        for (idx, c) in &self.coeffs {
            let lam = self.lattice.dual_vector(idx);
            out.set(idx.clone(), c * (-lam.norm_squared()));
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> FourierSeries {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c *= factor;
        }
        if factor.im != 0.0 {
            out.hermitian = false;
        }
        out
    }

    pub fn add(&self, other: &FourierSeries) -> FourierSeries {
        let mut out = self.clone();
        out.hermitian = self.hermitian && other.hermitian;
        for (idx, c) in &other.coeffs {
            let entry = out.coeffs.entry(idx.clone()).or_default();
            *entry += c;
        }
        out.cutoff = out.cutoff.max(other.cutoff);
        out
    }

    /// Drop negligible amplitudes.
    pub fn pruned(mut self, eps: f64) -> FourierSeries {
        self.coeffs.retain(|_, c| c.norm() > eps);
        self.cutoff = self
            .coeffs
            .keys()
            .map(|idx| idx.iter().map(|n| n.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0);
        self
    }

    /// Sum of |c_m| — a cheap sup-norm bound.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Reinterpret the integer coefficients over a different lattice.
    /// Used for the ballistic change of coordinates: a series over the
    /// physical lattice becomes the series with identical coefficients over
    /// the standard torus, since `Lᵀ λ_m = m`.
    pub fn with_lattice(&self, lattice: Lattice) -> FourierSeries {
        FourierSeries {
            lattice,
            coeffs: self.coeffs.clone(),
            cutoff: self.cutoff,
            hermitian: self.hermitian,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cosine_series() -> FourierSeries {
        let lat = Lattice::standard(1).unwrap();
        FourierSeries::from_coeffs(
            lat,
            vec![
                (vec![1], Complex64::new(0.5, 0.0)),
                (vec![-1], Complex64::new(0.5, 0.0)),
            ],
            true,
        )
        .unwrap()
    }

    #[test]
    fn cosine_values() {
        let s = cosine_series();
        let q0 = DVector::from_column_slice(&[0.0]);
        let qh = DVector::from_column_slice(&[std::f64::consts::FRAC_PI_2]);
        assert_relative_eq!(s.eval(&q0).re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.eval(&qh).re, 0.0, epsilon = 1e-14);
        assert_relative_eq!(s.eval(&q0).im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn cutoff_zero_is_constant() {
        let lat = Lattice::standard(2).unwrap();
        let s = FourierSeries::constant(lat, Complex64::new(2.5, 0.0));
        assert_eq!(s.cutoff(), 0);
        for t in 0..10 {
            let q = DVector::from_column_slice(&[t as f64 * 0.7, t as f64 * 1.3]);
            assert_relative_eq!(s.eval(&q).re, 2.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn gradient_matches_central_difference() {
        let lat = Lattice::standard(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut coeffs = Vec::new();
        for m in 1..=6i32 {
            let re = rng.random::<f64>() - 0.5;
            let im = rng.random::<f64>() - 0.5;
            coeffs.push((vec![m], Complex64::new(re, im)));
            coeffs.push((vec![-m], Complex64::new(re, -im)));
        }
        let s = FourierSeries::from_coeffs(lat, coeffs, true).unwrap();
        let h = 1e-5;
        for t in 0..20 {
            let x = t as f64 * 0.31;
            let q = DVector::from_column_slice(&[x]);
            let qp = DVector::from_column_slice(&[x + h]);
            let qm = DVector::from_column_slice(&[x - h]);
            let fd = (s.eval_real(&qp) - s.eval_real(&qm)) / (2.0 * h);
            let grad = s.grad_real(&q);
            assert!((grad[0] - fd).abs() < 1e-8, "grad {} vs fd {}", grad[0], fd);
        }
    }

    #[test]
    fn hermitian_series_is_real_at_many_points() {
        let lat = Lattice::standard(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut coeffs = Vec::new();
        for m0 in -3i32..=3 {
            for m1 in -3i32..=3 {
                if (m0, m1) < (0, 0) || (m0, m1) == (0, 0) {
                    continue;
                }
                let c = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                coeffs.push((vec![m0, m1], c));
                coeffs.push((vec![-m0, -m1], c.conj()));
            }
        }
        let s = FourierSeries::from_coeffs(lat, coeffs, true).unwrap();
        for _ in 0..1000 {
            let q = DVector::from_column_slice(&[
                rng.random::<f64>() * 10.0 - 5.0,
                rng.random::<f64>() * 10.0 - 5.0,
            ]);
            assert!(s.eval(&q).im.abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_flag_rejects_asymmetric_input() {
        let lat = Lattice::standard(1).unwrap();
        let r = FourierSeries::from_coeffs(
            lat,
            vec![(vec![1], Complex64::new(0.5, 0.0))],
            true,
        );
        assert!(matches!(r, Err(Error::PotentialFormat(_))));
    }

    #[test]
    fn derivative_and_laplacian_modes() {
        let s = cosine_series();
        let ds = s.derivative(0);
        // d/dq cos q = -sin q: coefficient at +1 is i/2.
        assert!((ds.coeff(&[1]) - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        let lap = s.laplacian();
        assert!((lap.coeff(&[1]) - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
    }
}
