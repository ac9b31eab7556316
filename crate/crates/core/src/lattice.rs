//! Configuration lattices, dual lattices and Brillouin-zone geometry.
//!
//! A lattice is spanned by the columns `l_1..l_d` of `basis`.  The matrix
//! `L = basis / 2π` and the metric `M = (LᵀL)⁻¹` drive the ballistic change
//! of coordinates `(p, q) ↦ (Lᵀp/√E, L⁻¹q)` that maps the dynamics at
//! energy `E` onto a perturbation of strength `1/E` on the standard torus.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Relative floor on |det basis| below which construction is rejected.
pub const SINGULAR_DET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    dim: usize,
    basis: DMatrix<f64>,
    dual: DMatrix<f64>,
    l_matrix: DMatrix<f64>,
    m_matrix: DMatrix<f64>,
}

impl Lattice {
    /// Build a lattice from basis columns, together with the dual basis
    /// satisfying `<l_i, l*_j> = 2π δ_ij`.
    pub fn from_basis(basis: DMatrix<f64>) -> Result<Self> {
        let dim = basis.nrows();
        if dim == 0 || dim != basis.ncols() {
            return Err(Error::UnsupportedDimension(dim));
        }
        if dim > 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let det = basis.determinant();
        // Scale-aware singularity threshold: compare against the product of
        // column norms rather than an absolute number.
        let scale: f64 = (0..dim).map(|j| basis.column(j).norm()).product();
        let threshold = SINGULAR_DET_TOL * scale.max(f64::MIN_POSITIVE);
        if det.abs() <= threshold {
            return Err(Error::SingularBasis {
                det: det.abs(),
                threshold,
            });
        }
        let inv = basis
            .clone()
            .try_inverse()
            .ok_or(Error::SingularBasis {
                det: det.abs(),
                threshold,
            })?;
        let dual = inv.transpose() * TAU;
        let l_matrix = &basis / TAU;
        let gram = l_matrix.transpose() * &l_matrix;
        let m_matrix = gram.try_inverse().ok_or(Error::SingularBasis {
            det: det.abs(),
            threshold,
        })?;
        Ok(Lattice {
            dim,
            basis,
            dual,
            l_matrix,
            m_matrix,
        })
    }

    /// The lattice `2π Zᵈ`, whose dual is `Zᵈ`.
    pub fn standard(dim: usize) -> Result<Self> {
        Lattice::from_basis(DMatrix::identity(dim, dim) * TAU)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Dual basis columns `l*_j`.
    pub fn dual_basis(&self) -> &DMatrix<f64> {
        &self.dual
    }

    /// `L = basis / 2π`.
    pub fn l_matrix(&self) -> &DMatrix<f64> {
        &self.l_matrix
    }

    /// `M = (LᵀL)⁻¹`, the kinetic metric after the ballistic rescaling.
    pub fn m_matrix(&self) -> &DMatrix<f64> {
        &self.m_matrix
    }

    /// Volume of the fundamental cell of configuration space.
    pub fn cell_volume(&self) -> f64 {
        self.basis.determinant().abs()
    }

    /// Volume of the Brillouin zone (fundamental cell of the dual lattice).
    pub fn brillouin_volume(&self) -> f64 {
        self.dual.determinant().abs()
    }

    /// The dual-lattice vector with integer coordinates `index`.
    pub fn dual_vector(&self, index: &[i32]) -> DVector<f64> {
        assert_eq!(index.len(), self.dim);
        let coords = DVector::from_iterator(self.dim, index.iter().map(|&n| n as f64));
        &self.dual * coords
    }

    /// Coordinates of `q` in the basis, i.e. `basis⁻¹ q` computed through
    /// the dual pairing (no fresh inversion).
    pub fn basis_coords(&self, q: &DVector<f64>) -> DVector<f64> {
        // basis^{-1} = dualᵀ / 2π by the pairing relation.
        (self.dual.transpose() * q) / TAU
    }

    /// Reduce a position into the half-open fundamental cell anchored at 0.
    pub fn reduce_position(&self, q: &DVector<f64>) -> DVector<f64> {
        let mut coords = self.basis_coords(q);
        for x in coords.iter_mut() {
            *x -= x.floor();
            // Guard against the `1.0 - eps` rounding back up to 1.0.
            if *x >= 1.0 {
                *x = 0.0;
            }
        }
        &self.basis * coords
    }

    /// Reduce a Bloch quasimomentum into the half-open fundamental cell of
    /// the dual lattice.
    pub fn reduce_bloch(&self, k: &DVector<f64>) -> DVector<f64> {
        // k = dual * c  =>  c = basisᵀ k / 2π.
        let mut coords = (self.basis.transpose() * k) / TAU;
        for x in coords.iter_mut() {
            *x -= x.floor();
            if *x >= 1.0 {
                *x = 0.0;
            }
        }
        &self.dual * coords
    }

    /// Maximal pairing defect `max_ij |<l_i, l*_j> - 2π δ_ij|`, for
    /// invariant checks.
    pub fn pairing_defect(&self) -> f64 {
        let pairing = self.basis.transpose() * &self.dual;
        let mut defect: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let target = if r == c { TAU } else { 0.0 };
                defect = defect.max((pairing[(r, c)] - target).abs());
            }
        }
        defect
    }
}

/// A phase-space point with the position kept reduced into the fundamental
/// cell.  Reduction is idempotent by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub p: DVector<f64>,
    pub q: DVector<f64>,
}

impl PhasePoint {
    pub fn new(lattice: &Lattice, p: DVector<f64>, q: &DVector<f64>) -> Self {
        PhasePoint {
            p,
            q: lattice.reduce_position(q),
        }
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }
}

/// Ballistic rescaling `(p, q) ↦ (J, φ) = (Lᵀp/√E, L⁻¹q mod 2π)`.
///
/// Satisfies `E · Ĥ_{1/E}(J, φ) = H(p, q)` for `Ĥ_ε(J, φ) = ½⟨J, MJ⟩ + ε V(Lφ)`.
pub fn ballistic_rescale(
    x: &PhasePoint,
    energy: f64,
    lattice: &Lattice,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if !(energy > 0.0) {
        return Err(Error::NonpositiveEnergy(energy));
    }
    let action = (lattice.l_matrix().transpose() * &x.p) / energy.sqrt();
    // L⁻¹ q = 2π basis⁻¹ q, reduced into [0, 2π)ᵈ.
    let mut angle = lattice.basis_coords(&x.q) * TAU;
    for a in angle.iter_mut() {
        let mut t = *a / TAU;
        t -= t.floor();
        if t >= 1.0 {
            t = 0.0;
        }
        *a = t * TAU;
    }
    Ok((action, angle))
}
