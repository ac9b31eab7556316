//! Uniform torus grids and FFT transforms between grid samples and
//! Fourier coefficients.
//!
//! On the uniform grid `q_j = basis · (j/n)` the pairing with a dual vector
//! reduces to the standard DFT kernel, `⟨λ_m, q_j⟩ = 2π ⟨m, j⟩ / n`, for any
//! lattice shear, so one FFT path serves configuration and angle space.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::lattice::Lattice;

/// In-place FFT over a row-major `d`-dimensional array (`d` = 1 or 2).
/// Forward uses the `e^{-i…}` kernel and applies no normalization;
/// inverse uses `e^{+i…}`.
pub fn fft_nd(values: &mut [Complex64], dims: &[usize], inverse: bool) {
    assert_eq!(values.len(), dims.iter().product::<usize>());
    let mut planner = FftPlanner::<f64>::new();
    match dims {
        [n] => {
            let fft = if inverse {
                planner.plan_fft_inverse(*n)
            } else {
                planner.plan_fft_forward(*n)
            };
            fft.process(values);
        }
        [n0, n1] => {
            let fft_rows = if inverse {
                planner.plan_fft_inverse(*n1)
            } else {
                planner.plan_fft_forward(*n1)
            };
            for row in values.chunks_exact_mut(*n1) {
                fft_rows.process(row);
            }
            let fft_cols = if inverse {
                planner.plan_fft_inverse(*n0)
            } else {
                planner.plan_fft_forward(*n0)
            };
            let mut col = vec![Complex64::default(); *n0];
            for c in 0..*n1 {
                for r in 0..*n0 {
                    col[r] = values[r * n1 + c];
                }
                fft_cols.process(&mut col);
                for r in 0..*n0 {
                    values[r * n1 + c] = col[r];
                }
            }
        }
        _ => panic!("fft_nd supports 1 or 2 dimensions, got {}", dims.len()),
    }
}

/// A uniform grid with `n` points per axis on the torus of `lattice`.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    lattice: Lattice,
    n: usize,
}

impl TorusGrid {
    pub fn new(lattice: Lattice, n: usize) -> Self {
        assert!(n >= 2, "grid needs at least 2 points per axis");
        TorusGrid { lattice, n }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.lattice.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn dims(&self) -> Vec<usize> {
        vec![self.n; self.lattice.dim()]
    }

    /// Grid points in row-major multi-index order.
    pub fn points(&self) -> Vec<DVector<f64>> {
        let d = self.lattice.dim();
        let n = self.n;
        let mut pts = Vec::with_capacity(self.len());
        match d {
            1 => {
                for j in 0..n {
                    let coords = DVector::from_column_slice(&[j as f64 / n as f64]);
                    pts.push(self.lattice.basis() * coords);
                }
            }
            2 => {
                for j0 in 0..n {
                    for j1 in 0..n {
                        let coords = DVector::from_column_slice(&[
                            j0 as f64 / n as f64,
                            j1 as f64 / n as f64,
                        ]);
                        pts.push(self.lattice.basis() * coords);
                    }
                }
            }
            _ => unreachable!("lattice construction rejects d > 2"),
        }
        pts
    }

    /// Forward transform: grid samples to coefficients `c_m` with
    /// `f(q) = Σ c_m e^{i⟨λ_m, q⟩}`, keeping `|m|_∞ ≤ cutoff`.
    pub fn to_coeffs(&self, values: &[Complex64], cutoff: i32) -> BTreeMap<Vec<i32>, Complex64> {
        assert_eq!(values.len(), self.len());
        let mut buf = values.to_vec();
        fft_nd(&mut buf, &self.dims(), false);
        let norm = 1.0 / self.len() as f64;
        let half = (self.n / 2) as i32 - 1;
        let keep = cutoff.min(half.max(0));
        let mut out = BTreeMap::new();
        let d = self.lattice.dim();
        let n = self.n as i32;
        match d {
            1 => {
                for m in -keep..=keep {
                    let bin = m.rem_euclid(n) as usize;
                    out.insert(vec![m], buf[bin] * norm);
                }
            }
            2 => {
                for m0 in -keep..=keep {
                    let b0 = m0.rem_euclid(n) as usize;
                    for m1 in -keep..=keep {
                        let b1 = m1.rem_euclid(n) as usize;
                        out.insert(vec![m0, m1], buf[b0 * self.n + b1] * norm);
                    }
                }
            }
            _ => unreachable!(),
        }
        out
    }

    /// Inverse transform: synthesize grid samples from coefficients.
    pub fn from_coeffs<'a, I>(&self, coeffs: I) -> Vec<Complex64>
    where
        I: IntoIterator<Item = (&'a Vec<i32>, &'a Complex64)>,
    {
        let mut bins = vec![Complex64::default(); self.len()];
        let n = self.n as i32;
        for (idx, c) in coeffs {
            match idx.len() {
                1 => {
                    let b = idx[0].rem_euclid(n) as usize;
                    bins[b] += c;
                }
                2 => {
                    let b0 = idx[0].rem_euclid(n) as usize;
                    let b1 = idx[1].rem_euclid(n) as usize;
                    bins[b0 * self.n + b1] += c;
                }
                _ => unreachable!(),
            }
        }
        fft_nd(&mut bins, &self.dims(), true);
        bins
    }

    /// Mean of grid samples; the cell integral is `mean × cell volume`.
    pub fn mean(values: &[Complex64]) -> Complex64 {
        values.iter().sum::<Complex64>() / values.len() as f64
    }
}
