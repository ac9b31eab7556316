//! Built-in potentials, extrema scans and the potential file format.
//!
//! The canonical representation of a potential is its Fourier coefficient
//! table.  Grid samples are accepted as input and transformed once.
//!
//! File format (structured text, `#` comments allowed):
//!
//! ```text
//! dim 1
//! basis 6.283185307179586
//! hermitian true
//! mode 1 0.5 0.0
//! mode -1 0.5 0.0
//! ```
//!
//! `basis` lists the d×d basis matrix row-major.  A file flagged
//! `hermitian true` is rejected unless the coefficients satisfy
//! `c_{-m} = conj(c_m)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::FourierSeries;
use crate::grid::TorusGrid;
use crate::lattice::Lattice;

/// V ≡ 0.
pub fn free(lattice: Lattice) -> FourierSeries {
    FourierSeries::zero(lattice, true)
}

/// V(q) = cos q in one dimension.
pub fn cosine(lattice: Lattice) -> FourierSeries {
    assert_eq!(lattice.dim(), 1);
    FourierSeries::from_coeffs(
        lattice,
        vec![
            (vec![1], Complex64::new(0.5, 0.0)),
            (vec![-1], Complex64::new(0.5, 0.0)),
        ],
        true,
    )
    .expect("cosine coefficients are Hermitian")
}

/// V(q) = amplitude · (cos q₁ + cos q₂) in two dimensions.
pub fn cosine2d(lattice: Lattice, amplitude: f64) -> FourierSeries {
    assert_eq!(lattice.dim(), 2);
    let half = Complex64::new(amplitude / 2.0, 0.0);
    FourierSeries::from_coeffs(
        lattice,
        vec![
            (vec![1, 0], half),
            (vec![-1, 0], half),
            (vec![0, 1], half),
            (vec![0, -1], half),
        ],
        true,
    )
    .expect("cosine2d coefficients are Hermitian")
}

/// Resolve a named built-in on the standard lattice of matching dimension.
pub fn by_name(name: &str) -> Result<FourierSeries> {
    match name {
        "free" => Ok(free(Lattice::standard(1)?)),
        "free2d" => Ok(free(Lattice::standard(2)?)),
        "cosine" => Ok(cosine(Lattice::standard(1)?)),
        "cosine2d" => Ok(cosine2d(Lattice::standard(2)?, 1.0)),
        other => Err(Error::Config(format!(
            "unknown potential '{other}' (expected free, free2d, cosine, cosine2d, or a file path)"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub min: f64,
    pub max: f64,
}

/// Extrema of a real potential by dense grid scan with a local
/// quadratic polish.
pub fn extrema(v: &FourierSeries, grid_per_axis: usize) -> Extrema {
    let grid = TorusGrid::new(v.lattice().clone(), grid_per_axis);
    let pts = grid.points();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut argmin = None;
    let mut argmax = None;
    for q in &pts {
        let val = v.eval_real(q);
        if val < min {
            min = val;
            argmin = Some(q.clone());
        }
        if val > max {
            max = val;
            argmax = Some(q.clone());
        }
    }
    if v.is_empty() {
        return Extrema { min: 0.0, max: 0.0 };
    }
    // Newton polish along the gradient flow; a few damped steps suffice for
    // smooth series.
    if let Some(q0) = argmin {
        min = min.min(polish(v, q0, -1.0));
    }
    if let Some(q0) = argmax {
        max = max.max(polish(v, q0, 1.0));
    }
    Extrema { min, max }
}

fn polish(v: &FourierSeries, mut q: DVector<f64>, sign: f64) -> f64 {
    let mut best = v.eval_real(&q);
    let mut step = 0.05;
    for _ in 0..60 {
        let g = v.grad_real(&q);
        let candidate = &q + g * (sign * step);
        let val = v.eval_real(&candidate);
        if sign * (val - best) > 0.0 {
            best = val;
            q = candidate;
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    best
}

pub fn parse_potential_file(text: &str) -> Result<FourierSeries> {
    let mut dim: Option<usize> = None;
    let mut basis: Option<Vec<f64>> = None;
    let mut hermitian = false;
    let mut modes: Vec<(Vec<i32>, Complex64)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let key = tokens.next().unwrap();
        let rest: Vec<&str> = tokens.collect();
        let bad = |msg: String| Error::PotentialFormat(format!("line {}: {msg}", lineno + 1));
        match key {
            "dim" => {
                let d: usize = rest
                    .first()
                    .ok_or_else(|| bad("missing dimension".into()))?
                    .parse()
                    .map_err(|e| bad(format!("bad dimension: {e}")))?;
                dim = Some(d);
            }
            "basis" => {
                let vals: std::result::Result<Vec<f64>, _> =
                    rest.iter().map(|t| t.parse::<f64>()).collect();
                basis = Some(vals.map_err(|e| bad(format!("bad basis entry: {e}")))?);
            }
            "hermitian" => {
                hermitian = match rest.first() {
                    Some(&"true") => true,
                    Some(&"false") => false,
                    other => return Err(bad(format!("bad hermitian flag {other:?}"))),
                };
            }
            "mode" => {
                let d = dim.ok_or_else(|| bad("mode before dim".into()))?;
                if rest.len() != d + 2 {
                    return Err(bad(format!(
                        "mode line needs {d} indices plus re im, got {} fields",
                        rest.len()
                    )));
                }
                let idx: std::result::Result<Vec<i32>, _> =
                    rest[..d].iter().map(|t| t.parse::<i32>()).collect();
                let idx = idx.map_err(|e| bad(format!("bad mode index: {e}")))?;
                let re: f64 = rest[d]
                    .parse()
                    .map_err(|e| bad(format!("bad real part: {e}")))?;
                let im: f64 = rest[d + 1]
                    .parse()
                    .map_err(|e| bad(format!("bad imaginary part: {e}")))?;
                modes.push((idx, Complex64::new(re, im)));
            }
            other => return Err(bad(format!("unknown key '{other}'"))),
        }
    }

    let dim = dim.ok_or_else(|| Error::PotentialFormat("missing 'dim' line".into()))?;
    let basis = basis.ok_or_else(|| Error::PotentialFormat("missing 'basis' line".into()))?;
    if basis.len() != dim * dim {
        return Err(Error::PotentialFormat(format!(
            "basis needs {} entries for dim {dim}, got {}",
            dim * dim,
            basis.len()
        )));
    }
    let lattice = Lattice::from_basis(DMatrix::from_row_slice(dim, dim, &basis))?;
    FourierSeries::from_coeffs(lattice, modes, hermitian)
}

pub fn write_potential_file(v: &FourierSeries) -> String {
    let d = v.dim();
    let mut out = String::new();
    out.push_str(&format!("dim {d}\n"));
    let b = v.lattice().basis();
    let entries: Vec<String> = (0..d)
        .flat_map(|r| (0..d).map(move |c| format!("{:?}", b[(r, c)])))
        .collect();
    out.push_str(&format!("basis {}\n", entries.join(" ")));
    out.push_str(&format!("hermitian {}\n", v.is_hermitian()));
    for (idx, c) in v.coeffs() {
        let idx_str: Vec<String> = idx.iter().map(|n| n.to_string()).collect();
        out.push_str(&format!("mode {} {:?} {:?}\n", idx_str.join(" "), c.re, c.im));
    }
    out
}

/// Hamiltonian value `½|p|² + V(q)` of the classical flow.
pub fn hamiltonian(v: &FourierSeries, p: &DVector<f64>, q: &DVector<f64>) -> f64 {
    0.5 * p.norm_squared() + v.eval_real(q)
}
