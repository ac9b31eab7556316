//! Weighted empirical measures on (energy, velocity) space.

use crate::error::{Error, Result};

/// Finite weighted atom set in `R^{d+1}`: points are `(energy, v_1..v_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<(f64, Vec<f64>)>,
    pub total_mass: f64,
    point_dim: usize,
}

impl EmpiricalMeasure {
    pub fn new(point_dim: usize) -> Self {
        EmpiricalMeasure {
            atoms: Vec::new(),
            total_mass: 0.0,
            point_dim,
        }
    }

    pub fn push(&mut self, weight: f64, point: Vec<f64>) {
        assert_eq!(point.len(), self.point_dim);
        assert!(weight >= 0.0, "atom weights must be nonnegative");
        self.total_mass += weight;
        self.atoms.push((weight, point));
    }

    pub fn point_dim(&self) -> usize {
        self.point_dim
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Defect of the mass bookkeeping invariant `Σ w_i = total_mass`.
    pub fn mass_defect(&self) -> f64 {
        let sum: f64 = self.atoms.iter().map(|(w, _)| w).sum();
        (sum - self.total_mass).abs()
    }

    /// Integrate a function of the atom position.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|(w, x)| w * f(x)).sum()
    }

    /// Restrict to a closed axis-aligned box, keeping weights.
    pub fn restricted_to_box(&self, lo: &[f64], hi: &[f64]) -> EmpiricalMeasure {
        let mut out = EmpiricalMeasure::new(self.point_dim);
        for (w, x) in &self.atoms {
            if x.iter()
                .zip(lo.iter().zip(hi))
                .all(|(xi, (l, h))| xi >= l && xi <= h)
            {
                out.push(*w, x.clone());
            }
        }
        out
    }

    /// Rescale weights to total mass 1.
    pub fn normalized(&self) -> Result<EmpiricalMeasure> {
        if self.total_mass <= 0.0 {
            return Err(Error::EmptyOverlap);
        }
        let mut out = EmpiricalMeasure::new(self.point_dim);
        for (w, x) in &self.atoms {
            out.push(w / self.total_mass, x.clone());
        }
        out.total_mass = 1.0;
        debug_assert!(out.mass_defect() < 1e-12);
        Ok(out)
    }

    /// Marginal on coordinate `axis` as weighted samples.
    pub fn marginal(&self, axis: usize) -> Vec<(f64, f64)> {
        self.atoms.iter().map(|(w, x)| (*w, x[axis])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_invariant() {
        let mut mu = EmpiricalMeasure::new(2);
        mu.push(0.5, vec![1.0, 2.0]);
        mu.push(1.5, vec![-1.0, 0.0]);
        assert!(mu.mass_defect() < 1e-15);
        assert_eq!(mu.len(), 2);
        let t = mu.integrate(|x| x[0]);
        assert!((t - (0.5 - 1.5)).abs() < 1e-15);
    }

    #[test]
    fn restriction_and_normalization() {
        let mut mu = EmpiricalMeasure::new(1);
        mu.push(1.0, vec![0.5]);
        mu.push(3.0, vec![5.0]);
        let r = mu.restricted_to_box(&[0.0], &[1.0]);
        assert_eq!(r.len(), 1);
        let n = r.normalized().unwrap();
        assert!((n.total_mass - 1.0).abs() < 1e-15);
    }
}
