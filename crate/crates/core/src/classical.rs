//! Hamiltonian flow on the torus, Birkhoff-average asymptotic velocities,
//! Liouville sampling of thickened energy shells and the classical
//! energy-velocity measure.
//!
//! The integrator is the symmetric kick-drift-kick splitting for
//! `H = ½|p|² + V(q)`: second order, symplectic and time-reversible, with
//! positions unwrapped in `Rᵈ` so the winding rate is read off directly.

use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::FourierSeries;
use crate::lattice::PhasePoint;
use crate::measure::EmpiricalMeasure;
use crate::potential;

/// Fraction of `E - V_min` the energy drift may reach before the step size
/// is declared too large.
pub const DRIFT_BOUND_FACTOR: f64 = 1e-4;

/// Default convergence tolerance on the half-window velocity disagreement.
pub const VELOCITY_TOL: f64 = 1e-3;

/// Proposal budget before an empty shell is reported.
pub const SHELL_PROPOSAL_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Momenta at the stored sample times.
    pub momenta: Vec<DVector<f64>>,
    /// Unwrapped positions in `Rᵈ` at the stored sample times.
    pub positions: Vec<DVector<f64>>,
    /// Max |H(x(t)) - H(x(0))| over every step taken (not only stored ones).
    pub energy_drift: f64,
}

#[derive(Debug, Clone)]
pub struct AsymptoticVelocityEstimate {
    pub value: DVector<f64>,
    pub window: f64,
    /// Disagreement between the [0, T] and [T/2, T] window averages.
    pub uncertainty: f64,
    pub converged: bool,
}

struct Integrator<'a> {
    potential: &'a FourierSeries,
    dt: f64,
    p: DVector<f64>,
    q: DVector<f64>,
    grad: DVector<f64>,
    energy0: f64,
    drift: f64,
}

impl<'a> Integrator<'a> {
    fn new(potential: &'a FourierSeries, x0: &PhasePoint, dt: f64) -> Self {
        let grad = potential.grad_real(&x0.q);
        let energy0 = potential::hamiltonian(potential, &x0.p, &x0.q);
        Integrator {
            potential,
            dt,
            p: x0.p.clone(),
            q: x0.q.clone(),
            grad,
            energy0,
            drift: 0.0,
        }
    }

    /// One kick-drift-kick step; reuses the force from the previous step.
    fn step(&mut self) {
        let half = 0.5 * self.dt;
        self.p -= &self.grad * half;
        self.q += &self.p * self.dt;
        self.grad = self.potential.grad_real(&self.q);
        self.p -= &self.grad * half;
        let e = potential::hamiltonian(self.potential, &self.p, &self.q);
        let d = (e - self.energy0).abs();
        if d > self.drift {
            self.drift = d;
        }
    }
}

/// Integrate the flow for `total_time` with step `dt`, storing roughly
/// `max_samples` evenly spaced samples (always including both endpoints).
pub fn integrate_flow(
    potential: &FourierSeries,
    x0: &PhasePoint,
    total_time: f64,
    dt: f64,
    max_samples: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !(total_time > 0.0) || dt > total_time {
        return Err(Error::Config(format!(
            "need 0 < dt <= T, got dt = {dt}, T = {total_time}"
        )));
    }
    let steps = (total_time / dt).round().max(1.0) as usize;
    let stride = (steps / max_samples.max(2)).max(1);
    let mut integ = Integrator::new(potential, x0, dt);
    let ext = potential::extrema(potential, extrema_grid(potential));
    let bound = DRIFT_BOUND_FACTOR * (integ.energy0 - ext.min).max(f64::MIN_POSITIVE);

    let mut times = vec![0.0];
    let mut momenta = vec![integ.p.clone()];
    let mut positions = vec![integ.q.clone()];
    for s in 1..=steps {
        integ.step();
        if integ.drift > bound {
            return Err(Error::StepTooLarge {
                drift: integ.drift,
                bound,
            });
        }
        if s % stride == 0 || s == steps {
            times.push(s as f64 * dt);
            momenta.push(integ.p.clone());
            positions.push(integ.q.clone());
        }
    }
    Ok(Trajectory {
        times,
        momenta,
        positions,
        energy_drift: integ.drift,
    })
}

fn extrema_grid(potential: &FourierSeries) -> usize {
    match potential.dim() {
        1 => 1024,
        _ => 128,
    }
}

/// Birkhoff average of the momentum over `[0, T]`, computed as the position
/// increment `(q(T) - q(0)) / T`, with the half-window disagreement as the
/// convergence certificate.
pub fn asymptotic_velocity(
    potential: &FourierSeries,
    x0: &PhasePoint,
    total_time: f64,
    dt: f64,
    tol: f64,
) -> Result<AsymptoticVelocityEstimate> {
    if !(dt > 0.0) || !(total_time > 0.0) || dt > total_time {
        return Err(Error::Config(format!(
            "need 0 < dt <= T, got dt = {dt}, T = {total_time}"
        )));
    }
    let steps = (total_time / dt).round().max(2.0) as usize;
    let half_steps = steps / 2;
    let mut integ = Integrator::new(potential, x0, dt);
    let ext = potential::extrema(potential, extrema_grid(potential));
    let bound = DRIFT_BOUND_FACTOR * (integ.energy0 - ext.min).max(f64::MIN_POSITIVE);

    let q0 = integ.q.clone();
    let mut q_half = q0.clone();
    for s in 1..=steps {
        integ.step();
        if integ.drift > bound {
            return Err(Error::StepTooLarge {
                drift: integ.drift,
                bound,
            });
        }
        if s == half_steps {
            q_half = integ.q.clone();
        }
    }
    let t_full = steps as f64 * dt;
    let t_half = (steps - half_steps) as f64 * dt;
    let value = (&integ.q - &q0) / t_full;
    let late = (&integ.q - &q_half) / t_half;
    let uncertainty = (&value - late).norm();
    Ok(AsymptoticVelocityEstimate {
        value,
        window: t_full,
        uncertainty,
        converged: uncertainty < tol,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct VolumeEstimate {
    pub volume: f64,
    /// One Monte-Carlo standard deviation of the volume estimate.
    pub sigma: f64,
    pub acceptance: f64,
    pub proposals: usize,
}

/// Draw `n_samples` i.i.d. points uniform w.r.t. Liouville measure on the
/// shell `H⁻¹(I)`, by rejection from the product of the configuration cell
/// and the momentum cube `[-p_max, p_max]ᵈ` with `p_max = √(2(max I − V_min))`.
/// Also returns the box-volume × acceptance estimate of `vol(P_I)`.
pub fn sample_liouville(
    potential: &FourierSeries,
    interval: (f64, f64),
    n_samples: usize,
    seed: u64,
) -> Result<(Vec<PhasePoint>, VolumeEstimate)> {
    let (lo, hi) = interval;
    let ext = potential::extrema(potential, extrema_grid(potential));
    if hi <= ext.min {
        return Err(Error::EmptyShell(0));
    }
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    let lattice = potential.lattice().clone();
    let d = lattice.dim();
    let p_max = (2.0 * (hi - ext.min)).sqrt();
    let box_volume = lattice.cell_volume() * (2.0 * p_max).powi(d as i32);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = Vec::with_capacity(n_samples);
    let mut proposals = 0usize;
    while accepted.len() < n_samples {
        proposals += 1;
        let coords = DVector::from_fn(d, |_, _| rng.random::<f64>());
        let q = lattice.basis() * coords;
        let p = DVector::from_fn(d, |_, _| (rng.random::<f64>() * 2.0 - 1.0) * p_max);
        let h = potential::hamiltonian(potential, &p, &q);
        if h >= lo && h <= hi {
            accepted.push(PhasePoint::new(&lattice, p, &q));
        }
        if accepted.is_empty() && proposals >= SHELL_PROPOSAL_LIMIT {
            return Err(Error::EmptyShell(proposals));
        }
    }
    let acceptance = n_samples as f64 / proposals as f64;
    let volume = box_volume * acceptance;
    let sigma = box_volume * (acceptance * (1.0 - acceptance) / proposals as f64).sqrt();
    Ok((
        accepted,
        VolumeEstimate {
            volume,
            sigma,
            acceptance,
            proposals,
        },
    ))
}

#[derive(Debug, Clone)]
pub struct ClassicalMeasureReport {
    pub volume: VolumeEstimate,
    pub unconverged_fraction: f64,
    pub n_samples: usize,
    pub window: f64,
    pub dt: f64,
}

/// The classical energy-velocity measure: atoms
/// `(vol(P_I)/n, (H(x_i), v̄(x_i)))` over Liouville samples `x_i`.
/// Unconverged Birkhoff averages contribute velocity 0 and are counted in
/// `unconverged_fraction`.
pub fn classical_measure(
    potential: &FourierSeries,
    interval: (f64, f64),
    n_samples: usize,
    total_time: f64,
    dt: f64,
    seed: u64,
    tol: f64,
) -> Result<(EmpiricalMeasure, ClassicalMeasureReport)> {
    let (samples, volume) = sample_liouville(potential, interval, n_samples, seed)?;
    let d = potential.dim();

    let outcomes: Vec<Result<(f64, DVector<f64>, bool)>> = samples
        .par_iter()
        .map(|x| {
            let energy = potential::hamiltonian(potential, &x.p, &x.q);
            let est = asymptotic_velocity(potential, x, total_time, dt, tol)?;
            let v = if est.converged {
                est.value
            } else {
                DVector::zeros(d)
            };
            Ok((energy, v, est.converged))
        })
        .collect();

    let weight = volume.volume / n_samples as f64;
    let mut measure = EmpiricalMeasure::new(d + 1);
    let mut unconverged = 0usize;
    for outcome in outcomes {
        let (energy, v, converged) = outcome?;
        if !converged {
            unconverged += 1;
        }
        let mut point = Vec::with_capacity(d + 1);
        point.push(energy);
        point.extend(v.iter());
        measure.push(weight, point);
    }
    let report = ClassicalMeasureReport {
        volume,
        unconverged_fraction: unconverged as f64 / n_samples as f64,
        n_samples,
        window: total_time,
        dt,
    };
    Ok((measure, report))
}

/// Liouville volume of the shell `H⁻¹(I)`.
///
/// d = 1 uses quadrature of the exact momentum-interval length
/// `2(√(2(b−V))₊ − √(2(a−V))₊)` over the cell; d = 2 falls back to seeded
/// Monte-Carlo rejection.
pub fn phase_space_volume(
    potential: &FourierSeries,
    interval: (f64, f64),
    seed: u64,
) -> Result<f64> {
    let (lo, hi) = interval;
    if hi < lo {
        return Err(Error::Config(format!("empty interval [{lo}, {hi}]")));
    }
    let lattice = potential.lattice();
    match lattice.dim() {
        1 => {
            let n = 1 << 16;
            let a = lattice.basis()[(0, 0)].abs();
            let mut acc = 0.0;
            for j in 0..n {
                let q = DVector::from_column_slice(&[a * j as f64 / n as f64]);
                let v = potential.eval_real(&q);
                let upper = (2.0 * (hi - v)).max(0.0).sqrt();
                let lower = (2.0 * (lo - v)).max(0.0).sqrt();
                acc += 2.0 * (upper - lower);
            }
            Ok(acc * a / n as f64)
        }
        2 => {
            let n = 400_000;
            match sample_liouville(potential, interval, 1, seed) {
                Err(Error::EmptyShell(_)) => Ok(0.0),
                Err(e) => Err(e),
                Ok(_) => {
                    // Re-run the rejection with a fixed proposal budget for
                    // the volume estimate itself.
                    let ext = potential::extrema(potential, extrema_grid(potential));
                    let p_max = (2.0 * (hi - ext.min)).sqrt();
                    let box_volume = lattice.cell_volume() * (2.0 * p_max).powi(2);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
                    let mut hits = 0usize;
                    for _ in 0..n {
                        let coords = DVector::from_fn(2, |_, _| rng.random::<f64>());
                        let q = lattice.basis() * coords;
                        let p =
                            DVector::from_fn(2, |_, _| (rng.random::<f64>() * 2.0 - 1.0) * p_max);
                        let h = potential::hamiltonian(potential, &p, &q);
                        if h >= lo && h <= hi {
                            hits += 1;
                        }
                    }
                    Ok(box_volume * hits as f64 / n as f64)
                }
            }
        }
        other => Err(Error::UnsupportedDimension(other)),
    }
}
