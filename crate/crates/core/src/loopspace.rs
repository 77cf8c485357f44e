//! Loops of particles in phase space and their spun Lorentz dynamics
//!
//! ```text
//! ∂ₜṽ = ṽ×B(x̃)/ε − Ω ∂θṽ,   ∂ₜx̃ = ṽ − Ω ∂θx̃,   Ṡ = Ω,   Ω = |B(x̄)|/ε
//! ```
//!
//! where `x̄` is the θ-mean of `x̃`. θ-derivatives are spectral and θ-means
//! use the trapezoid rule on the uniform grid.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::fields::{check_domain, MagneticField, Vec3, SINGULAR_FIELD_THRESHOLD};
use crate::spectral;

/// A loop `θ ↦ (x̃(θ), ṽ(θ))` sampled at `θᵢ = 2πi/N`, with its phase.
///
/// `phase` is `S` reduced to `[0, 2π)`. `scaled_phase` is the slow variable
/// `𝒮 = εS`, accumulated separately so it keeps full precision.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseLoop {
    pub x: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub phase: f64,
    pub scaled_phase: f64,
}

/// Time derivative of a [`PhaseLoop`]. `ds` is `Ω` and `d_scaled` is `εΩ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopTangent {
    pub dx: Vec<Vec3>,
    pub dv: Vec<Vec3>,
    pub ds: f64,
    pub d_scaled: f64,
}

/// Choice of the spin frequency.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Frequency {
    /// `Ω = |B(x̄)|/ε`.
    #[default]
    Gyro,
    /// `Ω = factor·|B(x̄)|/ε`; any phase-shift-invariant choice gives the
    /// same loops up to a reparameterization in θ.
    Scaled(f64),
}

impl PhaseLoop {
    pub fn new(x: Vec<Vec3>, v: Vec<Vec3>) -> Result<Self> {
        let n = x.len();
        if n != v.len() {
            return Err(Error::InvalidState(format!(
                "loop position and velocity grids differ in length ({} vs {})",
                n,
                v.len()
            )));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidState(format!(
                "θ-grid size must be even and >= 8, got {n}"
            )));
        }
        Ok(PhaseLoop {
            x,
            v,
            phase: 0.0,
            scaled_phase: 0.0,
        })
    }

    /// The loop of `n` copies of one particle.
    pub fn constant(x: Vec3, v: Vec3, n: usize) -> Result<Self> {
        Self::new(vec![x; n], vec![v; n])
    }

    pub fn with_phase(mut self, eps: f64, scaled_phase: f64) -> Self {
        self.scaled_phase = scaled_phase;
        self.phase = (scaled_phase / eps).rem_euclid(TAU);
        self
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn mean_position(&self) -> Vec3 {
        spectral::mean(&self.x)
    }

    pub fn mean_velocity(&self) -> Vec3 {
        spectral::mean(&self.v)
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|p| p.iter().all(|c| c.is_finite()))
    }

    /// Largest pointwise difference in `x̃` and `ṽ`.
    pub fn max_difference(&self, other: &PhaseLoop) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }

    fn advanced(&self, t: &LoopTangent, h: f64) -> PhaseLoop {
        PhaseLoop {
            x: self.x.iter().zip(&t.dx).map(|(x, d)| x + h * d).collect(),
            v: self.v.iter().zip(&t.dv).map(|(v, d)| v + h * d).collect(),
            phase: (self.phase + h * t.ds).rem_euclid(TAU),
            scaled_phase: self.scaled_phase + h * t.d_scaled,
        }
    }

    fn to_vector(&self) -> DVector<f64> {
        let n = self.n();
        let mut z = DVector::zeros(6 * n);
        for i in 0..n {
            for c in 0..3 {
                z[3 * i + c] = self.x[i][c];
                z[3 * (n + i) + c] = self.v[i][c];
            }
        }
        z
    }

    fn from_vector(&self, z: &DVector<f64>) -> PhaseLoop {
        let n = self.n();
        let get = |j: usize| Vec3::new(z[3 * j], z[3 * j + 1], z[3 * j + 2]);
        PhaseLoop {
            x: (0..n).map(get).collect(),
            v: (n..2 * n).map(get).collect(),
            phase: self.phase,
            scaled_phase: self.scaled_phase,
        }
    }
}

impl LoopTangent {
    fn to_vector(&self) -> DVector<f64> {
        let n = self.dx.len();
        let mut z = DVector::zeros(6 * n);
        for i in 0..n {
            for c in 0..3 {
                z[3 * i + c] = self.dx[i][c];
                z[3 * (n + i) + c] = self.dv[i][c];
            }
        }
        z
    }
}

/// The loop `θ ↦ ℓ(θ + ψ)`; the phase is unchanged.
pub fn phase_shift(l: &PhaseLoop, psi: f64) -> PhaseLoop {
    PhaseLoop {
        x: spectral::shift(&l.x, psi),
        v: spectral::shift(&l.v, psi),
        phase: l.phase,
        scaled_phase: l.scaled_phase,
    }
}

fn mean_field_strength(l: &PhaseLoop, model: &dyn MagneticField) -> Result<f64> {
    let xbar = l.mean_position();
    check_domain(model, &xbar)?;
    let abs_b = model.field(&xbar).norm();
    if !(abs_b > SINGULAR_FIELD_THRESHOLD) {
        return Err(Error::singular(&xbar, abs_b));
    }
    Ok(abs_b)
}

/// `Ω = |B(x̄)|/ε`.
pub fn omega(l: &PhaseLoop, eps: f64, model: &dyn MagneticField) -> Result<f64> {
    Ok(mean_field_strength(l, model)? / eps)
}

pub fn loop_rhs(l: &PhaseLoop, eps: f64, model: &dyn MagneticField) -> Result<LoopTangent> {
    loop_rhs_with(l, eps, model, Frequency::Gyro)
}

pub fn loop_rhs_with(l: &PhaseLoop, eps: f64, model: &dyn MagneticField, freq: Frequency) -> Result<LoopTangent> {
    let base = mean_field_strength(l, model)? / eps;
    let om = match freq {
        Frequency::Gyro => base,
        Frequency::Scaled(f) => f * base,
    };
    for x in &l.x {
        check_domain(model, x)?;
    }
    let dx_theta = spectral::derivative(&l.x);
    let dv_theta = spectral::derivative(&l.v);
    let dv =
        l.v.iter()
            .zip(&l.x)
            .zip(&dv_theta)
            .map(|((v, x), d)| v.cross(&model.field(x)) / eps - om * d)
            .collect();
    let dx = l.v.iter().zip(&dx_theta).map(|(v, d)| v - om * d).collect();
    Ok(LoopTangent {
        dx,
        dv,
        ds: om,
        d_scaled: eps * om,
    })
}

pub fn step_rk4_loop(l: &PhaseLoop, dt: f64, eps: f64, model: &dyn MagneticField) -> Result<PhaseLoop> {
    step_rk4_loop_with(l, dt, eps, model, Frequency::Gyro)
}

pub fn step_rk4_loop_with(
    l: &PhaseLoop,
    dt: f64,
    eps: f64,
    model: &dyn MagneticField,
    freq: Frequency,
) -> Result<PhaseLoop> {
    let k1 = loop_rhs_with(l, eps, model, freq)?;
    let k2 = loop_rhs_with(&l.advanced(&k1, 0.5 * dt), eps, model, freq)?;
    let k3 = loop_rhs_with(&l.advanced(&k2, 0.5 * dt), eps, model, freq)?;
    let k4 = loop_rhs_with(&l.advanced(&k3, dt), eps, model, freq)?;
    let n = l.n();
    let combine = |a: &[Vec3], b: &[Vec3], c: &[Vec3], d: &[Vec3]| -> Vec<Vec3> {
        (0..n).map(|i| (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]) / 6.0).collect()
    };
    let avg = LoopTangent {
        dx: combine(&k1.dx, &k2.dx, &k3.dx, &k4.dx),
        dv: combine(&k1.dv, &k2.dv, &k3.dv, &k4.dv),
        ds: (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds) / 6.0,
        d_scaled: (k1.d_scaled + 2.0 * k2.d_scaled + 2.0 * k3.d_scaled + k4.d_scaled) / 6.0,
    };
    Ok(l.advanced(&avg, dt))
}

/// Nonlinear solver for the implicit-midpoint stage equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MidpointSolver {
    /// `ℓ' ← (1−β)ℓ' + β(ℓ + dt·rhs(mid))`. Only converges when `dt·Ω` is small.
    FixedPoint { damping: f64 },
    /// Simplified Newton with a central-difference Jacobian, refreshed
    /// whenever an iteration fails to cut the residual tenfold.
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidpointOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub solver: MidpointSolver,
}

impl Default for MidpointOptions {
    fn default() -> Self {
        MidpointOptions {
            tol: 1e-12,
            max_iter: 50,
            solver: MidpointSolver::FixedPoint { damping: 1.0 },
        }
    }
}

/// Convergence report of one implicit step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Sup-norm of `ℓ' − ℓ − dt·rhs((ℓ+ℓ')/2)` at exit.
    pub residual: f64,
}

fn midpoint(a: &PhaseLoop, b: &PhaseLoop) -> PhaseLoop {
    PhaseLoop {
        x: a.x.iter().zip(&b.x).map(|(p, q)| 0.5 * (p + q)).collect(),
        v: a.v.iter().zip(&b.v).map(|(p, q)| 0.5 * (p + q)).collect(),
        phase: a.phase,
        scaled_phase: a.scaled_phase,
    }
}

/// One implicit-midpoint step `ℓ' = ℓ + dt·rhs((ℓ+ℓ')/2)`. The phase advances
/// with the midpoint frequency.
pub fn step_implicit_midpoint(
    l: &PhaseLoop,
    dt: f64,
    eps: f64,
    model: &dyn MagneticField,
    opts: &MidpointOptions,
) -> Result<(PhaseLoop, SolveStats)> {
    let z0 = l.to_vector();
    let residual_of = |z: &DVector<f64>| -> Result<(DVector<f64>, LoopTangent)> {
        let mid = midpoint(l, &l.from_vector(z));
        let f = loop_rhs(&mid, eps, model)?;
        Ok((z - &z0 - dt * f.to_vector(), f))
    };

    let mut z = z0.clone();
    let (mut r, mut tangent) = residual_of(&z)?;
    let mut res = r.amax();
    let mut iterations = 0;
    let mut lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> = None;

    while res > opts.tol {
        if iterations >= opts.max_iter || !res.is_finite() {
            return Err(Error::StepFailure {
                iterations,
                residual: res,
            });
        }
        iterations += 1;
        let z_new = match opts.solver {
            MidpointSolver::FixedPoint { damping } => &z - damping * &r,
            MidpointSolver::Newton => {
                if lu.is_none() {
                    lu = Some(residual_jacobian(l, &z, dt, eps, model)?.lu());
                }
                let delta = lu.as_ref().and_then(|f| f.solve(&r)).ok_or(Error::StepFailure {
                    iterations,
                    residual: res,
                })?;
                &z - delta
            }
        };
        let (r_new, t_new) = residual_of(&z_new)?;
        let res_new = r_new.amax();
        if matches!(opts.solver, MidpointSolver::Newton) && res_new > 0.1 * res {
            lu = None;
        }
        z = z_new;
        r = r_new;
        tangent = t_new;
        res = res_new;
    }

    let mut out = l.from_vector(&z);
    out.phase = (l.phase + dt * tangent.ds).rem_euclid(TAU);
    out.scaled_phase = l.scaled_phase + dt * tangent.d_scaled;
    Ok((
        out,
        SolveStats {
            iterations,
            residual: res,
        },
    ))
}

/// Central-difference Jacobian of `z ↦ z − z0 − dt·rhs((ℓ + z)/2)`.
fn residual_jacobian(
    l: &PhaseLoop,
    z: &DVector<f64>,
    dt: f64,
    eps: f64,
    model: &dyn MagneticField,
) -> Result<DMatrix<f64>> {
    let dim = z.len();
    let rhs_at = |zz: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(loop_rhs(&midpoint(l, &l.from_vector(zz)), eps, model)?.to_vector())
    };
    let mut jac = DMatrix::identity(dim, dim);
    let mut zp = z.clone();
    for j in 0..dim {
        let h = 1e-6 * (1.0 + z[j].abs());
        zp[j] = z[j] + h;
        let fp = rhs_at(&zp)?;
        zp[j] = z[j] - h;
        let fm = rhs_at(&zp)?;
        zp[j] = z[j];
        let col = (fp - fm) * (-dt / (2.0 * h));
        for i in 0..dim {
            jac[(i, j)] += col[i];
        }
    }
    Ok(jac)
}

/// `ℋ = ⟨½|ṽ|²⟩`.
pub fn loop_energy(l: &PhaseLoop) -> f64 {
    0.5 * l.v.iter().map(|v| v.norm_squared()).sum::<f64>() / l.n() as f64
}

/// `J = ⟨(A(x̃)/ε + ṽ)·∂θx̃⟩`.
pub fn loop_action(l: &PhaseLoop, eps: f64, model: &dyn MagneticField) -> f64 {
    let dx = spectral::derivative(&l.x);
    let sum: f64 =
        l.x.iter()
            .zip(&l.v)
            .zip(&dx)
            .map(|((x, v), d)| (model.vector_potential(x) / eps + v).dot(d))
            .sum();
    sum / l.n() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldModel;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_loop(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> PhaseLoop {
        let mut x = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        let xc = Vec3::new(
            rng.gen_range(-0.3..0.3),
            rng.gen_range(-0.3..0.3),
            rng.gen_range(-0.3..0.3),
        );
        let vc = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let mut hx = Vec::new();
        let mut hv = Vec::new();
        for k in 1..=3usize {
            let mut r = || {
                Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            };
            hx.push((k, r() * amp, r() * amp));
            hv.push((k, r() * amp, r() * amp));
        }
        for i in 0..n {
            let t = spectral::theta(n, i);
            let mut xi = xc;
            let mut vi = vc;
            for (k, a, b) in &hx {
                xi += a * (*k as f64 * t).cos() + b * (*k as f64 * t).sin();
            }
            for (k, a, b) in &hv {
                vi += a * (*k as f64 * t).cos() + b * (*k as f64 * t).sin();
            }
            x.push(xi);
            v.push(vi);
        }
        PhaseLoop::new(x, v).unwrap()
    }

    #[test]
    fn shift_by_zero_and_full_turn() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = random_loop(&mut rng, 16, 0.1);
        assert!(phase_shift(&l, 0.0).max_difference(&l) < 1e-14);
        assert!(phase_shift(&l, TAU).max_difference(&l) < 1e-13);
    }

    #[test]
    fn omega_values() {
        let l = PhaseLoop::constant(Vec3::zeros(), Vec3::x(), 8).unwrap();
        assert_abs_diff_eq!(
            omega(&l, 0.1, &FieldModel::uniform(1.0)).unwrap(),
            10.0,
            epsilon = 1e-12
        );
        let l = PhaseLoop::constant(Vec3::x(), Vec3::x(), 8).unwrap();
        assert_abs_diff_eq!(
            omega(&l, 0.01, &FieldModel::linear_gradient(1.0, 0.1)).unwrap(),
            110.0,
            epsilon = 1e-10
        );
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = random_loop(&mut rng, 16, 0.1);
        let m = FieldModel::default_screw_pinch();
        assert_abs_diff_eq!(
            omega(&l, 0.01, &m).unwrap(),
            omega(&phase_shift(&l, 0.7), 0.01, &m).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn constant_loop_follows_lorentz() {
        let model = FieldModel::uniform(1.0);
        let v = Vec3::new(0.3, -0.2, 0.5);
        let l = PhaseLoop::constant(Vec3::new(0.1, 0.0, 0.0), v, 8).unwrap();
        let t = loop_rhs(&l, 0.1, &model).unwrap();
        for i in 0..8 {
            assert_abs_diff_eq!(t.dv[i], v.cross(&Vec3::z()) / 0.1, epsilon = 1e-13);
            assert_abs_diff_eq!(t.dx[i], v, epsilon = 1e-15);
        }
    }

    #[test]
    fn rhs_is_shift_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = FieldModel::default_screw_pinch();
        let l = random_loop(&mut rng, 32, 0.05);
        let psi = 0.37;
        let a = loop_rhs(&phase_shift(&l, psi), 0.05, &model).unwrap();
        let b = loop_rhs(&l, 0.05, &model).unwrap();
        let bx = spectral::shift(&b.dx, psi);
        let bv = spectral::shift(&b.dv, psi);
        for i in 0..32 {
            assert!((a.dx[i] - bx[i]).amax() < 1e-9);
            assert!((a.dv[i] - bv[i]).amax() < 1e-7);
        }
    }

    #[test]
    fn energy_and_action_examples() {
        let l = PhaseLoop::constant(Vec3::zeros(), Vec3::x(), 8).unwrap();
        assert_abs_diff_eq!(loop_energy(&l), 0.5, epsilon = 1e-15);
        assert_eq!(loop_action(&l, 0.1, &FieldModel::uniform(1.0)), 0.0);
        let n = 8;
        let v = spectral::single_harmonic(n, 1, Vec3::x(), Vec3::zeros());
        let l = PhaseLoop::new(vec![Vec3::zeros(); n], v).unwrap();
        assert_abs_diff_eq!(loop_energy(&l), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn circle_action_matches_enclosed_flux() {
        let (r, eps, b0) = (0.3, 0.05, 1.0);
        let xbar = Vec3::new(0.2, -0.1, 0.4);
        let n = 16;
        let x = spectral::single_harmonic(n, 1, Vec3::x() * r, Vec3::y() * r)
            .into_iter()
            .map(|p| p + xbar)
            .collect();
        let l = PhaseLoop::new(x, vec![Vec3::zeros(); n]).unwrap();
        let j = loop_action(&l, eps, &FieldModel::uniform(b0));
        // independent 2000-point quadrature of A·dx/dθ
        let m = 2000;
        let q: f64 = (0..m)
            .map(|i| {
                let t = TAU * i as f64 / m as f64;
                let p = xbar + r * Vec3::new(t.cos(), t.sin(), 0.0);
                let a = Vec3::new(0.0, b0 * p.x, 0.0);
                a.dot(&Vec3::new(-r * t.sin(), r * t.cos(), 0.0)) / eps
            })
            .sum::<f64>()
            / m as f64;
        assert_abs_diff_eq!(j, q, epsilon = 1e-12);
        assert_abs_diff_eq!(j, b0 * r * r / (2.0 * eps), epsilon = 1e-12);
    }

    #[test]
    fn parallel_velocity_harmonic_spreads_the_loop_linearly() {
        // each loop point keeps its own v∥, so a first harmonic δ cos θ in v∥
        // makes the first harmonic of x∥ grow like δ t
        let (eps, delta, n) = (0.01, 1e-3, 16);
        let model = FieldModel::uniform(1.0);
        let x = spectral::single_harmonic(n, 1, Vec3::x() * eps, Vec3::y() * eps);
        let mut v = spectral::single_harmonic(n, 1, -Vec3::y(), Vec3::x());
        for (i, p) in v.iter_mut().enumerate() {
            p.z = 0.3 + delta * spectral::theta(n, i).cos();
        }
        let mut l = PhaseLoop::new(x, v).unwrap();
        let (dt, steps) = (eps / 50.0, 500);
        for _ in 0..steps {
            l = step_rk4_loop(&l, dt, eps, &model).unwrap();
        }
        let z: Vec<Vec3> = l.x.iter().map(|p| Vec3::new(0.0, 0.0, p.z)).collect();
        let (c, s) = spectral::harmonic_pair(&z, 1);
        let amplitude = c.z.hypot(s.z);
        assert_abs_diff_eq!(amplitude, delta * dt * steps as f64, epsilon = 1e-9);
    }

    #[test]
    fn midpoint_with_zero_step_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let l = random_loop(&mut rng, 16, 0.1);
        let (m, stats) =
            step_implicit_midpoint(&l, 0.0, 0.1, &FieldModel::uniform(1.0), &MidpointOptions::default()).unwrap();
        assert_eq!(stats.iterations, 0);
        assert!(m.max_difference(&l) == 0.0);
    }

    #[test]
    fn fixed_point_reports_failure_when_stiff() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = random_loop(&mut rng, 16, 0.1);
        let eps = 0.01;
        let r = step_implicit_midpoint(
            &l,
            5.0 * eps,
            eps,
            &FieldModel::uniform(1.0),
            &MidpointOptions::default(),
        );
        assert!(matches!(r, Err(Error::StepFailure { .. })));
    }

    #[test]
    fn midpoint_agrees_with_rk4_to_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = FieldModel::default_screw_pinch();
        let l0 = random_loop(&mut rng, 16, 0.05);
        let eps = 0.2;
        let t_final = 0.05;
        let reference = {
            let mut l = l0.clone();
            for _ in 0..400 {
                l = step_rk4_loop(&l, t_final / 400.0, eps, &model).unwrap();
            }
            l
        };
        let mut errs = Vec::new();
        let mut dts = Vec::new();
        for steps in [8, 16, 32] {
            let dt = t_final / steps as f64;
            let mut l = l0.clone();
            let opts = MidpointOptions {
                solver: MidpointSolver::Newton,
                ..Default::default()
            };
            for _ in 0..steps {
                l = step_implicit_midpoint(&l, dt, eps, &model, &opts).unwrap().0;
            }
            dts.push(dt);
            errs.push(l.max_difference(&reference));
        }
        let fit = crate::fit::fit_loglog(&dts, &errs).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.2, "slope {}", fit.slope);
    }

    #[test]
    fn frequency_choice_is_a_reparameterization() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = FieldModel::linear_gradient(1.0, 0.1);
        let eps = 0.05;
        let dt = eps / 200.0;
        let mut a = random_loop(&mut rng, 16, 0.05);
        let mut b = a.clone();
        for _ in 0..200 {
            a = step_rk4_loop(&a, dt, eps, &model).unwrap();
            b = step_rk4_loop_with(&b, dt, eps, &model, Frequency::Scaled(1.3)).unwrap();
        }
        // ψ = ∫(Ω − Ω')dt = −0.3∫Ω dt, read off the accumulated scaled phase
        let psi = -0.3 * a.scaled_phase / eps;
        let shifted = phase_shift(&a, psi);
        assert!(shifted.max_difference(&b) < 1e-6, "{}", shifted.max_difference(&b));
    }
}
