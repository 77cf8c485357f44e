//! Full-orbit integration of `ẋ = v`, `v̇ = v×B(x)/ε`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{MagneticField, Vec3};
use crate::fit::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub x: Vec3,
    pub v: Vec3,
    pub t: f64,
}

impl ParticleState {
    pub fn new(x: Vec3, v: Vec3) -> Self {
        ParticleState { x, v, t: 0.0 }
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.v.norm_squared()
    }

    /// `|v⊥|²/2|B|` with the field taken at the particle position.
    pub fn mu(&self, model: &dyn MagneticField) -> f64 {
        let bvec = model.field(&self.x);
        let abs_b = bvec.norm();
        let b = bvec / abs_b;
        let vperp = self.v - self.v.dot(&b) * b;
        0.5 * vperp.norm_squared() / abs_b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    #[default]
    Boris,
    Rk4,
}

/// Boris step in drift-kick-drift form: half position drift, exact-norm
/// velocity rotation with the field at the midpoint, half drift.
pub fn step_boris(s: &ParticleState, dt: f64, eps: f64, model: &dyn MagneticField) -> ParticleState {
    let x_half = s.x + 0.5 * dt * s.v;
    let t = model.field(&x_half) * (0.5 * dt / eps);
    let sv = 2.0 * t / (1.0 + t.norm_squared());
    let v_prime = s.v + s.v.cross(&t);
    let v_new = s.v + v_prime.cross(&sv);
    ParticleState {
        x: x_half + 0.5 * dt * v_new,
        v: v_new,
        t: s.t + dt,
    }
}

pub fn step_rk4(s: &ParticleState, dt: f64, eps: f64, model: &dyn MagneticField) -> ParticleState {
    let rhs = |x: &Vec3, v: &Vec3| (*v, v.cross(&model.field(x)) / eps);
    let (k1x, k1v) = rhs(&s.x, &s.v);
    let (k2x, k2v) = rhs(&(s.x + 0.5 * dt * k1x), &(s.v + 0.5 * dt * k1v));
    let (k3x, k3v) = rhs(&(s.x + 0.5 * dt * k2x), &(s.v + 0.5 * dt * k2v));
    let (k4x, k4v) = rhs(&(s.x + dt * k3x), &(s.v + dt * k3v));
    ParticleState {
        x: s.x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        v: s.v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        t: s.t + dt,
    }
}

pub fn step(stepper: Stepper, s: &ParticleState, dt: f64, eps: f64, model: &dyn MagneticField) -> ParticleState {
    match stepper {
        Stepper::Boris => step_boris(s, dt, eps, model),
        Stepper::Rk4 => step_rk4(s, dt, eps, model),
    }
}

/// Integrates for `round(t_final/dt)` steps and returns every state,
/// including the initial one.
pub fn integrate(
    s0: &ParticleState,
    eps: f64,
    model: &dyn MagneticField,
    t_final: f64,
    dt: f64,
    stepper: Stepper,
) -> Result<Vec<ParticleState>> {
    if !(dt > 0.0 && t_final >= 0.0 && eps != 0.0) {
        return Err(Error::InvalidArgument(format!(
            "orbit integration needs dt > 0, T >= 0, eps != 0 (dt={dt}, T={t_final}, eps={eps})"
        )));
    }
    let steps = (t_final / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = *s0;
    out.push(s);
    for _ in 0..steps {
        s = step(stepper, &s, dt, eps, model);
        if !(s.x.iter().all(|c| c.is_finite()) && s.v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidState(format!("orbit became non-finite at t = {}", s.t)));
        }
        out.push(s);
    }
    Ok(out)
}

/// Boxcar average of positions over a sliding window of `window` time
/// units, assuming a uniformly sampled trajectory. Each output pairs the
/// window's mean time with its mean position.
pub fn gyro_average(trajectory: &[ParticleState], window: f64) -> Vec<(f64, Vec3)> {
    if trajectory.len() < 2 {
        return trajectory.iter().map(|s| (s.t, s.x)).collect();
    }
    let dt = trajectory[1].t - trajectory[0].t;
    let m = ((window / dt).round() as usize).max(1);
    if m > trajectory.len() {
        return Vec::new();
    }
    let mut sum_x: Vec3 = trajectory[..m].iter().map(|s| s.x).sum();
    let mut sum_t: f64 = trajectory[..m].iter().map(|s| s.t).sum();
    let mut out = Vec::with_capacity(trajectory.len() - m + 1);
    out.push((sum_t / m as f64, sum_x / m as f64));
    for i in m..trajectory.len() {
        sum_x += trajectory[i].x - trajectory[i - m].x;
        sum_t += trajectory[i].t - trajectory[i - m].t;
        out.push((sum_t / m as f64, sum_x / m as f64));
    }
    out
}

/// Least-squares velocity of an averaged track after dropping samples with
/// `t < t_discard`.
pub fn drift_velocity(averaged: &[(f64, Vec3)], t_discard: f64) -> Result<Vec3> {
    let kept: Vec<&(f64, Vec3)> = averaged.iter().filter(|(t, _)| *t >= t_discard).collect();
    let ts: Vec<f64> = kept.iter().map(|(t, _)| *t).collect();
    let mut v = Vec3::zeros();
    for c in 0..3 {
        let xs: Vec<f64> = kept.iter().map(|(_, x)| x[c]).collect();
        v[c] = linear_fit(&ts, &xs)?.slope;
    }
    Ok(v)
}

/// Time step for which one Boris rotation is exactly `2π/m` in a field of
/// strength `abs_b`, so an `m`-sample boxcar spans one discrete gyration.
pub fn boris_step_for_period(eps: f64, abs_b: f64, m: usize) -> f64 {
    2.0 * eps * (std::f64::consts::PI / m as f64).tan() / abs_b
}
