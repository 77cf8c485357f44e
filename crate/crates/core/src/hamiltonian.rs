//! The loop-space 1-form restricted to the slow manifold and its Noether
//! invariant.
//!
//! Points of the quotient by the phase symmetry are `(x̄, ū, u1, u2)`; they
//! are represented by a [`SlowState`] with `w1 = u1`, `w2 = u2` and `𝒮 = 0`,
//! which is the section used to pull the 1-form back. Tangents use the same
//! type with the `scaled_phase` field ignored. Up to an exact 1-form and
//! `O(ε²)`, the restricted 1-form is
//!
//! ```text
//! Ξ = (A/ε + ū b + ε W)·dx̄ + ε μ0 (u2 du1 − u1 du2)/(u1² + u2²)
//! W = −(3/2) μ0 ∇|B|×b/|B| − ū² κ×b/|B| − ½ μ0 τ b − μ0 R
//! ```

use crate::error::{Error, Result};
use crate::fastslow::{reconstruct, SlowState};
use crate::fields::{frame, MagneticField, Vec3, GAUSS_LEGENDRE_10};
use crate::loopspace::loop_action;
use crate::slow_manifold::{build_loop, shape, slow_step, y0_star, ShapeOrder};
use crate::spectral;

/// `|u⊥|` below which the gyrophase term is undefined.
pub const GYROPHASE_THRESHOLD: f64 = 1e-10;

/// Coefficients of the closed-form restricted 1-form at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneFormSample {
    pub point: SlowState,
    /// Coefficient of `dx̄`.
    pub dxbar: Vec3,
    /// Coefficients of `(du1, du2)`.
    pub du: (f64, f64),
}

impl OneFormSample {
    pub fn apply(&self, tangent: &SlowState) -> f64 {
        self.dxbar.dot(&tangent.xbar) + self.du.0 * tangent.w1 + self.du.1 * tangent.w2
    }
}

/// Closed-form `W`.
pub fn w_vector(x: &SlowState, model: &dyn MagneticField) -> Result<Vec3> {
    let fr = frame(model, &x.xbar)?;
    let ab = fr.abs_b;
    let mu0 = x.w_squared() / (2.0 * ab);
    Ok(-1.5 * mu0 * fr.grad_abs_b.cross(&fr.b) / ab
        - x.ubar * x.ubar * fr.kappa.cross(&fr.b) / ab
        - 0.5 * mu0 * fr.tau * fr.b
        - mu0 * fr.r)
}

/// `W` from its defining loop integrals,
///
/// ```text
/// W = −(μ0∇|B| + ū²κ)×b/|B| + ½⟨(ρ̂0*·∇B) × ρ̂0*⟩ + ½⟨(∇ρ̂0*)·v̂0⟩
/// ```
///
/// with `v̂0 = (cosθ − sinθ b×) w⊥` and `∇ρ̂0*` the derivative in `x̄` at fixed
/// `(ū, u1, u2)`, taken by central differences.
pub fn w_vector_quadrature(x: &SlowState, model: &dyn MagneticField, n: usize) -> Result<Vec3> {
    let fr = frame(model, &x.xbar)?;
    let ab = fr.abs_b;
    let mu0 = x.w_squared() / (2.0 * ab);
    let w = x.w_perp(&fr);
    let y0 = y0_star(x, model, n)?;
    let vhat: Vec<Vec3> = (0..n)
        .map(|i| {
            let (s, c) = spectral::theta(n, i).sin_cos();
            c * w - s * fr.b.cross(&w)
        })
        .collect();
    let twist: Vec<Vec3> = y0.rho.iter().map(|r| (fr.jac * r).cross(r)).collect();
    let h = slow_step(x);
    let mut transport = Vec3::zeros();
    for i in 0..3 {
        let mut step = Vec3::zeros();
        step[i] = h;
        let yp = y0_star(
            &SlowState {
                xbar: x.xbar + step,
                ..*x
            },
            model,
            n,
        )?;
        let ym = y0_star(
            &SlowState {
                xbar: x.xbar - step,
                ..*x
            },
            model,
            n,
        )?;
        let s: f64 = (0..n)
            .map(|k| ((yp.rho[k] - ym.rho[k]) / (2.0 * h)).dot(&vhat[k]))
            .sum();
        transport[i] = s / n as f64;
    }
    Ok(-(mu0 * fr.grad_abs_b + x.ubar * x.ubar * fr.kappa).cross(&fr.b) / ab
        + 0.5 * spectral::mean(&twist)
        + 0.5 * transport)
}

fn quotient_point(x: &SlowState) -> SlowState {
    SlowState {
        scaled_phase: 0.0,
        ..*x
    }
}

/// Closed-form coefficients of the restricted 1-form.
pub fn xi_closed_form(x: &SlowState, eps: f64, model: &dyn MagneticField) -> Result<OneFormSample> {
    let p = quotient_point(x);
    let u2 = p.w_squared();
    if u2.sqrt() <= GYROPHASE_THRESHOLD {
        return Err(Error::GyrophaseSingular(u2.sqrt()));
    }
    let fr = frame(model, &p.xbar)?;
    let mu0 = u2 / (2.0 * fr.abs_b);
    let dxbar = model.vector_potential(&p.xbar) / eps + p.ubar * fr.b + eps * w_vector(&p, model)?;
    Ok(OneFormSample {
        point: p,
        dxbar,
        du: (eps * mu0 * p.w2 / u2, -eps * mu0 * p.w1 / u2),
    })
}

/// The pulled-back 1-form evaluated on `tangent` by quadrature over the
/// order-1 slow-manifold loop:
///
/// ```text
/// (A/ε + ū b + v̄⊥* + ∫₀¹⟨B(x̄+λερ̂*) × ρ̂*⟩dλ)·dx̄
///   + ε⟨(v̂* + ∫₀¹ B(x̄+λερ̂*) × ρ̂* λ dλ)·Dρ̂*[tangent]⟩
/// ```
///
/// `Dρ̂*` is a central difference along the tangent. It agrees with
/// [`xi_closed_form`] up to an exact 1-form and `O(ε²)`.
pub fn xi_restricted(x: &SlowState, eps: f64, model: &dyn MagneticField, tangent: &SlowState, n: usize) -> Result<f64> {
    let p = quotient_point(x);
    if p.w_squared().sqrt() <= GYROPHASE_THRESHOLD {
        return Err(Error::GyrophaseSingular(p.w_squared().sqrt()));
    }
    let fr = frame(model, &p.xbar)?;
    let y = shape(&p, eps, model, ShapeOrder::Order1, n)?;
    let l = reconstruct(&p, &y, eps, model)?;
    let vbar = l.mean_velocity();
    let vperp = vbar - fr.b.dot(&vbar) * fr.b;

    let mut flux = Vec3::zeros();
    let mut moment = vec![Vec3::zeros(); n];
    for (k, r) in y.rho.iter().enumerate() {
        for &(lambda, weight) in GAUSS_LEGENDRE_10.iter() {
            let bxr = model.field(&(p.xbar + lambda * eps * r)).cross(r);
            flux += weight * bxr;
            moment[k] += weight * lambda * bxr;
        }
    }
    flux /= n as f64;

    let dir = SlowState {
        scaled_phase: 0.0,
        ..*tangent
    };
    let h = slow_step(&p);
    let yp = shape(&(p + dir * h), eps, model, ShapeOrder::Order1, n)?;
    let ym = shape(&(p + dir * -h), eps, model, ShapeOrder::Order1, n)?;
    let second: f64 = (0..n)
        .map(|k| {
            let drho = (yp.rho[k] - ym.rho[k]) / (2.0 * h);
            (l.v[k] - vbar + moment[k]).dot(&drho)
        })
        .sum::<f64>()
        / n as f64;

    let first = model.vector_potential(&p.xbar) / eps + p.ubar * fr.b + vperp + flux;
    Ok(first.dot(&tangent.xbar) + eps * second)
}

/// Loop action of the slow-manifold loop over `x`; equals `εμ0 + O(ε²)`.
pub fn noether_j(x: &SlowState, eps: f64, model: &dyn MagneticField, order: ShapeOrder, n: usize) -> Result<f64> {
    Ok(loop_action(&build_loop(x, eps, model, order, n)?, eps, model))
}
