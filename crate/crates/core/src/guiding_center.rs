//! Slow dynamics on the truncated slow manifold.
//!
//! Order 0 is the closed-form system
//!
//! ```text
//! ẇ1 =  ū (b·R) w2 + ½ū k∥ w1 + ½ū τ w2
//! ẇ2 = −ū (b·R) w1 − ½ū τ w1 + ½ū k∥ w2
//! ū̇  = −½ (|w⊥|²/|B|) b·∇|B|,   x̄̇ = ū b,   𝒮̇ = |B|
//! ```
//!
//! which conserves `μ0 = |w⊥|²/2|B|` and `½ū² + ½|w⊥|²`. Order 1 evaluates
//! the split generator `g_ε` on `y0* + ε y1*`; its `x̄` component is
//! `ū b − ε(μ0∇|B| + ū²κ)×b/|B|`, the ∇B and curvature drifts.

use crate::error::{Error, Result};
use crate::fastslow::{rhs_split, SlowState};
use crate::fields::{frame, MagneticField, Vec3};
use crate::slow_manifold::{shape, ShapeOrder};

/// Grid size used when the order-1 generator builds shape functions. The
/// first-order shapes only contain harmonics up to 2.
pub const GENERATOR_GRID: usize = 16;

pub fn mu0(x: &SlowState, model: &dyn MagneticField) -> Result<f64> {
    let fr = frame(model, &x.xbar)?;
    Ok(x.w_squared() / (2.0 * fr.abs_b))
}

pub fn gc_energy(x: &SlowState) -> f64 {
    0.5 * x.ubar * x.ubar + 0.5 * x.w_squared()
}

pub fn rhs_order0(x: &SlowState, model: &dyn MagneticField) -> Result<SlowState> {
    let fr = frame(model, &x.xbar)?;
    let ub = x.ubar;
    let br = fr.b.dot(&fr.r);
    Ok(SlowState {
        xbar: ub * fr.b,
        ubar: -0.5 * x.w_squared() / fr.abs_b * fr.b.dot(&fr.grad_abs_b),
        w1: ub * br * x.w2 + 0.5 * ub * fr.kpar * x.w1 + 0.5 * ub * fr.tau * x.w2,
        w2: -ub * br * x.w1 - 0.5 * ub * fr.tau * x.w1 + 0.5 * ub * fr.kpar * x.w2,
        scaled_phase: fr.abs_b,
    })
}

pub fn rhs_order1(x: &SlowState, eps: f64, model: &dyn MagneticField) -> Result<SlowState> {
    let y = shape(x, eps, model, ShapeOrder::Order1, GENERATOR_GRID)?;
    Ok(rhs_split(x, &y, eps, model)?.0)
}

/// The drift `−ε(μ0∇|B| + ū²κ)×b/|B|` added to `ū b` at first order.
pub fn drift_velocity(x: &SlowState, eps: f64, model: &dyn MagneticField) -> Result<Vec3> {
    let fr = frame(model, &x.xbar)?;
    let mu = x.w_squared() / (2.0 * fr.abs_b);
    Ok(-eps * (mu * fr.grad_abs_b + x.ubar * x.ubar * fr.kappa).cross(&fr.b) / fr.abs_b)
}

pub fn rhs(x: &SlowState, eps: f64, model: &dyn MagneticField, order: ShapeOrder) -> Result<SlowState> {
    match order {
        ShapeOrder::Order0 => rhs_order0(x, model),
        ShapeOrder::Order1 => rhs_order1(x, eps, model),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcSample {
    pub t: f64,
    pub state: SlowState,
    pub mu0: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GcTrajectory {
    pub samples: Vec<GcSample>,
}

impl GcTrajectory {
    pub fn last(&self) -> Option<&GcSample> {
        self.samples.last()
    }

    /// Largest `|q(t) − q(0)|/|q(0)|` for `q = μ0` and `q = energy`.
    pub fn relative_drifts(&self) -> (f64, f64) {
        let Some(first) = self.samples.first() else {
            return (0.0, 0.0);
        };
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        self.samples.iter().fold((0.0, 0.0), |(m, e), s| {
            (
                f64::max(m, rel(s.mu0, first.mu0)),
                f64::max(e, rel(s.energy, first.energy)),
            )
        })
    }
}

fn sample(t: f64, x: &SlowState, model: &dyn MagneticField) -> Result<GcSample> {
    Ok(GcSample {
        t,
        state: *x,
        mu0: mu0(x, model)?,
        energy: gc_energy(x),
    })
}

/// Classical RK4 on the slow generator for `round(T/dt)` steps.
pub fn integrate_gc(
    x0: &SlowState,
    eps: f64,
    model: &dyn MagneticField,
    t_final: f64,
    dt: f64,
    order: ShapeOrder,
) -> Result<GcTrajectory> {
    if !(dt > 0.0 && t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "guiding-center integration needs dt > 0 and T >= 0 (dt={dt}, T={t_final})"
        )));
    }
    let steps = (t_final / dt).round() as usize;
    let mut x = *x0;
    let mut out = GcTrajectory {
        samples: Vec::with_capacity(steps + 1),
    };
    out.samples.push(sample(0.0, &x, model)?);
    for i in 0..steps {
        let k1 = rhs(&x, eps, model, order)?;
        let k2 = rhs(&(x + k1 * (0.5 * dt)), eps, model, order)?;
        let k3 = rhs(&(x + k2 * (0.5 * dt)), eps, model, order)?;
        let k4 = rhs(&(x + k3 * dt), eps, model, order)?;
        x = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if !x.is_finite() {
            return Err(Error::InvalidState(format!(
                "guiding-center state became non-finite at step {i}"
            )));
        }
        out.samples.push(sample((i + 1) as f64 * dt, &x, model)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldModel;
    use crate::slow_manifold::y0_star;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conserved_quantity_values() {
        let model = FieldModel::uniform(1.0);
        assert_abs_diff_eq!(mu0(&SlowState::new(Vec3::zeros(), 0.0, 1.0, 0.0), &model).unwrap(), 0.5);
        assert_abs_diff_eq!(gc_energy(&SlowState::new(Vec3::zeros(), 1.0, 0.0, 0.0)), 0.5);
    }

    #[test]
    fn uniform_and_gradient_order0() {
        let x = SlowState::new(Vec3::new(0.0, 0.0, 0.0), 0.7, 0.3, -0.4);
        let g = rhs_order0(&x, &FieldModel::uniform(1.0)).unwrap();
        assert_eq!((g.w1, g.w2, g.ubar), (0.0, 0.0, 0.0));
        assert_abs_diff_eq!(g.xbar, 0.7 * Vec3::z());
        let g = rhs_order0(&x, &FieldModel::linear_gradient(1.0, 0.1)).unwrap();
        assert_eq!(g.ubar, 0.0);
    }

    #[test]
    fn mirror_force_decelerates() {
        let model = FieldModel::default_screw_pinch();
        let x = SlowState::new(Vec3::new(0.1, -0.2, 0.3), 0.5, 0.6, 0.2);
        let fr = frame(&model, &x.xbar).unwrap();
        assert!(fr.b.dot(&fr.grad_abs_b) > 0.0);
        assert!(rhs_order0(&x, &model).unwrap().ubar < 0.0);
    }

    #[test]
    fn order0_matches_split_generator_on_leading_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for model in FieldModel::catalogue() {
            for _ in 0..10 {
                let x = SlowState {
                    xbar: Vec3::new(
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                    ),
                    ubar: rng.gen_range(-1.0..1.0),
                    w1: rng.gen_range(-1.0..1.0),
                    w2: rng.gen_range(-1.0..1.0),
                    scaled_phase: 0.0,
                };
                let y0 = y0_star(&x, &model, 16).unwrap();
                let g = rhs_split(&x, &y0, 0.0, &model).unwrap().0;
                let closed = rhs_order0(&x, &model).unwrap();
                assert!((g - closed).max_abs() < 1e-9, "{} {:?}", model.name(), g - closed);
            }
        }
    }

    #[test]
    fn gradient_drift_example() {
        let model = FieldModel::linear_gradient(1.0, 0.1);
        let x = SlowState::new(Vec3::zeros(), 0.0, 1.0, 0.0);
        let d = drift_velocity(&x, 0.01, &model).unwrap();
        assert_abs_diff_eq!(d, Vec3::new(0.0, 0.0005, 0.0), epsilon = 1e-15);
        let g = rhs_order1(&x, 0.01, &model).unwrap();
        assert_abs_diff_eq!(g.xbar, d, epsilon = 1e-15);
    }

    #[test]
    fn order1_drift_is_the_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for model in FieldModel::catalogue() {
            for _ in 0..10 {
                let x = SlowState::new(
                    Vec3::new(
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                    ),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let eps = 0.03;
                let g1 = rhs_order1(&x, eps, &model).unwrap();
                let g0 = rhs_order0(&x, &model).unwrap();
                let d = drift_velocity(&x, eps, &model).unwrap();
                assert!((g1.xbar - g0.xbar - d).amax() <= 1e-12);
            }
        }
    }

    #[test]
    fn order1_reduces_to_order0() {
        let model = FieldModel::default_screw_pinch();
        let x = SlowState::new(Vec3::new(0.1, 0.2, -0.1), 0.4, 0.5, -0.3);
        let g0 = rhs_order0(&x, &model).unwrap();
        let h = 1e-7;
        let gp = rhs_order1(&x, h, &model).unwrap();
        let gm = rhs_order1(&x, -h, &model).unwrap();
        assert!(((gp + gm) * 0.5 - g0).max_abs() < 1e-8);
    }

    #[test]
    fn order0_conservation_on_screw_pinch() {
        let model = FieldModel::default_screw_pinch();
        let x0 = SlowState::new(Vec3::new(0.2, -0.1, 0.0), 0.5, 0.6, 0.3);
        let traj = integrate_gc(&x0, 0.01, &model, 1.0, 1e-3, ShapeOrder::Order0).unwrap();
        let (dm, de) = traj.relative_drifts();
        assert!(dm <= 1e-9 && de <= 1e-9, "{dm:e} {de:e}");
    }
}
