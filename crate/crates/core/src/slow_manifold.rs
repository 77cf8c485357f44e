//! Shape functions of the slow manifold `y*_ε(x) = y0*(x) + ε y1*(x) + …`.
//!
//! `y0*` solves `f_0(x, y0*) = 0`; `y1*` solves the first-order invariance
//! equation `D_y f_0 · y1* = D y0*[g_0] − f_1`. The closed forms here are
//! cross-checked against [`y1_star_generic`], which evaluates the right-hand
//! side numerically and applies [`inv_dyf0`].
//!
//! Conventions: `w⊥ = w1 e1 + w2 e2`, `w_c = w⊥ × b`, `μ0 = |w⊥|²/2|B|`, and
//! `J` is the field Jacobian `∂B_i/∂x_j`. The closed forms are written as
//! polynomials in `w⊥` so that they stay finite at `w⊥ = 0`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fastslow::{inv_dyf0, lorentz_fluctuation, moments, reconstruct, rhs_split, FastState, SlowState};
use crate::fields::{frame, FrameData, MagneticField, Mat3, Vec3};
use crate::loopspace::PhaseLoop;
use crate::spectral::{self, Harmonics};

/// Truncation order of the shape function series; serialized as `0` or `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ShapeOrder {
    Order0,
    Order1,
}

impl TryFrom<u8> for ShapeOrder {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(ShapeOrder::Order0),
            1 => Ok(ShapeOrder::Order1),
            _ => Err(format!("shape order must be 0 or 1, got {v}")),
        }
    }
}

impl From<ShapeOrder> for u8 {
    fn from(o: ShapeOrder) -> u8 {
        o.as_index() as u8
    }
}

impl ShapeOrder {
    pub fn as_index(self) -> usize {
        match self {
            ShapeOrder::Order0 => 0,
            ShapeOrder::Order1 => 1,
        }
    }
}

/// Step for central differences in the slow variables, `1e−6·(1 + ‖x‖)`.
pub fn slow_step(x: &SlowState) -> f64 {
    1e-6 * (1.0 + x.max_abs())
}

/// Step for central differences in ε.
pub const EPS_STEP: f64 = 1e-5;

/// `ρ̂0* = (sinθ w⊥ − cosθ w_c)/|B|`; every other component vanishes.
pub fn y0_star(x: &SlowState, model: &dyn MagneticField, n: usize) -> Result<FastState> {
    let fr = frame(model, &x.xbar)?;
    Ok(y0_with_frame(x, &fr, n))
}

fn y0_with_frame(x: &SlowState, fr: &FrameData, n: usize) -> FastState {
    let w = x.w_perp(fr);
    let wc = w.cross(&fr.b);
    let mut y = FastState::zeros(n);
    y.rho = spectral::single_harmonic(n, 1, -wc / fr.abs_b, w / fr.abs_b);
    y
}

/// θ-moments of `F_L = ṽ0 × (J ρ̂0*)`, the leading Lorentz fluctuation on
/// the order-0 loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlMoments {
    /// `⟨F_L⟩`
    pub mean: Vec3,
    /// `⟨cosθ F_L⟩`
    pub cos: Vec3,
    /// `⟨sinθ F_L⟩`
    pub sin: Vec3,
    /// `cos2θ` coefficient of `π₂₊(F_L)`
    pub h2cos: Vec3,
    /// `sin2θ` coefficient of `π₂₊(F_L)`
    pub h2sin: Vec3,
}

impl FlMoments {
    pub fn max_difference(&self, o: &FlMoments) -> f64 {
        [
            self.mean - o.mean,
            self.cos - o.cos,
            self.sin - o.sin,
            self.h2cos - o.h2cos,
            self.h2sin - o.h2sin,
        ]
        .iter()
        .map(|d| d.amax())
        .fold(0.0, f64::max)
    }
}

/// `M:∇B = M_ij ∂_i B_j`.
fn contract_grad_field(m: &Mat3, jac: &Mat3) -> f64 {
    m.component_mul(&jac.transpose()).sum()
}

/// `M:∇b = M_ij ∂_i b_j`.
fn contract_grad_unit(m: &Mat3, grad_b: &Mat3) -> f64 {
    m.component_mul(grad_b).sum()
}

/// Symmetric dyads `(|w|²M1, |w|²M2)` with `M1 = ac + ca`, `M2 = cc − aa`,
/// `a = w⊥/|w⊥|`, `c = w_c/|w⊥|`.
fn gyration_dyads(w: &Vec3, wc: &Vec3) -> (Mat3, Mat3) {
    (
        w * wc.transpose() + wc * w.transpose(),
        wc * wc.transpose() - w * w.transpose(),
    )
}

/// Closed-form moments:
///
/// ```text
/// ⟨F_L⟩ = −μ0 ∇|B|
/// ⟨cosθ F_L⟩ = −ū/(2|B|) b × J w_c,     ⟨sinθ F_L⟩ = ū/(2|B|) b × J w⊥
/// π₂₊(F_L) = μ0 [T(M2) cos2θ − T(M1) sin2θ],   T(M) = (M:∇B) b − M·∇|B|
/// ```
pub fn fl_moments(x: &SlowState, model: &dyn MagneticField) -> Result<FlMoments> {
    let fr = frame(model, &x.xbar)?;
    Ok(fl_moments_with_frame(x, &fr))
}

fn fl_moments_with_frame(x: &SlowState, fr: &FrameData) -> FlMoments {
    let ab = fr.abs_b;
    let b = fr.b;
    let w = x.w_perp(fr);
    let wc = w.cross(&b);
    let mu0 = w.norm_squared() / (2.0 * ab);
    let t = |m: &Mat3| contract_grad_field(m, &fr.jac) * b - m * fr.grad_abs_b;
    let (m1, m2) = gyration_dyads(&w, &wc);
    FlMoments {
        mean: -mu0 * fr.grad_abs_b,
        cos: -x.ubar / (2.0 * ab) * b.cross(&(fr.jac * wc)),
        sin: x.ubar / (2.0 * ab) * b.cross(&(fr.jac * w)),
        h2cos: t(&m2) / (2.0 * ab),
        h2sin: -t(&m1) / (2.0 * ab),
    }
}

/// The same moments by trapezoid quadrature of `F_L` on an `n`-point grid.
pub fn fl_moments_quadrature(x: &SlowState, model: &dyn MagneticField, n: usize) -> Result<FlMoments> {
    let fr = frame(model, &x.xbar)?;
    let y0 = y0_with_frame(x, &fr, n);
    let force = lorentz_fluctuation(x, &y0, 0.0, model, &fr);
    let (mean, cos, sin) = moments(&force);
    let (h2cos, h2sin) = spectral::harmonic_pair(&force, 2);
    Ok(FlMoments {
        mean,
        cos,
        sin,
        h2cos,
        h2sin,
    })
}

/// Closed-form first-order shape function.
///
/// ```text
/// u⁺ = −ū κ·w_c/|B|,   u⁻ = ū κ·w⊥/|B|
/// ω1 = (e2·⟨cos F_L⟩ − e1·⟨sin F_L⟩)/2|B|,   ω2 = −(e1·⟨cos F_L⟩ + e2·⟨sin F_L⟩)/2|B|
/// v̄⊥ = −(μ0∇|B| + ū²κ) × b/|B|
/// V̂₂₊ = V⁺cos2θ + V⁻sin2θ,   V^± = ½(μ0M:∇b) b − μ0M·∇ln|B|  (M = M1 for +, M2 for −)
/// ρ̂ = ρ1⁺cosθ + ρ1⁻sinθ + ρ2⁺cos2θ + ρ2⁻sin2θ
///   ρ1⁺ = (ūQ/|B| − u⁻b − b×ω⊥)/|B|,   ρ1⁻ = (u⁺b + ω⊥ − ūP/|B|)/|B|
///   ρ2⁺ = −V⁻/2|B|,   ρ2⁻ = V⁺/2|B|
///   P = ½τ w⊥ + ½k∥ w_c − w⊥×κ,   Q = −½k∥ w⊥ + ½τ w_c − (κ·w⊥) b
/// ```
pub fn y1_star(x: &SlowState, model: &dyn MagneticField, n: usize) -> Result<FastState> {
    let fr = frame(model, &x.xbar)?;
    let ab = fr.abs_b;
    let b = fr.b;
    let ub = x.ubar;
    let w = x.w_perp(&fr);
    let wc = w.cross(&b);
    let mu0 = w.norm_squared() / (2.0 * ab);
    let m = fl_moments_with_frame(x, &fr);

    let u_plus = -ub * fr.kappa.dot(&wc) / ab;
    let u_minus = ub * fr.kappa.dot(&w) / ab;
    let omega1 = (fr.e2.dot(&m.cos) - fr.e1.dot(&m.sin)) / (2.0 * ab);
    let omega2 = -(fr.e1.dot(&m.cos) + fr.e2.dot(&m.sin)) / (2.0 * ab);
    let drift = -(mu0 * fr.grad_abs_b + ub * ub * fr.kappa).cross(&b) / ab;

    let (m1, m2) = gyration_dyads(&w, &wc);
    let (mu_m1, mu_m2) = (m1 / (2.0 * ab), m2 / (2.0 * ab));
    let grad_ln_b = fr.grad_abs_b / ab;
    let v2 = |mm: &Mat3| 0.5 * contract_grad_unit(mm, &fr.grad_b) * b - mm * grad_ln_b;
    let (v2p, v2m) = (v2(&mu_m1), v2(&mu_m2));

    let om = fr.perp(omega1, omega2);
    let p = 0.5 * fr.tau * w + 0.5 * fr.kpar * wc - w.cross(&fr.kappa);
    let q = -0.5 * fr.kpar * w + 0.5 * fr.tau * wc - fr.kappa.dot(&w) * b;
    let rho1p = (ub * q / ab - u_minus * b - b.cross(&om)) / ab;
    let rho1m = (u_plus * b + om - ub * p / ab) / ab;

    let mut rho = Harmonics::zeros(n);
    rho.set_k(1, rho1p, rho1m);
    rho.set_k(2, -v2m / (2.0 * ab), v2p / (2.0 * ab));
    let mut vh = Harmonics::zeros(n);
    vh.set_k(2, v2p, v2m);

    Ok(FastState {
        rho: spectral::synthesize(&rho),
        vbar1: fr.e1.dot(&drift),
        vbar2: fr.e2.dot(&drift),
        u_plus,
        u_minus,
        omega1,
        omega2,
        v_high: spectral::synthesize(&vh),
    })
}

/// `y1* = [D_y f_0]⁻¹(D y0*[g_0] − f_1)` with both terms of the source by
/// central differences: `D y0*[g_0]` along `g_0 = g_0(x, y0*)` with step
/// [`slow_step`], and `f_1 = ∂_ε f_ε(x, y0*)` at ε = 0 with step [`EPS_STEP`].
pub fn y1_star_generic(x: &SlowState, model: &dyn MagneticField, n: usize) -> Result<FastState> {
    let y0 = y0_star(x, model, n)?;
    let (g0, _) = rhs_split(x, &y0, 0.0, model)?;
    let h = slow_step(x);
    let yp = y0_star(&(*x + g0 * h), model, n)?;
    let ym = y0_star(&(*x + g0 * -h), model, n)?;
    let dy0 = &(&yp - &ym) * (0.5 / h);
    let fp = rhs_split(x, &y0, EPS_STEP, model)?.1;
    let fm = rhs_split(x, &y0, -EPS_STEP, model)?.1;
    let f1 = &(&fp - &fm) * (0.5 / EPS_STEP);
    inv_dyf0(x, &(&dy0 - &f1), model)
}

/// Truncated shape function `y0*` or `y0* + ε y1*`.
pub fn shape(x: &SlowState, eps: f64, model: &dyn MagneticField, order: ShapeOrder, n: usize) -> Result<FastState> {
    let y0 = y0_star(x, model, n)?;
    match order {
        ShapeOrder::Order0 => Ok(y0),
        ShapeOrder::Order1 => Ok(y0.combine(1.0, &y1_star(x, model, n)?, eps)),
    }
}

/// The loop on the truncated slow manifold over `x`.
pub fn build_loop(
    x: &SlowState,
    eps: f64,
    model: &dyn MagneticField,
    order: ShapeOrder,
    n: usize,
) -> Result<PhaseLoop> {
    reconstruct(x, &shape(x, eps, model, order, n)?, eps, model)
}

/// `‖ε D y*(x)[g_ε(x, y*)] − f_ε(x, y*)‖` for the truncated shape function,
/// in the weighted sup-norm of [`FastState::norm`]. The derivative is a
/// central difference along `g_ε` with step [`slow_step`].
pub fn invariance_residual(
    x: &SlowState,
    eps: f64,
    model: &dyn MagneticField,
    order: ShapeOrder,
    n: usize,
) -> Result<f64> {
    let y = shape(x, eps, model, order, n)?;
    let (g, f) = rhs_split(x, &y, eps, model)?;
    let h = slow_step(x);
    let yp = shape(&(*x + g * h), eps, model, order, n)?;
    let ym = shape(&(*x + g * -h), eps, model, order, n)?;
    let dy = &(&yp - &ym) * (0.5 / h);
    Ok(dy.combine(eps, &f, -1.0).norm())
}

/// Relative difference `‖a − b‖ / max(‖b‖, floor)`.
pub fn relative_difference(a: &FastState, b: &FastState, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}
