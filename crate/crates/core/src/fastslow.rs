//! Change of variables from a loop to slow and fast variables, and the loop
//! dynamics written in those variables.
//!
//! Slow: `x = (x̄, ū, w1, w2, 𝒮)`. Fast: `y = (ρ̂, v̄1, v̄2, u⁺, u⁻, ω1, ω2, V̂₂₊)`.
//! With `(b, e1, e2)` the frame at `x̄`, `w⊥ = w1 e1 + w2 e2` and
//! `ω⊥ = ω1 e1 + ω2 e2`, a loop is rebuilt as
//!
//! ```text
//! x̃ = x̄ + ε ρ̂
//! ṽ = ū b + v̄⊥ + (u⁺cosθ + u⁻sinθ) b + (cosθ + sinθ b×) ω⊥ + (cosθ − sinθ b×) w⊥ + V̂₂₊
//! ```
//!
//! The dynamics become `ẋ = g_ε(x, y)`, `ε ẏ = f_ε(x, y)`. In `f_ε` and `g_ε`
//! the field enters through `F = ṽ × δB` with `B(x̄ + ερ̂) = B(x̄) + ε δB`.
//!
//! `f_0` is affine in `y`, not linear: the `ρ̂` row contains the slow `w⊥`
//! term of `ṽ`. [`inv_dyf0`] inverts the linear part `D_y f_0`.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::fields::{frame, FrameData, MagneticField, Vec3};
use crate::loopspace::PhaseLoop;
use crate::spectral::{self, Harmonics};

/// Slow variables. Also used for slow tangents `ẋ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlowState {
    pub xbar: Vec3,
    pub ubar: f64,
    pub w1: f64,
    pub w2: f64,
    /// `𝒮 = εS`.
    pub scaled_phase: f64,
}

/// Fast variables. Also used for fast tangents `εẏ` and sources of
/// [`inv_dyf0`].
#[derive(Debug, Clone, PartialEq)]
pub struct FastState {
    /// Zero-mean gyration profile `ρ̂ = (x̃ − x̄)/ε`.
    pub rho: Vec<Vec3>,
    pub vbar1: f64,
    pub vbar2: f64,
    pub u_plus: f64,
    pub u_minus: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// Velocity fluctuation beyond the first harmonic.
    pub v_high: Vec<Vec3>,
}

impl SlowState {
    pub fn new(xbar: Vec3, ubar: f64, w1: f64, w2: f64) -> Self {
        SlowState {
            xbar,
            ubar,
            w1,
            w2,
            scaled_phase: 0.0,
        }
    }

    /// `w⊥ = w1 e1 + w2 e2`.
    pub fn w_perp(&self, fr: &FrameData) -> Vec3 {
        fr.perp(self.w1, self.w2)
    }

    pub fn w_squared(&self) -> f64 {
        self.w1 * self.w1 + self.w2 * self.w2
    }

    pub fn is_finite(&self) -> bool {
        self.xbar.iter().all(|c| c.is_finite())
            && [self.ubar, self.w1, self.w2, self.scaled_phase]
                .iter()
                .all(|c| c.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.xbar
            .amax()
            .max(self.ubar.abs())
            .max(self.w1.abs())
            .max(self.w2.abs())
            .max(self.scaled_phase.abs())
    }
}

impl Add for SlowState {
    type Output = SlowState;
    fn add(self, o: SlowState) -> SlowState {
        SlowState {
            xbar: self.xbar + o.xbar,
            ubar: self.ubar + o.ubar,
            w1: self.w1 + o.w1,
            w2: self.w2 + o.w2,
            scaled_phase: self.scaled_phase + o.scaled_phase,
        }
    }
}

impl Sub for SlowState {
    type Output = SlowState;
    fn sub(self, o: SlowState) -> SlowState {
        self + o * -1.0
    }
}

impl Mul<f64> for SlowState {
    type Output = SlowState;
    fn mul(self, a: f64) -> SlowState {
        SlowState {
            xbar: self.xbar * a,
            ubar: self.ubar * a,
            w1: self.w1 * a,
            w2: self.w2 * a,
            scaled_phase: self.scaled_phase * a,
        }
    }
}

impl FastState {
    pub fn zeros(n: usize) -> Self {
        FastState {
            rho: vec![Vec3::zeros(); n],
            vbar1: 0.0,
            vbar2: 0.0,
            u_plus: 0.0,
            u_minus: 0.0,
            omega1: 0.0,
            omega2: 0.0,
            v_high: vec![Vec3::zeros(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.rho.len()
    }

    fn scalars(&self) -> [f64; 6] {
        [
            self.vbar1,
            self.vbar2,
            self.u_plus,
            self.u_minus,
            self.omega1,
            self.omega2,
        ]
    }

    /// Weighted sup-norm: grid sup-norm for `ρ̂` and `V̂₂₊`, absolute value for
    /// the scalar components.
    pub fn norm(&self) -> f64 {
        self.scalars().iter().map(|c| c.abs()).fold(
            spectral::sup_norm(&self.rho).max(spectral::sup_norm(&self.v_high)),
            f64::max,
        )
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &FastState, b: f64) -> FastState {
        let mix = |p: &[Vec3], q: &[Vec3]| p.iter().zip(q).map(|(u, v)| a * u + b * v).collect();
        FastState {
            rho: mix(&self.rho, &other.rho),
            vbar1: a * self.vbar1 + b * other.vbar1,
            vbar2: a * self.vbar2 + b * other.vbar2,
            u_plus: a * self.u_plus + b * other.u_plus,
            u_minus: a * self.u_minus + b * other.u_minus,
            omega1: a * self.omega1 + b * other.omega1,
            omega2: a * self.omega2 + b * other.omega2,
            v_high: mix(&self.v_high, &other.v_high),
        }
    }

    /// Largest violation of the structural constraints: mean of `ρ̂` and the
    /// zeroth and first harmonics of `V̂₂₊`.
    pub fn invariant_violation(&self) -> f64 {
        let mut worst = spectral::mean(&self.rho).amax();
        worst = worst.max(spectral::mean(&self.v_high).amax());
        let (c, s) = spectral::harmonic_pair(&self.v_high, 1);
        worst.max(c.amax()).max(s.amax())
    }

    pub fn is_finite(&self) -> bool {
        self.scalars().iter().all(|c| c.is_finite())
            && self
                .rho
                .iter()
                .chain(&self.v_high)
                .all(|p| p.iter().all(|c| c.is_finite()))
    }
}

impl Add for &FastState {
    type Output = FastState;
    fn add(self, o: &FastState) -> FastState {
        self.combine(1.0, o, 1.0)
    }
}

impl Sub for &FastState {
    type Output = FastState;
    fn sub(self, o: &FastState) -> FastState {
        self.combine(1.0, o, -1.0)
    }
}

impl Mul<f64> for &FastState {
    type Output = FastState;
    fn mul(self, a: f64) -> FastState {
        self.combine(a, self, 0.0)
    }
}

/// First velocity harmonic `(V̂₁⁺, V̂₁⁻)` with `V̂₁ = V̂₁⁺cosθ + V̂₁⁻sinθ`.
fn first_harmonic(x: &SlowState, y: &FastState, fr: &FrameData) -> (Vec3, Vec3) {
    let w = x.w_perp(fr);
    let om = fr.perp(y.omega1, y.omega2);
    let plus = y.u_plus * fr.b + om + w;
    let minus = y.u_minus * fr.b + fr.b.cross(&om) - fr.b.cross(&w);
    (plus, minus)
}

fn mean_velocity(x: &SlowState, y: &FastState, fr: &FrameData) -> Vec3 {
    x.ubar * fr.b + fr.perp(y.vbar1, y.vbar2)
}

/// Velocity fluctuation `V̂ = ṽ − v̄` on the grid.
fn velocity_fluctuation(x: &SlowState, y: &FastState, fr: &FrameData) -> Vec<Vec3> {
    let n = y.n();
    let (plus, minus) = first_harmonic(x, y, fr);
    (0..n)
        .map(|i| {
            let (s, c) = spectral::theta(n, i).sin_cos();
            c * plus + s * minus + y.v_high[i]
        })
        .collect()
}

pub fn decompose(l: &PhaseLoop, eps: f64, model: &dyn MagneticField) -> Result<(SlowState, FastState)> {
    let xbar = l.mean_position();
    let fr = frame(model, &xbar)?;
    let rho = l.x.iter().map(|p| (p - xbar) / eps).collect();
    let vbar = l.mean_velocity();
    let vhat: Vec<Vec3> = l.v.iter().map(|v| v - vbar).collect();
    let (plus, minus) = spectral::harmonic_pair(&vhat, 1);
    let n = l.n();
    let v_high = vhat
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (s, c) = spectral::theta(n, i).sin_cos();
            v - c * plus - s * minus
        })
        .collect();
    let (v1p, v2p) = (fr.e1.dot(&plus), fr.e2.dot(&plus));
    let (v1m, v2m) = (fr.e1.dot(&minus), fr.e2.dot(&minus));
    let slow = SlowState {
        xbar,
        ubar: fr.b.dot(&vbar),
        w1: 0.5 * (v1p - v2m),
        w2: 0.5 * (v2p + v1m),
        scaled_phase: l.scaled_phase,
    };
    let fast = FastState {
        rho,
        vbar1: fr.e1.dot(&vbar),
        vbar2: fr.e2.dot(&vbar),
        u_plus: fr.b.dot(&plus),
        u_minus: fr.b.dot(&minus),
        omega1: 0.5 * (v1p + v2m),
        omega2: 0.5 * (v2p - v1m),
        v_high,
    };
    Ok((slow, fast))
}

/// Largest invariant violation [`reconstruct`] accepts, relative to `1 + ‖y‖`.
pub const INVARIANT_TOLERANCE: f64 = 1e-8;

pub fn reconstruct(x: &SlowState, y: &FastState, eps: f64, model: &dyn MagneticField) -> Result<PhaseLoop> {
    let violation = y.invariant_violation();
    if violation > INVARIANT_TOLERANCE * (1.0 + y.norm()) {
        return Err(Error::InvalidState(format!(
            "fast state violates its constraints by {violation:e} (ρ̂ must have zero mean, V̂₂₊ no harmonics below 2)"
        )));
    }
    if y.rho.len() != y.v_high.len() {
        return Err(Error::InvalidState("fast state grids differ in length".into()));
    }
    let fr = frame(model, &x.xbar)?;
    let vbar = mean_velocity(x, y, &fr);
    let v = velocity_fluctuation(x, y, &fr).into_iter().map(|d| vbar + d).collect();
    let xs = y.rho.iter().map(|r| x.xbar + eps * r).collect();
    Ok(PhaseLoop::new(xs, v)?.with_phase(eps, x.scaled_phase))
}

/// `F(θ) = ṽ(θ) × δB(θ)` on the grid.
pub fn lorentz_fluctuation(
    x: &SlowState,
    y: &FastState,
    eps: f64,
    model: &dyn MagneticField,
    fr: &FrameData,
) -> Vec<Vec3> {
    let vbar = mean_velocity(x, y, fr);
    velocity_fluctuation(x, y, fr)
        .iter()
        .zip(&y.rho)
        .map(|(dv, r)| (vbar + dv).cross(&model.delta_b(&x.xbar, r, eps)))
        .collect()
}

/// θ-means `(⟨F⟩, ⟨cosθ F⟩, ⟨sinθ F⟩)`.
pub fn moments(f: &[Vec3]) -> (Vec3, Vec3, Vec3) {
    let (c, s) = spectral::harmonic_pair(f, 1);
    (spectral::mean(f), 0.5 * c, 0.5 * s)
}

/// Split generator `(g_ε, f_ε)`; valid for any finite ε including 0.
pub fn rhs_split(x: &SlowState, y: &FastState, eps: f64, model: &dyn MagneticField) -> Result<(SlowState, FastState)> {
    let fr = frame(model, &x.xbar)?;
    let abs_b = fr.abs_b;
    let (b, e1, e2) = (fr.b, fr.e1, fr.e2);
    let w = x.w_perp(&fr);
    let om = fr.perp(y.omega1, y.omega2);
    let vbar = mean_velocity(x, y, &fr);
    let vperp = fr.perp(y.vbar1, y.vbar2);
    let vr = vbar.dot(&fr.r);
    let gb = |a: &Vec3| fr.dir_grad_b(&vbar, a);

    let force = lorentz_fluctuation(x, y, eps, model, &fr);
    let (mf, cf, sf) = moments(&force);

    let g = SlowState {
        xbar: x.ubar * b + vperp,
        ubar: gb(&vbar) + b.dot(&mf),
        w1: -0.5 * gb(&(y.u_plus * e1 - y.u_minus * e2)) + vr * x.w2 + e1.dot(&cf) - e2.dot(&sf),
        w2: -0.5 * gb(&(y.u_plus * e2 + y.u_minus * e1)) - vr * x.w1 + e2.dot(&cf) + e1.dot(&sf),
        scaled_phase: abs_b,
    };

    let mut f = f0_with_frame(x, y, &fr);
    f.u_plus += eps * (gb(&(w + om)) + 2.0 * b.dot(&cf));
    f.u_minus += eps * (gb(&(w.cross(&b) - om.cross(&b))) + 2.0 * b.dot(&sf));
    f.omega1 += eps * (e1.dot(&cf) + e2.dot(&sf) - 0.5 * gb(&(y.u_plus * e1 + y.u_minus * e2)) + vr * y.omega2);
    f.omega2 += eps * (e2.dot(&cf) - e1.dot(&sf) - 0.5 * gb(&(y.u_plus * e2 - y.u_minus * e1)) - vr * y.omega1);
    f.vbar1 += eps * (e1.dot(&mf) - x.ubar * gb(&e1) + vr * y.vbar2);
    f.vbar2 += eps * (e2.dot(&mf) - x.ubar * gb(&e2) - vr * y.vbar1);
    let n = y.n();
    for (i, fv) in f.v_high.iter_mut().enumerate() {
        let (s, c) = spectral::theta(n, i).sin_cos();
        // π₂₊ removes the mean and the first harmonic
        *fv += eps * (force[i] - mf - 2.0 * c * cf - 2.0 * s * sf);
    }
    Ok((g, f))
}

/// The frozen fast operator `f_0(x, y) = lim_{ε→0} f_ε(x, y)`.
pub fn f0(x: &SlowState, y: &FastState, model: &dyn MagneticField) -> Result<FastState> {
    let fr = frame(model, &x.xbar)?;
    Ok(f0_with_frame(x, y, &fr))
}

fn f0_with_frame(x: &SlowState, y: &FastState, fr: &FrameData) -> FastState {
    let abs_b = fr.abs_b;
    let bvec = abs_b * fr.b;
    let vhat = velocity_fluctuation(x, y, fr);
    let drho = spectral::derivative(&y.rho);
    let dvh = spectral::derivative(&y.v_high);
    FastState {
        rho: vhat.iter().zip(&drho).map(|(v, d)| v - abs_b * d).collect(),
        vbar1: abs_b * y.vbar2,
        vbar2: -abs_b * y.vbar1,
        u_plus: -abs_b * y.u_minus,
        u_minus: abs_b * y.u_plus,
        omega1: 2.0 * abs_b * y.omega2,
        omega2: -2.0 * abs_b * y.omega1,
        v_high: y
            .v_high
            .iter()
            .zip(&dvh)
            .map(|(v, d)| v.cross(&bvec) - abs_b * d)
            .collect(),
    }
}

/// Solves `D_y f_0(x)[δy] = source`.
///
/// The operator acts harmonic by harmonic. Scalars rotate at `|B|` (the
/// non-adiabatic pair `ω` at `2|B|`); harmonic `k ≥ 2` of `V̂₂₊` solves
/// `V⁺×B − k|B|V⁻ = s⁺`, `V⁻×B + k|B|V⁺ = s⁻`; `ρ̂` then follows from
/// `δV̂ − |B|∂θδρ̂ = s_ρ`. Mean and Nyquist components of `ρ̂` and the Nyquist
/// component of `V̂₂₊` lie outside the invertible range and are set to zero.
pub fn inv_dyf0(x: &SlowState, source: &FastState, model: &dyn MagneticField) -> Result<FastState> {
    let fr = frame(model, &x.xbar)?;
    let abs_b = fr.abs_b;
    let b = fr.b;
    let n = source.n();

    let u_plus = source.u_minus / abs_b;
    let u_minus = -source.u_plus / abs_b;
    let omega1 = -source.omega2 / (2.0 * abs_b);
    let omega2 = source.omega1 / (2.0 * abs_b);
    let vbar1 = -source.vbar2 / abs_b;
    let vbar2 = source.vbar1 / abs_b;

    let sv = spectral::analyze(&source.v_high);
    let mut dv = Harmonics::zeros(n);
    let perp = |a: &Vec3| a - b * b.dot(a);
    for k in 2..=sv.max_harmonic() {
        let kf = k as f64;
        let (sp, sm) = (sv.cos_k(k), sv.sin_k(k));
        let den = kf * kf - 1.0;
        let vp = (b * b.dot(&sm) / kf + (kf * perp(&sm) + sp.cross(&b)) / den) / abs_b;
        let vm = (-b * b.dot(&sp) / kf + (sm.cross(&b) - kf * perp(&sp)) / den) / abs_b;
        dv.set_k(k, vp, vm);
    }

    let sr = spectral::analyze(&source.rho);
    let mut dr = Harmonics::zeros(n);
    let om = fr.perp(omega1, omega2);
    let v1p = u_plus * b + om;
    let v1m = u_minus * b + b.cross(&om);
    for k in 1..=sr.max_harmonic() {
        let kf = k as f64;
        let (vp, vm) = if k == 1 { (v1p, v1m) } else { (dv.cos_k(k), dv.sin_k(k)) };
        let rho_minus = (vp - sr.cos_k(k)) / (kf * abs_b);
        let rho_plus = (sr.sin_k(k) - vm) / (kf * abs_b);
        dr.set_k(k, rho_plus, rho_minus);
    }

    Ok(FastState {
        rho: spectral::synthesize(&dr),
        vbar1,
        vbar2,
        u_plus,
        u_minus,
        omega1,
        omega2,
        v_high: spectral::synthesize(&dv),
    })
}

/// `D_y f_0(x)[δy]`, i.e. `f_0(x, δy)` with the `w⊥` offset removed.
pub fn dyf0(x: &SlowState, dy: &FastState, model: &dyn MagneticField) -> Result<FastState> {
    let fr = frame(model, &x.xbar)?;
    let linear_part = SlowState { w1: 0.0, w2: 0.0, ..*x };
    Ok(f0_with_frame(&linear_part, dy, &fr))
}
