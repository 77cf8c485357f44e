//! Analytic magnetic field models.
//!
//! Every model provides a closed-form vector potential `A`, the field
//! `B = curl A`, and its Jacobian. [`frame`] turns those into the
//! field-aligned orthonormal frame `(b, e1, e2)` together with the geometric
//! scalars consumed by the fast-slow split: `∇|B|`, the curvature
//! `κ = b·∇b`, the torsion-like scalar `τ = b·∇×b`, `k∥ = b·∇ln|B|` and the
//! frame-rotation vector `R = (∇e1)·e2`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// |B| below this value is reported as a singular field.
pub const SINGULAR_FIELD_THRESHOLD: f64 = 1e-10;

/// Step used for the central difference of `e1` that produces `R`.
const FRAME_FD_STEP: f64 = 1e-5;

/// Ten-point Gauss–Legendre rule mapped onto `[0, 1]` as `(node, weight)`.
pub const GAUSS_LEGENDRE_10: [(f64, f64); 10] = {
    const XI: [f64; 5] = [
        0.148_874_338_981_631_2,
        0.433_395_394_129_247_2,
        0.679_409_568_299_024_4,
        0.865_063_366_688_984_5,
        0.973_906_528_517_171_7,
    ];
    const W: [f64; 5] = [
        0.295_524_224_714_752_9,
        0.269_266_719_309_996_3,
        0.219_086_362_515_982_0,
        0.149_451_349_150_580_6,
        0.066_671_344_308_688_1,
    ];
    let mut rule = [(0.0, 0.0); 10];
    let mut i = 0;
    while i < 5 {
        rule[2 * i] = (0.5 * (1.0 - XI[i]), 0.5 * W[i]);
        rule[2 * i + 1] = (0.5 * (1.0 + XI[i]), 0.5 * W[i]);
        i += 1;
    }
    rule
};

/// Capability shared by all field models.
pub trait MagneticField: Send + Sync {
    fn name(&self) -> &'static str;

    fn vector_potential(&self, x: &Vec3) -> Vec3;

    fn field(&self, x: &Vec3) -> Vec3;

    /// Jacobian `J[(i, j)] = ∂B_i/∂x_j`.
    fn jacobian(&self, x: &Vec3) -> Mat3;

    fn in_domain(&self, _x: &Vec3) -> bool {
        true
    }

    /// `δB = ∫₀¹ ρ·∇B(x̄ + λερ) dλ`, so that `B(x̄ + ερ) = B(x̄) + ε δB`.
    ///
    /// The default evaluates the λ-integral with a ten-point Gauss rule.
    fn delta_b(&self, xbar: &Vec3, rho: &Vec3, eps: f64) -> Vec3 {
        GAUSS_LEGENDRE_10
            .iter()
            .map(|&(lambda, weight)| weight * (self.jacobian(&(xbar + lambda * eps * rho)) * rho))
            .sum()
    }
}

/// The built-in field models.
///
/// * `Uniform`: `B = b0 ẑ`, gauge `A = (0, b0 x, 0)`.
/// * `LinearGradient`: `B = b0 (1 + αx) ẑ`, `A = (0, b0 (x + αx²/2), 0)`.
///   Not force free; only `B = curl A` is required.
/// * `ScrewPinch`: a straight-axis helical field with a mirror component,
///   `A = b0 (−y(1+γz)/2, x(1+γz)/2, −q r²/2 − s r⁴/4)`, giving
///   `B = b0 (−γx/2 − (q + s r²) y, −γy/2 + (q + s r²) x, 1 + γz)`
///   with `r² = x² + y²`. Here `q` is the twist, `s` the shear and `γ` the
///   mirror strength. Off axis it has nonzero `κ`, `τ`, `k∥` and `∇|B|`.
///   The domain is `1 + γz > 0`, where `B_z` cannot vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldModel {
    Uniform {
        #[serde(default = "one")]
        b0: f64,
    },
    #[serde(alias = "gradb")]
    LinearGradient {
        #[serde(default = "one")]
        b0: f64,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    ScrewPinch {
        #[serde(default = "one")]
        b0: f64,
        #[serde(default = "default_twist")]
        twist: f64,
        #[serde(default = "default_shear")]
        shear: f64,
        #[serde(default = "default_mirror")]
        mirror: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.1
}
fn default_twist() -> f64 {
    0.5
}
fn default_shear() -> f64 {
    0.2
}
fn default_mirror() -> f64 {
    0.2
}

impl FieldModel {
    pub fn uniform(b0: f64) -> Self {
        FieldModel::Uniform { b0 }
    }

    pub fn linear_gradient(b0: f64, alpha: f64) -> Self {
        FieldModel::LinearGradient { b0, alpha }
    }

    pub fn screw_pinch(b0: f64, twist: f64, shear: f64, mirror: f64) -> Self {
        FieldModel::ScrewPinch {
            b0,
            twist,
            shear,
            mirror,
        }
    }

    /// Screw pinch with the default parameters (`q = 0.5, s = 0.2, γ = 0.2`).
    pub fn default_screw_pinch() -> Self {
        Self::screw_pinch(1.0, default_twist(), default_shear(), default_mirror())
    }

    /// One instance of every model with default parameters.
    pub fn catalogue() -> [FieldModel; 3] {
        [
            Self::uniform(1.0),
            Self::linear_gradient(1.0, default_alpha()),
            Self::default_screw_pinch(),
        ]
    }

    /// Whether `∇B` is independent of position, making `δB = ρ·∇B` exact.
    pub fn is_linear(&self) -> bool {
        match *self {
            FieldModel::Uniform { .. } | FieldModel::LinearGradient { .. } => true,
            FieldModel::ScrewPinch { shear, .. } => shear == 0.0,
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, FieldModel::Uniform { .. })
    }
}

impl MagneticField for FieldModel {
    fn name(&self) -> &'static str {
        match self {
            FieldModel::Uniform { .. } => "uniform",
            FieldModel::LinearGradient { .. } => "linear-gradient",
            FieldModel::ScrewPinch { .. } => "screw-pinch",
        }
    }

    fn vector_potential(&self, x: &Vec3) -> Vec3 {
        match *self {
            FieldModel::Uniform { b0 } => Vec3::new(0.0, b0 * x.x, 0.0),
            FieldModel::LinearGradient { b0, alpha } => Vec3::new(0.0, b0 * (x.x + 0.5 * alpha * x.x * x.x), 0.0),
            FieldModel::ScrewPinch {
                b0,
                twist,
                shear,
                mirror,
            } => {
                let r2 = x.x * x.x + x.y * x.y;
                let m = 1.0 + mirror * x.z;
                Vec3::new(
                    -0.5 * b0 * x.y * m,
                    0.5 * b0 * x.x * m,
                    -b0 * (0.5 * twist * r2 + 0.25 * shear * r2 * r2),
                )
            }
        }
    }

    fn field(&self, x: &Vec3) -> Vec3 {
        match *self {
            FieldModel::Uniform { b0 } => Vec3::new(0.0, 0.0, b0),
            FieldModel::LinearGradient { b0, alpha } => Vec3::new(0.0, 0.0, b0 * (1.0 + alpha * x.x)),
            FieldModel::ScrewPinch {
                b0,
                twist,
                shear,
                mirror,
            } => {
                let r2 = x.x * x.x + x.y * x.y;
                let rot = twist + shear * r2;
                Vec3::new(
                    b0 * (-0.5 * mirror * x.x - rot * x.y),
                    b0 * (-0.5 * mirror * x.y + rot * x.x),
                    b0 * (1.0 + mirror * x.z),
                )
            }
        }
    }

    fn jacobian(&self, x: &Vec3) -> Mat3 {
        match *self {
            FieldModel::Uniform { .. } => Mat3::zeros(),
            FieldModel::LinearGradient { b0, alpha } => {
                let mut j = Mat3::zeros();
                j[(2, 0)] = b0 * alpha;
                j
            }
            FieldModel::ScrewPinch {
                b0,
                twist,
                shear,
                mirror,
            } => {
                let (px, py) = (x.x, x.y);
                let r2 = px * px + py * py;
                Mat3::new(
                    -0.5 * mirror - 2.0 * shear * px * py,
                    -twist - shear * (r2 + 2.0 * py * py),
                    0.0,
                    twist + shear * (r2 + 2.0 * px * px),
                    -0.5 * mirror + 2.0 * shear * px * py,
                    0.0,
                    0.0,
                    0.0,
                    mirror,
                ) * b0
            }
        }
    }

    fn in_domain(&self, x: &Vec3) -> bool {
        if !(x.x.is_finite() && x.y.is_finite() && x.z.is_finite()) {
            return false;
        }
        match *self {
            FieldModel::Uniform { .. } => true,
            FieldModel::LinearGradient { alpha, .. } => 1.0 + alpha * x.x > 0.0,
            FieldModel::ScrewPinch { mirror, .. } => 1.0 + mirror * x.z > 0.0,
        }
    }

    fn delta_b(&self, xbar: &Vec3, rho: &Vec3, eps: f64) -> Vec3 {
        if self.is_linear() {
            self.jacobian(xbar) * rho
        } else {
            GAUSS_LEGENDRE_10
                .iter()
                .map(|&(lambda, weight)| weight * (self.jacobian(&(xbar + lambda * eps * rho)) * rho))
                .sum()
        }
    }
}

pub fn eval_a(model: &dyn MagneticField, x: &Vec3) -> Vec3 {
    model.vector_potential(x)
}

pub fn eval_b(model: &dyn MagneticField, x: &Vec3) -> Result<Vec3> {
    check_domain(model, x)?;
    Ok(model.field(x))
}

pub fn eval_grad_b(model: &dyn MagneticField, x: &Vec3) -> Result<Mat3> {
    check_domain(model, x)?;
    Ok(model.jacobian(x))
}

pub fn check_domain(model: &dyn MagneticField, x: &Vec3) -> Result<()> {
    if model.in_domain(x) {
        Ok(())
    } else {
        Err(Error::OutsideDomain {
            model: model.name(),
            position: [x.x, x.y, x.z],
        })
    }
}

/// Field-aligned frame and geometric scalars at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameData {
    pub b: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    pub abs_b: f64,
    pub grad_abs_b: Vec3,
    /// `κ = b·∇b`.
    pub kappa: Vec3,
    /// `τ = b·∇×b`.
    pub tau: f64,
    /// `k∥ = b·∇ln|B|`.
    pub kpar: f64,
    /// `R = (∇e1)·e2`, i.e. `R_i = ∂_i e1 · e2`.
    pub r: Vec3,
    /// `∇b` with `grad_b[(i, j)] = ∂_i b_j`.
    pub grad_b: Mat3,
    /// Field Jacobian `jac[(i, j)] = ∂B_i/∂x_j`.
    pub jac: Mat3,
}

impl FrameData {
    /// `a·∇b·c = a_i ∂_i b_j c_j`.
    pub fn dir_grad_b(&self, a: &Vec3, c: &Vec3) -> f64 {
        a.dot(&(self.grad_b * c))
    }

    /// Perpendicular vector from frame components.
    pub fn perp(&self, c1: f64, c2: f64) -> Vec3 {
        c1 * self.e1 + c2 * self.e2
    }
}

/// The perpendicular unit pair `(e1, e2)` for a unit vector `b`.
///
/// `e1` is the normalized projection of `x̂` off `b` (of `ŷ` when `b` is within
/// 1e−6 of `±x̂`), and `e2 = b × e1`, so that `b = e1 × e2`.
pub fn perpendicular_pair(b: &Vec3) -> (Vec3, Vec3) {
    let mut reference = Vec3::x();
    if reference.cross(b).norm() < 1e-6 {
        reference = Vec3::y();
    }
    let e1 = (reference - reference.dot(b) * b).normalize();
    let e2 = b.cross(&e1);
    (e1, e2)
}

fn unit_field(model: &dyn MagneticField, x: &Vec3) -> Vec3 {
    model.field(x).normalize()
}

fn e1_at(model: &dyn MagneticField, x: &Vec3) -> Vec3 {
    perpendicular_pair(&unit_field(model, x)).0
}

/// Field-aligned frame at `x`.
pub fn frame(model: &dyn MagneticField, x: &Vec3) -> Result<FrameData> {
    check_domain(model, x)?;
    let bvec = model.field(x);
    let abs_b = bvec.norm();
    if !(abs_b > SINGULAR_FIELD_THRESHOLD) {
        return Err(Error::singular(x, abs_b));
    }
    let b = bvec / abs_b;
    let (e1, e2) = perpendicular_pair(&b);
    let jac = model.jacobian(x);

    let grad_abs_b = jac.transpose() * b;
    let grad_b = (jac.transpose() - grad_abs_b * b.transpose()) / abs_b;
    let kappa = grad_b.transpose() * b;
    let curl_b = Vec3::new(
        jac[(2, 1)] - jac[(1, 2)],
        jac[(0, 2)] - jac[(2, 0)],
        jac[(1, 0)] - jac[(0, 1)],
    );
    let tau = b.dot(&curl_b) / abs_b;
    let kpar = b.dot(&grad_abs_b) / abs_b;

    let mut r = Vec3::zeros();
    for i in 0..3 {
        let mut step = Vec3::zeros();
        step[i] = FRAME_FD_STEP;
        let de1 = (e1_at(model, &(x + step)) - e1_at(model, &(x - step))) / (2.0 * FRAME_FD_STEP);
        r[i] = de1.dot(&e2);
    }

    Ok(FrameData {
        b,
        e1,
        e2,
        abs_b,
        grad_abs_b,
        kappa,
        tau,
        kpar,
        r,
        grad_b,
        jac,
    })
}

/// Central-difference helpers used by the self-checks.
pub mod fd {
    use super::{MagneticField, Mat3, Vec3};

    pub fn curl_a(model: &dyn MagneticField, x: &Vec3, h: f64) -> Vec3 {
        let j = jacobian_of(|p| model.vector_potential(p), x, h);
        Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
    }

    pub fn div_b(model: &dyn MagneticField, x: &Vec3, h: f64) -> f64 {
        jacobian_of(|p| model.field(p), x, h).trace()
    }

    pub fn jacobian_b(model: &dyn MagneticField, x: &Vec3, h: f64) -> Mat3 {
        jacobian_of(|p| model.field(p), x, h)
    }

    /// `J[(i, j)] = ∂f_i/∂x_j` by central differences.
    pub fn jacobian_of(f: impl Fn(&Vec3) -> Vec3, x: &Vec3, h: f64) -> Mat3 {
        let mut j = Mat3::zeros();
        for col in 0..3 {
            let mut step = Vec3::zeros();
            step[col] = h;
            let d = (f(&(x + step)) - f(&(x - step))) / (2.0 * h);
            j.set_column(col, &d);
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng) -> Vec3 {
        Vec3::new(
            rng.gen_range(-0.8..0.8),
            rng.gen_range(-0.8..0.8),
            rng.gen_range(-0.8..0.8),
        )
    }

    #[test]
    fn gauss_rule_is_exact_for_degree_19() {
        for p in 0..20 {
            let q: f64 = GAUSS_LEGENDRE_10.iter().map(|&(x, w)| w * x.powi(p)).sum();
            assert_abs_diff_eq!(q, 1.0 / (p as f64 + 1.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn uniform_values() {
        let m = FieldModel::uniform(1.0);
        assert_eq!(eval_a(&m, &Vec3::new(1.0, 0.0, 0.0)), Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(eval_b(&m, &Vec3::new(3.0, -2.0, 5.0)).unwrap(), Vec3::z());
        assert_eq!(eval_grad_b(&m, &Vec3::new(0.3, 0.1, 0.0)).unwrap(), Mat3::zeros());
        let f = frame(&m, &Vec3::new(0.2, 0.4, -0.1)).unwrap();
        assert_eq!(f.kappa, Vec3::zeros());
        assert_eq!(f.tau, 0.0);
        assert_eq!(f.kpar, 0.0);
        assert_eq!(f.r, Vec3::zeros());
        assert_eq!(f.e1, Vec3::x());
        assert_eq!(f.e2, Vec3::y());
    }

    #[test]
    fn gradient_values_at_origin() {
        let m = FieldModel::linear_gradient(1.0, 0.1);
        let x = Vec3::zeros();
        assert_eq!(eval_a(&m, &x), Vec3::zeros());
        assert_eq!(eval_b(&m, &x).unwrap(), Vec3::z());
        let f = frame(&m, &x).unwrap();
        assert_abs_diff_eq!(f.grad_abs_b, Vec3::new(0.1, 0.0, 0.0), epsilon = 1e-15);
        assert_eq!(f.kpar, 0.0);
        assert_eq!(f.kappa, Vec3::zeros());
    }

    #[test]
    fn gradient_domain_violation() {
        let m = FieldModel::linear_gradient(1.0, 0.1);
        assert!(matches!(
            eval_b(&m, &Vec3::new(-20.0, 0.0, 0.0)),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn singular_field_is_rejected() {
        let m = FieldModel::uniform(1e-12);
        assert!(matches!(frame(&m, &Vec3::zeros()), Err(Error::SingularField { .. })));
    }

    #[test]
    fn screw_pinch_has_curvature_off_axis() {
        let m = FieldModel::default_screw_pinch();
        let x = Vec3::new(0.3, -0.2, 0.1);
        let f = frame(&m, &x).unwrap();
        assert!(f.kappa.norm() > 1e-3);
        assert!(f.tau.abs() > 1e-3);
        // κ against the finite-difference derivative of b along b
        let h = 1e-4;
        let kappa_fd = (unit_field(&m, &(x + h * f.b)) - unit_field(&m, &(x - h * f.b))) / (2.0 * h);
        assert_abs_diff_eq!(f.kappa, kappa_fd, epsilon = 1e-6);
    }

    #[test]
    fn curl_divergence_and_jacobian_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for model in FieldModel::catalogue() {
            for _ in 0..100 {
                let x = random_point(&mut rng);
                let b = model.field(&x);
                let curl = fd::curl_a(&model, &x, 1e-4);
                assert!((curl - b).norm() <= 1e-6 * (1.0 + b.norm()), "{}", model.name());
                assert!(fd::div_b(&model, &x, 1e-4).abs() <= 1e-6);
                let jfd = fd::jacobian_b(&model, &x, 1e-4);
                assert!((jfd - model.jacobian(&x)).abs().max() <= 1e-6);
            }
        }
    }

    #[test]
    fn frame_invariants_hold_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for model in FieldModel::catalogue() {
            for _ in 0..100 {
                let x = random_point(&mut rng);
                let f = frame(&model, &x).unwrap();
                assert_abs_diff_eq!(f.b.norm(), 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(f.e1.norm(), 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(f.e2.norm(), 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(f.e1.dot(&f.e2), 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(f.e1.cross(&f.e2), f.b, epsilon = 1e-12);
                assert_abs_diff_eq!(f.kappa.dot(&f.b), 0.0, epsilon = 1e-12);
                let h = 1e-4;
                let kfd = (unit_field(&model, &(x + h * f.b)) - unit_field(&model, &(x - h * f.b))) / (2.0 * h);
                assert!((kfd - f.kappa).norm() <= 1e-6);
            }
        }
    }

    #[test]
    fn reference_vector_fallback() {
        let (e1, e2) = perpendicular_pair(&Vec3::x());
        assert_abs_diff_eq!(e1.cross(&e2), Vec3::x(), epsilon = 1e-15);
        assert_abs_diff_eq!(e1.dot(&Vec3::x()), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn delta_b_quadrature_matches_secant() {
        let m = FieldModel::default_screw_pinch();
        let xbar = Vec3::new(0.2, 0.1, -0.3);
        let rho = Vec3::new(0.4, -0.7, 0.2);
        let eps = 0.05;
        let secant = (m.field(&(xbar + eps * rho)) - m.field(&xbar)) / eps;
        assert_abs_diff_eq!(m.delta_b(&xbar, &rho, eps), secant, epsilon = 1e-12);
    }
}
