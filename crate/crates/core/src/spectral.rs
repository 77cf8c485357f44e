//! Fourier tools for 2π-periodic vector profiles sampled on a uniform θ-grid.
//!
//! A profile with `N` samples `f_i = f(2πi/N)` is represented in real form as
//!
//! ```text
//! f(θ) = mean + Σ_{k=1}^{N/2-1} (cos_k cos kθ + sin_k sin kθ) + nyquist cos(Nθ/2)
//! ```
//!
//! The Nyquist mode has no derivative that is consistent on the grid, so the
//! spectral derivative drops it.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::fields::Vec3;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Grid angle `θ_i = 2πi/N`.
pub fn theta(n: usize, i: usize) -> f64 {
    2.0 * PI * i as f64 / n as f64
}

pub fn thetas(n: usize) -> Vec<f64> {
    (0..n).map(|i| theta(n, i)).collect()
}

/// Real Fourier coefficients of a vector profile. `cos[k-1]` and `sin[k-1]`
/// hold harmonic `k` for `k = 1..N/2-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonics {
    pub n: usize,
    pub mean: Vec3,
    pub cos: Vec<Vec3>,
    pub sin: Vec<Vec3>,
    pub nyquist: Vec3,
}

impl Harmonics {
    pub fn zeros(n: usize) -> Self {
        let m = n / 2 - 1;
        Harmonics {
            n,
            mean: Vec3::zeros(),
            cos: vec![Vec3::zeros(); m],
            sin: vec![Vec3::zeros(); m],
            nyquist: Vec3::zeros(),
        }
    }

    /// Highest non-Nyquist harmonic.
    pub fn max_harmonic(&self) -> usize {
        self.cos.len()
    }

    pub fn cos_k(&self, k: usize) -> Vec3 {
        self.cos[k - 1]
    }

    pub fn sin_k(&self, k: usize) -> Vec3 {
        self.sin[k - 1]
    }

    pub fn set_k(&mut self, k: usize, cos: Vec3, sin: Vec3) {
        self.cos[k - 1] = cos;
        self.sin[k - 1] = sin;
    }
}

fn check_len(n: usize) {
    assert!(
        n >= 4 && n.is_multiple_of(2),
        "θ-grid size must be even and at least 4, got {n}"
    );
}

/// Forward transform of a vector profile.
pub fn analyze(values: &[Vec3]) -> Harmonics {
    let n = values.len();
    check_len(n);
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    let mut out = Harmonics::zeros(n);
    let scale = 2.0 / n as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..3 {
        for (b, v) in buf.iter_mut().zip(values) {
            *b = Complex64::new(v[c], 0.0);
        }
        fft.process(&mut buf);
        out.mean[c] = buf[0].re / n as f64;
        out.nyquist[c] = buf[n / 2].re / n as f64;
        for k in 1..n / 2 {
            out.cos[k - 1][c] = scale * buf[k].re;
            out.sin[k - 1][c] = -scale * buf[k].im;
        }
    }
    out
}

/// Inverse of [`analyze`].
pub fn synthesize(h: &Harmonics) -> Vec<Vec3> {
    let n = h.n;
    check_len(n);
    let ifft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    let mut values = vec![Vec3::zeros(); n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..3 {
        buf[0] = Complex64::new(h.mean[c], 0.0);
        buf[n / 2] = Complex64::new(h.nyquist[c], 0.0);
        for k in 1..n / 2 {
            let z = Complex64::new(0.5 * h.cos[k - 1][c], -0.5 * h.sin[k - 1][c]);
            buf[k] = z;
            buf[n - k] = z.conj();
        }
        ifft.process(&mut buf);
        for (v, b) in values.iter_mut().zip(&buf) {
            v[c] = b.re;
        }
    }
    values
}

/// Profile built from a single harmonic `cos kθ · a + sin kθ · b`.
pub fn single_harmonic(n: usize, k: usize, a: Vec3, b: Vec3) -> Vec<Vec3> {
    (0..n)
        .map(|i| {
            let t = k as f64 * theta(n, i);
            t.cos() * a + t.sin() * b
        })
        .collect()
}

/// Spectral θ-derivative; the Nyquist mode is discarded.
pub fn derivative(values: &[Vec3]) -> Vec<Vec3> {
    let mut h = analyze(values);
    for k in 1..=h.max_harmonic() {
        let (a, b) = (h.cos_k(k), h.sin_k(k));
        let kf = k as f64;
        h.set_k(k, kf * b, -kf * a);
    }
    h.mean = Vec3::zeros();
    h.nyquist = Vec3::zeros();
    synthesize(&h)
}

/// The profile `θ ↦ f(θ + ψ)`, exact for band-limited data.
pub fn shift(values: &[Vec3], psi: f64) -> Vec<Vec3> {
    let mut h = analyze(values);
    for k in 1..=h.max_harmonic() {
        let (a, b) = (h.cos_k(k), h.sin_k(k));
        let (s, c) = (k as f64 * psi).sin_cos();
        h.set_k(k, a * c + b * s, b * c - a * s);
    }
    h.nyquist *= (0.5 * h.n as f64 * psi).cos();
    synthesize(&h)
}

/// Trapezoid mean `(1/2π)∮ f dθ`.
pub fn mean(values: &[Vec3]) -> Vec3 {
    values.iter().sum::<Vec3>() / values.len() as f64
}

pub fn mean_scalar(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `2⟨cos kθ f⟩` and `2⟨sin kθ f⟩` by trapezoid sums.
pub fn harmonic_pair(values: &[Vec3], k: usize) -> (Vec3, Vec3) {
    let n = values.len();
    let mut a = Vec3::zeros();
    let mut b = Vec3::zeros();
    for (i, v) in values.iter().enumerate() {
        let (s, c) = (k as f64 * theta(n, i)).sin_cos();
        a += c * v;
        b += s * v;
    }
    (2.0 * a / n as f64, 2.0 * b / n as f64)
}

pub fn sup_norm(values: &[Vec3]) -> f64 {
    values.iter().map(|v| v.amax()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn band_limited(n: usize, coeffs: &[(usize, [f64; 6])]) -> Vec<Vec3> {
        let mut out = vec![Vec3::new(0.3, -0.1, 0.2); n];
        for (k, c) in coeffs {
            let p = single_harmonic(n, *k, Vec3::new(c[0], c[1], c[2]), Vec3::new(c[3], c[4], c[5]));
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        out
    }

    #[test]
    fn analyze_recovers_coefficients() {
        let a = Vec3::new(1.0, -2.0, 0.5);
        let b = Vec3::new(0.25, 0.0, -1.5);
        let h = analyze(&single_harmonic(16, 3, a, b));
        assert_abs_diff_eq!(h.cos_k(3), a, epsilon = 1e-14);
        assert_abs_diff_eq!(h.sin_k(3), b, epsilon = 1e-14);
        assert_abs_diff_eq!(h.mean, Vec3::zeros(), epsilon = 1e-14);
        let (pa, pb) = harmonic_pair(&single_harmonic(16, 3, a, b), 3);
        assert_abs_diff_eq!(pa, a, epsilon = 1e-14);
        assert_abs_diff_eq!(pb, b, epsilon = 1e-14);
    }

    #[test]
    fn derivative_is_exact_on_band_limited_data() {
        let n = 32;
        let f = band_limited(
            n,
            &[
                (1, [1.0, 0.0, 2.0, 0.5, -1.0, 0.0]),
                (7, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]),
            ],
        );
        let d = derivative(&f);
        for i in 0..n {
            let t = theta(n, i);
            let expect = Vec3::new(1.0, 0.0, 2.0) * (-t.sin())
                + Vec3::new(0.5, -1.0, 0.0) * t.cos()
                + 7.0 * (Vec3::new(0.1, 0.2, 0.3) * (-(7.0 * t).sin()) + Vec3::new(0.4, 0.5, 0.6) * (7.0 * t).cos());
            assert_abs_diff_eq!(d[i], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn shift_quarter_turn_of_cosine() {
        let n = 16;
        let f = single_harmonic(n, 1, Vec3::x(), Vec3::zeros());
        let g = shift(&f, PI / 2.0);
        for i in 0..n {
            assert_abs_diff_eq!(g[i], Vec3::x() * (theta(n, i) + PI / 2.0).cos(), epsilon = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn round_trip(vals in proptest::collection::vec(-5.0f64..5.0, 48)) {
            let f: Vec<Vec3> = vals.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
            let g = synthesize(&analyze(&f));
            for (a, b) in f.iter().zip(&g) {
                prop_assert!((a - b).amax() < 1e-12);
            }
        }

        #[test]
        fn full_turn_shift_is_identity(vals in proptest::collection::vec(-5.0f64..5.0, 48)) {
            let f: Vec<Vec3> = vals.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
            let g = shift(&f, 2.0 * PI);
            for (a, b) in f.iter().zip(&g) {
                prop_assert!((a - b).amax() < 1e-12);
            }
        }

        #[test]
        fn shifts_compose(p in -3.0f64..3.0, q in -3.0f64..3.0, c in proptest::collection::vec(-1.0f64..1.0, 6)) {
            let f = band_limited(16, &[(2, [c[0], c[1], c[2], c[3], c[4], c[5]])]);
            let a = shift(&shift(&f, p), q);
            let b = shift(&f, p + q);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).amax() < 1e-12);
            }
        }
    }
}
