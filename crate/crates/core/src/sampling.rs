//! Random test points for scans and checks.

use rand::Rng;

use crate::fastslow::{FastState, SlowState};
use crate::fields::Vec3;
use crate::spectral::{self, Harmonics};

fn unit_box<R: Rng>(rng: &mut R, half_width: f64) -> Vec3 {
    Vec3::new(
        rng.gen_range(-half_width..half_width),
        rng.gen_range(-half_width..half_width),
        rng.gen_range(-half_width..half_width),
    )
}

/// `x̄` in `[−½, ½]³`, `ū, w1, w2` in `[−1, 1]`, `𝒮` in `[0, 1)`.
pub fn random_slow<R: Rng>(rng: &mut R) -> SlowState {
    SlowState {
        xbar: unit_box(rng, 0.5),
        ubar: rng.gen_range(-1.0..1.0),
        w1: rng.gen_range(-1.0..1.0),
        w2: rng.gen_range(-1.0..1.0),
        scaled_phase: rng.gen_range(0.0..1.0),
    }
}

/// Grid values with random harmonics `kmin..=kmax` decaying like `1/k²`.
pub fn band_limited<R: Rng>(rng: &mut R, n: usize, kmin: usize, kmax: usize) -> Vec<Vec3> {
    let mut h = Harmonics::zeros(n);
    for k in kmin..=kmax {
        let scale = 1.0 / (k * k) as f64;
        let (a, b) = (unit_box(rng, 1.0), unit_box(rng, 1.0));
        h.set_k(k, a * scale, b * scale);
    }
    spectral::synthesize(&h)
}

/// A fast state satisfying the structural constraints, without Nyquist
/// content.
pub fn random_fast<R: Rng>(rng: &mut R, n: usize) -> FastState {
    FastState {
        rho: band_limited(rng, n, 1, n / 2 - 1),
        vbar1: rng.gen_range(-1.0..1.0),
        vbar2: rng.gen_range(-1.0..1.0),
        u_plus: rng.gen_range(-1.0..1.0),
        u_minus: rng.gen_range(-1.0..1.0),
        omega1: rng.gen_range(-1.0..1.0),
        omega2: rng.gen_range(-1.0..1.0),
        v_high: band_limited(rng, n, 2, n / 2 - 1),
    }
}
