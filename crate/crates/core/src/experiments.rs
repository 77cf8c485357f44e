//! Configuration-driven experiments with CSV output and pass/fail checks.
//!
//! Every experiment returns a [`Report`]: a CSV table with a stable header
//! and a list of [`Check`]s against tolerances. Scan points run on a rayon
//! pool whose size is capped by `GYROLOOP_THREADS`; results are collected in
//! configuration order, so output does not depend on the thread count.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind, StepperKind};
use crate::error::{Error, Result};
use crate::fastslow::{decompose, dyf0, f0, inv_dyf0, reconstruct, SlowState};
use crate::fields::{fd, frame, FieldModel, MagneticField, Vec3};
use crate::fit::{fit_loglog, LineFit};
use crate::guiding_center::{drift_velocity as first_order_drift, integrate_gc};
use crate::hamiltonian::noether_j;
use crate::loopspace::{loop_action, loop_energy, step_implicit_midpoint, step_rk4_loop, MidpointOptions, PhaseLoop};
use crate::lorentz::{self, boris_step_for_period, gyro_average, integrate, ParticleState, Stepper};
use crate::sampling::{random_fast, random_slow};
use crate::slow_manifold::{
    build_loop, invariance_residual, relative_difference, shape, y0_star, y1_star, y1_star_generic, ShapeOrder,
};

pub const ORBIT_HEADER: [&str; 9] = ["t", "x", "y", "z", "vx", "vy", "vz", "energy", "mu0"];
pub const GC_HEADER: [&str; 9] = ["t", "xbar_x", "xbar_y", "xbar_z", "ubar", "w1", "w2", "mu0", "energy"];
pub const LOOP_HEADER: [&str; 11] = [
    "t",
    "S",
    "energy",
    "action",
    "xbar_x",
    "xbar_y",
    "xbar_z",
    "vbar_x",
    "vbar_y",
    "vbar_z",
    "fast_norm",
];
pub const RESIDUAL_HEADER: [&str; 3] = ["epsilon", "order", "residual"];
pub const DRIFT_HEADER: [&str; 4] = ["epsilon", "drift_gc", "drift_oracle", "rel_error"];
pub const NOETHER_HEADER: [&str; 4] = ["epsilon", "J", "eps_mu0", "abs_diff"];
pub const STICK_HEADER: [&str; 2] = ["epsilon", "deviation"];
pub const FASTSLOW_HEADER: [&str; 6] = [
    "sample",
    "roundtrip_state",
    "roundtrip_loop",
    "inverse_error",
    "shape_zero",
    "y1_rel_error",
];
pub const FIELDS_HEADER: [&str; 5] = ["point", "div_b", "curl_residual", "jacobian_residual", "frame_residual"];

/// One pass/fail comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition, e.g. `<= 1e-9`.
    pub condition: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Check {
        Check {
            name: name.into(),
            value,
            condition: format!("<= {bound:e}"),
            passed: value <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Check {
        Check {
            name: name.into(),
            value,
            condition: format!(">= {bound}"),
            passed: value >= bound,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Check {
        Check {
            name: name.into(),
            value,
            condition: format!("in [{lo}, {hi}]"),
            passed: (lo..=hi).contains(&value),
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {:e} ({})", self.name, self.value, self.condition)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub kind: ExperimentKind,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub checks: Vec<Check>,
    pub fits: Vec<(String, LineFit)>,
}

impl Report {
    fn new(kind: ExperimentKind, header: &[&str]) -> Report {
        Report {
            kind,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            fits: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Fitted slopes and check verdicts, one per line.
    pub fn summary(&self) -> String {
        let mut lines = vec![format!("{}: {} rows", self.kind.name(), self.rows.len())];
        for (name, fit) in &self.fits {
            lines.push(format!(
                "fit {name}: slope {:.6} intercept {:.6} r2 {:.6}",
                fit.slope, fit.intercept, fit.r_squared
            ));
        }
        lines.extend(self.checks.iter().map(|c| c.to_string()));
        lines.join("\n")
    }
}

/// Locale-independent scientific notation; round-trips exactly.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Thread pool capped by `GYROLOOP_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("GYROLOOP_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("GYROLOOP_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))
}

/// Runs the experiment named by `kind` (or by the configuration).
pub fn run(cfg: &ExperimentConfig, kind: Option<ExperimentKind>) -> Result<Report> {
    let kind = match (kind, cfg.kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!(
                "configuration is for `{}` but `{}` was requested",
                b.name(),
                a.name()
            )))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(Error::Config("no experiment kind given".into())),
    };
    thread_pool()?.install(|| match kind {
        ExperimentKind::Orbit => run_orbit(cfg),
        ExperimentKind::Loop => run_loop(cfg),
        ExperimentKind::Gc => run_gc(cfg),
        ExperimentKind::ResidualScan => run_residual_scan(cfg),
        ExperimentKind::CompareDrift => run_compare_drift(cfg),
        ExperimentKind::NoetherScan => run_noether_scan(cfg),
        ExperimentKind::Stick => run_stick(cfg),
        ExperimentKind::FastslowCheck => run_fastslow_check(cfg),
        ExperimentKind::FieldsCheck => run_fields_check(cfg),
    })
}

fn max_relative_change(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut it = values.into_iter();
    let Some(first) = it.next() else { return 0.0 };
    let scale = first.abs().max(f64::MIN_POSITIVE);
    it.fold(0.0, |m, v| f64::max(m, (v - first).abs() / scale))
}

fn fit_and_record(report: &mut Report, name: &str, xs: &[f64], ys: &[f64]) -> Result<Option<LineFit>> {
    if xs.len() < 2 {
        return Ok(None);
    }
    let fit = fit_loglog(xs, ys)?;
    report.fits.push((name.to_string(), fit));
    Ok(Some(fit))
}

/// Initial particle: the configured one, or the `θ = 0` point of the
/// order-`order` slow-manifold loop over the configured slow state.
pub fn initial_particle(cfg: &ExperimentConfig, eps: f64) -> Result<ParticleState> {
    match &cfg.particle {
        Some(p) => Ok(p.state()),
        None => {
            let l = build_loop(&cfg.slow.state(), eps, &cfg.field, cfg.order, cfg.n_theta)?;
            Ok(ParticleState::new(l.x[0], l.v[0]))
        }
    }
}

fn run_orbit(cfg: &ExperimentConfig) -> Result<Report> {
    let eps = cfg.epsilon;
    let stepper = match cfg.integrator.stepper {
        StepperKind::Boris => Stepper::Boris,
        StepperKind::Rk4 => Stepper::Rk4,
        StepperKind::Midpoint => {
            return Err(Error::Config(
                "orbit experiments support the `boris` and `rk4` steppers".into(),
            ))
        }
    };
    let s0 = initial_particle(cfg, eps)?;
    let traj = integrate(
        &s0,
        eps,
        &cfg.field,
        cfg.integrator.t_final,
        cfg.integrator.step(eps),
        stepper,
    )?;
    let mut report = Report::new(ExperimentKind::Orbit, &ORBIT_HEADER);
    for s in traj.iter().step_by(cfg.integrator.output_every) {
        let mut row = vec![num(s.t)];
        row.extend(s.x.iter().chain(s.v.iter()).map(|c| num(*c)));
        row.push(num(s.energy()));
        row.push(num(s.mu(&cfg.field)));
        report.push(row);
    }
    let default_energy = if stepper == Stepper::Boris { 1e-10 } else { 1e-6 };
    let de = max_relative_change(traj.iter().map(|s| s.energy()));
    report.checks.push(Check::at_most(
        "energy drift",
        de,
        cfg.tolerance.energy.unwrap_or(default_energy),
    ));
    if let Some(tol) = cfg.tolerance.mu {
        let dm = max_relative_change(traj.iter().map(|s| s.mu(&cfg.field)));
        report.checks.push(Check::at_most("mu0 variation", dm, tol));
    }
    Ok(report)
}

/// One output sample of loop dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSample {
    pub t: f64,
    pub phase: f64,
    pub energy: f64,
    pub action: f64,
    pub xbar: Vec3,
    pub vbar: Vec3,
    /// Distance of the fast variables from the truncated slow manifold.
    pub fast_norm: f64,
}

/// Loop time stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoopStepper {
    Rk4,
    Midpoint(MidpointOptions),
}

fn loop_sample(l: &PhaseLoop, t: f64, eps: f64, model: &dyn MagneticField, order: ShapeOrder) -> Result<LoopSample> {
    let (x, y) = decompose(l, eps, model)?;
    let ys = shape(&x, eps, model, order, l.n())?;
    Ok(LoopSample {
        t,
        phase: l.phase,
        energy: loop_energy(l),
        action: loop_action(l, eps, model),
        xbar: l.mean_position(),
        vbar: l.mean_velocity(),
        fast_norm: (&y - &ys).norm(),
    })
}

/// Evolves the slow-manifold loop over `x` and samples it every
/// `output_every` steps, including the initial and final states.
#[allow(clippy::too_many_arguments)]
pub fn evolve_loop(
    x: &SlowState,
    eps: f64,
    model: &dyn MagneticField,
    order: ShapeOrder,
    n: usize,
    stepper: LoopStepper,
    dt: f64,
    t_final: f64,
    output_every: usize,
) -> Result<Vec<LoopSample>> {
    let steps = (t_final / dt).round() as usize;
    let mut l = build_loop(x, eps, model, order, n)?;
    let mut out = vec![loop_sample(&l, 0.0, eps, model, order)?];
    for i in 1..=steps {
        l = match stepper {
            LoopStepper::Rk4 => step_rk4_loop(&l, dt, eps, model)?,
            LoopStepper::Midpoint(opts) => step_implicit_midpoint(&l, dt, eps, model, &opts)?.0,
        };
        if !l.is_finite() {
            return Err(Error::InvalidState(format!("loop became non-finite at step {i}")));
        }
        if i % output_every == 0 || i == steps {
            out.push(loop_sample(&l, i as f64 * dt, eps, model, order)?);
        }
    }
    Ok(out)
}

fn run_loop(cfg: &ExperimentConfig) -> Result<Report> {
    let eps = cfg.epsilon;
    let ig = &cfg.integrator;
    let stepper = match ig.stepper {
        StepperKind::Rk4 => LoopStepper::Rk4,
        StepperKind::Midpoint => LoopStepper::Midpoint(ig.midpoint_options()),
        StepperKind::Boris => {
            return Err(Error::Config(
                "loop experiments support the `rk4` and `midpoint` steppers".into(),
            ))
        }
    };
    let samples = evolve_loop(
        &cfg.slow.state(),
        eps,
        &cfg.field,
        cfg.order,
        cfg.n_theta,
        stepper,
        ig.step(eps),
        ig.t_final,
        ig.output_every,
    )?;
    let mut report = Report::new(ExperimentKind::Loop, &LOOP_HEADER);
    for s in &samples {
        let mut row = vec![num(s.t), num(s.phase), num(s.energy), num(s.action)];
        row.extend(s.xbar.iter().chain(s.vbar.iter()).map(|c| num(*c)));
        row.push(num(s.fast_norm));
        report.push(row);
    }
    let de = max_relative_change(samples.iter().map(|s| s.energy));
    let da = max_relative_change(samples.iter().map(|s| s.action));
    match stepper {
        LoopStepper::Rk4 => {
            report.checks.push(Check::at_most(
                "loop energy drift",
                de,
                cfg.tolerance.energy.unwrap_or(1e-8),
            ));
            report.checks.push(Check::at_most(
                "loop action drift",
                da,
                cfg.tolerance.action.unwrap_or(1e-6),
            ));
        }
        LoopStepper::Midpoint(_) => {
            report.checks.push(Check::at_most(
                "loop energy drift",
                de,
                cfg.tolerance.energy.unwrap_or(1e-9),
            ));
            if let Some(tol) = cfg.tolerance.action {
                report.checks.push(Check::at_most("loop action drift", da, tol));
            }
        }
    }
    Ok(report)
}

fn run_gc(cfg: &ExperimentConfig) -> Result<Report> {
    let dt = cfg.integrator.dt.unwrap_or(1e-3);
    let traj = integrate_gc(
        &cfg.slow.state(),
        cfg.epsilon,
        &cfg.field,
        cfg.integrator.t_final,
        dt,
        cfg.order,
    )?;
    let mut report = Report::new(ExperimentKind::Gc, &GC_HEADER);
    for s in traj.samples.iter().step_by(cfg.integrator.output_every) {
        let x = &s.state;
        let mut row = vec![num(s.t)];
        row.extend(x.xbar.iter().map(|c| num(*c)));
        row.extend([x.ubar, x.w1, x.w2, s.mu0, s.energy].map(num));
        report.push(row);
    }
    let (dm, de) = traj.relative_drifts();
    let default = if cfg.order == ShapeOrder::Order0 {
        Some(1e-9)
    } else {
        None
    };
    if let Some(tol) = cfg.tolerance.mu.or(default) {
        report.checks.push(Check::at_most("mu0 drift", dm, tol));
    }
    if let Some(tol) = cfg.tolerance.energy.or(default) {
        report.checks.push(Check::at_most("energy drift", de, tol));
    }
    Ok(report)
}

fn run_residual_scan(cfg: &ExperimentConfig) -> Result<Report> {
    let x = cfg.slow.state();
    let epss = cfg.epsilon_list();
    let jobs: Vec<(ShapeOrder, f64)> = cfg
        .orders
        .iter()
        .flat_map(|o| epss.iter().map(move |e| (*o, *e)))
        .collect();
    let residuals: Vec<f64> = jobs
        .par_iter()
        .map(|(o, e)| invariance_residual(&x, *e, &cfg.field, *o, cfg.n_theta))
        .collect::<Result<_>>()?;
    let mut report = Report::new(ExperimentKind::ResidualScan, &RESIDUAL_HEADER);
    for ((o, e), r) in jobs.iter().zip(&residuals) {
        report.push(vec![num(*e), o.as_index().to_string(), num(*r)]);
    }
    for o in &cfg.orders {
        let rs: Vec<f64> = jobs
            .iter()
            .zip(&residuals)
            .filter(|((oo, _), _)| oo == o)
            .map(|(_, r)| *r)
            .collect();
        let name = format!("order {}", o.as_index());
        if cfg.field.is_uniform() {
            let worst = rs.iter().cloned().fold(0.0, f64::max);
            report.checks.push(Check::at_most(
                format!("{name} residual"),
                worst,
                cfg.tolerance.residual.unwrap_or(1e-9),
            ));
        } else if let Some(fit) = fit_and_record(&mut report, &name, &epss, &rs)? {
            let expected = cfg.tolerance.slope.unwrap_or((o.as_index() + 1) as f64);
            let band = cfg
                .tolerance
                .slope_band
                .unwrap_or(if *o == ShapeOrder::Order0 { 0.15 } else { 0.2 });
            report.checks.push(Check::within(
                format!("{name} slope"),
                fit.slope,
                expected - band,
                expected + band,
            ));
        }
    }
    Ok(report)
}

/// A full-orbit versus guiding-center drift comparison at one ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMeasurement {
    pub epsilon: f64,
    /// Fitted velocity of the boxcar-averaged Boris orbit, perpendicular to `b(x̄0)`.
    pub oracle: Vec3,
    /// Same fit applied to the order-1 guiding-center track.
    pub gc: Vec3,
    /// `−ε(μ0∇|B| + ū²κ)×b/|B|` at `x̄0`.
    pub first_order: Vec3,
    /// `|oracle − gc| / |first_order|`.
    pub rel_error: f64,
}

/// Starts a Boris orbit at the `θ = 0` point of the order-1 loop over `x`
/// and an order-1 guiding center at `x`, runs both for `periods`
/// gyroperiods with the Boris step tuned so `samples_per_period` steps make
/// one discrete gyration, applies the same one-period boxcar to both tracks,
/// drops the first period and fits velocities.
pub fn measure_drift(
    model: &FieldModel,
    x: &SlowState,
    eps: f64,
    periods: f64,
    samples_per_period: usize,
    n: usize,
) -> Result<DriftMeasurement> {
    let fr = frame(model, &x.xbar)?;
    let l = build_loop(x, eps, model, ShapeOrder::Order1, n)?;
    let s0 = ParticleState::new(l.x[0], l.v[0]);
    let dt = boris_step_for_period(eps, fr.abs_b, samples_per_period);
    let window = samples_per_period as f64 * dt;
    let t_final = periods * window;
    let orbit = integrate(&s0, eps, model, t_final, dt, Stepper::Boris)?;
    let gc = integrate_gc(x, eps, model, t_final, dt, ShapeOrder::Order1)?;
    let gc_track: Vec<ParticleState> = gc
        .samples
        .iter()
        .map(|s| ParticleState {
            x: s.state.xbar,
            v: Vec3::zeros(),
            t: s.t,
        })
        .collect();
    let perp = |v: Vec3| v - v.dot(&fr.b) * fr.b;
    let oracle = perp(lorentz::drift_velocity(&gyro_average(&orbit, window), window)?);
    let gc_v = perp(lorentz::drift_velocity(&gyro_average(&gc_track, window), window)?);
    let first_order = first_order_drift(x, eps, model)?;
    Ok(DriftMeasurement {
        epsilon: eps,
        oracle,
        gc: gc_v,
        first_order,
        rel_error: (oracle - gc_v).norm() / first_order.norm(),
    })
}

/// Per-decade factor by which `errors` shrink from the largest to the
/// smallest ε.
pub fn ratio_per_decade(epss: &[f64], errors: &[f64]) -> f64 {
    let (imax, imin) = (0..epss.len()).fold((0, 0), |(a, b), i| {
        (
            if epss[i] > epss[a] { i } else { a },
            if epss[i] < epss[b] { i } else { b },
        )
    });
    let decades = (epss[imax] / epss[imin]).log10();
    (errors[imax] / errors[imin]).powf(1.0 / decades)
}

fn run_compare_drift(cfg: &ExperimentConfig) -> Result<Report> {
    let x = cfg.slow.state();
    let epss = cfg.epsilon_list();
    let ig = &cfg.integrator;
    let ms: Vec<DriftMeasurement> = epss
        .par_iter()
        .map(|e| measure_drift(&cfg.field, &x, *e, ig.periods, ig.samples_per_period, cfg.n_theta))
        .collect::<Result<_>>()?;
    let mut report = Report::new(ExperimentKind::CompareDrift, &DRIFT_HEADER);
    let factor = cfg.tolerance.relative.unwrap_or(10.0);
    for m in &ms {
        report.push(vec![
            num(m.epsilon),
            num(m.gc.norm()),
            num(m.oracle.norm()),
            num(m.rel_error),
        ]);
        report.checks.push(Check::at_most(
            format!("rel_error at eps {:e}", m.epsilon),
            m.rel_error,
            factor * m.epsilon,
        ));
    }
    if epss.len() >= 2 {
        let errs: Vec<f64> = ms.iter().map(|m| m.rel_error).collect();
        fit_and_record(&mut report, "rel_error", &epss, &errs)?;
        report.checks.push(Check::within(
            "error ratio per decade",
            ratio_per_decade(&epss, &errs),
            3.0,
            30.0,
        ));
    }
    Ok(report)
}

fn run_noether_scan(cfg: &ExperimentConfig) -> Result<Report> {
    let x = cfg.slow.state();
    let epss = cfg.epsilon_list();
    let mu0 = crate::guiding_center::mu0(&x, &cfg.field)?;
    let js: Vec<f64> = epss
        .par_iter()
        .map(|e| noether_j(&x, *e, &cfg.field, cfg.order, cfg.n_theta))
        .collect::<Result<_>>()?;
    let mut report = Report::new(ExperimentKind::NoetherScan, &NOETHER_HEADER);
    let diffs: Vec<f64> = epss.iter().zip(&js).map(|(e, j)| (j - e * mu0).abs()).collect();
    for ((e, j), d) in epss.iter().zip(&js).zip(&diffs) {
        report.push(vec![num(*e), num(*j), num(e * mu0), num(*d)]);
    }
    if let Some(fit) = fit_and_record(&mut report, "abs_diff", &epss, &diffs)? {
        let expected = cfg.tolerance.slope.unwrap_or(2.0);
        let band = cfg.tolerance.slope_band.unwrap_or(0.2);
        report.checks.push(Check::within(
            "abs_diff slope",
            fit.slope,
            expected - band,
            expected + band,
        ));
    }
    Ok(report)
}

/// `max_t ‖y(t) − y*(x(t))‖` along RK4 loop dynamics started on the
/// truncated slow manifold, sampled every `sample_every` steps.
#[allow(clippy::too_many_arguments)]
pub fn stick_deviation(
    model: &dyn MagneticField,
    x: &SlowState,
    eps: f64,
    order: ShapeOrder,
    n: usize,
    dt: f64,
    t_final: f64,
    sample_every: usize,
) -> Result<f64> {
    let samples = evolve_loop(x, eps, model, order, n, LoopStepper::Rk4, dt, t_final, sample_every)?;
    Ok(samples.iter().map(|s| s.fast_norm).fold(0.0, f64::max))
}

fn run_stick(cfg: &ExperimentConfig) -> Result<Report> {
    let x = cfg.slow.state();
    let epss = cfg.epsilon_list();
    let ig = &cfg.integrator;
    let devs: Vec<f64> = epss
        .par_iter()
        .map(|e| {
            stick_deviation(
                &cfg.field,
                &x,
                *e,
                cfg.order,
                cfg.n_theta,
                ig.step(*e),
                ig.t_final,
                ig.sample_every,
            )
        })
        .collect::<Result<_>>()?;
    let mut report = Report::new(ExperimentKind::Stick, &STICK_HEADER);
    for (e, d) in epss.iter().zip(&devs) {
        report.push(vec![num(*e), num(*d)]);
    }
    if let Some(fit) = fit_and_record(&mut report, "deviation", &epss, &devs)? {
        let min = cfg.tolerance.min_slope.unwrap_or(cfg.order.as_index() as f64 + 0.8);
        report.checks.push(Check::at_least("deviation slope", fit.slope, min));
    }
    Ok(report)
}

/// Self-check metrics of the fast-slow split at one random point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastSlowSample {
    /// `decompose ∘ reconstruct` against the identity.
    pub roundtrip_state: f64,
    /// `reconstruct ∘ decompose` against the identity.
    pub roundtrip_loop: f64,
    /// `D_y f0 [inv_dyf0(s)] − s` with the Jacobian action by central differences.
    pub inverse_error: f64,
    /// `‖f0(x, y0*(x))‖`.
    pub shape_zero: f64,
    /// Closed-form `y1*` against the generic solve, relative.
    pub y1_rel_error: f64,
}

pub fn fastslow_sample(model: &FieldModel, seed: u64, eps: f64, n: usize) -> Result<FastSlowSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_slow(&mut rng);
    let y = random_fast(&mut rng, n);
    let source = random_fast(&mut rng, n);

    let l = reconstruct(&x, &y, eps, model)?;
    let (x2, y2) = decompose(&l, eps, model)?;
    let roundtrip_state = (x2 - x).max_abs().max((&y2 - &y).norm());
    let l2 = reconstruct(&x2, &y2, eps, model)?;
    let roundtrip_loop = l2.max_difference(&l);

    let y0 = y0_star(&x, model, n)?;
    let d = inv_dyf0(&x, &source, model)?;
    let h = 1e-4;
    let fp = f0(&x, &y0.combine(1.0, &d, h), model)?;
    let fm = f0(&x, &y0.combine(1.0, &d, -h), model)?;
    let action = fp.combine(0.5 / h, &fm, -0.5 / h);
    let inverse_error = (&action - &source).norm();
    debug_assert!((&dyf0(&x, &d, model)? - &action).norm() < 1e-8);

    let shape_zero = f0(&x, &y0, model)?.norm();
    let y1_rel_error = relative_difference(&y1_star(&x, model, n)?, &y1_star_generic(&x, model, n)?, 1e-12);
    Ok(FastSlowSample {
        roundtrip_state,
        roundtrip_loop,
        inverse_error,
        shape_zero,
        y1_rel_error,
    })
}

fn run_fastslow_check(cfg: &ExperimentConfig) -> Result<Report> {
    let samples: Vec<FastSlowSample> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| fastslow_sample(&cfg.field, cfg.seed.wrapping_add(i), cfg.epsilon, cfg.n_theta))
        .collect::<Result<_>>()?;
    let mut report = Report::new(ExperimentKind::FastslowCheck, &FASTSLOW_HEADER);
    for (i, s) in samples.iter().enumerate() {
        report.push(vec![
            i.to_string(),
            num(s.roundtrip_state),
            num(s.roundtrip_loop),
            num(s.inverse_error),
            num(s.shape_zero),
            num(s.y1_rel_error),
        ]);
    }
    let worst = |f: fn(&FastSlowSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    let t = &cfg.tolerance;
    let rt = t.roundtrip.unwrap_or(1e-12);
    report
        .checks
        .push(Check::at_most("roundtrip_state", worst(|s| s.roundtrip_state), rt));
    report
        .checks
        .push(Check::at_most("roundtrip_loop", worst(|s| s.roundtrip_loop), rt));
    report.checks.push(Check::at_most(
        "inverse_error",
        worst(|s| s.inverse_error),
        t.inverse.unwrap_or(1e-7),
    ));
    report.checks.push(Check::at_most(
        "shape_zero",
        worst(|s| s.shape_zero),
        t.shape.unwrap_or(1e-10),
    ));
    if !cfg.field.is_uniform() {
        report.checks.push(Check::at_most(
            "y1_rel_error",
            worst(|s| s.y1_rel_error),
            t.relative.unwrap_or(1e-6),
        ));
    }
    Ok(report)
}

fn run_fields_check(cfg: &ExperimentConfig) -> Result<Report> {
    let model = &cfg.field;
    let h = 1e-5;
    let rows: Vec<[f64; 4]> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i));
            let p = random_slow(&mut rng).xbar;
            let fr = frame(model, &p)?;
            let div = fd::div_b(model, &p, h).abs();
            let curl = (fd::curl_a(model, &p, h) - model.field(&p)).amax();
            let jac = (fd::jacobian_b(model, &p, h) - model.jacobian(&p)).amax();
            let orth = [
                fr.b.dot(&fr.e1).abs(),
                fr.b.dot(&fr.e2).abs(),
                fr.e1.dot(&fr.e2).abs(),
                (fr.e1.norm() - 1.0).abs(),
                (fr.b.cross(&fr.e1) - fr.e2).amax(),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            Ok([div, curl, jac, orth])
        })
        .collect::<Result<_>>()?;
    let mut report = Report::new(ExperimentKind::FieldsCheck, &FIELDS_HEADER);
    for (i, r) in rows.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(r.iter().map(|v| num(*v)));
        report.push(row);
    }
    let worst = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    let tol = cfg.tolerance.residual.unwrap_or(1e-8);
    report.checks.push(Check::at_most("div_b", worst(0), tol));
    report.checks.push(Check::at_most("curl_residual", worst(1), tol));
    report.checks.push(Check::at_most("jacobian_residual", worst(2), tol));
    report.checks.push(Check::at_most("frame_residual", worst(3), 1e-12));
    Ok(report)
}
