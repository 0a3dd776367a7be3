//! Adaptive integration of the Carathéodory-type Loewner–Kufarev ODEs.
//!
//! A Dormand–Prince 5(4) embedded pair with PI step-size control integrates
//! the scalar complex equation between driver breakpoints (steps never
//! straddle one). Three initial-condition regimes are exposed: forward data
//! at the left endpoint, decreasing data at zero with blow-up bracketing, and
//! reverse data at the right endpoint. The native chordal equation on the
//! half-plane is handled by [`chordal_solve`].

use num_complex::Complex64;

use crate::driver::DrivingFunction;
use crate::geometry::{DiskPoint, HalfPlanePoint};
use crate::herglotz::HerglotzField;
use crate::{Error, Result};

/// Tolerances and stopping rules for the adaptive stepper.
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Distance to the unit circle below which a decreasing trajectory is
    /// declared escaped.
    pub boundary_margin: f64,
    /// Chordal `|w - lambda|` threshold below which the point is declared
    /// absorbed by the hull.
    pub singularity_margin: f64,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            boundary_margin: 1e-9,
            singularity_margin: 1e-7,
            max_steps: 10_000_000,
        }
    }
}

impl SolverConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_step > 0.0) {
            return Err(Error::BadConfig {
                reason: "tolerances and max_step must be positive".into(),
            });
        }
        if !(self.boundary_margin > 0.0 && self.boundary_margin < 0.1) {
            return Err(Error::BadConfig {
                reason: "boundary_margin must lie in (0, 0.1)".into(),
            });
        }
        if !(self.singularity_margin > 0.0) {
            return Err(Error::BadConfig {
                reason: "singularity_margin must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Termination state of an integrated path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrajectoryStatus {
    Completed,
    /// Left the reference domain at the bracketed time.
    ExitedDomain(f64),
    /// Absorbed by the chordal singularity at the bracketed time.
    SingularityHit(f64),
    /// Adaptive control stalled; signals a mis-specified field.
    StepLimit,
}

/// A time-stamped solution path.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn end_value(&self) -> Complex64 {
        *self.values.last().unwrap()
    }

    pub fn is_completed(&self) -> bool {
        self.status == TrajectoryStatus::Completed
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FACC1: f64 = 5.0; // reciprocal of the maximal shrink factor
const FACC2: f64 = 0.1; // reciprocal of the maximal growth factor

/// One Dormand-Prince step of size `h`: fifth-order value and error estimate.
fn dp_step<F: Fn(f64, Complex64) -> Complex64>(
    f: &F,
    t: f64,
    w: Complex64,
    h: f64,
) -> (Complex64, Complex64) {
    let k1 = f(t, w);
    let k2 = f(t + C2 * h, w + h * (A21 * k1));
    let k3 = f(t + C3 * h, w + h * (A31 * k1 + A32 * k2));
    let k4 = f(t + C4 * h, w + h * (A41 * k1 + A42 * k2 + A43 * k3));
    let k5 = f(
        t + C5 * h,
        w + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
    );
    let k6 = f(
        t + h,
        w + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
    );
    let w5 = w + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = f(t + h, w5);
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    (w5, err)
}

/// Domain guards recognized by the stepper.
enum Guard<'a> {
    None,
    /// Escape through the unit circle: `|w| >= 1 - margin`.
    DiskExit { margin: f64 },
    /// Absorption by the chordal singularity or the real axis.
    Chordal {
        lambda: &'a DrivingFunction,
        margin: f64,
        axis_margin: f64,
    },
}

impl Guard<'_> {
    fn triggered(&self, t: f64, w: Complex64) -> bool {
        match self {
            Guard::None => false,
            Guard::DiskExit { margin } => w.norm() >= 1.0 - margin,
            Guard::Chordal {
                lambda,
                margin,
                axis_margin,
            } => {
                let l = lambda.eval_clamped(t);
                (w - l).norm() <= *margin || w.im <= axis_margin * (1.0 + w.norm())
            }
        }
    }

    /// Looser proximity test used when the step size underflows the f64 time
    /// resolution; square-root-type approaches reach this zone while the
    /// strict margin is unreachable in time.
    fn near(&self, t: f64, w: Complex64) -> bool {
        match self {
            Guard::None => false,
            Guard::DiskExit { margin } => w.norm() >= 1.0 - margin.sqrt(),
            Guard::Chordal {
                lambda,
                margin,
                axis_margin,
            } => {
                let l = lambda.eval_clamped(t);
                (w - l).norm() <= margin.sqrt() || w.im <= axis_margin.sqrt() * (1.0 + w.norm())
            }
        }
    }

    fn status_at(&self, t: f64) -> TrajectoryStatus {
        match self {
            Guard::None => TrajectoryStatus::Completed,
            Guard::DiskExit { .. } => TrajectoryStatus::ExitedDomain(t),
            Guard::Chordal { .. } => TrajectoryStatus::SingularityHit(t),
        }
    }
}

enum SpanOutcome {
    Reached(Complex64),
    Stopped(TrajectoryStatus, Complex64),
}

struct Stepper<'a, F: Fn(f64, Complex64) -> Complex64> {
    rhs: F,
    cfg: &'a SolverConfig,
    guard: Guard<'a>,
    /// Reject accepted values with modulus at or beyond this radius without
    /// consulting the guard (forward disk flows cannot leave the disk).
    hard_radius: Option<f64>,
    steps: usize,
    fac_old: f64,
    record: bool,
    times: Vec<f64>,
    values: Vec<Complex64>,
}

impl<'a, F: Fn(f64, Complex64) -> Complex64> Stepper<'a, F> {
    fn new(rhs: F, cfg: &'a SolverConfig, guard: Guard<'a>, record: bool) -> Self {
        Self {
            rhs,
            cfg,
            guard,
            hard_radius: None,
            steps: 0,
            fac_old: 1e-4,
            record,
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, w: Complex64) {
        if self.record {
            self.times.push(t);
            self.values.push(w);
        }
    }

    fn initial_step(&self, t0: f64, t1: f64, w0: Complex64) -> f64 {
        let span = t1 - t0;
        let sk = self.cfg.abs_tol + self.cfg.rel_tol * w0.norm();
        let f0 = (self.rhs)(t0, w0);
        let d0 = w0.norm() / sk;
        let d1 = f0.norm() / sk;
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * (d0 / d1)
        };
        h0 = h0.min(span).min(self.cfg.max_step);
        if !h0.is_finite() || h0 <= 0.0 {
            return (span * 1e-6).max(f64::MIN_POSITIVE);
        }
        let w1 = w0 + h0 * f0;
        let f1 = (self.rhs)(t0 + h0, w1);
        let d2 = (f1 - f0).norm() / sk / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(self.cfg.max_step)
    }

    /// Integrates one breakpoint-free span `[t0, t1]`.
    fn advance_span(
        &mut self,
        t0: f64,
        t1: f64,
        w_start: Complex64,
    ) -> Result<SpanOutcome> {
        let mut t = t0;
        let mut w = w_start;
        if self.guard.triggered(t, w) {
            return Ok(SpanOutcome::Stopped(self.guard.status_at(t), w));
        }
        let mut h = self.initial_step(t0, t1, w);
        let mut rejected = false;
        loop {
            if t >= t1 {
                return Ok(SpanOutcome::Reached(w));
            }
            let resolution = 4.0 * f64::EPSILON * t.abs().max(1.0);
            if h < resolution {
                if self.guard.near(t, w) {
                    return Ok(SpanOutcome::Stopped(self.guard.status_at(t), w));
                }
                return Ok(SpanOutcome::Stopped(TrajectoryStatus::StepLimit, w));
            }
            h = h.min(self.cfg.max_step);
            let mut lands_on_end = false;
            if t + 1.01 * h >= t1 {
                h = t1 - t;
                lands_on_end = true;
            }
            self.steps += 1;
            if self.steps > self.cfg.max_steps {
                return Ok(SpanOutcome::Stopped(TrajectoryStatus::StepLimit, w));
            }
            let (w_new, err_vec) = dp_step(&self.rhs, t, w, h);
            let sk = self.cfg.abs_tol + self.cfg.rel_tol * w.norm().max(w_new.norm());
            let mut err = err_vec.norm() / sk;
            if !w_new.is_finite() || !err.is_finite() {
                err = 1e10;
            }
            if let Some(radius) = self.hard_radius {
                if w_new.norm() >= radius {
                    err = err.max(1e10);
                }
            }
            let fac11 = err.max(1e-100).powf(EXPO1);
            if err <= 1.0 {
                if self.guard.triggered(t + h, w_new) {
                    let (tc, wc) = self.bisect_crossing(t, w, h);
                    self.push(tc, wc);
                    return Ok(SpanOutcome::Stopped(self.guard.status_at(tc), wc));
                }
                t = if lands_on_end { t1 } else { t + h };
                w = w_new;
                self.push(t, w);
                let fac = (fac11 / self.fac_old.powf(BETA) / SAFE).clamp(FACC2, FACC1);
                let mut h_new = h / fac;
                if rejected {
                    h_new = h_new.min(h);
                }
                self.fac_old = err.max(1e-4);
                rejected = false;
                h = h_new;
            } else {
                h /= (fac11 / SAFE).clamp(1.0 + 1e-6, FACC1);
                rejected = true;
            }
        }
    }

    /// Bisects the guard-crossing time inside an accepted step, to absolute
    /// accuracy `max(abs_tol, 1e-10)`.
    fn bisect_crossing(&self, t: f64, w: Complex64, h: f64) -> (f64, Complex64) {
        let tol = self.cfg.abs_tol.max(1e-10) * 0.5;
        let mut lo = 0.0_f64;
        let mut hi = h;
        let (mut w_hi, _) = dp_step(&self.rhs, t, w, h);
        for _ in 0..120 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (w_mid, _) = dp_step(&self.rhs, t, w, mid);
            if self.guard.triggered(t + mid, w_mid) {
                hi = mid;
                w_hi = w_mid;
            } else {
                lo = mid;
            }
        }
        (t + hi, w_hi)
    }
}

/// Splits `[s, t]` at the interior driver breakpoints.
fn spans(s: f64, t: f64, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > s + 1e-15 && b < t - 1e-15)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut prev = s;
    for b in cuts {
        out.push((prev, b));
        prev = b;
    }
    out.push((prev, t));
    out
}

fn check_interval(field: &HerglotzField, s: f64, t: f64) -> Result<()> {
    if field.is_half_plane() {
        return Err(Error::HalfPlaneField);
    }
    if !(s >= 0.0) || t < s {
        return Err(Error::BadInterval { s, t });
    }
    let horizon = field.horizon();
    if t > horizon * (1.0 + 1e-14) + 1e-300 {
        return Err(Error::OutsideHorizon { t, horizon });
    }
    Ok(())
}

fn run_spans<F: Fn(f64, Complex64) -> Complex64>(
    mut stepper: Stepper<'_, F>,
    s: f64,
    t: f64,
    z0: Complex64,
    breakpoints: &[f64],
) -> Trajectory {
    stepper.push(s, z0);
    let mut w = z0;
    let mut status = TrajectoryStatus::Completed;
    for (a, b) in spans(s, t, breakpoints) {
        match stepper.advance_span(a, b, w) {
            Ok(SpanOutcome::Reached(w_end)) => w = w_end,
            Ok(SpanOutcome::Stopped(st, w_end)) => {
                w = w_end;
                status = st;
                break;
            }
            Err(e) => {
                // Internal errors do not occur in advance_span today; keep the
                // trajectory well-formed if that changes.
                debug_assert!(false, "unexpected stepper error: {e}");
                status = TrajectoryStatus::StepLimit;
                break;
            }
        }
    }
    if !stepper.record {
        stepper.times.push(s);
        stepper.values.push(z0);
    }
    let mut times = stepper.times;
    let mut values = stepper.values;
    if status == TrajectoryStatus::Completed && *times.last().unwrap() < t {
        times.push(t);
        values.push(w);
    }
    Trajectory {
        times,
        values,
        status,
    }
}

/// Forward Loewner–Kufarev flow `dw/dxi = G(w, xi)` on `[s, t]` with
/// `w(s) = z`. Forward solutions of a generator field stay in the disk; the
/// trajectory completes unless adaptive control stalls.
pub fn solve_forward(
    field: &HerglotzField,
    z: DiskPoint,
    s: f64,
    t: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_interval(field, s, t)?;
    if s == t {
        return Ok(Trajectory {
            times: vec![s],
            values: vec![z.value()],
            status: TrajectoryStatus::Completed,
        });
    }
    let rhs = |xi: f64, w: Complex64| field.generator_unchecked(w, xi);
    let mut stepper = Stepper::new(rhs, cfg, Guard::None, true);
    stepper.hard_radius = Some(1.0);
    Ok(run_spans(stepper, s, t, z.value(), &field.breakpoints()))
}

/// Decreasing flow `dw/dt = -G(w, t)` from `w(0) = z`, integrated until
/// `t_end` or until the trajectory escapes through the unit circle; the
/// escape time is bracketed by bisection.
pub fn solve_decreasing(
    field: &HerglotzField,
    z: DiskPoint,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_interval(field, 0.0, t_end)?;
    if t_end == 0.0 {
        return Ok(Trajectory {
            times: vec![0.0],
            values: vec![z.value()],
            status: TrajectoryStatus::Completed,
        });
    }
    let rhs = |t: f64, w: Complex64| -field.generator_unchecked(w, t);
    let guard = Guard::DiskExit {
        margin: cfg.boundary_margin,
    };
    let stepper = Stepper::new(rhs, cfg, guard, true);
    Ok(run_spans(stepper, 0.0, t_end, z.value(), &field.breakpoints()))
}

/// Reverse flow with data at the right endpoint: `dw/dsigma = -G(w, sigma)`
/// on `[s, t]` with `w(t) = z`, integrated down to `sigma = s`. Solutions
/// exist on the whole interval; the value at `s` is returned.
pub fn solve_reverse_endpoint(
    field: &HerglotzField,
    z: DiskPoint,
    s: f64,
    t: f64,
    cfg: &SolverConfig,
) -> Result<DiskPoint> {
    cfg.validate()?;
    check_interval(field, s, t)?;
    if s == t {
        return Ok(z);
    }
    // Reflect time: v(u) = w(s + t - u) turns the right-endpoint problem into
    // a forward integration of dv/du = G(v, s + t - u) from u = s.
    let rhs = |u: f64, v: Complex64| field.generator_unchecked(v, s + t - u);
    let reflected: Vec<f64> = field.breakpoints().iter().map(|&b| s + t - b).collect();
    let mut stepper = Stepper::new(rhs, cfg, Guard::None, false);
    stepper.hard_radius = Some(1.0);
    let traj = run_spans(stepper, s, t, z.value(), &reflected);
    match traj.status {
        TrajectoryStatus::Completed => DiskPoint::new(traj.end_value()),
        _ => Err(Error::StepLimit {
            steps: cfg.max_steps,
            t: traj.end_time(),
        }),
    }
}

/// Direction of the native half-plane chordal flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChordalDirection {
    /// `dw/dt = 2/(w - lambda(t))`: hull growth, points can be absorbed.
    Grow,
    /// `dw/dt = -2/(w - lambda(t))`: the reversed sign; right-endpoint data
    /// is handled by the caller through a reflected driver.
    Ungrow,
}

/// Integrates the chordal equation on the upper half-plane from `w(0) = z`
/// until `t_end`. Growing trajectories end in `SingularityHit` when
/// `|w - lambda(t)|` falls below the singularity margin.
pub fn chordal_solve(
    lambda: &DrivingFunction,
    z: HalfPlanePoint,
    t_end: f64,
    direction: ChordalDirection,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(t_end >= 0.0) {
        return Err(Error::BadInterval { s: 0.0, t: t_end });
    }
    if t_end > lambda.horizon() * (1.0 + 1e-14) + 1e-300 {
        return Err(Error::OutsideHorizon {
            t: t_end,
            horizon: lambda.horizon(),
        });
    }
    if t_end == 0.0 {
        return Ok(Trajectory {
            times: vec![0.0],
            values: vec![z.value()],
            status: TrajectoryStatus::Completed,
        });
    }
    let sign = match direction {
        ChordalDirection::Grow => 1.0,
        ChordalDirection::Ungrow => -1.0,
    };
    let rhs = move |t: f64, w: Complex64| sign * 2.0 * (w - lambda.eval_clamped(t)).inv();
    let guard = Guard::Chordal {
        lambda,
        margin: cfg.singularity_margin,
        axis_margin: cfg.boundary_margin,
    };
    let stepper = Stepper::new(rhs, cfg, guard, true);
    Ok(run_spans(
        stepper,
        0.0,
        t_end,
        z.value(),
        lambda.breakpoints(),
    ))
}
