//! Two-parameter families built from a Herglotz field: evolution families,
//! reverse evolution families, decreasing Loewner chains, the clamped time
//! reversal connecting the two directions, the radial increasing-chain limit,
//! and the two-point regularity check.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::geometry::DiskPoint;
use crate::herglotz::{FieldKind, HerglotzField};
use crate::solver::{
    solve_decreasing, solve_forward, solve_reverse_endpoint, SolverConfig, TrajectoryStatus,
};
use crate::{Error, Result};

/// Which composition law the family satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `phi_{s,t} = phi_{u,t} ∘ phi_{s,u}`: flow of the forward ODE.
    Forward,
    /// `phi_{s,t} = phi_{s,u} ∘ phi_{u,t}`: right-endpoint data.
    Reverse,
}

type MemoKey = (u64, u64, u64, u64);

fn memo_key(s: f64, t: f64, z: Complex64) -> MemoKey {
    (s.to_bits(), t.to_bits(), z.re.to_bits(), z.im.to_bits())
}

#[derive(Default)]
struct MemoState {
    declared: HashSet<MemoKey>,
    cache: HashMap<MemoKey, Complex64>,
}

// one allocation per handle, behind an Arc; the size skew is irrelevant
#[allow(clippy::large_enum_variant)]
enum Backend {
    Solver {
        field: HerglotzField,
        cfg: SolverConfig,
        memo: Mutex<MemoState>,
    },
    /// `phi^T_{s,t} := phi_{max(0,T-t), max(0,T-s)}` of the inner handle.
    TimeReversed { inner: FamilyHandle, big_t: f64 },
}

/// An evaluable two-parameter family `phi_{s,t}(z)` backed by the solver,
/// memoizing values on explicitly declared `(s, t, z)` grids. Cheap to clone;
/// clones share the memo.
#[derive(Clone)]
pub struct FamilyHandle {
    direction: Direction,
    backend: Arc<Backend>,
}

impl std::fmt::Debug for FamilyHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FamilyHandle")
            .field("direction", &self.direction)
            .finish_non_exhaustive()
    }
}

impl FamilyHandle {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Largest admissible `t`; infinite for time-reversed handles, whose
    /// clamping rule extends them to all parameter pairs.
    pub fn horizon(&self) -> f64 {
        match &*self.backend {
            Backend::Solver { field, .. } => field.horizon(),
            Backend::TimeReversed { .. } => f64::INFINITY,
        }
    }

    /// Marks grid keys whose values may be retained in the memo.
    pub fn declare_grid(&self, points: &[Complex64], pairs: &[(f64, f64)]) {
        if let Backend::Solver { memo, .. } = &*self.backend {
            let mut state = memo.lock().unwrap();
            for &(s, t) in pairs {
                for &z in points {
                    state.declared.insert(memo_key(s, t, z));
                }
            }
        }
    }

    /// Evaluates `phi_{s,t}(z)`.
    pub fn evaluate(&self, s: f64, t: f64, z: Complex64) -> Result<Complex64> {
        if t < s || s < 0.0 {
            return Err(Error::BadInterval { s, t });
        }
        match &*self.backend {
            Backend::Solver { field, cfg, memo } => {
                let horizon = field.horizon();
                if t > horizon * (1.0 + 1e-14) + 1e-300 {
                    return Err(Error::OutsideHorizon { t, horizon });
                }
                let key = memo_key(s, t, z);
                if let Some(v) = memo.lock().unwrap().cache.get(&key) {
                    return Ok(*v);
                }
                let zp = DiskPoint::new(z)?;
                let value = match self.direction {
                    Direction::Forward => {
                        let traj = solve_forward(field, zp, s, t, cfg)?;
                        if !traj.is_completed() {
                            return Err(Error::StepLimit {
                                steps: cfg.max_steps,
                                t: traj.end_time(),
                            });
                        }
                        traj.end_value()
                    }
                    Direction::Reverse => {
                        solve_reverse_endpoint(field, zp, s, t, cfg)?.value()
                    }
                };
                let mut state = memo.lock().unwrap();
                if state.declared.contains(&key) {
                    state.cache.insert(key, value);
                }
                Ok(value)
            }
            Backend::TimeReversed { inner, big_t } => {
                let clamp = |x: f64| (big_t - x).max(0.0);
                inner.evaluate(clamp(t), clamp(s), z)
            }
        }
    }

    pub fn evaluate_point(&self, s: f64, t: f64, z: DiskPoint) -> Result<DiskPoint> {
        DiskPoint::new(self.evaluate(s, t, z.value())?)
    }
}

fn new_solver_handle(
    field: HerglotzField,
    cfg: SolverConfig,
    direction: Direction,
) -> Result<FamilyHandle> {
    cfg.validate()?;
    if field.is_half_plane() {
        return Err(Error::HalfPlaneField);
    }
    Ok(FamilyHandle {
        direction,
        backend: Arc::new(Backend::Solver {
            field,
            cfg,
            memo: Mutex::new(MemoState::default()),
        }),
    })
}

/// The evolution family of the field: `phi_{s,t}(z) = w_{z,s}(t)` with forward
/// data at the left endpoint.
pub fn evolution_family(field: HerglotzField, cfg: SolverConfig) -> Result<FamilyHandle> {
    new_solver_handle(field, cfg, Direction::Forward)
}

/// The reverse evolution family of the field: `phi_{s,t}(z) = w_{z,t}(s)` with
/// data at the right endpoint; globally defined self-maps.
pub fn reverse_family(field: HerglotzField, cfg: SolverConfig) -> Result<FamilyHandle> {
    new_solver_handle(field, cfg, Direction::Reverse)
}

/// The clamped time reversal `phi^T_{s,t} := phi_{max(0,T-t), max(0,T-s)}`,
/// which swaps the composition law (forward <-> reverse). Applying it twice
/// restores the original values on `[0, T]`.
pub fn duality_transform(handle: &FamilyHandle, big_t: f64) -> Result<FamilyHandle> {
    if big_t > handle.horizon() * (1.0 + 1e-14) {
        return Err(Error::HorizonTooShort {
            needed: big_t,
            horizon: handle.horizon(),
        });
    }
    let direction = match handle.direction {
        Direction::Forward => Direction::Reverse,
        Direction::Reverse => Direction::Forward,
    };
    Ok(FamilyHandle {
        direction,
        backend: Arc::new(Backend::TimeReversed {
            inner: handle.clone(),
            big_t,
        }),
    })
}

/// The decreasing Loewner chain `f_t := phi_{0,t}` of the reverse family,
/// with its inverse maps realized by the decreasing initial value problem.
#[derive(Clone, Debug)]
pub struct DecreasingChain {
    family: FamilyHandle,
    field: HerglotzField,
    cfg: SolverConfig,
}

pub fn decreasing_chain(field: HerglotzField, cfg: SolverConfig) -> Result<DecreasingChain> {
    let family = reverse_family(field.clone(), cfg)?;
    Ok(DecreasingChain { family, field, cfg })
}

impl DecreasingChain {
    /// `f_t(z)`.
    pub fn map(&self, t: f64, z: Complex64) -> Result<Complex64> {
        self.family.evaluate(0.0, t, z)
    }

    pub fn family(&self) -> &FamilyHandle {
        &self.family
    }

    pub fn field(&self) -> &HerglotzField {
        &self.field
    }

    pub fn cfg(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn horizon(&self) -> f64 {
        self.field.horizon()
    }
}

/// Either the preimage `g_t(z)` or the domain time at which `z` leaves the
/// shrinking domains. Membership in `Omega_t` is data, not an error.
#[derive(Clone, Copy, Debug)]
pub enum ChainPreimage {
    Inside(DiskPoint),
    OutOfDomain(f64),
}

/// `g_t(z) = w_z(t)` through the decreasing initial value problem; returns
/// the escape time when `z` is no longer in the image domain `Omega_t`.
pub fn chain_inverse(chain: &DecreasingChain, z: DiskPoint, t: f64) -> Result<ChainPreimage> {
    let traj = solve_decreasing(&chain.field, z, t, &chain.cfg)?;
    match traj.status {
        TrajectoryStatus::Completed => match DiskPoint::new(traj.end_value()) {
            Ok(p) => Ok(ChainPreimage::Inside(p)),
            // Completed within the construction margin of the circle: the
            // point is escaping at this very time.
            Err(_) => Ok(ChainPreimage::OutOfDomain(traj.end_time())),
        },
        TrajectoryStatus::ExitedDomain(t_exit) => Ok(ChainPreimage::OutOfDomain(t_exit)),
        TrajectoryStatus::SingularityHit(t_exit) => Ok(ChainPreimage::OutOfDomain(t_exit)),
        TrajectoryStatus::StepLimit => Err(Error::StepLimit {
            steps: chain.cfg.max_steps,
            t: traj.end_time(),
        }),
    }
}

/// The domain time `t(z) = sup { t : z in Omega_t }`, capped at the chain
/// horizon (a returned value equal to the horizon means the trajectory
/// survived the whole window).
pub fn domain_time(chain: &DecreasingChain, z: DiskPoint) -> Result<f64> {
    let horizon = chain.horizon();
    let traj = solve_decreasing(&chain.field, z, horizon, &chain.cfg)?;
    match traj.status {
        TrajectoryStatus::Completed => Ok(horizon),
        TrajectoryStatus::ExitedDomain(t_exit) | TrajectoryStatus::SingularityHit(t_exit) => {
            Ok(t_exit)
        }
        TrajectoryStatus::StepLimit => Err(Error::StepLimit {
            steps: chain.cfg.max_steps,
            t: traj.end_time(),
        }),
    }
}

/// The normalized increasing radial chain, realized as the truncated limit
/// `f_s ≈ e^U phi_{s,U}` with a doubling acceptance test on the truncation.
#[derive(Clone, Debug)]
pub struct IncreasingChainRadial {
    family: FamilyHandle,
    truncation: f64,
}

/// Builds the increasing chain of a radial field, accepting the truncation
/// `T` once the `T` and `2T` approximants agree to 1e-6 on `|z| <= 0.5`.
pub fn increasing_chain_radial(
    field: &HerglotzField,
    truncation: f64,
    cfg: SolverConfig,
) -> Result<IncreasingChainRadial> {
    if !matches!(field.kind(), FieldKind::Radial { .. }) {
        return Err(Error::BadConfig {
            reason: "increasing chains are constructed for radial fields".into(),
        });
    }
    let needed = 2.0 * truncation;
    if needed > field.horizon() * (1.0 + 1e-14) {
        return Err(Error::HorizonTooShort {
            needed,
            horizon: field.horizon(),
        });
    }
    // phi_{s,U} decays like e^{-U} before the e^{U} rescaling; the error
    // control must stay purely relative down to that scale.
    let cfg = SolverConfig {
        abs_tol: cfg.abs_tol.min(1e-300),
        ..cfg
    };
    let family = evolution_family(field.clone(), cfg)?;
    let probes = [
        Complex64::new(0.5, 0.0),
        Complex64::new(-0.4, 0.2),
        Complex64::new(0.1, -0.45),
        Complex64::new(-0.2, -0.3),
        Complex64::new(0.3, 0.35),
    ];
    let mut worst = 0.0_f64;
    for &z in &probes {
        let at_t = truncation.exp() * family.evaluate(0.0, truncation, z)?;
        let at_2t = needed.exp() * family.evaluate(0.0, needed, z)?;
        worst = worst.max((at_t - at_2t).norm());
    }
    if worst >= 1e-6 {
        return Err(Error::ChainNotConverged {
            truncation,
            delta: worst,
        });
    }
    Ok(IncreasingChainRadial {
        family,
        truncation: needed,
    })
}

impl IncreasingChainRadial {
    /// `f_s(z) ≈ e^U phi_{s,U}(z)` at the accepted truncation `U`.
    pub fn map(&self, s: f64, z: Complex64) -> Result<Complex64> {
        Ok(self.truncation.exp() * self.family.evaluate(s, self.truncation, z)?)
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn family(&self) -> &FamilyHandle {
        &self.family
    }

    /// `f_s'(0)` by a trapezoidal Cauchy integral on a small circle; equals
    /// `e^s` for the normalized chain up to solver error.
    pub fn derivative_at_origin(&self, s: f64) -> Result<Complex64> {
        let m = 32;
        let rho = 0.4;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let theta = std::f64::consts::TAU * j as f64 / m as f64;
            let zj = Complex64::from_polar(rho, theta);
            let fj = self.map(s, zj)?;
            acc += fj * Complex64::from_polar(1.0, -theta);
        }
        Ok(acc / (m as f64 * rho))
    }
}

/// Chebyshev-like 5x5 spatial grid in `|z| <= 0.6`.
pub fn default_spatial_grid() -> Vec<Complex64> {
    let mut pts = Vec::with_capacity(25);
    for j in 0..5 {
        let r = 0.6 * (std::f64::consts::PI * (2.0 * j as f64 + 1.0) / 20.0).cos();
        for k in 0..5 {
            let theta = std::f64::consts::TAU * k as f64 / 5.0 + 0.37;
            pts.push(Complex64::from_polar(r, theta));
        }
    }
    pts
}

/// Ten deterministic `(s, u, t)` triples inside the window.
pub fn default_time_triples(window: (f64, f64)) -> Vec<(f64, f64, f64)> {
    let (t0, t1) = window;
    let span = t1 - t0;
    (0..10)
        .map(|i| {
            let a = t0 + span * (i as f64) / 12.0;
            let b = a + span / 6.0;
            let c = a + span / 3.0;
            (a, b.min(t1), c.min(t1))
        })
        .collect()
}

/// Sampled values `f_{t_i}(z_j)` of a chain on an explicit grid; raw input
/// for the two-point regularity check, so that adversarial (corrupted)
/// sample sets can be examined too.
#[derive(Clone, Debug)]
pub struct ChainSamples {
    pub times: Vec<f64>,
    pub points: Vec<Complex64>,
    pub values: Vec<Vec<Complex64>>,
}

impl ChainSamples {
    pub fn new(times: Vec<f64>, points: Vec<Complex64>, values: Vec<Vec<Complex64>>) -> Result<Self> {
        if times.len() != values.len() || values.iter().any(|row| row.len() != points.len()) {
            return Err(Error::BadConfig {
                reason: "sample matrix shape must be times x points".into(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotoneSamples);
        }
        Ok(Self {
            times,
            points,
            values,
        })
    }

    pub fn from_chain(
        chain: &DecreasingChain,
        times: Vec<f64>,
        points: Vec<Complex64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(times.len());
        for &t in &times {
            let row: Result<Vec<Complex64>> =
                points.iter().map(|&z| chain.map(t, z)).collect();
            values.push(row?);
        }
        Self::new(times, points, values)
    }
}

/// Outcome of the two-point regularity check.
#[derive(Clone, Debug)]
pub struct TwoPointReport {
    /// Discrete total variation of `t -> f_t(zeta_j)` for the two marked points.
    pub total_variation: [f64; 2],
    /// Empirical ratio `sup_z |f_t(z)-f_s(z)| / (|Δf(zeta_1)|+|Δf(zeta_2)|)`
    /// maximized over grid pairs, per refinement level (coarse to fine).
    pub level_ratios: Vec<f64>,
    pub max_ratio: f64,
    pub pass: bool,
}

const VACUOUS_EPS: f64 = 1e-13;

/// Tests whether two marked trajectories control the whole chain: the ratio
/// of the sup-displacement to the two-point displacement must stay bounded
/// (growth below 5% per grid-refinement level). A finite limit is evidence of
/// the two-point characterization; an infinite ratio (third point moves while
/// the marked points freeze) flags a corrupted chain.
pub fn two_point_check(
    samples: &ChainSamples,
    zeta1: DiskPoint,
    zeta2: DiskPoint,
    big_t: f64,
) -> Result<TwoPointReport> {
    if (zeta1.value() - zeta2.value()).norm() < 1e-14 {
        return Err(Error::CoincidentPoints);
    }
    let find = |z: DiskPoint| {
        samples
            .points
            .iter()
            .position(|&p| (p - z.value()).norm() < 1e-12)
            .ok_or_else(|| Error::BadConfig {
                reason: "marked point is not among the sampled points".into(),
            })
    };
    let i1 = find(zeta1)?;
    let i2 = find(zeta2)?;
    let active: Vec<usize> = samples
        .times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t <= big_t * (1.0 + 1e-14))
        .map(|(i, _)| i)
        .collect();
    if active.len() < 2 {
        return Err(Error::BadConfig {
            reason: "need at least two time samples inside the window".into(),
        });
    }

    let mut tv = [0.0_f64; 2];
    for w in active.windows(2) {
        let (a, b) = (w[0], w[1]);
        tv[0] += (samples.values[b][i1] - samples.values[a][i1]).norm();
        tv[1] += (samples.values[b][i2] - samples.values[a][i2]).norm();
    }

    let ratio_for = |stride: usize| -> f64 {
        let level: Vec<usize> = active.iter().copied().step_by(stride).collect();
        let mut worst = 0.0_f64;
        for a_pos in 0..level.len() {
            for b_pos in (a_pos + 1)..level.len() {
                let (a, b) = (level[a_pos], level[b_pos]);
                let den = (samples.values[b][i1] - samples.values[a][i1]).norm()
                    + (samples.values[b][i2] - samples.values[a][i2]).norm();
                let num = samples
                    .points
                    .iter()
                    .enumerate()
                    .map(|(j, _)| (samples.values[b][j] - samples.values[a][j]).norm())
                    .fold(0.0_f64, f64::max);
                if num <= VACUOUS_EPS && den <= VACUOUS_EPS {
                    continue;
                }
                if den <= VACUOUS_EPS {
                    return f64::INFINITY;
                }
                worst = worst.max(num / den);
            }
        }
        worst
    };

    let level_ratios: Vec<f64> = [4_usize, 2, 1].iter().map(|&s| ratio_for(s)).collect();
    let max_ratio = level_ratios.iter().copied().fold(0.0_f64, f64::max);
    let mut pass = level_ratios.iter().all(|r| r.is_finite());
    for w in level_ratios.windows(2) {
        if w[1] > 1.05 * w[0] + 1e-12 {
            pass = false;
        }
    }
    Ok(TwoPointReport {
        total_variation: tv,
        level_ratios,
        max_ratio,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herglotz::{autonomous, HerglotzFunctionSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn minus_w(horizon: f64) -> HerglotzField {
        autonomous(
            c(0.0, 0.0),
            HerglotzFunctionSpec::constant(1.0).unwrap(),
            horizon,
        )
        .unwrap()
    }

    fn disk(re: f64, im: f64) -> DiskPoint {
        DiskPoint::from_parts(re, im).unwrap()
    }

    #[test]
    fn forward_family_is_exponential() {
        let h = evolution_family(minus_w(3.0), SolverConfig::default()).unwrap();
        let z = c(0.3, -0.2);
        let got = h.evaluate(0.4, 1.7, z).unwrap();
        let want = z * (0.4_f64 - 1.7).exp();
        assert!((got - want).norm() < 1e-9);
        // EF1 exactly
        assert_eq!(h.evaluate(0.8, 0.8, z).unwrap(), z);
    }

    #[test]
    fn reverse_family_is_contracting_exponential() {
        let h = reverse_family(minus_w(3.0), SolverConfig::default()).unwrap();
        let z = c(0.5, 0.1);
        let got = h.evaluate(0.2, 1.2, z).unwrap();
        let want = z * (0.2_f64 - 1.2).exp();
        assert!((got - want).norm() < 1e-9);
        assert_eq!(h.evaluate(0.5, 0.5, z).unwrap(), z);
    }

    #[test]
    fn composition_laws_hold_on_grid() {
        let fwd = evolution_family(minus_w(2.0), SolverConfig::default()).unwrap();
        let rev = reverse_family(minus_w(2.0), SolverConfig::default()).unwrap();
        let (s, u, t) = (0.2, 0.7, 1.6);
        for &z in default_spatial_grid().iter().take(8) {
            let ef_direct = fwd.evaluate(s, t, z).unwrap();
            let ef_comp = fwd.evaluate(u, t, fwd.evaluate(s, u, z).unwrap()).unwrap();
            assert!((ef_direct - ef_comp).norm() < 1e-8);
            let ref_direct = rev.evaluate(s, t, z).unwrap();
            let ref_comp = rev.evaluate(s, u, rev.evaluate(u, t, z).unwrap()).unwrap();
            assert!((ref_direct - ref_comp).norm() < 1e-8);
        }
    }

    #[test]
    fn chain_map_and_inverse_compose_to_identity() {
        let chain = decreasing_chain(minus_w(2.0), SolverConfig::default()).unwrap();
        // f_0 = id
        let z = c(0.4, 0.3);
        assert_eq!(chain.map(0.0, z).unwrap(), z);
        // f_t(g_t(z)) = z where g_t is defined
        let zp = disk(0.2, -0.1);
        match chain_inverse(&chain, zp, 1.0).unwrap() {
            ChainPreimage::Inside(g) => {
                let back = chain.map(1.0, g.value()).unwrap();
                assert!((back - zp.value()).norm() < 1e-8);
            }
            ChainPreimage::OutOfDomain(t) => panic!("unexpected escape at {t}"),
        }
    }

    #[test]
    fn chain_and_family_are_compatible() {
        // phi_{s,t} = g_s ∘ f_t on the grid: the reverse family factors
        // through the chain and its inverse maps.
        let field = crate::herglotz::radial_field(
            crate::driver::DrivingFunction::constant(c(1.0, 0.0), 1.5).unwrap(),
        )
        .unwrap();
        let chain = decreasing_chain(field, SolverConfig::default()).unwrap();
        let (s, t) = (0.3, 1.0);
        for &z in default_spatial_grid().iter().take(8) {
            let phi = chain.family().evaluate(s, t, z).unwrap();
            let f_t = chain.map(t, z).unwrap();
            match chain_inverse(&chain, DiskPoint::new(f_t).unwrap(), s).unwrap() {
                ChainPreimage::Inside(g) => {
                    assert!(
                        (g.value() - phi).norm() < 1e-8,
                        "g_s(f_t(z)) and phi_{{s,t}}(z) differ by {}",
                        (g.value() - phi).norm()
                    );
                }
                ChainPreimage::OutOfDomain(te) => panic!("unexpected escape at {te}"),
            }
        }
    }

    #[test]
    fn chain_inverse_reports_domain_time() {
        let chain = decreasing_chain(minus_w(2.0), SolverConfig::default()).unwrap();
        let zp = disk(0.5, 0.0);
        match chain_inverse(&chain, zp, 1.5).unwrap() {
            ChainPreimage::OutOfDomain(t) => {
                assert!((t - std::f64::consts::LN_2).abs() < 1e-8);
            }
            ChainPreimage::Inside(_) => panic!("expected escape"),
        }
        // t = 0 is the identity
        match chain_inverse(&chain, zp, 0.0).unwrap() {
            ChainPreimage::Inside(g) => assert_eq!(g.value(), zp.value()),
            _ => panic!(),
        }
    }

    #[test]
    fn domain_time_of_fixed_point_is_horizon() {
        let field = crate::herglotz::radial_field(
            crate::driver::DrivingFunction::constant(c(1.0, 0.0), 1.5).unwrap(),
        )
        .unwrap();
        let chain = decreasing_chain(field, SolverConfig::default()).unwrap();
        let t = domain_time(&chain, DiskPoint::ORIGIN).unwrap();
        assert_eq!(t, 1.5);
    }

    #[test]
    fn duality_transform_swaps_direction_and_involutes() {
        let rev = reverse_family(minus_w(2.0), SolverConfig::default()).unwrap();
        let fwd = duality_transform(&rev, 1.5).unwrap();
        assert_eq!(fwd.direction(), Direction::Forward);
        let z = c(0.25, 0.4);
        // phi^T_{s,t} = phi_{T-t, T-s}
        let got = fwd.evaluate(0.3, 0.9, z).unwrap();
        let want = rev.evaluate(0.6, 1.2, z).unwrap();
        assert!((got - want).norm() < 1e-12);
        // s = t is preserved
        assert_eq!(fwd.evaluate(0.4, 0.4, z).unwrap(), z);
        // clamped region: s >= T gives the identity
        assert_eq!(fwd.evaluate(1.6, 1.9, z).unwrap(), z);
        // double transform restores values on [0, T]
        let back = duality_transform(&fwd, 1.5).unwrap();
        let a = back.evaluate(0.2, 1.1, z).unwrap();
        let b = rev.evaluate(0.2, 1.1, z).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn memo_keeps_only_declared_keys() {
        let h = evolution_family(minus_w(2.0), SolverConfig::default()).unwrap();
        let z = c(0.1, 0.2);
        h.declare_grid(&[z], &[(0.0, 1.0)]);
        let _ = h.evaluate(0.0, 1.0, z).unwrap();
        let _ = h.evaluate(0.0, 0.5, z).unwrap();
        if let Backend::Solver { memo, .. } = &*h.backend {
            let state = memo.lock().unwrap();
            assert_eq!(state.cache.len(), 1);
            assert!(state.cache.contains_key(&memo_key(0.0, 1.0, z)));
        } else {
            panic!("expected solver backend");
        }
    }

    #[test]
    fn increasing_chain_recovers_koebe_map() {
        let field = crate::herglotz::radial_field(
            crate::driver::DrivingFunction::constant(c(1.0, 0.0), 40.0).unwrap(),
        )
        .unwrap();
        let cfg = SolverConfig::default();
        let chain = increasing_chain_radial(&field, 16.0, cfg).unwrap();
        for &(re, im) in &[(0.5, 0.0), (-0.3, 0.2), (0.1, -0.4)] {
            let z = c(re, im);
            let one = c(1.0, 0.0);
            let koebe = z / ((one + z) * (one + z));
            let got = chain.map(0.0, z).unwrap();
            assert!(
                (got - koebe).norm() < 1e-7,
                "f_0({z}) = {got}, koebe = {koebe}"
            );
        }
        // normalization f_s'(0) = e^s
        for &s in &[0.0, 0.5, 1.0] {
            let d = chain.derivative_at_origin(s).unwrap();
            assert!(
                (d - c(s.exp(), 0.0)).norm() / s.exp() < 1e-6,
                "f_{s}'(0) = {d}"
            );
        }
        // f_t ∘ phi_{s,t} = f_s on a small grid
        let fam = chain.family();
        for &z in default_spatial_grid().iter().take(6) {
            let (s, t) = (0.3, 1.1);
            let phi = fam.evaluate(s, t, z).unwrap();
            let lhs = chain.map(t, phi).unwrap();
            let rhs = chain.map(s, z).unwrap();
            assert!((lhs - rhs).norm() < 1e-7);
        }
    }

    #[test]
    fn increasing_chain_rejects_short_horizon() {
        let field = crate::herglotz::radial_field(
            crate::driver::DrivingFunction::constant(c(1.0, 0.0), 3.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            increasing_chain_radial(&field, 2.0, SolverConfig::default()),
            Err(Error::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn two_point_constant_chain_passes_vacuously() {
        let times: Vec<f64> = (0..17).map(|i| i as f64 / 16.0).collect();
        let points = vec![c(0.1, 0.0), c(-0.2, 0.1), c(0.0, 0.3)];
        let values = vec![points.clone(); 17];
        let samples = ChainSamples::new(times, points, values).unwrap();
        let report = two_point_check(
            &samples,
            disk(0.1, 0.0),
            disk(-0.2, 0.1),
            1.0,
        )
        .unwrap();
        assert!(report.pass);
        assert_eq!(report.total_variation, [0.0, 0.0]);
        assert_eq!(report.max_ratio, 0.0);
    }

    #[test]
    fn two_point_flags_jumping_third_point() {
        let times: Vec<f64> = (0..17).map(|i| i as f64 / 16.0).collect();
        let points = vec![c(0.1, 0.0), c(-0.2, 0.1), c(0.0, 0.3)];
        let mut values = vec![points.clone(); 17];
        for (i, row) in values.iter_mut().enumerate() {
            if i >= 8 {
                row[2] = c(0.5, -0.5); // third point jumps, marked points frozen
            }
        }
        let samples = ChainSamples::new(times, points, values).unwrap();
        let report = two_point_check(&samples, disk(0.1, 0.0), disk(-0.2, 0.1), 1.0).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn concurrent_evaluation_is_deterministic() {
        let h = evolution_family(minus_w(2.0), SolverConfig::default()).unwrap();
        let z = c(0.31, -0.17);
        h.declare_grid(&[z], &[(0.0, 1.3)]);
        let reference = h.evaluate(0.0, 1.3, z).unwrap();
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let h = h.clone();
                std::thread::spawn(move || h.evaluate(0.0, 1.3, c(0.31, -0.17)).unwrap())
            })
            .collect();
        for worker in handles {
            let got = worker.join().unwrap();
            assert_eq!(got, reference);
        }
    }

    #[test]
    fn two_point_rejects_coincident_points() {
        let times = vec![0.0, 1.0];
        let points = vec![c(0.1, 0.0)];
        let samples = ChainSamples::new(times, points.clone(), vec![points.clone(); 2]).unwrap();
        assert!(matches!(
            two_point_check(&samples, disk(0.1, 0.0), disk(0.1, 0.0), 1.0),
            Err(Error::CoincidentPoints)
        ));
    }
}
