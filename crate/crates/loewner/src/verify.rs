//! Executable certification of the structural identities: semigroup laws,
//! PDE residuals with convergence-order tracking, characteristic constancy,
//! duality round-trips, inclusion witnesses, and empirical monitoring of the
//! universal comparison constants.

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::family::{
    chain_inverse, decreasing_chain, duality_transform, evolution_family, reverse_family,
    ChainPreimage, DecreasingChain, Direction, FamilyHandle,
};
use crate::geometry::{pseudo_dist_raw, DiskPoint, MoebiusAutomorphism};
use crate::herglotz::HerglotzField;
use crate::solver::{solve_decreasing, SolverConfig, TrajectoryStatus};
use crate::{Error, Result};

/// Location of the worst residual; components not meaningful for a check are
/// set to the nearest meaningful value (e.g. `u = s` when no middle time is
/// involved).
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct WorstCase {
    pub s: f64,
    pub u: f64,
    pub t: f64,
    pub z_re: f64,
    pub z_im: f64,
}

/// Outcome of one deterministic check; `pass` holds exactly when
/// `max_residual <= tolerance`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub sample_count: usize,
    pub worst_case: WorstCase,
}

impl VerificationReport {
    fn from_samples(
        check_name: &str,
        tolerance: f64,
        samples: impl IntoIterator<Item = (f64, WorstCase)>,
    ) -> Self {
        let mut max_residual = 0.0_f64;
        let mut worst = WorstCase::default();
        let mut count = 0;
        for (r, wc) in samples {
            count += 1;
            if r > max_residual {
                max_residual = r;
                worst = wc;
            }
        }
        VerificationReport {
            check_name: check_name.to_string(),
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
            sample_count: count,
            worst_case: worst,
        }
    }
}

/// Residual of the direction-appropriate composition law over the grid:
/// forward `phi_{s,t} = phi_{u,t} ∘ phi_{s,u}`, reverse
/// `phi_{s,t} = phi_{s,u} ∘ phi_{u,t}`.
pub fn check_semigroup(
    handle: &FamilyHandle,
    spatial: &[Complex64],
    triples: &[(f64, f64, f64)],
    tolerance: f64,
) -> Result<VerificationReport> {
    let mut samples = Vec::with_capacity(spatial.len() * triples.len());
    for &(s, u, t) in triples {
        if !(s <= u && u <= t) {
            return Err(Error::BadInterval { s, t: u.min(t) });
        }
        for &z in spatial {
            let direct = handle.evaluate(s, t, z)?;
            let composed = match handle.direction() {
                Direction::Forward => {
                    let inner = handle.evaluate(s, u, z)?;
                    handle.evaluate(u, t, inner)?
                }
                Direction::Reverse => {
                    let inner = handle.evaluate(u, t, z)?;
                    handle.evaluate(s, u, inner)?
                }
            };
            samples.push((
                (direct - composed).norm(),
                WorstCase {
                    s,
                    u,
                    t,
                    z_re: z.re,
                    z_im: z.im,
                },
            ));
        }
    }
    Ok(VerificationReport::from_samples(
        "semigroup",
        tolerance,
        samples,
    ))
}

const CAUCHY_STENCIL: usize = 24;

/// `d f_t / dz` by a trapezoidal Cauchy integral on a circle of radius
/// `0.3 (1 - |z|)`; spectrally accurate, so the finite-difference order in
/// time is observed undisturbed.
fn chain_z_derivative(chain: &DecreasingChain, t: f64, z: Complex64) -> Result<Complex64> {
    let rho = 0.3 * (1.0 - z.norm());
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..CAUCHY_STENCIL {
        let theta = std::f64::consts::TAU * j as f64 / CAUCHY_STENCIL as f64;
        let offset = Complex64::from_polar(rho, theta);
        let f = chain.map(t, z + offset)?;
        acc += f * Complex64::from_polar(1.0, -theta);
    }
    Ok(acc / (CAUCHY_STENCIL as f64 * rho))
}

fn tightened(chain: &DecreasingChain) -> DecreasingChain {
    let cfg = SolverConfig {
        rel_tol: chain.cfg().rel_tol.min(1e-13),
        abs_tol: chain.cfg().abs_tol.min(1e-14),
        ..*chain.cfg()
    };
    decreasing_chain(chain.field().clone(), cfg).expect("chain construction cannot fail here")
}

/// Residual of `∂f_t/∂t - (∂f_t/∂z) G(z,t)` with a central time difference of
/// step `h`; samples must stay at least `h` away from driver breakpoints.
pub fn check_pde_residual(
    chain: &DecreasingChain,
    field: &HerglotzField,
    points: &[Complex64],
    times: &[f64],
    h: f64,
    tolerance: f64,
) -> Result<VerificationReport> {
    if !(h > 0.0) {
        return Err(Error::BadConfig {
            reason: format!("time step must be positive, got {h}"),
        });
    }
    let breakpoints = field.breakpoints();
    for &t in times {
        if t - h < 0.0 || t + h > chain.horizon() * (1.0 + 1e-14) {
            return Err(Error::OutsideHorizon {
                t,
                horizon: chain.horizon(),
            });
        }
        for &b in &breakpoints {
            if b > 0.0 && b < chain.horizon() && (t - b).abs() < h {
                return Err(Error::BreakpointCollision { t, h });
            }
        }
    }
    // The central difference divides solver noise by 2h; resolve the values
    // well below the h^2 signal.
    let tight = tightened(chain);
    let mut samples = Vec::with_capacity(points.len() * times.len());
    for &t in times {
        for &z in points {
            let f_plus = tight.map(t + h, z)?;
            let f_minus = tight.map(t - h, z)?;
            let dt = (f_plus - f_minus) / (2.0 * h);
            let dz = chain_z_derivative(&tight, t, z)?;
            let g = field.generator(z, t)?;
            samples.push((
                (dt - dz * g).norm(),
                WorstCase {
                    s: t - h,
                    u: t,
                    t: t + h,
                    z_re: z.re,
                    z_im: z.im,
                },
            ));
        }
    }
    Ok(VerificationReport::from_samples(
        "pde_residual",
        tolerance,
        samples,
    ))
}

/// PDE residuals across a ladder of time steps with the observed log2 ratios;
/// second-order central differences give ratios near 2 per halving.
#[derive(Clone, Debug, Serialize)]
pub struct PdeConvergence {
    pub reports: Vec<VerificationReport>,
    pub log2_ratios: Vec<f64>,
}

pub fn pde_convergence(
    chain: &DecreasingChain,
    field: &HerglotzField,
    points: &[Complex64],
    times: &[f64],
    steps: &[f64],
    tolerance_at_coarsest: f64,
) -> Result<PdeConvergence> {
    let mut reports = Vec::with_capacity(steps.len());
    for (i, &h) in steps.iter().enumerate() {
        // the expected residual scale shrinks quadratically along the ladder
        let scale = (steps[0] / h).powi(2);
        let report = check_pde_residual(
            chain,
            field,
            points,
            times,
            h,
            tolerance_at_coarsest / scale,
        )?;
        let mut report = report;
        report.check_name = format!("pde_residual_h{i}");
        reports.push(report);
    }
    let log2_ratios = reports
        .windows(2)
        .map(|w| (w[0].max_residual / w[1].max_residual).log2())
        .collect();
    Ok(PdeConvergence {
        reports,
        log2_ratios,
    })
}

/// Constancy of `t -> f_t(w(t))` along decreasing characteristics started at
/// the given points; the drift against the initial value is the residual.
pub fn check_characteristics(
    chain: &DecreasingChain,
    field: &HerglotzField,
    starts: &[DiskPoint],
    t_grid: &[f64],
    tolerance: f64,
) -> Result<VerificationReport> {
    if t_grid.iter().any(|&t| t < 0.0 || t > chain.horizon() * (1.0 + 1e-14)) {
        return Err(Error::OutsideHorizon {
            t: *t_grid.last().unwrap_or(&0.0),
            horizon: chain.horizon(),
        });
    }
    let mut samples = Vec::new();
    for &z in starts {
        let anchor = z.value();
        for &t in t_grid {
            let traj = solve_decreasing(field, z, t, chain.cfg())?;
            match traj.status {
                TrajectoryStatus::Completed => {
                    let value = chain.map(t, traj.end_value())?;
                    samples.push((
                        (value - anchor).norm(),
                        WorstCase {
                            s: 0.0,
                            u: t,
                            t,
                            z_re: anchor.re,
                            z_im: anchor.im,
                        },
                    ));
                }
                // characteristic left the domain before t: outside the
                // maximal interval, nothing to check
                _ => break,
            }
        }
    }
    Ok(VerificationReport::from_samples(
        "characteristics",
        tolerance,
        samples,
    ))
}

/// Residual between the reverse family of the field and the clamped time
/// reversal of the evolution family of the time-reversed field.
pub fn check_duality_roundtrip(
    field: &HerglotzField,
    big_t: f64,
    spatial: &[Complex64],
    pairs: &[(f64, f64)],
    cfg: &SolverConfig,
    tolerance: f64,
) -> Result<VerificationReport> {
    let reverse = reverse_family(field.clone(), *cfg)?;
    let forward_of_reversed = evolution_family(field.time_reversed(big_t)?, *cfg)?;
    let transformed = duality_transform(&forward_of_reversed, big_t)?;
    let mut samples = Vec::with_capacity(spatial.len() * pairs.len());
    for &(s, t) in pairs {
        if !(0.0 <= s && s <= t && t <= big_t * (1.0 + 1e-14)) {
            return Err(Error::BadInterval { s, t });
        }
        for &z in spatial {
            let direct = reverse.evaluate(s, t, z)?;
            let via_transform = transformed.evaluate(s, t, z)?;
            samples.push((
                (direct - via_transform).norm(),
                WorstCase {
                    s,
                    u: s,
                    t,
                    z_re: z.re,
                    z_im: z.im,
                },
            ));
        }
    }
    Ok(VerificationReport::from_samples(
        "duality_roundtrip",
        tolerance,
        samples,
    ))
}

/// Witnesses the nesting `f_t(D) ⊂ f_s(D)` for the pair as given: samples
/// `z` near the unit circle, maps them through `f_t`, and counts how many
/// preimages under `g_s` fail to exist. Calling with the labels swapped
/// (`s > t`) models a corrupted chain and produces failures. The residual is
/// the failure count.
pub fn check_inclusion(
    chain: &DecreasingChain,
    s: f64,
    t: f64,
    boundary_samples: usize,
) -> Result<VerificationReport> {
    let n = boundary_samples.max(1);
    let mut failures = 0usize;
    let mut worst = WorstCase {
        s,
        u: s,
        t,
        ..WorstCase::default()
    };
    for j in 0..n {
        let theta = std::f64::consts::TAU * (j as f64 + 0.5) / n as f64;
        let z = Complex64::from_polar(0.985, theta);
        let image = chain.map(t, z)?;
        if let ChainPreimage::OutOfDomain(_) = chain_inverse(chain, DiskPoint::new(image)?, s)? {
            failures += 1;
            worst = WorstCase {
                s,
                u: s,
                t,
                z_re: z.re,
                z_im: z.im,
            };
        }
    }
    Ok(VerificationReport {
        check_name: "inclusion".to_string(),
        max_residual: failures as f64,
        tolerance: 0.5,
        pass: failures == 0,
        sample_count: n,
        worst_case: worst,
    })
}

/// Sampling plan for the universal-constant monitor.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConstantsPlan {
    pub seed: u64,
    pub samples: usize,
    pub max_blaschke_degree: usize,
}

impl Default for ConstantsPlan {
    fn default() -> Self {
        Self {
            seed: 7_394_201,
            samples: 10_000,
            max_blaschke_degree: 4,
        }
    }
}

/// Empirical suprema of the two comparison ratios over random finite
/// Blaschke products. Monitoring only: no constant is asserted.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantsReport {
    pub seed: u64,
    pub samples: usize,
    pub lemma_ratio_max: f64,
    pub corollary_ratio_max: f64,
    pub degenerate_skipped: usize,
}

struct Blaschke {
    rotation: Complex64,
    zeros: Vec<Complex64>,
}

impl Blaschke {
    fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = self.rotation;
        for &a in &self.zeros {
            acc *= (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z);
        }
        acc
    }
}

fn random_blaschke(rng: &mut StdRng, max_degree: usize) -> Blaschke {
    let degree = rng.random_range(1..=max_degree.max(1));
    let zeros = (0..degree)
        .map(|_| {
            Complex64::from_polar(
                0.8 * rng.random_range(0.0..1.0_f64).sqrt(),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    Blaschke {
        rotation: Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)),
        zeros,
    }
}

/// The normalized ratio of the origin-fixing comparison estimate: for
/// `psi(0) = 0`,
/// `rho(psi(zeta), zeta) * |zeta0| (1 - |zeta0|^2) (1 - r)^2 / |psi(zeta0) - zeta0|`.
pub(crate) fn lemma_ratio(
    psi: &dyn Fn(Complex64) -> Complex64,
    zeta: Complex64,
    zeta0: Complex64,
    r: f64,
) -> Option<f64> {
    let num = pseudo_dist_raw(psi(zeta), zeta);
    let den = (psi(zeta0) - zeta0).norm();
    let weight = zeta0.norm() * (1.0 - zeta0.norm_sqr()) * (1.0 - r) * (1.0 - r);
    if den < 1e-14 {
        if num < 1e-14 {
            return Some(0.0);
        }
        return None;
    }
    Some(num * weight / den)
}

pub fn estimate_universal_constants(plan: &ConstantsPlan) -> ConstantsReport {
    let mut rng = StdRng::seed_from_u64(plan.seed);
    let mut lemma_max = 0.0_f64;
    let mut corollary_max = 0.0_f64;
    let mut degenerate = 0usize;
    for _ in 0..plan.samples {
        let b = random_blaschke(&mut rng, plan.max_blaschke_degree);
        // normalize to fix the origin
        let b0 = b.eval(Complex64::new(0.0, 0.0));
        let ell = MoebiusAutomorphism::new(
            DiskPoint::new(b0).unwrap_or(DiskPoint::ORIGIN),
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let psi = |z: Complex64| ell.apply_raw(b.eval(z));

        let r = rng.random_range(0.3..0.7);
        let zeta = Complex64::from_polar(
            r * rng.random_range(0.0..1.0_f64).sqrt(),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        let zeta0 = Complex64::from_polar(
            rng.random_range(0.25..0.8),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        match lemma_ratio(&psi, zeta, zeta0, r) {
            Some(ratio) => lemma_max = lemma_max.max(ratio),
            None => degenerate += 1,
        }

        // two-point comparison for the unnormalized map
        let zeta1 = Complex64::from_polar(
            rng.random_range(0.0..0.75),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        let zeta2 = Complex64::from_polar(
            rng.random_range(0.0..0.75),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        if pseudo_dist_raw(zeta1, zeta2) < 0.2 {
            degenerate += 1;
            continue;
        }
        let phi = |z: Complex64| b.eval(z);
        let num = pseudo_dist_raw(phi(zeta), zeta);
        let den = (phi(zeta1) - zeta1).norm() + (phi(zeta2) - zeta2).norm();
        if den < 1e-14 {
            if num >= 1e-14 {
                corollary_max = f64::INFINITY;
            }
            continue;
        }
        corollary_max = corollary_max.max(num / den);
    }
    ConstantsReport {
        seed: plan.seed,
        samples: plan.samples,
        lemma_ratio_max: lemma_max,
        corollary_ratio_max: corollary_max,
        degenerate_skipped: degenerate,
    }
}
