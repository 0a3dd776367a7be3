//! Herglotz vector fields in their canonical parametrizations.
//!
//! The disk-side fields all factor as `G(z,t) = (tau(t) - z)(1 - conj(tau(t)) z) p(z,t)`
//! with `Re p >= 0`; `p` is realized by finite positive combinations of
//! boundary-atom kernels `(x + z)/(x - z)`, `|x| = 1`, plus a nonnegative
//! constant. The chordal half-plane field `2/(w - lambda(t))` and its Cayley
//! transport to the disk are carried as their own variants because their
//! natural evaluation formulas are the decreasing-direction velocities; the
//! solvers obtain the forward generator through [`HerglotzField::generator`],
//! which fixes the orientation per variant.

use num_complex::Complex64;

use crate::driver::{DrivingFunction, RegularityOrder};
use crate::geometry::{cayley_derivative, cayley_inv_raw, cayley_raw};
use crate::{Error, Result};

/// Default proximity threshold to the chordal driving singularity.
pub const DEFAULT_SINGULARITY_MARGIN: f64 = 1e-7;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// One boundary atom of a Herglotz function: `weight * (point + z)/(point - z)`.
#[derive(Clone, Copy, Debug)]
pub struct Atom {
    pub weight: f64,
    pub point: Complex64,
}

/// A finite-atom Herglotz function
/// `p(z) = offset + sum_j weight_j (x_j + z)/(x_j - z)`
/// with positive weights, unimodular `x_j` and nonnegative offset, so that
/// `Re p >= 0` on the whole disk by construction.
#[derive(Clone, Debug)]
pub struct HerglotzFunctionSpec {
    atoms: Vec<Atom>,
    offset: f64,
}

impl HerglotzFunctionSpec {
    pub fn new(atoms: Vec<Atom>, offset: f64) -> Result<Self> {
        if !(offset >= 0.0) {
            return Err(Error::NegativeOffset { offset });
        }
        let mut normalized = Vec::with_capacity(atoms.len());
        for atom in atoms {
            if !(atom.weight > 0.0) {
                return Err(Error::NonPositiveWeight {
                    weight: atom.weight,
                });
            }
            let modulus = atom.point.norm();
            if !modulus.is_finite() || (modulus - 1.0).abs() > 1e-12 {
                return Err(Error::AtomOffCircle { modulus });
            }
            normalized.push(Atom {
                weight: atom.weight,
                point: atom.point / modulus,
            });
        }
        Ok(Self {
            atoms: normalized,
            offset,
        })
    }

    /// Validation-bypassing constructor, for exercising the verification
    /// machinery on deliberately corrupted data.
    pub fn new_unchecked(atoms: Vec<Atom>, offset: f64) -> Self {
        Self { atoms, offset }
    }

    /// The constant function `p ≡ value`.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(Vec::new(), value)
    }

    /// Single unit-weight atom at the boundary point `x = 1`, the Schwarz
    /// kernel `(1 + z)/(1 - z)`.
    pub fn schwarz_kernel() -> Self {
        Self {
            atoms: vec![Atom {
                weight: 1.0,
                point: ONE,
            }],
            offset: 0.0,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(self.offset, 0.0);
        for atom in &self.atoms {
            acc += atom.weight * (atom.point + z) / (atom.point - z);
        }
        acc
    }

    /// `p(0) = offset + sum of weights`.
    pub fn value_at_origin(&self) -> f64 {
        self.offset + self.atoms.iter().map(|a| a.weight).sum::<f64>()
    }

    /// Supremum bound of `|p|` on `|z| <= r`.
    pub fn bound_on(&self, r: f64) -> f64 {
        let atom_sum: f64 = self.atoms.iter().map(|a| a.weight.abs()).sum();
        self.offset.abs() + atom_sum * (1.0 + r) / (1.0 - r)
    }
}

/// The `tau` component of the general representation.
#[derive(Clone, Debug)]
pub enum TauSpec {
    /// `tau(t)` given directly as a driver into the closed disk.
    Driver(DrivingFunction),
    /// `tau(t) = H^{-1}(lambda(t))` for a real driver `lambda`; arises from
    /// Cayley transport of chordal data and lands on the unit circle.
    CayleyInverseOfReal(DrivingFunction),
}

impl TauSpec {
    fn at(&self, t: f64) -> Complex64 {
        match self {
            TauSpec::Driver(d) => d.eval_clamped(t),
            TauSpec::CayleyInverseOfReal(lambda) => {
                cayley_inv_raw(lambda.eval_clamped(t))
            }
        }
    }

    fn horizon(&self) -> f64 {
        match self {
            TauSpec::Driver(d) | TauSpec::CayleyInverseOfReal(d) => d.horizon(),
        }
    }

    fn breakpoints(&self) -> &[f64] {
        match self {
            TauSpec::Driver(d) | TauSpec::CayleyInverseOfReal(d) => d.breakpoints(),
        }
    }

    fn reversed(&self, big_t: f64) -> Result<Self> {
        Ok(match self {
            TauSpec::Driver(d) => TauSpec::Driver(d.reversed(big_t)?),
            TauSpec::CayleyInverseOfReal(d) => {
                TauSpec::CayleyInverseOfReal(d.reversed(big_t)?)
            }
        })
    }
}

/// The `p` component of the general representation.
#[derive(Clone, Debug)]
pub enum PSpec {
    /// Piecewise-constant-in-time atom specs: `(t_start, spec)`, sorted, the
    /// first piece starting at 0.
    Pieces(Vec<(f64, HerglotzFunctionSpec)>),
    /// The `p` induced by Cayley transport of the chordal field with driver
    /// `lambda`; evaluated through the closed pullback formula.
    ChordalPullback(DrivingFunction),
}

impl PSpec {
    fn piece_at(pieces: &[(f64, HerglotzFunctionSpec)], t: f64) -> &HerglotzFunctionSpec {
        let idx = pieces.partition_point(|(s, _)| *s <= t);
        &pieces[idx.saturating_sub(1)].1
    }
}

#[derive(Clone, Debug)]
pub enum FieldKind {
    /// `G(z,t) = -z * p0(k(t) z)` with `|k| = 1` and `p0(0) = 1`; reduces to
    /// the classical slit field `-z (1 + kz)/(1 - kz)` for the Schwarz kernel.
    Radial {
        k: DrivingFunction,
        p0: HerglotzFunctionSpec,
    },
    /// Half-plane field evaluating to `2/(w - lambda(t))`, the
    /// decreasing-direction velocity of hull growth.
    ChordalHalfPlane { lambda: DrivingFunction },
    /// `(tau(t) - z)(1 - conj(tau(t)) z) p(z,t)`; with a
    /// [`PSpec::ChordalPullback`] the evaluation is the Cayley pullback of the
    /// chordal velocity (again decreasing-direction).
    General { tau: TauSpec, p: PSpec },
    /// Time-independent generator `(tau - z)(1 - conj(tau) z) p(z)` on a
    /// declared finite horizon.
    Autonomous {
        tau: Complex64,
        p: HerglotzFunctionSpec,
        horizon: f64,
    },
}

/// A non-autonomous vector field in one of the canonical parametrizations.
#[derive(Clone, Debug)]
pub struct HerglotzField {
    kind: FieldKind,
    order: RegularityOrder,
}

/// `G(z,t) = -z p0(k(t) z)`, the radial field with the default Schwarz-kernel
/// `p0`; `k` must be unimodular (checked by dense sampling, renormalized at
/// evaluation).
pub fn radial_field(k: DrivingFunction) -> Result<HerglotzField> {
    radial_field_with(k, HerglotzFunctionSpec::schwarz_kernel())
}

pub fn radial_field_with(k: DrivingFunction, p0: HerglotzFunctionSpec) -> Result<HerglotzField> {
    if (p0.value_at_origin() - 1.0).abs() > 1e-12 {
        return Err(Error::UnnormalizedHerglotz {
            value: p0.value_at_origin(),
        });
    }
    for (t, v) in sample_driver(&k) {
        let m = v.norm();
        if (m - 1.0).abs() > 1e-6 {
            return Err(Error::NonUnimodularDriver { t, modulus: m });
        }
    }
    let order = k.order();
    Ok(HerglotzField {
        kind: FieldKind::Radial { k, p0 },
        order,
    })
}

/// The chordal half-plane field with real driver `lambda`.
pub fn chordal_field_halfplane(lambda: DrivingFunction) -> Result<HerglotzField> {
    for (t, v) in sample_driver(&lambda) {
        if v.im.abs() > 1e-12 {
            return Err(Error::NonRealDriver { t, imag: v.im });
        }
    }
    let order = lambda.order();
    Ok(HerglotzField {
        kind: FieldKind::ChordalHalfPlane { lambda },
        order,
    })
}

/// General `(tau, p)` field with `tau` a driver into the closed disk and `p`
/// piecewise-constant-in-time finite-atom specs.
pub fn general_field(
    tau: DrivingFunction,
    pieces: Vec<(f64, HerglotzFunctionSpec)>,
) -> Result<HerglotzField> {
    for (t, v) in sample_driver(&tau) {
        if v.norm() > 1.0 + 1e-12 {
            return Err(Error::TauOutsideClosedDisk { t, modulus: v.norm() });
        }
    }
    if pieces.is_empty() || pieces[0].0 != 0.0 {
        return Err(Error::EmptyDriver);
    }
    if pieces.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::NonMonotoneSamples);
    }
    let order = tau.order();
    Ok(HerglotzField {
        kind: FieldKind::General {
            tau: TauSpec::Driver(tau),
            p: PSpec::Pieces(pieces),
        },
        order,
    })
}

/// Time-independent field `(tau - z)(1 - conj(tau) z) p(z)` on `[0, horizon]`.
pub fn autonomous(tau: Complex64, p: HerglotzFunctionSpec, horizon: f64) -> Result<HerglotzField> {
    if tau.norm() > 1.0 + 1e-12 {
        return Err(Error::TauOutsideClosedDisk {
            t: 0.0,
            modulus: tau.norm(),
        });
    }
    if !(horizon > 0.0) {
        return Err(Error::BadConfig {
            reason: "autonomous field needs a positive horizon".into(),
        });
    }
    Ok(HerglotzField {
        kind: FieldKind::Autonomous { tau, p, horizon },
        order: RegularityOrder::Infinite,
    })
}

fn sample_driver(d: &DrivingFunction) -> Vec<(f64, Complex64)> {
    let mut out = Vec::new();
    let n = 257;
    for i in 0..=n {
        let t = d.horizon() * i as f64 / n as f64;
        out.push((t, d.eval_clamped(t)));
    }
    for &t in d.breakpoints() {
        out.push((t, d.eval_clamped(t)));
    }
    out
}

/// Cayley transport of a chordal field to the disk: the General-variant field
/// whose evaluation is `(2/(H(z) - lambda(t))) / H'(z)`, factored through
/// `tau(t) = H^{-1}(lambda(t))`.
pub fn transport_to_disk(field: &HerglotzField) -> Result<HerglotzField> {
    match &field.kind {
        FieldKind::ChordalHalfPlane { lambda } => Ok(HerglotzField {
            kind: FieldKind::General {
                tau: TauSpec::CayleyInverseOfReal(lambda.clone()),
                p: PSpec::ChordalPullback(lambda.clone()),
            },
            order: field.order,
        }),
        _ => Err(Error::DiskField),
    }
}

/// Closed form of the Cayley pullback of `w -> 2/(w - lambda)`:
/// `-(1-z)^3 (1 - tau0) / (2 (z - tau0))` with `tau0 = H^{-1}(lambda)`.
fn chordal_pullback(z: Complex64, lambda: f64) -> Complex64 {
    let tau0 = cayley_inv_raw(Complex64::new(lambda, 0.0));
    let omz = ONE - z;
    -omz * omz * omz * (ONE - tau0) / (2.0 * (z - tau0))
}

impl HerglotzField {
    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn with_order(mut self, order: RegularityOrder) -> Self {
        self.order = order;
        self
    }

    pub fn order(&self) -> RegularityOrder {
        self.order
    }

    pub fn horizon(&self) -> f64 {
        match &self.kind {
            FieldKind::Radial { k, .. } => k.horizon(),
            FieldKind::ChordalHalfPlane { lambda } => lambda.horizon(),
            FieldKind::General { tau, .. } => tau.horizon(),
            FieldKind::Autonomous { horizon, .. } => *horizon,
        }
    }

    /// True when the variant lives on the upper half-plane.
    pub fn is_half_plane(&self) -> bool {
        matches!(self.kind, FieldKind::ChordalHalfPlane { .. })
    }

    /// True when the natural evaluation is the decreasing-direction velocity
    /// (chordal data, native or transported); the forward generator is then
    /// the negative of [`eval`](Self::eval).
    pub fn decreasing_native(&self) -> bool {
        matches!(
            &self.kind,
            FieldKind::ChordalHalfPlane { .. }
                | FieldKind::General {
                    p: PSpec::ChordalPullback(_),
                    ..
                }
        )
    }

    /// Time points that adaptive integration must not straddle.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = match &self.kind {
            FieldKind::Radial { k, .. } => k.breakpoints().to_vec(),
            FieldKind::ChordalHalfPlane { lambda } => lambda.breakpoints().to_vec(),
            FieldKind::General { tau, p } => {
                let mut v = tau.breakpoints().to_vec();
                match p {
                    PSpec::Pieces(pieces) => v.extend(pieces.iter().map(|(s, _)| *s)),
                    PSpec::ChordalPullback(lambda) => v.extend(lambda.breakpoints()),
                }
                v
            }
            FieldKind::Autonomous { horizon, .. } => vec![0.0, *horizon],
        };
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }

    /// Variant-native evaluation with domain and horizon validation. Disk
    /// variants take `|z| < 1`; the chordal variant takes `Im z > 0` and
    /// signals proximity to the driving singularity.
    pub fn eval(&self, z: Complex64, t: f64) -> Result<Complex64> {
        let horizon = self.horizon();
        if !(0.0..=horizon * (1.0 + 1e-14) + 1e-300).contains(&t) {
            return Err(Error::OutsideHorizon { t, horizon });
        }
        match &self.kind {
            FieldKind::ChordalHalfPlane { lambda } => {
                if !(z.im > 0.0) {
                    return Err(Error::OutsideHalfPlane { imag: z.im });
                }
                let l = lambda.eval_clamped(t);
                if (z - l).norm() < DEFAULT_SINGULARITY_MARGIN {
                    return Err(Error::NearSingularity {
                        distance: (z - l).norm(),
                        margin: DEFAULT_SINGULARITY_MARGIN,
                    });
                }
            }
            _ => {
                if !(z.norm() < 1.0) {
                    return Err(Error::OutsideDisk { modulus: z.norm() });
                }
            }
        }
        Ok(self.eval_unchecked(z, t))
    }

    /// Raw evaluation used by integrator stages: horizon-clamped, no domain
    /// validation; singular denominators propagate as large or non-finite
    /// values, which the step control rejects.
    pub(crate) fn eval_unchecked(&self, z: Complex64, t: f64) -> Complex64 {
        match &self.kind {
            FieldKind::Radial { k, p0 } => {
                let kv = k.eval_clamped(t);
                let kn = kv / kv.norm();
                -z * p0.eval(kn * z)
            }
            FieldKind::ChordalHalfPlane { lambda } => {
                2.0 * (z - lambda.eval_clamped(t)).inv()
            }
            FieldKind::General { tau, p } => match p {
                PSpec::Pieces(pieces) => {
                    let tv = tau.at(t);
                    let spec = PSpec::piece_at(pieces, t);
                    (tv - z) * (ONE - tv.conj() * z) * spec.eval(z)
                }
                PSpec::ChordalPullback(lambda) => {
                    chordal_pullback(z, lambda.eval_clamped(t).re)
                }
            },
            FieldKind::Autonomous { tau, p, .. } => {
                (tau - z) * (ONE - tau.conj() * z) * p.eval(z)
            }
        }
    }

    /// The forward Herglotz generator on the disk: the field of the
    /// evolution-family ODE `dw/dt = G(w, t)`. Errors for the half-plane
    /// variant, which must be transported first.
    pub fn generator(&self, z: Complex64, t: f64) -> Result<Complex64> {
        if self.is_half_plane() {
            return Err(Error::HalfPlaneField);
        }
        let v = self.eval(z, t)?;
        Ok(if self.decreasing_native() { -v } else { v })
    }

    pub(crate) fn generator_unchecked(&self, z: Complex64, t: f64) -> Complex64 {
        let v = self.eval_unchecked(z, t);
        if self.decreasing_native() {
            -v
        } else {
            v
        }
    }

    /// The `tau(t)` of the factored representation, when one is attached.
    pub fn tau_at(&self, t: f64) -> Option<Complex64> {
        match &self.kind {
            FieldKind::Radial { .. } => Some(Complex64::new(0.0, 0.0)),
            FieldKind::ChordalHalfPlane { .. } => None,
            FieldKind::General { tau, .. } => Some(tau.at(t)),
            FieldKind::Autonomous { tau, .. } => Some(*tau),
        }
    }

    /// The `p(z,t)` of the factored representation attached to this variant.
    /// For transported chordal fields this is the algebraic quotient
    /// `eval / ((tau - z)(1 - conj(tau) z))`, whose real part has no definite
    /// sign; positivity for that variant is certified through the
    /// Denjoy-Wolff factorization in [`verify_herglotz`].
    pub fn factored_p_at(&self, z: Complex64, t: f64) -> Option<Complex64> {
        match &self.kind {
            FieldKind::Radial { k, p0 } => {
                let kv = k.eval_clamped(t);
                Some(p0.eval(kv / kv.norm() * z))
            }
            FieldKind::ChordalHalfPlane { .. } => None,
            FieldKind::General { tau, p } => match p {
                PSpec::Pieces(pieces) => Some(PSpec::piece_at(pieces, t).eval(z)),
                PSpec::ChordalPullback(lambda) => {
                    let tv = tau.at(t);
                    let v = chordal_pullback(z, lambda.eval_clamped(t).re);
                    Some(v / ((tv - z) * (ONE - tv.conj() * z)))
                }
            },
            FieldKind::Autonomous { tau, p, .. } => {
                let _ = tau;
                Some(p.eval(z))
            }
        }
    }

    /// The driving singularity on the real line for the chordal variant.
    pub fn singular_point(&self, t: f64) -> Option<f64> {
        match &self.kind {
            FieldKind::ChordalHalfPlane { lambda } => Some(lambda.eval_clamped(t).re),
            _ => None,
        }
    }

    /// A bound function `t -> k_{K,T}(t)` dominating `|eval|` on the compact
    /// set of radius `radius` (for the half-plane variant: the Cayley image
    /// of that disk) over the window `[0, t_window]`.
    pub fn bound(&self, radius: f64, t_window: f64) -> Result<CompactBound> {
        if !(0.0 < radius && radius < 1.0) {
            return Err(Error::BadConfig {
                reason: format!("compact radius must lie in (0,1), got {radius}"),
            });
        }
        if t_window > self.horizon() * (1.0 + 1e-14) {
            return Err(Error::HorizonTooShort {
                needed: t_window,
                horizon: self.horizon(),
            });
        }
        let r = radius;
        let constant = match &self.kind {
            FieldKind::Radial { p0, .. } => r * p0.bound_on(r),
            FieldKind::ChordalHalfPlane { .. } => 2.0 * (1.0 + r) / (1.0 - r),
            FieldKind::General { p, .. } => match p {
                PSpec::Pieces(pieces) => {
                    let pb = pieces
                        .iter()
                        .map(|(_, s)| s.bound_on(r))
                        .fold(0.0_f64, f64::max);
                    (1.0 + r) * (1.0 + r) * pb
                }
                PSpec::ChordalPullback(_) => (1.0 + r).powi(3) / (1.0 - r),
            },
            FieldKind::Autonomous { p, .. } => (1.0 + r) * (1.0 + r) * p.bound_on(r),
        };
        Ok(CompactBound { constant })
    }

    /// The field driven by the time-reflected controls on `[0, big_t]`.
    pub fn time_reversed(&self, big_t: f64) -> Result<HerglotzField> {
        let kind = match &self.kind {
            FieldKind::Radial { k, p0 } => FieldKind::Radial {
                k: k.reversed(big_t)?,
                p0: p0.clone(),
            },
            FieldKind::ChordalHalfPlane { lambda } => FieldKind::ChordalHalfPlane {
                lambda: lambda.reversed(big_t)?,
            },
            FieldKind::General { tau, p } => {
                let p = match p {
                    PSpec::Pieces(pieces) => {
                        // piece i covers [s_i, s_{i+1}); reflected it covers
                        // [T - s_{i+1}, T - s_i). Ties from clamping collapse
                        // to the piece that holds on the open interval.
                        let mut rev: Vec<(f64, HerglotzFunctionSpec)> = Vec::new();
                        let mut ends: Vec<f64> =
                            pieces.iter().skip(1).map(|(s, _)| *s).collect();
                        ends.push(f64::INFINITY);
                        for ((start, spec), end) in pieces.iter().zip(ends).rev() {
                            if *start >= big_t {
                                continue;
                            }
                            let reflected_start = (big_t - end.min(big_t)).max(0.0);
                            match rev.last_mut() {
                                Some(last) if last.0 == reflected_start => {
                                    last.1 = spec.clone();
                                }
                                _ => rev.push((reflected_start, spec.clone())),
                            }
                        }
                        PSpec::Pieces(rev)
                    }
                    PSpec::ChordalPullback(lambda) => {
                        PSpec::ChordalPullback(lambda.reversed(big_t)?)
                    }
                };
                FieldKind::General {
                    tau: tau.reversed(big_t)?,
                    p,
                }
            }
            FieldKind::Autonomous { tau, p, horizon } => {
                if big_t > *horizon * (1.0 + 1e-14) {
                    return Err(Error::HorizonTooShort {
                        needed: big_t,
                        horizon: *horizon,
                    });
                }
                FieldKind::Autonomous {
                    tau: *tau,
                    p: p.clone(),
                    horizon: big_t,
                }
            }
        };
        Ok(HerglotzField {
            kind,
            order: self.order,
        })
    }
}

/// Constant-in-time dominating function for one compact set and window.
#[derive(Clone, Copy, Debug)]
pub struct CompactBound {
    constant: f64,
}

impl CompactBound {
    pub fn at(&self, _t: f64) -> f64 {
        self.constant
    }
}

/// A single positivity or bound violation found by [`verify_herglotz`].
#[derive(Clone, Debug)]
pub struct HerglotzViolation {
    pub z: Complex64,
    pub t: f64,
    pub kind: ViolationKind,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// `Re p(z,t) < -1e-12` in the positive factorization.
    RealPartNegative,
    /// `Im p(w,t) < -1e-12` for the half-plane kernel.
    ImagPartNegative,
    /// `|G(z,t)|` exceeds the declared compact bound.
    BoundExceeded,
}

#[derive(Clone, Debug)]
pub struct HerglotzReport {
    pub sample_count: usize,
    pub violations: Vec<HerglotzViolation>,
}

impl HerglotzReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

const POSITIVITY_TOL: f64 = 1e-12;

/// Samples the positivity of the attached Herglotz function and the compact
/// bound of the field over a deterministic low-discrepancy set. Violations
/// are report entries, never errors.
pub fn verify_herglotz(field: &HerglotzField, sample_count: usize) -> HerglotzReport {
    let mut violations = Vec::new();
    let horizon = field.horizon();
    let n = sample_count.max(1);
    for i in 0..n {
        let u = (((i as f64) + 0.5) * 0.618_033_988_749_895).fract();
        let v = (((i as f64) + 0.5) * 0.754_877_666_246_693).fract();
        let w = (((i as f64) + 0.5) * 0.569_840_290_998_053).fract();
        let r = 0.93 * u.sqrt();
        let theta = std::f64::consts::TAU * v;
        let t = horizon * 0.9999 * w;
        let (z, p_check) = if field.is_half_plane() {
            let zh = cayley_raw(Complex64::from_polar(r, theta));
            let pv = field.eval_unchecked(zh, t);
            (zh, PositivityCheck::HalfPlane(pv))
        } else {
            let zd = Complex64::from_polar(r, theta);
            let pv = match field.kind() {
                FieldKind::General {
                    p: PSpec::ChordalPullback(_),
                    ..
                } => {
                    // The transported generator factors through the boundary
                    // Denjoy-Wolff point 1: G = (1 - z)^2 p with Re p >= 0.
                    let omz = ONE - zd;
                    field.generator_unchecked(zd, t) / (omz * omz)
                }
                _ => field
                    .factored_p_at(zd, t)
                    .unwrap_or(Complex64::new(f64::NAN, 0.0)),
            };
            (zd, PositivityCheck::Disk(pv))
        };
        match p_check {
            PositivityCheck::Disk(p) => {
                if !(p.re >= -POSITIVITY_TOL) {
                    violations.push(HerglotzViolation {
                        z,
                        t,
                        kind: ViolationKind::RealPartNegative,
                        value: p.re,
                    });
                }
            }
            PositivityCheck::HalfPlane(p) => {
                // eval is 2/(w - lambda); the half-plane Herglotz kernel is
                // its negative, with nonnegative imaginary part.
                if !(-p.im >= -POSITIVITY_TOL) {
                    violations.push(HerglotzViolation {
                        z,
                        t,
                        kind: ViolationKind::ImagPartNegative,
                        value: -p.im,
                    });
                }
            }
        }
        let radius_for_bound = if field.is_half_plane() {
            r
        } else {
            z.norm()
        }
        .clamp(1e-6, 0.95);
        if let Ok(bound) = field.bound(radius_for_bound, horizon) {
            let g = field.eval_unchecked(z, t).norm();
            if g > bound.at(t) + POSITIVITY_TOL {
                violations.push(HerglotzViolation {
                    z,
                    t,
                    kind: ViolationKind::BoundExceeded,
                    value: g - bound.at(t),
                });
            }
        }
    }
    HerglotzReport {
        sample_count: n,
        violations,
    }
}

enum PositivityCheck {
    Disk(Complex64),
    HalfPlane(Complex64),
}

/// Comparison of the numeric Cayley pullback of `2/(w - lambda)` against the
/// two readings of the printed disk-side formula: with the cube on the
/// binomial, `(1-z)^3`, and with the cube inside, `(1-z^3)`. Reports the
/// maximal deviation of each variant over a deterministic sample set.
#[derive(Clone, Copy, Debug)]
pub struct PullbackComparison {
    pub max_dev_binomial_cubed: f64,
    pub max_dev_cubic_difference: f64,
}

pub fn pullback_formula_comparison(lambda: &DrivingFunction, samples: usize) -> PullbackComparison {
    let mut dev_a = 0.0_f64;
    let mut dev_b = 0.0_f64;
    for i in 0..samples.max(1) {
        let u = (((i as f64) + 0.5) * 0.618_033_988_749_895).fract();
        let v = (((i as f64) + 0.5) * 0.754_877_666_246_693).fract();
        let w = (((i as f64) + 0.5) * 0.569_840_290_998_053).fract();
        let z = Complex64::from_polar(0.9 * u.sqrt(), std::f64::consts::TAU * v);
        let t = lambda.horizon() * 0.999 * w;
        let l = lambda.eval_clamped(t).re;
        let numeric = (2.0 / (cayley_raw(z) - l)) / cayley_derivative(z);
        let tau0 = cayley_inv_raw(Complex64::new(l, 0.0));
        let pref = -(ONE - tau0) / (2.0 * (z - tau0));
        let omz = ONE - z;
        let binomial_cubed = pref * omz * omz * omz;
        let cubic_difference = pref * (ONE - z * z * z);
        dev_a = dev_a.max((numeric - binomial_cubed).norm());
        dev_b = dev_b.max((numeric - cubic_difference).norm());
    }
    PullbackComparison {
        max_dev_binomial_cubed: dev_a,
        max_dev_cubic_difference: dev_b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::DrivingFunction;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn general_tau0_p1(horizon: f64) -> HerglotzField {
        general_field(
            DrivingFunction::constant(c(0.0, 0.0), horizon).unwrap(),
            vec![(0.0, HerglotzFunctionSpec::constant(1.0).unwrap())],
        )
        .unwrap()
    }

    #[test]
    fn general_tau_zero_p_one_is_minus_z() {
        let f = general_tau0_p1(1.0);
        for &(re, im) in &[(0.3, 0.1), (-0.5, 0.4), (0.0, 0.0)] {
            let z = c(re, im);
            assert!((f.eval(z, 0.5).unwrap() + z).norm() < 1e-15);
        }
    }

    #[test]
    fn radial_vanishes_at_origin() {
        let k = DrivingFunction::constant(c(1.0, 0.0), 2.0).unwrap();
        let f = radial_field(k).unwrap();
        assert_eq!(f.eval(c(0.0, 0.0), 1.3).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn radial_hand_values() {
        let f = radial_field(DrivingFunction::constant(c(1.0, 0.0), 1.0).unwrap()).unwrap();
        // -0.5 * 1.5 / 0.5 = -1.5
        assert!((f.eval(c(0.5, 0.0), 0.2).unwrap() - c(-1.5, 0.0)).norm() < 1e-14);
        let g = radial_field(DrivingFunction::constant(c(-1.0, 0.0), 1.0).unwrap()).unwrap();
        // -0.5 * 0.5 / 1.5 = -1/6
        assert!((g.eval(c(0.5, 0.0), 0.2).unwrap() - c(-1.0 / 6.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn radial_rejects_non_unimodular_driver() {
        let k = DrivingFunction::constant(c(0.7, 0.0), 1.0).unwrap();
        assert!(matches!(
            radial_field(k),
            Err(Error::NonUnimodularDriver { .. })
        ));
    }

    #[test]
    fn chordal_hand_values() {
        let f =
            chordal_field_halfplane(DrivingFunction::constant_real(0.0, 2.0).unwrap()).unwrap();
        assert!((f.eval(c(0.0, 1.0), 0.3).unwrap() - c(0.0, -2.0)).norm() < 1e-15);
        assert!((f.eval(c(0.0, 2.0), 1.7).unwrap() - c(0.0, -1.0)).norm() < 1e-15);
        let g = chordal_field_halfplane(
            DrivingFunction::linear(c(0.0, 0.0), c(2.0, 0.0), 2.0).unwrap(),
        )
        .unwrap();
        assert!((g.eval(c(0.0, 1.0), 0.0).unwrap() - c(0.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn chordal_signals_singularity_proximity() {
        let f =
            chordal_field_halfplane(DrivingFunction::constant_real(0.0, 1.0).unwrap()).unwrap();
        assert!(matches!(
            f.eval(c(0.0, 1e-9), 0.5),
            Err(Error::NearSingularity { .. })
        ));
    }

    #[test]
    fn eval_rejects_time_outside_horizon() {
        let f = general_tau0_p1(1.0);
        assert!(matches!(
            f.eval(c(0.1, 0.0), 1.5),
            Err(Error::OutsideHorizon { .. })
        ));
    }

    #[test]
    fn transported_field_matches_pullback_oracle() {
        let lambda = DrivingFunction::constant_real(0.0, 1.0).unwrap();
        let chordal = chordal_field_halfplane(lambda).unwrap();
        let disk = transport_to_disk(&chordal).unwrap();
        // tau = H^{-1}(0) = -1, value at the origin is -1
        assert!((disk.tau_at(0.3).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((disk.eval(c(0.0, 0.0), 0.3).unwrap() - c(-1.0, 0.0)).norm() < 1e-14);
        // chain-rule oracle at scattered points
        for i in 0..10 {
            let u = ((i as f64 + 0.5) * 0.618_033_988_749_895).fract();
            let v = ((i as f64 + 0.5) * 0.754_877_666_246_693).fract();
            let z = Complex64::from_polar(0.85 * u.sqrt(), std::f64::consts::TAU * v);
            let t = 0.97 * ((i as f64 + 0.5) * 0.41).fract();
            let oracle = (2.0 / (cayley_raw(z) - 0.0)) / cayley_derivative(z);
            let got = disk.eval(z, t).unwrap();
            assert!(
                (got - oracle).norm() < 1e-12,
                "pullback mismatch at {z}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn transported_field_roundtrips_to_half_plane() {
        let lambda = DrivingFunction::constant_real(1.5, 1.0).unwrap();
        let chordal = chordal_field_halfplane(lambda).unwrap();
        let disk = transport_to_disk(&chordal).unwrap();
        for i in 0..12 {
            let u = ((i as f64 + 0.3) * 0.618_033_988_749_895).fract();
            let v = ((i as f64 + 0.3) * 0.754_877_666_246_693).fract();
            let z = Complex64::from_polar(0.8 * u.sqrt(), std::f64::consts::TAU * v);
            let w = cayley_raw(z);
            let pushed = disk.eval(z, 0.4).unwrap() * cayley_derivative(z);
            let expect = 2.0 / (w - 1.5);
            assert!((pushed - expect).norm() < 1e-11);
        }
    }

    #[test]
    fn representation_fidelity_of_factored_parts() {
        let tau = DrivingFunction::linear(c(0.1, 0.0), c(0.3, 0.2), 2.0).unwrap();
        let spec = HerglotzFunctionSpec::new(
            vec![
                Atom {
                    weight: 0.6,
                    point: c(1.0, 0.0),
                },
                Atom {
                    weight: 0.4,
                    point: c(0.0, -1.0),
                },
            ],
            0.1,
        )
        .unwrap();
        let f = general_field(tau, vec![(0.0, spec)]).unwrap();
        for i in 0..20 {
            let u = ((i as f64 + 0.5) * 0.618_033_988_749_895).fract();
            let v = ((i as f64 + 0.5) * 0.754_877_666_246_693).fract();
            let z = Complex64::from_polar(0.9 * u.sqrt(), std::f64::consts::TAU * v);
            let t = 2.0 * 0.999 * ((i as f64 + 0.5) * 0.37).fract();
            let tau_v = f.tau_at(t).unwrap();
            let p = f.factored_p_at(z, t).unwrap();
            let direct = f.eval(z, t).unwrap();
            let factored = (tau_v - z) * (ONE - tau_v.conj() * z) * p;
            assert!((direct - factored).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_structure_at_interior_tau() {
        let tau = DrivingFunction::constant(c(0.25, -0.1), 1.0).unwrap();
        let f = general_field(
            tau,
            vec![(0.0, HerglotzFunctionSpec::schwarz_kernel())],
        )
        .unwrap();
        let g = f.eval(c(0.25, -0.1), 0.5).unwrap();
        assert!(g.norm() < 1e-13);
    }

    #[test]
    fn verify_herglotz_clean_on_standard_fields() {
        assert!(verify_herglotz(&general_tau0_p1(1.0), 500).is_clean());
        let atom = HerglotzFunctionSpec::schwarz_kernel();
        let f = general_field(
            DrivingFunction::constant(c(0.0, 0.0), 1.0).unwrap(),
            vec![(0.0, atom)],
        )
        .unwrap();
        assert!(verify_herglotz(&f, 500).is_clean());
        let radial =
            radial_field(DrivingFunction::constant(c(1.0, 0.0), 1.0).unwrap()).unwrap();
        assert!(verify_herglotz(&radial, 500).is_clean());
        let chordal =
            chordal_field_halfplane(DrivingFunction::constant_real(0.0, 1.0).unwrap()).unwrap();
        assert!(verify_herglotz(&chordal, 500).is_clean());
        assert!(verify_herglotz(&transport_to_disk(&chordal).unwrap(), 500).is_clean());
    }

    #[test]
    fn verify_herglotz_flags_negative_weight() {
        let corrupted = HerglotzFunctionSpec::new_unchecked(
            vec![Atom {
                weight: -1.0,
                point: c(1.0, 0.0),
            }],
            0.0,
        );
        let f = HerglotzField {
            kind: FieldKind::General {
                tau: TauSpec::Driver(DrivingFunction::constant(c(0.0, 0.0), 1.0).unwrap()),
                p: PSpec::Pieces(vec![(0.0, corrupted)]),
            },
            order: RegularityOrder::Infinite,
        };
        let report = verify_herglotz(&f, 500);
        assert!(!report.is_clean());
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::RealPartNegative));
    }

    #[test]
    fn bound_dominates_sampled_values() {
        let radial =
            radial_field(DrivingFunction::constant(c(1.0, 0.0), 1.0).unwrap()).unwrap();
        let b = radial.bound(0.7, 1.0).unwrap();
        for i in 0..200 {
            let z = Complex64::from_polar(
                0.7 * (((i as f64) * 0.618).fract()),
                std::f64::consts::TAU * ((i as f64) * 0.754).fract(),
            );
            let t = ((i as f64) * 0.41).fract();
            assert!(radial.eval(z, t).unwrap().norm() <= b.at(t) + 1e-12);
        }
    }

    #[test]
    fn printed_formula_comparison_selects_binomial_cube() {
        let lambda = DrivingFunction::linear(c(-1.0, 0.0), c(2.0, 0.0), 1.0).unwrap();
        let cmp = pullback_formula_comparison(&lambda, 300);
        assert!(cmp.max_dev_binomial_cubed < 1e-12);
        assert!(cmp.max_dev_cubic_difference > 1e-2);
    }

    #[test]
    fn time_reversal_reflects_driver() {
        let lambda = DrivingFunction::linear(c(0.0, 0.0), c(3.0, 0.0), 3.0).unwrap();
        let f = chordal_field_halfplane(lambda).unwrap();
        let r = f.time_reversed(2.0).unwrap();
        // lambda(t) = t, reversed on [0,2]: 2 - t
        assert!((r.singular_point(0.5).unwrap() - 1.5).abs() < 1e-12);
        assert!((r.horizon() - 2.0).abs() < 1e-15);
    }
}
