// Validation code writes `!(x > y)` on purpose: a NaN fails the inner
// comparison and is rejected with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Deterministic Loewner evolutions driven by Herglotz vector fields.
//!
//! The crate builds the four structured objects of the theory — evolution
//! families, reverse evolution families, increasing and decreasing Loewner
//! chains — from piecewise driving data, integrates the underlying
//! Carathéodory ODEs in all three initial-condition regimes (forward data at
//! the left endpoint, decreasing data at zero with blow-up detection, reverse
//! data at the right endpoint), traces chordal hulls with half-plane capacity
//! estimates, and certifies the structural identities (semigroup laws, PDE
//! residuals, characteristic constancy, duality round-trips, inclusion)
//! numerically.

pub mod driver;
pub mod family;
pub mod geometry;
pub mod herglotz;
pub mod hull;
pub mod solver;
pub mod verify;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point lies outside the open unit disk (|z| = {modulus})")]
    OutsideDisk { modulus: f64 },
    #[error("point lies outside the open upper half-plane (Im = {imag})")]
    OutsideHalfPlane { imag: f64 },
    #[error("rotation must have unit modulus (got |r| = {modulus})")]
    NonUnimodularRotation { modulus: f64 },
    #[error("circle driver must be unimodular: |k({t})| = {modulus}")]
    NonUnimodularDriver { t: f64, modulus: f64 },
    #[error("chordal driver must be real-valued: Im lambda({t}) = {imag}")]
    NonRealDriver { t: f64, imag: f64 },
    #[error("atom weight must be positive (got {weight})")]
    NonPositiveWeight { weight: f64 },
    #[error("offset must be nonnegative (got {offset})")]
    NegativeOffset { offset: f64 },
    #[error("atom boundary point must have unit modulus (got |x| = {modulus})")]
    AtomOffCircle { modulus: f64 },
    #[error("radial p0 must satisfy p0(0) = 1 (got {value})")]
    UnnormalizedHerglotz { value: f64 },
    #[error("tau({t}) lies outside the closed unit disk (|tau| = {modulus})")]
    TauOutsideClosedDisk { t: f64, modulus: f64 },
    #[error("time {t} lies outside the horizon [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },
    #[error("driver segments must tile [0, horizon] contiguously (gap near t = {t})")]
    SegmentGap { t: f64 },
    #[error("tabulated samples must carry strictly increasing times")]
    NonMonotoneSamples,
    #[error("a driver needs at least one segment")]
    EmptyDriver,
    #[error("value jump {jump} at interior breakpoint t = {t}")]
    DiscontinuousAtBreakpoint { t: f64, jump: f64 },
    #[error("field lives on the upper half-plane; transport it to the disk first")]
    HalfPlaneField,
    #[error("operation requires a half-plane field")]
    DiskField,
    #[error("evaluation within {margin} of the driving singularity (distance {distance})")]
    NearSingularity { distance: f64, margin: f64 },
    #[error("step limit reached after {steps} steps at t = {t}")]
    StepLimit { steps: usize, t: f64 },
    #[error("invalid configuration: {reason}")]
    BadConfig { reason: String },
    #[error("interval end {t} precedes start {s}")]
    BadInterval { s: f64, t: f64 },
    #[error("the two marked points must be distinct")]
    CoincidentPoints,
    #[error("time sample t = {t} is within {h} of a driver breakpoint")]
    BreakpointCollision { t: f64, h: f64 },
    #[error("needed horizon {needed} exceeds available horizon {horizon}")]
    HorizonTooShort { needed: f64, horizon: f64 },
    #[error("chain truncation {truncation} has not stabilized (|delta| = {delta})")]
    ChainNotConverged { truncation: f64, delta: f64 },
    #[error("least-squares fit is ill-conditioned")]
    IllConditionedFit,
}

pub type Result<T> = std::result::Result<T, Error>;

pub use driver::{DrivingFunction, RegularityOrder, Segment, SegmentKind};
pub use family::{
    chain_inverse, decreasing_chain, domain_time, duality_transform, evolution_family,
    increasing_chain_radial, reverse_family, two_point_check, ChainPreimage, ChainSamples,
    DecreasingChain, Direction, FamilyHandle, IncreasingChainRadial, TwoPointReport,
};
pub use geometry::{
    cayley, cayley_inv, pseudo_dist, DiskPoint, HalfPlanePoint, MoebiusAutomorphism,
};
pub use herglotz::{
    autonomous, chordal_field_halfplane, general_field, pullback_formula_comparison, radial_field,
    radial_field_with, transport_to_disk, verify_herglotz, Atom, FieldKind, HerglotzField,
    HerglotzFunctionSpec, HerglotzReport, PSpec, TauSpec,
};
pub use hull::{hcap_estimate, trace_hull, trace_hull_with_radius, HcapEstimate, HullTrace};
pub use solver::{
    chordal_solve, solve_decreasing, solve_forward, solve_reverse_endpoint, ChordalDirection,
    SolverConfig, Trajectory, TrajectoryStatus,
};
pub use verify::{
    check_characteristics, check_duality_roundtrip, check_inclusion, check_pde_residual,
    check_semigroup, estimate_universal_constants, pde_convergence, ConstantsPlan,
    ConstantsReport, PdeConvergence, VerificationReport, WorstCase,
};
