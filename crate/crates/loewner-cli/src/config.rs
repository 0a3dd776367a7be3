//! Scenario configuration: a single TOML file describing the field, solver
//! overrides, per-command options and output paths.

use num_complex::Complex64;
use serde::Deserialize;

use loewner::{
    autonomous, chordal_field_halfplane, general_field, radial_field, radial_field_with,
    transport_to_disk, Atom, DrivingFunction, HerglotzField, HerglotzFunctionSpec,
    RegularityOrder, Segment, SegmentKind, SolverConfig,
};

/// A complex value in config form: either a real scalar or an `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexSpec {
    pub fn to_complex(self) -> Complex64 {
        match self {
            ComplexSpec::Real(x) => Complex64::new(x, 0.0),
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub kind: String,
    pub t_start: f64,
    pub t_end: f64,
    pub value: Option<ComplexSpec>,
    pub start: Option<ComplexSpec>,
    pub end: Option<ComplexSpec>,
    pub coeff: Option<ComplexSpec>,
    pub times: Option<Vec<f64>>,
    pub values: Option<Vec<ComplexSpec>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub weight: f64,
    pub point: ComplexSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    pub t_start: f64,
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    /// "radial" | "chordal" | "general" | "autonomous"
    pub kind: String,
    pub horizon: f64,
    /// Transport a chordal field to the disk through the Cayley map.
    #[serde(default)]
    pub transport: bool,
    /// Driver segments (k, lambda or tau depending on `kind`).
    #[serde(default)]
    pub segments: Vec<SegmentConfig>,
    /// Herglotz atoms of p (p0 for radial; the single piece for general;
    /// the generator p for autonomous).
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
    #[serde(default)]
    pub offset: f64,
    /// Time-dependent p pieces for the general variant (overrides
    /// `atoms`/`offset` when present).
    #[serde(default)]
    pub pieces: Vec<PieceConfig>,
    /// Denjoy-Wolff-style point of the autonomous variant.
    pub tau: Option<ComplexSpec>,
    /// Declared regularity order d; omitted means d = infinity.
    pub order: Option<f64>,
    /// Enforce value continuity at interior driver breakpoints.
    #[serde(default)]
    pub require_continuity: bool,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_step: Option<f64>,
    pub boundary_margin: Option<f64>,
    pub singularity_margin: Option<f64>,
    pub max_steps: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub t_start: f64,
    pub t_end: f64,
    /// Number of output samples across the window (>= 1).
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    11
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub points: Vec<ComplexSpec>,
    #[serde(flatten)]
    pub window: WindowConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub points: Vec<ComplexSpec>,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HullConfig {
    pub times: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_epsilon() -> f64 {
    loewner::hull::DEFAULT_EPSILON
}

fn default_radius() -> f64 {
    loewner::hull::DEFAULT_SAMPLE_RADIUS
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Subset of: semigroup, pde_residual, characteristics,
    /// duality_roundtrip, inclusion, herglotz, constants.
    pub checks: Vec<String>,
    pub window: Option<[f64; 2]>,
    pub big_t: Option<f64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub constant_samples: Option<usize>,
    #[serde(default)]
    pub herglotz_samples: Option<usize>,
    /// Swap the inclusion time labels to model a corrupted chain.
    #[serde(default)]
    pub corrupt_time_swap: bool,
    /// Tolerance overrides per check; defaults are pinned in the runner.
    #[serde(default)]
    pub semigroup_tol: Option<f64>,
    #[serde(default)]
    pub pde_h: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualityConfig {
    pub big_t: f64,
    pub points: Vec<ComplexSpec>,
    pub pairs: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<String>,
    pub json: Option<String>,
    pub svg: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub field: FieldConfig,
    #[serde(default)]
    pub solver: SolverOverrides,
    pub evolve: Option<EvolveConfig>,
    pub reverse: Option<EvolveConfig>,
    pub chain: Option<ChainConfig>,
    pub hull: Option<HullConfig>,
    pub verify: Option<VerifyConfig>,
    pub duality: Option<DualityConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config error: {e}"))
    }

    pub fn solver_config(&self, tol_override: Option<f64>) -> Result<SolverConfig, String> {
        let mut cfg = SolverConfig::default();
        if let Some(x) = self.solver.rel_tol {
            cfg.rel_tol = x;
        }
        if let Some(x) = self.solver.abs_tol {
            cfg.abs_tol = x;
        }
        if let Some(x) = self.solver.max_step {
            cfg.max_step = x;
        }
        if let Some(x) = self.solver.boundary_margin {
            cfg.boundary_margin = x;
        }
        if let Some(x) = self.solver.singularity_margin {
            cfg.singularity_margin = x;
        }
        if let Some(x) = self.solver.max_steps {
            cfg.max_steps = x;
        }
        if let Some(t) = tol_override {
            cfg.rel_tol = t;
            cfg.abs_tol = t * 1e-2;
        }
        cfg.validate().map_err(|e| format!("config error: {e}"))?;
        Ok(cfg)
    }

    /// Builds the driver from the `segments` table, checking the tiling
    /// against the declared horizon.
    pub fn build_driver(&self) -> Result<DrivingFunction, String> {
        let mut segments = Vec::with_capacity(self.field.segments.len());
        for seg in &self.field.segments {
            let need = |opt: Option<ComplexSpec>, key: &str| {
                opt.map(ComplexSpec::to_complex)
                    .ok_or_else(|| format!("config error: segment kind `{}` needs key `{key}`", seg.kind))
            };
            let kind = match seg.kind.as_str() {
                "constant" => SegmentKind::Constant {
                    value: need(seg.value, "value")?,
                },
                "linear" => SegmentKind::Linear {
                    start: need(seg.start, "start")?,
                    end: need(seg.end, "end")?,
                },
                "sqrt_scaled" => SegmentKind::SqrtScaled {
                    coeff: need(seg.coeff, "coeff")?,
                },
                "tabulated" => {
                    let times = seg
                        .times
                        .clone()
                        .ok_or_else(|| "config error: tabulated segment needs key `times`".to_string())?;
                    let values = seg
                        .values
                        .clone()
                        .ok_or_else(|| "config error: tabulated segment needs key `values`".to_string())?
                        .into_iter()
                        .map(ComplexSpec::to_complex)
                        .collect();
                    SegmentKind::Tabulated { times, values }
                }
                other => return Err(format!("config error: unknown segment kind `{other}`")),
            };
            segments.push(Segment {
                t_start: seg.t_start,
                t_end: seg.t_end,
                kind,
            });
        }
        let driver = DrivingFunction::piecewise(segments, self.field.require_continuity)
            .map_err(|e| format!("config error: {e}"))?;
        if (driver.horizon() - self.field.horizon).abs() > 1e-12 {
            return Err(format!(
                "config error: segments tile [0, {}] but horizon is {}",
                driver.horizon(),
                self.field.horizon
            ));
        }
        let driver = match self.field.order {
            Some(d) => driver.with_order(RegularityOrder::Finite(d)),
            None => driver,
        };
        Ok(driver)
    }

    fn herglotz_spec(atoms: &[AtomConfig], offset: f64) -> Result<HerglotzFunctionSpec, String> {
        let atoms = atoms
            .iter()
            .map(|a| Atom {
                weight: a.weight,
                point: a.point.to_complex(),
            })
            .collect();
        HerglotzFunctionSpec::new(atoms, offset).map_err(|e| format!("config error: {e}"))
    }

    /// Builds the configured field. Chordal fields with `transport = true`
    /// come back transported to the disk.
    pub fn build_field(&self) -> Result<HerglotzField, String> {
        let field = match self.field.kind.as_str() {
            "radial" => {
                let k = self.build_driver()?;
                if self.field.atoms.is_empty() && self.field.offset == 0.0 {
                    radial_field(k)
                } else {
                    radial_field_with(
                        k,
                        Self::herglotz_spec(&self.field.atoms, self.field.offset)?,
                    )
                }
                .map_err(|e| format!("config error: {e}"))?
            }
            "chordal" => {
                let lambda = self.build_driver()?;
                let chordal =
                    chordal_field_halfplane(lambda).map_err(|e| format!("config error: {e}"))?;
                if self.field.transport {
                    transport_to_disk(&chordal).map_err(|e| format!("config error: {e}"))?
                } else {
                    chordal
                }
            }
            "general" => {
                let tau = self.build_driver()?;
                let pieces = if self.field.pieces.is_empty() {
                    vec![(0.0, Self::herglotz_spec(&self.field.atoms, self.field.offset)?)]
                } else {
                    let mut out = Vec::with_capacity(self.field.pieces.len());
                    for piece in &self.field.pieces {
                        out.push((
                            piece.t_start,
                            Self::herglotz_spec(&piece.atoms, piece.offset)?,
                        ));
                    }
                    out
                };
                general_field(tau, pieces).map_err(|e| format!("config error: {e}"))?
            }
            "autonomous" => {
                let tau = self
                    .field
                    .tau
                    .ok_or_else(|| "config error: autonomous field needs key `tau`".to_string())?
                    .to_complex();
                let p = Self::herglotz_spec(&self.field.atoms, self.field.offset)?;
                autonomous(tau, p, self.field.horizon)
                    .map_err(|e| format!("config error: {e}"))?
            }
            other => return Err(format!("config error: unknown field kind `{other}`")),
        };
        Ok(match self.field.order {
            Some(d) => field.with_order(RegularityOrder::Finite(d)),
            None => field,
        })
    }
}
