//! Run configuration: a single JSON document plus flag overrides.
//! Flags win over the file. The merged document is canonicalized by
//! field order and hashed; the hash lands in every artifact so outputs
//! can be traced back to the exact configuration.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shelab::heatinit::InitialDatum;
use shelab::kernels::{KernelKind, SpectralModel};
use shelab::solver::{DiffusionCoefficient, SolverConfig};
use shelab::weights::{Weight, WeightKind};
use shelab::LatticeGrid;

#[derive(Debug)]
pub enum CliError {
    /// Schema or validation problem: exit code 2, message names the
    /// offending field path.
    Config { path: String, msg: String },
    /// Anything that goes wrong after the configuration is accepted:
    /// exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn config(path: &str, msg: impl Into<String>) -> Self {
        CliError::Config {
            path: path.to_string(),
            msg: msg.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config { path, msg } => write!(f, "config error at {path}: {msg}"),
            CliError::Runtime(msg) => write!(f, "error: {msg}"),
        }
    }
}

pub fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelCfg {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct WeightCfg {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DatumCfg {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parts: Option<Vec<(f64, DatumCfg)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CoeffCfg {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LipCfg {
    pub l_b: f64,
    pub l_0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverCfg {
    pub dt: f64,
    pub t_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dealias: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScanCfg {
    pub t_max: f64,
    pub radius: f64,
    pub resolution: usize,
}

/// The one configuration document. Commands read the subset they
/// need; unknown JSON fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_tilde: Option<WeightCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datum: Option<DatumCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<CoeffCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<LipCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverCfg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub windows: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projections: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_spacing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanCfg>,
}

impl RunConfig {
    /// sha-256 of the canonical serialization (fixed field order,
    /// absent fields skipped). Idempotent: reparsing the canonical
    /// form and rehashing gives the same digest.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(&canonical);
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn output_dir(&self) -> &str {
        self.output.as_deref().unwrap_or("shelab-out")
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn threads_or_default(&self) -> usize {
        self.threads.unwrap_or(1).max(1)
    }
}

pub fn parse_file(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config {
        path: "<config file>".to_string(),
        msg: e.to_string(),
    })
}

fn require<T: Copy>(v: Option<T>, path: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::config(path, "required field is missing"))
}

fn positive(v: Option<f64>, path: &str) -> Result<f64, CliError> {
    let x = require(v, path)?;
    if !(x > 0.0) {
        return Err(CliError::config(path, format!("must be positive, got {x}")));
    }
    Ok(x)
}

pub fn build_model(cfg: &RunConfig) -> Result<SpectralModel, CliError> {
    let m = cfg
        .model
        .as_ref()
        .ok_or_else(|| CliError::config("model", "required section is missing"))?;
    let d = require(m.d, "model.d")?;
    let kind = match m.kind.as_str() {
        "bessel-corr" => KernelKind::BesselCorrelation {
            s: positive(m.s, "model.s")?,
        },
        "bessel-spectral" => KernelKind::BesselSpectral {
            s: positive(m.s, "model.s")?,
        },
        "matern" => KernelKind::Matern {
            phi: positive(m.phi, "model.phi")?,
            scale: positive(m.scale, "model.scale")?,
            nu: positive(m.nu, "model.nu")?,
        },
        "riesz-type" => KernelKind::RieszType {
            s1: positive(m.s1, "model.s1")?,
            s2: positive(m.s2, "model.s2")?,
        },
        "triangle-1d" => KernelKind::Triangle1D,
        "sinc-squared-1d" => KernelKind::SincSquared1D,
        "product-triangle" => KernelKind::ProductTriangle,
        other => {
            return Err(CliError::config(
                "model.kind",
                format!(
                    "unknown kind {other:?}; expected bessel-corr, bessel-spectral, matern, \
                     riesz-type, triangle-1d, sinc-squared-1d or product-triangle"
                ),
            ))
        }
    };
    SpectralModel::new(kind, d).map_err(|e| CliError::config("model", e.to_string()))
}

fn build_weight_inner(w: &WeightCfg, d: usize, path: &str) -> Result<Weight, CliError> {
    let param = || positive(w.a, &format!("{path}.a"));
    let kind = match w.kind.as_str() {
        "exp-decay" => WeightKind::ExpDecay { a: param()? },
        "poly-decay" => WeightKind::PolyDecay { a: param()? },
        "stretched-exp" => WeightKind::StretchedExp { b: param()? },
        other => {
            return Err(CliError::config(
                &format!("{path}.kind"),
                format!("unknown kind {other:?}; expected exp-decay, poly-decay or stretched-exp"),
            ))
        }
    };
    Weight::new(kind, d).map_err(|e| CliError::config(path, e))
}

pub fn build_weight(cfg: &RunConfig, d: usize) -> Result<Weight, CliError> {
    let w = cfg
        .weight
        .as_ref()
        .ok_or_else(|| CliError::config("weight", "required section is missing"))?;
    build_weight_inner(w, d, "weight")
}

pub fn build_weight_tilde(cfg: &RunConfig, d: usize) -> Result<Option<Weight>, CliError> {
    cfg.weight_tilde
        .as_ref()
        .map(|w| build_weight_inner(w, d, "weight_tilde"))
        .transpose()
}

fn build_datum_inner(c: &DatumCfg, path: &str) -> Result<InitialDatum, CliError> {
    match c.kind.as_str() {
        "dirac" => Ok(InitialDatum::DiracDelta {
            mass: require(c.mass, &format!("{path}.mass"))?,
            location: c
                .location
                .clone()
                .ok_or_else(|| CliError::config(&format!("{path}.location"), "required"))?,
        }),
        "constant" => Ok(InitialDatum::ConstantDensity {
            c: require(c.c, &format!("{path}.c"))?,
        }),
        "riesz" => Ok(InitialDatum::RieszSingular {
            alpha: positive(c.alpha, &format!("{path}.alpha"))?,
        }),
        "poly-growth" => Ok(InitialDatum::PolyGrowth {
            alpha: positive(c.alpha, &format!("{path}.alpha"))?,
        }),
        "signed-combo" => {
            let parts = c
                .parts
                .as_ref()
                .ok_or_else(|| CliError::config(&format!("{path}.parts"), "required"))?;
            let mut out = Vec::with_capacity(parts.len());
            for (i, (coeff, part)) in parts.iter().enumerate() {
                out.push((
                    *coeff,
                    build_datum_inner(part, &format!("{path}.parts[{i}]"))?,
                ));
            }
            Ok(InitialDatum::SignedCombo { parts: out })
        }
        other => Err(CliError::config(
            &format!("{path}.kind"),
            format!(
                "unknown kind {other:?}; expected dirac, constant, riesz, poly-growth or \
                 signed-combo"
            ),
        )),
    }
}

pub fn build_datum(cfg: &RunConfig, d: usize) -> Result<InitialDatum, CliError> {
    let c = cfg
        .datum
        .as_ref()
        .ok_or_else(|| CliError::config("datum", "required section is missing"))?;
    let datum = build_datum_inner(c, "datum")?;
    datum
        .validate(d)
        .map_err(|e| CliError::config("datum", e))?;
    Ok(datum)
}

pub fn build_coefficient(cfg: &RunConfig) -> Result<DiffusionCoefficient, CliError> {
    let c = cfg
        .coefficient
        .as_ref()
        .ok_or_else(|| CliError::config("coefficient", "required section is missing"))?;
    match c.kind.as_str() {
        "linear" => Ok(DiffusionCoefficient::Linear {
            lambda: require(c.lambda, "coefficient.lambda")?,
        }),
        "affine" => Ok(DiffusionCoefficient::Affine {
            lambda: require(c.lambda, "coefficient.lambda")?,
            c: require(c.c, "coefficient.c")?,
        }),
        "bounded-sine" => Ok(DiffusionCoefficient::BoundedSine {
            c: require(c.c, "coefficient.c")?,
        }),
        other => Err(CliError::config(
            "coefficient.kind",
            format!("unknown kind {other:?}; expected linear, affine or bounded-sine"),
        )),
    }
}

pub fn build_grid(cfg: &RunConfig, d: usize) -> Result<LatticeGrid, CliError> {
    let g = cfg
        .grid
        .as_ref()
        .ok_or_else(|| CliError::config("grid", "required section is missing"))?;
    LatticeGrid::new(d, g.n, g.length).map_err(|e| CliError::config("grid", e))
}

pub fn build_solver(cfg: &RunConfig) -> Result<SolverConfig, CliError> {
    let s = cfg
        .solver
        .as_ref()
        .ok_or_else(|| CliError::config("solver", "required section is missing"))?;
    if !(s.dt > 0.0) {
        return Err(CliError::config(
            "solver.dt",
            format!("must be positive, got {}", s.dt),
        ));
    }
    if !(s.t_end > 0.0) {
        return Err(CliError::config(
            "solver.t_end",
            format!("must be positive, got {}", s.t_end),
        ));
    }
    let mut sc = SolverConfig::new(s.dt, s.t_end);
    if let Some(records) = &s.records {
        sc = sc.with_records(records.clone());
    }
    if let Some(dealias) = s.dealias {
        sc.dealias = dealias;
    }
    Ok(sc)
}

pub fn model_dimension(cfg: &RunConfig) -> Result<usize, CliError> {
    let m = cfg
        .model
        .as_ref()
        .ok_or_else(|| CliError::config("model", "required section is missing"))?;
    require(m.d, "model.d")
}
