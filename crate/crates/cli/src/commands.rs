//! The five subcommands. Each returns its JSON report and an exit code.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use gfc_core::abelian::{GroupElement, Subgroup};
use gfc_core::curve::{genus_formula, CoverSpec, CurveError};
use gfc_core::ends::{
    build_gluing_graph, classify, EndsCaps, EndsError, GluingCaps, SurfaceFamily,
};
use gfc_core::hyperelliptic::{synth_hyperelliptic, HyperellipticError, ProductOptions};
use gfc_core::monodromy::{
    default_basepoint, euler_genus_oracle, monodromy_representation, MonodromyError, MonodromyRep,
};
use gfc_core::tower::TowerError;
use gfc_core::verify::{run_verify, VerifySettings};

use crate::config::{FamilyKind, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("continuation failure: {0}")]
    Continuation(String),
    #[error("{0}")]
    NotStabilized(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Continuation(_) => 3,
            Self::NotStabilized(_) => 4,
            Self::Divergence(_) => 5,
            Self::Failed(_) | Self::Io(_) => 1,
        }
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<MonodromyError> for CliError {
    fn from(e: MonodromyError) -> Self {
        match e {
            MonodromyError::ContinuationFailure { .. } | MonodromyError::PathPlanning(_) => {
                Self::Continuation(e.to_string())
            }
            MonodromyError::Curve(c) => c.into(),
            MonodromyError::BranchedFiber(_) => Self::Config(e.to_string()),
            other => Self::Failed(other.to_string()),
        }
    }
}

impl From<TowerError> for CliError {
    fn from(e: TowerError) -> Self {
        match e {
            TowerError::Monodromy(m) => m.into(),
            TowerError::Curve(_) | TowerError::Configuration(_) | TowerError::Collision(..) => {
                Self::Config(e.to_string())
            }
            other => Self::Failed(other.to_string()),
        }
    }
}

impl From<EndsError> for CliError {
    fn from(e: EndsError) -> Self {
        match e {
            EndsError::InsufficientDepth(_) => Self::NotStabilized(e.to_string()),
            EndsError::Monodromy(m) => m.into(),
            EndsError::Tower(t) => t.into(),
            EndsError::Curve(_) | EndsError::InvalidFamily(_) | EndsError::UnsupportedRegion(_) => {
                Self::Config(e.to_string())
            }
            other => Self::Failed(other.to_string()),
        }
    }
}

impl From<HyperellipticError> for CliError {
    fn from(e: HyperellipticError) -> Self {
        use HyperellipticError as H;
        match e {
            H::Divergence { .. } | H::TooFewZeros(_) => Self::Divergence(e.to_string()),
            H::Tower(t) => t.into(),
            H::BitsLength { .. }
            | H::BitValue
            | H::CoincidentLimitPoints(..)
            | H::DegenerateMobius
            | H::NoLimitPoints
            | H::AmbiguousPartition { .. }
            | H::BranchAtLimitPoint { .. }
            | H::EmptyPart(_) => Self::Config(e.to_string()),
            other => Self::Failed(other.to_string()),
        }
    }
}

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub depth: Option<usize>,
    pub level: Option<usize>,
    pub tol: Option<f64>,
    pub bare_product: bool,
    pub bits: Option<String>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = self.depth {
            cfg.depth = d;
        }
        if let Some(l) = self.level {
            cfg.level = l;
        }
        if let Some(t) = self.tol {
            cfg.tolerances.identification = t;
        }
        cfg.bare_product |= self.bare_product;
        if let Some(b) = &self.bits {
            let bits = b
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(CliError::Config(format!(
                        "bits must be a string of 0 and 1, got {b:?}"
                    ))),
                })
                .collect::<Result<Vec<u8>, _>>()?;
            cfg.bits = Some(bits);
        }
        cfg.validate().map_err(CliError::Config)
    }
}

/// A finished command: the report to print and the process exit code.
pub struct Output {
    pub report: Value,
    pub code: i32,
}

fn c_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// The truncation described by the configuration at its level.
pub fn cover_spec(cfg: &RunConfig) -> Result<CoverSpec, CliError> {
    let n = cfg.level;
    if n == 2 {
        if cfg.deleted > 0 {
            return Err(CliError::Config("level 2 admits no deleted points".into()));
        }
        return Ok(CoverSpec::classical_fermat(cfg.k)?);
    }
    if let Some(l) = cfg.finite_lambdas() {
        if l.len() < n - 2 {
            return Err(CliError::Config(format!(
                "level {n} needs {} lambdas, got {}",
                n - 2,
                l.len()
            )));
        }
        return Ok(CoverSpec::finite_type(cfg.k, &l[..n - 2])?);
    }
    if !cfg.limit_points.is_empty() {
        let m = cfg.limit_points.len();
        let depth = cfg.depth.max(n.div_ceil(m));
        let lc = cfg.limit_configuration(depth);
        return Ok(lc.cover_spec(cfg.k, &cfg.deleted_indices(), n)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(CoverSpec::random_finite_type(cfg.k, n, &mut rng)?)
}

pub fn cmd_genus(cfg: &RunConfig) -> Result<Output, CliError> {
    let spec = cover_spec(cfg)?;
    let level = spec.group_level();
    let formula = genus_formula(cfg.k, level as u32)?;
    let rep = monodromy_representation(&spec)?;
    let oracle = euler_genus_oracle(&rep)?;
    let agree = formula == oracle;
    Ok(Output {
        report: json!({
            "k": cfg.k,
            "n": cfg.level,
            "deleted": cfg.deleted,
            "group_level": level,
            "genus_formula": formula as i64,
            "euler_genus_oracle": oracle as i64,
            "agree": agree,
        }),
        code: if agree { 0 } else { 1 },
    })
}

fn min_distance(rep: &MonodromyRep) -> f64 {
    rep.points
        .iter()
        .filter_map(|p| p.as_finite())
        .map(|z| (z - rep.basepoint).norm())
        .fold(f64::INFINITY, f64::min)
}

pub fn cmd_monodromy(cfg: &RunConfig) -> Result<Output, CliError> {
    let spec = cover_spec(cfg)?;
    let rep = monodromy_representation(&spec)?;
    let mut rows = Vec::with_capacity(rep.len());
    let mut ok = true;
    for (s, (p, m)) in rep.points.iter().zip(&rep.elements).enumerate() {
        let gen = GroupElement::generator(rep.k, rep.level, s + 1)
            .map_err(|e| CliError::Failed(e.to_string()))?;
        let cyclic = Subgroup::span(rep.k, rep.level, &[gen])
            .map_err(|e| CliError::Failed(e.to_string()))?;
        let member = cyclic
            .contains(m)
            .map_err(|e| CliError::Failed(e.to_string()))?;
        ok &= member && m.order() == rep.k;
        rows.push(json!({
            "index": s,
            "point": p,
            "generator": s + 1,
            "element": m.exponents(),
            "order": m.order(),
            "in_generator_group": member,
        }));
    }
    let product = rep.product();
    ok &= product.is_identity();
    Ok(Output {
        report: json!({
            "k": rep.k,
            "level": rep.level,
            "basepoint": c_json(rep.basepoint),
            "min_distance_to_branch_points": min_distance(&rep),
            "orientation_power": rep.orientation_power,
            "rows": rows,
            "relation": { "product": product.exponents(), "identity": product.is_identity() },
        }),
        code: if ok { 0 } else { 1 },
    })
}

fn family(cfg: &RunConfig) -> Result<(FamilyKind, SurfaceFamily), CliError> {
    let kind = cfg.family.unwrap_or(if cfg.limit_points.is_empty() {
        FamilyKind::FiniteType
    } else {
        FamilyKind::Fermat
    });
    let fam = match kind {
        FamilyKind::FiniteType => {
            let lambdas = match cfg.finite_lambdas() {
                Some(l) => l,
                None => cover_spec(&RunConfig {
                    limit_points: Vec::new(),
                    deleted: 0,
                    ..cfg.clone()
                })?
                .lambdas(),
            };
            SurfaceFamily::FiniteType { k: cfg.k, lambdas }
        }
        FamilyKind::Fermat => SurfaceFamily::Fermat {
            k: cfg.k,
            config: cfg.limit_configuration(cfg.depth),
            deleted: cfg.deleted_indices(),
        },
        FamilyKind::Hyperelliptic => {
            let bits = hyper_bits(cfg)?;
            SurfaceFamily::Hyperelliptic {
                config: cfg.limit_configuration(cfg.depth),
                bits,
            }
        }
    };
    Ok((kind, fam))
}

fn hyper_bits(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let expected = cfg.limit_points.len().saturating_sub(1);
    let bits = cfg.bits.clone().unwrap_or_default();
    if bits.len() != expected {
        return Err(CliError::Config(format!(
            "{} limit points need {expected} bits, got {}",
            cfg.limit_points.len(),
            bits.len()
        )));
    }
    Ok(bits)
}

pub fn cmd_ends(cfg: &RunConfig, dot: Option<&Path>) -> Result<Output, CliError> {
    let (kind, fam) = family(cfg)?;
    let caps = EndsCaps {
        window: cfg.tolerances.stabilization_window,
        ..EndsCaps::default()
    };
    let (triple, report) = classify(&fam, cfg.depth, caps)?;
    let mut out = json!({
        "family": kind,
        "depth": cfg.depth,
        "classification": triple,
        "report": report,
    });
    if let Some(path) = dot {
        if kind != FamilyKind::Fermat || cfg.limit_points.len() != 1 || cfg.deleted != 0 {
            return Err(CliError::Config(
                "the gluing graph needs a Fermat family with one limit point".into(),
            ));
        }
        let n = cfg.level;
        let lc = cfg.limit_configuration(cfg.depth.max(n + 3));
        let spec = lc.cover_spec(cfg.k, &[], n + 3)?;
        let rep = MonodromyRep::standard(&spec, default_basepoint(&spec));
        let graph = build_gluing_graph(&spec, &rep, n, GluingCaps::default())?;
        let (lhs, rhs) = graph.euler_check(&rep)?;
        fs::write(path, graph.to_dot())?;
        out["gluing_graph"] = json!({
            "dot": path.display().to_string(),
            "blacks_total": graph.black_total as u64,
            "blacks_shown": graph.blacks.len(),
            "whites": graph.whites.len(),
            "edges": graph.edges.len(),
            "truncated": graph.truncated,
            "euler_check": [lhs as i64, rhs as i64],
        });
    }
    let code = if report.stabilized { 0 } else { 4 };
    Ok(Output { report: out, code })
}

pub fn cmd_hyper(cfg: &RunConfig, csv: Option<&Path>) -> Result<Output, CliError> {
    let bits = hyper_bits(cfg)?;
    let opts = ProductOptions {
        exponent: cfg.exponent,
        bare: cfg.bare_product,
    };
    let model = synth_hyperelliptic(&cfg.limit_configuration(cfg.depth), &bits, opts)?;
    let validation = model.validate(cfg.seed)?;
    if let Some(path) = csv {
        fs::write(path, model.grid_csv(40))?;
    }
    let factors: Vec<Value> = model
        .factors
        .iter()
        .map(|f| {
            json!({
                "part": f.part + 1,
                "argument": f.argument,
                "zeros": f.model.truncation + usize::from(f.model.origin_zero),
                "exponent": f.model.exponent,
                "growth": f.model.growth,
                "disk_radius": f.model.disk_radius,
                "tail_bound": f.model.tail_bound,
            })
        })
        .collect();
    let passed = validation.passed();
    Ok(Output {
        report: json!({
            "bits": bits,
            "kernel_id": model.kernel_id,
            "kernel_level": model.kernel_level,
            "normalizer": model.normalizer,
            "factors": factors,
            "validation": validation,
            "passed": passed,
            "model": model,
        }),
        code: if passed { 0 } else { 1 },
    })
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Output, CliError> {
    let settings = VerifySettings {
        seed: cfg.seed,
        identification_tol: cfg.tolerances.identification,
        residual_tol: cfg.tolerances.residual,
        stabilization_window: cfg.tolerances.stabilization_window,
        bare_product: cfg.bare_product,
    };
    let report = run_verify(&settings);
    let code = if report.passed { 0 } else { 1 };
    Ok(Output {
        report: serde_json::to_value(&report).map_err(|e| CliError::Failed(e.to_string()))?,
        code,
    })
}
