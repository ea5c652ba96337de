use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use mfs_core::grid::DomainSpec;
use mfs_core::nfunc::{NFunctionFamily, SymmetricField};
use mfs_core::solver::{AuditConfig, Nonlinearity, SolverConfig};
use mfs_core::{MfsError, Result};
use serde::{Deserialize, Serialize};

/// A coefficient or exponent: a constant or a Gaussian bump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Constant(f64),
    Bump { base: f64, amplitude: f64, center: [f64; 2], width: f64 },
}

impl FieldSpec {
    fn build(&self) -> SymmetricField {
        match *self {
            FieldSpec::Constant(c) => SymmetricField::Constant(c),
            FieldSpec::Bump { base, amplitude, center, width } => {
                SymmetricField::Bump { base, amplitude, center, width }
            }
        }
    }

    fn with_base(&self, b: f64) -> Self {
        match *self {
            FieldSpec::Constant(_) => FieldSpec::Constant(b),
            FieldSpec::Bump { amplitude, center, width, .. } => FieldSpec::Bump { base: b, amplitude, center, width },
        }
    }

    fn base(&self) -> f64 {
        match *self {
            FieldSpec::Constant(c) => c,
            FieldSpec::Bump { base, .. } => base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Doublephase,
    Anisotropic,
    Pxy,
    Logpert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FamilySpec {
    /// `t^p/p + a t^q/q`.
    Doublephase { p: f64, q: f64, a: FieldSpec },
    /// `a t^p`.
    Anisotropic { p: f64, a: FieldSpec },
    /// `t^{p(x,y)}/p(x,y)`.
    Pxy { p: FieldSpec },
    /// `t^{p(x,y)} log(1+t)`.
    Logpert { p: FieldSpec },
}

impl FamilySpec {
    pub fn kind(&self) -> FamilyKind {
        match self {
            FamilySpec::Doublephase { .. } => FamilyKind::Doublephase,
            FamilySpec::Anisotropic { .. } => FamilyKind::Anisotropic,
            FamilySpec::Pxy { .. } => FamilyKind::Pxy,
            FamilySpec::Logpert { .. } => FamilyKind::Logpert,
        }
    }

    pub fn build(&self) -> Result<NFunctionFamily> {
        match self {
            FamilySpec::Doublephase { p, q, a } => NFunctionFamily::double_phase(*p, *q, a.build()),
            FamilySpec::Anisotropic { p, a } => NFunctionFamily::anisotropic(*p, a.build()),
            FamilySpec::Pxy { p } => NFunctionFamily::variable_exponent(p.build()),
            FamilySpec::Logpert { p } => NFunctionFamily::log_perturbed(p.build()),
        }
    }

    fn params(&self) -> Params {
        match self {
            FamilySpec::Doublephase { p, q, a } => {
                Params { p: Some(FieldSpec::Constant(*p)), q: Some(*q), a: Some(a.clone()) }
            }
            FamilySpec::Anisotropic { p, a } => {
                Params { p: Some(FieldSpec::Constant(*p)), q: None, a: Some(a.clone()) }
            }
            FamilySpec::Pxy { p } | FamilySpec::Logpert { p } => Params { p: Some(p.clone()), q: None, a: None },
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Params {
    p: Option<FieldSpec>,
    q: Option<f64>,
    a: Option<FieldSpec>,
}

impl Params {
    fn assemble(self, kind: FamilyKind) -> Result<FamilySpec> {
        let missing = |flag: &str| MfsError::Config(format!("family {kind:?} requires --{flag}").to_lowercase());
        let p = self.p.ok_or_else(|| missing("p"))?;
        let a = self.a.unwrap_or(FieldSpec::Constant(1.0));
        Ok(match kind {
            FamilyKind::Doublephase => {
                FamilySpec::Doublephase { p: p.base(), q: self.q.ok_or_else(|| missing("q"))?, a }
            }
            FamilyKind::Anisotropic => FamilySpec::Anisotropic { p: p.base(), a },
            FamilyKind::Pxy => FamilySpec::Pxy { p },
            FamilyKind::Logpert => FamilySpec::Logpert { p },
        })
    }
}

/// Built-in problems of `solve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Doublephase,
    Pxy,
    Logpert,
    Anisotropic,
}

impl ProblemKind {
    pub fn preset(self) -> (FamilySpec, f64) {
        match self {
            ProblemKind::Doublephase => (FamilySpec::Doublephase { p: 2.0, q: 2.5, a: FieldSpec::Constant(1.0) }, 3.0),
            ProblemKind::Pxy => (
                FamilySpec::Pxy { p: FieldSpec::Bump { base: 2.0, amplitude: 0.4, center: [0.5, 0.5], width: 0.2 } },
                3.0,
            ),
            ProblemKind::Logpert => (FamilySpec::Logpert { p: FieldSpec::Constant(2.0) }, 4.0),
            ProblemKind::Anisotropic => (FamilySpec::Anisotropic { p: 2.0, a: FieldSpec::Constant(1.0) }, 3.0),
        }
    }

    fn family_kind(self) -> FamilyKind {
        match self {
            ProblemKind::Doublephase => FamilyKind::Doublephase,
            ProblemKind::Pxy => FamilyKind::Pxy,
            ProblemKind::Logpert => FamilyKind::Logpert,
            ProblemKind::Anisotropic => FamilyKind::Anisotropic,
        }
    }
}

/// Optional JSON config file; every key may be overridden by a flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub family: Option<FamilySpec>,
    pub domain: Option<DomainSpec>,
    pub s: Option<f64>,
    pub seed: Option<u64>,
    pub nonlinearity: Option<Nonlinearity>,
    pub solver: Option<SolverConfig>,
    pub audit: Option<AuditConfig>,
    pub samples: Option<usize>,
    pub fields: Option<usize>,
    pub depth: Option<u32>,
    pub output: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| MfsError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| MfsError::Config(format!("{}: {e}", path.display())))
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file; flags take precedence over its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory for report.json and data files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [env: MFS_THREADS].
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    /// Exponent `p`, or the base of a variable exponent.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Constant coefficient `a`.
    #[arg(long)]
    pub a: Option<f64>,
    /// Bump amplitude added to the exponent (pxy, logpert).
    #[arg(long)]
    pub p_amplitude: Option<f64>,
    #[arg(long)]
    pub p_width: Option<f64>,
    /// Fractional order.
    #[arg(long)]
    pub s: Option<f64>,
    /// Space dimension, 1 or 2.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Cells across the bounding box.
    #[arg(long)]
    pub cells: Option<usize>,
    /// Physical width of the exterior collar.
    #[arg(long)]
    pub collar: Option<f64>,
    /// Exponent of the PowerLog reaction term.
    #[arg(long)]
    pub r: Option<f64>,
}

/// Everything a run depends on, after merging file and flags.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub command: String,
    pub family: Option<FamilySpec>,
    pub domain: DomainSpec,
    pub s: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<Nonlinearity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fields: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

pub const DEFAULT_S: f64 = 0.25;
pub const DEFAULT_CELLS: usize = 12;

pub struct Resolver {
    pub file: FileConfig,
    pub args: CommonArgs,
}

impl Resolver {
    pub fn new(args: CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Ok(Self { file, args })
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        let mut d = self.file.domain.clone().unwrap_or_else(|| DomainSpec::unit_box(2, DEFAULT_CELLS));
        if let Some(dim) = self.args.dim {
            d.dim = dim;
        }
        if let Some(c) = self.args.cells {
            d.cells = c;
        }
        if let Some(c) = self.args.collar {
            d.collar = c;
        }
        d.build()?;
        Ok(d)
    }

    pub fn s(&self) -> Result<f64> {
        let s = self.args.s.or(self.file.s).unwrap_or(DEFAULT_S);
        if !(s > 0.0 && s < 1.0) {
            return Err(MfsError::Config(format!("fractional order must lie in (0,1), got {s}")));
        }
        Ok(s)
    }

    pub fn seed(&self) -> u64 {
        self.args.seed.or(self.file.seed).unwrap_or(0)
    }

    /// Merge the family: flags, then the file (when the kinds agree), then
    /// `preset` (when given and the kinds agree).
    pub fn family(&self, preset: Option<(FamilyKind, FamilySpec)>) -> Result<FamilySpec> {
        let kind = match (&preset, self.args.family, &self.file.family) {
            (Some((k, _)), Some(f), _) if *k != f => {
                return Err(MfsError::Config(
                    format!("--family {f:?} conflicts with the problem's family {k:?}").to_lowercase(),
                ))
            }
            (Some((k, _)), _, _) => *k,
            (None, Some(f), _) => f,
            (None, None, Some(spec)) => spec.kind(),
            (None, None, None) => {
                return Err(MfsError::Config("a family is required (--family or the config file)".into()))
            }
        };
        let mut params = match (&self.file.family, &preset) {
            (Some(spec), _) if spec.kind() == kind => spec.params(),
            (_, Some((_, spec))) => spec.params(),
            _ => Params::default(),
        };
        let a = &self.args;
        if let Some(p) = a.p {
            params.p = Some(params.p.map_or(FieldSpec::Constant(p), |f| f.with_base(p)));
        }
        if a.p_amplitude.is_some() || a.p_width.is_some() {
            let base = params
                .p
                .as_ref()
                .map(FieldSpec::base)
                .ok_or_else(|| MfsError::Config(format!("family {kind:?} requires --p").to_lowercase()))?;
            let (amp, center, width) = match params.p {
                Some(FieldSpec::Bump { amplitude, center, width, .. }) => (amplitude, center, width),
                _ => (0.0, self.centroid()?, 0.2),
            };
            params.p = Some(FieldSpec::Bump {
                base,
                amplitude: a.p_amplitude.unwrap_or(amp),
                center,
                width: a.p_width.unwrap_or(width),
            });
        }
        if let Some(q) = a.q {
            params.q = Some(q);
        }
        if let Some(c) = a.a {
            params.a = Some(FieldSpec::Constant(c));
        }
        let spec = params.assemble(kind)?;
        spec.build()?;
        Ok(spec)
    }

    fn centroid(&self) -> Result<[f64; 2]> {
        Ok(self.domain()?.build()?.centroid())
    }

    pub fn nonlinearity(&self, preset_r: Option<f64>) -> Result<Nonlinearity> {
        let nl = match (self.args.r, self.file.nonlinearity, preset_r) {
            (Some(r), _, _) => Nonlinearity::power_log(r)?,
            (None, Some(nl), _) => nl,
            (None, None, Some(r)) => Nonlinearity::power_log(r)?,
            (None, None, None) => {
                return Err(MfsError::Config("a nonlinearity is required (--r or the config file)".into()))
            }
        };
        nl.validate()?;
        Ok(nl)
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let mut cfg = self.file.solver.clone().unwrap_or_default();
        cfg.seed = self.seed();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn output(&self) -> Option<PathBuf> {
        self.args.out.clone().or_else(|| self.file.output.clone())
    }

    /// The common part of the resolved config.
    pub fn base(&self, command: &str, family: Option<FamilySpec>) -> Result<Resolved> {
        Ok(Resolved {
            command: command.to_string(),
            family,
            domain: self.domain()?,
            s: self.s()?,
            seed: self.seed(),
            nonlinearity: None,
            solver: None,
            audit: None,
            samples: None,
            fields: None,
            depth: None,
            output: self.output(),
        })
    }

    pub fn preset_for(problem: ProblemKind) -> (FamilyKind, FamilySpec, f64) {
        let (spec, r) = problem.preset();
        (problem.family_kind(), spec, r)
    }
}
