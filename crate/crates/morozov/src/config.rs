//! TOML experiment description.
//!
//! ```toml
//! [problem]
//! kind = "random-uniform"   # or "matrix-market", "directory"
//! m = 700
//! n = 500
//! noise = 0.1
//!
//! [experiment]
//! repetitions = 20
//! seed = 1
//! output = "out/table1"
//!
//! [[solver]]
//! method = "ntm"            # ntm, pntm, gbit, sirt, cgls-pc
//! variant = "case2"
//!
//! [curve]                   # only read by `morozov curve`
//! alpha_min = 1e-4
//! alpha_max = 1e4
//! points = 41
//! ```
//!
//! Relative paths inside the file are resolved against the directory the
//! file lives in.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use morozov_core::ntm::{DinvMode, NtmConfig, StepRule, StepVariant};
use morozov_core::pntm::PntmConfig;
use morozov_core::reference::{CglsConfig, GbitConfig, SirtConfig};
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default, rename = "solver")]
    pub solvers: Vec<SolverSpec>,
    pub curve: Option<CurveSpec>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// Verbatim file contents, echoed into the output directory.
    #[serde(skip)]
    pub source: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Dense `m × n` matrix and ground truth, entries U(−1, 1).
    RandomUniform {
        m: usize,
        n: usize,
        #[serde(default = "default_noise")]
        noise: f64,
        #[serde(default = "one")]
        eta: f64,
    },
    /// Operator from a `.mtx` file. Without `rhs` the ground truth is a
    /// sine wave and `noise` is the relative noise level; with `rhs` the
    /// data is read from that file and `noise_level` is the absolute `ε`.
    MatrixMarket {
        path: PathBuf,
        #[serde(default = "default_noise")]
        noise: f64,
        rhs: Option<PathBuf>,
        noise_level: Option<f64>,
        #[serde(default = "one")]
        eta: f64,
    },
    /// A directory written by `morozov gen`.
    Directory { path: PathBuf },
}

fn default_noise() -> f64 {
    0.1
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub repetitions: usize,
    /// Repetition `i` uses seed `seed + i`.
    pub seed: u64,
    pub output: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    /// Treat solutions as `[width, height]` images and report SSIM
    /// against the ground truth.
    pub image_shape: Option<[usize; 2]>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            repetitions: 1,
            seed: 0,
            output: PathBuf::from("out"),
            threads: 0,
            image_shape: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantName {
    Case1,
    Case2,
}

impl From<VariantName> for StepVariant {
    fn from(v: VariantName) -> Self {
        match v {
            VariantName::Case1 => StepVariant::Case1,
            VariantName::Case2 => StepVariant::Case2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DinvName {
    Exact,
    LemmaBound,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NtmSpec {
    pub name: Option<String>,
    pub alpha0: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub variant: VariantName,
    pub omega: f64,
    pub dinv: DinvName,
    /// Solve in `z = Lx` with the difference matrix `L`.
    pub priorcondition: bool,
}

impl Default for NtmSpec {
    fn default() -> Self {
        Self {
            name: None,
            alpha0: 1.0,
            tol: 1e-3,
            max_iter: 1000,
            variant: VariantName::Case2,
            omega: 0.9,
            dinv: DinvName::Exact,
            priorcondition: false,
        }
    }
}

impl NtmSpec {
    pub fn to_config(&self) -> NtmConfig {
        NtmConfig {
            alpha0: self.alpha0,
            tol: self.tol,
            max_iter: self.max_iter,
            rule: StepRule {
                variant: self.variant.into(),
                omega: self.omega,
                dinv_mode: match self.dinv {
                    DinvName::Exact => DinvMode::Exact,
                    DinvName::LemmaBound => DinvMode::LemmaBound,
                },
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PntmSpec {
    pub name: Option<String>,
    pub alpha0: f64,
    pub tol: f64,
    pub outer_max: usize,
    pub inner_cap_small: usize,
    pub inner_cap_large: usize,
    pub variant: VariantName,
    pub omega: f64,
    pub priorcondition: bool,
}

impl Default for PntmSpec {
    fn default() -> Self {
        let d = PntmConfig::default();
        Self {
            name: None,
            alpha0: d.alpha0,
            tol: d.tol,
            outer_max: d.outer_max,
            inner_cap_small: d.inner_cap_small,
            inner_cap_large: d.inner_cap_large,
            variant: VariantName::Case2,
            omega: d.omega,
            priorcondition: false,
        }
    }
}

impl PntmSpec {
    pub fn to_config(&self) -> PntmConfig {
        PntmConfig {
            alpha0: self.alpha0,
            tol: self.tol,
            outer_max: self.outer_max,
            inner_cap_small: self.inner_cap_small,
            inner_cap_large: self.inner_cap_large,
            variant: self.variant.into(),
            omega: self.omega,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbitSpec {
    pub name: Option<String>,
    pub alpha0: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub priorcondition: bool,
}

impl Default for GbitSpec {
    fn default() -> Self {
        let d = GbitConfig::default();
        Self {
            name: None,
            alpha0: d.alpha0,
            tol: d.tol,
            max_iter: d.max_iter,
            priorcondition: false,
        }
    }
}

impl GbitSpec {
    pub fn to_config(&self) -> GbitConfig {
        GbitConfig {
            alpha0: self.alpha0,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SirtSpec {
    pub name: Option<String>,
    pub max_iter: usize,
    pub stop_at_discrepancy: bool,
}

impl Default for SirtSpec {
    fn default() -> Self {
        let d = SirtConfig::default();
        Self {
            name: None,
            max_iter: d.max_iter,
            stop_at_discrepancy: d.stop_at_discrepancy,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CglsSpec {
    pub name: Option<String>,
    pub max_iter: usize,
}

impl Default for CglsSpec {
    fn default() -> Self {
        Self {
            name: None,
            max_iter: CglsConfig::default().max_iter,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum SolverSpec {
    Ntm(NtmSpec),
    Pntm(PntmSpec),
    Gbit(GbitSpec),
    Sirt(SirtSpec),
    CglsPc(CglsSpec),
}

impl SolverSpec {
    /// Configured name, or one derived from the method.
    pub fn label(&self) -> String {
        let variant = |v: VariantName| match v {
            VariantName::Case1 => "case1",
            VariantName::Case2 => "case2",
        };
        let (name, fallback) = match self {
            SolverSpec::Ntm(s) => (&s.name, format!("ntm-{}", variant(s.variant))),
            SolverSpec::Pntm(s) => (&s.name, format!("pntm-{}", variant(s.variant))),
            SolverSpec::Gbit(s) => (&s.name, "gbit".to_string()),
            SolverSpec::Sirt(s) => (&s.name, "sirt".to_string()),
            SolverSpec::CglsPc(s) => (&s.name, "cgls-pc".to_string()),
        };
        name.clone().unwrap_or(fallback)
    }

    fn validate(&self) -> morozov_core::Result<()> {
        match self {
            SolverSpec::Ntm(s) => s.to_config().validate(),
            SolverSpec::Pntm(s) => s.to_config().validate(),
            SolverSpec::Gbit(s) => s.to_config().validate(),
            SolverSpec::Sirt(s) if s.max_iter == 0 => Err(morozov_core::Error::InvalidConfig(
                "max_iter must be at least 1",
            )),
            SolverSpec::CglsPc(s) if s.max_iter == 0 => Err(morozov_core::Error::InvalidConfig(
                "max_iter must be at least 1",
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSpec {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub points: usize,
    /// Explicit grid; overrides the logarithmic one.
    pub alphas: Option<Vec<f64>>,
}

impl Default for CurveSpec {
    fn default() -> Self {
        Self {
            alpha_min: 1e-6,
            alpha_max: 1e6,
            points: 41,
            alphas: None,
        }
    }
}

impl CurveSpec {
    pub fn grid(&self) -> Vec<f64> {
        match &self.alphas {
            Some(a) => a.clone(),
            None => morozov_core::curve::log_grid(self.alpha_min, self.alpha_max, self.points),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.source = text.to_string();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolves `p` against the config file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.experiment.repetitions as u64)
            .map(|i| self.experiment.seed + i)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.experiment.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        let mut names = BTreeSet::new();
        for s in &self.solvers {
            let label = s.label();
            s.validate()
                .map_err(|e| Error::Config(format!("solver `{label}`: {e}")))?;
            if !names.insert(label.clone()) {
                return Err(Error::Config(format!("duplicate solver name `{label}`")));
            }
        }
        match &self.problem {
            ProblemSpec::RandomUniform { m, n, noise, eta } => {
                if *n == 0 || m < n {
                    return Err(Error::Config("random-uniform needs m >= n >= 1".into()));
                }
                check_noise(*noise, *eta)?;
            }
            ProblemSpec::MatrixMarket {
                rhs,
                noise_level,
                noise,
                eta,
                ..
            } => {
                if rhs.is_some() != noise_level.is_some() {
                    return Err(Error::Config(
                        "`rhs` and `noise_level` must be given together".into(),
                    ));
                }
                check_noise(*noise, *eta)?;
            }
            ProblemSpec::Directory { .. } => {}
        }
        if let Some(c) = &self.curve {
            if c.alphas.is_none()
                && !(c.alpha_min > 0.0 && c.alpha_min < c.alpha_max && c.points >= 2)
            {
                return Err(Error::Config(
                    "curve needs 0 < alpha_min < alpha_max and points >= 2".into(),
                ));
            }
        }
        Ok(())
    }
}

fn check_noise(noise: f64, eta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&noise) {
        return Err(Error::Config("noise must lie in [0, 1)".into()));
    }
    if eta.is_nan() || eta < 1.0 {
        return Err(Error::Config("eta must be at least 1".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("/cfg"))
    }

    #[test]
    fn full_config() {
        let cfg = parse(
            r#"
            [problem]
            kind = "random-uniform"
            m = 70
            n = 50

            [experiment]
            repetitions = 3
            seed = 10
            output = "out"

            [[solver]]
            method = "ntm"
            variant = "case1"

            [[solver]]
            method = "pntm"
            name = "projected"
            inner_cap_large = 500

            [[solver]]
            method = "cgls-pc"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seeds(), [10, 11, 12]);
        let labels: Vec<_> = cfg.solvers.iter().map(SolverSpec::label).collect();
        assert_eq!(labels, ["ntm-case1", "projected", "cgls-pc"]);
        assert_eq!(cfg.resolve(Path::new("out")), Path::new("/cfg/out"));
        match &cfg.solvers[1] {
            SolverSpec::Pntm(p) => assert_eq!(p.to_config().inner_cap_large, 500),
            _ => unreachable!(),
        }
    }

    #[test]
    fn unknown_method_is_rejected() {
        let e =
            parse("[problem]\nkind = \"directory\"\npath = \"p\"\n[[solver]]\nmethod = \"lsqr\"\n")
                .unwrap_err();
        assert!(e.to_string().contains("lsqr"), "{e}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = parse("[problem]\nkind = \"directory\"\npath = \"p\"\n[[solver]]\nmethod = \"ntm\"\nomgea = 0.5\n")
            .unwrap_err();
        assert!(e.to_string().contains("omgea"), "{e}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        let base = "[problem]\nkind = \"random-uniform\"\nm = 5\nn = 4\n";
        assert!(parse(&format!(
            "{base}[[solver]]\nmethod = \"ntm\"\nomega = 1.5\n"
        ))
        .is_err());
        assert!(parse(&format!("{base}[experiment]\nrepetitions = 0\n")).is_err());
        assert!(parse(&format!(
            "{base}[[solver]]\nmethod = \"gbit\"\n[[solver]]\nmethod = \"gbit\"\n"
        ))
        .is_err());
        assert!(parse("[problem]\nkind = \"random-uniform\"\nm = 3\nn = 4\n").is_err());
    }
}
