//! Experiment configuration (TOML) and its validation.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::classical::{HarmonicClassicalModel, LinearClassicalModel};
use crate::error::{Error, Result};
use crate::formfactor::FormFactor;
use crate::numerics::QuadratureRule;
use crate::oneparticle::{BathDiscretization, BathScheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Vanhove,
    ClassicalLinear,
    ClassicalHarmonic,
    FermionImpurity,
    BosonOscillator,
    TtmGeneric,
}

/// Explicit list of points or an evenly spaced range with `points` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn resolve(&self, field: &str) -> Result<Vec<f64>> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
        };
        if v.is_empty() {
            return Err(Error::config(field, "grid is empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::config(field, "grid has non-finite entries"));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VanHoveSection {
    /// Time of the characteristic function, cumulants and samples.
    pub t: f64,
    #[serde(default)]
    pub samples: usize,
    #[serde(default = "four")]
    pub cumulant_orders: u32,
    /// n values of the moment equivalence scans (order 2n+2).
    #[serde(default)]
    pub moment_n: Vec<u32>,
    /// γ values of the exponential equivalence scans.
    #[serde(default)]
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
}

fn four() -> u32 {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSection {
    #[serde(default)]
    pub linear: Option<LinearClassicalModel>,
    #[serde(default)]
    pub harmonic: Option<HarmonicClassicalModel>,
    #[serde(default)]
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub samples: usize,
}

/// Real and optional imaginary parts, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TtmSection {
    pub h0: MatrixSpec,
    pub v: MatrixSpec,
    /// Initial state; the Gibbs state of H0 at `beta` when absent.
    #[serde(default)]
    pub omega: Option<MatrixSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpuritySection {
    #[serde(default = "one")]
    pub eps_o: f64,
    pub scheme: BathScheme,
    #[serde(default = "one_u32")]
    pub n: u32,
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncatedSection {
    pub bath_cutoff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailsSection {
    /// Sample CSV written by `heatlab vanhove`.
    pub samples: PathBuf,
    pub k: usize,
    #[serde(default = "one_u32")]
    pub n: u32,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "twenty")]
    pub e_points: usize,
}

fn twenty() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmasSection {
    pub d: usize,
    #[serde(default = "one_u32")]
    pub n: u32,
    #[serde(default = "half")]
    pub alpha: f64,
    pub window: [f64; 2],
    pub e_grid: Grid,
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: Option<ModelKind>,
    #[serde(default)]
    pub seed: u64,
    /// Where outputs go; not part of the resolved configuration embedded in
    /// reports, so runs differing only in location stay byte-identical.
    #[serde(default, skip_serializing)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: QuadratureRule,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub formfactor: Option<FormFactor>,
    /// CSV node list (energy, re_f, im_f), relative to the working directory.
    /// Loaded into `formfactor` and then cleared, so reports embed the nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formfactor_csv: Option<PathBuf>,
    /// Single time of the truncated-model and convergence studies.
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub t_grid: Option<Grid>,
    #[serde(default)]
    pub alpha_grid: Option<Grid>,
    #[serde(default)]
    pub d_list: Vec<usize>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub n_max_list: Vec<usize>,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub vanhove: Option<VanHoveSection>,
    #[serde(default)]
    pub classical: Option<ClassicalSection>,
    #[serde(default)]
    pub ttm: Option<TtmSection>,
    #[serde(default)]
    pub impurity: Option<ImpuritySection>,
    #[serde(default)]
    pub truncated: Option<TruncatedSection>,
    #[serde(default)]
    pub tails: Option<TailsSection>,
    #[serde(default)]
    pub lemmas: Option<LemmasSection>,
}

fn toml_error(e: toml::de::Error, text: &str) -> Error {
    let (line, col) = e
        .span()
        .map(|s| {
            let before = &text[..s.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
            (line, col)
        })
        .unwrap_or((0, 0));
    Error::config(format!("line {line}, column {col}"), e.message().to_string())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| toml_error(e, text))?;
        cfg.validate_common()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(csv) = cfg.formfactor_csv.take() {
            if cfg.formfactor.is_some() {
                return Err(Error::config("formfactor_csv", "conflicts with [formfactor]"));
            }
            let f = FormFactor::from_csv(&csv).map_err(|e| Error::config("formfactor_csv", format!("{}: {e}", csv.display())))?;
            cfg.formfactor = Some(f);
        }
        Ok(cfg)
    }

    fn validate_common(&self) -> Result<()> {
        self.tolerances.validate().map_err(|e| Error::config("tolerances", e.to_string()))?;
        if let Some(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::config("beta", "must be positive"));
            }
        }
        if let Some(f) = &self.formfactor {
            f.validate().map_err(|e| Error::config("formfactor", e.to_string()))?;
        }
        if let Some(g) = &self.t_grid {
            g.resolve("t_grid")?;
        }
        if let Some(g) = &self.alpha_grid {
            g.resolve("alpha_grid")?;
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::config("delta", "must be nonnegative"));
        }
        Ok(())
    }

    pub fn beta(&self) -> Result<f64> {
        self.beta.ok_or_else(|| Error::config("beta", "required"))
    }

    pub fn formfactor(&self) -> Result<&FormFactor> {
        self.formfactor.as_ref().ok_or_else(|| Error::config("formfactor", "required"))
    }

    pub fn t(&self) -> Result<f64> {
        match self.t {
            Some(t) if t.is_finite() => Ok(t),
            Some(_) => Err(Error::config("t", "must be finite")),
            None => Err(Error::config("t", "required")),
        }
    }

    pub fn t_grid(&self) -> Result<Vec<f64>> {
        self.t_grid.as_ref().ok_or_else(|| Error::config("t_grid", "required"))?.resolve("t_grid")
    }

    pub fn alpha_grid(&self) -> Result<Vec<f64>> {
        self.alpha_grid
            .as_ref()
            .ok_or_else(|| Error::config("alpha_grid", "required"))?
            .resolve("alpha_grid")
    }

    pub fn d_list(&self) -> Result<&[usize]> {
        if self.d_list.is_empty() {
            return Err(Error::config("d_list", "required and nonempty"));
        }
        Ok(&self.d_list)
    }

    pub fn n_max_list(&self) -> Result<Vec<usize>> {
        if !self.n_max_list.is_empty() {
            Ok(self.n_max_list.clone())
        } else if let Some(n) = self.n_max {
            Ok(vec![n])
        } else {
            Err(Error::config("n_max", "required for bosons"))
        }
    }

    pub fn n_max(&self) -> Result<usize> {
        self.n_max
            .or_else(|| self.n_max_list.iter().copied().max())
            .ok_or_else(|| Error::config("n_max", "required for bosons"))
    }

    pub fn section<'a, T>(&'a self, s: &'a Option<T>, name: &str) -> Result<&'a T> {
        s.as_ref().ok_or_else(|| Error::config(name, "section required"))
    }

    pub fn bath(&self) -> Result<BathDiscretization> {
        let imp = self.section(&self.impurity, "impurity")?;
        Ok(BathDiscretization {
            eps_o: imp.eps_o,
            f: self.formfactor()?.clone(),
            scheme: imp.scheme.clone(),
        })
    }

    /// Model, defaulting to `default` and checked against `allowed`.
    pub fn model_in(&self, default: ModelKind, allowed: &[ModelKind]) -> Result<ModelKind> {
        let m = self.model.unwrap_or(default);
        if !allowed.contains(&m) {
            return Err(Error::config("model", format!("{m:?} is not valid for this subcommand")));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
model = "vanhove"
beta = 1.0
t_grid = { start = 0.0, stop = 2.0, points = 5 }
alpha_grid = [-1.0, 0.0, 1.0]
[formfactor]
family = "SharpCutoff"
cutoff = 2.0
ir_power = 1.0
[vanhove]
t = 1.0
"#,
        )
        .unwrap();
        assert_eq!(cfg.t_grid().unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(cfg.model, Some(ModelKind::Vanhove));
        assert_eq!(cfg.tolerances, QuadratureRule::default());
    }

    #[test]
    fn empty_grid_is_a_config_error() {
        let e = ExperimentConfig::from_toml_str("t_grid = []").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "t_grid"), "{e}");
    }

    #[test]
    fn unknown_field_reports_line() {
        let e = ExperimentConfig::from_toml_str("beta = 1.0\nbogus = 3\n").unwrap_err();
        match e {
            Error::Config { field, .. } => assert!(field.starts_with("line 2"), "{field}"),
            other => panic!("{other}"),
        }
    }
}
