//! JSON configuration files.

use std::path::Path;
use std::sync::Arc;

use ma_core::{BorelBox, BoundaryData, DomainShape, LatticeDomain, SolverConfig, SourceMeasure};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Domain description. `square` is shorthand for `[min, max]^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Square { min: f64, max: f64 },
    Rect { min: [f64; 2], max: [f64; 2] },
    Disc { center: [f64; 2], radius: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl DomainConfig {
    pub fn shape(&self) -> DomainShape {
        match self {
            DomainConfig::Square { min, max } => DomainShape::square(*min, *max),
            DomainConfig::Rect { min, max } => DomainShape::Rect { min: *min, max: *max },
            DomainConfig::Disc { center, radius } => DomainShape::Disc {
                center: *center,
                radius: *radius,
            },
            DomainConfig::Polygon { vertices } => DomainShape::Polygon {
                vertices: vertices.clone(),
            },
        }
    }
}

/// Which discrete equation to solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `M[u] = h^2 f` everywhere with the configured operator.
    #[default]
    Standard,
    /// `ma3` at point masses, `ma0 = 0` elsewhere.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: DomainConfig,
    /// Mesh size; give this or `N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Subdivisions of the bounding box width, `h = width / N`.
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default)]
    pub measure: SourceMeasure,
    pub boundary: BoundaryData,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<BorelBox>,
}

impl ProblemConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: ProblemConfig = load_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        self.mesh_size().map(|_| ())
    }

    fn validate_common(&self) -> Result<()> {
        self.domain.shape().validate()?;
        self.measure.validate()?;
        self.boundary.validate()?;
        self.solver.validate()?;
        for b in &self.boxes {
            b.validate()?;
        }
        Ok(())
    }

    /// The mesh size from `h` or `N`; exactly one must be present.
    pub fn mesh_size(&self) -> Result<f64> {
        match (self.h, self.n) {
            (Some(h), None) if h > 0.0 && h.is_finite() => Ok(h),
            (Some(h), None) => Err(CliError::Config(format!("h must be positive and finite, got {h}"))),
            (None, Some(0)) => Err(CliError::Config("N must be at least 1".into())),
            (None, Some(n)) => {
                let (lo, hi) = self.domain.shape().bounding_box();
                Ok((hi[0] - lo[0]) / n as f64)
            }
            (Some(_), Some(_)) => Err(CliError::Config("give exactly one of h and N, not both".into())),
            (None, None) => Err(CliError::Config("missing mesh size: give h or N".into())),
        }
    }

    /// Copy of this config at mesh size `h`.
    pub fn at_h(&self, h: f64) -> ProblemConfig {
        ProblemConfig {
            h: Some(h),
            n: None,
            ..self.clone()
        }
    }

    pub fn lattice(&self) -> Result<Arc<LatticeDomain>> {
        let h = self.mesh_size()?;
        Ok(Arc::new(LatticeDomain::build(self.domain.shape(), h)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Problem without a mesh size; `h_list` supplies it.
    pub base: ProblemConfig,
    pub h_list: Vec<f64>,
    /// Compact set on which the uniform error is measured.
    pub compact_subset: BorelBox,
    /// Exact solution, from the boundary catalog.
    pub reference: BoundaryData,
    /// When set, the solver tolerance at mesh `h` is
    /// `solver.tol * (h / h_list[0])^tol_exponent`, so that accumulated
    /// residuals shrink under refinement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_exponent: Option<f64>,
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: StudyConfig = load_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate_common()?;
        if self.base.h.is_some() || self.base.n.is_some() {
            return Err(CliError::Config("base.h / base.N: mesh sizes come from h_list".into()));
        }
        if self.h_list.is_empty() {
            return Err(CliError::Config("h_list is empty".into()));
        }
        if let Some(h) = self.h_list.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(CliError::Config(format!("h_list: mesh sizes must be positive, got {h}")));
        }
        if self.h_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(CliError::Config("h_list must be strictly decreasing".into()));
        }
        self.compact_subset.validate()?;
        let k = &self.compact_subset;
        let shape = self.base.domain.shape();
        let corners = [k.min, [k.max[0], k.min[1]], k.max, [k.min[0], k.max[1]]];
        if corners.iter().any(|&c| shape.excess(c) >= 0.0) {
            return Err(CliError::Config(format!(
                "compact_subset {} is not strictly inside the domain",
                k.label()
            )));
        }
        self.reference.validate()?;
        if let Some(p) = self.tol_exponent {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(CliError::Config(format!("tol_exponent must be >= 0, got {p}")));
            }
            if self.base.solver.tol.is_none() {
                return Err(CliError::Config("tol_exponent needs an explicit base.solver.tol".into()));
            }
        }
        Ok(())
    }

    /// The base problem at mesh size `h`, with the tolerance scaled.
    pub fn problem_at(&self, h: f64) -> ProblemConfig {
        let mut p = self.base.at_h(h);
        if let (Some(exp), Some(tol)) = (self.tol_exponent, self.base.solver.tol) {
            p.solver.tol = Some(tol * (h / self.h_list[0]).powf(exp));
        }
        p
    }
}

/// Configuration for `measure-check`: a single problem, or a study whose
/// `h_list` gives the sweep.
#[derive(Debug, Clone)]
pub enum SweepConfig {
    Single(ProblemConfig),
    Study(StudyConfig),
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let value: serde_json::Value = load_json(path)?;
        if value.get("base").is_some() {
            let cfg: StudyConfig = from_value(value, path)?;
            cfg.validate()?;
            Ok(SweepConfig::Study(cfg))
        } else {
            let cfg: ProblemConfig = from_value(value, path)?;
            cfg.validate()?;
            Ok(SweepConfig::Single(cfg))
        }
    }

    /// The problem at every mesh of the sweep.
    pub fn problems(&self) -> Result<Vec<ProblemConfig>> {
        match self {
            SweepConfig::Single(p) => Ok(vec![p.at_h(p.mesh_size()?)]),
            SweepConfig::Study(s) => Ok(s.h_list.iter().map(|&h| s.problem_at(h)).collect()),
        }
    }

    pub fn base(&self) -> &ProblemConfig {
        match self {
            SweepConfig::Single(p) => p,
            SweepConfig::Study(s) => &s.base,
        }
    }
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn from_value<T: DeserializeOwned>(value: serde_json::Value, path: &Path) -> Result<T> {
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
