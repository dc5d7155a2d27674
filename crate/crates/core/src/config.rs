//! JSON experiment configurations. Rationals are written as `"p/q"` strings so
//! combinatorial inputs survive a round trip exactly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::QuadratureSpec;
use crate::lattice::{RationalPoint, Weight};
use crate::polytope::{Facet, FacetPolytope, PolytopeError};
use crate::potential::{MetricPotential, PotentialError};
use crate::rays::{RaysError, SectionSequence, SequenceKind};

/// Default quadrature nodes per axis.
pub const DEFAULT_RESOLUTION: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("N_list must be strictly increasing and positive")]
    NList,
    #[error("{command} needs at least {needed} N values, got {got}")]
    TooFewN { command: &'static str, needed: usize, got: usize },
    #[error("t_grid values must be positive and finite")]
    TGrid,
    #[error("quadrature box has {lo} lower and {hi} upper bounds for dimension {dim}")]
    QuadratureBox { lo: usize, hi: usize, dim: usize },
    #[error("ray {0} is not in the polytope, so no sequence of sections approximates it")]
    RayOutside(String),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Rays(#[from] RaysError),
}

/// One entry of the metric weight map `β ↦ c_β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricWeight {
    pub point: Weight,
    pub weight: f64,
}

/// Overrides for the automatically sized quadrature box.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub polytope: Vec<Facet>,
    /// Lattice points absent from the list get weight 1.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metric_weights: Vec<MetricWeight>,
    pub ray: RationalPoint,
    pub sequence: SequenceKind,
    #[serde(rename = "N_list")]
    pub n_list: Vec<u64>,
    #[serde(default)]
    pub quadrature: QuadratureOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

/// A validated configuration with its derived objects.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub polytope: FacetPolytope,
    pub potential: MetricPotential,
    pub sequence: SectionSequence,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn resolution(&self) -> usize {
        self.quadrature.resolution.unwrap_or(DEFAULT_RESOLUTION)
    }

    /// Parses the polytope, builds the potential and the sequence, and checks
    /// the N list and t grid.
    pub fn build(&self) -> Result<Experiment, ConfigError> {
        if self.n_list.is_empty() || self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::NList);
        }
        if let Some(grid) = &self.t_grid {
            if grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                return Err(ConfigError::TGrid);
            }
        }
        let polytope = FacetPolytope::new(self.polytope.clone())?;
        let m = polytope.dim();
        if let (Some(lo), Some(hi)) = (&self.quadrature.lo, &self.quadrature.hi) {
            if lo.len() != m || hi.len() != m {
                return Err(ConfigError::QuadratureBox { lo: lo.len(), hi: hi.len(), dim: m });
            }
        } else if self.quadrature.lo.is_some() || self.quadrature.hi.is_some() {
            let (lo, hi) = (self.quadrature.lo.as_ref(), self.quadrature.hi.as_ref());
            return Err(ConfigError::QuadratureBox {
                lo: lo.map_or(0, Vec::len),
                hi: hi.map_or(0, Vec::len),
                dim: m,
            });
        }
        if !polytope.contains(&self.ray)? {
            return Err(ConfigError::RayOutside(self.ray.to_string()));
        }
        let points = polytope.lattice_points(1)?;
        let weights = points
            .iter()
            .map(|p| self.metric_weights.iter().find(|w| &w.point == p).map_or(1.0, |w| w.weight))
            .collect();
        if let Some(extra) = self.metric_weights.iter().find(|w| !points.contains(&w.point)) {
            return Err(PotentialError::PointOutside(extra.point.to_string()).into());
        }
        let potential = MetricPotential::new(&polytope, points, weights)?;
        let sequence = SectionSequence::new(&polytope, &self.ray, self.sequence.clone())?;
        Ok(Experiment { config: self.clone(), polytope, potential, sequence })
    }

    /// Requires at least `needed` N values for the named command.
    pub fn require_samples(&self, command: &'static str, needed: usize) -> Result<(), ConfigError> {
        if self.n_list.len() < needed {
            return Err(ConfigError::TooFewN { command, needed, got: self.n_list.len() });
        }
        Ok(())
    }
}

impl Experiment {
    /// The explicit box when both bounds are given, otherwise `None`.
    pub fn fixed_box(&self, resolution: usize) -> Option<QuadratureSpec> {
        let q = &self.config.quadrature;
        match (&q.lo, &q.hi) {
            (Some(lo), Some(hi)) => QuadratureSpec::new(lo.clone(), hi.clone(), resolution).ok(),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIMPLEX: &str = r#"{
        "polytope": [
            {"normal": [1, 0], "offset": 0},
            {"normal": [0, 1], "offset": 0},
            {"normal": [-1, -1], "offset": 1}
        ],
        "metric_weights": [{"point": [1, 0], "weight": 2.5}],
        "ray": ["1/2", "0"],
        "sequence": {"kind": "offset", "base": "tame", "offsets": [[1, 0], [0, 0]]},
        "N_list": [50, 100, 200, 400, 800],
        "quadrature": {"resolution": 128},
        "t_grid": [0.01, 1.0],
        "outputs": "runs/simplex"
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ExperimentConfig::from_json(SIMPLEX).unwrap();
        assert_eq!(cfg.ray, RationalPoint::from_fractions(&[(1, 2), (0, 1)]));
        assert_eq!(cfg.resolution(), 128);
        let ex = cfg.build().unwrap();
        assert_eq!(ex.polytope.dim(), 2);
        let i = ex.potential.points().iter().position(|p| p == &Weight::new([1, 0])).unwrap();
        assert_eq!(ex.potential.weights()[i], 2.5);
        assert_eq!(ex.sequence.alpha(50).unwrap(), Weight::new([26, 0]));
        assert_eq!(ex.sequence.alpha(51).unwrap(), Weight::new([25, 0]));
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::from_json(SIMPLEX).unwrap();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let minimal = r#"{"polytope": [{"normal": [1], "offset": 0}, {"normal": [-1], "offset": 1}],
                          "ray": ["1/3"], "sequence": {"kind": "rounded"}, "N_list": [3]}"#;
        let cfg = ExperimentConfig::from_json(minimal).unwrap();
        assert_eq!(cfg.outputs, PathBuf::from("out"));
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn validation_errors() {
        let mut cfg = ExperimentConfig::from_json(SIMPLEX).unwrap();
        cfg.n_list = vec![5, 5, 6];
        assert!(matches!(cfg.build(), Err(ConfigError::NList)));
        let mut cfg = ExperimentConfig::from_json(SIMPLEX).unwrap();
        cfg.ray = RationalPoint::from_fractions(&[(2, 1), (0, 1)]);
        assert!(matches!(cfg.build(), Err(ConfigError::RayOutside(_))));
        let mut cfg = ExperimentConfig::from_json(SIMPLEX).unwrap();
        cfg.metric_weights[0].weight = 0.0;
        assert!(matches!(cfg.build(), Err(ConfigError::Potential(PotentialError::NonPositiveWeight { .. }))));
        let mut cfg = ExperimentConfig::from_json(SIMPLEX).unwrap();
        cfg.polytope[0].normal = crate::lattice::CoWeight::new([2, 0]);
        assert!(matches!(cfg.build(), Err(ConfigError::Polytope(PolytopeError::NonPrimitive { .. }))));
        let mut cfg = ExperimentConfig::from_json(SIMPLEX).unwrap();
        cfg.n_list.truncate(3);
        assert!(cfg.require_samples("norms", 5).is_err());
        assert!(ExperimentConfig::from_json("{").is_err());
    }
}
