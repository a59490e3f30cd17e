//! JSON run configuration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use gfc_core::point::ExtendedComplex;
use gfc_core::tower::LimitConfiguration;

/// The configuration shipped with the binary and used when `--config` is absent.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    FiniteType,
    Fermat,
    Hyperelliptic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_residual")]
    pub residual: f64,
    #[serde(default = "default_identification")]
    pub identification: f64,
    #[serde(default = "default_window")]
    pub stabilization_window: usize,
}

fn default_residual() -> f64 {
    1e-9
}

fn default_identification() -> f64 {
    1e-6
}

fn default_window() -> usize {
    3
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: default_residual(),
            identification: default_identification(),
            stabilization_window: default_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub k: u32,
    #[serde(default)]
    pub limit_points: Vec<ExtendedComplex>,
    /// Explicit branch values `l_1, l_2, ...` for finite-type curves.
    #[serde(default)]
    pub lambdas: Option<Vec<ExtendedComplex>>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Truncation level `n`.
    #[serde(default = "default_level")]
    pub level: usize,
    /// Size `N` of the deleted set; the first `N` limit points are deleted.
    #[serde(default)]
    pub deleted: usize,
    #[serde(default)]
    pub family: Option<FamilyKind>,
    #[serde(default)]
    pub bits: Option<Vec<u8>>,
    #[serde(default)]
    pub exponent: Option<u32>,
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub angles: Option<Vec<f64>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub bare_product: bool,
}

fn default_depth() -> usize {
    8
}

fn default_level() -> usize {
    4
}

fn default_seed() -> u64 {
    1
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| format!("invalid configuration: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.k < 2 {
            return Err(format!("k must be at least 2, got {}", self.k));
        }
        if self.level < 2 {
            return Err(format!("level must be at least 2, got {}", self.level));
        }
        if self.limit_points.iter().any(|q| q.is_infinite()) {
            return Err("limit points must be finite; inf is always a branch point".into());
        }
        if self.deleted > self.limit_points.len() {
            return Err(format!(
                "cannot delete {} of {} limit points",
                self.deleted,
                self.limit_points.len()
            ));
        }
        if let Some(l) = &self.lambdas {
            if l.iter().any(|z| z.is_infinite()) {
                return Err("lambdas must be finite".into());
            }
        }
        if let Some(bits) = &self.bits {
            if bits.iter().any(|&b| b > 1) {
                return Err("bits must be 0 or 1".into());
            }
        }
        let t = &self.tolerances;
        if !(t.residual > 0.0 && t.identification > 0.0) || t.stabilization_window == 0 {
            return Err("tolerances must be positive".into());
        }
        Ok(())
    }

    pub fn finite_limit_points(&self) -> Vec<Complex64> {
        self.limit_points
            .iter()
            .filter_map(|q| q.as_finite())
            .collect()
    }

    pub fn finite_lambdas(&self) -> Option<Vec<Complex64>> {
        self.lambdas
            .as_ref()
            .map(|l| l.iter().filter_map(|z| z.as_finite()).collect())
    }

    pub fn limit_configuration(&self, depth: usize) -> LimitConfiguration {
        LimitConfiguration {
            limit_points: self.finite_limit_points(),
            depth,
            r0: self.r0,
            angles: self.angles.clone(),
        }
    }

    pub fn deleted_indices(&self) -> Vec<usize> {
        (0..self.deleted).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_parses() {
        let cfg = RunConfig::parse(DEFAULT_CONFIG).unwrap();
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.limit_points.len(), 1);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse(r#"{"k": 2, "colour": 1}"#).is_err());
        assert!(RunConfig::parse(r#"{"k": 2, "tolerances": {"resid": 1e-9}}"#).is_err());
    }

    #[test]
    fn infinite_limit_point_rejected() {
        assert!(RunConfig::parse(r#"{"k": 2, "limit_points": ["inf"]}"#).is_err());
        let cfg =
            RunConfig::parse(r#"{"k": 3, "limit_points": [[2.0, 1.0]], "lambdas": [[-1.0, 0.5]]}"#)
                .unwrap();
        assert_eq!(
            cfg.finite_lambdas().unwrap(),
            vec![Complex64::new(-1.0, 0.5)]
        );
    }
}
