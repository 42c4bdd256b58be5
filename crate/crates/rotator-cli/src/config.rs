//! Flat key = value configuration files with command-line overrides.
//!
//! The format is deliberately minimal: one `key = value` per line, `#`
//! comments, no nesting. Command-line flags override file values; the
//! `ROTATOR_OUT_DIR` environment variable overrides the output directory
//! unless a flag is given.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rotator_core::dynamics::{GaugeProfile, IntegratorOptions};
use rotator_core::model::{GFamily, RotatorSpec};

/// Configuration error with the offending field named.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: field '{}': {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), message: message.into() }
}

/// Raw key-value map from a config file.
#[derive(Debug, Default, Clone)]
pub struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(
                    "config",
                    format!("line {}: expected 'key = value', got '{line}'", lineno + 1),
                ));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigMap(map))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|s| s.as_str())
    }

    fn parse_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| err(key, format!("'{v}' is not a number"))))
            .transpose()
    }

    fn parse_bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.get(key)
            .map(|v| match v {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(err(key, format!("'{v}' is not a boolean"))),
            })
            .transpose()
    }
}

/// A fully validated simulation scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: RotatorSpec,
    pub q: f64,
    pub profile: GaugeProfile,
    pub axis: [f64; 3],
    pub phase: f64,
    pub options: IntegratorOptions,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Unvalidated scenario inputs merged from config file and flags.
#[derive(Debug, Default, Clone)]
pub struct ScenarioInputs {
    pub family: Option<String>,
    pub m: Option<f64>,
    pub ell: Option<f64>,
    pub q: Option<f64>,
    pub profile: Option<String>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub stabilize: Option<bool>,
    pub axis: Option<String>,
    pub phase: Option<f64>,
    pub seed: Option<u64>,
    pub stride: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl ScenarioInputs {
    /// Reads the file-level defaults.
    pub fn from_config(map: &ConfigMap) -> Result<Self, ConfigError> {
        Ok(ScenarioInputs {
            family: map.get("family").map(str::to_string),
            m: map.parse_f64("m")?,
            ell: map.parse_f64("ell")?,
            q: map.parse_f64("q")?,
            profile: map.get("profile").map(str::to_string),
            t_final: map.parse_f64("t_final")?,
            dt: map.parse_f64("dt")?,
            stabilize: map.parse_bool("stabilize")?,
            axis: map.get("axis").map(str::to_string),
            phase: map.parse_f64("phase")?,
            seed: map
                .get("seed")
                .map(|v| v.parse::<u64>().map_err(|_| err("seed", format!("'{v}' is not an integer"))))
                .transpose()?,
            stride: map
                .get("stride")
                .map(|v| {
                    v.parse::<usize>().map_err(|_| err("stride", format!("'{v}' is not an integer")))
                })
                .transpose()?,
            out_dir: map.get("out_dir").map(PathBuf::from),
        })
    }

    /// Overlays `self` (higher precedence) onto `base`.
    pub fn over(self, base: ScenarioInputs) -> ScenarioInputs {
        ScenarioInputs {
            family: self.family.or(base.family),
            m: self.m.or(base.m),
            ell: self.ell.or(base.ell),
            q: self.q.or(base.q),
            profile: self.profile.or(base.profile),
            t_final: self.t_final.or(base.t_final),
            dt: self.dt.or(base.dt),
            stabilize: self.stabilize.or(base.stabilize),
            axis: self.axis.or(base.axis),
            phase: self.phase.or(base.phase),
            seed: self.seed.or(base.seed),
            stride: self.stride.or(base.stride),
            out_dir: self.out_dir.or(base.out_dir),
        }
    }

    /// Validates everything against the model preconditions.
    pub fn build(self) -> Result<Scenario, ConfigError> {
        let family_str = self.family.ok_or_else(|| err("family", "missing (try --family quadratic)"))?;
        let family = GFamily::parse(&family_str).map_err(|e| err("family", e.to_string()))?;
        let m = self.m.unwrap_or(1.0);
        let ell = self.ell.unwrap_or(1.0);
        let spec = RotatorSpec::new(m, ell, family).map_err(|e| err("family/m/ell", e.to_string()))?;

        let q = self.q.unwrap_or(0.5);
        if !spec.is_fundamental() {
            spec.casimirs_from_q(q).map_err(|e| err("q", e.to_string()))?;
        }
        let profile = match &self.profile {
            Some(p) => GaugeProfile::parse(p).map_err(|e| err("profile", e.to_string()))?,
            None => GaugeProfile::Constant(1.0),
        };
        if spec.is_fundamental() {
            // The gauge bound must hold over the whole run.
            let t_probe = self.t_final.unwrap_or(10.0);
            let mut t = 0.0;
            while t <= t_probe {
                let u4 = 0.5 * ell * profile.omega(t);
                if u4.abs() >= 1.0 {
                    return Err(err(
                        "profile",
                        format!("l*omega(t)/2 = {u4} at t = {t}: must stay below 1 in magnitude"),
                    ));
                }
                t += t_probe / 256.0;
            }
        }

        let axis = match &self.axis {
            None => [1.0, 0.0, 0.0],
            Some(text) => {
                let parts: Vec<&str> = text.split(',').collect();
                if parts.len() != 3 {
                    return Err(err("axis", format!("expected x,y,z, got '{text}'")));
                }
                let mut a = [0.0; 3];
                for (slot, p) in a.iter_mut().zip(&parts) {
                    *slot = p
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| err("axis", format!("'{p}' is not a number")))?;
                }
                if a.iter().map(|x| x * x).sum::<f64>() < 1e-12 {
                    return Err(err("axis", "axis must be nonzero"));
                }
                a
            }
        };

        let t_final = self.t_final.unwrap_or(10.0);
        let dt = self.dt.unwrap_or(1e-3);
        if t_final <= 0.0 {
            return Err(err("t_final", format!("must be positive, got {t_final}")));
        }
        if dt <= 0.0 || dt > t_final {
            return Err(err("dt", format!("must satisfy 0 < dt <= t_final, got {dt}")));
        }

        let out_dir = self
            .out_dir
            .or_else(|| std::env::var_os("ROTATOR_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));

        Ok(Scenario {
            spec,
            q,
            profile,
            axis,
            phase: self.phase.unwrap_or(0.0),
            options: IntegratorOptions {
                t_final,
                dt,
                stabilize: self.stabilize.unwrap_or(false),
                abort_threshold: 1e-6,
                stride: self.stride.unwrap_or(1).max(1),
            },
            seed: self.seed.unwrap_or(0),
            out_dir,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_merge() {
        let map = ConfigMap::from_str(
            "# comment\nfamily = quadratic\nq = 0.4\ndt = 1e-3\nstabilize = on\n",
        )
        .unwrap();
        let base = ScenarioInputs::from_config(&map).unwrap();
        let flags = ScenarioInputs { q: Some(0.6), ..Default::default() };
        let scenario = flags.over(base).build().unwrap();
        assert_eq!(scenario.q, 0.6);
        assert!(scenario.options.stabilize);
    }

    #[test]
    fn field_level_errors() {
        let map = ConfigMap::from_str("family = quadratic\nq = lots\n").unwrap();
        let e = ScenarioInputs::from_config(&map).unwrap_err();
        assert_eq!(e.field, "q");

        let inputs = ScenarioInputs {
            family: Some("quadratic".into()),
            q: Some(1.5),
            ..Default::default()
        };
        let e = inputs.build().unwrap_err();
        assert_eq!(e.field, "q");

        let inputs = ScenarioInputs {
            family: Some("fundamental+".into()),
            profile: Some("const:3.0".into()),
            ..Default::default()
        };
        let e = inputs.build().unwrap_err();
        assert_eq!(e.field, "profile");
    }

    #[test]
    fn missing_family_is_actionable() {
        let e = ScenarioInputs::default().build().unwrap_err();
        assert_eq!(e.field, "family");
    }

    #[test]
    fn malformed_line_is_rejected() {
        assert!(ConfigMap::from_str("family quadratic\n").is_err());
    }
}
