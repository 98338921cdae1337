//! Plan files: TOML with one section per subcommand. Paths inside a plan are
//! resolved relative to the plan file's directory.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use toml::{Table, Value};

use rgsla_core::config::{Theta, TrainConfig};
use rgsla_core::graph::io::read_graph_dir;
use rgsla_core::graph::{sbm_generate, Graph, SbmSpec};

use crate::error::{CliError, Result};

/// Reads `[section]` of the plan at `path`; a missing section yields the
/// default, and the returned path is the directory plan paths are relative to.
pub fn load_section<T: DeserializeOwned + Default>(path: &Path, section: &str) -> Result<(T, PathBuf)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut table: Table = toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let value = match table.remove(section) {
        None => return Ok((T::default(), base)),
        Some(Value::Table(t)) => t,
        Some(_) => {
            return Err(CliError::usage(format!(
                "{}: [{section}] must be a table",
                path.display()
            )))
        }
    };
    let parsed = value
        .try_into()
        .map_err(|e| CliError::usage(format!("{}: [{section}]: {e}", path.display())))?;
    Ok((parsed, base))
}

/// Loads the plan section if a plan was given.
pub fn maybe_load<T: DeserializeOwned + Default>(plan: Option<&Path>, section: &str) -> Result<(T, PathBuf)> {
    match plan {
        Some(p) => load_section(p, section),
        None => Ok((T::default(), PathBuf::new())),
    }
}

pub fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

pub fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| CliError::usage(format!("missing required {what}")))
}

/// Parameters of a two-or-more block SBM with axis-separated feature means.
/// Defaults describe the 2 × 30 node robustness scenario.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub dim: usize,
    pub separation: f64,
    pub noise_sd: f64,
    pub train_frac: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            sizes: vec![30, 30],
            p_in: 0.15,
            p_out: 0.02,
            dim: 16,
            separation: 2.0,
            noise_sd: 0.3,
            train_frac: 0.1,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn generate(&self, seed_offset: u64) -> Result<Graph> {
        if self.dim < self.sizes.len() {
            return Err(CliError::usage(format!(
                "dim {} is smaller than the {} blocks",
                self.dim,
                self.sizes.len()
            )));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(CliError::usage(format!(
                "train_frac must lie in (0, 1), got {}",
                self.train_frac
            )));
        }
        let spec = SbmSpec {
            train_frac: self.train_frac,
            ..SbmSpec::axis_separated(
                self.sizes.clone(),
                self.p_in,
                self.p_out,
                self.dim,
                self.separation,
                self.noise_sd,
                self.seed.wrapping_add(seed_offset),
            )
        };
        Ok(sbm_generate(&spec)?)
    }
}

pub fn read_graph(dir: &Path) -> Result<Graph> {
    Ok(read_graph_dir(dir)?)
}

/// Parses `key=value` overrides; values are TOML, falling back to a bare
/// string.
pub fn parse_overrides(pairs: &[String]) -> Result<Table> {
    let mut out = Table::new();
    for pair in pairs {
        let (key, raw) = pair
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("override {pair:?} is not KEY=VALUE")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = match toml::from_str::<Table>(&format!("v = {raw}")) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => Value::String(raw.to_string()),
        };
        out.insert(key.to_string(), value);
    }
    Ok(out)
}

/// Builds a config from a table of `TrainConfig` fields plus optional
/// `theta1..theta3` keys, which are converted to `γ1`, `λ1`, `γ2`.
pub fn train_config(mut table: Table) -> Result<TrainConfig> {
    let mut theta = [None; 3];
    for (slot, key) in theta.iter_mut().zip(["theta1", "theta2", "theta3"]) {
        if let Some(v) = table.remove(key) {
            let x = match v {
                Value::Float(f) => f,
                Value::Integer(i) => i as f64,
                other => return Err(CliError::usage(format!("{key} must be a number, got {other}"))),
            };
            *slot = Some(x);
        }
    }
    let mut cfg: TrainConfig = table
        .try_into()
        .map_err(|e| CliError::usage(format!("train config: {e}")))?;
    if theta.iter().any(Option::is_some) {
        let current = cfg.theta();
        cfg.apply_theta(Theta {
            theta1: theta[0].unwrap_or(current.theta1),
            theta2: theta[1].unwrap_or(current.theta2),
            theta3: theta[2].unwrap_or(current.theta3),
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rgsla_core::graph::PrunePolicy;

    #[test]
    fn overrides_parse_as_toml() {
        let t = parse_overrides(&[
            "alpha=0.3".into(),
            "outer_iters = 7".into(),
            "prune={kind=\"knn\", k=4}".into(),
        ])
        .unwrap();
        let cfg = train_config(t).unwrap();
        assert_eq!(cfg.alpha, 0.3);
        assert_eq!(cfg.outer_iters, 7);
        assert_eq!(cfg.prune, PrunePolicy::Knn { k: 4 });
        assert!(parse_overrides(&["alpha".into()]).is_err());
    }

    #[test]
    fn theta_keys_convert() {
        let t = parse_overrides(&["theta1=0.5".into(), "theta2=0.05".into(), "theta3=0.2".into()]).unwrap();
        let cfg = train_config(t).unwrap();
        assert_eq!(cfg.gamma1, 0.5);
        assert!((cfg.lambda1 - 0.1).abs() < 1e-15);
        assert_eq!(cfg.gamma2, 0.2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let t = parse_overrides(&["gamma9=1".into()]).unwrap();
        assert!(matches!(train_config(t), Err(CliError::Usage(_))));
    }

    #[test]
    fn missing_section_gives_default() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("plan.toml");
        std::fs::write(&p, "[other]\nx = 1\n").unwrap();
        let (spec, base): (SyntheticSpec, _) = load_section(&p, "gen").unwrap();
        assert_eq!(spec, SyntheticSpec::default());
        assert_eq!(base, dir.path());
        std::fs::write(&p, "[gen]\nsizes = [3, 3]\nbogus = 1\n").unwrap();
        assert!(load_section::<SyntheticSpec>(&p, "gen").is_err());
    }
}
