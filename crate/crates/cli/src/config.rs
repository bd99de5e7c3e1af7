//! `run.cfg`: every setting that determines a run's output, in TOML.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub problem: Option<String>,
    pub grid: Option<String>,
    pub fit: Option<String>,
    pub boundary: Option<String>,
    pub figures: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub quick: Option<bool>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub b: Option<f64>,
    pub lambda: Option<f64>,
    pub r1_min: Option<f64>,
    pub r1_max: Option<f64>,
    pub n_modes: Option<usize>,
    pub n_scan: Option<usize>,
    pub paths: Option<usize>,
    pub t_end: Option<f64>,
    pub t_transient: Option<f64>,
    pub window: Option<f64>,
}

macro_rules! prefer {
    ($a:ident, $b:ident; $($f:ident),*) => {
        RunConfig { $($f: $a.$f.or($b.$f)),* }
    };
}

impl RunConfig {
    /// Field-wise merge; `self` wins where both are set.
    pub fn or(self, other: RunConfig) -> RunConfig {
        prefer!(self, other; command, problem, grid, fit, boundary, figures, seed, out, quick, eps, delta, sigma,
            alpha, b, lambda, r1_min, r1_max, n_modes, n_scan, paths, t_end, t_transient, window)
    }

    pub fn to_toml(&self) -> std::io::Result<String> {
        toml::to_string(self).map_err(std::io::Error::other)
    }

    pub fn from_toml(s: &str) -> Result<RunConfig, String> {
        toml::from_str(s).map_err(|e| format!("bad run.cfg: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_round_trip() {
        let a = RunConfig { seed: Some(3), eps: Some(0.1), ..Default::default() };
        let b = RunConfig { seed: Some(9), delta: Some(0.2), command: Some("tc".into()), ..Default::default() };
        let m = a.or(b);
        assert_eq!((m.seed, m.eps, m.delta), (Some(3), Some(0.1), Some(0.2)));
        let back = RunConfig::from_toml(&m.to_toml().unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(RunConfig::from_toml("nonsense = 1").is_err());
    }
}
