//! Experiment configuration: flat key-value sections in TOML syntax.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pucci::EllipticityParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    /// Nodes per side of every corpus lattice.
    pub grid: usize,
    /// Right-hand side bound `C_0`.
    pub c0: f64,
    pub out: PathBuf,
    /// Absolute slack on every certification check.
    pub certify_tol: f64,
    pub measure_estimate: Section,
    pub doubling: Section,
    pub lepsilon: Section,
    pub holder: Section,
    pub harnack: Section,
}

/// Per-experiment settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Section {
    pub lambda: f64,
    pub big_lambda: f64,
    pub gamma: f64,
    pub corpus: CorpusCounts,
    /// Survival levels `M^k` run over `k = 0..=levels`.
    pub levels: usize,
    pub slope_max: f64,
    /// Theoretical constants used for normalization and reference values only.
    pub epsilon1: f64,
    pub epsilon0: f64,
    /// Geometric decay bound per dyadic step.
    pub decay_max: f64,
    pub affine_alpha_tol: f64,
    /// Allowed ratio between perturbed members and their baselines.
    pub stability: f64,
    pub beta: f64,
    pub gradient_tol: f64,
    pub hessian_tol: f64,
    pub injectivity_cells: f64,
    pub measure_slack: f64,
    pub ink_samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusCounts {
    pub barriers: usize,
    pub solver: usize,
    pub perturbed: usize,
    pub negative: usize,
    pub analytic: usize,
}

impl Default for CorpusCounts {
    fn default() -> Self {
        Self { barriers: 0, solver: 12, perturbed: 12, negative: 4, analytic: 4 }
    }
}

impl Default for Section {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            big_lambda: 6.0,
            gamma: 0.05,
            corpus: CorpusCounts::default(),
            levels: 6,
            slope_max: -0.05,
            epsilon1: 0.5,
            epsilon0: 0.5,
            decay_max: 0.97,
            affine_alpha_tol: 0.02,
            stability: 10.0,
            beta: 2.0,
            gradient_tol: 4.0,
            hessian_tol: 0.25,
            injectivity_cells: 2.0,
            measure_slack: 2.0,
            ink_samples: 200,
        }
    }
}

impl Section {
    pub fn params(&self) -> Result<EllipticityParams> {
        EllipticityParams::new(self.lambda, self.big_lambda, self.gamma)
    }
}

impl Default for Config {
    fn default() -> Self {
        let doubling = Section {
            big_lambda: 1.0,
            corpus: CorpusCounts { barriers: 3, solver: 12, perturbed: 0, negative: 4, analytic: 0 },
            ..Section::default()
        };
        let two_sided = Section {
            big_lambda: 2.0,
            gamma: 0.5,
            corpus: CorpusCounts { barriers: 3, solver: 12, perturbed: 12, negative: 4, analytic: 2 },
            ..Section::default()
        };
        Self {
            seed: 7,
            grid: 257,
            c0: 1.0,
            out: PathBuf::from("out"),
            certify_tol: 1e-6,
            measure_estimate: Section::default(),
            doubling,
            lepsilon: Section::default(),
            holder: two_sided.clone(),
            harnack: two_sided,
        }
    }
}

impl Config {
    /// `"default"` selects the built-in configuration; anything else is a
    /// path to a TOML file whose keys override it.
    pub fn load(source: &str) -> Result<Self> {
        if source == "default" {
            return Ok(Self::default());
        }
        Self::from_file(Path::new(source))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid < 33 || self.grid % 2 == 0 {
            return Err(Error::Config(format!("grid must be odd and at least 33, got {}", self.grid)));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::Config(format!("c0 must be positive, got {}", self.c0)));
        }
        for (name, s) in self.sections() {
            s.params().map_err(|e| Error::Config(format!("[{name}] {e}")))?;
            if !(s.epsilon1 > 0.0 && s.epsilon1 < 1.0) {
                return Err(Error::Config(format!("[{name}] epsilon1 must lie in (0, 1)")));
            }
        }
        Ok(())
    }

    pub fn sections(&self) -> [(&'static str, &Section); 5] {
        [
            ("measure_estimate", &self.measure_estimate),
            ("doubling", &self.doubling),
            ("lepsilon", &self.lepsilon),
            ("holder", &self.holder),
            ("harnack", &self.harnack),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = Config::default();
        assert_eq!(Config::parse(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(Config::load("default").unwrap(), cfg);
    }

    #[test]
    fn partial_files_override_defaults() {
        let cfg = Config::parse("seed = 3\n# comment\n[holder]\ngamma = 0.25\n[holder.corpus]\nsolver = 2\n").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.holder.gamma, 0.25);
        assert_eq!(cfg.holder.corpus.solver, 2);
        assert_eq!(cfg.holder.corpus.perturbed, 12);
        assert_eq!(cfg.grid, 257);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Config::parse("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(Config::parse("grid = 64"), Err(Error::Config(_))));
        assert!(matches!(Config::parse("[doubling]\nlambda = 2.0\nbig_lambda = 1.0"), Err(Error::Config(_))));
    }
}
