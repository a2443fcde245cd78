use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hyperlattice::orbit::DEFAULT_ELEMENT_CAP;
use hyperlattice::output::Provenance;
use hyperlattice::{PeriodForm, Point};
use serde::{Deserialize, Serialize};

/// Caps the worker count regardless of config or flags (for CI boxes).
pub const MAX_WORKERS_ENV: &str = "HYPERLATTICE_MAX_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything a run depends on. Read from TOML; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub genus: usize,
    /// `[re, im]`.
    pub z: [f64; 2],
    pub w: [f64; 2],
    /// Periods of the form on the generators; defaults to the first unit vector.
    pub periods: Option<Vec<f64>>,
    pub norm_sq: Option<f64>,
    pub radii: Vec<f64>,
    pub n_max: usize,
    /// Multiplier on the covering margin, `>= 1`.
    pub margin_factor: f64,
    pub element_cap: usize,
    pub paranoid: bool,
    pub workers: usize,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
    pub dirichlet: DirichletConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirichletConfig {
    /// Real parts of the scan grid.
    pub s: Vec<f64>,
    /// Imaginary part shared by the scan grid.
    pub im_s: f64,
    pub n: Vec<u32>,
    pub epsilon: f64,
    /// Relative tolerance for the Huber residue probe.
    pub residue_tolerance: f64,
    /// Relative tolerance for the `n = 2` leading-coefficient probe.
    pub leading_tolerance: f64,
}

impl Default for DirichletConfig {
    fn default() -> Self {
        Self {
            s: vec![1.2, 1.5, 2.0, 4.0],
            im_s: 0.0,
            n: vec![0, 1, 2],
            epsilon: 0.0,
            residue_tolerance: 0.05,
            leading_tolerance: 0.35,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            genus: 2,
            z: [0.0, 1.0],
            w: [0.0, 1.0],
            periods: None,
            norm_sq: None,
            radii: vec![8.0, 9.0, 10.0],
            n_max: 6,
            margin_factor: 1.0,
            element_cap: DEFAULT_ELEMENT_CAP,
            paranoid: false,
            workers: 1,
            output_dir: PathBuf::from("hyperlattice-out"),
            formats: vec![Format::Csv, Format::Json],
            dirichlet: DirichletConfig::default(),
        }
    }
}

/// Command-line values that win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub genus: Option<usize>,
    pub radii: Option<Vec<f64>>,
    pub z: Option<[f64; 2]>,
    pub w: Option<[f64; 2]>,
    pub periods: Option<Vec<f64>>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        cfg.apply(overrides);
        if let Some(cap) = env_worker_cap()? {
            cfg.workers = cfg.workers.min(cap);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, o: &Overrides) {
        if let Some(g) = o.genus {
            self.genus = g;
        }
        if let Some(r) = &o.radii {
            self.radii = r.clone();
        }
        if let Some(z) = o.z {
            self.z = z;
        }
        if let Some(w) = o.w {
            self.w = w;
        }
        if let Some(p) = &o.periods {
            self.periods = Some(p.clone());
        }
        if let Some(n) = o.workers {
            self.workers = n;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.genus < 2 {
            bail!("genus must be >= 2, got {}", self.genus);
        }
        if self.radii.is_empty() {
            bail!("radii must not be empty");
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            bail!("radii must be finite and >= 0: {:?}", self.radii);
        }
        if !self.radii.windows(2).all(|w| w[0] < w[1]) {
            bail!("radii must be strictly increasing: {:?}", self.radii);
        }
        if self.n_max < 2 {
            bail!("n_max must be >= 2, got {}", self.n_max);
        }
        if self.workers < 1 {
            bail!("workers must be >= 1");
        }
        if !(self.margin_factor >= 1.0) {
            bail!("margin_factor must be >= 1, got {}", self.margin_factor);
        }
        self.z_point()?;
        self.w_point()?;
        self.form()?;
        Ok(())
    }

    pub fn z_point(&self) -> Result<Point> {
        Ok(Point::new(self.z[0], self.z[1])?)
    }

    pub fn w_point(&self) -> Result<Point> {
        Ok(Point::new(self.w[0], self.w[1])?)
    }

    pub fn form(&self) -> Result<PeriodForm> {
        let rank = 2 * self.genus;
        let mut f = match &self.periods {
            Some(p) if p.len() != rank => {
                bail!(
                    "expected {rank} periods for genus {}, got {}",
                    self.genus,
                    p.len()
                )
            }
            Some(p) => PeriodForm::new(p.clone())?,
            None => PeriodForm::unit(rank),
        };
        if let Some(n) = self.norm_sq {
            f = f.with_norm_sq(n)?;
        }
        Ok(f)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Hash of everything that can change a result. Worker count and
    /// output location are excluded so reruns that differ only in those
    /// produce byte-identical files.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.workers = 1;
        canonical.output_dir = PathBuf::new();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        Provenance::hash_text(&text)
    }
}

fn env_worker_cap() -> Result<Option<usize>> {
    match std::env::var(MAX_WORKERS_ENV) {
        Ok(v) => {
            let cap: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{MAX_WORKERS_ENV}={v:?} is not a count"))?;
            Ok(Some(cap.max(1)))
        }
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn flags_win_over_file() {
        let mut cfg: RunConfig =
            toml::from_str("genus = 3\nradii = [1.0, 2.0]\nworkers = 4").unwrap();
        cfg.apply(&Overrides {
            genus: Some(2),
            workers: Some(2),
            ..Default::default()
        });
        assert_eq!((cfg.genus, cfg.workers), (2, 2));
        assert_eq!(cfg.radii, vec![1.0, 2.0]);
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let a = RunConfig::default();
        let b = RunConfig {
            workers: 8,
            output_dir: "elsewhere".into(),
            ..a.clone()
        };
        let c = RunConfig {
            genus: 3,
            ..a.clone()
        };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            RunConfig {
                genus: 1,
                ..Default::default()
            },
            RunConfig {
                radii: vec![2.0, 1.0],
                ..Default::default()
            },
            RunConfig {
                n_max: 1,
                ..Default::default()
            },
            RunConfig {
                workers: 0,
                ..Default::default()
            },
            RunConfig {
                periods: Some(vec![1.0]),
                ..Default::default()
            },
            RunConfig {
                z: [0.0, -1.0],
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(toml::from_str::<RunConfig>("genius = 2").is_err());
    }
}
