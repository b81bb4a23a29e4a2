//! Run configuration: JSON file values overridden by command-line flags.

use crate::error::CliError;
use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Integrate the nonlinear boundary equation from a cosine seed
    Simulate,
    /// Assemble the linearized operator at a seeded state
    Linearize,
    /// Frequency tables, monotonicity and transversality constants
    Spectrum,
    /// Excluded parameter measure for one resonance family
    Cantor,
    /// Straighten a perturbed transport operator
    KamTransport,
    /// Reduce a synthetic reversible remainder
    KamRemainder,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Linearize => "linearize",
            Command::Spectrum => "spectrum",
            Command::Cantor => "cantor",
            Command::KamTransport => "kam-transport",
            Command::KamRemainder => "kam-remainder",
        }
    }
}

/// Values that may come from the config file or from flags. Absent values fall back to
/// per-subcommand defaults.
#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// equilibrium radius parameter
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// tangential sites, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub sites: Option<Vec<i64>>,
    /// cosine amplitudes, one per site
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub amplitudes: Option<Vec<f64>>,
    /// parameter interval lower end
    #[arg(long, global = true)]
    pub b0: Option<f64>,
    /// parameter interval upper end
    #[arg(long, global = true)]
    pub b1: Option<f64>,
    /// θ grid size
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// mode truncation of assembled operators
    #[arg(long, global = true)]
    pub n: Option<i64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// final time
    #[arg(long = "t-final", global = true)]
    pub t_final: Option<f64>,
    #[arg(long = "record-stride", global = true)]
    pub record_stride: Option<usize>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// γ values for a sweep, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub tau1: Option<f64>,
    #[arg(long, global = true)]
    pub tau2: Option<f64>,
    #[arg(long, global = true)]
    pub upsilon: Option<f64>,
    /// bound on |l|₁ (0 skips the transversality scan)
    #[arg(long, global = true)]
    pub lmax: Option<i64>,
    #[arg(long, global = true)]
    pub jmax: Option<i64>,
    /// grid size of the transversality scan
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// size of the constant perturbation in the perturbed scan
    #[arg(long = "eps-hat", global = true)]
    pub eps_hat: Option<f64>,
    /// resonance family: transport, first-order-melnikov or second-order-melnikov
    #[arg(long, global = true)]
    pub kind: Option<String>,
    /// tangential frequency vector for the reduction engines
    #[arg(long, global = true, value_delimiter = ',')]
    pub omega: Option<Vec<f64>>,
    /// number of reduction steps
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// transport perturbation terms a·cos(lφ + jθ) given as a:l:j, comma separated
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub terms: Option<Vec<String>>,
    /// φ grid size of the transport problem
    #[arg(long = "phi-size", global = true)]
    pub phi_size: Option<usize>,
    /// size of the synthetic remainder
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// bandwidth of the synthetic remainder
    #[arg(long, global = true)]
    pub band: Option<i64>,
    /// number of time dimensions of the synthetic remainder
    #[arg(long = "time-dims", global = true)]
    pub time_dims: Option<usize>,
    /// seed for randomized input
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// worker threads for parameter scans
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Values set in `top` win.
    pub fn merged(mut self, top: &Settings) -> Settings {
        overlay!(
            self, top, b, sites, amplitudes, b0, b1, m, n, dt, t_final, record_stride, gamma, gammas, tau1, tau2,
            upsilon, lmax, jmax, grid, eps_hat, kind, omega, steps, terms, phi_size, delta, band, time_dims, seed,
            jobs
        );
        self
    }

    pub fn b(&self) -> f64 {
        self.b.unwrap_or(0.5)
    }

    pub fn sites(&self) -> Vec<i64> {
        self.sites.clone().unwrap_or_else(|| vec![1, 2])
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.b0.unwrap_or(0.1), self.b1.unwrap_or(0.9))
    }

    /// (site, amplitude) pairs; missing amplitudes are zero.
    pub fn seed_modes(&self) -> Result<Vec<(i64, f64)>, CliError> {
        let sites = self.sites();
        let amps = self.amplitudes.clone().unwrap_or_else(|| vec![0.0; sites.len()]);
        if amps.len() != sites.len() {
            return Err(CliError::Config(format!(
                "{} amplitudes given for {} sites",
                amps.len(),
                sites.len()
            )));
        }
        Ok(sites.into_iter().zip(amps).collect())
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::Config("this subcommand uses randomized input and needs --seed".into()))
    }

    /// Parses the `a:l:j` transport terms.
    pub fn transport_terms(&self) -> Result<Vec<(f64, i64, i64)>, CliError> {
        let raw = self.terms.clone().unwrap_or_else(|| vec!["0.1:0:1".into()]);
        raw.iter()
            .map(|t| {
                let parts: Vec<&str> = t.split(':').collect();
                let bad = || CliError::Config(format!("transport term {t:?} is not of the form a:l:j"));
                if parts.len() != 3 {
                    return Err(bad());
                }
                Ok((
                    parts[0].parse().map_err(|_| bad())?,
                    parts[1].parse().map_err(|_| bad())?,
                    parts[2].parse().map_err(|_| bad())?,
                ))
            })
            .collect()
    }

    /// Basic range checks shared by all subcommands; the library validates the rest.
    pub fn validate(&self) -> Result<(), CliError> {
        let b = self.b();
        if !(b > 0.0 && b < 1.0) {
            return Err(CliError::Config(format!("b = {b} outside (0,1)")));
        }
        let (b0, b1) = self.interval();
        if !(0.0 < b0 && b0 < b1 && b1 < 1.0) {
            return Err(CliError::Config(format!("need 0 < b0 < b1 < 1, got [{b0}, {b1}]")));
        }
        if self.sites().is_empty() || self.sites().iter().any(|&j| j <= 0) {
            return Err(CliError::Config("sites must be a nonempty list of positive integers".into()));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g < 1.0) {
                return Err(CliError::Config(format!("γ = {g} outside (0,1)")));
            }
        }
        if let Some(gs) = &self.gammas {
            if gs.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
                return Err(CliError::Config("every swept γ must lie in (0,1)".into()));
            }
        }
        for (name, v) in [("tau1", self.tau1), ("tau2", self.tau2), ("upsilon", self.upsilon), ("dt", self.dt)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!("{name} = {v} must be positive")));
                }
            }
        }
        if let Some(d) = self.delta {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(CliError::Config(format!("delta = {d} must be non-negative")));
            }
        }
        if self.jobs == Some(0) {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        if let Some(lmax) = self.lmax {
            if lmax < 0 {
                return Err(CliError::Config("lmax must be non-negative".into()));
            }
        }
        if let Some(j) = self.jmax {
            if j < 1 {
                return Err(CliError::Config("jmax must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Everything echoed into the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub settings: Settings,
    pub output: PathBuf,
}
