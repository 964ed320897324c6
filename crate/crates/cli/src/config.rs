//! Command-line flags, the optional TOML config file, and their merge.
//!
//! Every flag may also appear in the config file under the same name (with
//! underscores). Flags win over the file; the file wins over defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "sigtree",
    version,
    about = "Signature-code tree-splitting random access: codebooks, simulation, analytic curves"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a signature codebook, write it as JSON and verify it exhaustively.
    Codebook(Flags),
    /// Re-check a codebook file (or a freshly built one) for uniqueness.
    Verify(Flags),
    /// Run seeded contention periods end to end.
    Simulate(Flags),
    /// Exact expected slot counts, bounds and optional Monte Carlo column.
    Slots(Flags),
    /// Write the three figure CSVs.
    Figures(Flags),
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Codebook(f)
            | Command::Verify(f)
            | Command::Simulate(f)
            | Command::Slots(f)
            | Command::Figures(f) => f,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// Number of users (prime).
    #[arg(long)]
    pub m: Option<u64>,
    /// Decodability threshold.
    #[arg(long)]
    pub k: Option<usize>,
    /// Signature/payload alphabet size (prime, at most M).
    #[arg(long)]
    pub q: Option<u64>,
    /// Per-user activation probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Transmit power (SNR).
    #[arg(long)]
    pub power: Option<f64>,
    /// Payload size in bits.
    #[arg(long)]
    pub d_bits: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fixed number of active users (simulate) instead of sampling.
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub l_max: Option<usize>,
    /// Output file (codebook, slots) or directory (simulate, figures).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Codebook JSON to verify or to simulate with.
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    /// Largest multiplicative group order M^K - 1 to construct.
    #[arg(long)]
    pub order_cap: Option<u64>,
    /// Largest number of subsets to enumerate during verification.
    #[arg(long)]
    pub subset_cap: Option<u64>,
    /// TOML file with any of the above keys.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Flags {
    /// Fills unset flags from the config file named by `--config`, if any.
    pub fn resolve(&self) -> Result<Settings> {
        let mut merged = self.clone();
        if let Some(path) = &self.config {
            let file = load_config(path)?;
            overlay!(merged, file; m, k, q, p, power, d_bits, trials, seed, l, l_max, out, codebook, order_cap, subset_cap);
        }
        Ok(Settings::from(merged))
    }
}

pub fn load_config(path: &Path) -> Result<Flags> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub m: u64,
    pub k: usize,
    pub q: u64,
    pub p: f64,
    pub power: f64,
    pub d_bits: u64,
    pub trials: u64,
    pub seed: u64,
    pub l: Option<usize>,
    pub l_max: usize,
    pub out: Option<PathBuf>,
    pub codebook: Option<PathBuf>,
    pub order_cap: u64,
    pub subset_cap: u64,
    /// Which of m/power were given explicitly (figures default to M = 1031, P = 100).
    pub m_given: bool,
    pub power_given: bool,
}

impl From<Flags> for Settings {
    fn from(f: Flags) -> Self {
        Self {
            m: f.m.unwrap_or(31),
            k: f.k.unwrap_or(3),
            q: f.q.unwrap_or(2),
            p: f.p.unwrap_or(0.1),
            power: f.power.unwrap_or(100.0),
            d_bits: f.d_bits.unwrap_or(64),
            trials: f.trials.unwrap_or(1000),
            seed: f.seed.unwrap_or(1),
            l: f.l,
            l_max: f.l_max.unwrap_or(20),
            out: f.out,
            codebook: f.codebook,
            order_cap: f.order_cap.unwrap_or(1_000_000_000),
            subset_cap: f.subset_cap.unwrap_or(1_000_000),
            m_given: f.m.is_some(),
            power_given: f.power.is_some(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "m = 11\nk = 2\nseed = 9\np = 0.3\n").unwrap();
        let flags = Flags {
            k: Some(4),
            config: Some(path),
            ..Flags::default()
        };
        let s = flags.resolve().unwrap();
        assert_eq!((s.m, s.k, s.seed, s.p), (11, 4, 9, 0.3));
        assert_eq!(s.q, 2);
        assert!(s.m_given);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Flags>("mm = 3").is_err());
        assert!(toml::from_str::<Flags>("config = 'x'").is_err());
    }
}
