use std::path::PathBuf;

use clap::{ArgAction, ArgGroup, Args, Parser, Subcommand, ValueEnum};
use qkdloss_core::search::{Objective, XMode};
use qkdloss_core::states::{FamilyKind, ProtocolFamily};
use serde::Serialize;

/// Lossy-channel QKD attack toolkit.
#[derive(Debug, Clone, Parser)]
#[command(name = "qkdloss", version)]
pub struct Cli {
    /// Where to write the run manifest (default: next to the main output,
    /// or `qkdloss-<command>.manifest.json`).
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check an attack spec against the isometry and throughput constraints.
    Verify(VerifyArgs),
    /// Monte Carlo run of a protocol, optionally under attack.
    Simulate(SimulateArgs),
    /// Eve's best information over a grid of QBER caps.
    Tradeoff(TradeoffArgs),
    /// USD intercept-resend threshold table for a B92 pair.
    Usd(UsdArgs),
    /// Re-run a command from its manifest and compare output digests.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Verify(_) => "verify",
            Self::Simulate(_) => "simulate",
            Self::Tradeoff(_) => "tradeoff",
            Self::Usd(_) => "usd",
            Self::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum FamilyArg {
    #[value(name = "bb84-4")]
    #[serde(rename = "bb84-4")]
    Bb84Four,
    #[value(name = "bb84-6")]
    #[serde(rename = "bb84-6")]
    Bb84Six,
    #[value(name = "b92")]
    #[serde(rename = "b92")]
    B92,
}

impl FamilyArg {
    pub fn family(self) -> ProtocolFamily {
        ProtocolFamily::from_kind(match self {
            Self::Bb84Four => FamilyKind::Bb84Four,
            Self::Bb84Six => FamilyKind::Bb84Six,
            Self::B92 => FamilyKind::B92,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum XModeArg {
    Zero,
    Free,
}

impl From<XModeArg> for XMode {
    fn from(m: XModeArg) -> Self {
        match m {
            XModeArg::Zero => Self::Zero,
            XModeArg::Free => Self::Free,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveArg {
    Holevo,
    Helstrom,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Holevo => Self::Holevo,
            ObjectiveArg::Helstrom => Self::Helstrom,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Attack-spec JSON file.
    pub attack_file: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Line transmittance. Defaults to the attack file's eta.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rounds: u64,
    /// `none`, `usd` (B92 only), or an attack-spec JSON file.
    #[arg(long, default_value = "none")]
    pub attack: String,
    #[arg(long)]
    pub seed: u64,
    /// Detector efficiency.
    #[arg(long, default_value_t = 1.0)]
    pub p_det: f64,
    /// Eve swaps the line for a lossless one (re-send attacks).
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub line_replacement: bool,
    /// Per-round CSV log.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TradeoffArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub eta: f64,
    /// Probe dimension.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(2..=8))]
    pub d_e: u8,
    /// Ascending QBER caps, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub grid: Vec<f64>,
    #[arg(long, value_enum, default_value = "zero")]
    pub x_mode: XModeArg,
    /// Objective evaluations per grid point and attack class.
    #[arg(long, default_value_t = qkdloss_core::search::DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[arg(long)]
    pub seed: u64,
    /// Sweep CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "holevo")]
    pub objective: ObjectiveArg,
    #[arg(long, default_value_t = qkdloss_core::search::DEFAULT_RESTARTS, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub restarts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairArg {
    /// `{|0⟩, |+⟩}`.
    Default,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group(ArgGroup::new("states").required(true).args(["overlap", "pair"])))]
pub struct UsdArgs {
    /// Overlap `|⟨ψ0|ψ1⟩|` of a real pair, in (0, 1).
    #[arg(long)]
    pub overlap: Option<f64>,
    #[arg(long, value_enum)]
    pub pair: Option<PairArg>,
    #[arg(
        long,
        value_delimiter = ',',
        num_args = 1..,
        default_value = "0.05,0.1,0.15,0.2,0.25,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"
    )]
    pub eta_grid: Vec<f64>,
    /// Threshold table CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReplayArgs {
    pub manifest_file: PathBuf,
}
