//! File formats, manifests and command bodies behind the `qkdloss` binary.

pub mod args;
pub mod attack_file;
pub mod commands;
pub mod manifest;

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use args::{Cli, Command};
use clap::Parser;
use commands::{Outcome, Verdict};
use manifest::{compare, default_manifest_path, DigestCheck, RunManifest};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A finished command and the manifest to write beside it.
#[derive(Debug, Clone)]
pub struct Execution {
    pub outcome: Outcome,
    pub manifest: Option<(PathBuf, RunManifest)>,
}

pub fn build_manifest(outcome: &Outcome, argv: &[String]) -> RunManifest {
    RunManifest {
        command: outcome.command.to_string(),
        argv: argv.to_vec(),
        config: outcome.config.clone(),
        seed: outcome.seed,
        version: VERSION.to_string(),
        inputs: outcome.input_digests(),
        outputs: outcome.output_digests(),
    }
}

/// Runs a parsed command line. `argv` excludes the program name and is
/// recorded verbatim in the manifest.
pub fn dispatch(cli: &Cli, argv: &[String]) -> anyhow::Result<Execution> {
    if let Command::Replay(r) = &cli.command {
        return Ok(Execution {
            outcome: replay(&r.manifest_file)?,
            manifest: None,
        });
    }
    let outcome = commands::execute(&cli.command)?;
    let path = cli
        .manifest
        .clone()
        .unwrap_or_else(|| default_manifest_path(outcome.command, outcome.main_output()));
    let manifest = build_manifest(&outcome, argv);
    Ok(Execution {
        outcome,
        manifest: Some((path, manifest)),
    })
}

#[derive(Debug, Serialize)]
struct ReplayReport {
    command: String,
    recorded_version: String,
    version: String,
    inputs: Vec<DigestCheck>,
    outputs: Vec<DigestCheck>,
    /// Recorded output files still present on disk, checked as they are.
    on_disk: Vec<DigestCheck>,
    identical: bool,
}

/// Re-runs the command recorded in a manifest in memory and compares
/// input and output digests. Nothing is written.
pub fn replay(manifest_path: &Path) -> anyhow::Result<Outcome> {
    let text = std::fs::read_to_string(manifest_path)
        .with_context(|| format!("cannot read {}", manifest_path.display()))?;
    let recorded: RunManifest = serde_json::from_str(&text).context("malformed manifest")?;
    let cli = Cli::try_parse_from(
        std::iter::once("qkdloss".to_string()).chain(recorded.argv.iter().cloned()),
    )
    .context("manifest argv does not parse")?;
    anyhow::ensure!(
        !matches!(cli.command, Command::Replay(_)),
        "manifest records a replay"
    );
    let rerun = commands::execute(&cli.command)?;
    let fresh = build_manifest(&rerun, &recorded.argv);
    let inputs = compare(&recorded.inputs, &fresh.inputs);
    let outputs = compare(&recorded.outputs, &fresh.outputs);
    let on_disk: Vec<DigestCheck> = recorded
        .outputs
        .iter()
        .filter(|(name, _)| name.as_str() != manifest::STDOUT_KEY)
        .filter_map(|(name, expected)| {
            let bytes = std::fs::read(name).ok()?;
            let actual = manifest::sha256_hex(&bytes);
            Some(DigestCheck {
                name: name.clone(),
                matches: &actual == expected,
                expected: Some(expected.clone()),
                actual: Some(actual),
            })
        })
        .collect();
    let identical = inputs
        .iter()
        .chain(&outputs)
        .chain(&on_disk)
        .all(|c| c.matches);
    let report = ReplayReport {
        command: recorded.command.clone(),
        recorded_version: recorded.version.clone(),
        version: VERSION.to_string(),
        inputs,
        outputs,
        on_disk,
        identical,
    };
    let mut stdout = serde_json::to_string_pretty(&report)?;
    stdout.push('\n');
    let summary = if identical {
        format!(
            "replay of {}: all outputs byte-identical\n",
            recorded.command
        )
    } else {
        let bad: Vec<String> = report
            .inputs
            .iter()
            .chain(&report.outputs)
            .map(|c| (c, ""))
            .chain(report.on_disk.iter().map(|c| (c, " (on disk)")))
            .filter(|(c, _)| !c.matches)
            .map(|(c, tag)| format!("{}{tag}", c.name))
            .collect();
        format!(
            "replay of {}: digests differ for {}\n",
            recorded.command,
            bad.join(", ")
        )
    };
    Ok(Outcome {
        command: "replay",
        config: serde_json::to_value(&recorded)?,
        seed: recorded.seed,
        stdout: stdout.into_bytes(),
        summary,
        files: Vec::new(),
        inputs: Vec::new(),
        verdict: if identical {
            Verdict::Ok
        } else {
            Verdict::Negative
        },
    })
}

/// Writes the outcome's files and manifest.
pub fn persist(exec: &Execution) -> anyhow::Result<()> {
    for (path, bytes) in &exec.outcome.files {
        std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    }
    if let Some((path, manifest)) = &exec.manifest {
        let mut text = serde_json::to_string_pretty(manifest)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}
