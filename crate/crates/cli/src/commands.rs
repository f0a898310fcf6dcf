//! Command bodies. Each returns an [`Outcome`] held in memory; nothing here
//! writes to disk, so a replay can recompute digests without side effects.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use qkdloss_core::analysis::{qber, tradeoff_point, TradeoffPoint};
use qkdloss_core::attack::{
    check_equal_throughput, check_isometry, filter_no_count, usd_intercept_resend,
    IsometryResiduals, ThroughputResiduals, FEASIBILITY_TOL,
};
use qkdloss_core::montecarlo::{run_protocol, uniformity_check, AttackModel, SimConfig, SimReport};
use qkdloss_core::qmath::C64;
use qkdloss_core::search::{sweep_tradeoff, SearchSpec, SweepRow};
use qkdloss_core::states::{BasisName, FamilyKind, ProtocolFamily, SignalState, StateLabel};
use serde::Serialize;

use crate::args::{Command, FamilyArg, SimulateArgs, TradeoffArgs, UsdArgs, VerifyArgs};
use crate::attack_file::read_attack;
use crate::manifest::{sha256_hex, STDOUT_KEY};

/// Process exit status for a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Exit 0.
    Ok,
    /// Exit 1: the command ran but the answer is negative.
    Negative,
}

impl Verdict {
    pub fn code(self) -> u8 {
        match self {
            Self::Ok => 0,
            Self::Negative => 1,
        }
    }
}

/// Exit code for usage, parse and input errors.
pub const USAGE_ERROR: u8 = 2;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: &'static str,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub stdout: Vec<u8>,
    /// Human-readable summary for standard error.
    pub summary: String,
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub inputs: Vec<(PathBuf, Vec<u8>)>,
    pub verdict: Verdict,
}

impl Outcome {
    /// The file the manifest is written next to by default.
    pub fn main_output(&self) -> Option<&Path> {
        self.files.first().map(|(p, _)| p.as_path())
    }

    pub fn output_digests(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        out.insert(STDOUT_KEY.to_string(), sha256_hex(&self.stdout));
        for (p, bytes) in &self.files {
            out.insert(p.display().to_string(), sha256_hex(bytes));
        }
        out
    }

    pub fn input_digests(&self) -> BTreeMap<String, String> {
        self.inputs
            .iter()
            .map(|(p, bytes)| (p.display().to_string(), sha256_hex(bytes)))
            .collect()
    }
}

fn json_line<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn config_of<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

/// Shortest round-trip decimal, switching to exponent form for tiny values.
fn num(x: f64) -> String {
    serde_json::to_string(&x).expect("finite number")
}

fn read_input(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Runs any command except `replay`.
pub fn execute(command: &Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Verify(a) => verify(a),
        Command::Simulate(a) => simulate(a),
        Command::Tradeoff(a) => tradeoff(a),
        Command::Usd(a) => usd(a),
        Command::Replay(_) => bail!("replay cannot be nested"),
    }
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    eta: f64,
    d_e: usize,
    isometry: IsometryResiduals,
    throughput_four: ThroughputResiduals,
    throughput_six: ThroughputResiduals,
    feasible_four: bool,
    feasible_six: bool,
    /// `[re, im]` of the post-selected no-count overlap.
    deficit: Option<[f64; 2]>,
    x: Option<f64>,
    point: Option<TradeoffPoint>,
    filter_error: Option<String>,
}

pub fn verify(args: &VerifyArgs) -> anyhow::Result<Outcome> {
    let bytes = read_input(&args.attack_file)?;
    let pk = read_attack(&args.attack_file)?;
    let isometry = check_isometry(&pk);
    let throughput_four = check_equal_throughput(&pk, &ProtocolFamily::bb84_four());
    let throughput_six = check_equal_throughput(&pk, &ProtocolFamily::bb84_six());
    let feasible_four =
        isometry.max() <= FEASIBILITY_TOL && throughput_four.max() <= FEASIBILITY_TOL;
    let feasible_six = isometry.max() <= FEASIBILITY_TOL && throughput_six.max() <= FEASIBILITY_TOL;

    let mut report = VerifyReport {
        eta: pk.eta(),
        d_e: pk.d_e(),
        isometry,
        throughput_four,
        throughput_six,
        feasible_four,
        feasible_six,
        deficit: None,
        x: None,
        point: None,
        filter_error: None,
    };
    if feasible_four {
        let result = filter_no_count(&pk).and_then(|fa| {
            let mut point = tradeoff_point(&pk, &ProtocolFamily::bb84_four())?;
            if fa.supports_y_basis(FEASIBILITY_TOL / fa.eta()) {
                point.qber_y = Some(qber(&fa, BasisName::Y)?);
            }
            Ok((fa.deficit(), point))
        });
        match result {
            Ok((d, point)) => {
                report.deficit = Some([d.re, d.im]);
                report.x = Some(d.im);
                report.point = Some(point);
            }
            Err(e) => report.filter_error = Some(e.to_string()),
        }
    }

    let mut summary = format!(
        "isometry residual {:.3e}, 4-state throughput residual {:.3e}, 6-state throughput residual {:.3e}\n",
        report.isometry.max(),
        report.throughput_four.max(),
        report.throughput_six.max()
    );
    match &report.point {
        Some(p) => {
            let _ = writeln!(
                summary,
                "feasible: X = {:.6}, qber_z = {:.6}, qber_x = {:.6}, i_holevo = {:.6}, p_guess = {:.6}",
                p.x, p.qber_z, p.qber_x, p.i_holevo, p.p_guess
            );
        }
        None => summary.push_str("infeasible for the 4-state protocol\n"),
    }
    let verdict = if report.point.is_some() {
        Verdict::Ok
    } else {
        Verdict::Negative
    };
    Ok(Outcome {
        command: "verify",
        config: config_of(args),
        seed: None,
        stdout: json_line(&report),
        summary,
        files: Vec::new(),
        inputs: vec![(args.attack_file.clone(), bytes)],
        verdict,
    })
}

fn rounds_csv(report: &SimReport) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "round",
        "state",
        "alice_basis",
        "alice_bit",
        "bob_basis",
        "outcome",
        "sifted",
        "error",
        "eve_tag",
    ])?;
    for r in report.rounds.as_deref().unwrap_or_default() {
        w.write_record([
            r.round.to_string().as_str(),
            r.state.as_str(),
            r.alice_basis.map_or("", |b| b.as_str()),
            r.alice_bit.to_string().as_str(),
            r.bob_basis.as_str(),
            r.outcome.as_str(),
            if r.sifted { "1" } else { "0" },
            if r.error { "1" } else { "0" },
            r.eve_tag.as_deref().unwrap_or(""),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn simulate(args: &SimulateArgs) -> anyhow::Result<Outcome> {
    let family = args.family.family();
    let mut inputs = Vec::new();
    let mut notes = String::new();
    let (attack, eta) = match args.attack.as_str() {
        "none" => {
            let eta = args
                .eta
                .context("--eta is required without an attack file")?;
            (AttackModel::None, eta)
        }
        "usd" => {
            let eta = args.eta.context("--eta is required for the usd attack")?;
            let pair = family
                .b92_pair()
                .context("the usd attack needs --family b92")?;
            let usd = usd_intercept_resend(*pair, eta)?;
            let _ = writeln!(
                notes,
                "usd: overlap {:.6}, threshold eta* = {:.6}, shortfall {:.6}",
                usd.overlap, usd.threshold, usd.shortfall
            );
            (AttackModel::Prs(usd.attack), eta)
        }
        path => {
            let path = PathBuf::from(path);
            let bytes = read_input(&path)?;
            let pk = read_attack(&path)?;
            let eta = args.eta.unwrap_or(pk.eta());
            ensure!(
                (pk.eta() - eta).abs() <= 1e-12,
                "--eta {eta} differs from the attack file's eta {}",
                pk.eta()
            );
            inputs.push((path, bytes));
            (AttackModel::Iia(pk), eta)
        }
    };
    let cfg = SimConfig {
        attack,
        p_det: args.p_det,
        line_replacement: args.line_replacement,
        record_rounds: args.csv.is_some(),
        ..SimConfig::new(family, args.rounds, eta, args.seed)
    };
    let report = run_protocol(&cfg)?;
    let uniformity = uniformity_check(&report);

    let mut summary = notes;
    let _ = writeln!(
        summary,
        "{} rounds: detected {:.6}, sifted {}, qber {:.6}{}",
        report.n_rounds,
        report.detected_fraction,
        report.sifted_count,
        report.qber_hat,
        report
            .eve_accuracy
            .map_or(String::new(), |a| format!(", eve accuracy {a:.6}"))
    );
    let _ = writeln!(
        summary,
        "throughput {} across signal states (max |z| = {:.2})",
        if uniformity.uniform {
            "uniform"
        } else {
            "NOT uniform"
        },
        uniformity
            .z_scores
            .iter()
            .map(|(_, z)| z.abs())
            .fold(0.0, f64::max)
    );

    let mut files = Vec::new();
    if let Some(path) = &args.csv {
        files.push((path.clone(), rounds_csv(&report)?));
    }
    Ok(Outcome {
        command: "simulate",
        config: config_of(args),
        seed: Some(args.seed),
        stdout: json_line(&report),
        summary,
        files,
        inputs,
        verdict: Verdict::Ok,
    })
}

#[derive(Debug, Serialize)]
struct SweepEntry {
    qber_cap: f64,
    feasible: bool,
    evaluations: u64,
    objective: Option<f64>,
    point: Option<TradeoffPoint>,
    max_residual: Option<f64>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct SweepReport<'a> {
    family: FamilyArg,
    eta: f64,
    d_e: u8,
    x_mode: crate::args::XModeArg,
    rows: &'a [SweepEntry],
}

fn row_evaluations(row: &SweepRow) -> u64 {
    match &row.result {
        Ok(r) => r.evaluations,
        Err(qkdloss_core::Error::SearchFailed { evaluations, .. }) => *evaluations,
        Err(_) => 0,
    }
}

fn sweep_csv(rows: &[SweepRow]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "qber_cap",
        "i_holevo",
        "p_guess",
        "x_best",
        "feasible",
        "evaluations",
    ])?;
    for row in rows {
        let evals = row_evaluations(row).to_string();
        let cap = num(row.qber_cap);
        match &row.result {
            Ok(r) => w.write_record([
                cap.as_str(),
                &num(r.point.i_holevo),
                &num(r.point.p_guess),
                &num(r.point.x),
                "true",
                &evals,
            ])?,
            Err(_) => w.write_record([cap.as_str(), "", "", "", "false", &evals])?,
        }
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn tradeoff(args: &TradeoffArgs) -> anyhow::Result<Outcome> {
    let family = args.family.family();
    ensure!(
        family.kind() != FamilyKind::B92,
        "the tradeoff search covers bb84-4 and bb84-6 only"
    );
    let spec = SearchSpec {
        objective: args.objective.into(),
        budget: args.budget,
        restarts: args.restarts,
        ..SearchSpec::new(
            family,
            args.eta,
            args.d_e as usize,
            0.0,
            args.x_mode.into(),
            args.seed,
        )
    };
    let rows = sweep_tradeoff(&spec, &args.grid)?;
    let entries: Vec<SweepEntry> = rows
        .iter()
        .map(|row| match &row.result {
            Ok(r) => SweepEntry {
                qber_cap: row.qber_cap,
                feasible: true,
                evaluations: r.evaluations,
                objective: Some(r.objective),
                point: Some(r.point),
                max_residual: Some(r.max_residual()),
                error: None,
            },
            Err(e) => SweepEntry {
                qber_cap: row.qber_cap,
                feasible: false,
                evaluations: row_evaluations(row),
                objective: None,
                point: None,
                max_residual: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut summary = String::new();
    for e in &entries {
        match &e.point {
            Some(p) => {
                let _ = writeln!(
                    summary,
                    "cap {:<8} i_holevo {:.6}  p_guess {:.6}  x {:+.6}",
                    e.qber_cap, p.i_holevo, p.p_guess, p.x
                );
            }
            None => {
                let _ = writeln!(summary, "cap {:<8} no feasible point", e.qber_cap);
            }
        }
    }
    let all_feasible = entries.iter().all(|e| e.feasible);
    let report = SweepReport {
        family: args.family,
        eta: args.eta,
        d_e: args.d_e,
        x_mode: args.x_mode,
        rows: &entries,
    };
    Ok(Outcome {
        command: "tradeoff",
        config: config_of(args),
        seed: Some(args.seed),
        stdout: json_line(&report),
        summary,
        files: vec![(args.out.clone(), sweep_csv(&rows)?)],
        inputs: Vec::new(),
        verdict: if all_feasible {
            Verdict::Ok
        } else {
            Verdict::Negative
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UsdRow {
    pub eta: f64,
    pub full_break: bool,
    /// Share of Bob's expected counts that Eve can fill with known bits.
    pub eve_fraction_known: f64,
    pub shortfall: f64,
    /// Marks the row at `eta = 1 − c`.
    pub threshold: bool,
}

#[derive(Debug, Serialize)]
struct UsdReport<'a> {
    overlap: f64,
    threshold: f64,
    rows: &'a [UsdRow],
}

/// `|0⟩` and a real state at overlap `c` with it.
fn pair_with_overlap(c: f64) -> anyhow::Result<[SignalState; 2]> {
    ensure!(c > 0.0 && c < 1.0, "--overlap must lie in (0, 1), got {c}");
    let s = (1.0 - c * c).sqrt();
    Ok([
        SignalState::new(StateLabel::B92a, C64::new(1.0, 0.0), C64::new(0.0, 0.0))?,
        SignalState::new(StateLabel::B92b, C64::new(c, 0.0), C64::new(s, 0.0))?,
    ])
}

pub fn usd_rows(pair: [SignalState; 2], grid: &[f64]) -> anyhow::Result<(f64, f64, Vec<UsdRow>)> {
    let probe = usd_intercept_resend(pair, 1.0)?;
    let threshold = probe.threshold;
    let mut etas: Vec<f64> = grid.to_vec();
    for &eta in &etas {
        ensure!(
            (0.0..=1.0).contains(&eta),
            "eta grid values must lie in [0, 1], got {eta}"
        );
    }
    etas.push(threshold);
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    let rows = etas
        .into_iter()
        .map(|eta| {
            let usd = usd_intercept_resend(pair, eta)?;
            Ok(UsdRow {
                eta,
                full_break: usd.full_break(),
                eve_fraction_known: if eta > 0.0 {
                    usd.delivered_fraction / eta
                } else {
                    1.0
                },
                shortfall: usd.shortfall,
                threshold: eta == threshold,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok((probe.overlap, threshold, rows))
}

pub fn usd(args: &UsdArgs) -> anyhow::Result<Outcome> {
    let pair = match args.overlap {
        Some(c) => pair_with_overlap(c)?,
        None => *ProtocolFamily::b92_default()
            .b92_pair()
            .expect("b92 family carries a pair"),
    };
    let (overlap, threshold, rows) = usd_rows(pair, &args.eta_grid)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["eta", "full_break", "eve_fraction_known", "threshold"])?;
    for r in &rows {
        w.write_record([
            num(r.eta),
            r.full_break.to_string(),
            num(r.eve_fraction_known),
            r.threshold.to_string(),
        ])?;
    }
    let csv_bytes = w.into_inner().map_err(|e| e.into_error())?;

    let summary = format!(
        "overlap c = {overlap:.6}: USD breaks the line without errors for eta <= {threshold:.6}\n"
    );
    let files = args
        .out
        .iter()
        .map(|p| (p.clone(), csv_bytes.clone()))
        .collect();
    Ok(Outcome {
        command: "usd",
        config: config_of(args),
        seed: None,
        stdout: json_line(&UsdReport {
            overlap,
            threshold,
            rows: &rows,
        }),
        summary,
        files,
        inputs: Vec::new(),
        verdict: Verdict::Ok,
    })
}
