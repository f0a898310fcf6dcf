//! Trajectory-level protocol simulation.
//!
//! Each round draws from its own stream `(seed, round index)`, so a report
//! is a pure function of the configuration.

use alloc::string::String;
use alloc::vec::Vec;

use crate::attack::{apply_prs, Delivery, ProbeKets, PrsAttack};
use crate::channel::{detector_thin, sample_transmission, Transmission};
use crate::error::check_probability;
use crate::qmath::{ComplexVec, DensityOp};
use crate::rng::Stream;
use crate::states::{
    Basis, BasisName, BobOutcome, FamilyKind, ProtocolFamily, SignalState, StateLabel,
};
use crate::{Error, Result};

/// What sits between Alice and Bob.
#[derive(Debug, Clone, PartialEq)]
pub enum AttackModel {
    /// The bare lossy line.
    None,
    /// Identical individual attack; the probe kets already contain the loss.
    Iia(ProbeKets),
    /// Probabilistic re-send attack in front of (or replacing) the line.
    Prs(PrsAttack),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub family: ProtocolFamily,
    pub n_rounds: u64,
    pub eta: f64,
    pub attack: AttackModel,
    pub p_det: f64,
    /// Eve replaces the line with a lossless one, so PRS deliveries skip the
    /// residual loss.
    pub line_replacement: bool,
    pub seed: u64,
    /// Keep a per-round log in the report.
    pub record_rounds: bool,
}

impl SimConfig {
    /// No attack, perfect detectors, line replacement on, no round log.
    pub fn new(family: ProtocolFamily, n_rounds: u64, eta: f64, seed: u64) -> Self {
        Self {
            family,
            n_rounds,
            eta,
            attack: AttackModel::None,
            p_det: 1.0,
            line_replacement: true,
            seed,
            record_rounds: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::InvalidParameter(
                "n_rounds must be at least 1".into(),
            ));
        }
        check_probability("eta", self.eta)?;
        check_probability("p_det", self.p_det)?;
        if let AttackModel::Iia(pk) = &self.attack {
            if (pk.eta() - self.eta).abs() > 1e-12 {
                return Err(Error::InvalidParameter(alloc::format!(
                    "attack throughput {} differs from configured eta {}",
                    pk.eta(),
                    self.eta
                )));
            }
        }
        Ok(())
    }
}

/// Throughput statistics for one signal state.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateStats {
    pub state: StateLabel,
    pub sent: u64,
    pub detected: u64,
    pub eta_hat: f64,
    /// Binomial standard error of `eta_hat`.
    pub eta_se: f64,
}

/// Sifted-key statistics for one basis.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BasisStats {
    pub basis: BasisName,
    pub sifted: u64,
    pub errors: u64,
    pub qber_hat: f64,
}

/// One simulated round, for the optional CSV log.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRecord {
    pub round: u64,
    pub state: StateLabel,
    pub alice_basis: Option<BasisName>,
    pub alice_bit: u8,
    pub bob_basis: BasisName,
    pub outcome: BobOutcome,
    pub sifted: bool,
    pub error: bool,
    pub eve_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimReport {
    pub family: FamilyKind,
    pub n_rounds: u64,
    pub states: Vec<StateStats>,
    /// Detected rounds over all rounds.
    pub detected_fraction: f64,
    pub sifted_count: u64,
    pub error_count: u64,
    /// Errors over sifted rounds, all bases pooled.
    pub qber_hat: f64,
    pub bases: Vec<BasisStats>,
    /// Fraction of sifted rounds where Eve's recorded guess equals Alice's
    /// bit. Only defined for PRS attacks with at least one sifted round.
    pub eve_accuracy: Option<f64>,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub rounds: Option<Vec<RoundRecord>>,
}

impl SimReport {
    pub fn state(&self, label: StateLabel) -> Option<&StateStats> {
        self.states.iter().find(|s| s.state == label)
    }

    pub fn basis(&self, name: BasisName) -> Option<&BasisStats> {
        self.bases.iter().find(|b| b.basis == name)
    }
}

/// `√(p(1−p)/n)`.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    libm::sqrt(p * (1.0 - p) / n as f64)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn measure_pure(psi: &SignalState, basis: &Basis, rng: &mut Stream) -> BobOutcome {
    let ket = psi.ket();
    let p0 = basis.kets[0].inner_unchecked(&ket).norm_sqr();
    BobOutcome::from_bit(if rng.bernoulli(p0) { 0 } else { 1 })
}

fn measure_mixed(rho: &DensityOp, basis: &Basis, rng: &mut Stream) -> BobOutcome {
    let p0 = rho.probability(&basis.kets[0]);
    BobOutcome::from_bit(if rng.bernoulli(p0) { 0 } else { 1 })
}

fn measure_iia(pk: &ProbeKets, psi: &SignalState, basis: &Basis, rng: &mut Stream) -> BobOutcome {
    let [v0, v1, v_nc] = pk.image(psi.amplitudes());
    let project = |beta: &ComplexVec| v0.combine(beta[0].conj(), &v1, beta[1].conj()).norm_sqr();
    let weights = [
        project(&basis.kets[0]),
        project(&basis.kets[1]),
        v_nc.norm_sqr(),
    ];
    match rng.categorical(&weights) {
        0 => BobOutcome::Bit0,
        1 => BobOutcome::Bit1,
        _ => BobOutcome::NoCount,
    }
}

struct RoundResult {
    state_index: usize,
    bob_basis: usize,
    outcome: BobOutcome,
    eve_outcome: Option<usize>,
}

fn simulate_round(
    cfg: &SimConfig,
    signals: &[SignalState],
    bases: &[Basis],
    round: u64,
) -> RoundResult {
    let mut rng = Stream::new(cfg.seed, round);
    let state_index = rng.index(signals.len());
    let bob_basis = rng.index(bases.len());
    let psi = &signals[state_index];
    let basis = &bases[bob_basis];

    let mut eve_outcome = None;
    let outcome = match &cfg.attack {
        AttackModel::None => match sample_transmission(*psi, cfg.eta, &mut rng) {
            Transmission::Delivered(s) => measure_pure(&s, basis, &mut rng),
            Transmission::Lost => BobOutcome::NoCount,
        },
        AttackModel::Iia(pk) => measure_iia(pk, psi, basis, &mut rng),
        AttackModel::Prs(attack) => {
            let (delivery, k) = apply_prs(attack, psi, &mut rng);
            eve_outcome = Some(k);
            match delivery {
                Delivery::NoCount => BobOutcome::NoCount,
                Delivery::State(sigma) => {
                    if cfg.line_replacement || rng.bernoulli(cfg.eta) {
                        measure_mixed(sigma, basis, &mut rng)
                    } else {
                        BobOutcome::NoCount
                    }
                }
            }
        }
    };
    let outcome = detector_thin(outcome, cfg.p_det, &mut rng);
    RoundResult {
        state_index,
        bob_basis,
        outcome,
        eve_outcome,
    }
}

/// Bob's sifted key bit, if the round survives sifting.
fn sift(
    family: &ProtocolFamily,
    state_index: usize,
    bob_basis: usize,
    outcome: BobOutcome,
) -> Option<u8> {
    let bit = outcome.bit()?;
    match family.kind() {
        FamilyKind::B92 => {
            // Outcome 1 is the state orthogonal to signal `bob_basis`, which
            // rules that signal out.
            (bit == 1).then_some((1 - bob_basis) as u8)
        }
        _ => (family.encoding(state_index).0 == Some(bob_basis)).then_some(bit),
    }
}

pub fn run_protocol(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let signals = cfg.family.signal_states();
    let bases = cfg.family.bases();

    let mut sent = alloc::vec![0u64; signals.len()];
    let mut detected = alloc::vec![0u64; signals.len()];
    let mut sifted = alloc::vec![0u64; bases.len()];
    let mut errors = alloc::vec![0u64; bases.len()];
    let mut eve_hits = 0u64;
    let mut rounds = cfg.record_rounds.then(Vec::new);

    for r in 0..cfg.n_rounds {
        let res = simulate_round(cfg, &signals, &bases, r);
        sent[res.state_index] += 1;
        if res.outcome != BobOutcome::NoCount {
            detected[res.state_index] += 1;
        }
        let (alice_basis, alice_bit) = cfg.family.encoding(res.state_index);
        let bob_bit = sift(&cfg.family, res.state_index, res.bob_basis, res.outcome);
        let error = bob_bit.is_some_and(|b| b != alice_bit);
        if bob_bit.is_some() {
            sifted[res.bob_basis] += 1;
            errors[res.bob_basis] += u64::from(error);
        }
        let eve_tag = match (&cfg.attack, res.eve_outcome) {
            (AttackModel::Prs(attack), Some(k)) => Some(&attack.branches()[k].tag),
            _ => None,
        };
        if bob_bit.is_some() && eve_tag.is_some_and(|t| t.guess == Some(alice_bit)) {
            eve_hits += 1;
        }
        if let Some(log) = rounds.as_mut() {
            log.push(RoundRecord {
                round: r,
                state: signals[res.state_index].label(),
                alice_basis: alice_basis.map(|b| bases[b].name),
                alice_bit,
                bob_basis: bases[res.bob_basis].name,
                outcome: res.outcome,
                sifted: bob_bit.is_some(),
                error,
                eve_tag: eve_tag.map(|t| t.label.clone()),
            });
        }
    }

    let states = signals
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let eta_hat = ratio(detected[k], sent[k]);
            StateStats {
                state: s.label(),
                sent: sent[k],
                detected: detected[k],
                eta_hat,
                eta_se: if sent[k] == 0 {
                    0.0
                } else {
                    binomial_sigma(eta_hat, sent[k])
                },
            }
        })
        .collect();
    let basis_stats = bases
        .iter()
        .enumerate()
        .map(|(k, b)| BasisStats {
            basis: b.name,
            sifted: sifted[k],
            errors: errors[k],
            qber_hat: ratio(errors[k], sifted[k]),
        })
        .collect();
    let sifted_count: u64 = sifted.iter().sum();
    let error_count: u64 = errors.iter().sum();
    let eve_accuracy = match cfg.attack {
        AttackModel::Prs(_) if sifted_count > 0 => Some(ratio(eve_hits, sifted_count)),
        _ => None,
    };
    Ok(SimReport {
        family: cfg.family.kind(),
        n_rounds: cfg.n_rounds,
        states,
        detected_fraction: ratio(detected.iter().sum(), cfg.n_rounds),
        sifted_count,
        error_count,
        qber_hat: ratio(error_count, sifted_count),
        bases: basis_stats,
        eve_accuracy,
        rounds,
    })
}

/// Per-state z-scores of detection rates against the pooled rate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UniformityReport {
    pub pooled: f64,
    /// `(state, z)` for every state with at least one transmission.
    pub z_scores: Vec<(StateLabel, f64)>,
    /// States never sent, left out of the verdict.
    pub excluded: Vec<StateLabel>,
    /// All `|z| ≤ 3`.
    pub uniform: bool,
}

/// Tests whether every signal state saw the same throughput.
pub fn uniformity_check(report: &SimReport) -> UniformityReport {
    let (sent, detected) = report
        .states
        .iter()
        .fold((0u64, 0u64), |(s, d), st| (s + st.sent, d + st.detected));
    let pooled = ratio(detected, sent);
    let mut z_scores = Vec::new();
    let mut excluded = Vec::new();
    for st in &report.states {
        if st.sent == 0 {
            excluded.push(st.state);
            continue;
        }
        let sigma = binomial_sigma(pooled, st.sent);
        let diff = st.eta_hat - pooled;
        let z = if sigma > 0.0 {
            diff / sigma
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        z_scores.push((st.state, z));
    }
    let uniform = z_scores.iter().all(|&(_, z)| z.abs() <= 3.0);
    UniformityReport {
        pooled,
        z_scores,
        excluded,
        uniform,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{passive_loss_attack, usd_intercept_resend};

    #[test]
    fn rejects_invalid_configs() {
        let mut cfg = SimConfig::new(ProtocolFamily::bb84_four(), 0, 0.5, 1);
        assert!(run_protocol(&cfg).is_err());
        cfg.n_rounds = 10;
        cfg.p_det = 1.5;
        assert!(run_protocol(&cfg).is_err());
        cfg.p_det = 1.0;
        cfg.attack = AttackModel::Iia(passive_loss_attack(0.4, 3).unwrap());
        assert!(run_protocol(&cfg).is_err());
    }

    #[test]
    fn lossless_line_has_no_errors_and_full_detection() {
        let cfg = SimConfig::new(ProtocolFamily::bb84_six(), 5_000, 1.0, 2);
        let rep = run_protocol(&cfg).unwrap();
        assert_eq!(rep.detected_fraction, 1.0);
        assert_eq!(rep.error_count, 0);
        assert!(rep.eve_accuracy.is_none());
        // About a third of rounds sift with three bases.
        let frac = rep.sifted_count as f64 / 5_000.0;
        assert!((frac - 1.0 / 3.0).abs() < 0.03);
    }

    #[test]
    fn round_log_matches_counts() {
        let mut cfg = SimConfig::new(ProtocolFamily::b92_default(), 2_000, 0.7, 9);
        cfg.record_rounds = true;
        let rep = run_protocol(&cfg).unwrap();
        let log = rep.rounds.as_ref().unwrap();
        assert_eq!(log.len(), 2_000);
        assert_eq!(
            log.iter().filter(|r| r.sifted).count() as u64,
            rep.sifted_count
        );
        assert!(log.iter().all(|r| r.alice_basis.is_none()));
        assert_eq!(rep.error_count, 0);
    }

    #[test]
    fn b92_sifting_rate_without_eve() {
        // Conclusive probability per detected round is (1 - c²)/2 = 1/4.
        let cfg = SimConfig::new(ProtocolFamily::b92_default(), 40_000, 1.0, 4);
        let rep = run_protocol(&cfg).unwrap();
        let frac = rep.sifted_count as f64 / 40_000.0;
        assert!((frac - 0.25).abs() <= 3.0 * binomial_sigma(0.25, 40_000));
    }

    #[test]
    fn usd_without_line_replacement_pays_the_line_loss() {
        let pair = *ProtocolFamily::b92_default().b92_pair().unwrap();
        let usd = usd_intercept_resend(pair, 0.25).unwrap();
        let mut cfg = SimConfig::new(ProtocolFamily::b92_default(), 20_000, 0.25, 5);
        cfg.attack = AttackModel::Prs(usd.attack);
        cfg.line_replacement = false;
        let rep = run_protocol(&cfg).unwrap();
        let p = 0.25 * 0.25;
        assert!((rep.detected_fraction - p).abs() <= 3.0 * binomial_sigma(p, 20_000));
        assert_eq!(rep.error_count, 0);
    }

    #[test]
    fn uniformity_flags_unsent_states() {
        let rep = SimReport {
            family: FamilyKind::Bb84Four,
            n_rounds: 10,
            states: alloc::vec![
                StateStats {
                    state: StateLabel::Z0,
                    sent: 10,
                    detected: 5,
                    eta_hat: 0.5,
                    eta_se: 0.0
                },
                StateStats {
                    state: StateLabel::Z1,
                    sent: 0,
                    detected: 0,
                    eta_hat: 0.0,
                    eta_se: 0.0
                },
            ],
            detected_fraction: 0.5,
            sifted_count: 0,
            error_count: 0,
            qber_hat: 0.0,
            bases: Vec::new(),
            eve_accuracy: None,
            rounds: None,
        };
        let u = uniformity_check(&rep);
        assert_eq!(u.excluded, alloc::vec![StateLabel::Z1]);
        assert!(u.uniform);
    }
}
