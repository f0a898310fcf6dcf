use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::check_probability;
use crate::qmath::{CMatrix, DensityOp, Tolerances};
use crate::rng::Stream;
use crate::states::SignalState;
use crate::{Error, Result};

const POVM_TOL: f64 = 1e-10;

/// Eve's classical record for one measurement outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeTag {
    pub label: String,
    /// Key bit Eve infers from this outcome, if any.
    pub guess: Option<u8>,
}

impl OutcomeTag {
    pub fn new(label: impl Into<String>, guess: Option<u8>) -> Self {
        Self {
            label: label.into(),
            guess,
        }
    }
}

/// What Eve does after an outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Forward `state` with probability `keep`, otherwise block.
    Resend { state: DensityOp, keep: f64 },
    /// Send the no-count state.
    Block,
}

impl Action {
    pub fn resend(state: DensityOp) -> Self {
        Self::Resend { state, keep: 1.0 }
    }
}

/// One measurement element with its tag and policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub element: CMatrix,
    pub tag: OutcomeTag,
    pub action: Action,
}

/// Probabilistic re-send attack: measure each signal, then resend a chosen
/// state or block, per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PrsAttack {
    branches: Vec<Branch>,
}

impl PrsAttack {
    /// Validates that the elements are positive semidefinite qubit operators
    /// summing to the identity.
    pub fn new(branches: Vec<Branch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidPovm(1.0));
        }
        let mut total = CMatrix::zeros(2);
        for br in &branches {
            if br.element.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: br.element.dim(),
                });
            }
            let dev = br.element.hermitian_deviation();
            if dev > POVM_TOL {
                return Err(Error::NotHermitian(dev));
            }
            let min = br.element.eigh().values[0];
            if min < -POVM_TOL {
                return Err(Error::NotPositive(min));
            }
            if let Action::Resend { state, keep } = &br.action {
                check_probability("keep", *keep)?;
                if state.dim() != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        found: state.dim(),
                    });
                }
            }
            total.add_assign_scaled(1.0, &br.element);
        }
        let dev = total.max_abs_diff(&CMatrix::identity(2));
        if dev > POVM_TOL {
            return Err(Error::InvalidPovm(dev));
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// `⟨ψ|M_k|ψ⟩` for every element.
    pub fn outcome_probabilities(&self, psi: &SignalState) -> Vec<f64> {
        let ket = psi.ket();
        self.branches
            .iter()
            .map(|b| b.element.expectation(&ket).re.max(0.0))
            .collect()
    }
}

/// What reaches Bob's side of Eve after the attack on one signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delivery<'a> {
    State(&'a DensityOp),
    NoCount,
}

/// Runs the attack on one signal. Returns the delivery and the index of the
/// outcome Eve recorded.
pub fn apply_prs<'a>(
    attack: &'a PrsAttack,
    psi: &SignalState,
    rng: &mut Stream,
) -> (Delivery<'a>, usize) {
    let probs = attack.outcome_probabilities(psi);
    let k = rng.categorical(&probs);
    let delivery = match &attack.branches[k].action {
        Action::Block => Delivery::NoCount,
        Action::Resend { state, keep } => {
            if *keep >= 1.0 || rng.bernoulli(*keep) {
                Delivery::State(state)
            } else {
                Delivery::NoCount
            }
        }
    };
    (delivery, k)
}

/// USD intercept-resend attack on a two-state protocol together with its
/// loss threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct UsdAttack {
    pub attack: PrsAttack,
    /// `|⟨ψ0|ψ1⟩|`, also the inconclusive probability at equal priors.
    pub overlap: f64,
    /// Transmittance `1 − c` at or below which the attack delivers exactly
    /// `eta` with zero induced error.
    pub threshold: f64,
    pub eta: f64,
    /// Fraction of signals Eve can forward without error, `min(eta, 1 − c)`.
    pub delivered_fraction: f64,
    /// `max(0, eta − (1 − c))`, the throughput the attack cannot supply.
    pub shortfall: f64,
}

impl UsdAttack {
    pub fn full_break(&self) -> bool {
        self.shortfall <= 0.0
    }
}

/// Optimal equal-prior USD measurement on `pair`, resending the identified
/// state on conclusive outcomes and blocking on inconclusive ones. When the
/// conclusive rate `1 − c` exceeds `eta`, conclusive resends are thinned at
/// random so the delivered fraction equals `eta`.
pub fn usd_intercept_resend(pair: [SignalState; 2], eta: f64) -> Result<UsdAttack> {
    check_probability("eta", eta)?;
    let [s0, s1] = pair;
    let c = s0.overlap(&s1).min(1.0);
    if c > 1.0 - 1e-12 {
        return Err(Error::IdenticalStates);
    }
    let conclusive = 1.0 - c;
    let keep = if conclusive > eta {
        eta / conclusive
    } else {
        1.0
    };
    let weight = 1.0 / (1.0 + c);

    // Outcome "0" can only fire on ψ0 because it projects onto ψ1⊥.
    let m0 = CMatrix::projector(&s1.orthogonal_ket()).scaled(weight);
    let m1 = CMatrix::projector(&s0.orthogonal_ket()).scaled(weight);
    let mut inconclusive = CMatrix::identity(2);
    inconclusive.add_assign_scaled(-1.0, &m0);
    inconclusive.add_assign_scaled(-1.0, &m1);

    let resend = |s: &SignalState| {
        DensityOp::with_tolerances(CMatrix::projector(&s.ket()), Tolerances::uniform(1e-12))
    };
    let attack = PrsAttack::new(alloc::vec![
        Branch {
            element: m0,
            tag: OutcomeTag::new(format!("usd-{}", s0.label()), Some(0)),
            action: Action::Resend {
                state: resend(&s0)?,
                keep,
            },
        },
        Branch {
            element: m1,
            tag: OutcomeTag::new(format!("usd-{}", s1.label()), Some(1)),
            action: Action::Resend {
                state: resend(&s1)?,
                keep,
            },
        },
        Branch {
            element: inconclusive,
            tag: OutcomeTag::new("usd-inconclusive", None),
            action: Action::Block,
        },
    ])?;
    Ok(UsdAttack {
        attack,
        overlap: c,
        threshold: conclusive,
        eta,
        delivered_fraction: eta.min(conclusive),
        shortfall: (eta - conclusive).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{ProtocolFamily, StateLabel};
    use core::f64::consts::FRAC_1_SQRT_2;

    fn default_pair() -> [SignalState; 2] {
        *ProtocolFamily::b92_default().b92_pair().unwrap()
    }

    #[test]
    fn usd_threshold_for_default_pair() {
        let usd = usd_intercept_resend(default_pair(), 0.25).unwrap();
        assert!((usd.overlap - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((usd.threshold - (1.0 - FRAC_1_SQRT_2)).abs() < 1e-15);
        assert!((usd.threshold - 0.292_893).abs() < 1e-6);
        assert!(usd.full_break());
        assert_eq!(usd.shortfall, 0.0);

        let usd = usd_intercept_resend(default_pair(), 0.6).unwrap();
        assert!(!usd.full_break());
        assert!((usd.shortfall - (0.6 - (1.0 - FRAC_1_SQRT_2))).abs() < 1e-15);
    }

    #[test]
    fn usd_outcome_probabilities_on_z0() {
        let usd = usd_intercept_resend(default_pair(), 0.25).unwrap();
        let z0 = SignalState::standard(StateLabel::Z0).unwrap();
        let p = usd.attack.outcome_probabilities(&z0);
        assert!((p[0] - (1.0 - FRAC_1_SQRT_2)).abs() < 1e-12);
        assert!(p[1].abs() < 1e-12);
        assert!((p[2] - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn usd_is_zero_error() {
        let pair = default_pair();
        let usd = usd_intercept_resend(pair, 1.0).unwrap();
        for (sent, psi) in pair.iter().enumerate() {
            let p = usd.attack.outcome_probabilities(psi);
            // The wrong conclusive outcome never fires...
            assert!(p[1 - sent].abs() < 1e-15);
            // ...and the right one resends exactly the transmitted state.
            match &usd.attack.branches()[sent].action {
                Action::Resend { state, .. } => {
                    assert!(state.matrix().max_abs_diff(psi.density().matrix()) < 1e-15)
                }
                Action::Block => panic!("conclusive outcome must resend"),
            }
        }
    }

    #[test]
    fn orthogonal_pair_is_degenerate_full_break() {
        let pair = [
            SignalState::standard(StateLabel::Z0).unwrap(),
            SignalState::standard(StateLabel::Z1).unwrap(),
        ];
        let usd = usd_intercept_resend(pair, 0.9).unwrap();
        assert_eq!(usd.overlap, 0.0);
        assert_eq!(usd.threshold, 1.0);
        assert!(usd.full_break());
    }

    #[test]
    fn identical_pair_is_rejected() {
        let z0 = SignalState::standard(StateLabel::Z0).unwrap();
        assert_eq!(
            usd_intercept_resend([z0, z0], 0.5),
            Err(Error::IdenticalStates)
        );
    }

    #[test]
    fn apply_prs_trivial_policies() {
        let psi = SignalState::standard(StateLabel::Xp).unwrap();
        let identity = PrsAttack::new(alloc::vec![Branch {
            element: CMatrix::identity(2),
            tag: OutcomeTag::new("all", None),
            action: Action::resend(psi.density()),
        }])
        .unwrap();
        let blocker = PrsAttack::new(alloc::vec![Branch {
            element: CMatrix::identity(2),
            tag: OutcomeTag::new("all", None),
            action: Action::Block,
        }])
        .unwrap();
        let mut rng = Stream::new(3, 0);
        for _ in 0..100 {
            match apply_prs(&identity, &psi, &mut rng).0 {
                Delivery::State(s) => assert_eq!(s, &psi.density()),
                Delivery::NoCount => panic!("identity never blocks"),
            }
            assert_eq!(apply_prs(&blocker, &psi, &mut rng).0, Delivery::NoCount);
        }
    }

    #[test]
    fn invalid_povm_is_rejected() {
        let half = CMatrix::identity(2).scaled(0.5);
        let err = PrsAttack::new(alloc::vec![Branch {
            element: half,
            tag: OutcomeTag::new("half", None),
            action: Action::Block,
        }])
        .unwrap_err();
        assert!(matches!(err, Error::InvalidPovm(_)));
    }
}
