//! Signal states, protocol families and Bob's measurement bases.
//!
//! Bob's space is the signal qubit plus a no-count level, indexed
//! `(Bit0, Bit1, NoCount)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;
use core::fmt;

use crate::qmath::{inner_product, ComplexVec, DensityOp, C64, ONE, ZERO};
use crate::{Error, Result};

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StateLabel {
    Z0,
    Z1,
    Xp,
    Xm,
    YL,
    YR,
    B92a,
    B92b,
}

impl StateLabel {
    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Z0 => "Z0",
            Self::Z1 => "Z1",
            Self::Xp => "Xp",
            Self::Xm => "Xm",
            Self::YL => "YL",
            Self::YR => "YR",
            Self::B92a => "B92a",
            Self::B92b => "B92b",
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Normalized qubit state `a|0⟩ + b|1⟩` with a label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalState {
    label: StateLabel,
    amplitudes: [C64; 2],
}

impl SignalState {
    pub fn new(label: StateLabel, a: C64, b: C64) -> Result<Self> {
        let n = a.norm_sqr() + b.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::Unnormalized(n));
        }
        Ok(Self {
            label,
            amplitudes: [a, b],
        })
    }

    /// One of the six standard BB84 states. B92 labels have no fixed
    /// amplitudes and yield `None`.
    pub fn standard(label: StateLabel) -> Option<Self> {
        let h = FRAC_1_SQRT_2;
        let (a, b) = match label {
            StateLabel::Z0 => (ONE, ZERO),
            StateLabel::Z1 => (ZERO, ONE),
            StateLabel::Xp => (C64::new(h, 0.0), C64::new(h, 0.0)),
            StateLabel::Xm => (C64::new(h, 0.0), C64::new(-h, 0.0)),
            StateLabel::YL => (C64::new(h, 0.0), C64::new(0.0, h)),
            StateLabel::YR => (C64::new(h, 0.0), C64::new(0.0, -h)),
            StateLabel::B92a | StateLabel::B92b => return None,
        };
        Some(Self {
            label,
            amplitudes: [a, b],
        })
    }

    pub fn label(&self) -> StateLabel {
        self.label
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        self.amplitudes
    }

    pub fn ket(&self) -> ComplexVec {
        ComplexVec::new(vec![self.amplitudes[0], self.amplitudes[1]])
    }

    pub fn density(&self) -> DensityOp {
        DensityOp::pure(&self.ket()).expect("signal states are normalized")
    }

    pub fn bloch(&self) -> [f64; 3] {
        bloch_components(self.amplitudes)
    }

    /// `|⟨self|other⟩|`.
    pub fn overlap(&self, other: &Self) -> f64 {
        inner_product(&self.ket(), &other.ket())
            .expect("qubit kets share dimension")
            .norm()
    }

    /// The unit vector orthogonal to this state (unique up to phase).
    pub fn orthogonal_ket(&self) -> ComplexVec {
        let [a, b] = self.amplitudes;
        ComplexVec::new(vec![-b.conj(), a.conj()])
    }
}

fn bloch_components([a, b]: [C64; 2]) -> [f64; 3] {
    let ab = a.conj() * b;
    [2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr()]
}

/// Bloch vector `(x, y, z)` of a normalized qubit `a|0⟩ + b|1⟩`.
pub fn bloch_vector(amplitudes: [C64; 2]) -> Result<[f64; 3]> {
    let n = amplitudes[0].norm_sqr() + amplitudes[1].norm_sqr();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized(n));
    }
    Ok(bloch_components(amplitudes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FamilyKind {
    #[cfg_attr(feature = "serde", serde(rename = "bb84-4"))]
    Bb84Four,
    #[cfg_attr(feature = "serde", serde(rename = "bb84-6"))]
    Bb84Six,
    #[cfg_attr(feature = "serde", serde(rename = "b92"))]
    B92,
}

impl FamilyKind {
    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Bb84Four => "bb84-4",
            Self::Bb84Six => "bb84-6",
            Self::B92 => "b92",
        }
    }
}

/// Name of one of Bob's measurement bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BasisName {
    Z,
    X,
    Y,
    /// B92 basis containing the first signal state.
    B92a,
    /// B92 basis containing the second signal state.
    B92b,
}

impl BasisName {
    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Z => "Z",
            Self::X => "X",
            Self::Y => "Y",
            Self::B92a => "B92a",
            Self::B92b => "B92b",
        }
    }
}

/// Orthonormal qubit basis; `kets[k]` is the vector for outcome `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub name: BasisName,
    pub kets: [ComplexVec; 2],
}

impl Basis {
    fn from_states(name: BasisName, k0: ComplexVec, k1: ComplexVec) -> Self {
        Self {
            name,
            kets: [k0, k1],
        }
    }

    pub fn z() -> Self {
        Self::from_states(
            BasisName::Z,
            std_ket(StateLabel::Z0),
            std_ket(StateLabel::Z1),
        )
    }

    pub fn x() -> Self {
        Self::from_states(
            BasisName::X,
            std_ket(StateLabel::Xp),
            std_ket(StateLabel::Xm),
        )
    }

    pub fn y() -> Self {
        Self::from_states(
            BasisName::Y,
            std_ket(StateLabel::YL),
            std_ket(StateLabel::YR),
        )
    }
}

fn std_ket(label: StateLabel) -> ComplexVec {
    SignalState::standard(label).expect("standard label").ket()
}

/// Outcome of Bob's three-valued measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BobOutcome {
    Bit0,
    Bit1,
    NoCount,
}

impl BobOutcome {
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Self::Bit0
        } else {
            Self::Bit1
        }
    }

    pub fn bit(self) -> Option<u8> {
        match self {
            Self::Bit0 => Some(0),
            Self::Bit1 => Some(1),
            Self::NoCount => None,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Bit0 => "0",
            Self::Bit1 => "1",
            Self::NoCount => "nc",
        }
    }
}

/// A protocol's signal set and measurement bases.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolFamily {
    kind: FamilyKind,
    b92_pair: Option<[SignalState; 2]>,
}

impl ProtocolFamily {
    pub fn bb84_four() -> Self {
        Self {
            kind: FamilyKind::Bb84Four,
            b92_pair: None,
        }
    }

    pub fn bb84_six() -> Self {
        Self {
            kind: FamilyKind::Bb84Six,
            b92_pair: None,
        }
    }

    /// B92 with the signal pair `{|0⟩, |+⟩}`.
    pub fn b92_default() -> Self {
        let pair = [
            SignalState::standard(StateLabel::Z0).expect("standard"),
            SignalState::standard(StateLabel::Xp).expect("standard"),
        ];
        Self {
            kind: FamilyKind::B92,
            b92_pair: Some(pair),
        }
    }

    /// B92 with an arbitrary nonorthogonal, non-identical pair. The states
    /// are relabelled `B92a`/`B92b`.
    pub fn b92(first: [C64; 2], second: [C64; 2]) -> Result<Self> {
        let a = SignalState::new(StateLabel::B92a, first[0], first[1])?;
        let b = SignalState::new(StateLabel::B92b, second[0], second[1])?;
        let c = a.overlap(&b);
        if c < NORM_TOL {
            return Err(Error::InvalidParameter(
                "B92 states must be nonorthogonal".into(),
            ));
        }
        if c > 1.0 - NORM_TOL {
            return Err(Error::IdenticalStates);
        }
        Ok(Self {
            kind: FamilyKind::B92,
            b92_pair: Some([a, b]),
        })
    }

    pub fn from_kind(kind: FamilyKind) -> Self {
        match kind {
            FamilyKind::Bb84Four => Self::bb84_four(),
            FamilyKind::Bb84Six => Self::bb84_six(),
            FamilyKind::B92 => Self::b92_default(),
        }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn b92_pair(&self) -> Option<&[SignalState; 2]> {
        self.b92_pair.as_ref()
    }

    pub fn signal_states(&self) -> Vec<SignalState> {
        signal_states(self)
    }

    /// Bob's measurement bases, in the order he chooses among them.
    pub fn bases(&self) -> Vec<Basis> {
        match self.kind {
            FamilyKind::Bb84Four => vec![Basis::z(), Basis::x()],
            FamilyKind::Bb84Six => vec![Basis::z(), Basis::x(), Basis::y()],
            FamilyKind::B92 => {
                let [a, b] = self.b92_pair.expect("B92 family carries its pair");
                vec![
                    Basis::from_states(BasisName::B92a, a.ket(), a.orthogonal_ket()),
                    Basis::from_states(BasisName::B92b, b.ket(), b.orthogonal_ket()),
                ]
            }
        }
    }

    /// `(basis index, key bit)` Alice associates with signal `index`. For B92
    /// the key bit is the signal index and there is no preparation basis.
    pub fn encoding(&self, index: usize) -> (Option<usize>, u8) {
        match self.kind {
            FamilyKind::B92 => (None, index as u8),
            _ => (Some(index / 2), (index % 2) as u8),
        }
    }
}

/// The family's signal states in canonical order `Z0, Z1, Xp, Xm (, YL, YR)`,
/// or the B92 pair.
pub fn signal_states(family: &ProtocolFamily) -> Vec<SignalState> {
    use StateLabel::*;
    let labels: &[StateLabel] = match family.kind {
        FamilyKind::Bb84Four => &[Z0, Z1, Xp, Xm],
        FamilyKind::Bb84Six => &[Z0, Z1, Xp, Xm, YL, YR],
        FamilyKind::B92 => return family.b92_pair.expect("B92 pair").to_vec(),
    };
    labels
        .iter()
        .map(|&l| SignalState::standard(l).expect("standard label"))
        .collect()
}
