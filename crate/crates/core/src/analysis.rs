//! Post-selected security figures of an identical individual attack:
//! per-basis QBER, Eve's conditional probe states, and tradeoff points.
//!
//! Key bits are taken equiprobable. Eve's information is reported two ways,
//! as the Holevo quantity of her post-selected probe states and as her
//! Helstrom guessing probability, since the attack model does not fix her
//! measurement. Only detected rounds are credited; blocked rounds never
//! enter the key.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use crate::attack::{
    check_equal_throughput, check_isometry, filter_no_count_with, FilteredAttack, ProbeKets,
    FEASIBILITY_TOL,
};
use crate::qmath::{helstrom_prob, holevo_bound, CMatrix, DensityOp, Tolerances, C64, ONE, ZERO};
use crate::states::{BasisName, FamilyKind, ProtocolFamily};
use crate::{Error, Result};

/// One point of the information/disturbance plane.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TradeoffPoint {
    pub qber_z: f64,
    pub qber_x: f64,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub qber_y: Option<f64>,
    /// Weighted mean QBER over the sifted bases.
    pub d_avg: f64,
    /// Weighted mean Holevo quantity of Eve's states, bits.
    pub i_holevo: f64,
    /// Weighted mean Helstrom guessing probability.
    pub p_guess: f64,
    /// Imaginary part of the post-selected no-count overlap.
    pub x: f64,
}

/// Knobs for [`tradeoff_point_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Per-basis weights in family order (Z, X, Y); normalized internally.
    /// `None` weights bases equally.
    pub basis_weights: Option<Vec<f64>>,
    /// Feasibility tolerance applied to the input attack.
    pub tolerance: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            basis_weights: None,
            tolerance: FEASIBILITY_TOL,
        }
    }
}

/// Alice's two inputs `(bit 0, bit 1)` for a basis, as qubit amplitudes.
fn basis_inputs(basis: BasisName) -> Result<[[C64; 2]; 2]> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let ih = C64::new(0.0, FRAC_1_SQRT_2);
    Ok(match basis {
        BasisName::Z => [[ONE, ZERO], [ZERO, ONE]],
        BasisName::X => [[h, h], [h, -h]],
        BasisName::Y => [[h, ih], [h, -ih]],
        other => return Err(Error::UnsupportedBasis(other.as_str())),
    })
}

fn check_basis(fa: &FilteredAttack, basis: BasisName, tol: f64) -> Result<[[C64; 2]; 2]> {
    if basis == BasisName::Y && !fa.supports_y_basis(tol / fa.eta()) {
        return Err(Error::UnsupportedBasis("Y"));
    }
    basis_inputs(basis)
}

/// Probability that Bob's post-selected result in `basis` disagrees with
/// Alice's bit, averaged over the two bits.
pub fn qber(fa: &FilteredAttack, basis: BasisName) -> Result<f64> {
    qber_with(fa, basis, FEASIBILITY_TOL)
}

fn qber_with(fa: &FilteredAttack, basis: BasisName, tol: f64) -> Result<f64> {
    let inputs = check_basis(fa, basis, tol)?;
    let mut total = 0.0;
    for (bit, input) in inputs.iter().enumerate() {
        let [k0, k1] = fa.image(*input);
        // Bob's wrong outcome is the basis partner of the sent state.
        let partner = inputs[1 - bit];
        let wrong = k0.combine(partner[0].conj(), &k1, partner[1].conj());
        total += wrong.norm_sqr();
    }
    Ok(0.5 * total)
}

/// Eve's probe state conditioned on Alice's bit in `basis` and on Bob
/// registering a count: `ρ_E^b = Σ_i |φ̂_i^(b)⟩⟨φ̂_i^(b)|`.
pub fn eve_states(fa: &FilteredAttack, basis: BasisName) -> Result<[DensityOp; 2]> {
    eve_states_with(fa, basis, FEASIBILITY_TOL)
}

fn eve_states_with(fa: &FilteredAttack, basis: BasisName, tol: f64) -> Result<[DensityOp; 2]> {
    let inputs = check_basis(fa, basis, tol)?;
    let tolerances = Tolerances::uniform(tol / fa.eta());
    let build = |input: [C64; 2]| {
        let [k0, k1] = fa.image(input);
        let mut m = CMatrix::projector(&k0);
        m.add_assign_scaled(1.0, &CMatrix::projector(&k1));
        DensityOp::with_tolerances(m, tolerances)
    };
    Ok([build(inputs[0])?, build(inputs[1])?])
}

fn sifted_bases(family: &ProtocolFamily) -> Result<&'static [BasisName]> {
    match family.kind() {
        FamilyKind::Bb84Four => Ok(&[BasisName::Z, BasisName::X]),
        FamilyKind::Bb84Six => Ok(&[BasisName::Z, BasisName::X, BasisName::Y]),
        FamilyKind::B92 => Err(Error::UnsupportedFamily("b92")),
    }
}

pub fn tradeoff_point(pk: &ProbeKets, family: &ProtocolFamily) -> Result<TradeoffPoint> {
    tradeoff_point_with(pk, family, &AnalysisOptions::default())
}

pub fn tradeoff_point_with(
    pk: &ProbeKets,
    family: &ProtocolFamily,
    opts: &AnalysisOptions,
) -> Result<TradeoffPoint> {
    let bases = sifted_bases(family)?;
    let tol = opts.tolerance;
    let iso = check_isometry(pk);
    let thr = check_equal_throughput(pk, family);
    if !iso.is_isometric(tol) || !thr.is_feasible(tol) {
        return Err(Error::Infeasible(format!(
            "isometry residuals {:?}/{:e}; throughput residuals {:?}, re {:e}, im {:?}",
            iso.norm, iso.inner, thr.norm_nc, thr.re_overlap, thr.im_overlap
        )));
    }
    let fa = filter_no_count_with(pk, tol)?;
    let weights = normalized_weights(opts.basis_weights.as_deref(), bases.len())?;

    let mut qbers = [0.0; 3];
    let (mut d_avg, mut i_holevo, mut p_guess) = (0.0, 0.0, 0.0);
    for (k, (&basis, &w)) in bases.iter().zip(&weights).enumerate() {
        let q = qber_with(&fa, basis, tol)?;
        let [r0, r1] = eve_states_with(&fa, basis, tol)?;
        qbers[k] = q;
        d_avg += w * q;
        i_holevo += w * holevo_bound(&r0, &r1, 0.5)?;
        p_guess += w * helstrom_prob(&r0, &r1, 0.5)?;
    }
    Ok(TradeoffPoint {
        qber_z: qbers[0],
        qber_x: qbers[1],
        qber_y: (bases.len() == 3).then_some(qbers[2]),
        d_avg,
        i_holevo: i_holevo.clamp(0.0, 1.0),
        p_guess: p_guess.clamp(0.5, 1.0),
        x: fa.x(),
    })
}

fn normalized_weights(weights: Option<&[f64]>, n: usize) -> Result<Vec<f64>> {
    let Some(w) = weights else {
        return Ok(alloc::vec![1.0 / n as f64; n]);
    };
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: w.len(),
        });
    }
    let total: f64 = w.iter().sum();
    if w.iter().any(|&x| !(x >= 0.0)) || !(total > 0.0) {
        return Err(Error::InvalidParameter(
            "basis weights must be non-negative with a positive sum".into(),
        ));
    }
    Ok(w.iter().map(|x| x / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{filter_no_count, imaginary_deficit_attack, passive_loss_attack};
    use crate::qmath::ComplexVec;

    fn witness() -> FilteredAttack {
        filter_no_count(&imaginary_deficit_attack(0.5, 0.3, 4).unwrap()).unwrap()
    }

    #[test]
    fn passive_attack_has_no_disturbance() {
        let fa = filter_no_count(&passive_loss_attack(0.5, 3).unwrap()).unwrap();
        assert_eq!(qber(&fa, BasisName::Z).unwrap(), 0.0);
        assert!(qber(&fa, BasisName::X).unwrap() < 1e-15);
        let [r0, r1] = eve_states(&fa, BasisName::Z).unwrap();
        let e1 = CMatrix::projector(&ComplexVec::basis(3, 0));
        assert!(r0.matrix().max_abs_diff(&e1) < 1e-15);
        assert!(r1.matrix().max_abs_diff(&e1) < 1e-15);
    }

    #[test]
    fn witness_qber_and_states() {
        let fa = witness();
        assert!((qber(&fa, BasisName::Z).unwrap() - 0.045).abs() < 1e-12);
        // numpy oracle: X-basis error 0.5 for this construction.
        assert!((qber(&fa, BasisName::X).unwrap() - 0.5).abs() < 1e-12);
        let [r0, r1] = eve_states(&fa, BasisName::Z).unwrap();
        let e1 = CMatrix::projector(&ComplexVec::basis(4, 0));
        let e2 = CMatrix::projector(&ComplexVec::basis(4, 1));
        assert!(r0.matrix().max_abs_diff(&e1) < 1e-12);
        assert!(r1.matrix().max_abs_diff(&e1.combine(0.09, &e2, 0.91)) < 1e-12);
    }

    #[test]
    fn y_basis_needs_vanishing_deficit() {
        assert_eq!(
            qber(&witness(), BasisName::Y),
            Err(Error::UnsupportedBasis("Y"))
        );
        let fa = filter_no_count(&passive_loss_attack(0.5, 3).unwrap()).unwrap();
        assert!(qber(&fa, BasisName::Y).unwrap() < 1e-15);
    }

    #[test]
    fn qber_definition_instance() {
        // ‖φ̂_1^0‖² = ‖φ̂_0^1‖² = 0.1 with unit post-selected norms.
        let e = |k| ComplexVec::basis(4, k);
        let a = libm::sqrt(0.9);
        let b = libm::sqrt(0.1);
        let pk = ProbeKets::lossless([
            [e(0).scaled_real(a), e(2).scaled_real(b)],
            [e(3).scaled_real(b), e(1).scaled_real(a)],
        ])
        .unwrap();
        let fa = filter_no_count(&pk).unwrap();
        assert!((qber(&fa, BasisName::Z).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn tradeoff_examples() {
        let p = tradeoff_point(
            &passive_loss_attack(0.5, 3).unwrap(),
            &ProtocolFamily::bb84_four(),
        )
        .unwrap();
        assert_eq!(p.qber_z, 0.0);
        assert!(p.qber_x < 1e-15 && p.d_avg < 1e-15 && p.i_holevo < 1e-12);
        assert!((p.p_guess - 0.5).abs() < 1e-12);
        assert_eq!(p.x, 0.0);
        assert!(p.qber_y.is_none());

        let p = tradeoff_point(
            &imaginary_deficit_attack(0.5, 0.3, 4).unwrap(),
            &ProtocolFamily::bb84_four(),
        )
        .unwrap();
        // Frozen from an independent numpy evaluation of the same kets.
        assert!((p.x - 0.3).abs() < 1e-12);
        assert!((p.qber_z - 0.045).abs() < 1e-12);
        assert!((p.qber_x - 0.5).abs() < 1e-12);
        assert!((p.d_avg - 0.2725).abs() < 1e-12);
        assert!((p.i_holevo - 0.387_957_131_474_420_85).abs() < 1e-10);
        assert!((p.p_guess - 0.7275).abs() < 1e-12);
    }

    #[test]
    fn tradeoff_rejects_infeasible_and_b92() {
        let pk = imaginary_deficit_attack(0.5, 0.3, 4).unwrap();
        assert!(matches!(
            tradeoff_point(&pk, &ProtocolFamily::bb84_six()),
            Err(Error::Infeasible(_))
        ));
        assert_eq!(
            tradeoff_point(&pk, &ProtocolFamily::b92_default()),
            Err(Error::UnsupportedFamily("b92"))
        );
    }

    #[test]
    fn basis_weights_are_normalized() {
        let pk = imaginary_deficit_attack(0.5, 0.3, 4).unwrap();
        let opts = AnalysisOptions {
            basis_weights: Some(alloc::vec![3.0, 1.0]),
            ..Default::default()
        };
        let p = tradeoff_point_with(&pk, &ProtocolFamily::bb84_four(), &opts).unwrap();
        assert!((p.d_avg - (0.75 * 0.045 + 0.25 * 0.5)).abs() < 1e-12);
        let bad = AnalysisOptions {
            basis_weights: Some(alloc::vec![1.0]),
            ..Default::default()
        };
        assert!(tradeoff_point_with(&pk, &ProtocolFamily::bb84_four(), &bad).is_err());
    }
}
