#![allow(dead_code)]

use qkdloss_core::attack::ProbeKets;
use qkdloss_core::qmath::{CMatrix, ComplexVec, DensityOp, C64};
use qkdloss_core::rng::Stream;
use qkdloss_core::search::repair;
use qkdloss_core::states::SignalState;

pub fn gaussian_vec(d: usize, rng: &mut Stream) -> ComplexVec {
    ComplexVec::new(
        (0..d)
            .map(|_| C64::new(rng.normal(), rng.normal()))
            .collect(),
    )
}

/// Haar-ish unitary from Gram-Schmidt on Gaussian columns.
pub fn random_unitary(d: usize, rng: &mut Stream) -> CMatrix {
    let mut cols: Vec<ComplexVec> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v = gaussian_vec(d, rng);
        for c in &cols {
            let p = c.inner(&v).unwrap();
            v.add_scaled(-p, c);
        }
        let n = v.norm();
        if n > 1e-6 {
            cols.push(v.scaled_real(1.0 / n));
        }
    }
    let mut data = vec![C64::new(0.0, 0.0); d * d];
    for (j, c) in cols.iter().enumerate() {
        for i in 0..d {
            data[i * d + j] = c[i];
        }
    }
    CMatrix::from_row_major(d, data).unwrap()
}

pub fn random_density(d: usize, rng: &mut Stream) -> DensityOp {
    let mut m = CMatrix::zeros(d);
    for _ in 0..d {
        let v = gaussian_vec(d, rng);
        m.add_assign_scaled(1.0, &CMatrix::projector(&v));
    }
    let tr = m.trace().re;
    DensityOp::new(m.scaled(1.0 / tr)).unwrap()
}

pub fn random_amplitudes(rng: &mut Stream) -> [C64; 2] {
    let v = gaussian_vec(2, rng);
    let v = v.scaled_real(1.0 / v.norm());
    [v[0], v[1]]
}

pub fn random_real_amplitudes(rng: &mut Stream) -> [C64; 2] {
    let t = core::f64::consts::TAU * rng.uniform();
    [C64::new(t.cos(), 0.0), C64::new(t.sin(), 0.0)]
}

pub fn random_raw(eta: f64, d_e: usize, rng: &mut Stream) -> ProbeKets {
    let mut k = || gaussian_vec(d_e, rng);
    ProbeKets::new(eta, [[k(), k()], [k(), k()], [k(), k()]]).unwrap()
}

/// Feasible 4-state attack with a generic (nonzero) deficit.
pub fn feasible_four(eta: f64, d_e: usize, rng: &mut Stream) -> ProbeKets {
    repair(&random_raw(eta, d_e, rng), false)
}

/// Feasible 6-state attack.
pub fn feasible_six(eta: f64, d_e: usize, rng: &mut Stream) -> ProbeKets {
    repair(&random_raw(eta, d_e, rng), true)
}

/// Swaps the bit labels on both sides: `φ_i^b → φ_{1−i}^{1−b}`.
pub fn relabel_bits(pk: &ProbeKets) -> ProbeKets {
    let k = |i: usize, b: usize| pk.ket(i, b).clone();
    ProbeKets::new(
        pk.eta(),
        [[k(1, 1), k(1, 0)], [k(0, 1), k(0, 0)], [k(2, 1), k(2, 0)]],
    )
    .unwrap()
}

/// Largest zero-error conclusive probability over POVMs
/// `{a|ψ1⊥⟩⟨ψ1⊥|, b|ψ0⊥⟩⟨ψ0⊥|, I − …}`: for each `a` the largest admissible
/// `b` is found by bisection on positivity, then `a` is scanned on a
/// zooming grid.
pub fn brute_force_usd(pair: [SignalState; 2]) -> f64 {
    let u = pair[1].orthogonal_ket();
    let v = pair[0].orthogonal_ket();
    let p_u = pair[0].ket().inner(&u).unwrap().norm_sqr();
    let p_v = pair[1].ket().inner(&v).unwrap().norm_sqr();
    let pu = CMatrix::projector(&u);
    let pv = CMatrix::projector(&v);
    let valid = |a: f64, b: f64| {
        let mut rest = CMatrix::identity(2);
        rest.add_assign_scaled(-a, &pu);
        rest.add_assign_scaled(-b, &pv);
        rest.eigh().values[0] >= 0.0
    };
    let success = |a: f64| {
        if !valid(a, 0.0) {
            return f64::NEG_INFINITY;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if valid(a, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (a * p_u + lo * p_v)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (f64::NEG_INFINITY, 0.0);
    let steps = 100;
    for _ in 0..10 {
        for i in 0..=steps {
            let a = lo + (hi - lo) * i as f64 / steps as f64;
            let p = success(a);
            if p > best.0 {
                best = (p, a);
            }
        }
        let w = 3.0 * (hi - lo) / steps as f64;
        lo = (best.1 - w).max(0.0);
        hi = (best.1 + w).min(1.0);
    }
    best.0
}
