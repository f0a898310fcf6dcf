//! Derivative-free search over feasible identical individual attacks.
//!
//! Candidates are raw probe-ket coordinates (`12·d_e` reals). Every candidate
//! is first projected onto the feasible set by [`repair`]: the no-count kets
//! are rescaled to norm² `1 − η` with a purely imaginary overlap `i s`, and
//! the in-plane kets are rescaled to norm² `η` with overlap `−i s (1 − η)`,
//! which together give isometry and equal throughput exactly. The QBER cap
//! is the only constraint left to the penalty, `w · max(0, d_avg − cap)²`.
//! Trial points that overshoot the cap are bisected back onto it, and only
//! points within the cap are ever returned.
//!
//! The refinement is a randomized pattern search: poll `x ± h·d` along a
//! fresh random unit direction `d`, expand `h` on success, shrink it when
//! both polls fail, stop at `h < 1e-9` or when the budget runs out.
//! Only local optimality is claimed.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::analysis::{tradeoff_point_with, AnalysisOptions, TradeoffPoint};
use crate::attack::{
    check_equal_throughput, check_isometry, IsometryResiduals, ProbeKets, ThroughputResiduals,
    FEASIBILITY_TOL, NO_COUNT,
};
use crate::error::check_probability;
use crate::qmath::{ComplexVec, C64, I};
use crate::rng::Stream;
use crate::states::{FamilyKind, ProtocolFamily};
use crate::{Error, Result};

/// Whether the post-selected deficit `X` may be nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum XMode {
    Zero,
    Free,
}

/// Quantity maximized for Eve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Objective {
    Holevo,
    Helstrom,
}

impl Objective {
    fn of(self, p: &TradeoffPoint) -> f64 {
        match self {
            Self::Holevo => p.i_holevo,
            Self::Helstrom => p.p_guess,
        }
    }
}

pub const DEFAULT_RESTARTS: usize = 16;
pub const DEFAULT_PENALTY: f64 = 1e4;
pub const DEFAULT_BUDGET: u64 = 20_000;
/// Step length below which a refinement is considered converged.
pub const MIN_STEP: f64 = 1e-9;
/// Slack on `d_avg ≤ qber_cap` for a point to count as feasible.
const CAP_SLACK: f64 = 1e-12;

const EXPAND: f64 = 2.0;
// 2^p · SHRINK^(1−p) = 1 at a success rate p of about one in five.
const SHRINK: f64 = 0.84;
const INITIAL_STEP: f64 = 0.1;
const MAX_STEP: f64 = 1.0;
const PULL_BACK_STEPS: usize = 8;
// Restarts share 1/EXPLORE_SHARE of the budget; the rest polishes the best.
const EXPLORE_SHARE: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpec {
    pub family: ProtocolFamily,
    pub eta: f64,
    pub d_e: usize,
    /// Upper bound on the mean sifted QBER.
    pub qber_cap: f64,
    pub x_mode: XMode,
    pub objective: Objective,
    pub seed: u64,
    /// Objective evaluations per attack class. A free-mode search runs the
    /// `X = 0` class first and then the free class, each with this budget.
    pub budget: u64,
    pub penalty_weight: f64,
    pub restarts: usize,
    /// Warm start for the searched class (the first restart begins here).
    pub warm_start: Option<ProbeKets>,
    /// Warm start for the `X = 0` phase of a free-mode search.
    pub zero_warm_start: Option<ProbeKets>,
}

impl SearchSpec {
    pub fn new(
        family: ProtocolFamily,
        eta: f64,
        d_e: usize,
        qber_cap: f64,
        x_mode: XMode,
        seed: u64,
    ) -> Self {
        Self {
            family,
            eta,
            d_e,
            qber_cap,
            x_mode,
            objective: Objective::Holevo,
            seed,
            budget: DEFAULT_BUDGET,
            penalty_weight: DEFAULT_PENALTY,
            restarts: DEFAULT_RESTARTS,
            warm_start: None,
            zero_warm_start: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family.kind() == FamilyKind::B92 {
            return Err(Error::UnsupportedFamily("b92"));
        }
        check_probability("eta", self.eta)?;
        if self.eta <= 0.0 {
            return Err(Error::ZeroThroughput);
        }
        if !(2..=8).contains(&self.d_e) {
            return Err(Error::InvalidParameter(format!(
                "probe dimension must be in 2..=8, got {}",
                self.d_e
            )));
        }
        if !(0.0..=0.5).contains(&self.qber_cap) {
            return Err(Error::InvalidParameter(format!(
                "qber_cap must be in [0, 0.5], got {}",
                self.qber_cap
            )));
        }
        if self.budget == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "budget and restarts must be positive".into(),
            ));
        }
        if !(self.penalty_weight > 0.0) {
            return Err(Error::InvalidParameter(
                "penalty_weight must be positive".into(),
            ));
        }
        for pk in self.warm_start.iter().chain(&self.zero_warm_start) {
            if pk.d_e() != self.d_e || (pk.eta() - self.eta).abs() > 1e-12 {
                return Err(Error::InvalidParameter(
                    "warm start must match the spec's eta and d_e".into(),
                ));
            }
        }
        Ok(())
    }

    fn forces_zero_deficit(&self) -> bool {
        self.x_mode == XMode::Zero || self.family.kind() == FamilyKind::Bb84Six
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: ProbeKets,
    pub point: TradeoffPoint,
    /// Value of the spec's objective at `best`.
    pub objective: f64,
    pub isometry: IsometryResiduals,
    pub throughput: ThroughputResiduals,
    pub evaluations: u64,
    /// Best point of the `X = 0` phase of a free-mode search.
    pub zero_class_best: Option<Box<ProbeKets>>,
}

impl SearchResult {
    pub fn max_residual(&self) -> f64 {
        self.isometry.max().max(self.throughput.max())
    }
}

/// Projects raw kets onto the isometric, equal-throughput attacks with the
/// same `η`. With `zero_deficit` the no-count overlap is forced to zero.
///
/// The map is idempotent on feasible inputs.
pub fn repair(raw: &ProbeKets, zero_deficit: bool) -> ProbeKets {
    let eta = raw.eta();
    let d = raw.d_e();
    let loss = 1.0 - eta;

    // No-count kets: ⟨u0|u1⟩ = i s.
    let u0 = unit_or_fallback(raw.ket(NO_COUNT, 0), None);
    let n1 = raw.ket(NO_COUNT, 1);
    let s_max = if loss > 0.0 {
        (eta / loss).min(1.0)
    } else {
        1.0
    };
    let s = if zero_deficit || n1.norm() < 1e-300 {
        0.0
    } else {
        (u0.inner_unchecked(n1).im / n1.norm()).clamp(-s_max, s_max)
    };
    let u1_perp = unit_or_fallback(n1, Some(&u0));
    let u1 = u0.combine(I * s, &u1_perp, C64::new(complement(s), 0.0));
    let nc = [
        u0.scaled_real(libm::sqrt(loss)),
        u1.scaled_real(libm::sqrt(loss)),
    ];

    // In-plane kets stacked as (φ_0^b, φ_1^b): ⟨ŵ0|ŵ1⟩ = −i s (1 − η)/η.
    let t = if eta > 0.0 {
        (s * loss / eta).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let w0 = stack(raw.ket(0, 0), raw.ket(1, 0));
    let w1 = stack(raw.ket(0, 1), raw.ket(1, 1));
    let w0_hat = unit_or_fallback(&w0, None);
    let w1_perp = unit_or_fallback(&w1, Some(&w0_hat));
    let w1_hat = w0_hat.combine(-I * t, &w1_perp, C64::new(complement(t), 0.0));
    let root = libm::sqrt(eta);
    let (p00, p10) = unstack(&w0_hat.scaled_real(root), d);
    let (p01, p11) = unstack(&w1_hat.scaled_real(root), d);

    let [nc0, nc1] = nc;
    ProbeKets::new(eta, [[p00, p01], [p10, p11], [nc0, nc1]]).expect("repair preserves dimensions")
}

/// `√(1 − x²)` for `|x| ≤ 1`, snapped to zero where rounding dominates.
fn complement(x: f64) -> f64 {
    let a = x.abs().min(1.0);
    let r = (1.0 - a) * (1.0 + a);
    if r < 1e-12 {
        0.0
    } else {
        libm::sqrt(r)
    }
}

fn stack(a: &ComplexVec, b: &ComplexVec) -> ComplexVec {
    let mut v = a.entries().to_vec();
    v.extend_from_slice(b.entries());
    ComplexVec::new(v)
}

fn unstack(v: &ComplexVec, d: usize) -> (ComplexVec, ComplexVec) {
    let e = v.entries();
    (
        ComplexVec::new(e[..d].to_vec()),
        ComplexVec::new(e[d..].to_vec()),
    )
}

/// Unit vector along `v` with the component along the unit vector `against`
/// removed; falls back to the basis vector with the largest remainder when
/// `v` is (numerically) degenerate.
fn unit_or_fallback(v: &ComplexVec, against: Option<&ComplexVec>) -> ComplexVec {
    let remove = |x: &ComplexVec| match against {
        Some(u) => {
            let mut y = x.clone();
            y.add_scaled(-u.inner_unchecked(x), u);
            y
        }
        None => x.clone(),
    };
    let r = remove(v);
    let n = r.norm();
    if n > 1e-9 * v.norm().max(1.0) && n > 1e-150 {
        return r.scaled_real(1.0 / n);
    }
    let (best, _) = (0..v.dim())
        .map(|k| {
            let e = remove(&ComplexVec::basis(v.dim(), k));
            let n = e.norm();
            (e, n)
        })
        .fold((ComplexVec::zeros(v.dim()), -1.0), |acc, cur| {
            if cur.1 > acc.1 {
                cur
            } else {
                acc
            }
        });
    let n = best.norm();
    best.scaled_real(1.0 / n)
}

/// Feasible starting attack: the passive line for `d_e ≥ 3`, else the same
/// in-plane kets with the no-count kets on `e1`, `e2`.
pub fn canonical_start(eta: f64, d_e: usize) -> Result<ProbeKets> {
    if d_e >= 3 {
        return crate::attack::passive_loss_attack(eta, d_e);
    }
    let e = |k| ComplexVec::basis(d_e, k);
    let t = libm::sqrt(eta);
    let l = libm::sqrt(1.0 - eta);
    ProbeKets::new(
        eta,
        [
            [e(0).scaled_real(t), ComplexVec::zeros(d_e)],
            [ComplexVec::zeros(d_e), e(0).scaled_real(t)],
            [e(0).scaled_real(l), e(1).scaled_real(l)],
        ],
    )
}

fn to_params(pk: &ProbeKets) -> Vec<f64> {
    let mut out = Vec::with_capacity(12 * pk.d_e());
    for row in pk.kets() {
        for ket in row {
            for z in ket.entries() {
                out.push(z.re);
                out.push(z.im);
            }
        }
    }
    out
}

fn from_params(x: &[f64], eta: f64, d_e: usize) -> ProbeKets {
    let ket = |k: usize| {
        let off = 2 * d_e * k;
        ComplexVec::new(
            (0..d_e)
                .map(|j| C64::new(x[off + 2 * j], x[off + 2 * j + 1]))
                .collect(),
        )
    };
    ProbeKets::new(eta, [[ket(0), ket(1)], [ket(2), ket(3)], [ket(4), ket(5)]])
        .expect("parameter layout matches d_e")
}

#[derive(Debug, Clone)]
struct Candidate {
    params: Vec<f64>,
    pk: ProbeKets,
    point: TradeoffPoint,
    objective: f64,
    violation: f64,
}

impl Candidate {
    fn feasible(&self) -> bool {
        self.violation <= CAP_SLACK
    }
}

/// Budgeted evaluator that remembers the best feasible and the least
/// violating candidates it has seen.
struct Evaluator<'a> {
    spec: &'a SearchSpec,
    zero_deficit: bool,
    opts: AnalysisOptions,
    used: u64,
    budget: u64,
    best_feasible: Option<Candidate>,
    least_violating: Option<Candidate>,
}

impl<'a> Evaluator<'a> {
    fn new(spec: &'a SearchSpec, zero_deficit: bool) -> Self {
        Self {
            spec,
            zero_deficit,
            opts: AnalysisOptions::default(),
            used: 0,
            budget: spec.budget,
            best_feasible: None,
            least_violating: None,
        }
    }

    fn remaining(&self) -> u64 {
        self.budget - self.used
    }

    fn evaluate(&mut self, raw: &[f64]) -> Option<Candidate> {
        if self.used >= self.budget {
            return None;
        }
        self.used += 1;
        let pk = repair(
            &from_params(raw, self.spec.eta, self.spec.d_e),
            self.zero_deficit,
        );
        // Repair output is feasible by construction; a failure here would be
        // a numerical breakdown and the candidate is simply dropped.
        let point = tradeoff_point_with(&pk, &self.spec.family, &self.opts).ok()?;
        let cand = Candidate {
            params: to_params(&pk),
            objective: self.spec.objective.of(&point),
            violation: (point.d_avg - self.spec.qber_cap).max(0.0),
            pk,
            point,
        };
        if cand.feasible()
            && self
                .best_feasible
                .as_ref()
                .is_none_or(|b| cand.objective > b.objective)
        {
            self.best_feasible = Some(cand.clone());
        }
        if self
            .least_violating
            .as_ref()
            .is_none_or(|b| cand.violation < b.violation)
        {
            self.least_violating = Some(cand.clone());
        }
        Some(cand)
    }
}

fn merit(c: &Candidate, weight: f64) -> f64 {
    c.objective - weight * c.violation * c.violation
}

/// Randomized pattern search from `start`. Returns the final incumbent and
/// its step length.
fn refine(
    ev: &mut Evaluator<'_>,
    start: Candidate,
    mut step: f64,
    max_evals: u64,
    weight: f64,
    rng: &mut Stream,
) -> (Candidate, f64) {
    let stop_at = ev.used + max_evals.min(ev.remaining());
    let n = start.params.len();
    let mut current = start;
    let mut dir = alloc::vec![0.0; n];
    while ev.used < stop_at && step >= MIN_STEP {
        for x in dir.iter_mut() {
            *x = rng.normal();
        }
        let norm = libm::sqrt(dir.iter().map(|x| x * x).sum::<f64>());
        if norm == 0.0 {
            continue;
        }
        let mut improved = false;
        for sign in [1.0, -1.0] {
            if ev.used >= stop_at {
                break;
            }
            let trial: Vec<f64> = current
                .params
                .iter()
                .zip(&dir)
                .map(|(x, d)| x + sign * step * d / norm)
                .collect();
            let Some(c) = ev.evaluate(&trial) else {
                break;
            };
            if merit(&c, weight) > merit(&current, weight) {
                current = c;
                improved = true;
                break;
            }
            if current.feasible() && !c.feasible() && c.objective > current.objective {
                if let Some(b) = pull_back(ev, &current, &trial, stop_at) {
                    current = b;
                    improved = true;
                    break;
                }
            }
        }
        step = if improved {
            (step * EXPAND).min(MAX_STEP)
        } else {
            step * SHRINK
        };
    }
    (current, step)
}

/// Bisects the segment from a feasible `from` towards an infeasible `to`
/// for the last feasible point, returned if it beats `from`.
fn pull_back(
    ev: &mut Evaluator<'_>,
    from: &Candidate,
    to: &[f64],
    stop_at: u64,
) -> Option<Candidate> {
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best: Option<Candidate> = None;
    for _ in 0..PULL_BACK_STEPS {
        if ev.used >= stop_at {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let x: Vec<f64> = from
            .params
            .iter()
            .zip(to)
            .map(|(a, b)| a + mid * (b - a))
            .collect();
        let c = ev.evaluate(&x)?;
        if c.feasible() {
            lo = mid;
            best = Some(c);
        } else {
            hi = mid;
        }
    }
    best.filter(|b| b.objective > from.objective)
}

fn perturbed_start(base: &[f64], scale: f64, rng: &mut Stream) -> Vec<f64> {
    base.iter().map(|x| x + scale * rng.normal()).collect()
}

/// Stream index for `(phase, restart)`.
fn stream_id(phase: u64, restart: usize) -> u64 {
    (phase << 32) | restart as u64
}

/// Searches one attack class with the spec's full budget.
fn search_class(
    spec: &SearchSpec,
    zero_deficit: bool,
    warm: &[&ProbeKets],
    phase: u64,
) -> Result<(Candidate, u64)> {
    let mut ev = Evaluator::new(spec, zero_deficit);
    let base = canonical_start(spec.eta, spec.d_e)?;
    let base_params = to_params(&base);

    let restarts = (spec.restarts as u64).min(spec.budget) as usize;
    let per_restart = (spec.budget / (EXPLORE_SHARE * restarts as u64)).max(1);
    let mut weight = spec.penalty_weight;
    let mut incumbent: Option<(Candidate, f64)> = None;

    for r in 0..restarts {
        let mut rng = Stream::new(spec.seed, stream_id(phase, r));
        let params = if let Some(pk) = warm.get(r) {
            to_params(pk)
        } else if r == warm.len() {
            base_params.clone()
        } else {
            // Perturbation scales spread from 1e-2 to 1 across restarts.
            let k = (r - warm.len()) as f64;
            let span = (restarts.saturating_sub(warm.len() + 1)).max(1) as f64;
            let scale = libm::pow(
                10.0,
                -2.0 + 2.0 * (k - 1.0).max(0.0) / (span - 1.0).max(1.0),
            );
            perturbed_start(&base_params, scale, &mut rng)
        };
        let Some(start) = ev.evaluate(&params) else {
            break;
        };
        let (end, step) = refine(
            &mut ev,
            start,
            INITIAL_STEP,
            per_restart - 1,
            weight,
            &mut rng,
        );
        if incumbent
            .as_ref()
            .is_none_or(|(c, _)| merit(&end, weight) > merit(c, weight))
        {
            incumbent = Some((end, step));
        }
    }

    // Polish the best restart with whatever budget is left. If nothing
    // feasible has been seen, restart from the least violating point with a
    // doubled penalty instead.
    let mut rng = Stream::new(spec.seed, stream_id(phase, usize::MAX >> 32));
    while ev.remaining() > 0 {
        let (start, step) = match (&ev.best_feasible, &incumbent) {
            (None, _) => {
                weight *= 2.0;
                let c = ev.least_violating.clone().expect("at least one evaluation");
                (c, INITIAL_STEP)
            }
            (Some(_), Some((c, s))) => (c.clone(), s.max(1e-4)),
            (Some(b), None) => (b.clone(), INITIAL_STEP),
        };
        let before = ev.used;
        let left = ev.remaining();
        let (end, step) = refine(&mut ev, start, step, left, weight, &mut rng);
        incumbent = Some((end, step));
        if ev.used == before || (ev.best_feasible.is_some() && step < MIN_STEP) {
            break;
        }
    }

    match ev.best_feasible {
        Some(best) => Ok((best, ev.used)),
        None => {
            let least = ev.least_violating.expect("at least one evaluation");
            Err(Error::SearchFailed {
                qber_cap: spec.qber_cap,
                smallest_excess: least.violation,
                evaluations: ev.used,
                residual: check_isometry(&least.pk)
                    .max()
                    .max(check_equal_throughput(&least.pk, &spec.family).max()),
            })
        }
    }
}

fn finish(
    spec: &SearchSpec,
    best: Candidate,
    evaluations: u64,
    zero: Option<ProbeKets>,
) -> SearchResult {
    let isometry = check_isometry(&best.pk);
    let throughput = check_equal_throughput(&best.pk, &spec.family);
    debug_assert!(isometry.max() <= FEASIBILITY_TOL && throughput.max() <= FEASIBILITY_TOL);
    SearchResult {
        objective: best.objective,
        point: best.point,
        best: best.pk,
        isometry,
        throughput,
        evaluations,
        zero_class_best: zero.map(Box::new),
    }
}

/// Maximizes Eve's objective subject to feasibility and the QBER cap.
///
/// In free mode the `X = 0` class is searched first and its optimum seeds the
/// free-class search, so the free result never falls below the zero result.
pub fn optimize_attack(spec: &SearchSpec) -> Result<SearchResult> {
    spec.validate()?;
    if spec.forces_zero_deficit() {
        let warm: Vec<&ProbeKets> = spec.warm_start.iter().collect();
        let (best, used) = search_class(spec, true, &warm, 0)?;
        let zero = (spec.x_mode == XMode::Free).then(|| best.pk.clone());
        return Ok(finish(spec, best, used, zero));
    }
    let zero_warm: Vec<&ProbeKets> = spec.zero_warm_start.iter().collect();
    let (zero_best, zero_used) = search_class(spec, true, &zero_warm, 0)?;
    let mut warm = alloc::vec![&zero_best.pk];
    warm.extend(spec.warm_start.iter());
    let (best, used) = search_class(spec, false, &warm, 1)?;
    Ok(finish(
        spec,
        best,
        zero_used + used,
        Some(zero_best.pk.clone()),
    ))
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub qber_cap: f64,
    pub result: Result<SearchResult>,
}

/// Runs [`optimize_attack`] over an ascending grid of caps, warm-starting
/// each point from the previous point's optimum. Per-point failures are
/// recorded and the sweep continues.
pub fn sweep_tradeoff(spec: &SearchSpec, grid: &[f64]) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty qber grid".into()));
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter(
            "qber grid must be ascending".into(),
        ));
    }
    let mut rows = Vec::with_capacity(grid.len());
    let mut warm = spec.warm_start.clone();
    let mut zero_warm = spec.zero_warm_start.clone();
    for &cap in grid {
        let point_spec = SearchSpec {
            qber_cap: cap,
            warm_start: warm.clone(),
            zero_warm_start: zero_warm.clone(),
            ..spec.clone()
        };
        let result = optimize_attack(&point_spec);
        if let Ok(r) = &result {
            warm = Some(r.best.clone());
            zero_warm = r.zero_class_best.as_deref().cloned();
        }
        rows.push(SweepRow {
            qber_cap: cap,
            result,
        });
    }
    Ok(rows)
}
