//! Independent checks of the closed forms.
//!
//! * Monte-Carlo saddle-point checks for all four uncertainty models.
//! * A grid oracle over the power simplex (at most three modes).
//! * Maximum / maximal elements of finite PSD families and the reduction of a
//!   worst-case minimum to the maximal elements.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{
    complex_gaussian, random_psd, random_unitary, spectral_norm, svd, ComplexMatrix, HermitianPSD,
    SvdResult,
};
use crate::secrecy::{capacity_isotropic, secrecy_rate, CapacityReport};
use crate::uncertainty::{
    capacity_double_rank, capacity_double_sided, capacity_rank_constrained, equality_perturbation,
    EavesdropperUncertainty, LegitimateUncertainty,
};

/// Slack accepted on both sides of the saddle inequality.
pub const SADDLE_TOL: f64 = 1e-9;
/// Tolerance for the maximal-element reduction.
pub const REDUCTION_TOL: f64 = 1e-12;
/// Cauchy tolerance for the increasing-chain check.
pub const CHAIN_TOL: f64 = 1e-8;

const EQUALITY_PROBABILITY: f64 = 0.125;
const MAX_GRID_POINTS: f64 = 2e8;

/// Random PSD matrix with trace ≤ `p_total`.
///
/// Mixes full-trace, partial-trace and rank-deficient draws; with an anchor
/// (normally the optimal covariance) it also returns the anchor itself or a
/// convex mix of the anchor with a full-trace draw.
pub fn sample_covariance(
    n: usize,
    p_total: f64,
    anchor: Option<&HermitianPSD>,
    rng: &mut crate::Rng,
) -> HermitianPSD {
    if p_total <= 0.0 {
        return HermitianPSD::zeros(n);
    }
    let full = |rank: usize, trace: f64, rng: &mut crate::Rng| {
        let m = random_psd(n, rank, rng);
        let t = m.trace();
        if t > 0.0 {
            m.scale(trace / t)
        } else {
            HermitianPSD::zeros(n)
        }
    };
    match (rng.random_range(0..5), anchor) {
        (0, _) => full(n, p_total, rng),
        (1, _) => {
            let u: f64 = 1.0 - rng.random::<f64>();
            full(n, u * p_total, rng)
        }
        (2, _) => {
            let rank = if n > 1 { rng.random_range(1..n) } else { 1 };
            full(rank, p_total, rng)
        }
        (3, Some(a)) => a.clone(),
        (_, Some(a)) => {
            let t: f64 = rng.random();
            let scale_a = if a.trace() > p_total {
                p_total / a.trace()
            } else {
                1.0
            };
            a.scale(t * scale_a).add(&full(n, (1.0 - t) * p_total, rng))
        }
        (_, None) => full(n, p_total, rng),
    }
}

/// Random eavesdropper Gram matrix with `λ1 ≤ eps_power` and rank at most
/// `rank_bound`: Haar basis, eigenvalues in `(0, eps_power]`, half of the
/// draws pinned to the bound.
pub fn sample_eaves(
    n: usize,
    eps_power: f64,
    rank_bound: Option<usize>,
    rng: &mut crate::Rng,
) -> HermitianPSD {
    if eps_power <= 0.0 {
        return HermitianPSD::zeros(n);
    }
    let k = rank_bound.unwrap_or(n).min(n);
    let basis = random_unitary(n, rng);
    let mut values = vec![0.0; n];
    for v in values.iter_mut().take(k) {
        *v = eps_power * (1.0 - rng.random::<f64>());
    }
    if rng.random::<bool>() {
        values[0] = eps_power;
    }
    HermitianPSD::from_psd_unchecked(crate::matops::congruence_diag(&basis, &values))
}

/// Random `ΔH` with `σ1(ΔH) ≤ epsilon1`; the boolean flags the
/// singular-value-clipping perturbation of the nominal channel.
pub fn sample_delta_h(
    nominal: &SvdResult,
    epsilon1: f64,
    rng: &mut crate::Rng,
) -> Result<(ComplexMatrix, bool)> {
    let (m, n) = (nominal.left.rows(), nominal.right.rows());
    if epsilon1 <= 0.0 {
        return Ok((ComplexMatrix::zeros(m, n), false));
    }
    if rng.random::<f64>() < EQUALITY_PROBABILITY {
        return Ok((equality_perturbation(nominal, epsilon1)?, true));
    }
    let g = complex_gaussian(m, n, rng);
    let norm = spectral_norm(&g)?;
    let u: f64 = rng.random();
    if norm == 0.0 {
        return Ok((ComplexMatrix::zeros(m, n), false));
    }
    Ok((g.scale(u * epsilon1 / norm), false))
}

/// Uncertainty model whose saddle point is checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Isotropic {
        w1: HermitianPSD,
        eps_power: f64,
    },
    RankConstrained {
        w1: HermitianPSD,
        eaves: EavesdropperUncertainty,
    },
    DoubleSided {
        legit: LegitimateUncertainty,
        eps_power: f64,
    },
    DoubleRank {
        legit: LegitimateUncertainty,
        eaves: EavesdropperUncertainty,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Isotropic,
    RankConstrained,
    DoubleSided,
    DoubleRank,
}

impl Scenario {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            Scenario::Isotropic { .. } => ScenarioKind::Isotropic,
            Scenario::RankConstrained { .. } => ScenarioKind::RankConstrained,
            Scenario::DoubleSided { .. } => ScenarioKind::DoubleSided,
            Scenario::DoubleRank { .. } => ScenarioKind::DoubleRank,
        }
    }
}

/// Outcome of a saddle-point check.
///
/// `max_left_violation` is the largest `C(R, W1w, W2w) - C_c` over sampled
/// covariances, `max_right_violation` the largest `C_c - C(R*, W1, W2)` over
/// sampled channels. Both are signed; the check passes when both are at most
/// [`SADDLE_TOL`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleReport {
    pub scenario: ScenarioKind,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub capacity: f64,
    pub max_left_violation: f64,
    pub max_right_violation: f64,
    /// `|C(R*, W1w, W2w) - C_c|`: the worst case is attained.
    pub attained_gap: f64,
    pub equality_draws: usize,
    pub passed: bool,
    /// Weak and strong secrecy capacities coincide with `capacity`; asserted
    /// only when the saddle point is confirmed.
    pub weak_equals_strong: bool,
}

struct Prepared {
    report: CapacityReport,
    w1_worst: HermitianPSD,
    eps_power: f64,
    rank_bound: Option<usize>,
    nominal: Option<(ComplexMatrix, SvdResult, f64)>,
}

impl Prepared {
    fn new(scenario: &Scenario, p_total: f64) -> Result<Self> {
        let (report, w1_worst, eps_power, rank_bound, nominal) = match scenario {
            Scenario::Isotropic { w1, eps_power } => (
                capacity_isotropic(w1, *eps_power, p_total)?,
                w1.clone(),
                *eps_power,
                None,
                None,
            ),
            Scenario::RankConstrained { w1, eaves } => (
                capacity_rank_constrained(w1, eaves, p_total)?,
                w1.clone(),
                eaves.epsilon,
                eaves.rank_bound,
                None,
            ),
            Scenario::DoubleSided { legit, eps_power } => {
                let eaves = EavesdropperUncertainty::from_power(*eps_power)?;
                let report = capacity_double_sided(legit, &eaves, p_total)?;
                let w1w = report
                    .worst_legit
                    .clone()
                    .expect("double-sided report carries W1w");
                let s = svd(&legit.nominal)?;
                (
                    report,
                    w1w,
                    *eps_power,
                    None,
                    Some((legit.nominal.clone(), s, legit.epsilon1)),
                )
            }
            Scenario::DoubleRank { legit, eaves } => {
                let report = capacity_double_rank(legit, eaves, p_total, Some(0))?;
                let w1w = report
                    .worst_legit
                    .clone()
                    .expect("double-sided report carries W1w");
                let s = svd(&legit.nominal)?;
                (
                    report,
                    w1w,
                    eaves.epsilon,
                    eaves.rank_bound,
                    Some((legit.nominal.clone(), s, legit.epsilon1)),
                )
            }
        };
        Ok(Self {
            report,
            w1_worst,
            eps_power,
            rank_bound,
            nominal,
        })
    }

    fn dim(&self) -> usize {
        self.w1_worst.dim()
    }

    fn left(&self, r: &HermitianPSD) -> Result<f64> {
        Ok(secrecy_rate(r, &self.w1_worst, &self.report.worst_eaves)? - self.report.capacity)
    }

    fn right(&self, delta: Option<&ComplexMatrix>, w2: &HermitianPSD) -> Result<f64> {
        let r = &self.report.optimal_covariance;
        let w1 = match (&self.nominal, delta) {
            (Some((h0, _, _)), Some(d)) => HermitianPSD::gram_of(&(h0 + d)),
            (Some((h0, _, _)), None) => HermitianPSD::gram_of(h0),
            (None, _) => self.w1_worst.clone(),
        };
        Ok(self.report.capacity - secrecy_rate(r, &w1, w2)?)
    }

    fn boundary_covariances(&self, p_total: f64) -> Vec<HermitianPSD> {
        let n = self.dim();
        let mut out = vec![
            self.report.optimal_covariance.clone(),
            HermitianPSD::zeros(n),
        ];
        if p_total > 0.0 {
            out.push(HermitianPSD::scaled_identity(n, p_total / n as f64));
            if let Ok(eig) = crate::matops::hermitian_eig(&self.w1_worst) {
                let mut d = vec![0.0; n];
                d[0] = p_total;
                out.push(HermitianPSD::from_psd_unchecked(
                    crate::matops::congruence_diag(&eig.eigenvectors, &d),
                ));
            }
        }
        out
    }
}

#[derive(Clone, Copy)]
struct Partial {
    left: f64,
    right: f64,
    equality_draws: usize,
}

impl Partial {
    fn merge(self, o: Partial) -> Partial {
        Partial {
            left: self.left.max(o.left),
            right: self.right.max(o.right),
            equality_draws: self.equality_draws + o.equality_draws,
        }
    }
}

fn run_worker(
    prep: &Prepared,
    p_total: f64,
    samples: usize,
    boundary: bool,
    rng: &mut crate::Rng,
) -> Result<Partial> {
    let mut acc = Partial {
        left: f64::NEG_INFINITY,
        right: f64::NEG_INFINITY,
        equality_draws: 0,
    };
    let n = prep.dim();
    if boundary {
        for r in prep.boundary_covariances(p_total) {
            acc.left = acc.left.max(prep.left(&r)?);
        }
        let mut deltas: Vec<Option<ComplexMatrix>> = vec![None];
        if let Some((_, s, eps1)) = &prep.nominal {
            deltas.push(Some(equality_perturbation(s, *eps1)?));
        }
        for d in &deltas {
            for w2 in [prep.report.worst_eaves.clone(), HermitianPSD::zeros(n)] {
                acc.right = acc.right.max(prep.right(d.as_ref(), &w2)?);
            }
        }
    }
    let anchor = Some(&prep.report.optimal_covariance);
    for _ in 0..samples {
        let r = sample_covariance(n, p_total, anchor, rng);
        acc.left = acc.left.max(prep.left(&r)?);
        let w2 = sample_eaves(n, prep.eps_power, prep.rank_bound, rng);
        let delta = match &prep.nominal {
            Some((_, s, eps1)) => {
                let (d, eq) = sample_delta_h(s, *eps1, rng)?;
                acc.equality_draws += eq as usize;
                Some(d)
            }
            None => None,
        };
        acc.right = acc.right.max(prep.right(delta.as_ref(), &w2)?);
    }
    Ok(acc)
}

/// Single-stream saddle-point check.
pub fn verify_saddle(
    scenario: &Scenario,
    p_total: f64,
    samples: usize,
    seed: u64,
) -> Result<SaddleReport> {
    verify_saddle_with_workers(scenario, p_total, samples, seed, 1)
}

/// Saddle-point check split across `workers` threads, each on stream
/// `(seed, worker)`. Boundary cases run on worker 0. The report is
/// deterministic for a fixed `(seed, workers)` pair.
pub fn verify_saddle_with_workers(
    scenario: &Scenario,
    p_total: f64,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<SaddleReport> {
    if !(p_total >= 0.0) || !p_total.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "total power must be finite and nonnegative, got {p_total}"
        )));
    }
    let workers = workers.max(1);
    let prep = Prepared::new(scenario, p_total)?;
    let capacity = prep.report.capacity;
    let attained_gap = {
        let delta = match &prep.nominal {
            Some((_, s, eps1)) => Some(equality_perturbation(s, *eps1)?),
            None => None,
        };
        prep.right(delta.as_ref(), &prep.report.worst_eaves)?.abs()
    };

    let (left, right, equality_draws) = if samples == 0 {
        (0.0, 0.0, 0)
    } else {
        let shares: Vec<usize> = (0..workers)
            .map(|w| samples / workers + usize::from(w < samples % workers))
            .collect();
        let results: Vec<Result<Partial>> = std::thread::scope(|scope| {
            let handles: Vec<_> = shares
                .iter()
                .enumerate()
                .map(|(w, &share)| {
                    let prep = &prep;
                    scope.spawn(move || {
                        let mut rng = crate::worker_rng(seed, w as u64);
                        run_worker(prep, p_total, share, w == 0, &mut rng)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("saddle worker panicked"))
                .collect()
        });
        let mut total: Option<Partial> = None;
        for r in results {
            let r = r?;
            total = Some(match total {
                Some(t) => t.merge(r),
                None => r,
            });
        }
        let t = total.expect("at least one worker");
        (t.left, t.right, t.equality_draws)
    };
    let passed = left <= SADDLE_TOL && right <= SADDLE_TOL;
    Ok(SaddleReport {
        scenario: scenario.kind(),
        samples,
        seed,
        workers,
        capacity,
        max_left_violation: left,
        max_right_violation: right,
        attained_gap,
        equality_draws,
        passed,
        weak_equals_strong: passed,
    })
}

fn mode_table(g: f64, eps: f64, h: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            let p = h * k as f64;
            (g * p).ln_1p() - (eps * p).ln_1p()
        })
        .collect()
}

/// Grid maximum of `Σ ln((1+g_i p_i)/(1+ε p_i))` over `{p ≥ 0, Σ p_i = P_T}`
/// with spacing at most `step`, floored at zero (the value of `R = 0`).
pub fn brute_force_capacity(gains: &[f64], eps_power: f64, p_total: f64, step: f64) -> Result<f64> {
    let m = gains.len();
    if m == 0 || m > 3 {
        return Err(Error::TooLarge {
            what: "grid oracle modes",
            size: m,
            limit: 3,
        });
    }
    if !(step > 0.0) || !(p_total >= 0.0) || !(eps_power >= 0.0) {
        return Err(Error::InvalidParameter(
            "grid oracle needs step > 0, P_T ≥ 0 and ε ≥ 0".into(),
        ));
    }
    if p_total == 0.0 {
        return Ok(0.0);
    }
    let divisions = (p_total / step).ceil().max(1.0);
    let points = if m == 3 {
        divisions * divisions / 2.0
    } else {
        divisions
    };
    if points > MAX_GRID_POINTS {
        return Err(Error::TooLarge {
            what: "grid oracle points",
            size: points as usize,
            limit: MAX_GRID_POINTS as usize,
        });
    }
    let n = divisions as usize;
    let h = p_total / divisions;
    let t: Vec<Vec<f64>> = gains
        .iter()
        .map(|&g| mode_table(g, eps_power, h, n))
        .collect();
    let best = match m {
        1 => t[0][n],
        2 => (0..=n)
            .map(|k| t[0][k] + t[1][n - k])
            .fold(f64::NEG_INFINITY, f64::max),
        _ => {
            let mut best = f64::NEG_INFINITY;
            for a in 0..=n {
                let base = t[0][a];
                for b in 0..=n - a {
                    let v = base + t[1][b] + t[2][n - a - b];
                    if v > best {
                        best = v;
                    }
                }
            }
            best
        }
    };
    Ok(best.max(0.0))
}

/// Guaranteed gap between [`brute_force_capacity`] and the true maximum:
/// each per-mode term is Lipschitz with constant `max(g_i, ε)`, and the
/// nearest grid point moves the powers by at most `2(m-1)h` in `ℓ1`.
pub fn brute_force_error_bound(gains: &[f64], eps_power: f64, p_total: f64, step: f64) -> f64 {
    let m = gains.len();
    if m <= 1 || p_total <= 0.0 {
        return 0.0;
    }
    let h = p_total / (p_total / step).ceil().max(1.0);
    let lip = gains.iter().fold(eps_power, |a, &g| a.max(g));
    2.0 * (m - 1) as f64 * lip * h
}

/// Nonempty finite family of PSD matrices of a common dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PSDFamily {
    members: Vec<HermitianPSD>,
}

impl PSDFamily {
    pub fn new(members: Vec<HermitianPSD>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::InvalidParameter(
                "PSD family must be nonempty".into(),
            ));
        };
        let n = first.dim();
        if let Some(bad) = members.iter().find(|m| m.dim() != n) {
            return Err(Error::DimensionMismatch(format!(
                "family mixes {0}x{0} and {1}x{1} members",
                n,
                bad.dim()
            )));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[HermitianPSD] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Index of a member that dominates every other member, if one exists.
pub fn maximum_element(family: &PSDFamily) -> Result<Option<usize>> {
    let ms = family.members();
    for (i, m) in ms.iter().enumerate() {
        let mut all = true;
        for other in ms {
            if !m.dominates(other)? {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Indices of members not strictly dominated by another member.
pub fn maximal_elements(family: &PSDFamily) -> Result<Vec<usize>> {
    let ms = family.members();
    let mut out = Vec::new();
    'outer: for (i, a) in ms.iter().enumerate() {
        for (j, b) in ms.iter().enumerate() {
            if i != j && b.dominates(a)? && !a.dominates(b)? {
                continue 'outer;
            }
        }
        out.push(i);
    }
    Ok(out)
}

/// Random family; with `with_maximum` the last member is `λ·I` for the
/// largest member eigenvalue `λ`, which dominates the rest.
pub fn random_family(
    n: usize,
    size: usize,
    with_maximum: bool,
    rng: &mut crate::Rng,
) -> Result<PSDFamily> {
    let mut members: Vec<HermitianPSD> = (0..size.max(1))
        .map(|_| {
            let rank = rng.random_range(1..=n);
            random_psd(n, rank, rng).scale(rng.random_range(0.1..1.0))
        })
        .collect();
    if with_maximum {
        let mut top = 0.0_f64;
        for m in &members {
            top = top.max(spectral_norm(m.matrix())?);
        }
        members.push(HermitianPSD::scaled_identity(n, top));
    }
    PSDFamily::new(members)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    pub draws: usize,
    /// Draws where the minimum over the family equals the minimum over its
    /// maximal elements within [`REDUCTION_TOL`].
    pub agreements: usize,
    pub max_gap: f64,
    pub maximal: Vec<usize>,
    pub maximum: Option<usize>,
    /// Draws where the maximum element attains the minimum (0 without one).
    pub maximum_agreements: usize,
}

impl MaximalReport {
    pub fn passed(&self) -> bool {
        self.agreements == self.draws
            && (self.maximum.is_none() || self.maximum_agreements == self.draws)
    }
}

/// Compare `min_{W2 ∈ family} C(R, W1, W2)` against the minimum over the
/// maximal elements for `draws` sampled covariances.
pub fn check_min_over_maximal(
    family: &PSDFamily,
    w1: &HermitianPSD,
    p_total: f64,
    draws: usize,
    seed: u64,
) -> Result<MaximalReport> {
    if w1.dim() != family.dim() {
        return Err(Error::DimensionMismatch(format!(
            "W1 is {0}x{0} but the family is {1}x{1}",
            w1.dim(),
            family.dim()
        )));
    }
    let maximal = maximal_elements(family)?;
    let maximum = maximum_element(family)?;
    let mut rng = crate::seeded_rng(seed);
    let (mut agreements, mut maximum_agreements, mut max_gap) = (0, 0, 0.0_f64);
    for _ in 0..draws {
        let r = sample_covariance(family.dim(), p_total, None, &mut rng);
        let values = family
            .members()
            .iter()
            .map(|w2| secrecy_rate(&r, w1, w2))
            .collect::<Result<Vec<f64>>>()?;
        let all = values.iter().copied().fold(f64::INFINITY, f64::min);
        let reduced = maximal
            .iter()
            .map(|&i| values[i])
            .fold(f64::INFINITY, f64::min);
        let gap = (all - reduced).abs();
        max_gap = max_gap.max(gap);
        agreements += usize::from(gap <= REDUCTION_TOL);
        if let Some(m) = maximum {
            maximum_agreements += usize::from(values[m] <= all + REDUCTION_TOL);
        }
    }
    Ok(MaximalReport {
        draws,
        agreements,
        max_gap,
        maximal,
        maximum,
        maximum_agreements,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub steps: usize,
    pub checked_after: usize,
    pub monotone: bool,
    pub bounded: bool,
    /// `max_{m > K} ‖A_m - A_K‖_F` for `K = checked_after`.
    pub cauchy_gap: f64,
    pub converged: bool,
}

/// Build an increasing chain `A_{k+1} = A_k + t_k S C_k S`, with
/// `S = (B - A_k)^{1/2}` and random `C_k` of eigenvalues in `[1/2, 1]`, below
/// a random bound `B`, and check that it is Cauchy after `checked_after` steps.
pub fn chain_convergence_check(
    n: usize,
    steps: usize,
    checked_after: usize,
    seed: u64,
) -> Result<ChainReport> {
    if checked_after >= steps {
        return Err(Error::InvalidParameter(
            "checked_after must be below steps".into(),
        ));
    }
    let mut rng = crate::seeded_rng(seed);
    let bound = random_psd(n, n, &mut rng);
    let mut a = HermitianPSD::zeros(n);
    let (mut monotone, mut bounded) = (true, true);
    let mut anchor: Option<HermitianPSD> = None;
    let mut cauchy_gap = 0.0_f64;
    for k in 1..=steps {
        let gap = HermitianPSD::from_psd_unchecked(bound.matrix() - a.matrix());
        let s = gap.sqrt()?;
        let basis = random_unitary(n, &mut rng);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..=1.0)).collect();
        let c = crate::matops::congruence_diag(&basis, &values);
        let t = rng.random_range(0.3..0.7);
        let step = &(s.matrix() * &c) * s.matrix();
        let next = HermitianPSD::from_psd_unchecked(a.matrix() + &step.scale(t));
        monotone &= next.dominates(&a)?;
        bounded &= bound.dominates(&next)?;
        a = next;
        if k == checked_after {
            anchor = Some(a.clone());
        } else if let Some(base) = &anchor {
            cauchy_gap = cauchy_gap.max((a.matrix() - base.matrix()).frobenius_norm());
        }
    }
    Ok(ChainReport {
        steps,
        checked_after,
        monotone,
        bounded,
        cauchy_gap,
        converged: cauchy_gap < CHAIN_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::hermitian_eig;

    fn diag(d: &[f64]) -> HermitianPSD {
        HermitianPSD::from_real_diag(d).unwrap()
    }

    #[test]
    fn covariance_sampler_is_feasible_and_reproducible() {
        let mut rng = crate::seeded_rng(1);
        assert_eq!(
            sample_covariance(3, 0.0, None, &mut rng),
            HermitianPSD::zeros(3)
        );
        let anchor = diag(&[0.6, 0.4, 0.0]);
        for _ in 0..500 {
            let r = sample_covariance(3, 1.0, Some(&anchor), &mut rng);
            assert!(r.trace() <= 1.0 + 1e-12);
            assert!(hermitian_eig(&r).is_ok());
        }
        let a = sample_covariance(2, 1.0, None, &mut crate::seeded_rng(9));
        let b = sample_covariance(2, 1.0, None, &mut crate::seeded_rng(9));
        assert_eq!(a, b);
    }

    #[test]
    fn eaves_sampler_respects_bounds() {
        let mut rng = crate::seeded_rng(2);
        assert_eq!(sample_eaves(2, 0.0, None, &mut rng), HermitianPSD::zeros(2));
        for _ in 0..300 {
            let w = sample_eaves(3, 0.7, None, &mut rng);
            assert!(spectral_norm(w.matrix()).unwrap() <= 0.7 + 1e-12);
            let w = sample_eaves(3, 0.7, Some(1), &mut rng);
            let ev = hermitian_eig(&w).unwrap().eigenvalues;
            assert!(ev[0] > 0.0 && ev[0] <= 0.7 + 1e-12);
            assert!(ev[1].abs() < 1e-12 && ev[2].abs() < 1e-12);
        }
    }

    #[test]
    fn delta_sampler_respects_bound_and_flags_equality() {
        let mut rng = crate::seeded_rng(3);
        let s = svd(&ComplexMatrix::from_real_diag(&[
            std::f64::consts::SQRT_2,
            1.0,
        ]))
        .unwrap();
        let (z, eq) = sample_delta_h(&s, 0.0, &mut rng).unwrap();
        assert!(z.max_abs() == 0.0 && !eq);
        let mut flagged = 0;
        for _ in 0..400 {
            let (d, eq) = sample_delta_h(&s, 0.2, &mut rng).unwrap();
            assert!(spectral_norm(&d).unwrap() <= 0.2 + 1e-12);
            if eq {
                flagged += 1;
                assert!(d.max_abs_diff(&ComplexMatrix::from_real_diag(&[-0.2, -0.2])) < 1e-12);
            }
        }
        assert!(flagged > 20 && flagged < 100);
    }

    #[test]
    fn isotropic_saddle_holds() {
        let sc = Scenario::Isotropic {
            w1: diag(&[2.0, 1.0]),
            eps_power: 0.5,
        };
        let rep = verify_saddle(&sc, 1.0, 2000, 42).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.max_left_violation.abs() < 1e-12);
        assert!(rep.max_right_violation.abs() < 1e-12);
        assert!(rep.attained_gap < 1e-12);
        assert!(rep.weak_equals_strong);
    }

    #[test]
    fn zero_samples_pass_trivially() {
        let sc = Scenario::Isotropic {
            w1: diag(&[2.0, 1.0]),
            eps_power: 0.5,
        };
        let rep = verify_saddle(&sc, 1.0, 0, 1).unwrap();
        assert!(rep.passed);
        assert_eq!(
            (rep.max_left_violation, rep.max_right_violation),
            (0.0, 0.0)
        );
    }

    #[test]
    fn all_scenarios_pass() {
        let h0 = ComplexMatrix::from_real_diag(&[std::f64::consts::SQRT_2, 0.0]);
        let rank1 = EavesdropperUncertainty::from_power(0.25)
            .unwrap()
            .with_rank_bound(1)
            .unwrap();
        let scenarios = [
            Scenario::RankConstrained {
                w1: diag(&[2.0, 0.0]),
                eaves: rank1,
            },
            Scenario::DoubleSided {
                legit: LegitimateUncertainty::new(
                    ComplexMatrix::from_real_diag(&[std::f64::consts::SQRT_2, 1.0]),
                    0.2,
                )
                .unwrap(),
                eps_power: 0.5,
            },
            Scenario::DoubleRank {
                legit: LegitimateUncertainty::new(h0, 0.2).unwrap(),
                eaves: rank1,
            },
        ];
        for sc in &scenarios {
            let rep = verify_saddle(sc, 1.0, 1000, 7).unwrap();
            assert!(rep.passed, "{rep:?}");
            assert!(rep.attained_gap < 1e-9);
        }
    }

    #[test]
    fn workers_are_deterministic() {
        let sc = Scenario::Isotropic {
            w1: diag(&[3.0, 1.0, 0.2]),
            eps_power: 0.4,
        };
        let a = verify_saddle_with_workers(&sc, 2.0, 600, 5, 3).unwrap();
        let b = verify_saddle_with_workers(&sc, 2.0, 600, 5, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.passed);
    }

    #[test]
    fn precondition_failure_propagates() {
        let e = EavesdropperUncertainty::from_power(0.5)
            .unwrap()
            .with_rank_bound(1)
            .unwrap();
        let sc = Scenario::RankConstrained {
            w1: diag(&[2.0, 1.0]),
            eaves: e,
        };
        assert!(matches!(
            verify_saddle(&sc, 1.0, 10, 1),
            Err(Error::RankExceeded { .. })
        ));
    }

    #[test]
    fn grid_oracle_examples() {
        let v = brute_force_capacity(&[2.0, 1.0], 0.5, 1.0, 1e-4).unwrap();
        assert!((v - 0.7066).abs() < 1e-4);
        for eps in [0.0, 0.5, 1.9] {
            let v = brute_force_capacity(&[2.0], eps, 1.5, 1e-3).unwrap();
            assert!((v - ((1.0 + 3.0) / (1.0 + eps * 1.5)).ln()).abs() < 1e-14);
        }
        // water-filling: level 0.8 gives powers 0.75 and 0.25
        let v = brute_force_capacity(&[2.0, 1.0], 0.0, 1.0, 1e-4).unwrap();
        assert!((v - (2.5f64.ln() + 1.25f64.ln())).abs() < 1e-7);
        assert_eq!(
            brute_force_capacity(&[0.3, 0.2], 0.5, 1.0, 1e-2).unwrap(),
            0.0
        );
        assert!(matches!(
            brute_force_capacity(&[1.0; 4], 0.5, 1.0, 0.1),
            Err(Error::TooLarge { .. })
        ));
        assert!(brute_force_capacity(&[1.0], 0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn closed_form_matches_grid_oracle() {
        let cases: [&[f64]; 5] = [
            &[2.0, 1.0],
            &[3.0, 2.0, 0.9],
            &[1.0, 1.0, 1.0],
            &[5.0, 0.1],
            &[0.8, 0.6, 0.55],
        ];
        for gains in cases {
            for eps in [0.0, 0.3, 0.5, 1.2] {
                for p in [0.2, 1.0, 4.0] {
                    let step = if gains.len() == 3 { 2e-3 } else { 1e-4 };
                    let grid = brute_force_capacity(gains, eps, p, step).unwrap();
                    let closed = capacity_isotropic(&diag(gains), eps, p).unwrap().capacity;
                    let tol = brute_force_error_bound(gains, eps, p, step).max(1e-3);
                    assert!(
                        closed >= grid - 1e-12,
                        "closed form below grid for {gains:?} ε={eps} P={p}"
                    );
                    assert!(
                        closed - grid <= tol,
                        "{gains:?} ε={eps} P={p}: {closed} vs {grid}"
                    );
                }
            }
        }
    }

    #[test]
    fn maximum_and_maximal_examples() {
        let fam = PSDFamily::new(vec![
            diag(&[0.5, 0.5]),
            diag(&[0.5, 0.2]),
            diag(&[0.3, 0.5]),
        ])
        .unwrap();
        assert_eq!(maximum_element(&fam).unwrap(), Some(0));
        assert_eq!(maximal_elements(&fam).unwrap(), vec![0]);

        let fam = PSDFamily::new(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap();
        assert_eq!(maximum_element(&fam).unwrap(), None);
        assert_eq!(maximal_elements(&fam).unwrap(), vec![0, 1]);

        let fam = PSDFamily::new(vec![diag(&[0.3, 0.1])]).unwrap();
        assert_eq!(maximum_element(&fam).unwrap(), Some(0));
        assert_eq!(maximal_elements(&fam).unwrap(), vec![0]);

        let chain = PSDFamily::new(vec![
            diag(&[0.1, 0.1]),
            diag(&[0.3, 0.2]),
            diag(&[0.4, 0.3]),
        ])
        .unwrap();
        assert_eq!(maximal_elements(&chain).unwrap(), vec![2]);

        assert!(PSDFamily::new(vec![]).is_err());
        assert!(PSDFamily::new(vec![diag(&[1.0]), diag(&[1.0, 1.0])]).is_err());
    }

    #[test]
    fn maximal_reduction_on_random_families() {
        let mut rng = crate::seeded_rng(17);
        let w1 = random_psd(3, 3, &mut rng);
        let fam = random_family(3, 20, false, &mut rng).unwrap();
        let rep = check_min_over_maximal(&fam, &w1, 1.0, 100, 4).unwrap();
        assert_eq!(rep.agreements, 100);
        assert!(rep.passed());

        let fam = random_family(3, 8, true, &mut rng).unwrap();
        let rep = check_min_over_maximal(&fam, &w1, 1.0, 100, 5).unwrap();
        assert_eq!(rep.maximum, Some(8));
        assert_eq!(rep.maximal, vec![8]);
        assert_eq!(rep.maximum_agreements, 100);

        let single = PSDFamily::new(vec![diag(&[0.2, 0.1, 0.0])]).unwrap();
        assert!(check_min_over_maximal(&single, &w1, 1.0, 10, 1)
            .unwrap()
            .passed());
    }

    #[test]
    fn increasing_bounded_chains_converge() {
        for seed in 0..5 {
            let rep = chain_convergence_check(3, 200, 150, seed).unwrap();
            assert!(rep.monotone && rep.bounded, "{rep:?}");
            assert!(rep.converged, "{rep:?}");
        }
        assert!(chain_convergence_check(2, 10, 10, 0).is_err());
    }
}
