//! Finite-alphabet (DMC) compound wiretap computations.
//!
//! Entropies and mutual informations are in nats. Channels are row-stochastic
//! matrices `P(out | in)`.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{svd, ComplexMatrix};

/// Row-sum tolerance for stochastic matrices and distributions.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Slack for the sampled ordering certificates.
pub const ORDER_TOL: f64 = 1e-10;
/// Default feasibility tolerance for [`is_degraded`].
pub const DEGRADED_TOL: f64 = 1e-9;

const MAX_LATTICE_POINTS: usize = 20_000_000;
const DEGRADED_MAX_ITER: usize = 100_000;
const STAGNATION_WINDOW: usize = 1000;
const STAGNATION_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct FiniteChannel {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for FiniteChannel {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<FiniteChannel> for Vec<Vec<f64>> {
    fn from(c: FiniteChannel) -> Self {
        c.rows
    }
}

impl FiniteChannel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::NotStochastic {
                row: 0,
                reason: "channel needs at least one input and output".into(),
            });
        }
        let out = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != out {
                return Err(Error::NotStochastic {
                    row: i,
                    reason: format!("{} entries, expected {out}", r.len()),
                });
            }
            if let Some(v) = r.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::NotStochastic {
                    row: i,
                    reason: format!("entry {v} is not a probability"),
                });
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic {
                    row: i,
                    reason: format!("row sums to {s}"),
                });
            }
        }
        Ok(Self { rows })
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: (0..n)
                .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
                .collect(),
        }
    }

    pub fn in_size(&self) -> usize {
        self.rows.len()
    }

    pub fn out_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    /// Cascade `self` followed by `next`.
    pub fn then(&self, next: &FiniteChannel) -> Result<FiniteChannel> {
        if self.out_size() != next.in_size() {
            return Err(Error::DimensionMismatch(format!(
                "cannot cascade {} outputs into {} inputs",
                self.out_size(),
                next.in_size()
            )));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                (0..next.out_size())
                    .map(|z| r.iter().enumerate().map(|(y, w)| w * next.rows[y][z]).sum())
                    .collect()
            })
            .collect();
        Ok(FiniteChannel { rows })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WiretapState {
    pub legit: FiniteChannel,
    pub eaves: FiniteChannel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyRepr", into = "FamilyRepr")]
pub struct CompoundDMCFamily {
    states: Vec<WiretapState>,
}

#[derive(Serialize, Deserialize)]
struct FamilyRepr {
    states: Vec<WiretapState>,
}

impl TryFrom<FamilyRepr> for CompoundDMCFamily {
    type Error = Error;

    fn try_from(r: FamilyRepr) -> Result<Self> {
        Self::new(r.states)
    }
}

impl From<CompoundDMCFamily> for FamilyRepr {
    fn from(f: CompoundDMCFamily) -> Self {
        FamilyRepr { states: f.states }
    }
}

impl CompoundDMCFamily {
    pub fn new(states: Vec<WiretapState>) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::InvalidParameter(
                "family needs at least one state".into(),
            ));
        };
        let shape = |s: &WiretapState| {
            (
                s.legit.in_size(),
                s.eaves.in_size(),
                s.legit.out_size(),
                s.eaves.out_size(),
            )
        };
        let expected = shape(first);
        if expected.0 != expected.1 {
            return Err(Error::DimensionMismatch(format!(
                "state 0: legitimate channel has {} inputs, eavesdropper {}",
                expected.0, expected.1
            )));
        }
        if let Some((i, _)) = states
            .iter()
            .enumerate()
            .find(|(_, s)| shape(s) != expected)
        {
            return Err(Error::DimensionMismatch(format!(
                "state {i} has different alphabet sizes than state 0"
            )));
        }
        Ok(Self { states })
    }

    pub fn single(legit: FiniteChannel, eaves: FiniteChannel) -> Result<Self> {
        Self::new(vec![WiretapState { legit, eaves }])
    }

    pub fn states(&self) -> &[WiretapState] {
        &self.states
    }

    pub fn x_size(&self) -> usize {
        self.states[0].legit.in_size()
    }

    pub fn y_size(&self) -> usize {
        self.states[0].legit.out_size()
    }

    pub fn z_size(&self) -> usize {
        self.states[0].eaves.out_size()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct InputDistribution(Vec<f64>);

impl TryFrom<Vec<f64>> for InputDistribution {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<InputDistribution> for Vec<f64> {
    fn from(p: InputDistribution) -> Self {
        p.0
    }
}

impl InputDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidParameter("empty input distribution".into()));
        }
        if let Some(v) = p.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "probability {v} out of range"
            )));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidParameter(format!(
                "input distribution sums to {s}"
            )));
        }
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn vertex(n: usize, i: usize) -> Self {
        let mut p = vec![0.0; n];
        p[i] = 1.0;
        Self(p)
    }

    /// Uniform draw from the simplex.
    pub fn random(n: usize, rng: &mut crate::Rng) -> Self {
        let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = e.iter().sum();
        Self(e.into_iter().map(|v| v / s).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn midpoint(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        )
    }
}

/// `I(X;Y)` in nats, with `0 ln 0 = 0`.
pub fn mutual_information(p: &InputDistribution, ch: &FiniteChannel) -> Result<f64> {
    if p.0.len() != ch.in_size() {
        return Err(Error::DimensionMismatch(format!(
            "distribution over {} symbols for a channel with {} inputs",
            p.0.len(),
            ch.in_size()
        )));
    }
    Ok(mi_unchecked(&p.0, ch))
}

fn mi_unchecked(p: &[f64], ch: &FiniteChannel) -> f64 {
    let q: Vec<f64> = (0..ch.out_size())
        .map(|y| p.iter().zip(&ch.rows).map(|(px, r)| px * r[y]).sum())
        .collect();
    let mut total = 0.0;
    for (px, r) in p.iter().zip(&ch.rows) {
        if *px == 0.0 {
            continue;
        }
        for (w, qy) in r.iter().zip(&q) {
            if *w > 0.0 {
                total += px * w * (w / qy).ln();
            }
        }
    }
    total.max(0.0)
}

/// `min_s I(X;Y_s) - max_s I(X;Z_s)`, unclamped.
pub fn compound_objective(family: &CompoundDMCFamily, p: &[f64]) -> f64 {
    let legit = family
        .states
        .iter()
        .map(|s| mi_unchecked(p, &s.legit))
        .fold(f64::INFINITY, f64::min);
    let eaves = family
        .states
        .iter()
        .map(|s| mi_unchecked(p, &s.eaves))
        .fold(f64::NEG_INFINITY, f64::max);
    legit - eaves
}

fn lattice(x: usize, n: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(k: &mut Vec<usize>, left: usize, slots: usize, f: &mut impl FnMut(&[usize])) {
        if slots == 1 {
            k.push(left);
            f(k);
            k.pop();
            return;
        }
        for a in 0..=left {
            k.push(a);
            rec(k, left - a, slots - 1, f);
            k.pop();
        }
    }
    rec(&mut Vec::with_capacity(x), n, x, f);
}

fn lattice_size(x: usize, n: usize) -> f64 {
    // C(n + x - 1, x - 1)
    (1..x).fold(1.0, |acc, i| acc * (n + i) as f64 / i as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompoundRate {
    pub rate: f64,
    pub argmax: InputDistribution,
}

/// Grid maximum of `min_s I(X;Y_s) - max_s I(X;Z_s)` over the input simplex,
/// refined by one pass of pairwise mass transfers, clamped below at 0.
pub fn compound_rate_lower_bound(
    family: &CompoundDMCFamily,
    grid_step: f64,
) -> Result<CompoundRate> {
    let x = family.x_size();
    if x > 4 {
        return Err(Error::TooLarge {
            what: "input alphabet for grid search",
            size: x,
            limit: 4,
        });
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid step must be in (0, 1], got {grid_step}"
        )));
    }
    let n = (1.0 / grid_step).round().max(1.0) as usize;
    let size = lattice_size(x, n);
    if size > MAX_LATTICE_POINTS as f64 {
        return Err(Error::TooLarge {
            what: "grid points",
            size: size as usize,
            limit: MAX_LATTICE_POINTS,
        });
    }
    let mut best = (f64::NEG_INFINITY, vec![0.0; x]);
    let mut p = vec![0.0; x];
    lattice(x, n, &mut |k| {
        for (pi, ki) in p.iter_mut().zip(k) {
            *pi = *ki as f64 / n as f64;
        }
        let v = compound_objective(family, &p);
        // strict improvement keeps the lexicographically first argmax
        if v > best.0 {
            best = (v, p.clone());
        }
    });

    let (mut value, mut p) = best;
    let mut delta = 0.5 / n as f64;
    for _ in 0..30 {
        for i in 0..x {
            for j in 0..x {
                if i == j || p[j] <= 0.0 {
                    continue;
                }
                let d = delta.min(p[j]);
                let mut q = p.clone();
                q[i] += d;
                q[j] -= d;
                let v = compound_objective(family, &q);
                if v > value + 1e-15 * value.abs().max(1.0) {
                    value = v;
                    p = q;
                }
            }
        }
        delta *= 0.5;
    }
    Ok(CompoundRate {
        rate: value.max(0.0),
        argmax: InputDistribution(p),
    })
}

/// Binary entropy in nats; `x` must lie in `[0, 1]`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!(
            "binary entropy argument {x} outside [0, 1]"
        )));
    }
    let term = |t: f64| if t > 0.0 { -t * t.ln() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// Quantize every entry to a multiple of `1/levels`: round to nearest, then
/// absorb the row-sum defect in the largest entry.
pub fn quantize_channel(
    ch: &FiniteChannel,
    levels: u64,
    y_size: usize,
    z_size: usize,
) -> Result<FiniteChannel> {
    let floor = 2 * (y_size * y_size * z_size * z_size) as u64;
    if levels < floor {
        return Err(Error::InvalidParameter(format!(
            "{levels} quantization levels, need at least {floor}"
        )));
    }
    let l = levels as f64;
    let rows = ch
        .rows
        .iter()
        .map(|r| {
            let mut k: Vec<i64> = r.iter().map(|w| (w * l).round() as i64).collect();
            let defect = levels as i64 - k.iter().sum::<i64>();
            let top = (0..k.len()).fold(0, |b, i| if k[i] > k[b] { i } else { b });
            k[top] += defect;
            k.into_iter().map(|c| c as f64 / l).collect()
        })
        .collect();
    FiniteChannel::new(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativeViolation {
    pub channel: String,
    pub input: usize,
    pub output: usize,
    pub original: f64,
    pub quantized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizationReport {
    pub levels: u64,
    pub additive_bound: f64,
    pub worst_additive: f64,
    pub additive_holds: bool,
    pub multiplicative_factor: f64,
    pub multiplicative_violations: Vec<MultiplicativeViolation>,
    pub multiplicative_holds: bool,
    pub mutual_information_bound: f64,
    pub worst_legit_mi_gap: f64,
    pub worst_eaves_mi_gap: f64,
    pub mutual_information_holds: bool,
    pub distributions_checked: usize,
}

/// Check additive, multiplicative and mutual-information closeness of a
/// quantized wiretap pair. Violations are reported, never hidden.
pub fn quantization_check(
    original: (&FiniteChannel, &FiniteChannel),
    quantized: (&FiniteChannel, &FiniteChannel),
    levels: u64,
    p_samples: usize,
    seed: u64,
) -> Result<QuantizationReport> {
    let shape = |c: &FiniteChannel| (c.in_size(), c.out_size());
    if shape(original.0) != shape(quantized.0) || shape(original.1) != shape(quantized.1) {
        return Err(Error::DimensionMismatch(
            "original and quantized channels differ in shape".into(),
        ));
    }
    if original.0.in_size() != original.1.in_size() {
        return Err(Error::DimensionMismatch(
            "legitimate and eavesdropper input alphabets differ".into(),
        ));
    }
    let (ys, zs) = (original.0.out_size() as f64, original.1.out_size() as f64);
    let l = levels as f64;
    let additive_bound = ys * zs / l;
    let factor = (2.0 * ys * ys * zs * zs / l).exp2();

    let mut worst_additive = 0.0_f64;
    let mut violations = Vec::new();
    for (name, o, q) in [
        ("legit", original.0, quantized.0),
        ("eaves", original.1, quantized.1),
    ] {
        for (x, (ro, rq)) in o.rows.iter().zip(&q.rows).enumerate() {
            for (y, (w, wq)) in ro.iter().zip(rq).enumerate() {
                worst_additive = worst_additive.max((w - wq).abs());
                if *w > factor * wq * (1.0 + 1e-12) {
                    violations.push(MultiplicativeViolation {
                        channel: name.into(),
                        input: x,
                        output: y,
                        original: *w,
                        quantized: *wq,
                    });
                }
            }
        }
    }

    let x = original.0.in_size();
    let mut rng = crate::seeded_rng(seed);
    let mut dists: Vec<InputDistribution> =
        (0..x).map(|i| InputDistribution::vertex(x, i)).collect();
    dists.push(InputDistribution::uniform(x));
    dists.extend((0..p_samples).map(|_| InputDistribution::random(x, &mut rng)));
    let (mut gy, mut gz) = (0.0_f64, 0.0_f64);
    for p in &dists {
        gy = gy.max((mi_unchecked(&p.0, original.0) - mi_unchecked(&p.0, quantized.0)).abs());
        gz = gz.max((mi_unchecked(&p.0, original.1) - mi_unchecked(&p.0, quantized.1)).abs());
    }
    let mi_bound = 2.0 * (ys * zs).powf(1.5) / l.sqrt();
    Ok(QuantizationReport {
        levels,
        additive_bound,
        worst_additive,
        additive_holds: worst_additive <= additive_bound,
        multiplicative_factor: factor,
        multiplicative_holds: violations.is_empty(),
        multiplicative_violations: violations,
        mutual_information_bound: mi_bound,
        worst_legit_mi_gap: gy,
        worst_eaves_mi_gap: gz,
        mutual_information_holds: gy <= mi_bound && gz <= mi_bound,
        distributions_checked: dists.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: u64,
    pub levels: u64,
    pub x_size: usize,
    pub y_size: usize,
    pub z_size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
}

impl BoundParams {
    /// Smallest admissible `a` is any value above `2|Y|²|Z|² max(1, 1/α)`.
    pub fn a_threshold(y_size: usize, z_size: usize, alpha: f64) -> f64 {
        2.0 * (y_size * y_size * z_size * z_size) as f64 * 1f64.max(1.0 / alpha)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.x_size == 0 || self.y_size == 0 || self.z_size == 0 {
            return Err(Error::InvalidParameter(
                "blocklength and alphabet sizes must be positive".into(),
            ));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("a", self.a)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let floor = 2 * (self.y_size * self.y_size * self.z_size * self.z_size) as u64;
        if self.levels < floor {
            return Err(Error::InvalidParameter(format!(
                "{} quantization levels, need at least {floor}",
                self.levels
            )));
        }
        let t = Self::a_threshold(self.y_size, self.z_size, self.alpha);
        if !(self.a > t) {
            return Err(Error::InvalidParameter(format!(
                "a = {} must exceed {t}",
                self.a
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    /// `(L+1)^{|X||Y||Z|/4} 2^{-nα}` for the given `L`.
    pub error_bound: f64,
    pub log2_error_bound: f64,
    /// `4n(|Y||Z|² ln|Z| / L + H₂(|Y||Z|²/L))`.
    pub leakage_bound: f64,
    /// Error bound after transfer to the unquantized channel with `L = a n²`.
    pub approx_error_bound: f64,
    pub log2_approx_error_bound: f64,
    /// `2^{-nβ} + 4|Y||Z|² ln|Z|/(a n) + 4n H₂(|Y||Z|²/(a n²))`.
    pub approx_leakage_bound: f64,
}

fn leakage_transfer(n: f64, levels: f64, ys: f64, zs: f64) -> Result<f64> {
    let arg = ys * zs * zs / levels;
    if arg >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "binary entropy argument {arg} ≥ 1: too few quantization levels"
        )));
    }
    Ok(4.0 * n * (arg * zs.ln() + binary_entropy(arg)?))
}

pub fn leakage_bound(params: &BoundParams) -> Result<BoundRecord> {
    params.validate()?;
    let n = params.n as f64;
    let (xs, ys, zs) = (
        params.x_size as f64,
        params.y_size as f64,
        params.z_size as f64,
    );
    let l = params.levels as f64;
    let states_exp = xs * ys * zs / 4.0;
    let log2_error = states_exp * (l + 1.0).log2() - n * params.alpha;

    let la = params.a * n * n;
    let log2_approx =
        states_exp * (la + 1.0).log2() - n * (params.alpha - 2.0 * ys * ys * zs * zs / la);
    let approx_leakage = (-n * params.beta).exp2() + leakage_transfer(n, la, ys, zs)?;

    Ok(BoundRecord {
        error_bound: log2_error.exp2(),
        log2_error_bound: log2_error,
        leakage_bound: leakage_transfer(n, l, ys, zs)?,
        approx_error_bound: log2_approx.exp2(),
        log2_approx_error_bound: log2_approx,
        approx_leakage_bound: approx_leakage,
    })
}

/// `n, 2n, 4n, ...` (`count` terms).
pub fn doubling_schedule(start: u64, count: usize) -> Vec<u64> {
    (0..count).map(|k| start << k).collect()
}

/// `n H₂(c/n²)` along a schedule; entries with `c/n² > 1` are `None`.
pub fn entropy_decay(c: f64, schedule: &[u64]) -> Vec<Option<f64>> {
    schedule
        .iter()
        .map(|&n| {
            let n = n as f64;
            binary_entropy(c / (n * n)).ok().map(|h| n * h)
        })
        .collect()
}

/// First index from which `values` is strictly decreasing to the end.
pub fn decreasing_from(values: &[f64]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let mut start = values.len() - 1;
    while start > 0 && values[start - 1] > values[start] {
        start -= 1;
    }
    Some(start)
}

fn check_same_input(legit: &FiniteChannel, eaves: &FiniteChannel) -> Result<()> {
    if legit.in_size() != eaves.in_size() {
        return Err(Error::DimensionMismatch(format!(
            "input alphabets differ: {} vs {}",
            legit.in_size(),
            eaves.in_size()
        )));
    }
    Ok(())
}

fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

fn pseudo_inverse(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let m = ComplexMatrix::from_real_rows(rows)?;
    let s = svd(&m)?;
    let top = s.singulars.first().copied().unwrap_or(0.0);
    let mut out = vec![vec![0.0; m.rows()]; m.cols()];
    for (k, &sigma) in s.singulars.iter().enumerate() {
        if sigma <= 1e-12 * top || sigma == 0.0 {
            continue;
        }
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += (s.right[(i, k)] * s.left[(j, k)].conj()).re / sigma;
            }
        }
    }
    Ok(out)
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .map(|r| {
            (0..b[0].len())
                .map(|j| r.iter().zip(b).map(|(x, br)| x * br[j]).sum())
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradedReport {
    pub degraded: bool,
    pub residual: f64,
    pub iterations: usize,
    /// Row-stochastic `D` with `V ≈ W D` (last iterate).
    pub cascade: Vec<Vec<f64>>,
}

/// Search for a row-stochastic `D` with `‖V - W D‖_max ≤ tol` by alternating
/// projections between the affine set `{W D = V}` and the row simplices.
pub fn is_degraded(
    legit: &FiniteChannel,
    eaves: &FiniteChannel,
    tol: f64,
) -> Result<DegradedReport> {
    check_same_input(legit, eaves)?;
    let (ny, nz) = (legit.out_size(), eaves.out_size());
    let w = &legit.rows;
    let v = &eaves.rows;
    let pinv = pseudo_inverse(w)?;
    let residual_of = |d: &[Vec<f64>]| {
        let wd = matmul(w, d);
        wd.iter()
            .zip(v)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    };

    // start from the least-squares solution
    let mut d = matmul(&pinv, v);
    for row in d.iter_mut() {
        project_simplex(row);
    }
    let mut residual = residual_of(&d);
    let mut checkpoint = residual;
    let mut iterations = 0;
    while residual > tol && iterations < DEGRADED_MAX_ITER {
        let wd = matmul(w, &d);
        let err: Vec<Vec<f64>> = wd
            .iter()
            .zip(v)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        let corr = matmul(&pinv, &err);
        for y in 0..ny {
            for z in 0..nz {
                d[y][z] -= corr[y][z];
            }
            project_simplex(&mut d[y]);
        }
        residual = residual_of(&d);
        iterations += 1;
        if iterations % STAGNATION_WINDOW == 0 {
            if checkpoint - residual < STAGNATION_RTOL * checkpoint {
                break;
            }
            checkpoint = residual;
        }
    }
    Ok(DegradedReport {
        degraded: residual <= tol,
        residual,
        iterations,
        cascade: d,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub holds: bool,
    /// Always true: a positive answer is a sampled certificate, not a proof.
    pub sampled: bool,
    pub evaluations: usize,
    pub worst_slack: f64,
    /// Distributions exhibiting the violation (one for less capable, two for
    /// the concavity test).
    pub witness: Option<Vec<InputDistribution>>,
}

/// `I(X;Y) ≥ I(X;Z)` on every vertex, the uniform input and `p_samples`
/// random distributions.
pub fn is_less_capable(
    legit: &FiniteChannel,
    eaves: &FiniteChannel,
    p_samples: usize,
    seed: u64,
) -> Result<OrderReport> {
    check_same_input(legit, eaves)?;
    let x = legit.in_size();
    let mut rng = crate::seeded_rng(seed);
    let mut dists: Vec<InputDistribution> =
        (0..x).map(|i| InputDistribution::vertex(x, i)).collect();
    dists.push(InputDistribution::uniform(x));
    dists.extend((0..p_samples).map(|_| InputDistribution::random(x, &mut rng)));
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for p in &dists {
        let f = mi_unchecked(&p.0, legit) - mi_unchecked(&p.0, eaves);
        if f < worst {
            worst = f;
            if f < -ORDER_TOL {
                witness = Some(vec![p.clone()]);
            }
        }
    }
    Ok(OrderReport {
        holds: witness.is_none(),
        sampled: true,
        evaluations: dists.len(),
        worst_slack: worst,
        witness,
    })
}

/// Midpoint concavity of `I(X;Y) - I(X;Z)` in the input distribution on all
/// vertex pairs, vertex/uniform pairs and `pair_samples` random pairs.
pub fn is_noisier_concavity(
    legit: &FiniteChannel,
    eaves: &FiniteChannel,
    pair_samples: usize,
    seed: u64,
) -> Result<OrderReport> {
    check_same_input(legit, eaves)?;
    let x = legit.in_size();
    let f = |p: &InputDistribution| mi_unchecked(&p.0, legit) - mi_unchecked(&p.0, eaves);
    let mut pairs = Vec::new();
    for i in 0..x {
        for j in i + 1..x {
            pairs.push((
                InputDistribution::vertex(x, i),
                InputDistribution::vertex(x, j),
            ));
        }
        pairs.push((
            InputDistribution::vertex(x, i),
            InputDistribution::uniform(x),
        ));
    }
    let mut rng = crate::seeded_rng(seed);
    for _ in 0..pair_samples {
        pairs.push((
            InputDistribution::random(x, &mut rng),
            InputDistribution::random(x, &mut rng),
        ));
    }
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for (p, q) in &pairs {
        let slack = f(&p.midpoint(q)) - 0.5 * (f(p) + f(q));
        if slack < worst {
            worst = slack;
            if slack < -ORDER_TOL {
                witness = Some(vec![p.clone(), q.clone()]);
            }
        }
    }
    Ok(OrderReport {
        holds: witness.is_none(),
        sampled: true,
        evaluations: pairs.len(),
        worst_slack: worst,
        witness,
    })
}
