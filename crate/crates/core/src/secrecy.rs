//! Secrecy capacity under an isotropic worst-case eavesdropper.
//!
//! With the eavesdropper Gram matrix bounded by `λ1(W2) ≤ ε`, the worst case is
//! `W2 = εI` and the optimal covariance is diagonal in the eigenbasis of `W1`.
//! Each eigenmode with gain `g` receives the power that solves the per-mode
//! stationarity condition
//!
//! ```text
//! g/(1 + g p) - ε/(1 + ε p) = λ
//! ```
//!
//! for a common water level `λ`, found by bisection from the total power budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{hermitian_eig, logdet_ipwr, ComplexMatrix, HermitianPSD};

const LEVEL_FLOOR: f64 = 1e-300;
const BISECTION_CAP: usize = 200;
const BISECTION_RTOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;

/// Eigenvalues `g_i = λ_i(W1)` (descending) and the eigenbasis `U1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegitimateSpectrum {
    pub gains: Vec<f64>,
    pub basis: ComplexMatrix,
}

impl LegitimateSpectrum {
    pub fn new(gains: Vec<f64>, basis: ComplexMatrix) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidParameter(
                "spectrum needs at least one mode".into(),
            ));
        }
        if let Some(g) = gains.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gain {g} is not a finite nonnegative number"
            )));
        }
        if gains.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "gains must be sorted in descending order".into(),
            ));
        }
        if !basis.is_square() || basis.rows() != gains.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} gains but a {}x{} basis",
                gains.len(),
                basis.rows(),
                basis.cols()
            )));
        }
        let err = (&basis.adjoint() * &basis).max_abs_diff(&ComplexMatrix::identity(gains.len()));
        if err > UNITARY_TOL {
            return Err(Error::InvalidParameter(format!(
                "basis is not unitary (error {err:e})"
            )));
        }
        Ok(Self { gains, basis })
    }

    /// Gains on the standard basis.
    pub fn from_gains(gains: Vec<f64>) -> Result<Self> {
        let n = gains.len().max(1);
        Self::new(gains, ComplexMatrix::identity(n))
    }

    pub fn from_gram(w1: &HermitianPSD) -> Result<Self> {
        let eig = hermitian_eig(w1)?;
        Ok(Self {
            gains: eig.eigenvalues,
            basis: eig.eigenvectors,
        })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn strongest(&self) -> f64 {
        self.gains[0]
    }
}

/// Eigenmode powers together with the water level that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    pub water_level: f64,
    pub active_set: Vec<usize>,
    pub total: f64,
}

/// Closed-form compound capacity and the matching saddle-point strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub capacity: f64,
    /// Bound on `λ1(W2)` the report was computed for.
    pub epsilon: f64,
    pub gains: Vec<f64>,
    pub allocation: PowerAllocation,
    pub optimal_covariance: HermitianPSD,
    pub worst_eaves: HermitianPSD,
    #[serde(with = "crate::serde_float")]
    pub high_snr_asymptote: f64,
    pub active_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_legit: Option<HermitianPSD>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_legit_channel: Option<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_eaves_channel: Option<ComplexMatrix>,
}

fn check_nonnegative(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite and nonnegative, got {x}"
        )));
    }
    Ok(())
}

/// `C(R, W1, W2) = ln|I + W1 R| - ln|I + W2 R|`.
pub fn secrecy_rate(r: &HermitianPSD, w1: &HermitianPSD, w2: &HermitianPSD) -> Result<f64> {
    if w1.dim() != w2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "W1 is {0}x{0} but W2 is {1}x{1}",
            w1.dim(),
            w2.dim()
        )));
    }
    Ok(logdet_ipwr(w1, r)? - logdet_ipwr(w2, r)?)
}

/// Power of a single eigenmode with gain `g` at water level `level > 0`.
///
/// For `ε > 0` this is `(ε+g)/(2εg)·(√(1+x) - 1)` with
/// `x = 4εg/(ε+g)²·((g-ε)/λ - 1)_+`, rewritten as `2y/((ε+g)(√(1+x)+1))`
/// to avoid cancellation; for `ε = 0` it is the water-filling `(1/λ - 1/g)_+`.
pub fn mode_power(gain: f64, epsilon: f64, level: f64) -> f64 {
    let margin = gain - epsilon;
    if !(margin > level) {
        return 0.0;
    }
    if epsilon == 0.0 {
        return 1.0 / level - 1.0 / gain;
    }
    let y = (margin - level) / level;
    let x = 4.0 * epsilon * gain / ((epsilon + gain) * (epsilon + gain)) * y;
    2.0 * y / ((epsilon + gain) * ((1.0 + x).sqrt() + 1.0))
}

fn total_power(gains: &[f64], epsilon: f64, level: f64) -> f64 {
    gains.iter().map(|&g| mode_power(g, epsilon, level)).sum()
}

/// Water level `λ ∈ (0, g1 - ε)` at which the mode powers add up to `p_total`.
pub fn water_level(spectrum: &LegitimateSpectrum, epsilon: f64, p_total: f64) -> Result<f64> {
    check_nonnegative("epsilon", epsilon)?;
    if !(p_total > 0.0) || !p_total.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "total power must be positive, got {p_total}"
        )));
    }
    let top = spectrum.strongest() - epsilon;
    if !(top > 0.0) {
        return Err(Error::NoActiveMode { epsilon });
    }
    let gains = &spectrum.gains;
    let (mut lo, mut hi) = (LEVEL_FLOOR.min(0.5 * top), top);
    for _ in 0..BISECTION_CAP {
        // geometric steps while the bracket spans orders of magnitude
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            return Ok(mid.clamp(lo, hi));
        }
        if total_power(gains, epsilon, mid) > p_total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= BISECTION_RTOL * hi {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::NoConvergence {
            algorithm: "water-level bisection",
            iterations: BISECTION_CAP,
        })
    }
}

/// Optimal eigenmode powers for the isotropic eavesdropper `εI`.
pub fn power_allocation(
    spectrum: &LegitimateSpectrum,
    epsilon: f64,
    p_total: f64,
) -> Result<PowerAllocation> {
    check_nonnegative("epsilon", epsilon)?;
    check_nonnegative("total power", p_total)?;
    let n = spectrum.len();
    let top = spectrum.strongest() - epsilon;
    if p_total == 0.0 || !(top > 0.0) {
        return Ok(PowerAllocation {
            powers: vec![0.0; n],
            water_level: top,
            active_set: Vec::new(),
            total: p_total,
        });
    }
    let level = water_level(spectrum, epsilon, p_total)?;
    let powers: Vec<f64> = spectrum
        .gains
        .iter()
        .map(|&g| mode_power(g, epsilon, level))
        .collect();
    let active_set = (0..n).filter(|&i| powers[i] > 0.0).collect();
    Ok(PowerAllocation {
        powers,
        water_level: level,
        active_set,
        total: p_total,
    })
}

/// `Σ_{g_i > ε} ln(g_i/ε)`, `+∞` when `ε = 0` and some gain is positive.
pub fn high_snr_asymptote(gains: &[f64], epsilon: f64) -> f64 {
    gains
        .iter()
        .filter(|&&g| g > epsilon)
        .map(|&g| {
            if epsilon == 0.0 {
                f64::INFINITY
            } else {
                (g / epsilon).ln()
            }
        })
        .sum()
}

/// Capacity as `Σ ln((1+g_i p_i)/(1+ε p_i))` over the active modes.
pub fn capacity_from_allocation(gains: &[f64], epsilon: f64, allocation: &PowerAllocation) -> f64 {
    allocation
        .active_set
        .iter()
        .map(|&i| {
            let p = allocation.powers[i];
            (gains[i] * p).ln_1p() - (epsilon * p).ln_1p()
        })
        .sum()
}

/// The same capacity written as high-SNR asymptote plus a (negative) correction,
/// with `z_i` recomputed from the water level. Requires `ε > 0`.
pub fn capacity_split_form(
    gains: &[f64],
    epsilon: f64,
    allocation: &PowerAllocation,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(
            "the split form needs epsilon > 0".into(),
        ));
    }
    let level = allocation.water_level;
    Ok(allocation
        .active_set
        .iter()
        .map(|&i| {
            let g = gains[i];
            let y = ((g - epsilon) - level) / level;
            let x = 4.0 * epsilon * g / ((epsilon + g) * (epsilon + g)) * y;
            let z = x / ((1.0 + x).sqrt() + 1.0);
            let s = (epsilon + g) * z;
            (g / epsilon).ln() + ((2.0 * epsilon + s) / (2.0 * g + s)).ln()
        })
        .sum())
}

/// Compound capacity for a given legitimate spectrum and eavesdropper power bound.
pub fn capacity_from_spectrum(
    spectrum: &LegitimateSpectrum,
    epsilon: f64,
    p_total: f64,
) -> Result<CapacityReport> {
    let allocation = power_allocation(spectrum, epsilon, p_total)?;
    let capacity = capacity_from_allocation(&spectrum.gains, epsilon, &allocation);
    let optimal_covariance = HermitianPSD::from_spectrum(&spectrum.basis, &allocation.powers)?;
    Ok(CapacityReport {
        capacity,
        epsilon,
        gains: spectrum.gains.clone(),
        active_count: allocation.active_set.len(),
        allocation,
        optimal_covariance,
        worst_eaves: HermitianPSD::scaled_identity(spectrum.len(), epsilon),
        high_snr_asymptote: high_snr_asymptote(&spectrum.gains, epsilon),
        worst_legit: None,
        worst_legit_channel: None,
        worst_eaves_channel: None,
    })
}

/// Compound capacity with known `W1` and any eavesdropper with `λ1(W2) ≤ ε`.
pub fn capacity_isotropic(w1: &HermitianPSD, epsilon: f64, p_total: f64) -> Result<CapacityReport> {
    check_nonnegative("epsilon", epsilon)?;
    check_nonnegative("total power", p_total)?;
    capacity_from_spectrum(&LegitimateSpectrum::from_gram(w1)?, epsilon, p_total)
}

/// Smallest total power at which eigenmode `m` (1-based, `m ≥ 2`) becomes active.
///
/// This is the total power of the stronger modes at water level `g_m - ε`;
/// `+∞` when `g_m ≤ ε`.
pub fn threshold_power(spectrum: &LegitimateSpectrum, epsilon: f64, m: usize) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "threshold power needs epsilon > 0, got {epsilon}"
        )));
    }
    if m < 2 || m > spectrum.len() {
        return Err(Error::InvalidParameter(format!(
            "mode index {m} outside 2..={}",
            spectrum.len()
        )));
    }
    let gm = spectrum.gains[m - 1];
    let level = gm - epsilon;
    if !(level > 0.0) {
        return Ok(f64::INFINITY);
    }
    Ok(spectrum.gains[..m - 1]
        .iter()
        .map(|&g| mode_power(g, epsilon, level))
        .sum())
}

/// Whether single-mode transmission (beamforming) is optimal at `p_total`.
pub fn beamforming_optimal(
    spectrum: &LegitimateSpectrum,
    epsilon: f64,
    p_total: f64,
) -> Result<bool> {
    if !(p_total > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "total power must be positive, got {p_total}"
        )));
    }
    if !(spectrum.strongest() > epsilon) {
        return Err(Error::NoActiveMode { epsilon });
    }
    if spectrum.len() == 1 {
        return Ok(true);
    }
    Ok(p_total <= threshold_power(spectrum, epsilon, 2)?)
}

/// Single-mode capacity `ln((1+g1 P)/(1+ε P))`.
pub fn low_snr_capacity(g1: f64, epsilon: f64, p_total: f64) -> f64 {
    (g1 * p_total).ln_1p() - (epsilon * p_total).ln_1p()
}

pub fn active_mode_count(
    spectrum: &LegitimateSpectrum,
    epsilon: f64,
    p_total: f64,
) -> Result<usize> {
    Ok(power_allocation(spectrum, epsilon, p_total)?
        .active_set
        .len())
}
