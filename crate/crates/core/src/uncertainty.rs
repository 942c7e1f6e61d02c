//! Worst-case channels and compound capacities for rank-constrained and
//! double-sided uncertainty.
//!
//! Internally every eavesdropper bound is a bound on `λ1(W2)` (power gain).
//! Bounds on `σ1(H2)` are squared once, at construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{
    congruence_diag, hermitian_eig, numerical_rank, random_unitary, svd, ComplexMatrix,
    HermitianPSD, SvdResult,
};
use crate::secrecy::{capacity_from_spectrum, CapacityReport, LegitimateSpectrum};

/// Units in which an eavesdropper bound is given.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainConvention {
    /// Bound on `λ1(W2) = σ1(H2)²`.
    Power,
    /// Bound on `σ1(H2)`.
    Voltage,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EavesdropperUncertainty {
    /// Bound on `λ1(W2)`.
    pub epsilon: f64,
    pub rank_bound: Option<usize>,
}

impl EavesdropperUncertainty {
    pub fn new(bound: f64, convention: GainConvention, rank_bound: Option<usize>) -> Result<Self> {
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eavesdropper bound must be finite and nonnegative, got {bound}"
            )));
        }
        if rank_bound == Some(0) {
            return Err(Error::InvalidParameter(
                "rank bound must be at least 1".into(),
            ));
        }
        let epsilon = match convention {
            GainConvention::Power => bound,
            GainConvention::Voltage => bound * bound,
        };
        Ok(Self {
            epsilon,
            rank_bound,
        })
    }

    pub fn from_power(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, GainConvention::Power, None)
    }

    pub fn from_voltage(bound: f64) -> Result<Self> {
        Self::new(bound, GainConvention::Voltage, None)
    }

    pub fn with_rank_bound(mut self, r2: usize) -> Result<Self> {
        if r2 == 0 {
            return Err(Error::InvalidParameter(
                "rank bound must be at least 1".into(),
            ));
        }
        self.rank_bound = Some(r2);
        Ok(self)
    }
}

/// `H1 = H0 + ΔH` with `σ1(ΔH) ≤ epsilon1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegitimateUncertainty {
    pub nominal: ComplexMatrix,
    pub epsilon1: f64,
}

impl LegitimateUncertainty {
    pub fn new(nominal: ComplexMatrix, epsilon1: f64) -> Result<Self> {
        if !(epsilon1 >= 0.0) || !epsilon1.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "legitimate bound must be finite and nonnegative, got {epsilon1}"
            )));
        }
        if nominal.rows() == 0 || nominal.cols() == 0 {
            return Err(Error::DimensionMismatch("nominal channel is empty".into()));
        }
        Ok(Self { nominal, epsilon1 })
    }
}

pub fn worst_eaves_isotropic(n: usize, epsilon: f64) -> HermitianPSD {
    HermitianPSD::scaled_identity(n, epsilon)
}

fn projector(basis: &ComplexMatrix, rank: usize, scale: f64) -> HermitianPSD {
    let mut d = vec![0.0; basis.cols()];
    d[..rank].fill(scale);
    HermitianPSD::from_psd_unchecked(congruence_diag(basis, &d))
}

/// `ε·U1a U1a^+` over the numerically nonzero eigenmodes of `W1`.
pub fn worst_eaves_rank(w1: &HermitianPSD, epsilon: f64) -> Result<HermitianPSD> {
    let eig = hermitian_eig(w1)?;
    let rank = numerical_rank(&eig.eigenvalues);
    Ok(projector(&eig.eigenvectors, rank, epsilon))
}

/// `H0 = V0 Σ0 U0^+` clipped to `V0 (Σ0 - ε1)_+ U0^+`.
pub fn worst_legit(uncert: &LegitimateUncertainty) -> Result<ComplexMatrix> {
    let s = svd(&uncert.nominal)?;
    Ok(clipped(&s, uncert.epsilon1))
}

fn clipped(s: &SvdResult, epsilon1: f64) -> ComplexMatrix {
    let d: Vec<f64> = s
        .singulars
        .iter()
        .map(|&x| (x - epsilon1).max(0.0))
        .collect();
    let core = ComplexMatrix::rect_diag(s.left.rows(), s.right.rows(), &d);
    &(&s.left * &core) * &s.right.adjoint()
}

/// `(σ_i - ε1)²_+`.
pub fn degraded_gains(singulars: &[f64], epsilon1: f64) -> Vec<f64> {
    singulars
        .iter()
        .map(|&s| {
            let d = (s - epsilon1).max(0.0);
            d * d
        })
        .collect()
}

fn check_rank(legit_rank: usize, rank_bound: usize) -> Result<()> {
    if legit_rank > rank_bound {
        return Err(Error::RankExceeded {
            legit_rank,
            rank_bound,
        });
    }
    Ok(())
}

fn required_rank_bound(eaves: &EavesdropperUncertainty) -> Result<usize> {
    eaves.rank_bound.ok_or_else(|| {
        Error::InvalidParameter("this model needs an eavesdropper rank bound".into())
    })
}

/// Capacity when the eavesdropper Gram matrix also has rank at most `r2`.
/// Refused when `rank(W1) > r2`: no saddle point is available in that regime.
pub fn capacity_rank_constrained(
    w1: &HermitianPSD,
    eaves: &EavesdropperUncertainty,
    p_total: f64,
) -> Result<CapacityReport> {
    let r2 = required_rank_bound(eaves)?;
    let eig = hermitian_eig(w1)?;
    let r1 = numerical_rank(&eig.eigenvalues);
    check_rank(r1, r2)?;
    let spectrum = LegitimateSpectrum {
        gains: eig.eigenvalues,
        basis: eig.eigenvectors,
    };
    let mut report = capacity_from_spectrum(&spectrum, eaves.epsilon, p_total)?;
    report.worst_eaves = projector(&spectrum.basis, r1, eaves.epsilon);
    Ok(report)
}

fn degraded_spectrum(s: &SvdResult, epsilon1: f64) -> LegitimateSpectrum {
    let mut gains = degraded_gains(&s.singulars, epsilon1);
    gains.resize(s.right.rows(), 0.0);
    LegitimateSpectrum {
        gains,
        basis: s.right.clone(),
    }
}

/// Capacity when both `H1` (around `H0`) and `W2` are uncertain.
pub fn capacity_double_sided(
    legit: &LegitimateUncertainty,
    eaves: &EavesdropperUncertainty,
    p_total: f64,
) -> Result<CapacityReport> {
    if eaves.rank_bound.is_some() {
        return Err(Error::InvalidParameter(
            "rank-bounded eavesdropper: use the double-sided rank-constrained model".into(),
        ));
    }
    let s = svd(&legit.nominal)?;
    let mut report = capacity_from_spectrum(
        &degraded_spectrum(&s, legit.epsilon1),
        eaves.epsilon,
        p_total,
    )?;
    let h1w = clipped(&s, legit.epsilon1);
    report.worst_legit = Some(HermitianPSD::gram_of(&h1w));
    report.worst_legit_channel = Some(h1w);
    Ok(report)
}

/// Double-sided uncertainty with a rank-bounded eavesdropper.
///
/// Also returns a representative worst eavesdropper channel `V Σ2w U0^+`;
/// `V` is Haar-random, drawn from `seed` when given.
pub fn capacity_double_rank(
    legit: &LegitimateUncertainty,
    eaves: &EavesdropperUncertainty,
    p_total: f64,
    seed: Option<u64>,
) -> Result<CapacityReport> {
    let r2 = required_rank_bound(eaves)?;
    let s = svd(&legit.nominal)?;
    let r1 = numerical_rank(&s.singulars);
    check_rank(r1, r2)?;
    let mut report = capacity_from_spectrum(
        &degraded_spectrum(&s, legit.epsilon1),
        eaves.epsilon,
        p_total,
    )?;
    let h1w = clipped(&s, legit.epsilon1);
    report.worst_legit = Some(HermitianPSD::gram_of(&h1w));
    report.worst_legit_channel = Some(h1w);
    report.worst_eaves = projector(&s.right, r1, eaves.epsilon);

    let n = s.right.rows();
    let v = match seed {
        Some(seed) => random_unitary(n, &mut crate::seeded_rng(seed)),
        None => random_unitary(n, &mut rand::rng()),
    };
    let mut d = vec![0.0; n];
    d[..r1].fill(eaves.epsilon.sqrt());
    let h2w = &(&v * &ComplexMatrix::from_real_diag(&d)) * &s.right.adjoint();
    report.worst_eaves_channel = Some(h2w);
    Ok(report)
}

/// `B = -U diag(min(σ_i, ε)) V^+`, the perturbation with `σ1(B) ≤ ε` that
/// lowers every singular value of `A` by the full amount.
pub fn equality_perturbation(a: &SvdResult, epsilon: f64) -> Result<ComplexMatrix> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be finite and nonnegative, got {epsilon}"
        )));
    }
    let d: Vec<f64> = a.singulars.iter().map(|&s| -s.min(epsilon)).collect();
    let core = ComplexMatrix::rect_diag(a.left.rows(), a.right.rows(), &d);
    Ok(&(&a.left * &core) * &a.right.adjoint())
}
