//! Command-line front end.
//!
//! Every command writes a JSON report (or, for `sweep`, CSV) to `--out` or
//! stdout. Failures print `{"error": kind, "message": ..., "exit_code": n}`
//! to stderr and exit with 2 (parse / io), 3 (validation or precondition) or
//! 4 (no convergence).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dmc::{
    compound_rate_lower_bound, is_degraded, is_less_capable, is_noisier_concavity, leakage_bound,
    quantization_check, quantize_channel, BoundParams, BoundRecord, CompoundDMCFamily,
    DegradedReport, FiniteChannel, InputDistribution, OrderReport, QuantizationReport,
    WiretapState, DEGRADED_TOL,
};
use crate::error::{Error, Result};
use crate::matops::{svd, ComplexMatrix, HermitianPSD, MatrixRepr};
use crate::secrecy::{capacity_isotropic, CapacityReport};
use crate::uncertainty::{
    capacity_double_rank, capacity_double_sided, capacity_rank_constrained, degraded_gains,
    worst_eaves_isotropic, worst_eaves_rank, worst_legit, EavesdropperUncertainty, GainConvention,
    LegitimateUncertainty,
};
use crate::verify::{verify_saddle_with_workers, SaddleReport, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "compound-secrecy",
    version,
    about = "Compound secrecy capacity of Gaussian MIMO wiretap channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compound secrecy capacity, optimal covariance and worst-case channels.
    Capacity(CapacityArgs),
    /// Worst-case legitimate and eavesdropper channels only.
    WorstCase(WorstCaseArgs),
    /// Monte-Carlo check of the saddle-point inequalities.
    VerifySaddle(VerifyArgs),
    /// Capacity over a log-spaced power grid for several eavesdropper bounds (CSV).
    Sweep(SweepArgs),
    /// Compound achievable rate of a finite-alphabet wiretap family.
    DmcRate(DmcRateArgs),
    /// Quantize a finite-alphabet family and check the approximation bounds.
    DmcQuantize(DmcQuantizeArgs),
    /// Degraded / less-capable / noisier tests for every state of a family.
    DmcOrder(DmcOrderArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundKind {
    /// Bound on the largest eigenvalue of the eavesdropper Gram matrix.
    Power,
    /// Bound on the spectral norm of the eavesdropper channel.
    Voltage,
}

impl From<BoundKind> for GainConvention {
    fn from(k: BoundKind) -> Self {
        match k {
            BoundKind::Power => GainConvention::Power,
            BoundKind::Voltage => GainConvention::Voltage,
        }
    }
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    /// Channel file: matrix `{"rows","cols","entries"}` or eigen-form `{"eigenvalues","eigenvectors"}`.
    #[arg(long)]
    pub channel: PathBuf,
    /// Treat a matrix file as the Gram matrix `W1` instead of the channel `H1`.
    #[arg(long)]
    pub gram: bool,
    /// Eavesdropper bound (requires `--eaves-bound-kind`).
    #[arg(long, requires = "eaves_bound_kind")]
    pub eaves_bound: f64,
    #[arg(long, value_enum)]
    pub eaves_bound_kind: Option<BoundKind>,
    /// Spectral-norm bound on the legitimate channel error; the channel file is then the nominal `H0`.
    #[arg(long)]
    pub legit_bound: Option<f64>,
    /// Rank bound on the eavesdropper channel.
    #[arg(long)]
    pub rank_bound: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report rates in bits instead of nats.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long)]
    pub power: f64,
    /// Seed for the representative eavesdropper channel of the rank-bounded double-sided model.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct WorstCaseArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long)]
    pub power: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub gram: bool,
    /// Comma-separated eavesdropper bounds.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        requires = "eaves_bound_kind"
    )]
    pub eaves_bound: Vec<f64>,
    #[arg(long, value_enum)]
    pub eaves_bound_kind: Option<BoundKind>,
    #[arg(long)]
    pub legit_bound: Option<f64>,
    /// `lo:hi:n`, `n` log-spaced points.
    #[arg(long)]
    pub power_range: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DmcRateArgs {
    /// Family file `{"states": [{"legit": [[...]], "eaves": [[...]]}, ...]}`.
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub grid_step: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DmcQuantizeArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub levels: u64,
    /// Random input distributions per mutual-information check.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    /// Also evaluate the error and leakage bounds at this blocklength.
    #[arg(long, requires_all = ["alpha", "beta", "scale"])]
    pub blocklength: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Constant `a` in `L = a n²`.
    #[arg(long)]
    pub scale: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DmcOrderArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parsed channel file.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelFile {
    Matrix(ComplexMatrix),
    Gram(HermitianPSD),
    Family(CompoundDMCFamily),
}

#[derive(Deserialize)]
struct EigenForm {
    eigenvalues: Vec<f64>,
    eigenvectors: MatrixRepr,
}

#[derive(Deserialize)]
struct RawState {
    legit: Vec<Vec<f64>>,
    eaves: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawFamily {
    states: Vec<RawState>,
}

fn parse_as<T: for<'de> Deserialize<'de>>(v: Value, what: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

const UNITARY_TOL: f64 = 1e-10;

/// Read a matrix, eigen-form Hermitian or DMC family file. Syntax errors are
/// [`Error::Parse`]; invariant violations keep their specific error.
pub fn parse_channel_file(path: &Path) -> Result<ChannelFile> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let has = |k: &str| v.get(k).is_some();
    if has("states") {
        let raw: RawFamily = parse_as(v, "family file")?;
        let mut states = Vec::with_capacity(raw.states.len());
        for (s, st) in raw.states.into_iter().enumerate() {
            let tag = |e: Error, which: &str| match e {
                Error::NotStochastic { row, reason } => Error::NotStochastic {
                    row,
                    reason: format!("state {s} {which} channel: {reason}"),
                },
                other => other,
            };
            let legit = FiniteChannel::new(st.legit).map_err(|e| tag(e, "legit"))?;
            let eaves = FiniteChannel::new(st.eaves).map_err(|e| tag(e, "eaves"))?;
            states.push(WiretapState { legit, eaves });
        }
        Ok(ChannelFile::Family(CompoundDMCFamily::new(states)?))
    } else if has("eigenvalues") {
        let e: EigenForm = parse_as(v, "eigen-form file")?;
        let u = ComplexMatrix::try_from(e.eigenvectors)?;
        if !u.is_square() || u.cols() != e.eigenvalues.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvalues for a {}x{} eigenvector matrix",
                e.eigenvalues.len(),
                u.rows(),
                u.cols()
            )));
        }
        let err = (&u.adjoint() * &u).max_abs_diff(&ComplexMatrix::identity(u.cols()));
        if err > UNITARY_TOL {
            return Err(Error::InvalidParameter(format!(
                "eigenvectors are not orthonormal (error {err:e})"
            )));
        }
        Ok(ChannelFile::Gram(HermitianPSD::from_spectrum(
            &u,
            &e.eigenvalues,
        )?))
    } else if has("entries") {
        let repr: MatrixRepr = parse_as(v, "matrix file")?;
        Ok(ChannelFile::Matrix(ComplexMatrix::try_from(repr)?))
    } else {
        Err(Error::Parse(format!(
            "{}: expected a matrix, eigen-form or family object",
            path.display()
        )))
    }
}

fn read_gram(path: &Path, gram: bool) -> Result<HermitianPSD> {
    match parse_channel_file(path)? {
        ChannelFile::Gram(w) => Ok(w),
        ChannelFile::Matrix(m) if gram => HermitianPSD::new(m),
        ChannelFile::Matrix(h) => Ok(HermitianPSD::gram_of(&h)),
        ChannelFile::Family(_) => Err(Error::InvalidParameter(
            "expected a MIMO channel, found a DMC family".into(),
        )),
    }
}

fn read_nominal(path: &Path) -> Result<ComplexMatrix> {
    match parse_channel_file(path)? {
        ChannelFile::Matrix(m) => Ok(m),
        _ => Err(Error::InvalidParameter(
            "the legitimate uncertainty model needs a channel matrix file".into(),
        )),
    }
}

fn read_family(path: &Path) -> Result<CompoundDMCFamily> {
    match parse_channel_file(path)? {
        ChannelFile::Family(f) => Ok(f),
        _ => Err(Error::InvalidParameter("expected a DMC family file".into())),
    }
}

fn nonnegative(name: &str, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite and nonnegative, got {x}"
        )));
    }
    Ok(x)
}

fn eaves_uncertainty(
    bound: f64,
    kind: Option<BoundKind>,
    rank: Option<usize>,
) -> Result<EavesdropperUncertainty> {
    let kind = kind.ok_or_else(|| {
        Error::InvalidParameter("--eaves-bound-kind is required with --eaves-bound".into())
    })?;
    EavesdropperUncertainty::new(nonnegative("--eaves-bound", bound)?, kind.into(), rank)
}

/// Uncertainty model selected by the flags.
enum Model {
    Isotropic {
        w1: HermitianPSD,
        eaves: EavesdropperUncertainty,
    },
    RankConstrained {
        w1: HermitianPSD,
        eaves: EavesdropperUncertainty,
    },
    DoubleSided {
        legit: LegitimateUncertainty,
        eaves: EavesdropperUncertainty,
    },
    DoubleRank {
        legit: LegitimateUncertainty,
        eaves: EavesdropperUncertainty,
    },
}

impl Model {
    fn from_args(a: &ChannelArgs) -> Result<Self> {
        let eaves = eaves_uncertainty(a.eaves_bound, a.eaves_bound_kind, a.rank_bound)?;
        Ok(match (a.legit_bound, a.rank_bound) {
            (None, None) => Model::Isotropic {
                w1: read_gram(&a.channel, a.gram)?,
                eaves,
            },
            (None, Some(_)) => Model::RankConstrained {
                w1: read_gram(&a.channel, a.gram)?,
                eaves,
            },
            (Some(e1), r) => {
                if a.gram {
                    return Err(Error::InvalidParameter(
                        "--legit-bound needs the channel matrix, not --gram".into(),
                    ));
                }
                let legit = LegitimateUncertainty::new(
                    read_nominal(&a.channel)?,
                    nonnegative("--legit-bound", e1)?,
                )?;
                if r.is_some() {
                    Model::DoubleRank { legit, eaves }
                } else {
                    Model::DoubleSided { legit, eaves }
                }
            }
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Model::Isotropic { .. } => "isotropic",
            Model::RankConstrained { .. } => "rank_constrained",
            Model::DoubleSided { .. } => "double_sided",
            Model::DoubleRank { .. } => "double_rank",
        }
    }
}

fn need_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::InvalidParameter(format!("--seed is required for {what}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Nats,
    Bits,
}

impl Units {
    fn of(bits: bool) -> Self {
        if bits {
            Units::Bits
        } else {
            Units::Nats
        }
    }

    fn convert(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

#[derive(Serialize)]
struct CapacityOutput {
    command: &'static str,
    model: &'static str,
    units: Units,
    p_total: f64,
    #[serde(flatten)]
    report: CapacityReport,
}

#[derive(Serialize)]
struct WorstCaseOutput {
    command: &'static str,
    model: &'static str,
    /// Bound on `λ1(W2)`.
    epsilon: f64,
    worst_eaves: HermitianPSD,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_eaves_channel: Option<ComplexMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_legit: Option<HermitianPSD>,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_legit_channel: Option<ComplexMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    degraded_gains: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct SaddleOutput {
    command: &'static str,
    units: Units,
    p_total: f64,
    #[serde(flatten)]
    report: SaddleReport,
}

#[derive(Serialize)]
struct DmcRateOutput {
    command: &'static str,
    units: Units,
    grid_step: f64,
    rate: f64,
    argmax: InputDistribution,
}

#[derive(Serialize)]
struct QuantizedState {
    legit: FiniteChannel,
    eaves: FiniteChannel,
    check: QuantizationReport,
}

#[derive(Serialize)]
struct DmcQuantizeOutput {
    command: &'static str,
    levels: u64,
    seed: u64,
    all_additive_hold: bool,
    all_mutual_information_hold: bool,
    all_multiplicative_hold: bool,
    states: Vec<QuantizedState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounds: Option<BoundRecord>,
}

#[derive(Serialize)]
struct StateOrder {
    degraded: DegradedReport,
    less_capable: OrderReport,
    noisier: OrderReport,
}

#[derive(Serialize)]
struct DmcOrderOutput {
    command: &'static str,
    seed: u64,
    states: Vec<StateOrder>,
}

/// Result of a command: the artifact text and where it goes.
pub struct Artifact {
    pub text: String,
    pub out: Option<PathBuf>,
}

fn json<T: Serialize>(v: &T, out: &Option<PathBuf>) -> Result<Artifact> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    Ok(Artifact {
        text,
        out: out.clone(),
    })
}

fn convert_report(mut r: CapacityReport, units: Units) -> CapacityReport {
    r.capacity = units.convert(r.capacity);
    r.high_snr_asymptote = units.convert(r.high_snr_asymptote);
    r
}

fn model_capacity(model: &Model, p_total: f64, seed: Option<u64>) -> Result<CapacityReport> {
    match model {
        Model::Isotropic { w1, eaves } => capacity_isotropic(w1, eaves.epsilon, p_total),
        Model::RankConstrained { w1, eaves } => capacity_rank_constrained(w1, eaves, p_total),
        Model::DoubleSided { legit, eaves } => capacity_double_sided(legit, eaves, p_total),
        Model::DoubleRank { legit, eaves } => capacity_double_rank(
            legit,
            eaves,
            p_total,
            Some(need_seed(seed, "the rank-bounded double-sided model")?),
        ),
    }
}

fn run_capacity(a: &CapacityArgs) -> Result<Artifact> {
    let model = Model::from_args(&a.channel)?;
    let p = nonnegative("--power", a.power)?;
    let units = Units::of(a.output.bits);
    let report = convert_report(model_capacity(&model, p, a.seed)?, units);
    json(
        &CapacityOutput {
            command: "capacity",
            model: model.name(),
            units,
            p_total: p,
            report,
        },
        &a.output.out,
    )
}

fn run_worst_case(a: &WorstCaseArgs) -> Result<Artifact> {
    let model = Model::from_args(&a.channel)?;
    let mut out = WorstCaseOutput {
        command: "worst-case",
        model: model.name(),
        epsilon: 0.0,
        worst_eaves: HermitianPSD::zeros(1),
        worst_eaves_channel: None,
        worst_legit: None,
        worst_legit_channel: None,
        degraded_gains: None,
    };
    match &model {
        Model::Isotropic { w1, eaves } => {
            out.epsilon = eaves.epsilon;
            out.worst_eaves = worst_eaves_isotropic(w1.dim(), eaves.epsilon);
        }
        Model::RankConstrained { w1, eaves } => {
            // the capacity call enforces the rank precondition
            let rep = capacity_rank_constrained(w1, eaves, 0.0)?;
            out.epsilon = eaves.epsilon;
            out.worst_eaves = rep.worst_eaves;
            debug_assert_eq!(out.worst_eaves, worst_eaves_rank(w1, eaves.epsilon)?);
        }
        Model::DoubleSided { legit, eaves } | Model::DoubleRank { legit, eaves } => {
            let h1w = worst_legit(legit)?;
            let s = svd(&legit.nominal)?;
            out.epsilon = eaves.epsilon;
            out.degraded_gains = Some(degraded_gains(&s.singulars, legit.epsilon1));
            out.worst_legit = Some(HermitianPSD::gram_of(&h1w));
            out.worst_legit_channel = Some(h1w);
            if matches!(model, Model::DoubleRank { .. }) {
                let rep = model_capacity(&model, 0.0, a.seed)?;
                out.worst_eaves = rep.worst_eaves;
                out.worst_eaves_channel = rep.worst_eaves_channel;
            } else {
                out.worst_eaves = worst_eaves_isotropic(legit.nominal.cols(), eaves.epsilon);
            }
        }
    }
    json(&out, &a.output.out)
}

fn run_verify(a: &VerifyArgs) -> Result<Artifact> {
    let model = Model::from_args(&a.channel)?;
    let p = nonnegative("--power", a.power)?;
    let scenario = match model {
        Model::Isotropic { w1, eaves } => Scenario::Isotropic {
            w1,
            eps_power: eaves.epsilon,
        },
        Model::RankConstrained { w1, eaves } => Scenario::RankConstrained { w1, eaves },
        Model::DoubleSided { legit, eaves } => Scenario::DoubleSided {
            legit,
            eps_power: eaves.epsilon,
        },
        Model::DoubleRank { legit, eaves } => Scenario::DoubleRank { legit, eaves },
    };
    let units = Units::of(a.output.bits);
    let mut report = verify_saddle_with_workers(&scenario, p, a.samples, a.seed, a.workers)?;
    report.capacity = units.convert(report.capacity);
    report.max_left_violation = units.convert(report.max_left_violation);
    report.max_right_violation = units.convert(report.max_right_violation);
    report.attained_gap = units.convert(report.attained_gap);
    json(
        &SaddleOutput {
            command: "verify-saddle",
            units,
            p_total: p,
            report,
        },
        &a.output.out,
    )
}

/// `lo:hi:n` with `n` points spaced evenly in `log(P)`.
pub fn parse_power_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Parse(format!("power range {spec:?} is not lo:hi:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "power range needs 0 < lo ≤ hi and n ≥ 1, got {spec:?}"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|k| match k {
            0 => lo,
            k if k == n - 1 => hi,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub p_total: f64,
    pub epsilon: f64,
    pub capacity: f64,
    pub active_modes: usize,
    pub water_level: f64,
}

/// Capacity on every `(P_T, ε)` pair, one thread per `ε`, rows sorted by
/// `(ε, P_T)`. Bounds are on `λ1(W2)`.
pub fn sweep_rows(
    w1: Option<&HermitianPSD>,
    legit: Option<&LegitimateUncertainty>,
    epsilons: &[f64],
    powers: &[f64],
) -> Result<Vec<SweepRow>> {
    let results: Vec<Result<Vec<SweepRow>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = epsilons
            .iter()
            .map(|&eps| {
                scope.spawn(move || {
                    powers
                        .iter()
                        .map(|&p| {
                            let rep = match (w1, legit) {
                                (_, Some(l)) => capacity_double_sided(
                                    l,
                                    &EavesdropperUncertainty::from_power(eps)?,
                                    p,
                                )?,
                                (Some(w), None) => capacity_isotropic(w, eps, p)?,
                                (None, None) => unreachable!("sweep needs a channel"),
                            };
                            Ok(SweepRow {
                                p_total: p,
                                epsilon: eps,
                                capacity: rep.capacity,
                                active_modes: rep.active_count,
                                water_level: rep.allocation.water_level,
                            })
                        })
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| {
        a.epsilon
            .total_cmp(&b.epsilon)
            .then(a.p_total.total_cmp(&b.p_total))
    });
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow], units: Units) -> String {
    let cap = match units {
        Units::Nats => "capacity_nats",
        Units::Bits => "capacity_bits",
    };
    let mut s = format!("p_total,epsilon,{cap},active_modes,water_level\n");
    for r in rows {
        s.push_str(&format!(
            "{:?},{:?},{:?},{},{:?}\n",
            r.p_total,
            r.epsilon,
            units.convert(r.capacity),
            r.active_modes,
            r.water_level
        ));
    }
    s
}

fn run_sweep(a: &SweepArgs) -> Result<Artifact> {
    let kind = a.eaves_bound_kind.ok_or_else(|| {
        Error::InvalidParameter("--eaves-bound-kind is required with --eaves-bound".into())
    })?;
    let mut eps = Vec::with_capacity(a.eaves_bound.len());
    for &b in &a.eaves_bound {
        eps.push(
            EavesdropperUncertainty::new(nonnegative("--eaves-bound", b)?, kind.into(), None)?
                .epsilon,
        );
    }
    let powers = parse_power_range(&a.power_range)?;
    let rows = match a.legit_bound {
        Some(e1) => {
            let legit = LegitimateUncertainty::new(
                read_nominal(&a.channel)?,
                nonnegative("--legit-bound", e1)?,
            )?;
            sweep_rows(None, Some(&legit), &eps, &powers)?
        }
        None => sweep_rows(Some(&read_gram(&a.channel, a.gram)?), None, &eps, &powers)?,
    };
    Ok(Artifact {
        text: sweep_csv(&rows, Units::of(a.output.bits)),
        out: a.output.out.clone(),
    })
}

fn run_dmc_rate(a: &DmcRateArgs) -> Result<Artifact> {
    let fam = read_family(&a.channel)?;
    let units = Units::of(a.output.bits);
    let r = compound_rate_lower_bound(&fam, a.grid_step)?;
    json(
        &DmcRateOutput {
            command: "dmc-rate",
            units,
            grid_step: a.grid_step,
            rate: units.convert(r.rate),
            argmax: r.argmax,
        },
        &a.output.out,
    )
}

fn run_dmc_quantize(a: &DmcQuantizeArgs) -> Result<Artifact> {
    let fam = read_family(&a.channel)?;
    let (ys, zs) = (fam.y_size(), fam.z_size());
    let mut states = Vec::new();
    for (i, st) in fam.states().iter().enumerate() {
        let legit = quantize_channel(&st.legit, a.levels, ys, zs)?;
        let eaves = quantize_channel(&st.eaves, a.levels, ys, zs)?;
        let check = quantization_check(
            (&st.legit, &st.eaves),
            (&legit, &eaves),
            a.levels,
            a.samples,
            a.seed.wrapping_add(i as u64),
        )?;
        states.push(QuantizedState {
            legit,
            eaves,
            check,
        });
    }
    let bounds = match a.blocklength {
        Some(n) => Some(leakage_bound(&BoundParams {
            n,
            levels: a.levels,
            x_size: fam.x_size(),
            y_size: ys,
            z_size: zs,
            alpha: a.alpha.unwrap_or(0.0),
            beta: a.beta.unwrap_or(0.0),
            a: a.scale.unwrap_or(0.0),
        })?),
        None => None,
    };
    json(
        &DmcQuantizeOutput {
            command: "dmc-quantize",
            levels: a.levels,
            seed: a.seed,
            all_additive_hold: states.iter().all(|s| s.check.additive_holds),
            all_mutual_information_hold: states.iter().all(|s| s.check.mutual_information_holds),
            all_multiplicative_hold: states.iter().all(|s| s.check.multiplicative_holds),
            states,
            bounds,
        },
        &a.output.out,
    )
}

fn run_dmc_order(a: &DmcOrderArgs) -> Result<Artifact> {
    let fam = read_family(&a.channel)?;
    let mut states = Vec::new();
    for (i, st) in fam.states().iter().enumerate() {
        let seed = a.seed.wrapping_add(i as u64);
        states.push(StateOrder {
            degraded: is_degraded(&st.legit, &st.eaves, DEGRADED_TOL)?,
            less_capable: is_less_capable(&st.legit, &st.eaves, a.samples, seed)?,
            noisier: is_noisier_concavity(&st.legit, &st.eaves, a.samples, seed)?,
        });
    }
    json(
        &DmcOrderOutput {
            command: "dmc-order",
            seed: a.seed,
            states,
        },
        &a.output.out,
    )
}

pub fn run(cli: &Cli) -> Result<Artifact> {
    match &cli.command {
        Command::Capacity(a) => run_capacity(a),
        Command::WorstCase(a) => run_worst_case(a),
        Command::VerifySaddle(a) => run_verify(a),
        Command::Sweep(a) => run_sweep(a),
        Command::DmcRate(a) => run_dmc_rate(a),
        Command::DmcQuantize(a) => run_dmc_quantize(a),
        Command::DmcOrder(a) => run_dmc_order(a),
    }
}

#[derive(Serialize)]
struct ErrorObject<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

fn report_error(e: &Error) -> i32 {
    let code = e.exit_code();
    let obj = ErrorObject {
        error: e.kind(),
        message: e.to_string(),
        exit_code: code,
    };
    eprintln!(
        "{}",
        serde_json::to_string(&obj).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", e.kind()))
    );
    code
}

/// Parse `args`, run the command and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return 0;
        }
        Err(e) => return report_error(&Error::Parse(e.to_string().trim_end().to_string())),
    };
    let artifact = match run(&cli) {
        Ok(a) => a,
        Err(e) => return report_error(&e),
    };
    let written = match &artifact.out {
        Some(path) => std::fs::write(path, &artifact.text)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{}", artifact.text);
            Ok(())
        }
    };
    match written {
        Ok(()) => 0,
        Err(e) => report_error(&e),
    }
}
