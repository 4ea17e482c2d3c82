//! Linear ZF and MMSE receivers: per-stream post-processing SNR/SINR and
//! capacities for a given channel matrix.
//!
//! ZF stream `k` sees `snr_eff / [(H^H H)^-1]_kk`. MMSE stream `k` sees
//! `1 / [(I + snr_eff H^H H)^-1]_kk - 1`. Both capacities are
//! `log2(1 + sinr)` per stream, summed over the `N_t` streams.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{color, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::matkernel::{condition_number_1, herm_gram, inv_pd, inv_pd_diag, ComplexMatrix, HermitianMatrix};

/// Draws whose Gram matrix has a larger 1-norm condition number are treated
/// as singular.
pub const MAX_CONDITION: f64 = 1e12;
/// Negative MMSE SINR above this is roundoff and is clamped to zero.
pub const SINR_CLAMP: f64 = -1e-12;
/// Minimum effective SNR for the high-SNR MMSE expansion.
pub const HIGH_SNR_MIN: f64 = 10.0;

/// How the nominal SNR is shared between transmit antennas.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerSplit {
    /// Total power is split evenly: each stream gets `SNR / N_t`.
    #[default]
    PerStreamTotal,
    /// Each stream gets the full `SNR`.
    PerStreamFull,
}

impl PowerSplit {
    pub fn as_str(&self) -> &'static str {
        match self {
            PowerSplit::PerStreamTotal => "per-stream-total",
            PowerSplit::PerStreamFull => "per-stream-full",
        }
    }
}

impl fmt::Display for PowerSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PowerSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-stream-total" => Ok(PowerSplit::PerStreamTotal),
            "per-stream-full" => Ok(PowerSplit::PerStreamFull),
            other => Err(Error::config("power_split", format!("unknown power split `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrSpec {
    snr_db: f64,
    snr_linear: f64,
    power_split: PowerSplit,
}

impl SnrSpec {
    pub fn from_db(snr_db: f64, power_split: PowerSplit) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::DomainError(format!("SNR must be finite, got {snr_db} dB")));
        }
        Ok(Self {
            snr_db,
            snr_linear: 10f64.powf(snr_db / 10.0),
            power_split,
        })
    }

    pub fn from_linear(snr_linear: f64, power_split: PowerSplit) -> Result<Self> {
        if !(snr_linear > 0.0) || !snr_linear.is_finite() {
            return Err(Error::DomainError(format!(
                "linear SNR must be positive, got {snr_linear}"
            )));
        }
        Ok(Self {
            snr_db: 10.0 * snr_linear.log10(),
            snr_linear,
            power_split,
        })
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn snr_linear(&self) -> f64 {
        self.snr_linear
    }

    pub fn power_split(&self) -> PowerSplit {
        self.power_split
    }

    /// Per-stream SNR for `nt` transmit streams.
    pub fn effective(&self, nt: usize) -> f64 {
        match self.power_split {
            PowerSplit::PerStreamTotal => self.snr_linear / nt as f64,
            PowerSplit::PerStreamFull => self.snr_linear,
        }
    }
}

/// Per-stream SINR (linear) and capacity (bits/s/Hz) for one receiver.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamCapacities {
    pub sinr: Vec<f64>,
    pub capacity: Vec<f64>,
}

impl StreamCapacities {
    fn from_sinr(sinr: Vec<f64>) -> Self {
        let capacity = sinr.iter().map(|s| s.ln_1p() / std::f64::consts::LN_2).collect();
        Self { sinr, capacity }
    }

    pub fn total(&self) -> f64 {
        self.capacity.iter().sum()
    }
}

/// ZF and MMSE results for the same channel and SNR.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamMetrics {
    pub zf: StreamCapacities,
    pub mmse: StreamCapacities,
}

impl StreamMetrics {
    pub fn zf_total(&self) -> f64 {
        self.zf.total()
    }

    pub fn mmse_total(&self) -> f64 {
        self.mmse.total()
    }
}

/// Gram matrix of a channel with the diagonal of its inverse, reusable
/// across SNR points.
#[derive(Clone, Debug)]
pub struct LinearReceivers {
    gram: HermitianMatrix,
    inv_diag: Vec<f64>,
    condition: f64,
}

impl LinearReceivers {
    /// Fails with `RankDeficient` when `N_r < N_t` or `H^H H` is not
    /// numerically positive definite.
    pub fn new(h: &ComplexMatrix) -> Result<Self> {
        if h.rows() < h.cols() {
            return Err(Error::RankDeficient);
        }
        let gram = herm_gram(h);
        let inverse = inv_pd(&gram).map_err(|_| Error::RankDeficient)?;
        let condition = condition_number_1(&gram, &inverse);
        let inv_diag = (0..gram.n()).map(|k| inverse[(k, k)].re).collect();
        Ok(Self {
            gram,
            inv_diag,
            condition,
        })
    }

    pub fn streams(&self) -> usize {
        self.gram.n()
    }

    pub fn gram(&self) -> &HermitianMatrix {
        &self.gram
    }

    /// `[(H^H H)^-1]_kk` for every stream.
    pub fn inverse_diagonal(&self) -> &[f64] {
        &self.inv_diag
    }

    /// 1-norm condition number of `H^H H`.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn is_well_conditioned(&self) -> bool {
        self.condition.is_finite() && self.condition <= MAX_CONDITION
    }

    pub fn zf(&self, snr: &SnrSpec) -> StreamCapacities {
        let rho = snr.effective(self.streams());
        StreamCapacities::from_sinr(self.inv_diag.iter().map(|d| rho / d).collect())
    }

    pub fn mmse(&self, snr: &SnrSpec) -> Result<StreamCapacities> {
        mmse_from_gram(&self.gram, snr)
    }

    pub fn metrics(&self, snr: &SnrSpec) -> Result<StreamMetrics> {
        Ok(StreamMetrics {
            zf: self.zf(snr),
            mmse: self.mmse(snr)?,
        })
    }

    /// First-order Neumann approximation of the total MMSE capacity.
    pub fn mmse_highsnr(&self, snr: &SnrSpec) -> Result<f64> {
        let rho = snr.effective(self.streams());
        if rho < HIGH_SNR_MIN {
            return Err(Error::DomainError(format!(
                "high-SNR expansion needs an effective SNR of at least {HIGH_SNR_MIN}, got {rho}"
            )));
        }
        let mut total = 0.0;
        for (k, d) in self.inv_diag.iter().enumerate() {
            let b = d / rho;
            if b >= 1.0 {
                return Err(Error::ApproximationInvalid { stream: k, value: b });
            }
            total += (rho / d).log2() - (1.0 - b).log2();
        }
        Ok(total)
    }
}

fn mmse_from_gram(gram: &HermitianMatrix, snr: &SnrSpec) -> Result<StreamCapacities> {
    let rho = snr.effective(gram.n());
    let d = inv_pd_diag(&gram.scale_and_shift(rho, 1.0))?;
    let sinr = d
        .iter()
        .map(|dk| {
            let s = 1.0 / dk - 1.0;
            debug_assert!(s > SINR_CLAMP, "MMSE SINR {s} below clamp");
            s.max(0.0)
        })
        .collect();
    Ok(StreamCapacities::from_sinr(sinr))
}

/// Per-stream ZF SNR and capacity.
pub fn zf_stream_capacities(h: &ComplexMatrix, snr: &SnrSpec) -> Result<StreamCapacities> {
    Ok(LinearReceivers::new(h)?.zf(snr))
}

/// Per-stream MMSE SINR and capacity. Works for rank-deficient channels.
pub fn mmse_stream_capacities(h: &ComplexMatrix, snr: &SnrSpec) -> Result<StreamCapacities> {
    mmse_from_gram(&herm_gram(h), snr)
}

/// Both receivers on the same channel.
pub fn stream_metrics(h: &ComplexMatrix, snr: &SnrSpec) -> Result<StreamMetrics> {
    LinearReceivers::new(h)?.metrics(snr)
}

/// Total MMSE capacity under the high-SNR expansion
/// `(I + X)^-1 ≈ X^-1 (I - X^-1)` evaluated on the diagonal.
pub fn mmse_highsnr_capacity(h: &ComplexMatrix, snr: &SnrSpec) -> Result<f64> {
    LinearReceivers::new(h)?.mmse_highsnr(snr)
}

/// Total MMSE capacity minus total ZF capacity.
pub fn capacity_gap(h: &ComplexMatrix, snr: &SnrSpec) -> Result<f64> {
    let m = stream_metrics(h, snr)?;
    Ok(m.mmse_total() - m.zf_total())
}

fn colored_pair(
    inner: &ComplexMatrix,
    rtx: &CorrelationMatrix,
    rrx: &CorrelationMatrix,
) -> Result<(LinearReceivers, LinearReceivers)> {
    if inner.rows() != inner.cols() {
        return Err(Error::DimensionMismatch(format!(
            "correlated/uncorrelated comparison needs a square channel, got {}x{}",
            inner.rows(),
            inner.cols()
        )));
    }
    let colored = color(inner, rtx, rrx)?;
    Ok((LinearReceivers::new(&colored)?, LinearReceivers::new(inner)?))
}

/// Correlated over uncorrelated total ZF capacity on the same inner draw.
pub fn zf_corr_ratio(
    inner: &ComplexMatrix,
    rtx: &CorrelationMatrix,
    rrx: &CorrelationMatrix,
    snr: &SnrSpec,
) -> Result<f64> {
    let (cor, uncor) = colored_pair(inner, rtx, rrx)?;
    Ok(cor.zf(snr).total() / uncor.zf(snr).total())
}

/// Uncorrelated minus correlated total MMSE capacity on the same inner draw.
pub fn mmse_corr_delta(
    inner: &ComplexMatrix,
    rtx: &CorrelationMatrix,
    rrx: &CorrelationMatrix,
    snr: &SnrSpec,
) -> Result<f64> {
    let (cor, uncor) = colored_pair(inner, rtx, rrx)?;
    Ok(uncor.mmse(snr)?.total() - cor.mmse(snr)?.total())
}
