//! Spatially correlated MIMO channels under the Kronecker model
//! `H = R_rx^{1/2} W R_tx^{H/2}` with exponential correlation matrices.
//!
//! The square roots are lower Cholesky factors. Coloring a Nakagami-entry
//! matrix does not preserve Nakagami marginals when `m != 1`; that kind is
//! still offered because it is the direct composition of the two models.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::{complex_gaussian_matrix, nakagami_entry_matrix, NakagamiParams, RngStream};
use crate::matkernel::{cholesky, ComplexMatrix, HermitianMatrix};

/// Largest usable correlation coefficient; `rho = 1` makes `R` singular.
pub const RHO_MAX: f64 = 0.999;

/// Exponential correlation matrix `R[i][j] = rho^|i-j|` with its Cholesky root.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    rho: f64,
    matrix: HermitianMatrix,
    root: ComplexMatrix,
}

impl CorrelationMatrix {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    /// Lower Cholesky factor `L` with `L L^H = R`.
    pub fn root(&self) -> &ComplexMatrix {
        &self.root
    }

    pub fn is_identity(&self) -> bool {
        self.rho == 0.0 || self.n() == 1
    }
}

pub fn exp_correlation(n: usize, rho: f64) -> Result<CorrelationMatrix> {
    if n == 0 {
        return Err(Error::InvalidMatrix("correlation matrix needs n >= 1".into()));
    }
    if !(0.0..=RHO_MAX).contains(&rho) {
        return Err(Error::RhoOutOfRange { rho, max: RHO_MAX });
    }
    let data = (0..n)
        .flat_map(|i| (0..n).map(move |j| Complex64::new(rho.powi(i.abs_diff(j) as i32), 0.0)))
        .collect();
    let matrix = HermitianMatrix::new(ComplexMatrix::new(n, n, data)?)?;
    let root = cholesky(&matrix)?;
    Ok(CorrelationMatrix { rho, matrix, root })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    /// CN(0, 1) inner matrix, Kronecker-colored.
    #[default]
    GaussianKronecker,
    /// Nakagami-m envelopes with uniform phases, Kronecker-colored.
    NakagamiKronecker,
}

impl ChannelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelKind::GaussianKronecker => "gaussian-kronecker",
            ChannelKind::NakagamiKronecker => "nakagami-kronecker",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-kronecker" => Ok(ChannelKind::GaussianKronecker),
            "nakagami-kronecker" => Ok(ChannelKind::NakagamiKronecker),
            other => Err(Error::config("kind", format!("unknown channel kind `{other}`"))),
        }
    }
}

/// One channel draw: the uncorrelated inner matrix and the colored channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub inner: ComplexMatrix,
    pub h: ComplexMatrix,
    pub kind: ChannelKind,
    pub params: NakagamiParams,
}

/// `rrx.root * inner * rtx.root^H`.
///
/// Identity correlation at either end is skipped, so `h` is bit-identical to
/// `inner` when both ends are uncorrelated.
pub fn color(inner: &ComplexMatrix, rtx: &CorrelationMatrix, rrx: &CorrelationMatrix) -> Result<ComplexMatrix> {
    if rrx.n() != inner.rows() || rtx.n() != inner.cols() {
        return Err(Error::DimensionMismatch(format!(
            "inner matrix is {}x{} but correlation sizes are rx={} tx={}",
            inner.rows(),
            inner.cols(),
            rrx.n(),
            rtx.n()
        )));
    }
    let left = if rrx.is_identity() {
        inner.clone()
    } else {
        rrx.root.mul(inner)?
    };
    if rtx.is_identity() {
        Ok(left)
    } else {
        left.mul(&rtx.root.adjoint())
    }
}

/// Colors a Gaussian inner draw into a [`ChannelRealization`].
pub fn build_channel(
    inner: ComplexMatrix,
    rtx: &CorrelationMatrix,
    rrx: &CorrelationMatrix,
) -> Result<ChannelRealization> {
    let h = color(&inner, rtx, rrx)?;
    Ok(ChannelRealization {
        inner,
        h,
        kind: ChannelKind::GaussianKronecker,
        params: NakagamiParams::rayleigh(),
    })
}

/// Channel geometry and fading statistics with cached correlation roots.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    pub nt: usize,
    pub nr: usize,
    pub kind: ChannelKind,
    pub params: NakagamiParams,
    pub rtx: CorrelationMatrix,
    pub rrx: CorrelationMatrix,
}

impl ChannelModel {
    /// Entries use unit mean power (`Ω = 1`); SNR is applied by the receivers.
    pub fn new(nt: usize, nr: usize, kind: ChannelKind, m: f64, rho_tx: f64, rho_rx: f64) -> Result<Self> {
        Ok(Self {
            nt,
            nr,
            kind,
            params: NakagamiParams::new(m, 1.0)?,
            rtx: exp_correlation(nt, rho_tx)?,
            rrx: exp_correlation(nr, rho_rx)?,
        })
    }

    /// Same model with both ends set to `rho`.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Ok(Self {
            rtx: exp_correlation(self.nt, rho)?,
            rrx: exp_correlation(self.nr, rho)?,
            ..self.clone()
        })
    }

    /// Uncorrelated inner matrix drawn from `rng` per the channel kind.
    pub fn draw_inner(&self, rng: &mut RngStream) -> Result<ComplexMatrix> {
        match self.kind {
            ChannelKind::GaussianKronecker => complex_gaussian_matrix(self.nr, self.nt, rng),
            ChannelKind::NakagamiKronecker => nakagami_entry_matrix(self.params, self.nr, self.nt, rng),
        }
    }

    pub fn realize(&self, inner: ComplexMatrix) -> Result<ChannelRealization> {
        let h = color(&inner, &self.rtx, &self.rrx)?;
        Ok(ChannelRealization {
            inner,
            h,
            kind: self.kind,
            params: self.params,
        })
    }
}

/// Draw for `(seed, trial)` on the trial's primary stream.
pub fn draw_realization(model: &ChannelModel, seed: u64, trial: u64) -> Result<ChannelRealization> {
    let mut rng = RngStream::for_trial(seed, trial, 0);
    model.realize(model.draw_inner(&mut rng)?)
}
