//! Trial ensembles over SNR and correlation grids.
//!
//! Trial `t` always draws from stream `(seed, t)`, so the same channel is
//! reused at every SNR point and (for correlation sweeps) the same inner
//! matrix is colored at every `rho`. ZF and MMSE are evaluated on the same
//! realization. Draws whose Gram matrix is numerically singular are redrawn
//! from the trial's next sub-stream and counted.
//!
//! Trials may run on a rayon pool; results are collected in trial order, so
//! output does not depend on the thread count.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelKind, ChannelModel, ChannelRealization, RHO_MAX};
use crate::error::{Error, Result};
use crate::fading::{RngStream, MIN_SHAPE};
use crate::receivers::{LinearReceivers, PowerSplit, SnrSpec};

/// Redraw budget per trial before giving up.
pub const MAX_ATTEMPTS: u32 = 64;
/// Largest antenna count accepted by configuration.
pub const MAX_ANTENNAS: usize = 32;
/// Trial indices share the stream id with the attempt counter.
pub const MAX_TRIALS: u64 = 1 << 40;

/// Flat scenario description; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub nt: usize,
    pub nr: usize,
    pub m: f64,
    pub kind: ChannelKind,
    /// Shorthand that sets both `rho_tx` and `rho_rx`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub rho_tx: f64,
    pub rho_rx: f64,
    pub snr_db_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub power_split: PowerSplit,
    pub cdf_level: f64,
    pub cdf_points: usize,
    pub pdf_bins: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            nt: 2,
            nr: 2,
            m: 1.0,
            kind: ChannelKind::GaussianKronecker,
            rho: None,
            rho_tx: 0.0,
            rho_rx: 0.0,
            snr_db_grid: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            rho_grid: vec![0.0, 0.2, 0.4, 0.6, 0.8, 0.95],
            trials: 10_000,
            seed: 1,
            power_split: PowerSplit::PerStreamTotal,
            cdf_level: 0.8,
            cdf_points: 200,
            pdf_bins: 50,
        }
    }
}

fn check_rho(field: &str, rho: f64, warnings: &mut Vec<String>) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::config(field, format!("{rho} is outside [0, 1]")));
    }
    if rho > RHO_MAX {
        warnings.push(format!(
            "{field}: {rho} clamped to {RHO_MAX} (correlation matrix is singular at 1)"
        ));
        return Ok(RHO_MAX);
    }
    Ok(rho)
}

impl ScenarioConfig {
    /// Checks every field and returns the normalized config (shorthand
    /// expanded, `rho` values above [`RHO_MAX`] clamped) with warnings for
    /// each adjustment.
    pub fn normalized(&self) -> Result<(ScenarioConfig, Vec<String>)> {
        let mut cfg = self.clone();
        let mut warnings = Vec::new();
        if cfg.nt == 0 || cfg.nt > MAX_ANTENNAS {
            return Err(Error::config(
                "nt",
                format!("must be in 1..={MAX_ANTENNAS}, got {}", cfg.nt),
            ));
        }
        if cfg.nr == 0 || cfg.nr > MAX_ANTENNAS {
            return Err(Error::config(
                "nr",
                format!("must be in 1..={MAX_ANTENNAS}, got {}", cfg.nr),
            ));
        }
        if cfg.nr < cfg.nt {
            return Err(Error::config(
                "nr",
                format!("ZF needs nr >= nt, got nr={} nt={}", cfg.nr, cfg.nt),
            ));
        }
        if !(cfg.m >= MIN_SHAPE) || !cfg.m.is_finite() {
            return Err(Error::config(
                "m",
                format!("fading figure must be >= {MIN_SHAPE}, got {}", cfg.m),
            ));
        }
        if let Some(rho) = cfg.rho {
            let rho = check_rho("rho", rho, &mut warnings)?;
            cfg.rho = Some(rho);
            cfg.rho_tx = rho;
            cfg.rho_rx = rho;
        }
        cfg.rho_tx = check_rho("rho_tx", cfg.rho_tx, &mut warnings)?;
        cfg.rho_rx = check_rho("rho_rx", cfg.rho_rx, &mut warnings)?;
        if cfg.snr_db_grid.is_empty() {
            return Err(Error::config("snr_db_grid", "must not be empty"));
        }
        if let Some(bad) = cfg.snr_db_grid.iter().find(|x| !x.is_finite()) {
            return Err(Error::config("snr_db_grid", format!("non-finite SNR {bad}")));
        }
        if cfg.rho_grid.is_empty() {
            return Err(Error::config("rho_grid", "must not be empty"));
        }
        for rho in &mut cfg.rho_grid {
            *rho = check_rho("rho_grid", *rho, &mut warnings)?;
        }
        if cfg.trials == 0 || cfg.trials >= MAX_TRIALS {
            return Err(Error::config(
                "trials",
                format!("must be in 1..2^40, got {}", cfg.trials),
            ));
        }
        if !(cfg.cdf_level > 0.0 && cfg.cdf_level < 1.0) {
            return Err(Error::config(
                "cdf_level",
                format!("must be in (0, 1), got {}", cfg.cdf_level),
            ));
        }
        if cfg.cdf_points < 2 {
            return Err(Error::config("cdf_points", "must be at least 2"));
        }
        if cfg.pdf_bins < 1 {
            return Err(Error::config("pdf_bins", "must be at least 1"));
        }
        Ok((cfg, warnings))
    }

    pub fn snr(&self, snr_db: f64) -> Result<SnrSpec> {
        SnrSpec::from_db(snr_db, self.power_split)
    }
}

/// How trials are scheduled. Both produce identical results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// A validated configuration with its channel model.
#[derive(Clone, Debug)]
pub struct Scenario {
    cfg: ScenarioConfig,
    model: ChannelModel,
    warnings: Vec<String>,
    execution: Execution,
}

/// One accepted channel draw for a trial.
#[derive(Clone, Debug)]
pub struct TrialDraw {
    pub realization: ChannelRealization,
    pub receivers: LinearReceivers,
    /// Draws rejected before this one was accepted.
    pub rejected: u32,
}

impl Scenario {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let (cfg, warnings) = cfg.normalized()?;
        let model = ChannelModel::new(cfg.nt, cfg.nr, cfg.kind, cfg.m, cfg.rho_tx, cfg.rho_rx)?;
        Ok(Self {
            cfg,
            model,
            warnings,
            execution: Execution::default(),
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn label(&self, receiver: Receiver, detail: &str) -> String {
        format!(
            "{receiver} {}x{} m={} {} {}",
            self.cfg.nr, self.cfg.nt, self.cfg.m, self.cfg.kind, detail
        )
    }

    /// First acceptable realization for `trial`.
    pub fn draw(&self, trial: u64) -> Result<TrialDraw> {
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = RngStream::for_trial(self.cfg.seed, trial, attempt);
            let realization = self.model.realize(self.model.draw_inner(&mut rng)?)?;
            match LinearReceivers::new(&realization.h) {
                Ok(receivers) if receivers.is_well_conditioned() => {
                    return Ok(TrialDraw {
                        realization,
                        receivers,
                        rejected: attempt,
                    })
                }
                _ => continue,
            }
        }
        Err(Error::TooManyRejections {
            trial,
            attempts: MAX_ATTEMPTS,
        })
    }

    fn map_trials<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        match self.execution {
            Execution::Serial => (0..self.cfg.trials).map(f).collect(),
            Execution::Parallel => (0..self.cfg.trials).into_par_iter().map(f).collect(),
        }
    }

    /// Both receivers at every SNR in `snr_db`, on common channel draws.
    pub fn simulate_snr_points(&self, snr_db: &[f64]) -> Result<Vec<SnrPoint>> {
        let specs = snr_db.iter().map(|&db| self.cfg.snr(db)).collect::<Result<Vec<_>>>()?;
        let per_trial = self.map_trials(|t| {
            let draw = self.draw(t)?;
            let totals = specs
                .iter()
                .map(|s| Ok((draw.receivers.zf(s).total(), draw.receivers.mmse(s)?.total())))
                .collect::<Result<Vec<_>>>()?;
            Ok((totals, draw.rejected))
        })?;
        let rejected: u64 = per_trial.iter().map(|(_, r)| u64::from(*r)).sum();
        Ok(snr_db
            .iter()
            .enumerate()
            .map(|(i, &db)| {
                let detail = format!("rho_tx={} rho_rx={} snr={db}dB", self.cfg.rho_tx, self.cfg.rho_rx);
                let (zf, mmse): (Vec<f64>, Vec<f64>) = per_trial.iter().map(|(v, _)| v[i]).unzip();
                SnrPoint {
                    snr_db: db,
                    zf: CapacitySamples::new(self.label(Receiver::Zf, &detail), zf, rejected),
                    mmse: CapacitySamples::new(self.label(Receiver::Mmse, &detail), mmse, rejected),
                }
            })
            .collect())
    }

    /// Correlation sweep at one SNR. Every `rho` colors the same inner draw,
    /// applied at both ends. A draw that is singular at any `rho` is
    /// redrawn for all of them.
    pub fn simulate_rho_points(&self, rhos: &[f64], snr_db: f64) -> Result<Vec<RhoPoint>> {
        let snr = self.cfg.snr(snr_db)?;
        let models = rhos
            .iter()
            .map(|&r| self.model.with_rho(r))
            .collect::<Result<Vec<_>>>()?;
        let per_trial = self.map_trials(|t| {
            let mut rejected = vec![0u32; models.len()];
            'attempt: for attempt in 0..MAX_ATTEMPTS {
                let mut rng = RngStream::for_trial(self.cfg.seed, t, attempt);
                let inner = self.model.draw_inner(&mut rng)?;
                let mut totals = Vec::with_capacity(models.len());
                for (i, model) in models.iter().enumerate() {
                    let h = model.realize(inner.clone())?.h;
                    match LinearReceivers::new(&h) {
                        Ok(rx) if rx.is_well_conditioned() => {
                            totals.push((rx.zf(&snr).total(), rx.mmse(&snr)?.total()));
                        }
                        _ => {
                            rejected[i] += 1;
                            continue 'attempt;
                        }
                    }
                }
                return Ok((totals, rejected));
            }
            Err(Error::TooManyRejections {
                trial: t,
                attempts: MAX_ATTEMPTS,
            })
        })?;
        Ok(rhos
            .iter()
            .enumerate()
            .map(|(i, &rho)| {
                let rejected = per_trial.iter().map(|(_, r)| u64::from(r[i])).sum();
                let detail = format!("rho={rho} snr={snr_db}dB");
                let (zf, mmse): (Vec<f64>, Vec<f64>) = per_trial.iter().map(|(v, _)| v[i]).unzip();
                RhoPoint {
                    rho,
                    zf: CapacitySamples::new(self.label(Receiver::Zf, &detail), zf, rejected),
                    mmse: CapacitySamples::new(self.label(Receiver::Mmse, &detail), mmse, rejected),
                }
            })
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Receiver {
    Zf,
    Mmse,
}

impl Receiver {
    pub fn as_str(&self) -> &'static str {
        match self {
            Receiver::Zf => "zf",
            Receiver::Mmse => "mmse",
        }
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Total-capacity draws (bits/s/Hz) for one receiver and grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacitySamples {
    pub label: String,
    pub values: Vec<f64>,
    pub rejected_draws: u64,
}

impl CapacitySamples {
    pub fn new(label: impl Into<String>, values: Vec<f64>, rejected_draws: u64) -> Self {
        Self {
            label: label.into(),
            values,
            rejected_draws,
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self::new("", values, 0)
    }

    fn sorted(&self) -> Result<Vec<f64>> {
        if self.values.is_empty() {
            return Err(Error::EmptySamples);
        }
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }
}

#[derive(Clone, Debug)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub zf: CapacitySamples,
    pub mmse: CapacitySamples,
}

#[derive(Clone, Debug)]
pub struct RhoPoint {
    pub rho: f64,
    pub zf: CapacitySamples,
    pub mmse: CapacitySamples,
}

impl SnrPoint {
    pub fn samples(&self, receiver: Receiver) -> &CapacitySamples {
        match receiver {
            Receiver::Zf => &self.zf,
            Receiver::Mmse => &self.mmse,
        }
    }
}

impl RhoPoint {
    pub fn samples(&self, receiver: Receiver) -> &CapacitySamples {
        match receiver {
            Receiver::Zf => &self.zf,
            Receiver::Mmse => &self.mmse,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ergodic {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; zero for a single sample.
    pub stderr: f64,
}

pub fn ergodic_capacity(samples: &CapacitySamples) -> Result<Ergodic> {
    let v = &samples.values;
    if v.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return Ok(Ergodic { mean, stderr: 0.0 });
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(Ergodic {
        mean,
        stderr: (var / n).sqrt(),
    })
}

/// Fraction of samples `<= x`.
pub fn ecdf_at(samples: &CapacitySamples, x: f64) -> Result<f64> {
    let sorted = samples.sorted()?;
    Ok(sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64)
}

/// ECDF on `points` evenly spaced capacities from the minimum to the
/// maximum sample. A constant sample set is evaluated on `[c - 1, c]`.
pub fn empirical_cdf(samples: &CapacitySamples, points: usize) -> Result<Vec<(f64, f64)>> {
    let sorted = samples.sorted()?;
    if points < 2 {
        return Err(Error::DomainError(format!("need at least 2 ECDF points, got {points}")));
    }
    let n = sorted.len() as f64;
    let hi = sorted[sorted.len() - 1];
    let lo = if sorted[0] < hi { sorted[0] } else { hi - 1.0 };
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let x = if i == points - 1 { hi } else { lo + step * i as f64 };
            (x, sorted.partition_point(|&v| v <= x) as f64 / n)
        })
        .collect())
}

/// Density-normalized histogram as `(bin center, density)`. A constant
/// sample set uses a unit-width span centered on the value.
pub fn empirical_pdf(samples: &CapacitySamples, bins: usize) -> Result<Vec<(f64, f64)>> {
    let sorted = samples.sorted()?;
    if bins == 0 {
        return Err(Error::DomainError("need at least one histogram bin".into()));
    }
    let (mut lo, mut hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in &sorted {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let norm = sorted.len() as f64 * width;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (lo + width * (i as f64 + 0.5), c as f64 / norm))
        .collect())
}

/// Smallest sample `v` with `ECDF(v) >= p` (lower order statistic).
pub fn quantile_at_cdf(samples: &CapacitySamples, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::BadProbability(p));
    }
    let sorted = samples.sorted()?;
    let n = sorted.len();
    // smallest k in 1..=n with k / n >= p
    let mut k = ((p * n as f64).ceil() as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / n as f64 >= p {
        k -= 1;
    }
    while (k as f64 / n as f64) < p && k < n {
        k += 1;
    }
    Ok(sorted[k - 1])
}

/// One row of an SNR sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SnrRow {
    pub snr_db: f64,
    pub receiver: Receiver,
    pub ergodic_capacity: f64,
    pub stderr: f64,
    pub quantile: f64,
    pub rejected_draws: u64,
}

/// One row of a correlation sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoRow {
    pub rho: f64,
    pub receiver: Receiver,
    pub ergodic_capacity: f64,
    pub stderr: f64,
    pub rejected_draws: u64,
}

/// ZF and MMSE sample sets for one SNR.
pub fn run_scenario(scenario: &Scenario, snr_db: f64) -> Result<(CapacitySamples, CapacitySamples)> {
    let point = scenario
        .simulate_snr_points(&[snr_db])?
        .pop()
        .expect("one SNR point requested");
    Ok((point.zf, point.mmse))
}

/// Ergodic capacity, standard error and `cdf_level` quantile per SNR and
/// receiver, ordered by SNR.
pub fn sweep_snr(scenario: &Scenario) -> Result<Vec<SnrRow>> {
    let mut grid = scenario.config().snr_db_grid.clone();
    grid.sort_by(f64::total_cmp);
    let level = scenario.config().cdf_level;
    let mut rows = Vec::with_capacity(grid.len() * 2);
    for point in scenario.simulate_snr_points(&grid)? {
        for receiver in [Receiver::Zf, Receiver::Mmse] {
            let s = point.samples(receiver);
            let e = ergodic_capacity(s)?;
            rows.push(SnrRow {
                snr_db: point.snr_db,
                receiver,
                ergodic_capacity: e.mean,
                stderr: e.stderr,
                quantile: quantile_at_cdf(s, level)?,
                rejected_draws: s.rejected_draws,
            });
        }
    }
    Ok(rows)
}

/// Ergodic capacity per `rho` (both ends) and receiver, in grid order.
pub fn sweep_rho(scenario: &Scenario, snr_db: f64) -> Result<Vec<RhoRow>> {
    let mut rows = Vec::new();
    for point in scenario.simulate_rho_points(&scenario.config().rho_grid, snr_db)? {
        for receiver in [Receiver::Zf, Receiver::Mmse] {
            let s = point.samples(receiver);
            let e = ergodic_capacity(s)?;
            rows.push(RhoRow {
                rho: point.rho,
                receiver,
                ergodic_capacity: e.mean,
                stderr: e.stderr,
                rejected_draws: s.rejected_draws,
            });
        }
    }
    Ok(rows)
}

/// A reference capacity reading to be matched by a quantile search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileTarget {
    pub row_id: u32,
    pub receiver: Receiver,
    pub nt: usize,
    pub nr: usize,
    pub target: f64,
}

/// Capacities read at `F(x) = 0.8` for `m = 1`, receive correlation 0.2.
pub const TABLE1_TARGETS: [QuantileTarget; 4] = [
    QuantileTarget {
        row_id: 1,
        receiver: Receiver::Zf,
        nt: 4,
        nr: 4,
        target: 1.26,
    },
    QuantileTarget {
        row_id: 2,
        receiver: Receiver::Zf,
        nt: 8,
        nr: 8,
        target: 2.975,
    },
    QuantileTarget {
        row_id: 3,
        receiver: Receiver::Mmse,
        nt: 4,
        nr: 4,
        target: 12.92,
    },
    QuantileTarget {
        row_id: 4,
        receiver: Receiver::Mmse,
        nt: 8,
        nr: 8,
        target: 27.32,
    },
];

/// Quantile level of the reference capacity table.
pub const TABLE1_LEVEL: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantileEntry {
    pub candidate_snr_db: f64,
    pub row_id: u32,
    pub receiver: Receiver,
    pub nt: usize,
    pub nr: usize,
    pub quantile: f64,
    pub target: f64,
    /// `(quantile - target) / target`
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantileFit {
    pub candidates: Vec<QuantileEntry>,
    pub best_snr_db: f64,
    /// Sum of squared relative errors at the best SNR.
    pub objective: f64,
    pub best: Vec<QuantileEntry>,
    pub rejected_draws: u64,
}

/// Searches the config's SNR grid for the operating point whose
/// `level`-quantiles best match `targets` (least squared relative error).
/// Each target row runs on the config with its own antenna counts.
pub fn fit_quantile_targets(
    base: &ScenarioConfig,
    targets: &[QuantileTarget],
    level: f64,
    execution: Execution,
) -> Result<QuantileFit> {
    if targets.is_empty() {
        return Err(Error::config("targets", "no target rows"));
    }
    let mut grid = base.snr_db_grid.clone();
    grid.sort_by(f64::total_cmp);
    let mut sizes: Vec<(usize, usize)> = targets.iter().map(|t| (t.nt, t.nr)).collect();
    sizes.sort_unstable();
    sizes.dedup();

    let mut by_size = Vec::new();
    let mut rejected_draws = 0;
    for &(nt, nr) in &sizes {
        let cfg = ScenarioConfig { nt, nr, ..base.clone() };
        let points = Scenario::new(&cfg)?
            .with_execution(execution)
            .simulate_snr_points(&grid)?;
        rejected_draws += points[0].zf.rejected_draws;
        by_size.push(((nt, nr), points));
    }

    let mut candidates = Vec::with_capacity(grid.len() * targets.len());
    for (i, &snr_db) in grid.iter().enumerate() {
        for t in targets {
            let points = &by_size
                .iter()
                .find(|(s, _)| *s == (t.nt, t.nr))
                .expect("size simulated")
                .1;
            let quantile = quantile_at_cdf(points[i].samples(t.receiver), level)?;
            candidates.push(QuantileEntry {
                candidate_snr_db: snr_db,
                row_id: t.row_id,
                receiver: t.receiver,
                nt: t.nt,
                nr: t.nr,
                quantile,
                target: t.target,
                relative_error: (quantile - t.target) / t.target,
            });
        }
    }

    let (best_idx, objective) = candidates
        .chunks(targets.len())
        .map(|rows| rows.iter().map(|e| e.relative_error.powi(2)).sum::<f64>())
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    let best = candidates[best_idx * targets.len()..(best_idx + 1) * targets.len()].to_vec();
    Ok(QuantileFit {
        best_snr_db: grid[best_idx],
        objective,
        best,
        candidates,
        rejected_draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(v: &[f64]) -> CapacitySamples {
        CapacitySamples::from_values(v.to_vec())
    }

    fn small(trials: u64) -> ScenarioConfig {
        ScenarioConfig {
            trials,
            seed: 99,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn ergodic_examples() {
        let e = ergodic_capacity(&samples(&[2.0, 2.0, 2.0])).unwrap();
        assert_eq!((e.mean, e.stderr), (2.0, 0.0));
        let e = ergodic_capacity(&samples(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(e.mean, 2.5);
        // sqrt(5/3) / 2
        assert!((e.stderr - 0.645_497_224_367_902_8).abs() < 1e-12);
        assert_eq!(ergodic_capacity(&samples(&[7.0])).unwrap().mean, 7.0);
        assert_eq!(ergodic_capacity(&samples(&[])), Err(Error::EmptySamples));
    }

    #[test]
    fn ecdf_examples() {
        let s = samples(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(ecdf_at(&s, 4.0).unwrap(), 0.8);
        let cdf = empirical_cdf(&s, 5).unwrap();
        assert_eq!(cdf, vec![(1.0, 0.2), (2.0, 0.4), (3.0, 0.6), (4.0, 0.8), (5.0, 1.0)]);

        let c = empirical_cdf(&samples(&[3.0; 4]), 3).unwrap();
        assert_eq!(c, vec![(2.0, 0.0), (2.5, 0.0), (3.0, 1.0)]);

        assert_eq!(empirical_cdf(&samples(&[]), 3), Err(Error::EmptySamples));
    }

    #[test]
    fn ecdf_mixture_identity() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin() + 2.0).collect();
        let b: Vec<f64> = (0..53).map(|i| (i as f64 * 0.11).cos() * 1.5 + 2.2).collect();
        let merged: Vec<f64> = a.iter().chain(&b).copied().collect();
        let (sa, sb, sm) = (samples(&a), samples(&b), samples(&merged));
        for (x, f) in empirical_cdf(&sm, 40).unwrap() {
            let mix = (37.0 * ecdf_at(&sa, x).unwrap() + 53.0 * ecdf_at(&sb, x).unwrap()) / 90.0;
            assert!((f - mix).abs() < 1e-15);
        }
    }

    #[test]
    fn pdf_examples() {
        let mut rng = RngStream::new(1, 0);
        use rand::Rng;
        let u: Vec<f64> = (0..1_000_000).map(|_| rng.random::<f64>()).collect();
        let pdf = empirical_pdf(&samples(&u), 10).unwrap();
        assert_eq!(pdf.len(), 10);
        for &(_, d) in &pdf {
            assert!((d - 1.0).abs() < 0.02, "{d}");
        }

        let s = samples(&[1.0, 2.0, 4.0]);
        let pdf = empirical_pdf(&s, 1).unwrap();
        assert_eq!(pdf, vec![(2.5, 1.0 / 3.0)]);

        let n: Vec<f64> = (0..999).map(|i| ((i * 7919) % 1013) as f64 / 17.0).collect();
        for bins in [1, 3, 17, 100] {
            let pdf = empirical_pdf(&samples(&n), bins).unwrap();
            let width = pdf.get(1).map_or(1013.0, |p| p.0 - pdf[0].0);
            let width = if bins == 1 {
                n.iter().copied().fold(f64::MIN, f64::max) - n.iter().copied().fold(f64::MAX, f64::min)
            } else {
                width
            };
            let integral: f64 = pdf.iter().map(|p| p.1 * width).sum();
            assert!((integral - 1.0).abs() < 1e-9, "bins {bins}: {integral}");
        }
        assert_eq!(empirical_pdf(&samples(&[]), 3), Err(Error::EmptySamples));
    }

    #[test]
    fn quantile_examples() {
        let s = samples(&[5.0, 3.0, 1.0, 2.0, 4.0]);
        assert_eq!(quantile_at_cdf(&s, 0.8).unwrap(), 4.0);
        assert_eq!(quantile_at_cdf(&samples(&[10.0, 20.0]), 0.5).unwrap(), 10.0);
        assert_eq!(quantile_at_cdf(&samples(&[10.0, 20.0]), 0.51).unwrap(), 20.0);
        assert_eq!(quantile_at_cdf(&s, 0.01).unwrap(), 1.0);
        assert_eq!(quantile_at_cdf(&s, 0.99).unwrap(), 5.0);
        assert_eq!(quantile_at_cdf(&s, 1.0), Err(Error::BadProbability(1.0)));
        assert_eq!(quantile_at_cdf(&s, 0.0), Err(Error::BadProbability(0.0)));
        assert_eq!(quantile_at_cdf(&samples(&[]), 0.5), Err(Error::EmptySamples));
    }

    #[test]
    fn quantile_is_smallest_value_reaching_level() {
        for n in 1..40 {
            let v: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let s = samples(&v);
            for p in [0.1, 0.2, 0.25, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95] {
                let q = quantile_at_cdf(&s, p).unwrap();
                let brute = v.iter().copied().find(|&x| ecdf_at(&s, x).unwrap() >= p).unwrap();
                assert_eq!(q, brute, "n {n} p {p}");
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::default().normalized().is_ok());
        let bad = |cfg: ScenarioConfig, field: &str| match cfg.normalized() {
            Err(Error::ConfigInvalid { field: f, .. }) => assert_eq!(f, field),
            other => panic!("expected error on {field}, got {other:?}"),
        };
        bad(
            ScenarioConfig {
                nr: 1,
                nt: 2,
                ..Default::default()
            },
            "nr",
        );
        bad(
            ScenarioConfig {
                rho: Some(1.5),
                ..Default::default()
            },
            "rho",
        );
        bad(
            ScenarioConfig {
                rho_rx: -0.1,
                ..Default::default()
            },
            "rho_rx",
        );
        bad(
            ScenarioConfig {
                m: 0.3,
                ..Default::default()
            },
            "m",
        );
        bad(
            ScenarioConfig {
                trials: 0,
                ..Default::default()
            },
            "trials",
        );
        bad(
            ScenarioConfig {
                cdf_level: 1.0,
                ..Default::default()
            },
            "cdf_level",
        );
        bad(
            ScenarioConfig {
                snr_db_grid: vec![],
                ..Default::default()
            },
            "snr_db_grid",
        );
        bad(
            ScenarioConfig {
                rho_grid: vec![0.1, 2.0],
                ..Default::default()
            },
            "rho_grid",
        );

        let (cfg, warnings) = ScenarioConfig {
            rho_grid: vec![0.0, 1.0],
            rho: Some(0.3),
            ..Default::default()
        }
        .normalized()
        .unwrap();
        assert_eq!(cfg.rho_grid, vec![0.0, RHO_MAX]);
        assert_eq!((cfg.rho_tx, cfg.rho_rx), (0.3, 0.3));
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn run_scenario_is_deterministic() {
        let sc = Scenario::new(&small(1)).unwrap();
        assert_eq!(run_scenario(&sc, 10.0).unwrap(), run_scenario(&sc, 10.0).unwrap());
        let sc = Scenario::new(&small(300)).unwrap();
        let par = run_scenario(&sc, 10.0).unwrap();
        let ser = run_scenario(&sc.clone().with_execution(Execution::Serial), 10.0).unwrap();
        assert_eq!(par, ser);
        assert_eq!(par.0.values.len(), 300);
    }

    #[test]
    fn pairing_keeps_mmse_above_zf() {
        let cfg = ScenarioConfig {
            nt: 4,
            nr: 4,
            rho: Some(0.6),
            trials: 2000,
            ..small(0)
        };
        let (zf, mmse) = run_scenario(&Scenario::new(&cfg).unwrap(), 5.0).unwrap();
        for (z, m) in zf.values.iter().zip(&mmse.values) {
            assert!(m >= &(z - 1e-12));
        }
    }

    #[test]
    fn snr_sweep_is_monotone_and_ordered() {
        let cfg = ScenarioConfig {
            snr_db_grid: vec![20.0, 0.0, 10.0],
            trials: 500,
            ..small(0)
        };
        let rows = sweep_snr(&Scenario::new(&cfg).unwrap()).unwrap();
        assert_eq!(rows.len(), 6);
        let snrs: Vec<f64> = rows.iter().map(|r| r.snr_db).collect();
        assert_eq!(snrs, vec![0.0, 0.0, 10.0, 10.0, 20.0, 20.0]);
        for receiver in [Receiver::Zf, Receiver::Mmse] {
            let c: Vec<f64> = rows
                .iter()
                .filter(|r| r.receiver == receiver)
                .map(|r| r.ergodic_capacity)
                .collect();
            assert!(c.windows(2).all(|w| w[1] > w[0]), "{receiver}: {c:?}");
        }
    }

    #[test]
    fn rho_zero_matches_snr_sweep() {
        let cfg = ScenarioConfig {
            nt: 4,
            nr: 4,
            trials: 2000,
            rho_grid: vec![0.0, 0.5],
            ..small(0)
        };
        let sc = Scenario::new(&cfg).unwrap();
        let rho_rows = sweep_rho(&sc, 10.0).unwrap();
        let (zf, mmse) = run_scenario(&sc, 10.0).unwrap();
        let zf = ergodic_capacity(&zf).unwrap();
        let mmse = ergodic_capacity(&mmse).unwrap();
        assert!((rho_rows[0].ergodic_capacity - zf.mean).abs() <= zf.stderr);
        assert!((rho_rows[1].ergodic_capacity - mmse.mean).abs() <= mmse.stderr);
    }

    #[test]
    fn fit_picks_minimum_objective() {
        let cfg = ScenarioConfig {
            trials: 200,
            snr_db_grid: vec![0.0, 10.0, 20.0],
            m: 1.0,
            rho_rx: 0.2,
            ..small(0)
        };
        let fit = fit_quantile_targets(&cfg, &TABLE1_TARGETS, TABLE1_LEVEL, Execution::Parallel).unwrap();
        assert_eq!(fit.candidates.len(), 12);
        assert_eq!(fit.best.len(), 4);
        for rows in fit.candidates.chunks(4) {
            let obj: f64 = rows.iter().map(|e| e.relative_error.powi(2)).sum();
            assert!(obj >= fit.objective);
        }
        assert!(fit.best.iter().all(|e| e.candidate_snr_db == fit.best_snr_db));
    }
}
