//! Random variates for fading channels.
//!
//! Nakagami-m envelopes are sampled in the power domain: `g ~ Gamma(m, Ω/m)`
//! and `r = sqrt(g)`. Gamma variates use the Marsaglia-Tsang squeeze/rejection
//! method; shapes in `[0.5, 1)` are sampled at `shape + 1` and boosted by
//! `U^(1/shape)`.
//!
//! Every generator draws from an [`RngStream`], a ChaCha8 stream keyed by
//! `(seed, stream_id)`. Monte Carlo trials use their index as the stream id,
//! so results do not depend on the order in which trials execute.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::distr::OpenClosed01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matkernel::ComplexMatrix;
use crate::special::{gamma_lr, ln_gamma};

/// Smallest admissible gamma shape / Nakagami fading figure.
pub const MIN_SHAPE: f64 = 0.5;

/// Low bits of a stream id hold the trial index; the rest hold the attempt.
const TRIAL_BITS: u32 = 40;

/// Deterministic random stream identified by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    /// Stream for a Monte Carlo trial. `attempt > 0` selects the sub-stream
    /// used when an earlier draw for the same trial was rejected.
    pub fn for_trial(seed: u64, trial: u64, attempt: u32) -> Self {
        assert!(trial < 1 << TRIAL_BITS, "trial index {trial} exceeds 2^{TRIAL_BITS}");
        Self::new(seed, trial | (u64::from(attempt) << TRIAL_BITS))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    fn uniform_open_closed(&mut self) -> f64 {
        self.rng.sample(OpenClosed01)
    }

    fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Nakagami-m parameters: fading figure `m >= 0.5` and mean power `Ω > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NakagamiParams {
    m: f64,
    omega: f64,
}

impl NakagamiParams {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        if !(m >= MIN_SHAPE) || !m.is_finite() {
            return Err(Error::InvalidShape(m));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::DomainError(format!("omega must be positive, got {omega}")));
        }
        Ok(Self { m, omega })
    }

    /// Rayleigh fading with unit mean power.
    pub fn rayleigh() -> Self {
        Self { m: 1.0, omega: 1.0 }
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

/// One draw from `Gamma(shape, scale)`, mean `shape * scale`.
pub fn gamma_sample(shape: f64, scale: f64, rng: &mut RngStream) -> Result<f64> {
    if !(shape >= MIN_SHAPE) || !shape.is_finite() {
        return Err(Error::InvalidShape(shape));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DomainError(format!("gamma scale must be positive, got {scale}")));
    }
    if shape < 1.0 {
        let g = marsaglia_tsang(shape + 1.0, rng);
        let boost = rng.uniform_open_closed().powf(1.0 / shape);
        Ok(g * boost * scale)
    } else {
        Ok(marsaglia_tsang(shape, rng) * scale)
    }
}

/// Unit-scale gamma variate for `shape >= 1`.
fn marsaglia_tsang(shape: f64, rng: &mut RngStream) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.standard_normal();
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = rng.uniform_open_closed();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Nakagami-m envelope `r` with `E[r^2] = Ω`.
pub fn nakagami_envelope(params: NakagamiParams, rng: &mut RngStream) -> Result<f64> {
    gamma_sample(params.m, params.omega / params.m, rng).map(f64::sqrt)
}

/// `nr x nt` matrix of i.i.d. CN(0, 1) entries.
pub fn complex_gaussian_matrix(nr: usize, nt: usize, rng: &mut RngStream) -> Result<ComplexMatrix> {
    let data = (0..nr * nt)
        .map(|_| {
            let re = rng.standard_normal();
            let im = rng.standard_normal();
            Complex64::new(re, im) / SQRT_2
        })
        .collect();
    ComplexMatrix::new(nr, nt, data)
}

/// `nr x nt` matrix whose entries have Nakagami-m envelopes and i.i.d.
/// uniform phases.
pub fn nakagami_entry_matrix(
    params: NakagamiParams,
    nr: usize,
    nt: usize,
    rng: &mut RngStream,
) -> Result<ComplexMatrix> {
    let data = (0..nr * nt)
        .map(|_| {
            let r = nakagami_envelope(params, rng)?;
            let theta = 2.0 * PI * rng.random::<f64>();
            Ok(Complex64::from_polar(r, theta))
        })
        .collect::<Result<Vec<_>>>()?;
    ComplexMatrix::new(nr, nt, data)
}

fn check_snr_args(gamma: f64, m: f64, gbar: f64) -> Result<()> {
    if !(gamma >= 0.0) {
        return Err(Error::DomainError(format!(
            "instantaneous SNR must be >= 0, got {gamma}"
        )));
    }
    if !(m >= MIN_SHAPE) {
        return Err(Error::InvalidShape(m));
    }
    if !(gbar > 0.0) {
        return Err(Error::DomainError(format!("mean SNR must be positive, got {gbar}")));
    }
    Ok(())
}

/// Density of the instantaneous SNR under Nakagami-m fading with mean SNR
/// `gbar`: a Gamma(m, gbar/m) density.
pub fn snr_pdf(gamma: f64, m: f64, gbar: f64) -> Result<f64> {
    check_snr_args(gamma, m, gbar)?;
    if gamma == 0.0 {
        return Ok(match m.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 1.0 / gbar,
            _ => 0.0,
        });
    }
    let rate = m / gbar;
    let log_pdf = m * rate.ln() - ln_gamma(m) + (m - 1.0) * gamma.ln() - rate * gamma;
    Ok(log_pdf.exp())
}

/// Distribution function matching [`snr_pdf`].
pub fn snr_cdf(gamma: f64, m: f64, gbar: f64) -> Result<f64> {
    check_snr_args(gamma, m, gbar)?;
    Ok(gamma_lr(m, m * gamma / gbar))
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: usize = 1_000_000;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    fn gammas(shape: f64, scale: f64, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed, 0);
        (0..N).map(|_| gamma_sample(shape, scale, &mut rng).unwrap()).collect()
    }

    #[test]
    fn gamma_exponential_case() {
        let (mean, var) = moments(&gammas(1.0, 1.0, 1));
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn gamma_moment_identities() {
        for &(shape, scale) in &[(3.0, 1.0 / 3.0), (0.5, 2.0), (0.7, 1.0), (2.5, 0.4)] {
            let (mean, var) = moments(&gammas(shape, scale, 7));
            let m0 = shape * scale;
            let v0 = shape * scale * scale;
            assert!((mean / m0 - 1.0).abs() < 0.01, "shape {shape}: mean {mean} vs {m0}");
            assert!((var / v0 - 1.0).abs() < 0.03, "shape {shape}: var {var} vs {v0}");
        }
    }

    #[test]
    fn gamma_rejects_small_shape() {
        let mut rng = RngStream::new(0, 0);
        assert_eq!(gamma_sample(0.4, 1.0, &mut rng), Err(Error::InvalidShape(0.4)));
        assert!(gamma_sample(1.0, 0.0, &mut rng).is_err());
        assert!(NakagamiParams::new(0.49, 1.0).is_err());
        assert!(NakagamiParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn rayleigh_envelope_ks() {
        let params = NakagamiParams::new(1.0, 1.0).unwrap();
        let mut rng = RngStream::new(11, 3);
        let mut r: Vec<f64> = (0..N).map(|_| nakagami_envelope(params, &mut rng).unwrap()).collect();
        let d = ks_statistic(&mut r, |x| 1.0 - (-x * x).exp());
        assert!(d < 0.002, "K-S {d}");
    }

    #[test]
    fn envelope_power_moments() {
        for &m in &[0.5, 1.0, 2.0, 3.0] {
            let omega = if m == 0.5 { 2.0 } else { 1.0 };
            let params = NakagamiParams::new(m, omega).unwrap();
            let mut rng = RngStream::new(5, 0);
            let p: Vec<f64> = (0..N)
                .map(|_| nakagami_envelope(params, &mut rng).unwrap().powi(2))
                .collect();
            let mean = p.iter().sum::<f64>() / N as f64;
            let fourth = p.iter().map(|x| x * x).sum::<f64>() / N as f64;
            assert!((mean / omega - 1.0).abs() < 0.01, "m {m}: E[r^2] {mean}");
            let ratio = fourth / (omega * omega) / (1.0 + 1.0 / m);
            assert!((ratio - 1.0).abs() < 0.03, "m {m}: E[r^4] ratio {ratio}");
            if m == 3.0 {
                let (_, var) = moments(&p);
                assert!((var * 3.0 - 1.0).abs() < 0.03, "Var[r^2] {var}");
            }
        }
    }

    #[test]
    fn gaussian_entries_unit_power_exponential() {
        let mut rng = RngStream::new(2, 0);
        let mut p: Vec<f64> = (0..N)
            .map(|_| complex_gaussian_matrix(1, 1, &mut rng).unwrap()[(0, 0)].norm_sqr())
            .collect();
        let mean = p.iter().sum::<f64>() / N as f64;
        assert!((mean - 1.0).abs() < 0.01);
        let d = ks_statistic(&mut p, |x| 1.0 - (-x).exp());
        assert!(d < 0.002, "K-S {d}");
    }

    #[test]
    fn gaussian_entries_uncorrelated() {
        let mut rng = RngStream::new(3, 0);
        let trials = 100_000;
        let mut cross = vec![Complex64::new(0.0, 0.0); 16 * 16];
        for _ in 0..trials {
            let g = complex_gaussian_matrix(4, 4, &mut rng).unwrap();
            let s = g.as_slice();
            for a in 0..16 {
                for b in (a + 1)..16 {
                    cross[a * 16 + b] += s[a] * s[b].conj();
                }
            }
        }
        let worst = cross.iter().map(|z| z.norm() / trials as f64).fold(0.0, f64::max);
        assert!(worst < 0.01, "max pairwise correlation {worst}");
    }

    #[test]
    fn generators_are_deterministic() {
        let a = complex_gaussian_matrix(3, 5, &mut RngStream::new(42, 9)).unwrap();
        let b = complex_gaussian_matrix(3, 5, &mut RngStream::new(42, 9)).unwrap();
        assert_eq!(a, b);
        let c = complex_gaussian_matrix(3, 5, &mut RngStream::new(42, 10)).unwrap();
        assert_ne!(a, c);

        let params = NakagamiParams::new(2.3, 1.0).unwrap();
        let a = nakagami_entry_matrix(params, 4, 4, &mut RngStream::new(1, 1)).unwrap();
        let b = nakagami_entry_matrix(params, 4, 4, &mut RngStream::new(1, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nakagami_entries_m1_match_exponential_power() {
        let params = NakagamiParams::rayleigh();
        let mut rng = RngStream::new(8, 0);
        let mut p: Vec<f64> = (0..N)
            .map(|_| nakagami_entry_matrix(params, 1, 1, &mut rng).unwrap()[(0, 0)].norm_sqr())
            .collect();
        let d = ks_statistic(&mut p, |x| 1.0 - (-x).exp());
        assert!(d < 0.002, "K-S {d}");
    }

    #[test]
    fn nakagami_entries_m3_power_variance_and_uniform_phase() {
        let params = NakagamiParams::new(3.0, 1.0).unwrap();
        let mut rng = RngStream::new(9, 0);
        let entries: Vec<Complex64> = (0..N)
            .map(|_| nakagami_entry_matrix(params, 1, 1, &mut rng).unwrap()[(0, 0)])
            .collect();
        let p: Vec<f64> = entries.iter().map(|z| z.norm_sqr()).collect();
        let (mean, var) = moments(&p);
        assert!((mean - 1.0).abs() < 0.01);
        assert!((var * 3.0 - 1.0).abs() < 0.03, "var {var}");
        let resultant: Complex64 = entries.iter().map(|z| Complex64::from_polar(1.0, z.arg())).sum();
        let len = resultant.norm() / N as f64;
        assert!(len < 0.005, "mean resultant length {len}");
    }

    #[test]
    fn snr_pdf_examples() {
        assert_eq!(snr_pdf(0.0, 1.0, 1.0).unwrap(), 1.0);
        assert!((snr_pdf(1.0, 1.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(matches!(snr_pdf(-0.1, 1.0, 1.0), Err(Error::DomainError(_))));
        assert_eq!(snr_pdf(0.0, 3.0, 1.0).unwrap(), 0.0);
        assert!(snr_pdf(0.0, 0.5, 1.0).unwrap().is_infinite());
    }

    /// Composite Simpson quadrature of the density over [0, 50].
    #[test]
    fn snr_pdf_integrates_to_one() {
        for &(m, gbar) in &[(3.0, 1.0), (1.0, 1.0), (2.0, 4.0)] {
            let n = 200_000;
            let h = 50.0 / n as f64;
            let mut acc = snr_pdf(0.0, m, gbar).unwrap() + snr_pdf(50.0, m, gbar).unwrap();
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * snr_pdf(i as f64 * h, m, gbar).unwrap();
            }
            let integral = acc * h / 3.0;
            if gbar == 4.0 {
                // Tail beyond 50 is not negligible for gbar = 4.
                let tail = 1.0 - snr_cdf(50.0, m, gbar).unwrap();
                assert!((integral + tail - 1.0).abs() < 1e-6, "integral {integral}");
            } else {
                assert!((integral - 1.0).abs() < 1e-6, "m {m}: integral {integral}");
            }
        }
    }

    #[test]
    fn snr_samples_follow_density() {
        for &m in &[1.0, 3.0] {
            let params = NakagamiParams::new(m, 1.0).unwrap();
            let mut rng = RngStream::new(21, 0);
            let mut g: Vec<f64> = (0..N)
                .map(|_| nakagami_envelope(params, &mut rng).unwrap().powi(2))
                .collect();
            let d = ks_statistic(&mut g, |x| snr_cdf(x, m, 1.0).unwrap());
            assert!(d < 1.628 / (N as f64).sqrt(), "m {m}: K-S {d}");
        }
    }
}
