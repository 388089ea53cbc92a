//! Synthetic stochastic error sources and stationary record generation.
//!
//! Five sources follow IEEE-STD-952 naming: quantization (Q), angular random
//! walk (N), bias instability (B), rate random walk (K) and rate ramp (R).
//! Each realization is an additive rad/s component; a stationary record is
//! the constant bias plus the enabled components plus an optional disturbance.
//!
//! Bias instability is approximated by a first-order Gauss-Markov process,
//! which keeps statistics time-invariant over the minute-scale records this
//! toolkit works with. Sinusoid/spike disturbances are a synthetic extension
//! used by the robustness evaluation scenarios; real sensors are under no
//! obligation to misbehave this politely.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::error_model::ErrorModelParams;
use crate::rng::stream_rng;

/// Stochastic source intensities. All coefficients are >= 0; a zero
/// coefficient disables its source.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseCoefficients {
    /// Quantization step of the rate output [rad/s].
    pub q: f64,
    /// Angular-random-walk density [rad/s/sqrt(Hz)].
    pub n: f64,
    /// Bias-instability level (stationary sigma of the Gauss-Markov
    /// approximation) [rad/s].
    pub b_inst: f64,
    /// Correlation time of the Gauss-Markov bias-instability process [s].
    pub b_corr_time: f64,
    /// Rate-random-walk density [rad/s*sqrt(Hz)].
    pub k: f64,
    /// Rate-ramp slope [rad/s^2].
    pub r: f64,
}

impl NoiseCoefficients {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("q", self.q),
            ("n", self.n),
            ("b_inst", self.b_inst),
            ("b_corr_time", self.b_corr_time),
            ("k", self.k),
            ("r", self.r),
        ];
        for (name, v) in named {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "noise coefficient {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.b_inst > 0.0 && self.b_corr_time == 0.0 {
            return Err(Error::InvalidParameter(
                "b_corr_time must be > 0 when b_inst is enabled".into(),
            ));
        }
        Ok(())
    }

    /// Pure white rate noise with the given ARW density [rad/s/sqrt(Hz)].
    pub fn white(n: f64) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }
}

/// The five generated source kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Quantization,
    AngleRandomWalk,
    BiasInstability,
    RateRandomWalk,
    RateRamp,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] = [
        NoiseKind::Quantization,
        NoiseKind::AngleRandomWalk,
        NoiseKind::BiasInstability,
        NoiseKind::RateRandomWalk,
        NoiseKind::RateRamp,
    ];

    fn stream_index(self) -> u64 {
        match self {
            NoiseKind::Quantization => 0,
            NoiseKind::AngleRandomWalk => 1,
            NoiseKind::BiasInstability => 2,
            NoiseKind::RateRandomWalk => 3,
            NoiseKind::RateRamp => 4,
        }
    }
}

/// Non-stationary disturbance injected on top of the stochastic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisturbanceSpec {
    None,
    Sinusoid {
        /// Peak amplitude [rad/s].
        amplitude: f64,
        /// Tone frequency [Hz]; must stay below fs/2.
        frequency: f64,
        /// Fixed phase [rad]; per-axis uniform random when absent.
        phase: Option<f64>,
    },
    Spikes {
        /// Expected event rate [events/s].
        rate: f64,
        /// Per-event magnitude [rad/s], sign randomized.
        magnitude: f64,
    },
}

impl DisturbanceSpec {
    pub fn validate(&self, fs: f64) -> Result<()> {
        match *self {
            DisturbanceSpec::None => Ok(()),
            DisturbanceSpec::Sinusoid {
                amplitude,
                frequency,
                ..
            } => {
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return Err(Error::InvalidParameter(
                        "sinusoid amplitude must be finite and >= 0".into(),
                    ));
                }
                if !(frequency.is_finite() && frequency > 0.0 && frequency < fs / 2.0) {
                    return Err(Error::InvalidParameter(format!(
                        "sinusoid frequency must lie in (0, fs/2) = (0, {})",
                        fs / 2.0
                    )));
                }
                Ok(())
            }
            DisturbanceSpec::Spikes { rate, magnitude } => {
                if !(rate.is_finite() && rate >= 0.0 && magnitude.is_finite() && magnitude >= 0.0)
                {
                    return Err(Error::InvalidParameter(
                        "spike rate and magnitude must be finite and >= 0".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// A timestamped 3-axis angular-rate sequence stored one contiguous array per
/// axis. `true_bias` is present for synthetic records only.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    /// Sample rate [Hz].
    pub fs: f64,
    /// Record length [s]; `len() == round(fs * duration)`.
    pub duration: f64,
    /// Per-axis samples [rad/s], x/y/z.
    pub axes: [Vec<f64>; 3],
    /// Ground-truth constant bias [rad/s] when synthetic.
    pub true_bias: Option<Vector3<f64>>,
    pub source_id: String,
    pub seed: u64,
}

impl SignalRecord {
    pub fn len(&self) -> usize {
        self.axes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes[0].is_empty()
    }

    pub fn sample(&self, i: usize) -> Vector3<f64> {
        Vector3::new(self.axes[0][i], self.axes[1][i], self.axes[2][i])
    }

    /// Per-axis arithmetic mean over the full record.
    pub fn mean(&self) -> Vector3<f64> {
        let n = self.len() as f64;
        Vector3::new(
            self.axes[0].iter().sum::<f64>() / n,
            self.axes[1].iter().sum::<f64>() / n,
            self.axes[2].iter().sum::<f64>() / n,
        )
    }
}

/// Generate one realization of a single noise source.
pub fn gen_noise(
    kind: NoiseKind,
    coeffs: &NoiseCoefficients,
    n_samples: usize,
    fs: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be > 0".into()));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::InvalidParameter("fs must be > 0".into()));
    }
    coeffs.validate()?;
    let mut rng = stream_rng(seed, "noise", &[kind.stream_index()]);
    Ok(gen_noise_with(kind, coeffs, n_samples, fs, &mut rng))
}

fn gen_noise_with(
    kind: NoiseKind,
    coeffs: &NoiseCoefficients,
    n_samples: usize,
    fs: f64,
    rng: &mut impl Rng,
) -> Vec<f64> {
    match kind {
        NoiseKind::Quantization => quantization_noise(coeffs.q, n_samples, fs, rng),
        NoiseKind::AngleRandomWalk => {
            let sigma = coeffs.n * fs.sqrt();
            (0..n_samples)
                .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
        NoiseKind::BiasInstability => {
            gauss_markov(coeffs.b_inst, coeffs.b_corr_time, n_samples, fs, rng)
        }
        NoiseKind::RateRandomWalk => {
            let step_sigma = coeffs.k / fs.sqrt();
            let mut acc = 0.0;
            (0..n_samples)
                .map(|_| {
                    acc += step_sigma * rng.sample::<f64, _>(StandardNormal);
                    acc
                })
                .collect()
        }
        NoiseKind::RateRamp => (0..n_samples).map(|i| coeffs.r * (i as f64 / fs)).collect(),
    }
}

/// Quantization component with rate LSB `q` [rad/s]: the accumulated angle of
/// a smooth carrier walk is rounded to the angle grid `q/fs` and differenced
/// back to rate. Output values sit on multiples of `q`; per-sample sigma is
/// `q * sqrt(7/6)` (carrier step plus differenced uniform residuals).
fn quantization_noise(q: f64, n_samples: usize, fs: f64, rng: &mut impl Rng) -> Vec<f64> {
    if q == 0.0 {
        return vec![0.0; n_samples];
    }
    let grid = q / fs;
    let carrier_sigma = grid;
    let mut theta = 0.0f64;
    let mut prev_cell = 0.0f64;
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        theta += carrier_sigma * rng.sample::<f64, _>(StandardNormal);
        let cell = (theta / grid).round();
        out.push((cell - prev_cell) * q);
        prev_cell = cell;
    }
    out
}

/// First-order Gauss-Markov process with stationary sigma and correlation
/// time, initialized from its stationary distribution.
fn gauss_markov(
    sigma: f64,
    corr_time: f64,
    n_samples: usize,
    fs: f64,
    rng: &mut impl Rng,
) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; n_samples];
    }
    let phi = (-1.0 / (fs * corr_time)).exp();
    let drive_sigma = sigma * (1.0 - phi * phi).sqrt();
    let mut x = sigma * rng.sample::<f64, _>(StandardNormal);
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        out.push(x);
        x = phi * x + drive_sigma * rng.sample::<f64, _>(StandardNormal);
    }
    out
}

fn disturbance_component(
    spec: &DisturbanceSpec,
    n_samples: usize,
    fs: f64,
    rng: &mut impl Rng,
) -> Vec<f64> {
    match *spec {
        DisturbanceSpec::None => vec![0.0; n_samples],
        DisturbanceSpec::Sinusoid {
            amplitude,
            frequency,
            phase,
        } => {
            let phi = phase.unwrap_or_else(|| {
                rng.sample(Uniform::new(0.0, std::f64::consts::TAU).expect("valid range"))
            });
            (0..n_samples)
                .map(|i| {
                    let t = i as f64 / fs;
                    amplitude * (std::f64::consts::TAU * frequency * t + phi).sin()
                })
                .collect()
        }
        DisturbanceSpec::Spikes { rate, magnitude } => {
            let p_event = (rate / fs).min(1.0);
            (0..n_samples)
                .map(|_| {
                    if rng.random::<f64>() < p_event {
                        if rng.random::<bool>() {
                            magnitude
                        } else {
                            -magnitude
                        }
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    }
}

/// Synthesize a stationary (zero true rate) record: bias plus every enabled
/// noise source plus the disturbance, per axis. Deterministic for a fixed
/// seed; axis streams are independent.
pub fn synthesize_stationary(
    params: &ErrorModelParams,
    disturbance: &DisturbanceSpec,
    duration: f64,
    fs: f64,
    seed: u64,
) -> Result<SignalRecord> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidParameter("duration must be > 0".into()));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::InvalidParameter("fs must be > 0".into()));
    }
    params.noise.validate()?;
    disturbance.validate(fs)?;

    let n_samples = (fs * duration).round() as usize;
    if n_samples == 0 {
        return Err(Error::InvalidParameter(
            "duration * fs rounds to zero samples".into(),
        ));
    }

    let coeffs = &params.noise;
    let enabled: Vec<NoiseKind> = NoiseKind::ALL
        .into_iter()
        .filter(|kind| match kind {
            NoiseKind::Quantization => coeffs.q > 0.0,
            NoiseKind::AngleRandomWalk => coeffs.n > 0.0,
            NoiseKind::BiasInstability => coeffs.b_inst > 0.0,
            NoiseKind::RateRandomWalk => coeffs.k > 0.0,
            NoiseKind::RateRamp => coeffs.r > 0.0,
        })
        .collect();

    let mut axes: [Vec<f64>; 3] = [(); 3].map(|_| Vec::new());
    for (axis, out) in axes.iter_mut().enumerate() {
        let mut samples = vec![params.bias[axis]; n_samples];
        for kind in &enabled {
            let mut rng = stream_rng(seed, "noise", &[axis as u64, kind.stream_index()]);
            let component = gen_noise_with(*kind, coeffs, n_samples, fs, &mut rng);
            for (s, c) in samples.iter_mut().zip(&component) {
                *s += c;
            }
        }
        let mut rng = stream_rng(seed, "disturbance", &[axis as u64]);
        let component = disturbance_component(disturbance, n_samples, fs, &mut rng);
        for (s, c) in samples.iter_mut().zip(&component) {
            *s += c;
        }
        *out = samples;
    }

    Ok(SignalRecord {
        fs,
        duration,
        axes,
        true_bias: Some(params.bias),
        source_id: format!("synthetic-{seed}"),
        seed,
    })
}
