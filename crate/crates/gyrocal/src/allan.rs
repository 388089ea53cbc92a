//! Time-domain stochastic identification: overlapping Allan deviation curves
//! and N/B/K coefficient fitting.
//!
//! The overlapping estimator is used throughout for its lower variance; the
//! test suite keeps a brute-force non-overlapping estimator as an independent
//! oracle. Quantization and rate-ramp fitting (slopes -1 and +1) are out of
//! scope; both sources can be generated but are fused/negligible at the
//! averaging times this toolkit identifies over.

use crate::error::{Error, Result};
use crate::noise::SignalRecord;

/// Statistical validity floor: a tau is retained only while the record still
/// holds at least this many disjoint clusters.
pub const MIN_CLUSTERS: usize = 9;

/// Flat-region conversion factor between the Allan-deviation minimum and the
/// bias-instability level.
pub const BIAS_INSTABILITY_FACTOR: f64 = 0.664;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::InvalidParameter(format!(
                "unknown axis '{other}' (expected x, y or z)"
            ))),
        }
    }
}

/// Allan deviation per averaging interval.
#[derive(Debug, Clone, PartialEq)]
pub struct AllanCurve {
    /// Averaging intervals [s], strictly increasing.
    pub taus: Vec<f64>,
    /// Allan deviations [rad/s].
    pub sigma: Vec<f64>,
    /// Disjoint clusters available at each tau (>= MIN_CLUSTERS).
    pub n_clusters: Vec<usize>,
}

impl AllanCurve {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// CSV export: `tau_s,sigma_rad_s,n_clusters`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau_s,sigma_rad_s,n_clusters\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.taus[i], self.sigma[i], self.n_clusters[i]
            ));
        }
        out
    }
}

/// Logarithmic tau grid, about 20 points per decade, clipped so every tau
/// keeps at least [`MIN_CLUSTERS`] disjoint clusters.
pub fn default_taus(n_samples: usize, fs: f64) -> Vec<f64> {
    let max_m = n_samples / MIN_CLUSTERS;
    let mut ms: Vec<usize> = Vec::new();
    let mut j = 0u32;
    loop {
        let m = 10f64.powf(j as f64 / 20.0).round() as usize;
        if m > max_m {
            break;
        }
        if ms.last() != Some(&m) {
            ms.push(m);
        }
        j += 1;
    }
    ms.into_iter().map(|m| m as f64 / fs).collect()
}

/// Overlapping Allan deviation of one axis at the requested taus.
pub fn allan_deviation(record: &SignalRecord, axis: Axis, taus: &[f64]) -> Result<AllanCurve> {
    allan_deviation_series(&record.axes[axis.index()], record.fs, taus)
}

/// Overlapping Allan deviation of a scalar rate series.
///
/// Each tau must be an integer multiple of the sample interval and leave at
/// least [`MIN_CLUSTERS`] disjoint clusters in the series.
pub fn allan_deviation_series(samples: &[f64], fs: f64, taus: &[f64]) -> Result<AllanCurve> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("empty series".into()));
    }
    if taus.is_empty() {
        return Err(Error::InvalidParameter("no taus requested".into()));
    }
    let n = samples.len();

    let mut ms = Vec::with_capacity(taus.len());
    for (i, &tau) in taus.iter().enumerate() {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau[{i}] = {tau}")));
        }
        let m_real = tau * fs;
        let m = m_real.round();
        if (m_real - m).abs() > 1e-6 * m_real.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "tau = {tau} s is not an integer multiple of 1/fs = {} s",
                1.0 / fs
            )));
        }
        let m = m as usize;
        if m == 0 || n / m < MIN_CLUSTERS {
            return Err(Error::InsufficientData(format!(
                "tau = {tau} s needs {MIN_CLUSTERS} clusters of {m} samples but the record has \
                 only {n} samples"
            )));
        }
        if i > 0 && tau <= taus[i - 1] {
            return Err(Error::InvalidParameter(
                "taus must be strictly increasing".into(),
            ));
        }
        ms.push(m);
    }

    // Prefix sums make every cluster mean O(1).
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0f64);
    let mut acc = 0.0;
    for &x in samples {
        acc += x;
        prefix.push(acc);
    }
    let cluster_mean = |k: usize, m: usize| (prefix[k + m] - prefix[k]) / m as f64;

    let mut sigma = Vec::with_capacity(ms.len());
    let mut n_clusters = Vec::with_capacity(ms.len());
    for &m in &ms {
        let pairs = n - 2 * m + 1;
        let mut sum_sq = 0.0;
        for k in 0..pairs {
            let d = cluster_mean(k + m, m) - cluster_mean(k, m);
            sum_sq += d * d;
        }
        let avar = sum_sq / (2.0 * pairs as f64);
        sigma.push(avar.sqrt());
        n_clusters.push(n / m);
    }

    Ok(AllanCurve {
        taus: taus.to_vec(),
        sigma,
        n_clusters,
    })
}

/// One fitted coefficient and the tau range the fit used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientFit {
    pub value: f64,
    pub tau_range: (f64, f64),
}

/// N/B/K estimates read off an Allan curve. A coefficient with no
/// identifiable slope region is absent, never zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseFit {
    /// Angular-random-walk density [rad/s/sqrt(Hz)], from the -1/2-slope
    /// region evaluated at tau = 1 s.
    pub arw: Option<CoefficientFit>,
    /// Bias-instability level [rad/s], curve minimum over a flat region
    /// divided by [`BIAS_INSTABILITY_FACTOR`].
    pub bias_instability: Option<CoefficientFit>,
    /// Rate-random-walk density [rad/s*sqrt(Hz)], from the +1/2-slope region
    /// evaluated at tau = 3 s.
    pub rrw: Option<CoefficientFit>,
}

const SLOPE_TOLERANCE: f64 = 0.15;
const MIN_REGION_POINTS: usize = 5;
/// A slope region must span at least this tau ratio (one third of a decade).
const MIN_REGION_EXTENT: f64 = 2.0;

/// Identify N, B and K from a curve spanning at least two decades of tau.
pub fn fit_noise_coefficients(curve: &AllanCurve) -> Result<NoiseFit> {
    if curve.len() < 2 {
        return Err(Error::InsufficientData(
            "curve must hold at least two taus".into(),
        ));
    }
    let span = curve.taus[curve.len() - 1] / curve.taus[0];
    if span < 99.0 {
        return Err(Error::InsufficientData(format!(
            "curve spans {span:.1}x in tau; coefficient fitting needs >= 2 decades"
        )));
    }

    // Work on the positive-sigma subset; a flat zero curve has no fits.
    let pts: Vec<(f64, f64)> = curve
        .taus
        .iter()
        .zip(&curve.sigma)
        .filter(|(_, &s)| s > 0.0 && s.is_finite())
        .map(|(&t, &s)| (t.ln(), s.ln()))
        .collect();
    if pts.len() < MIN_REGION_POINTS + 2 {
        return Ok(NoiseFit::default());
    }

    // Central-difference local slopes in log-log, defined on 1..len-1.
    let slopes: Vec<f64> = (1..pts.len() - 1)
        .map(|i| (pts[i + 1].1 - pts[i - 1].1) / (pts[i + 1].0 - pts[i - 1].0))
        .collect();

    let region = |target: f64| longest_slope_run(&pts, &slopes, target);

    let arw = region(-0.5).map(|(lo, hi)| {
        // Fixed-slope fit: ln sigma = ln N - 0.5 ln tau.
        let ln_n = (lo..=hi).map(|i| pts[i].1 + 0.5 * pts[i].0).sum::<f64>()
            / (hi - lo + 1) as f64;
        CoefficientFit {
            value: ln_n.exp(),
            tau_range: (pts[lo].0.exp(), pts[hi].0.exp()),
        }
    });

    let rrw = region(0.5).map(|(lo, hi)| {
        // Fixed-slope fit: ln sigma = ln K + 0.5 ln(tau / 3).
        let ln_k = (lo..=hi)
            .map(|i| pts[i].1 - 0.5 * (pts[i].0 - 3f64.ln()))
            .sum::<f64>()
            / (hi - lo + 1) as f64;
        CoefficientFit {
            value: ln_k.exp(),
            tau_range: (pts[lo].0.exp(), pts[hi].0.exp()),
        }
    });

    // B: global minimum, accepted only when it sits in a locally flat region.
    let bias_instability = {
        let min_idx = (0..pts.len())
            .min_by(|&a, &b| pts[a].1.partial_cmp(&pts[b].1).expect("finite"))
            .expect("non-empty");
        if min_idx == 0 || min_idx + 1 >= pts.len() {
            None
        } else {
            let slope = slopes[min_idx - 1];
            if slope.abs() <= SLOPE_TOLERANCE + 0.05 {
                Some(CoefficientFit {
                    value: pts[min_idx].1.exp() / BIAS_INSTABILITY_FACTOR,
                    tau_range: (pts[min_idx - 1].0.exp(), pts[min_idx + 1].0.exp()),
                })
            } else {
                None
            }
        }
    };

    Ok(NoiseFit {
        arw,
        bias_instability,
        rrw,
    })
}

/// Longest contiguous run of points whose local slope stays within
/// [`SLOPE_TOLERANCE`] of `target`, if it is long and wide enough to fit on.
fn longest_slope_run(pts: &[(f64, f64)], slopes: &[f64], target: f64) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut run_start: Option<usize> = None;
    for (j, &s) in slopes.iter().enumerate() {
        let i = j + 1; // slope j belongs to point i
        if (s - target).abs() <= SLOPE_TOLERANCE {
            let start = *run_start.get_or_insert(i);
            let better = match best {
                Some((lo, hi)) => i - start > hi - lo,
                None => true,
            };
            if better {
                best = Some((start, i));
            }
        } else {
            run_start = None;
        }
    }
    best.filter(|&(lo, hi)| {
        hi - lo + 1 >= MIN_REGION_POINTS && (pts[hi].0 - pts[lo].0).exp() >= MIN_REGION_EXTENT
    })
}
