//! Deterministic calibration: stacks known-rate/measured-mean pairs into a
//! linear system over the twelve parameters (nine distortion entries, three
//! biases) and solves it by QR least squares.
//!
//! Each measurement contributes a 3x12 block: block-diagonal transposed-rate
//! rows for the distortion entries, an identity block for the biases. A
//! stationary point alone observes only the biases; the six-point turntable
//! protocol (both polarities per axis) plus one stationary point makes the
//! full system rank 12.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::error_model::DistortionMatrix;

/// Condition numbers above this are reported as ill-conditioned.
pub const CONDITION_WARN_THRESHOLD: f64 = 1e6;

pub const PARAMETER_NAMES: [&str; 12] = [
    "m_xx", "m_xy", "m_xz", "m_yx", "m_yy", "m_yz", "m_zx", "m_zy", "m_zz", "b_x", "b_y", "b_z",
];

/// One turntable point: commanded rate and the time-averaged sensor output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationMeasurement {
    /// Reference angular rate [rad/s].
    pub known_rate: Vector3<f64>,
    /// Mean sensor output over the averaging window [rad/s].
    pub measured_mean: Vector3<f64>,
    /// Averaging window length [s].
    pub averaging_time: f64,
}

impl CalibrationMeasurement {
    pub fn new(
        known_rate: Vector3<f64>,
        measured_mean: Vector3<f64>,
        averaging_time: f64,
    ) -> Result<Self> {
        if !(averaging_time.is_finite() && averaging_time > 0.0) {
            return Err(Error::InvalidParameter(
                "averaging_time must be > 0".into(),
            ));
        }
        if known_rate.iter().chain(measured_mean.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "rates and means must be finite".into(),
            ));
        }
        Ok(Self {
            known_rate,
            measured_mean,
            averaging_time,
        })
    }
}

/// The twelve-parameter solution: distortion rows stacked, then biases.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationParams {
    /// Rows of the distortion matrix, row-major.
    pub m_vec: [f64; 9],
    /// Bias estimate [rad/s].
    pub bias: Vector3<f64>,
}

impl CalibrationParams {
    /// Reassemble the distortion matrix, enforcing its invertibility invariant.
    pub fn distortion(&self) -> Result<DistortionMatrix> {
        DistortionMatrix::new(nalgebra::Matrix3::from_row_slice(&self.m_vec))
    }

    pub fn as_vector(&self) -> DVector<f64> {
        let mut x = DVector::zeros(12);
        for (i, v) in self.m_vec.iter().enumerate() {
            x[i] = *v;
        }
        for axis in 0..3 {
            x[9 + axis] = self.bias[axis];
        }
        x
    }
}

/// Stacked least-squares system `A x = y` with `A` of size (3k) x 12.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
}

/// Solution plus the diagnostics a report needs.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSolution {
    pub params: CalibrationParams,
    /// `||A x - y||_2` at the solution [rad/s].
    pub residual_norm: f64,
    /// Ratio of extreme singular values of `A`.
    pub condition: f64,
}

impl CalibrationSolution {
    pub fn is_ill_conditioned(&self) -> bool {
        self.condition > CONDITION_WARN_THRESHOLD
    }

    /// Structured text report: matrix, bias, residual norm, condition.
    pub fn report(&self) -> String {
        let m = &self.params.m_vec;
        let mut out = String::new();
        out.push_str("distortion_matrix:\n");
        for row in 0..3 {
            out.push_str(&format!(
                "  {:+.9e} {:+.9e} {:+.9e}\n",
                m[3 * row],
                m[3 * row + 1],
                m[3 * row + 2]
            ));
        }
        out.push_str(&format!(
            "bias_rad_s: {:+.9e} {:+.9e} {:+.9e}\n",
            self.params.bias[0], self.params.bias[1], self.params.bias[2]
        ));
        out.push_str(&format!("residual_norm_rad_s: {:.6e}\n", self.residual_norm));
        out.push_str(&format!("condition_estimate: {:.6e}\n", self.condition));
        if self.is_ill_conditioned() {
            out.push_str("warning: condition estimate exceeds 1e6\n");
        }
        out
    }
}

/// Stack measurements into the calibration system.
pub fn assemble_system(measurements: &[CalibrationMeasurement]) -> Result<LinearSystem> {
    if measurements.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one measurement is required".into(),
        ));
    }
    let rows = 3 * measurements.len();
    let mut a = DMatrix::zeros(rows, 12);
    let mut y = DVector::zeros(rows);
    for (k, meas) in measurements.iter().enumerate() {
        for axis in 0..3 {
            let row = 3 * k + axis;
            for j in 0..3 {
                a[(row, 3 * axis + j)] = meas.known_rate[j];
            }
            a[(row, 9 + axis)] = 1.0;
            y[row] = meas.measured_mean[axis];
        }
    }
    Ok(LinearSystem { a, y })
}

/// Least-squares solve of an assembled system.
///
/// Rank is established from the singular values; a numerical rank below 12
/// is an error naming the unobservable parameters instead of returning a
/// silently meaningless solution.
pub fn solve_calibration(system: &LinearSystem) -> Result<CalibrationSolution> {
    let a = &system.a;
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    if !(sigma_max.is_finite() && sigma_max > 0.0) {
        return Err(Error::Numerical("system matrix is zero or non-finite".into()));
    }
    let tol = sigma_max * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < 12 {
        let v_t = svd.v_t.as_ref().expect("v_t requested");
        let mut unobservable = Vec::new();
        for param in 0..12 {
            // Component of the parameter direction inside the null space.
            let null_mass: f64 = svd
                .singular_values
                .iter()
                .enumerate()
                .filter(|(_, &s)| s <= tol)
                .map(|(i, _)| v_t[(i, param)] * v_t[(i, param)])
                .sum();
            if null_mass > 0.25 {
                unobservable.push(PARAMETER_NAMES[param].to_string());
            }
        }
        return Err(Error::RankDeficient {
            rank,
            expected: 12,
            unobservable,
        });
    }
    let sigma_min = svd.singular_values.min();
    let condition = sigma_max / sigma_min;

    // QR solve: R x = Q^T y.
    let qr = a.clone().qr();
    let mut rhs = qr.q().transpose() * &system.y;
    let r = qr.r();
    if !r.solve_upper_triangular_mut(&mut rhs) {
        return Err(Error::Numerical(
            "upper-triangular solve failed despite full rank".into(),
        ));
    }
    let x = rhs;

    let residual_norm = (a * &x - &system.y).norm();
    let mut m_vec = [0.0; 9];
    m_vec.copy_from_slice(&x.as_slice()[..9]);
    let bias = Vector3::new(x[9], x[10], x[11]);

    Ok(CalibrationSolution {
        params: CalibrationParams { m_vec, bias },
        residual_norm,
        condition,
    })
}

/// Reference rates of the default protocol: both polarities on each axis plus
/// one stationary point (7 entries). The stationary point costs nothing and
/// tightens bias observability.
pub fn six_point_protocol(rate_magnitude: f64) -> Result<Vec<Vector3<f64>>> {
    if !(rate_magnitude.is_finite() && rate_magnitude > 0.0) {
        return Err(Error::InvalidParameter(
            "rate magnitude must be > 0".into(),
        ));
    }
    let w = rate_magnitude;
    Ok(vec![
        Vector3::new(w, 0.0, 0.0),
        Vector3::new(-w, 0.0, 0.0),
        Vector3::new(0.0, w, 0.0),
        Vector3::new(0.0, -w, 0.0),
        Vector3::new(0.0, 0.0, w),
        Vector3::new(0.0, 0.0, -w),
        Vector3::zeros(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_model::{apply_error_model, compose_distortion, ErrorModelParams};
    use crate::noise::NoiseCoefficients;
    use rand::Rng;

    fn simulate_measurements(
        params: &ErrorModelParams,
        rates: &[Vector3<f64>],
    ) -> Vec<CalibrationMeasurement> {
        rates
            .iter()
            .map(|&rate| {
                let out =
                    apply_error_model(&[rate], params, &[Vector3::zeros()]).unwrap();
                CalibrationMeasurement::new(rate, out[0], 60.0).unwrap()
            })
            .collect()
    }

    fn reference_params() -> ErrorModelParams {
        let d = compose_distortion(
            Vector3::new(0.015, -0.02, 0.01),
            [2e-3, -1e-3, 3e-3, 1.5e-3, -2.5e-3, 0.5e-3],
        )
        .unwrap();
        ErrorModelParams::new(
            d,
            Vector3::new(0.012, -0.024, 0.031),
            NoiseCoefficients::default(),
        )
        .unwrap()
    }

    #[test]
    fn stationary_block_structure() {
        let meas = CalibrationMeasurement::new(
            Vector3::zeros(),
            Vector3::new(0.01, 0.02, 0.03),
            60.0,
        )
        .unwrap();
        let sys = assemble_system(&[meas]).unwrap();
        assert_eq!(sys.a.nrows(), 3);
        for row in 0..3 {
            for col in 0..9 {
                assert_eq!(sys.a[(row, col)], 0.0);
            }
            for col in 9..12 {
                let expect = if col - 9 == row { 1.0 } else { 0.0 };
                assert_eq!(sys.a[(row, col)], expect);
            }
        }
    }

    #[test]
    fn unit_x_rate_block_structure() {
        let meas = CalibrationMeasurement::new(
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::zeros(),
            60.0,
        )
        .unwrap();
        let sys = assemble_system(&[meas]).unwrap();
        // Row 1 (x axis): 1 at column 1 (m_xx) and column 10 (b_x).
        let row = 0;
        for col in 0..12 {
            let expect = if col == 0 || col == 9 { 1.0 } else { 0.0 };
            assert_eq!(sys.a[(row, col)], expect, "col {col}");
        }
    }

    #[test]
    fn six_point_system_has_rank_12() {
        let rates = six_point_protocol(1.0).unwrap();
        let meas: Vec<_> = rates
            .iter()
            .map(|&r| CalibrationMeasurement::new(r, Vector3::zeros(), 60.0).unwrap())
            .collect();
        let sys = assemble_system(&meas).unwrap();
        assert_eq!(sys.a.nrows(), 21);
        // Independent rank oracle via SVD threshold.
        let svd = sys.a.clone().svd(false, false);
        let tol = svd.singular_values.max() * 21.0 * f64::EPSILON;
        let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        assert_eq!(rank, 12);
    }

    #[test]
    fn noise_free_round_trip_is_exact() {
        let params = reference_params();
        let rates = six_point_protocol(1.0).unwrap();
        let meas = simulate_measurements(&params, &rates);
        let solution = solve_calibration(&assemble_system(&meas).unwrap()).unwrap();

        // Pseudo-inverse oracle for the same system.
        let sys = assemble_system(&meas).unwrap();
        let pinv = (sys.a.transpose() * &sys.a)
            .try_inverse()
            .unwrap()
            * sys.a.transpose()
            * &sys.y;

        let truth = params.distortion.row_major();
        for i in 0..9 {
            let rel = (solution.params.m_vec[i] - truth[i]).abs() / truth[i].abs().max(1.0);
            assert!(rel < 1e-10, "m[{i}] rel err {rel:e}");
            assert!((solution.params.m_vec[i] - pinv[i]).abs() < 1e-9);
        }
        for axis in 0..3 {
            let rel = (solution.params.bias[axis] - params.bias[axis]).abs()
                / params.bias[axis].abs();
            assert!(rel < 1e-10, "bias[{axis}] rel err {rel:e}");
        }
        assert!(solution.residual_norm < 1e-12);
        assert!(!solution.is_ill_conditioned());
    }

    #[test]
    fn stationary_only_recovers_bias_and_flags_m() {
        let bias = Vector3::new(0.01, -0.02, 0.005);
        let meas =
            CalibrationMeasurement::new(Vector3::zeros(), bias, 60.0).unwrap();
        let err = solve_calibration(&assemble_system(&[meas]).unwrap()).unwrap_err();
        match err {
            Error::RankDeficient {
                rank,
                expected,
                unobservable,
            } => {
                assert_eq!(expected, 12);
                assert_eq!(rank, 3);
                for name in ["m_xx", "m_xy", "m_zz"] {
                    assert!(unobservable.contains(&name.to_string()), "{name} missing");
                }
                for name in ["b_x", "b_y", "b_z"] {
                    assert!(!unobservable.contains(&name.to_string()), "{name} flagged");
                }
            }
            other => panic!("unexpected error {other:?}"),
        }
        // The bias itself is decoupled at zero rate: it equals the measured
        // mean exactly, which the caller can read off the measurement.
        assert_eq!(meas.measured_mean, bias);
    }

    #[test]
    fn noisy_calibration_stays_under_one_percent() {
        // White noise sigma = 1 mrad/s averaged over 60 s at 200 Hz leaves
        // ~9e-6 rad/s on each measured mean.
        let params = reference_params();
        let truth = {
            let mut x = [0.0; 12];
            x[..9].copy_from_slice(&params.distortion.row_major());
            x[9] = params.bias[0];
            x[10] = params.bias[1];
            x[11] = params.bias[2];
            x
        };
        let rates = six_point_protocol(1.0).unwrap();
        let sigma_mean = 1e-3 / (60.0f64 * 200.0).sqrt();
        let mut worst: f64 = 0.0;
        for trial in 0..50 {
            let mut rng = crate::rng::stream_rng(4242, "calib-noise", &[trial]);
            let meas: Vec<_> = simulate_measurements(&params, &rates)
                .into_iter()
                .map(|mut m| {
                    for axis in 0..3 {
                        m.measured_mean[axis] +=
                            sigma_mean * rng.sample::<f64, _>(rand_distr::StandardNormal);
                    }
                    m
                })
                .collect();
            let solution = solve_calibration(&assemble_system(&meas).unwrap()).unwrap();
            let x = solution.params.as_vector();
            let mut err2 = 0.0;
            let mut ref2 = 0.0;
            for i in 0..12 {
                err2 += (x[i] - truth[i]) * (x[i] - truth[i]);
                ref2 += truth[i] * truth[i];
            }
            worst = worst.max((err2 / ref2).sqrt());
        }
        assert!(worst < 0.01, "worst relative parameter error {worst:e}");
    }

    #[test]
    fn estimate_spread_scales_with_averaging_length() {
        // Std of the bias estimate across trials tracks sigma/sqrt(n).
        let params = reference_params();
        let rates = six_point_protocol(1.0).unwrap();
        let sigma = 1e-3;
        let spread_for = |n_avg: f64, salt: u64| {
            let sigma_mean = sigma / n_avg.sqrt();
            let mut biases = Vec::new();
            for trial in 0..200u64 {
                let mut rng = crate::rng::stream_rng(salt, "calib-spread", &[trial]);
                let meas: Vec<_> = simulate_measurements(&params, &rates)
                    .into_iter()
                    .map(|mut m| {
                        for axis in 0..3 {
                            m.measured_mean[axis] +=
                                sigma_mean * rng.sample::<f64, _>(rand_distr::StandardNormal);
                        }
                        m
                    })
                    .collect();
                let sol = solve_calibration(&assemble_system(&meas).unwrap()).unwrap();
                biases.push(sol.params.bias[0]);
            }
            let mean = biases.iter().sum::<f64>() / biases.len() as f64;
            (biases.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>()
                / biases.len() as f64)
                .sqrt()
        };
        let s1 = spread_for(400.0, 1);
        let s2 = spread_for(1600.0, 2);
        let ratio = s1 / s2;
        assert!(
            (ratio - 2.0).abs() < 0.3,
            "spread ratio {ratio} should be ~2 for 4x averaging"
        );
    }

    #[test]
    fn protocol_shape() {
        let pts = six_point_protocol(2.5).unwrap();
        assert_eq!(pts.len(), 7);
        assert_eq!(pts[0], Vector3::new(2.5, 0.0, 0.0));
        assert_eq!(pts[5], Vector3::new(0.0, 0.0, -2.5));
        assert_eq!(pts[6], Vector3::zeros());
        assert!(six_point_protocol(0.0).is_err());
    }

    #[test]
    fn report_mentions_conditioning() {
        let params = reference_params();
        let rates = six_point_protocol(1.0).unwrap();
        let meas = simulate_measurements(&params, &rates);
        let solution = solve_calibration(&assemble_system(&meas).unwrap()).unwrap();
        let report = solution.report();
        assert!(report.contains("distortion_matrix"));
        assert!(report.contains("bias_rad_s"));
        assert!(report.contains("residual_norm_rad_s"));
        assert!(report.contains("condition_estimate"));
        assert!(!report.contains("warning"));
    }
}
