//! Deterministic sensor model: distortion matrix, constant bias, and their
//! application to true angular rates.
//!
//! A measured rate is `M * omega + b + w` where `M` couples scale-factor and
//! misalignment errors, `b` is the constant bias and `w` is whatever noise
//! realization the caller supplies. All units are rad/s.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::noise::NoiseCoefficients;

/// Determinant magnitude below which a distortion matrix is rejected as
/// non-physical.
pub const MIN_DETERMINANT: f64 = 1e-6;

/// Hard bound on scale-factor and misalignment magnitudes for generated
/// scenarios. Low-cost sensors sit orders of magnitude below this.
pub const MAX_DISTORTION_ENTRY: f64 = 0.5;

/// Unitless 3x3 gain/coupling matrix applied to true rates.
///
/// Always invertible: construction rejects `|det| <= 1e-6`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    m: Matrix3<f64>,
}

impl DistortionMatrix {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "distortion matrix entries must be finite".into(),
            ));
        }
        let det = m.determinant();
        if det.abs() <= MIN_DETERMINANT {
            return Err(Error::InvalidParameter(format!(
                "distortion matrix is numerically singular (|det| = {:.3e})",
                det.abs()
            )));
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    /// Diagonal minus one: the scale-factor part.
    pub fn scale_factors(&self) -> Vector3<f64> {
        Vector3::new(self.m[(0, 0)] - 1.0, self.m[(1, 1)] - 1.0, self.m[(2, 2)] - 1.0)
    }

    /// Off-diagonal entries, row-major: (xy, xz, yx, yz, zx, zy).
    pub fn misalignments(&self) -> [f64; 6] {
        [
            self.m[(0, 1)],
            self.m[(0, 2)],
            self.m[(1, 0)],
            self.m[(1, 2)],
            self.m[(2, 0)],
            self.m[(2, 1)],
        ]
    }

    /// Guaranteed to succeed by the construction invariant.
    pub fn inverse(&self) -> Matrix3<f64> {
        self.m
            .try_inverse()
            .expect("invariant: distortion matrix is invertible")
    }

    /// Rows stacked into a 9-vector, matching the calibration solution layout.
    pub fn row_major(&self) -> [f64; 9] {
        let m = &self.m;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }
}

/// Full deterministic + stochastic description of one simulated gyro.
#[derive(Debug, Clone)]
pub struct ErrorModelParams {
    pub distortion: DistortionMatrix,
    /// Constant bias [rad/s].
    pub bias: Vector3<f64>,
    pub noise: NoiseCoefficients,
}

impl ErrorModelParams {
    pub fn new(
        distortion: DistortionMatrix,
        bias: Vector3<f64>,
        noise: NoiseCoefficients,
    ) -> Result<Self> {
        if bias.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("bias must be finite".into()));
        }
        noise.validate()?;
        Ok(Self {
            distortion,
            bias,
            noise,
        })
    }

    /// Ideal sensor: identity distortion, zero bias, zero noise.
    pub fn ideal() -> Self {
        Self {
            distortion: DistortionMatrix::identity(),
            bias: Vector3::zeros(),
            noise: NoiseCoefficients::default(),
        }
    }
}

/// Estimated-minus-true bias, component-wise [rad/s].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasResidual {
    pub delta_b: Vector3<f64>,
}

impl BiasResidual {
    pub fn norm(&self) -> f64 {
        self.delta_b.norm()
    }
}

/// Build `I + diag(sf) + MA` with the six misalignment values placed
/// row-major at (xy, xz, yx, yz, zx, zy).
pub fn compose_distortion(sf: Vector3<f64>, ma: [f64; 6]) -> Result<DistortionMatrix> {
    if sf.iter().any(|v| !v.is_finite()) || ma.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "scale-factor and misalignment entries must be finite".into(),
        ));
    }
    if sf.iter().any(|v| v.abs() >= MAX_DISTORTION_ENTRY) {
        return Err(Error::InvalidParameter(format!(
            "|scale factor| must be < {MAX_DISTORTION_ENTRY}"
        )));
    }
    if ma.iter().any(|v| v.abs() >= MAX_DISTORTION_ENTRY) {
        return Err(Error::InvalidParameter(format!(
            "|misalignment| must be < {MAX_DISTORTION_ENTRY}"
        )));
    }
    let m = Matrix3::new(
        1.0 + sf[0],
        ma[0],
        ma[1],
        ma[2],
        1.0 + sf[1],
        ma[3],
        ma[4],
        ma[5],
        1.0 + sf[2],
    );
    DistortionMatrix::new(m)
}

/// Apply the sensor model per time step: `out_i = M * omega_i + b + w_i`.
pub fn apply_error_model(
    true_rates: &[Vector3<f64>],
    params: &ErrorModelParams,
    noise_realization: &[Vector3<f64>],
) -> Result<Vec<Vector3<f64>>> {
    if true_rates.len() != noise_realization.len() {
        return Err(Error::DimensionMismatch {
            context: "apply_error_model".into(),
            expected: format!("{} noise samples", true_rates.len()),
            actual: format!("{}", noise_realization.len()),
        });
    }
    let m = params.distortion.matrix();
    Ok(true_rates
        .iter()
        .zip(noise_realization)
        .map(|(omega, w)| m * omega + params.bias + w)
        .collect())
}

/// `delta_b = estimated - true_bias`, no hidden scaling.
pub fn bias_residual(estimated: Vector3<f64>, true_bias: Vector3<f64>) -> BiasResidual {
    BiasResidual {
        delta_b: estimated - true_bias,
    }
}
