//! Ground vehicle moving along straight legs: position and velocity driven by a
//! force against viscous friction, observed by a GPS and two wheel encoders.

use nalgebra::{DMatrix, Matrix2, RowVector2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmodel::SystemModel;

pub const UGV_TAU: usize = 2;

/// Physical parameters of the vehicle and its sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UgvParams {
    pub mass: f64,
    pub friction: f64,
    pub dt: f64,
    /// Per-sample squared noise bound of the GPS and the two encoders.
    pub noise_sq_per_sample: [f64; 3],
}

impl Default for UgvParams {
    fn default() -> Self {
        UgvParams {
            mass: 0.8,
            friction: 1.0,
            dt: 0.1,
            noise_sq_per_sample: [0.2, 0.2, 0.2],
        }
    }
}

#[derive(Debug, Clone)]
pub struct UgvModel {
    pub params: UgvParams,
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    /// Window-level model: `tau = 2`, budget 1, window noise bound `sqrt(tau * per-sample bound)`.
    pub model: SystemModel,
}

impl UgvModel {
    /// Encoders are the sensors an attacker may corrupt.
    pub const ENCODERS: [usize; 2] = [1, 2];
    pub const GPS: usize = 0;

    pub fn c() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0])
    }

    pub fn per_sample_noise_bounds(&self) -> [f64; 3] {
        self.params.noise_sq_per_sample.map(f64::sqrt)
    }
}

/// Exact zero-order-hold discretization of `x' = v`, `v' = -(B_f/M) v + F/M`.
pub fn discretize_ugv(mass: f64, friction: f64, dt: f64) -> Result<UgvModel> {
    discretize_ugv_with(UgvParams {
        mass,
        friction,
        dt,
        ..Default::default()
    })
}

pub fn discretize_ugv_with(params: UgvParams) -> Result<UgvModel> {
    let UgvParams {
        mass,
        friction,
        dt,
        noise_sq_per_sample,
    } = params;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "mass = {mass} must be positive"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt} must be positive"
        )));
    }
    if !(friction >= 0.0 && friction.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "friction = {friction} must be non-negative"
        )));
    }
    if noise_sq_per_sample
        .iter()
        .any(|v| !(v.is_finite() && *v >= 0.0))
    {
        return Err(Error::InvalidArgument(
            "noise bounds must be finite and non-negative".into(),
        ));
    }
    let k = friction / mass;
    let (a, b) = if k * dt < 1e-8 {
        (
            Matrix2::new(1.0, dt, 0.0, 1.0),
            Vector2::new(dt * dt / (2.0 * mass), dt / mass),
        )
    } else {
        let decay = (-k * dt).exp();
        // -expm1 keeps (1 - e^{-k dt}) accurate for small k dt
        let one_minus = -(-k * dt).exp_m1();
        let phi = one_minus / k;
        (
            Matrix2::new(1.0, phi, 0.0, decay),
            Vector2::new((dt - phi) / (mass * k), one_minus / (mass * k)),
        )
    };
    let window_bounds: Vec<f64> = noise_sq_per_sample
        .iter()
        .map(|v| (UGV_TAU as f64 * v).sqrt())
        .collect();
    let model = SystemModel::new(
        DMatrix::from_column_slice(2, 2, a.as_slice()),
        DMatrix::from_column_slice(2, 1, b.as_slice()),
        UgvModel::c(),
        UGV_TAU,
        1,
        window_bounds,
    )?;
    Ok(UgvModel {
        params,
        a,
        b,
        model,
    })
}

/// State-feedback gain placing the closed-loop poles of `(a, b)` at `poles` (Ackermann).
pub fn place_poles(a: &Matrix2<f64>, b: &Vector2<f64>, poles: [f64; 2]) -> Result<RowVector2<f64>> {
    let ctrb = Matrix2::from_columns(&[*b, a * b]);
    let inv = ctrb
        .try_inverse()
        .ok_or_else(|| Error::InvalidModel("pair (A, B) is not controllable".into()))?;
    let (p1, p2) = (poles[0], poles[1]);
    let phi = a * a - a * (p1 + p2) + Matrix2::identity() * (p1 * p2);
    Ok(RowVector2::new(0.0, 1.0) * inv * phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn paper_parameters() {
        let ugv = discretize_ugv(0.8, 1.0, 0.1).unwrap();
        assert_relative_eq!(ugv.a[(1, 1)], (-0.125f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(ugv.a[(1, 1)], 0.8824969025845955, epsilon = 1e-15);
        assert_eq!(ugv.model.p(), 3);
        assert_relative_eq!(ugv.model.noise_bounds()[0], 0.4f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn frictionless_limit() {
        let ugv = discretize_ugv(2.0, 0.0, 0.5).unwrap();
        assert_eq!(ugv.a, Matrix2::new(1.0, 0.5, 0.0, 1.0));
        assert_relative_eq!(ugv.b[0], 0.0625, epsilon = 1e-15);
        assert_relative_eq!(ugv.b[1], 0.25, epsilon = 1e-15);
        let tiny = discretize_ugv(2.0, 1e-7, 0.5).unwrap();
        assert_relative_eq!(tiny.a, ugv.a, epsilon = 1e-6);
        assert_relative_eq!(tiny.b, ugv.b, epsilon = 1e-6);
    }

    #[test]
    fn small_step_approaches_identity() {
        let ugv = discretize_ugv(0.8, 1.0, 1e-9).unwrap();
        assert_relative_eq!(ugv.a, Matrix2::identity(), epsilon = 1e-8);
        assert!(ugv.b.norm() < 1e-8);
    }

    #[test]
    fn matches_series_expansion() {
        // exp([[0,1],[0,-k]] dt) via a long Taylor series of the augmented generator
        let (m, f, dt) = (0.8, 1.0, 0.1);
        let g = nalgebra::Matrix3::new(0.0, 1.0, 0.0, 0.0, -f / m, 1.0 / m, 0.0, 0.0, 0.0) * dt;
        let mut term = nalgebra::Matrix3::identity();
        let mut sum = term;
        for k in 1..30 {
            term = term * g / k as f64;
            sum += term;
        }
        let ugv = discretize_ugv(m, f, dt).unwrap();
        assert_relative_eq!(
            ugv.a,
            sum.fixed_view::<2, 2>(0, 0).into_owned(),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            ugv.b,
            sum.fixed_view::<2, 1>(0, 2).into_owned(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(discretize_ugv(0.0, 1.0, 0.1).is_err());
        assert!(discretize_ugv(0.8, 1.0, -0.1).is_err());
        assert!(discretize_ugv(0.8, -1.0, 0.1).is_err());
    }

    #[test]
    fn pole_placement() {
        let ugv = discretize_ugv(0.8, 1.0, 0.1).unwrap();
        let k = place_poles(&ugv.a, &ugv.b, [0.8, 0.85]).unwrap();
        let closed = ugv.a - ugv.b * k;
        let mut eig: Vec<f64> = closed.complex_eigenvalues().iter().map(|z| z.re).collect();
        eig.sort_by(f64::total_cmp);
        assert_relative_eq!(eig[0], 0.8, epsilon = 1e-9);
        assert_relative_eq!(eig[1], 0.85, epsilon = 1e-9);
    }
}
