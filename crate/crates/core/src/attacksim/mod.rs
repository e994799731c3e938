//! Test-instance generation and closed-loop simulation under sensor attacks.

pub mod closed_loop;
pub mod generate;
pub mod ugv;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

pub use closed_loop::{
    run_closed_loop, simulate, AttackKind, AttackPhase, AttackScenario, Trace, TraceRow,
};
pub use generate::{
    generate_instance, generate_instance_with, GeneratedInstance, GeneratorOptions,
    ObservabilityLevel,
};
pub use ugv::{discretize_ugv, discretize_ugv_with, place_poles, UgvModel, UgvParams};

/// Uniform direction, radius `radius * U^{1/dim}`: uniform over the closed ball.
pub fn sample_in_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> DVector<f64> {
    if dim == 0 || radius == 0.0 {
        return DVector::zeros(dim);
    }
    let dir = loop {
        let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 1e-12 {
            break g / norm;
        }
    };
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    dir * r
}
