//! Fixtures shared by the criterion benchmarks.

use decent_opt::algorithms::{self, OptimizerState};
use decent_opt::problems::{LossScale, QuadraticParams, QuadraticProblem};
use decent_opt::topology::{self, MixingMatrix};
use decent_opt::{AlgorithmKind, AlgorithmSpec, Result};

/// Heterogeneous quadratic on a ring, sized like the heterogeneity experiment.
pub struct Fixture {
    pub problem: QuadraticProblem,
    pub w: MixingMatrix,
    pub spec: AlgorithmSpec,
    pub state: OptimizerState,
}

pub fn ring_quadratic(kind: AlgorithmKind, n: usize, d: usize) -> Result<Fixture> {
    let params = QuadraticParams {
        n,
        d,
        p: 2 * d,
        c: 1.0,
        sigma: 0.2236,
        scale: LossScale::Mean,
    };
    let problem = QuadraticProblem::generate(&params, 7)?;
    let w = topology::build_ring(n)?;
    let spec = AlgorithmSpec::new(kind, 0.05, 0.9)?;
    let state = algorithms::init(&spec, &problem, &decent_opt::linalg::Vector::zeros(d))?;
    Ok(Fixture { problem, w, spec, state })
}
