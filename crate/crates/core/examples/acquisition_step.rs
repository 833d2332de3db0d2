//! One ALEBO step by hand: sample an initial design in the embedding, fit the
//! Mahalanobis GP, and maximize expected improvement over the polytope.
//!
//! cargo run --release --example acquisition_step

use nalgebra::{DMatrix, DVector};

use alebo::acquisition::{optimize_acquisition, AcquisitionProblem};
use alebo::benchmarks::problem_by_id;
use alebo::embedding::{generate_embedding, FeasibleRegion, SearchDomain, Strategy};
use alebo::gp::{fit_gp, GpConfig, KernelKind};
use alebo::linalg::rng_from_seed;

fn main() -> alebo::Result<()> {
    let problem = problem_by_id("branin_d100")?;
    let spec = generate_embedding(Strategy::Hypersphere, 100, 4, 3)?;
    let domain = SearchDomain::for_region(&spec.feasible_region)?;

    let design = domain.sampler.sample(10, &mut rng_from_seed(4))?;
    let mut values = Vec::new();
    for u in &design {
        values.push(problem.evaluate(&spec.up_project(&domain.to_embedded(u))?)?.objective);
    }
    let x = DMatrix::from_fn(design.len(), 4, |i, j| design[i][j]);
    let y = DVector::from_vec(values.clone());
    let best = y.min();

    let fit = fit_gp(&x, &y, &GpConfig::new(KernelKind::Mahalanobis), 5)?;
    println!("fitted signal variance {:.3}, noise {:.2e}", fit.map_params.signal_variance, fit.map_params.noise_variance);
    println!("metric Gamma:\n{:.3}", fit.map_params.gamma());

    let region = FeasibleRegion::Polytope(domain.polytope().clone());
    let acq = AcquisitionProblem::new(fit, vec![], best, region)?;
    let cand = optimize_acquisition(&acq, 16, 6)?;
    let f = problem.evaluate(&spec.up_project(&domain.to_embedded(&cand.point))?)?.objective;
    println!("best of design {best:.3}; candidate EI {:.4}, f(candidate) {f:.3}", cand.value);
    Ok(())
}
