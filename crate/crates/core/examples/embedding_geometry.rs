//! Builds the three embedding families for D = 100, d_e = 4, shows the
//! bounding box of the ALEBO polytope, and checks that sampled points map
//! into the ambient box without clipping.
//!
//! cargo run --release --example embedding_geometry

use alebo::embedding::{generate_embedding, generate_rembo_embedding, FeasibleRegion, SearchDomain, Strategy};
use alebo::linalg::rng_from_seed;

fn main() -> alebo::Result<()> {
    let (big_d, de) = (100, 4);
    for strategy in [Strategy::Hypersphere, Strategy::Gaussian, Strategy::Hesbo] {
        let spec = generate_embedding(strategy, big_d, de, 7)?;
        let domain = SearchDomain::for_region(&spec.feasible_region)?;
        let (lo, hi) = domain.sampler.bounds();
        let pts = domain.sampler.sample(1000, &mut rng_from_seed(1))?;
        let mut worst = 0.0f64;
        for u in &pts {
            let x = spec.up_project(&domain.to_embedded(u))?;
            worst = worst.max(x.amax());
        }
        let constraints = match &spec.feasible_region {
            FeasibleRegion::Polytope(p) => p.num_constraints(),
            FeasibleRegion::Box { .. } => 2 * de,
        };
        println!(
            "{strategy:>11}: {constraints} constraints, unit box [{:.0}, {:.0}], max |x_i| over 1000 samples {worst:.4}",
            lo.min(),
            hi.max()
        );
    }

    let rembo = generate_rembo_embedding(big_d, de, 7)?;
    let y = nalgebra::DVector::from_element(de, 1.0);
    let x = rembo.up_project(&y)?;
    let clipped = x.iter().filter(|v| v.abs() >= 1.0).count();
    println!("      REMBO: y = (1, .., 1) projects with {clipped} of {big_d} coordinates clipped to the box");
    Ok(())
}
