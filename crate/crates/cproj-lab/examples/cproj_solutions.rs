//! Solutions of the c-projective equation: catalog ones, random ones on
//! Fubini–Study, and the one a pair of metrics produces.
//!
//! cargo run --example cproj_solutions

use cproj_lab::catalog;
use cproj_lab::cproj;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cproj_lab::Result<()> {
    let fs = catalog::fubini_study(2, 1.0)?;
    let ks = &fs.structure;
    let pts = ks.domain().shrink(0.8).halton(6, 3);

    for (name, s) in &fs.solutions {
        let t = cproj::triple_residual(ks, s, &pts)?;
        println!("{name:<10} mainA {:.2e}  triple {:.2e}", cproj::main_a_residual(ks, s, &pts)?, t.max());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (hr, hi) = catalog::random_hermitian(3, &mut rng);
    let s = catalog::fs_solution(&fs, &hr, &hi)?;
    let fit = cproj::fit_mu_b(ks, &s, &pts)?;
    println!("random     mainA {:.2e}  B {:.6}", cproj::main_a_residual(ks, &s, &pts)?, fit.b);

    // a second metric with the same J-planar curves, from a projective transformation
    let pr = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5]);
    let pi = DMatrix::zeros(3, 3);
    let gt = catalog::fs_projective_pullback(&fs, &pr, &pi)?;
    let (pair, sol) = cproj::solution_from_metric_pair(ks, &gt, &pts)?;
    println!("pair       mainA {:.2e}  connection change {:.2e}",
        cproj::main_a_residual(ks, &sol, &pts)?,
        cproj::connection_change_residual(&pair, ks, &pts)?);
    let back = cproj::metric_from_solution(&ks.metric, &sol.a, &pts)?;
    let p = &pts[0];
    println!("g~ recovered from A: {:.2e}", cproj_lab::linalg::max_abs(&(back.at(p)? - gt.at(p)?)));
    Ok(())
}
