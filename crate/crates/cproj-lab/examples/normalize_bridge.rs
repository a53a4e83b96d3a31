//! Normalizing B to −1, and the A ↔ φ ↔ ψ translation.
//!
//! cargo run --example normalize_bridge

use cproj_lab::catalog;
use cproj_lab::cproj::{self, BridgeInput, Normalization};
use nalgebra::DMatrix;

fn main() -> cproj_lab::Result<()> {
    let fl = catalog::flat(2)?;
    let pts = fl.structure.domain().shrink(0.8).halton(6, 5);
    let trans = fl.solution("translation").expect("flat has a translation solution");
    match cproj::normalize_b(&fl.structure, trans, &pts)? {
        Normalization::Unchanged => println!("already B = -1"),
        Normalization::Rescaled { factor, .. } => println!("rescaled by {factor}"),
        Normalization::Deformed(d) => {
            println!("deformed at t0 = {:.4}: B~ = {:.6} (spread {:.1e}), |f'(0)+1| = {:.1e}",
                d.t0, d.b_tilde, d.b_tilde_spread, d.f_prime_zero_error);
            let s = d.transfer(&fl.structure, fl.solution("radial").expect("radial"));
            println!("radial solution on the new metric: mainA {:.2e}", cproj::main_a_residual(&d.structure, &s, &pts)?);
        }
    }

    let fs = catalog::fubini_study(3, 1.0)?;
    let ks = &fs.structure;
    let pts = ks.domain().shrink(0.8).halton(4, 3);
    let pr = DMatrix::from_fn(4, 4, |i, k| if i == k { 1.0 + i as f64 * 0.4 } else { 0.1 });
    let gt = catalog::fs_projective_pullback(&fs, &pr, &DMatrix::zeros(4, 4))?;
    let (_, sol) = cproj::solution_from_metric_pair(ks, &gt, &pts)?;
    let rep = cproj::twoform_bridge(ks, BridgeInput::A(sol.a), &pts)?;
    println!("{}", serde_json::to_string_pretty(&rep).unwrap());
    Ok(())
}
