//! J-planar curves and the equivalence probe. Writes one curve as CSV.
//!
//! cargo run --example jplanar_probe -- curve.csv

use cproj_lab::catalog;
use cproj_lab::cproj;
use cproj_lab::jplanar::{self, ProbeConfig, Profile};

fn main() -> cproj_lab::Result<()> {
    let fs = catalog::fubini_study(2, 1.0)?;
    let ks = &fs.structure;
    let c = jplanar::integrate_jplanar(ks, &[0.05, 0.0, -0.1, 0.1], &[0.2, -0.1, 0.1, 0.15],
        &Profile::Constant(0.3), &Profile::Polynomial(vec![1.0, -0.5]), 1.0, 200)?;
    let fit = jplanar::curve_residual(ks, &c)?;
    println!("J-planar curve: residual {:.2e}", fit.residual);

    // ricci-flat example: A gives a second metric with the same J-planar curves
    let e = catalog::ricciflat4d()?;
    let ks = &e.structure;
    let pts = ks.domain().shrink(0.8).halton(6, 3);
    let gt = cproj::metric_from_solution(&ks.metric, &e.solution("A").expect("A").a, &pts)?;
    let rep = jplanar::equivalence_probe(&ks.metric, &gt, &ks.complex, &ProbeConfig::default());
    println!("probe over {} trials: worst residual {:?}", rep.trials.len(), rep.max_residual());

    if let Some(path) = std::env::args().nth(1) {
        let curve = jplanar::trial_curve(&ks.metric, &gt, &ks.complex, &ProbeConfig::default(), 0)?;
        let f = std::fs::File::create(&path).map_err(|e| cproj_lab::LabError::BadParams(e.to_string()))?;
        jplanar::write_csv(&curve, std::io::BufWriter::new(f)).map_err(|e| cproj_lab::LabError::BadParams(e.to_string()))?;
        println!("wrote {path}");
    }
    Ok(())
}
