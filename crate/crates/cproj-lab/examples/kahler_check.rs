//! Kähler and curvature checks on the catalog charts.
//!
//! cargo run --example kahler_check

use cproj_lab::catalog;
use cproj_lab::kahler;

fn main() -> cproj_lab::Result<()> {
    let entries = [catalog::flat(2)?, catalog::fubini_study(2, 1.0)?, catalog::ricciflat4d()?];
    for e in &entries {
        let ks = &e.structure;
        let pts = ks.domain().shrink(0.8).halton(6, 1);
        let rep = kahler::kahler_residuals(ks, &pts)?;
        let ein = kahler::einstein_residual(ks, &pts)?;
        println!("{:<14} dim {}  kahler {:.2e}  einstein spread {:.2e}", e.key, ks.dim(), rep.max(), ein.spread());
    }
    // constant holomorphic sectional curvature of Fubini–Study
    let fs = &entries[1].structure;
    let pts = fs.domain().shrink(0.8).halton(6, 2);
    println!("fubini_study holomorphic curvature fit {:.6}", kahler::fit_holomorphic_curvature(fs, &pts)?);
    Ok(())
}
