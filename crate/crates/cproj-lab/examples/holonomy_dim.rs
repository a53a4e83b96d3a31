//! Dimension of the parallel hermitian symmetric tensors, from sampled holonomy.
//!
//! cargo run --example holonomy_dim

use cproj_lab::catalog;
use cproj_lab::holonomy::{self, HolonomyConfig};

fn main() -> cproj_lab::Result<()> {
    let cfg = HolonomyConfig::default();
    let cases = [
        ("cone over flat(1)", catalog::conify(&catalog::flat(1)?)?),
        ("cone over fs(1)", catalog::conify(&catalog::fubini_study(1, 1.0)?)?),
        ("flat(1) x cone over flat(1)", catalog::product(&[catalog::flat(1)?, catalog::conify(&catalog::flat(1)?)?])?),
    ];
    for (label, e) in &cases {
        let ks = &e.structure;
        let base = ks.domain().center();
        let r = holonomy::parallel_tensor_dim_report(ks, &base, &cfg)?;
        println!("{label:<28} D = {}  stabilized {}  history {:?}", r.dimension, r.stabilized, r.history);
    }
    Ok(())
}
