//! Possible degrees of mobility, and one realized on a cone.
//!
//! cargo run --example mobility

use cproj_lab::holonomy::HolonomyConfig;
use cproj_lab::mobility::{self, Mode};

fn main() -> cproj_lab::Result<()> {
    for n in 2..=6 {
        let g = mobility::enumerate(n, Mode::General)?;
        let e = mobility::enumerate(n, Mode::Einstein)?;
        println!("n = {n}  general {:?}  einstein {:?}", g.values, e.values);
    }
    let plan = mobility::realization_plan(3, 1, 1, false)?;
    println!("recipe {}", plan.recipe());
    let r = mobility::realize_and_verify(&plan, &HolonomyConfig::default())?;
    println!("expected {}  measured {}  pass {}", r.expected, r.measured.dimension, r.pass);
    Ok(())
}
