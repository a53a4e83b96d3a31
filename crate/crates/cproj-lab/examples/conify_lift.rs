//! The cone over Fubini–Study, and solutions lifted to parallel tensors on it.
//!
//! cargo run --example conify_lift

use cproj_lab::catalog;
use cproj_lab::cone;
use cproj_lab::linalg;

fn main() -> cproj_lab::Result<()> {
    let fs = catalog::fubini_study(1, 1.0)?;
    let cb = cone::conify(&fs.structure, None)?;
    let q = cb.cone_points(4, 4);
    println!("cone dim {}  connection {:.2e}  curvature {:.2e}",
        cb.cone.dim(),
        cone::connection_residuals(&cb, &q)?.max(),
        cone::cone_curvature_closed_form(&cb, &q)?.max_residual());

    for (name, s) in &fs.solutions {
        if s.mu.is_none() {
            continue;
        }
        let ah = cone::lift_solution(&cb, s)?;
        let r = cone::lift_residuals(&cb, &ah, &q)?;
        let (a, _, _) = cone::read_off(&cb, &ah, &q[0])?;
        let back = linalg::max_abs(&(a - s.a.matrix(&q[0][2..])?));
        println!("{name:<8} |∇Â| {:.2e}  symmetric {:.1e}  hermitian {:.1e}  read-off {:.1e}",
            r.parallel, r.symmetric, r.hermitian, back);
    }
    Ok(())
}
