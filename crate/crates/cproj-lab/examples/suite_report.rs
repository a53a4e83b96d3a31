//! Catalog dump and a full suite report, as the CLI prints them.
//!
//! cargo run --example suite_report -- fubini_study '{"n": 1}'

use cproj_lab::catalog;
use cproj_lab::suite::{self, RunConfig, Suite};
use serde_json::{json, Value};

fn main() -> cproj_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let key = args.next().unwrap_or_else(|| "fubini_study".into());
    let params: Value = args.next().map(|p| serde_json::from_str(&p).expect("params must be JSON")).unwrap_or(json!({"n": 1}));

    let entry = catalog::get_example(&key, &params)?;
    let dump = suite::dump_example(&entry)?;
    println!("{}", serde_json::to_string_pretty(&dump).unwrap());

    let cfg = RunConfig::for_manifold(json!({"construct": "catalog", "key": key, "params": params}), Suite::All);
    let report = suite::run(&cfg)?;
    for c in &report.checks {
        println!("{} {}", if c.pass { "ok  " } else { "FAIL" }, c.name);
    }
    println!("exit code {}", report.exit_code());
    Ok(())
}
