//! Named verification suites over a manifold description, and the JSON report
//! they produce.
//!
//! A run config looks like
//!
//! ```json
//! {"manifold": {"construct": "catalog", "key": "fubini_study", "params": {"n": 2}},
//!  "suite": "all", "seed": 0, "points": 6, "loops": 4}
//! ```
//!
//! Every check records `{name, max_residual, tolerance, pass}`. Module errors
//! become failed checks carrying the error text.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::catalog::{CatalogEntry, ManifoldSpec};
use crate::chart::{self, MetricField};
use crate::cone;
use crate::cproj::{self, CProjSolution};
use crate::error::{LabError, Result};
use crate::holonomy::{self, HolonomyConfig};
use crate::jplanar::{self, ProbeConfig};
use crate::kahler::{self, KahlerStructure};
use crate::linalg;
use crate::mobility::{self, Mode};
use crate::parallel;

pub const SCHEMA: &str = "cproj-lab/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Kahler,
    Cproj,
    Conify,
    Holonomy,
    Mobility,
    Jplanar,
    All,
}

impl Suite {
    pub const PARTS: [Suite; 6] = [Suite::Kahler, Suite::Cproj, Suite::Conify, Suite::Holonomy, Suite::Mobility, Suite::Jplanar];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Kahler => "kahler",
            Suite::Cproj => "cproj",
            Suite::Conify => "conify",
            Suite::Holonomy => "holonomy",
            Suite::Mobility => "mobility",
            Suite::Jplanar => "jplanar",
            Suite::All => "all",
        }
    }

    fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::PARTS.to_vec(),
            s => vec![s],
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Suite> {
        Suite::PARTS
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| LabError::SchemaError(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub kahler: f64,
    pub main_a: f64,
    pub triple: f64,
    pub cone: f64,
    pub lift: f64,
    pub readoff: f64,
    pub holonomy_generators: f64,
    pub einstein: f64,
    pub jplanar: f64,
    /// Lower bound for quantities that must not vanish (curvature, `∇A`).
    pub nonzero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kahler: 1e-7,
            main_a: 1e-7,
            triple: 1e-6,
            cone: 1e-6,
            lift: 1e-6,
            readoff: 1e-8,
            holonomy_generators: 1e-6,
            einstein: 1e-7,
            jplanar: 1e-5,
            nonzero: 1e-2,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let all = [
            ("kahler", self.kahler),
            ("main_a", self.main_a),
            ("triple", self.triple),
            ("cone", self.cone),
            ("lift", self.lift),
            ("readoff", self.readoff),
            ("holonomy_generators", self.holonomy_generators),
            ("einstein", self.einstein),
            ("jplanar", self.jplanar),
            ("nonzero", self.nonzero),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LabError::SchemaError(format!("tolerance '{name}' must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityRequest {
    pub n: usize,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub realize: Option<(usize, usize)>,
}

fn default_mode() -> Mode {
    Mode::General
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub manifold: Option<Value>,
    /// Second metric for the J-planar probe; by default the metric of the
    /// first catalog solution is used.
    #[serde(default)]
    pub partner: Option<Value>,
    #[serde(default = "default_suite")]
    pub suite: Suite,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_loops")]
    pub loops: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub mobility: Option<MobilityRequest>,
}

fn default_suite() -> Suite {
    Suite::All
}
fn default_points() -> usize {
    6
}
fn default_loops() -> usize {
    HolonomyConfig::default().loops
}
fn default_trials() -> usize {
    ProbeConfig::default().trials
}

impl RunConfig {
    pub fn for_manifold(manifold: Value, suite: Suite) -> RunConfig {
        RunConfig {
            manifold: Some(manifold),
            partner: None,
            suite,
            seed: 0,
            points: default_points(),
            loops: default_loops(),
            trials: default_trials(),
            tolerances: Tolerances::default(),
            mobility: None,
        }
    }

    /// Accepts a full run config, or a bare manifold tree (anything with a
    /// top-level `"construct"`).
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let v: Value = serde_json::from_str(text).map_err(|e| LabError::SchemaError(e.to_string()))?;
        let cfg = if v.get("construct").is_some() {
            RunConfig::for_manifold(v, Suite::All)
        } else {
            serde_json::from_value(v).map_err(|e| LabError::SchemaError(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        if self.points == 0 || self.loops == 0 {
            return Err(LabError::SchemaError("points and loops must be positive".into()));
        }
        for v in [&self.manifold, &self.partner].into_iter().flatten() {
            serde_json::from_value::<ManifoldSpec>(v.clone()).map_err(|e| LabError::SchemaError(e.to_string()))?;
        }
        let needs_manifold = self.suite.parts().iter().any(|s| *s != Suite::Mobility);
        if needs_manifold && self.manifold.is_none() {
            return Err(LabError::SchemaError(format!("suite '{}' needs a manifold", self.suite.name())));
        }
        if self.suite == Suite::Mobility && self.mobility.is_none() && self.manifold.is_none() {
            return Err(LabError::SchemaError("mobility suite needs 'mobility' or a manifold".into()));
        }
        Ok(())
    }

    pub fn holonomy(&self) -> HolonomyConfig {
        HolonomyConfig { loops: self.loops, seed: self.seed, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub max_residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    /// `"above"` for checks that need the value to exceed the tolerance.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, tol: f64) -> Check {
        Check { name: name.into(), max_residual: Some(value), tolerance: Some(tol), pass: value < tol, bound: None, error: None }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Check {
        Check {
            name: name.into(),
            max_residual: Some(value),
            tolerance: Some(threshold),
            pass: value > threshold,
            bound: Some("above".into()),
            error: None,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Check {
        Check { name: name.into(), max_residual: None, tolerance: None, pass, bound: None, error: None }
    }

    pub fn failed(name: impl Into<String>, e: &LabError) -> Check {
        Check { name: name.into(), max_residual: None, tolerance: None, pass: false, bound: None, error: Some(e.to_string()) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub suite: String,
    pub manifold: Option<Value>,
    pub config: Value,
    pub checks: Vec<Check>,
    pub data: Map<String, Value>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &str, suite: &str, manifold: Option<Value>, config: Value) -> Report {
        Report {
            schema: SCHEMA.into(),
            command: command.into(),
            suite: suite.into(),
            manifold,
            config,
            checks: Vec::new(),
            data: Map::new(),
            pass: true,
        }
    }

    pub fn extend(&mut self, out: SuiteOutput) {
        self.checks.extend(out.checks);
        for (k, v) in out.data {
            self.data.insert(k, v);
        }
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOutput {
    pub checks: Vec<Check>,
    pub data: Vec<(String, Value)>,
}

impl SuiteOutput {
    fn push(&mut self, name: &str, r: Result<Check>) {
        self.checks.push(r.unwrap_or_else(|e| Check::failed(name, &e)));
    }

    fn push_all(&mut self, name: &str, r: Result<Vec<Check>>) {
        match r {
            Ok(cs) => self.checks.extend(cs),
            Err(e) => self.checks.push(Check::failed(name, &e)),
        }
    }
}

fn build(v: &Value) -> Result<CatalogEntry> {
    serde_json::from_value::<ManifoldSpec>(v.clone()).map_err(|e| LabError::SchemaError(e.to_string()))?.build()
}

fn config_echo(cfg: &RunConfig) -> Value {
    json!({
        "seed": cfg.seed,
        "points": cfg.points,
        "loops": cfg.loops,
        "trials": cfg.trials,
        "tolerances": cfg.tolerances,
        "holonomy": cfg.holonomy(),
        "mobility": cfg.mobility,
        "partner": cfg.partner,
    })
}

/// Sample points in the middle of the domain.
fn sample(ks: &KahlerStructure, cfg: &RunConfig) -> Vec<Vec<f64>> {
    ks.domain().shrink(0.8).halton(cfg.points, cfg.seed)
}

pub fn kahler_suite(entry: &CatalogEntry, cfg: &RunConfig) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let ks = &entry.structure;
    let tol = cfg.tolerances.kahler;
    match kahler::kahler_residuals(ks, &sample(ks, cfg)) {
        Ok(r) => {
            for (name, v) in [
                ("hermitian", r.hermitian),
                ("j_squared", r.j_squared),
                ("nijenhuis", r.nijenhuis),
                ("nabla_j", r.nabla_j),
                ("d_omega", r.d_omega),
                ("nabla_omega", r.nabla_omega),
            ] {
                out.checks.push(Check::below(format!("kahler.{name}"), v, tol));
            }
            if let Some(v) = r.d_tau_minus_omega {
                out.checks.push(Check::below("kahler.d_tau", v, tol));
            }
        }
        Err(e) => out.checks.push(Check::failed("kahler", &e)),
    }
    if entry.key == "ricciflat4d" {
        out.push_all("ricciflat4d", ricciflat_bundle(entry, cfg));
    }
    out
}

/// The checks particular to the Ricci-flat 4-dimensional example: flat Ricci
/// tensor, nonzero curvature, `∇A ≠ 0` and the field `v` with `L_v g = 3g`.
fn ricciflat_bundle(entry: &CatalogEntry, cfg: &RunConfig) -> Result<Vec<Check>> {
    let ks = &entry.structure;
    let pts = sample(ks, cfg);
    let tol = &cfg.tolerances;
    let (mut ric, mut riem, mut na, mut lv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let a = entry.solution("A").ok_or_else(|| LabError::BadParams("missing solution A".into()))?;
    let v = entry.vector_field("v").ok_or_else(|| LabError::BadParams("missing field v".into()))?;
    let lvg = cproj::lie_derivative_metric(&ks.metric, v);
    for p in &pts {
        let c = chart::riemann_suite(&ks.metric, p)?;
        ric = ric.max(linalg::max_abs(&c.ricci));
        riem = riem.max(c.max_abs_riemann());
        let d = chart::covariant_derivative(&a.a, &ks.metric, p)?;
        na = na.max(d.iter().fold(0.0f64, |s, x| s.max(x.abs())));
        lv = lv.max(linalg::max_abs(&(lvg.matrix(p)? - ks.g_at(p)? * 3.0)));
    }
    let (_, field) = cproj::cproj_field_residual(ks, v, &pts)?;
    Ok(vec![
        Check::below("ricciflat4d.ricci", ric, tol.einstein),
        Check::above("ricciflat4d.riemann", riem, tol.nonzero),
        Check::above("ricciflat4d.nabla_a", na, tol.nonzero),
        Check::below("ricciflat4d.lie_v_g_minus_3g", lv, tol.main_a),
        Check::below("ricciflat4d.cproj_field_v", field, 10.0 * tol.main_a),
    ])
}

fn solution_checks(ks: &KahlerStructure, name: &str, sol: &CProjSolution, pts: &[Vec<f64>], tol: &Tolerances) -> Result<Vec<Check>> {
    let mut cs = vec![Check::below(format!("cproj.{name}.main_a"), cproj::main_a_residual(ks, sol, pts)?, tol.main_a)];
    let inv = sol.invariant_residuals(ks, pts)?;
    cs.push(Check::below(format!("cproj.{name}.type"), inv.iter().fold(0.0f64, |s, v| s.max(*v)), tol.main_a));
    if sol.mu.is_some() && sol.b.is_some() {
        cs.push(Check::below(format!("cproj.{name}.triple"), cproj::triple_residual(ks, sol, pts)?.max(), tol.triple));
    }
    Ok(cs)
}

pub fn cproj_suite(entry: &CatalogEntry, cfg: &RunConfig) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let ks = &entry.structure;
    let pts = sample(ks, cfg);
    let tol = &cfg.tolerances;
    for (name, sol) in &entry.solutions {
        out.push_all(&format!("cproj.{name}"), solution_checks(ks, name, sol, &pts, tol));
    }
    for (name, v) in &entry.vector_fields {
        let label = format!("cproj.field.{name}");
        out.push(&label, cproj::cproj_field_residual(ks, v, &pts).map(|(_, r)| Check::below(&label, r, 10.0 * tol.main_a)));
    }
    out.data.push(("solutions".into(), json!(entry.solutions.iter().map(|(n, _)| n).collect::<Vec<_>>())));
    out
}

fn cone_checks(entry: &CatalogEntry, cfg: &RunConfig) -> Result<(Vec<Check>, Value)> {
    let ks = &entry.structure;
    let tol = &cfg.tolerances;
    let cb = cone::conify(ks, None)?;
    let pts = cb.cone_points(cfg.points, cfg.seed);
    let mut cs = vec![
        Check::below("conify.kahler", kahler::kahler_residuals(&cb.cone, &pts)?.max(), tol.kahler),
        Check::below("conify.connection", cone::connection_residuals(&cb, &pts)?.max(), tol.cone),
        Check::below("conify.curvature", cone::cone_curvature_closed_form(&cb, &pts)?.max_residual(), tol.cone),
    ];
    let ppts = cb.p_points(cfg.points, cfg.seed);
    let sr = cone::sasaki_system_residual(&cb, &cone::SasakiTriple::metric(&cb), &ppts)?;
    cs.push(Check::below("conify.sasaki_metric", sr.system_max().max(sr.conditions_max()), tol.cone));
    for (name, sol) in &entry.solutions {
        if sol.b.is_none_or(|b| (b + 1.0).abs() > 1e-12) || sol.mu.is_none() {
            continue;
        }
        let ah = cone::lift_solution(&cb, sol)?;
        let lr = cone::lift_residuals(&cb, &ah, &pts)?;
        cs.push(Check::below(format!("conify.lift.{name}.parallel"), lr.parallel, tol.lift));
        cs.push(Check::below(format!("conify.lift.{name}.algebraic"), lr.symmetric.max(lr.hermitian), tol.readoff));
        let mu = sol.mu.as_ref().expect("checked");
        let mut worst = 0.0f64;
        for q in &pts {
            let x = &q[2..];
            let (am, l, m) = cone::read_off(&cb, &ah, q)?;
            worst = worst.max(linalg::max_abs(&(am - sol.a.matrix(x)?)));
            for (u, w) in l.iter().zip(sol.lambda.values(x)?) {
                worst = worst.max((u - w).abs());
            }
            worst = worst.max((m - mu.scalar_value(x)?).abs());
        }
        cs.push(Check::below(format!("conify.lift.{name}.readoff"), worst, tol.readoff));
    }
    let data = json!({"base_dim": ks.dim(), "cone_dim": cb.cone.dim()});
    Ok((cs, data))
}

pub fn conify_suite(entry: &CatalogEntry, cfg: &RunConfig) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    match cone_checks(entry, cfg) {
        Ok((cs, data)) => {
            out.checks = cs;
            out.data.push(("conify".into(), data));
        }
        Err(e) => out.checks.push(Check::failed("conify", &e)),
    }
    out
}

pub fn holonomy_suite(entry: &CatalogEntry, cfg: &RunConfig) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let ks = &entry.structure;
    let hc = cfg.holonomy();
    let base = ks.domain().center();
    match holonomy::parallel_tensor_dim_report(ks, &base, &hc) {
        Ok(r) => {
            out.checks.push(Check::flag("holonomy.stabilized", r.stabilized));
            out.data.push(("holonomy".into(), serde_json::to_value(&r).expect("serializes")));
        }
        Err(e) => out.checks.push(Check::failed("holonomy.stabilized", &e)),
    }
    let gens = holonomy::holonomy_algebra(ks, &base, &hc).and_then(|hs| holonomy::generator_residuals(ks, &hs));
    match gens {
        Ok((skew, comm)) => {
            out.checks.push(Check::below("holonomy.skew", skew, cfg.tolerances.holonomy_generators));
            out.checks.push(Check::below("holonomy.commutes_with_j", comm, cfg.tolerances.holonomy_generators));
        }
        Err(e) => out.checks.push(Check::failed("holonomy.generators", &e)),
    }
    out
}

pub fn mobility_suite(req: &MobilityRequest, cfg: &RunConfig) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    match mobility::enumerate(req.n, req.mode) {
        Ok(list) => {
            out.checks.push(Check::flag("mobility.list", !list.values.is_empty()));
            out.data.push(("mobility".into(), serde_json::to_value(&list).expect("serializes")));
        }
        Err(e) => out.checks.push(Check::failed("mobility.list", &e)),
    }
    if let Some((k, l)) = req.realize {
        let einstein = matches!(req.mode, Mode::Einstein | Mode::EssentialEinstein);
        let r = mobility::realization_plan(req.n, k, l, einstein).and_then(|p| mobility::realize_and_verify(&p, &cfg.holonomy()));
        match r {
            Ok(rep) => {
                out.checks.push(Check::flag("mobility.realize", rep.pass));
                if let Some(ric) = rep.ricci {
                    out.checks.push(Check::below("mobility.realize.ricci", ric, cfg.tolerances.cone));
                }
                out.data.push(("realization".into(), serde_json::to_value(&rep).expect("serializes")));
            }
            Err(e) => out.checks.push(Check::failed("mobility.realize", &e)),
        }
    }
    out
}

/// `g̃` for the probe: the partner, or the metric of the first catalog
/// solution that gives a nondegenerate one, or `g` itself.
fn probe_partner(entry: &CatalogEntry, cfg: &RunConfig) -> Result<(String, MetricField)> {
    let ks = &entry.structure;
    if let Some(p) = &cfg.partner {
        let e = build(p)?;
        if e.structure.dim() != ks.dim() {
            return Err(LabError::BadParams("partner has a different dimension".into()));
        }
        return Ok(("partner".into(), MetricField::new(e.structure.metric.field, ks.domain().clone())));
    }
    let pts = sample(ks, cfg);
    for (name, sol) in &entry.solutions {
        let Ok(gt) = cproj::metric_from_solution(&ks.metric, &sol.a, &pts) else { continue };
        let differs = pts.iter().any(|p| match (gt.at(p), ks.g_at(p)) {
            (Ok(a), Ok(b)) => linalg::max_abs(&(&a - &b * (a[(0, 0)] / b[(0, 0)]))) > 1e-6,
            _ => false,
        });
        if differs && pts.iter().all(|p| gt.check_nondegenerate(p).is_ok()) {
            return Ok((format!("solution:{name}"), gt));
        }
    }
    Ok(("self".into(), ks.metric.clone()))
}

pub fn probe_config(cfg: &RunConfig) -> ProbeConfig {
    ProbeConfig { trials: cfg.trials, seed: cfg.seed, ..Default::default() }
}

pub fn jplanar_suite(entry: &CatalogEntry, cfg: &RunConfig) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    let ks = &entry.structure;
    let pc = probe_config(cfg);
    let tol = cfg.tolerances.jplanar;
    let own = jplanar::equivalence_probe(&ks.metric, &ks.metric, &ks.complex, &ProbeConfig { trials: pc.trials.min(4), ..pc });
    out.checks.push(probe_check("jplanar.geodesics", &own, tol));
    match probe_partner(entry, cfg) {
        Ok((label, gt)) => {
            let rep = jplanar::equivalence_probe(&ks.metric, &gt, &ks.complex, &pc);
            out.checks.push(probe_check("jplanar.equivalence", &rep, tol));
            let per: Vec<Value> = rep.trials.iter().map(|t| json!({"forward": t.forward, "backward": t.backward})).collect();
            out.data.push(("jplanar".into(), json!({"partner": label, "trials": per})));
        }
        Err(e) => out.checks.push(Check::failed("jplanar.equivalence", &e)),
    }
    out
}

/// The first probe trial as a plottable curve.
pub fn jplanar_curve(cfg: &RunConfig) -> Result<jplanar::JPlanarCurve> {
    let m = cfg.manifold.as_ref().ok_or_else(|| LabError::SchemaError("no manifold".into()))?;
    let entry = build(m)?;
    let (_, gt) = probe_partner(&entry, cfg)?;
    let ks = &entry.structure;
    jplanar::trial_curve(&ks.metric, &gt, &ks.complex, &probe_config(cfg), 0)
}

fn probe_check(name: &str, rep: &jplanar::ProbeReport, tol: f64) -> Check {
    match rep.max_residual() {
        Some(r) => Check::below(name, r, tol),
        None => {
            let msg = rep
                .trials
                .iter()
                .find_map(|t| t.forward.as_ref().err().or(t.backward.as_ref().err()).cloned())
                .unwrap_or_default();
            Check { error: Some(msg), ..Check::flag(name, false) }
        }
    }
}

fn run_part(part: Suite, entry: Option<&CatalogEntry>, cfg: &RunConfig) -> SuiteOutput {
    if part == Suite::Mobility {
        // without an explicit request, list for the manifold's dimension (lists start at n = 2)
        let req = cfg.mobility.clone().or_else(|| {
            entry
                .map(|e| e.structure.complex_dim())
                .filter(|&n| n >= 2)
                .map(|n| MobilityRequest { n, mode: Mode::General, realize: None })
        });
        return match req {
            Some(r) => mobility_suite(&r, cfg),
            None => SuiteOutput::default(),
        };
    }
    let Some(entry) = entry else { return SuiteOutput::default() };
    match part {
        Suite::Kahler => kahler_suite(entry, cfg),
        Suite::Cproj => cproj_suite(entry, cfg),
        Suite::Conify => conify_suite(entry, cfg),
        Suite::Holonomy => holonomy_suite(entry, cfg),
        Suite::Jplanar => jplanar_suite(entry, cfg),
        Suite::Mobility | Suite::All => unreachable!(),
    }
}

/// Runs the configured suite. Suites run concurrently on the shared pool;
/// the report lists their checks in the fixed suite order.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    run_command("verify", cfg)
}

pub fn run_command(command: &str, cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let mut report = Report::new(command, cfg.suite.name(), cfg.manifold.clone(), config_echo(cfg));
    let entry = match &cfg.manifold {
        Some(m) => match build(m) {
            Ok(e) => Some(e),
            Err(LabError::SchemaError(s)) => return Err(LabError::SchemaError(s)),
            Err(e) => {
                report.extend(SuiteOutput { checks: vec![Check::failed("manifold", &e)], data: Vec::new() });
                return Ok(report);
            }
        },
        None => None,
    };
    if let Some(e) = &entry {
        report.data.insert("dimension".into(), json!(e.structure.dim()));
    }
    let parts = cfg.suite.parts();
    let outputs: Vec<SuiteOutput> = parallel::install(|| parts.par_iter().map(|p| run_part(*p, entry.as_ref(), cfg)).collect());
    for o in outputs {
        report.extend(o);
    }
    Ok(report)
}

/// Symmetric matrix as nested rows, for JSON dumps.
pub fn matrix_json(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

/// A JSON description of a catalog example at its domain center.
pub fn dump_example(entry: &CatalogEntry) -> Result<Value> {
    let ks = &entry.structure;
    let c = ks.domain().center();
    Ok(json!({
        "schema": SCHEMA,
        "key": entry.key,
        "params": entry.params,
        "dimension": ks.dim(),
        "domain": {"lo": ks.domain().lo, "hi": ks.domain().hi},
        "center": c,
        "metric_at_center": matrix_json(&ks.g_at(&c)?),
        "j_at_center": matrix_json(&ks.j_at(&c)?),
        "has_potential": ks.potential.is_some(),
        "solutions": entry.solutions.iter().map(|(n, s)| json!({"name": n, "b": s.b, "has_mu": s.mu.is_some()})).collect::<Vec<_>>(),
        "vector_fields": entry.vector_fields.iter().map(|(n, _)| n).collect::<Vec<_>>(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat2() -> Value {
        json!({"construct": "catalog", "key": "flat", "params": {"complex_dim": 2}})
    }

    #[test]
    fn flat_kahler_suite_passes() {
        let r = run(&RunConfig::for_manifold(flat2(), Suite::Kahler)).unwrap();
        assert!(r.pass, "{}", r.to_json());
        assert_eq!(r.schema, SCHEMA);
        assert!(r.checks.iter().any(|c| c.name == "kahler.nijenhuis"));
    }

    #[test]
    fn mobility_suite_lists_values() {
        let cfg = RunConfig {
            manifold: None,
            suite: Suite::Mobility,
            mobility: Some(MobilityRequest { n: 2, mode: Mode::General, realize: None }),
            ..RunConfig::for_manifold(Value::Null, Suite::Mobility)
        };
        let r = run(&cfg).unwrap();
        assert!(r.pass);
        assert_eq!(r.data["mobility"]["values"], json!([1, 2, 9]));
    }

    #[test]
    fn bad_tolerance_is_a_schema_error() {
        let text = r#"{"manifold": {"construct": "catalog", "key": "flat"}, "tolerances": {"kahler": 0}}"#;
        assert!(matches!(RunConfig::from_json(text), Err(LabError::SchemaError(_))));
        assert!(matches!(RunConfig::from_json(r#"{"suite": "kahler"}"#), Err(LabError::SchemaError(_))));
    }

    #[test]
    fn module_errors_become_failed_checks() {
        let m = json!({"construct": "catalog", "key": "flat", "params": {"complex_dim": 40}});
        let r = run(&RunConfig::for_manifold(m, Suite::Kahler)).unwrap();
        assert!(!r.pass);
        assert!(r.checks[0].error.is_some());
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = RunConfig::for_manifold(json!({"construct": "catalog", "key": "fubini_study", "params": {"n": 1}}), Suite::All);
        let a = run(&cfg).unwrap().to_json();
        let b = run(&cfg).unwrap().to_json();
        assert_eq!(a, b);
    }
}
