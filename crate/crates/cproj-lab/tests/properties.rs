use cproj_lab::catalog;
use cproj_lab::chart::{self, CurveSamples, MetricField, TransportConfig};
use cproj_lab::cproj;
use cproj_lab::jet::Jet;
use cproj_lab::jplanar::{self, ProbeConfig, Profile};
use cproj_lab::linalg;
use cproj_lab::mobility::{self, Mode};
use cproj_lab::suite::{self, RunConfig, Suite};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 12, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    // f(x, y) = sin(xy) e^y against hand-written partials
    #[test]
    fn jet_partials_match_closed_form(x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let v = Jet::coordinates(&[x, y], 3);
        let f = (&v[0] * &v[1]).sin() * v[1].exp();
        let (s, c, e) = ((x * y).sin(), (x * y).cos(), y.exp());
        prop_assert!((f.value() - s * e).abs() < 1e-14);
        prop_assert!((f.d1(0) - y * c * e).abs() < 1e-13);
        prop_assert!((f.d1(1) - (x * c + s) * e).abs() < 1e-13);
        prop_assert!((f.d2(0, 0) + y * y * s * e).abs() < 1e-12);
        prop_assert!((f.d2(0, 1) - (c - x * y * s + y * c) * e).abs() < 1e-12);
        prop_assert!((f.d3(0, 0, 0) + y.powi(3) * c * e).abs() < 1e-12);
    }

    #[test]
    fn transport_preserves_the_metric(seed in 0u64..1000) {
        let fs = catalog::fubini_study(2, 1.0).unwrap();
        let metric = &fs.structure.metric;
        let d = metric.domain.shrink(0.6);
        let pts = d.halton(3, seed);
        let frames = chart::transport_frames(metric, &pts, TransportConfig { steps_per_segment: 200 }).unwrap();
        let g0 = metric.at(&pts[0]).unwrap();
        for (p, f) in pts.iter().zip(&frames) {
            let g = metric.at(p).unwrap();
            prop_assert!(linalg::max_abs(&(f.transpose() * g * f - &g0)) < 1e-9);
        }
    }

    #[test]
    fn solutions_form_a_linear_space(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let fs = catalog::fubini_study(2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h1, i1) = catalog::random_hermitian(3, &mut rng);
        let (h2, i2) = catalog::random_hermitian(3, &mut rng);
        let s1 = catalog::fs_solution(&fs, &h1, &i1).unwrap();
        let s2 = catalog::fs_solution(&fs, &h2, &i2).unwrap();
        let s = s1.linear_combination(a, &s2, b).unwrap();
        let pts = fs.structure.domain().shrink(0.8).halton(3, seed);
        prop_assert!(cproj::main_a_residual(&fs.structure, &s, &pts).unwrap() < 1e-9);
        prop_assert!(cproj::triple_residual(&fs.structure, &s, &pts).unwrap().max() < 1e-9);
    }

    // γ(s) = c(φ(s)), φ(s) = s + k s², is again J-planar
    #[test]
    fn reparametrized_jplanar_curves_stay_jplanar(beta in -2.0f64..2.0, alpha in -0.5f64..0.5, k in 0.0f64..0.4) {
        let fs = catalog::fubini_study(2, 1.0).unwrap();
        let ks = &fs.structure;
        let c = jplanar::integrate_jplanar(ks, &[0.05, 0.0, -0.1, 0.1], &[0.2, -0.1, 0.1, 0.15],
            &Profile::Constant(alpha), &Profile::Constant(beta), 1.0, 400).unwrap();
        let mut r = CurveSamples::default();
        // same points, new parameter s = φ⁻¹(t)
        for (i, t) in c.samples.times.iter().enumerate() {
            let s = if k == 0.0 { *t } else { (-1.0 + (1.0 + 4.0 * k * t).sqrt()) / (2.0 * k) };
            let (d1, d2) = (1.0 + 2.0 * k * s, 2.0 * k);
            let v = &c.samples.velocities[i];
            let a = &c.samples.accelerations[i];
            r.times.push(s);
            r.points.push(c.samples.points[i].clone());
            r.velocities.push(v.iter().map(|x| d1 * x).collect());
            r.accelerations.push(v.iter().zip(a).map(|(x, y)| d2 * x + d1 * d1 * y).collect());
        }
        let fit = jplanar::jplanar_residual(&ks.metric, &ks.complex, &r).unwrap();
        prop_assert!(fit.residual < 1e-9);
    }

    #[test]
    fn constant_multiples_share_geodesics(c in 0.2f64..5.0, seed in 0u64..100) {
        let fs = catalog::fubini_study(2, 1.0).unwrap();
        let ks = &fs.structure;
        let scaled = MetricField::new(ks.metric.field.scaled(c), ks.domain().clone());
        let cfg = ProbeConfig { trials: 3, seed, steps: 100, ..Default::default() };
        let rep = jplanar::equivalence_probe(&ks.metric, &scaled, &ks.complex, &cfg);
        prop_assert!(rep.max_residual().unwrap() < 1e-10);
    }

    #[test]
    fn mobility_list_shape(n in 2usize..40) {
        let g = mobility::enumerate(n, Mode::General).unwrap().values;
        let e = mobility::enumerate(n, Mode::Einstein).unwrap().values;
        let a = mobility::enumerate(n, Mode::Affine).unwrap().values;
        prop_assert_eq!(*g.last().unwrap(), (n + 1) * (n + 1));
        prop_assert_eq!(g[g.len() - 2], (n - 1) * (n - 1) + 1);
        prop_assert!(e.iter().all(|x| g.contains(x)));
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(*a.last().unwrap(), n * n);
        prop_assert!(a.contains(&1));
    }

    #[test]
    fn reports_are_byte_identical(seed in 0u64..50) {
        let mut cfg = RunConfig::for_manifold(json!({"construct": "catalog", "key": "fubini_study", "params": {"n": 1}}), Suite::Kahler);
        cfg.seed = seed;
        let a = suite::run(&cfg).unwrap().to_json();
        let b = suite::run(&cfg).unwrap().to_json();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn hermitian_symmetric_packing_round_trips(vals in proptest::collection::vec(-5.0f64..5.0, 10)) {
        let s = linalg::vec_to_sym(&vals, 4);
        prop_assert_eq!(linalg::sym_to_vec(&s), vals);
        prop_assert!(linalg::max_abs(&(&s - s.transpose())) == 0.0);
    }
}
