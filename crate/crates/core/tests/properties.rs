//! Property tests for structural invariants.

use std::sync::OnceLock;

use proptest::prelude::*;
use rand::Rng;
use supercrit::harness::report::{num, Table};
use supercrit::harness::{classify_regime, ExperimentConfig, ExperimentKind, Regime};
use supercrit::lp::{self, DyadicPartition};
use supercrit::rng::{domain_stream, stream};
use supercrit::zvonkin::ZvonkinMap;
use supercrit::{Grid, GridField, LevyModel, SphericalMeasure};

fn stable_1d() -> &'static LevyModel {
    static M: OnceLock<LevyModel> = OnceLock::new();
    M.get_or_init(|| LevyModel::stable_like(0.7, SphericalMeasure::axes(1, 1.0).unwrap()).unwrap())
}

fn cylindrical_2d() -> &'static LevyModel {
    static M: OnceLock<LevyModel> = OnceLock::new();
    M.get_or_init(|| LevyModel::stable_like(0.5, SphericalMeasure::axes(2, 1.0).unwrap()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn blocks_telescope_to_low_pass(r in 0.0f64..600.0, top in 0i32..9) {
        let sum: f64 = (-1..=top).map(|j| DyadicPartition::block(j, r)).sum();
        let chi = DyadicPartition::chi(r * 2f64.powi(-top - 1));
        prop_assert!((sum - chi).abs() < 1e-12);
        if r <= 2f64.powi(top) {
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn blocks_live_on_annuli(r in 0.0f64..600.0, j in 0i32..9) {
        let v = DyadicPartition::block(j, r);
        prop_assert!((0.0..=1.0).contains(&v));
        if v > 0.0 {
            prop_assert!(r > 2f64.powi(j - 1) && r < 2f64.powi(j + 1));
        }
        let low = DyadicPartition::block(-1, r);
        if low > 0.0 {
            prop_assert!(r < 1.0);
        }
    }

    #[test]
    fn rng_streams_are_reproducible(seed in any::<u64>(), i in 0u64..1000) {
        let a: Vec<u64> = (0..8).map({ let mut s = stream(seed, i); move |_| s.random() }).collect();
        let b: Vec<u64> = (0..8).map({ let mut s = stream(seed, i); move |_| s.random() }).collect();
        let c: Vec<u64> = (0..8).map({ let mut s = stream(seed, i + 1); move |_| s.random() }).collect();
        let d: Vec<u64> = (0..8).map({ let mut s = domain_stream(seed, "paths", i); move |_| s.random() }).collect();
        prop_assert_eq!(&a, &b);
        prop_assert_ne!(&a, &c);
        prop_assert_ne!(&a, &d);
    }

    #[test]
    fn regime_follows_alpha_and_balance(alpha in 0.001f64..1.999, beta in 0.0f64..=1.0) {
        let (regime, balance) = classify_regime(alpha, beta).unwrap();
        prop_assert_eq!(balance, alpha + beta >= 1.0);
        let expected = if alpha > 1.0 { Regime::Subcritical } else if alpha == 1.0 { Regime::Critical } else { Regime::Supercritical };
        prop_assert_eq!(regime, expected);
    }

    #[test]
    fn csv_numbers_round_trip(vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 1..6)) {
        let mut t = Table::new(&(0..vals.len()).map(|i| format!("c{i}")).collect::<Vec<_>>());
        t.push_nums(&vals);
        let text = t.to_csv().unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rec = r.records().next().unwrap().unwrap();
        let back: Vec<f64> = rec.iter().map(|s| s.parse().unwrap()).collect();
        prop_assert_eq!(back, vals);
    }

    #[test]
    fn csv_quotes_awkward_cells(cell in "[a-z,\" \n]{0,12}") {
        let mut t = Table::new(&["text", "x"]);
        t.push(vec![cell.clone(), num(1.5)]);
        let text = t.to_csv().unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rec = r.records().next().unwrap().unwrap();
        prop_assert_eq!(&rec[0], cell.as_str());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn symbol_has_nonpositive_real_part(x in -200.0f64..200.0) {
        let psi = stable_1d().symbol(&[x]).unwrap();
        prop_assert!(psi.re <= 1e-12, "{psi}");
        // symmetric measure: real and even
        let mirror = stable_1d().symbol(&[-x]).unwrap();
        prop_assert!(psi.im.abs() <= 1e-9 * (1.0 + psi.re.abs()));
        prop_assert!((psi - mirror).norm() <= 1e-9 * (1.0 + psi.norm()));
    }

    #[test]
    fn symbol_2d_has_nonpositive_real_part(x in -50.0f64..50.0, y in -50.0f64..50.0) {
        let psi = cylindrical_2d().symbol(&[x, y]).unwrap();
        prop_assert!(psi.re <= 1e-12, "{psi}");
    }

    #[test]
    fn blocks_reconstruct_resolved_fields(seed in any::<u64>(), s in 0.0f64..2.0) {
        let grid = Grid::periodic(1, 128).unwrap();
        let half = Grid::periodic(1, 64).unwrap();
        let f = lp::random_field(half, s, &mut stream(seed, 0)).upsample(2).unwrap();
        let part = DyadicPartition::for_grid(grid).unwrap();
        let mut sum = GridField::zeros(grid);
        for b in lp::blocks(&f, &part).unwrap() {
            sum = sum.add(&b).unwrap();
        }
        prop_assert!(sum.sub(&f).unwrap().max_abs() < 1e-10 * (1.0 + f.max_abs()));
    }

    #[test]
    fn zvonkin_inverse_undoes_forward(amp in 0.0f64..0.2, phase in 0.0f64..6.3, x in -10.0f64..10.0, t in 0.0f64..1.0) {
        let grid = Grid::periodic(1, 32).unwrap();
        let snap = |c: f64| vec![GridField::from_fn(grid, |p| c * amp * (p[0] + phase).sin())];
        let map = ZvonkinMap::from_snapshots(vec![0.0, 1.0], vec![snap(1.0), snap(0.5)], 1.0).unwrap();
        let y = map.forward(t, &[x]);
        let back = map.inverse(t, &y).unwrap();
        prop_assert!((back[0] - x).abs() < 1e-9);
    }

    #[test]
    fn configs_survive_toml(seed in any::<u64>(), n_exp in 2u32..8, alpha in 0.05f64..1.95) {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Simulate);
        cfg.seed = Some(seed);
        cfg.grid.n = 1 << n_exp;
        cfg.model.alpha = alpha;
        let text = cfg.to_toml().unwrap();
        prop_assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
    }
}
