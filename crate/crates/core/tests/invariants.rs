use proptest::prelude::*;

use feller_core::approx::Regularized;
use feller_core::harness::config::CHECK_NAMES;
use feller_core::harness::{parse_config, serialize, Ledger, LedgerRow};
use feller_core::verifier::CheckReport;
use feller_core::{evolve, DriftField, Grid, GridSpec, ScalarState};

fn bump(center: f64, width: f64, height: f64) -> impl Fn(&[f64], f64) -> f64 {
    move |_, r| height * (-((r - center) / width).powi(2)).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nonnegative_data_stays_nonnegative_and_sup_never_grows(
        c in 0.0..0.4f64,
        m in 1u32..80,
        dt in prop::sample::select(vec![1e-3, 1e-2, 5e-2]),
        center in 0.0..2.0f64,
        width in 0.2..1.0f64,
        height in 0.0..10.0f64,
    ) {
        let g = Grid::build(GridSpec::Radial { d: 3, r_max: 10.0, n: 128 }).unwrap();
        let field = DriftField::hardy(1.0, 3).unwrap().scaled(c).unwrap();
        let src = Regularized::new(field, m);
        let f = ScalarState::new(0.0, g.sample(bump(center, width, height)));
        let traj = evolve(&src, &g, 0.0, 10.0 * dt, &f, dt, None).unwrap();
        for w in traj.states.windows(2) {
            prop_assert!(w[1].min() >= -1e-13);
            prop_assert!(w[1].sup_norm() <= w[0].sup_norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn ledgers_round_trip_byte_for_byte(
        rows in prop::collection::vec((
            prop::sample::select(CHECK_NAMES.to_vec()),
            any::<f64>().prop_filter("finite", |x| x.is_finite()),
            prop::option::of(any::<f64>().prop_filter("finite", |x| x.is_finite())),
            "[a-z0-9=;., ]{0,24}",
        ), 0..12),
    ) {
        let mut l = Ledger::default();
        for (name, v, bound, desc) in rows {
            l.push(LedgerRow::from(match bound {
                Some(b) => CheckReport::bounded(name, v, b, 0.0, desc),
                None => CheckReport::logged(name, v, desc),
            }));
        }
        let bytes = l.to_bytes();
        let back = Ledger::read(&bytes[..]).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn configs_are_a_serialization_fixed_point(
        seed in any::<u64>(),
        scale in -4.0..4.0f64,
        r_max in 6.0..40.0f64,
        n in 16usize..5000,
        steps in 1u32..400,
        dt in prop::sample::select(vec![1e-3, 2.5e-3, 1e-2]),
        ms in prop::collection::btree_set(1u32..200, 1..5),
        width in prop::option::of(0.05..1.0f64),
        kind in 0usize..3,
    ) {
        let ms: Vec<String> = ms.iter().map(u32::to_string).collect();
        let drift = ["kind = zero", "kind = hardy\nbeta_scale = 0.04", "kind = annulus\nc = 0.08\ndelta = 0.5\na_exp = 0.25\nbeta = 0.04"][kind];
        let text = format!(
            "[run]\nseed = {seed}\n\n[drift]\n{drift}\nscale = {scale}\n\n[grid]\nkind = radial\nd = 3\nr_max = {r_max}\nn = {n}\n\n\
             [approx]\nm = {}\n{}\n[time]\nt_end = {}\ndt = {dt}\n\n[checks]\nrun = e1, e3, formbound\n",
            ms.join(", "),
            width.map_or(String::new(), |w| format!("width = {w}\n")),
            f64::from(steps) * dt,
        );
        let cfg = parse_config(&text).unwrap();
        let once = serialize(&cfg);
        let again = parse_config(&once).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(serialize(&again), once);
    }
}
