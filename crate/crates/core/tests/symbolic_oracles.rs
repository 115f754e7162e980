mod support;

use num_bigint::{BigInt, BigUint};

use mmdim::constructions::{build_stacked, BuildOptions, Schedule};
use mmdim::exact::int;
use mmdim::geometry::{Cube, RBox};
use mmdim::horseshoe::build_horseshoe;
use mmdim::logexpr::LogExpr;
use mmdim::symbolic::{
    count_cylinders, cylinder_geometry, enumerate_cylinders, extrapolate, fit_limit,
    schedule_profile, selected_strips, CylinderCode,
};
use support::{ln_oracle, oracle_cylinders, pairwise_disjoint, pow3, r, ratio_decimal};

const W: u64 = 160;

fn sorted(mut v: Vec<RBox>) -> Vec<RBox> {
    v.sort_by(|a, b| a.lo().cmp(b.lo()).then(a.hi().cmp(b.hi())));
    v
}

#[test]
fn enumeration_matches_pullback_oracle() {
    for n in [2usize, 3] {
        let h = build_horseshoe(&Cube::unit(n), 3).unwrap();
        let sel = selected_strips(h.grid()).unwrap();
        for m in 1..=3 {
            let got: Vec<RBox> = enumerate_cylinders(&h, 1, m, 1 << 20)
                .unwrap()
                .into_iter()
                .map(|(_, b)| b)
                .collect();
            let want = oracle_cylinders(&h, &sel, m);
            assert_eq!(want.len(), 3usize.pow((n * m) as u32), "oracle n={n} m={m}");
            assert_eq!(sorted(got), sorted(want), "n={n} m={m}");
        }
    }
}

#[test]
fn small_enumerations_are_pairwise_disjoint() {
    for (n, m) in [(2usize, 1usize), (2, 2), (2, 3), (3, 1), (3, 2)] {
        let h = build_horseshoe(&Cube::unit(n), 3).unwrap();
        let boxes: Vec<RBox> = enumerate_cylinders(&h, 1, m, 1 << 20)
            .unwrap()
            .into_iter()
            .map(|(_, b)| b)
            .collect();
        assert!(pairwise_disjoint(&boxes), "n={n} m={m}");
    }
}

#[test]
fn selected_strips_small_cases() {
    let h2 = build_horseshoe(&Cube::unit(2), 3).unwrap();
    assert_eq!(selected_strips(h2.grid()).unwrap(), vec![1, 3, 5]);
    let h3 = build_horseshoe(&Cube::unit(3), 3).unwrap();
    assert_eq!(selected_strips(h3.grid()).unwrap(), vec![1, 7, 13]);
}

#[test]
fn first_axis_width_shrinks_by_s_squared() {
    let h = build_horseshoe(&Cube::unit(2), 3).unwrap();
    let cyl = enumerate_cylinders(&h, 1, 3, 1 << 20).unwrap();
    // widths 1/5, 1/125, 1/3125 at depths 1, 2, 3
    for (m, w) in [(1usize, r(1, 5)), (2, r(1, 125)), (3, r(1, 3125))] {
        let c = enumerate_cylinders(&h, 1, m, 1 << 20).unwrap();
        assert!(c.iter().all(|(_, b)| b.width(0) == w), "depth {m}");
    }
    assert!(cyl.iter().all(|(_, b)| b.width(1) == r(1, 5)));
}

#[test]
fn block_two_cylinder_lives_in_its_cube() {
    let s = Schedule::geometric(int(1), int(1)).unwrap();
    let sys = build_stacked(&s, 2, 2, BuildOptions::default()).unwrap();
    let h = sys.horseshoe(2).unwrap();
    let sel = selected_strips(h.grid()).unwrap();
    assert_eq!(sel.len(), 9);
    let word = vec![(sel[0], vec![1]), (sel[8], vec![17])];
    let b = cylinder_geometry(&sys, &CylinderCode::new(2, word).unwrap()).unwrap();
    assert!(h.cube().to_box().contains_box(&b));
    assert_eq!(count_cylinders(sys.schedule(), 2, 2, 2), BigUint::from(9u32).pow(4));
}

#[test]
fn foreign_strip_rejected() {
    let s = Schedule::geometric(int(1), int(1)).unwrap();
    let sys = build_stacked(&s, 2, 1, BuildOptions::default()).unwrap();
    let bad = CylinderCode::new(1, vec![(2, vec![1])]).unwrap();
    assert!(cylinder_geometry(&sys, &bad).is_err());
}

#[test]
fn library_log_agrees_with_halley_oracle() {
    for a in [2u32, 3, 5, 7, 10, 1_000_003] {
        let x = BigUint::from(a);
        let lib = LogExpr::ln(x.clone()).eval(W);
        let want = ln_oracle(&x, W);
        assert_eq!(lib.to_decimal(40), ratio_decimal(&want, &(BigInt::from(1) << W), 40), "ln {a}");
    }
    let big = pow3(3126) * 2u32 - 1u32;
    let lib = LogExpr::ln(big.clone()).eval(W).to_decimal(30);
    assert_eq!(lib, ratio_decimal(&ln_oracle(&big, W), &(BigInt::from(1) << W), 30));
}

#[test]
fn frozen_constants() {
    let two = LogExpr::ln(2u32).eval(W).to_decimal(40);
    assert_eq!(two, "0.6931471805599453094172321214581765680755");
    let three = LogExpr::ln(3u32).eval(W).to_decimal(39);
    assert_eq!(three, "1.098612288668109691395245236922525704647");
    let big = LogExpr::ln(pow3(3126) * 2u32 - 1u32).eval(W).to_decimal(36);
    assert_eq!(big, "3434.955161557070840610953842741273529296");
}

#[test]
fn upper_ratio_at_twelve_to_thirty_digits() {
    let s = Schedule::geometric(int(1), int(1)).unwrap();
    let p = schedule_profile(&s, 2, 12..=12, 30);
    // rate 24 ln 3 over ln(4 · 3^12 · (2·3^12 - 1))
    let num = ln_oracle(&BigUint::from(3u32), W) * 24;
    let den = ln_oracle(&(pow3(12) * 4u32 * (pow3(12) * 2u32 - 1u32)), W);
    assert_eq!(p.rows[0].upper_ratio_text, ratio_decimal(&num, &den, 30));
    let p = schedule_profile(&s, 2, 12..=12, 35);
    assert_eq!(p.rows[0].upper_ratio_text, "0.92689901239026541187112864595756974");
}

#[test]
fn lower_ratios_frozen() {
    let s = Schedule::geometric(int(1), int(1)).unwrap();
    let p = schedule_profile(&s, 2, 1..=24, 30);
    assert_eq!(p.rows[0].lower_ratio_text, "0.436785944220145180581204359225");
    assert_eq!(p.rows[23].lower_ratio_text, "0.948037103676031844387035792691");
    let q = schedule_profile(&Schedule::quadratic(int(1)).unwrap(), 2, 100..=100, 29);
    assert_eq!(q.rows[0].lower_ratio_text, "1.81764218973337040155004493525");
}

#[test]
fn eps_ratio_at_first_block() {
    // 2 ln 3 / ln 15
    let s = Schedule::geometric(int(1), int(1)).unwrap();
    let p = schedule_profile(&s, 2, 1..=1, 30);
    assert!((p.rows[0].eps_ratio - 0.811_367_742_164_425_8).abs() < 1e-15);
    assert_eq!(p.rows[0].eps_exact, Some(r(1, 15)));
}

#[test]
fn fit_recovers_exact_model() {
    let pts: Vec<(u64, f64)> = (5..=20).map(|k| (k, 1.5 - 0.75 / k as f64)).collect();
    let f = fit_limit(&pts).unwrap();
    assert!((f.c - 1.5).abs() < 1e-12 && (f.d - 0.75).abs() < 1e-12);
    assert!(f.rms_residual < 1e-12);
    assert!(fit_limit(&pts[..3]).is_err());
}

#[test]
fn too_few_rows_is_degenerate() {
    let s = Schedule::geometric(int(1), int(1)).unwrap();
    assert!(extrapolate(&schedule_profile(&s, 2, 1..=3, 20)).is_err());
}
