mod support;

use mmdim::constructions::{build_stacked, BuildOptions, Schedule, StackedSystem, System};
use mmdim::estimators::{
    cylinder_centers, greedy_separated, greedy_spanning, grid_seeds, mdim_numeric_profile,
    RowStatus, SeedSet,
};
use mmdim::exact::{int, Rational};
use mmdim::geometry::{Cube, Point};
use mmdim::map::{Dynamics, MapState, Squared};
use mmdim::metric::Metric;
use support::r;

fn r1(k_max: u64) -> StackedSystem {
    let s = Schedule::geometric(int(1), int(1)).unwrap();
    build_stacked(&s, 2, k_max, BuildOptions::default()).unwrap()
}

/// Orbit under `f` by hand, stopping at the first escape.
fn orbit_by_hand(f: &dyn Fn(&MapState) -> MapState, x: &Point, m: usize) -> Vec<Point> {
    let mut out = vec![x.clone()];
    let mut s = MapState::Inside(x.clone());
    for _ in 1..m {
        s = f(&s);
        match s.point() {
            Some(p) => out.push(p.clone()),
            None => break,
        }
    }
    out
}

fn max_gap(a: &[Point], b: &[Point]) -> Rational {
    let mut best = int(0);
    for (p, q) in a.iter().zip(b) {
        for (u, v) in p.coords().iter().zip(q.coords()) {
            let d = if u > v { u - v } else { v - u };
            if d > best {
                best = d;
            }
        }
    }
    best
}

#[test]
fn separated_729_by_full_pairwise_matrix() {
    let sys = r1(2);
    let wrapped = System::Stacked(sys.clone());
    let sq = Squared(&wrapped);
    let seeds = cylinder_centers(&sys, 1, 3, 1 << 20).unwrap();
    let eps = r(1, 15);
    let res = greedy_separated(&sq, &seeds, 3, &eps, Metric::MaxNorm).unwrap();
    assert_eq!(res.len(), 729);
    let step = |s: &MapState| sq.apply(s);
    let orbits: Vec<Vec<Point>> = res.points.iter().map(|p| orbit_by_hand(&step, p, 3)).collect();
    assert!(orbits.iter().all(|o| o.len() == 3), "cylinder centers stay for 3 steps");
    for i in 0..orbits.len() {
        for j in i + 1..orbits.len() {
            assert!(max_gap(&orbits[i], &orbits[j]) > eps, "pair {i} {j}");
        }
    }
}

#[test]
fn counts_grow_with_m_and_shrink_with_eps() {
    let sys = r1(1);
    let wrapped = System::Stacked(sys.clone());
    let sq = Squared(&wrapped);
    let seeds = cylinder_centers(&sys, 1, 3, 1 << 20).unwrap();
    let mut prev = 0;
    for m in 1..=3 {
        let c = greedy_separated(&sq, &seeds, m, &r(1, 15), Metric::MaxNorm).unwrap().len();
        assert!(c >= prev, "m={m}");
        prev = c;
    }
    let mut prev = usize::MAX;
    for eps in [r(1, 40), r(1, 15), r(1, 6), r(1, 2)] {
        let c = greedy_separated(&sq, &seeds, 2, &eps, Metric::MaxNorm).unwrap().len();
        assert!(c <= prev, "eps={eps}");
        prev = c;
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let sys = r1(2);
    let wrapped = System::Stacked(sys.clone());
    let seeds = cylinder_centers(&sys, 1, 2, 1 << 20).unwrap();
    let grid = grid_seeds(&Cube::unit(2), 17);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let sq = Squared(&wrapped);
                (
                    greedy_separated(&sq, &seeds, 2, &r(1, 20), Metric::Euclidean).unwrap(),
                    greedy_spanning(&wrapped, &grid, 3, &r(1, 9), Metric::MaxNorm).unwrap(),
                )
            })
    };
    assert_eq!(run(1), run(4));
}

// On seeds with no pair at distance exactly eps, a maximal separated set is
// spanning, so the greedy spanning count cannot exceed it.
#[test]
fn spanning_never_exceeds_separated_without_ties() {
    let sys = r1(2);
    let wrapped = System::Stacked(sys);
    let seeds = grid_seeds(&Cube::unit(2), 13);
    let eps = r(1, 7);
    let step = |s: &MapState| wrapped.apply(s);
    let orbits: Vec<Vec<Point>> = seeds.points().map(|p| orbit_by_hand(&step, p, 2)).collect();
    for i in 0..orbits.len() {
        for j in i + 1..orbits.len() {
            let n = orbits[i].len().min(orbits[j].len());
            assert_ne!(max_gap(&orbits[i][..n], &orbits[j][..n]), eps, "tie at {i} {j}");
        }
    }
    for m in 1..=2 {
        let sep = greedy_separated(&wrapped, &seeds, m, &eps, Metric::MaxNorm).unwrap();
        let span = greedy_spanning(&wrapped, &seeds, m, &eps, Metric::MaxNorm).unwrap();
        assert!(span.verified && sep.verified);
        assert!(span.len() <= sep.len(), "m={m}: {} > {}", span.len(), sep.len());
    }
}

#[test]
fn numeric_matches_symbolic_at_first_block() {
    let sys = r1(2);
    let rows = mdim_numeric_profile(&sys, 1..=1, &[1, 2, 3], 1 << 20, Metric::MaxNorm);
    let row = &rows[0];
    assert_eq!(row.status, RowStatus::Ok);
    assert_eq!(row.counts, vec![(1, 9), (2, 81), (3, 729)]);
    // 2 ln 3 / ln 15
    assert!((row.eps_ratio - 0.811_367_742_164_425_8).abs() < 1e-9);
}

#[test]
fn numeric_row_statuses() {
    let sys = r1(1);
    let rows = mdim_numeric_profile(&sys, 1..=2, &[1, 2], 50, Metric::MaxNorm);
    assert_eq!(rows[0].status, RowStatus::BudgetExceeded);
    assert_eq!(rows[1].status, RowStatus::Unmaterialized);
    let sparse = Schedule::geometric(int(1), int(1))
        .unwrap()
        .with_active(mmdim::constructions::ActiveSet::SelfPowers);
    let s = build_stacked(&sparse, 2, 3, BuildOptions::default()).unwrap();
    let rows = mdim_numeric_profile(&s, 2..=2, &[1, 2], 1 << 20, Metric::MaxNorm);
    assert_eq!(rows[0].status, RowStatus::Inactive);
}

#[test]
fn empty_seed_set_and_bad_args() {
    let sys = System::Stacked(r1(1));
    let none = SeedSet::new(vec![]);
    assert!(greedy_separated(&sys, &none, 1, &r(1, 3), Metric::MaxNorm).unwrap().is_empty());
    assert!(greedy_separated(&sys, &none, 0, &r(1, 3), Metric::MaxNorm).is_err());
    assert!(greedy_spanning(&sys, &none, 1, &int(0), Metric::MaxNorm).is_err());
}

fn separated_by_hand(a: &[Point], b: &[Point], eps: &Rational) -> bool {
    a.iter().zip(b).any(|(p, q)| max_gap(std::slice::from_ref(p), std::slice::from_ref(q)) > *eps)
}

// Plain quadratic greedy over hand-computed orbits; escapes cut both orbits short.
#[test]
fn greedy_matches_quadratic_reference() {
    let wrapped = System::Stacked(r1(2));
    let step = |s: &MapState| wrapped.apply(s);
    for (per_axis, eps) in [(19u64, r(1, 23)), (31, r(1, 40)), (12, r(2, 9))] {
        let seeds = grid_seeds(&Cube::unit(2), per_axis);
        for m in 1..=3 {
            let orbits: Vec<Vec<Point>> = seeds.points().map(|p| orbit_by_hand(&step, p, m)).collect();
            let mut chosen: Vec<usize> = Vec::new();
            for i in 0..orbits.len() {
                if chosen.iter().all(|&j| separated_by_hand(&orbits[j], &orbits[i], &eps)) {
                    chosen.push(i);
                }
            }
            let got = greedy_separated(&wrapped, &seeds, m, &eps, Metric::MaxNorm).unwrap();
            assert_eq!(got.chosen, chosen, "grid {per_axis} eps {eps} m {m}");
            assert!(got.verified);
        }
    }
}
