mod support;

use proptest::prelude::*;

use mmdim::constructions::{build_stacked, BuildOptions, Schedule, System};
use mmdim::exact::int;
use mmdim::geometry::Point;
use mmdim::map::{Dynamics, MapState};
use mmdim::metric::{bowen_distance, distance, Distance, Metric};
use support::r;

fn system() -> System {
    let s = Schedule::geometric(int(1), int(1)).unwrap();
    System::Stacked(build_stacked(&s, 2, 3, BuildOptions::default()).unwrap())
}

fn point() -> impl Strategy<Value = Point> {
    (0i64..=720, 0i64..=720).prop_map(|(a, b)| Point(vec![r(a, 720), r(b, 720)]))
}

fn metric() -> impl Strategy<Value = Metric> {
    prop_oneof![Just(Metric::MaxNorm), Just(Metric::Euclidean)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn base_metric_axioms(x in point(), y in point(), z in point(), m in metric()) {
        let dxy = distance(m, &x, &y).to_f64();
        prop_assert_eq!(distance(m, &x, &y), distance(m, &y, &x));
        prop_assert_eq!(dxy == 0.0, x == y);
        let via = distance(m, &x, &z).to_f64() + distance(m, &z, &y).to_f64();
        prop_assert!(dxy <= via + 1e-12);
    }

    #[test]
    fn bowen_grows_with_m(x in point(), y in point(), m in metric()) {
        let sys = system();
        let mut prev: Option<Distance> = None;
        for steps in 1..=5 {
            let d = bowen_distance(&sys, &x, &y, steps, m).unwrap();
            prop_assert_eq!(&d, &bowen_distance(&sys, &y, &x, steps, m).unwrap());
            if let Some(p) = &prev {
                prop_assert!(d.distance >= *p);
            }
            prev = Some(d.distance);
        }
    }

    #[test]
    fn bowen_at_one_step_is_base(x in point(), y in point(), m in metric()) {
        let d = bowen_distance(&system(), &x, &y, 1, m).unwrap();
        prop_assert_eq!(d.distance, distance(m, &x, &y));
        prop_assert!(!d.truncated);
    }

    // Two distinct points that both stay inside never collide.
    #[test]
    fn injective_where_defined(x in point(), y in point()) {
        let sys = system();
        let fx = sys.apply(&MapState::Inside(x.clone()));
        let fy = sys.apply(&MapState::Inside(y.clone()));
        if let (Some(a), Some(b)) = (fx.point(), fy.point()) {
            prop_assert_eq!(a == b, x == y);
        }
    }

    #[test]
    fn escaped_is_absorbing(x in point()) {
        let sys = system();
        let mut s = MapState::Inside(x);
        let mut gone = false;
        for _ in 0..6 {
            s = sys.apply(&s);
            if gone {
                prop_assert!(s.is_escaped());
            }
            gone = s.is_escaped();
        }
    }
}

#[test]
fn euclid_compares_squares_exactly() {
    let x = Point(vec![r(0, 1), r(0, 1)]);
    let y = Point(vec![r(3, 5), r(4, 5)]);
    // |x - y| = 1 exactly.
    assert!(!mmdim::metric::exceeds(Metric::Euclidean, &x, &y, &r(1, 1)));
    assert!(mmdim::metric::exceeds(Metric::Euclidean, &x, &y, &r(99, 100)));
    assert!(!mmdim::metric::within_strict(Metric::Euclidean, &x, &y, &r(1, 1)));
}

#[test]
fn zero_steps_rejected() {
    let x = Point(vec![r(0, 1), r(0, 1)]);
    assert!(bowen_distance(&system(), &x, &x, 0, Metric::MaxNorm).is_err());
}
