//! Base metrics and the Bowen metric `d_m(x, y) = max_{i<m} d(f^i x, f^i y)`.
//!
//! Max-norm distances are exact rationals. Euclidean distances are carried as
//! exact squared values so that `d > eps` is decided by `d^2 > eps^2`.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{to_f64, Rational};
use crate::geometry::Point;
use crate::map::{Dynamics, MapState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    MaxNorm,
    Euclidean,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maxnorm" | "max" => Ok(Metric::MaxNorm),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(Error::param(
                "metric",
                format!("unknown metric {other:?} (expected maxnorm|euclidean)"),
            )),
        }
    }
}

/// An exact distance value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Distance {
    Max(Rational),
    /// Squared Euclidean distance.
    SquaredEuclid(Rational),
}

impl Distance {
    pub fn zero(metric: Metric) -> Self {
        match metric {
            Metric::MaxNorm => Distance::Max(Rational::zero()),
            Metric::Euclidean => Distance::SquaredEuclid(Rational::zero()),
        }
    }

    /// Value comparable across points of the same metric.
    fn key(&self) -> &Rational {
        match self {
            Distance::Max(d) | Distance::SquaredEuclid(d) => d,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.key().is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Distance::Max(d) => to_f64(d),
            Distance::SquaredEuclid(d) => to_f64(d).sqrt(),
        }
    }
}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Distance::Max(a), Distance::Max(b))
            | (Distance::SquaredEuclid(a), Distance::SquaredEuclid(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }
}

pub fn distance(metric: Metric, x: &Point, y: &Point) -> Distance {
    let diffs = x.coords().iter().zip(y.coords()).map(|(a, b)| (a - b).abs());
    match metric {
        Metric::MaxNorm => Distance::Max(diffs.max().unwrap_or_else(Rational::zero)),
        Metric::Euclidean => Distance::SquaredEuclid(diffs.map(|d| &d * &d).sum()),
    }
}

/// Strict test `d > eps`.
pub fn compare_separation(d: &Distance, eps: &Rational) -> bool {
    match d {
        Distance::Max(d) => d > eps,
        Distance::SquaredEuclid(d2) => *d2 > eps * eps,
    }
}

/// `d(x, y) > eps` with an early exit per coordinate for the max-norm.
pub fn exceeds(metric: Metric, x: &Point, y: &Point, eps: &Rational) -> bool {
    match metric {
        Metric::MaxNorm => x
            .coords()
            .iter()
            .zip(y.coords())
            .any(|(a, b)| (a - b).abs() > *eps),
        Metric::Euclidean => compare_separation(&distance(metric, x, y), eps),
    }
}

/// `d(x, y) < eps`.
pub fn within_strict(metric: Metric, x: &Point, y: &Point, eps: &Rational) -> bool {
    match distance(metric, x, y) {
        Distance::Max(d) => d < *eps,
        Distance::SquaredEuclid(d2) => d2 < eps * eps,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BowenDistance {
    pub distance: Distance,
    /// Set when an orbit escaped before step `m`; the max then runs over the
    /// steps where both orbits were still inside.
    pub truncated: bool,
    pub steps_compared: usize,
}

pub fn bowen_distance<D: Dynamics + ?Sized>(
    map: &D,
    x: &Point,
    y: &Point,
    m: usize,
    metric: Metric,
) -> Result<BowenDistance> {
    if m == 0 {
        return Err(Error::ZeroSteps);
    }
    Ok(bowen_from_orbits(
        &map.orbit(x, m),
        &map.orbit(y, m),
        metric,
    ))
}

/// Bowen distance from precomputed orbits of equal length.
pub fn bowen_from_orbits(ox: &[MapState], oy: &[MapState], metric: Metric) -> BowenDistance {
    let mut best = Distance::zero(metric);
    let mut steps = 0;
    for (a, b) in ox.iter().zip(oy) {
        let (Some(a), Some(b)) = (a.point(), b.point()) else {
            return BowenDistance {
                distance: best,
                truncated: true,
                steps_compared: steps,
            };
        };
        let d = distance(metric, a, b);
        if d > best {
            best = d;
        }
        steps += 1;
    }
    BowenDistance {
        distance: best,
        truncated: false,
        steps_compared: steps,
    }
}

/// Outcome of comparing two orbits against a threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrbitComparison {
    pub separated: bool,
    pub truncated: bool,
}

/// `d_m(x, y) > eps` from orbits, stopping at the first separating step.
pub fn orbits_separated(
    ox: &[MapState],
    oy: &[MapState],
    eps: &Rational,
    metric: Metric,
) -> OrbitComparison {
    for (a, b) in ox.iter().zip(oy) {
        let (Some(a), Some(b)) = (a.point(), b.point()) else {
            return OrbitComparison {
                separated: false,
                truncated: true,
            };
        };
        if exceeds(metric, a, b, eps) {
            return OrbitComparison {
                separated: true,
                truncated: false,
            };
        }
    }
    OrbitComparison {
        separated: false,
        truncated: false,
    }
}

/// `d_m(x, y) < eps` from orbits, stopping at the first step where it fails.
pub fn orbits_within_strict(
    ox: &[MapState],
    oy: &[MapState],
    eps: &Rational,
    metric: Metric,
) -> OrbitComparison {
    for (a, b) in ox.iter().zip(oy) {
        let (Some(a), Some(b)) = (a.point(), b.point()) else {
            return OrbitComparison {
                separated: false,
                truncated: true,
            };
        };
        if !within_strict(metric, a, b, eps) {
            return OrbitComparison {
                separated: true,
                truncated: false,
            };
        }
    }
    OrbitComparison {
        separated: false,
        truncated: false,
    }
}
