//! Greedy separated and spanning sets under the Bowen metric, and the growth
//! rates and numeric profiles built on them.
//!
//! Orbits are computed in parallel; the greedy pass itself walks the seeds in
//! canonical order, so results do not depend on the thread count.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::{StackedSystem, System};
use crate::error::{Error, Result};
use crate::exact::{int, Rational};
use crate::geometry::{Cube, Point, RBox};
use crate::horseshoe::HorseshoeMap;
use crate::map::{Dynamics, MapState, Squared};
use crate::metric::{orbits_separated, orbits_within_strict, Metric};
use crate::symbolic::{centers, enumerate_cylinders};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedTag {
    CylinderCenter,
    Grid,
    User,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seed {
    pub point: Point,
    pub tag: SeedTag,
}

/// Seeds sorted by point, without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeedSet {
    seeds: Vec<Seed>,
}

impl SeedSet {
    pub fn new(mut seeds: Vec<Seed>) -> Self {
        seeds.sort_by(|a, b| a.point.cmp(&b.point));
        seeds.dedup_by(|a, b| a.point == b.point);
        SeedSet { seeds }
    }

    pub fn from_points(points: impl IntoIterator<Item = Point>, tag: SeedTag) -> Self {
        SeedSet::new(points.into_iter().map(|point| Seed { point, tag }).collect())
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.seeds.iter().map(|s| &s.point)
    }
}

/// Centers of the depth-`m` cylinders of block `k`.
pub fn cylinder_centers(system: &StackedSystem, k: u64, m: usize, budget: u64) -> Result<SeedSet> {
    let h = system.horseshoe(k)?;
    let cyl = enumerate_cylinders(h, k, m, budget)?;
    Ok(SeedSet::from_points(centers(&cyl), SeedTag::CylinderCenter))
}

/// Centers of the boxes `{x : φ^t(x) ∈ V_{l_t}, t < m}` over all words of odd
/// strips; the full coding of `φ` itself.
pub fn phi_cylinder_centers(h: &HorseshoeMap, m: usize, budget: u64) -> Result<SeedSet> {
    if m == 0 {
        return Err(Error::ZeroSteps);
    }
    let grid = h.grid();
    let total = BigUint::from(grid.leg_count()).pow(m as u32);
    if total > BigUint::from(budget) {
        return Err(Error::BudgetExceeded {
            needed: total.to_string(),
            budget,
        });
    }
    let strips: Vec<RBox> = grid.odd_strips().map(|l| grid.strip(l).bounds).collect();
    let piece_on = |b: &RBox| {
        h.pamap()
            .pieces()
            .iter()
            .find(|p| p.domain() == b)
            .expect("odd strip piece")
    };
    let mut level = strips.clone();
    for _ in 1..m {
        level = strips
            .par_iter()
            .flat_map_iter(|s| {
                let piece = piece_on(s);
                level.iter().filter_map(move |b| piece.preimage(b))
            })
            .filter(RBox::has_interior)
            .collect();
    }
    Ok(SeedSet::from_points(
        level.iter().map(RBox::center),
        SeedTag::CylinderCenter,
    ))
}

/// The `(per_axis)^n` points `lo + (i + 1/2) side / per_axis`.
pub fn grid_seeds(cube: &Cube, per_axis: u64) -> SeedSet {
    let n = cube.dim();
    let step = cube.side() / int(per_axis as i64);
    let total = per_axis.pow(n as u32);
    let points = (0..total).map(|mut r| {
        let mut c = Vec::with_capacity(n);
        for _ in 0..n {
            let i = r % per_axis;
            r /= per_axis;
            c.push(cube.lo() + &step * (int(i as i64) + Rational::new(1.into(), 2.into())));
        }
        Point(c)
    });
    SeedSet::from_points(points, SeedTag::Grid)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreedyResult {
    /// Indices into the seed set, increasing.
    pub chosen: Vec<usize>,
    pub points: Vec<Point>,
    pub m: usize,
    pub eps: Rational,
    pub metric: Metric,
    /// Some comparison met an escaped orbit before deciding.
    pub truncated: bool,
    /// Both defining properties were rechecked after the greedy pass.
    pub verified: bool,
}

impl GreedyResult {
    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }
}

fn check_args(m: usize, eps: &Rational) -> Result<()> {
    if m == 0 {
        return Err(Error::ZeroSteps);
    }
    if !eps.is_positive() {
        return Err(Error::param("eps", format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

fn orbits<D: Dynamics + ?Sized>(map: &D, seeds: &SeedSet, m: usize) -> Vec<Vec<MapState>> {
    seeds
        .seeds()
        .par_iter()
        .map(|s| map.orbit(&s.point, m))
        .collect()
}

/// Seeds bucketed by the `ε`-cell of their starting point. Two orbits within
/// `ε` at step 0 sit in neighbouring cells, so every other pair is already
/// separated at the first step and never needs a comparison.
struct CellIndex {
    eps: Rational,
    cells: HashMap<Vec<BigInt>, Vec<usize>>,
}

impl CellIndex {
    fn new(eps: &Rational) -> Self {
        CellIndex {
            eps: eps.clone(),
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &Point) -> Vec<BigInt> {
        p.coords().iter().map(|c| (c / &self.eps).floor().to_integer()).collect()
    }

    fn insert(&mut self, p: &Point, i: usize) {
        self.cells.entry(self.key(p)).or_default().push(i);
    }

    /// Indices in the `3^n` cells around `p`, in insertion order per cell.
    fn near(&self, p: &Point) -> Vec<usize> {
        let base = self.key(p);
        let mut keys = vec![Vec::with_capacity(base.len())];
        for c in &base {
            keys = keys
                .into_iter()
                .flat_map(|k: Vec<BigInt>| {
                    [-1i32, 0, 1].into_iter().map(move |d| {
                        let mut k = k.clone();
                        k.push(c + d);
                        k
                    })
                })
                .collect();
        }
        let mut out: Vec<usize> = keys
            .iter()
            .filter_map(|k| self.cells.get(k))
            .flatten()
            .copied()
            .collect();
        out.sort_unstable();
        out
    }
}

fn start(orbit: &[MapState]) -> &Point {
    orbit[0].point().expect("orbits start inside")
}

/// Greedy `(m, ε)`-separated subset: a seed joins when its Bowen distance to
/// every chosen seed exceeds `ε`.
pub fn greedy_separated<D: Dynamics + ?Sized>(
    map: &D,
    seeds: &SeedSet,
    m: usize,
    eps: &Rational,
    metric: Metric,
) -> Result<GreedyResult> {
    check_args(m, eps)?;
    let orb = orbits(map, seeds, m);
    let mut index = CellIndex::new(eps);
    let mut chosen: Vec<usize> = Vec::new();
    let mut truncated = false;
    for i in 0..orb.len() {
        let mut ok = true;
        for j in index.near(start(&orb[i])) {
            let c = orbits_separated(&orb[j], &orb[i], eps, metric);
            truncated |= c.truncated;
            if !c.separated {
                ok = false;
                break;
            }
        }
        if ok {
            index.insert(start(&orb[i]), i);
            chosen.push(i);
        }
    }
    let sep = |a: usize, b: usize| orbits_separated(&orb[a], &orb[b], eps, metric).separated;
    let pairwise = chosen
        .par_iter()
        .all(|&a| index.near(start(&orb[a])).into_iter().all(|b| b == a || sep(a, b)));
    let covers = (0..orb.len())
        .into_par_iter()
        .all(|i| index.near(start(&orb[i])).into_iter().any(|j| !sep(j, i)));
    Ok(finish(seeds, chosen, m, eps, metric, truncated, pairwise && covers))
}

/// Greedy `(m, ε)`-spanning subset of `targets`: a target joins when no chosen
/// target is strictly within `ε` of it.
pub fn greedy_spanning<D: Dynamics + ?Sized>(
    map: &D,
    targets: &SeedSet,
    m: usize,
    eps: &Rational,
    metric: Metric,
) -> Result<GreedyResult> {
    check_args(m, eps)?;
    let orb = orbits(map, targets, m);
    let near = |a: usize, b: usize| !orbits_within_strict(&orb[a], &orb[b], eps, metric).separated;
    let mut index = CellIndex::new(eps);
    let mut chosen: Vec<usize> = Vec::new();
    let mut truncated = false;
    for i in 0..orb.len() {
        let mut covered = false;
        for j in index.near(start(&orb[i])) {
            let c = orbits_within_strict(&orb[j], &orb[i], eps, metric);
            truncated |= c.truncated;
            if !c.separated {
                covered = true;
                break;
            }
        }
        if !covered {
            index.insert(start(&orb[i]), i);
            chosen.push(i);
        }
    }
    let covers = (0..orb.len())
        .into_par_iter()
        .all(|i| index.near(start(&orb[i])).into_iter().any(|j| near(j, i)));
    Ok(finish(targets, chosen, m, eps, metric, truncated, covers))
}

fn finish(
    seeds: &SeedSet,
    chosen: Vec<usize>,
    m: usize,
    eps: &Rational,
    metric: Metric,
    truncated: bool,
    verified: bool,
) -> GreedyResult {
    GreedyResult {
        points: chosen.iter().map(|&i| seeds.seeds()[i].point.clone()).collect(),
        chosen,
        m,
        eps: eps.clone(),
        metric,
        truncated,
        verified,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthEstimate {
    /// Least-squares slope of `ln count` against `m`.
    pub rate: f64,
    pub counts: Vec<(usize, u64)>,
    pub truncated: bool,
}

/// Slope of `ln |greedy_separated|` over `ms`, with seeds from `seeds_for(m)`.
pub fn growth_rate<D, F>(
    map: &D,
    seeds_for: F,
    eps: &Rational,
    ms: &[usize],
    metric: Metric,
) -> Result<GrowthEstimate>
where
    D: Dynamics + ?Sized,
    F: Fn(usize) -> Result<SeedSet>,
{
    let mut counts = Vec::new();
    let mut truncated = false;
    for &m in ms {
        let r = greedy_separated(map, &seeds_for(m)?, m, eps, metric)?;
        truncated |= r.truncated;
        if !r.is_empty() {
            counts.push((m, r.len() as u64));
        }
    }
    let rate = log_slope(&counts)?;
    Ok(GrowthEstimate {
        rate,
        counts,
        truncated,
    })
}

/// Least-squares slope of `ln count` against `m`; needs two distinct `m`.
pub fn log_slope(counts: &[(usize, u64)]) -> Result<f64> {
    if counts.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "{} usable values of m, at least 2 needed",
            counts.len()
        )));
    }
    let len = counts.len() as f64;
    let xs: Vec<f64> = counts.iter().map(|&(m, _)| m as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|&(_, c)| (c as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all m values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Inactive,
    Unmaterialized,
    BudgetExceeded,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Inactive => "inactive",
            RowStatus::Unmaterialized => "unmaterialized",
            RowStatus::BudgetExceeded => "budget_exceeded",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericRow {
    pub k: u64,
    #[serde(with = "crate::exact::serde_rational_opt")]
    pub eps: Option<Rational>,
    pub counts: Vec<(usize, u64)>,
    pub rate: f64,
    /// `rate / |ln ε_k|`.
    pub eps_ratio: f64,
    /// `rate / |ln ε_{k+1}|`, comparable with the symbolic lower ratio.
    pub lower_ratio: f64,
    pub status: RowStatus,
}

/// Growth of greedy separated sets of cylinder centers under `φ²` at `ε_k`,
/// for each `k` in `ks`.
pub fn mdim_numeric_profile(
    system: &StackedSystem,
    ks: RangeInclusive<u64>,
    ms: &[usize],
    budget: u64,
    metric: Metric,
) -> Vec<NumericRow> {
    let sched = system.effective_schedule();
    let n = system.n();
    let wrapped = System::Stacked(system.clone());
    let phi2 = Squared(&wrapped);
    ks.map(|k| {
        let mut row = NumericRow {
            k,
            eps: sched.eps(k),
            counts: Vec::new(),
            rate: 0.0,
            eps_ratio: 0.0,
            lower_ratio: 0.0,
            status: RowStatus::Ok,
        };
        if !sched.is_active(k) {
            row.status = RowStatus::Inactive;
            return row;
        }
        let (Some(eps), true) = (row.eps.clone(), system.is_materialized(k)) else {
            row.status = RowStatus::Unmaterialized;
            return row;
        };
        let over = ms.iter().any(|&m| {
            crate::symbolic::count_cylinders(sched, k, n, m)
                .to_u64()
                .is_none_or(|c| c > budget)
        });
        if over {
            row.status = RowStatus::BudgetExceeded;
            return row;
        }
        let est = growth_rate(
            &phi2,
            |m| cylinder_centers(system, k, m, budget),
            &eps,
            ms,
            metric,
        );
        match est {
            Ok(est) => {
                row.rate = est.rate;
                row.counts = est.counts;
                row.eps_ratio = est.rate / -sched.ln_eps(k).to_f64();
                row.lower_ratio = est.rate / -sched.ln_eps(k + 1).to_f64();
            }
            Err(_) => row.status = RowStatus::BudgetExceeded,
        }
        row
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build_stacked, BuildOptions, Schedule};
    use crate::exact::rat;
    use crate::horseshoe::build_horseshoe;
    use crate::map::PAMap;

    fn r1() -> StackedSystem {
        let s = Schedule::geometric(int(1), int(1)).unwrap();
        build_stacked(&s, 2, 2, BuildOptions::default()).unwrap()
    }

    #[test]
    fn seed_sets_are_canonical() {
        let a = Point(vec![rat(1, 2), rat(1, 3)]);
        let b = Point(vec![rat(1, 3), rat(1, 2)]);
        let s = SeedSet::from_points(vec![a.clone(), b.clone(), a.clone()], SeedTag::User);
        assert_eq!(s.points().cloned().collect::<Vec<_>>(), vec![b, a]);
    }

    #[test]
    fn centers_k1() {
        let sys = r1();
        assert_eq!(cylinder_centers(&sys, 1, 1, 100).unwrap().len(), 9);
        let c3 = cylinder_centers(&sys, 1, 3, 1000).unwrap();
        assert_eq!(c3.len(), 729);
        let cyl = enumerate_cylinders(sys.horseshoe(1).unwrap(), 1, 2, 100).unwrap();
        for (_, b) in cyl {
            assert!(b.contains_in_interior(&b.center()));
        }
        assert!(cylinder_centers(&sys, 3, 1, 100).is_err());
    }

    #[test]
    fn large_eps_gives_one_point() {
        let sys = r1();
        let seeds = cylinder_centers(&sys, 1, 2, 1000).unwrap();
        let r = greedy_separated(&Squared(&sys), &seeds, 2, &int(2), Metric::MaxNorm).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r.verified);
    }

    #[test]
    fn identity_ignores_m() {
        let id = PAMap::identity(Cube::unit(2));
        let seeds = grid_seeds(&Cube::unit(2), 7);
        let a = greedy_separated(&id, &seeds, 1, &rat(1, 5), Metric::MaxNorm).unwrap();
        let b = greedy_separated(&id, &seeds, 4, &rat(1, 5), Metric::MaxNorm).unwrap();
        assert_eq!(a.chosen, b.chosen);
    }

    #[test]
    fn spanning_small_cases() {
        let id = PAMap::identity(Cube::unit(2));
        let one = SeedSet::from_points(vec![Point(vec![rat(1, 2), rat(1, 2)])], SeedTag::User);
        assert_eq!(greedy_spanning(&id, &one, 3, &rat(1, 9), Metric::MaxNorm).unwrap().len(), 1);
        let seeds = grid_seeds(&Cube::unit(2), 9);
        let sep = greedy_separated(&id, &seeds, 1, &rat(1, 4), Metric::Euclidean).unwrap();
        let on_sep = SeedSet::from_points(sep.points.clone(), SeedTag::User);
        let span = greedy_spanning(&id, &on_sep, 1, &rat(1, 4), Metric::Euclidean).unwrap();
        assert!(span.len() <= sep.len());
    }

    #[test]
    fn rejects_bad_arguments() {
        let id = PAMap::identity(Cube::unit(2));
        let seeds = grid_seeds(&Cube::unit(2), 2);
        assert!(greedy_separated(&id, &seeds, 0, &rat(1, 2), Metric::MaxNorm).is_err());
        assert!(greedy_separated(&id, &seeds, 1, &int(0), Metric::MaxNorm).is_err());
        assert!(log_slope(&[(1, 9)]).is_err());
    }

    #[test]
    fn unsquared_full_coding_counts() {
        let h = build_horseshoe(&Cube::unit(2), 3).unwrap();
        for m in 1..=4 {
            let s = phi_cylinder_centers(&h, m, 1000).unwrap();
            assert_eq!(s.len(), 3usize.pow(m as u32));
        }
    }

    #[test]
    fn numeric_profile_statuses() {
        let sys = r1();
        let rows = mdim_numeric_profile(&sys, 1..=3, &[1, 2], 100, Metric::MaxNorm);
        assert_eq!(rows[0].status, RowStatus::Ok);
        assert_eq!(rows[0].counts, vec![(1, 9), (2, 81)]);
        assert_eq!(rows[1].status, RowStatus::BudgetExceeded);
        assert_eq!(rows[2].status, RowStatus::Unmaterialized);
    }
}
