//! The `n`-dimensional horseshoe with `L^{n-1}` legs.
//!
//! A cube `E = [a, b]^n` is cut along the first axis into `2L^{n-1} - 1`
//! strips `V_l` and along each transverse axis into `2L - 1` slabs. The legs
//! `H_{i_1..i_{n-1}}` are the products of the odd transverse slabs. Each odd
//! strip is mapped affinely onto one leg: stretched by `2L^{n-1} - 1` along
//! the first axis and contracted by `1/(2L - 1)` across. Even strips have no
//! piece, so their points escape.
//!
//! Odd strips are assigned to legs in boustrophedon order, starting at the
//! leg containing `(a, .., a, b)` and ending at the leg containing
//! `(b, .., b, a)`. With that order every piece can be orientation preserving
//! and both corners are fixed.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{int, Rational};
use crate::geometry::{Cube, Point, RBox};
use crate::map::{AffinePiece, Dynamics, MapState, PAMap};

/// Index of a leg: one odd slab index in `1..=2L-1` per transverse axis.
pub type LegIndex = Vec<u64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubdivisionGrid {
    cube: Cube,
    legs_per_axis: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leg {
    pub index: LegIndex,
    pub bounds: RBox,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strip {
    pub index: u64,
    pub bounds: RBox,
}

/// Builds the grid for `cube` with `L` legs per transverse axis.
pub fn subdivide(cube: &Cube, legs_per_axis: u64) -> Result<SubdivisionGrid> {
    if legs_per_axis < 3 || legs_per_axis.is_multiple_of(2) {
        return Err(Error::param(
            "legs",
            format!("legs per axis must be odd and at least 3, got {legs_per_axis}"),
        ));
    }
    if cube.dim() < 2 {
        return Err(Error::param(
            "n",
            format!("dimension must be at least 2, got {}", cube.dim()),
        ));
    }
    let grid = SubdivisionGrid {
        cube: cube.clone(),
        legs_per_axis,
    };
    // Strip count must fit in a u64 for the index arithmetic below.
    grid.strip_count_big()
        .to_string()
        .parse::<u64>()
        .map_err(|_| Error::param("legs", "too many strips to index"))?;
    Ok(grid)
}

impl SubdivisionGrid {
    pub fn cube(&self) -> &Cube {
        &self.cube
    }

    pub fn dim(&self) -> usize {
        self.cube.dim()
    }

    /// `L`.
    pub fn legs_per_axis(&self) -> u64 {
        self.legs_per_axis
    }

    /// `L^{n-1}`, the number of legs and of odd strips.
    pub fn leg_count(&self) -> u64 {
        self.legs_per_axis.pow(self.dim() as u32 - 1)
    }

    fn strip_count_big(&self) -> BigUint {
        BigUint::from(self.legs_per_axis).pow(self.dim() as u32 - 1) * 2u32 - 1u32
    }

    /// `2L^{n-1} - 1` strips along the first axis.
    pub fn strip_count(&self) -> u64 {
        2 * self.leg_count() - 1
    }

    /// `2L - 1` slabs along each transverse axis.
    pub fn slab_count(&self) -> u64 {
        2 * self.legs_per_axis - 1
    }

    /// Transverse slab width `(b - a) / (2L - 1)`.
    pub fn slab_width(&self) -> Rational {
        self.cube.side() / int(self.slab_count() as i64)
    }

    /// Strip width `(b - a) / (2L^{n-1} - 1)`.
    pub fn strip_width(&self) -> Rational {
        self.cube.side() / int(self.strip_count() as i64)
    }

    /// `t_i`, for `i` in `0..=2L-1`.
    pub fn t(&self, i: u64) -> Rational {
        self.cube.lo() + self.slab_width() * int(i as i64)
    }

    /// `s_l`, for `l` in `0..=2L^{n-1}-1`.
    pub fn s(&self, l: u64) -> Rational {
        self.cube.lo() + self.strip_width() * int(l as i64)
    }

    pub fn t_coords(&self) -> Vec<Rational> {
        (0..=self.slab_count()).map(|i| self.t(i)).collect()
    }

    pub fn s_coords(&self) -> Vec<Rational> {
        (0..=self.strip_count()).map(|l| self.s(l)).collect()
    }

    /// `V_l = [s_{l-1}, s_l] x [a, b]^{n-1}`.
    pub fn strip(&self, l: u64) -> Strip {
        assert!((1..=self.strip_count()).contains(&l), "strip {l} out of range");
        let bounds = self.cube.to_box().with_axis(0, self.s(l - 1), self.s(l));
        Strip { index: l, bounds }
    }

    pub fn odd_strips(&self) -> impl Iterator<Item = u64> {
        (1..=self.strip_count()).step_by(2)
    }

    /// `H_{i_1..i_{n-1}} = [a, b] x prod [t_{i_j - 1}, t_{i_j}]`.
    pub fn leg(&self, index: &[u64]) -> Leg {
        assert_eq!(index.len(), self.dim() - 1, "leg index length");
        let mut bounds = self.cube.to_box();
        for (j, &i) in index.iter().enumerate() {
            assert!(
                i % 2 == 1 && i <= self.slab_count(),
                "leg index {i} is not an odd slab"
            );
            bounds = bounds.with_axis(j + 1, self.t(i - 1), self.t(i));
        }
        Leg {
            index: index.to_vec(),
            bounds,
        }
    }

    /// Box of a transverse slab product with any (odd or even) indices.
    pub fn slab_box(&self, index: &[u64]) -> RBox {
        let mut bounds = self.cube.to_box();
        for (j, &i) in index.iter().enumerate() {
            bounds = bounds.with_axis(j + 1, self.t(i - 1), self.t(i));
        }
        bounds
    }

    /// All leg indices in lexicographic order.
    pub fn legs(&self) -> Vec<LegIndex> {
        let digits = self.dim() - 1;
        (0..self.leg_count())
            .map(|r| {
                mixed_radix(r, self.legs_per_axis, digits)
                    .into_iter()
                    .map(|d| 2 * d + 1)
                    .collect()
            })
            .collect()
    }

    /// Legs in snake order from the one containing `(a,..,a,b)` to the one
    /// containing `(b,..,b,a)`; consecutive legs are adjacent.
    pub fn boustrophedon_legs(&self) -> Vec<LegIndex> {
        let l = self.legs_per_axis;
        let digits = self.dim() - 1;
        (0..self.leg_count())
            .map(|r| {
                let q = mixed_radix(r, l, digits);
                let mut d = Vec::with_capacity(digits);
                let mut prefix = 0u64;
                for &qj in &q {
                    d.push(if prefix.is_multiple_of(2) { qj } else { l - 1 - qj });
                    prefix += qj;
                }
                // Flip the last axis so the walk starts at its top slab.
                let last = d.len() - 1;
                d[last] = l - 1 - d[last];
                d.into_iter().map(|x| 2 * x + 1).collect()
            })
            .collect()
    }
}

fn mixed_radix(mut r: u64, base: u64, digits: usize) -> Vec<u64> {
    let mut q = vec![0; digits];
    for slot in q.iter_mut().rev() {
        *slot = r % base;
        r /= base;
    }
    q
}

/// A horseshoe: grid, strip-to-leg assignment and the resulting partial map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HorseshoeMap {
    grid: SubdivisionGrid,
    assignment: Vec<(u64, LegIndex)>,
    pamap: PAMap,
}

/// The affine piece sending strip `l` onto leg `leg`.
fn strip_to_leg(grid: &SubdivisionGrid, l: u64, leg: &[u64]) -> AffinePiece {
    let n = grid.dim();
    let mut scale = vec![int(grid.strip_count() as i64)];
    scale.extend(std::iter::repeat_n(Rational::one() / int(grid.slab_count() as i64), n - 1));
    let offset = grid.leg(leg).bounds.lo().to_vec();
    AffinePiece::new(grid.strip(l).bounds, scale, offset, vec![false; n])
        .expect("strip piece is valid")
}

/// Builds the canonical horseshoe on `cube` with `L` legs per transverse axis.
pub fn build_horseshoe(cube: &Cube, legs_per_axis: u64) -> Result<HorseshoeMap> {
    let grid = subdivide(cube, legs_per_axis)?;
    let assignment: Vec<(u64, LegIndex)> = grid
        .odd_strips()
        .zip(grid.boustrophedon_legs())
        .collect();
    let pieces = assignment
        .iter()
        .map(|(l, leg)| strip_to_leg(&grid, *l, leg))
        .collect();
    let pamap = PAMap::new(cube.clone(), pieces)?;
    Ok(HorseshoeMap {
        grid,
        assignment,
        pamap,
    })
}

impl HorseshoeMap {
    /// Assembles a horseshoe without checking it; see [`validate_horseshoe`].
    pub fn from_parts(
        grid: SubdivisionGrid,
        assignment: Vec<(u64, LegIndex)>,
        pamap: PAMap,
    ) -> Self {
        HorseshoeMap {
            grid,
            assignment,
            pamap,
        }
    }

    pub fn grid(&self) -> &SubdivisionGrid {
        &self.grid
    }

    pub fn assignment(&self) -> &[(u64, LegIndex)] {
        &self.assignment
    }

    pub fn pamap(&self) -> &PAMap {
        &self.pamap
    }

    pub fn cube(&self) -> &Cube {
        self.grid.cube()
    }

    /// Leg assigned to an odd strip.
    pub fn leg_of(&self, strip: u64) -> Option<&LegIndex> {
        self.assignment
            .iter()
            .find(|(l, _)| *l == strip)
            .map(|(_, leg)| leg)
    }
}

impl Dynamics for HorseshoeMap {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn apply(&self, state: &MapState) -> MapState {
        self.pamap.apply(state)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Checks every defining condition of a horseshoe and reports each one.
pub fn validate_horseshoe(h: &HorseshoeMap) -> ValidationReport {
    let grid = &h.grid;
    let mut checks = Vec::new();
    let mut push = |name, failures: Vec<String>| {
        checks.push(Check {
            name,
            passed: failures.is_empty(),
            detail: if failures.is_empty() {
                "ok".into()
            } else {
                failures.join("; ")
            },
        })
    };

    for (name, corner) in [
        ("corner_low_high_fixed", grid.cube().corner_low_high()),
        ("corner_high_low_fixed", grid.cube().corner_high_low()),
    ] {
        let img = h.pamap.apply(&MapState::Inside(corner.clone()));
        let failures = if img == MapState::Inside(corner.clone()) {
            vec![]
        } else {
            vec![format!("{corner:?} maps to {img:?}")]
        };
        push(name, failures);
    }

    // Assignment: odd strips onto legs, one to one.
    let mut failures = Vec::new();
    let strips: Vec<u64> = grid.odd_strips().collect();
    let mut assigned_strips: Vec<u64> = h.assignment.iter().map(|(l, _)| *l).collect();
    assigned_strips.sort_unstable();
    if assigned_strips != strips {
        failures.push(format!(
            "assigned strips {assigned_strips:?} are not the odd strips"
        ));
    }
    let mut seen: HashMap<&LegIndex, u64> = HashMap::new();
    for (l, leg) in &h.assignment {
        if leg.len() != grid.dim() - 1
            || leg.iter().any(|&i| i % 2 == 0 || i > grid.slab_count() || i == 0)
        {
            failures.push(format!("strip {l} assigned to non-leg {leg:?}"));
        } else if let Some(prev) = seen.insert(leg, *l) {
            failures.push(format!("strips {prev} and {l} share leg {leg:?}"));
        }
    }
    if seen.len() as u64 != grid.leg_count() && failures.is_empty() {
        failures.push(format!("{} of {} legs covered", seen.len(), grid.leg_count()));
    }
    push("assignment_bijective", failures);

    // Each odd strip is one piece whose image is exactly its leg.
    let mut failures = Vec::new();
    for (l, leg) in &h.assignment {
        if *l == 0 || *l > grid.strip_count() || leg.len() != grid.dim() - 1 {
            continue;
        }
        let strip = grid.strip(*l).bounds;
        match h.pamap.pieces().iter().find(|p| *p.domain() == strip) {
            None => failures.push(format!("strip {l} has no piece")),
            Some(p) => {
                let target = grid.slab_box(leg);
                if p.image() != target {
                    failures.push(format!(
                        "strip {l}: image {:?} differs from leg {:?}",
                        p.image(),
                        target
                    ));
                }
            }
        }
    }
    if h.pamap.pieces().len() != h.assignment.len() {
        failures.push(format!(
            "{} pieces for {} assigned strips",
            h.pamap.pieces().len(),
            h.assignment.len()
        ));
    }
    push("odd_strip_images_are_legs", failures);

    // Even strips: no piece meets their interior, so every point escapes.
    let mut failures = Vec::new();
    for l in (2..grid.strip_count()).step_by(2) {
        let strip = grid.strip(l).bounds;
        if h.pamap.pieces().iter().any(|p| p.domain().interiors_overlap(&strip)) {
            failures.push(format!("even strip {l} meets a piece"));
        } else if !h.pamap.apply(&MapState::Inside(strip.center())).is_escaped() {
            failures.push(format!("center of even strip {l} does not escape"));
        }
    }
    push("even_strips_escape", failures);

    ValidationReport { checks }
}

/// `φ²` for a horseshoe, with pieces indexed by (first strip, second strip).
#[derive(Clone, Debug)]
pub struct SquaredHorseshoe {
    pamap: PAMap,
    by_strips: HashMap<(u64, u64), usize>,
    strip_of_leg: HashMap<LegIndex, u64>,
}

impl SquaredHorseshoe {
    pub fn new(h: &HorseshoeMap) -> Self {
        let strip_of_leg: HashMap<LegIndex, u64> = h
            .assignment
            .iter()
            .map(|(l, leg)| (leg.clone(), *l))
            .collect();
        let mut tagged = Vec::new();
        for (l1, _) in &h.assignment {
            let p1 = piece_for_strip(h, *l1);
            for (l2, _) in &h.assignment {
                let p2 = piece_for_strip(h, *l2);
                if let Some(c) = p1.then(p2) {
                    tagged.push(((*l1, *l2), c));
                }
            }
        }
        let pamap = PAMap::new(
            h.cube().clone(),
            tagged.iter().map(|(_, c)| c.clone()).collect(),
        )
        .expect("squared horseshoe pieces are disjoint");
        let by_strips = tagged
            .into_iter()
            .map(|(key, c)| {
                let idx = pamap
                    .pieces()
                    .iter()
                    .position(|p| *p == c)
                    .expect("piece present");
                (key, idx)
            })
            .collect();
        SquaredHorseshoe {
            pamap,
            by_strips,
            strip_of_leg,
        }
    }

    pub fn pamap(&self) -> &PAMap {
        &self.pamap
    }

    /// Piece of `φ²` that crosses strip `first` and then strip `second`.
    pub fn piece(&self, first: u64, second: u64) -> Option<&AffinePiece> {
        self.by_strips
            .get(&(first, second))
            .map(|&i| &self.pamap.pieces()[i])
    }

    /// The odd strip whose image is `leg`.
    pub fn strip_onto(&self, leg: &[u64]) -> Option<u64> {
        self.strip_of_leg.get(leg).copied()
    }
}

impl Dynamics for SquaredHorseshoe {
    fn dim(&self) -> usize {
        self.pamap.ambient().dim()
    }

    fn apply(&self, state: &MapState) -> MapState {
        self.pamap.apply(state)
    }
}

fn piece_for_strip(h: &HorseshoeMap, l: u64) -> &AffinePiece {
    let strip = h.grid.strip(l).bounds;
    h.pamap
        .pieces()
        .iter()
        .find(|p| *p.domain() == strip)
        .expect("every odd strip has a piece")
}

/// `φ²` as a plain piecewise-affine map.
pub fn square(h: &HorseshoeMap) -> PAMap {
    SquaredHorseshoe::new(h).pamap
}

/// Point of `V_l`'s interior at the center of the strip.
pub fn strip_center(grid: &SubdivisionGrid, l: u64) -> Point {
    grid.strip(l).bounds.center()
}
