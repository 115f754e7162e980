//! Global systems on `[0, 1]^n`: stacked horseshoe sequences, the sparse
//! system and the two-block system.
//!
//! Block `k` of a stacked system is a cube `E_k` of side `|E_k|` inside an
//! enlargement `E'_k`. Enlargements sit along the diagonal in consecutive
//! slots `[a_{k-1}, a_k]^n`; `E'_k = [a_{k-1}, a_{k-1} + 6|E_k|/5]^n` and `E_k`
//! is `E'_k` shrunk by `|E_k|/10` on every side.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{int, is_integer, mul_exact, rat, to_f64, Rational};
use crate::geometry::{find_interior_overlap, Cube, Point, RBox};
use crate::horseshoe::{build_horseshoe, HorseshoeMap, SquaredHorseshoe};
use crate::logexpr::LogExpr;
use crate::map::{Dynamics, MapState};

/// Default bound on `L_k^{n-1}` for building block geometry.
pub const DEFAULT_MAX_LEGS: u64 = 729;

/// Largest `B` a quadratic schedule is placed with.
pub fn quadratic_b_cap() -> Rational {
    rat(5, 12)
}

/// How `|E_k|` depends on `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum SizeLaw {
    /// `|E_k| = B / 3^{kr}`.
    Geometric {
        #[serde(with = "crate::exact::serde_rational")]
        b: Rational,
        #[serde(with = "crate::exact::serde_rational")]
        r: Rational,
    },
    /// `|E_k| = B / k^2`.
    Quadratic {
        #[serde(with = "crate::exact::serde_rational")]
        b: Rational,
    },
}

/// Legs per transverse axis of block `k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "legs", content = "value", rename_all = "snake_case")]
pub enum LegSchedule {
    /// `L_k = 3^k`.
    #[default]
    Pow3,
    Constant(u64),
}

/// Which blocks carry a horseshoe; the rest are the identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveSet {
    #[default]
    All,
    /// `{j^j : j >= 1} = {1, 4, 27, 256, 3125, ...}`.
    SelfPowers,
}

impl ActiveSet {
    pub fn contains(&self, k: u64) -> bool {
        match self {
            ActiveSet::All => true,
            ActiveSet::SelfPowers => is_self_power(k),
        }
    }
}

pub fn is_self_power(k: u64) -> bool {
    (1u32..)
        .map(|j| (j as u64).checked_pow(j))
        .take_while(|p| p.is_some_and(|p| p <= k))
        .any(|p| p == Some(k))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub size: SizeLaw,
    #[serde(default)]
    pub legs: LegSchedule,
    #[serde(default)]
    pub active: ActiveSet,
}

impl Schedule {
    pub fn geometric(b: Rational, r: Rational) -> Result<Self> {
        if !r.is_positive() {
            return Err(Error::param("r", format!("r must be positive, got {r}")));
        }
        check_b(&b)?;
        Ok(Schedule {
            size: SizeLaw::Geometric { b, r },
            legs: LegSchedule::Pow3,
            active: ActiveSet::All,
        })
    }

    pub fn quadratic(b: Rational) -> Result<Self> {
        check_b(&b)?;
        Ok(Schedule {
            size: SizeLaw::Quadratic { b },
            legs: LegSchedule::Pow3,
            active: ActiveSet::All,
        })
    }

    pub fn with_legs(mut self, legs: LegSchedule) -> Result<Self> {
        if let LegSchedule::Constant(l) = legs {
            if l < 3 || l % 2 == 0 {
                return Err(Error::param(
                    "legScheduleOverride",
                    format!("constant leg count must be odd and at least 3, got {l}"),
                ));
            }
        }
        self.legs = legs;
        Ok(self)
    }

    pub fn with_active(mut self, active: ActiveSet) -> Self {
        self.active = active;
        self
    }

    pub fn b(&self) -> &Rational {
        match &self.size {
            SizeLaw::Geometric { b, .. } | SizeLaw::Quadratic { b } => b,
        }
    }

    fn with_b(&self, b: Rational) -> Self {
        let mut s = self.clone();
        match &mut s.size {
            SizeLaw::Geometric { b: old, .. } | SizeLaw::Quadratic { b: old } => *old = b,
        }
        s
    }

    pub fn legs(&self, k: u64) -> BigUint {
        match self.legs {
            LegSchedule::Pow3 => BigUint::from(3u32).pow(k as u32),
            LegSchedule::Constant(l) => BigUint::from(l),
        }
    }

    pub fn ln_legs(&self, k: u64) -> LogExpr {
        match self.legs {
            LegSchedule::Pow3 => LogExpr::ln(3u32).scaled(&int(k as i64)),
            LegSchedule::Constant(l) => LogExpr::ln(l),
        }
    }

    pub fn is_active(&self, k: u64) -> bool {
        self.active.contains(k)
    }

    /// Whether every `|E_k|` is rational.
    pub fn has_exact_sizes(&self) -> bool {
        match &self.size {
            SizeLaw::Geometric { r, .. } => is_integer(r),
            SizeLaw::Quadratic { .. } => true,
        }
    }

    /// `|E_k|`, when rational.
    pub fn size(&self, k: u64) -> Option<Rational> {
        assert!(k >= 1, "blocks are numbered from 1");
        match &self.size {
            SizeLaw::Geometric { b, r } => {
                if !is_integer(r) {
                    return None;
                }
                let e = r.to_integer().to_u64()? * k;
                Some(over(b, BigUint::from(3u32).pow(e as u32)))
            }
            SizeLaw::Quadratic { b } => Some(b / int((k * k) as i64)),
        }
    }

    pub fn ln_size(&self, k: u64) -> LogExpr {
        match &self.size {
            SizeLaw::Geometric { b, r } => LogExpr::ln_rational(b)
                .minus(&LogExpr::ln(3u32).scaled(&(r * int(k as i64)))),
            SizeLaw::Quadratic { b } => {
                LogExpr::ln_rational(b).minus(&LogExpr::ln(k).scaled(&int(2)))
            }
        }
    }

    /// `2 L_k - 1`.
    pub fn slab_count(&self, k: u64) -> BigUint {
        self.legs(k) * 2u32 - 1u32
    }

    /// `ε_k = |E_k| / (2 L_k - 1)`, when rational.
    pub fn eps(&self, k: u64) -> Option<Rational> {
        self.size(k).map(|s| over(&s, self.slab_count(k)))
    }

    pub fn ln_eps(&self, k: u64) -> LogExpr {
        self.ln_size(k).minus(&LogExpr::ln(self.slab_count(k)))
    }

    /// The analytic `(lower, upper)` metric mean dimension for dimension `n`.
    pub fn target(&self, n: usize) -> (Rational, Rational) {
        let full = match (&self.legs, &self.size) {
            (LegSchedule::Constant(_), _) => Rational::zero(),
            (LegSchedule::Pow3, SizeLaw::Geometric { r, .. }) => {
                int(n as i64) / (r + Rational::one())
            }
            (LegSchedule::Pow3, SizeLaw::Quadratic { .. }) => int(n as i64),
        };
        match self.active {
            ActiveSet::All => (full.clone(), full),
            ActiveSet::SelfPowers => (Rational::zero(), full),
        }
    }
}

/// `q / d` for reduced `q`.
fn over(q: &Rational, d: BigUint) -> Rational {
    mul_exact(q, &Rational::new_raw(BigInt::one(), BigInt::from(d)))
}

fn check_b(b: &Rational) -> Result<()> {
    if !b.is_positive() {
        return Err(Error::param("B", format!("B must be positive, got {b}")));
    }
    Ok(())
}

/// `α < n` gives a geometric schedule with `r = n/α - 1`, `α = n` a quadratic one.
pub fn solve_rate(alpha: &Rational, n: usize) -> Result<Schedule> {
    let nn = int(n as i64);
    if !alpha.is_positive() || *alpha > nn {
        return Err(Error::param(
            "alpha",
            format!("target must lie in (0, {n}], got {alpha}"),
        ));
    }
    if *alpha == nn {
        return Schedule::quadratic(Rational::one());
    }
    let r = &nn / alpha - Rational::one();
    Schedule::geometric(default_b(&r), r)
}

/// `B = 1` when it fits the slots; otherwise a smaller rational that does.
fn default_b(r: &Rational) -> Rational {
    if *r >= Rational::one() {
        return Rational::one();
    }
    // 3^r - 1 >= r ln 3 > r * 10986/10000, so this B satisfies 6B/5 <= 3^r - 1.
    r * rat(10986 * 5, 10000 * 6)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub k: u64,
    #[serde(with = "crate::exact::serde_rational")]
    pub side: Rational,
    /// `E_k`.
    pub inner: Cube,
    /// `E'_k`.
    pub outer: Cube,
}

/// The schedule actually placed: quadratic `B` is capped at 5/12, an
/// oversized geometric `B` is an error.
pub fn effective_schedule(schedule: &Schedule) -> Result<Schedule> {
    match &schedule.size {
        SizeLaw::Geometric { b, r } => {
            let room = if is_integer(r) {
                let e = r.to_integer().to_u32().ok_or_else(|| {
                    Error::param("r", "integer r too large to place cubes")
                })?;
                Rational::from_integer(BigUint::from(3u32).pow(e).into()) - Rational::one()
            } else {
                // Irrational 3^r: an f64 comparison cannot tie.
                let room = 3f64.powf(to_f64(r)) - 1.0;
                if 1.2 * to_f64(b) > room {
                    return Err(oversized_b(b, &format!("{room:.6}")));
                }
                return Ok(schedule.clone());
            };
            if b * rat(6, 5) > room {
                return Err(oversized_b(b, &room.to_string()));
            }
            Ok(schedule.clone())
        }
        SizeLaw::Quadratic { b } => Ok(schedule.with_b(b.min(&quadratic_b_cap()).clone())),
    }
}

fn oversized_b(b: &Rational, room: &str) -> Error {
    Error::param(
        "B",
        format!("B = {b} is too large: the enlarged cubes need 6B/5 <= 3^r - 1 = {room}"),
    )
}

/// `a_m`, the right end of slot `m` (with `a_0 = 0`), for an effective schedule.
pub fn slot_boundary(schedule: &Schedule, m: u64) -> Option<Rational> {
    let mut a = Rational::zero();
    for j in 1..=m {
        a += slot_width(schedule, j)?;
    }
    Some(a)
}

fn slot_width(schedule: &Schedule, j: u64) -> Option<Rational> {
    match &schedule.size {
        SizeLaw::Geometric { r, .. } => {
            // C / 3^{(j-1) r} with C = (3^r - 1) / 3^r
            let e = r.to_integer().to_u32().filter(|_| is_integer(r))?;
            let three_r = Rational::from_integer(BigUint::from(3u32).pow(e).into());
            let c = (&three_r - Rational::one()) / &three_r;
            Some(c / three_r.pow(j as i32 - 1))
        }
        SizeLaw::Quadratic { .. } => Some(schedule.size(j)? * rat(6, 5)),
    }
}

/// Places blocks `1..=count` of an effective schedule in `[0, 1]^n`.
pub fn place_cubes(schedule: &Schedule, n: usize, count: u64) -> Result<Vec<Placement>> {
    if !schedule.has_exact_sizes() {
        return Err(Error::param(
            "r",
            "non-integer r gives irrational cube sides; only symbolic use is possible",
        ));
    }
    let mut anchor = Rational::zero();
    let mut out = Vec::with_capacity(count as usize);
    for k in 1..=count {
        let side = schedule.size(k).expect("exact sizes");
        let margin = &side / int(10);
        let outer = Cube::new(anchor.clone(), &anchor + &side * rat(6, 5), n)?;
        let inner = Cube::new(&anchor + &margin, &anchor + &margin + &side, n)?;
        out.push(Placement {
            k,
            side,
            inner,
            outer,
        });
        anchor += slot_width(schedule, k).expect("exact sizes");
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Blocks with more than this many legs are symbolic only.
    pub max_legs: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            max_legs: DEFAULT_MAX_LEGS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub placement: Placement,
    pub active: bool,
    /// `L_k`.
    pub legs: u64,
    /// Present for active blocks.
    pub horseshoe: Option<HorseshoeMap>,
}

impl Block {
    pub fn k(&self) -> u64 {
        self.placement.k
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StackedSystem {
    n: usize,
    schedule: Schedule,
    effective: Schedule,
    k_max: u64,
    options: BuildOptions,
    blocks: Vec<Block>,
    /// Points with every coordinate at least this escape.
    tail: Rational,
}

/// Builds blocks `1..=k_max`; geometry stops at the first block with more
/// than `max_legs` legs, later blocks only exist in the schedule.
pub fn build_stacked(
    schedule: &Schedule,
    n: usize,
    k_max: u64,
    options: BuildOptions,
) -> Result<StackedSystem> {
    if n < 2 {
        return Err(Error::param("n", format!("dimension must be at least 2, got {n}")));
    }
    if k_max < 1 {
        return Err(Error::param("kMax", "kMax must be at least 1"));
    }
    let effective = effective_schedule(schedule)?;
    let mut built = 0;
    if effective.has_exact_sizes() {
        while built < k_max
            && effective.legs(built + 1).pow(n as u32 - 1) <= BigUint::from(options.max_legs)
        {
            built += 1;
        }
    }
    let placements = if built > 0 {
        place_cubes(&effective, n, built)?
    } else {
        Vec::new()
    };
    let blocks = placements
        .into_par_iter()
        .map(|placement| {
            let k = placement.k;
            let legs = effective.legs(k).to_u64().expect("bounded by max_legs");
            let active = effective.is_active(k);
            let horseshoe = if active {
                Some(build_horseshoe(&placement.inner, legs)?)
            } else {
                None
            };
            Ok(Block {
                placement,
                active,
                legs,
                horseshoe,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tail = if effective.has_exact_sizes() {
        slot_boundary(&effective, built).expect("exact sizes")
    } else {
        Rational::zero()
    };
    Ok(StackedSystem {
        n,
        schedule: schedule.clone(),
        effective,
        k_max,
        options,
        blocks,
        tail,
    })
}

impl StackedSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    /// The schedule as requested.
    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// The schedule as placed (quadratic `B` capped).
    pub fn effective_schedule(&self) -> &Schedule {
        &self.effective
    }

    pub fn k_max(&self) -> u64 {
        self.k_max
    }

    pub fn options(&self) -> BuildOptions {
        self.options
    }

    /// Materialized blocks, in order of `k`.
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, k: u64) -> Option<&Block> {
        k.checked_sub(1).and_then(|i| self.blocks.get(i as usize))
    }

    pub fn is_materialized(&self, k: u64) -> bool {
        self.block(k).is_some()
    }

    pub fn tail_anchor(&self) -> &Rational {
        &self.tail
    }

    pub fn horseshoe(&self, k: u64) -> Result<&HorseshoeMap> {
        self.block(k)
            .and_then(|b| b.horseshoe.as_ref())
            .ok_or(Error::Unmaterialized(k))
    }

    /// `φ²` restricted to block `k`.
    pub fn block_squared(&self, k: u64) -> Result<SquaredHorseshoe> {
        Ok(SquaredHorseshoe::new(self.horseshoe(k)?))
    }

    /// Condition C1: enlarged cubes have pairwise disjoint interiors.
    pub fn enlargements_disjoint(&self) -> bool {
        let boxes: Vec<RBox> = self.blocks.iter().map(|b| b.placement.outer.to_box()).collect();
        find_interior_overlap(&boxes).is_none()
    }

    /// Condition C2: every enlarged cube lies in `[0, 1]^n`.
    pub fn inside_unit_cube(&self) -> bool {
        self.blocks.iter().all(|b| {
            !b.placement.outer.lo().is_negative() && *b.placement.outer.hi() <= Rational::one()
        })
    }

    fn apply_point(&self, p: &Point) -> MapState {
        if p.coords().iter().all(|c| *c >= self.tail) {
            return MapState::Escaped;
        }
        let x = &p.coords()[0];
        let i = self.blocks.partition_point(|b| b.placement.outer.hi() < x);
        let Some(block) = self.blocks.get(i) else {
            return MapState::Inside(p.clone());
        };
        if !block.placement.outer.contains(p) {
            return MapState::Inside(p.clone());
        }
        match &block.horseshoe {
            None => MapState::Inside(p.clone()),
            Some(h) if block.placement.inner.contains(p) => h.apply(&MapState::Inside(p.clone())),
            Some(_) => MapState::Escaped,
        }
    }
}

impl Dynamics for StackedSystem {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, state: &MapState) -> MapState {
        match state {
            MapState::Escaped => MapState::Escaped,
            MapState::Inside(p) => self.apply_point(p),
        }
    }
}

/// Two systems glued into the halves `[0,1/2]^n` and `[1/2,1]^n` by the
/// charts `T_1(x) = 2x` and `T_2(x) = 2x - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoBlockSystem {
    n: usize,
    alpha: Rational,
    beta: Rational,
    lower: Box<System>,
    upper: Box<System>,
}

/// Which half of a two-block system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Half {
    Lower,
    Upper,
}

impl Half {
    /// `T_1` or `T_2`.
    pub fn chart(self, p: &Point) -> Point {
        Point(
            p.coords()
                .iter()
                .map(|c| match self {
                    Half::Lower => c * int(2),
                    Half::Upper => c * int(2) - Rational::one(),
                })
                .collect(),
        )
    }

    pub fn chart_inverse(self, p: &Point) -> Point {
        Point(
            p.coords()
                .iter()
                .map(|c| match self {
                    Half::Lower => c / int(2),
                    Half::Upper => (c + Rational::one()) / int(2),
                })
                .collect(),
        )
    }

    pub fn domain(self, n: usize) -> Cube {
        match self {
            Half::Lower => Cube::new(Rational::zero(), rat(1, 2), n),
            Half::Upper => Cube::new(rat(1, 2), Rational::one(), n),
        }
        .expect("half cube")
    }
}

/// Lower half: a sparse system with upper value `β` and lower value 0 (the
/// identity when `β = 0`). Upper half: a dense system with value `α`. When
/// `α = β` both halves carry the dense system.
pub fn build_two_block(
    alpha: &Rational,
    beta: &Rational,
    n: usize,
    k_max: u64,
    options: BuildOptions,
) -> Result<TwoBlockSystem> {
    let nn = int(n as i64);
    if alpha.is_negative() {
        return Err(Error::param("alpha", format!("alpha must be >= 0, got {alpha}")));
    }
    if *beta > nn {
        return Err(Error::param("beta", format!("beta must be <= {n}, got {beta}")));
    }
    if alpha > beta {
        return Err(Error::param(
            "alpha",
            format!("alpha = {alpha} exceeds beta = {beta}"),
        ));
    }
    let dense = |t: &Rational| -> Result<System> {
        if t.is_zero() {
            return Ok(System::Identity { n, k_max });
        }
        Ok(System::Stacked(build_stacked(
            &solve_rate(t, n)?,
            n,
            k_max,
            options,
        )?))
    };
    let lower = if alpha == beta {
        dense(beta)?
    } else {
        let s = solve_rate(beta, n)?.with_active(ActiveSet::SelfPowers);
        System::Stacked(build_stacked(&s, n, k_max, options)?)
    };
    let upper = dense(alpha)?;
    Ok(TwoBlockSystem {
        n,
        alpha: alpha.clone(),
        beta: beta.clone(),
        lower: Box::new(lower),
        upper: Box::new(upper),
    })
}

impl TwoBlockSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn beta(&self) -> &Rational {
        &self.beta
    }

    pub fn half(&self, h: Half) -> &System {
        match h {
            Half::Lower => &self.lower,
            Half::Upper => &self.upper,
        }
    }

    fn apply_point(&self, p: &Point) -> MapState {
        for h in [Half::Lower, Half::Upper] {
            if h.domain(self.n).contains(p) {
                return match self.half(h).apply(&MapState::Inside(h.chart(p))) {
                    MapState::Inside(q) => MapState::Inside(h.chart_inverse(&q)),
                    MapState::Escaped => MapState::Escaped,
                };
            }
        }
        MapState::Inside(p.clone())
    }
}

impl Dynamics for TwoBlockSystem {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, state: &MapState) -> MapState {
        match state {
            MapState::Escaped => MapState::Escaped,
            MapState::Inside(p) => self.apply_point(p),
        }
    }
}

/// Any of the global systems.
#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum System {
    /// The identity on `[0, 1]^n`; `k_max` sets the length of its profile.
    Identity { n: usize, k_max: u64 },
    Stacked(StackedSystem),
    TwoBlock(TwoBlockSystem),
}

impl System {
    pub fn n(&self) -> usize {
        match self {
            System::Identity { n, .. } => *n,
            System::Stacked(s) => s.n(),
            System::TwoBlock(t) => t.n(),
        }
    }

    pub fn k_max(&self) -> u64 {
        match self {
            System::Identity { k_max, .. } => *k_max,
            System::Stacked(s) => s.k_max(),
            System::TwoBlock(t) => t.half(Half::Lower).k_max(),
        }
    }

    /// Analytic `(lower, upper)` metric mean dimension.
    pub fn target(&self) -> (Rational, Rational) {
        match self {
            System::Identity { .. } => (Rational::zero(), Rational::zero()),
            System::Stacked(s) => s.schedule().target(s.n()),
            System::TwoBlock(t) => {
                let (la, ua) = t.half(Half::Lower).target();
                let (lb, ub) = t.half(Half::Upper).target();
                (la.max(lb), ua.max(ub))
            }
        }
    }

    pub fn as_stacked(&self) -> Option<&StackedSystem> {
        match self {
            System::Stacked(s) => Some(s),
            _ => None,
        }
    }

    /// Condition C1 for every stacked part.
    pub fn enlargements_disjoint(&self) -> bool {
        match self {
            System::Identity { .. } => true,
            System::Stacked(s) => s.enlargements_disjoint() && s.inside_unit_cube(),
            System::TwoBlock(t) => {
                t.half(Half::Lower).enlargements_disjoint()
                    && t.half(Half::Upper).enlargements_disjoint()
            }
        }
    }
}

impl Dynamics for System {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, state: &MapState) -> MapState {
        match self {
            System::Identity { .. } => state.clone(),
            System::Stacked(s) => s.apply(state),
            System::TwoBlock(t) => t.apply(state),
        }
    }
}
