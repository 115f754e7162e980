//! Cylinder combinatorics under `ϕ = φ²` and closed-form rate bounds.
//!
//! A cylinder of depth `m` in block `k` is addressed by a word of `m` symbols
//! `(l_t, i_t)`: a selected strip and a leg. Its points `x` satisfy
//! `ϕ^{t-1}(x) ∈ V_{l_t} ∩ H_{i_t}` for `t = 1..m`. The box is built from the
//! back: `C_t = V_{l_t} ∩ H_{i_t} ∩ ϕ^{-1}(C_{t+1})`, where the branch of `ϕ`
//! used is the one passing through the strip whose image is `H_{i_{t+1}}`.

use std::ops::RangeInclusive;

use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::{ActiveSet, Half, Schedule, StackedSystem, System, TwoBlockSystem};
use crate::error::{Error, Result};
use crate::exact::{format_rational, int, mul_exact, rat, to_f64, Rational};
use crate::geometry::{Point, RBox};
use crate::horseshoe::{HorseshoeMap, LegIndex, SquaredHorseshoe, SubdivisionGrid};
use crate::logexpr::{bits_for_digits, Fixed, LogExpr};

/// One step of a cylinder code.
pub type Symbol = (u64, LegIndex);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CylinderCode {
    pub block: u64,
    pub word: Vec<Symbol>,
}

impl CylinderCode {
    pub fn new(block: u64, word: Vec<Symbol>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidCode("depth must be at least 1".into()));
        }
        Ok(CylinderCode { block, word })
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }
}

/// `L` odd strips pairwise at least `ε = |E|/(2L-1)` apart: starting from
/// `V_1`, each next strip is the first odd one after a gap of
/// `ceil((2L^{n-1}-1)/(2L-1))` strip widths.
pub fn selected_strips(grid: &SubdivisionGrid) -> Result<Vec<u64>> {
    let s = grid.strip_count();
    let g = s.div_ceil(grid.slab_count());
    let mut out = vec![1u64];
    while (out.len() as u64) < grid.legs_per_axis() {
        let mut next = out.last().unwrap() + g + 1;
        if next.is_multiple_of(2) {
            next += 1;
        }
        if next > s {
            return Err(Error::Geometry(format!(
                "only {} separated strips fit among {s}",
                out.len()
            )));
        }
        out.push(next);
    }
    Ok(out)
}

/// `L_k^{nm}`, the number of depth-`m` cylinders in block `k`.
pub fn count_cylinders(schedule: &Schedule, k: u64, n: usize, m: usize) -> BigUint {
    schedule.legs(k).pow((n * m) as u32)
}

/// Checks that every symbol is a selected strip and a leg of the grid.
fn check_code(grid: &SubdivisionGrid, selected: &[u64], code: &CylinderCode) -> Result<()> {
    for (t, (l, leg)) in code.word.iter().enumerate() {
        if !selected.contains(l) {
            return Err(Error::InvalidCode(format!(
                "symbol {t}: strip {l} is not one of the selected strips {selected:?}"
            )));
        }
        let ok = leg.len() == grid.dim() - 1
            && leg.iter().all(|&i| i % 2 == 1 && i <= grid.slab_count());
        if !ok {
            return Err(Error::InvalidCode(format!("symbol {t}: {leg:?} is not a leg")));
        }
    }
    Ok(())
}

fn symbol_box(grid: &SubdivisionGrid, (l, leg): &Symbol) -> RBox {
    grid.strip(*l)
        .bounds
        .intersect(&grid.leg(leg).bounds)
        .expect("strips cross legs")
}

/// `V_l ∩ H_i ∩ ϕ^{-1}(next)`, with `next` the box of a code starting at leg `next_leg`.
fn prepend(
    grid: &SubdivisionGrid,
    sq: &SquaredHorseshoe,
    symbol: &Symbol,
    next_leg: &[u64],
    next: &RBox,
) -> Result<RBox> {
    let via = sq
        .strip_onto(next_leg)
        .ok_or_else(|| Error::InvalidCode(format!("no strip maps onto {next_leg:?}")))?;
    let piece = sq
        .piece(symbol.0, via)
        .ok_or_else(|| Error::Geometry(format!("no branch through strips {} and {via}", symbol.0)))?;
    piece
        .preimage(next)
        .and_then(|pre| pre.intersect(&symbol_box(grid, symbol)))
        .filter(RBox::has_interior)
        .ok_or_else(|| Error::Geometry("empty cylinder".into()))
}

/// Exact box of a cylinder in the horseshoe `h`.
pub fn cylinder_box(h: &HorseshoeMap, sq: &SquaredHorseshoe, code: &CylinderCode) -> Result<RBox> {
    let grid = h.grid();
    check_code(grid, &selected_strips(grid)?, code)?;
    let last = code.word.last().expect("depth >= 1");
    let mut b = symbol_box(grid, last);
    for t in (0..code.depth() - 1).rev() {
        b = prepend(grid, sq, &code.word[t], &code.word[t + 1].1, &b)?;
    }
    Ok(b)
}

/// Cylinder box in block `code.block` of a stacked system.
pub fn cylinder_geometry(system: &StackedSystem, code: &CylinderCode) -> Result<RBox> {
    let h = system.horseshoe(code.block)?;
    cylinder_box(h, &SquaredHorseshoe::new(h), code)
}

/// All depth-`m` cylinders of `h`, sorted by code. Fails when `L^{nm}` exceeds
/// `budget`.
pub fn enumerate_cylinders(
    h: &HorseshoeMap,
    block: u64,
    m: usize,
    budget: u64,
) -> Result<Vec<(CylinderCode, RBox)>> {
    if m == 0 {
        return Err(Error::InvalidCode("depth must be at least 1".into()));
    }
    let grid = h.grid();
    let total = BigUint::from(grid.legs_per_axis()).pow((grid.dim() * m) as u32);
    if total > BigUint::from(budget) {
        return Err(Error::BudgetExceeded {
            needed: total.to_string(),
            budget,
        });
    }
    let sq = SquaredHorseshoe::new(h);
    let selected = selected_strips(grid)?;
    let symbols: Vec<Symbol> = selected
        .iter()
        .flat_map(|&l| grid.legs().into_iter().map(move |leg| (l, leg)))
        .collect();
    // Suffix words of growing length, each with its box.
    let mut level: Vec<(Vec<Symbol>, RBox)> = symbols
        .iter()
        .map(|s| (vec![s.clone()], symbol_box(grid, s)))
        .collect();
    for _ in 1..m {
        level = symbols
            .par_iter()
            .flat_map_iter(|s| {
                level.iter().map(|(word, b)| {
                    let nb = prepend(grid, &sq, s, &word[0].1, b)?;
                    let mut w = Vec::with_capacity(word.len() + 1);
                    w.push(s.clone());
                    w.extend_from_slice(word);
                    Ok((w, nb))
                })
            })
            .collect::<Result<Vec<_>>>()?;
    }
    let mut out: Vec<(CylinderCode, RBox)> = level
        .into_iter()
        .map(|(word, b)| (CylinderCode { block, word }, b))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Closed-form bounds at one scale.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateBound {
    pub k: u64,
    pub active: bool,
    /// `ε_k`, when rational.
    pub eps: Option<Rational>,
    pub ln_eps: LogExpr,
    /// `n ln L_k` for active blocks, 0 otherwise.
    pub rate: LogExpr,
    /// `|ln ε_{k+1}|`.
    pub lower_den: LogExpr,
    /// `|ln ε_k| + ln 4`.
    pub upper_den: LogExpr,
}

/// Bounds for block `k` with every `ε` multiplied by `chart` (1, or 1/2 in
/// a half of a two-block system).
pub fn rate_bound(schedule: &Schedule, n: usize, k: u64, chart: &Rational) -> RateBound {
    let active = schedule.is_active(k);
    let rate = if active {
        schedule.ln_legs(k).scaled(&int(n as i64))
    } else {
        LogExpr::zero()
    };
    let ln_chart = LogExpr::ln_rational(chart);
    let ln_eps = schedule.ln_eps(k).plus(&ln_chart);
    let ln_next = schedule.ln_eps(k + 1).plus(&ln_chart);
    RateBound {
        k,
        active,
        eps: schedule.eps(k).map(|e| mul_exact(&e, chart)),
        lower_den: ln_next.scaled(&int(-1)),
        upper_den: LogExpr::ln(4u32).minus(&ln_eps),
        ln_eps,
        rate,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub k: u64,
    #[serde(serialize_with = "serialize_opt_rational")]
    pub eps_exact: Option<Rational>,
    /// `ε` in scientific notation, from its logarithm (never underflows).
    pub eps_float: String,
    pub lower_rate: f64,
    pub upper_rate: f64,
    /// `rate / |ln ε_{k+1}|`.
    pub lower_ratio: f64,
    /// `rate / (|ln ε_k| + ln 4)`.
    pub upper_ratio: f64,
    /// `rate / |ln ε_k|`.
    pub eps_ratio: f64,
    pub lower_ratio_text: String,
    pub upper_ratio_text: String,
    /// Row at an active index of a sparse schedule.
    pub burst: bool,
}

fn serialize_opt_rational<S: serde::Serializer>(
    x: &Option<Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(x) => s.serialize_str(&format_rational(x)),
        None => s.serialize_none(),
    }
}

/// Scientific notation for `exp(ln)`.
pub fn sci_from_ln(ln: f64) -> String {
    let l10 = ln / std::f64::consts::LN_10;
    let mut e = l10.floor();
    let mut mant = 10f64.powf(l10 - e);
    if mant >= 9.999_999_999_5 {
        mant /= 10.0;
        e += 1.0;
    }
    format!("{mant:.10}e{e}")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile {
    pub rows: Vec<ProfileRow>,
    pub digits: u32,
}

fn evaluate(b: &RateBound, digits: u32, burst: bool) -> ProfileRow {
    let neg_eps = b.ln_eps.scaled(&int(-1));
    let v = LogExpr::eval_all(
        &[&b.rate, &b.lower_den, &b.upper_den, &neg_eps],
        bits_for_digits(digits),
    );
    let rate = &v[0];
    let ratio = |d: &Fixed| {
        let q = rate.div(d);
        (q.to_f64(), q.to_decimal(digits))
    };
    let (lower_ratio, lower_ratio_text) = ratio(&v[1]);
    let (upper_ratio, upper_ratio_text) = ratio(&v[2]);
    let eps_ratio = rate.div(&v[3]).to_f64();
    let ln_eps = -v[3].to_f64();
    let rate = rate.to_f64();
    ProfileRow {
        k: b.k,
        eps_float: b
            .eps
            .as_ref()
            .filter(|e| to_f64(e) > 0.0)
            .map(|e| format!("{:.10e}", to_f64(e)))
            .unwrap_or_else(|| sci_from_ln(ln_eps)),
        eps_exact: b.eps.clone(),
        lower_rate: rate,
        upper_rate: rate,
        lower_ratio,
        upper_ratio,
        eps_ratio,
        lower_ratio_text,
        upper_ratio_text,
        burst,
    }
}

fn zero_row(k: u64, digits: u32) -> ProfileRow {
    let zero = format!("0.{}", "0".repeat(digits as usize));
    ProfileRow {
        k,
        eps_exact: None,
        eps_float: String::new(),
        lower_rate: 0.0,
        upper_rate: 0.0,
        lower_ratio: 0.0,
        upper_ratio: 0.0,
        eps_ratio: 0.0,
        lower_ratio_text: zero.clone(),
        upper_ratio_text: zero,
        burst: false,
    }
}

fn is_burst(schedule: &Schedule, k: u64) -> bool {
    schedule.active == ActiveSet::SelfPowers && schedule.is_active(k)
}

/// Profile of a bare schedule in dimension `n`.
pub fn schedule_profile(
    schedule: &Schedule,
    n: usize,
    ks: RangeInclusive<u64>,
    digits: u32,
) -> Profile {
    profile_with_chart(schedule, n, ks, digits, &Rational::one())
}

fn profile_with_chart(
    schedule: &Schedule,
    n: usize,
    ks: RangeInclusive<u64>,
    digits: u32,
    chart: &Rational,
) -> Profile {
    let ks: Vec<u64> = ks.collect();
    let rows = ks
        .par_iter()
        .map(|&k| evaluate(&rate_bound(schedule, n, k, chart), digits, is_burst(schedule, k)))
        .collect();
    Profile { rows, digits }
}

/// Symbolic profile of a system over `ks`.
///
/// A stacked system uses its effective schedule. A two-block system takes,
/// row by row, the larger lower ratio and the larger upper ratio of its two
/// halves, each at its own `ε_k / 2`.
pub fn rate_profile(system: &System, ks: RangeInclusive<u64>, digits: u32) -> Profile {
    match system {
        System::Identity { .. } => Profile {
            rows: ks.map(|k| zero_row(k, digits)).collect(),
            digits,
        },
        System::Stacked(s) => schedule_profile(s.effective_schedule(), s.n(), ks, digits),
        System::TwoBlock(t) => {
            let lo = half_profile(t, Half::Lower, ks.clone(), digits);
            let up = half_profile(t, Half::Upper, ks, digits);
            let rows = lo
                .rows
                .into_iter()
                .zip(up.rows)
                .map(|(a, b)| combine(a, b))
                .collect();
            Profile { rows, digits }
        }
    }
}

/// Profile of one half of a two-block system, at its own `ε_k / 2`.
pub fn half_profile(
    t: &TwoBlockSystem,
    half: Half,
    ks: RangeInclusive<u64>,
    digits: u32,
) -> Profile {
    match t.half(half) {
        System::Stacked(s) => {
            profile_with_chart(s.effective_schedule(), s.n(), ks, digits, &rat(1, 2))
        }
        other => rate_profile(other, ks, digits),
    }
}

fn combine(a: ProfileRow, b: ProfileRow) -> ProfileRow {
    let burst = a.burst || b.burst;
    let (upper_ratio, upper_ratio_text, upper_rate) = if b.upper_ratio > a.upper_ratio {
        (b.upper_ratio, b.upper_ratio_text.clone(), b.upper_rate)
    } else {
        (a.upper_ratio, a.upper_ratio_text.clone(), a.upper_rate)
    };
    let mut row = if b.lower_ratio > a.lower_ratio { b } else { a };
    row.upper_ratio = upper_ratio;
    row.upper_ratio_text = upper_ratio_text;
    row.upper_rate = upper_rate;
    row.burst = burst;
    row
}

/// Least-squares fit of `ratio(k) = c - d/k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub c: f64,
    pub d: f64,
    pub rms_residual: f64,
    pub points: usize,
    pub k_first: u64,
    pub k_last: u64,
}

pub fn fit_limit(points: &[(u64, f64)]) -> Result<Fit> {
    if points.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "{} points, at least 4 needed",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|&(k, _)| 1.0 / k as f64).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx.is_nan() || sxx <= 0.0 || !ys.iter().all(|y| y.is_finite()) {
        return Err(Error::DegenerateFit("abscissae coincide or values are not finite".into()));
    }
    let slope = sxy / sxx;
    let c = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (c + slope * x)).powi(2))
        .sum::<f64>()
        / len)
        .sqrt();
    Ok(Fit {
        c,
        d: -slope,
        rms_residual: rms,
        points: points.len(),
        k_first: points[0].0,
        k_last: points[points.len() - 1].0,
    })
}

/// Fits the last `max(4, ceil(len/2))` points.
pub fn fit_tail(points: &[(u64, f64)]) -> Result<Fit> {
    let take = 4.max(points.len().div_ceil(2)).min(points.len());
    fit_limit(&points[points.len() - take..])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Extrapolation {
    pub liminf: Fit,
    pub limsup: Fit,
}

/// `liminf` from lower ratios off the bursts, `limsup` from upper ratios on
/// them (all rows when there are no bursts).
pub fn extrapolate(profile: &Profile) -> Result<Extrapolation> {
    let has_bursts = profile.rows.iter().any(|r| r.burst);
    let pick = |want_burst: bool, f: fn(&ProfileRow) -> f64| -> Vec<(u64, f64)> {
        profile
            .rows
            .iter()
            .filter(|r| !has_bursts || r.burst == want_burst)
            .map(|r| (r.k, f(r)))
            .collect()
    };
    Ok(Extrapolation {
        liminf: fit_tail(&pick(false, |r| r.lower_ratio))?,
        limsup: fit_tail(&pick(true, |r| r.upper_ratio))?,
    })
}

/// Exact centers of all depth-`m` cylinders.
pub fn centers(cylinders: &[(CylinderCode, RBox)]) -> Vec<Point> {
    cylinders.iter().map(|(_, b)| b.center()).collect()
}
