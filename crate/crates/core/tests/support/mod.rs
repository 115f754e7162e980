//! Oracles shared by the integration tests. None of them call into the
//! library's own logarithm or cylinder code.

#![allow(dead_code)]

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use mmdim::exact::{int, Rational};
use mmdim::geometry::RBox;
use mmdim::horseshoe::HorseshoeMap;
use mmdim::map::{AffinePiece, PAMap};

/// `exp(y)` for fixed-point `y` (scaled by `2^w`), by halving and a Taylor series.
fn exp_fixed(y: &BigInt, w: u64) -> BigInt {
    let halvings = 12u64;
    let wp = w + halvings + 16;
    let mut z = y << (wp - w);
    z >>= halvings;
    let one = BigInt::one() << wp;
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut i = 1u32;
    loop {
        term = ((&term * &z) >> wp) / BigInt::from(i);
        if term.is_zero() {
            break;
        }
        sum += &term;
        i += 1;
    }
    for _ in 0..halvings {
        sum = (&sum * &sum) >> wp;
    }
    sum >> (wp - w)
}

/// `ln(x)` scaled by `2^w`, by Halley iteration on `exp(y) = x`.
pub fn ln_oracle(x: &BigUint, w: u64) -> BigInt {
    assert!(!x.is_zero());
    // x = 2^e * m with m in [1, 2): ln x = e ln 2 + ln m, both by iteration.
    let e = x.bits() - 1;
    let xm = BigInt::from(x.clone());
    let m = if e >= w { xm >> (e - w) } else { xm << (w - e) };
    let two = BigInt::from(2u32) << w;
    solve_ln(&m, w) + solve_ln(&two, w) * BigInt::from(e)
}

fn solve_ln(target: &BigInt, w: u64) -> BigInt {
    let t = target.to_f64().unwrap() / 2f64.powi(w as i32);
    let mut y = BigInt::from((t.ln() * 2f64.powi(50)) as i64) << (w.saturating_sub(50));
    for _ in 0..(w / 40 + 4) {
        let ey = exp_fixed(&y, w);
        // y += 2 (x - e^y) / (x + e^y)
        let step = ((target - &ey) << (w + 1)) / (target + &ey);
        if step.abs() <= BigInt::one() {
            y += step;
            break;
        }
        y += step;
    }
    y
}

pub fn ln_f(x: &BigUint) -> f64 {
    to_f64_fixed(&ln_oracle(x, 128), 128)
}

pub fn to_f64_fixed(v: &BigInt, w: u64) -> f64 {
    let shift = v.bits().saturating_sub(60);
    (v >> shift).to_f64().unwrap() * 2f64.powi(shift as i32 - w as i32)
}

/// `a / b` of two positive fixed-point values, rounded to `digits` decimals.
pub fn ratio_decimal(a: &BigInt, b: &BigInt, digits: u32) -> String {
    let q: BigInt = (a * BigInt::from(10u32).pow(digits) * 2u32 + b) / (b * 2u32);
    let s = format!("{:0>width$}", q.to_string(), width = digits as usize + 1);
    let (i, f) = s.split_at(s.len() - digits as usize);
    format!("{i}.{f}")
}

pub fn pow3(e: u64) -> BigUint {
    BigUint::from(3u32).pow(e as u32)
}

/// Depth-`m` cylinders under `φ²` by direct pullback through single pieces of
/// `φ`: `x ∈ V_{l_1} ∩ H_{i_1}`, `φ(x) ∈ V_{l''}`, `φ²(x) ∈ next`, with
/// `l''` whatever strip `φ` maps onto the next leg.
pub fn oracle_cylinders(h: &HorseshoeMap, selected: &[u64], m: usize) -> Vec<RBox> {
    let grid = h.grid();
    let piece_for = |l: u64| {
        let b = grid.strip(l).bounds;
        h.pamap().pieces().iter().find(|p| *p.domain() == b).unwrap().clone()
    };
    let symbols: Vec<(u64, Vec<u64>)> = selected
        .iter()
        .flat_map(|&l| grid.legs().into_iter().map(move |leg| (l, leg)))
        .collect();
    let base = |s: &(u64, Vec<u64>)| {
        grid.strip(s.0).bounds.intersect(&grid.leg(&s.1).bounds).unwrap()
    };
    let mut level: Vec<(Vec<u64>, RBox)> =
        symbols.iter().map(|s| (s.1.clone(), base(s))).collect();
    for _ in 1..m {
        let mut next = Vec::new();
        for s in &symbols {
            let first = piece_for(s.0);
            for (leg, b) in &level {
                // The strip whose image is `leg`.
                let (mid, _) = h.assignment().iter().find(|(_, l)| l == leg).unwrap();
                let second = piece_for(*mid);
                let Some(b1) = second.preimage(b) else { continue };
                let Some(b0) = first.preimage(&b1) else { continue };
                if let Some(c) = b0.intersect(&base(s)) {
                    if c.has_interior() {
                        next.push((s.1.clone(), c));
                    }
                }
            }
        }
        level = next;
    }
    level.into_iter().map(|(_, b)| b).collect()
}

/// Quadratic pairwise check of interior overlaps.
pub fn pairwise_disjoint(boxes: &[RBox]) -> bool {
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            let a = &boxes[i];
            let b = &boxes[j];
            let overlap = (0..a.dim()).all(|d| a.lo()[d] < b.hi()[d] && b.lo()[d] < a.hi()[d]);
            if overlap {
                return false;
            }
        }
    }
    true
}

pub fn r(p: i64, q: i64) -> Rational {
    mmdim::exact::rat(p, q)
}

/// Five single-fault variants of a valid horseshoe.
pub fn mutations(h: &HorseshoeMap) -> Vec<(&'static str, HorseshoeMap)> {
    let grid = h.grid().clone();
    let cube = grid.cube().clone();
    let pieces = h.pamap().pieces().to_vec();
    let assignment = h.assignment().to_vec();
    let rebuild = |assignment: Vec<(u64, Vec<u64>)>, pieces: Vec<AffinePiece>| {
        HorseshoeMap::from_parts(
            grid.clone(),
            assignment,
            PAMap::new(cube.clone(), pieces).unwrap(),
        )
    };
    let piece = |dom: RBox, scale: Vec<Rational>, offset: Vec<Rational>, reflect: Vec<bool>| {
        AffinePiece::new(dom, scale, offset, reflect).unwrap()
    };
    let mut out = Vec::new();

    // 1. Two strips sent to the same leg.
    let mut a = assignment.clone();
    a[1].1 = a[0].1.clone();
    let mut p = pieces.clone();
    p[1] = piece(p[1].domain().clone(), p[1].scale().to_vec(), p[0].offset().to_vec(), p[1].reflect().to_vec());
    out.push(("duplicate leg", rebuild(a, p)));

    // 2. First-axis scale 2L^{n-1} - 2.
    let mut p = pieces.clone();
    let mut sc = p[1].scale().to_vec();
    sc[0] = int(grid.strip_count() as i64 - 1);
    p[1] = piece(p[1].domain().clone(), sc, p[1].offset().to_vec(), p[1].reflect().to_vec());
    out.push(("short stretch", rebuild(assignment.clone(), p)));

    // 3. An even strip that stays in the cube.
    let mut p = pieces.clone();
    p.push(AffinePiece::identity(grid.strip(2).bounds));
    out.push(("even strip kept", rebuild(assignment.clone(), p)));

    // 4. A reflected first piece: same image, corner moves.
    let mut p = pieces.clone();
    let mut refl = p[0].reflect().to_vec();
    refl[0] = true;
    p[0] = piece(p[0].domain().clone(), p[0].scale().to_vec(), p[0].offset().to_vec(), refl);
    out.push(("reflected corner piece", rebuild(assignment.clone(), p)));

    // 5. An odd strip without a piece.
    let mut p = pieces.clone();
    p.remove(1);
    out.push(("missing piece", rebuild(assignment, p)));
    out
}
