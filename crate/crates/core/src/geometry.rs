//! Axis-aligned rational geometry: points, cubes `[lo, hi]^n` and boxes.

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{format_rational, half, Rational};

/// A point of `Q^n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point(pub Vec<Rational>);

impl Point {
    pub fn new(coords: Vec<Rational>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// The cube `[lo, hi]^dim`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cube {
    #[serde(with = "crate::exact::serde_rational")]
    lo: Rational,
    #[serde(with = "crate::exact::serde_rational")]
    hi: Rational,
    dim: usize,
}

impl Cube {
    pub fn new(lo: Rational, hi: Rational, dim: usize) -> Result<Self> {
        if lo >= hi {
            return Err(Error::Geometry(format!(
                "cube needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        if dim == 0 {
            return Err(Error::Geometry("cube of dimension 0".into()));
        }
        Ok(Cube { lo, hi, dim })
    }

    pub fn unit(dim: usize) -> Self {
        Cube::new(Rational::zero(), Rational::from_integer(1.into()), dim)
            .expect("unit cube is valid")
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Side length `|E| = hi - lo`.
    pub fn side(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn to_box(&self) -> RBox {
        RBox::new(vec![self.lo.clone(); self.dim], vec![self.hi.clone(); self.dim])
            .expect("cube box is valid")
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim && p.0.iter().all(|c| *c >= self.lo && *c <= self.hi)
    }

    /// The corner with every coordinate `lo` except the last, which is `hi`.
    pub fn corner_low_high(&self) -> Point {
        let mut c = vec![self.lo.clone(); self.dim];
        c[self.dim - 1] = self.hi.clone();
        Point(c)
    }

    /// The corner with every coordinate `hi` except the last, which is `lo`.
    pub fn corner_high_low(&self) -> Point {
        let mut c = vec![self.hi.clone(); self.dim];
        c[self.dim - 1] = self.lo.clone();
        Point(c)
    }
}

/// A closed axis-aligned box `prod [lo_i, hi_i]`. Degenerate sides
/// (`lo_i == hi_i`) are allowed; use [`RBox::has_interior`] to tell.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RBox {
    #[serde(with = "crate::exact::serde_rational_vec")]
    lo: Vec<Rational>,
    #[serde(with = "crate::exact::serde_rational_vec")]
    hi: Vec<Rational>,
}

impl fmt::Debug for RBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, b)) in self.lo.iter().zip(&self.hi).enumerate() {
            if i > 0 {
                f.write_str(" x ")?;
            }
            write!(f, "[{}, {}]", format_rational(a), format_rational(b))?;
        }
        Ok(())
    }
}

impl RBox {
    pub fn new(lo: Vec<Rational>, hi: Vec<Rational>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Geometry("box with lo > hi".into()));
        }
        Ok(RBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[Rational] {
        &self.lo
    }

    pub fn hi(&self) -> &[Rational] {
        &self.hi
    }

    pub fn width(&self, axis: usize) -> Rational {
        &self.hi[axis] - &self.lo[axis]
    }

    pub fn has_interior(&self) -> bool {
        self.lo.iter().zip(&self.hi).all(|(a, b)| a < b)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p
                .0
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(c, (a, b))| c >= a && c <= b)
    }

    pub fn contains_in_interior(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p
                .0
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(c, (a, b))| c > a && c < b)
    }

    pub fn contains_box(&self, other: &RBox) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// Closed intersection, `None` when empty.
    pub fn intersect(&self, other: &RBox) -> Option<RBox> {
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let a = (&self.lo[i]).max(&other.lo[i]).clone();
            let b = (&self.hi[i]).min(&other.hi[i]).clone();
            if a > b {
                return None;
            }
            lo.push(a);
            hi.push(b);
        }
        Some(RBox { lo, hi })
    }

    pub fn interiors_overlap(&self, other: &RBox) -> bool {
        (0..self.dim()).all(|i| self.lo[i] < other.hi[i] && other.lo[i] < self.hi[i])
    }

    pub fn center(&self) -> Point {
        Point(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(a, b)| (a + b) * half())
                .collect(),
        )
    }

    /// Replaces the extent along one axis.
    pub fn with_axis(mut self, axis: usize, lo: Rational, hi: Rational) -> RBox {
        self.lo[axis] = lo;
        self.hi[axis] = hi;
        self
    }
}

/// Returns a pair of indices whose boxes have overlapping interiors, if any.
///
/// Sweep along the first axis; boxes are only compared while their first-axis
/// intervals overlap, so well-separated families cost `O(N log N)`.
pub fn find_interior_overlap(boxes: &[RBox]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| boxes[a].lo[0].cmp(&boxes[b].lo[0]));
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let start = &boxes[i].lo[0];
        active.retain(|&j| boxes[j].hi[0] > *start);
        if let Some(&j) = active.iter().find(|&&j| boxes[j].interiors_overlap(&boxes[i])) {
            return Some((j.min(i), j.max(i)));
        }
        active.push(i);
    }
    None
}
