//! Piecewise-affine partial maps with absorbing escape.
//!
//! A [`PAMap`] is a finite list of [`AffinePiece`]s over boxes with disjoint
//! interiors. Points covered by no piece, and the [`MapState::Escaped`] state
//! itself, map to `Escaped`. A point on a shared face of two domains uses the
//! piece whose domain is lexicographically smallest.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Rational;
use crate::geometry::{find_interior_overlap, Cube, Point, RBox};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MapState {
    Inside(Point),
    Escaped,
}

impl MapState {
    pub fn point(&self) -> Option<&Point> {
        match self {
            MapState::Inside(p) => Some(p),
            MapState::Escaped => None,
        }
    }

    pub fn is_escaped(&self) -> bool {
        matches!(self, MapState::Escaped)
    }
}

/// Anything that can be iterated on exact points.
pub trait Dynamics: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, state: &MapState) -> MapState;

    /// The states `x, f(x), ..., f^{steps-1}(x)`.
    fn orbit(&self, start: &Point, steps: usize) -> Vec<MapState> {
        let mut out = Vec::with_capacity(steps);
        let mut s = MapState::Inside(start.clone());
        for i in 0..steps {
            if i > 0 {
                s = self.apply(&s);
            }
            out.push(s.clone());
        }
        out
    }
}

/// `f^2` for any dynamics.
pub struct Squared<'a, D: ?Sized>(pub &'a D);

impl<D: Dynamics + ?Sized> Dynamics for Squared<'_, D> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, state: &MapState) -> MapState {
        self.0.apply(&self.0.apply(state))
    }
}

/// An invertible axis-aligned affine map on a box.
///
/// Along axis `i` the image of `x` is `offset_i + scale_i * (x - lo_i)`, or
/// `offset_i + scale_i * (hi_i - x)` when `reflect_i` is set, so the image box
/// always starts at `offset`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AffinePiece {
    domain: RBox,
    #[serde(with = "crate::exact::serde_rational_vec")]
    scale: Vec<Rational>,
    #[serde(with = "crate::exact::serde_rational_vec")]
    offset: Vec<Rational>,
    reflect: Vec<bool>,
}

impl AffinePiece {
    pub fn new(
        domain: RBox,
        scale: Vec<Rational>,
        offset: Vec<Rational>,
        reflect: Vec<bool>,
    ) -> Result<Self> {
        let n = domain.dim();
        for len in [scale.len(), offset.len(), reflect.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        if scale.iter().any(|s| *s <= Rational::zero()) {
            return Err(Error::Geometry(
                "piece scales must be positive (orientation lives in `reflect`)".into(),
            ));
        }
        Ok(AffinePiece {
            domain,
            scale,
            offset,
            reflect,
        })
    }

    pub fn identity(domain: RBox) -> Self {
        let n = domain.dim();
        let offset = domain.lo().to_vec();
        AffinePiece {
            domain,
            scale: vec![Rational::one(); n],
            offset,
            reflect: vec![false; n],
        }
    }

    pub fn domain(&self) -> &RBox {
        &self.domain
    }

    pub fn scale(&self) -> &[Rational] {
        &self.scale
    }

    pub fn offset(&self) -> &[Rational] {
        &self.offset
    }

    pub fn reflect(&self) -> &[bool] {
        &self.reflect
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn eval_axis(&self, axis: usize, x: &Rational) -> Rational {
        let from = if self.reflect[axis] {
            &self.domain.hi()[axis] - x
        } else {
            x - &self.domain.lo()[axis]
        };
        &self.offset[axis] + &self.scale[axis] * from
    }

    fn inverse_axis(&self, axis: usize, y: &Rational) -> Rational {
        let from = (y - &self.offset[axis]) / &self.scale[axis];
        if self.reflect[axis] {
            &self.domain.hi()[axis] - from
        } else {
            &self.domain.lo()[axis] + from
        }
    }

    /// Image of a point; the caller is responsible for domain membership.
    pub fn eval(&self, p: &Point) -> Point {
        Point(
            p.coords()
                .iter()
                .enumerate()
                .map(|(i, x)| self.eval_axis(i, x))
                .collect(),
        )
    }

    pub fn image(&self) -> RBox {
        let hi = (0..self.dim())
            .map(|i| &self.offset[i] + &self.scale[i] * self.domain.width(i))
            .collect();
        RBox::new(self.offset.clone(), hi).expect("image of a valid piece")
    }

    /// Image of a sub-box of the domain.
    pub fn image_of(&self, b: &RBox) -> RBox {
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for i in 0..self.dim() {
            let a = self.eval_axis(i, &b.lo()[i]);
            let c = self.eval_axis(i, &b.hi()[i]);
            if a <= c {
                lo.push(a);
                hi.push(c);
            } else {
                lo.push(c);
                hi.push(a);
            }
        }
        RBox::new(lo, hi).expect("monotone image")
    }

    /// `{x in domain : piece(x) in target}`, or `None` when empty.
    pub fn preimage(&self, target: &RBox) -> Option<RBox> {
        let t = self.image().intersect(target)?;
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for i in 0..self.dim() {
            let a = self.inverse_axis(i, &t.lo()[i]);
            let c = self.inverse_axis(i, &t.hi()[i]);
            if a <= c {
                lo.push(a);
                hi.push(c);
            } else {
                lo.push(c);
                hi.push(a);
            }
        }
        Some(RBox::new(lo, hi).expect("monotone preimage"))
    }

    /// `next ∘ self` restricted to `self^{-1}(domain(next))`, when that set has
    /// nonempty interior.
    pub fn then(&self, next: &AffinePiece) -> Option<AffinePiece> {
        let dom = self.preimage(next.domain())?;
        if !dom.has_interior() {
            return None;
        }
        let img = next.image_of(&self.image_of(&dom));
        let scale = (0..self.dim())
            .map(|i| &self.scale[i] * &next.scale[i])
            .collect();
        let reflect = (0..self.dim())
            .map(|i| self.reflect[i] ^ next.reflect[i])
            .collect();
        Some(AffinePiece {
            domain: dom,
            scale,
            offset: img.lo().to_vec(),
            reflect,
        })
    }
}

/// Piecewise-affine partial map on an ambient cube.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PAMap {
    ambient: Cube,
    pieces: Vec<AffinePiece>,
}

impl PAMap {
    /// Sorts pieces lexicographically by domain and checks that the domains
    /// have pairwise disjoint interiors.
    pub fn new(ambient: Cube, mut pieces: Vec<AffinePiece>) -> Result<Self> {
        for p in &pieces {
            if p.dim() != ambient.dim() {
                return Err(Error::DimensionMismatch {
                    expected: ambient.dim(),
                    got: p.dim(),
                });
            }
        }
        pieces.sort_by(|a, b| {
            a.domain
                .lo()
                .cmp(b.domain.lo())
                .then_with(|| a.domain.hi().cmp(b.domain.hi()))
        });
        let domains: Vec<RBox> = pieces.iter().map(|p| p.domain.clone()).collect();
        if let Some((i, j)) = find_interior_overlap(&domains) {
            return Err(Error::Geometry(format!(
                "piece domains {:?} and {:?} overlap",
                domains[i], domains[j]
            )));
        }
        Ok(PAMap { ambient, pieces })
    }

    /// Identity on the whole ambient cube.
    pub fn identity(ambient: Cube) -> Self {
        let piece = AffinePiece::identity(ambient.to_box());
        PAMap {
            ambient,
            pieces: vec![piece],
        }
    }

    pub fn ambient(&self) -> &Cube {
        &self.ambient
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    /// Index of the piece used at `p`.
    pub fn piece_at(&self, p: &Point) -> Option<usize> {
        self.pieces.iter().position(|pc| pc.domain.contains(p))
    }

    /// `self` followed by `next`, piece by piece.
    pub fn then(&self, next: &PAMap) -> PAMap {
        let pieces = self
            .pieces
            .iter()
            .flat_map(|a| next.pieces.iter().filter_map(move |b| a.then(b)))
            .collect();
        PAMap::new(self.ambient.clone(), pieces).expect("composition of injective maps")
    }
}

impl Dynamics for PAMap {
    fn dim(&self) -> usize {
        self.ambient.dim()
    }

    fn apply(&self, state: &MapState) -> MapState {
        match state {
            MapState::Escaped => MapState::Escaped,
            MapState::Inside(p) => match self.piece_at(p) {
                Some(i) => MapState::Inside(self.pieces[i].eval(p)),
                None => MapState::Escaped,
            },
        }
    }
}
