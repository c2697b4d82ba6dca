//! Exact integer arithmetic for resonant directions.
//!
//! A resonant direction is a line through the origin spanned by an integer
//! vector. It is represented by its canonical primitive vector `p`: coprime
//! components, first nonzero component positive. Every lattice point `k`
//! splits along such a line as
//!
//! ```text
//! |p|^2 k = n p + r_scaled,    n = k . p,    r_scaled . p = 0,
//! ```
//!
//! where `r_scaled = |p|^2 r` is the orthogonal offset scaled to stay integral.
//! Points on a common line (same offset) have `n` in a common residue class
//! modulo `|p|^2`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A point of the integer lattice `Z^d`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(SmallVec<[i64; 4]>);

impl LatticePoint {
    pub fn new(coords: impl IntoIterator<Item = i64>) -> Self {
        Self(coords.into_iter().collect())
    }

    pub fn zero(d: usize) -> Self {
        Self(SmallVec::from_elem(0, d))
    }

    /// The `i`-th standard basis vector of `Z^d`.
    pub fn unit(d: usize, i: usize) -> Self {
        let mut e = Self::zero(d);
        e.0[i] = 1;
        e
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn dot(&self, other: &Self) -> i64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> i64 {
        self.dot(self)
    }

    pub fn scale(&self, s: i64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    /// Real coordinates, optionally scaled.
    pub fn to_f64(&self, scale: f64) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64 * scale).collect()
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        Self(SmallVec::from_vec(v))
    }
}

impl<const N: usize> From<[i64; N]> for LatticePoint {
    fn from(v: [i64; N]) -> Self {
        Self::new(v)
    }
}

impl Add for &LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: Self) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: Self) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|a| -a).collect())
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Extended Euclid: returns `(g, s, t)` with `s a + t b = g = gcd(a, b) >= 0`.
pub fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Canonical generator of a resonant direction.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimitiveDirection {
    p: LatticePoint,
    norm_sq: i64,
}

impl fmt::Debug for PrimitiveDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Direction{:?}", self.p)
    }
}

impl PrimitiveDirection {
    pub fn vector(&self) -> &LatticePoint {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    /// `|p|^2`, which is also the number of residue classes of line indices.
    pub fn norm_sq(&self) -> i64 {
        self.norm_sq
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq as f64).sqrt()
    }

    /// Length of the closed geodesic through the origin in this direction.
    pub fn geodesic_length(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.norm()
    }

    /// Whether `k` is an integer multiple of `p`; returns the multiple.
    pub fn multiple_of(&self, k: &LatticePoint) -> Option<i64> {
        if k.dim() != self.dim() {
            return None;
        }
        let n = k.dot(&self.p);
        if n % self.norm_sq != 0 {
            return None;
        }
        let lambda = n / self.norm_sq;
        (self.p.scale(lambda) == *k).then_some(lambda)
    }
}

/// Normalizes a nonzero integer vector to the canonical primitive vector of
/// the line it spans.
pub fn primitive_direction(k: &LatticePoint) -> Result<PrimitiveDirection> {
    let g = k.coords().iter().fold(0, |g, &c| gcd(g, c));
    if g == 0 {
        return Err(Error::NoDirection);
    }
    let first = *k.coords().iter().find(|&&c| c != 0).expect("nonzero");
    let sign = first.signum();
    let p = LatticePoint::new(k.coords().iter().map(|c| sign * c / g));
    let norm_sq = p.norm_sq();
    Ok(PrimitiveDirection { p, norm_sq })
}

/// Coordinates of a lattice point relative to a resonant line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineDecomposition {
    /// `k . p`
    pub n: i64,
    /// `|p|^2 r`, with `r` the projection of `k` onto the orthogonal hyperplane.
    pub r_scaled: LatticePoint,
    /// `n mod |p|^2`, in `[0, |p|^2)`.
    pub class_c: i64,
}

impl LineDecomposition {
    /// Inverse map: `k = (n p + r_scaled) / |p|^2`, when the division is exact.
    pub fn reconstruct(
        n: i64,
        r_scaled: &LatticePoint,
        p: &PrimitiveDirection,
    ) -> Option<LatticePoint> {
        let ns = p.norm_sq();
        let mut out = SmallVec::with_capacity(p.dim());
        for (pi, ri) in p.vector().coords().iter().zip(r_scaled.coords()) {
            let num = n * pi + ri;
            if num % ns != 0 {
                return None;
            }
            out.push(num / ns);
        }
        Some(LatticePoint(out))
    }
}

pub fn decompose(k: &LatticePoint, p: &PrimitiveDirection) -> Result<LineDecomposition> {
    k.check_dim(p.dim())?;
    let n = k.dot(&p.p);
    let ns = p.norm_sq;
    let r_scaled = LatticePoint(
        k.0.iter()
            .zip(&p.p.0)
            .map(|(ki, pi)| ns * ki - n * pi)
            .collect(),
    );
    Ok(LineDecomposition {
        n,
        r_scaled,
        class_c: n.rem_euclid(ns),
    })
}

/// An integer vector `c` with `p . c = 1`.
pub fn bezout_witness(p: &PrimitiveDirection) -> LatticePoint {
    let d = p.dim();
    let mut g = 0i64;
    let mut c = LatticePoint::zero(d);
    for (i, &pi) in p.vector().coords().iter().enumerate() {
        let (g2, s, t) = extended_gcd(g, pi);
        for cj in c.0.iter_mut() {
            *cj *= s;
        }
        c.0[i] += t;
        g = g2;
    }
    debug_assert_eq!(g, 1);
    c
}

/// True iff the lines of index `n` and `m` share an offset, i.e. `m = n mod |p|^2`.
pub fn same_coset(n: i64, m: i64, p: &PrimitiveDirection) -> bool {
    (n - m).rem_euclid(p.norm_sq()) == 0
}

/// Lattice points grouped by the line (parallel to `p`) they lie on, keyed by
/// exact scaled offset. Each group is sorted by `n`.
pub type LineGroups = BTreeMap<LatticePoint, Vec<(i64, LatticePoint)>>;

pub fn group_by_lines<'a>(
    support: impl IntoIterator<Item = &'a LatticePoint>,
    p: &PrimitiveDirection,
) -> Result<LineGroups> {
    let mut groups: LineGroups = BTreeMap::new();
    for k in support {
        let dec = decompose(k, p)?;
        groups
            .entry(dec.r_scaled)
            .or_default()
            .push((dec.n, k.clone()));
    }
    for members in groups.values_mut() {
        members.sort();
    }
    Ok(groups)
}

/// All canonical primitive directions in `Z^d` with `|p|^2 <= max_norm_sq`,
/// in lexicographic order.
pub fn enumerate_directions(d: usize, max_norm_sq: i64) -> Result<Vec<PrimitiveDirection>> {
    if d < 2 {
        return Err(Error::InvalidDimension(
            d,
            "resonant directions need d >= 2",
        ));
    }
    let mut out = Vec::new();
    if max_norm_sq < 1 {
        return Ok(out);
    }
    let mut prefix = Vec::with_capacity(d);
    extend_directions(d, max_norm_sq, &mut prefix, 0, false, &mut out);
    out.sort();
    Ok(out)
}

fn extend_directions(
    d: usize,
    budget: i64,
    prefix: &mut Vec<i64>,
    used: i64,
    leading_seen: bool,
    out: &mut Vec<PrimitiveDirection>,
) {
    if prefix.len() == d {
        if !leading_seen {
            return;
        }
        let p = LatticePoint::new(prefix.iter().copied());
        if p.coords().iter().fold(0, |g, &c| gcd(g, c)) == 1 {
            out.push(PrimitiveDirection { p, norm_sq: used });
        }
        return;
    }
    let bound = isqrt(budget - used);
    // Before the first nonzero entry only nonnegative values are canonical.
    let lo = if leading_seen { -bound } else { 0 };
    for c in lo..=bound {
        prefix.push(c);
        extend_directions(d, budget, prefix, used + c * c, leading_seen || c != 0, out);
        prefix.pop();
    }
}

fn isqrt(n: i64) -> i64 {
    if n <= 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Directions carried by a set of (symbol) modes; the zero mode carries none.
pub fn directions_of_modes<'a>(
    modes: impl IntoIterator<Item = &'a LatticePoint>,
) -> BTreeSet<PrimitiveDirection> {
    modes
        .into_iter()
        .filter(|k| !k.is_zero())
        .map(|k| primitive_direction(k).expect("nonzero mode"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp<const N: usize>(c: [i64; N]) -> LatticePoint {
        LatticePoint::from(c)
    }

    fn dir<const N: usize>(c: [i64; N]) -> PrimitiveDirection {
        primitive_direction(&lp(c)).unwrap()
    }

    #[test]
    fn primitive_direction_examples() {
        assert_eq!(dir([2, 4]).vector(), &lp([1, 2]));
        assert_eq!(dir([-2, 4]).vector(), &lp([1, -2]));
        assert_eq!(dir([0, 0, -3]).vector(), &lp([0, 0, 1]));
        assert_eq!(dir([0, 0, -3]).norm_sq(), 1);
        assert!(matches!(
            primitive_direction(&lp([0, 0])),
            Err(Error::NoDirection)
        ));
    }

    #[test]
    fn decompose_examples() {
        let p = dir([1, 2]);
        let dec = decompose(&lp([3, 1]), &p).unwrap();
        assert_eq!(dec.n, 5);
        assert_eq!(dec.r_scaled, lp([10, -5]));
        assert_eq!(dec.class_c, 0);

        let on_axis = decompose(&lp([1, 2]), &p).unwrap();
        assert_eq!((on_axis.n, on_axis.class_c), (5, 0));
        assert!(on_axis.r_scaled.is_zero());

        let origin = decompose(&lp([0, 0]), &p).unwrap();
        assert_eq!((origin.n, origin.class_c), (0, 0));
        assert!(origin.r_scaled.is_zero());

        assert!(matches!(
            decompose(&lp([1, 2, 3]), &p),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn negative_index_class_is_euclidean() {
        let p = dir([1, 2]);
        let dec = decompose(&lp([-3, 0]), &p).unwrap();
        assert_eq!(dec.n, -3);
        assert_eq!(dec.class_c, 2);
    }

    #[test]
    fn bezout_examples() {
        let c = bezout_witness(&dir([2, 3]));
        assert_eq!(c.dot(&lp([2, 3])), 1);
        assert_eq!(bezout_witness(&dir([1, 0, 0])), lp([1, 0, 0]));
        let p = dir([3, 5, 7]);
        assert_eq!(bezout_witness(&p).dot(p.vector()), 1);
        let q = dir([0, 6, -10, 15]);
        assert_eq!(bezout_witness(&q).dot(q.vector()), 1);
    }

    #[test]
    fn same_coset_examples() {
        assert!(same_coset(5, 0, &dir([1, 2])));
        assert!(same_coset(1, 2, &dir([1, 0])));
        assert!(!same_coset(1, 2, &dir([1, 2])));
        assert!(same_coset(-4, 1, &dir([1, 2])));
    }

    #[test]
    fn group_by_lines_examples() {
        let p = dir([1, 0]);
        let support = [lp([1, 0]), lp([2, 0]), lp([0, 1])];
        let groups = group_by_lines(&support, &p).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[&lp([0, 0])], vec![(1, lp([1, 0])), (2, lp([2, 0]))]);
        assert_eq!(groups[&lp([0, 1])], vec![(0, lp([0, 1]))]);

        let empty: [LatticePoint; 0] = [];
        assert!(group_by_lines(&empty, &p).unwrap().is_empty());
        assert_eq!(
            group_by_lines(&[lp([4, 7])], &dir([1, 2])).unwrap().len(),
            1
        );
    }

    #[test]
    fn enumerate_examples() {
        let one = enumerate_directions(2, 1).unwrap();
        assert_eq!(
            one.iter().map(|p| p.vector().clone()).collect::<Vec<_>>(),
            vec![lp([0, 1]), lp([1, 0])]
        );
        let two = enumerate_directions(2, 2).unwrap();
        assert_eq!(
            two.iter().map(|p| p.vector().clone()).collect::<Vec<_>>(),
            vec![lp([0, 1]), lp([1, -1]), lp([1, 0]), lp([1, 1])]
        );
        assert!(enumerate_directions(2, 0).unwrap().is_empty());
        assert!(matches!(
            enumerate_directions(1, 5),
            Err(Error::InvalidDimension(1, _))
        ));
    }

    /// Oracle: scan the whole box and normalize every nonzero vector.
    fn brute_force_directions(d: usize, max_norm_sq: i64) -> Vec<PrimitiveDirection> {
        let b = isqrt(max_norm_sq.max(0));
        let side = (2 * b + 1) as usize;
        let mut set = BTreeSet::new();
        for idx in 0..side.pow(d as u32) {
            let mut rem = idx;
            let k = LatticePoint::new((0..d).map(|_| {
                let c = (rem % side) as i64 - b;
                rem /= side;
                c
            }));
            if k.is_zero() || k.norm_sq() > max_norm_sq {
                continue;
            }
            set.insert(primitive_direction(&k).unwrap());
        }
        set.into_iter().collect()
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for d in 2..=4 {
            for max in [1, 2, 3, 5, 10, 17] {
                assert_eq!(
                    enumerate_directions(d, max).unwrap(),
                    brute_force_directions(d, max),
                    "d={d} max={max}"
                );
            }
        }
    }

    #[test]
    fn directions_of_modes_examples() {
        let got = directions_of_modes(&[lp([2, 0]), lp([0, 3])]);
        assert_eq!(got, BTreeSet::from([dir([1, 0]), dir([0, 1])]));
        assert_eq!(
            directions_of_modes(&[lp([1, 1]), lp([2, 2])]),
            BTreeSet::from([dir([1, 1])])
        );
        assert!(directions_of_modes(&[lp([0, 0])]).is_empty());
    }

    #[test]
    fn multiple_of_detects_line_membership() {
        let p = dir([1, 2]);
        assert_eq!(p.multiple_of(&lp([-2, -4])), Some(-2));
        assert_eq!(p.multiple_of(&lp([0, 0])), Some(0));
        assert_eq!(p.multiple_of(&lp([2, 3])), None);
        assert_eq!(p.multiple_of(&lp([5, 0])), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn point(d: usize) -> impl Strategy<Value = LatticePoint> {
            proptest::collection::vec(-40i64..=40, d).prop_map(LatticePoint::from)
        }

        fn nonzero(d: usize) -> impl Strategy<Value = LatticePoint> {
            point(d).prop_filter("nonzero", |k| !k.is_zero())
        }

        proptest! {
            #[test]
            fn reconstruction_identity(k in point(3), q in nonzero(3)) {
                let p = primitive_direction(&q).unwrap();
                let dec = decompose(&k, &p).unwrap();
                prop_assert_eq!(dec.r_scaled.dot(p.vector()), 0);
                let lhs = k.scale(p.norm_sq());
                let rhs = &p.vector().scale(dec.n) + &dec.r_scaled;
                prop_assert_eq!(lhs, rhs);
                prop_assert_eq!(LineDecomposition::reconstruct(dec.n, &dec.r_scaled, &p), Some(k));
            }

            #[test]
            fn class_is_a_homomorphism(k in point(2), j in point(2), q in nonzero(2)) {
                let p = primitive_direction(&q).unwrap();
                let a = decompose(&k, &p).unwrap();
                let b = decompose(&j, &p).unwrap();
                let s = decompose(&(&k + &j), &p).unwrap();
                prop_assert_eq!(s.r_scaled, &a.r_scaled + &b.r_scaled);
                prop_assert_eq!(s.class_c, (a.class_c + b.class_c).rem_euclid(p.norm_sq()));
            }

            #[test]
            fn primitive_is_canonical(k in nonzero(4)) {
                let p = primitive_direction(&k).unwrap();
                let v = p.vector();
                prop_assert_eq!(v.coords().iter().fold(0, |g, &c| gcd(g, c)), 1);
                prop_assert!(*v.coords().iter().find(|&&c| c != 0).unwrap() > 0);
                // parallel: k is a multiple of p
                prop_assert!(p.multiple_of(&k).is_some());
                prop_assert_eq!(bezout_witness(&p).dot(v), 1);
            }

            #[test]
            fn groups_partition_support(
                pts in proptest::collection::btree_set(point(2), 0..40),
                q in nonzero(2),
            ) {
                let p = primitive_direction(&q).unwrap();
                let groups = group_by_lines(&pts, &p).unwrap();
                let total: usize = groups.values().map(Vec::len).sum();
                prop_assert_eq!(total, pts.len());
                for members in groups.values() {
                    let (n0, k0) = &members[0];
                    for (n, k) in members {
                        prop_assert!(p.multiple_of(&(k - k0)).is_some());
                        prop_assert!(same_coset(*n, *n0, &p));
                    }
                }
                let keys: Vec<_> = groups.keys().collect();
                for a in pts.iter() {
                    for b in pts.iter() {
                        let same = decompose(a, &p).unwrap().r_scaled == decompose(b, &p).unwrap().r_scaled;
                        prop_assert_eq!(same, p.multiple_of(&(a - b)).is_some());
                    }
                }
                prop_assert!(keys.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}
