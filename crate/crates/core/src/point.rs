//! Points and unit directions in ℝᵈ.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Coordinates of a point in world units. Inline storage up to d = 4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Point<T: Real>(SmallVec<[T; 4]>);

impl<T: Real> Point<T> {
    pub fn new(coords: &[T]) -> Self {
        Point(SmallVec::from_slice(coords))
    }

    pub fn from_vec(coords: Vec<T>) -> Self {
        Point(SmallVec::from_vec(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(SmallVec::from_elem(T::zero(), dim))
    }

    /// Canonical basis vector `e_axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut p = Self::zeros(dim);
        p[axis] = T::one();
        p
    }

    pub fn from_f64(coords: &[f64]) -> Self {
        Point(coords.iter().map(|&v| T::c(v)).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.to_f64_lossy()).collect()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0.iter().zip(other.0.iter()).map(|(&a, &b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn norm_l1(&self) -> T {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn dist(&self, other: &Self) -> T {
        self.0.iter().zip(other.0.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Point(self.0.iter().map(|&v| v * s).collect())
    }

    /// `self + s·dir`.
    pub fn offset(&self, dir: &Self, s: T) -> Self {
        Point(self.0.iter().zip(dir.0.iter()).map(|(&a, &b)| a + s * b).collect())
    }

    /// Affine interpolation `(1−t)·self + t·other`.
    pub fn lerp(&self, other: &Self, t: T) -> Self {
        Point(self.0.iter().zip(other.0.iter()).map(|(&a, &b)| a + t * (b - a)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Lexicographic comparison, used for deterministic tie-breaks.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            match a.partial_cmp(b) {
                Some(std::cmp::Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        self.dim().cmp(&other.dim())
    }

    pub fn centroid(points: &[Self]) -> Self {
        let d = points[0].dim();
        let mut c = Self::zeros(d);
        for p in points {
            for i in 0..d {
                c[i] += p[i];
            }
        }
        c.scale(T::one() / T::from_usize_lossy(points.len()))
    }
}

impl<T: Real> Index<usize> for Point<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Real> IndexMut<usize> for Point<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Real> Add for &Point<T> {
    type Output = Point<T>;
    fn add(self, rhs: Self) -> Point<T> {
        Point(self.0.iter().zip(rhs.0.iter()).map(|(&a, &b)| a + b).collect())
    }
}

impl<T: Real> Sub for &Point<T> {
    type Output = Point<T>;
    fn sub(self, rhs: Self) -> Point<T> {
        Point(self.0.iter().zip(rhs.0.iter()).map(|(&a, &b)| a - b).collect())
    }
}

impl<T: Real> Add for Point<T> {
    type Output = Point<T>;
    fn add(self, rhs: Self) -> Point<T> {
        &self + &rhs
    }
}

impl<T: Real> Sub for Point<T> {
    type Output = Point<T>;
    fn sub(self, rhs: Self) -> Point<T> {
        &self - &rhs
    }
}

impl<T: Real> Mul<T> for &Point<T> {
    type Output = Point<T>;
    fn mul(self, s: T) -> Point<T> {
        self.scale(s)
    }
}

impl<T: Real> Neg for &Point<T> {
    type Output = Point<T>;
    fn neg(self) -> Point<T> {
        self.scale(-T::one())
    }
}

/// A unit-norm vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
#[serde(bound(serialize = "T: Real"))]
pub struct Direction<T: Real>(Point<T>);

impl<T: Real> Direction<T> {
    /// Normalizes `v`; fails on a zero or non-finite vector.
    pub fn normalize(v: &Point<T>) -> Result<Self> {
        let n = v.norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        let mut u = v.scale(T::one() / n);
        // one refinement pass keeps the norm within rounding of 1
        let n2 = u.norm();
        u = u.scale(T::one() / n2);
        Ok(Direction(u))
    }

    /// Accepts `v` only if it is already unit norm.
    pub fn try_unit(v: Point<T>) -> Result<Self> {
        let tol = T::c(1e-12).max(T::epsilon() * T::c(8.0));
        if (v.norm() - T::one()).abs() > tol {
            return Err(Error::InvalidInput(format!("vector norm {} is not 1", v.norm())));
        }
        Ok(Direction(v))
    }

    pub fn axis(dim: usize, axis: usize) -> Self {
        Direction(Point::unit(dim, axis))
    }

    pub fn from_angle(theta: T) -> Self {
        Direction(Point::new(&[theta.cos(), theta.sin()]))
    }

    pub fn as_point(&self) -> &Point<T> {
        &self.0
    }

    pub fn into_point(self) -> Point<T> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn neg(&self) -> Self {
        Direction(-&self.0)
    }

    pub fn dot(&self, p: &Point<T>) -> T {
        self.0.dot(p)
    }
}

impl<T: Real> Index<usize> for Direction<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}
