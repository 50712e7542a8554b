//! Fixed-capacity points in `R^d`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Sub};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;

/// A point of `R^d` with `d <= MAX_DIM`, stored inline so it is `Copy`.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl Point {
    pub fn origin(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM, "dimension {dim} out of range");
        Point {
            coords: [0.0; MAX_DIM],
            dim,
        }
    }

    /// The point `(x, 0, ..., 0)`.
    pub fn on_axis(dim: usize, x: f64) -> Self {
        let mut p = Point::origin(dim);
        p.coords[0] = x;
        p
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::domain(
                "Point::from_slice",
                format!("dimension {} not in 1..={MAX_DIM}", coords.len()),
            ));
        }
        let mut p = Point::origin(coords.len());
        p.coords[..coords.len()].copy_from_slice(coords);
        Ok(p)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords[..self.dim]
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        if self.dim == 1 {
            return self.coords[0].abs();
        }
        self.as_slice().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        if self.dim == 1 {
            return (self.coords[0] - other.coords[0]).abs();
        }
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    #[inline]
    pub fn scale(&self, factor: f64) -> Point {
        let mut p = *self;
        p.as_mut_slice().iter_mut().for_each(|c| *c *= factor);
        p
    }

    /// `self + t * dir`.
    #[inline]
    pub fn offset(&self, dir: &Point, t: f64) -> Point {
        let mut p = *self;
        for (c, u) in p.as_mut_slice().iter_mut().zip(dir.as_slice()) {
            *c += t * u;
        }
        p
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        self.offset(&rhs, 1.0)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        self.offset(&rhs, -1.0)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::from_slice(&v).map_err(serde::de::Error::custom)
    }
}
