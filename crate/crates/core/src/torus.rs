//! Geometry of the flat torus `R^d / Z^d`.
//!
//! Points are stored by their canonical representative in `[0, 1)^d`. All
//! periodicity is handled by [`canonicalize`] and [`torus_distance`]; the rest
//! of the crate only ever sees canonical coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Reduce one coordinate to `[0, 1)`.
#[inline]
pub fn wrap_unit<T: Real>(c: T) -> T {
    let r = c - c.floor();
    // `c - floor(c)` rounds up to exactly 1 for tiny negative inputs.
    if r >= T::one() {
        T::zero()
    } else {
        r
    }
}

/// Shortest signed-free separation of two canonical coordinates on the circle.
#[inline]
pub fn circle_gap<T: Real>(a: T, b: T) -> T {
    let delta = (a - b).abs();
    delta.min(T::one() - delta)
}

/// Squared geodesic distance between two canonical points of equal length.
///
/// The infimum over integer shifts separates over coordinates, so each axis
/// is wrapped independently.
#[inline]
pub fn torus_distance_sq_unchecked<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let g = circle_gap(x, y);
            g * g
        })
        .sum()
}

/// A point of `T^d` held by its canonical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint<T = f64> {
    coords: Vec<T>,
}

impl<T: Real> TorusPoint<T> {
    /// Canonicalize arbitrary real coordinates.
    pub fn new(coords: &[T]) -> Result<Self> {
        canonicalize(coords)
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn distance(&self, other: &Self) -> Result<T> {
        torus_distance(self, other)
    }
}

/// Map a real vector to its class in `T^d`, represented in `[0, 1)^d`.
pub fn canonicalize<T: Real>(x: &[T]) -> Result<TorusPoint<T>> {
    if x.is_empty() {
        return Err(Error::InvalidInput("point has no coordinates".into()));
    }
    if let Some(bad) = x.iter().find(|c| !c.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite coordinate {bad}")));
    }
    Ok(TorusPoint {
        coords: x.iter().map(|&c| wrap_unit(c)).collect(),
    })
}

/// Geodesic distance `inf_{p in Z^d} |x - y + p|`.
pub fn torus_distance<T: Real>(x: &TorusPoint<T>, y: &TorusPoint<T>) -> Result<T> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(torus_distance_sq_unchecked(&x.coords, &y.coords).sqrt())
}

/// An ordered i.i.d. sample on `T^d`. Each point carries mass `1/n` in the
/// empirical measure view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusSample<T = f64> {
    dim: usize,
    coords: Vec<T>,
    label: Option<String>,
}

impl<T: Real> TorusSample<T> {
    /// Build from a flat row-major coordinate buffer of `len * dim` values.
    pub fn from_flat(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if coords.is_empty() {
            return Err(Error::InvalidInput("sample is empty".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coordinate {bad}")));
        }
        let coords = coords.into_iter().map(wrap_unit).collect();
        Ok(Self {
            dim,
            coords,
            label: None,
        })
    }

    pub fn from_points(points: &[TorusPoint<T>]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidInput("sample is empty".into()))?;
        let dim = first.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: p.dim(),
                });
            }
            coords.extend_from_slice(p.coords());
        }
        Ok(Self {
            dim,
            coords,
            label: None,
        })
    }

    /// Build from rows of raw (not necessarily canonical) coordinates.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::InvalidInput("sample is empty".into()))?;
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: r.len(),
                });
            }
            coords.extend_from_slice(r);
        }
        Self::from_flat(dim, coords)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; samples are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[T] {
        &self.coords
    }

    /// Coordinates along one axis, in sample order.
    pub fn axis(&self, k: usize) -> Vec<T> {
        assert!(k < self.dim, "axis {k} out of range for dimension {}", self.dim);
        self.points().map(|p| p[k]).collect()
    }

    /// Sample with point `i` replaced by `p` (canonicalized).
    pub fn replace_point(&self, i: usize, p: &[T]) -> Result<Self> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: p.len(),
            });
        }
        let q = canonicalize(p)?;
        let mut out = self.clone();
        out.coords[i * self.dim..(i + 1) * self.dim].copy_from_slice(q.coords());
        Ok(out)
    }

    /// Bootstrap-style resample: `indices` select points with repetition.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self {
            dim: self.dim,
            coords,
            label: self.label.clone(),
        }
    }

    /// Translate every point by `v` and re-canonicalize.
    pub fn translate(&self, v: &[T]) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: v.len(),
            });
        }
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(k, &c)| c + v[k % self.dim])
            .collect();
        let mut out = Self::from_flat(self.dim, coords)?;
        out.label = self.label.clone();
        Ok(out)
    }
}

/// Unit an angle column is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleUnit {
    Radians,
    Degrees,
    UnitSquare,
}

/// Which window of one period the raw angles are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleRange {
    /// `[-period/2, period/2)`, e.g. `[-180, 180)`.
    Signed,
    /// `[0, period)`, e.g. `[0, 2π)` or `[0, 1)`.
    Unsigned,
}

/// Declared convention of raw dihedral-angle data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleConvention {
    pub unit: AngleUnit,
    pub range: AngleRange,
}

impl Default for AngleConvention {
    /// Degrees in `[-180, 180)`, the usual Ramachandran convention.
    fn default() -> Self {
        Self::DEGREES_SIGNED
    }
}

impl AngleConvention {
    pub const DEGREES_SIGNED: Self = Self {
        unit: AngleUnit::Degrees,
        range: AngleRange::Signed,
    };
    pub const RADIANS_SIGNED: Self = Self {
        unit: AngleUnit::Radians,
        range: AngleRange::Signed,
    };
    pub const UNIT: Self = Self {
        unit: AngleUnit::UnitSquare,
        range: AngleRange::Unsigned,
    };

    pub fn period(&self) -> f64 {
        match self.unit {
            AngleUnit::Radians => std::f64::consts::TAU,
            AngleUnit::Degrees => 360.0,
            AngleUnit::UnitSquare => 1.0,
        }
    }

    pub fn lower(&self) -> f64 {
        match self.range {
            AngleRange::Signed => -self.period() / 2.0,
            AngleRange::Unsigned => 0.0,
        }
    }

    /// Affine map of one angle onto `[0, 1)`.
    ///
    /// Angles may exceed the declared window by at most `1e-9` (in the
    /// convention's own unit); the upper endpoint wraps to 0.
    pub fn to_unit<T: Real>(&self, angle: T) -> Result<T> {
        let a = angle.to_f64_lossy();
        let (lo, period) = (self.lower(), self.period());
        let hi = lo + period;
        if !a.is_finite() || a < lo - ANGLE_SLACK || a > hi + ANGLE_SLACK {
            return Err(Error::AngleRange {
                value: a,
                lower: lo,
                upper: hi,
                row: None,
            });
        }
        Ok(wrap_unit((angle - T::of(lo)) / T::of(period)))
    }

    /// Inverse of [`AngleConvention::to_unit`] on canonical coordinates.
    pub fn from_unit<T: Real>(&self, u: T) -> T {
        T::of(self.lower()) + u * T::of(self.period())
    }
}

const ANGLE_SLACK: f64 = 1e-9;

/// Rescale `(φ, ψ)` pairs to the unit square, preserving order.
pub fn angles_to_unit_square<T: Real>(
    sample: &[(T, T)],
    conv: AngleConvention,
) -> Result<TorusSample<T>> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("no angle pairs".into()));
    }
    let mut coords = Vec::with_capacity(sample.len() * 2);
    for (row, &(phi, psi)) in sample.iter().enumerate() {
        for a in [phi, psi] {
            let u = conv.to_unit(a).map_err(|e| match e {
                Error::AngleRange {
                    value,
                    lower,
                    upper,
                    ..
                } => Error::AngleRange {
                    value,
                    lower,
                    upper,
                    row: Some(row + 1),
                },
                other => other,
            })?;
            coords.push(u);
        }
    }
    TorusSample::from_flat(2, coords)
}
