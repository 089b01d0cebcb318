//! Points, samples, norms and discrete probability measures.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`DiscreteMeasure`].
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Norm used to measure distances between points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NormSpec {
    L1,
    #[default]
    L2,
    LInf,
}

impl NormSpec {
    /// Ordering key for the distance between `a` and `b`.
    ///
    /// For L2 this is the squared distance; the map key -> distance is
    /// monotone, so comparisons on keys and on distances agree.
    #[inline]
    pub(crate) fn key(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            NormSpec::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            NormSpec::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let t = x - y;
                    t * t
                })
                .sum(),
            NormSpec::LInf => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Lower bound on the key of any pair whose coordinates differ by at
    /// least `gap` along one axis.
    #[inline]
    pub(crate) fn axis_key(self, gap: f64) -> f64 {
        match self {
            NormSpec::L2 => gap * gap,
            _ => gap,
        }
    }

    #[inline]
    pub(crate) fn key_to_distance(self, key: f64) -> f64 {
        match self {
            NormSpec::L2 => key.sqrt(),
            _ => key,
        }
    }

    /// Distance without the dimension check.
    #[inline]
    pub fn distance_unchecked(self, a: &[f64], b: &[f64]) -> f64 {
        self.key_to_distance(self.key(a, b))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormSpec::L1 => "l1",
            NormSpec::L2 => "l2",
            NormSpec::LInf => "linf",
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormSpec::L1),
            "l2" => Ok(NormSpec::L2),
            "linf" => Ok(NormSpec::LInf),
            other => Err(Error::invalid(format!(
                "unknown norm '{other}' (expected l1, l2 or linf)"
            ))),
        }
    }
}

/// A single point of ℝ^d with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("point must have at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Distance between two points for the chosen norm.
pub fn distance(a: &[f64], b: &[f64], norm: NormSpec) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(norm.distance_unchecked(a, b))
}

/// An ordered, nonempty list of points sharing one dimension.
///
/// Coordinates are stored row-major in a single buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    dim: usize,
    data: Vec<f64>,
}

impl Sample {
    /// Builds a sample from a row-major coordinate buffer.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::invalid("sample must contain at least one point"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("sample coordinates must be finite"));
        }
        Ok(Sample { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::invalid("sample must contain at least one point"))?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Sample::new(dim, data)
    }

    /// One-dimensional sample from scalar values.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Sample::new(1, values.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Applies `f` to every coordinate.
    pub fn map_coords(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Sample::new(self.dim, self.data.iter().map(|&c| f(c)).collect())
    }

    /// Keeps the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid(format!("point index {i} out of range")));
            }
            data.extend_from_slice(self.point(i));
        }
        Sample::new(self.dim, data)
    }

    pub(crate) fn check_same_dim(&self, other: &Sample) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

/// Training inputs paired with their model outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    inputs: Sample,
    outputs: Sample,
}

impl LabeledSample {
    pub fn new(inputs: Sample, outputs: Sample) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::SizeMismatch {
                what: "inputs vs output rows",
                left: inputs.len(),
                right: outputs.len(),
            });
        }
        Ok(LabeledSample { inputs, outputs })
    }

    pub fn inputs(&self) -> &Sample {
        &self.inputs
    }

    pub fn outputs(&self) -> &Sample {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Points carrying nonnegative masses that sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Sample,
    masses: Vec<f64>,
}

/// Validates `masses` as a probability vector on `points`.
pub fn validate_measure(points: Sample, masses: Vec<f64>) -> Result<DiscreteMeasure> {
    if masses.len() != points.len() {
        return Err(Error::SizeMismatch {
            what: "masses vs points",
            left: masses.len(),
            right: points.len(),
        });
    }
    if let Some(bad) = masses.iter().find(|m| !m.is_finite() || **m < 0.0) {
        return Err(Error::invalid(format!("negative or non-finite mass {bad}")));
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::invalid(format!("masses sum to {total}, expected 1")));
    }
    Ok(DiscreteMeasure { points, masses })
}

impl DiscreteMeasure {
    /// Uniform empirical measure on a sample.
    pub fn uniform(points: Sample) -> Self {
        let n = points.len();
        DiscreteMeasure {
            masses: vec![1.0 / n as f64; n],
            points,
        }
    }

    pub fn points(&self) -> &Sample {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}
