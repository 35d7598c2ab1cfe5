use std::fmt;
use std::marker::PhantomData;

use crate::error::{Error, Result};

/// What the samples of a [`Grid`] mean, and which values may be marked valid.
pub trait SampleKind: Copy + Send + Sync + fmt::Debug + 'static {
    const NAME: &'static str;

    fn admissible(value: f64) -> bool;
}

/// Disparity in pixels: finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Disparity;

/// Metric depth (camera-frame Z) in meters: finite and positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Depth;

/// Any finite scalar, e.g. a curvature map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scalar;

impl SampleKind for Disparity {
    const NAME: &'static str = "disparity";

    fn admissible(value: f64) -> bool {
        value.is_finite() && value >= 0.0
    }
}

impl SampleKind for Depth {
    const NAME: &'static str = "depth";

    fn admissible(value: f64) -> bool {
        value.is_finite() && value > 0.0
    }
}

impl SampleKind for Scalar {
    const NAME: &'static str = "scalar";

    fn admissible(value: f64) -> bool {
        value.is_finite()
    }
}

/// Row-major `width x height` grid of samples with a validity mask.
///
/// Index `(0, 0)` is the top-left pixel. Invalid pixels always store `0.0`,
/// so equality of two grids is equality of their masks and valid samples.
#[derive(Clone, PartialEq)]
pub struct Grid<K: SampleKind> {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
    kind: PhantomData<K>,
}

pub type DisparityGrid = Grid<Disparity>;
pub type DepthGrid = Grid<Depth>;
pub type ScalarGrid = Grid<Scalar>;

impl<K: SampleKind> fmt::Debug for Grid<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("kind", &K::NAME)
            .field("width", &self.width)
            .field("height", &self.height)
            .field("valid", &self.valid_count())
            .finish()
    }
}

impl<K: SampleKind> Grid<K> {
    /// Builds a grid from samples and a mask. Pixels marked valid whose value
    /// is not admissible for `K` are demoted to invalid.
    pub fn from_parts(width: usize, height: usize, mut values: Vec<f64>, mut valid: Vec<bool>) -> Result<Self> {
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::param("grid dimensions overflow"))?;
        if values.len() != n || valid.len() != n {
            return Err(Error::ShapeMismatch {
                width,
                height,
                len: values.len().max(valid.len()),
            });
        }
        for (v, ok) in values.iter_mut().zip(valid.iter_mut()) {
            *ok = *ok && K::admissible(*v);
            if !*ok {
                *v = 0.0;
            }
        }
        Ok(Grid {
            width,
            height,
            values,
            valid,
            kind: PhantomData,
        })
    }

    /// Builds a grid whose mask is "value is admissible".
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let valid = vec![true; values.len()];
        Self::from_parts(width, height, values, valid)
    }

    /// An all-invalid grid.
    pub fn invalid(width: usize, height: usize) -> Self {
        let n = width * height;
        Grid {
            width,
            height,
            values: vec![0.0; n],
            valid: vec![false; n],
            kind: PhantomData,
        }
    }

    /// Builds a grid from per-pixel options; `None` or inadmissible values
    /// become invalid.
    pub fn from_options(width: usize, height: usize, samples: Vec<Option<f64>>) -> Result<Self> {
        let valid = samples.iter().map(Option::is_some).collect();
        let values = samples.into_iter().map(|s| s.unwrap_or(0.0)).collect();
        Self::from_parts(width, height, values, valid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Raw samples; invalid pixels hold `0.0`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Sample at column `x`, row `y`, if valid.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        if x >= self.width || y >= self.height {
            return None;
        }
        let i = self.index(x, y);
        self.valid[i].then(|| self.values[i])
    }

    /// Iterates over the valid samples in row-major order.
    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.valid)
            .filter_map(|(&v, &ok)| ok.then_some(v))
    }

    /// Applies `f` to every valid sample; `None` or inadmissible results
    /// invalidate the pixel. The output mask is a subset of the input mask.
    pub fn map_valid<J: SampleKind>(&self, f: impl Fn(f64) -> Option<f64>) -> Grid<J> {
        let mut values = Vec::with_capacity(self.len());
        let mut valid = Vec::with_capacity(self.len());
        for (&v, &ok) in self.values.iter().zip(&self.valid) {
            match ok.then(|| f(v)).flatten() {
                Some(out) if J::admissible(out) => {
                    values.push(out);
                    valid.push(true);
                }
                _ => {
                    values.push(0.0);
                    valid.push(false);
                }
            }
        }
        Grid {
            width: self.width,
            height: self.height,
            values,
            valid,
            kind: PhantomData,
        }
    }

    /// The same samples and mask viewed as another kind; pixels that are not
    /// admissible for `J` become invalid.
    pub fn reinterpret<J: SampleKind>(&self) -> Grid<J> {
        self.map_valid(Some)
    }

    /// Horizontally mirrored copy.
    pub fn flip_horizontal(&self) -> Self {
        let mut values = self.values.clone();
        let mut valid = self.valid.clone();
        if self.width > 0 {
            for row in values.chunks_mut(self.width) {
                row.reverse();
            }
            for row in valid.chunks_mut(self.width) {
                row.reverse();
            }
        }
        Grid {
            width: self.width,
            height: self.height,
            values,
            valid,
            kind: PhantomData,
        }
    }

    pub fn into_parts(self) -> (usize, usize, Vec<f64>, Vec<bool>) {
        (self.width, self.height, self.values, self.valid)
    }
}
