//! Grid covers of compact sets and the affine frame that places a matrix
//! spectrum inside the unit square.
//!
//! Compact sets enter as finite point sets (spectra of matrices). A cover
//! at depth `d` is the set of depth-`d` cells containing at least one
//! point, the floor convention assigning boundary points and the right
//! edges `x = 1`, `y = 1` clamped to the last cell.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::curve::{pow3, pow9, Cell2D, ParamInterval, MAX_DEPTH};
use crate::math;
use crate::point::Point2;

#[derive(Clone, Debug, PartialEq)]
pub enum CompactError {
    EmptySpectrum,
    NonFinitePoint { index: usize },
    PointOutsideFrame { index: usize, re: f64, im: f64 },
    DepthMismatch { left: u32, right: u32 },
    DepthTooLarge { depth: u32, max: u32 },
    EmptyGrid,
}

impl fmt::Display for CompactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompactError::EmptySpectrum => {
                write!(
                    f,
                    "spectrum of a bounded operator is non-empty; got an empty point set"
                )
            }
            CompactError::NonFinitePoint { index } => {
                write!(f, "point {index} is not finite")
            }
            CompactError::PointOutsideFrame { index, re, im } => {
                write!(
                    f,
                    "point {index} = {re}+{im}i maps outside the unit square for this frame"
                )
            }
            CompactError::DepthMismatch { left, right } => {
                write!(f, "grid depth mismatch: {left} vs {right}")
            }
            CompactError::DepthTooLarge { depth, max } => {
                write!(f, "depth {depth} exceeds the supported maximum {max}")
            }
            CompactError::EmptyGrid => write!(f, "operation requires a non-empty grid set"),
        }
    }
}

impl core::error::Error for CompactError {}

/// Similarity mapping a square of side `scale` centered at `center` onto
/// the unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineFrame {
    pub center: Complex64,
    pub scale: f64,
}

impl AffineFrame {
    /// The frame that reads off coordinates unchanged (unit square onto
    /// itself).
    pub fn identity() -> Self {
        AffineFrame {
            center: Complex64::new(0.5, 0.5),
            scale: 1.0,
        }
    }

    /// Map a plane point into frame coordinates.
    pub fn embed(&self, z: Complex64) -> Point2 {
        Point2::new(
            (z.re - self.center.re) / self.scale + 0.5,
            (z.im - self.center.im) / self.scale + 0.5,
        )
    }

    /// Inverse of [`Self::embed`].
    pub fn restore(&self, p: Point2) -> Complex64 {
        Complex64::new(
            (p.x - 0.5) * self.scale + self.center.re,
            (p.y - 0.5) * self.scale + self.center.im,
        )
    }
}

/// The depth-`d` cell containing a unit-square point, or `None` when the
/// point falls outside `[0,1]²`.
pub fn cell_of_point(p: Point2, depth: u32) -> Option<(u64, u64)> {
    if depth > MAX_DEPTH {
        return None;
    }
    if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
        return None;
    }
    let side = pow3(depth);
    let col = ((p.x * side as f64) as u64).min(side - 1);
    let row = ((p.y * side as f64) as u64).min(side - 1);
    Some((col, row))
}

/// A finite set of depth-`d` cells, kept sorted by `(col, row)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSet2D {
    depth: u32,
    cells: BTreeSet<(u64, u64)>,
}

impl GridSet2D {
    pub fn new(depth: u32) -> Result<Self, CompactError> {
        if depth > MAX_DEPTH {
            return Err(CompactError::DepthTooLarge {
                depth,
                max: MAX_DEPTH,
            });
        }
        Ok(GridSet2D {
            depth,
            cells: BTreeSet::new(),
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, col: u64, row: u64) -> bool {
        self.cells.contains(&(col, row))
    }

    pub fn insert(&mut self, cell: Cell2D) -> Result<(), CompactError> {
        if cell.depth() != self.depth {
            return Err(CompactError::DepthMismatch {
                left: self.depth,
                right: cell.depth(),
            });
        }
        self.cells.insert((cell.col(), cell.row()));
        Ok(())
    }

    /// Cells in ascending `(col, row)` order.
    pub fn iter(&self) -> impl Iterator<Item = Cell2D> + '_ {
        let depth = self.depth;
        self.cells.iter().map(move |&(col, row)| {
            Cell2D::new(depth, col, row).expect("stored cells are in range")
        })
    }

    pub fn coords(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.cells.iter().copied()
    }

    pub fn union(&self, other: &GridSet2D) -> Result<GridSet2D, CompactError> {
        if self.depth != other.depth {
            return Err(CompactError::DepthMismatch {
                left: self.depth,
                right: other.depth,
            });
        }
        let mut cells = self.cells.clone();
        cells.extend(other.cells.iter().copied());
        Ok(GridSet2D {
            depth: self.depth,
            cells,
        })
    }

    pub fn is_subset(&self, other: &GridSet2D) -> bool {
        self.depth == other.depth && self.cells.is_subset(&other.cells)
    }
}

/// A finite set of depth-`d` parameter intervals, kept sorted by index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSet1D {
    depth: u32,
    intervals: BTreeSet<u64>,
}

impl GridSet1D {
    pub fn new(depth: u32) -> Result<Self, CompactError> {
        if depth > MAX_DEPTH {
            return Err(CompactError::DepthTooLarge {
                depth,
                max: MAX_DEPTH,
            });
        }
        Ok(GridSet1D {
            depth,
            intervals: BTreeSet::new(),
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, index: u64) -> bool {
        self.intervals.contains(&index)
    }

    pub fn insert(&mut self, iv: ParamInterval) -> Result<(), CompactError> {
        if iv.depth() != self.depth {
            return Err(CompactError::DepthMismatch {
                left: self.depth,
                right: iv.depth(),
            });
        }
        self.intervals.insert(iv.index());
        Ok(())
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.intervals.iter().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ParamInterval> + '_ {
        let depth = self.depth;
        self.intervals
            .iter()
            .map(move |&j| ParamInterval::new(depth, j).expect("stored intervals are in range"))
    }

    pub fn min_index(&self) -> Option<u64> {
        self.intervals.first().copied()
    }

    pub fn max_index(&self) -> Option<u64> {
        self.intervals.last().copied()
    }
}

/// The set of depth-`d` cells containing at least one mapped point.
pub fn rasterize(
    points: &[Complex64],
    frame: &AffineFrame,
    depth: u32,
) -> Result<GridSet2D, CompactError> {
    let mut grid = GridSet2D::new(depth)?;
    for (index, &z) in points.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(CompactError::NonFinitePoint { index });
        }
        let p = frame.embed(z);
        let (col, row) = cell_of_point(p, depth).ok_or(CompactError::PointOutsideFrame {
            index,
            re: z.re,
            im: z.im,
        })?;
        grid.cells.insert((col, row));
    }
    Ok(grid)
}

/// Build the frame whose square covers the bounding box of `eigs` with a
/// 10% margin on each side, and rasterize. A single repeated point gets
/// unit scale centered on it.
pub fn normalize_spectrum(
    eigs: &[Complex64],
    depth: u32,
) -> Result<(AffineFrame, GridSet2D), CompactError> {
    if eigs.is_empty() {
        return Err(CompactError::EmptySpectrum);
    }
    let mut min_re = f64::INFINITY;
    let mut max_re = f64::NEG_INFINITY;
    let mut min_im = f64::INFINITY;
    let mut max_im = f64::NEG_INFINITY;
    for (index, z) in eigs.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(CompactError::NonFinitePoint { index });
        }
        min_re = min_re.min(z.re);
        max_re = max_re.max(z.re);
        min_im = min_im.min(z.im);
        max_im = max_im.max(z.im);
    }
    let side = (max_re - min_re).max(max_im - min_im);
    let scale = if side == 0.0 { 1.0 } else { 1.2 * side };
    let center = Complex64::new((min_re + max_re) / 2.0, (min_im + max_im) / 2.0);
    let frame = AffineFrame { center, scale };
    let grid = rasterize(eigs, &frame, depth)?;
    Ok((frame, grid))
}

/// Symmetric Hausdorff distance between the cell-center sets of two covers
/// of the same depth.
pub fn hausdorff_distance(a: &GridSet2D, b: &GridSet2D) -> Result<f64, CompactError> {
    if a.depth() != b.depth() {
        return Err(CompactError::DepthMismatch {
            left: a.depth(),
            right: b.depth(),
        });
    }
    if a.is_empty() || b.is_empty() {
        return Err(CompactError::EmptyGrid);
    }
    let centers_a: Vec<Point2> = a.iter().map(Cell2D::center).collect();
    let centers_b: Vec<Point2> = b.iter().map(Cell2D::center).collect();
    let directed = |from: &[Point2], to: &[Point2]| -> f64 {
        let mut worst = 0.0f64;
        for &p in from {
            let mut best = f64::INFINITY;
            for &q in to {
                let d = p.dist(q);
                if d < best {
                    best = d;
                }
            }
            if best > worst {
                worst = best;
            }
        }
        worst
    };
    let d_ab = directed(&centers_a, &centers_b);
    let d_ba = directed(&centers_b, &centers_a);
    Ok(if d_ab > d_ba { d_ab } else { d_ba })
}

/// Frame round-trip defect `max |restore(embed(z)) − z|`, used as an
/// invariant check.
pub fn frame_round_trip_defect(frame: &AffineFrame, points: &[Complex64]) -> f64 {
    let mut worst = 0.0f64;
    for &z in points {
        let back = frame.restore(frame.embed(z));
        let d = math::sqrt((back - z).norm_sqr());
        if d > worst {
            worst = d;
        }
    }
    worst
}

/// `9^d` re-exported alongside the grid types for report writers.
pub fn interval_count(depth: u32) -> u64 {
    pow9(depth)
}
