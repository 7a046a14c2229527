//! Exact arithmetic for the depth-`d` Peano subdivision of the unit square.
//!
//! At depth `d` the parameter line `[0,1]` splits into `9^d` closed intervals
//! `[j·9⁻ᵈ, (j+1)·9⁻ᵈ]` and the square into `3^d × 3^d` closed cells. The
//! curve sends interval `j` onto exactly one cell, bijectively, with
//! consecutive intervals landing on edge-adjacent cells and child intervals
//! landing inside the parent's cell. Those three facts are the whole
//! interface; pointwise evaluation is derived from them.
//!
//! The variant fixed here is the classical serpentine one: each base-9
//! digit of the parameter yields one base-3 digit of each coordinate,
//! complemented according to the parity of previously consumed digits
//! (column digits flip the x-output, row digits flip the y-output). The
//! curve starts at `(0,0)` and ends at `(1,1)`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::point::Point2;

/// Largest depth for which `9^d` fits in `u64`.
pub const MAX_DEPTH: u32 = 20;

/// Largest depth accepted by exhaustive enumeration reports.
pub const MAX_ENUM_DEPTH: u32 = 6;

/// `9^d`, valid for `d <= MAX_DEPTH`.
pub fn pow9(depth: u32) -> u64 {
    debug_assert!(depth <= MAX_DEPTH);
    9u64.pow(depth)
}

/// `3^d`, valid for `d <= MAX_DEPTH`.
pub fn pow3(depth: u32) -> u64 {
    debug_assert!(depth <= MAX_DEPTH);
    3u64.pow(depth)
}

#[derive(Clone, Debug, PartialEq)]
pub enum CurveError {
    DepthTooLarge { depth: u32, max: u32 },
    IndexOutOfRange { index: u64, depth: u32 },
    CellOutOfRange { col: u64, row: u64, depth: u32 },
    ParamOutOfRange { t: f64 },
    ZeroDenominator,
    RationalOutOfRange { num: u64, den: u64 },
    EnumerationTooDeep { depth: u32, max: u32 },
}

impl fmt::Display for CurveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveError::DepthTooLarge { depth, max } => {
                write!(f, "depth {depth} exceeds the supported maximum {max}")
            }
            CurveError::IndexOutOfRange { index, depth } => {
                write!(f, "interval index {index} out of range at depth {depth}")
            }
            CurveError::CellOutOfRange { col, row, depth } => {
                write!(f, "cell ({col},{row}) out of range at depth {depth}")
            }
            CurveError::ParamOutOfRange { t } => {
                write!(f, "parameter {t} lies outside [0,1]")
            }
            CurveError::ZeroDenominator => write!(f, "rational parameter has zero denominator"),
            CurveError::RationalOutOfRange { num, den } => {
                write!(f, "rational parameter {num}/{den} lies outside [0,1]")
            }
            CurveError::EnumerationTooDeep { depth, max } => {
                write!(
                    f,
                    "exhaustive enumeration at depth {depth} refused (max {max})"
                )
            }
        }
    }
}

impl core::error::Error for CurveError {}

/// A base-9 parameter interval `[j·9⁻ᵈ, (j+1)·9⁻ᵈ]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamInterval {
    depth: u32,
    index: u64,
}

impl ParamInterval {
    pub fn new(depth: u32, index: u64) -> Result<Self, CurveError> {
        if depth > MAX_DEPTH {
            return Err(CurveError::DepthTooLarge {
                depth,
                max: MAX_DEPTH,
            });
        }
        if index >= pow9(depth) {
            return Err(CurveError::IndexOutOfRange { index, depth });
        }
        Ok(ParamInterval { depth, index })
    }

    pub fn depth(self) -> u32 {
        self.depth
    }

    pub fn index(self) -> u64 {
        self.index
    }

    /// Left endpoint `j·9⁻ᵈ`.
    pub fn left(self) -> f64 {
        self.index as f64 / pow9(self.depth) as f64
    }

    /// Left endpoint as an exact rational `(numerator, denominator)`.
    pub fn left_exact(self) -> (u64, u64) {
        (self.index, pow9(self.depth))
    }

    /// The nine depth-`d+1` children, indices `9j .. 9j+8`.
    pub fn children(self) -> Result<[ParamInterval; 9], CurveError> {
        let depth = self.depth + 1;
        if depth > MAX_DEPTH {
            return Err(CurveError::DepthTooLarge {
                depth,
                max: MAX_DEPTH,
            });
        }
        let base = 9 * self.index;
        let mut out = [ParamInterval { depth, index: 0 }; 9];
        for (k, slot) in out.iter_mut().enumerate() {
            slot.index = base + k as u64;
        }
        Ok(out)
    }

    pub fn parent(self) -> Option<ParamInterval> {
        if self.depth == 0 {
            None
        } else {
            Some(ParamInterval {
                depth: self.depth - 1,
                index: self.index / 9,
            })
        }
    }
}

/// A closed grid square of side `3⁻ᵈ` at position `(col, row)`, with
/// `col` increasing to the right and `row` increasing upward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell2D {
    depth: u32,
    col: u64,
    row: u64,
}

impl Cell2D {
    pub fn new(depth: u32, col: u64, row: u64) -> Result<Self, CurveError> {
        if depth > MAX_DEPTH {
            return Err(CurveError::DepthTooLarge {
                depth,
                max: MAX_DEPTH,
            });
        }
        let side = pow3(depth);
        if col >= side || row >= side {
            return Err(CurveError::CellOutOfRange { col, row, depth });
        }
        Ok(Cell2D { depth, col, row })
    }

    pub fn depth(self) -> u32 {
        self.depth
    }

    pub fn col(self) -> u64 {
        self.col
    }

    pub fn row(self) -> u64 {
        self.row
    }

    pub fn center(self) -> Point2 {
        let side = pow3(self.depth) as f64;
        Point2::new(
            (self.col as f64 + 0.5) / side,
            (self.row as f64 + 0.5) / side,
        )
    }

    /// `√2 · 3⁻ᵈ`.
    pub fn diameter(self) -> f64 {
        core::f64::consts::SQRT_2 / pow3(self.depth) as f64
    }

    /// True when `self` and `other` share an edge (same depth, Manhattan
    /// distance one).
    pub fn edge_adjacent(self, other: Cell2D) -> bool {
        if self.depth != other.depth {
            return false;
        }
        let dc = self.col.abs_diff(other.col);
        let dr = self.row.abs_diff(other.row);
        dc + dr == 1
    }

    /// True when `child` (at a deeper level) lies inside `self`.
    pub fn contains(self, child: Cell2D) -> bool {
        if child.depth < self.depth {
            return false;
        }
        let shrink = pow3(child.depth - self.depth);
        child.col / shrink == self.col && child.row / shrink == self.row
    }
}

/// Reflection state carried through the base-9 subdivision: whether the
/// next x- and y-output digits are complemented.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CurveOrientation {
    pub flip_x: bool,
    pub flip_y: bool,
}

impl CurveOrientation {
    pub const IDENTITY: CurveOrientation = CurveOrientation {
        flip_x: false,
        flip_y: false,
    };

    /// Group operation; the states form the Klein four-group under XOR.
    pub fn compose(self, other: CurveOrientation) -> CurveOrientation {
        CurveOrientation {
            flip_x: self.flip_x ^ other.flip_x,
            flip_y: self.flip_y ^ other.flip_y,
        }
    }

    /// Consume one base-9 parameter digit, producing the base-3 column and
    /// row digits and the state for the next level.
    fn forward_digit(self, digit: u8) -> (u8, u8, CurveOrientation) {
        debug_assert!(digit < 9);
        let p = digit / 3;
        let q = digit % 3;
        let a = if self.flip_x { 2 - p } else { p };
        let b = if self.flip_y ^ (p & 1 == 1) { 2 - q } else { q };
        let next = CurveOrientation {
            flip_x: self.flip_x ^ (q & 1 == 1),
            flip_y: self.flip_y ^ (p & 1 == 1),
        };
        (a, b, next)
    }

    /// Invert [`Self::forward_digit`]: recover the parameter digit from the
    /// column and row digits.
    fn inverse_digit(self, a: u8, b: u8) -> (u8, CurveOrientation) {
        debug_assert!(a < 3 && b < 3);
        let p = if self.flip_x { 2 - a } else { a };
        let q = if self.flip_y ^ (p & 1 == 1) { 2 - b } else { b };
        let next = CurveOrientation {
            flip_x: self.flip_x ^ (q & 1 == 1),
            flip_y: self.flip_y ^ (p & 1 == 1),
        };
        (3 * p + q, next)
    }
}

/// The unique depth-`d` cell equal to the curve image of `iv`.
pub fn cell_of_interval(iv: ParamInterval) -> Cell2D {
    let d = iv.depth();
    let mut state = CurveOrientation::IDENTITY;
    let mut col = 0u64;
    let mut row = 0u64;
    for k in (0..d).rev() {
        let digit = ((iv.index() / pow9(k)) % 9) as u8;
        let (a, b, next) = state.forward_digit(digit);
        col = 3 * col + a as u64;
        row = 3 * row + b as u64;
        state = next;
    }
    Cell2D { depth: d, col, row }
}

/// The unique depth-`d` interval whose curve image is `cell`; the exact
/// inverse of [`cell_of_interval`].
pub fn interval_of_cell(cell: Cell2D) -> ParamInterval {
    let d = cell.depth();
    let mut state = CurveOrientation::IDENTITY;
    let mut index = 0u64;
    for k in (0..d).rev() {
        let a = ((cell.col() / pow3(k)) % 3) as u8;
        let b = ((cell.row() / pow3(k)) % 3) as u8;
        let (digit, next) = state.inverse_digit(a, b);
        index = 9 * index + digit as u64;
        state = next;
    }
    ParamInterval { depth: d, index }
}

/// The depth-`d` interval containing `t`, floor convention, with `t = 1`
/// assigned to the last interval.
pub fn interval_of_f64(t: f64, depth: u32) -> Result<ParamInterval, CurveError> {
    if depth > MAX_DEPTH {
        return Err(CurveError::DepthTooLarge {
            depth,
            max: MAX_DEPTH,
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(CurveError::ParamOutOfRange { t });
    }
    let count = pow9(depth);
    let index = ((t * count as f64) as u64).min(count - 1);
    Ok(ParamInterval { depth, index })
}

/// Same as [`interval_of_f64`] for an exact rational `num/den`.
pub fn interval_of_rational(num: u64, den: u64, depth: u32) -> Result<ParamInterval, CurveError> {
    if depth > MAX_DEPTH {
        return Err(CurveError::DepthTooLarge {
            depth,
            max: MAX_DEPTH,
        });
    }
    if den == 0 {
        return Err(CurveError::ZeroDenominator);
    }
    if num > den {
        return Err(CurveError::RationalOutOfRange { num, den });
    }
    let count = pow9(depth);
    let index = ((num as u128 * count as u128) / den as u128) as u64;
    Ok(ParamInterval {
        depth,
        index: index.min(count - 1),
    })
}

/// Depth-`d` curve evaluation: the center of the cell of the interval
/// containing `t`. Within `√2·3⁻ᵈ` of the true curve point.
pub fn eval_point(t: f64, depth: u32) -> Result<Point2, CurveError> {
    let iv = interval_of_f64(t, depth)?;
    Ok(cell_of_interval(iv).center())
}

/// Outcome of exhaustively enumerating all depth-`d` intervals.
#[derive(Clone, Debug)]
pub struct SurjectivityReport {
    pub depth: u32,
    pub total_cells: u64,
    pub covered_cells: u64,
    pub bijection: bool,
    /// `interval_of_linear_cell[row·3ᵈ + col]` is the interval index landing
    /// on that cell (meaningful when `bijection` holds).
    pub interval_of_linear_cell: Vec<u64>,
}

/// Enumerate every depth-`d` interval and report how the cells are covered.
pub fn surjectivity_report(depth: u32) -> Result<SurjectivityReport, CurveError> {
    if depth > MAX_ENUM_DEPTH {
        return Err(CurveError::EnumerationTooDeep {
            depth,
            max: MAX_ENUM_DEPTH,
        });
    }
    let side = pow3(depth);
    let total = pow9(depth);
    let mut hits = vec![0u8; total as usize];
    let mut perm = vec![0u64; total as usize];
    for j in 0..total {
        let cell = cell_of_interval(ParamInterval { depth, index: j });
        let linear = (cell.row() * side + cell.col()) as usize;
        hits[linear] = hits[linear].saturating_add(1);
        perm[linear] = j;
    }
    let covered = hits.iter().filter(|&&h| h > 0).count() as u64;
    let bijection = hits.iter().all(|&h| h == 1);
    Ok(SurjectivityReport {
        depth,
        total_cells: total,
        covered_cells: covered,
        bijection,
        interval_of_linear_cell: perm,
    })
}
