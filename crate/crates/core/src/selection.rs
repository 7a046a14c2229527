//! The curve preimage of a cover and the infimum selection table.
//!
//! Given a depth-`d` cover of the plane set, the preimage is the set of
//! intervals whose cells lie in the cover. The selection table sends each
//! covered cell to the earliest interval of the preimage hitting it — the
//! discrete right inverse of the curve restriction. At matched depth the
//! interval-to-cell map is a bijection, so each fiber is a single interval
//! and the minimum is attained trivially; the table still verifies
//! minimality by construction and the laws below are stated for the
//! general form:
//!
//! - right inverse: the cell of the selected interval is the queried cell;
//! - sublevel monotonicity: `r₁ ≤ r₂` implies `sublevel(r₁) ⊆ sublevel(r₂)`;
//! - refinement monotonicity: selected parameters never decrease when the
//!   cover is rebuilt one level deeper from the same points.

use alloc::collections::BTreeMap;
use core::fmt;

use num_complex::Complex64;

use crate::compact::{cell_of_point, rasterize, AffineFrame, CompactError, GridSet1D, GridSet2D};
use crate::curve::{
    cell_of_interval, interval_of_cell, pow9, Cell2D, CurveError, ParamInterval, MAX_DEPTH,
};

#[derive(Clone, Debug, PartialEq)]
pub enum SelectionError {
    EmptyCover,
    DepthTooLarge { depth: u32, max: u32 },
    ThresholdOutOfRange { r: f64 },
    Grid(CompactError),
    Curve(CurveError),
}

impl fmt::Display for SelectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionError::EmptyCover => {
                write!(f, "cover of a non-empty compact set cannot be empty")
            }
            SelectionError::DepthTooLarge { depth, max } => {
                write!(f, "depth {depth} exceeds the supported maximum {max}")
            }
            SelectionError::ThresholdOutOfRange { r } => {
                write!(f, "sublevel threshold {r} lies outside [0,1]")
            }
            SelectionError::Grid(e) => write!(f, "{e}"),
            SelectionError::Curve(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SelectionError {}

impl From<CompactError> for SelectionError {
    fn from(e: CompactError) -> Self {
        SelectionError::Grid(e)
    }
}

impl From<CurveError> for SelectionError {
    fn from(e: CurveError) -> Self {
        SelectionError::Curve(e)
    }
}

/// The set of depth-`d` intervals whose curve cell lies in `cover`.
///
/// Uses the exact inverse of the interval-to-cell bijection, so the result
/// is the full preimage without scanning all `9^d` intervals.
pub fn curve_preimage(cover: &GridSet2D) -> Result<GridSet1D, SelectionError> {
    if cover.is_empty() {
        return Err(SelectionError::EmptyCover);
    }
    let mut out = GridSet1D::new(cover.depth())?;
    for cell in cover.iter() {
        out.insert(interval_of_cell(cell))?;
    }
    Ok(out)
}

/// The infimum selection: each covered cell mapped to the earliest
/// preimage interval whose cell it is.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionTable {
    depth: u32,
    cover: GridSet2D,
    preimage: GridSet1D,
    earliest: BTreeMap<(u64, u64), u64>,
}

/// Build the selection table for a cover.
pub fn build_selection(cover: &GridSet2D) -> Result<SelectionTable, SelectionError> {
    let preimage = curve_preimage(cover)?;
    let depth = cover.depth();
    let mut earliest = BTreeMap::new();
    for iv in preimage.iter() {
        let cell = cell_of_interval(iv);
        // Keep the smallest interval index per cell. At matched depth each
        // cell receives exactly one interval; the min is kept anyway so the
        // table stays correct for any preimage superset.
        earliest
            .entry((cell.col(), cell.row()))
            .and_modify(|j: &mut u64| {
                if iv.index() < *j {
                    *j = iv.index();
                }
            })
            .or_insert(iv.index());
    }
    Ok(SelectionTable {
        depth,
        cover: cover.clone(),
        preimage,
        earliest,
    })
}

impl SelectionTable {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn cover(&self) -> &GridSet2D {
        &self.cover
    }

    pub fn preimage(&self) -> &GridSet1D {
        &self.preimage
    }

    /// Entries in ascending cell order: `((col, row), interval index)`.
    pub fn entries(&self) -> impl Iterator<Item = ((u64, u64), u64)> + '_ {
        self.earliest.iter().map(|(&cell, &j)| (cell, j))
    }

    /// The earliest interval whose curve cell is `(col, row)`.
    pub fn earliest_interval(&self, col: u64, row: u64) -> Option<ParamInterval> {
        let j = *self.earliest.get(&(col, row))?;
        Some(ParamInterval::new(self.depth, j).expect("table entries are in range"))
    }

    /// Selected parameter as an exact rational `(j, 9^d)`.
    pub fn param_exact(&self, col: u64, row: u64) -> Option<(u64, u64)> {
        let j = *self.earliest.get(&(col, row))?;
        Some((j, pow9(self.depth)))
    }

    /// Selected parameter as a float (left endpoint `j·9⁻ᵈ`).
    pub fn param(&self, col: u64, row: u64) -> Option<f64> {
        let (num, den) = self.param_exact(col, row)?;
        Some(num as f64 / den as f64)
    }

    /// Selected parameter of the cell containing a frame point, if covered.
    pub fn param_of_point(&self, z: Complex64, frame: &AffineFrame) -> Option<(u64, u64)> {
        let (col, row) = cell_of_point(frame.embed(z), self.depth)?;
        self.param_exact(col, row)
    }

    /// Cells whose selected parameter is at most `r`.
    ///
    /// Exact form: interval index `j ≤ floor(r·9ᵈ)`.
    pub fn sublevel(&self, r: f64) -> Result<GridSet2D, SelectionError> {
        if !(0.0..=1.0).contains(&r) {
            return Err(SelectionError::ThresholdOutOfRange { r });
        }
        let mut out = GridSet2D::new(self.depth)?;
        for (&(col, row), &j) in &self.earliest {
            if j as f64 <= r * pow9(self.depth) as f64 {
                out.insert(Cell2D::new(self.depth, col, row)?)?;
            }
        }
        Ok(out)
    }

    /// Rebuild the table one level deeper from the original points.
    ///
    /// For every point, the selected parameter of its refined cell is at
    /// least the selected parameter of its coarse cell: fibers shrink under
    /// refinement, so the attained infima rise.
    pub fn refined(
        &self,
        points: &[Complex64],
        frame: &AffineFrame,
    ) -> Result<SelectionTable, SelectionError> {
        let depth = self.depth + 1;
        if depth > MAX_DEPTH {
            return Err(SelectionError::DepthTooLarge {
                depth,
                max: MAX_DEPTH,
            });
        }
        let cover = rasterize(points, frame, depth)?;
        build_selection(&cover)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::pow3;
    use alloc::vec::Vec;

    fn full_cover(depth: u32) -> GridSet2D {
        let mut g = GridSet2D::new(depth).unwrap();
        for col in 0..pow3(depth) {
            for row in 0..pow3(depth) {
                g.insert(Cell2D::new(depth, col, row).unwrap()).unwrap();
            }
        }
        g
    }

    #[test]
    fn full_square_preimage_is_the_whole_line() {
        for d in 0..=3 {
            let k = curve_preimage(&full_cover(d)).unwrap();
            assert_eq!(k.len() as u64, pow9(d));
        }
    }

    #[test]
    fn single_cell_preimage_is_a_single_interval() {
        let mut g = GridSet2D::new(1).unwrap();
        g.insert(Cell2D::new(1, 0, 0).unwrap()).unwrap();
        let k = curve_preimage(&g).unwrap();
        let indices: Vec<u64> = k.indices().collect();
        assert_eq!(indices, [0]);
    }

    #[test]
    fn empty_cover_is_rejected() {
        let g = GridSet2D::new(2).unwrap();
        assert!(matches!(
            curve_preimage(&g),
            Err(SelectionError::EmptyCover)
        ));
    }

    #[test]
    fn preimage_matches_exhaustive_scan() {
        // Circle-ish cover at depth 3, checked against scanning all 9^3
        // intervals for membership.
        let points: Vec<Complex64> = (0..40)
            .map(|k| {
                let t = 2.0 * core::f64::consts::PI * k as f64 / 40.0;
                Complex64::new(0.5 + 0.3 * t.cos(), 0.5 + 0.3 * t.sin())
            })
            .collect();
        let cover = rasterize(&points, &AffineFrame::identity(), 4).unwrap();
        let k = curve_preimage(&cover).unwrap();
        for j in 0..pow9(4) {
            let cell = cell_of_interval(ParamInterval::new(4, j).unwrap());
            let in_cover = cover.contains(cell.col(), cell.row());
            assert_eq!(k.contains(j), in_cover, "interval {j}");
        }
        // Cell images of the preimage reproduce the cover exactly.
        let mut image = GridSet2D::new(4).unwrap();
        for iv in k.iter() {
            image.insert(cell_of_interval(iv)).unwrap();
        }
        assert_eq!(image, cover);
    }

    #[test]
    fn full_square_selection_is_the_bijection() {
        let table = build_selection(&full_cover(1)).unwrap();
        for j in 0..9 {
            let cell = cell_of_interval(ParamInterval::new(1, j).unwrap());
            assert_eq!(table.param(cell.col(), cell.row()).unwrap(), j as f64 / 9.0);
        }
    }

    #[test]
    fn selection_is_a_right_inverse_and_minimal() {
        let points: Vec<Complex64> = (0..25)
            .map(|k| Complex64::new(0.1 + 0.033 * k as f64, (0.17 * k as f64).sin() * 0.4 + 0.5))
            .collect();
        let cover = rasterize(&points, &AffineFrame::identity(), 3).unwrap();
        let table = build_selection(&cover).unwrap();
        for ((col, row), j) in table.entries() {
            let cell = cell_of_interval(ParamInterval::new(3, j).unwrap());
            assert_eq!((cell.col(), cell.row()), (col, row));
            // Minimality by exhaustive scan over the preimage.
            for smaller in table.preimage().indices().filter(|&i| i < j) {
                let other = cell_of_interval(ParamInterval::new(3, smaller).unwrap());
                assert_ne!((other.col(), other.row()), (col, row));
            }
        }
        // Injectivity: distinct cells select distinct intervals.
        let mut seen: Vec<u64> = table.entries().map(|(_, j)| j).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), table.cover().len());
    }

    #[test]
    fn sublevel_thresholds() {
        let table = build_selection(&full_cover(2)).unwrap();
        assert_eq!(table.sublevel(1.0).unwrap().len(), 81);
        assert_eq!(table.sublevel(0.0).unwrap().len(), 1);
        // r = 0.5 keeps exactly the intervals j <= 40.
        let half = table.sublevel(0.5).unwrap();
        assert_eq!(half.len(), 41);
        for cell in half.iter() {
            let j = table.param_exact(cell.col(), cell.row()).unwrap().0;
            assert!(j <= 40);
        }
        assert!(table.sublevel(1.5).is_err());
    }

    #[test]
    fn sublevel_is_monotone() {
        let points: Vec<Complex64> = (0..12)
            .map(|k| Complex64::new(0.08 * k as f64 + 0.02, 0.97 - 0.07 * k as f64))
            .collect();
        let cover = rasterize(&points, &AffineFrame::identity(), 2).unwrap();
        let table = build_selection(&cover).unwrap();
        let thresholds = [0.0, 0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 1.0];
        for w in thresholds.windows(2) {
            let lo = table.sublevel(w[0]).unwrap();
            let hi = table.sublevel(w[1]).unwrap();
            assert!(lo.is_subset(&hi));
        }
    }

    #[test]
    fn refinement_never_decreases_selected_parameters() {
        let frame = AffineFrame::identity();
        let singleton = [Complex64::new(0.37, 0.81)];
        let circle: Vec<Complex64> = (0..30)
            .map(|k| {
                let t = 2.0 * core::f64::consts::PI * k as f64 / 30.0;
                Complex64::new(0.5 + 0.31 * t.cos(), 0.5 + 0.31 * t.sin())
            })
            .collect();
        for points in [&singleton[..], &circle[..]] {
            let mut table = build_selection(&rasterize(points, &frame, 2).unwrap()).unwrap();
            for _ in 0..2 {
                let finer = table.refined(points, &frame).unwrap();
                for &z in points {
                    let (n0, d0) = table.param_of_point(z, &frame).unwrap();
                    let (n1, d1) = finer.param_of_point(z, &frame).unwrap();
                    // n0/d0 <= n1/d1 compared in integers: d1 = 9*d0.
                    assert_eq!(d1, 9 * d0);
                    assert!(9 * n0 <= n1);
                }
                table = finer;
            }
        }
    }

    #[test]
    fn minimality_holds_under_full_scan_at_depth_five() {
        let points: Vec<Complex64> = (0..9)
            .map(|k| Complex64::new(0.05 + 0.11 * k as f64, 0.93 - 0.1 * k as f64))
            .collect();
        let cover = rasterize(&points, &AffineFrame::identity(), 5).unwrap();
        let table = build_selection(&cover).unwrap();
        // Scan every depth-5 interval: none below the selected one may map
        // into its cell.
        for j in 0..pow9(5) {
            let cell = cell_of_interval(ParamInterval::new(5, j).unwrap());
            if let Some((selected, _)) = table.param_exact(cell.col(), cell.row()) {
                assert!(j >= selected, "interval {j} beats selected {selected}");
            }
        }
    }

    #[test]
    fn origin_cell_keeps_parameter_zero_under_refinement() {
        let frame = AffineFrame::identity();
        let points = [Complex64::new(0.01, 0.01), Complex64::new(0.9, 0.9)];
        let coarse = build_selection(&rasterize(&points, &frame, 2).unwrap()).unwrap();
        let fine = coarse.refined(&points, &frame).unwrap();
        assert_eq!(coarse.param_of_point(points[0], &frame).unwrap().0, 0);
        assert_eq!(fine.param_of_point(points[0], &frame).unwrap().0, 0);
    }
}
