//! Property tests for the curve, cover, and selection layers, checked
//! against an independent digit-formula oracle.

use num_complex::Complex64;
use proptest::prelude::*;

use wvnb_core::compact::{rasterize, AffineFrame, GridSet2D};
use wvnb_core::curve::{
    cell_of_interval, eval_point, interval_of_cell, pow3, pow9, Cell2D, ParamInterval,
};
use wvnb_core::selection::build_selection;

/// Digit-formula oracle: one base-3 output digit pair per base-9 input
/// digit, with complements driven by digit-sum parities recomputed from
/// scratch for every output position. Structurally independent of the
/// incremental state machine in the library.
fn oracle_cell(depth: u32, index: u64) -> (u64, u64) {
    // Base-3 digits t_1 .. t_{2d} of the parameter, most significant first.
    let mut t = Vec::with_capacity(2 * depth as usize);
    for k in (0..depth).rev() {
        let digit = (index / pow9(k)) % 9;
        t.push((digit / 3) as u32);
        t.push((digit % 3) as u32);
    }
    let complement = |d: u32, times: u32| if times % 2 == 1 { 2 - d } else { d };
    let mut col = 0u64;
    let mut row = 0u64;
    for i in 1..=depth as usize {
        // x_i complements by the sum of earlier even-position digits,
        // y_i by the sum of odd-position digits up to and including t_{2i-1}.
        let ex: u32 = (1..i).map(|m| t[2 * m - 1]).sum();
        let oy: u32 = (1..=i).map(|m| t[2 * m - 2]).sum();
        let a = complement(t[2 * i - 2], ex);
        let b = complement(t[2 * i - 1], oy);
        col = 3 * col + a as u64;
        row = 3 * row + b as u64;
    }
    (col, row)
}

#[test]
fn automaton_matches_digit_formula_exhaustively() {
    for d in 0..=4 {
        for j in 0..pow9(d) {
            let cell = cell_of_interval(ParamInterval::new(d, j).unwrap());
            assert_eq!(
                (cell.col(), cell.row()),
                oracle_cell(d, j),
                "depth {d} interval {j}"
            );
        }
    }
}

#[test]
fn oracle_confirms_frozen_examples() {
    assert_eq!(oracle_cell(2, 80), (8, 8));
    assert_eq!(oracle_cell(1, 0), (0, 0));
    assert_eq!(oracle_cell(6, 0), (0, 0));
    assert_eq!(oracle_cell(6, pow9(6) - 1), (pow3(6) - 1, pow3(6) - 1));
}

#[test]
fn consecutive_intervals_are_edge_adjacent_to_depth_four() {
    for d in 1..=4 {
        let mut prev = cell_of_interval(ParamInterval::new(d, 0).unwrap());
        for j in 1..pow9(d) {
            let next = cell_of_interval(ParamInterval::new(d, j).unwrap());
            assert!(
                prev.edge_adjacent(next),
                "depth {d}, intervals {} and {j}",
                j - 1
            );
            prev = next;
        }
    }
}

proptest! {
    #[test]
    fn interval_cell_round_trip(d in 0u32..=6, raw in 0u64..u64::MAX) {
        let j = raw % pow9(d);
        let iv = ParamInterval::new(d, j).unwrap();
        prop_assert_eq!(interval_of_cell(cell_of_interval(iv)), iv);
    }

    #[test]
    fn automaton_matches_digit_formula(d in 0u32..=6, raw in 0u64..u64::MAX) {
        let j = raw % pow9(d);
        let cell = cell_of_interval(ParamInterval::new(d, j).unwrap());
        prop_assert_eq!((cell.col(), cell.row()), oracle_cell(d, j));
    }

    #[test]
    fn children_nest_inside_parent(d in 0u32..=5, raw in 0u64..u64::MAX) {
        let j = raw % pow9(d);
        let parent = ParamInterval::new(d, j).unwrap();
        let parent_cell = cell_of_interval(parent);
        for kid in parent.children().unwrap() {
            prop_assert!(parent_cell.contains(cell_of_interval(kid)));
        }
    }

    #[test]
    fn holder_half_modulus(s in 0.0f64..=1.0, t in 0.0f64..=1.0, d in 1u32..=6) {
        let ps = eval_point(s, d).unwrap();
        let pt = eval_point(t, d).unwrap();
        let bound = 3.0 * (2.0f64).sqrt() * (s - t).abs().sqrt()
            + 2.0 * (2.0f64).sqrt() / pow3(d) as f64;
        prop_assert!(ps.dist(pt) <= bound);
    }

    #[test]
    fn rasterize_distributes_over_union(
        xs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..20),
        ys in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..20),
        d in 1u32..=4,
    ) {
        let frame = AffineFrame::identity();
        let to_c = |v: &Vec<(f64, f64)>| -> Vec<Complex64> {
            v.iter().map(|&(re, im)| Complex64::new(re, im)).collect()
        };
        let a = to_c(&xs);
        let b = to_c(&ys);
        let mut both = a.clone();
        both.extend_from_slice(&b);
        let ga = rasterize(&a, &frame, d).unwrap();
        let gb = rasterize(&b, &frame, d).unwrap();
        let gu = rasterize(&both, &frame, d).unwrap();
        prop_assert!(ga.is_subset(&gu));
        prop_assert_eq!(ga.union(&gb).unwrap(), gu);
    }

    #[test]
    fn selection_right_inverse_on_random_covers(
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..24),
        d in 1u32..=4,
    ) {
        let frame = AffineFrame::identity();
        let points: Vec<Complex64> = pts.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let cover = rasterize(&points, &frame, d).unwrap();
        let table = build_selection(&cover).unwrap();
        for ((col, row), j) in table.entries() {
            let cell = cell_of_interval(ParamInterval::new(d, j).unwrap());
            prop_assert_eq!((cell.col(), cell.row()), (col, row));
        }
        // Sublevel sets grow with the threshold.
        let lo = table.sublevel(0.3).unwrap();
        let hi = table.sublevel(0.8).unwrap();
        prop_assert!(lo.is_subset(&hi));
    }

    #[test]
    fn refinement_monotonicity_on_random_points(
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..16),
        d in 1u32..=4,
    ) {
        let frame = AffineFrame::identity();
        let points: Vec<Complex64> = pts.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let coarse = build_selection(&rasterize(&points, &frame, d).unwrap()).unwrap();
        let fine = coarse.refined(&points, &frame).unwrap();
        for &z in &points {
            let (n0, _) = coarse.param_of_point(z, &frame).unwrap();
            let (n1, _) = fine.param_of_point(z, &frame).unwrap();
            prop_assert!(9 * n0 <= n1);
        }
    }
}

#[test]
fn holder_bound_survives_boundary_straddles() {
    // Pairs pinched around subdivision boundaries at every scale; these
    // maximize image distance relative to parameter distance.
    let d = 6;
    let slack = 2.0 * (2.0f64).sqrt() / pow3(d) as f64;
    for level in 1..=6u32 {
        let step = 1.0 / pow9(level) as f64;
        for k in 1..pow9(level).min(2000) {
            let boundary = k as f64 * step;
            for eps in [1e-12, 1e-9, 1e-6, 1e-3] {
                let s = (boundary - eps).max(0.0);
                let t = (boundary + eps).min(1.0);
                let ps = eval_point(s, d).unwrap();
                let pt = eval_point(t, d).unwrap();
                let bound = 3.0 * (2.0f64).sqrt() * (s - t).abs().sqrt() + slack;
                assert!(
                    ps.dist(pt) <= bound,
                    "level {level} k {k} eps {eps}: {} > {bound}",
                    ps.dist(pt)
                );
            }
        }
    }
}

#[test]
fn full_square_cover_round_trips_through_selection() {
    let d = 2;
    let mut cover = GridSet2D::new(d).unwrap();
    for col in 0..pow3(d) {
        for row in 0..pow3(d) {
            cover.insert(Cell2D::new(d, col, row).unwrap()).unwrap();
        }
    }
    let table = build_selection(&cover).unwrap();
    assert_eq!(table.preimage().len() as u64, pow9(d));
    assert_eq!(table.cover(), &cover);
}
