//! File formats: matrix/vector input parsing and deterministic JSON/CSV
//! report writers.
//!
//! Reports must be byte-identical across runs with the same config and
//! seed, so output JSON is produced by a small writer with fixed field
//! order and every float printed at 17 significant digits. Input parsing
//! goes through serde_json and is deliberately lenient about whitespace.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use wvnb_core::compact::{AffineFrame, GridSet1D, GridSet2D};
use wvnb_core::curve::pow9;
use wvnb_core::selection::SelectionTable;

use crate::calculus::BergReport;
use crate::spectral::{LineMeasure, SpectralModel, TransportOperator};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("matrix JSON needs {field}")]
    MissingField { field: &'static str },
    #[error("matrix JSON: {detail}")]
    BadMatrix { detail: String },
    #[error("vector JSON: {detail}")]
    BadVector { detail: String },
    #[error("cannot serialize non-finite float {value}")]
    NonFinite { value: f64 },
}

/// 17-significant-digit float, the canonical report format.
pub fn fmt_f64(value: f64) -> String {
    assert!(value.is_finite(), "reports never contain non-finite floats");
    format!("{value:.16e}")
}

/// Minimal JSON writer with explicit field order.
pub struct JsonWriter {
    buf: String,
    stack: Vec<bool>, // true once the current container has an entry
}

impl JsonWriter {
    pub fn new() -> Self {
        JsonWriter {
            buf: String::new(),
            stack: Vec::new(),
        }
    }

    pub fn finish(mut self) -> String {
        self.buf.push('\n');
        self.buf
    }

    fn comma(&mut self) {
        if let Some(filled) = self.stack.last_mut() {
            if *filled {
                self.buf.push(',');
            }
            *filled = true;
        }
    }

    pub fn begin_obj(&mut self) -> &mut Self {
        self.comma();
        self.buf.push('{');
        self.stack.push(false);
        self
    }

    pub fn end_obj(&mut self) -> &mut Self {
        self.stack.pop();
        self.buf.push('}');
        self
    }

    pub fn begin_arr(&mut self) -> &mut Self {
        self.comma();
        self.buf.push('[');
        self.stack.push(false);
        self
    }

    pub fn end_arr(&mut self) -> &mut Self {
        self.stack.pop();
        self.buf.push(']');
        self
    }

    pub fn key(&mut self, k: &str) -> &mut Self {
        self.comma();
        write!(self.buf, "\"{k}\":").unwrap();
        // The upcoming value must not emit another comma.
        if let Some(filled) = self.stack.last_mut() {
            *filled = false;
        }
        self
    }

    pub fn str_val(&mut self, v: &str) -> &mut Self {
        self.comma();
        self.buf.push('"');
        for c in v.chars() {
            match c {
                '"' => self.buf.push_str("\\\""),
                '\\' => self.buf.push_str("\\\\"),
                '\n' => self.buf.push_str("\\n"),
                c if (c as u32) < 0x20 => {
                    write!(self.buf, "\\u{:04x}", c as u32).unwrap();
                }
                c => self.buf.push(c),
            }
        }
        self.buf.push('"');
        self
    }

    pub fn u64_val(&mut self, v: u64) -> &mut Self {
        self.comma();
        write!(self.buf, "{v}").unwrap();
        self
    }

    pub fn usize_val(&mut self, v: usize) -> &mut Self {
        self.u64_val(v as u64)
    }

    pub fn u32_val(&mut self, v: u32) -> &mut Self {
        self.u64_val(v as u64)
    }

    pub fn bool_val(&mut self, v: bool) -> &mut Self {
        self.comma();
        write!(self.buf, "{v}").unwrap();
        self
    }

    pub fn f64_val(&mut self, v: f64) -> &mut Self {
        self.comma();
        self.buf.push_str(&fmt_f64(v));
        self
    }

    pub fn complex_val(&mut self, z: Complex64) -> &mut Self {
        self.begin_obj();
        self.key("re").f64_val(z.re);
        self.key("im").f64_val(z.im);
        self.end_obj()
    }
}

impl Default for JsonWriter {
    fn default() -> Self {
        Self::new()
    }
}

fn value_as_f64(v: &serde_json::Value, what: &'static str) -> Result<f64, FormatError> {
    v.as_f64().ok_or(FormatError::BadMatrix {
        detail: format!("{what} must be a number"),
    })
}

/// Parse `{"n": n, "re": [[..]], "im": [[..]]}`; `im` may be omitted for a
/// real matrix.
pub fn parse_matrix(text: &str) -> Result<DMatrix<Complex64>, FormatError> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let n = v
        .get("n")
        .and_then(|x| x.as_u64())
        .ok_or(FormatError::MissingField {
            field: "n (positive integer)",
        })? as usize;
    if n == 0 {
        return Err(FormatError::BadMatrix {
            detail: "n must be positive".into(),
        });
    }
    let re = v.get("re").ok_or(FormatError::MissingField {
        field: "re (n x n array)",
    })?;
    let parse_rows =
        |rows: &serde_json::Value, what: &'static str| -> Result<Vec<Vec<f64>>, FormatError> {
            let arr = rows.as_array().ok_or(FormatError::BadMatrix {
                detail: format!("{what} must be an array of rows"),
            })?;
            if arr.len() != n {
                return Err(FormatError::BadMatrix {
                    detail: format!("{what} must have {n} rows"),
                });
            }
            arr.iter()
                .map(|row| {
                    let cells = row.as_array().ok_or(FormatError::BadMatrix {
                        detail: format!("{what} rows must be arrays"),
                    })?;
                    if cells.len() != n {
                        return Err(FormatError::BadMatrix {
                            detail: format!("{what} rows must have {n} entries"),
                        });
                    }
                    cells.iter().map(|c| value_as_f64(c, what)).collect()
                })
                .collect()
        };
    let re_rows = parse_rows(re, "re")?;
    let im_rows = match v.get("im") {
        Some(im) => parse_rows(im, "im")?,
        None => vec![vec![0.0; n]; n],
    };
    Ok(DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(re_rows[i][j], im_rows[i][j])
    }))
}

/// Parse `{"re": [..], "im": [..]}` (im optional) into a vector of the
/// expected length.
pub fn parse_vector(text: &str, expected: usize) -> Result<DVector<Complex64>, FormatError> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let re = v
        .get("re")
        .and_then(|x| x.as_array())
        .ok_or(FormatError::BadVector {
            detail: "needs a re array".into(),
        })?;
    if re.len() != expected {
        return Err(FormatError::BadVector {
            detail: format!("expected length {expected}, got {}", re.len()),
        });
    }
    let im: Vec<f64> = match v.get("im").and_then(|x| x.as_array()) {
        Some(arr) => {
            if arr.len() != expected {
                return Err(FormatError::BadVector {
                    detail: format!(
                        "im length {} does not match re length {expected}",
                        arr.len()
                    ),
                });
            }
            arr.iter()
                .map(|c| {
                    c.as_f64().ok_or(FormatError::BadVector {
                        detail: "im entries must be numbers".into(),
                    })
                })
                .collect::<Result<_, _>>()?
        }
        None => vec![0.0; expected],
    };
    let re: Vec<f64> = re
        .iter()
        .map(|c| {
            c.as_f64().ok_or(FormatError::BadVector {
                detail: "re entries must be numbers".into(),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(DVector::from_fn(expected, |i, _| {
        Complex64::new(re[i], im[i])
    }))
}

/// `{"depth": d, "cells": [[col,row],...]}` sorted ascending.
pub fn write_grid2d(w: &mut JsonWriter, grid: &GridSet2D) {
    w.begin_obj();
    w.key("depth").u32_val(grid.depth());
    w.key("cells").begin_arr();
    for (col, row) in grid.coords() {
        w.begin_arr().u64_val(col).u64_val(row).end_arr();
    }
    w.end_arr();
    w.end_obj();
}

/// `{"depth": d, "intervals": [j,...]}` sorted ascending.
pub fn write_grid1d(w: &mut JsonWriter, grid: &GridSet1D) {
    w.begin_obj();
    w.key("depth").u32_val(grid.depth());
    w.key("intervals").begin_arr();
    for j in grid.indices() {
        w.u64_val(j);
    }
    w.end_arr();
    w.end_obj();
}

/// `{"depth": d, "entries": [{"cell":[c,r],"t_num":j,"t_den":9^d},...]}`.
pub fn write_selection_table(w: &mut JsonWriter, table: &SelectionTable) {
    let den = pow9(table.depth());
    w.begin_obj();
    w.key("depth").u32_val(table.depth());
    w.key("entries").begin_arr();
    for ((col, row), j) in table.entries() {
        w.begin_obj();
        w.key("cell")
            .begin_arr()
            .u64_val(col)
            .u64_val(row)
            .end_arr();
        w.key("t_num").u64_val(j);
        w.key("t_den").u64_val(den);
        w.end_obj();
    }
    w.end_arr();
    w.end_obj();
}

pub fn write_frame(w: &mut JsonWriter, frame: &AffineFrame) {
    w.begin_obj();
    w.key("center").complex_val(frame.center);
    w.key("scale").f64_val(frame.scale);
    w.end_obj();
}

pub fn write_line_measure(w: &mut JsonWriter, gamma: &LineMeasure) {
    w.begin_arr();
    for atom in gamma.atoms() {
        w.begin_obj();
        w.key("t_num").u64_val(atom.point.index);
        w.key("t_den").u64_val(pow9(atom.point.depth));
        w.key("t").f64_val(atom.point.value());
        w.key("weight").f64_val(atom.weight);
        w.end_obj();
    }
    w.end_arr();
}

/// Configuration echo embedded in every report.
#[derive(Clone, Debug)]
pub struct ConfigEcho {
    pub depth: u32,
    pub degrees: Vec<usize>,
    pub delta: Vec<f64>,
    pub seed: u64,
    pub vector: String,
    pub input: String,
}

pub fn write_config(w: &mut JsonWriter, cfg: &ConfigEcho) {
    w.begin_obj();
    w.key("depth").u32_val(cfg.depth);
    w.key("degrees").begin_arr();
    for &d in &cfg.degrees {
        w.usize_val(d);
    }
    w.end_arr();
    w.key("delta").begin_arr();
    for &d in &cfg.delta {
        w.f64_val(d);
    }
    w.end_arr();
    w.key("seed").u64_val(cfg.seed);
    w.key("vector").str_val(&cfg.vector);
    w.key("input").str_val(&cfg.input);
    w.end_obj();
}

/// selection.json: frame, cover, preimage, and the selection table.
pub fn selection_json(cfg: &ConfigEcho, frame: &AffineFrame, table: &SelectionTable) -> String {
    let mut w = JsonWriter::new();
    w.begin_obj();
    w.key("config");
    write_config(&mut w, cfg);
    w.key("frame");
    write_frame(&mut w, frame);
    w.key("lambda");
    write_grid2d(&mut w, table.cover());
    w.key("k");
    write_grid1d(&mut w, table.preimage());
    w.key("table");
    write_selection_table(&mut w, table);
    w.end_obj();
    w.finish()
}

/// model.json: atoms, weights, line measure, diagonal model, transport and
/// reconstruction diagnostics.
#[allow(clippy::too_many_arguments)]
pub fn model_json(
    cfg: &ConfigEcho,
    frame: &AffineFrame,
    model: &SpectralModel,
    gamma: &LineMeasure,
    b_diagonal: &[f64],
    transport: Option<&TransportOperator>,
    reconstruction_error: f64,
    reconstruction_bound: f64,
) -> String {
    let mut w = JsonWriter::new();
    w.begin_obj();
    w.key("config");
    write_config(&mut w, cfg);
    w.key("frame");
    write_frame(&mut w, frame);
    w.key("n").usize_val(model.eigenvalues.len());
    w.key("eigenvalues").begin_arr();
    for &z in &model.eigenvalues {
        w.complex_val(z);
    }
    w.end_arr();
    w.key("weights").begin_arr();
    for &wt in &model.weights {
        w.f64_val(wt);
    }
    w.end_arr();
    w.key("atoms").begin_arr();
    for atom in model.measure.atoms() {
        w.begin_obj();
        w.key("re").f64_val(atom.point.re);
        w.key("im").f64_val(atom.point.im);
        w.key("weight").f64_val(atom.weight);
        w.end_obj();
    }
    w.end_arr();
    w.key("gamma");
    write_line_measure(&mut w, gamma);
    w.key("b_diagonal").begin_arr();
    for &t in b_diagonal {
        w.f64_val(t);
    }
    w.end_arr();
    w.key("diagnostics").begin_obj();
    w.key("eigen_residual").f64_val(model.eigen_residual);
    w.key("unitarity_residual")
        .f64_val(model.unitarity_residual);
    w.key("mass").f64_val(model.measure.total_mass());
    w.key("gamma_mass").f64_val(gamma.total_mass());
    w.key("transport_unitarity").begin_arr();
    if let Some(t) = transport {
        w.f64_val(t.unitarity_residual());
    }
    w.end_arr();
    w.key("reconstruction_error").f64_val(reconstruction_error);
    w.key("reconstruction_bound").f64_val(reconstruction_bound);
    w.end_obj();
    w.end_obj();
    w.finish()
}

/// decomposition.json: the greedy split, the polynomial trace, the final
/// identity, and singular-value data.
pub fn decomposition_json(cfg: &ConfigEcho, report: &BergReport) -> String {
    let mut w = JsonWriter::new();
    w.begin_obj();
    w.key("config");
    write_config(&mut w, cfg);
    w.key("rotation_seed").u64_val(report.rotation_seed);
    w.key("frame");
    write_frame(&mut w, &report.frame);
    w.key("wvn").begin_obj();
    w.key("mu").begin_arr();
    for &m in &report.wvn.diagonal {
        w.f64_val(m);
    }
    w.end_arr();
    w.key("residuals").begin_arr();
    for s in &report.wvn.steps {
        w.f64_val(s.residual);
    }
    w.end_arr();
    w.key("delta").begin_arr();
    for s in &report.wvn.steps {
        w.f64_val(s.delta);
    }
    w.end_arr();
    w.key("window_sizes").begin_arr();
    for s in &report.wvn.steps {
        w.usize_val(s.window_size);
    }
    w.end_arr();
    w.key("skipped_seeds").begin_arr();
    for &s in &report.wvn.skipped_seeds {
        w.usize_val(s);
    }
    w.end_arr();
    w.key("remainder_hs").f64_val(report.wvn.remainder_hs);
    w.key("remainder_hs_envelope")
        .f64_val(report.wvn.remainder_hs_envelope);
    w.key("hs_within_envelope")
        .bool_val(report.wvn.remainder_hs <= report.wvn.remainder_hs_envelope);
    w.key("basis_unitarity").f64_val(report.wvn.basis_unitarity);
    w.end_obj();
    w.key("l_op_norm").f64_val(report.l_op_norm);
    w.key("cn_trace").begin_arr();
    for c in &report.convergence {
        w.begin_obj();
        w.key("degree").usize_val(c.degree);
        w.key("sup_error").f64_val(c.sup_error);
        w.key("cn_minus_l").f64_val(c.cn_minus_l);
        w.key("calculus_defect").f64_val(c.calculus_defect);
        w.end_obj();
    }
    w.end_arr();
    w.key("cn_non_increasing")
        .bool_val(report.convergence_non_increasing());
    w.key("identity_residual").f64_val(report.identity_residual);
    w.key("identity_bound").f64_val(report.identity_bound);
    w.key("telescoping").begin_arr();
    for t in &report.telescoping {
        w.begin_obj();
        w.key("power").u32_val(t.power);
        w.key("residual").f64_val(t.residual);
        w.key("bound").f64_val(t.bound);
        w.end_obj();
    }
    w.end_arr();
    w.key("singular_values").begin_obj();
    w.key("c").begin_arr();
    for &s in &report.singular_c {
        w.f64_val(s);
    }
    w.end_arr();
    w.key("l").begin_arr();
    for &s in &report.singular_l {
        w.f64_val(s);
    }
    w.end_arr();
    w.end_obj();
    w.key("reconstruction_error")
        .f64_val(report.reconstruction_error);
    w.key("reconstruction_bound")
        .f64_val(report.reconstruction_bound);
    w.end_obj();
    w.finish()
}

/// traces.csv: the polynomial convergence trace, one row per degree.
pub fn traces_csv(report: &BergReport) -> String {
    let mut out = String::from("degree,sup_error,cn_minus_l_op,calculus_defect\n");
    for c in &report.convergence {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.degree,
            fmt_f64(c.sup_error),
            fmt_f64(c.cn_minus_l),
            fmt_f64(c.calculus_defect)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_17_significant_digits() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.125), "-1.2500000000000000e-1");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn json_writer_handles_nesting_and_commas() {
        let mut w = JsonWriter::new();
        w.begin_obj();
        w.key("a").u64_val(1);
        w.key("b").begin_arr().u64_val(2).u64_val(3).end_arr();
        w.key("c").begin_obj();
        w.key("d").str_val("x\"y");
        w.end_obj();
        w.end_obj();
        let s = w.finish();
        assert_eq!(s, "{\"a\":1,\"b\":[2,3],\"c\":{\"d\":\"x\\\"y\"}}\n");
        let parsed: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(parsed["b"][1], 3);
    }

    #[test]
    fn matrix_round_trip_and_errors() {
        let text = r#"{"n": 2, "re": [[0, 1], [1, 0]], "im": [[0, 0.5], [-0.5, 0]]}"#;
        let m = parse_matrix(text).unwrap();
        assert_eq!(m[(0, 1)], Complex64::new(1.0, 0.5));
        assert_eq!(m[(1, 0)], Complex64::new(1.0, -0.5));
        let real_only = r#"{"n": 1, "re": [[3.5]]}"#;
        let m = parse_matrix(real_only).unwrap();
        assert_eq!(m[(0, 0)], Complex64::new(3.5, 0.0));
        assert!(parse_matrix(r#"{"re": [[1]]}"#).is_err());
        assert!(parse_matrix(r#"{"n": 2, "re": [[1]]}"#).is_err());
    }

    #[test]
    fn vector_parsing() {
        let v = parse_vector(r#"{"re": [1, 0], "im": [0, 1]}"#, 2).unwrap();
        assert_eq!(v[1], Complex64::new(0.0, 1.0));
        assert!(parse_vector(r#"{"re": [1]}"#, 2).is_err());
    }
}
