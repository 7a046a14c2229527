//! End-to-end orchestration shared by the CLI and the integration tests.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::calculus::{berg_assemble, BergReport, CalculusError};
use crate::formats::{self, ConfigEcho, FormatError};
use crate::gen::{random_unit_vector, rng_from_seed};
use crate::spectral::{
    build_model, build_transport, pushforward, NormalMatrix, SpectralError, TransportOperator,
};

/// How the distinguished unit vector is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorChoice {
    /// Normalized all-ones vector (the default).
    Ones,
    /// Seeded random unit vector.
    Random,
    /// Read from a JSON file `{"re": [..], "im": [..]}`.
    File(PathBuf),
}

impl VectorChoice {
    pub fn parse(text: &str) -> Self {
        match text {
            "ones" => VectorChoice::Ones,
            "random" => VectorChoice::Random,
            other => VectorChoice::File(PathBuf::from(other)),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            VectorChoice::Ones => "ones".into(),
            VectorChoice::Random => "random".into(),
            VectorChoice::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub depth: u32,
    pub degrees: Vec<usize>,
    /// Constant window width, expanded to a schedule of the model size.
    pub delta: f64,
    pub seed: u64,
    pub vector: VectorChoice,
    pub input: PathBuf,
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Validation(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("{stage}: {source}")]
    Format {
        stage: &'static str,
        source: FormatError,
    },
    #[error("{stage}: {source}")]
    Spectral {
        stage: &'static str,
        source: SpectralError,
    },
    #[error("{stage}: {source}")]
    Calculus {
        stage: &'static str,
        source: CalculusError,
    },
}

impl PipelineError {
    /// 2 for usage/validation problems, 3 for mathematical precondition
    /// failures, 1 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) | PipelineError::Format { .. } => 2,
            PipelineError::Read { .. } | PipelineError::Write { .. } => 1,
            PipelineError::Spectral { .. } | PipelineError::Calculus { .. } => 3,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(1..=6).contains(&self.depth) {
            return Err(PipelineError::Validation(format!(
                "depth must be between 1 and 6, got {}",
                self.depth
            )));
        }
        if self.degrees.is_empty() || self.degrees.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PipelineError::Validation(
                "degrees must be a non-empty, strictly increasing list".into(),
            ));
        }
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(PipelineError::Validation(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn echo(&self, n_atoms: usize) -> ConfigEcho {
        ConfigEcho {
            depth: self.depth,
            degrees: self.degrees.clone(),
            delta: vec![self.delta; n_atoms],
            seed: self.seed,
            vector: self.vector.describe(),
            input: self.input.display().to_string(),
        }
    }
}

/// Everything one pipeline run produces.
pub struct PipelineRun {
    pub report: BergReport,
    pub transport: Option<TransportOperator>,
    pub config: PipelineConfig,
}

/// The selection-level artifacts: model, frame, and the table.
pub struct SelectionStage {
    pub matrix: NormalMatrix,
    pub vector: DVector<Complex64>,
    pub model: crate::spectral::SpectralModel,
    pub frame: wvnb_core::compact::AffineFrame,
    pub table: wvnb_core::selection::SelectionTable,
    pub config: PipelineConfig,
}

/// Selection plus the measure transport and diagonal model.
pub struct ModelStage {
    pub selection: SelectionStage,
    pub gamma: crate::spectral::LineMeasure,
    pub atom_pairing: Vec<usize>,
    pub transport: TransportOperator,
    pub b_diagonal: Vec<f64>,
    pub reconstruction_error: f64,
    pub reconstruction_bound: f64,
}

/// Run only up to the selection table.
pub fn run_selection_stage(config: PipelineConfig) -> Result<SelectionStage, PipelineError> {
    config.validate()?;
    let matrix = load_matrix(&config.input)?;
    let vector = resolve_vector(&config.vector, matrix.dim(), config.seed)?;
    let model = build_model(&matrix, &vector).map_err(|source| PipelineError::Spectral {
        stage: "model",
        source,
    })?;
    let atom_points: Vec<Complex64> = model.measure.atoms().iter().map(|a| a.point).collect();
    let (frame, cover) = wvnb_core::compact::normalize_spectrum(&atom_points, config.depth)
        .map_err(|e| PipelineError::Spectral {
            stage: "rasterize",
            source: e.into(),
        })?;
    let table =
        wvnb_core::selection::build_selection(&cover).map_err(|e| PipelineError::Spectral {
            stage: "selection",
            source: e.into(),
        })?;
    Ok(SelectionStage {
        matrix,
        vector,
        model,
        frame,
        table,
        config,
    })
}

/// Run up to the diagonal model and transport.
pub fn run_model_stage(config: PipelineConfig) -> Result<ModelStage, PipelineError> {
    let selection = run_selection_stage(config)?;
    let pf = pushforward(&selection.model.measure, &selection.table, &selection.frame).map_err(
        |source| PipelineError::Spectral {
            stage: "pushforward",
            source,
        },
    )?;
    let transport = build_transport(&selection.model.measure, &pf).map_err(|source| {
        PipelineError::Spectral {
            stage: "transport",
            source,
        }
    })?;
    let b = crate::spectral::hermitian_model(&pf.gamma);
    let b_diagonal = b.diagonal();
    let reconstruction =
        crate::spectral::reconstruct(&b_diagonal, &selection.table, &selection.frame).map_err(
            |source| PipelineError::Spectral {
                stage: "reconstruct",
                source,
            },
        )?;
    let reconstruction_error = selection
        .model
        .measure
        .atoms()
        .iter()
        .zip(&pf.atom_pairing)
        .map(|(atom, &k)| (reconstruction[k] - atom.point).norm())
        .fold(0.0f64, f64::max);
    let reconstruction_bound =
        crate::spectral::reconstruction_bound(&selection.frame, selection.config.depth);
    Ok(ModelStage {
        selection,
        gamma: pf.gamma,
        atom_pairing: pf.atom_pairing,
        transport,
        b_diagonal,
        reconstruction_error,
        reconstruction_bound,
    })
}

fn read_to_string(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Read {
        path: path.display().to_string(),
        source,
    })
}

/// Load the input matrix through the normality gate.
pub fn load_matrix(path: &Path) -> Result<NormalMatrix, PipelineError> {
    let text = read_to_string(path)?;
    let m = formats::parse_matrix(&text).map_err(|source| PipelineError::Format {
        stage: "input",
        source,
    })?;
    NormalMatrix::new(m).map_err(|source| PipelineError::Spectral {
        stage: "normality gate",
        source,
    })
}

/// Resolve the distinguished vector for an `n`-dimensional model.
pub fn resolve_vector(
    choice: &VectorChoice,
    n: usize,
    seed: u64,
) -> Result<DVector<Complex64>, PipelineError> {
    match choice {
        VectorChoice::Ones => {
            let s = 1.0 / (n as f64).sqrt();
            Ok(DVector::from_element(n, Complex64::new(s, 0.0)))
        }
        VectorChoice::Random => {
            let mut rng = rng_from_seed(seed ^ 0x9e3779b97f4a7c15);
            Ok(random_unit_vector(n, &mut rng))
        }
        VectorChoice::File(path) => {
            let text = read_to_string(path)?;
            let v = formats::parse_vector(&text, n).map_err(|source| PipelineError::Format {
                stage: "vector",
                source,
            })?;
            let norm = v.norm();
            if norm < 1e-12 {
                return Err(PipelineError::Validation("vector must be non-zero".into()));
            }
            Ok(v / Complex64::new(norm, 0.0))
        }
    }
}

/// Run the whole chain in memory.
pub fn run(config: PipelineConfig) -> Result<PipelineRun, PipelineError> {
    config.validate()?;
    let a = load_matrix(&config.input)?;
    let x = resolve_vector(&config.vector, a.dim(), config.seed)?;
    // Atom count is only known after the model; build it once here so the
    // schedule can be sized, then reuse the same inputs inside the full
    // assembly.
    let model = build_model(&a, &x).map_err(|source| PipelineError::Spectral {
        stage: "model",
        source,
    })?;
    let n_atoms = model.measure.len();
    let schedule = vec![config.delta; n_atoms];
    let report = berg_assemble(
        &a,
        &x,
        config.depth,
        &config.degrees,
        Some(&schedule),
        config.seed,
    )
    .map_err(|source| match source {
        CalculusError::Spectral(e) => PipelineError::Spectral {
            stage: "pipeline",
            source: e,
        },
        other => PipelineError::Calculus {
            stage: "pipeline",
            source: other,
        },
    })?;
    // Transport needs one line atom per spectrum atom; at a too-coarse
    // depth that fails with a depth hint.
    let pf =
        pushforward(&report.model.measure, &report.table, &report.frame).map_err(|source| {
            PipelineError::Spectral {
                stage: "pushforward",
                source,
            }
        })?;
    let transport =
        build_transport(&report.model.measure, &pf).map_err(|source| PipelineError::Spectral {
            stage: "transport",
            source,
        })?;
    Ok(PipelineRun {
        report,
        transport: Some(transport),
        config,
    })
}

/// selection.json content for a completed selection stage.
pub fn selection_report(stage: &SelectionStage) -> String {
    let echo = stage.config.echo(stage.model.measure.len());
    formats::selection_json(&echo, &stage.frame, &stage.table)
}

/// model.json content for a completed model stage.
pub fn model_report(stage: &ModelStage) -> String {
    let echo = stage
        .selection
        .config
        .echo(stage.selection.model.measure.len());
    formats::model_json(
        &echo,
        &stage.selection.frame,
        &stage.selection.model,
        &stage.gamma,
        &stage.b_diagonal,
        Some(&stage.transport),
        stage.reconstruction_error,
        stage.reconstruction_bound,
    )
}

/// Report file names written by [`write_reports`].
pub const REPORT_FILES: [&str; 4] = [
    "model.json",
    "selection.json",
    "decomposition.json",
    "traces.csv",
];

/// Write model.json, selection.json, decomposition.json, and traces.csv
/// into the output directory.
pub fn write_reports(run: &PipelineRun) -> Result<(), PipelineError> {
    let out = &run.config.out;
    fs::create_dir_all(out).map_err(|source| PipelineError::Write {
        path: out.display().to_string(),
        source,
    })?;
    let echo = run.config.echo(run.report.model.measure.len());
    let write = |name: &str, content: String| -> Result<(), PipelineError> {
        let path = out.join(name);
        fs::write(&path, content).map_err(|source| PipelineError::Write {
            path: path.display().to_string(),
            source,
        })
    };
    write(
        "model.json",
        formats::model_json(
            &echo,
            &run.report.frame,
            &run.report.model,
            &run.report.gamma,
            &run.report.diagonal_model.diagonal(),
            run.transport.as_ref(),
            run.report.reconstruction_error,
            run.report.reconstruction_bound,
        ),
    )?;
    write(
        "selection.json",
        formats::selection_json(&echo, &run.report.frame, &run.report.table),
    )?;
    write(
        "decomposition.json",
        formats::decomposition_json(&echo, &run.report),
    )?;
    write("traces.csv", formats::traces_csv(&run.report))?;
    Ok(())
}

/// The headline inequality lines printed by the pipeline command.
pub fn headline(run: &PipelineRun) -> String {
    let r = &run.report;
    let mut out = String::new();
    out.push_str(&format!(
        "model: n={} atoms={} depth={} frame_scale={:.6}\n",
        r.model.eigenvalues.len(),
        r.model.measure.len(),
        run.config.depth,
        r.frame.scale
    ));
    out.push_str(&format!(
        "reconstruction: {:.3e} <= bound {:.3e}: {}\n",
        r.reconstruction_error,
        r.reconstruction_bound,
        ok(r.reconstruction_error <= r.reconstruction_bound)
    ));
    if let Some(t) = &run.transport {
        let u = t.unitarity_residual();
        out.push_str(&format!(
            "transport unitarity: {:.3e} <= 1e-12: {}\n",
            u,
            ok(u <= 1e-12)
        ));
    }
    let excess = r.wvn.max_residual_excess();
    out.push_str(&format!(
        "wvn residuals: max r_k - delta_k = {:.3e}: {}\n",
        excess,
        ok(excess <= 0.0)
    ));
    let trace: Vec<String> = r
        .convergence
        .iter()
        .map(|c| format!("{:.3e}", c.cn_minus_l))
        .collect();
    out.push_str(&format!(
        "C_n -> L: [{}] non-increasing: {}\n",
        trace.join(", "),
        ok(r.convergence_non_increasing())
    ));
    let bound_ok = r
        .convergence
        .iter()
        .all(|c| c.cn_minus_l <= 2.0 * c.sup_error);
    out.push_str(&format!(
        "C_n bound: every ||C_n - L|| <= 2 sup_error: {}\n",
        ok(bound_ok)
    ));
    out.push_str(&format!(
        "identity: ||f(H) - (f(D) + L)|| = {:.3e} <= {:.3e}: {}\n",
        r.identity_residual,
        r.identity_bound,
        ok(r.identity_residual <= r.identity_bound)
    ));
    out
}

fn ok(b: bool) -> &'static str {
    if b {
        "OK"
    } else {
        "VIOLATED"
    }
}
