use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wvnb::formats::{self, JsonWriter};
use wvnb::pipeline::{self, PipelineConfig, PipelineError, VectorChoice};
use wvnb_core::curve::{
    cell_of_interval, eval_point, interval_of_rational, surjectivity_report, ParamInterval,
};

/// Carry a normal matrix onto the real line along a space-filling curve,
/// split it into diagonal plus small remainder, and report every bound.
#[derive(Parser)]
#[command(name = "wvnb", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Curve-level queries: evaluation, cells, exhaustive surjectivity.
    Curve {
        #[command(subcommand)]
        sub: CurveCmd,
    },
    /// Write selection.json for the input matrix spectrum.
    Select(StageArgs),
    /// Write model.json for the input matrix.
    Model(StageArgs),
    /// Write decomposition.json and traces.csv for the input matrix.
    Decompose(StageArgs),
    /// Run everything: all report files plus the headline inequalities.
    Pipeline(StageArgs),
}

#[derive(Subcommand)]
enum CurveCmd {
    /// Evaluate the depth-d curve at a parameter (float or "p/q").
    Eval {
        #[arg(long)]
        t: String,
        #[arg(long, default_value_t = 4)]
        depth: u32,
    },
    /// Print the cell of one interval, or all cells at small depths.
    Cells {
        #[arg(long)]
        depth: u32,
        #[arg(long)]
        interval: Option<u64>,
    },
    /// Exhaustively check that depth-d intervals cover all cells once.
    Surjectivity {
        #[arg(long)]
        depth: u32,
    },
}

#[derive(Args)]
struct StageArgs {
    /// Matrix JSON: {"n": n, "re": [[..]], "im": [[..]]}.
    #[arg(long)]
    input: PathBuf,
    /// Output directory for report files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Grid depth (1..=6).
    #[arg(long, default_value_t = 4)]
    depth: u32,
    /// Polynomial degree ladder.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    degrees: Vec<usize>,
    /// Spectral window width for the greedy split.
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    /// Seed for the rotation unitary and random vectors.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Distinguished vector: "ones", "random", or a JSON file path.
    #[arg(long, default_value = "ones")]
    vector: String,
}

impl StageArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            depth: self.depth,
            degrees: self.degrees.clone(),
            delta: self.delta,
            seed: self.seed,
            vector: VectorChoice::parse(&self.vector),
            input: self.input.clone(),
            out: self.out.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn validation(msg: String) -> PipelineError {
    PipelineError::Validation(msg)
}

fn write_into(dir: &std::path::Path, name: &str, content: String) -> Result<String, PipelineError> {
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Write {
        path: dir.display().to_string(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|source| PipelineError::Write {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path.display().to_string())
}

fn parse_param(text: &str, depth: u32) -> Result<ParamInterval, PipelineError> {
    if let Some((num, den)) = text.split_once('/') {
        let num: u64 = num
            .trim()
            .parse()
            .map_err(|_| validation(format!("bad rational {text}")))?;
        let den: u64 = den
            .trim()
            .parse()
            .map_err(|_| validation(format!("bad rational {text}")))?;
        return interval_of_rational(num, den, depth).map_err(|e| validation(e.to_string()));
    }
    let t: f64 = text
        .parse()
        .map_err(|_| validation(format!("bad parameter {text}")))?;
    wvnb_core::curve::interval_of_f64(t, depth).map_err(|e| validation(e.to_string()))
}

fn dispatch(cli: Cli) -> Result<(), PipelineError> {
    match cli.cmd {
        Cmd::Curve { sub } => curve_cmd(sub),
        Cmd::Select(args) => {
            let stage = pipeline::run_selection_stage(args.config())?;
            let path = write_into(
                &stage.config.out,
                "selection.json",
                pipeline::selection_report(&stage),
            )?;
            println!("wrote {path}");
            Ok(())
        }
        Cmd::Model(args) => {
            let stage = pipeline::run_model_stage(args.config())?;
            let path = write_into(
                &stage.selection.config.out,
                "model.json",
                pipeline::model_report(&stage),
            )?;
            println!("wrote {path}");
            Ok(())
        }
        Cmd::Decompose(args) => {
            let run = pipeline::run(args.config())?;
            let echo = run.config.echo(run.report.model.measure.len());
            for (name, content) in [
                (
                    "decomposition.json",
                    formats::decomposition_json(&echo, &run.report),
                ),
                ("traces.csv", formats::traces_csv(&run.report)),
            ] {
                let path = write_into(&run.config.out, name, content)?;
                println!("wrote {path}");
            }
            Ok(())
        }
        Cmd::Pipeline(args) => {
            let run = pipeline::run(args.config())?;
            pipeline::write_reports(&run)?;
            for name in pipeline::REPORT_FILES {
                println!("wrote {}", run.config.out.join(name).display());
            }
            print!("{}", pipeline::headline(&run));
            Ok(())
        }
    }
}

fn curve_cmd(sub: CurveCmd) -> Result<(), PipelineError> {
    match sub {
        CurveCmd::Eval { t, depth } => {
            let iv = parse_param(&t, depth)?;
            let point = eval_point(iv.left(), depth).map_err(|e| validation(e.to_string()))?;
            let cell = cell_of_interval(iv);
            let mut w = JsonWriter::new();
            w.begin_obj();
            w.key("t").str_val(&t);
            w.key("depth").u32_val(depth);
            w.key("interval").u64_val(iv.index());
            w.key("cell")
                .begin_arr()
                .u64_val(cell.col())
                .u64_val(cell.row())
                .end_arr();
            w.key("point")
                .begin_arr()
                .f64_val(point.x)
                .f64_val(point.y)
                .end_arr();
            w.end_obj();
            print!("{}", w.finish());
            Ok(())
        }
        CurveCmd::Cells { depth, interval } => match interval {
            Some(j) => {
                let iv = ParamInterval::new(depth, j).map_err(|e| validation(e.to_string()))?;
                let cell = cell_of_interval(iv);
                let mut w = JsonWriter::new();
                w.begin_obj();
                w.key("depth").u32_val(depth);
                w.key("interval").u64_val(j);
                w.key("cell")
                    .begin_arr()
                    .u64_val(cell.col())
                    .u64_val(cell.row())
                    .end_arr();
                w.end_obj();
                print!("{}", w.finish());
                Ok(())
            }
            None => {
                if depth > 3 {
                    return Err(validation(format!(
                        "full cell listing is limited to depth 3; pass --interval for depth {depth}"
                    )));
                }
                let mut w = JsonWriter::new();
                w.begin_obj();
                w.key("depth").u32_val(depth);
                w.key("cells").begin_arr();
                for j in 0..wvnb_core::curve::pow9(depth) {
                    let cell = cell_of_interval(ParamInterval::new(depth, j).expect("in range"));
                    w.begin_arr()
                        .u64_val(cell.col())
                        .u64_val(cell.row())
                        .end_arr();
                }
                w.end_arr();
                w.end_obj();
                print!("{}", w.finish());
                Ok(())
            }
        },
        CurveCmd::Surjectivity { depth } => {
            let report = surjectivity_report(depth).map_err(|e| validation(e.to_string()))?;
            println!(
                "{}/{} cells covered, bijection: {}",
                report.covered_cells,
                report.total_cells,
                if report.bijection { "yes" } else { "no" }
            );
            Ok(())
        }
    }
}
