//! Batch command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning                                                     |
//! |------|-------------------------------------------------------------|
//! | 0    | success                                                     |
//! | 2    | contract violation: bad arguments, size mismatch in strict mode |
//! | 3    | I/O error reading inputs or writing outputs                 |
//! | 4    | image decode error, malformed batch manifest                |
//! | 5    | batch finished but at least one row failed                  |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::baseline::{self, BaselineSpec};
use crate::distribution::Distribution;
use crate::features::{self, FeatureKind};
use crate::ingest::{self, PixelGrid, Traversal};
use crate::order::{self, CompareOptions, ImageId, Mode, ModeFilter, OrderReport};
use crate::report;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONTRACT: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DECODE: i32 = 4;
pub const EXIT_BATCH_FAILURES: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "imgorder", version, about = "Relative degree of order between grayscale images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare two images across the mode matrix.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        opts: CompareArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write the report here; the headline still goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare every `path_a,path_b` row of a CSV manifest.
    Batch {
        manifest: PathBuf,
        #[command(flatten)]
        opts: CompareArgs,
        /// Format of the per-pair reports written to --report-dir.
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Directory for per-pair reports, named pair_0001.json etc.
        #[arg(long)]
        report_dir: Option<PathBuf>,
        /// Aggregate headline CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the feature histogram of one image as CSV.
    Hist {
        image: PathBuf,
        #[arg(long, value_parser = parse_feature)]
        feature: FeatureKind,
        #[arg(long, value_parser = parse_traversal, default_value = "boustrophedon")]
        traversal: Traversal,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic baseline image as binary PGM.
    Baseline {
        #[command(flatten)]
        baseline: BaselineArgs,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Order of one image against a baseline of the same size.
    Absolute {
        image: PathBuf,
        #[command(flatten)]
        baseline: BaselineArgs,
        /// Compare against the exact i.i.d. uniform density instead of a noise sample.
        #[arg(long)]
        ideal_noise: bool,
        #[arg(long, value_parser = parse_mode, default_value = "gray:mass:first")]
        mode: Mode,
        #[arg(long, default_value_t = 0.0, value_parser = parse_epsilon)]
        epsilon: f64,
    },
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Require equal pixel counts (default).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Allow images of different sizes.
    #[arg(long)]
    lenient: bool,
    /// Zero-bin smoothing for the KL form; 0 reports divergence as inf.
    #[arg(long, default_value_t = 0.0, value_parser = parse_epsilon)]
    epsilon: f64,
    /// Comma-separated feature:renorm:reference triples.
    #[arg(long, conflicts_with = "all_modes")]
    modes: Option<String>,
    #[arg(long)]
    all_modes: bool,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long, value_enum, default_value = "noise")]
    kind: BaselineChoice,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gray level of the constant image.
    #[arg(long, default_value_t = 0)]
    level: u8,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaselineChoice {
    Noise,
    Black,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

fn parse_feature(s: &str) -> Result<FeatureKind, String> {
    FeatureKind::parse(s).map_err(|e| e.to_string())
}

fn parse_traversal(s: &str) -> Result<Traversal, String> {
    Traversal::parse(s).map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).map_err(|e| e.to_string())
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    let e: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if e.is_finite() && e >= 0.0 {
        Ok(e)
    } else {
        Err("epsilon must be finite and non-negative".into())
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Contract(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Decode { path: String, source: Error },
    #[error("malformed manifest: {0}")]
    Manifest(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Contract(_) => EXIT_CONTRACT,
            CliError::Io { .. } => EXIT_IO,
            CliError::Decode { .. } | CliError::Manifest(_) => EXIT_DECODE,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Contract(e.to_string())
    }
}

impl CompareArgs {
    fn options(&self) -> Result<CompareOptions<f64>, CliError> {
        let modes = match (&self.modes, self.all_modes) {
            (Some(list), _) => {
                let modes = Mode::parse_list(list)?;
                if modes.is_empty() {
                    return Err(CliError::Contract("--modes list is empty".into()));
                }
                ModeFilter::Only(modes)
            }
            (None, _) => ModeFilter::All,
        };
        Ok(CompareOptions {
            strict: !self.lenient,
            epsilon: self.epsilon,
            modes,
            traversal: Traversal::Boustrophedon,
        })
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                EXIT_CONTRACT
            } else {
                let _ = write!(stdout, "{}", e.render());
                EXIT_OK
            };
            return code;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Compare {
            a,
            b,
            opts,
            format,
            out,
        } => {
            let options = opts.options()?;
            let report = compare_files(&a, &b, &options)?;
            for w in &report.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            let rendered = render(&report, format);
            match out {
                Some(path) => {
                    write_file(&path, rendered.as_bytes())?;
                    emit(stdout, report::report_text(&report).as_bytes())?;
                }
                None => emit(stdout, rendered.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
        Command::Batch {
            manifest,
            opts,
            format,
            report_dir,
            out,
        } => run_batch(&manifest, &opts.options()?, format, report_dir.as_deref(), out.as_deref(), stdout),
        Command::Hist {
            image,
            feature,
            traversal,
            out,
        } => {
            let grid = load(&image)?.1;
            let seq = ingest::linearize(&grid, traversal);
            let stream = features::extract(&seq, feature)?;
            let csv = report::histogram_csv(&Distribution::<f64>::build(&stream)?);
            match out {
                Some(path) => write_file(&path, csv.as_bytes())?,
                None => emit(stdout, csv.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
        Command::Baseline {
            baseline: args,
            width,
            height,
            out,
        } => {
            let grid = baseline::generate(&args.spec(width, height))?;
            write_file(&out, &ingest::encode_pgm(&grid))?;
            Ok(EXIT_OK)
        }
        Command::Absolute {
            image,
            baseline: args,
            ideal_noise,
            mode,
            epsilon,
        } => {
            let grid = load(&image)?.1;
            let (label, value) = if ideal_noise {
                ("ideal-noise".to_string(), baseline::absolute_order_ideal(&grid, mode, epsilon)?)
            } else {
                let spec = args.spec(grid.width(), grid.height());
                let label = match args.kind {
                    BaselineChoice::Noise => format!("noise seed {}", args.seed),
                    BaselineChoice::Black => format!("constant {}", args.level),
                };
                (label, baseline::absolute_order(&grid, &spec, mode, epsilon, true)?)
            };
            let text = format!(
                "absolute({label}, {mode}): {}\nkl: {}\n",
                report::format_real(value.delta_s),
                report::format_real(value.kl)
            );
            emit(stdout, text.as_bytes())?;
            Ok(EXIT_OK)
        }
    }
}

impl BaselineArgs {
    fn spec(&self, width: usize, height: usize) -> BaselineSpec {
        match self.kind {
            BaselineChoice::Noise => BaselineSpec::noise(width, height, self.seed),
            BaselineChoice::Black => BaselineSpec::constant(width, height, self.level),
        }
    }
}

fn render(report: &OrderReport<f64>, format: Format) -> String {
    match format {
        Format::Json => report::report_json(report),
        Format::Csv => report::report_csv(report),
        Format::Text => report::report_text(report),
    }
}

fn emit(stdout: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    stdout
        .write_all(bytes)
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn load(path: &Path) -> Result<(ImageId, PixelGrid), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let grid = ingest::decode_auto(&bytes, Some(path)).map_err(|source| CliError::Decode {
        path: path.display().to_string(),
        source,
    })?;
    Ok((ImageId::of_file(&path.display().to_string(), &bytes), grid))
}

fn compare_files(
    a: &Path,
    b: &Path,
    options: &CompareOptions<f64>,
) -> Result<OrderReport<f64>, CliError> {
    let (id_a, grid_a) = load(a)?;
    let (id_b, grid_b) = load(b)?;
    Ok(order::compare(&grid_a, &grid_b, options)?.with_sources(id_a, id_b))
}

struct BatchRow {
    path_a: String,
    path_b: String,
}

fn read_manifest(path: &Path) -> Result<Vec<BatchRow>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Manifest(e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "path_a" || &headers[1] != "path_b" {
        return Err(CliError::Manifest(format!(
            "expected header `path_a,path_b`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| CliError::Manifest(format!("row {}: {e}", i + 1)))?;
            if rec.len() != 2 || rec[0].is_empty() || rec[1].is_empty() {
                return Err(CliError::Manifest(format!("row {} needs two paths", i + 1)));
            }
            Ok(BatchRow {
                path_a: rec[0].to_string(),
                path_b: rec[1].to_string(),
            })
        })
        .collect()
}

/// Relative manifest paths are resolved against the manifest's directory.
fn resolve(manifest: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest.parent().unwrap_or(Path::new("")).join(p)
    }
}

fn run_batch(
    manifest: &Path,
    options: &CompareOptions<f64>,
    format: Format,
    report_dir: Option<&Path>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let rows = read_manifest(manifest)?;
    if let Some(dir) = report_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let ext = match format {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Text => "txt",
    };

    let results: Vec<Result<OrderReport<f64>, CliError>> = rows
        .par_iter()
        .map(|row| {
            compare_files(
                &resolve(manifest, &row.path_a),
                &resolve(manifest, &row.path_b),
                options,
            )
        })
        .collect();

    let mut agg = csv::Writer::from_writer(Vec::new());
    let header = ["row", "path_a", "path_b", "status", "headline_delta_s", "headline_kl", "error"];
    agg.write_record(header).expect("in-memory write");
    let mut failures = 0;
    for (i, (row, result)) in rows.iter().zip(&results).enumerate() {
        let n = (i + 1).to_string();
        match result {
            Ok(report) => {
                if let Some(dir) = report_dir {
                    let path = dir.join(format!("pair_{:04}.{ext}", i + 1));
                    write_file(&path, render(report, format).as_bytes())?;
                }
                agg.write_record([
                    n.as_str(),
                    &row.path_a,
                    &row.path_b,
                    "ok",
                    &report::format_real(report.headline.delta_s),
                    &report::format_real(report.headline.kl),
                    "",
                ])
                .expect("in-memory write");
            }
            Err(e) => {
                failures += 1;
                agg.write_record([n.as_str(), &row.path_a, &row.path_b, "error", "", "", &e.to_string()])
                    .expect("in-memory write");
            }
        }
    }
    let bytes = agg.into_inner().expect("flush");
    match out {
        Some(path) => write_file(path, &bytes)?,
        None => emit(stdout, &bytes)?,
    }
    Ok(if failures == 0 { EXIT_OK } else { EXIT_BATCH_FAILURES })
}
