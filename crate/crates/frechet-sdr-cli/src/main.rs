//! `fsdr` — linear and kernel weighted inverse regression ensemble fits,
//! ladle order determination, simulation designs, and the handwritten-digits
//! pipeline, driven by headerless CSV files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use frechet_sdr::dataio;
use frechet_sdr::error::Error;
use frechet_sdr::evalmetrics::{distance_correlation_sq, trace_correlation};
use frechet_sdr::kwire::{kwire_fit, kwire_insample, kwire_predict, KernelSpec, KwireFit};
use frechet_sdr::ladle::{ladle_estimate_with_rp, ladle_rp_with_log_base};
use frechet_sdr::metrics::{pairwise_distance_matrix, DistanceMatrix, MetricSpec, ResponseSet};
use frechet_sdr::simgen::{
    run_experiment, Case, Model, Scenario, SimDesign, SimMethod,
};
use frechet_sdr::wire::{sufficient_predictors, wire_fit, PredictorMatrix};

#[derive(Parser)]
#[command(
    name = "fsdr",
    version,
    about = "Sufficient dimension reduction for metric-space responses"
)]
struct Cli {
    /// Cap on worker threads (default: all available cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Euclidean,
    GeodesicSphere,
    Wasserstein,
    Isomap,
    Lle,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatArg {
    Trace,
    Dcor,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Wire,
    Kwire,
    Ladle,
}

#[derive(Clone, Copy, ValueEnum)]
enum HalfArg {
    UpperAsX,
    LowerAsX,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    #[value(name = "I", alias = "i")]
    I,
    #[value(name = "II", alias = "ii")]
    II,
    #[value(name = "III", alias = "iii")]
    III,
    #[value(name = "IV", alias = "iv")]
    IV,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    #[value(name = "i")]
    I,
    #[value(name = "ii")]
    Ii,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    PaperDefault,
    S1,
    S2,
    S3,
    S4,
}

/// How a subcommand obtains the response distance matrix: either a
/// precomputed CSV or responses plus a metric.
#[derive(Args)]
struct DistSource {
    /// Precomputed n x n distance matrix CSV
    #[arg(long, conflicts_with_all = ["y", "metric"])]
    dist: Option<PathBuf>,

    /// Response CSV (rows are vectors; for the wasserstein metric, two
    /// columns mu,sigma per row)
    #[arg(long, requires = "metric")]
    y: Option<PathBuf>,

    /// Metric applied to the responses
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,

    /// Neighbor count for isomap/lle
    #[arg(long, default_value_t = 10)]
    k: usize,

    /// Embedding dimension for lle
    #[arg(long, default_value_t = 5)]
    m: usize,

    /// Local Gram regularizer for lle
    #[arg(long, default_value_t = 1e-3)]
    reg: f64,
}

impl DistSource {
    fn load(&self) -> Result<DistanceMatrix, Error> {
        match (&self.dist, &self.y, self.metric) {
            (Some(path), _, _) => dataio::read_distance_csv(path),
            (None, Some(y_path), Some(metric)) => {
                let raw = dataio::read_csv_matrix(y_path)?;
                let (ys, spec) = response_and_spec(raw, metric, self.k, self.m, self.reg)?;
                pairwise_distance_matrix(&ys, &spec)
            }
            _ => Err(Error::Config(
                "provide either --dist D.csv or --y Y.csv with --metric".into(),
            )),
        }
    }
}

fn response_and_spec(
    raw: DMatrix<f64>,
    metric: MetricArg,
    k: usize,
    m: usize,
    reg: f64,
) -> Result<(ResponseSet, MetricSpec), Error> {
    match metric {
        MetricArg::Euclidean => Ok((ResponseSet::euclidean(raw)?, MetricSpec::Euclidean)),
        MetricArg::GeodesicSphere => Ok((ResponseSet::sphere(raw)?, MetricSpec::GeodesicSphere)),
        MetricArg::Wasserstein => {
            if raw.ncols() != 2 {
                return Err(Error::Validation(format!(
                    "wasserstein responses need two columns (mu, sigma), got {}",
                    raw.ncols()
                )));
            }
            let pairs: Vec<(f64, f64)> = (0..raw.nrows())
                .map(|i| (raw[(i, 0)], raw[(i, 1)]))
                .collect();
            Ok((ResponseSet::quantile(pairs)?, MetricSpec::Wasserstein))
        }
        MetricArg::Isomap => Ok((ResponseSet::euclidean(raw)?, MetricSpec::Isomap { k })),
        MetricArg::Lle => Ok((
            ResponseSet::euclidean(raw)?,
            MetricSpec::Lle { k, m, reg },
        )),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit the linear reduction and write the basis as CSV
    FitLinear {
        /// Predictor CSV, one observation per row
        #[arg(long)]
        x: PathBuf,
        #[command(flatten)]
        source: DistSource,
        /// Structural dimension
        #[arg(long)]
        d: usize,
        /// Output basis CSV (p x d)
        #[arg(long)]
        out: PathBuf,
        /// Also write the reduced predictors X * basis next to --out
        #[arg(long)]
        predictors: Option<PathBuf>,
        /// Dump the candidate matrix and singular values next to --out
        #[arg(long)]
        dump_diagnostics: bool,
    },
    /// Fit the kernel reduction and write a fit bundle directory
    FitNonlinear {
        #[arg(long)]
        x: PathBuf,
        #[command(flatten)]
        source: DistSource,
        #[arg(long)]
        d: usize,
        /// Ridge parameter epsilon_n
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        /// Gaussian kernel bandwidth sigma_kappa
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Output directory for the fit bundle
        #[arg(long)]
        out: PathBuf,
        /// Also write the in-sample predictors to the bundle directory
        #[arg(long)]
        dump_diagnostics: bool,
    },
    /// Evaluate a saved nonlinear fit at new predictors
    Predict {
        /// Fit bundle directory written by fit-nonlinear
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the structural dimension with the bootstrap ladle
    Order {
        #[arg(long)]
        x: PathBuf,
        #[command(flatten)]
        source: DistSource,
        /// Bootstrap replicates (default: n)
        #[arg(long)]
        boot: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the f_n/g_n/objective curves as CSV
        #[arg(long)]
        out: Option<PathBuf>,
        /// Logarithm base in the search bound p/log p (natural by default)
        #[arg(long)]
        log_base: Option<f64>,
    },
    /// Run a simulation design and summarize the replicate scores
    Simulate {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long, value_enum, default_value = "wire")]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "paper-default")]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Bootstrap replicates for the ladle (default: n)
        #[arg(long)]
        boot: Option<usize>,
        /// Response noise standard deviation
        #[arg(long, default_value_t = 0.1)]
        noise_sd: f64,
        /// Summary CSV (printed to stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict digit image halves: fit on a training file, evaluate on a
    /// testing file, write sufficient predictors and scatter plots
    Digits {
        /// optdigits-format training file
        #[arg(long)]
        train: PathBuf,
        /// optdigits-format testing file
        #[arg(long)]
        test: PathBuf,
        /// Comma-separated digit classes to keep, e.g. 0,8,9
        #[arg(long, value_delimiter = ',')]
        classes: Vec<u8>,
        #[arg(long, value_enum, default_value = "upper-as-x")]
        half: HalfArg,
        #[arg(long, value_enum, default_value = "kwire")]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "isomap")]
        metric: MetricArg,
        /// Number of sufficient predictors
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 1e-3)]
        reg: f64,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Scatter SVG path; `_train`/`_test` are inserted before the extension
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Output directory for predictor and label CSVs
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compute a response distance matrix and write it as CSV
    Distances {
        #[arg(long)]
        y: PathBuf,
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 1e-3)]
        reg: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print an evaluation statistic for two CSV matrices
    Eval {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum)]
        stat: StatArg,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own usage text; exit status 1 for usage errors
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::FitLinear {
            x,
            source,
            d,
            out,
            predictors,
            dump_diagnostics,
        } => {
            let x = PredictorMatrix::new(dataio::read_csv_matrix(&x)?)?;
            let dist = source.load()?;
            let fit = wire_fit(&x, &dist, d)?;
            for w in &fit.warnings {
                eprintln!("warning: {w}");
            }
            dataio::write_csv_matrix(&out, &fit.basis)?;
            if let Some(pred_path) = predictors {
                dataio::write_csv_matrix(&pred_path, &sufficient_predictors(&x, &fit)?)?;
            }
            if dump_diagnostics {
                dataio::write_csv_matrix(&sibling(&out, "m_hat.csv"), &fit.m_hat)?;
                dataio::write_csv_matrix(
                    &sibling(&out, "singular_values.csv"),
                    &DMatrix::from_column_slice(
                        fit.singular_values.len(),
                        1,
                        fit.singular_values.as_slice(),
                    ),
                )?;
            }
            println!("wrote basis {}x{} to {}", fit.basis.nrows(), d, out.display());
            Ok(())
        }
        Command::FitNonlinear {
            x,
            source,
            d,
            epsilon,
            sigma,
            out,
            dump_diagnostics,
        } => {
            let x = PredictorMatrix::new(dataio::read_csv_matrix(&x)?)?;
            let dist = source.load()?;
            let kernel = KernelSpec::gaussian(sigma)?;
            let fit = kwire_fit(&x, &dist, d, epsilon, &kernel)?;
            fit.save_dir(&out)?;
            if dump_diagnostics {
                dataio::write_csv_matrix(&out.join("insample_predictors.csv"), &kwire_insample(&fit))?;
            }
            println!("wrote fit bundle (d={d}) to {}", out.display());
            Ok(())
        }
        Command::Predict { fit, x, out } => {
            let fit = KwireFit::load_dir(&fit)?;
            let x = dataio::read_csv_matrix(&x)?;
            let preds = kwire_predict(&fit, &x)?;
            dataio::write_csv_matrix(&out, &preds)?;
            println!("wrote {} predictions to {}", preds.nrows(), out.display());
            Ok(())
        }
        Command::Order {
            x,
            source,
            boot,
            seed,
            out,
            log_base,
        } => {
            let x = PredictorMatrix::new(dataio::read_csv_matrix(&x)?)?;
            let dist = source.load()?;
            let n_boot = boot.unwrap_or(x.n());
            let r_p = ladle_rp_with_log_base(x.p(), log_base.unwrap_or(std::f64::consts::E));
            let result = ladle_estimate_with_rp(&x, &dist, n_boot, seed, r_p)?;
            if result.n_boot_completed < result.n_boot {
                eprintln!(
                    "warning: {} of {} bootstrap replicates were degenerate and skipped",
                    result.n_boot - result.n_boot_completed,
                    result.n_boot
                );
            }
            println!("d_hat={}", result.d_hat);
            if let Some(path) = out {
                let mut csv = String::from("k,f_n,g_n,objective\n");
                for k in 0..=result.r_p {
                    csv.push_str(&format!(
                        "{k},{:.17e},{:.17e},{:.17e}\n",
                        result.f_n[k], result.g_n[k], result.objective[k]
                    ));
                }
                std::fs::write(&path, csv).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
            }
            Ok(())
        }
        Command::Simulate {
            model,
            case,
            n,
            p,
            reps,
            method,
            scenario,
            seed,
            epsilon,
            sigma,
            boot,
            noise_sd,
            out,
        } => {
            let design = SimDesign::new(
                match model {
                    ModelArg::I => Model::I,
                    ModelArg::II => Model::II,
                    ModelArg::III => Model::III,
                    ModelArg::IV => Model::IV,
                },
                match case {
                    CaseArg::I => Case::I,
                    CaseArg::Ii => Case::Ii,
                },
                n,
                p,
                match scenario {
                    ScenarioArg::PaperDefault => Scenario::PaperDefault,
                    ScenarioArg::S1 => Scenario::S1,
                    ScenarioArg::S2 => Scenario::S2,
                    ScenarioArg::S3 => Scenario::S3,
                    ScenarioArg::S4 => Scenario::S4,
                },
                seed,
            )?
            .with_noise_sd(noise_sd)?;
            let method = match method {
                MethodArg::Wire => SimMethod::Wire,
                MethodArg::Kwire => SimMethod::Kwire {
                    epsilon_n: epsilon,
                    sigma_kappa: sigma,
                },
                MethodArg::Ladle => SimMethod::Ladle { n_boot: boot },
            };
            let summary = run_experiment(&design, &method, reps)?;
            let csv = summary.to_csv_string();
            match out {
                Some(path) => {
                    std::fs::write(&path, &csv).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    let mut line = String::new();
                    if let Some(r2) = summary.mean_r2 {
                        line.push_str(&format!("mean_r2={r2:.6} "));
                    }
                    if let Some(rho2) = summary.mean_rho2 {
                        line.push_str(&format!("mean_rho2={rho2:.6} "));
                    }
                    if let Some(c) = summary.n_correct {
                        line.push_str(&format!("correct={c}/{reps}"));
                    }
                    println!("{}", line.trim_end());
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Digits {
            train,
            test,
            classes,
            half,
            method,
            metric,
            d,
            k,
            m,
            reg,
            epsilon,
            sigma,
            svg,
            out,
        } => run_digits(DigitsJob {
            train,
            test,
            classes,
            half,
            method,
            metric,
            d,
            k,
            m,
            reg,
            epsilon,
            sigma,
            svg,
            out,
        }),
        Command::Distances {
            y,
            metric,
            k,
            m,
            reg,
            out,
        } => {
            let raw = dataio::read_csv_matrix(&y)?;
            let (ys, spec) = response_and_spec(raw, metric, k, m, reg)?;
            let dist = pairwise_distance_matrix(&ys, &spec)?;
            dataio::write_csv_matrix(&out, dist.values())?;
            println!("wrote {0}x{0} distance matrix to {1}", dist.n(), out.display());
            Ok(())
        }
        Command::Eval { a, b, stat } => {
            let a = dataio::read_csv_matrix(&a)?;
            let b = dataio::read_csv_matrix(&b)?;
            let value = match stat {
                StatArg::Trace => trace_correlation(&a, &b)?,
                StatArg::Dcor => distance_correlation_sq(&a, &b)?,
            };
            println!("{value:?}");
            Ok(())
        }
    }
}

struct DigitsJob {
    train: PathBuf,
    test: PathBuf,
    classes: Vec<u8>,
    half: HalfArg,
    method: MethodArg,
    metric: MetricArg,
    d: usize,
    k: usize,
    m: usize,
    reg: f64,
    epsilon: f64,
    sigma: f64,
    svg: Option<PathBuf>,
    out: PathBuf,
}

fn run_digits(job: DigitsJob) -> Result<(), Error> {
    let orientation = match job.half {
        HalfArg::UpperAsX => dataio::Orientation::UpperAsX,
        HalfArg::LowerAsX => dataio::Orientation::LowerAsX,
    };
    let train_images = dataio::load_optdigits(&job.train, &job.classes)?;
    let test_images = dataio::load_optdigits(&job.test, &job.classes)?;
    if train_images.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no training images in the requested classes in {}",
            job.train.display()
        )));
    }
    println!(
        "train: {} images, test: {} images (classes {:?})",
        train_images.len(),
        test_images.len(),
        job.classes
    );
    let (x_train, y_train, labels_train) = dataio::split_dataset(&train_images, orientation);
    let (x_test, _, labels_test) = dataio::split_dataset(&test_images, orientation);

    let (ys, spec) = match job.metric {
        MetricArg::Euclidean => (ResponseSet::euclidean(y_train)?, MetricSpec::Euclidean),
        MetricArg::Isomap => (
            ResponseSet::euclidean(y_train)?,
            MetricSpec::Isomap { k: job.k },
        ),
        MetricArg::Lle => (
            ResponseSet::euclidean(y_train)?,
            MetricSpec::Lle {
                k: job.k,
                m: job.m,
                reg: job.reg,
            },
        ),
        _ => {
            return Err(Error::Config(
                "digit responses are pixel vectors; use euclidean, isomap, or lle".into(),
            ))
        }
    };
    let dist = pairwise_distance_matrix(&ys, &spec)?;
    let x_train = PredictorMatrix::new(x_train)?;

    let (train_preds, test_preds) = match job.method {
        MethodArg::Wire => {
            let fit = wire_fit(&x_train, &dist, job.d)?;
            for w in &fit.warnings {
                eprintln!("warning: {w}");
            }
            let train_preds = sufficient_predictors(&x_train, &fit)?;
            let test_preds = &x_test * &fit.basis;
            (train_preds, test_preds)
        }
        MethodArg::Kwire => {
            let kernel = KernelSpec::gaussian(job.sigma)?;
            let fit = kwire_fit(&x_train, &dist, job.d, job.epsilon, &kernel)?;
            let train_preds = kwire_insample(&fit);
            let test_preds = kwire_predict(&fit, &x_test)?;
            (train_preds, test_preds)
        }
        MethodArg::Ladle => {
            return Err(Error::Config(
                "the digits pipeline fits wire or kwire; use the order subcommand for ladle".into(),
            ))
        }
    };

    std::fs::create_dir_all(&job.out).map_err(|e| Error::Io {
        path: job.out.clone(),
        source: e,
    })?;
    dataio::write_csv_matrix(&job.out.join("train_predictors.csv"), &train_preds)?;
    dataio::write_csv_matrix(&job.out.join("test_predictors.csv"), &test_preds)?;
    write_labels(&job.out.join("train_labels.csv"), &labels_train)?;
    write_labels(&job.out.join("test_labels.csv"), &labels_test)?;

    if let Some(svg_path) = &job.svg {
        let train_pts = first_two_columns(&train_preds);
        let test_pts = first_two_columns(&test_preds);
        let train_labels: Vec<i64> = labels_train.iter().map(|&l| l as i64).collect();
        let test_labels: Vec<i64> = labels_test.iter().map(|&l| l as i64).collect();
        dataio::emit_scatter_svg(&train_pts, &train_labels, &suffixed(svg_path, "_train"))?;
        if !test_labels.is_empty() {
            dataio::emit_scatter_svg(&test_pts, &test_labels, &suffixed(svg_path, "_test"))?;
        }
    }
    println!("wrote predictors and labels to {}", job.out.display());
    Ok(())
}

fn write_labels(path: &Path, labels: &[u8]) -> Result<(), Error> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// First two predictor columns for plotting; a one-column fit is plotted
/// against zero.
fn first_two_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), 2, |i, j| if j < m.ncols() { m[(i, j)] } else { 0.0 })
}

fn sibling(out: &Path, name: &str) -> PathBuf {
    out.parent().unwrap_or_else(|| Path::new(".")).join(name)
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plot".into());
    let ext = path
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "svg".into());
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}
