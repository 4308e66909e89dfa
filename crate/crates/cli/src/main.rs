use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use optsub_core::dist::{Family, RngStream};
use optsub_core::estimation::Subdata;
use optsub_core::linalg::csv_io::{read_cov_csv_path, read_data_csv_path};
use optsub_core::select::{self, CovSource, Method, SelectorConfig, SubsampleSize};
use optsub_core::sim::{
    self, bench_complexity, emit_plot_data, parse_count, plot_script, run_experiment, summarize, theory_rows,
    write_matrix_summary_csv, write_records_csv, write_summary_csv, write_theory_csv, BenchConfig,
    ExperimentConfig, FigureId, PlotSeries,
};
use optsub_core::{Error, Result};

#[derive(Parser)]
#[command(name = "optsub", version, about = "D-optimal subsampling for linear regression on large data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Normal,
    T,
}

fn family(arg: FamilyArg, nu: f64) -> Family {
    match arg {
        FamilyArg::Normal => Family::Normal,
        FamilyArg::T => Family::StudentT { nu },
    }
}

#[derive(Subcommand)]
enum Command {
    /// Design quantities (threshold, second moment, uniform efficiency) over a grid.
    Theory {
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,50")]
        d_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.2,0.5")]
        alpha_list: Vec<f64>,
        #[arg(long, value_enum, default_value = "normal")]
        family: FamilyArg,
        #[arg(long, default_value_t = 3.0)]
        nu: f64,
        /// Write to this file instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Select a subsample from a CSV data file.
    Select {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        method: Method,
        #[arg(long, conflicts_with = "alpha", required_unless_present = "alpha")]
        k: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        /// `known:PATH`, `estimated`, or `pilot:FRACTION`.
        #[arg(long, default_value = "estimated")]
        cov: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Family assumed by the threshold rule.
        #[arg(long, value_enum, default_value = "normal")]
        family: FamilyArg,
        #[arg(long, default_value_t = 3.0)]
        nu: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a simulation study described by a key = value config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the three deterministic selectors against n.
    Bench {
        #[arg(long, default_value_t = 50)]
        d: usize,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 1000)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "100000,200000,500000,1000000")]
        n_list: Vec<String>,
        #[arg(long, default_value_t = 7)]
        repeats: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_cov(spec: &str) -> Result<CovSource> {
    match spec.split_once(':') {
        None if spec == "estimated" => Ok(CovSource::Estimated),
        Some(("known", path)) => Ok(CovSource::Known(read_cov_csv_path(path)?)),
        Some(("pilot", frac)) => frac
            .parse()
            .map(CovSource::EstimatedOnPilot)
            .map_err(|_| Error::Config(format!("cannot parse pilot fraction {frac:?}"))),
        _ => Err(Error::Config(format!(
            "--cov must be known:PATH, estimated or pilot:FRACTION, got {spec:?}"
        ))),
    }
}

fn count(s: &str) -> Result<usize> {
    parse_count(s).ok_or_else(|| Error::Config(format!("cannot parse {s:?} as a count")))
}

fn open(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Theory {
            d_list,
            alpha_list,
            family: f,
            nu,
            output,
        } => {
            let fam = family(f, nu);
            fam.validate().map_err(|e| Error::Config(e.to_string()))?;
            if d_list.contains(&0) {
                return Err(Error::Config("d must be positive".into()));
            }
            if let Some(a) = alpha_list.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
                return Err(Error::Config(format!("alpha must lie in (0, 1), got {a}")));
            }
            let text = write_theory_csv(&theory_rows(fam, &d_list, &alpha_list)?);
            match output {
                Some(p) => fs::write(p, text)?,
                None => io::stdout().write_all(text.as_bytes())?,
            }
        }
        Command::Select {
            input,
            method,
            k,
            alpha,
            cov,
            seed,
            family: f,
            nu,
            output,
        } => {
            let size = match (k, alpha) {
                (Some(k), _) => SubsampleSize::K(count(&k)?),
                (None, Some(a)) => SubsampleSize::Alpha(a),
                (None, None) => return Err(Error::Config("one of --k or --alpha is required".into())),
            };
            let config = SelectorConfig {
                method,
                size,
                cov_source: parse_cov(&cov)?,
                family: family(f, nu),
            };
            config.validate().map_err(|e| Error::Config(e.to_string()))?;
            let x = read_data_csv_path(&input)?;
            let result = select::select(&x, &config, &mut RngStream::new(seed, 0))?;
            let mut w = open(&output)?;
            writeln!(
                w,
                "# k_achieved={}; elapsed_ms={:.3}",
                result.k_achieved,
                result.elapsed.as_secs_f64() * 1e3
            )?;
            writeln!(w, "index")?;
            for i in &result.indices {
                writeln!(w, "{i}")?;
            }
            w.flush()?;
        }
        Command::Simulate { config, out } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))?;
            let cfg = ExperimentConfig::parse(&text)?;
            fs::create_dir_all(&out)?;
            simulate(&cfg, &out)?;
        }
        Command::Bench {
            d,
            rho,
            k,
            n_list,
            repeats,
            seed,
        } => {
            let config = BenchConfig {
                d,
                rho,
                k,
                n_list: n_list.iter().map(|s| count(s)).collect::<Result<_>>()?,
                repeats,
                seed,
            };
            let report = bench_complexity(&config)?;
            let mut w = io::stdout().lock();
            writeln!(w, "method,n,median_ms")?;
            for r in &report.rows {
                writeln!(w, "{},{},{:.3}", r.method, r.n, r.median_ms)?;
            }
            for (m, s) in &report.slopes {
                writeln!(w, "# slope {m} {s:.3}")?;
            }
            writeln!(w, "# simplified_faster {}", report.simplified_faster)?;
        }
    }
    Ok(())
}

/// Grid of proportions for the theory figures.
const FIGURE_ALPHAS: [f64; 12] = [0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 0.95];
const FIGURE_DIMS: [usize; 4] = [2, 5, 10, 50];

fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let output = run_experiment(cfg)?;
    write_records_csv(&output.records, open(&out.join("records.csv"))?)?;
    let summary = summarize(&output.records)?;
    write_summary_csv(&summary, open(&out.join("summary.csv"))?)?;
    write_matrix_summary_csv(&output.matrix_aggregates, open(&out.join("matrix_summary.csv"))?)?;

    let mut figures = Vec::new();
    let theory = theory_rows(cfg.family, &FIGURE_DIMS, &FIGURE_ALPHAS)?;
    for fig in [FigureId::SecondMoment, FigureId::UniformEfficiency] {
        emit_plot_data(&PlotSeries::Theory(&theory), fig, out)?;
        figures.push(fig);
    }
    if !cfg.mse_d_list.is_empty() {
        let rows = sim::mse_study(cfg)?;
        emit_plot_data(&PlotSeries::Mse(&rows), FigureId::MseApprox, out)?;
        figures.push(FigureId::MseApprox);
    }
    let det_fig = match cfg.family {
        Family::Normal => FigureId::NormalDet,
        Family::StudentT { .. } => FigureId::TDet,
    };
    emit_plot_data(&PlotSeries::Summary(&summary), det_fig, out)?;
    figures.push(det_fig);
    if cfg.methods.contains(&Subdata::Select(Method::DOptSimplified)) {
        emit_plot_data(&PlotSeries::Summary(&summary), FigureId::SimplifiedDet, out)?;
        figures.push(FigureId::SimplifiedDet);
    }
    figures.sort_by_key(|f| FigureId::ALL.iter().position(|g| g == f));
    fs::write(out.join("plotscript.txt"), plot_script(&figures))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
