use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thbfit_cli::config::{parse_entries, Entries, RunConfig};
use thbfit_cli::run::run;
use thbfit_cli::synth::peak_samples;
use thbfit_cli::xyz::write_xyz;
use thbfit_cli::{CliError, Result};

#[derive(Parser)]
#[command(name = "thbfit", version, about = "Adaptive hierarchical spline fitting of scattered data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a surface to `x y z` samples.
    Fit(Box<FitArgs>),
    /// Write samples of a sharp Gaussian peak on [-1,1]^2.
    SynthPeak {
        #[arg(long, default_value_t = 16000)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Every flag overrides the matching key of the configuration file.
#[derive(Args)]
struct FitArgs {
    /// Input `x y z` file.
    input: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spline degree, `d` or `dx,dy`.
    #[arg(long)]
    degree: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    max_levels: Option<String>,
    /// `NxM`, `N`, or `auto`.
    #[arg(long)]
    initial_mesh: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    breaks_x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    breaks_y: Option<String>,
    /// `x0,y0,x1,y1` or `auto`.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Rectangle `x0,y0,x1,y1` removed from the domain; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    cut: Vec<String>,
    /// `on`, `off`, or the excursion factor.
    #[arg(long)]
    guard: Option<String>,
    #[arg(long)]
    clean: Option<String>,
    #[arg(long)]
    clean_max_levels: Option<String>,
    #[arg(long)]
    clean_tol: Option<String>,
    #[arg(long)]
    resolution: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    /// `error`, `keep-first`, or `average`.
    #[arg(long)]
    dedup: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

impl FitArgs {
    fn entries(&self) -> Result<Entries> {
        let mut e = match &self.config {
            Some(path) => parse_entries(&fs::read_to_string(path).map_err(|err| CliError::io(path, err))?)?,
            None => Entries::new(),
        };
        let flags = [
            ("input", &self.input),
            ("degree", &self.degree),
            ("tol", &self.tol),
            ("sigma", &self.sigma),
            ("max-levels", &self.max_levels),
            ("initial-mesh", &self.initial_mesh),
            ("breaks-x", &self.breaks_x),
            ("breaks-y", &self.breaks_y),
            ("domain", &self.domain),
            ("guard", &self.guard),
            ("clean", &self.clean),
            ("clean-max-levels", &self.clean_max_levels),
            ("clean-tol", &self.clean_tol),
            ("resolution", &self.resolution),
            ("threads", &self.threads),
            ("dedup", &self.dedup),
            ("out", &self.out),
        ];
        for (key, v) in flags {
            if let Some(v) = v {
                e.insert(key.to_string(), vec![v.clone()]);
            }
        }
        if !self.cut.is_empty() {
            e.insert("cut".to_string(), self.cut.clone());
        }
        Ok(e)
    }
}

fn synth(points: usize, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let data = peak_samples(points, seed)?;
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(&path).map_err(|e| CliError::io(&path, e))?);
            write_xyz(&mut w, &data).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))
        }
        None => {
            let mut w = io::stdout().lock();
            write_xyz(&mut w, &data).map_err(|e| CliError::io("<stdout>".as_ref(), e))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Fit(args) => args
            .entries()
            .and_then(|e| RunConfig::from_entries(&e))
            .and_then(|cfg| run(&cfg, &mut io::stdout().lock()))
            .map(|s| s.exit_code() as u8),
        Command::SynthPeak { points, seed, out } => synth(points, seed, out).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
