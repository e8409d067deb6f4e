use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use polyreach::baseline::{compare, Comparison};
use polyreach::fixtures::{fixture, FixtureShape, Pattern, DEFAULT_FIXTURE_SEED};
use polyreach::io::{read_patterns, read_samples, write_comparisons, write_patterns, write_samples, McDumpWriter};
use polyreach::montecarlo::{enclosure_percentage, monte_carlo, McConfig, DEFAULT_SAMPLES};
use polyreach::polyzono::DEFAULT_MAX_GENERATORS;
use polyreach::variation::{fit_model, SynthCircuit};
use polyreach::verifier::{AccuracySummary, PropagationOptions, VerificationTask, Verifier, DEFAULT_MAX_DEPENDENT};
use polyreach::{Error, NetworkSpec, VariationModel};

#[derive(Parser)]
#[command(name = "polyreach", version, about = "Reachability analysis of analog neural networks under process variation")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true, env = "POLYREACH_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit cubic variation surfaces to measured samples.
    Fit {
        samples: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// Override the estimated standard deviation of φ₁.
        #[arg(long, requires = "sigma2")]
        sigma1: Option<f64>,
        #[arg(long, requires = "sigma1")]
        sigma2: Option<f64>,
    },
    /// Verify classification of every pattern under process variation.
    Verify {
        #[command(flatten)]
        inputs: Inputs,
        /// Write the per-pattern reports as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Include every layer's hull in the report.
        #[arg(long)]
        layer_hulls: bool,
    },
    /// Monte-Carlo containment check of the computed output hulls.
    Mc {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = DEFAULT_SAMPLES as u64, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        /// Draw the process parameters only inside their domains.
        #[arg(long)]
        truncated: bool,
        /// Write every sample to this CSV file.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare polynomial-zonotope and zonotope output hulls.
    Compare {
        #[command(flatten)]
        inputs: Inputs,
        /// CSV destination (default: stdout).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic circuit samples.
    Synth {
        #[arg(long, short)]
        out: PathBuf,
        /// Samples per code and variant.
        #[arg(long, default_value_t = 200)]
        per_code: usize,
        #[arg(long, default_value_t = SynthCircuit::DEFAULT_NOISE)]
        noise: f64,
        #[arg(long, default_value_t = SynthCircuit::DEFAULT_SIGMA)]
        sigma1: f64,
        #[arg(long, default_value_t = SynthCircuit::DEFAULT_SIGMA)]
        sigma2: f64,
        /// Also write the generating model.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Write the fixture networks, patterns and a zero-variation model.
    Fixtures {
        #[arg(long, short)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 50)]
        patterns: usize,
        /// Network seed (independent of --seed).
        #[arg(long, default_value_t = DEFAULT_FIXTURE_SEED)]
        fixture_seed: u64,
    },
}

#[derive(Args)]
struct Inputs {
    net: PathBuf,
    coeffs: PathBuf,
    patterns: PathBuf,
    /// Domain multiplier k_σ (default: the value stored in the model).
    #[arg(long)]
    sigma_mult: Option<f64>,
    /// L∞ input perturbation radius.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Generator budget per layer.
    #[arg(long, default_value_t = DEFAULT_MAX_GENERATORS)]
    max_gens: usize,
    /// Abort when one multiplication would create more generators.
    #[arg(long, default_value_t = DEFAULT_MAX_DEPENDENT)]
    max_dependent: usize,
}

struct Loaded {
    net: NetworkSpec,
    model: VariationModel,
    patterns: Vec<Pattern>,
    options: PropagationOptions,
    epsilon: f64,
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: polyreach::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        Error::ResourceLimit(_) => CliError::Resource(e.to_string()),
        other => CliError::Usage(format!("{}: {other}", path.display())),
    })
}

impl Inputs {
    fn load(&self) -> Result<Loaded, CliError> {
        let net_text = std::fs::read_to_string(&self.net).map_err(|e| CliError::Usage(format!("{}: {e}", self.net.display())))?;
        let net = in_file(&self.net, NetworkSpec::from_json(&net_text))?;
        let coeff_text =
            std::fs::read_to_string(&self.coeffs).map_err(|e| CliError::Usage(format!("{}: {e}", self.coeffs.display())))?;
        let mut model = in_file(&self.coeffs, VariationModel::from_json(&coeff_text))?;
        if let Some(k) = self.sigma_mult {
            if !(k.is_finite() && k >= 0.0) {
                return Err(CliError::Usage(format!("--sigma-mult must be non-negative, got {k}")));
            }
            model.sigma_mult = k;
        }
        let patterns = in_file(&self.patterns, read_patterns(open(&self.patterns)?))?;
        if patterns.is_empty() {
            return Err(CliError::Usage(format!("{}: no patterns", self.patterns.display())));
        }
        for (i, p) in patterns.iter().enumerate() {
            if p.x.len() != net.input_dim {
                return Err(CliError::Usage(format!(
                    "pattern {i} has {} inputs, network expects {}",
                    p.x.len(),
                    net.input_dim
                )));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(CliError::Usage(format!("--epsilon must be non-negative, got {}", self.epsilon)));
        }
        Ok(Loaded {
            net,
            model,
            patterns,
            options: PropagationOptions {
                max_gens: self.max_gens,
                max_dependent: self.max_dependent,
                ..Default::default()
            },
            epsilon: self.epsilon,
        })
    }
}

impl Loaded {
    fn tasks(&self) -> Vec<VerificationTask> {
        self.patterns
            .iter()
            .map(|p| VerificationTask {
                pattern: p.x.clone(),
                epsilon: self.epsilon,
                label: p.label,
            })
            .collect()
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Resource(String),
    /// Stdout was closed by the reader.
    Closed,
}

/// `println!` that reports a closed stdout instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout(), $($arg)*)?
    };
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ResourceLimit(_) => CliError::Resource(e.to_string()),
            Error::Io(io) => io.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return CliError::Closed;
        }
        CliError::Usage(e.to_string())
    }
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    sigma_mult: f64,
    epsilon: f64,
    #[serde(flatten)]
    summary: &'a AccuracySummary,
}

#[derive(Serialize)]
struct McPattern {
    pattern: usize,
    enclosure: f64,
}

#[derive(Serialize)]
struct McOutput {
    seed: u64,
    samples: u64,
    truncated: bool,
    sigma_mult: f64,
    average_enclosure: f64,
    patterns: Vec<McPattern>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Fit {
            samples,
            out,
            sigma1,
            sigma2,
        } => {
            let rows = in_file(&samples, read_samples(open(&samples)?))?;
            let (model, outcomes) = in_file(&samples, fit_model(&rows, sigma1.zip(sigma2)))?;
            out!("code,variant,samples,residual_half_width");
            for o in &outcomes {
                out!("{},{},{},{:.6e}", o.code, o.kind, o.samples, o.residual_half_width);
            }
            write_json(&out, &model)?;
            eprintln!(
                "fitted {} surfaces (sigma1 {:.6}, sigma2 {:.6}) -> {}",
                outcomes.len(),
                model.sigma1,
                model.sigma2,
                out.display()
            );
        }
        Command::Verify {
            inputs,
            report,
            layer_hulls,
        } => {
            let mut l = inputs.load()?;
            l.options.layer_hulls = layer_hulls;
            let v = Verifier::new(&l.net, &l.model, l.options)?;
            let summary = v.verified_accuracy(&l.tasks())?;
            for (i, r) in summary.reports.iter().enumerate() {
                out!(
                    "pattern {i}: label {} nominal {} {} ({:.3} s)",
                    r.label,
                    r.nominal_class,
                    if r.verified { "verified" } else { "unverified" },
                    r.wall_time
                );
            }
            out!(
                "verified accuracy {:.2}% (nominal {:.2}%) over {} patterns at k_sigma {}",
                100.0 * summary.verified_accuracy,
                100.0 * summary.nominal_accuracy,
                summary.patterns,
                l.model.sigma_mult
            );
            if let Some(path) = report {
                write_json(
                    &path,
                    &VerifyOutput {
                        sigma_mult: l.model.sigma_mult,
                        epsilon: l.epsilon,
                        summary: &summary,
                    },
                )?;
            }
        }
        Command::Mc {
            inputs,
            samples,
            truncated,
            dump,
            report,
        } => {
            let l = inputs.load()?;
            let v = Verifier::new(&l.net, &l.model, l.options)?;
            let mut dump = dump.as_deref().map(create).transpose()?.map(McDumpWriter::new);
            let mut rows = Vec::new();
            for (i, p) in l.patterns.iter().enumerate() {
                let hull = v.propagate(&p.x, l.epsilon)?.output.interval_hull();
                let cfg = McConfig {
                    samples: samples as usize,
                    seed: cli.seed.wrapping_add(i as u64),
                    truncated,
                    epsilon: l.epsilon,
                };
                let draws = monte_carlo(v.layers(), &l.model, &p.x, &cfg)?;
                let outputs: Vec<Vec<f64>> = draws.iter().map(|s| s.output.clone()).collect();
                let pct = enclosure_percentage(&outputs, &hull)?;
                out!("pattern {i}: enclosure {:.2}%", 100.0 * pct);
                if let Some(d) = dump.as_mut() {
                    d.write(i, &draws)?;
                }
                rows.push(McPattern {
                    pattern: i,
                    enclosure: pct,
                });
            }
            if let Some(d) = dump {
                d.finish()?;
            }
            let avg = rows.iter().map(|r| r.enclosure).sum::<f64>() / rows.len() as f64;
            out!("average enclosure {:.2}% over {} patterns", 100.0 * avg, rows.len());
            if let Some(path) = report {
                write_json(
                    &path,
                    &McOutput {
                        seed: cli.seed,
                        samples,
                        truncated,
                        sigma_mult: l.model.sigma_mult,
                        average_enclosure: avg,
                        patterns: rows,
                    },
                )?;
            }
        }
        Command::Compare { inputs, out } => {
            let l = inputs.load()?;
            let rows = l
                .tasks()
                .par_iter()
                .map(|t| compare(&l.net, &l.model, t, l.options))
                .collect::<polyreach::Result<Vec<Comparison>>>()?;
            match out {
                Some(path) => write_comparisons(create(&path)?, &rows)?,
                None => write_comparisons(std::io::stdout().lock(), &rows)?,
            }
        }
        Command::Synth {
            out,
            per_code,
            noise,
            sigma1,
            sigma2,
            model_out,
        } => {
            for (name, v) in [("--noise", noise), ("--sigma1", sigma1), ("--sigma2", sigma2)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CliError::Usage(format!("{name} must be non-negative, got {v}")));
                }
            }
            let synth = SynthCircuit::new(cli.seed).with_noise(noise).with_sigmas(sigma1, sigma2);
            let rows = synth.samples(per_code);
            write_samples(create(&out)?, &rows)?;
            if let Some(path) = model_out {
                write_json(&path, &synth.model())?;
            }
            eprintln!("wrote {} samples to {}", rows.len(), out.display());
        }
        Command::Fixtures {
            out_dir,
            patterns,
            fixture_seed,
        } => {
            std::fs::create_dir_all(&out_dir)?;
            for shape in FixtureShape::ALL {
                let f = fixture(shape, fixture_seed, patterns);
                write_json(&out_dir.join(format!("{shape}.net.json")), &f.net)?;
                write_patterns(create(&out_dir.join(format!("{shape}.patterns.csv")))?, &f.patterns)?;
            }
            write_json(&out_dir.join("nominal.coeffs.json"), &VariationModel::nominal())?;
            eprintln!("wrote fixtures to {}", out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) | Err(CliError::Closed) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Resource(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
