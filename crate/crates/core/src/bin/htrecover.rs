use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use htrecover::bench::{probe_map, run_sweep, run_trial, write_sweep_csv, Algorithm, ExperimentSpec, ProbeRequest, SweepSummary};
use htrecover::decomposition::io::{read_dense, DecompositionFile};
use htrecover::decomposition::{hosvd, truncate_hosvd, tt_svd, Format, RankTuple, TtTarget};
use htrecover::measurement::MapKind;
use htrecover::recovery::StepRule;
use htrecover::Shape;

#[derive(Parser)]
#[command(name = "htrecover", version, about = "Low-rank tensor recovery experiments")]
struct Cli {
    /// Worker threads for trials (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Success rate over a grid of measurement percentages.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Percentages n̄, comma separated; m = ceil(N·n̄/100).
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        /// CSV output; a JSON summary is written next to it. Stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A single trial, printed as JSON.
    Trial {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        n_bar: f64,
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Empirical restricted-isometry probe.
    Probe {
        #[arg(long, default_value = "10x10x10")]
        shape: String,
        #[arg(long, default_value = "1,1")]
        rank: String,
        #[arg(long, default_value = "tt")]
        format: Format,
        #[arg(long, default_value = "gaussian")]
        map: MapKind,
        /// Measurement counts, comma separated.
        #[arg(long = "m", value_delimiter = ',', required = true)]
        m_grid: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        draws: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV of δ̂ per draw; the JSON report goes next to it. Stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decompose a dense tensor given as {"shape": [...], "values": [...]}.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "tt")]
        format: Format,
        /// Target rank, comma separated; exact decomposition if omitted.
        #[arg(long)]
        rank: Option<String>,
    },
    /// Print the version.
    Version,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment spec; flags given explicitly override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Mode sizes, e.g. 10x10x10 or 6,10,15.
    #[arg(long)]
    shape: Option<String>,
    /// Rank of the generated tensors, e.g. 2,2,2.
    #[arg(long)]
    rank: Option<String>,
    /// Solver format.
    #[arg(long)]
    format: Option<Format>,
    /// Generator: "tucker" (default) or "matched" to the solver format.
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    map: Option<MapKind>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// "steepest" (default), "tangent" (steepest along the tangent-projected
    /// gradient) or a fixed step such as "1.0".
    #[arg(long)]
    step: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Success threshold on the true error ‖u − û‖.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split([',', 'x', 'X'])
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad integer {t:?} in {s:?}")))
        .collect()
}

impl ExperimentArgs {
    fn build(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.spec {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentSpec::default(),
        };
        if let Some(s) = &self.shape {
            spec.shape = Shape::new(parse_list(s)?)?;
        }
        if let Some(f) = self.format {
            spec.format = f;
        }
        let generator = match self.generator.as_deref() {
            None | Some("tucker") | Some("paper") => Format::Tucker,
            Some("matched") => spec.format,
            Some(other) => bail!("unknown generator {other:?} (expected tucker or matched)"),
        };
        if let Some(r) = &self.rank {
            spec.rank = RankTuple::new(generator, parse_list(r)?)?;
        }
        if let Some(m) = self.map {
            spec.map = m;
        }
        if let Some(a) = self.algorithm {
            spec.algorithm = a;
        }
        if let Some(s) = &self.step {
            spec.step_rule = match s.as_str() {
                "steepest" => StepRule::Steepest,
                "tangent" => StepRule::SteepestTangent,
                fixed => StepRule::Fixed(fixed.parse().with_context(|| format!("bad step {fixed:?}"))?),
            };
        }
        if let Some(t) = self.trials {
            spec.trials = t;
        }
        if let Some(m) = self.max_iter {
            spec.max_iter = m;
        }
        if let Some(t) = self.tol {
            spec.success_tol = t;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        Ok(spec)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush().with_context(|| format!("writing {}", path.display()))
}

fn sweep(exp: &ExperimentArgs, grid: &[f64], out: Option<&Path>) -> Result<()> {
    let mut spec = exp.build()?;
    if !grid.is_empty() {
        spec.grid = grid.to_vec();
    }
    spec.validate()?;
    let result = run_sweep(&spec)?;
    let summary = SweepSummary::new(&spec, &result);
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write_sweep_csv(&result.points, &mut w)?;
            w.flush().with_context(|| format!("writing {}", path.display()))?;
            write_json(&summary, &path.with_extension("json"))?;
        }
        None => write_sweep_csv(&result.points, io::stdout().lock())?,
    }
    let show = |p: Option<f64>| p.map_or("-".to_string(), |v| v.to_string());
    eprintln!("pct_max = {}, pct_min = {}", show(summary.pct_max), show(summary.pct_min));
    Ok(())
}

fn decompose(input: &Path, output: &Path, format: Format, rank: Option<&str>) -> Result<()> {
    let u = read_dense(input)?;
    let file: DecompositionFile = match (format, rank) {
        (Format::Tucker, None) => (&hosvd(&u)).into(),
        (Format::Tucker, Some(r)) => (&truncate_hosvd(&u, &RankTuple::tucker(parse_list(r)?)?)?).into(),
        (Format::Tt, None) => (&tt_svd(&u, &TtTarget::Exact)?).into(),
        (Format::Tt, Some(r)) => (&tt_svd(&u, &TtTarget::Ranks(RankTuple::tt(parse_list(r)?)?))?).into(),
    };
    file.write(output)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep { exp, grid, out } => sweep(&exp, &grid, out.as_deref()),
        Command::Trial { exp, n_bar, index } => {
            let spec = exp.build()?;
            spec.validate()?;
            let record = run_trial(&spec, n_bar, index)?;
            println!("{}", serde_json::to_string_pretty(&record)?);
            Ok(())
        }
        Command::Probe {
            shape,
            rank,
            format,
            map,
            m_grid,
            draws,
            samples,
            delta,
            eps,
            seed,
            out,
        } => {
            let req = ProbeRequest {
                shape: Shape::new(parse_list(&shape)?)?,
                rank: RankTuple::new(format, parse_list(&rank)?)?,
                map,
                m_grid,
                draws,
                samples,
                delta,
                eps,
                seed,
            };
            let report = probe_map(&req)?;
            match out {
                Some(path) => {
                    let mut w = create(&path)?;
                    report.write_csv(&mut w)?;
                    w.flush()?;
                    write_json(&report, &path.with_extension("json"))?;
                }
                None => report.write_csv(io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Decompose {
            input,
            output,
            format,
            rank,
        } => decompose(&input, &output, format, rank.as_deref()),
        Command::Version => {
            println!("htrecover {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be >= 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    pool.install(|| run(cli))
}
