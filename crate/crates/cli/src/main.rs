//! Command line front end.
//!
//! One binary, five subcommands (`constants`, `rotation`, `basins`,
//! `bricks`, `certify`). Every run reads a map-spec file, writes its
//! artifact files into the output directory, prints one summary line and
//! exits with the module's code convention: 0 success/certified/consistent,
//! 2 inconclusive, 3 violated, 64 unreadable input file, 65 invalid spec
//! or configuration.
//!
//! Identical configurations produce byte-identical outputs: all randomness
//! comes from the counter generator seeded by `--rng-seed`, and reductions
//! are ordered independently of `--threads`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dehntwist::basins::{compute_basin_mask, compute_height_profile, BasinSign, Window};
use dehntwist::bricks::{
    build_free_decomposition, build_transition_graph, find_closed_chain, ChainSearch, GraphMode,
};
use dehntwist::certify::{
    boyland_verdict, certify_entropy, check_exactness, test_bounded_displacement, BoylandBudgets,
};
use dehntwist::constants::{compute_constants, BoundMode};
use dehntwist::map::{parse_map_spec, MapSpec};
use dehntwist::rotation::{estimate_rotation_interval, lebesgue_rotation_number, MeasureMethod};
use dehntwist::Error;

#[derive(Parser)]
#[command(name = "dehntwist", about = "Dehn twist torus map toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Map spec file (`key = value` lines).
    #[arg(long)]
    map: PathBuf,
    /// Output directory for artifact files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed of the counter-based generator.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Worker threads (0 = automatic). Never affects outputs.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    ClosedForm,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Lower,
    Upper,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphModeArg {
    Certified,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum GoalArg {
    Entropy,
    Bounded,
    Exactness,
    Boyland,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the constant ledger.
    Constants {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ModeArg::ClosedForm)]
        mode: ModeArg,
        /// Grid resolution when `--mode grid`.
        #[arg(long, default_value_t = 512)]
        grid_res: usize,
    },
    /// Estimate the vertical rotation interval.
    Rotation {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1024)]
        seeds: usize,
        #[arg(long, default_value_t = 10_000)]
        iters: u64,
    },
    /// Compute a half-plane confinement mask and its height profile.
    Basins {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SignArg::Lower)]
        sign: SignArg,
        #[arg(long, default_value_t = 1000)]
        horizon: u32,
        /// Grid resolution `NXxNY`.
        #[arg(long, default_value = "256x256")]
        resolution: String,
        /// Window `YMIN:YMAX` (must contain 0).
        #[arg(long, default_value = "-4:1")]
        window: String,
        /// Confine the backward orbit as well.
        #[arg(long)]
        two_sided: bool,
        /// Keep only components touching the unbounded edge (heuristic).
        #[arg(long)]
        keep_unbounded: bool,
    },
    /// Build a free brick decomposition and transition graph for
    /// g = f^n0 - (0, m0) and search for a closed chain.
    Bricks {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        n0: u32,
        #[arg(long, default_value_t = 1)]
        m0: i64,
        #[arg(long, default_value_t = 0.25)]
        target_diameter: f64,
        #[arg(long, value_enum, default_value_t = GraphModeArg::Certified)]
        mode: GraphModeArg,
    },
    /// Run a certificate pipeline.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        goal: GoalArg,
        #[arg(long, default_value_t = 4096)]
        seeds: usize,
        #[arg(long, default_value_t = 100_000)]
        iters: u64,
        /// Numerator of the tested rotation number (bounded goal).
        #[arg(long, default_value_t = 0)]
        p: i64,
        /// Denominator of the tested rotation number (bounded goal).
        #[arg(long, default_value_t = 1)]
        q: u32,
        /// Circle height for the exactness goal.
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        /// Monte Carlo samples for the exactness goal.
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Check only the positive side in the bounded goal.
        #[arg(long)]
        one_sided: bool,
    },
}

fn read_spec(path: &Path) -> Result<MapSpec, Error> {
    let text = fs::read_to_string(path)?;
    parse_map_spec(&text)
}

fn write_out(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

fn parse_resolution(s: &str) -> Result<(usize, usize), Error> {
    let (a, b) = s
        .split_once('x')
        .ok_or_else(|| Error::Config(format!("resolution must look like 256x256, got `{s}`")))?;
    let nx = a.parse().map_err(|_| Error::Config(format!("bad resolution `{s}`")))?;
    let ny = b.parse().map_err(|_| Error::Config(format!("bad resolution `{s}`")))?;
    Ok((nx, ny))
}

fn parse_window(s: &str) -> Result<Window, Error> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("window must look like -4:1, got `{s}`")))?;
    let lo: f64 = a.parse().map_err(|_| Error::Config(format!("bad window `{s}`")))?;
    let hi: f64 = b.parse().map_err(|_| Error::Config(format!("bad window `{s}`")))?;
    Window::new(lo, hi)
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Constants { common, mode, grid_res } => {
            let spec = read_spec(&common.map)?;
            let mode = match mode {
                ModeArg::ClosedForm => BoundMode::ClosedForm,
                ModeArg::Grid => BoundMode::Grid { resolution: grid_res },
            };
            let report = compute_constants(&spec, mode)?;
            let table = report.table();
            write_out(&common.out, "constants.txt", table.as_bytes())?;
            println!("{}", table.lines().last().unwrap_or_default());
            Ok(0)
        }
        Command::Rotation { common, seeds, iters } => {
            let spec = read_spec(&common.map)?;
            let est = estimate_rotation_interval(&spec, seeds, iters)?;
            write_out(&common.out, "rotation_per_seed.csv", est.per_seed_csv().as_bytes())?;
            write_out(&common.out, "rotation_envelope.csv", est.envelope_csv().as_bytes())?;
            println!("rho_lower {} rho_upper {}", est.lower, est.upper);
            Ok(0)
        }
        Command::Basins {
            common,
            sign,
            horizon,
            resolution,
            window,
            two_sided,
            keep_unbounded,
        } => {
            let spec = read_spec(&common.map)?;
            let sign = match sign {
                SignArg::Lower => BasinSign::Lower,
                SignArg::Upper => BasinSign::Upper,
            };
            let resolution = parse_resolution(&resolution)?;
            let window = parse_window(&window)?;
            let mut mask = compute_basin_mask(&spec, sign, horizon, window, resolution, two_sided)?;
            if keep_unbounded {
                mask.keep_unbounded_components();
            }
            write_out(&common.out, "mask.pgm", &mask.to_pgm())?;
            let profile = compute_height_profile(&mask)?;
            let mut csv = String::new();
            if mask.unbounded_filter {
                csv.push_str("# unbounded-component filter applied (heuristic)\n");
            }
            csv.push_str(&profile.csv());
            write_out(&common.out, "profile.csv", csv.as_bytes())?;
            println!(
                "columns {} defined_everywhere {} oscillation {}",
                resolution.0, profile.defined_everywhere, profile.oscillation
            );
            Ok(0)
        }
        Command::Bricks { common, n0, m0, target_diameter, mode } => {
            let spec = read_spec(&common.map)?;
            let dec = build_free_decomposition(&spec, n0, m0, target_diameter)?;
            write_out(&common.out, "bricks.csv", dec.csv().as_bytes())?;
            let mode = match mode {
                GraphModeArg::Certified => GraphMode::Certified,
                GraphModeArg::Sampled => GraphMode::Sampled,
            };
            let graph = build_transition_graph(&dec, mode);
            write_out(&common.out, "edges.csv", graph.csv().as_bytes())?;
            let outcome = find_closed_chain(&graph)?;
            let (chain_text, chain_summary) = match &outcome {
                ChainSearch::Certificate(cert) => (cert.text(&graph), "certificate"),
                ChainSearch::NoneFound => {
                    ("no closed chain among certified edges\n".to_string(), "none")
                }
                ChainSearch::NoneUncertified(msg) => {
                    (format!("no certificate: {msg}\n"), "none_uncertified")
                }
            };
            write_out(&common.out, "chain.txt", chain_text.as_bytes())?;
            let k_crit = graph
                .k_crit_estimate
                .map(|k| k.to_string())
                .unwrap_or_else(|| "unknown".to_string());
            println!(
                "bricks {} fully_certified {} warnings {} k_crit {} chain {}",
                dec.bricks.len(),
                dec.fully_certified(),
                dec.warnings.len(),
                k_crit,
                chain_summary
            );
            Ok(0)
        }
        Command::Certify { common, goal, seeds, iters, p, q, b, samples, one_sided } => {
            let spec = read_spec(&common.map)?;
            let cert = match goal {
                GoalArg::Entropy => certify_entropy(&spec, seeds, iters, common.rng_seed)?,
                GoalArg::Bounded => {
                    test_bounded_displacement(&spec, p, q, seeds, iters, one_sided, common.rng_seed)?
                }
                GoalArg::Exactness => check_exactness(&spec, b, samples, common.rng_seed)?,
                GoalArg::Boyland => {
                    let budgets = BoylandBudgets {
                        entropy_seeds: seeds,
                        entropy_iter: iters,
                        bounded_seeds: seeds,
                        bounded_iter: iters,
                    };
                    // report the measured drift alongside the verdict
                    let _ = lebesgue_rotation_number(&spec, MeasureMethod::Quadrature, 64, 0)?;
                    boyland_verdict(&spec, budgets, common.rng_seed)?
                }
            };
            write_out(&common.out, "certificate.txt", cert.report().as_bytes())?;
            println!("{}", cert.verdict);
            Ok(cert.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Constants { common, .. }
        | Command::Rotation { common, .. }
        | Command::Basins { common, .. }
        | Command::Bricks { common, .. }
        | Command::Certify { common, .. } => common.threads,
    };
    let outcome = if threads > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    } else {
        run(cli)
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match &err {
                Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 64,
                Error::Io(_) => 66,
                Error::Spec { .. } | Error::Config(_) | Error::Precondition(_) => 65,
                _ => 1,
            };
            ExitCode::from(code as u8)
        }
    }
}
