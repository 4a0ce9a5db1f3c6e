//! Command-line front end: declarative TOML config plus per-flag overrides,
//! subcommands for each stage of the pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use confapprox::capacity::{capacity, CapacityProblem};
use confapprox::decomposition::build_cells;
use confapprox::layer::{build_layer, C_GEO_HARD_DEFAULT};
use confapprox::map::ConformalMap;
use confapprox::pipeline::{run, RunConfig};
use confapprox::svg::render_to_file;

#[derive(Parser)]
#[command(name = "confapprox", version, about = "Conformal decomposition and Sobolev approximation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML config file; flags below override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    map_param: Option<f64>,
    /// field spec, e.g. const:1, re, powerdist:0:0.5, loglog:0
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    /// comma-separated levels, e.g. 3,4,5
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<u32>>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    quad_density: Option<usize>,
    #[arg(long)]
    capacity_grid: Option<usize>,
    /// RNG seed (required: every run involves seeded sampling)
    #[arg(long)]
    seed: u64,
    /// output directory (env CONFAPPROX_OUT overrides)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig, String> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                toml::from_str::<RunConfig>(&text).map_err(|e| format!("bad config: {e}"))?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = &self.map {
            config.map = v.clone();
        }
        if let Some(v) = self.map_param {
            config.map_param = Some(v);
        }
        if let Some(v) = &self.field {
            config.field = v.clone();
        }
        if let Some(v) = self.p {
            config.p = v;
        }
        if let Some(v) = &self.m {
            config.m_list = v.clone();
        }
        if let Some(v) = self.n_max {
            config.n_max = v;
        }
        if let Some(v) = self.quad_density {
            config.quad_density = v;
        }
        if let Some(v) = self.capacity_grid {
            config.capacity_grid = v;
        }
        config.seed = self.seed;
        if let Some(v) = &self.out {
            config.output_dir = v.clone();
        }
        if let Ok(dir) = std::env::var("CONFAPPROX_OUT") {
            config.output_dir = PathBuf::from(dir);
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the dyadic decomposition and boundary layer, write the SVG
    Decompose(ConfigArgs),
    /// Full Theorem 1.1 pipeline: partition, approximants, convergence
    Approximate(ConfigArgs),
    /// Capacity solver: either a ring problem or the full §2 suite
    Capacity {
        #[command(flatten)]
        common: ConfigArgs,
        /// solve the ring problem (r R), print the value
        #[arg(long, num_args = 2)]
        ring: Option<Vec<f64>>,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Run all §2/§3 property suites and report the bands
    Verify(ConfigArgs),
    /// Render the two-panel decomposition figure only
    Render {
        #[command(flatten)]
        common: ConfigArgs,
        /// output SVG path
        #[arg(long, default_value = "decomposition.svg")]
        file: PathBuf,
    },
}

fn fail(stage: &str, err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error in {stage}: {err}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Decompose(args) | Command::Verify(args) | Command::Approximate(args) => {
            let config = match args.build() {
                Ok(c) => c,
                Err(e) => return fail("config", e),
            };
            match run(&config) {
                Ok(summary) => {
                    println!(
                        "map={} field={} p={} pass={}",
                        summary.config.map, summary.config.field, summary.config.p, summary.pass
                    );
                    for r in &summary.convergence {
                        println!(
                            "m={} w1p_error={:.6e} tail_energy={:.6e}",
                            r.m, r.w1p_error, r.tail_energy
                        );
                    }
                    println!("artifacts in {}", summary.config.output_dir.display());
                    if summary.pass {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("verification bands failed; see summary.json");
                        ExitCode::FAILURE
                    }
                }
                Err(e) => fail("pipeline", e),
            }
        }
        Command::Capacity { common, ring, grid } => {
            if let Some(ring) = ring {
                let problem = match CapacityProblem::ring(ring[0], ring[1], grid) {
                    Ok(p) => p,
                    Err(e) => return fail("capacity", e),
                };
                match capacity(&problem) {
                    Ok(result) => {
                        println!(
                            "cap(B(0,{}), |x|>={}, grid {grid}) = {:.6}",
                            ring[0], ring[1], result.value
                        );
                        ExitCode::SUCCESS
                    }
                    Err(e) => fail("capacity", e),
                }
            } else {
                let config = match common.build() {
                    Ok(c) => c,
                    Err(e) => return fail("config", e),
                };
                let map = match ConformalMap::by_name(&config.map, config.map_param) {
                    Ok(m) => m,
                    Err(e) => return fail("capacity", e),
                };
                match confapprox::capacity::verify_estimates(&map, grid) {
                    Ok(report) => {
                        println!("ring ratios: {:?}", report.ring_ratios);
                        println!("monotone: {}", report.monotone_ok);
                        println!("lower bound: {:.4}", report.lower_bound);
                        for (name, r) in &report.invariance_ratios {
                            println!("invariance {name}: {r:.4}");
                        }
                        ExitCode::SUCCESS
                    }
                    Err(e) => fail("capacity", e),
                }
            }
        }
        Command::Render { common, file } => {
            let config = match common.build() {
                Ok(c) => c,
                Err(e) => return fail("config", e),
            };
            let result = (|| {
                let map = ConformalMap::by_name(&config.map, config.map_param)?;
                let m = config.m_list[0];
                let mut decomp = build_cells(m)?;
                decomp.compute_metrics(&map, config.metric_density)?;
                let layer = build_layer(
                    &map,
                    &decomp,
                    config.n_max,
                    config.k_samples,
                    C_GEO_HARD_DEFAULT,
                )?;
                render_to_file(&map, &decomp, &layer, &file)
            })();
            match result {
                Ok(()) => {
                    println!("wrote {}", file.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail("render", e),
            }
        }
    }
}
