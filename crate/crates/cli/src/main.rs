use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use certipose::bench::{
    counterexample_fixture, generate_random_graph, monte_carlo, remove_node_compose, scale_translations,
    GeneratorConfig, MonteCarloConfig, SolverSet,
};
use certipose::dual::{certify, solve_dual, DualOptions, Status};
use certipose::g2o::{parse_g2o, G2oDocument, G2oGraph, ParseOptions};
use certipose::graph::{spanning_tree_solution, PoseAssignment, PoseGraph};
use certipose::matrices::build_complex_matrix;
use certipose::refine::{gauss_newton, rotation_first_init, RefineOptions};
use certipose::report::{spectrum_head_len, CertificateReport};
use certipose::spectral::{hermitian_eigen, DEFAULT_ZERO_THRESHOLD_SCALE};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

const EXIT_UNKNOWN: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "certipose", version, about = "Certifiable planar pose graph optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the dual problem and report whether the estimate is certified
    /// optimal. Exit 0 if optimal, 2 if unknown.
    Certify {
        /// g2o input; stdin when omitted or `-`.
        input: Option<PathBuf>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write the estimate as a g2o file.
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Treat unknown tags and non-identity information as errors.
        #[arg(long)]
        strict: bool,
    },
    /// Print the smallest eigenvalues of the complex pose graph matrix.
    Spectrum {
        input: Option<PathBuf>,
        /// Use the penalized matrix at the dual optimum.
        #[arg(long)]
        penalized: bool,
        /// Number of eigenvalues to print (default min(6, 2n-1)).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        strict: bool,
    },
    /// Generate a random pose graph; vertices hold the ground truth.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        pc: f64,
        #[arg(long, default_value_t = 0.1)]
        sigma_delta: f64,
        #[arg(long, default_value_t = 0.1)]
        sigma_r: f64,
        /// Rotation noise uniform on (-pi, pi].
        #[arg(long)]
        rotation_uniform: bool,
        /// Translation noise uniform on [-5, 5]^2.
        #[arg(long)]
        translation_uniform: bool,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a seeded Monte Carlo sweep and write one CSV row per run.
    Montecarlo {
        /// TOML file with a `[generator]` table and solver options.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: u64,
        /// CSV report; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the aggregate JSON report.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Comma-separated subset of ns,eig,sdp,gn,eigr.
        #[arg(long)]
        solvers: Option<String>,
        /// Include per-run wall-clock times (breaks byte-identical output).
        #[arg(long)]
        timings: bool,
    },
    /// Write the five-node chain counterexample, optionally modified.
    Fixture {
        /// Remove node k (1-based label) and join its neighbors.
        #[arg(long)]
        remove_node: Option<usize>,
        /// Multiply every translation measurement by s.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Refine an estimate with Gauss-Newton and write the result as g2o.
    Refine {
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Init::Vertices)]
        init: Init,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    /// Poses from the file's vertices.
    Vertices,
    /// Spanning-tree composition from node 0.
    Tree,
    /// Rotations from the top eigenvector, then positions.
    Eigr,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(String),
}

impl From<certipose::Error> for CliError {
    fn from(e: certipose::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Run(format!("{}: {e}", path.display()))
}

fn read_input(input: Option<&Path>) -> Result<String, CliError> {
    match input {
        Some(p) if p != Path::new("-") => fs::read_to_string(p).map_err(|e| io_err(p, e)),
        _ => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| CliError::Run(format!("stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn write_output(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) if p != Path::new("-") => fs::write(p, text).map_err(|e| io_err(p, e)),
        _ => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Run(format!("stdout: {e}"))),
    }
}

fn load(input: Option<&Path>, strict: bool) -> Result<G2oGraph, CliError> {
    let text = read_input(input)?;
    let parsed = parse_g2o(&text, ParseOptions { strict })?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed)
}

/// g2o text with the original file ids.
fn write_with_ids(graph: &PoseGraph, poses: &PoseAssignment, ids: &[i64]) -> Result<String, CliError> {
    let mut doc = G2oDocument::from_graph(graph, Some(poses), 0)?;
    for v in &mut doc.vertices {
        v.id = ids[v.id as usize];
    }
    for e in &mut doc.edges {
        e.from = ids[e.from as usize];
        e.to = ids[e.to as usize];
    }
    Ok(doc.write())
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Run(e.to_string()))
}

fn run_certify(input: Option<&Path>, json_out: Option<&Path>, solution: Option<&Path>, strict: bool) -> Result<u8, CliError> {
    let parsed = load(input, strict)?;
    let cert = certify(&parsed.graph, &DualOptions::default())?;
    let report = CertificateReport::new(&cert, Some(&parsed.ids))?;
    write_output(json_out, &(report.to_json()? + "\n"))?;
    if let Some(path) = solution {
        let text = write_with_ids(&parsed.graph, &cert.estimate.realized, &parsed.ids)?;
        fs::write(path, text).map_err(|e| io_err(path, e))?;
    }
    Ok(match cert.status {
        Status::Optimal => 0,
        Status::Unknown => EXIT_UNKNOWN,
    })
}

#[derive(Serialize)]
struct SpectrumOutput {
    matrix: &'static str,
    dim: usize,
    zero_count: usize,
    zero_threshold: f64,
    eigenvalues: Vec<f64>,
    max_eigenvalue: f64,
}

fn run_spectrum(input: Option<&Path>, penalized: bool, count: Option<usize>, strict: bool) -> Result<u8, CliError> {
    let parsed = load(input, strict)?;
    let w = build_complex_matrix(&parsed.graph)?;
    let spec = if penalized {
        solve_dual(&w, &DualOptions::default())?.penalized_spectrum
    } else {
        hermitian_eigen(&w.entries)?.reclassified(DEFAULT_ZERO_THRESHOLD_SCALE)
    };
    let k = count.unwrap_or_else(|| spectrum_head_len(parsed.graph.node_count()));
    let out = SpectrumOutput {
        matrix: if penalized { "penalized" } else { "complex" },
        dim: spec.dim(),
        zero_count: spec.zero_count,
        zero_threshold: spec.zero_threshold,
        eigenvalues: spec.head(k),
        max_eigenvalue: spec.max_eigenvalue(),
    };
    write_output(None, &json(&out)?)?;
    Ok(0)
}

fn run_montecarlo(
    config: Option<&Path>,
    runs: Option<usize>,
    seed: u64,
    output: Option<&Path>,
    json_out: Option<&Path>,
    solvers: Option<&str>,
    timings: bool,
) -> Result<u8, CliError> {
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            toml::from_str::<MonteCarloConfig>(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => MonteCarloConfig::default(),
    };
    cfg.generator.seed = seed;
    if let Some(r) = runs {
        cfg.runs = r;
    }
    if let Some(list) = solvers {
        cfg.solvers = SolverSet::parse_list(list).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Ok(v) = std::env::var("CERTIPOSE_THREADS") {
        let cap: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("CERTIPOSE_THREADS must be a positive integer, got {v:?}")))?;
        cfg.threads = Some(cfg.threads.map_or(cap, |t| t.min(cap)).max(1));
    }
    let mut report = monte_carlo(&cfg)?;
    if !timings {
        report = report.without_timings();
    }
    write_output(output, &report.to_csv()?)?;
    if let Some(path) = json_out {
        fs::write(path, report.to_json()? + "\n").map_err(|e| io_err(path, e))?;
    }
    eprintln!(
        "runs={} szep_fraction={} failures={}",
        report.runs, report.szep_fraction, report.failures
    );
    Ok(0)
}

fn run_fixture(remove_node: Option<usize>, scale: Option<f64>, output: Option<&Path>) -> Result<u8, CliError> {
    let (mut graph, truth) = counterexample_fixture();
    let mut poses = Some(truth);
    if let Some(label) = remove_node {
        if label == 0 || label > graph.node_count() {
            return Err(CliError::Usage(format!(
                "--remove-node takes a label in 1..={}",
                graph.node_count()
            )));
        }
        graph = remove_node_compose(&graph, label - 1)?;
        poses = None;
    }
    if let Some(s) = scale {
        graph = scale_translations(&graph, s)?;
        poses = None;
    }
    let text = G2oDocument::from_graph(&graph, poses.as_ref(), 1)?.write();
    write_output(output, &text)?;
    Ok(0)
}

#[derive(Serialize)]
struct RefineSummary {
    initial_cost: f64,
    final_cost: f64,
    iterations: usize,
    converged: bool,
}

fn run_refine(input: Option<&Path>, init: Init, output: Option<&Path>, strict: bool) -> Result<u8, CliError> {
    let parsed = load(input, strict)?;
    let g = &parsed.graph;
    let start = match init {
        Init::Vertices => parsed
            .initial
            .clone()
            .ok_or_else(|| CliError::Run("--init vertices needs a VERTEX_SE2 line for every node".into()))?,
        Init::Tree => spanning_tree_solution(g),
        Init::Eigr => rotation_first_init(g)?.poses,
    };
    let result = gauss_newton(g, &start, &RefineOptions::default())?;
    write_output(output, &write_with_ids(g, &result.poses, &parsed.ids)?)?;
    let summary = RefineSummary {
        initial_cost: result.initial_cost,
        final_cost: result.final_cost,
        iterations: result.iterations,
        converged: result.converged,
    };
    eprintln!("{}", serde_json::to_string(&summary).map_err(|e| CliError::Run(e.to_string()))?);
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Certify {
            input,
            json,
            solution,
            strict,
        } => run_certify(input.as_deref(), json.as_deref(), solution.as_deref(), strict),
        Command::Spectrum {
            input,
            penalized,
            count,
            strict,
        } => run_spectrum(input.as_deref(), penalized, count, strict),
        Command::Generate {
            n,
            pc,
            sigma_delta,
            sigma_r,
            rotation_uniform,
            translation_uniform,
            seed,
            output,
        } => {
            let cfg = GeneratorConfig {
                n,
                pc,
                sigma_delta,
                sigma_r,
                rotation_uniform,
                translation_uniform,
                seed,
            };
            cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let (graph, truth) = generate_random_graph(&cfg)?;
            write_output(output.as_deref(), &G2oDocument::from_graph(&graph, Some(&truth), 0)?.write())?;
            Ok(0)
        }
        Command::Montecarlo {
            config,
            runs,
            seed,
            output,
            json,
            solvers,
            timings,
        } => run_montecarlo(
            config.as_deref(),
            runs,
            seed,
            output.as_deref(),
            json.as_deref(),
            solvers.as_deref(),
            timings,
        ),
        Command::Fixture {
            remove_node,
            scale,
            output,
        } => run_fixture(remove_node, scale, output.as_deref()),
        Command::Refine {
            input,
            init,
            output,
            strict,
        } => run_refine(input.as_deref(), init, output.as_deref(), strict),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
