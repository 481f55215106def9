//! `navgraph` command-line driver.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O or malformed input, 4 the command
//! ran but the checked property does not hold.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use navgraph::formats::{read_adj_file, read_points, write_adj_file, write_perm, write_points};
use navgraph::lowerlab::{
    build_hoods, calibrate_ch, certify, cross_check_lb, hub_degree_audit, max_inner_product,
    overlap_stats, LowerBoundReport,
};
use navgraph::verify::property_violation;
use navgraph::{
    build_knn_baseline, build_permutations, build_randomized, build_setcover, euclidean_oracle,
    gen_hub_instance, gen_random_sign_points, greedy_search, verify_exhaustive, BuildReport,
    DirectedGraph, Method, PointSet, Query, VerifyReport,
};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "navgraph",
    version,
    about = "Build and verify sparse navigable graphs"
)]
struct Cli {
    /// Worker threads: a positive count or `auto`. NAVGRAPH_THREADS takes precedence.
    #[arg(long, global = true, default_value = "auto")]
    threads: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Sign,
    Hub,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuildMethod {
    Randomized,
    Setcover,
    Knn,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyMode {
    Property,
    Exhaustive,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a point set (.pm1, .pts or .fvecs by extension).
    Gen {
        #[arg(long, value_enum)]
        dist: Dist,
        #[arg(short, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Dimension; required for `sign`, implied as n - 1 for `hub`.
        #[arg(short, value_parser = clap::value_parser!(u64).range(1..))]
        d: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short)]
        o: PathBuf,
    },
    /// Write the distance-based permutation table.
    Permute {
        #[arg(short)]
        p: PathBuf,
        #[arg(short)]
        o: PathBuf,
    },
    /// Construct a graph over a point file.
    Build {
        #[arg(long, value_enum)]
        method: BuildMethod,
        #[arg(short)]
        i: PathBuf,
        #[arg(short)]
        o: PathBuf,
        /// Where to write the JSON build report; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Neighborhood size; chosen from n when omitted.
        #[arg(short)]
        m: Option<usize>,
        /// Neighbors per node for `knn`.
        #[arg(short)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run greedy search and print the trace.
    Search {
        #[arg(short)]
        g: PathBuf,
        #[arg(short)]
        p: PathBuf,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        target: usize,
    },
    /// Check navigability of a graph.
    Verify {
        #[arg(long, value_enum, default_value = "property")]
        mode: VerifyMode,
        #[arg(short)]
        g: PathBuf,
        #[arg(short)]
        p: PathBuf,
    },
    /// Near-neighborhood statistics and the certified edge lower bound.
    #[command(name = "lb-lab")]
    LbLab {
        /// Sign point file; generated from -n/-d/--seed when omitted.
        #[arg(short, conflicts_with_all = ["n", "d"])]
        p: Option<PathBuf>,
        #[arg(short, value_parser = clap::value_parser!(u64).range(3..), requires = "d")]
        n: Option<u64>,
        #[arg(short, value_parser = clap::value_parser!(u64).range(1..), requires = "n")]
        d: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Threshold constant; calibrated from n when omitted.
        #[arg(long = "c-h")]
        c_h: Option<f64>,
        /// CSV histogram of pairwise overlaps.
        #[arg(long)]
        histogram: Option<PathBuf>,
        /// Graph to cross-check against the bound.
        #[arg(short)]
        g: Option<PathBuf>,
    },
    /// Hub instance: audit the out-degree of the origin in the complete graph.
    Worstcase {
        #[arg(short, value_parser = clap::value_parser!(u64).range(2..))]
        n: u64,
    },
}

/// Error tagged with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn classify(error: anyhow::Error) -> Failure {
    let code = match error.downcast_ref::<navgraph::Error>() {
        Some(navgraph::Error::Io(_) | navgraph::Error::Parse { .. }) => EXIT_IO,
        Some(_) => EXIT_USAGE,
        None if error.downcast_ref::<std::io::Error>().is_some() => EXIT_IO,
        None => EXIT_USAGE,
    };
    Failure { code, error }
}

fn thread_count(flag: &str) -> anyhow::Result<Option<usize>> {
    let raw = std::env::var("NAVGRAPH_THREADS").unwrap_or_else(|_| flag.to_string());
    match raw.trim() {
        "auto" | "" => Ok(None),
        s => match s.parse::<usize>() {
            Ok(0) | Err(_) => bail!("thread count must be a positive integer or `auto`, got {s:?}"),
            Ok(k) => Ok(Some(k)),
        },
    }
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load_points(path: &Path) -> anyhow::Result<PointSet> {
    read_points(path).with_context(|| format!("reading points from {}", path.display()))
}

fn load_graph(path: &Path) -> anyhow::Result<DirectedGraph> {
    read_adj_file(path).with_context(|| format!("reading graph from {}", path.display()))
}

fn same_size(g: &DirectedGraph, ps: &PointSet) -> anyhow::Result<()> {
    if g.len() != ps.len() {
        bail!(
            "graph has {} nodes but the point set has {}",
            g.len(),
            ps.len()
        );
    }
    Ok(())
}

fn to_usize(v: u64) -> anyhow::Result<usize> {
    usize::try_from(v).context("count does not fit in usize")
}

fn cmd_gen(dist: Dist, n: u64, d: Option<u64>, seed: u64, out: &Path) -> anyhow::Result<u8> {
    let n = to_usize(n)?;
    let ps = match dist {
        Dist::Sign => {
            let Some(d) = d else {
                bail!("--dist sign requires -d")
            };
            gen_random_sign_points(n, to_usize(d)?, seed)?
        }
        Dist::Hub => {
            if d.is_some_and(|d| d + 1 != n as u64) {
                bail!(
                    "the hub instance has dimension n - 1 = {}",
                    n.saturating_sub(1)
                );
            }
            gen_hub_instance(n)?
        }
    };
    write_points(&ps, out)?;
    Ok(0)
}

fn cmd_permute(points: &Path, out: &Path) -> anyhow::Result<u8> {
    let ps = load_points(points)?;
    let pt = build_permutations(&euclidean_oracle(&ps))?;
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_perm(&pt, file)?;
    Ok(0)
}

fn cmd_build(
    method: BuildMethod,
    input: &Path,
    out: &Path,
    report_path: Option<&Path>,
    m: Option<usize>,
    k: Option<usize>,
    seed: u64,
) -> anyhow::Result<u8> {
    let ps = load_points(input)?;
    let pt = build_permutations(&euclidean_oracle(&ps))?;
    let (g, report) = match method {
        BuildMethod::Randomized => build_randomized(&pt, seed, m)?,
        BuildMethod::Setcover => build_setcover(&pt, m)?,
        BuildMethod::Knn => {
            let Some(k) = k else {
                bail!("--method knn requires -k")
            };
            let g = build_knn_baseline(&pt, k)?;
            let stats = g.degree_stats();
            let report = BuildReport {
                method: Method::Knn,
                n: g.len(),
                m: k,
                random_edges_per_node: None,
                hubs: None,
                edge_count: stats.edge_count,
                avg_degree: stats.avg_degree,
            };
            (g, report)
        }
    };
    write_adj_file(&g, out)?;
    match report_path {
        Some(path) => write_json(&report, path)?,
        None => print_json(&report)?,
    }
    Ok(0)
}

fn cmd_search(graph: &Path, points: &Path, start: usize, target: usize) -> anyhow::Result<u8> {
    let ps = load_points(points)?;
    let g = load_graph(graph)?;
    same_size(&g, &ps)?;
    ps.check_node(target)?;
    let trace = greedy_search(&g, &euclidean_oracle(&ps), start, Query::Node(target))?;
    print_json(&trace)?;
    Ok(0)
}

fn cmd_verify(mode: VerifyMode, graph: &Path, points: &Path) -> anyhow::Result<u8> {
    let ps = load_points(points)?;
    let g = load_graph(graph)?;
    same_size(&g, &ps)?;
    let oracle = euclidean_oracle(&ps);
    let mut report = VerifyReport::default();
    if matches!(mode, VerifyMode::Property | VerifyMode::Both) {
        let pt = build_permutations(&oracle)?;
        let violation = property_violation(&g, &pt)?;
        if let Some(v) = violation {
            log::info!(
                "property fails for target {} at position {} (node {})",
                v.target,
                v.position,
                v.node
            );
        }
        report.property_holds = Some(violation.is_none());
    }
    if matches!(mode, VerifyMode::Exhaustive | VerifyMode::Both) {
        let r = verify_exhaustive(&g, &oracle)?;
        report.exhaustive_ok = Some(r.ok);
        report.max_moves = Some(r.max_moves);
        report.first_failure = r.first_failure;
    }
    print_json(&report)?;
    Ok(if report.passed() { 0 } else { EXIT_FAILED })
}

#[derive(Serialize)]
struct LabOutput {
    #[serde(flatten)]
    report: LowerBoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    graph_navigable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    graph_edge_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_check: Option<bool>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_lblab(
    points: Option<&Path>,
    n: Option<u64>,
    d: Option<u64>,
    seed: u64,
    c_h: Option<f64>,
    histogram: Option<&Path>,
    graph: Option<&Path>,
) -> anyhow::Result<u8> {
    let ps = match (points, n, d) {
        (Some(p), _, _) => load_points(p)?,
        (None, Some(n), Some(d)) => gen_random_sign_points(to_usize(n)?, to_usize(d)?, seed)?,
        _ => bail!("give either -p or both -n and -d"),
    };
    let c_h = match c_h {
        Some(c) => c,
        None => calibrate_ch(ps.len() as u64)?,
    };
    let hoods = build_hoods(&ps, c_h)?;
    let overlaps = overlap_stats(&hoods)?;
    let mut report = certify(&hoods, &overlaps)?;
    report.max_pair_inner = Some(max_inner_product(&ps)?);
    if let Some(path) = histogram {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        overlaps.write_csv(&mut w)?;
        w.flush()?;
    }
    let mut out = LabOutput {
        report,
        graph_navigable: None,
        graph_edge_count: None,
        cross_check: None,
    };
    let mut code = 0;
    if let Some(path) = graph {
        let g = load_graph(path)?;
        same_size(&g, &ps)?;
        let pt = build_permutations(&euclidean_oracle(&ps))?;
        let navigable = property_violation(&g, &pt)?.is_none();
        out.graph_navigable = Some(navigable);
        out.graph_edge_count = Some(g.edge_count());
        if navigable {
            let ok = cross_check_lb(&hoods, &g, true)?;
            out.cross_check = Some(ok);
            if !ok {
                code = EXIT_FAILED;
            }
        } else {
            code = EXIT_FAILED;
        }
    }
    print_json(&out)?;
    Ok(code)
}

fn cmd_worstcase(n: u64) -> anyhow::Result<u8> {
    let n = to_usize(n)?;
    let ps = gen_hub_instance(n)?;
    let audit = hub_degree_audit(&ps, &DirectedGraph::complete(n))?;
    print_json(&audit)?;
    Ok(if audit.passed { 0 } else { EXIT_FAILED })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let threads = thread_count(&cli.threads).map_err(|error| Failure {
        code: EXIT_USAGE,
        error,
    })?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| Failure {
        code: EXIT_USAGE,
        error: e.into(),
    })?;
    pool.install(|| dispatch(cli.command)).map_err(classify)
}

fn dispatch(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Gen {
            dist,
            n,
            d,
            seed,
            o,
        } => cmd_gen(dist, n, d, seed, &o),
        Command::Permute { p, o } => cmd_permute(&p, &o),
        Command::Build {
            method,
            i,
            o,
            report,
            m,
            k,
            seed,
        } => cmd_build(method, &i, &o, report.as_deref(), m, k, seed),
        Command::Search {
            g,
            p,
            start,
            target,
        } => cmd_search(&g, &p, start, target),
        Command::Verify { mode, g, p } => cmd_verify(mode, &g, &p),
        Command::LbLab {
            p,
            n,
            d,
            seed,
            c_h,
            histogram,
            g,
        } => cmd_lblab(
            p.as_deref(),
            n,
            d,
            seed,
            c_h,
            histogram.as_deref(),
            g.as_deref(),
        ),
        Command::Worstcase { n } => cmd_worstcase(n),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
