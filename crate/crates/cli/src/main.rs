use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use seqroute::bench::{run_sweep, write_csv, SweepConfig};
use seqroute::format::{read_tdg, save_tdg};
use seqroute::netgen::{generate_grid, import_network, GridParams};
use seqroute::oracle::{greedy_route, product_dijkstra, VisitSemantics};
use seqroute::osr::td_osr_run;
use seqroute::pne::td_pne_run;
use seqroute::{
    build_category_bounds, destination_bounds, fixtures, Clock, LowerBoundTable, OsrOptions, OtdsrQuery, QueryReport,
    SearchBudget, SearchStats, TimeDependentGraph,
};

#[derive(Parser)]
#[command(name = "seqroute", version, about = "Fastest time-dependent routes through ordered POI categories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a graph file: a random grid, an imported CSV network or a fixture.
    Generate(GenerateArgs),
    /// Build the category lower-bound table for a graph.
    Preprocess {
        graph: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Answer one query.
    Query(QueryArgs),
    /// Run a parameter sweep and write CSV.
    Bench {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Zero the timing column so reruns are byte-identical.
        #[arg(long)]
        deterministic: bool,
    },
    /// Check FIFO on every edge and the lower-bound table invariants.
    Validate {
        graph: PathBuf,
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Print the TD-PNE heap after every round, one snapshot per line.
    Trace(QuerySpec),
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    WorkedExample,
    BankRestaurant,
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 5000)]
    vertices: usize,
    /// Share of vertices that are POIs.
    #[arg(long, default_value_t = 0.01)]
    density: f64,
    /// Average out-degree.
    #[arg(long, default_value_t = 2.5)]
    degree: f64,
    #[arg(long, default_value_t = 10)]
    categories: usize,
    /// Dwell minutes at every POI.
    #[arg(long, default_value_t = 15.0)]
    dwell: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Import instead: vertex CSV (`id`); needs --edges, --pois and --classes.
    #[arg(long, requires_all = ["edges", "pois", "classes"])]
    import_vertices: Option<PathBuf>,
    /// Edge CSV (`from,to,length_m,speed_class`).
    #[arg(long)]
    edges: Option<PathBuf>,
    /// POI CSV (`vertex,category`).
    #[arg(long)]
    pois: Option<PathBuf>,
    /// Speed class CSV (`class,max_kmh`).
    #[arg(long)]
    classes: Option<PathBuf>,
    /// Write a built-in fixture instead.
    #[arg(long, value_enum, conflicts_with = "import_vertices")]
    fixture: Option<Fixture>,
}

#[derive(clap::Args)]
struct QuerySpec {
    graph: PathBuf,
    /// Lower-bound table from `preprocess`; built on the fly when absent.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(short, long)]
    source: String,
    #[arg(short, long)]
    destination: String,
    /// Departure as HH:MM or minutes after midnight.
    #[arg(short = 't', long = "depart")]
    depart: String,
    /// Comma-separated category names, in visiting order.
    #[arg(long = "seq", value_delimiter = ',')]
    sequence: Vec<String>,
    /// Per-category dwell override, e.g. `C_B=5`.
    #[arg(long = "dwell", value_parser = parse_dwell)]
    dwell: Vec<(String, f64)>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Tdosr,
    Tdpne,
    Oracle,
    Greedy,
}

#[derive(clap::Args)]
struct QueryArgs {
    #[command(flatten)]
    spec: QuerySpec,
    #[arg(long, value_enum, default_value = "tdosr")]
    algo: Algo,
    #[arg(long)]
    json: bool,
    /// TD-OSR only: per-vertex level pruning (faster, not always optimal).
    #[arg(long)]
    level_pruning: bool,
    /// Give up after this many expansions.
    #[arg(long)]
    max_expansions: Option<u64>,
}

fn parse_dwell(s: &str) -> Result<(String, f64), String> {
    let (c, m) = s.split_once('=').ok_or_else(|| format!("expected CATEGORY=MINUTES, got `{s}`"))?;
    let m: f64 = m.parse().map_err(|e| format!("bad minutes in `{s}`: {e}"))?;
    Ok((c.to_string(), m))
}

fn load_graph(path: &Path) -> Result<TimeDependentGraph> {
    let (g, report) = read_tdg(path).with_context(|| format!("reading {}", path.display()))?;
    for (line, from, to) in &report.merged {
        log::warn!("{}:{line}: edge {from} -> {to} merged into an earlier one", path.display());
    }
    for (line, why) in &report.dropped {
        log::warn!("{}:{line}: dropped: {why}", path.display());
    }
    Ok(g)
}

fn load_table(g: &TimeDependentGraph, path: Option<&Path>) -> Result<LowerBoundTable> {
    match path {
        Some(p) => LowerBoundTable::load(g, p).with_context(|| format!("loading table {}", p.display())),
        None => Ok(build_category_bounds(g)),
    }
}

fn build_query(g: &TimeDependentGraph, spec: &QuerySpec) -> Result<OtdsrQuery> {
    let depart = Clock::parse(&spec.depart, g.period())?;
    let seq: Vec<&str> = spec.sequence.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
    let mut q = OtdsrQuery::from_names(g, &spec.source, &spec.destination, depart, &seq)?;
    for (c, m) in &spec.dwell {
        q = q.with_dwell(g.category_id(c)?, *m);
    }
    q.validate(g)?;
    Ok(q)
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let g = if let Some(f) = args.fixture {
        match f {
            Fixture::WorkedExample => fixtures::worked_example(),
            Fixture::BankRestaurant => fixtures::bank_restaurant_static(),
        }
    } else if let Some(vertices) = &args.import_vertices {
        let (g, report) = import_network(
            vertices,
            args.edges.as_deref().unwrap(),
            args.pois.as_deref().unwrap(),
            args.classes.as_deref().unwrap(),
            args.dwell,
            args.seed,
        )?;
        for (line, from, to) in &report.merged {
            eprintln!("merged parallel edge {from} -> {to} (line {line})");
        }
        for (line, why) in &report.dropped {
            eprintln!("dropped record at line {line}: {why}");
        }
        g
    } else {
        generate_grid(&GridParams {
            vertices: args.vertices,
            poi_density: args.density,
            vertex_degree: args.degree,
            num_categories: args.categories,
            dwell: args.dwell,
            seed: args.seed,
        })?
    };
    save_tdg(&g, &args.output)?;
    eprintln!("wrote {} vertices, {} edges to {}", g.num_vertices(), g.num_edges(), args.output.display());
    Ok(())
}

fn query(args: &QueryArgs) -> Result<()> {
    let g = load_graph(&args.spec.graph)?;
    let table = load_table(&g, args.spec.table.as_deref())?;
    let q = build_query(&g, &args.spec)?;
    let budget = SearchBudget { max_expansions: args.max_expansions, time_limit: None };
    let started = std::time::Instant::now();
    let (route, stats, name) = match args.algo {
        Algo::Tdosr => {
            let opts = OsrOptions { level_pruning: args.level_pruning, budget, ..Default::default() };
            let a = td_osr_run(&g, &table, None, &q, &opts)?;
            (a.route, a.stats, "tdosr")
        }
        Algo::Tdpne => {
            let a = td_pne_run(&g, &table, None, &q, &budget)?;
            (a.route, a.stats, "tdpne")
        }
        Algo::Oracle => {
            let r = product_dijkstra(&g, &q, VisitSemantics::default())?;
            (r, SearchStats::default(), "oracle")
        }
        Algo::Greedy => {
            let r = greedy_route(&g, &table, &q)?;
            (r, SearchStats::default(), "greedy")
        }
    };
    let mut stats = stats;
    if stats.elapsed_ms == 0.0 {
        stats.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    }
    let report = QueryReport::new(&g, &q, name, &route, stats);
    let mut out = std::io::stdout().lock();
    if args.json {
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
    } else {
        write!(out, "{}", report.to_text())?;
    }
    Ok(())
}

fn validate(graph: &Path, table: Option<&Path>) -> Result<()> {
    // building the graph already rejects non-FIFO edges, naming them
    let g = load_graph(graph)?;
    let t = load_table(&g, table)?;
    let problems = t.invariant_violations(&g);
    if !problems.is_empty() {
        for p in problems.iter().take(20) {
            eprintln!("{p}");
        }
        bail!("{} lower-bound table invariant violations", problems.len());
    }
    println!(
        "ok: {} vertices, {} edges FIFO, {} table entries",
        g.num_vertices(),
        g.num_edges(),
        t.num_entries()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => generate(&args),
        Command::Preprocess { graph, output } => {
            let g = load_graph(&graph)?;
            let t = build_category_bounds(&g);
            t.save(&g, &output)?;
            eprintln!("wrote {} entries to {}", t.num_entries(), output.display());
            Ok(())
        }
        Command::Query(args) => query(&args),
        Command::Bench { config, output, deterministic } => {
            let mut cfg = SweepConfig::load(&config)?;
            cfg.deterministic |= deterministic;
            let rows = run_sweep(&cfg)?;
            match output {
                Some(p) => write_csv(&rows, fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?)?,
                None => write_csv(&rows, std::io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Validate { graph, table } => validate(&graph, table.as_deref()),
        Command::Trace(spec) => {
            let g = load_graph(&spec.graph)?;
            let table = load_table(&g, spec.table.as_deref())?;
            let q = build_query(&g, &spec)?;
            let bounds = destination_bounds(&g, q.destination)?;
            let a = td_pne_run(&g, &table, Some(&bounds), &q, &SearchBudget::default())?;
            print!("{}", a.trace.render(&g));
            println!("answer {} travel {}", a.route.full_path.iter().map(|&v| g.name(v)).collect::<Vec<_>>().join(" "), a.route.total_travel);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use seqroute::format::write_tdg;

    #[test]
    fn dwell_override_parsing() {
        assert_eq!(parse_dwell("C_B=5").unwrap(), ("C_B".to_string(), 5.0));
        assert!(parse_dwell("C_B").is_err());
        assert!(parse_dwell("C_B=x").is_err());
    }

    #[test]
    fn fixture_text_is_stable() {
        // the shipped demo file is the serialized fixture
        let text = include_str!("../../../data/worked_example.tdg");
        assert_eq!(text, write_tdg(&fixtures::worked_example()));
    }
}
