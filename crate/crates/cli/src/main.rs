//! `cubemap`: command-line front end for the core library.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cubemap_core::frostman::{max_mass, verify_frostman};
use cubemap_core::holder_map::{HolderEstimate, HolderMap};
use cubemap_core::ifs::{box_dim_estimate, check_strong_separation, point_cloud, IfsSpec};
use cubemap_core::metric_core::{validate_metric, SpaceFile};
use cubemap_core::monotone::{search_min_c, SearchMode, SearchOptions};
use cubemap_core::peano::HilbertCurve;
use cubemap_core::pipeline::{build_pipeline, PipelineConfig, Source, BOUND_TOLERANCE};
use cubemap_core::report::{to_json, to_text_table};
use cubemap_core::ultra_tree::{build_partition_tree, DiamTree, TreeAddress, TreeFile};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

const EXIT_INVALID: u8 = 1;
const EXIT_VIOLATION: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Node enumeration cap for `measure` and `gmap`.
const NODE_LIMIT: usize = 1 << 20;

#[derive(Parser)]
#[command(name = "cubemap", version, about = "Lipschitz maps from ultrametric and self-similar spaces onto cubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check metric and ultrametric axioms of a distance matrix.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Build the partition tree of a finite ultrametric space.
    Tree {
        #[arg(long)]
        input: PathBuf,
    },
    /// Find an order with small monotonicity constant.
    Order {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
    },
    /// Largest s-Frostman measure on a tree, as node path to mass.
    Measure {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        s: f64,
    },
    /// Values of the Hölder map g at a given depth.
    Gmap {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        depth: usize,
        /// Sample this many pairs instead of enumerating every leaf pair.
        #[arg(long)]
        verify_pairs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate the Hilbert curve or check that a level is a bijection.
    Curve {
        #[arg(long)]
        k: usize,
        #[arg(long, required_unless_present = "check")]
        depth: Option<usize>,
        #[arg(long, required_unless_present = "check", conflicts_with = "check")]
        t: Option<f64>,
        #[arg(long, value_name = "M")]
        check: Option<usize>,
    },
    /// Build the map onto [0,1]^k and emit its verification report.
    Map(MapArgs),
    /// Like `map`, printing only the pass/fail summary.
    Verify(MapArgs),
    /// Similarity and box-counting dimension of an IFS attractor.
    Dim {
        #[arg(long)]
        ifs: PathBuf,
        /// Depth of the generated point cloud.
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Heuristic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["tree", "ifs"])))]
struct MapArgs {
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long)]
    ifs: Option<PathBuf>,
    #[arg(long)]
    k: usize,
    /// Frostman exponent; defaults to k.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    depth: usize,
    #[arg(long, default_value_t = 10_000)]
    verify_pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coverage grid resolution 2^-q.
    #[arg(long, default_value_t = 6)]
    coverage_depth: usize,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// What a subcommand produced: text to print and the exit status.
struct Outcome {
    text: String,
    code: u8,
}

impl Outcome {
    fn new(text: String, ok: bool) -> Self {
        Self {
            text,
            code: if ok { 0 } else { EXIT_VIOLATION },
        }
    }
}

type CliResult = Result<Outcome, String>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    match run(cli.command) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(outcome.text.as_bytes()).is_err() {
                return ExitCode::from(EXIT_INVALID);
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("CUBEMAP_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("CUBEMAP_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Validate { input } => validate(&input),
        Command::Tree { input } => tree(&input),
        Command::Order { input, mode, budget } => order(&input, mode, budget),
        Command::Measure { tree, s } => measure(&tree, s),
        Command::Gmap {
            tree,
            s,
            depth,
            verify_pairs,
            seed,
        } => gmap(&tree, s, depth, verify_pairs, seed),
        Command::Curve { k, depth, t, check } => curve(k, depth, t, check),
        Command::Map(args) => map(&args, false),
        Command::Verify(args) => map(&args, true),
        Command::Dim { ifs, depth } => dim(&ifs, depth),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_tree(path: &Path) -> Result<DiamTree, String> {
    read_json::<TreeFile>(path)?.into_tree().map_err(|e| e.to_string())
}

fn read_ifs(path: &Path) -> Result<IfsSpec, String> {
    read_json(path)
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<String, String> {
    to_json(value).map_err(|e| e.to_string())
}

fn validate(input: &Path) -> CliResult {
    let file: SpaceFile = read_json(input)?;
    let report = validate_metric(&file.dist).map_err(|e| e.to_string())?;
    Ok(Outcome {
        text: json(&report)?,
        code: if report.metric { 0 } else { EXIT_INVALID },
    })
}

#[derive(Serialize)]
struct TreeOutput {
    tree: TreeFile,
    addresses: Vec<TreeAddress>,
}

fn tree(input: &Path) -> CliResult {
    let space = read_json::<SpaceFile>(input)?
        .into_space()
        .map_err(|e| e.to_string())?;
    let pt = build_partition_tree(&space).map_err(|e| e.to_string())?;
    let out = TreeOutput {
        tree: TreeFile::from_tree(&pt.tree),
        addresses: pt.addresses,
    };
    Ok(Outcome::new(json(&out)?, true))
}

#[derive(Serialize)]
struct OrderOutput {
    order: Vec<usize>,
    labels: Vec<String>,
    c: f64,
    certificate: Option<(usize, usize)>,
}

fn order(input: &Path, mode: Mode, budget: usize) -> CliResult {
    let space = read_json::<SpaceFile>(input)?
        .into_space()
        .map_err(|e| e.to_string())?;
    let options = SearchOptions {
        mode: match mode {
            Mode::Exact => SearchMode::Exact,
            Mode::Heuristic => SearchMode::Heuristic,
        },
        budget,
        ..Default::default()
    };
    let found = search_min_c(&space, options).map_err(|e| e.to_string())?;
    let out = OrderOutput {
        labels: found
            .order
            .sequence()
            .iter()
            .map(|&i| space.labels()[i].clone())
            .collect(),
        order: found.order.into_sequence(),
        c: found.c,
        certificate: found.certificate,
    };
    Ok(Outcome::new(json(&out)?, true))
}

/// Serializes as a JSON object keyed by node path, in pre-order.
struct PathMap(Vec<(String, f64)>);

impl Serialize for PathMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

fn node_path(digits: &[u32]) -> String {
    let mut path = String::from("/");
    let parts: Vec<String> = digits.iter().map(u32::to_string).collect();
    path.push_str(&parts.join("/"));
    path
}

#[derive(Serialize)]
struct MeasureOutput {
    s: f64,
    total: f64,
    frostman_ok: bool,
    masses: PathMap,
}

fn measure(tree_path: &Path, s: f64) -> CliResult {
    let tree = read_tree(tree_path)?;
    let measure = max_mass(&tree, s).map_err(|e| e.to_string())?;
    let check = verify_frostman(&tree, &measure, s).map_err(|e| e.to_string())?;
    let mut masses = Vec::new();
    let mut failure = None;
    tree.visit(NODE_LIMIT, |digits, _| match measure.mass_at(&tree, digits) {
        Ok(m) => masses.push((node_path(digits), m)),
        Err(e) => failure = Some(e),
    })
    .map_err(|e| e.to_string())?;
    if let Some(e) = failure {
        return Err(e.to_string());
    }
    let out = MeasureOutput {
        s,
        total: measure.total(),
        frostman_ok: check.ok,
        masses: PathMap(masses),
    };
    Ok(Outcome::new(json(&out)?, check.ok))
}

#[derive(Serialize)]
struct GEntry {
    address: TreeAddress,
    value: f64,
    uncertainty: f64,
}

#[derive(Serialize)]
struct GmapOutput {
    s: f64,
    depth: usize,
    total: f64,
    bound: f64,
    values: Vec<GEntry>,
    holder: HolderEstimate,
    seed: Option<u64>,
    ok: bool,
}

fn gmap(tree_path: &Path, s: f64, depth: usize, pairs: Option<usize>, seed: u64) -> CliResult {
    let tree = match read_tree(tree_path)? {
        DiamTree::SelfSimilar(rule) => DiamTree::SelfSimilar(rule.with_depth(depth)),
        explicit => explicit,
    };
    let g = HolderMap::new(tree, s).map_err(|e| e.to_string())?;
    let mut addresses = Vec::new();
    g.tree()
        .visit(NODE_LIMIT, |digits, info| {
            if digits.len() == depth || (digits.len() < depth && info.is_leaf()) {
                addresses.push(TreeAddress::new(digits.to_vec()));
            }
        })
        .map_err(|e| e.to_string())?;
    let values = addresses
        .into_iter()
        .map(|address| {
            g.eval_g(address.digits()).map(|v| GEntry {
                address,
                value: v.value,
                uncertainty: v.uncertainty,
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let holder = match pairs {
        Some(n) => g.holder_estimate(n, seed),
        None => g.holder_exhaustive(),
    }
    .map_err(|e| e.to_string())?;
    let bound = g.holder_constant_bound();
    let ok = holder.max_ratio <= bound * (1.0 + BOUND_TOLERANCE);
    let out = GmapOutput {
        s,
        depth,
        total: g.total(),
        bound,
        values,
        holder,
        seed: pairs.map(|_| seed),
        ok,
    };
    Ok(Outcome::new(json(&out)?, ok))
}

#[derive(Serialize)]
struct CellOutput {
    k: usize,
    depth: usize,
    t: f64,
    index: String,
    cell: Vec<u64>,
    scale: f64,
}

#[derive(Serialize)]
struct CheckOutput {
    k: usize,
    depth: usize,
    cells: String,
    bijective: bool,
}

fn curve(k: usize, depth: Option<usize>, t: Option<f64>, check: Option<usize>) -> CliResult {
    if let Some(m) = check {
        let curve = HilbertCurve::new(k, m).map_err(|e| e.to_string())?;
        let bijective = curve.coverage_check().map_err(|e| e.to_string())?;
        let out = CheckOutput {
            k,
            depth: m,
            cells: curve
                .cell_count()
                .map_or_else(|| "overflow".into(), |c| c.to_string()),
            bijective,
        };
        return Ok(Outcome::new(json(&out)?, bijective));
    }
    let (Some(depth), Some(t)) = (depth, t) else {
        return Err("curve needs --depth and --t, or --check".into());
    };
    let curve = HilbertCurve::new(k, depth).map_err(|e| e.to_string())?;
    let index = curve.index_of(t).map_err(|e| e.to_string())?;
    let cell = curve.cell_at_index(index).map_err(|e| e.to_string())?;
    let out = CellOutput {
        k,
        depth,
        t,
        // u128 does not fit a JSON number losslessly
        index: index.to_string(),
        scale: cell.width(),
        cell: cell.coords,
    };
    Ok(Outcome::new(json(&out)?, true))
}

#[derive(Serialize)]
struct VerifySummary {
    ok: bool,
    empirical_constant: f64,
    predicted_bound: f64,
    violations: usize,
    coverage_fraction: f64,
    g_max_ratio: f64,
    g_bound: f64,
}

fn map(args: &MapArgs, summary: bool) -> CliResult {
    let source = match (&args.tree, &args.ifs) {
        (Some(path), None) => Source::Tree(read_tree(path)?),
        (None, Some(path)) => Source::Ifs(read_ifs(path)?),
        _ => return Err("exactly one of --tree and --ifs is required".into()),
    };
    let mut config = PipelineConfig::new(source, args.k, args.depth);
    config.s = args.s;
    config.pairs = args.verify_pairs;
    config.seed = args.seed;
    config.coverage_depth = args.coverage_depth;
    let pipeline = build_pipeline(config).map_err(|e| e.to_string())?;
    for w in pipeline.warnings() {
        eprintln!("warning: {w}");
    }
    let report = pipeline.verify().map_err(|e| e.to_string())?;
    let text = if summary {
        let s = VerifySummary {
            ok: report.ok,
            empirical_constant: report.empirical_constant,
            predicted_bound: report.predicted_bound,
            violations: report.violations,
            coverage_fraction: report.coverage_fraction,
            g_max_ratio: report.g_holder.max_ratio,
            g_bound: report.g_holder.bound,
        };
        render(&s, args.format)?
    } else {
        render(&report, args.format)?
    };
    if !report.ok {
        eprintln!(
            "bound violated: empirical {} > predicted {} on {} pairs",
            report.empirical_constant, report.predicted_bound, report.violations
        );
    }
    match &args.output {
        Some(path) => {
            fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display()))?;
            Ok(Outcome::new(String::new(), report.ok))
        }
        None => Ok(Outcome::new(text, report.ok)),
    }
}

fn render<T: Serialize>(value: &T, format: Format) -> Result<String, String> {
    match format {
        Format::Json => json(value),
        Format::Text => to_text_table(value).map_err(|e| e.to_string()),
    }
}

#[derive(Serialize)]
struct DimOutput {
    maps: usize,
    similarity_dimension: f64,
    separated: bool,
    gap: f64,
    depth: usize,
    points: usize,
    scales: Vec<f64>,
    box_counting: cubemap_core::ifs::BoxDimEstimate,
}

fn dim(path: &Path, depth: usize) -> CliResult {
    let spec = read_ifs(path)?;
    let sep = check_strong_separation(&spec, 0).map_err(|e| e.to_string())?;
    let cloud = point_cloud(&spec, depth).map_err(|e| e.to_string())?;
    let r_max = spec.ratios().into_iter().fold(0.0f64, f64::max);
    let scales: Vec<f64> = (1..depth.max(3) as i32)
        .map(|j| spec.root_diam() * r_max.powi(j))
        .collect();
    let est = box_dim_estimate(&cloud, &scales).map_err(|e| e.to_string())?;
    let out = DimOutput {
        maps: spec.maps().len(),
        similarity_dimension: spec.similarity_dimension(),
        separated: sep.ok,
        gap: sep.gap,
        depth,
        points: cloud.len(),
        scales,
        box_counting: est,
    };
    Ok(Outcome::new(json(&out)?, true))
}
