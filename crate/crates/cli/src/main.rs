//! `apollonian`: command-line experiments on integral Apollonian packings.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use apollonian::components::{count_prime_roots, extract_component, residue_coverage, scan_components, two_layer_kappa2, ScanConfig, Seed, Target};
use apollonian::enumerate::{collect_quadruples, count_circles, count_distinct, multiplicity_window, Traversal, DEFAULT_MEMORY_BUDGET, DEFAULT_SPLIT_DEPTH};
use apollonian::forms::residue_set_sm;
use apollonian::render::{emit_svg, place_circles, to_csv, Coloring};
use apollonian::stats::{component_growth, log_sums, root_samples_csv, RootSample};
use apollonian::walks::{core_geodesic, GeodesicCaps};
use apollonian::{admissible_residues, reduce_to_root, PrimeTable, Quadruple, SwapIndex};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

const BUDGET_VAR: &str = "APOLLONIAN_MEMORY_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "apollonian", version, about = "Experiments on integral Apollonian circle packings")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Worker threads for traversals. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Memory budget in bytes for bit sets and windows; overrides
    /// APOLLONIAN_MEMORY_BUDGET.
    #[arg(long, global = true)]
    memory_budget: Option<u64>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print timing to stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

fn quadruple(s: &str) -> Result<Quadruple, String> {
    s.parse().map_err(|e: apollonian::Error| e.to_string())
}

/// Integers, also written as `1e7`.
fn parse_count(s: &str) -> Result<i64, String> {
    if let Ok(v) = s.parse::<i64>() {
        return Ok(v);
    }
    match s.split_once(['e', 'E']) {
        Some((m, e)) => {
            let (m, e): (i64, u32) = (m.parse().map_err(|_| format!("not an integer: {s}"))?, e.parse().map_err(|_| format!("not an integer: {s}"))?);
            10i64.checked_pow(e).and_then(|p| p.checked_mul(m)).ok_or(format!("out of range: {s}"))
        }
        None => Err(format!("not an integer: {s}")),
    }
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Reduce a Descartes quadruple to its root and print the swap word.
    Reduce {
        #[arg(long, value_parser = quadruple, allow_hyphen_values = true)]
        quadruple: Quadruple,
    },
    /// Count circles and configurations up to a bound.
    Enumerate(Walk),
    /// Count distinct positive curvatures up to a bound.
    Distinct(Walk),
    /// Multiplicities of curvatures in [lo, hi).
    Window {
        #[arg(long, value_parser = quadruple, allow_hyphen_values = true)]
        root: Quadruple,
        #[arg(long, value_parser = parse_count)]
        lo: i64,
        #[arg(long, value_parser = parse_count)]
        hi: i64,
        /// Count only circles of the thickened component through the root's
        /// odd primes.
        #[arg(long)]
        component: bool,
        /// Print the histogram of multiplicities instead of the counts.
        #[arg(long)]
        histogram: bool,
        /// Keep only curvatures in admissible classes mod 24 (with --histogram).
        #[arg(long)]
        admissible: bool,
        #[arg(long)]
        half: bool,
    },
    /// Prime component sizes of a packing up to a bound.
    Components {
        #[arg(long, value_parser = quadruple, allow_hyphen_values = true)]
        root: Quadruple,
        #[arg(long, value_parser = parse_count)]
        bound: i64,
        /// Also report residues mod these moduli (each at most 64) for
        /// components whose smallest prime is at most --coverage-cap.
        #[arg(long, value_delimiter = ',')]
        moduli: Vec<u64>,
        #[arg(long, default_value_t = 40)]
        coverage_cap: i64,
    },
    /// Members and thickening of the component of one prime circle.
    Thicken {
        #[arg(long, value_parser = quadruple, allow_hyphen_values = true)]
        root: Quadruple,
        #[arg(long, value_parser = parse_count)]
        bound: i64,
        /// Curvature of the seed circle (an odd prime).
        #[arg(long)]
        seed: i64,
        /// Report residue coverage of the thickened component mod this modulus.
        #[arg(long)]
        modulus: Option<u64>,
        #[arg(long, default_value_t = 1 << 24)]
        max_circles: usize,
    },
    /// Prime component roots and the ratio f0 at each bound.
    RootsCount {
        #[arg(long, value_parser = quadruple, allow_hyphen_values = true)]
        root: Quadruple,
        /// Comma-separated bounds, e.g. 1e6,1e7.
        #[arg(long, value_parser = parse_count, value_delimiter = ',', required = true)]
        bounds: Vec<i64>,
        #[arg(long)]
        half: bool,
    },
    /// Admissible residues of a packing, or residues of circles tangent to a
    /// circle of curvature --circle.
    Residues {
        #[arg(long, value_parser = quadruple, allow_hyphen_values = true)]
        root: Quadruple,
        #[arg(long)]
        modulus: u64,
        #[arg(long, allow_hyphen_values = true)]
        circle: Option<i64>,
    },
    /// Core geodesic from a prime circle to a residue class.
    Walk {
        #[arg(long, value_parser = quadruple, allow_hyphen_values = true)]
        root: Quadruple,
        #[arg(long)]
        m: u64,
        #[arg(long, allow_hyphen_values = true)]
        ell: i64,
        /// Curvature of the starting circle; its birth configuration is used.
        #[arg(long)]
        seed_curvature: i64,
    },
    /// Distinct curvatures two tangencies away from a root circle.
    Kappa2 {
        #[arg(long, value_parser = quadruple, allow_hyphen_values = true)]
        root: Quadruple,
        /// One-based slot of the centre circle in the root quadruple.
        #[arg(long)]
        slot: usize,
        #[arg(long, default_value_t = 1000)]
        b_max: i64,
        #[arg(long, value_parser = parse_count)]
        bound: i64,
    },
    /// Prime log sums, and the component growth table with --grid.
    Stats {
        #[arg(long, value_parser = quadruple, allow_hyphen_values = true)]
        root: Quadruple,
        #[arg(long, value_parser = parse_count)]
        bound: i64,
        /// Bounds for the growth table of the component through the root's
        /// odd primes.
        #[arg(long, value_parser = parse_count, value_delimiter = ',')]
        grid: Option<Vec<i64>>,
        #[arg(long)]
        half: bool,
    },
    /// Draw the packing up to a bound as SVG (or CSV with --format csv).
    Render {
        #[arg(long, value_parser = quadruple, allow_hyphen_values = true)]
        root: Quadruple,
        #[arg(long, value_parser = parse_count)]
        bound: i64,
        /// residue:M, prime, or component:SEED
        #[arg(long, default_value = "prime")]
        color: String,
    },
}

#[derive(Args, Debug, Serialize)]
struct Walk {
    #[arg(long, value_parser = quadruple, allow_hyphen_values = true)]
    root: Quadruple,
    #[arg(long, value_parser = parse_count)]
    bound: i64,
    /// Skip the mirror half of a mirror-symmetric root and rescale.
    #[arg(long)]
    half: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Reduce { .. } => "reduce",
            Command::Enumerate(_) => "enumerate",
            Command::Distinct(_) => "distinct",
            Command::Window { .. } => "window",
            Command::Components { .. } => "components",
            Command::Thicken { .. } => "thicken",
            Command::RootsCount { .. } => "roots-count",
            Command::Residues { .. } => "residues",
            Command::Walk { .. } => "walk",
            Command::Kappa2 { .. } => "kappa2",
            Command::Stats { .. } => "stats",
            Command::Render { .. } => "render",
        }
    }
}

/// Command output before the configuration header is added.
enum Body {
    Json(Value),
    Csv(String),
    /// Written as is, without a header.
    Raw(String),
}

struct Ctx {
    workers: usize,
    budget: u64,
}

impl Ctx {
    fn traversal(&self, half: bool) -> Traversal {
        Traversal { workers: self.workers.max(1), split_depth: DEFAULT_SPLIT_DEPTH, half }
    }

    fn primes(&self, limit: i64) -> anyhow::Result<PrimeTable> {
        let limit = limit.max(2) as u64;
        let needed = PrimeTable::bytes_for(limit);
        if needed > self.budget {
            return Err(apollonian::Error::MemoryBudgetExceeded { needed, budget: self.budget }.into());
        }
        Ok(PrimeTable::new(limit))
    }
}

fn budget(flag: Option<u64>) -> anyhow::Result<u64> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var(BUDGET_VAR) {
        Ok(v) => v.trim().parse().with_context(|| format!("{BUDGET_VAR}={v} is not a byte count")),
        Err(_) => Ok(DEFAULT_MEMORY_BUDGET),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// The configuration in which `curvature` is born, with its slot.
fn birth_configuration(root: &Quadruple, curvature: i64) -> anyhow::Result<(Quadruple, usize)> {
    for k in 0..4 {
        if root.0[k] == curvature {
            return Ok((*root, k));
        }
    }
    let found = collect_quadruples(root, curvature)?.into_iter().find(|q| q.max() == curvature);
    match found {
        Some(q) => Ok((q, q.argmax())),
        None => Err(apollonian::Error::CircleNotFound(format!("curvature {curvature} in ({root})")).into()),
    }
}

fn run(cmd: &Command, ctx: &Ctx, format: Option<Format>) -> anyhow::Result<Body> {
    let json = |default: Format| format.unwrap_or(default) == Format::Json;
    Ok(match cmd {
        Command::Reduce { quadruple } => {
            let (root, word) = reduce_to_root(quadruple)?;
            let labels: Vec<usize> = word.iter().map(|s| s.label()).collect();
            if json(Format::Csv) {
                Body::Json(json!({ "root": root.0, "word": labels }))
            } else {
                let word: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
                Body::Csv(format!("{root}\n[{}]\n", word.join(",")))
            }
        }
        Command::Enumerate(w) => {
            let r = count_circles(&w.root, w.bound, ctx.traversal(w.half))?;
            report_body(&json!({ "bound": r.bound, "circles": r.circles, "quadruples": r.quadruples }), json(Format::Json))
        }
        Command::Distinct(w) => {
            let r = count_distinct(&w.root, w.bound, ctx.budget, ctx.traversal(w.half))?;
            report_body(&to_value(&r), json(Format::Json))
        }
        Command::Window { root, lo, hi, component, histogram, admissible, half } => {
            let w = if *component {
                let primes = ctx.primes(*hi)?;
                let cfg = ScanConfig { target: Some(Target::Exceptional), window: Some((*lo, *hi)), prune: true, budget: ctx.budget, ..Default::default() };
                scan_components(root, hi - 1, &cfg, &primes, ctx.traversal(*half))?.window.expect("window requested")
            } else {
                multiplicity_window(root, *lo, *hi, ctx.budget, ctx.traversal(*half))?
            };
            if *histogram {
                let h = if *admissible { w.histogram_in(&admissible_residues(root, 24)?) } else { w.histogram() };
                if json(Format::Csv) {
                    Body::Json(json!({ "histogram": h }))
                } else {
                    let mut s = String::from("multiplicity,curvatures\n");
                    for (k, n) in h.iter().enumerate() {
                        s.push_str(&format!("{k},{n}\n"));
                    }
                    Body::Csv(s)
                }
            } else if json(Format::Csv) {
                Body::Json(to_value(&w))
            } else {
                Body::Csv(w.to_csv())
            }
        }
        Command::Components { root, bound, moduli, coverage_cap } => {
            let primes = ctx.primes(*bound)?;
            let coverage = (!moduli.is_empty()).then(|| (*coverage_cap, moduli.clone()));
            let cfg = ScanConfig { sizes: true, coverage, ..Default::default() };
            let r = scan_components(root, *bound, &cfg, &primes, ctx.traversal(false))?;
            let (largest, size) = r.largest();
            let coverage: Vec<Value> = r
                .coverage
                .iter()
                .map(|c| {
                    json!({
                        "key": c.key,
                        "smallest_prime": c.smallest_prime,
                        "members": c.members,
                        "residues": moduli.iter().zip(&c.residues).map(|(m, s)| json!({ "modulus": m, "classes": s.members() })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            Body::Json(json!({
                "bound": r.bound,
                "exceptional": r.exceptional,
                "rooted": r.rooted,
                "largest_rooted": r.largest_rooted,
                "largest": { "target": largest, "members": size },
                "coverage": coverage,
            }))
        }
        Command::Thicken { root, bound, seed, modulus, max_circles } => {
            let snap = extract_component(root, Seed::Curvature(*seed), *bound, *max_circles)?;
            let mut v = to_value(&snap);
            if let Some(m) = modulus {
                let c = residue_coverage(&snap, root, *m, true)?;
                v["coverage"] = json!({ "modulus": m, "attained": c.attained.members(), "expected": c.expected.members(), "missing": c.missing });
            }
            Body::Json(v)
        }
        Command::RootsCount { root, bounds, half } => {
            let max = *bounds.iter().max().context("no bounds given")?;
            let primes = ctx.primes(max)?;
            let mut samples = Vec::new();
            for &x in bounds {
                samples.push(RootSample::from_counts(&count_prime_roots(root, x, &primes, ctx.traversal(*half))?)?);
            }
            if json(Format::Csv) {
                Body::Json(to_value(&samples))
            } else {
                Body::Csv(root_samples_csv(&samples))
            }
        }
        Command::Residues { root, modulus, circle } => {
            let (set, what) = match circle {
                Some(a) => (residue_set_sm(*a, *modulus)?, "tangent"),
                None => (admissible_residues(root, *modulus)?, "admissible"),
            };
            if json(Format::Csv) {
                Body::Json(json!({ "modulus": modulus, "kind": what, "classes": set.members() }))
            } else {
                let mut s = String::from("modulus,residue\n");
                for r in set.members() {
                    s.push_str(&format!("{modulus},{r}\n"));
                }
                Body::Csv(s)
            }
        }
        Command::Walk { root, m, ell, seed_curvature } => {
            let (q, slot) = birth_configuration(root, *seed_curvature)?;
            let g = core_geodesic(&q, SwapIndex::from_zero_based(slot), *ell, *m, &GeodesicCaps::default())?;
            g.validate()?;
            Body::Json(to_value(&g))
        }
        Command::Kappa2 { root, slot, b_max, bound } => {
            let k = two_layer_kappa2(root, SwapIndex::new(*slot)?, *b_max, *bound, 10, ctx.budget)?;
            Body::Json(to_value(&k))
        }
        Command::Stats { root, bound, grid, half } => match grid {
            Some(grid) => {
                let primes = ctx.primes(*grid.last().context("empty grid")?)?;
                let t = component_growth(root, Target::Exceptional, grid, &primes, ctx.traversal(*half))?;
                if json(Format::Csv) {
                    Body::Json(to_value(&t))
                } else {
                    Body::Csv(t.to_csv())
                }
            }
            None => {
                let primes = ctx.primes(*bound)?;
                let s = log_sums(root, *bound, &primes, ctx.traversal(*half))?;
                let mut v = to_value(&s);
                v["psi_ratio"] = json!(s.psi_ratio());
                v["pair_ratio"] = json!(s.pair_ratio());
                report_body(&v, json(Format::Json))
            }
        },
        Command::Render { root, bound, color } => {
            let coloring = match color.split_once(':') {
                None if color == "prime" => Coloring::PrimeVsComposite,
                Some(("residue", m)) => Coloring::ResidueMod(m.parse().with_context(|| format!("bad modulus in --color {color}"))?),
                Some(("component", k)) => {
                    let k: i64 = k.parse().with_context(|| format!("bad seed in --color {color}"))?;
                    Coloring::Component(extract_component(root, Seed::Curvature(k), *bound, 1 << 24)?)
                }
                _ => bail!(Usage(format!("--color {color}: expected residue:M, prime or component:SEED"))),
            };
            let placed = place_circles(root, *bound)?;
            if format == Some(Format::Csv) {
                Body::Csv(to_csv(&placed, &coloring)?)
            } else if format == Some(Format::Json) {
                Body::Json(to_value(&placed))
            } else {
                Body::Raw(emit_svg(&placed, &coloring)?)
            }
        }
    })
}

/// One-row CSV or JSON of a flat object.
fn report_body(v: &Value, json: bool) -> Body {
    if json {
        return Body::Json(v.clone());
    }
    let obj = v.as_object().expect("flat report");
    let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    let vals: Vec<String> = obj.values().map(|x| x.to_string()).collect();
    Body::Csv(format!("{}\n{}\n", keys.join(","), vals.join(",")))
}

/// A usage error detected after parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn render_output(cli: &Cli, body: Body) -> String {
    let config = json!({ "command": cli.command.name(), "args": to_value(&cli.command), "workers": cli.common.workers });
    match body {
        Body::Json(result) => {
            let doc = json!({ "config": config, "result": result });
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
        Body::Csv(s) => format!("# apollonian {}\n{s}", serde_json::to_string(&config).expect("serializable")),
        Body::Raw(s) => s,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = std::time::Instant::now();
    let result = budget(cli.common.memory_budget).and_then(|budget| {
        let ctx = Ctx { workers: cli.common.workers, budget };
        run(&cli.command, &ctx, cli.common.format)
    });
    let body = match result {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e:#}");
            return if e.downcast_ref::<Usage>().is_some() { ExitCode::from(2) } else { ExitCode::from(1) };
        }
    };
    let out = render_output(&cli, body);
    match &cli.common.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, out) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{out}"),
    }
    if cli.common.verbose {
        eprintln!("{} finished in {:.2}s", cli.command.name(), start.elapsed().as_secs_f64());
    }
    ExitCode::SUCCESS
}
