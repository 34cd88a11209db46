use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use mefkit::abelian::{self, FiniteHom, IntMatrix};
use mefkit::complex::{CellComplex, ComplexFile};
use mefkit::dynamics::{self, EquicontinuityParams, FiniteAction, GridFunction, GridFunctionFile, InvarianceParams, SystemFile, TorusSystem};
use mefkit::lattice::{self, FunctionFile, LatticeFunction, PartSummary, Tolerance};
use mefkit::quotient::{self, MapFile, PreimageMode, QuotientMap};
use mefkit::selftest::{self, DEFAULT_SEED};
use mefkit::spectral::{self, MEFReport, MefParams, SpectralError, ROTATION_TOL};

#[derive(Parser)]
#[command(name = "mefkit", version, about = "Monotone quotients, irreducible parts and equicontinuous factors on finite models")]
struct Cli {
    /// Emit JSON (the default).
    #[arg(long, global = true, conflicts_with = "text")]
    json: bool,
    /// Emit a short human-readable summary instead of JSON.
    #[arg(long, global = true)]
    text: bool,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Tolerance override; its meaning depends on the command.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Betti numbers b0 and b1 of a complex.
    Betti { complex: PathBuf },
    /// Irreducible decomposition of a function on a complex.
    Decompose(DecomposeArgs),
    /// Monotonicity of a quotient map under each criterion.
    CheckMonotone(CheckArgs),
    /// Monotone hull of a quotient map, optionally equivariant.
    Hull(HullArgs),
    /// Modulus-of-continuity estimate for functions under a torus system.
    Equicont(EquicontArgs),
    /// Equicontinuous factor of a torus system against a model complex.
    Mef(MefArgs),
    /// Point-spectrum generators from a mef report.
    Spectrum { #[arg(long)] report: PathBuf },
    /// Classify a torus homomorphism, optionally with a finite part.
    ClassifyHom(HomArgs),
    /// Run the self-test suites.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    function: PathBuf,
    /// Overrides the complex named in the function file.
    #[arg(long)]
    complex: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    map: PathBuf,
    /// Comma-separated subset of a, b, e.
    #[arg(long, default_value = "a,b,e")]
    criteria: String,
    /// Random fiber-constant functions for the algebraic criterion.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// auto, exhaustive or sampled.
    #[arg(long, default_value = "auto")]
    mode: String,
}

#[derive(Args)]
struct HullArgs {
    map: PathBuf,
    /// Vertex permutations of the domain as a JSON list of lists.
    #[arg(long)]
    generators: Option<String>,
}

#[derive(Args)]
struct EquicontArgs {
    #[arg(long)]
    system: PathBuf,
    /// Grid function files; repeat for a family.
    #[arg(long)]
    function: Vec<PathBuf>,
    /// Character frequencies such as "1" or "1,-2"; repeat for a family.
    #[arg(long, allow_hyphen_values = true)]
    character: Vec<String>,
    #[arg(long, default_value_t = EquicontinuityParams::DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(long, default_value_t = EquicontinuityParams::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Comma-separated deltas; defaults to 2^i/N for i = 0..4.
    #[arg(long)]
    deltas: Option<String>,
    /// Also compare with the family of irreducible parts.
    #[arg(long)]
    irr: bool,
}

#[derive(Args)]
struct MefArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 8)]
    kmax: usize,
    #[arg(long, default_value_t = InvarianceParams::default().steps)]
    steps: usize,
    /// Density radius for the orbit heuristic; defaults to 2/N.
    #[arg(long)]
    eps_net: Option<f64>,
}

#[derive(Args)]
struct HomArgs {
    #[arg(long, allow_hyphen_values = true)]
    matrix: String,
    /// Finite part such as "Z/4->Z/2:1->1".
    #[arg(long)]
    finite: Option<String>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Suite name, or "all".
    #[arg(default_value = "all")]
    suite: String,
    #[arg(long)]
    list: bool,
}

#[derive(Serialize)]
struct Input {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Verdict {
    name: String,
    passed: bool,
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    version: String,
    inputs: Vec<Input>,
    parameters: Value,
    results: Value,
    verdicts: Vec<Verdict>,
    seed: u64,
    tolerances: Value,
}

struct Run {
    command: &'static str,
    seed: u64,
    inputs: Vec<Input>,
    parameters: Map<String, Value>,
    tolerances: Map<String, Value>,
    verdicts: Vec<Verdict>,
}

impl Run {
    fn new(command: &'static str, seed: u64) -> Self {
        Self { command, seed, inputs: Vec::new(), parameters: Map::new(), tolerances: Map::new(), verdicts: Vec::new() }
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.push(Input { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) });
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    fn read_json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let text = self.read(path)?;
        serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
    }

    fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(key.into(), serde_json::to_value(value).expect("serializable"));
    }

    fn tol(&mut self, key: &str, value: f64) {
        self.tolerances.insert(key.into(), json!(value));
    }

    fn verdict(&mut self, name: &str, passed: bool) {
        self.verdicts.push(Verdict { name: name.into(), passed });
    }

    fn finish(self, results: impl Serialize) -> RunReport {
        RunReport {
            command: self.command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            inputs: self.inputs,
            parameters: Value::Object(self.parameters),
            results: serde_json::to_value(results).expect("serializable"),
            verdicts: self.verdicts,
            seed: self.seed,
            tolerances: Value::Object(self.tolerances),
        }
    }
}

/// Rebuilds every object with keys in sorted order.
fn sorted(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let entries: BTreeMap<String, Value> = m.into_iter().map(|(k, v)| (k, sorted(v))).collect();
            Value::Object(entries.into_iter().collect())
        }
        Value::Array(a) => Value::Array(a.into_iter().map(sorted).collect()),
        other => other,
    }
}

fn load_complex(run: &mut Run, path: &Path) -> Result<CellComplex> {
    let file: ComplexFile = run.read_json(path)?;
    CellComplex::from_file(&file).with_context(|| format!("invalid complex {}", path.display()))
}

fn relative_to(base: &Path, target: &str) -> PathBuf {
    let t = Path::new(target);
    if t.is_absolute() {
        t.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(t)
    }
}

fn load_map(run: &mut Run, path: &Path) -> Result<QuotientMap> {
    let file: MapFile = run.read_json(path)?;
    let domain = load_complex(run, &relative_to(path, &file.domain))?;
    let codomain = load_complex(run, &relative_to(path, &file.codomain))?;
    Ok(QuotientMap::new(Arc::new(domain), Arc::new(codomain), file.assignment)?)
}

fn load_system(run: &mut Run, path: &Path) -> Result<TorusSystem> {
    let file: SystemFile = run.read_json(path)?;
    TorusSystem::from_file(&file).with_context(|| format!("invalid system {}", path.display()))
}

fn require_quotient(p: &QuotientMap) -> Result<()> {
    p.validate().map_err(|v| anyhow!("not a quotient map: {}", serde_json::to_string(&v).unwrap_or_default()))
}

fn cmd_betti(cli: &Cli, complex: &Path) -> Result<RunReport> {
    let mut run = Run::new("betti", cli.seed);
    let k = load_complex(&mut run, complex)?;
    run.tol("rank", 0.0);
    Ok(run.finish(json!({ "b0": k.betti0(), "b1": k.betti1(), "vertices": k.vertex_count(), "edges": k.edges().len(), "squares": k.squares().len() })))
}

fn cmd_decompose(cli: &Cli, args: &DecomposeArgs) -> Result<RunReport> {
    let mut run = Run::new("decompose", cli.seed);
    let file: FunctionFile = run.read_json(&args.function)?;
    let complex_path = args.complex.clone().unwrap_or_else(|| relative_to(&args.function, &file.complex));
    let k = load_complex(&mut run, &complex_path)?;
    let tol = Tolerance::new(cli.tol.unwrap_or(0.0))?;
    run.tol("support", tol.eps());
    let f = file.to_function(&k)?;
    let parts = lattice::irreducible_decomposition(&k, &f, tol)?;
    let sum = lattice::reconstruct(&parts)?.unwrap_or_else(|| LatticeFunction::zero(&k));
    let error = sum.sub(&f)?.sup_norm();
    let orthogonal = parts.iter().enumerate().all(|(i, a)| parts[i + 1..].iter().all(|b| lattice::orthogonal(a, b).unwrap_or(false)));
    let irreducible = parts.iter().all(|p| lattice::is_irreducible(&k, p, tol).unwrap_or(false));
    run.verdict("reconstruction_within_tolerance", error <= tol.eps());
    run.verdict("parts_orthogonal", orthogonal);
    run.verdict("parts_irreducible", irreducible);
    let summaries: Vec<PartSummary> = parts.iter().map(|p| PartSummary::of(p, tol)).collect();
    Ok(run.finish(json!({ "part_count": parts.len(), "parts": summaries, "reconstruction_error": error })))
}

fn cmd_check_monotone(cli: &Cli, args: &CheckArgs) -> Result<RunReport> {
    let mut run = Run::new("check-monotone", cli.seed);
    let p = load_map(&mut run, &args.map)?;
    require_quotient(&p)?;
    let criteria: Vec<&str> = args.criteria.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if criteria.is_empty() || criteria.iter().any(|c| !["a", "b", "e"].contains(c)) {
        bail!("criteria must be a comma-separated subset of a, b, e");
    }
    let mode = match args.mode.as_str() {
        "auto" => PreimageMode::Auto { seed: cli.seed },
        "exhaustive" => PreimageMode::Exhaustive,
        "sampled" => PreimageMode::Sampled { random_subsets: quotient::DEFAULT_RANDOM_SUBSETS, seed: cli.seed },
        other => bail!("unknown mode {other:?}"),
    };
    run.param("criteria", &criteria);
    run.param("mode", &args.mode);
    run.param("samples", args.samples);
    run.tol("support", 0.0);
    let mut results = Map::new();
    let mut verdicts = Vec::new();
    for c in &criteria {
        let (name, monotone, detail) = match *c {
            "a" => {
                let m = quotient::is_monotone_fibers(&p)?;
                ("fibers_connected", m, json!({ "monotone": m }))
            }
            "b" => {
                let v = quotient::is_monotone_connected_preimages(&p, mode)?;
                ("preimages_connected", v.monotone, serde_json::to_value(&v)?)
            }
            _ => {
                let v = quotient::is_monotone_algebraic(&p, args.samples, cli.seed)?;
                ("algebraic", v.monotone, serde_json::to_value(&v)?)
            }
        };
        results.insert(name.into(), detail);
        verdicts.push(monotone);
        run.verdict(name, monotone);
    }
    let agree = verdicts.windows(2).all(|w| w[0] == w[1]);
    run.verdict("criteria_agree", agree);
    results.insert("agreement".into(), json!(agree));
    Ok(run.finish(Value::Object(results)))
}

fn cmd_hull(cli: &Cli, args: &HullArgs) -> Result<RunReport> {
    let mut run = Run::new("hull", cli.seed);
    let p = load_map(&mut run, &args.map)?;
    require_quotient(&p)?;
    let (hull, descended) = match &args.generators {
        Some(text) => {
            let gens: Vec<Vec<usize>> = serde_json::from_str(text).context("generators must be a JSON list of permutations")?;
            run.param("generators", &gens);
            let act = FiniteAction::new(p.domain().clone(), gens)?;
            let eh = dynamics::equivariant_monotone_hull(&act, &p)?;
            (eh.hull, Some(json!({ "on_hull": eh.descended, "on_codomain": eh.codomain_generators })))
        }
        None => (quotient::monotone_hull(&p)?, None),
    };
    let composed = quotient::compose(&hull.phat, &hull.q)?;
    run.verdict("factorization_exact", composed.assignment() == p.assignment());
    run.verdict("q_monotone", quotient::is_monotone_fibers(&hull.q)?);
    run.tol("support", 0.0);
    let codomain = hull.q.codomain().to_file();
    Ok(run.finish(json!({
        "q": hull.q.assignment(),
        "phat": hull.phat.assignment(),
        "hull_codomain": codomain,
        "hull_betti": { "b0": hull.q.codomain().betti0(), "b1": hull.q.codomain().betti1() },
        "descended_generators": descended,
    })))
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>> {
    text.split(',').map(|s| s.trim().parse::<T>().map_err(|_| anyhow!("cannot parse {s:?} in {text:?}"))).collect()
}

fn cmd_equicont(cli: &Cli, args: &EquicontArgs) -> Result<RunReport> {
    let mut run = Run::new("equicont", cli.seed);
    let sys = load_system(&mut run, &args.system)?;
    let mut family = Vec::new();
    for path in &args.function {
        let file: GridFunctionFile = run.read_json(path)?;
        family.push(GridFunction::from_file(&file)?);
    }
    for k in &args.character {
        family.push(spectral::character(&parse_list::<i64>(k)?, sys.grid()));
    }
    if family.is_empty() {
        bail!("give at least one --function or --character");
    }
    let mut params = EquicontinuityParams::defaults(sys.grid());
    params.horizon = args.horizon;
    params.threshold = args.threshold;
    if let Some(d) = &args.deltas {
        params.deltas = parse_list(d)?;
    }
    run.param("horizon", params.horizon);
    run.param("deltas", &params.deltas);
    run.param("characters", &args.character);
    run.param("action", sys.action_kind());
    run.param("quantifier", "semigroup generated by the map");
    run.tol("threshold", params.threshold);
    let mut results = Map::new();
    if args.irr {
        let tol = Tolerance::new(cli.tol.unwrap_or(Tolerance::GRID.eps()))?;
        run.tol("support", tol.eps());
        let res = dynamics::irr_equicontinuity_check(&sys, &family, &params, tol)?;
        run.verdict("equicontinuous", res.family.verdict);
        run.verdict("irreducible_parts_agree", res.agree);
        results.insert("irr".into(), serde_json::to_value(&res)?);
    } else {
        let est = dynamics::family_equicontinuity(&sys, &family, &params)?;
        run.verdict("equicontinuous", est.verdict);
        results.insert("estimate".into(), serde_json::to_value(&est)?);
    }
    Ok(run.finish(Value::Object(results)))
}

fn cmd_mef(cli: &Cli, args: &MefArgs) -> Result<(RunReport, bool)> {
    let mut run = Run::new("mef", cli.seed);
    let sys = load_system(&mut run, &args.system)?;
    let model = load_complex(&mut run, &args.model)?;
    let mut params = MefParams::new(args.kmax, cli.tol.unwrap_or(ROTATION_TOL));
    params.invariance.steps = args.steps;
    params.invariance.eps_net = args.eps_net;
    run.param("kmax", args.kmax);
    run.param("steps", args.steps);
    run.param("relation_height", params.invariance.relation_height);
    run.param("max_denominator", params.invariance.max_denominator);
    run.tol("eigen", params.tol);
    run.tol("eps_net", args.eps_net.unwrap_or(2.0 / sys.grid() as f64));
    run.tol("phase_recovery", 1e-9);
    run.tol("symmetry", 1e-9);
    let (report, violated) = match spectral::mef_extract(&sys, &model, &params) {
        Ok(r) => (r, false),
        Err(SpectralError::BoundViolation(r)) => {
            eprintln!("bound violated: m = {} > b1/b0 = {}/{}", r.m, r.bound_b1, r.bound_b0);
            (*r, true)
        }
        Err(e) => return Err(e.into()),
    };
    run.verdict("bound_ok", report.bound_ok);
    run.verdict("symmetric", report.symmetric);
    Ok((run.finish(&report), violated))
}

fn cmd_spectrum(cli: &Cli, path: &Path) -> Result<RunReport> {
    let mut run = Run::new("spectrum", cli.seed);
    let value: Value = run.read_json(path)?;
    let inner = match value.get("results") {
        Some(r) if value.get("command").and_then(Value::as_str) == Some("mef") => r.clone(),
        _ => value,
    };
    let report: MEFReport = serde_json::from_value(inner).context("not a mef report")?;
    let (rank_ok, results) = match spectral::point_spectrum_group(&report) {
        Ok(ps) => (true, serde_json::to_value(&ps)?),
        Err(e) => (false, json!({ "error": e.to_string(), "rank": report.frequency_lattice_basis.len(), "bound_b1": report.bound_b1 })),
    };
    run.verdict("rank_within_b1", rank_ok);
    Ok(run.finish(results))
}

fn cmd_classify(cli: &Cli, args: &HomArgs) -> Result<RunReport> {
    let mut run = Run::new("classify-hom", cli.seed);
    let m = IntMatrix::parse(&args.matrix)?;
    run.param("matrix", &args.matrix);
    run.tol("exact", 0.0);
    match &args.finite {
        None => Ok(run.finish(abelian::classify_torus_hom(&m))),
        Some(text) => {
            run.param("finite", text);
            let f = FiniteHom::parse(text)?;
            let (class, summary) = abelian::classify_product_hom(&f, &m)?;
            run.verdict("image_order_at_most_source_order", summary.image_order <= summary.source_order);
            Ok(run.finish(json!({ "classification": class, "finite_part": summary })))
        }
    }
}

fn cmd_selftest(cli: &Cli, args: &SelftestArgs) -> Result<Option<RunReport>> {
    if args.list {
        for s in selftest::SUITES {
            println!("{}", s.name);
        }
        return Ok(None);
    }
    let mut run = Run::new("selftest", cli.seed);
    let suites: Vec<&selftest::Suite> = if args.suite == "all" {
        selftest::SUITES.iter().collect()
    } else {
        vec![selftest::suite(&args.suite).ok_or_else(|| anyhow!("unknown suite {:?}; see --list", args.suite))?]
    };
    run.param("suite", &args.suite);
    run.tol("eigen_rotation", ROTATION_TOL);
    run.tol("eigen_warped", spectral::WARPED_TOL);
    run.tol("grid_support", Tolerance::GRID.eps());
    run.tol("equicontinuity_threshold", EquicontinuityParams::DEFAULT_THRESHOLD);
    let reports: Vec<selftest::SuiteReport> = suites.iter().map(|s| s.run(cli.seed)).collect();
    for r in &reports {
        run.verdict(&format!("criterion {} {}", r.criterion, r.suite), r.passed);
    }
    Ok(Some(run.finish(reports)))
}

fn print_text(report: &RunReport) {
    println!("{} (mefkit {})", report.command, report.version);
    if report.command == "selftest" {
        if let Some(suites) = report.results.as_array() {
            for s in suites {
                let pass = s["passed"].as_bool().unwrap_or(false);
                println!("criterion {} {}: {}", s["criterion"], s["suite"].as_str().unwrap_or(""), if pass { "PASS" } else { "FAIL" });
                for c in s["checks"].as_array().into_iter().flatten() {
                    let ok = c["passed"].as_bool().unwrap_or(false);
                    println!("  {} {}: {}", if ok { "ok  " } else { "FAIL" }, c["name"].as_str().unwrap_or(""), c["detail"].as_str().unwrap_or(""));
                }
            }
        }
        return;
    }
    if let Value::Object(m) = &report.results {
        for (k, v) in m {
            let shown = match v {
                Value::Object(_) | Value::Array(_) => {
                    let s = v.to_string();
                    if s.len() > 120 {
                        format!("{}...", &s[..s.char_indices().nth(117).map_or(s.len(), |(i, _)| i)])
                    } else {
                        s
                    }
                }
                other => other.to_string(),
            };
            println!("{k}: {shown}");
        }
    }
    for v in &report.verdicts {
        println!("{} {}", if v.passed { "PASS" } else { "FAIL" }, v.name);
    }
}

fn execute(cli: &Cli) -> Result<Option<(RunReport, bool)>> {
    let plain = |r: RunReport| Some((r, false));
    Ok(match &cli.command {
        Command::Betti { complex } => plain(cmd_betti(cli, complex)?),
        Command::Decompose(a) => plain(cmd_decompose(cli, a)?),
        Command::CheckMonotone(a) => plain(cmd_check_monotone(cli, a)?),
        Command::Hull(a) => plain(cmd_hull(cli, a)?),
        Command::Equicont(a) => plain(cmd_equicont(cli, a)?),
        Command::Mef(a) => Some(cmd_mef(cli, a)?),
        Command::Spectrum { report } => plain(cmd_spectrum(cli, report)?),
        Command::ClassifyHom(a) => plain(cmd_classify(cli, a)?),
        Command::Selftest(a) => cmd_selftest(cli, a)?.map(|r| (r, false)),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some((report, violated))) => {
            if cli.text {
                print_text(&report);
            } else {
                let value = sorted(serde_json::to_value(&report).expect("serializable"));
                println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
            }
            if violated || report.verdicts.iter().any(|v| !v.passed) {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
