use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use bellforge::geometry::{
    build_inequality, is_facet, max_over_vertices, membership, pd_facet_classes, saturating_vertices,
    InequalityName, MembershipResult,
};
use bellforge::io::{
    behavior_to_json, curve_point_to_json, curve_to_csv, num_to_json, parse_behavior, table_to_json,
    to_canonical_string, values_to_json, AnyBehavior,
};
use bellforge::numeric::{det_exact, DenseMatrix};
use bellforge::quantum::{behavior_of, chsh_leak_strategy, tilted_hardy_strategy};
use bellforge::randomness::{curve, GuessingBound};
use bellforge::reference::facet_witness_matrix;
use bellforge::selftest::{format_line, run, CRITERIA};
use bellforge::{
    input_vertices, joint_from_conditional, mdpdl_vertices, pd_conditional_vertices, Behavior, BehaviorKind, BellError, BellScenario, Num,
    Policy, Rational, RelaxationParams, Scalar, VertexSet,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

#[derive(Parser, Debug)]
#[command(name = "bellforge", version, about = "Bell polytopes with relaxed measurement and parameter independence")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BELLFORGE_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate input, conditional or joint vertices.
    Vertices(VerticesArgs),
    /// Evaluate a named inequality on a behavior file.
    Check(CheckArgs),
    /// Facet report for the pd_facet inequality.
    Facet(FacetArgs),
    /// Convex decomposition or separating functional for a behavior file.
    Decompose(DecomposeArgs),
    /// Behavior of a built-in two-qubit strategy.
    Quantum(QuantumArgs),
    /// Guessing-probability bound under input leakage.
    Pg(PgArgs),
    /// Run the acceptance suite.
    SelfTest(SelfTestArgs),
}

/// Relaxation parameters, as `p/q` rationals or decimals.
#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// Lower bound on p(xy) [default: 1/(nX nY)].
    #[arg(long)]
    l: Option<String>,
    /// Upper bound on p(xy) [default: 1/(nX nY)].
    #[arg(long)]
    h: Option<String>,
    /// Sets both epsA and epsB.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long = "epsA", alias = "eps-a")]
    eps_a: Option<String>,
    #[arg(long = "epsB", alias = "eps-b")]
    eps_b: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    /// Output path, `-` for standard output.
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct VerticesArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[command(flatten)]
    params: ParamArgs,
    /// Scenario as nA,nB,nX,nY.
    #[arg(long, default_value = "2,2,2,2")]
    scenario: String,
    /// Drop non-extreme points from joint vertex lists.
    #[arg(long)]
    filter_extremal: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Input,
    Conditional,
    Joint,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// mdl, pd_facet, mdpdl, chsh or chsh_leak.
    #[arg(long)]
    ineq: String,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    behavior: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct FacetArgs {
    #[arg(long)]
    eps: String,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    behavior: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    TiltedHardy,
    ChshLeak,
}

#[derive(Args, Debug)]
struct QuantumArgs {
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    #[arg(long, value_parser = real)]
    eps: Option<f64>,
    #[arg(long, value_parser = real)]
    kappa: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct PgArgs {
    #[arg(long, value_parser = real)]
    kappa: f64,
    /// Single observed CHSH value.
    #[arg(long, value_parser = real, conflicts_with = "curve")]
    beta: Option<f64>,
    /// Number of uniformly spaced points on [beta_c, beta_q].
    #[arg(long)]
    curve: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct SelfTestArgs {
    /// Run only these criteria (e.g. `--only 1,2,7`).
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
}

/// Parsed parameters with a common policy.
enum Params {
    Exact(RelaxationParams<Rational>),
    Float(RelaxationParams<f64>),
}

impl ParamArgs {
    fn resolve(&self, sc: BellScenario, force_float: bool) -> anyhow::Result<Params> {
        let parse = |name: &str, v: &Option<String>| -> anyhow::Result<Option<Scalar>> {
            v.as_deref().map(|s| s.parse::<Scalar>().with_context(|| format!("--{name}"))).transpose()
        };
        if self.eps.is_some() && (self.eps_a.is_some() || self.eps_b.is_some()) {
            bail!(BellError::InvalidParams("--eps cannot be combined with --epsA/--epsB".into()));
        }
        let eps = parse("eps", &self.eps)?;
        let given = [
            parse("l", &self.l)?,
            parse("h", &self.h)?,
            parse("epsA", &self.eps_a)?.or(eps.clone()),
            parse("epsB", &self.eps_b)?.or(eps),
            parse("kappa", &self.kappa)?,
        ];
        let float = given.iter().flatten().any(|s| s.policy() == Policy::Float);
        if float {
            eprintln!("warning: decimal parameters select floating-point arithmetic; use p/q for exact results");
        }
        let uniform = Scalar::Exact(Rational::ratio(1, sc.n_inputs() as i64));
        let zero = Scalar::Exact(Rational::zero());
        let vals: Vec<Scalar> = given
            .iter()
            .enumerate()
            .map(|(i, v)| v.clone().unwrap_or_else(|| if i < 2 { uniform.clone() } else { zero.clone() }))
            .collect();
        fn build<T: Num>(sc: BellScenario, v: &[Scalar]) -> bellforge::Result<RelaxationParams<T>> {
            let c = |i: usize| T::from_scalar(&v[i]);
            RelaxationParams::new(sc, c(0)?, c(1)?, c(2)?, c(3)?, c(4)?)
        }
        Ok(if float || force_float {
            Params::Float(build(sc, &vals.iter().map(|s| Scalar::Float(s.to_f64())).collect::<Vec<_>>())?)
        } else {
            Params::Exact(build(sc, &vals)?)
        })
    }
}

/// Float-only parameters still accept `p/q`.
fn real(s: &str) -> Result<f64, String> {
    s.parse::<Scalar>().map(|v| v.to_f64()).map_err(|e| e.to_string())
}

fn parse_scenario(s: &str) -> anyhow::Result<BellScenario> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| BellError::InvalidScenario(format!("expected nA,nB,nX,nY, got `{s}`")))?;
    if parts.len() != 4 {
        bail!(BellError::InvalidScenario(format!("expected four numbers, got `{s}`")));
    }
    Ok(BellScenario::new(parts[0], parts[1], parts[2], parts[3])?)
}

fn read_behavior(path: &Path) -> anyhow::Result<AnyBehavior> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_behavior(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn emit(out: &OutArgs, text: &str) -> anyhow::Result<()> {
    if out.out.as_os_str() == "-" {
        let mut so = std::io::stdout().lock();
        match so.write_all(text.as_bytes()).and_then(|()| so.flush()) {
            // a closed pipe (e.g. `| head`) is not an error
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
            _ => {}
        }
    } else {
        fs::write(&out.out, text).with_context(|| format!("writing {}", out.out.display()))?;
    }
    Ok(())
}

fn json_only(format: Format, what: &str) -> anyhow::Result<()> {
    if format == Format::Csv {
        bail!(BellError::InvalidParams(format!("{what} has no CSV form")));
    }
    Ok(())
}

fn vertex_set<T: Num>(kind: KindArg, p: &RelaxationParams<T>, sc: BellScenario, filter: bool) -> bellforge::Result<VertexSet<T>> {
    match kind {
        KindArg::Input => input_vertices(p, sc),
        KindArg::Conditional => pd_conditional_vertices(&p.eps_a, &p.eps_b, sc),
        KindArg::Joint => mdpdl_vertices(p, sc, filter),
    }
}

fn vertices_json<T: Num>(v: &VertexSet<T>) -> Value {
    Value::Array(v.vertices.iter().map(|p| table_to_json(v.scenario, v.kind, p)).collect())
}

fn cmd_vertices(a: &VerticesArgs) -> anyhow::Result<String> {
    json_only(a.format, "vertices")?;
    let sc = parse_scenario(&a.scenario)?;
    let v = match a.params.resolve(sc, false)? {
        Params::Exact(p) => vertices_json(&vertex_set(a.kind, &p, sc, a.filter_extremal)?),
        Params::Float(p) => vertices_json(&vertex_set(a.kind, &p, sc, a.filter_extremal)?),
    };
    Ok(to_canonical_string(&v))
}

fn check_json<T: Num>(name: InequalityName, p: &RelaxationParams<T>, b: &Behavior<T>) -> bellforge::Result<Value> {
    let f = build_inequality(name, p, b.scenario())?;
    // A conditional table meets a joint functional through the fixed input
    // distribution, which exists only when l = h.
    let joined;
    let b = if f.kind == BehaviorKind::Joint && b.kind() == BehaviorKind::Conditional && p.l == p.h {
        let inp = Behavior::input(b.scenario(), vec![p.l.clone(); b.scenario().n_inputs()])?;
        joined = joint_from_conditional(b, &inp)?;
        &joined
    } else {
        b
    };
    let value = f.evaluate_behavior(b)?;
    let margin = value.clone() - f.bound.clone();
    Ok(json!({
        "inequality": name.as_str(),
        "value": num_to_json(&value),
        "bound": num_to_json(&f.bound),
        "margin": num_to_json(&margin),
        "violated": margin > T::zero(),
    }))
}

fn cmd_check(a: &CheckArgs) -> anyhow::Result<String> {
    json_only(a.format, "check")?;
    let name: InequalityName = a.ineq.parse()?;
    let b = read_behavior(&a.behavior)?;
    let sc = match &b {
        AnyBehavior::Exact(x) => x.scenario(),
        AnyBehavior::Float(x) => x.scenario(),
    };
    let v = match (a.params.resolve(sc, b.policy() == Policy::Float)?, &b) {
        (Params::Exact(p), AnyBehavior::Exact(x)) => check_json(name, &p, x)?,
        (Params::Float(p), _) => check_json(name, &p, &b.to_float())?,
        (Params::Exact(_), AnyBehavior::Float(_)) => unreachable!("float behavior forces float parameters"),
    };
    Ok(to_canonical_string(&v))
}

fn facet_json<T: Num>(eps: &T) -> bellforge::Result<Value> {
    let sc = BellScenario::CHSH;
    let v = pd_conditional_vertices(eps, eps, sc)?;
    let f = build_inequality(InequalityName::PdFacet, &RelaxationParams::pd(sc, eps.clone(), eps.clone())?, sc)?;
    let max = max_over_vertices(&f, &v)?;
    let rep = is_facet(&f, &v)?;
    let classes = pd_facet_classes(eps, &saturating_vertices(&f, &v)?)?;
    // Float entries are converted exactly, so only the matrix itself is rounded.
    let rows: Vec<Vec<Rational>> = facet_witness_matrix(eps)?
        .to_rows()
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| match x.to_scalar() {
                    Scalar::Exact(q) => q,
                    Scalar::Float(f) => Rational::from_float(f).expect("finite entry"),
                })
                .collect()
        })
        .collect();
    let det = det_exact(&DenseMatrix::from_rows(rows)?)?;
    let det = match T::POLICY {
        Policy::Exact => num_to_json(&det),
        Policy::Float => num_to_json(&det.to_f64()),
    };
    let mut m = Map::new();
    m.insert("eps".into(), num_to_json(eps));
    m.insert("facet".into(), Value::Bool(rep.facet));
    m.insert("bound".into(), num_to_json(&f.bound));
    m.insert("max".into(), num_to_json(&max.value));
    m.insert("saturating_count".into(), Value::from(rep.saturating_count));
    m.insert("saturating_dim".into(), Value::from(rep.saturating_dim));
    m.insert("polytope_dim".into(), Value::from(rep.polytope_dim));
    m.insert("class_counts".into(), Value::from(classes[..5].to_vec()));
    m.insert("unclassified".into(), Value::from(classes[5]));
    m.insert("det".into(), det);
    m.insert("vertex_count".into(), Value::from(v.len()));
    Ok(Value::Object(m))
}

fn cmd_facet(a: &FacetArgs) -> anyhow::Result<String> {
    json_only(a.format, "facet")?;
    let eps: Scalar = a.eps.parse().context("--eps")?;
    let v = match eps {
        Scalar::Exact(e) => facet_json(&e)?,
        Scalar::Float(e) => {
            eprintln!("warning: decimal parameters select floating-point arithmetic; use p/q for exact results");
            facet_json(&e)?
        }
    };
    Ok(to_canonical_string(&v))
}

fn decompose_json<T: Num>(p: &RelaxationParams<T>, b: &Behavior<T>) -> bellforge::Result<Value> {
    let sc = b.scenario();
    let v = match b.kind() {
        BehaviorKind::Conditional => pd_conditional_vertices(&p.eps_a, &p.eps_b, sc)?,
        BehaviorKind::Joint => mdpdl_vertices(p, sc, false)?,
        BehaviorKind::Input => input_vertices(p, sc)?,
    };
    Ok(match membership(b, &v)? {
        MembershipResult::Inside { weights, residual } => {
            let terms: Vec<Value> = weights
                .iter()
                .enumerate()
                .filter(|(_, w)| !w.is_negligible())
                .map(|(i, w)| {
                    json!({
                        "index": i,
                        "weight": num_to_json(w),
                        "vertex": behavior_json_values(&v, i),
                    })
                })
                .collect();
            json!({"status": "inside", "residual": residual, "vertex_count": v.len(), "terms": terms})
        }
        MembershipResult::Outside { separator, gap } => json!({
            "status": "outside",
            "vertex_count": v.len(),
            "separator": {"coeffs": values_to_json(&separator.coeffs), "bound": num_to_json(&separator.bound)},
            "gap": num_to_json(&gap),
        }),
    })
}

fn behavior_json_values<T: Num>(v: &VertexSet<T>, i: usize) -> Value {
    values_to_json(&v.vertices[i])
}

fn cmd_decompose(a: &DecomposeArgs) -> anyhow::Result<String> {
    json_only(a.format, "decompose")?;
    let b = read_behavior(&a.behavior)?;
    let sc = match &b {
        AnyBehavior::Exact(x) => x.scenario(),
        AnyBehavior::Float(x) => x.scenario(),
    };
    let v = match (a.params.resolve(sc, b.policy() == Policy::Float)?, &b) {
        (Params::Exact(p), AnyBehavior::Exact(x)) => decompose_json(&p, x)?,
        (Params::Float(p), _) => decompose_json(&p, &b.to_float())?,
        (Params::Exact(_), AnyBehavior::Float(_)) => unreachable!("float behavior forces float parameters"),
    };
    Ok(to_canonical_string(&v))
}

fn cmd_quantum(a: &QuantumArgs) -> anyhow::Result<String> {
    json_only(a.format, "quantum")?;
    let s = match a.strategy {
        StrategyArg::TiltedHardy => {
            let eps = a.eps.ok_or_else(|| BellError::InvalidParams("tilted-hardy needs --eps".into()))?;
            tilted_hardy_strategy(eps)?
        }
        StrategyArg::ChshLeak => {
            let k = a.kappa.ok_or_else(|| BellError::InvalidParams("chsh-leak needs --kappa".into()))?;
            chsh_leak_strategy(k)?
        }
    };
    Ok(to_canonical_string(&behavior_to_json(&behavior_of(&s)?)))
}

fn cmd_pg(a: &PgArgs) -> anyhow::Result<String> {
    let points = match (a.beta, a.curve) {
        (Some(beta), None) => vec![GuessingBound::new(a.kappa)?.point(beta)?],
        (None, Some(n)) => curve(a.kappa, n)?,
        _ => bail!(BellError::InvalidParams("pass exactly one of --beta and --curve".into())),
    };
    Ok(match a.format {
        Format::Csv => curve_to_csv(&points),
        Format::Json if a.beta.is_some() => to_canonical_string(&curve_point_to_json(&points[0])),
        Format::Json => to_canonical_string(&Value::Array(points.iter().map(curve_point_to_json).collect())),
    })
}

fn cmd_self_test(a: &SelfTestArgs) -> anyhow::Result<bool> {
    let ids: Vec<u8> = if a.only.is_empty() { CRITERIA.iter().map(|(i, _)| *i).collect() } else { a.only.clone() };
    let mut all_ok = true;
    for id in ids {
        let o = run(id).ok_or_else(|| BellError::InvalidParams(format!("no criterion {id}")))?;
        all_ok &= o.passed;
        println!("{}", format_line(&o));
    }
    Ok(all_ok)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<BellError>() {
        Some(b) if b.is_numeric() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let (out, text) = match &cli.command {
        Command::SelfTest(a) => {
            return match cmd_self_test(a) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(1),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(exit_code(&e))
                }
            }
        }
        Command::Vertices(a) => (&a.out, cmd_vertices(a)),
        Command::Check(a) => (&a.out, cmd_check(a)),
        Command::Facet(a) => (&a.out, cmd_facet(a)),
        Command::Decompose(a) => (&a.out, cmd_decompose(a)),
        Command::Quantum(a) => (&a.out, cmd_quantum(a)),
        Command::Pg(a) => (&a.out, cmd_pg(a)),
    };
    match text.and_then(|t| emit(out, &t)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
