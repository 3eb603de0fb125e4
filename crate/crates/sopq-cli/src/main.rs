use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use sopq::chain::json::{chain_value, parse_chain};
use sopq::chain::FixedPointChain;
use sopq::grading::{
    self, graded_pieces, hyper_dims, sheaf_iso_verdict, Dim, Genericity, GradedPiece,
};
use sopq::hitchin::{
    build_phi, gauge_scale_check, generic_coeffs, hitchin_eta, invariant_basis, is_skew_adjoint,
    psi_fixed_point, standard_forms, total_form, tr_power,
};
use sopq::minima::{classify_minimum, enumerate_minima_families};
use sopq::stability::{stability_report, IsotropicPair};
use sopq::topology::{
    count_components, count_components_abc, expected_dim, psi_dim_check, ComponentCount, Group,
};
use sopq::{selftest, Error};

#[derive(Parser)]
#[command(
    name = "sopq",
    version,
    about = "Fixed points, minima and component counts for SO(p,q)-Higgs bundles"
)]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Number of connected components, or a table over a grid.
    Count(CountArgs),
    /// Classify a chain as a local minimum, or list the minima families.
    Minima(MinimaArgs),
    /// Stability of a fixed-point chain.
    Stability(ChainArg),
    /// The weight-k piece of the deformation complex.
    Grade(GradeArgs),
    /// Trace identities on the Hitchin section of SO(p, p-1).
    HitchinVerify(HitchinArgs),
    /// Apply Ψ to an SO(1,n) chain, or check the dimension count.
    Psi(PsiArgs),
    /// Run the acceptance suite.
    Selftest,
}

#[derive(Args)]
struct Pqg {
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    g: Option<i64>,
}

impl Pqg {
    fn require(&self) -> Result<(u32, u32, i64), CliError> {
        match (self.p, self.q, self.g) {
            (Some(p), Some(q), Some(g)) => Ok((p, q, g)),
            _ => Err(CliError::Usage("--p, --q and --g are required".into())),
        }
    }
}

#[derive(Args)]
struct CountArgs {
    #[command(flatten)]
    pqg: Pqg,
    /// Restrict to one topological class: `a0,b,c` with a0 ∈ {0,1} meaning
    /// sw1 = 0 or not.
    #[arg(long, value_parser = parse_abc)]
    abc: Option<(bool, u8, u8)>,
    /// Emit a table over `--grid`.
    #[arg(long)]
    table: bool,
    /// `pmin:pmax,qmin:qmax,gmin:gmax`; implies `--table`.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<Grid>,
}

#[derive(Args)]
struct MinimaArgs {
    #[command(flatten)]
    pqg: Pqg,
    #[arg(long)]
    chain: Option<PathBuf>,
}

#[derive(Args)]
struct ChainArg {
    #[arg(long)]
    chain: PathBuf,
}

#[derive(Args)]
struct GradeArgs {
    #[arg(long)]
    chain: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    weight: i64,
    /// Allow special line bundles when bounding h⁰.
    #[arg(long)]
    special: bool,
}

#[derive(Args)]
struct HitchinArgs {
    #[arg(long)]
    p: u32,
    /// Highest trace power; defaults to 2p - 2.
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Args)]
struct PsiArgs {
    #[command(flatten)]
    pqg: Pqg,
    /// An SO(1, q-p+1) chain twisted by K^p.
    #[arg(long)]
    chain: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug)]
struct Grid {
    p: (u32, u32),
    q: (u32, u32),
    g: (i64, i64),
}

fn parse_range<T: std::str::FromStr + PartialOrd>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s.split_once(':').unwrap_or((s, s));
    let lo = a.trim().parse().map_err(|_| format!("bad bound {a:?}"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad bound {b:?}"))?;
    if lo > hi {
        return Err(format!("empty range {s:?}"));
    }
    Ok((lo, hi))
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [p, q, g] = parts[..] else {
        return Err("expected pmin:pmax,qmin:qmax,gmin:gmax".into());
    };
    Ok(Grid {
        p: parse_range(p)?,
        q: parse_range(q)?,
        g: parse_range(g)?,
    })
}

fn parse_abc(s: &str) -> Result<(bool, u8, u8), String> {
    let bits: Vec<&str> = s.split(',').map(str::trim).collect();
    let bit = |t: &str| match t {
        "0" => Ok(0u8),
        "1" => Ok(1u8),
        _ => Err(format!("expected 0 or 1, got {t:?}")),
    };
    let [a, b, c] = bits[..] else {
        return Err("expected a0,b,c".into());
    };
    Ok((bit(a)? == 0, bit(b)?, bit(c)?))
}

enum CliError {
    Usage(String),
    Domain(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

macro_rules! domain {
    ($e:expr) => {
        $e.map_err(|e| CliError::Domain(e.into()))
    };
}

/// What a command produced, plus whether it counts as success.
struct Output {
    value: Value,
    ok: bool,
}

impl From<Value> for Output {
    fn from(value: Value) -> Self {
        Output { value, ok: true }
    }
}

fn read_chain(path: &Path) -> Result<FixedPointChain, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    domain!(parse_chain(&text))
}

fn count_value(c: ComponentCount) -> Value {
    match c {
        ComponentCount::Exact(n) => json!({ "exact": n }),
        ComponentCount::LowerBound(n) => json!({ "lower_bound": n, "note": "conjectured exact" }),
    }
}

fn count(a: &CountArgs) -> Result<Output, CliError> {
    if !a.table && a.grid.is_none() {
        let (p, q, g) = a.pqg.require()?;
        return Ok(match a.abc {
            Some((a0, b, c)) => {
                json!({ "exact": domain!(count_components_abc(p, q, g, a0, b, c))? })
            }
            None => count_value(domain!(count_components(p, q, g))?),
        }
        .into());
    }
    let grid = match (a.grid, a.pqg.p, a.pqg.q, a.pqg.g) {
        (Some(grid), ..) => grid,
        (None, Some(p), Some(q), Some(g)) => Grid {
            p: (p, p),
            q: (q, q),
            g: (g, g),
        },
        _ => {
            return Err(CliError::Usage(
                "--table needs --grid or all of --p, --q, --g".into(),
            ))
        }
    };
    let mut rows = Vec::new();
    for g in grid.g.0..=grid.g.1 {
        for p in grid.p.0..=grid.p.1 {
            for q in grid.q.0.max(p)..=grid.q.1 {
                let mut row = Map::new();
                row.insert("p".into(), p.into());
                row.insert("q".into(), q.into());
                row.insert("g".into(), g.into());
                match a.abc {
                    Some((a0, b, c)) => {
                        if p <= 2 {
                            continue;
                        }
                        row.insert("bound".into(), "exact".into());
                        row.insert(
                            "count".into(),
                            domain!(count_components_abc(p, q, g, a0, b, c))?.into(),
                        );
                    }
                    None => {
                        let n = domain!(count_components(p, q, g))?;
                        let bound = if matches!(n, ComponentCount::Exact(_)) {
                            "exact"
                        } else {
                            "lower_bound"
                        };
                        row.insert("bound".into(), bound.into());
                        row.insert("count".into(), n.value().into());
                    }
                }
                rows.push(Value::Object(row));
            }
        }
    }
    Ok(Value::Array(rows).into())
}

fn minima(a: &MinimaArgs) -> Result<Output, CliError> {
    if let Some(path) = &a.chain {
        let c = read_chain(path)?;
        let v = domain!(classify_minimum(&c))?;
        return Ok(serde_json::to_value(v).expect("verdicts serialise").into());
    }
    let (p, q, g) = a.pqg.require()?;
    let fams = domain!(enumerate_minima_families(p, q, g))?;
    Ok(serde_json::to_value(fams)
        .expect("families serialise")
        .into())
}

fn pair_value(w: &IsotropicPair) -> Value {
    json!({ "v_nodes": w.v_nodes, "w_nodes": w.w_nodes, "total_degree": w.total_degree })
}

fn stability(a: &ChainArg) -> Result<Output, CliError> {
    let c = read_chain(&a.chain)?;
    let r = domain!(stability_report(&c))?;
    Ok(json!({
        "status": r.status.as_str(),
        "witness": r.witness.as_ref().map(pair_value),
        "reason": r.reason,
    })
    .into())
}

fn dim_value(d: Dim) -> Value {
    match d.value() {
        Some(v) => v.into(),
        None => json!([d.lo, d.hi]),
    }
}

fn piece_value(p: &GradedPiece) -> Value {
    let factors: Vec<Value> = p
        .factors
        .iter()
        .map(|f| {
            json!({
                "source": f.source,
                "target": f.target,
                "symmetry": f.symmetry.as_str(),
                "rank": f.rank,
                "degree": f.degree,
                "twist": f.twist,
            })
        })
        .collect();
    json!({ "rank": p.rank(), "degree": p.degree(), "factors": factors })
}

fn grade(a: &GradeArgs) -> Result<Output, CliError> {
    let c = read_chain(&a.chain)?;
    let k = a.weight;
    let pieces = graded_pieces(&c, k);
    let m = grading::ad_eta(&c, k);
    let (iso, why) = sheaf_iso_verdict(&m);
    let gen = if a.special {
        Genericity::Special
    } else {
        Genericity::Generic
    };
    let hyper = match hyper_dims(&c, k, gen) {
        Ok(h) => json!({ "h0": dim_value(h.h0), "h1": dim_value(h.h1), "h2": dim_value(h.h2) }),
        Err(e) => json!({ "unavailable": Error::from(e).to_string() }),
    };
    Ok(json!({
        "weight": k,
        "so_v": piece_value(&pieces.so_v),
        "so_w": piece_value(&pieces.so_w),
        "hom": piece_value(&pieces.hom),
        "ad_eta": {
            "domain_rank": m.domain_rank(),
            "codomain_rank": m.codomain_rank(),
            "fiber_rank": m.fiber_rank(),
            "iso": iso,
            "reason": why,
        },
        "euler_char": grading::euler_char(&c, k),
        "hyper": hyper,
    })
    .into())
}

fn hitchin_verify(a: &HitchinArgs) -> Result<Output, CliError> {
    let p = a.p;
    if p < 2 {
        return Err(CliError::Usage("--p must be at least 2".into()));
    }
    let k_max = a.k.unwrap_or(2 * p - 2).max(1);
    let eta = domain!(hitchin_eta(p, &generic_coeffs(p)))?;
    let phi = domain!(build_phi(&eta))?;
    let (qv, qw) = standard_forms(phi.ring(), p as usize, p as usize - 1);
    let form = domain!(total_form(&qv, &qw))?;
    let skew = domain!(is_skew_adjoint(&phi, &form))?;

    let mut traces = Map::new();
    let mut odd_vanish = true;
    for k in 1..=k_max {
        let t = domain!(tr_power(&phi, k))?;
        if k % 2 == 1 {
            odd_vanish &= t.is_zero();
        }
        traces.insert(k.to_string(), t.to_string().into());
    }
    let gauge = domain!(gauge_scale_check(p, p, None))?;
    let mut out = json!({
        "p": p,
        "traces": traces,
        "odd_traces_vanish": odd_vanish,
        "skew_adjoint": skew,
        "gauge_scale": gauge,
    });
    if p >= 3 {
        let (p1, p2) = domain!(invariant_basis(&phi))?;
        out["invariant_basis"] = json!([p1.to_string(), p2.to_string()]);
    }
    let ok = skew && odd_vanish && gauge;
    Ok(Output { value: out, ok })
}

fn psi(a: &PsiArgs) -> Result<Output, CliError> {
    if let Some(path) = &a.chain {
        let (Some(p), Some(q)) = (a.pqg.p, a.pqg.q) else {
            return Err(CliError::Usage(
                "--p and --q are required with --chain".into(),
            ));
        };
        let so1n = read_chain(path)?;
        return Ok(chain_value(&domain!(psi_fixed_point(p, q, &so1n))?).into());
    }
    let (p, q, g) = a.pqg.require()?;
    if p == 0 || p > q {
        return Err(CliError::Usage("need 1 <= p <= q".into()));
    }
    let ok = psi_dim_check(p, q, g);
    Ok(Output {
        value: json!({
            "p": p,
            "q": q,
            "g": g,
            "dim_sopq": expected_dim(Group::SOpq(p, q), 2 * g - 2, g),
            "dim_so1n": expected_dim(Group::SO1n(q - p + 1), p as i64 * (2 * g - 2), g),
            "dims_agree": ok,
        }),
        ok,
    })
}

fn run_selftest() -> Output {
    let results = selftest::run_all();
    let ok = results.iter().all(|r| r.passed);
    Output {
        value: serde_json::to_value(results).expect("results serialise"),
        ok,
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_field(v: &Value) -> String {
    let s = scalar_text(v);
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

fn render_csv(v: &Value) -> String {
    let rows: Vec<&Map<String, Value>> = match v {
        Value::Array(a) => a.iter().filter_map(Value::as_object).collect(),
        Value::Object(o) => vec![o],
        _ => return format!("{}\n", csv_field(v)),
    };
    let Some(first) = rows.first() else {
        return String::new();
    };
    let header: Vec<&String> = first.keys().collect();
    let mut out = header
        .iter()
        .map(|h| h.as_str())
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = header
            .iter()
            .map(|h| row.get(*h).map(csv_field).unwrap_or_default())
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn render_text(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                if x.is_object()
                    || x.as_array()
                        .is_some_and(|a| a.iter().any(|e| e.is_object()))
                {
                    out.push_str(&format!("{pad}{k}:\n"));
                    render_text(x, indent + 1, out);
                } else {
                    out.push_str(&format!("{pad}{k}: {}\n", scalar_text(x)));
                }
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                out.push_str(&format!("{pad}[{i}]\n"));
                render_text(x, indent + 1, out);
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar_text(other))),
    }
}

fn render(format: Format, command: &Command, v: &Value) -> String {
    match (format, command) {
        (Format::Json, _) => format!(
            "{}\n",
            serde_json::to_string_pretty(v).expect("values serialise")
        ),
        (Format::Csv, _) => render_csv(v),
        (Format::Text, Command::Selftest) => v
            .as_array()
            .into_iter()
            .flatten()
            .map(|r| {
                let tag = if r["passed"] == true { "PASS" } else { "FAIL" };
                format!(
                    "{tag} [{:>3}] {}: {}\n",
                    scalar_text(&r["id"]),
                    scalar_text(&r["title"]),
                    scalar_text(&r["detail"])
                )
            })
            .collect(),
        (Format::Text, _) => {
            let mut s = String::new();
            render_text(v, 0, &mut s);
            s
        }
    }
}

fn error_json(error: &str, kind: &str, module: Option<&str>, message: &str) -> String {
    let mut v = json!({ "error": error, "kind": kind, "message": message });
    if let Some(m) = module {
        v["module"] = m.into();
    }
    v.to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!(
                "{}",
                error_json("UsageError", "UsageError", None, msg.trim())
            );
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Count(a) => count(a),
        Command::Minima(a) => minima(a),
        Command::Stability(a) => stability(a),
        Command::Grade(a) => grade(a),
        Command::HitchinVerify(a) => hitchin_verify(a),
        Command::Psi(a) => psi(a),
        Command::Selftest => Ok(run_selftest()),
    };
    match result {
        Ok(out) => {
            print!("{}", render(cli.format, &cli.command, &out.value));
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("{}", error_json("UsageError", "UsageError", None, &msg));
            ExitCode::from(2)
        }
        Err(CliError::Domain(e)) => {
            eprintln!(
                "{}",
                error_json("DomainError", e.kind(), Some(e.module()), &e.to_string())
            );
            ExitCode::from(1)
        }
    }
}
