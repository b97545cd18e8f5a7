//! Command-line entry point wiring every module: solve, sweep, thresholds,
//! oracle campaigns, data-driven simulation, validation, and trace printing.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analytics::{phase_sweep, thresholds, CaseSpec, IPrime, SweepAxis, SweepSpec};
use crate::equilibrium::{solve_leader_alone, solve_spne};
use crate::model::World;
use crate::oracle::{run_campaign, CampaignConfig, GenConfig};
use crate::pipeline::{
    read_countries, read_globals, run_simulation, write_memberships, write_summary, DiNorm, Mode,
    SimConfig,
};
use crate::{exec, Error, Result};

/// Version of every emitted JSON and CSV format.
pub const SCHEMA_VERSION: u32 = 1;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " schema 1");

/// Provenance block embedded in every output bundle.
#[derive(Clone, Debug, Serialize)]
pub struct RunMeta {
    /// Subcommand that produced the output.
    pub command: String,
    /// Engine version plus output schema.
    pub version: String,
    /// Output schema version.
    pub schema: u32,
    /// Echo of the effective configuration, sufficient to rerun.
    pub config: Value,
    /// Master seed when randomness was involved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Requested worker threads.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// Everything nonfatal the run wants the reader to know.
    pub warnings: Vec<String>,
    /// Wall-clock time spent.
    pub wall_ms: u128,
}

#[derive(Parser)]
#[command(name = "hegemon", version = VERSION, about = "Club-formation equilibria between two superpowers")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one world's two-stage equilibrium.
    Spne(SpneArgs),
    /// Sweep a parameter over an evenly spaced world and classify each point.
    Phases(PhasesArgs),
    /// Closed-form thresholds for an evenly spaced world.
    Thresholds(ThresholdsArgs),
    /// Randomized verification campaign against the brute-force oracles.
    Oracle(OracleArgs),
    /// Yearly equilibria from a country panel.
    Simulate(SimulateArgs),
    /// Schema-check data files without running anything.
    Validate(ValidateArgs),
    /// Pretty-print a solver trace JSON file.
    Explain(ExplainArgs),
}

#[derive(Args, Serialize)]
struct SpneArgs {
    /// World JSON file.
    #[arg(long)]
    world: PathBuf,
    /// Freeze the follower out and solve the leader's problem alone.
    #[arg(long)]
    no_follower: bool,
    /// Include the full leader response table.
    #[arg(long)]
    table: bool,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum CaseKind {
    Symmetric,
    Asymmetric,
    Measure,
}

#[derive(Args, Serialize)]
struct PhasesArgs {
    /// Grid divisor of the evenly spaced world; odd, at least 3.
    #[arg(long)]
    n: u32,
    /// Dependency structure.
    #[arg(long, value_enum)]
    case: CaseKind,
    /// First dependency value of a g sweep.
    #[arg(long, default_value_t = 0.0)]
    g_min: f64,
    /// Last dependency value of a g sweep.
    #[arg(long, default_value_t = 1.0)]
    g_max: f64,
    /// Step of a g sweep.
    #[arg(long, default_value_t = 0.01)]
    g_step: f64,
    /// Fixed dependency for the measure case.
    #[arg(long)]
    g: Option<f64>,
    /// Measure multipliers swept in the measure case.
    #[arg(long, default_value = "1,1.5,2,3,5,10,20,50,100")]
    m_grid: String,
    /// Whose measure grows in the measure case: "a", indices, or both ("a,1,2").
    #[arg(long, default_value = "a")]
    i_prime: String,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ThresholdsArgs {
    /// Grid divisor; odd, at least 13.
    #[arg(long)]
    n: u32,
    /// Emit JSON instead of aligned text.
    #[arg(long)]
    json: bool,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct OracleArgs {
    /// Small countries per random instance.
    #[arg(long, default_value_t = 4)]
    n_small: u32,
    /// Random instances to draw.
    #[arg(long, default_value_t = 200)]
    trials: u32,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Random schedules fuzzed per instance.
    #[arg(long, default_value_t = 100)]
    schedules: u32,
    /// Write the report JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Symmetric,
    Asymmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DiNormArg {
    Year,
    Panel,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// Country panel CSV.
    #[arg(long)]
    countries: PathBuf,
    /// Globals CSV; required by symmetric mode.
    #[arg(long)]
    globals: Option<PathBuf>,
    /// Dependency mode.
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Superpower action grid is {x / grid}.
    #[arg(long, default_value_t = 500)]
    grid: u32,
    /// Trailing moving-average window in years.
    #[arg(long, default_value_t = 5)]
    ma: usize,
    /// DI normalization bounds.
    #[arg(long, value_enum, default_value_t = DiNormArg::Year)]
    di_norm: DiNormArg,
    /// Projection mode: freeze everything but GDP at this year.
    #[arg(long)]
    base_year: Option<i32>,
    /// First output year.
    #[arg(long)]
    year_min: Option<i32>,
    /// Last output year.
    #[arg(long)]
    year_max: Option<i32>,
    /// Code of superpower A's country.
    #[arg(long, default_value = "USA")]
    super_a: String,
    /// Code of superpower B's country.
    #[arg(long, default_value = "CHN")]
    super_b: String,
    /// Output directory for memberships.csv, summary.csv, run_meta.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct ValidateArgs {
    /// Country panel CSV to check.
    #[arg(long)]
    countries: Option<PathBuf>,
    /// Globals CSV to check.
    #[arg(long)]
    globals: Option<PathBuf>,
    /// World JSON to check.
    #[arg(long)]
    world: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ExplainArgs {
    /// Trace JSON file, as written by spne --out.
    #[arg(long)]
    trace: PathBuf,
}

/// Parses argv, runs the chosen command, and maps the outcome to an exit
/// code: 0 success, 1 domain error, 2 internal invariant violation.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { 0 } else { 1 };
        }
    };
    let ctx = Ctx { jobs: cli.jobs, started: Instant::now() };
    let run = exec::with_threads(cli.jobs, || run_command(&cli.command, &ctx));
    match run.and_then(|r| r) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Clone, Copy)]
struct Ctx {
    jobs: Option<usize>,
    started: Instant,
}

impl Ctx {
    fn meta<C: Serialize>(
        &self,
        command: &str,
        config: &C,
        seed: Option<u64>,
        warnings: Vec<String>,
    ) -> Result<RunMeta> {
        Ok(RunMeta {
            command: command.into(),
            version: VERSION.into(),
            schema: SCHEMA_VERSION,
            config: serde_json::to_value(config)
                .map_err(|e| Error::Internal(format!("config echo failed: {e}")))?,
            seed,
            jobs: self.jobs,
            warnings,
            wall_ms: self.started.elapsed().as_millis(),
        })
    }
}

fn run_command(cmd: &Command, ctx: &Ctx) -> Result<()> {
    match cmd {
        Command::Spne(a) => run_spne(a, ctx),
        Command::Phases(a) => run_phases(a, ctx),
        Command::Thresholds(a) => run_thresholds(a, ctx),
        Command::Oracle(a) => run_oracle(a, ctx),
        Command::Simulate(a) => run_simulate(a, ctx),
        Command::Validate(a) => run_validate(a),
        Command::Explain(a) => run_explain(a),
    }
}

fn print_out(content: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{content}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(Error::Data(format!("cannot write stdout: {e}"))),
        Ok(()) => Ok(()),
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display()))),
        None => print_out(content),
    }
}

fn read_world(path: &PathBuf) -> Result<World> {
    let s = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    World::from_json(&s)
}

fn to_json_string(v: &Value) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Internal(format!("serialization: {e}")))
}

fn run_spne(a: &SpneArgs, ctx: &Ctx) -> Result<()> {
    let w = read_world(&a.world)?;
    let outcome = if a.no_follower { solve_leader_alone(&w)? } else { solve_spne(&w)? };
    let meta = ctx.meta("spne", a, None, outcome.warnings.clone())?;
    let mut spne = serde_json::to_value(&outcome)
        .map_err(|e| Error::Internal(format!("serialization: {e}")))?;
    if !a.table {
        spne.as_object_mut().map(|o| o.remove("response_table"));
    }
    emit(&a.out, &to_json_string(&json!({ "meta": meta, "spne": spne }))?)
}

fn parse_i_prime(s: &str) -> Result<IPrime> {
    let mut ip = IPrime { include_super_a: false, small: BTreeSet::new() };
    for tok in s.split(',') {
        let t = tok.trim();
        if t.eq_ignore_ascii_case("a") {
            ip.include_super_a = true;
        } else {
            let i: u32 = t
                .parse()
                .map_err(|_| Error::Config(format!("bad I' member {t:?}; expected \"a\" or an index")))?;
            ip.small.insert(i);
        }
    }
    Ok(ip)
}

fn parse_m_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad measure multiplier {t:?}")))
        })
        .collect()
}

fn loc_cell(l: Option<crate::model::Location>) -> String {
    l.map(|v| v.to_string()).unwrap_or_default()
}

fn run_phases(a: &PhasesArgs, ctx: &Ctx) -> Result<()> {
    let spec = match a.case {
        CaseKind::Symmetric | CaseKind::Asymmetric => {
            let case = match a.case {
                CaseKind::Symmetric => CaseSpec::Symmetric { g: a.g_min },
                _ => CaseSpec::Asymmetric { g: a.g_min },
            };
            SweepSpec {
                n: a.n,
                case,
                axis: SweepAxis::G { min: a.g_min, max: a.g_max, step: a.g_step },
            }
        }
        CaseKind::Measure => {
            let g = a.g.ok_or_else(|| Error::Config("the measure case needs --g".into()))?;
            SweepSpec {
                n: a.n,
                case: CaseSpec::Measure { g, i_prime: parse_i_prime(&a.i_prime)?, m: 1.0 },
                axis: SweepAxis::M { values: parse_m_grid(&a.m_grid)? },
            }
        }
    };
    let res = phase_sweep(&spec)?;
    let meta = ctx.meta("phases", a, None, res.warnings.clone())?;
    let mut s = String::new();
    let meta_line = serde_json::to_string(&meta)
        .map_err(|e| Error::Internal(format!("serialization: {e}")))?;
    let _ = writeln!(s, "# meta: {meta_line}");
    let _ = writeln!(
        s,
        "{},order,ell_a,ell_b,size_a,size_b,payoff_a,payoff_b,ell_a_without_b",
        res.axis
    );
    for p in &res.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            p.x,
            p.order,
            loc_cell(p.ell_a),
            loc_cell(p.ell_b),
            p.size_a,
            p.size_b,
            p.payoff_a,
            p.payoff_b,
            loc_cell(p.ell_a_without_b),
        );
    }
    emit(&a.out, s.trim_end())
}

fn run_thresholds(a: &ThresholdsArgs, ctx: &Ctx) -> Result<()> {
    let t = thresholds(a.n)?;
    if a.json {
        let meta = ctx.meta("thresholds", a, None, vec![])?;
        let v = json!({ "meta": meta, "thresholds": t });
        emit(&a.out, &to_json_string(&v)?)
    } else {
        let mut s = String::new();
        let _ = writeln!(s, "n          {}", t.n);
        let _ = writeln!(s, "g_u        {}", t.g_u);
        let _ = writeln!(s, "g_b        {}", t.g_b);
        let _ = writeln!(s, "g_b_h      {}", t.g_b_h);
        let _ = writeln!(s, "g_eq_lo    {}", t.g_eq_lo);
        let _ = writeln!(s, "g_eq_hi    {}", t.g_eq_hi);
        let _ = writeln!(s, "g_lo_b     {}", t.g_lo_b);
        let _ = writeln!(s, "g_lo_b_h   {}", t.g_lo_b_h);
        let _ = writeln!(s, "g_hi_b_h   {}", t.g_hi_b_h);
        let _ = writeln!(s, "g_hi_b     {}", t.g_hi_b);
        let _ = writeln!(s, "delta_star {}", t.delta_star);
        let _ = writeln!(s, "g_star     {}", t.g_star);
        emit(&a.out, s.trim_end())
    }
}

fn run_oracle(a: &OracleArgs, ctx: &Ctx) -> Result<()> {
    let cfg = CampaignConfig {
        instances: a.trials,
        schedules: a.schedules,
        seed: a.seed,
        gen: GenConfig { n_small: a.n_small, ..GenConfig::default() },
    };
    let report = run_campaign(&cfg)?;
    let meta = ctx.meta("oracle", a, Some(a.seed), report.failures.clone())?;
    emit(&a.out, &to_json_string(&json!({ "meta": meta, "report": report }))?)?;
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(Error::Internal(format!("oracle campaign found {} failures", report.failures.len())))
    }
}

fn run_simulate(a: &SimulateArgs, ctx: &Ctx) -> Result<()> {
    let countries = read_countries(&a.countries)?;
    let globals = match &a.globals {
        Some(p) => read_globals(p)?,
        None => vec![],
    };
    let year_range = match (a.year_min, a.year_max) {
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(i32::MIN), hi.unwrap_or(i32::MAX))),
    };
    let cfg = SimConfig {
        mode: match a.mode {
            ModeArg::Symmetric => Mode::Symmetric,
            ModeArg::Asymmetric => Mode::Asymmetric,
        },
        grid_steps: a.grid,
        ma_window: a.ma,
        year_range,
        super_a: a.super_a.clone(),
        super_b: a.super_b.clone(),
        di_norm: match a.di_norm {
            DiNormArg::Year => DiNorm::Year,
            DiNormArg::Panel => DiNorm::Panel,
        },
        base_year: a.base_year,
    };
    let report = run_simulation(&cfg, &countries, &globals)?;
    fs::create_dir_all(&a.out)
        .map_err(|e| Error::Data(format!("cannot create {}: {e}", a.out.display())))?;
    write_memberships(&a.out.join("memberships.csv"), &report.memberships)?;
    write_summary(&a.out.join("summary.csv"), &report.summary)?;
    let meta = ctx.meta("simulate", a, None, report.warnings.clone())?;
    let meta_json = to_json_string(
        &serde_json::to_value(&meta).map_err(|e| Error::Internal(format!("serialization: {e}")))?,
    )?;
    fs::write(a.out.join("run_meta.json"), meta_json)
        .map_err(|e| Error::Data(format!("cannot write run_meta.json: {e}")))?;
    print_out(&format!(
        "wrote {} years and {} membership rows to {} ({} warnings)",
        report.summary.len(),
        report.memberships.len(),
        a.out.display(),
        report.warnings.len()
    ))
}

fn run_validate(a: &ValidateArgs) -> Result<()> {
    if a.countries.is_none() && a.globals.is_none() && a.world.is_none() {
        return Err(Error::Config("nothing to validate; pass --countries, --globals, or --world".into()));
    }
    if let Some(p) = &a.countries {
        let rows = read_countries(p)?;
        print_out(&format!("{}: ok ({} rows)", p.display(), rows.len()))?;
    }
    if let Some(p) = &a.globals {
        let rows = read_globals(p)?;
        print_out(&format!("{}: ok ({} rows)", p.display(), rows.len()))?;
    }
    if let Some(p) = &a.world {
        let w = read_world(p)?;
        print_out(&format!(
            "{}: ok ({} countries, {} grid points)",
            p.display(),
            w.countries.len(),
            w.grid.len()
        ))?;
    }
    Ok(())
}

fn run_explain(a: &ExplainArgs) -> Result<()> {
    let s = fs::read_to_string(&a.trace)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", a.trace.display())))?;
    let v: Value =
        serde_json::from_str(&s).map_err(|e| Error::Data(format!("malformed trace JSON: {e}")))?;
    print_out(&render_trace(&v)?)
}

fn fmt_loc(v: &Value) -> String {
    match v {
        Value::Null => "none".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn fmt_entries(arr: &[Value]) -> String {
    let parts: Vec<String> = arr
        .iter()
        .map(|e| {
            format!(
                "{} ({} -> {})",
                e.get("id").cloned().unwrap_or(Value::Null),
                e.get("before").cloned().unwrap_or(Value::Null),
                e.get("after").cloned().unwrap_or(Value::Null)
            )
        })
        .collect();
    parts.join(", ")
}

fn steps(v: &Value) -> &[Value] {
    v.get("trace").and_then(Value::as_array).map(Vec::as_slice).unwrap_or(&[])
}

fn render_formation(v: &Value, out: &mut String) {
    let _ = writeln!(out, "formation at {}", fmt_loc(v.get("ell_a").unwrap_or(&Value::Null)));
    let trace = steps(v);
    if trace.is_empty() {
        let _ = writeln!(out, "  no steps");
    }
    for (k, step) in trace.iter().enumerate() {
        let joined = step.get("joined").and_then(Value::as_array).cloned().unwrap_or_default();
        let _ = writeln!(out, "  step {}: join {}", k + 1, fmt_entries(&joined));
    }
    let _ = writeln!(
        out,
        "  members: {}",
        v.get("i_star").cloned().unwrap_or_else(|| json!([]))
    );
}

fn render_shifting(v: &Value, out: &mut String) {
    let _ = writeln!(
        out,
        "shifting toward {}",
        fmt_loc(v.get("ell_b").unwrap_or(&Value::Null))
    );
    let trace = steps(v);
    if trace.is_empty() {
        let _ = writeln!(out, "  no steps");
    }
    for (k, step) in trace.iter().enumerate() {
        let shifted = step.get("shifted").and_then(Value::as_array).cloned().unwrap_or_default();
        let left = step.get("left").and_then(Value::as_array).cloned().unwrap_or_default();
        let _ = write!(out, "  step {}: shift {}", k + 1, fmt_entries(&shifted));
        if left.is_empty() {
            let _ = writeln!(out);
        } else {
            let _ = writeln!(out, "; leak {}", fmt_entries(&left));
        }
    }
    let _ = writeln!(
        out,
        "  clubs: A={} B={}",
        v.get("club_a").cloned().unwrap_or_else(|| json!([])),
        v.get("club_b").cloned().unwrap_or_else(|| json!([]))
    );
}

/// Renders any solver trace (equilibrium, formation, or shifting) as an
/// indented step listing.
pub(crate) fn render_trace(v: &Value) -> Result<String> {
    if let Some(inner) = v.get("spne") {
        return render_trace(inner);
    }
    let mut out = String::new();
    if v.get("payoff_a").is_some() && v.get("response_table").is_some() || v.get("formation").is_some() {
        if let Some(f) = v.get("formation").filter(|f| !f.is_null()) {
            render_formation(f, &mut out);
        }
        if let Some(sh) = v.get("shifting").filter(|s| !s.is_null()) {
            render_shifting(sh, &mut out);
        }
        if out.is_empty() {
            let _ = writeln!(out, "no clubs form");
        }
        let _ = writeln!(
            out,
            "equilibrium: ell_a={} ell_b={} payoff_a={} payoff_b={}",
            fmt_loc(v.get("ell_a").unwrap_or(&Value::Null)),
            fmt_loc(v.get("ell_b").unwrap_or(&Value::Null)),
            v.get("payoff_a").cloned().unwrap_or(Value::Null),
            v.get("payoff_b").cloned().unwrap_or(Value::Null),
        );
    } else if v.get("i_star").is_some() {
        render_formation(v, &mut out);
    } else if v.get("club_a").is_some() && v.get("trace").is_some() {
        render_shifting(v, &mut out);
    } else {
        return Err(Error::Data("unrecognized trace shape".into()));
    }
    Ok(out.trim_end().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostModel, Country, DistanceModel, Location, PlayerId};

    fn loc(n: i64, d: i64) -> Location {
        Location::new(n, d).unwrap()
    }

    fn world3_json() -> String {
        let mk = |i, num, den| Country {
            id: PlayerId::Small(i),
            location: loc(num, den),
            measure: 1.0,
            dep_a: 0.5,
            dep_b: 0.5,
        };
        let countries = vec![
            Country { id: PlayerId::SuperA, location: loc(0, 1), measure: 1.0, dep_a: 1.0, dep_b: 0.0 },
            Country { id: PlayerId::SuperB, location: loc(1, 1), measure: 1.0, dep_a: 0.0, dep_b: 1.0 },
            mk(1, 1, 4),
            mk(2, 1, 2),
            mk(3, 3, 4),
        ];
        let grid = (0..=4).map(|k| loc(k, 4)).collect();
        World::new(countries, grid, DistanceModel::Line, CostModel::Proportional).unwrap().to_json()
    }

    fn run(args: &[&str]) -> i32 {
        dispatch(args.iter().copied())
    }

    #[test]
    fn help_and_version_exit_zero_and_bad_usage_exits_one() {
        assert_eq!(run(&["hegemon", "--help"]), 0);
        assert_eq!(run(&["hegemon", "--version"]), 0);
        assert_eq!(run(&["hegemon", "nonsense"]), 1);
        assert_eq!(run(&["hegemon", "thresholds"]), 1);
    }

    #[test]
    fn thresholds_json_carries_meta_and_values() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("t.json");
        let code = run(&["hegemon", "thresholds", "--n", "51", "--json", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["meta"]["command"], "thresholds");
        assert_eq!(v["meta"]["schema"], 1);
        let g_u = v["thresholds"]["g_u"].as_f64().unwrap();
        assert!((g_u - 102.0 / 2700.0).abs() < 1e-12);
        assert_eq!(run(&["hegemon", "thresholds", "--n", "12"]), 1);
    }

    #[test]
    fn spne_emits_equilibrium_json() {
        let dir = tempfile::tempdir().unwrap();
        let world = dir.path().join("w.json");
        fs::write(&world, world3_json()).unwrap();
        let out = dir.path().join("spne.json");
        let code = run(&["hegemon", "spne", "--world", world.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["spne"]["ell_a"], "1/2");
        assert_eq!(v["spne"]["ell_b"], Value::Null);
        assert!(v["spne"].get("response_table").is_none());

        let code = run(&[
            "hegemon", "spne", "--world", world.to_str().unwrap(), "--table", "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert!(v["spne"]["response_table"].as_array().unwrap().len() >= 5);

        assert_eq!(run(&["hegemon", "spne", "--world", "/nonexistent.json"]), 1);
    }

    #[test]
    fn phases_csv_has_meta_line_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("phases.csv");
        let code = run(&[
            "hegemon", "phases", "--n", "13", "--case", "symmetric", "--g-min", "0", "--g-max",
            "0.2", "--g-step", "0.1", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let s = fs::read_to_string(&out).unwrap();
        let mut lines = s.lines();
        assert!(lines.next().unwrap().starts_with("# meta: {"));
        assert_eq!(
            lines.next().unwrap(),
            "g,order,ell_a,ell_b,size_a,size_b,payoff_a,payoff_b,ell_a_without_b"
        );
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn measure_phases_need_g() {
        assert_eq!(run(&["hegemon", "phases", "--n", "13", "--case", "measure"]), 1);
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("m.csv");
        let code = run(&[
            "hegemon", "phases", "--n", "13", "--case", "measure", "--g", "0.9", "--m-grid",
            "1,5", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let s = fs::read_to_string(&out).unwrap();
        assert!(s.lines().nth(1).unwrap().starts_with("m,order"));
    }

    #[test]
    fn validate_accepts_good_and_rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("c.csv");
        fs::write(&good, "year,code,di,gdp_usd,trade_us_usd,trade_china_usd\n2001,USA,9,1e13,,\n")
            .unwrap();
        assert_eq!(run(&["hegemon", "validate", "--countries", good.to_str().unwrap()]), 0);
        let bad = dir.path().join("bad.csv");
        fs::write(&bad, "year,code\n2001,USA\n").unwrap();
        assert_eq!(run(&["hegemon", "validate", "--countries", bad.to_str().unwrap()]), 1);
        assert_eq!(run(&["hegemon", "validate"]), 1);
    }

    #[test]
    fn explain_renders_join_and_shift_steps() {
        let dir = tempfile::tempdir().unwrap();
        let world = dir.path().join("w.json");
        fs::write(&world, world3_json()).unwrap();
        let out = dir.path().join("spne.json");
        assert_eq!(
            run(&["hegemon", "spne", "--world", world.to_str().unwrap(), "--out", out.to_str().unwrap()]),
            0
        );
        let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        let text = render_trace(&v).unwrap();
        assert!(text.contains("formation at 1/2"), "{text}");
        assert!(text.contains("join"), "{text}");
        assert!(text.contains("equilibrium: ell_a=1/2 ell_b=none"), "{text}");
        assert_eq!(run(&["hegemon", "explain", "--trace", out.to_str().unwrap()]), 0);

        let garbage = dir.path().join("g.json");
        fs::write(&garbage, "{\"not\": 1}").unwrap();
        assert_eq!(run(&["hegemon", "explain", "--trace", garbage.to_str().unwrap()]), 1);
    }

    #[test]
    fn simulate_writes_the_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let countries = dir.path().join("countries.csv");
        let mut c = String::from("year,code,di,gdp_usd,trade_us_usd,trade_china_usd\n");
        for year in [2001, 2002] {
            c.push_str(&format!("{year},USA,9,2e13,,\n"));
            c.push_str(&format!("{year},CHN,1,1.5e13,,\n"));
            c.push_str(&format!("{year},AAA,8,2e12,100,\n"));
            c.push_str(&format!("{year},BBB,2,2e12,,100\n"));
        }
        fs::write(&countries, c).unwrap();
        let globals = dir.path().join("globals.csv");
        fs::write(&globals, "year,world_trade_to_gdp\n2001,0.8\n2002,0.8\n").unwrap();
        let out = dir.path().join("results");
        let code = run(&[
            "hegemon", "simulate", "--countries", countries.to_str().unwrap(), "--globals",
            globals.to_str().unwrap(), "--mode", "symmetric", "--grid", "10", "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let m = fs::read_to_string(out.join("memberships.csv")).unwrap();
        assert!(m.starts_with("year,code,club\n"));
        assert_eq!(m.lines().count(), 9);
        let meta: Value =
            serde_json::from_str(&fs::read_to_string(out.join("run_meta.json")).unwrap()).unwrap();
        assert_eq!(meta["command"], "simulate");
        assert_eq!(meta["config"]["grid"], 10);
    }

    #[test]
    fn oracle_campaign_reports_clean() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("oracle.json");
        let code = run(&[
            "hegemon", "oracle", "--n-small", "3", "--trials", "10", "--schedules", "10",
            "--seed", "7", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["report"]["failures"].as_array().unwrap().len(), 0);
        assert_eq!(v["meta"]["seed"], 7);
    }
}
