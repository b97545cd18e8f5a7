//! Panel-data ingestion: normalizations, missing-data rules, per-year world
//! construction, and yearly equilibrium runs over real or synthetic data.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::equilibrium::solve_spne;
use crate::model::{Choice, CostModel, Country, DistanceModel, Location, PlayerId, World};
use crate::{exec, Error, Result};

/// Fixed decimal resolution of the democracy index and of normalized locations.
const DI_SCALE: i64 = 10_000;

/// One row of the country panel; empty CSV cells become None.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountryYearRecord {
    /// Observation year.
    pub year: i32,
    /// Country code, unique per year.
    pub code: String,
    /// Raw democracy index in [0, 10], exact to 4 decimals.
    pub di: Option<Ratio<i64>>,
    /// GDP in currency units.
    pub gdp: Option<f64>,
    /// Bilateral trade with superpower A's country.
    pub trade_us: Option<f64>,
    /// Bilateral trade with superpower B's country.
    pub trade_china: Option<f64>,
}

/// One row of the globals file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalsRecord {
    /// Observation year.
    pub year: i32,
    /// World trade to GDP ratio, in (0, 2).
    pub world_trade_to_gdp: f64,
}

/// How small-country dependencies are derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Both dependencies equal the world trade to GDP ratio.
    Symmetric,
    /// Dependencies split by bilateral trade shares.
    Asymmetric,
}

/// Which observation set the DI min-max normalization ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiNorm {
    /// Bounds taken per year over that year's countries.
    Year,
    /// Bounds taken once over the whole panel.
    Panel,
}

/// Full simulation configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Dependency mode.
    pub mode: Mode,
    /// Superpower action grid is {x / grid_steps}.
    pub grid_steps: u32,
    /// Trailing moving-average window in years.
    pub ma_window: usize,
    /// Inclusive year filter on output years.
    pub year_range: Option<(i32, i32)>,
    /// Code of superpower A's country.
    pub super_a: String,
    /// Code of superpower B's country.
    pub super_b: String,
    /// DI normalization bounds.
    pub di_norm: DiNorm,
    /// Projection mode: freeze everything but GDP at this year.
    pub base_year: Option<i32>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mode: Mode::Symmetric,
            grid_steps: 500,
            ma_window: 5,
            year_range: None,
            super_a: "USA".into(),
            super_b: "CHN".into(),
            di_norm: DiNorm::Year,
            base_year: None,
        }
    }
}

/// One country's club in one year.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipRow {
    /// Year solved.
    pub year: i32,
    /// Country code.
    pub code: String,
    /// Club joined, if any.
    pub club: Choice,
}

/// One year's aggregate outcome. Counts include the superpower; gdp_*_excl
/// sums exclude it. GDP sums are of moving-averaged raw-unit values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// Year solved.
    pub year: i32,
    /// A-club size counting the superpower, 0 when no club.
    pub count_a: usize,
    /// B-club size counting the superpower, 0 when no club.
    pub count_b: usize,
    /// GDP of A's club including the superpower.
    pub gdp_a: f64,
    /// GDP of B's club including the superpower.
    pub gdp_b: f64,
    /// GDP of A's small members only.
    pub gdp_a_excl: f64,
    /// GDP of B's small members only.
    pub gdp_b_excl: f64,
    /// A's equilibrium location.
    pub ell_a: Option<Location>,
    /// B's equilibrium location.
    pub ell_b: Option<Location>,
}

/// Everything a simulation produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    /// Per-country club rows, ordered by year then code.
    pub memberships: Vec<MembershipRow>,
    /// Per-year aggregates, ordered by year.
    pub summary: Vec<SummaryRow>,
    /// Skipped years and per-year notices.
    pub warnings: Vec<String>,
}

/// Parses a democracy index with at most 4 decimals, exactly.
pub fn parse_di(s: &str) -> Result<Ratio<i64>> {
    let bad = || Error::Data(format!("bad democracy index {s:?}"));
    let t = s.trim();
    let (int_part, frac_part) = match t.split_once('.') {
        Some((i, f)) => (i, f),
        None => (t, ""),
    };
    if int_part.is_empty()
        || int_part.len() > 2
        || frac_part.len() > 4
        || !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    let int: i64 = int_part.parse().map_err(|_| bad())?;
    let frac: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
    let scaled = int * DI_SCALE + frac * 10_i64.pow(4 - frac_part.len() as u32);
    if scaled > 10 * DI_SCALE {
        return Err(bad());
    }
    Ok(Ratio::new(scaled, DI_SCALE))
}

fn opt_cell(s: &str) -> Option<&str> {
    let t = s.trim();
    if t.is_empty() {
        None
    } else {
        Some(t)
    }
}

fn parse_amount(t: &str, what: &str, row: usize) -> Result<f64> {
    let v: f64 = t
        .parse()
        .map_err(|_| Error::Data(format!("row {row}: {what} {t:?} is not a number")))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::Data(format!("row {row}: {what} {t:?} must be finite and nonnegative")))
    }
}

fn check_header(got: &csv::StringRecord, want: &[&str], file: &str) -> Result<()> {
    let got: Vec<&str> = got.iter().map(str::trim).collect();
    if got == want {
        Ok(())
    } else {
        Err(Error::Data(format!("{file} header is {got:?}, expected {want:?}")))
    }
}

/// Parses the country panel CSV.
pub fn parse_countries(input: impl Read) -> Result<Vec<CountryYearRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    check_header(&headers, &["year", "code", "di", "gdp_usd", "trade_us_usd", "trade_china_usd"], "countries")?;
    let mut out = vec![];
    let mut seen = BTreeSet::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 2;
        let rec = rec.map_err(|e| Error::Data(format!("row {row}: {e}")))?;
        let year: i32 = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("row {row}: bad year {:?}", &rec[0])))?;
        let code = rec[1].trim().to_string();
        if code.is_empty() {
            return Err(Error::Data(format!("row {row}: empty country code")));
        }
        if !seen.insert((year, code.clone())) {
            return Err(Error::Data(format!("row {row}: duplicate entry for {code} in {year}")));
        }
        let di = opt_cell(&rec[2]).map(parse_di).transpose()?;
        let gdp = opt_cell(&rec[3]).map(|t| parse_amount(t, "gdp_usd", row)).transpose()?;
        let trade_us =
            opt_cell(&rec[4]).map(|t| parse_amount(t, "trade_us_usd", row)).transpose()?;
        let trade_china =
            opt_cell(&rec[5]).map(|t| parse_amount(t, "trade_china_usd", row)).transpose()?;
        out.push(CountryYearRecord { year, code, di, gdp, trade_us, trade_china });
    }
    Ok(out)
}

/// Parses the globals CSV.
pub fn parse_globals(input: impl Read) -> Result<Vec<GlobalsRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    check_header(&headers, &["year", "world_trade_to_gdp"], "globals")?;
    let mut out = vec![];
    let mut seen = BTreeSet::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 2;
        let rec = rec.map_err(|e| Error::Data(format!("row {row}: {e}")))?;
        let year: i32 = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("row {row}: bad year {:?}", &rec[0])))?;
        if !seen.insert(year) {
            return Err(Error::Data(format!("row {row}: duplicate globals year {year}")));
        }
        let v: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("row {row}: bad ratio {:?}", &rec[1])))?;
        if !(v.is_finite() && v > 0.0 && v < 2.0) {
            return Err(Error::Data(format!("row {row}: world_trade_to_gdp {v} outside (0, 2)")));
        }
        out.push(GlobalsRecord { year, world_trade_to_gdp: v });
    }
    Ok(out)
}

/// Reads and parses the country panel from a file.
pub fn read_countries(path: &Path) -> Result<Vec<CountryYearRecord>> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    parse_countries(f)
}

/// Reads and parses the globals file.
pub fn read_globals(path: &Path) -> Result<Vec<GlobalsRecord>> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    parse_globals(f)
}

/// Trailing moving average: at each observation year, the mean of the most
/// recent `window` available observations up to and including that year.
pub fn moving_average(series: &BTreeMap<i32, f64>, window: usize) -> Result<BTreeMap<i32, f64>> {
    if window == 0 {
        return Err(Error::Config("moving-average window must be at least 1".into()));
    }
    if series.is_empty() {
        return Err(Error::Data("moving average of an empty series".into()));
    }
    let pairs: Vec<(i32, f64)> = series.iter().map(|(&y, &v)| (y, v)).collect();
    let mut out = BTreeMap::new();
    for (i, &(y, _)) in pairs.iter().enumerate() {
        let lo = (i + 1).saturating_sub(window);
        let slice = &pairs[lo..=i];
        let mean = slice.iter().map(|&(_, v)| v).sum::<f64>() / slice.len() as f64;
        out.insert(y, mean);
    }
    Ok(out)
}

fn moving_average_exact(
    series: &BTreeMap<i32, Ratio<i64>>,
    window: usize,
) -> BTreeMap<i32, Ratio<i64>> {
    let pairs: Vec<(i32, Ratio<i64>)> = series.iter().map(|(&y, &v)| (y, v)).collect();
    let mut out = BTreeMap::new();
    for (i, &(y, _)) in pairs.iter().enumerate() {
        let lo = (i + 1).saturating_sub(window);
        let slice = &pairs[lo..=i];
        let sum = slice.iter().fold(Ratio::zero(), |a, &(_, v)| a + v);
        out.insert(y, sum / Ratio::from_integer(slice.len() as i64));
    }
    out
}

fn snap(r: Ratio<i64>) -> Result<Location> {
    Location::new((r * Ratio::from_integer(DI_SCALE)).round().to_integer(), DI_SCALE)
}

fn normalize_with(di: Ratio<i64>, min: Ratio<i64>, max: Ratio<i64>) -> Result<Location> {
    snap((max - di) / (max - min))
}

/// Min-max normalizes one year's moving-averaged DI values onto [0, 1] with
/// the most democratic country at 0, snapped to the DI resolution.
pub fn normalize_locations(di: &BTreeMap<String, Ratio<i64>>) -> Result<BTreeMap<String, Location>> {
    if di.len() < 2 {
        return Err(Error::Data("normalization needs at least 2 countries with a DI".into()));
    }
    let min = *di.values().min().unwrap();
    let max = *di.values().max().unwrap();
    if min == max {
        return Err(Error::Data("normalization is degenerate: all DI values equal".into()));
    }
    di.iter().map(|(c, &v)| Ok((c.clone(), normalize_with(v, min, max)?))).collect()
}

/// Moving-averaged panel series keyed by country code.
struct Panel {
    di: BTreeMap<String, BTreeMap<i32, Ratio<i64>>>,
    gdp: BTreeMap<String, BTreeMap<i32, f64>>,
    trade_us: BTreeMap<String, BTreeMap<i32, f64>>,
    trade_china: BTreeMap<String, BTreeMap<i32, f64>>,
    g_sym: BTreeMap<i32, f64>,
    years: Vec<i32>,
}

fn build_panel(
    cfg: &SimConfig,
    countries: &[CountryYearRecord],
    globals: &[GlobalsRecord],
) -> Result<Panel> {
    let mut di_raw: BTreeMap<String, BTreeMap<i32, Ratio<i64>>> = BTreeMap::new();
    let mut gdp_raw: BTreeMap<String, BTreeMap<i32, f64>> = BTreeMap::new();
    let mut tus_raw: BTreeMap<String, BTreeMap<i32, f64>> = BTreeMap::new();
    let mut tcn_raw: BTreeMap<String, BTreeMap<i32, f64>> = BTreeMap::new();
    let mut years = BTreeSet::new();
    for r in countries {
        years.insert(r.year);
        if let Some(v) = r.di {
            di_raw.entry(r.code.clone()).or_default().insert(r.year, v);
        }
        if let Some(v) = r.gdp {
            gdp_raw.entry(r.code.clone()).or_default().insert(r.year, v);
        }
        if let Some(v) = r.trade_us {
            tus_raw.entry(r.code.clone()).or_default().insert(r.year, v);
        }
        if let Some(v) = r.trade_china {
            tcn_raw.entry(r.code.clone()).or_default().insert(r.year, v);
        }
    }
    let w = cfg.ma_window;
    let ma_f64 = |raw: BTreeMap<String, BTreeMap<i32, f64>>| -> Result<BTreeMap<String, BTreeMap<i32, f64>>> {
        raw.into_iter().map(|(c, s)| Ok((c, moving_average(&s, w)?))).collect()
    };
    let di = di_raw.into_iter().map(|(c, s)| (c, moving_average_exact(&s, w))).collect();
    // Averages run over the full history; year_range only filters output years.
    let g_sym = match cfg.mode {
        Mode::Symmetric => {
            let series: BTreeMap<i32, f64> =
                globals.iter().map(|r| (r.year, r.world_trade_to_gdp)).collect();
            if series.is_empty() {
                return Err(Error::Config("symmetric mode needs globals data".into()));
            }
            moving_average(&series, w)?
        }
        Mode::Asymmetric => BTreeMap::new(),
    };
    let (trade_us, trade_china) = match cfg.mode {
        Mode::Asymmetric => (ma_f64(tus_raw)?, ma_f64(tcn_raw)?),
        Mode::Symmetric => (BTreeMap::new(), BTreeMap::new()),
    };
    Ok(Panel { di, gdp: ma_f64(gdp_raw)?, trade_us, trade_china, g_sym, years: years.into_iter().collect() })
}

impl Panel {
    fn at(map: &BTreeMap<String, BTreeMap<i32, f64>>, code: &str, y: i32) -> Option<f64> {
        map.get(code).and_then(|s| s.get(&y)).copied()
    }

    /// Countries usable in year y: DI and positive GDP both available.
    fn usable(&self, y: i32) -> BTreeMap<String, (Ratio<i64>, f64)> {
        let mut out = BTreeMap::new();
        for (code, s) in &self.di {
            let Some(&di) = s.get(&y) else { continue };
            let Some(gdp) = Self::at(&self.gdp, code, y) else { continue };
            if gdp > 0.0 {
                out.insert(code.clone(), (di, gdp));
            }
        }
        out
    }

    fn panel_di_bounds(&self) -> Option<(Ratio<i64>, Ratio<i64>)> {
        let all = self.di.values().flat_map(|s| s.values());
        match (all.clone().min(), all.max()) {
            (Some(&lo), Some(&hi)) if lo != hi => Some((lo, hi)),
            _ => None,
        }
    }
}

fn dependencies(
    cfg: &SimConfig,
    panel: &Panel,
    code: &str,
    y: i32,
    g_year: Option<f64>,
) -> (f64, f64) {
    match cfg.mode {
        Mode::Symmetric => {
            let g = g_year.expect("symmetric caller checked the ratio");
            (g, g)
        }
        Mode::Asymmetric => {
            let us = Panel::at(&panel.trade_us, code, y);
            let cn = Panel::at(&panel.trade_china, code, y);
            match (us, cn) {
                (Some(u), Some(c)) if u + c > 0.0 => (u / (u + c), c / (u + c)),
                (Some(_), Some(_)) => (0.0, 0.0),
                (Some(_), None) => (1.0, 0.0),
                (None, Some(_)) => (0.0, 1.0),
                (None, None) => (0.0, 0.0),
            }
        }
    }
}

struct BuiltYear {
    world: World,
    small_codes: Vec<String>,
    warnings: Vec<String>,
}

enum YearOutcome {
    Built(BuiltYear),
    Skip(String),
}

fn build_year(
    cfg: &SimConfig,
    panel: &Panel,
    panel_bounds: Option<(Ratio<i64>, Ratio<i64>)>,
    y: i32,
) -> Result<YearOutcome> {
    let usable = panel.usable(y);
    for sp in [&cfg.super_a, &cfg.super_b] {
        if !usable.contains_key(sp) {
            return Ok(YearOutcome::Skip(format!("superpower {sp} has no usable data")));
        }
    }
    if usable.len() < 3 {
        return Ok(YearOutcome::Skip(format!("only {} usable countries", usable.len())));
    }
    let mut warnings = vec![];
    let (min, max) = match cfg.di_norm {
        DiNorm::Year => {
            let min = *usable.values().map(|(di, _)| di).min().unwrap();
            let max = *usable.values().map(|(di, _)| di).max().unwrap();
            (min, max)
        }
        DiNorm::Panel => match panel_bounds {
            Some(b) => b,
            None => return Ok(YearOutcome::Skip("panel DI bounds are degenerate".into())),
        },
    };
    if min == max {
        return Ok(YearOutcome::Skip("all DI values equal; normalization degenerate".into()));
    }
    let g_year = match cfg.mode {
        Mode::Symmetric => match panel.g_sym.get(&y) {
            Some(&g) if g > 1.0 => {
                warnings.push(format!("world trade ratio {g} clamped to 1"));
                Some(1.0)
            }
            Some(&g) => Some(g),
            None => return Ok(YearOutcome::Skip("no world trade ratio".into())),
        },
        Mode::Asymmetric => None,
    };
    let mut countries = vec![];
    let mut small_codes = vec![];
    let mut next_id = 1u32;
    for (code, &(di, gdp)) in &usable {
        let location = normalize_with(di, min, max)?;
        let measure = gdp / 1e12;
        let (id, dep_a, dep_b) = if code == &cfg.super_a {
            (PlayerId::SuperA, 1.0, 0.0)
        } else if code == &cfg.super_b {
            (PlayerId::SuperB, 0.0, 1.0)
        } else {
            let (da, db) = dependencies(cfg, panel, code, y, g_year);
            let id = PlayerId::Small(next_id);
            next_id += 1;
            small_codes.push(code.clone());
            (id, da, db)
        };
        countries.push(Country { id, location, measure, dep_a, dep_b });
    }
    let grid: Vec<Location> = (0..=cfg.grid_steps)
        .map(|x| Location::new(i64::from(x), i64::from(cfg.grid_steps)))
        .collect::<Result<_>>()?;
    let world = World::new(countries, grid, DistanceModel::Line, CostModel::Proportional)?;
    Ok(YearOutcome::Built(BuiltYear { world, small_codes, warnings }))
}

struct SolvedYear {
    memberships: Vec<MembershipRow>,
    summary: SummaryRow,
    warnings: Vec<String>,
}

fn solve_year(cfg: &SimConfig, panel: &Panel, y: i32, built: BuiltYear) -> Result<SolvedYear> {
    let BuiltYear { world, small_codes, mut warnings } = built;
    let out = solve_spne(&world)?;
    warnings.extend(out.warnings.iter().cloned());
    let a_formed = out.ell_a.is_some();
    let b_formed = out.ell_b.is_some();
    let mut memberships = vec![
        MembershipRow {
            year: y,
            code: cfg.super_a.clone(),
            club: if a_formed { Choice::A } else { Choice::Out },
        },
        MembershipRow {
            year: y,
            code: cfg.super_b.clone(),
            club: if b_formed { Choice::B } else { Choice::Out },
        },
    ];
    for (idx, code) in small_codes.iter().enumerate() {
        let id = idx as u32 + 1;
        let club = if out.club_a.contains(&id) {
            Choice::A
        } else if out.club_b.contains(&id) {
            Choice::B
        } else {
            Choice::Out
        };
        memberships.push(MembershipRow { year: y, code: code.clone(), club });
    }
    memberships.sort_by(|a, b| a.code.cmp(&b.code));
    let gdp_of = |code: &str| Panel::at(&panel.gdp, code, y).unwrap_or(0.0);
    let sum_club = |members: &BTreeSet<u32>| -> f64 {
        members.iter().map(|&i| gdp_of(&small_codes[i as usize - 1])).sum()
    };
    let gdp_a_excl = sum_club(&out.club_a);
    let gdp_b_excl = sum_club(&out.club_b);
    let summary = SummaryRow {
        year: y,
        count_a: out.club_a.len() + usize::from(a_formed),
        count_b: out.club_b.len() + usize::from(b_formed),
        gdp_a: gdp_a_excl + if a_formed { gdp_of(&cfg.super_a) } else { 0.0 },
        gdp_b: gdp_b_excl + if b_formed { gdp_of(&cfg.super_b) } else { 0.0 },
        gdp_a_excl,
        gdp_b_excl,
        ell_a: out.ell_a,
        ell_b: out.ell_b,
    };
    Ok(SolvedYear { memberships, summary, warnings })
}

fn check_config(cfg: &SimConfig) -> Result<()> {
    if cfg.grid_steps < 1 || cfg.grid_steps > 100_000 {
        return Err(Error::Config(format!("grid_steps {} outside 1..=100000", cfg.grid_steps)));
    }
    if cfg.ma_window == 0 {
        return Err(Error::Config("moving-average window must be at least 1".into()));
    }
    if cfg.super_a.is_empty() || cfg.super_b.is_empty() || cfg.super_a == cfg.super_b {
        return Err(Error::Config("superpower codes must be distinct and non-empty".into()));
    }
    if let Some((lo, hi)) = cfg.year_range {
        if lo > hi {
            return Err(Error::Config(format!("year range {lo}..{hi} is empty")));
        }
    }
    Ok(())
}

/// Builds one world per year from the panel and solves each equilibrium.
/// Years run in parallel; outputs are ordered by year, then by country code.
pub fn run_simulation(
    cfg: &SimConfig,
    countries: &[CountryYearRecord],
    globals: &[GlobalsRecord],
) -> Result<SimReport> {
    check_config(cfg)?;
    let panel = build_panel(cfg, countries, globals)?;
    let in_range = |y: i32| cfg.year_range.map_or(true, |(lo, hi)| y >= lo && y <= hi);
    let years: Vec<i32> = panel.years.iter().copied().filter(|&y| in_range(y)).collect();
    if years.is_empty() {
        return Err(Error::Config("no years to simulate".into()));
    }
    let panel_bounds = match cfg.di_norm {
        DiNorm::Panel => panel.panel_di_bounds(),
        DiNorm::Year => None,
    };
    let frozen: Option<BuiltYear> = match cfg.base_year {
        None => None,
        Some(by) => match build_year(cfg, &panel, panel_bounds, by)? {
            YearOutcome::Built(b) => Some(b),
            YearOutcome::Skip(reason) => {
                return Err(Error::Config(format!("base year {by} unusable: {reason}")));
            }
        },
    };
    let runs: Vec<(i32, Result<YearRun>)> = exec::map(&years, |&y| {
        let run = (|| {
            let built = match &frozen {
                None => build_year(cfg, &panel, panel_bounds, y)?,
                Some(base) => project_year(cfg, &panel, base, y)?,
            };
            match built {
                YearOutcome::Skip(reason) => Ok(YearRun::Skipped(reason)),
                YearOutcome::Built(b) => Ok(YearRun::Solved(solve_year(cfg, &panel, y, b)?)),
            }
        })();
        (y, run)
    });
    let mut memberships = vec![];
    let mut summary = vec![];
    let mut warnings = vec![];
    for (y, run) in runs {
        match run? {
            YearRun::Skipped(reason) => warnings.push(format!("year {y} skipped: {reason}")),
            YearRun::Solved(s) => {
                warnings.extend(s.warnings.into_iter().map(|w| format!("year {y}: {w}")));
                memberships.extend(s.memberships);
                summary.push(s.summary);
            }
        }
    }
    Ok(SimReport { memberships, summary, warnings })
}

enum YearRun {
    Solved(SolvedYear),
    Skipped(String),
}

/// Projection year: base-year locations, dependencies, and country set, with
/// measures re-priced at year y's GDP. Countries without GDP at y drop out.
fn project_year(cfg: &SimConfig, panel: &Panel, base: &BuiltYear, y: i32) -> Result<YearOutcome> {
    for sp in [&cfg.super_a, &cfg.super_b] {
        if Panel::at(&panel.gdp, sp, y).unwrap_or(0.0) <= 0.0 {
            return Ok(YearOutcome::Skip(format!("superpower {sp} has no usable GDP")));
        }
    }
    let mut countries = vec![];
    let mut small_codes = vec![];
    let mut next_id = 1u32;
    for c in &base.world.countries {
        let code = match c.id {
            PlayerId::SuperA => cfg.super_a.as_str(),
            PlayerId::SuperB => cfg.super_b.as_str(),
            PlayerId::Small(i) => base.small_codes[i as usize - 1].as_str(),
        };
        let Some(gdp) = Panel::at(&panel.gdp, code, y) else { continue };
        if gdp <= 0.0 {
            continue;
        }
        let id = match c.id {
            PlayerId::Small(_) => {
                let id = PlayerId::Small(next_id);
                next_id += 1;
                small_codes.push(code.to_string());
                id
            }
            sp => sp,
        };
        countries.push(Country {
            id,
            location: c.location,
            measure: gdp / 1e12,
            dep_a: c.dep_a,
            dep_b: c.dep_b,
        });
    }
    if countries.len() < 3 {
        return Ok(YearOutcome::Skip(format!("only {} usable countries", countries.len())));
    }
    let world = World::new(countries, base.world.grid.clone(), DistanceModel::Line, CostModel::Proportional)?;
    Ok(YearOutcome::Built(BuiltYear { world, small_codes, warnings: vec![] }))
}

/// Writes the per-country membership CSV.
pub fn write_memberships(path: &Path, rows: &[MembershipRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    let io_err = |e: csv::Error| Error::Data(format!("writing {}: {e}", path.display()));
    w.write_record(["year", "code", "club"]).map_err(io_err)?;
    for r in rows {
        w.write_record([r.year.to_string(), r.code.clone(), r.club.to_string()]).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Data(format!("writing {}: {e}", path.display())))
}

fn loc_cell(l: Option<Location>) -> String {
    l.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the per-year summary CSV.
pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    let io_err = |e: csv::Error| Error::Data(format!("writing {}: {e}", path.display()));
    w.write_record([
        "year", "count_a", "count_b", "gdp_a", "gdp_b", "gdp_a_excl", "gdp_b_excl", "ell_a",
        "ell_b",
    ])
    .map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.year.to_string(),
            r.count_a.to_string(),
            r.count_b.to_string(),
            r.gdp_a.to_string(),
            r.gdp_b.to_string(),
            r.gdp_a_excl.to_string(),
            r.gdp_b_excl.to_string(),
            loc_cell(r.ell_a),
            loc_cell(r.ell_b),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Data(format!("writing {}: {e}", path.display())))
}
