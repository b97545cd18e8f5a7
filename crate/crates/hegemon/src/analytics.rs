//! Evenly-spaced special-case worlds, closed-form thresholds with their integer
//! helpers, and phase-classified parameter sweeps cross-validating the engine.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_leader_alone, solve_spne, SpneOutcome};
use crate::model::{CostModel, Country, DistanceModel, Location, PlayerId, World};
use crate::{exec, Error, Result};

/// Which original members' measure grows in the measure case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IPrime {
    /// Grow superpower A's own measure.
    pub include_super_a: bool,
    /// Small indices on A's half (1..=(n-1)/2) whose measure grows.
    pub small: BTreeSet<u32>,
}

impl Default for IPrime {
    fn default() -> Self {
        IPrime { include_super_a: true, small: BTreeSet::new() }
    }
}

/// Dependency structure of an evenly-spaced special case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "lowercase")]
pub enum CaseSpec {
    /// Every small country depends on both superpowers with the same g.
    Symmetric {
        /// Dependency level in [0, 1].
        g: f64,
    },
    /// Dependency g on A and 1 - g on B.
    Asymmetric {
        /// Dependency on A in [0, 1].
        g: f64,
    },
    /// Symmetric dependency g with measure m on the I' members, 1 elsewhere.
    Measure {
        /// Dependency level in [0, 1].
        g: f64,
        /// Members whose measure grows.
        i_prime: IPrime,
        /// Measure multiplier, at least 1.
        m: f64,
    },
}

/// An evenly-spaced world: A at 0, B at 1, n - 1 small countries at i/n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecialCaseSpec {
    /// Grid divisor; odd, at least 3.
    pub n: u32,
    /// Dependency and measure structure.
    pub case: CaseSpec,
}

/// Every closed-form threshold for one n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    /// The n the thresholds belong to.
    pub n: u32,
    /// Symmetric: below it no club forms.
    pub g_u: f64,
    /// Symmetric: above it the world turns bipolar.
    pub g_b: f64,
    /// Symmetric: above it both superpowers sit at home.
    pub g_b_h: f64,
    /// Asymmetric: lower edge of the equal-size bipolar region.
    pub g_eq_lo: f64,
    /// Asymmetric: upper edge of the equal-size bipolar region; pairs to 1 with g_eq_lo.
    pub g_eq_hi: f64,
    /// Asymmetric: below it B is the lone hegemon.
    pub g_lo_b: f64,
    /// Asymmetric: below it B sits at home while unipolar.
    pub g_lo_b_h: f64,
    /// Asymmetric: above it A sits at home while unipolar.
    pub g_hi_b_h: f64,
    /// Asymmetric: above it A is the lone hegemon.
    pub g_hi_b: f64,
    /// Last-stronghold club size delta*.
    pub delta_star: u32,
    /// Measure case: above it A's club grows without B relocating.
    pub g_star: f64,
}

/// Classified world order of one equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    /// Neither superpower forms a club.
    NoHegemon,
    /// Only A forms a club.
    UnipolarA,
    /// Only B forms a club.
    UnipolarB,
    /// Both form clubs.
    Bipolar,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Order::NoHegemon => "no_hegemon",
            Order::UnipolarA => "unipolar_a",
            Order::UnipolarB => "unipolar_b",
            Order::Bipolar => "bipolar",
        };
        write!(f, "{s}")
    }
}

/// One row of a parameter sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    /// Swept parameter value (g or m).
    pub x: f64,
    /// Classified world order.
    pub order: Order,
    /// A's equilibrium location.
    pub ell_a: Option<Location>,
    /// B's equilibrium location.
    pub ell_b: Option<Location>,
    /// A's club size counting the superpower when formed.
    pub size_a: usize,
    /// B's club size counting the superpower when formed.
    pub size_b: usize,
    /// A's equilibrium payoff.
    pub payoff_a: f64,
    /// B's equilibrium payoff.
    pub payoff_b: f64,
    /// A's optimum location if B never responded.
    pub ell_a_without_b: Option<Location>,
}

/// Swept parameter axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Dependency level from min to max in steps.
    G {
        /// First g value.
        min: f64,
        /// Last g value (inclusive within one step's tolerance).
        max: f64,
        /// Step size, positive.
        step: f64,
    },
    /// Explicit measure-multiplier values (measure case only).
    M {
        /// Multipliers, each at least 1.
        values: Vec<f64>,
    },
}

/// A full sweep request: the case template plus the axis that varies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Grid divisor.
    pub n: u32,
    /// Case template; its g (or m) is overridden per point.
    pub case: CaseSpec,
    /// Axis to sweep.
    pub axis: SweepAxis,
}

/// Sweep output: per-point rows plus nonfatal per-point failures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Column label of x ("g" or "m").
    pub axis: String,
    /// Successful points in axis order.
    pub points: Vec<PhasePoint>,
    /// Per-point errors the sweep skipped over.
    pub warnings: Vec<String>,
}

fn check_g(g: f64) -> Result<()> {
    if g.is_finite() && (0.0..=1.0).contains(&g) {
        Ok(())
    } else {
        Err(Error::Config(format!("dependency g={g} outside [0, 1]")))
    }
}

/// Builds the evenly-spaced world for a special-case spec.
pub fn build_special_world(spec: &SpecialCaseSpec) -> Result<World> {
    let n = spec.n;
    if n < 3 || n % 2 == 0 {
        return Err(Error::Config(format!("n must be odd and at least 3, got {n}")));
    }
    let (g, i_prime, m) = match &spec.case {
        CaseSpec::Symmetric { g } => (*g, None, 1.0),
        CaseSpec::Asymmetric { g } => (*g, None, 1.0),
        CaseSpec::Measure { g, i_prime, m } => (*g, Some(i_prime), *m),
    };
    check_g(g)?;
    if let Some(ip) = i_prime {
        if !(m.is_finite() && m >= 1.0) {
            return Err(Error::Config(format!("measure multiplier m={m} must be at least 1")));
        }
        if !ip.include_super_a && ip.small.is_empty() {
            return Err(Error::Config("I' must be non-empty".into()));
        }
        let half = (n - 1) / 2;
        if let Some(&bad) = ip.small.iter().find(|&&i| i < 1 || i > half) {
            return Err(Error::Config(format!("I' member {bad} outside 1..={half}")));
        }
    }
    let deps = |_i: u32| match &spec.case {
        CaseSpec::Symmetric { g } | CaseSpec::Measure { g, .. } => (*g, *g),
        CaseSpec::Asymmetric { g } => (*g, 1.0 - *g),
    };
    let measure_of = |i: u32| match i_prime {
        Some(ip) if ip.small.contains(&i) => m,
        _ => 1.0,
    };
    let m_a = match i_prime {
        Some(ip) if ip.include_super_a => m,
        _ => 1.0,
    };
    let mut countries = vec![
        Country {
            id: PlayerId::SuperA,
            location: Location::new(0, 1)?,
            measure: m_a,
            dep_a: 1.0,
            dep_b: 0.0,
        },
        Country {
            id: PlayerId::SuperB,
            location: Location::new(1, 1)?,
            measure: 1.0,
            dep_a: 0.0,
            dep_b: 1.0,
        },
    ];
    for i in 1..n {
        let (dep_a, dep_b) = deps(i);
        countries.push(Country {
            id: PlayerId::Small(i),
            location: Location::new(i as i64, n as i64)?,
            measure: measure_of(i),
            dep_a,
            dep_b,
        });
    }
    let grid: Vec<Location> =
        (0..=n).map(|i| Location::new(i as i64, n as i64)).collect::<Result<_>>()?;
    World::new(countries, grid, DistanceModel::Line, CostModel::Proportional)
}

/// Last-stronghold size: the largest d with d(d+1) <= n.
pub fn delta_star(n: u32) -> u32 {
    let mut d = 1;
    while (d + 1) * (d + 2) <= n {
        d += 1;
    }
    d
}

/// Helper sigma_n(k) = k/n + 1/(k+1) - 1/(n+1-k).
pub fn sigma_n(n: u32, k: u32) -> f64 {
    let (n, k) = (n as f64, k as f64);
    k / n + 1.0 / (k + 1.0) - 1.0 / (n + 1.0 - k)
}

/// Helper lambda_n(k) = 1 - k/n - 1/(k+1) + 1/(n-1).
pub fn lambda_n(n: u32, k: u32) -> f64 {
    let (n, k) = (n as f64, k as f64);
    1.0 - k / n - 1.0 / (k + 1.0) + 1.0 / (n - 1.0)
}

fn check_helper_n(n: u32) -> Result<()> {
    if n >= 13 && n % 2 == 1 {
        Ok(())
    } else {
        Err(Error::Config(format!("closed forms need odd n >= 13, got {n}")))
    }
}

/// Brute-force minimizer of sigma_n over 1..=n/2, smallest index on ties.
pub fn sigma_min(n: u32) -> Result<u32> {
    check_helper_n(n)?;
    let mut best = 1;
    for k in 2..=(n / 2) {
        if sigma_n(n, k) < sigma_n(n, best) {
            best = k;
        }
    }
    Ok(best)
}

/// Brute-force maximizer of lambda_n over 1..=n/2, smallest index on ties.
pub fn lambda_max(n: u32) -> Result<u32> {
    check_helper_n(n)?;
    let mut best = 1;
    for k in 2..=(n / 2) {
        if lambda_n(n, k) > lambda_n(n, best) {
            best = k;
        }
    }
    Ok(best)
}

/// Nearest integer to (3n+2)/4; never a half tie for odd n.
fn stronghold_cap(n: u32) -> u32 {
    (3 * n + 4) / 4
}

/// Evaluates every closed-form threshold for odd n >= 13. Thresholds whose
/// binding club size comes from an integer argmin/argmax are computed by
/// explicit search over k.
pub fn thresholds(n: u32) -> Result<ThresholdSet> {
    check_helper_n(n)?;
    let nf = n as f64;
    let g_u = 2.0 * nf / ((nf + 3.0) * (nf - 1.0));
    let g_b = 4.0 * nf / ((nf + 3.0) * (nf + 1.0));
    let g_b_h = 4.0 * nf / ((nf + 1.0) * (nf + 1.0));
    let g_eq_lo = (nf - 1.0) / (2.0 * nf) - 2.0 / (nf + 3.0) + 2.0 / (nf + 1.0);
    let g_eq_hi = (nf + 1.0) / (2.0 * nf) + 2.0 / (nf + 3.0) - 2.0 / (nf + 1.0);
    let ds = delta_star(n);
    let half = (n - 1) / 2;
    let g_lo_b = {
        let k = (ds + 1) as f64;
        nf / (nf + k) * sigma_n(n, ds + 1)
    };
    let g_hi_b = (1..=half)
        .map(|k| {
            let kf = k as f64;
            nf / (nf + kf) * (kf / (kf + 1.0) + 1.0 / (nf - 1.0))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let g_lo_b_h = (1..=half).map(|k| sigma_n(n, k)).fold(f64::INFINITY, f64::min);
    let g_hi_b_h = (1..=half).map(|k| lambda_n(n, k)).fold(f64::NEG_INFINITY, f64::max);
    let r = stronghold_cap(n) as f64;
    let g_star = nf / ((nf + 1.0 - r) * (2.0 * r - nf));
    let t = ThresholdSet {
        n,
        g_u,
        g_b,
        g_b_h,
        g_eq_lo,
        g_eq_hi,
        g_lo_b,
        g_lo_b_h,
        g_hi_b_h,
        g_hi_b,
        delta_star: ds,
        g_star,
    };
    let sym_ok = 0.0 < t.g_u && t.g_u < t.g_b && t.g_b < t.g_b_h && t.g_b_h < 1.0;
    let asym_ok = 0.0 < t.g_lo_b
        && t.g_lo_b < t.g_lo_b_h
        && t.g_lo_b_h < t.g_hi_b_h
        && t.g_hi_b_h < t.g_hi_b
        && t.g_hi_b < 1.0;
    let pair_ok = (t.g_eq_lo + t.g_eq_hi - 1.0).abs() < 1e-12;
    if !(sym_ok && asym_ok && pair_ok) {
        return Err(Error::Internal(format!("threshold ordering violated at n={n}: {t:?}")));
    }
    Ok(t)
}

/// Largest stronghold size supportable at dependency g: the floor of the
/// smaller root of (n+1-k)(2k-n) = n/g. Requires g > g_star(n).
pub fn k_of_g(n: u32, g: f64) -> Result<u32> {
    let t = thresholds(n)?;
    if !(g.is_finite() && g > t.g_star) {
        return Err(Error::Config(format!("k(g) needs g > g_star = {}, got {g}", t.g_star)));
    }
    let nf = n as f64;
    let b = 3.0 * nf + 2.0;
    let c = nf * (nf + 1.0) + nf / g;
    let disc = b * b - 8.0 * c;
    if disc < 0.0 {
        return Err(Error::Config(format!("no real stronghold size at n={n}, g={g}")));
    }
    let k_star = (b - disc.sqrt()) / 4.0;
    // q(k) >= 0 exactly when k sits weakly left of the smaller root.
    let q = |k: f64| 2.0 * k * k - b * k + c;
    let mut k = k_star.floor() as i64;
    while q((k + 1) as f64) >= 0.0 && ((k + 1) as f64) < b / 4.0 {
        k += 1;
    }
    while k > 1 && q(k as f64) < 0.0 {
        k -= 1;
    }
    if k < 1 {
        return Err(Error::Config(format!("stronghold size degenerate at n={n}, g={g}")));
    }
    Ok(k as u32)
}

/// Classified order of a solved equilibrium, by club existence.
pub fn order_of(out: &SpneOutcome) -> Order {
    match (out.ell_a.is_some(), out.ell_b.is_some()) {
        (false, false) => Order::NoHegemon,
        (true, false) => Order::UnipolarA,
        (false, true) => Order::UnipolarB,
        (true, true) => Order::Bipolar,
    }
}

fn case_with_g(case: &CaseSpec, g: f64) -> CaseSpec {
    match case {
        CaseSpec::Symmetric { .. } => CaseSpec::Symmetric { g },
        CaseSpec::Asymmetric { .. } => CaseSpec::Asymmetric { g },
        CaseSpec::Measure { i_prime, m, .. } => {
            CaseSpec::Measure { g, i_prime: i_prime.clone(), m: *m }
        }
    }
}

fn case_with_m(case: &CaseSpec, m: f64) -> Result<CaseSpec> {
    match case {
        CaseSpec::Measure { g, i_prime, .. } => {
            Ok(CaseSpec::Measure { g: *g, i_prime: i_prime.clone(), m })
        }
        _ => Err(Error::Config("an m sweep needs the measure case".into())),
    }
}

fn solve_point(n: u32, case: CaseSpec, x: f64) -> Result<PhasePoint> {
    let w = build_special_world(&SpecialCaseSpec { n, case })?;
    let out = solve_spne(&w)?;
    let alone = solve_leader_alone(&w)?;
    let a_formed = out.ell_a.is_some();
    let b_formed = out.ell_b.is_some();
    Ok(PhasePoint {
        x,
        order: order_of(&out),
        ell_a: out.ell_a,
        ell_b: out.ell_b,
        size_a: out.club_a.len() + usize::from(a_formed),
        size_b: out.club_b.len() + usize::from(b_formed),
        payoff_a: out.payoff_a,
        payoff_b: out.payoff_b,
        ell_a_without_b: alone.ell_a,
    })
}

/// Runs the sweep, solving one equilibrium per grid point in parallel.
/// Per-point failures become warnings; the sweep continues.
pub fn phase_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let (axis, xs): (String, Vec<f64>) = match &spec.axis {
        SweepAxis::G { min, max, step } => {
            if !(min.is_finite() && max.is_finite() && step.is_finite() && *step > 0.0) {
                return Err(Error::Config(format!("bad g axis: min={min} max={max} step={step}")));
            }
            if min > max {
                return Err(Error::Config(format!("g axis min {min} exceeds max {max}")));
            }
            check_g(*min)?;
            check_g(*max)?;
            let mut xs = vec![];
            let mut k = 0u32;
            loop {
                let g = min + f64::from(k) * step;
                if g > max + step * 1e-9 {
                    break;
                }
                xs.push(g.min(1.0));
                k += 1;
            }
            ("g".into(), xs)
        }
        SweepAxis::M { values } => {
            case_with_m(&spec.case, 1.0)?;
            if values.is_empty() {
                return Err(Error::Config("m axis has no values".into()));
            }
            ("m".into(), values.clone())
        }
    };
    let n = spec.n;
    let results: Vec<(f64, Result<PhasePoint>)> = exec::map(&xs, |&x| {
        let point = match &spec.axis {
            SweepAxis::G { .. } => solve_point(n, case_with_g(&spec.case, x), x),
            SweepAxis::M { .. } => {
                case_with_m(&spec.case, x).and_then(|c| solve_point(n, c, x))
            }
        };
        (x, point)
    });
    let mut points = vec![];
    let mut warnings = vec![];
    for (x, r) in results {
        match r {
            Ok(p) => points.push(p),
            Err(e) => warnings.push(format!("{axis}={x}: {e}")),
        }
    }
    Ok(SweepResult { axis, points, warnings })
}
