//! Game primitives: players, exact rational locations, distance and cost models,
//! and the three utility functions everything downstream is a pure function of.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Comparison tolerance for utilities; |u| <= EPS counts as exactly zero.
pub const EPS: f64 = 1e-12;

/// Largest common denominator accepted across a world's locations.
const MAX_COMMON_DEN: i128 = 1_000_000_000;

/// Weak participation test: u >= 0 within EPS.
pub fn is_nonneg(u: f64) -> bool {
    u >= -EPS
}

/// Strict failure of participation: u < 0 beyond EPS.
pub fn is_neg(u: f64) -> bool {
    u < -EPS
}

/// Strict dominance test: a > b beyond EPS.
pub fn strictly_gt(a: f64, b: f64) -> bool {
    a - b > EPS
}

/// Exact-zero test within EPS.
pub fn near_zero(u: f64) -> bool {
    u.abs() <= EPS
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exact rational position in [0, 1]; serialized as a "num/den" string.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location(Ratio<i64>);

impl Location {
    /// Builds num/den, requiring a nonzero denominator and a value in [0, 1].
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Config("location denominator is zero".into()));
        }
        Self::from_ratio(Ratio::new(num, den))
    }

    /// Wraps a ratio, requiring it to lie in [0, 1].
    pub fn from_ratio(r: Ratio<i64>) -> Result<Self> {
        if r < Ratio::new(0, 1) || r > Ratio::new(1, 1) {
            return Err(Error::Config(format!("location {r} outside [0, 1]")));
        }
        Ok(Self(r))
    }

    /// The exact rational value.
    pub fn ratio(self) -> Ratio<i64> {
        self.0
    }

    /// Floating-point value for utility arithmetic.
    pub fn to_f64(self) -> f64 {
        ratio_f64(self.0)
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Location {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad location {s:?}, expected \"num/den\""));
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?),
            None => (s.trim().parse().map_err(|_| bad())?, 1),
        };
        Location::new(num, den)
    }
}

impl Serialize for Location {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Location {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|e| de::Error::custom(format!("{e}")))
    }
}

/// A superpower or a small country; small indices start at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlayerId {
    /// The first-moving superpower.
    SuperA,
    /// The second-moving superpower.
    SuperB,
    /// A small country by index.
    Small(u32),
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayerId::SuperA => write!(f, "a"),
            PlayerId::SuperB => write!(f, "b"),
            PlayerId::Small(i) => write!(f, "{i}"),
        }
    }
}

impl Serialize for PlayerId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PlayerId::SuperA => s.serialize_str("a"),
            PlayerId::SuperB => s.serialize_str("b"),
            PlayerId::Small(i) => s.serialize_u32(*i),
        }
    }
}

impl<'de> Deserialize<'de> for PlayerId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = PlayerId;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "\"a\", \"b\", or a small-country index")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<PlayerId, E> {
                match v {
                    "a" => Ok(PlayerId::SuperA),
                    "b" => Ok(PlayerId::SuperB),
                    _ => Err(E::custom(format!("bad player id {v:?}"))),
                }
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<PlayerId, E> {
                let i = u32::try_from(v).map_err(|_| E::custom("small index too large"))?;
                if i == 0 {
                    return Err(E::custom("small indices start at 1"));
                }
                Ok(PlayerId::Small(i))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<PlayerId, E> {
                let u = u64::try_from(v).map_err(|_| E::custom("small index must be positive"))?;
                self.visit_u64(u)
            }
        }
        d.deserialize_any(V)
    }
}

/// A small country's club membership choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Choice {
    /// Member of A's club.
    #[serde(rename = "a")]
    A,
    /// Member of B's club.
    #[serde(rename = "b")]
    B,
    /// Member of neither club.
    #[serde(rename = "none")]
    Out,
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::A => write!(f, "a"),
            Choice::B => write!(f, "b"),
            Choice::Out => write!(f, "none"),
        }
    }
}

/// Choice vector over the small countries; superpowers never appear.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// Small index to choice.
    pub choices: BTreeMap<u32, Choice>,
}

impl Assignment {
    /// Same choice for every listed small country.
    pub fn uniform(ids: &[u32], choice: Choice) -> Self {
        Assignment { choices: ids.iter().map(|&i| (i, choice)).collect() }
    }

    /// Stage-one vector: members of `club_a` choose A, the rest stay out.
    pub fn stage1(ids: &[u32], club_a: &BTreeSet<u32>) -> Self {
        Assignment {
            choices: ids
                .iter()
                .map(|&i| (i, if club_a.contains(&i) { Choice::A } else { Choice::Out }))
                .collect(),
        }
    }

    /// Stage-two vector from disjoint club memberships.
    pub fn stage2(ids: &[u32], club_a: &BTreeSet<u32>, club_b: &BTreeSet<u32>) -> Self {
        Assignment {
            choices: ids
                .iter()
                .map(|&i| {
                    let c = if club_a.contains(&i) {
                        Choice::A
                    } else if club_b.contains(&i) {
                        Choice::B
                    } else {
                        Choice::Out
                    };
                    (i, c)
                })
                .collect(),
        }
    }

    /// Choice of small country `i`; absent entries read as Out.
    pub fn choice(&self, i: u32) -> Choice {
        self.choices.get(&i).copied().unwrap_or(Choice::Out)
    }

    /// Indices currently choosing A.
    pub fn a_set(&self) -> BTreeSet<u32> {
        self.choices.iter().filter(|(_, c)| **c == Choice::A).map(|(i, _)| *i).collect()
    }

    /// Indices currently choosing B.
    pub fn b_set(&self) -> BTreeSet<u32> {
        self.choices.iter().filter(|(_, c)| **c == Choice::B).map(|(i, _)| *i).collect()
    }
}

/// Distance model over positions; all distances lie in [0, 1].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistanceModel {
    /// d(x, y) = |x - y| on the unit segment.
    Line,
    /// Explicit symmetric matrix over an enumerated location set.
    Matrix {
        /// Every position the matrix covers (country homes and grid points).
        locations: Vec<Location>,
        /// Row-major distances aligned with `locations`.
        d: Vec<Vec<f64>>,
    },
}

/// Cost-sharing model; a member's share strictly falls as the club grows.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostModel {
    /// Share of member j is m_j / (m_e + sum of member measures).
    Proportional,
    /// shares[k] is every member's share in a club holding k small countries.
    Table {
        /// Strictly decreasing positive shares indexed by small-member count.
        shares: Vec<f64>,
    },
}

/// One player: identity, home position, cost weight, and dependency scalings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Country {
    /// Player identity.
    pub id: PlayerId,
    /// Home position.
    pub location: Location,
    /// Cost weight m_j, strictly positive.
    pub measure: f64,
    /// Benefit scaling toward A's club good, in [0, 1]; must be 1 for superpower A.
    pub dep_a: f64,
    /// Benefit scaling toward B's club good, in [0, 1]; must be 1 for superpower B.
    pub dep_b: f64,
}

/// A full game instance; build via `World::new` or `World::from_json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct World {
    /// Two superpowers plus the small countries.
    pub countries: Vec<Country>,
    /// Feasible club-good sites for both superpowers, kept sorted.
    pub grid: Vec<Location>,
    /// Distance model.
    pub distance: DistanceModel,
    /// Cost-sharing model.
    pub cost: CostModel,
}

impl World {
    /// Validates and normalizes a hand-built instance.
    pub fn new(
        countries: Vec<Country>,
        grid: Vec<Location>,
        distance: DistanceModel,
        cost: CostModel,
    ) -> Result<Self> {
        let mut w = World { countries, grid, distance, cost };
        w.validate()?;
        Ok(w)
    }

    /// Parses and validates a JSON document.
    pub fn from_json(s: &str) -> Result<Self> {
        let mut w: World =
            serde_json::from_str(s).map_err(|e| Error::Data(format!("bad world JSON: {e}")))?;
        w.validate()?;
        Ok(w)
    }

    /// Pretty JSON form of this instance.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    /// Checks every structural invariant and sorts the grid; call before use.
    pub fn validate(&mut self) -> Result<()> {
        let cfg = |m: String| Error::Config(m);
        let n_a = self.countries.iter().filter(|c| c.id == PlayerId::SuperA).count();
        let n_b = self.countries.iter().filter(|c| c.id == PlayerId::SuperB).count();
        if n_a != 1 || n_b != 1 {
            return Err(cfg(format!("need exactly one of each superpower, got {n_a} a and {n_b} b")));
        }
        let mut ids: Vec<u32> = self
            .countries
            .iter()
            .filter_map(|c| match c.id {
                PlayerId::Small(i) => Some(i),
                _ => None,
            })
            .collect();
        ids.sort_unstable();
        for (k, &i) in ids.iter().enumerate() {
            if i != k as u32 + 1 {
                return Err(cfg(format!("small indices must be 1..={}, got {ids:?}", ids.len())));
            }
        }
        for c in &self.countries {
            if !(c.measure.is_finite() && c.measure > 0.0) {
                return Err(cfg(format!("country {} has non-positive measure {}", c.id, c.measure)));
            }
            for (name, v) in [("dep_a", c.dep_a), ("dep_b", c.dep_b)] {
                if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                    return Err(cfg(format!("country {} has {name}={v} outside [0, 1]", c.id)));
                }
            }
        }
        if (self.super_a().dep_a - 1.0).abs() > EPS {
            return Err(cfg("superpower a must have dep_a = 1".into()));
        }
        if (self.super_b().dep_b - 1.0).abs() > EPS {
            return Err(cfg("superpower b must have dep_b = 1".into()));
        }
        if self.grid.is_empty() {
            return Err(cfg("location grid is empty".into()));
        }
        self.grid.sort_unstable();
        self.grid.dedup();
        let mut den: i128 = 1;
        for loc in self.countries.iter().map(|c| c.location).chain(self.grid.iter().copied()) {
            let d = *loc.ratio().denom() as i128;
            den = den / num_integer::gcd(den, d) * d;
            if den > MAX_COMMON_DEN {
                return Err(cfg(format!("location denominators exceed common bound {MAX_COMMON_DEN}")));
            }
        }
        match &self.distance {
            DistanceModel::Line => {}
            DistanceModel::Matrix { locations, d } => {
                let n = locations.len();
                let mut sorted = locations.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != n {
                    return Err(cfg("matrix locations contain duplicates".into()));
                }
                if d.len() != n || d.iter().any(|row| row.len() != n) {
                    return Err(cfg(format!("distance matrix must be {n}x{n}")));
                }
                for i in 0..n {
                    if d[i][i] != 0.0 {
                        return Err(cfg(format!("matrix diagonal entry {i} is nonzero")));
                    }
                    for j in 0..n {
                        let v = d[i][j];
                        if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                            return Err(cfg(format!("matrix entry ({i},{j})={v} outside [0, 1]")));
                        }
                        if d[i][j] != d[j][i] {
                            return Err(cfg(format!("matrix not symmetric at ({i},{j})")));
                        }
                        for k in 0..n {
                            if d[i][j] > d[i][k] + d[k][j] + EPS {
                                return Err(cfg(format!("matrix violates triangle inequality at ({i},{j},{k})")));
                            }
                        }
                    }
                }
                for loc in self.countries.iter().map(|c| c.location).chain(self.grid.iter().copied()) {
                    if !locations.contains(&loc) {
                        return Err(cfg(format!("location {loc} missing from distance matrix")));
                    }
                }
            }
        }
        match &self.cost {
            CostModel::Proportional => {}
            CostModel::Table { shares } => {
                if shares.len() < ids.len() + 1 {
                    return Err(cfg(format!(
                        "cost table needs at least {} entries, got {}",
                        ids.len() + 1,
                        shares.len()
                    )));
                }
                for (k, &s) in shares.iter().enumerate() {
                    if !(s.is_finite() && s > 0.0) {
                        return Err(cfg(format!("cost share [{k}]={s} must be positive")));
                    }
                    if k > 0 && s >= shares[k - 1] {
                        return Err(cfg(format!("cost shares must strictly decrease, violated at [{k}]")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Superpower A's record; valid worlds always hold exactly one.
    pub fn super_a(&self) -> &Country {
        self.countries.iter().find(|c| c.id == PlayerId::SuperA).expect("superpower a present")
    }

    /// Superpower B's record; valid worlds always hold exactly one.
    pub fn super_b(&self) -> &Country {
        self.countries.iter().find(|c| c.id == PlayerId::SuperB).expect("superpower b present")
    }

    /// Small-country records in index order.
    pub fn smalls(&self) -> Vec<&Country> {
        let mut v: Vec<&Country> =
            self.countries.iter().filter(|c| matches!(c.id, PlayerId::Small(_))).collect();
        v.sort_by_key(|c| c.id);
        v
    }

    /// Small-country indices in increasing order.
    pub fn small_ids(&self) -> Vec<u32> {
        self.smalls()
            .iter()
            .map(|c| match c.id {
                PlayerId::Small(i) => i,
                _ => unreachable!(),
            })
            .collect()
    }

    /// Number of small countries.
    pub fn n_small(&self) -> usize {
        self.countries.len() - 2
    }

    /// Record of small country `i`.
    pub fn small(&self, i: u32) -> Result<&Country> {
        self.countries
            .iter()
            .find(|c| c.id == PlayerId::Small(i))
            .ok_or_else(|| Error::Internal(format!("unknown small country {i}")))
    }

    /// Home position of any player.
    pub fn home(&self, p: PlayerId) -> Result<Location> {
        match p {
            PlayerId::SuperA => Ok(self.super_a().location),
            PlayerId::SuperB => Ok(self.super_b().location),
            PlayerId::Small(i) => Ok(self.small(i)?.location),
        }
    }

    /// Cost share of one small-member measure `m_j` in a club of `count` small
    /// members with measure sum `sum_m`, run by a superpower of measure `m_e`.
    pub(crate) fn share_raw(&self, m_j: f64, m_e: f64, count: usize, sum_m: f64) -> f64 {
        match &self.cost {
            CostModel::Proportional => m_j / (m_e + sum_m),
            CostModel::Table { shares } => shares[count],
        }
    }
}

/// Ordered distance key: exact on the line, total-order float for matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum DistKey {
    Exact(Ratio<i64>),
    Approx(OrdF64),
}

/// f64 wrapper ordered by total_cmp; inputs are finite by validation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct OrdF64(pub f64);

impl PartialEq for OrdF64 {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == std::cmp::Ordering::Equal
    }
}

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn matrix_index(locations: &[Location], x: Location) -> Result<usize> {
    locations
        .iter()
        .position(|&l| l == x)
        .ok_or_else(|| Error::Config(format!("location {x} not covered by the distance matrix")))
}

/// Distance between two positions under the world's distance model.
pub fn distance(w: &World, from: Location, to: Location) -> Result<f64> {
    match &w.distance {
        DistanceModel::Line => {
            let d = from.ratio() - to.ratio();
            Ok(ratio_f64(d).abs())
        }
        DistanceModel::Matrix { locations, d } => {
            Ok(d[matrix_index(locations, from)?][matrix_index(locations, to)?])
        }
    }
}

/// Distance as an exactly ordered key for deterministic tie-breaking.
pub(crate) fn dist_key(w: &World, from: Location, to: Location) -> Result<DistKey> {
    match &w.distance {
        DistanceModel::Line => {
            let d = from.ratio() - to.ratio();
            Ok(DistKey::Exact(if d < Ratio::new(0, 1) { -d } else { d }))
        }
        DistanceModel::Matrix { .. } => Ok(DistKey::Approx(OrdF64(distance(w, from, to)?))),
    }
}

/// Cost share of member `j` (a small member or the superpower `e` itself) when
/// `e`'s club holds exactly the small countries in `members`.
pub fn cost_share(w: &World, j: PlayerId, e: PlayerId, members: &BTreeSet<u32>) -> Result<f64> {
    let e_rec = match e {
        PlayerId::SuperA => w.super_a(),
        PlayerId::SuperB => w.super_b(),
        PlayerId::Small(_) => return Err(Error::Internal("cost share host must be a superpower".into())),
    };
    let m_j = match j {
        PlayerId::Small(i) => {
            if !members.contains(&i) {
                return Err(Error::Internal(format!("cost share queried for non-member {i}")));
            }
            w.small(i)?.measure
        }
        _ => {
            if j != e {
                return Err(Error::Internal("cost share host mismatch".into()));
            }
            e_rec.measure
        }
    };
    let mut sum_m = 0.0;
    for &i in members {
        sum_m += w.small(i)?.measure;
    }
    Ok(w.share_raw(m_j, e_rec.measure, members.len(), sum_m))
}

/// Stage-one utility of small country `i`: benefit minus cost share if it chose
/// A, zero otherwise. The assignment must not contain B.
pub fn small_utility_stage1(w: &World, ell_a: Location, c: &Assignment, i: u32) -> Result<f64> {
    if c.choices.values().any(|&ch| ch == Choice::B) {
        return Err(Error::Internal("stage-one assignment contains a B choice".into()));
    }
    match c.choice(i) {
        Choice::A => {
            let rec = w.small(i)?;
            let benefit = rec.dep_a * (1.0 - distance(w, rec.location, ell_a)?);
            let share = cost_share(w, PlayerId::Small(i), PlayerId::SuperA, &c.a_set())?;
            Ok(benefit - share)
        }
        Choice::Out => Ok(0.0),
        Choice::B => unreachable!(),
    }
}

/// Stage-two utility of small country `i` against whichever club it chose.
pub fn small_utility_stage2(
    w: &World,
    ell_a: Location,
    ell_b: Option<Location>,
    c: &Assignment,
    i: u32,
) -> Result<f64> {
    match c.choice(i) {
        Choice::Out => Ok(0.0),
        Choice::A => {
            let rec = w.small(i)?;
            let benefit = rec.dep_a * (1.0 - distance(w, rec.location, ell_a)?);
            let share = cost_share(w, PlayerId::Small(i), PlayerId::SuperA, &c.a_set())?;
            Ok(benefit - share)
        }
        Choice::B => {
            let ell_b = ell_b
                .ok_or_else(|| Error::Internal("B choice present but b formed no club".into()))?;
            let rec = w.small(i)?;
            let benefit = rec.dep_b * (1.0 - distance(w, rec.location, ell_b)?);
            let share = cost_share(w, PlayerId::Small(i), PlayerId::SuperB, &c.b_set())?;
            Ok(benefit - share)
        }
    }
}

/// Superpower utility: own benefit minus own cost share when a club stands at
/// `ell` with small members `members`; zero when no club is formed.
pub fn hegemon_utility(
    w: &World,
    e: PlayerId,
    ell: Option<Location>,
    members: &BTreeSet<u32>,
) -> Result<f64> {
    if !matches!(e, PlayerId::SuperA | PlayerId::SuperB) {
        return Err(Error::Internal("hegemon utility queried for a small country".into()));
    }
    let Some(ell) = ell else { return Ok(0.0) };
    let home = w.home(e)?;
    let share = cost_share(w, e, e, members)?;
    Ok(1.0 - distance(w, home, ell)? - share)
}
