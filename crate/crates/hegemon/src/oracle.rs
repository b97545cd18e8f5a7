//! Brute-force ground truth on small worlds: exhaustive core enumeration,
//! lattice and selection checks, and randomized-schedule fuzzing of the
//! coalition processes.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coalition::{form_club, shift_clubs, verify_core_stage1};
use crate::model::{
    is_neg, is_nonneg, near_zero, small_utility_stage1, small_utility_stage2, strictly_gt,
    Assignment, Choice, CostModel, Country, DistanceModel, Location, PlayerId, World,
};
use crate::{exec, Error, Result};

/// Largest small-country count enumerated over {A, None}.
pub const STAGE_ONE_BOUND: usize = 12;
/// Largest small-country count enumerated over {A, B, None}.
pub const STAGE_TWO_BOUND: usize = 9;

/// Which membership alphabet a core enumeration ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    /// Join A or stay out.
    One,
    /// Join A, join B, or stay out.
    Two,
}

/// Exhaustive core of one stage plus its structural verdicts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoreSet {
    /// Stage the enumeration ran for.
    pub stage: Stage,
    /// Unblocked assignments in lexicographic choice order.
    pub outcomes: Vec<Assignment>,
    /// Closed under member-wise meet (A-intersection, B-union) and join.
    pub lattice_closed: bool,
    /// Some club member sits at exactly zero utility; lattice check is relaxed.
    pub degenerate: bool,
}

fn utilities_for(
    w: &World,
    ell_a: Location,
    ell_b: Option<Location>,
    stage: Stage,
    ids: &[u32],
    c: &Assignment,
) -> Result<Vec<f64>> {
    ids.iter()
        .map(|&i| match stage {
            Stage::One => small_utility_stage1(w, ell_a, c, i),
            Stage::Two => small_utility_stage2(w, ell_a, ell_b, c, i),
        })
        .collect()
}

/// Enumerates every unblocked assignment by exhaustive blocking-coalition
/// search: a candidate is blocked when some other assignment makes every
/// country that changed its choice strictly better off.
pub fn enumerate_core(
    w: &World,
    ell_a: Location,
    ell_b: Option<Location>,
    stage: Stage,
) -> Result<CoreSet> {
    if !w.grid.contains(&ell_a) {
        return Err(Error::Config(format!("location {ell_a} is not on the offer grid")));
    }
    match (stage, ell_b) {
        (Stage::One, Some(_)) => {
            return Err(Error::Config("stage one admits no B club".into()));
        }
        (Stage::Two, Some(lb)) if !w.grid.contains(&lb) => {
            return Err(Error::Config(format!("location {lb} is not on the offer grid")));
        }
        _ => {}
    }
    let ids = w.small_ids();
    let n = ids.len();
    let bound = match stage {
        Stage::One => STAGE_ONE_BOUND,
        Stage::Two => STAGE_TWO_BOUND,
    };
    if n > bound {
        return Err(Error::OracleBound(format!("{n} small countries, enumeration caps at {bound}")));
    }
    let alphabet: &[Choice] = match (stage, ell_b) {
        (Stage::One, _) | (Stage::Two, None) => &[Choice::A, Choice::Out],
        (Stage::Two, Some(_)) => &[Choice::A, Choice::B, Choice::Out],
    };
    let base = alphabet.len();
    let total = base.pow(n as u32);
    let digit_vecs: Vec<Vec<u8>> = (0..total)
        .map(|mut x| {
            (0..n)
                .map(|_| {
                    let d = (x % base) as u8;
                    x /= base;
                    d
                })
                .collect()
        })
        .collect();
    let assignments: Vec<Assignment> = digit_vecs
        .iter()
        .map(|dv| {
            let mut a = BTreeSet::new();
            let mut b = BTreeSet::new();
            for (&id, &d) in ids.iter().zip(dv) {
                match alphabet[d as usize] {
                    Choice::A => {
                        a.insert(id);
                    }
                    Choice::B => {
                        b.insert(id);
                    }
                    Choice::Out => {}
                }
            }
            Assignment::stage2(&ids, &a, &b)
        })
        .collect();
    let idxs: Vec<usize> = (0..total).collect();
    let utilities: Vec<Vec<f64>> = exec::map(&idxs, |&i| {
        utilities_for(w, ell_a, ell_b, stage, &ids, &assignments[i])
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let blocked: Vec<bool> = exec::map(&idxs, |&ci| {
        let u = &utilities[ci];
        let dc = &digit_vecs[ci];
        (0..total).any(|cj| {
            if cj == ci {
                return false;
            }
            let u2 = &utilities[cj];
            let d2 = &digit_vecs[cj];
            let mut any_diff = false;
            for j in 0..n {
                if dc[j] != d2[j] {
                    any_diff = true;
                    if !strictly_gt(u2[j], u[j]) {
                        return false;
                    }
                }
            }
            any_diff
        })
    });
    let core_idx: Vec<usize> = idxs.into_iter().filter(|&i| !blocked[i]).collect();
    let outcomes: Vec<Assignment> = core_idx.iter().map(|&i| assignments[i].clone()).collect();
    let degenerate = core_idx.iter().any(|&ci| {
        digit_vecs[ci]
            .iter()
            .zip(&utilities[ci])
            .any(|(&d, &u)| alphabet[d as usize] != Choice::Out && near_zero(u))
    });
    let keys: BTreeSet<(BTreeSet<u32>, BTreeSet<u32>)> =
        outcomes.iter().map(|c| (c.a_set(), c.b_set())).collect();
    let mut lattice_closed = true;
    'pairs: for x in &keys {
        for y in &keys {
            let meet = (&x.0 & &y.0, &x.1 | &y.1);
            let join = (&x.0 | &y.0, &x.1 & &y.1);
            if !keys.contains(&meet) || !keys.contains(&join) {
                lattice_closed = false;
                break 'pairs;
            }
        }
    }
    Ok(CoreSet { stage, outcomes, lattice_closed, degenerate })
}

/// True when `i_star` is the unique maximal core element: it is in the core
/// and every core A-club is one of its subsets.
pub fn is_unique_maximal(core: &CoreSet, i_star: &BTreeSet<u32>) -> bool {
    core.outcomes.iter().all(|c| c.a_set().is_subset(i_star))
        && core.outcomes.iter().any(|c| &c.a_set() == i_star)
}

/// True when the engine's stage-two pick is the undominated core element: no
/// core outcome has a larger A-club, and among those with the same A-club none
/// has a larger B-club.
pub fn selection_holds(core: &CoreSet, club_a: &BTreeSet<u32>, club_b: &BTreeSet<u32>) -> bool {
    let mut contains = false;
    for c in &core.outcomes {
        let (e, f) = (c.a_set(), c.b_set());
        if e.len() > club_a.len() {
            return false;
        }
        if &e == club_a {
            if f.len() > club_b.len() {
                return false;
            }
            if &f == club_b {
                contains = true;
            }
        }
    }
    contains
}

fn pick_nonempty<R: Rng>(pool: &[u32], rng: &mut R) -> Vec<u32> {
    let mut v: Vec<u32> = pool.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    if v.is_empty() {
        v.push(pool[rng.gen_range(0..pool.len())]);
    }
    v
}

fn random_stage_one<R: Rng>(
    w: &World,
    ell_a: Location,
    ids: &[u32],
    rng: &mut R,
) -> Result<BTreeSet<u32>> {
    let mut s: BTreeSet<u32> = ids.iter().copied().collect();
    loop {
        let c = Assignment::stage1(ids, &s);
        let mut neg = vec![];
        for &i in &s {
            if is_neg(small_utility_stage1(w, ell_a, &c, i)?) {
                neg.push(i);
            }
        }
        if neg.is_empty() {
            return Ok(s);
        }
        for i in pick_nonempty(&neg, rng) {
            s.remove(&i);
        }
    }
}

/// Maximal self-consistent subset of `pool` whose members all want to move to
/// B together, given current clubs (e, f).
fn reduce_shift(
    w: &World,
    ell_a: Location,
    ell_b: Location,
    e: &BTreeSet<u32>,
    f: &BTreeSet<u32>,
    ids: &[u32],
    pool: &BTreeSet<u32>,
) -> Result<BTreeSet<u32>> {
    let cur = Assignment::stage2(ids, e, f);
    let mut s = pool.clone();
    loop {
        if s.is_empty() {
            return Ok(s);
        }
        let target_e: BTreeSet<u32> = e - &s;
        let target_f: BTreeSet<u32> = f | &s;
        let cand = Assignment::stage2(ids, &target_e, &target_f);
        let mut drop = vec![];
        for &i in &s {
            let ub = small_utility_stage2(w, ell_a, Some(ell_b), &cand, i)?;
            let keep = if e.contains(&i) {
                let ua = small_utility_stage2(w, ell_a, Some(ell_b), &cur, i)?;
                strictly_gt(ub, ua) && is_nonneg(ub)
            } else {
                is_nonneg(ub)
            };
            if !keep {
                drop.push(i);
            }
        }
        if drop.is_empty() {
            return Ok(s);
        }
        for i in drop {
            s.remove(&i);
        }
    }
}

fn random_terminal<R: Rng>(
    w: &World,
    ell_a: Location,
    ell_b: Option<Location>,
    rng: &mut R,
) -> Result<(BTreeSet<u32>, BTreeSet<u32>)> {
    let ids = w.small_ids();
    let mut e = random_stage_one(w, ell_a, &ids, rng)?;
    let mut f = BTreeSet::new();
    let Some(lb) = ell_b else {
        return Ok((e, f));
    };
    for _ in 0..(4 * ids.len() + 8) {
        let pool: BTreeSet<u32> = ids.iter().copied().filter(|i| !f.contains(i)).collect();
        let max_shift = reduce_shift(w, ell_a, lb, &e, &f, &ids, &pool)?;
        let cur = Assignment::stage2(&ids, &e, &f);
        let mut neg = vec![];
        for &i in e.iter().chain(f.iter()) {
            if is_neg(small_utility_stage2(w, ell_a, ell_b, &cur, i)?) {
                neg.push(i);
            }
        }
        if max_shift.is_empty() && neg.is_empty() {
            return Ok((e, f));
        }
        let do_shift = if max_shift.is_empty() {
            false
        } else if neg.is_empty() {
            true
        } else {
            rng.gen_bool(0.5)
        };
        if do_shift {
            let pool_vec: Vec<u32> = max_shift.iter().copied().collect();
            let mut moved = BTreeSet::new();
            for _ in 0..8 {
                let r: BTreeSet<u32> = pick_nonempty(&pool_vec, rng).into_iter().collect();
                let reduced = reduce_shift(w, ell_a, lb, &e, &f, &ids, &r)?;
                if !reduced.is_empty() {
                    moved = reduced;
                    break;
                }
            }
            if moved.is_empty() {
                moved = max_shift;
            }
            for &i in &moved {
                e.remove(&i);
                f.insert(i);
            }
        } else {
            for i in pick_nonempty(&neg, rng) {
                e.remove(&i);
                f.remove(&i);
            }
        }
    }
    Err(Error::Internal("randomized shift schedule failed to terminate".into()))
}

/// One schedule that ended somewhere other than the engine's clubs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FuzzMismatch {
    /// Trial index for replay.
    pub trial: u32,
    /// Terminal A-club the schedule reached.
    pub club_a: BTreeSet<u32>,
    /// Terminal B-club the schedule reached.
    pub club_b: BTreeSet<u32>,
    /// What went wrong.
    pub note: String,
}

/// Outcome of an order-independence fuzz run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FuzzReport {
    /// Schedules run.
    pub trials: u32,
    /// Master seed; trial t derives its generator from it.
    pub seed: u64,
    /// Engine A-club every schedule must reach.
    pub club_a: BTreeSet<u32>,
    /// Engine B-club every schedule must reach.
    pub club_b: BTreeSet<u32>,
    /// Schedules that ended elsewhere, empty on a clean run.
    pub mismatches: Vec<FuzzMismatch>,
}

const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Runs `trials` random admissible step schedules of both coalition processes
/// and reports every terminal state that differs from the engine's.
pub fn fuzz_order_independence(
    w: &World,
    ell_a: Location,
    ell_b: Option<Location>,
    trials: u32,
    seed: u64,
) -> Result<FuzzReport> {
    let s1 = form_club(w, ell_a)?;
    let s2 = shift_clubs(w, &s1, ell_b)?;
    let tids: Vec<u32> = (0..trials).collect();
    let runs = exec::map(&tids, |&t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(u64::from(t).wrapping_mul(SEED_STRIDE)));
        random_terminal(w, ell_a, ell_b, &mut rng)
    });
    let mut mismatches = vec![];
    for (&t, run) in tids.iter().zip(runs) {
        match run {
            Ok((a, b)) => {
                if a != s2.club_a || b != s2.club_b {
                    mismatches.push(FuzzMismatch {
                        trial: t,
                        club_a: a,
                        club_b: b,
                        note: "terminal clubs differ from the engine's".into(),
                    });
                }
            }
            Err(e) => mismatches.push(FuzzMismatch {
                trial: t,
                club_a: BTreeSet::new(),
                club_b: BTreeSet::new(),
                note: e.to_string(),
            }),
        }
    }
    Ok(FuzzReport {
        trials,
        seed,
        club_a: s2.club_a.clone(),
        club_b: s2.club_b.clone(),
        mismatches,
    })
}

/// Shape of randomly generated worlds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Small countries per instance.
    pub n_small: u32,
    /// Inclusive range of offer-grid sizes.
    pub grid_size: (u32, u32),
    /// Inclusive range of the common location denominator.
    pub denominator: (i64, i64),
    /// Dependency range sampled per country and side.
    pub g_range: (f64, f64),
    /// Measure range sampled per country.
    pub measure_range: (f64, f64),
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_small: 4,
            grid_size: (2, 5),
            denominator: (4, 10),
            g_range: (0.0, 1.0),
            measure_range: (0.5, 2.0),
        }
    }
}

impl GenConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.n_small >= 1
            && self.grid_size.0 >= 1
            && self.grid_size.0 <= self.grid_size.1
            && self.denominator.0 >= 2
            && self.denominator.0 <= self.denominator.1
            && self.g_range.0 >= 0.0
            && self.g_range.0 <= self.g_range.1
            && self.g_range.1 <= 1.0
            && self.measure_range.0 > 0.0
            && self.measure_range.0 <= self.measure_range.1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("bad generator config: {self:?}")))
        }
    }
}

/// Draws a random world: superpowers at the endpoints, smalls at random
/// grid-denominator locations with independent dependencies and measures.
pub fn random_world<R: Rng>(cfg: &GenConfig, rng: &mut R) -> Result<World> {
    cfg.validate()?;
    let d = rng.gen_range(cfg.denominator.0..=cfg.denominator.1);
    let measure = |rng: &mut R| rng.gen_range(cfg.measure_range.0..=cfg.measure_range.1);
    let mut countries = vec![
        Country {
            id: PlayerId::SuperA,
            location: Location::new(0, 1)?,
            measure: measure(rng),
            dep_a: 1.0,
            dep_b: 0.0,
        },
        Country {
            id: PlayerId::SuperB,
            location: Location::new(1, 1)?,
            measure: measure(rng),
            dep_a: 0.0,
            dep_b: 1.0,
        },
    ];
    for i in 1..=cfg.n_small {
        countries.push(Country {
            id: PlayerId::Small(i),
            location: Location::new(rng.gen_range(0..=d), d)?,
            measure: measure(rng),
            dep_a: rng.gen_range(cfg.g_range.0..=cfg.g_range.1),
            dep_b: rng.gen_range(cfg.g_range.0..=cfg.g_range.1),
        });
    }
    let size = rng.gen_range(cfg.grid_size.0..=cfg.grid_size.1).min(d as u32 + 1).max(1);
    let mut ks: Vec<i64> = (0..=d).collect();
    ks.shuffle(rng);
    ks.truncate(size as usize);
    ks.sort_unstable();
    let grid: Vec<Location> = ks.into_iter().map(|k| Location::new(k, d)).collect::<Result<_>>()?;
    World::new(countries, grid, DistanceModel::Line, CostModel::Proportional)
}

/// A full randomized verification campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Random instances to draw.
    pub instances: u32,
    /// Random schedules fuzzed per instance.
    pub schedules: u32,
    /// Master seed.
    pub seed: u64,
    /// Instance shape.
    pub gen: GenConfig,
}

/// Campaign outcome; a clean run has no failures.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignReport {
    /// Instances drawn.
    pub instances: u32,
    /// Schedules fuzzed per instance.
    pub schedules: u32,
    /// Master seed for replay.
    pub seed: u64,
    /// Instances whose cores fit inside the enumeration bounds.
    pub cores_checked: u32,
    /// Everything that went wrong, tagged by instance and seed.
    pub failures: Vec<String>,
}

fn run_instance(cfg: &CampaignConfig, k: u32) -> (bool, Vec<String>) {
    let iseed = cfg.seed.wrapping_add(u64::from(k + 1).wrapping_mul(SEED_STRIDE));
    let tag = format!("instance {k} (seed {iseed})");
    let mut fails = vec![];
    let mut rng = ChaCha8Rng::seed_from_u64(iseed);
    let w = match random_world(&cfg.gen, &mut rng) {
        Ok(w) => w,
        Err(e) => return (false, vec![format!("{tag}: generation failed: {e}")]),
    };
    let ell_a = w.grid[rng.gen_range(0..w.grid.len())];
    let ell_b = if rng.gen_bool(0.25) {
        None
    } else {
        Some(w.grid[rng.gen_range(0..w.grid.len())])
    };
    let (s1, s2) = match form_club(&w, ell_a).and_then(|s1| {
        let s2 = shift_clubs(&w, &s1, ell_b)?;
        Ok((s1, s2))
    }) {
        Ok(v) => v,
        Err(e) => return (false, vec![format!("{tag}: engine failed: {e}")]),
    };
    let n = w.n_small();
    let mut cores = false;
    if n <= STAGE_ONE_BOUND {
        match enumerate_core(&w, ell_a, None, Stage::One) {
            Ok(core) => {
                if !is_unique_maximal(&core, &s1.i_star) {
                    fails.push(format!("{tag}: fixed point is not the maximal core element"));
                }
                if !(core.lattice_closed || core.degenerate) {
                    fails.push(format!("{tag}: stage-one core is not a lattice"));
                }
            }
            Err(e) => fails.push(format!("{tag}: stage-one enumeration failed: {e}")),
        }
        let c = Assignment::stage1(&w.small_ids(), &s1.i_star);
        match verify_core_stage1(&w, ell_a, &c, STAGE_ONE_BOUND) {
            Ok(true) => {}
            Ok(false) => fails.push(format!("{tag}: fixed point is blocked")),
            Err(e) => fails.push(format!("{tag}: stage-one verification failed: {e}")),
        }
    }
    if n <= STAGE_TWO_BOUND {
        match enumerate_core(&w, ell_a, ell_b, Stage::Two) {
            Ok(core) => {
                if !selection_holds(&core, &s2.club_a, &s2.club_b) {
                    fails.push(format!("{tag}: shifted clubs are not the selected core element"));
                }
                if !(core.lattice_closed || core.degenerate) {
                    fails.push(format!("{tag}: stage-two core is not a lattice"));
                }
                cores = true;
            }
            Err(e) => fails.push(format!("{tag}: stage-two enumeration failed: {e}")),
        }
    }
    match fuzz_order_independence(&w, ell_a, ell_b, cfg.schedules, iseed) {
        Ok(report) => {
            for m in report.mismatches {
                fails.push(format!("{tag}: schedule {} diverged: {}", m.trial, m.note));
            }
        }
        Err(e) => fails.push(format!("{tag}: fuzzing failed: {e}")),
    }
    (cores, fails)
}

/// Draws random instances and checks the engine against every oracle: core
/// membership and selection, lattice closure, and schedule independence.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    cfg.gen.validate()?;
    let idxs: Vec<u32> = (0..cfg.instances).collect();
    let per = exec::map(&idxs, |&k| run_instance(cfg, k));
    let mut cores_checked = 0;
    let mut failures = vec![];
    for (cores, fails) in per {
        cores_checked += u32::from(cores);
        failures.extend(fails);
    }
    Ok(CampaignReport {
        instances: cfg.instances,
        schedules: cfg.schedules,
        seed: cfg.seed,
        cores_checked,
        failures,
    })
}
