//! Stage-one club formation and stage-two club shifting as deterministic fixed
//! points; maximal steps realize the order-independent coalition sequences.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{
    distance, is_neg, is_nonneg, strictly_gt, Assignment, Choice, Location, PlayerId, World,
};
use crate::{Error, Result};

/// Which superpower's club a computation concerns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Superpower A's club.
    A,
    /// Superpower B's club.
    B,
}

/// Per-country payoff change recorded in a trace step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    /// Small country index.
    pub id: u32,
    /// Utility against the clubs standing before the step.
    pub before: f64,
    /// Utility against the clubs standing after the step.
    pub after: f64,
}

/// One stage-one join step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JoinStep {
    /// Countries entering A's club this step.
    pub joined: Vec<StepEntry>,
}

/// One stage-two macro step: a joint shift into B, then the leak cascade out of A.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftStep {
    /// Countries moving into B's club this step.
    pub shifted: Vec<StepEntry>,
    /// Countries leaving A's club in the follow-up cascade.
    pub left: Vec<StepEntry>,
}

/// Stage-one outcome: A's maximum sphere of influence at `ell_a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageOneOutcome {
    /// A's club-good location.
    pub ell_a: Location,
    /// Small countries joining A's club.
    pub i_star: BTreeSet<u32>,
    /// Join steps that build the club (one maximal step when non-empty).
    pub trace: Vec<JoinStep>,
}

/// Stage-two outcome: final clubs after shifting toward B and leaking out of A.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTwoOutcome {
    /// A's club-good location; None when A formed no club.
    pub ell_a: Option<Location>,
    /// B's club-good location; None when B formed no club.
    pub ell_b: Option<Location>,
    /// Small countries ending in A's club.
    pub club_a: BTreeSet<u32>,
    /// Small countries ending in B's club.
    pub club_b: BTreeSet<u32>,
    /// Macro steps in order.
    pub trace: Vec<ShiftStep>,
}

fn require_on_grid(w: &World, ell: Location) -> Result<()> {
    if w.grid.contains(&ell) {
        Ok(())
    } else {
        Err(Error::Config(format!("location {ell} is not on the action grid")))
    }
}

/// Small-country benefit toward `side`'s club good at `ell`, indexed by id - 1.
fn benefits(w: &World, side: Side, ell: Location) -> Result<Vec<f64>> {
    w.smalls()
        .iter()
        .map(|c| {
            let dep = match side {
                Side::A => c.dep_a,
                Side::B => c.dep_b,
            };
            Ok(dep * (1.0 - distance(w, c.location, ell)?))
        })
        .collect()
}

fn small_measures(w: &World) -> Vec<f64> {
    w.smalls().iter().map(|c| c.measure).collect()
}

fn super_measure(w: &World, side: Side) -> f64 {
    match side {
        Side::A => w.super_a().measure,
        Side::B => w.super_b().measure,
    }
}

/// Member utility of `i` when `side`'s club holds exactly `club`.
fn member_utility(
    w: &World,
    side: Side,
    ben: &[f64],
    measures: &[f64],
    club: &BTreeSet<u32>,
    i: u32,
) -> f64 {
    let sum: f64 = club.iter().map(|&j| measures[(j - 1) as usize]).sum();
    let m_i = measures[(i - 1) as usize];
    ben[(i - 1) as usize] - w.share_raw(m_i, super_measure(w, side), club.len(), sum)
}

/// Deletes members with negative utility against the shrinking set until stable;
/// union-closure of the participation condition makes the result the unique
/// maximal self-supporting subset of `start`.
fn deletion_fixed_point(
    w: &World,
    side: Side,
    ben: &[f64],
    measures: &[f64],
    mut cur: BTreeSet<u32>,
) -> BTreeSet<u32> {
    loop {
        if cur.is_empty() {
            return cur;
        }
        let sum: f64 = cur.iter().map(|&j| measures[(j - 1) as usize]).sum();
        let count = cur.len();
        let drop: Vec<u32> = cur
            .iter()
            .copied()
            .filter(|&j| {
                let m_j = measures[(j - 1) as usize];
                is_neg(ben[(j - 1) as usize] - w.share_raw(m_j, super_measure(w, side), count, sum))
            })
            .collect();
        if drop.is_empty() {
            return cur;
        }
        for j in drop {
            cur.remove(&j);
        }
    }
}

/// One-sided formation fixed point used for A in stage one and for B when A
/// stands aside; returns the club and its single-step trace.
pub(crate) fn form_side(
    w: &World,
    side: Side,
    ell: Location,
) -> Result<(BTreeSet<u32>, Vec<JoinStep>)> {
    let ben = benefits(w, side, ell)?;
    let measures = small_measures(w);
    let start: BTreeSet<u32> = w.small_ids().into_iter().collect();
    let club = deletion_fixed_point(w, side, &ben, &measures, start);
    let trace = if club.is_empty() {
        vec![]
    } else {
        let joined = club
            .iter()
            .map(|&i| StepEntry {
                id: i,
                before: 0.0,
                after: member_utility(w, side, &ben, &measures, &club, i),
            })
            .collect();
        vec![JoinStep { joined }]
    };
    Ok((club, trace))
}

/// Stage-one outcome at `ell_a`: the unique maximal set whose members all keep
/// non-negative utility against the full set, found by iterated deletion.
/// Members at exactly zero are retained.
pub fn form_club(w: &World, ell_a: Location) -> Result<StageOneOutcome> {
    require_on_grid(w, ell_a)?;
    let (i_star, trace) = form_side(w, Side::A, ell_a)?;
    Ok(StageOneOutcome { ell_a, i_star, trace })
}

/// Maximal set of countries that may jointly enter B's club right now: current
/// A-members need a strict gain over staying, everyone else weak admissibility.
fn maximal_shift(
    w: &World,
    ben_a: &[f64],
    ben_b: &[f64],
    measures: &[f64],
    club_a: &BTreeSet<u32>,
    club_b: &BTreeSet<u32>,
    all: &[u32],
) -> BTreeSet<u32> {
    let mut s: BTreeSet<u32> = all.iter().copied().filter(|i| !club_b.contains(i)).collect();
    loop {
        let cand: BTreeSet<u32> = club_b.union(&s).copied().collect();
        let drop: Vec<u32> = s
            .iter()
            .copied()
            .filter(|&i| {
                let u_b = member_utility(w, Side::B, ben_b, measures, &cand, i);
                if club_a.contains(&i) {
                    let u_a = member_utility(w, Side::A, ben_a, measures, club_a, i);
                    !(strictly_gt(u_b, u_a) && is_nonneg(u_b))
                } else {
                    !is_nonneg(u_b)
                }
            })
            .collect();
        if drop.is_empty() {
            return s;
        }
        for i in drop {
            s.remove(&i);
        }
    }
}

/// Removes A-members left with negative utility, cascading until stable.
fn leak(
    w: &World,
    ben_a: &[f64],
    measures: &[f64],
    club_a: &mut BTreeSet<u32>,
    left: &mut Vec<StepEntry>,
) {
    loop {
        let negs: Vec<(u32, f64)> = club_a
            .iter()
            .copied()
            .map(|i| (i, member_utility(w, Side::A, ben_a, measures, club_a, i)))
            .filter(|&(_, u)| is_neg(u))
            .collect();
        if negs.is_empty() {
            return;
        }
        for (i, u) in negs {
            club_a.remove(&i);
            left.push(StepEntry { id: i, before: u, after: 0.0 });
        }
    }
}

/// Stage-two outcome from the stage-one club when B offers `ell_b`: macro steps
/// of a maximal joint shift into B followed by the leak cascade out of A, until
/// no step changes anything. Countries never move back toward A.
pub fn shift_clubs(
    w: &World,
    s1: &StageOneOutcome,
    ell_b: Option<Location>,
) -> Result<StageTwoOutcome> {
    let Some(lb) = ell_b else {
        return Ok(StageTwoOutcome {
            ell_a: Some(s1.ell_a),
            ell_b: None,
            club_a: s1.i_star.clone(),
            club_b: BTreeSet::new(),
            trace: vec![],
        });
    };
    require_on_grid(w, lb)?;
    let ben_a = benefits(w, Side::A, s1.ell_a)?;
    let ben_b = benefits(w, Side::B, lb)?;
    let measures = small_measures(w);
    let all = w.small_ids();
    let mut club_a = s1.i_star.clone();
    let mut club_b: BTreeSet<u32> = BTreeSet::new();
    let mut trace: Vec<ShiftStep> = vec![];
    loop {
        let s = maximal_shift(w, &ben_a, &ben_b, &measures, &club_a, &club_b, &all);
        if s.is_empty() {
            break;
        }
        let new_b: BTreeSet<u32> = club_b.union(&s).copied().collect();
        let shifted: Vec<StepEntry> = s
            .iter()
            .map(|&i| StepEntry {
                id: i,
                before: if club_a.contains(&i) {
                    member_utility(w, Side::A, &ben_a, &measures, &club_a, i)
                } else {
                    0.0
                },
                after: member_utility(w, Side::B, &ben_b, &measures, &new_b, i),
            })
            .collect();
        club_b = new_b;
        for i in &s {
            club_a.remove(i);
        }
        let mut left = vec![];
        leak(w, &ben_a, &measures, &mut club_a, &mut left);
        trace.push(ShiftStep { shifted, left });
    }
    Ok(StageTwoOutcome { ell_a: Some(s1.ell_a), ell_b: Some(lb), club_a, club_b, trace })
}

/// True when no coalition of small countries can jointly change its stage-one
/// choices and leave every changing member strictly better off. Exhaustive over
/// alternative assignments; instances above `bound` smalls are rejected.
pub fn verify_core_stage1(w: &World, ell_a: Location, c: &Assignment, bound: usize) -> Result<bool> {
    require_on_grid(w, ell_a)?;
    let ids = w.small_ids();
    if ids.len() > bound {
        return Err(Error::OracleBound(format!(
            "{} small countries exceed the stage-one bound {bound}",
            ids.len()
        )));
    }
    if c.choices.keys().copied().collect::<Vec<u32>>() != ids {
        return Err(Error::Config("assignment domain must be the small-country set".into()));
    }
    if c.choices.values().any(|&ch| ch == Choice::B) {
        return Err(Error::Config("stage-one assignment contains a B choice".into()));
    }
    let base: Vec<f64> = ids
        .iter()
        .map(|&i| crate::model::small_utility_stage1(w, ell_a, c, i))
        .collect::<Result<_>>()?;
    for mask in 0..(1u64 << ids.len()) {
        let club: BTreeSet<u32> =
            ids.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &i)| i).collect();
        let alt = Assignment::stage1(&ids, &club);
        let mut changed_any = false;
        let mut all_gain = true;
        for (k, &i) in ids.iter().enumerate() {
            if alt.choice(i) == c.choice(i) {
                continue;
            }
            changed_any = true;
            let u = crate::model::small_utility_stage1(w, ell_a, &alt, i)?;
            if !strictly_gt(u, base[k]) {
                all_gain = false;
                break;
            }
        }
        if changed_any && all_gain {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Superpower `side`'s payoff for a standing club, for use on coalition outputs.
pub fn club_payoff(w: &World, side: Side, ell: Option<Location>, members: &BTreeSet<u32>) -> Result<f64> {
    let e = match side {
        Side::A => PlayerId::SuperA,
        Side::B => PlayerId::SuperB,
    };
    crate::model::hegemon_utility(w, e, ell, members)
}
