//! Backward induction over the location grid. Payoff ties break toward the
//! closest location to home, zero payoffs collapse to no club, and residual
//! equal-distance ties break toward the chooser's home side with a warning.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::coalition::{form_club, form_side, shift_clubs, Side, ShiftStep, StageOneOutcome, StageTwoOutcome};
use crate::model::{dist_key, hegemon_utility, strictly_gt, DistKey, Location, PlayerId, World, EPS};
use crate::{exec, Result};

/// One row of the leader's response table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseEntry {
    /// A's candidate location; None is the stand-aside option.
    pub ell_a: Option<Location>,
    /// B's best reply to it.
    pub ell_b: Option<Location>,
    /// A's payoff under the reply.
    pub payoff_a: f64,
    /// B's payoff under the reply.
    pub payoff_b: f64,
    /// A's club size, counting the superpower when its club stands.
    pub size_a: usize,
    /// B's club size, counting the superpower when its club stands.
    pub size_b: usize,
}

/// B's best reply to one leader choice, with the stage outcomes behind it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BestResponse {
    /// B's chosen location, None for no club.
    pub ell_b: Option<Location>,
    /// B's payoff at the choice.
    pub payoff_b: f64,
    /// Stage-one formation for A, when A formed.
    pub stage_one: Option<StageOneOutcome>,
    /// Final stage-two outcome under the reply.
    pub outcome: StageTwoOutcome,
    /// Tie-rule warnings raised while selecting.
    pub warnings: Vec<String>,
}

/// Solved equilibrium with the full response table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpneOutcome {
    /// A's equilibrium location, None for no club.
    pub ell_a: Option<Location>,
    /// B's equilibrium location, None for no club.
    pub ell_b: Option<Location>,
    /// Small countries in A's club.
    pub club_a: BTreeSet<u32>,
    /// Small countries in B's club.
    pub club_b: BTreeSet<u32>,
    /// A's equilibrium payoff.
    pub payoff_a: f64,
    /// B's equilibrium payoff.
    pub payoff_b: f64,
    /// Stage-one formation on the equilibrium path.
    pub formation: Option<StageOneOutcome>,
    /// Stage-two shifting on the equilibrium path.
    pub shifting: Option<StageTwoOutcome>,
    /// B's best reply to every leader candidate, grid order then stand-aside.
    pub response_table: Vec<ResponseEntry>,
    /// Tie-rule warnings along the equilibrium path.
    pub warnings: Vec<String>,
}

struct Scored<T> {
    ell: Location,
    payoff: f64,
    dist: DistKey,
    value: T,
}

/// Index of the winner among formed candidates: highest payoff, then closest
/// to home, then the home-side coordinate rule (larger for B, smaller for A).
fn pick_formed<T>(
    cands: &[Scored<T>],
    prefer_larger: bool,
    warnings: &mut Vec<String>,
    who: &str,
) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, c) in cands.iter().enumerate() {
        let Some(b) = best else {
            best = Some(k);
            continue;
        };
        if strictly_gt(c.payoff, cands[b].payoff) {
            best = Some(k);
            continue;
        }
        if strictly_gt(cands[b].payoff, c.payoff) {
            continue;
        }
        match c.dist.cmp(&cands[b].dist) {
            Ordering::Less => best = Some(k),
            Ordering::Greater => {}
            Ordering::Equal => {
                if c.ell != cands[b].ell {
                    let take = if prefer_larger { c.ell > cands[b].ell } else { c.ell < cands[b].ell };
                    let chosen = if take { c.ell } else { cands[b].ell };
                    warnings.push(format!(
                        "{who}: payoff tie at equal home distance between {} and {}; taking {} by the home-side rule",
                        cands[b].ell, c.ell, chosen
                    ));
                    if take {
                        best = Some(k);
                    }
                }
            }
        }
    }
    best
}

fn join_trace_as_shifts(trace: &[crate::coalition::JoinStep]) -> Vec<ShiftStep> {
    trace.iter().map(|s| ShiftStep { shifted: s.joined.clone(), left: vec![] }).collect()
}

/// B's best reply to `ell_a` (or to A standing aside): evaluates every grid
/// point plus no-club, breaking ties per the location rules; a best payoff
/// indistinguishable from zero collapses to no club.
pub fn follower_best_response(w: &World, ell_a: Option<Location>) -> Result<BestResponse> {
    let mut warnings = vec![];
    let home_b = w.super_b().location;
    match ell_a {
        Some(la) => {
            let s1 = form_club(w, la)?;
            let mut cands: Vec<Scored<StageTwoOutcome>> = Vec::with_capacity(w.grid.len());
            for &lb in &w.grid {
                let out = shift_clubs(w, &s1, Some(lb))?;
                let payoff = hegemon_utility(w, PlayerId::SuperB, Some(lb), &out.club_b)?;
                cands.push(Scored { ell: lb, payoff, dist: dist_key(w, home_b, lb)?, value: out });
            }
            match pick_formed(&cands, true, &mut warnings, "follower") {
                Some(k) if cands[k].payoff > EPS => {
                    let chosen = cands.swap_remove(k);
                    Ok(BestResponse {
                        ell_b: Some(chosen.ell),
                        payoff_b: chosen.payoff,
                        stage_one: Some(s1),
                        outcome: chosen.value,
                        warnings,
                    })
                }
                _ => {
                    let outcome = shift_clubs(w, &s1, None)?;
                    Ok(BestResponse { ell_b: None, payoff_b: 0.0, stage_one: Some(s1), outcome, warnings })
                }
            }
        }
        None => {
            let mut cands = Vec::with_capacity(w.grid.len());
            for &lb in &w.grid {
                let (club, trace) = form_side(w, Side::B, lb)?;
                let payoff = hegemon_utility(w, PlayerId::SuperB, Some(lb), &club)?;
                cands.push(Scored { ell: lb, payoff, dist: dist_key(w, home_b, lb)?, value: (club, trace) });
            }
            match pick_formed(&cands, true, &mut warnings, "follower") {
                Some(k) if cands[k].payoff > EPS => {
                    let chosen = cands.swap_remove(k);
                    let (club, trace) = chosen.value;
                    let outcome = StageTwoOutcome {
                        ell_a: None,
                        ell_b: Some(chosen.ell),
                        club_a: BTreeSet::new(),
                        club_b: club,
                        trace: join_trace_as_shifts(&trace),
                    };
                    Ok(BestResponse {
                        ell_b: Some(chosen.ell),
                        payoff_b: chosen.payoff,
                        stage_one: None,
                        outcome,
                        warnings,
                    })
                }
                _ => Ok(BestResponse {
                    ell_b: None,
                    payoff_b: 0.0,
                    stage_one: None,
                    outcome: StageTwoOutcome {
                        ell_a: None,
                        ell_b: None,
                        club_a: BTreeSet::new(),
                        club_b: BTreeSet::new(),
                        trace: vec![],
                    },
                    warnings,
                }),
            }
        }
    }
}

struct Row {
    entry: ResponseEntry,
    response: BestResponse,
}

fn leader_candidates(w: &World) -> Vec<Option<Location>> {
    w.grid.iter().copied().map(Some).chain(std::iter::once(None)).collect()
}

fn build_row(w: &World, ell_a: Option<Location>) -> Result<Row> {
    let response = follower_best_response(w, ell_a)?;
    let payoff_a = hegemon_utility(w, PlayerId::SuperA, ell_a, &response.outcome.club_a)?;
    let size_a = if ell_a.is_some() { response.outcome.club_a.len() + 1 } else { 0 };
    let size_b = if response.ell_b.is_some() { response.outcome.club_b.len() + 1 } else { 0 };
    let entry = ResponseEntry {
        ell_a,
        ell_b: response.ell_b,
        payoff_a,
        payoff_b: response.payoff_b,
        size_a,
        size_b,
    };
    Ok(Row { entry, response })
}

fn assemble(w: &World, mut rows: Vec<Row>) -> Result<SpneOutcome> {
    let home_a = w.super_a().location;
    let mut warnings = vec![];
    let mut cands: Vec<Scored<usize>> = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        if let Some(la) = row.entry.ell_a {
            cands.push(Scored {
                ell: la,
                payoff: row.entry.payoff_a,
                dist: dist_key(w, home_a, la)?,
                value: k,
            });
        }
    }
    let best = pick_formed(&cands, false, &mut warnings, "leader");
    let chosen_idx = match best {
        Some(k) if cands[k].payoff > EPS => cands[k].value,
        _ => rows.len() - 1,
    };
    let table: Vec<ResponseEntry> = rows.iter().map(|r| r.entry.clone()).collect();
    let chosen = rows.swap_remove(chosen_idx);
    warnings.extend(chosen.response.warnings.iter().cloned());
    let shifting = if chosen.entry.ell_a.is_some() || chosen.entry.ell_b.is_some() {
        Some(chosen.response.outcome.clone())
    } else {
        None
    };
    Ok(SpneOutcome {
        ell_a: chosen.entry.ell_a,
        ell_b: chosen.entry.ell_b,
        club_a: chosen.response.outcome.club_a.clone(),
        club_b: chosen.response.outcome.club_b.clone(),
        payoff_a: chosen.entry.payoff_a,
        payoff_b: chosen.entry.payoff_b,
        formation: chosen.response.stage_one,
        shifting,
        response_table: table,
        warnings,
    })
}

/// Unique subgame perfect equilibrium: A picks the grid point (or stand-aside)
/// maximizing its payoff against B's best reply, under the tie rules.
pub fn solve_spne(w: &World) -> Result<SpneOutcome> {
    let opts = leader_candidates(w);
    let rows: Vec<Result<Row>> = exec::map(&opts, |&ell_a| build_row(w, ell_a));
    let rows: Vec<Row> = rows.into_iter().collect::<Result<_>>()?;
    assemble(w, rows)
}

/// A's optimum if B never responds: the counterfactual used by deterrence
/// comparisons and by the `--no-follower` flag.
pub fn solve_leader_alone(w: &World) -> Result<SpneOutcome> {
    let opts = leader_candidates(w);
    let rows: Vec<Result<Row>> = exec::map(&opts, |&ell_a| -> Result<Row> {
        match ell_a {
            Some(la) => {
                let s1 = form_club(w, la)?;
                let payoff_a = hegemon_utility(w, PlayerId::SuperA, Some(la), &s1.i_star)?;
                let outcome = shift_clubs(w, &s1, None)?;
                let size_a = s1.i_star.len() + 1;
                Ok(Row {
                    entry: ResponseEntry {
                        ell_a,
                        ell_b: None,
                        payoff_a,
                        payoff_b: 0.0,
                        size_a,
                        size_b: 0,
                    },
                    response: BestResponse {
                        ell_b: None,
                        payoff_b: 0.0,
                        stage_one: Some(s1),
                        outcome,
                        warnings: vec![],
                    },
                })
            }
            None => Ok(Row {
                entry: ResponseEntry {
                    ell_a: None,
                    ell_b: None,
                    payoff_a: 0.0,
                    payoff_b: 0.0,
                    size_a: 0,
                    size_b: 0,
                },
                response: BestResponse {
                    ell_b: None,
                    payoff_b: 0.0,
                    stage_one: None,
                    outcome: StageTwoOutcome {
                        ell_a: None,
                        ell_b: None,
                        club_a: BTreeSet::new(),
                        club_b: BTreeSet::new(),
                        trace: vec![],
                    },
                    warnings: vec![],
                },
            }),
        }
    });
    let rows: Vec<Row> = rows.into_iter().collect::<Result<_>>()?;
    assemble(w, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostModel, Country, DistanceModel};

    fn loc(n: i64, d: i64) -> Location {
        Location::new(n, d).unwrap()
    }

    fn world3() -> World {
        let small = |i: u32, num: i64, den: i64| Country {
            id: PlayerId::Small(i),
            location: loc(num, den),
            measure: 1.0,
            dep_a: 0.5,
            dep_b: 0.5,
        };
        World::new(
            vec![
                Country { id: PlayerId::SuperA, location: loc(0, 1), measure: 1.0, dep_a: 1.0, dep_b: 0.0 },
                Country { id: PlayerId::SuperB, location: loc(1, 1), measure: 1.0, dep_a: 0.0, dep_b: 1.0 },
                small(1, 1, 4),
                small(2, 1, 2),
                small(3, 3, 4),
            ],
            vec![loc(0, 1), loc(1, 4), loc(1, 2), loc(3, 4), loc(1, 1)],
            DistanceModel::Line,
            CostModel::Proportional,
        )
        .unwrap()
    }

    #[test]
    fn follower_counters_off_center_leader() {
        let br = follower_best_response(&world3(), Some(loc(1, 4))).unwrap();
        assert_eq!(br.ell_b, Some(loc(1, 2)));
        assert_eq!(br.outcome.club_b, [1, 2, 3].into());
        assert!(br.outcome.club_a.is_empty());
    }

    #[test]
    fn follower_gives_up_against_center_leader() {
        let br = follower_best_response(&world3(), Some(loc(1, 2))).unwrap();
        assert_eq!(br.ell_b, None);
        assert_eq!(br.payoff_b, 0.0);
        assert_eq!(br.outcome.club_a, [1, 2, 3].into());
    }

    #[test]
    fn follower_never_forms_without_dependency() {
        let mut w = world3();
        for c in &mut w.countries {
            if matches!(c.id, PlayerId::Small(_)) {
                c.dep_b = 0.0;
            }
        }
        for &la in &w.grid.clone() {
            let br = follower_best_response(&w, Some(la)).unwrap();
            assert_eq!(br.ell_b, None, "ell_a = {la}");
        }
    }

    #[test]
    fn equilibrium_of_the_three_country_world() {
        let out = solve_spne(&world3()).unwrap();
        assert_eq!(out.ell_a, Some(loc(1, 2)));
        assert_eq!(out.ell_b, None);
        assert_eq!(out.club_a, [1, 2, 3].into());
        assert!(out.club_b.is_empty());
        assert_eq!(out.payoff_a, 0.25);
        assert_eq!(out.payoff_b, 0.0);
        let row = out
            .response_table
            .iter()
            .find(|r| r.ell_a == Some(loc(1, 4)))
            .unwrap();
        assert_eq!(row.ell_b, Some(loc(1, 2)));
        assert_eq!(row.size_b, 4);
        assert_eq!(row.size_a, 1);
    }

    #[test]
    fn zero_dependency_world_has_no_clubs() {
        let mut w = world3();
        for c in &mut w.countries {
            if matches!(c.id, PlayerId::Small(_)) {
                c.dep_a = 0.0;
                c.dep_b = 0.0;
            }
        }
        let out = solve_spne(&w).unwrap();
        assert_eq!(out.ell_a, None);
        assert_eq!(out.ell_b, None);
        assert_eq!(out.payoff_a, 0.0);
    }

    #[test]
    fn leader_alone_moves_nearer_home() {
        let w = world3();
        let with_b = solve_spne(&w).unwrap();
        let alone = solve_leader_alone(&w).unwrap();
        assert_eq!(alone.ell_a, Some(loc(1, 4)));
        assert_eq!(alone.payoff_a, 0.5);
        assert_eq!(alone.ell_b, None);
        assert_eq!(with_b.ell_a, Some(loc(1, 2)));
    }

    #[test]
    fn residual_distance_tie_warns_and_takes_home_side() {
        let w = World::new(
            vec![
                Country { id: PlayerId::SuperA, location: loc(0, 1), measure: 1.0, dep_a: 1.0, dep_b: 0.0 },
                Country { id: PlayerId::SuperB, location: loc(1, 2), measure: 1.0, dep_a: 0.0, dep_b: 1.0 },
                Country { id: PlayerId::Small(1), location: loc(1, 2), measure: 1.0, dep_a: 0.0, dep_b: 0.8 },
            ],
            vec![loc(1, 4), loc(3, 4)],
            DistanceModel::Line,
            CostModel::Proportional,
        )
        .unwrap();
        let out = solve_spne(&w).unwrap();
        assert_eq!(out.ell_a, None);
        assert_eq!(out.ell_b, Some(loc(3, 4)));
        assert_eq!(out.club_b, [1].into());
        assert!(out.warnings.iter().any(|m| m.contains("home-side rule")));
    }
}
