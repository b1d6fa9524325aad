//! Builders for the bundled example games: rock-paper-scissors, the
//! medium-access game, the three counterexample games whose value
//! iterations oscillate, a one-shot three-player stag hunt, and the
//! robot-coordination grid.

use crate::game::{build_csg, Csg, GameError};
use crate::lang::model::{ModelSpec, PlayerDecl, RewardDecl, RewardTarget, StateDecl, TransDecl};
use crate::lang::Pos;

fn player(name: &str, actions: &[&str]) -> PlayerDecl {
    PlayerDecl {
        name: name.into(),
        actions: actions.iter().map(|a| a.to_string()).collect(),
        pos: Pos::default(),
    }
}

fn state(id: usize, init: bool, labels: &[&str]) -> StateDecl {
    StateDecl {
        id,
        init,
        labels: labels.iter().map(|l| l.to_string()).collect(),
        pos: Pos::default(),
    }
}

fn trans(state: usize, action: &[Option<&str>], branches: &[(f64, usize)]) -> TransDecl {
    TransDecl {
        state,
        action: action.iter().map(|a| a.map(str::to_string)).collect(),
        branches: branches.to_vec(),
        pos: Pos::default(),
    }
}

fn act_reward(name: &str, state: usize, action: &[Option<&str>], value: f64) -> RewardDecl {
    RewardDecl {
        name: name.into(),
        target: RewardTarget::Action {
            state,
            action: action.iter().map(|a| a.map(str::to_string)).collect(),
        },
        value,
        pos: Pos::default(),
    }
}

/// The rock-paper-scissors game: both players repeatedly play a round
/// from the initial state; win/lose/draw states return to it.
pub fn rps_spec() -> ModelSpec {
    let a = Some;
    ModelSpec {
        players: vec![
            player("p1", &["r1", "p1a", "s1", "t1"]),
            player("p2", &["r2", "p2a", "s2", "t2"]),
        ],
        states: vec![
            state(0, true, &[]),
            state(1, false, &["win1"]),
            state(2, false, &["win2"]),
            state(3, false, &["draw"]),
        ],
        transitions: vec![
            trans(0, &[a("r1"), a("r2")], &[(1.0, 3)]),
            trans(0, &[a("p1a"), a("p2a")], &[(1.0, 3)]),
            trans(0, &[a("s1"), a("s2")], &[(1.0, 3)]),
            trans(0, &[a("r1"), a("s2")], &[(1.0, 1)]),
            trans(0, &[a("p1a"), a("r2")], &[(1.0, 1)]),
            trans(0, &[a("s1"), a("p2a")], &[(1.0, 1)]),
            trans(0, &[a("s1"), a("r2")], &[(1.0, 2)]),
            trans(0, &[a("p1a"), a("s2")], &[(1.0, 2)]),
            trans(0, &[a("r1"), a("p2a")], &[(1.0, 2)]),
            trans(1, &[a("t1"), a("t2")], &[(1.0, 0)]),
            trans(2, &[a("t1"), a("t2")], &[(1.0, 0)]),
            trans(3, &[a("t1"), a("t2")], &[(1.0, 0)]),
        ],
        rewards: vec![],
    }
}

pub fn rps() -> Result<Csg, GameError> {
    build_csg(&rps_spec())
}

/// The medium-access game: two users share a channel; simultaneous
/// transmissions succeed with probability `q`, lone transmissions always
/// succeed, and each user has energy for a single transmission. `tr_i`
/// labels states where user i has transmitted; `fst_i` labels states
/// where user i was among the first to transmit.
pub fn medium_access_spec(q: f64) -> ModelSpec {
    let a = Some;
    ModelSpec {
        players: vec![player("u1", &["t1", "w1"]), player("u2", &["t2", "w2"])],
        states: vec![
            state(0, true, &[]),
            state(1, false, &["tr1", "tr2", "fst1", "fst2"]),
            state(2, false, &[]),
            state(3, false, &["tr1", "fst1"]),
            state(4, false, &["tr2", "fst2"]),
            state(5, false, &["tr1", "tr2"]),
        ],
        transitions: vec![
            trans(0, &[a("t1"), a("t2")], &[(q, 1), (1.0 - q, 2)]),
            trans(0, &[a("t1"), a("w2")], &[(1.0, 3)]),
            trans(0, &[a("w1"), a("t2")], &[(1.0, 4)]),
            trans(0, &[a("w1"), a("w2")], &[(1.0, 0)]),
            trans(1, &[a("w1"), a("w2")], &[(1.0, 1)]),
            trans(2, &[a("w1"), a("w2")], &[(1.0, 2)]),
            trans(3, &[a("w1"), a("t2")], &[(1.0, 5)]),
            trans(3, &[a("w1"), a("w2")], &[(1.0, 3)]),
            trans(4, &[a("t1"), a("w2")], &[(1.0, 5)]),
            trans(4, &[a("w1"), a("w2")], &[(1.0, 4)]),
            trans(5, &[a("w1"), a("w2")], &[(1.0, 5)]),
        ],
        rewards: vec![],
    }
}

pub fn medium_access(q: f64) -> Result<Csg, GameError> {
    build_csg(&medium_access_spec(q))
}

/// Counterexample game for zero-sum expected reachability rewards: the
/// two-state loop carries rewards -1 and +1 so value iteration oscillates
/// when the stopping assumption is violated.
pub fn appendix_b_spec() -> ModelSpec {
    let a = Some;
    ModelSpec {
        players: vec![player("p1", &["a1"]), player("p2", &["a2", "b2"])],
        states: vec![
            state(0, true, &[]),
            state(1, false, &[]),
            state(2, false, &["tgt"]),
        ],
        transitions: vec![
            trans(0, &[a("a1"), a("a2")], &[(1.0, 1)]),
            trans(1, &[a("a1"), a("a2")], &[(1.0, 0)]),
            trans(1, &[a("a1"), a("b2")], &[(1.0, 2)]),
            trans(2, &[None, None], &[(1.0, 2)]),
        ],
        rewards: vec![
            act_reward("r", 0, &[a("a1"), a("a2")], -1.0),
            act_reward("r", 1, &[a("a1"), a("a2")], 1.0),
        ],
    }
}

pub fn appendix_b() -> Result<Csg, GameError> {
    build_csg(&appendix_b_spec())
}

/// Counterexample game for nonzero-sum probabilistic reachability: each
/// player can keep the play inside the {s1, s2} cycle or stop into a
/// lottery over the two targets.
pub fn appendix_c_spec() -> ModelSpec {
    let a = Some;
    ModelSpec {
        players: vec![player("p1", &["c1", "st1"]), player("p2", &["c2", "st2"])],
        states: vec![
            state(0, true, &[]),
            state(1, false, &[]),
            state(2, false, &["a1"]),
            state(3, false, &["a2"]),
        ],
        transitions: vec![
            trans(0, &[a("c1"), None], &[(1.0, 1)]),
            trans(0, &[a("st1"), None], &[(0.25, 2), (0.75, 3)]),
            trans(1, &[None, a("c2")], &[(1.0, 0)]),
            trans(1, &[None, a("st2")], &[(0.75, 2), (0.25, 3)]),
            trans(2, &[None, None], &[(1.0, 2)]),
            trans(3, &[None, None], &[(1.0, 3)]),
        ],
        rewards: vec![],
    }
}

pub fn appendix_c() -> Result<Csg, GameError> {
    build_csg(&appendix_c_spec())
}

/// Counterexample game for nonzero-sum expected reachability rewards.
pub fn appendix_d_spec() -> ModelSpec {
    let a = Some;
    ModelSpec {
        players: vec![player("p1", &["c1", "st1"]), player("p2", &["c2", "st2"])],
        states: vec![
            state(0, true, &[]),
            state(1, false, &[]),
            state(2, false, &["tgt"]),
            state(3, false, &["tgt"]),
        ],
        transitions: vec![
            trans(0, &[a("c1"), None], &[(1.0, 1)]),
            trans(0, &[a("st1"), None], &[(1.0, 2)]),
            trans(1, &[None, a("c2")], &[(1.0, 0)]),
            trans(1, &[None, a("st2")], &[(1.0, 3)]),
            trans(2, &[None, None], &[(1.0, 2)]),
            trans(3, &[None, None], &[(1.0, 3)]),
        ],
        rewards: vec![
            act_reward("r1", 0, &[a("st1"), None], 1.0 / 3.0),
            act_reward("r1", 1, &[None, a("st2")], 2.0),
            act_reward("r2", 0, &[a("st1"), None], 1.0),
            act_reward("r2", 1, &[None, a("st2")], 1.0 / 3.0),
        ],
    }
}

pub fn appendix_d() -> Result<Csg, GameError> {
    build_csg(&appendix_d_spec())
}

/// A one-shot three-player stag hunt whose coalition reduction for
/// {p2, p3} recovers the 2x3 bimatrix utilities (with the half-cooperate
/// column duplicated, as the two mixed joint choices are symmetric).
pub fn three_player_stag_hunt_spec() -> ModelSpec {
    let a = Some;
    let mut transitions = Vec::new();
    let mut rewards = Vec::new();
    for c1 in [false, true] {
        for c2 in [false, true] {
            for c3 in [false, true] {
                let n = |c: bool, yes: &'static str, no: &'static str| if c { yes } else { no };
                let joint = [
                    a(n(c1, "c1", "nc1")),
                    a(n(c2, "c2", "nc2")),
                    a(n(c3, "c3", "nc3")),
                ];
                transitions.push(trans(0, &joint, &[(1.0, 1)]));
                let coop23 = (c2 as u8) + (c3 as u8);
                // Player 1's utility and the {p2,p3} coalition's total.
                let u1 = if !c1 {
                    2.0
                } else {
                    [0.0, 4.0, 6.0][coop23 as usize]
                };
                let u2 = if !c1 {
                    [4.0, 2.0, 0.0][coop23 as usize]
                } else {
                    [4.0, 6.0, 9.0][coop23 as usize]
                };
                rewards.push(act_reward("u1", 0, &joint, u1));
                rewards.push(act_reward("u2", 0, &joint, u2));
            }
        }
    }
    transitions.push(trans(1, &[None, None, None], &[(1.0, 1)]));
    ModelSpec {
        players: vec![
            player("p1", &["nc1", "c1"]),
            player("p2", &["nc2", "c2"]),
            player("p3", &["nc3", "c3"]),
        ],
        states: vec![state(0, true, &[]), state(1, false, &["done"])],
        transitions,
        rewards,
    }
}

pub fn three_player_stag_hunt() -> Result<Csg, GameError> {
    build_csg(&three_player_stag_hunt_spec())
}

/// Robot coordination on an `l x l` grid.
///
/// The encoding follows the prose description of the case study:
///
/// * Robot 1 starts at the south-west corner `(0,0)` and heads for the
///   north-east corner; robot 2 starts north-east and heads south-west.
///   Positions are `(x, y)` with `x` east and `y` north.
/// * In a state where a robot has not reached its goal it picks a move
///   towards its goal — diagonal, horizontal or vertical — restricted to
///   moves that stay on the grid. A robot at its goal idles.
/// * Obstacles deviate a move sideways: a diagonal move succeeds with
///   probability `1-q` and otherwise slides to one of its two component
///   directions (probability `q/2` each); a straight move succeeds with
///   probability `1-q` and otherwise slides to one of the two adjacent
///   diagonals (probability `q/2` each). A deviation that would leave the
///   grid folds back into the intended direction.
/// * Both robots move simultaneously and independently; the joint
///   distribution is the product of the two per-robot outcome lotteries.
/// * `g1`/`g2` label states where the respective robot is at its goal and
///   `c` labels states where the robots share a cell. The `steps` reward
///   structure assigns 1 to every enabled joint action.
pub fn robot_grid_spec(l: usize, q: f64) -> ModelSpec {
    assert!(l >= 2, "grid needs at least two cells per side");
    let cells = l * l;
    let pos = |x: usize, y: usize| y * l + x;
    let goal1 = pos(l - 1, l - 1);
    let goal2 = pos(0, 0);

    // Per-robot moves: action name and the outcome lottery from (x, y).
    // dir encodes the intended displacement.
    let outcomes = |x: i64, y: i64, dx: i64, dy: i64| -> Vec<(usize, f64)> {
        let l = l as i64;
        let clamp = |cx: i64, cy: i64| -> Option<usize> {
            if (0..l).contains(&cx) && (0..l).contains(&cy) {
                Some(pos(cx as usize, cy as usize))
            } else {
                None
            }
        };
        let intended = clamp(x + dx, y + dy).expect("intended move stays on the grid");
        let deviations: [(i64, i64); 2] = if dx != 0 && dy != 0 {
            // Diagonal: the two component directions.
            [(dx, 0), (0, dy)]
        } else if dx == 0 {
            // Vertical: the two adjacent diagonals.
            [(1, dy), (-1, dy)]
        } else {
            // Horizontal.
            [(dx, 1), (dx, -1)]
        };
        let mut acc: Vec<(usize, f64)> = vec![(intended, 1.0 - q)];
        for (ddx, ddy) in deviations {
            let target = clamp(x + ddx, y + ddy).unwrap_or(intended);
            match acc.iter_mut().find(|(t, _)| *t == target) {
                Some((_, p)) => *p += q / 2.0,
                None => acc.push((target, q / 2.0)),
            }
        }
        acc
    };

    // Moves available to a robot at p heading for (gx, gy).
    let moves = |p: usize, gx: i64, gy: i64, suffix: &str| -> Vec<(String, Vec<(usize, f64)>)> {
        let (x, y) = ((p % l) as i64, (p / l) as i64);
        let dx = (gx - x).signum();
        let dy = (gy - y).signum();
        let mut out = Vec::new();
        if dx != 0 && dy != 0 {
            out.push((format!("d{suffix}"), outcomes(x, y, dx, dy)));
        }
        if dx != 0 {
            out.push((format!("h{suffix}"), outcomes(x, y, dx, 0)));
        }
        if dy != 0 {
            out.push((format!("v{suffix}"), outcomes(x, y, 0, dy)));
        }
        out
    };

    let mut states = Vec::with_capacity(cells * cells);
    let mut transitions = Vec::new();
    let mut rewards = Vec::new();
    for p1 in 0..cells {
        for p2 in 0..cells {
            let id = p1 * cells + p2;
            let mut labels: Vec<&str> = Vec::new();
            if p1 == goal1 {
                labels.push("g1");
            }
            if p2 == goal2 {
                labels.push("g2");
            }
            if p1 == p2 {
                labels.push("c");
            }
            states.push(state(id, p1 == goal2 && p2 == goal1, &labels));

            let m1 = moves(p1, (l - 1) as i64, (l - 1) as i64, "1");
            let m2 = moves(p2, 0, 0, "2");
            let opts1: Vec<(Option<String>, Vec<(usize, f64)>)> = if m1.is_empty() {
                vec![(None, vec![(p1, 1.0)])]
            } else {
                m1.into_iter().map(|(n, o)| (Some(n), o)).collect()
            };
            let opts2: Vec<(Option<String>, Vec<(usize, f64)>)> = if m2.is_empty() {
                vec![(None, vec![(p2, 1.0)])]
            } else {
                m2.into_iter().map(|(n, o)| (Some(n), o)).collect()
            };
            for (a1, o1) in &opts1 {
                for (a2, o2) in &opts2 {
                    let mut branches: Vec<(f64, usize)> = Vec::new();
                    for &(t1, q1) in o1 {
                        for &(t2, q2) in o2 {
                            let target = t1 * cells + t2;
                            match branches.iter_mut().find(|(_, t)| *t == target) {
                                Some((p, _)) => *p += q1 * q2,
                                None => branches.push((q1 * q2, target)),
                            }
                        }
                    }
                    let action = [a1.as_deref(), a2.as_deref()];
                    transitions.push(TransDecl {
                        state: id,
                        action: action.iter().map(|a| a.map(str::to_string)).collect(),
                        branches,
                        pos: Pos::default(),
                    });
                    rewards.push(RewardDecl {
                        name: "steps".into(),
                        target: RewardTarget::Action {
                            state: id,
                            action: action.iter().map(|a| a.map(str::to_string)).collect(),
                        },
                        value: 1.0,
                        pos: Pos::default(),
                    });
                }
            }
        }
    }

    ModelSpec {
        players: vec![
            player("rbt1", &["d1", "h1", "v1"]),
            player("rbt2", &["d2", "h2", "v2"]),
        ],
        states,
        transitions,
        rewards,
    }
}

pub fn robot_grid(l: usize, q: f64) -> Result<Csg, GameError> {
    build_csg(&robot_grid_spec(l, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn appendix_models_build() {
        assert_eq!(appendix_b().unwrap().num_states, 3);
        assert_eq!(appendix_c().unwrap().num_states, 4);
        assert_eq!(appendix_d().unwrap().num_states, 4);
    }

    #[test]
    fn robot_grid_reachable_counts_match_reference() {
        // Reachable pairs are all (pos1, pos2) except those where exactly
        // one robot still sits on its own start: l^4 - 2(l^2 - 1).
        for l in [3usize, 4] {
            let g = robot_grid(l, 0.25).unwrap();
            let reachable = g.reachable.iter().filter(|&&r| r).count();
            let expect = l.pow(4) - 2 * (l.pow(2) - 1);
            assert_eq!(reachable, expect, "grid size {l}");
        }
        // The published sizes for this model family: 226 states at l=4.
        let g = robot_grid(4, 0.25).unwrap();
        assert_eq!(g.reachable.iter().filter(|&&r| r).count(), 226);
    }

    #[test]
    fn robot_grid_transition_count_matches_reference() {
        // Transition entries summed over reachable states: 6,610 at l=4.
        let g = robot_grid(4, 0.25).unwrap();
        let count: usize = (0..g.num_states)
            .filter(|&s| g.reachable[s])
            .map(|s| {
                g.transitions[s]
                    .values()
                    .map(|d| d.len())
                    .sum::<usize>()
            })
            .sum();
        assert_eq!(count, 6610);
    }

    #[test]
    fn robot_moves_at_corner_fold_into_intended() {
        let g = robot_grid(3, 0.25).unwrap();
        // Initial state: robot 1 at (0,0), robot 2 at (2,2).
        let init = g.initial[0];
        // v1 from the corner: north with 1 - q/2, north-east with q/2.
        let v1 = g.players[0].actions[2];
        let d2 = g.players[1].actions[0];
        let dist = g.dist(init, &vec![Some(v1), Some(d2)]);
        // Robot 2's diagonal: 1-q south-west, q/2 west, q/2 south.
        // Joint support: 2 x 3 = 6 outcomes.
        assert_eq!(dist.len(), 6);
        let p: f64 = dist.iter().map(|(_, p)| *p).sum();
        assert!((p - 1.0).abs() < 1e-12);
    }
}
