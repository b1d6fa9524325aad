//! In-memory representation of concurrent stochastic games, reward
//! structures, the two-coalition reduction, and induced MDP / Markov-chain
//! views.

use crate::lang::model::{ModelSpec, RewardTarget};
use crate::strategy::{Mode, StrategyProfile};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use thiserror::Error;

pub type StateId = usize;
pub type ActionId = usize;

/// A joint action of the full game: one slot per player, `None` is idle.
pub type JointAction = Vec<Option<ActionId>>;

/// A sparse probability distribution over states.
pub type Dist = Vec<(StateId, f64)>;

#[derive(Debug, Clone)]
pub struct Player {
    pub name: String,
    pub actions: Vec<ActionId>,
}

#[derive(Debug, Clone)]
pub struct ActionInfo {
    pub name: String,
    pub owner: usize,
}

/// A reward structure: action rewards keyed by (state, joint action) and
/// per-state rewards. Values may be negative; missing entries are zero.
#[derive(Debug, Clone, Default)]
pub struct RewardStructure {
    pub state_rewards: Vec<f64>,
    pub action_rewards: BTreeMap<(StateId, JointAction), f64>,
}

impl RewardStructure {
    pub fn action(&self, state: StateId, joint: &JointAction) -> f64 {
        self.action_rewards
            .get(&(state, joint.clone()))
            .copied()
            .unwrap_or(0.0)
    }
}

/// An explicit-state concurrent stochastic game.
#[derive(Debug, Clone)]
pub struct Csg {
    pub players: Vec<Player>,
    pub actions: Vec<ActionInfo>,
    pub num_states: usize,
    pub initial: Vec<StateId>,
    pub labels: Vec<BTreeSet<String>>,
    pub atoms: BTreeSet<String>,
    /// Non-idle actions available in each state.
    pub assignment: Vec<BTreeSet<ActionId>>,
    pub transitions: Vec<BTreeMap<JointAction, Dist>>,
    pub rewards: BTreeMap<String, RewardStructure>,
    pub reachable: Vec<bool>,
}

#[derive(Debug, Error)]
pub enum GameError {
    #[error("distribution sums to {sum} at state {state} under {action}")]
    DistributionSum {
        state: StateId,
        action: String,
        sum: f64,
    },
    #[error("negative branch probability at state {state} under {action}")]
    NegativeProbability { state: StateId, action: String },
    #[error("dangling state index {state}")]
    DanglingState { state: StateId },
    #[error("duplicate action name `{name}`")]
    DuplicateAction { name: String },
    #[error("duplicate transition at state {state} under {action}")]
    DuplicateTransition { state: StateId, action: String },
    #[error("state {state} has no transition for joint action {action}")]
    MissingTransition { state: StateId, action: String },
    #[error("joint action {action} at state {state} idles player `{player}` although actions are available")]
    SpuriousIdle {
        state: StateId,
        action: String,
        player: String,
    },
    #[error("unknown action `{name}`")]
    UnknownAction { name: String },
    #[error("coalition must be a non-empty proper subset of the players")]
    BadCoalition,
    #[error("unknown player `{name}`")]
    UnknownPlayer { name: String },
}

impl Csg {
    /// Available actions of player `i` in `state`: the assigned actions of
    /// that player, or idle when none are assigned.
    pub fn available(&self, state: StateId, player: usize) -> Vec<Option<ActionId>> {
        let own: Vec<Option<ActionId>> = self.players[player]
            .actions
            .iter()
            .filter(|a| self.assignment[state].contains(a))
            .map(|a| Some(*a))
            .collect();
        if own.is_empty() {
            vec![None]
        } else {
            own
        }
    }

    /// All joint actions enabled in `state`, in row-major product order.
    pub fn joint_actions(&self, state: StateId) -> Vec<JointAction> {
        let mut out: Vec<JointAction> = vec![Vec::new()];
        for p in 0..self.players.len() {
            let opts = self.available(state, p);
            let mut next = Vec::with_capacity(out.len() * opts.len());
            for prefix in &out {
                for o in &opts {
                    let mut j = prefix.clone();
                    j.push(*o);
                    next.push(j);
                }
            }
            out = next;
        }
        out
    }

    pub fn dist(&self, state: StateId, joint: &JointAction) -> &Dist {
        self.transitions[state]
            .get(joint)
            .unwrap_or_else(|| panic!("lookup of disabled joint action at state {state}"))
    }

    pub fn joint_name(&self, joint: &JointAction) -> String {
        let parts: Vec<&str> = joint
            .iter()
            .map(|a| a.map_or("-", |id| self.actions[id].name.as_str()))
            .collect();
        format!("({})", parts.join(","))
    }

    pub fn player_index(&self, name: &str) -> Result<usize, GameError> {
        self.players
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| GameError::UnknownPlayer {
                name: name.to_string(),
            })
    }

    pub fn states_with_atom(&self, atom: &str) -> Vec<bool> {
        (0..self.num_states)
            .map(|s| self.labels[s].contains(atom))
            .collect()
    }
}

/// Build and validate a [`Csg`] from a parsed model description.
pub fn build_csg(spec: &ModelSpec) -> Result<Csg, GameError> {
    let mut actions: Vec<ActionInfo> = Vec::new();
    let mut action_ids: HashMap<String, ActionId> = HashMap::new();
    let mut players = Vec::new();
    for (pi, p) in spec.players.iter().enumerate() {
        let mut ids = Vec::new();
        for a in &p.actions {
            if action_ids.contains_key(a) {
                return Err(GameError::DuplicateAction { name: a.clone() });
            }
            let id = actions.len();
            actions.push(ActionInfo {
                name: a.clone(),
                owner: pi,
            });
            action_ids.insert(a.clone(), id);
            ids.push(id);
        }
        players.push(Player {
            name: p.name.clone(),
            actions: ids,
        });
    }

    let num_states = spec.states.len();
    let mut labels = vec![BTreeSet::new(); num_states];
    let mut initial = Vec::new();
    for st in &spec.states {
        if st.id >= num_states {
            return Err(GameError::DanglingState { state: st.id });
        }
        labels[st.id] = st.labels.iter().cloned().collect();
        if st.init {
            initial.push(st.id);
        }
    }
    initial.sort_unstable();
    let atoms: BTreeSet<String> = labels.iter().flatten().cloned().collect();

    let resolve_joint = |names: &[Option<String>]| -> Result<JointAction, GameError> {
        names
            .iter()
            .map(|slot| match slot {
                None => Ok(None),
                Some(n) => action_ids
                    .get(n)
                    .copied()
                    .map(Some)
                    .ok_or_else(|| GameError::UnknownAction { name: n.clone() }),
            })
            .collect()
    };

    // Assignment is derived from the transition relation: an action is
    // available in a state exactly when some transition there uses it.
    let mut assignment: Vec<BTreeSet<ActionId>> = vec![BTreeSet::new(); num_states];
    let mut raw: Vec<(StateId, JointAction, Dist)> = Vec::new();
    for t in &spec.transitions {
        if t.state >= num_states {
            return Err(GameError::DanglingState { state: t.state });
        }
        let joint = resolve_joint(&t.action)?;
        for a in joint.iter().flatten() {
            assignment[t.state].insert(*a);
        }
        let mut dist: Dist = Vec::new();
        for &(p, target) in &t.branches {
            if target >= num_states {
                return Err(GameError::DanglingState { state: target });
            }
            if p < 0.0 {
                return Err(GameError::NegativeProbability {
                    state: t.state,
                    action: fmt_named_joint(&t.action),
                });
            }
            match dist.iter_mut().find(|(s, _)| *s == target) {
                Some((_, q)) => *q += p,
                None => dist.push((target, p)),
            }
        }
        let sum: f64 = dist.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > crate::DIST_TOLERANCE {
            return Err(GameError::DistributionSum {
                state: t.state,
                action: fmt_named_joint(&t.action),
                sum,
            });
        }
        for (_, p) in dist.iter_mut() {
            *p /= sum;
        }
        dist.sort_unstable_by_key(|(s, _)| *s);
        dist.retain(|(_, p)| *p > 0.0);
        raw.push((t.state, joint, dist));
    }

    let mut transitions: Vec<BTreeMap<JointAction, Dist>> = vec![BTreeMap::new(); num_states];
    for (state, joint, dist) in raw {
        let name = || {
            let parts: Vec<&str> = joint
                .iter()
                .map(|a| a.map_or("-", |id| actions[id].name.as_str()))
                .collect();
            format!("({})", parts.join(","))
        };
        if transitions[state].insert(joint.clone(), dist).is_some() {
            return Err(GameError::DuplicateTransition {
                state,
                action: name(),
            });
        }
    }

    let game = Csg {
        players,
        actions,
        num_states,
        initial,
        labels,
        atoms,
        assignment,
        transitions,
        rewards: BTreeMap::new(),
        reachable: vec![false; num_states],
    };

    // The transition relation must be total on the per-state product of
    // available actions, with no idle slots for players that have actions.
    for s in 0..num_states {
        for joint in game.joint_actions(s) {
            if !game.transitions[s].contains_key(&joint) {
                return Err(GameError::MissingTransition {
                    state: s,
                    action: game.joint_name(&joint),
                });
            }
        }
        for joint in game.transitions[s].keys() {
            for (pi, slot) in joint.iter().enumerate() {
                let has_actions = game.players[pi]
                    .actions
                    .iter()
                    .any(|a| game.assignment[s].contains(a));
                match slot {
                    None if has_actions => {
                        return Err(GameError::SpuriousIdle {
                            state: s,
                            action: game.joint_name(joint),
                            player: game.players[pi].name.clone(),
                        })
                    }
                    Some(a) if game.actions[*a].owner != pi => {
                        return Err(GameError::UnknownAction {
                            name: game.actions[*a].name.clone(),
                        })
                    }
                    Some(a) if !game.assignment[s].contains(a) => unreachable!("assignment derived from transitions contains {a}"),
                    _ => {}
                }
            }
        }
    }

    let mut game = game;
    for r in &spec.rewards {
        let entry = game
            .rewards
            .entry(r.name.clone())
            .or_insert_with(|| RewardStructure {
                state_rewards: vec![0.0; num_states],
                action_rewards: BTreeMap::new(),
            });
        match &r.target {
            RewardTarget::State { state } => {
                if *state >= num_states {
                    return Err(GameError::DanglingState { state: *state });
                }
                entry.state_rewards[*state] = r.value;
            }
            RewardTarget::Action { state, action } => {
                if *state >= num_states {
                    return Err(GameError::DanglingState { state: *state });
                }
                let joint = resolve_joint(action)?;
                if !game.transitions[*state].contains_key(&joint) {
                    return Err(GameError::MissingTransition {
                        state: *state,
                        action: game.joint_name(&joint),
                    });
                }
                entry.action_rewards.insert((*state, joint), r.value);
            }
        }
    }

    game.reachable = reachable_states(&game);
    Ok(game)
}

fn fmt_named_joint(names: &[Option<String>]) -> String {
    let parts: Vec<&str> = names
        .iter()
        .map(|a| a.as_deref().unwrap_or("-"))
        .collect();
    format!("({})", parts.join(","))
}

fn reachable_states(g: &Csg) -> Vec<bool> {
    let mut seen = vec![false; g.num_states];
    let mut queue: VecDeque<StateId> = g.initial.iter().copied().collect();
    for &s in &g.initial {
        seen[s] = true;
    }
    while let Some(s) = queue.pop_front() {
        for dist in g.transitions[s].values() {
            for &(t, _) in dist {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    seen
}

// ---------------------------------------------------------------------------
// Coalition games

/// One coalition-level action: the sub-tuple of per-player choices for the
/// players on one side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CAction {
    pub parts: Vec<Option<ActionId>>,
    pub name: String,
}

/// A reward structure lifted onto a coalition game: per-state rewards plus
/// a dense row-major action-reward table per state.
#[derive(Debug, Clone)]
pub struct CoalitionReward {
    pub state: Vec<f64>,
    pub action: Vec<Vec<f64>>,
}

/// The two-player reduction of a CSG for a coalition: rows are the
/// coalition's product actions, columns the complement's. Transition and
/// reward tables are dense and row-major per state, which lets each state
/// yield its matrix or bimatrix game by direct slicing.
#[derive(Debug, Clone)]
pub struct CoalitionGame {
    pub num_states: usize,
    pub initial: Vec<StateId>,
    pub labels: Vec<BTreeSet<String>>,
    pub atoms: BTreeSet<String>,
    /// States included in value-iteration sweeps.
    pub scope: Vec<bool>,
    pub side1_players: Vec<usize>,
    pub side2_players: Vec<usize>,
    pub row_actions: Vec<Vec<CAction>>,
    pub col_actions: Vec<Vec<CAction>>,
    /// `trans[s][r * cols + c]`.
    pub trans: Vec<Vec<Dist>>,
    /// Original joint action per (state, row, col); used for back-mapping.
    pub back_joint: Vec<Vec<JointAction>>,
    pub rewards: BTreeMap<String, CoalitionReward>,
}

impl CoalitionGame {
    pub fn rows(&self, s: StateId) -> usize {
        self.row_actions[s].len()
    }

    pub fn cols(&self, s: StateId) -> usize {
        self.col_actions[s].len()
    }

    pub fn dist(&self, s: StateId, row: usize, col: usize) -> &Dist {
        &self.trans[s][row * self.cols(s) + col]
    }

    pub fn reward(&self, name: &str) -> &CoalitionReward {
        &self.rewards[name]
    }

    /// Swap the two sides; used to canonicalise symmetric cases.
    pub fn transposed(&self) -> CoalitionGame {
        let mut trans = Vec::with_capacity(self.num_states);
        let mut back = Vec::with_capacity(self.num_states);
        for s in 0..self.num_states {
            let (l, m) = (self.rows(s), self.cols(s));
            let mut t = Vec::with_capacity(l * m);
            let mut b = Vec::with_capacity(l * m);
            for c in 0..m {
                for r in 0..l {
                    t.push(self.trans[s][r * m + c].clone());
                    b.push(self.back_joint[s][r * m + c].clone());
                }
            }
            trans.push(t);
            back.push(b);
        }
        let rewards = self
            .rewards
            .iter()
            .map(|(name, rw)| {
                let mut action = Vec::with_capacity(self.num_states);
                for s in 0..self.num_states {
                    let (l, m) = (self.rows(s), self.cols(s));
                    let mut a = Vec::with_capacity(l * m);
                    for c in 0..m {
                        for r in 0..l {
                            a.push(rw.action[s][r * m + c]);
                        }
                    }
                    action.push(a);
                }
                (
                    name.clone(),
                    CoalitionReward {
                        state: rw.state.clone(),
                        action,
                    },
                )
            })
            .collect();
        CoalitionGame {
            num_states: self.num_states,
            initial: self.initial.clone(),
            labels: self.labels.clone(),
            atoms: self.atoms.clone(),
            scope: self.scope.clone(),
            side1_players: self.side2_players.clone(),
            side2_players: self.side1_players.clone(),
            row_actions: self.col_actions.clone(),
            col_actions: self.row_actions.clone(),
            trans,
            back_joint: back,
            rewards,
        }
    }
}

/// Build the coalition game for a non-empty proper subset of players.
pub fn coalition_game(g: &Csg, coalition: &[String]) -> Result<CoalitionGame, GameError> {
    let ids = resolve_coalition(g, coalition)?;
    if ids.is_empty() || ids.len() == g.players.len() {
        return Err(GameError::BadCoalition);
    }
    Ok(split(g, &ids))
}

pub(crate) fn resolve_coalition(g: &Csg, coalition: &[String]) -> Result<Vec<usize>, GameError> {
    let mut ids = Vec::with_capacity(coalition.len());
    for name in coalition {
        ids.push(g.player_index(name)?);
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

/// The coalition reduction itself. Unlike [`coalition_game`] this accepts
/// the full player set: the complement side then has no players and always
/// idles, which is how grand-coalition (cooperative) queries are evaluated.
pub(crate) fn split(g: &Csg, coalition: &[usize]) -> CoalitionGame {
    let side1: Vec<usize> = coalition.to_vec();
    let side2: Vec<usize> = (0..g.players.len())
        .filter(|p| !side1.contains(p))
        .collect();

    let side_actions = |s: StateId, side: &[usize]| -> Vec<CAction> {
        let mut out: Vec<Vec<Option<ActionId>>> = vec![Vec::new()];
        for &p in side {
            let opts = g.available(s, p);
            let mut next = Vec::with_capacity(out.len() * opts.len());
            for prefix in &out {
                for o in &opts {
                    let mut t = prefix.clone();
                    t.push(*o);
                    next.push(t);
                }
            }
            out = next;
        }
        out.into_iter()
            .map(|parts| {
                let name = if parts.iter().all(|p| p.is_none()) {
                    "-".to_string()
                } else {
                    parts
                        .iter()
                        .map(|a| a.map_or("-", |id| g.actions[id].name.as_str()))
                        .collect::<Vec<_>>()
                        .join(".")
                };
                CAction { parts, name }
            })
            .collect()
    };

    let mut row_actions = Vec::with_capacity(g.num_states);
    let mut col_actions = Vec::with_capacity(g.num_states);
    let mut trans = Vec::with_capacity(g.num_states);
    let mut back_joint = Vec::with_capacity(g.num_states);
    for s in 0..g.num_states {
        let rows = side_actions(s, &side1);
        let cols = side_actions(s, &side2);
        let mut t = Vec::with_capacity(rows.len() * cols.len());
        let mut b = Vec::with_capacity(rows.len() * cols.len());
        for r in &rows {
            for c in &cols {
                let mut joint: JointAction = vec![None; g.players.len()];
                for (k, &p) in side1.iter().enumerate() {
                    joint[p] = r.parts[k];
                }
                for (k, &p) in side2.iter().enumerate() {
                    joint[p] = c.parts[k];
                }
                t.push(g.dist(s, &joint).clone());
                b.push(joint);
            }
        }
        row_actions.push(rows);
        col_actions.push(cols);
        trans.push(t);
        back_joint.push(b);
    }

    let rewards = g
        .rewards
        .iter()
        .map(|(name, rw)| {
            let action: Vec<Vec<f64>> = (0..g.num_states)
                .map(|s| {
                    back_joint[s]
                        .iter()
                        .map(|joint| rw.action(s, joint))
                        .collect()
                })
                .collect();
            (
                name.clone(),
                CoalitionReward {
                    state: rw.state_rewards.clone(),
                    action,
                },
            )
        })
        .collect();

    CoalitionGame {
        num_states: g.num_states,
        initial: g.initial.clone(),
        labels: g.labels.clone(),
        atoms: g.atoms.clone(),
        scope: g.reachable.clone(),
        side1_players: side1,
        side2_players: side2,
        row_actions,
        col_actions,
        trans,
        back_joint,
        rewards,
    }
}

// ---------------------------------------------------------------------------
// Induced MDP

/// The one-player view of a coalition game in which both sides
/// collaborate: every enabled joint action pair is a choice.
#[derive(Debug, Clone)]
pub struct InducedMdp<'g> {
    pub game: &'g CoalitionGame,
}

pub fn induced_mdp(g: &CoalitionGame) -> InducedMdp<'_> {
    InducedMdp { game: g }
}

impl<'g> InducedMdp<'g> {
    pub fn num_choices(&self, s: StateId) -> usize {
        self.game.rows(s) * self.game.cols(s)
    }

    /// Row/column pair of a choice index.
    pub fn pair(&self, s: StateId, choice: usize) -> (usize, usize) {
        (choice / self.game.cols(s), choice % self.game.cols(s))
    }
}

impl<'g> crate::mdp::MdpModel for InducedMdp<'g> {
    fn num_states(&self) -> usize {
        self.game.num_states
    }

    fn num_choices(&self, s: usize) -> usize {
        self.game.rows(s) * self.game.cols(s)
    }

    fn dist(&self, s: usize, choice: usize) -> &Dist {
        &self.game.trans[s][choice]
    }

    fn in_scope(&self, s: usize) -> bool {
        self.game.scope[s]
    }
}

// ---------------------------------------------------------------------------
// Induced Markov chain

/// A node of an induced chain: game state, profile memory and, for
/// finite-horizon profiles, the elapsed step (capped at the horizon).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChainNode {
    pub state: StateId,
    pub mode: Mode,
    pub step: u64,
}

/// The finite Markov chain induced by fixing a strategy profile.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    pub nodes: Vec<ChainNode>,
    pub index: HashMap<ChainNode, usize>,
    pub trans: Vec<Vec<(usize, f64)>>,
    pub initial: Vec<usize>,
}

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("profile has no choice for state {state} in mode {mode:?} at step {step}")]
    MissingChoice {
        state: StateId,
        mode: Mode,
        step: u64,
    },
}

/// Build the Markov chain induced by a profile: the successor distribution
/// of each node is the product of the two coalitions' mixed choices
/// weighted by the game's transition function.
pub fn induced_chain(
    g: &CoalitionGame,
    profile: &StrategyProfile,
) -> Result<MarkovChain, ChainError> {
    let horizon = profile.horizon;
    let mut chain = MarkovChain {
        nodes: Vec::new(),
        index: HashMap::new(),
        trans: Vec::new(),
        initial: Vec::new(),
    };
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut intern = |chain: &mut MarkovChain, queue: &mut VecDeque<usize>, node: ChainNode| {
        if let Some(&i) = chain.index.get(&node) {
            return i;
        }
        let i = chain.nodes.len();
        chain.nodes.push(node);
        chain.index.insert(node, i);
        chain.trans.push(Vec::new());
        queue.push_back(i);
        i
    };

    for &s in &g.initial {
        let node = ChainNode {
            state: s,
            mode: profile.entry_mode(Mode::Main, s, 0),
            step: 0,
        };
        let i = intern(&mut chain, &mut queue, node);
        chain.initial.push(i);
    }

    while let Some(i) = queue.pop_front() {
        let node = chain.nodes[i];
        if let Some(k) = horizon {
            if node.step >= k {
                chain.trans[i] = vec![(i, 1.0)];
                continue;
            }
        }
        let entry = profile
            .choice(node.state, node.mode, node.step)
            .ok_or(ChainError::MissingChoice {
                state: node.state,
                mode: node.mode,
                step: node.step,
            })?;
        let m = g.cols(node.state);
        let mut acc: BTreeMap<ChainNode, f64> = BTreeMap::new();
        for (r, &pr) in entry.row.iter().enumerate() {
            if pr == 0.0 {
                continue;
            }
            for (c, &pc) in entry.col.iter().enumerate() {
                if pc == 0.0 {
                    continue;
                }
                for &(t, p) in &g.trans[node.state][r * m + c] {
                    let next_step = match horizon {
                        Some(k) => (node.step + 1).min(k),
                        None => 0,
                    };
                    let next = ChainNode {
                        state: t,
                        mode: profile.entry_mode(node.mode, t, next_step),
                        step: next_step,
                    };
                    *acc.entry(next).or_insert(0.0) += pr * pc * p;
                }
            }
        }
        let mut row = Vec::with_capacity(acc.len());
        for (next, p) in acc {
            let j = intern(&mut chain, &mut queue, next);
            row.push((j, p));
        }
        chain.trans[i] = row;
    }
    Ok(chain)
}

impl MarkovChain {
    /// Each row must be stochastic.
    pub fn row_sums(&self) -> Vec<f64> {
        self.trans
            .iter()
            .map(|row| row.iter().map(|(_, p)| p).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn rps_builds_with_four_states() {
        let g = models::rps().unwrap();
        assert_eq!(g.num_states, 4);
        assert_eq!(g.players.len(), 2);
        assert!(g.reachable.iter().all(|&r| r));
        // At the initial state each player has r/p/s available, not t.
        assert_eq!(g.available(0, 0).len(), 3);
        assert_eq!(g.available(1, 0).len(), 1);
        assert_eq!(g.joint_actions(0).len(), 9);
    }

    #[test]
    fn single_self_loop_game() {
        let text = "\
csg
players 1
player p actions a
state 0 init labels {}
trans 0 (a) -> 1.0:0
";
        let spec = crate::lang::parse_model(text).unwrap();
        let g = build_csg(&spec).unwrap();
        assert_eq!(g.num_states, 1);
        assert_eq!(g.joint_actions(0).len(), 1);
    }

    #[test]
    fn mac_initial_split_is_q() {
        let g = models::medium_access(0.9).unwrap();
        assert_eq!(g.num_states, 6);
        let joint: JointAction = vec![Some(0), Some(2)]; // (t1, t2)
        let d = g.dist(0, &joint);
        assert_eq!(d.len(), 2);
        let p1 = d.iter().find(|(s, _)| *s == 1).unwrap().1;
        let p2 = d.iter().find(|(s, _)| *s == 2).unwrap().1;
        assert!((p1 - 0.9).abs() < 1e-12);
        assert!((p2 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn missing_transition_detected() {
        // Player has actions a and b at state 0 (a appears in a transition,
        // so does b), but the joint (b) is missing... here single player,
        // two actions, only one transition: available = {a,b} forces both.
        let text = "\
csg
players 1
player p actions a b
state 0 init labels {}
state 1 labels {}
trans 0 (a) -> 1.0:1
trans 0 (b) -> 1.0:0
trans 1 (a) -> 1.0:1
";
        let spec = crate::lang::parse_model(text).unwrap();
        assert!(build_csg(&spec).is_ok());

        // Both actions of each player occur at state 0, so all four joint
        // actions must be present; only two are.
        let text_missing = "\
csg
players 2
player p actions a b
player q actions c d
state 0 init labels {}
trans 0 (a,c) -> 1.0:0
trans 0 (b,d) -> 1.0:0
";
        let spec = crate::lang::parse_model(text_missing).unwrap();
        let err = build_csg(&spec).unwrap_err();
        assert!(matches!(err, GameError::MissingTransition { state: 0, .. }));
    }

    #[test]
    fn coalition_game_rejects_empty_and_full() {
        let g = models::rps().unwrap();
        assert!(matches!(
            coalition_game(&g, &[]),
            Err(GameError::BadCoalition)
        ));
        assert!(matches!(
            coalition_game(&g, &["p1".into(), "p2".into()]),
            Err(GameError::BadCoalition)
        ));
        assert!(coalition_game(&g, &["p1".into()]).is_ok());
    }

    #[test]
    fn coalition_back_mapping_reproduces_transitions_and_rewards() {
        let g = models::three_player_stag_hunt().unwrap();
        let cg = coalition_game(&g, &["p2".into(), "p3".into()]).unwrap();
        // Rows are the coalition {p2,p3}; pairwise products minus all-idle.
        for s in 0..g.num_states {
            for r in 0..cg.rows(s) {
                for c in 0..cg.cols(s) {
                    let joint = &cg.back_joint[s][r * cg.cols(s) + c];
                    assert_eq!(cg.dist(s, r, c), g.dist(s, joint));
                    for (name, rw) in &g.rewards {
                        let lifted = cg.reward(name);
                        assert_eq!(lifted.action[s][r * cg.cols(s) + c], rw.action(s, joint));
                        assert_eq!(lifted.state[s], rw.state_rewards[s]);
                    }
                }
            }
        }
    }

    #[test]
    fn two_player_identity_coalition() {
        let g = models::rps().unwrap();
        let cg = coalition_game(&g, &["p1".into()]).unwrap();
        assert_eq!(cg.rows(0), 3);
        assert_eq!(cg.cols(0), 3);
        assert_eq!(cg.rows(1), 1); // only t1 available
        // Identity reindexing: back-mapped joints agree with the base game.
        for s in 0..g.num_states {
            for (idx, joint) in cg.back_joint[s].iter().enumerate() {
                assert_eq!(&cg.trans[s][idx], g.dist(s, joint));
            }
        }
    }

    #[test]
    fn induced_mdp_choice_counts() {
        let g = models::rps().unwrap();
        let cg = coalition_game(&g, &["p1".into()]).unwrap();
        let mdp = induced_mdp(&cg);
        // 3x3 enabled pairs at the initial state.
        assert_eq!(mdp.num_choices(0), 9);
        assert_eq!(mdp.num_choices(1), 1);

        let mac = models::medium_access(0.9).unwrap();
        let cg = coalition_game(&mac, &["u1".into()]).unwrap();
        let mdp = induced_mdp(&cg);
        assert_eq!(mdp.num_choices(0), 4); // 2x2 enabled pairs
    }
}
