//! Strategy profiles: assembly from verification fragments, exact
//! evaluation on the induced chain, independent epsilon certification and
//! export (graph / table formats).

use crate::game::{induced_chain, ChainNode, CoalitionGame, MarkovChain, StateId};
use crate::linalg::solve_square;
use crate::mdp::{self, MdpModel, Opt, OwnedMdp};
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;
use thiserror::Error;

/// Profile memory. `Main` follows the per-state solver output; `Sw1` and
/// `Sw2` mean a switch has happened and the profile now follows the MDP
/// strategy for objective 1 or 2 (the objective that can still change).
/// Externally both switched modes render as the single SWITCHED bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Main,
    Sw1,
    Sw2,
}

impl Mode {
    pub fn memory_label(self) -> &'static str {
        match self {
            Mode::Main => "main",
            Mode::Sw1 | Mode::Sw2 => "switched",
        }
    }
}

/// Which solver produced an entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    MatrixLp,
    BimatrixNe,
    MdpOpt,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::MatrixLp => "matrix-lp",
            Provenance::BimatrixNe => "bimatrix-ne",
            Provenance::MdpOpt => "mdp-opt",
        }
    }
}

/// Mixed choices of both coalitions in one state (and memory/step).
#[derive(Debug, Clone)]
pub struct ChoicePair {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
    pub provenance: Provenance,
}

/// When and where `Main` switches to an MDP mode, keyed by the state being
/// entered (and the elapsed step for finite-horizon profiles).
#[derive(Debug, Clone)]
pub enum SwitchTable {
    None,
    Static(Vec<Option<Mode>>),
    Stepped(Vec<Vec<Option<Mode>>>),
}

/// A randomized, possibly finite-memory strategy profile.
#[derive(Debug, Clone)]
pub struct StrategyProfile {
    /// `Some(k)`: choices are step-indexed for steps `0..k`.
    pub horizon: Option<u64>,
    pub entries: BTreeMap<(StateId, Mode, u64), ChoicePair>,
    pub switch: SwitchTable,
}

impl StrategyProfile {
    /// Memory after entering `state` at `step` while in `mode`.
    pub fn entry_mode(&self, mode: Mode, state: StateId, step: u64) -> Mode {
        match mode {
            Mode::Main => match &self.switch {
                SwitchTable::None => Mode::Main,
                SwitchTable::Static(t) => t[state].unwrap_or(Mode::Main),
                SwitchTable::Stepped(t) => {
                    let i = (step as usize).min(t.len().saturating_sub(1));
                    t[i][state].unwrap_or(Mode::Main)
                }
            },
            switched => switched,
        }
    }

    pub fn choice(&self, state: StateId, mode: Mode, step: u64) -> Option<&ChoicePair> {
        let key_step = if self.horizon.is_some() { step } else { 0 };
        self.entries.get(&(state, mode, key_step))
    }
}

/// Fragments collected while verifying: main-mode mixed choices plus pure
/// joint MDP choices for each switched mode.
#[derive(Debug, Clone, Default)]
pub struct Fragments {
    pub horizon: Option<u64>,
    pub main: BTreeMap<(StateId, u64), ChoicePair>,
    pub sw1: BTreeMap<(StateId, u64), usize>,
    pub sw2: BTreeMap<(StateId, u64), usize>,
    pub switch: Option<SwitchTable>,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile has no choice for state {state} in mode {mode:?} at step {step}")]
    MissingChoice {
        state: StateId,
        mode: Mode,
        step: u64,
    },
    #[error("invalid distribution in profile entry at state {state}")]
    BadDistribution { state: StateId },
    #[error("objective bound {bound} exceeds profile horizon {horizon}")]
    BoundBeyondHorizon { bound: u64, horizon: u64 },
    #[error("linear solve failed on the induced chain")]
    SingularChain,
}

/// Assemble a consistent profile from fragments, verifying that every
/// reachable (state, memory) pair has a choice and that all distributions
/// are stochastic.
pub fn assemble(g: &CoalitionGame, fragments: Fragments) -> Result<StrategyProfile, ProfileError> {
    let mut entries: BTreeMap<(StateId, Mode, u64), ChoicePair> = BTreeMap::new();
    for ((s, t), pair) in fragments.main {
        entries.insert((s, Mode::Main, t), pair);
    }
    let onehot = |s: StateId, joint: usize| -> ChoicePair {
        let m = g.cols(s);
        let mut row = vec![0.0; g.rows(s)];
        let mut col = vec![0.0; m];
        row[joint / m] = 1.0;
        col[joint % m] = 1.0;
        ChoicePair {
            row,
            col,
            provenance: Provenance::MdpOpt,
        }
    };
    for ((s, t), joint) in fragments.sw1 {
        entries.insert((s, Mode::Sw1, t), onehot(s, joint));
    }
    for ((s, t), joint) in fragments.sw2 {
        entries.insert((s, Mode::Sw2, t), onehot(s, joint));
    }

    for ((s, _, _), pair) in &entries {
        let ok = |d: &[f64], n: usize| {
            d.len() == n
                && d.iter().all(|&p| (-1e-12..=1.0 + 1e-9).contains(&p))
                && (d.iter().sum::<f64>() - 1.0).abs() < 1e-9
        };
        if !ok(&pair.row, g.rows(*s)) || !ok(&pair.col, g.cols(*s)) {
            return Err(ProfileError::BadDistribution { state: *s });
        }
    }

    let profile = StrategyProfile {
        horizon: fragments.horizon,
        entries,
        switch: fragments.switch.unwrap_or(SwitchTable::None),
    };
    // Completeness over reachable (state, memory) pairs.
    induced_chain(g, &profile).map_err(|e| match e {
        crate::game::ChainError::MissingChoice { state, mode, step } => {
            ProfileError::MissingChoice { state, mode, step }
        }
    })?;
    Ok(profile)
}

// ---------------------------------------------------------------------------
// Objectives (fully resolved against a coalition game)

/// A single objective with its satisfaction sets already computed.
#[derive(Debug, Clone)]
pub enum Goal {
    Next {
        target: Vec<bool>,
    },
    BoundedUntil {
        phi1: Vec<bool>,
        bound: u64,
        phi2: Vec<bool>,
    },
    Until {
        phi1: Vec<bool>,
        phi2: Vec<bool>,
    },
    Instant {
        reward: String,
        bound: u64,
    },
    Cumulative {
        reward: String,
        bound: u64,
    },
    ReachReward {
        reward: String,
        target: Vec<bool>,
    },
}

impl Goal {
    pub fn bound(&self) -> Option<u64> {
        match self {
            Goal::Next { .. } => Some(1),
            Goal::BoundedUntil { bound, .. }
            | Goal::Instant { bound, .. }
            | Goal::Cumulative { bound, .. } => Some(*bound),
            Goal::Until { .. } | Goal::ReachReward { .. } => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Exact profile evaluation

/// The chain of a profile together with per-node achieved values.
#[derive(Debug, Clone)]
pub struct ProfileEvaluation {
    pub chain: MarkovChain,
    pub node_values: Vec<f64>,
}

impl ProfileEvaluation {
    /// Value at a game state, read at the state's entry node if present.
    pub fn value_at(&self, profile: &StrategyProfile, state: StateId) -> Option<f64> {
        let node = ChainNode {
            state,
            mode: profile.entry_mode(Mode::Main, state, 0),
            step: 0,
        };
        self.chain.index.get(&node).map(|&i| self.node_values[i])
    }
}

/// Expected one-step reward (action plus state part) at a chain node.
fn node_step_reward(
    g: &CoalitionGame,
    profile: &StrategyProfile,
    node: ChainNode,
    reward: &str,
) -> f64 {
    let rw = g.reward(reward);
    let entry = profile
        .choice(node.state, node.mode, node.step)
        .expect("chain node has a choice");
    let m = g.cols(node.state);
    let mut acc = rw.state[node.state];
    for (r, &pr) in entry.row.iter().enumerate() {
        if pr == 0.0 {
            continue;
        }
        for (c, &pc) in entry.col.iter().enumerate() {
            if pc > 0.0 {
                acc += pr * pc * rw.action[node.state][r * m + c];
            }
        }
    }
    acc
}

/// Evaluate a goal exactly on the chain induced by a profile, starting
/// from the given states (defaults to the game's initial states).
pub fn evaluate_profile(
    g: &CoalitionGame,
    goal: &Goal,
    profile: &StrategyProfile,
    starts: Option<&[StateId]>,
) -> Result<ProfileEvaluation, ProfileError> {
    let chain = chain_from(g, profile, starts)?;
    let values = evaluate_on_chain(g, goal, profile, &chain)?;
    Ok(ProfileEvaluation {
        chain,
        node_values: values,
    })
}

fn chain_from(
    g: &CoalitionGame,
    profile: &StrategyProfile,
    starts: Option<&[StateId]>,
) -> Result<MarkovChain, ProfileError> {
    let chain = match starts {
        None => induced_chain(g, profile),
        Some(states) => {
            let mut shadow = g.clone();
            shadow.initial = states.to_vec();
            induced_chain(&shadow, profile)
        }
    };
    chain.map_err(|e| match e {
        crate::game::ChainError::MissingChoice { state, mode, step } => {
            ProfileError::MissingChoice { state, mode, step }
        }
    })
}

fn evaluate_on_chain(
    g: &CoalitionGame,
    goal: &Goal,
    profile: &StrategyProfile,
    chain: &MarkovChain,
) -> Result<Vec<f64>, ProfileError> {
    let n = chain.nodes.len();
    if let Some(k) = goal.bound() {
        if let Some(h) = profile.horizon {
            if k > h {
                return Err(ProfileError::BoundBeyondHorizon { bound: k, horizon: h });
            }
        }
        // Backward induction over the chain; steps strictly increase along
        // transitions of finite-horizon chains, so memoised recursion
        // terminates. Memoryless chains only occur for unbounded goals.
        let mut memo: Vec<Option<f64>> = vec![None; n];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(chain.nodes[i].step));
        for i in order {
            let node = chain.nodes[i];
            let at_cap = profile.horizon.map_or(false, |h| node.step >= h);
            let v = match goal {
                Goal::Next { target } => {
                    if node.step >= 1 {
                        0.0 // beyond the evaluation point; unused
                    } else {
                        chain.trans[i]
                            .iter()
                            .map(|&(j, p)| {
                                p * if target[chain.nodes[j].state] { 1.0 } else { 0.0 }
                            })
                            .sum()
                    }
                }
                Goal::BoundedUntil { phi1, bound, phi2 } => {
                    if phi2[node.state] {
                        1.0
                    } else if !phi1[node.state] || node.step >= *bound {
                        0.0
                    } else if at_cap {
                        0.0
                    } else {
                        chain.trans[i]
                            .iter()
                            .map(|&(j, p)| p * memo[j].expect("topological order"))
                            .sum()
                    }
                }
                Goal::Instant { reward, bound } => {
                    if node.step >= *bound {
                        g.reward(reward).state[node.state]
                    } else if at_cap {
                        g.reward(reward).state[node.state]
                    } else {
                        chain.trans[i]
                            .iter()
                            .map(|&(j, p)| p * memo[j].expect("topological order"))
                            .sum()
                    }
                }
                Goal::Cumulative { reward, bound } => {
                    if node.step >= *bound || at_cap {
                        0.0
                    } else {
                        node_step_reward(g, profile, node, reward)
                            + chain.trans[i]
                                .iter()
                                .map(|&(j, p)| p * memo[j].expect("topological order"))
                                .sum::<f64>()
                    }
                }
                Goal::Until { .. } | Goal::ReachReward { .. } => unreachable!(),
            };
            memo[i] = Some(v);
        }
        return Ok(memo.into_iter().map(|v| v.unwrap()).collect());
    }

    match goal {
        Goal::Until { phi1, phi2 } => {
            let sat: Vec<bool> = chain.nodes.iter().map(|n| phi2[n.state]).collect();
            let ok: Vec<bool> = chain.nodes.iter().map(|n| phi1[n.state]).collect();
            // Nodes that can reach phi2 through phi1.
            let mut can = sat.clone();
            loop {
                let mut changed = false;
                for i in 0..n {
                    if !can[i] && ok[i] && chain.trans[i].iter().any(|&(j, _)| can[j]) {
                        can[i] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            // Linear system over the undecided nodes.
            let unknown: Vec<usize> = (0..n).filter(|&i| can[i] && !sat[i]).collect();
            let pos: HashMap<usize, usize> =
                unknown.iter().enumerate().map(|(k, &i)| (i, k)).collect();
            let d = unknown.len();
            let mut a = vec![vec![0.0; d]; d];
            let mut b = vec![0.0; d];
            for (k, &i) in unknown.iter().enumerate() {
                a[k][k] = 1.0;
                for &(j, p) in &chain.trans[i] {
                    if sat[j] {
                        b[k] += p;
                    } else if let Some(&kj) = pos.get(&j) {
                        a[k][kj] -= p;
                    }
                }
            }
            let sol = if d > 0 {
                solve_square(&a, &b).ok_or(ProfileError::SingularChain)?
            } else {
                Vec::new()
            };
            Ok((0..n)
                .map(|i| {
                    if sat[i] {
                        1.0
                    } else if let Some(&k) = pos.get(&i) {
                        sol[k]
                    } else {
                        0.0
                    }
                })
                .collect())
        }
        Goal::ReachReward { reward, target } => {
            let sat: Vec<bool> = chain.nodes.iter().map(|n| target[n.state]).collect();
            // Nodes that can reach the target at all.
            let mut can = sat.clone();
            loop {
                let mut changed = false;
                for i in 0..n {
                    if !can[i] && chain.trans[i].iter().any(|&(j, _)| can[j]) {
                        can[i] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            // A node reaches the target with probability 1 exactly when no
            // node outside `can` is reachable from it.
            let mut misses = vec![false; n];
            for i in 0..n {
                if !can[i] {
                    misses[i] = true;
                }
            }
            loop {
                let mut changed = false;
                for i in 0..n {
                    if !misses[i] && !sat[i] && chain.trans[i].iter().any(|&(j, _)| misses[j]) {
                        misses[i] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            let unknown: Vec<usize> = (0..n).filter(|&i| !sat[i] && !misses[i]).collect();
            let pos: HashMap<usize, usize> =
                unknown.iter().enumerate().map(|(k, &i)| (i, k)).collect();
            let d = unknown.len();
            let mut a = vec![vec![0.0; d]; d];
            let mut b = vec![0.0; d];
            for (k, &i) in unknown.iter().enumerate() {
                a[k][k] = 1.0;
                b[k] = node_step_reward(g, profile, chain.nodes[i], reward);
                for &(j, p) in &chain.trans[i] {
                    if let Some(&kj) = pos.get(&j) {
                        a[k][kj] -= p;
                    }
                }
            }
            let sol = if d > 0 {
                solve_square(&a, &b).ok_or(ProfileError::SingularChain)?
            } else {
                Vec::new()
            };
            Ok((0..n)
                .map(|i| {
                    if sat[i] {
                        0.0
                    } else if misses[i] {
                        f64::INFINITY
                    } else {
                        sol[pos[&i]]
                    }
                })
                .collect())
        }
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// Epsilon certification

/// Best-response deficits of the two coalitions against a profile.
#[derive(Debug, Clone)]
pub struct EpsilonCertificate {
    pub epsilon: f64,
    pub deficits: (f64, f64),
}

/// Certify how far a profile is from an exact equilibrium: for each
/// coalition, fix the other side's strategy, solve the single-controller
/// best-response MDP over the (state, memory, step) product and compare
/// with the achieved value at every state's entry node.
pub fn certify_epsilon(
    g: &CoalitionGame,
    goals: (&Goal, &Goal),
    profile: &StrategyProfile,
    epsilon_vi: f64,
    max_iters: usize,
) -> Result<EpsilonCertificate, ProfileError> {
    let starts: Vec<StateId> = (0..g.num_states).filter(|&s| g.scope[s]).collect();
    let d1 = best_response_deficit(g, goals.0, profile, true, &starts, epsilon_vi, max_iters)?;
    let d2 = best_response_deficit(g, goals.1, profile, false, &starts, epsilon_vi, max_iters)?;
    Ok(EpsilonCertificate {
        epsilon: d1.max(d2).max(0.0),
        deficits: (d1.max(0.0), d2.max(0.0)),
    })
}

/// Max over entry nodes of (best response minus achieved) for one side.
fn best_response_deficit(
    g: &CoalitionGame,
    goal: &Goal,
    profile: &StrategyProfile,
    row_side: bool,
    starts: &[StateId],
    epsilon_vi: f64,
    max_iters: usize,
) -> Result<f64, ProfileError> {
    let achieved = evaluate_profile(g, goal, profile, Some(starts))?;

    // Product node space: (state, mode, step), explored under *all* own
    // choices while the opponent follows the profile.
    let mut nodes: Vec<ChainNode> = Vec::new();
    let mut index: HashMap<ChainNode, usize> = HashMap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut trans: Vec<Vec<crate::game::Dist>> = Vec::new();
    let mut intern = |nodes: &mut Vec<ChainNode>,
                      index: &mut HashMap<ChainNode, usize>,
                      trans: &mut Vec<Vec<crate::game::Dist>>,
                      queue: &mut VecDeque<usize>,
                      node: ChainNode| {
        if let Some(&i) = index.get(&node) {
            return i;
        }
        let i = nodes.len();
        nodes.push(node);
        index.insert(node, i);
        trans.push(Vec::new());
        queue.push_back(i);
        i
    };
    for &s in starts {
        let node = ChainNode {
            state: s,
            mode: profile.entry_mode(Mode::Main, s, 0),
            step: 0,
        };
        intern(&mut nodes, &mut index, &mut trans, &mut queue, node);
    }
    while let Some(i) = queue.pop_front() {
        let node = nodes[i];
        if profile.horizon.map_or(false, |h| node.step >= h) {
            trans[i] = vec![vec![(i, 1.0)]];
            continue;
        }
        let entry = profile
            .choice(node.state, node.mode, node.step)
            .ok_or(ProfileError::MissingChoice {
                state: node.state,
                mode: node.mode,
                step: node.step,
            })?;
        let opponent = if row_side { &entry.col } else { &entry.row };
        let own_count = if row_side {
            g.rows(node.state)
        } else {
            g.cols(node.state)
        };
        let m = g.cols(node.state);
        let mut choices = Vec::with_capacity(own_count);
        for own in 0..own_count {
            let mut acc: BTreeMap<ChainNode, f64> = BTreeMap::new();
            for (opp, &po) in opponent.iter().enumerate() {
                if po == 0.0 {
                    continue;
                }
                let idx = if row_side { own * m + opp } else { opp * m + own };
                for &(t, p) in &g.trans[node.state][idx] {
                    let next_step = match profile.horizon {
                        Some(h) => (node.step + 1).min(h),
                        None => 0,
                    };
                    let next = ChainNode {
                        state: t,
                        mode: profile.entry_mode(node.mode, t, next_step),
                        step: next_step,
                    };
                    *acc.entry(next).or_insert(0.0) += po * p;
                }
            }
            let mut dist = Vec::with_capacity(acc.len());
            for (next, p) in acc {
                let j = intern(&mut nodes, &mut index, &mut trans, &mut queue, next);
                dist.push((j, p));
            }
            choices.push(dist);
        }
        trans[i] = choices;
    }

    let product = OwnedMdp {
        scope: vec![true; trans.len()],
        trans,
    };

    // Expected opponent-weighted step reward of an own choice.
    let nodes_ref = &nodes;
    let step_reward = |reward: &str| {
        let rw = g.reward(reward);
        move |i: usize, own: usize| -> f64 {
            let node = nodes_ref[i];
            if profile.horizon.map_or(false, |h| node.step >= h) {
                return 0.0;
            }
            let entry = profile.choice(node.state, node.mode, node.step).unwrap();
            let opponent = if row_side { &entry.col } else { &entry.row };
            let m = g.cols(node.state);
            let mut acc = rw.state[node.state];
            for (opp, &po) in opponent.iter().enumerate() {
                if po > 0.0 {
                    let idx = if row_side { own * m + opp } else { opp * m + own };
                    acc += po * rw.action[node.state][idx];
                }
            }
            acc
        }
    };

    let lift = |set: &[bool]| -> Vec<bool> { nodes.iter().map(|n| set[n.state]).collect() };

    let best: Vec<f64> = match goal {
        Goal::Until { phi1, phi2 } => {
            mdp::mdp_until(&product, Opt::Max, &lift(phi1), &lift(phi2), epsilon_vi, max_iters)
                .values
        }
        Goal::ReachReward { reward, target } => {
            let rf = step_reward(reward);
            // State rewards are already folded into the choice reward.
            let zero = vec![0.0; nodes.len()];
            mdp::mdp_reach_reward(
                &product,
                Opt::Max,
                &zero,
                &rf,
                &lift(target),
                epsilon_vi,
                max_iters,
                None,
            )
            .values
        }
        Goal::Next { target } => mdp::mdp_next(&product, Opt::Max, &lift(target)).values,
        Goal::BoundedUntil { phi1, bound, phi2 } => {
            bounded_best_response(&product, &nodes, |i| {
                let n = nodes[i];
                (phi1[n.state], phi2[n.state], *bound)
            })
        }
        Goal::Instant { reward, bound } => {
            let rw = g.reward(reward);
            finite_best_response(&product, &nodes, *bound, |i, steps_left, cont| {
                if steps_left == 0 {
                    rw.state[nodes[i].state]
                } else {
                    cont
                }
            }, |_, _| 0.0)
        }
        Goal::Cumulative { reward, bound } => {
            let rf = step_reward(reward);
            finite_best_response(&product, &nodes, *bound, |_, steps_left, cont| {
                if steps_left == 0 {
                    0.0
                } else {
                    cont
                }
            }, move |i, own| rf(i, own))
        }
    };

    let mut worst = f64::NEG_INFINITY;
    for &s in starts {
        let node = ChainNode {
            state: s,
            mode: profile.entry_mode(Mode::Main, s, 0),
            step: 0,
        };
        let (Some(&i), Some(a)) = (index.get(&node), achieved.value_at(profile, s)) else {
            continue;
        };
        if best[i].is_infinite() && a.is_infinite() {
            continue;
        }
        worst = worst.max(best[i] - a);
    }
    Ok(if worst.is_finite() { worst } else { 0.0 })
}

/// Best response for a bounded-until objective by backward induction over
/// remaining steps.
fn bounded_best_response<M: MdpModel>(
    m: &M,
    nodes: &[ChainNode],
    classify: impl Fn(usize) -> (bool, bool, u64),
) -> Vec<f64> {
    let n = nodes.len();
    let max_bound = (0..n).map(|i| classify(i).2).max().unwrap_or(0);
    let mut prev: Vec<f64> = (0..n)
        .map(|i| if classify(i).1 { 1.0 } else { 0.0 })
        .collect();
    for _ in 1..=max_bound {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let (ok1, ok2, _) = classify(i);
            next[i] = if ok2 {
                1.0
            } else if !ok1 {
                0.0
            } else {
                (0..m.num_choices(i))
                    .map(|c| m.dist(i, c).iter().map(|&(j, p)| p * prev[j]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max)
            };
        }
        prev = next;
    }
    prev
}

/// Generic finite-horizon best response: `terminal` shapes the base case
/// and per-level seam, `choice_reward` adds the per-step reward.
fn finite_best_response<M: MdpModel>(
    m: &M,
    nodes: &[ChainNode],
    bound: u64,
    terminal: impl Fn(usize, u64, f64) -> f64,
    choice_reward: impl Fn(usize, usize) -> f64,
) -> Vec<f64> {
    let n = nodes.len();
    let mut prev: Vec<f64> = (0..n).map(|i| terminal(i, 0, 0.0)).collect();
    for _level in 1..=bound {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let cont = (0..m.num_choices(i))
                .map(|c| {
                    choice_reward(i, c)
                        + m.dist(i, c).iter().map(|&(j, p)| p * prev[j]).sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            next[i] = terminal(i, _level, cont);
        }
        prev = next;
    }
    prev
}

// ---------------------------------------------------------------------------
// Export

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Graph,
    Table,
}

/// Export a profile. The graph format renders the induced chain as a
/// plain-text digraph; the table format is CSV with one row per chosen
/// action, `state,memory,step,action,prob`.
pub fn export_profile(
    g: &CoalitionGame,
    profile: &StrategyProfile,
    format: ExportFormat,
) -> Result<String, ProfileError> {
    match format {
        ExportFormat::Table => Ok(export_table(g, profile)),
        ExportFormat::Graph => export_graph(g, profile),
    }
}

fn fmt_step(profile: &StrategyProfile, step: u64) -> String {
    if profile.horizon.is_some() {
        step.to_string()
    } else {
        "-".to_string()
    }
}

fn export_table(g: &CoalitionGame, profile: &StrategyProfile) -> String {
    let mut out = String::from("state,memory,step,action,prob\n");
    for ((s, mode, step), pair) in &profile.entries {
        let mut push = |name: &str, p: f64| {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.12e}",
                s,
                mode.memory_label(),
                fmt_step(profile, *step),
                name,
                p
            );
        };
        for (r, &p) in pair.row.iter().enumerate() {
            if p > 0.0 {
                push(&g.row_actions[*s][r].name, p);
            }
        }
        for (c, &p) in pair.col.iter().enumerate() {
            if p > 0.0 {
                push(&g.col_actions[*s][c].name, p);
            }
        }
    }
    out
}

/// Parse a table export back into a profile (entries only; the switch
/// table is not part of the wire format).
pub fn parse_table_profile(
    g: &CoalitionGame,
    text: &str,
) -> Result<StrategyProfile, ProfileError> {
    let mut entries: BTreeMap<(StateId, Mode, u64), ChoicePair> = BTreeMap::new();
    let mut horizon = None;
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let bad = || ProfileError::BadDistribution { state: 0 };
        if parts.len() != 5 {
            return Err(bad());
        }
        let s: StateId = parts[0].parse().map_err(|_| bad())?;
        let mode = match parts[1] {
            "main" => Mode::Main,
            "switched" => Mode::Sw1,
            _ => return Err(bad()),
        };
        let step: u64 = if parts[2] == "-" {
            0
        } else {
            horizon = Some(0);
            parts[2].parse().map_err(|_| bad())?
        };
        let action = parts[3];
        let prob: f64 = parts[4].parse().map_err(|_| bad())?;
        let entry = entries.entry((s, mode, step)).or_insert_with(|| ChoicePair {
            row: vec![0.0; g.rows(s)],
            col: vec![0.0; g.cols(s)],
            provenance: Provenance::MatrixLp,
        });
        let row_idx = g.row_actions[s].iter().position(|a| a.name == action);
        let col_idx = g.col_actions[s].iter().position(|a| a.name == action);
        match (row_idx, col_idx) {
            (Some(r), Some(c)) => {
                // Ambiguous name (both sides idle): fill the row first.
                if entry.row[r] == 0.0 {
                    entry.row[r] += prob;
                } else {
                    entry.col[c] += prob;
                }
            }
            (Some(r), None) => entry.row[r] += prob,
            (None, Some(c)) => entry.col[c] += prob,
            (None, None) => return Err(bad()),
        }
    }
    if let Some(h) = &mut horizon {
        *h = entries.keys().map(|(_, _, t)| *t).max().unwrap_or(0) + 1;
    }
    Ok(StrategyProfile {
        horizon,
        entries,
        switch: SwitchTable::None,
    })
}

fn export_graph(g: &CoalitionGame, profile: &StrategyProfile) -> Result<String, ProfileError> {
    let chain = chain_from(g, profile, None)?;
    let mut out = String::from("digraph strategy {\n");
    for (i, node) in chain.nodes.iter().enumerate() {
        let step = if profile.horizon.is_some() {
            format!(" t={}", node.step)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "  n{i} [label=\"s{} {}{}\"];",
            node.state,
            node.mode.memory_label(),
            step
        );
    }
    for (i, row) in chain.trans.iter().enumerate() {
        let node = chain.nodes[i];
        let entry = profile.choice(node.state, node.mode, node.step);
        for &(j, p) in row {
            // Actions that contribute to this edge.
            let mut actions: Vec<String> = Vec::new();
            if let Some(pair) = entry {
                let m = g.cols(node.state);
                for (r, &pr) in pair.row.iter().enumerate() {
                    for (c, &pc) in pair.col.iter().enumerate() {
                        if pr > 0.0
                            && pc > 0.0
                            && g.trans[node.state][r * m + c]
                                .iter()
                                .any(|&(t, q)| q > 0.0 && t == chain.nodes[j].state)
                        {
                            actions.push(format!(
                                "{},{}",
                                g.row_actions[node.state][r].name,
                                g.col_actions[node.state][c].name
                            ));
                        }
                    }
                }
            }
            actions.dedup();
            let _ = writeln!(
                out,
                "  n{i} -> n{j} [label=\"{}:{:.12e}\"];",
                actions.join("|"),
                p
            );
        }
    }
    out.push_str("}\n");
    Ok(out)
}
