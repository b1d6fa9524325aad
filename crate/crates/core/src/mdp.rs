//! MDP model checking: extremal probabilities and expected rewards with
//! optimal strategy extraction. Used standalone and as the switch target
//! inside nonzero-sum verification.

use crate::game::Dist;
use crate::rel_diff;
use rayon::prelude::*;

/// Anything that looks like an MDP: states with indexed choices, each a
/// distribution over successor states. `in_scope` masks states out of
/// value-iteration sweeps (unreachable states, unless forced in).
pub trait MdpModel: Sync {
    fn num_states(&self) -> usize;
    fn num_choices(&self, s: usize) -> usize;
    fn dist(&self, s: usize, choice: usize) -> &Dist;
    fn in_scope(&self, s: usize) -> bool;
}

/// A self-contained MDP; used for induced best-response products.
#[derive(Debug, Clone)]
pub struct OwnedMdp {
    pub trans: Vec<Vec<Dist>>,
    pub scope: Vec<bool>,
}

impl MdpModel for OwnedMdp {
    fn num_states(&self) -> usize {
        self.trans.len()
    }
    fn num_choices(&self, s: usize) -> usize {
        self.trans[s].len()
    }
    fn dist(&self, s: usize, choice: usize) -> &Dist {
        &self.trans[s][choice]
    }
    fn in_scope(&self, s: usize) -> bool {
        self.scope[s]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Opt {
    Max,
    Min,
}

impl Opt {
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Opt::Max => a > b,
            Opt::Min => a < b,
        }
    }

    fn worst(self) -> f64 {
        match self {
            Opt::Max => f64::NEG_INFINITY,
            Opt::Min => f64::INFINITY,
        }
    }
}

/// Per-state values with an optimal memoryless choice per state.
#[derive(Debug, Clone)]
pub struct MdpResult {
    pub values: Vec<f64>,
    pub policy: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

/// Step-indexed values: `values[n][s]` is the value with `n` steps left;
/// `policies[n][s]` the optimal choice with `n` steps left (n >= 1).
#[derive(Debug, Clone)]
pub struct BoundedMdpResult {
    pub values: Vec<Vec<f64>>,
    pub policies: Vec<Vec<usize>>,
}

fn expected(dist: &Dist, v: &[f64]) -> f64 {
    dist.iter().map(|&(t, p)| p * v[t]).sum()
}

fn opt_choice<M: MdpModel>(
    m: &M,
    s: usize,
    opt: Opt,
    score: impl Fn(usize) -> f64,
) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_v = opt.worst();
    for k in 0..m.num_choices(s) {
        let v = score(k);
        if k == 0 || opt.better(v, best_v) {
            best = k;
            best_v = v;
        }
    }
    (best, best_v)
}

/// One-step (next) values.
pub fn mdp_next<M: MdpModel>(m: &M, opt: Opt, phi: &[bool]) -> MdpResult {
    let target: Vec<f64> = phi.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let n = m.num_states();
    let mut values = vec![0.0; n];
    let mut policy = vec![0; n];
    for s in 0..n {
        if !m.in_scope(s) {
            continue;
        }
        let (k, v) = opt_choice(m, s, opt, |k| expected(m.dist(s, k), &target));
        values[s] = v;
        policy[s] = k;
    }
    MdpResult {
        values,
        policy,
        iterations: 1,
        converged: true,
    }
}

/// Bounded until by exact backward induction.
pub fn mdp_bounded_until<M: MdpModel>(
    m: &M,
    opt: Opt,
    phi1: &[bool],
    phi2: &[bool],
    k: u64,
) -> BoundedMdpResult {
    let n = m.num_states();
    let base: Vec<f64> = phi2.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut values = vec![base];
    let mut policies = vec![vec![0; n]];
    for _ in 1..=k {
        let prev = values.last().unwrap();
        let mut v = vec![0.0; n];
        let mut pol = vec![0; n];
        for s in 0..n {
            if !m.in_scope(s) {
                continue;
            }
            if phi2[s] {
                v[s] = 1.0;
            } else if !phi1[s] {
                v[s] = 0.0;
            } else {
                let (c, val) = opt_choice(m, s, opt, |c| expected(m.dist(s, c), prev));
                v[s] = val;
                pol[s] = c;
            }
        }
        values.push(v);
        policies.push(pol);
    }
    BoundedMdpResult { values, policies }
}

/// States with positive reachability value for `phi1 U phi2`. With
/// `universal` set, every choice must make progress (the min-player view).
fn positive_until<M: MdpModel>(m: &M, phi1: &[bool], phi2: &[bool], universal: bool) -> Vec<bool> {
    let n = m.num_states();
    let mut x: Vec<bool> = phi2.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if x[s] || !phi1[s] {
                continue;
            }
            let hit = |c: usize| m.dist(s, c).iter().any(|&(t, _)| x[t]);
            let add = if universal {
                (0..m.num_choices(s)).all(hit)
            } else {
                (0..m.num_choices(s)).any(hit)
            };
            if add {
                x[s] = true;
                changed = true;
            }
        }
        if !changed {
            return x;
        }
    }
}

/// States from which the controller has a strategy satisfying
/// `phi1 U phi2` with probability 1.
fn prob1e_until<M: MdpModel>(m: &M, phi1: &[bool], phi2: &[bool]) -> Vec<bool> {
    let n = m.num_states();
    let mut y = vec![true; n];
    loop {
        // mu X. phi2 | (phi1 & exists a: supp <= Y & hit X)
        let mut x: Vec<bool> = phi2.to_vec();
        loop {
            let mut changed = false;
            for s in 0..n {
                if x[s] || !phi1[s] {
                    continue;
                }
                let ok = (0..m.num_choices(s)).any(|c| {
                    let d = m.dist(s, c);
                    d.iter().all(|&(t, _)| y[t]) && d.iter().any(|&(t, _)| x[t])
                });
                if ok {
                    x[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if x == y {
            return y;
        }
        y = x;
    }
}

/// States from which the target is reached with probability 1 under
/// every strategy (the quantification used by the assumption checkers).
pub fn prob1a_reach<M: MdpModel>(m: &M, target: &[bool]) -> Vec<bool> {
    let n = m.num_states();
    // Kernel: largest set of non-target states the controller can keep the
    // play inside forever (with probability 1).
    let mut kernel: Vec<bool> = target.iter().map(|&t| !t).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !kernel[s] {
                continue;
            }
            let stay = (0..m.num_choices(s))
                .any(|c| m.dist(s, c).iter().all(|&(t, _)| kernel[t]));
            if !stay {
                kernel[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // Positive reach of the kernel through non-target states loses mass.
    let not_target: Vec<bool> = target.iter().map(|&t| !t).collect();
    let bad = positive_until(m, &not_target, &kernel, false);
    bad.iter().map(|&b| !b).collect()
}

/// Unbounded until by value iteration with qualitative precomputation.
pub fn mdp_until<M: MdpModel>(
    m: &M,
    opt: Opt,
    phi1: &[bool],
    phi2: &[bool],
    epsilon: f64,
    max_iters: usize,
) -> MdpResult {
    let n = m.num_states();
    let (pinned_one, pinned_zero) = match opt {
        Opt::Max => {
            let one = prob1e_until(m, phi1, phi2);
            let zero: Vec<bool> = positive_until(m, phi1, phi2, false)
                .iter()
                .map(|&b| !b)
                .collect();
            (one, zero)
        }
        Opt::Min => {
            let zero: Vec<bool> = positive_until(m, phi1, phi2, true)
                .iter()
                .map(|&b| !b)
                .collect();
            (phi2.to_vec(), zero)
        }
    };

    let mut values: Vec<f64> = (0..n)
        .map(|s| if pinned_one[s] { 1.0 } else { 0.0 })
        .collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let next: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|s| {
                if !m.in_scope(s) || pinned_one[s] || pinned_zero[s] {
                    return values[s];
                }
                if phi2[s] {
                    return 1.0;
                }
                if !phi1[s] {
                    return 0.0;
                }
                let (_, v) = opt_choice(m, s, opt, |c| expected(m.dist(s, c), &values));
                v
            })
            .collect();
        let delta = values
            .iter()
            .zip(&next)
            .map(|(a, b)| rel_diff(*a, *b))
            .fold(0.0f64, f64::max);
        values = next;
        if delta < epsilon {
            converged = true;
            break;
        }
    }

    let mut policy = vec![0; n];
    for s in 0..n {
        if m.in_scope(s) && !phi2[s] && phi1[s] {
            let (c, _) = opt_choice(m, s, opt, |c| expected(m.dist(s, c), &values));
            policy[s] = c;
        }
    }
    MdpResult {
        values,
        policy,
        iterations,
        converged,
    }
}

/// Instantaneous reward at exactly `k` steps, by backward induction.
pub fn mdp_instant<M: MdpModel>(m: &M, opt: Opt, state_reward: &[f64], k: u64) -> BoundedMdpResult {
    let n = m.num_states();
    let mut values = vec![state_reward.to_vec()];
    let mut policies = vec![vec![0; n]];
    for _ in 1..=k {
        let prev = values.last().unwrap();
        let mut v = vec![0.0; n];
        let mut pol = vec![0; n];
        for s in 0..n {
            if !m.in_scope(s) {
                continue;
            }
            let (c, val) = opt_choice(m, s, opt, |c| expected(m.dist(s, c), prev));
            v[s] = val;
            pol[s] = c;
        }
        values.push(v);
        policies.push(pol);
    }
    BoundedMdpResult { values, policies }
}

/// Reward accumulated over `k` steps, by backward induction.
pub fn mdp_cumulative<M: MdpModel>(
    m: &M,
    opt: Opt,
    state_reward: &[f64],
    action_reward: &(dyn Fn(usize, usize) -> f64 + Sync),
    k: u64,
) -> BoundedMdpResult {
    let n = m.num_states();
    let mut values = vec![vec![0.0; n]];
    let mut policies = vec![vec![0; n]];
    for _ in 1..=k {
        let prev = values.last().unwrap();
        let mut v = vec![0.0; n];
        let mut pol = vec![0; n];
        for s in 0..n {
            if !m.in_scope(s) {
                continue;
            }
            let (c, val) = opt_choice(m, s, opt, |c| {
                action_reward(s, c) + state_reward[s] + expected(m.dist(s, c), prev)
            });
            v[s] = val;
            pol[s] = c;
        }
        values.push(v);
        policies.push(pol);
    }
    BoundedMdpResult { values, policies }
}

/// Expected reward accumulated until reaching `target`; states that cannot
/// force the target almost surely get infinite reward. For maximising
/// queries over non-negative rewards the two-phase scheme is used: zero
/// rewards are first lifted to `gamma` to compute upper bounds, then value
/// iteration re-runs from those bounds with the true rewards.
#[allow(clippy::too_many_arguments)]
pub fn mdp_reach_reward<M: MdpModel>(
    m: &M,
    opt: Opt,
    state_reward: &[f64],
    action_reward: &(dyn Fn(usize, usize) -> f64 + Sync),
    target: &[bool],
    epsilon: f64,
    max_iters: usize,
    gamma: Option<f64>,
) -> MdpResult {
    let n = m.num_states();
    let all = vec![true; n];
    let infinite: Vec<bool> = prob1e_until(m, &all, target).iter().map(|&b| !b).collect();

    let mut has_negative = false;
    let mut has_zero = false;
    let mut sum_abs = 0.0;
    let mut count_nonzero = 0usize;
    for s in 0..n {
        if target[s] {
            continue;
        }
        let mut note = |r: f64| {
            if r < 0.0 {
                has_negative = true;
            }
            if r == 0.0 {
                has_zero = true;
            } else {
                sum_abs += r.abs();
                count_nonzero += 1;
            }
        };
        note(state_reward[s]);
        for c in 0..m.num_choices(s) {
            note(action_reward(s, c));
        }
    }

    let sweep = |values: &Vec<f64>, lift: Option<f64>| -> Vec<f64> {
        (0..n)
            .into_par_iter()
            .map(|s| {
                if !m.in_scope(s) {
                    return values[s];
                }
                if target[s] {
                    return 0.0;
                }
                if infinite[s] {
                    return f64::INFINITY;
                }
                let rs = match lift {
                    Some(g) if state_reward[s] == 0.0 => g,
                    _ => state_reward[s],
                };
                let (_, v) = opt_choice(m, s, opt, |c| {
                    let ra = match lift {
                        Some(g) if action_reward(s, c) == 0.0 => g,
                        _ => action_reward(s, c),
                    };
                    ra + rs + expected(m.dist(s, c), values)
                });
                v
            })
            .collect()
    };

    let run = |start: Vec<f64>, lift: Option<f64>, budget: usize| -> (Vec<f64>, usize, bool) {
        let mut values = start;
        let mut iters = 0;
        while iters < budget {
            iters += 1;
            let next = sweep(&values, lift);
            let delta = values
                .iter()
                .zip(&next)
                .map(|(a, b)| rel_diff(*a, *b))
                .fold(0.0f64, f64::max);
            values = next;
            if delta < epsilon {
                return (values, iters, true);
            }
        }
        (values, iters, false)
    };

    let init: Vec<f64> = (0..n)
        .map(|s| if infinite[s] { f64::INFINITY } else { 0.0 })
        .collect();

    let two_phase = opt == Opt::Max && !has_negative && has_zero;
    let (values, iterations, converged) = if two_phase {
        let g = gamma.unwrap_or_else(|| {
            if count_nonzero == 0 {
                1.0
            } else {
                sum_abs / count_nonzero as f64
            }
        });
        let (upper, it1, ok1) = run(init, Some(g), max_iters);
        let (values, it2, ok2) = run(upper, None, max_iters);
        (values, it1 + it2, ok1 && ok2)
    } else {
        run(init, None, max_iters)
    };

    let mut policy = vec![0; n];
    for s in 0..n {
        if m.in_scope(s) && !target[s] && !infinite[s] {
            let (c, _) = opt_choice(m, s, opt, |c| {
                action_reward(s, c) + state_reward[s] + expected(m.dist(s, c), &values)
            });
            policy[s] = c;
        }
    }
    MdpResult {
        values,
        policy,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(p: f64) -> OwnedMdp {
        // state 0: action 0 goes to 1 w.p. p, stays w.p. 1-p; state 1 absorbing.
        OwnedMdp {
            trans: vec![
                vec![vec![(0, 1.0 - p), (1, p)]],
                vec![vec![(1, 1.0)]],
            ],
            scope: vec![true, true],
        }
    }

    #[test]
    fn geometric_reachability() {
        let m = chain(0.3);
        let phi1 = vec![true, true];
        let phi2 = vec![false, true];
        let r = mdp_until(&m, Opt::Max, &phi1, &phi2, 1e-10, 100_000);
        assert!((r.values[0] - 1.0).abs() < 1e-6);
        let b = mdp_bounded_until(&m, Opt::Max, &phi1, &phi2, 1);
        assert!((b.values[1][0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn target_at_initial_state() {
        let m = chain(0.3);
        let phi2 = vec![true, true];
        let r = mdp_until(&m, Opt::Max, &[true, true], &phi2, 1e-9, 10);
        assert_eq!(r.values[0], 1.0);
    }

    #[test]
    fn expected_steps_on_half_loop() {
        // One step costs 1 until the goal is reached; p = 0.5 gives 2.
        let m = chain(0.5);
        let target = vec![false, true];
        let r = mdp_reach_reward(
            &m,
            Opt::Min,
            &[0.0, 0.0],
            &|s, _| if s == 0 { 1.0 } else { 0.0 },
            &target,
            1e-12,
            1_000_000,
            None,
        );
        assert!((r.values[0] - 2.0).abs() < 1e-6);
        assert_eq!(r.values[1], 0.0);
    }

    #[test]
    fn instant_zero_is_state_reward() {
        let m = chain(0.5);
        let r = mdp_instant(&m, Opt::Max, &[3.0, -1.0], 0);
        assert_eq!(r.values[0], vec![3.0, -1.0]);
    }

    #[test]
    fn cumulative_on_unit_chain() {
        // Deterministic self loop with action reward 1: C<=2 accumulates 2.
        let m = OwnedMdp {
            trans: vec![vec![vec![(0, 1.0)]]],
            scope: vec![true],
        };
        let r = mdp_cumulative(&m, Opt::Max, &[0.0], &|_, _| 1.0, 2);
        assert_eq!(r.values[2][0], 2.0);
    }

    #[test]
    fn unreachable_target_is_infinite() {
        let m = OwnedMdp {
            trans: vec![vec![vec![(0, 1.0)]], vec![vec![(1, 1.0)]]],
            scope: vec![true, true],
        };
        let r = mdp_reach_reward(
            &m,
            Opt::Max,
            &[0.0, 0.0],
            &|_, _| 1.0,
            &[false, true],
            1e-9,
            1000,
            None,
        );
        assert!(r.values[0].is_infinite());
    }

    #[test]
    fn prob1a_on_branching_choice() {
        // State 0 can choose to loop forever away from the target.
        let m = OwnedMdp {
            trans: vec![
                vec![vec![(0, 1.0)], vec![(1, 1.0)]],
                vec![vec![(1, 1.0)]],
            ],
            scope: vec![true, true],
        };
        let res = prob1a_reach(&m, &[false, true]);
        assert!(!res[0]);
        assert!(res[1]);

        // Removing the loop makes reaching unavoidable.
        let m = OwnedMdp {
            trans: vec![vec![vec![(1, 1.0)]], vec![vec![(1, 1.0)]]],
            scope: vec![true, true],
        };
        let res = prob1a_reach(&m, &[false, true]);
        assert!(res[0] && res[1]);
    }

    #[test]
    fn min_until_and_max_until_bracket() {
        // Two choices at state 0: one reaches the target, one avoids it.
        let m = OwnedMdp {
            trans: vec![
                vec![vec![(1, 1.0)], vec![(2, 1.0)]],
                vec![vec![(1, 1.0)]],
                vec![vec![(2, 1.0)]],
            ],
            scope: vec![true; 3],
        };
        let phi1 = vec![true; 3];
        let phi2 = vec![false, true, false];
        let hi = mdp_until(&m, Opt::Max, &phi1, &phi2, 1e-9, 1000);
        let lo = mdp_until(&m, Opt::Min, &phi1, &phi2, 1e-9, 1000);
        assert_eq!(hi.values[0], 1.0);
        assert_eq!(lo.values[0], 0.0);
        assert!(lo.values.iter().zip(&hi.values).all(|(l, h)| l <= h));
    }
}
