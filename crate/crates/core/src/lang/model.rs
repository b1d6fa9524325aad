//! Line-oriented parser and canonical printer for the explicit-state game
//! format:
//!
//! ```text
//! csg
//! players 2
//! player p1 actions r1 p1a s1 t1
//! player p2 actions r2 p2a s2 t2
//! state 0 init labels {}
//! state 1 labels {win1}
//! trans 0 (r1,r2) -> 1.0:3
//! trans 0 (t1,-) -> 0.9:1 0.1:2
//! reward steps state 0 = 0
//! reward steps act 0 (r1,r2) = 1
//! ```
//!
//! `-` stands for the idle action inside joint-action tuples; `#` starts a
//! comment; probabilities may be written as decimals or exact fractions
//! `p/q`.

use super::{LangError, Pos};
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerDecl {
    pub name: String,
    pub actions: Vec<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDecl {
    pub id: usize,
    pub init: bool,
    pub labels: Vec<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransDecl {
    pub state: usize,
    /// One entry per player; `None` is the idle action.
    pub action: Vec<Option<String>>,
    pub branches: Vec<(f64, usize)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewardTarget {
    State { state: usize },
    Action { state: usize, action: Vec<Option<String>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardDecl {
    pub name: String,
    pub target: RewardTarget,
    pub value: f64,
    pub pos: Pos,
}

/// Parsed model description; semantic game invariants are enforced later
/// by [`crate::game::build_csg`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelSpec {
    pub players: Vec<PlayerDecl>,
    pub states: Vec<StateDecl>,
    pub transitions: Vec<TransDecl>,
    pub rewards: Vec<RewardDecl>,
}

impl ModelSpec {
    pub fn reward_names(&self) -> BTreeSet<String> {
        self.rewards.iter().map(|r| r.name.clone()).collect()
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        self.states
            .iter()
            .flat_map(|s| s.labels.iter().cloned())
            .collect()
    }
}

struct LineParser<'a> {
    words: Vec<(usize, &'a str)>,
    line: usize,
    idx: usize,
}

impl<'a> LineParser<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        let mut words = Vec::new();
        let mut col = 1;
        for chunk in text.split_inclusive(char::is_whitespace) {
            let w = chunk.trim_end_matches(char::is_whitespace);
            if !w.is_empty() {
                words.push((col, w));
            }
            col += chunk.chars().count();
        }
        LineParser {
            words,
            line,
            idx: 0,
        }
    }

    fn pos(&self) -> Pos {
        let col = self
            .words
            .get(self.idx)
            .or_else(|| self.words.last())
            .map_or(1, |w| w.0);
        Pos {
            line: self.line,
            col,
        }
    }

    fn next(&mut self, what: &str) -> Result<&'a str, LangError> {
        match self.words.get(self.idx) {
            Some((_, w)) => {
                self.idx += 1;
                Ok(w)
            }
            None => Err(LangError::new(self.pos(), format!("expected {what}"))),
        }
    }

    fn expect(&mut self, literal: &str) -> Result<(), LangError> {
        let pos = self.pos();
        let w = self.next(literal)?;
        if w == literal {
            Ok(())
        } else {
            Err(LangError::new(pos, format!("expected `{literal}`, found `{w}`")))
        }
    }

    fn done(&mut self) -> Result<(), LangError> {
        if self.idx < self.words.len() {
            return Err(LangError::new(
                self.pos(),
                format!("unexpected trailing `{}`", self.words[self.idx].1),
            ));
        }
        Ok(())
    }

    fn rest(&mut self) -> Vec<(Pos, &'a str)> {
        let out = self.words[self.idx..]
            .iter()
            .map(|&(c, w)| {
                (
                    Pos {
                        line: self.line,
                        col: c,
                    },
                    w,
                )
            })
            .collect();
        self.idx = self.words.len();
        out
    }
}

fn parse_usize(pos: Pos, w: &str, what: &str) -> Result<usize, LangError> {
    w.parse()
        .map_err(|_| LangError::new(pos, format!("invalid {what} `{w}`")))
}

/// Parse a probability written as a decimal or an exact fraction `p/q`.
fn parse_prob(pos: Pos, w: &str) -> Result<f64, LangError> {
    let v = if let Some((num, den)) = w.split_once('/') {
        let n: f64 = num
            .parse()
            .map_err(|_| LangError::new(pos, format!("invalid fraction `{w}`")))?;
        let d: f64 = den
            .parse()
            .map_err(|_| LangError::new(pos, format!("invalid fraction `{w}`")))?;
        if d == 0.0 {
            return Err(LangError::new(pos, format!("zero denominator in `{w}`")));
        }
        n / d
    } else {
        w.parse()
            .map_err(|_| LangError::new(pos, format!("invalid probability `{w}`")))?
    };
    if !(0.0..=1.0 + crate::DIST_TOLERANCE).contains(&v) {
        return Err(LangError::new(pos, format!("probability `{w}` out of range")));
    }
    Ok(v)
}

fn ident_ok(w: &str) -> bool {
    !w.is_empty()
        && w.chars().next().unwrap().is_ascii_alphabetic()
        && w.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_action_tuple(pos: Pos, w: &str) -> Result<Vec<Option<String>>, LangError> {
    let inner = w
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| LangError::new(pos, format!("expected joint action `(..)`, found `{w}`")))?;
    inner
        .split(',')
        .map(|part| {
            let part = part.trim();
            if part == "-" {
                Ok(None)
            } else if ident_ok(part) {
                Ok(Some(part.to_string()))
            } else {
                Err(LangError::new(pos, format!("invalid action name `{part}`")))
            }
        })
        .collect()
}

/// Parse the explicit-state model format.
pub fn parse_model(text: &str) -> Result<ModelSpec, LangError> {
    let mut spec = ModelSpec::default();
    let mut declared_players: Option<usize> = None;
    let mut saw_header = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let mut p = LineParser::new(line, lineno + 1);
        let head_pos = p.pos();
        let head = p.next("directive")?;
        if !saw_header {
            if head != "csg" {
                return Err(LangError::new(head_pos, "model must start with `csg`"));
            }
            saw_header = true;
            p.done()?;
            continue;
        }
        match head {
            "csg" => return Err(LangError::new(head_pos, "duplicate `csg` header")),
            "players" => {
                let pos = p.pos();
                let n = parse_usize(pos, p.next("player count")?, "player count")?;
                if n == 0 {
                    return Err(LangError::new(pos, "at least one player required"));
                }
                declared_players = Some(n);
                p.done()?;
            }
            "player" => {
                let pos = p.pos();
                let name = p.next("player name")?.to_string();
                if !ident_ok(&name) {
                    return Err(LangError::new(pos, format!("invalid player name `{name}`")));
                }
                p.expect("actions")?;
                let actions: Vec<String> = p.rest().iter().map(|(_, w)| w.to_string()).collect();
                if actions.is_empty() {
                    return Err(LangError::new(pos, format!("player `{name}` has no actions")));
                }
                for a in &actions {
                    if !ident_ok(a) {
                        return Err(LangError::new(pos, format!("invalid action name `{a}`")));
                    }
                }
                spec.players.push(PlayerDecl {
                    name,
                    actions,
                    pos: head_pos,
                });
            }
            "state" => {
                let pos = p.pos();
                let id = parse_usize(pos, p.next("state id")?, "state id")?;
                let mut init = false;
                let mut w = p.next("`labels`")?;
                if w == "init" {
                    init = true;
                    w = p.next("`labels`")?;
                }
                if w != "labels" {
                    return Err(LangError::new(pos, format!("expected `labels`, found `{w}`")));
                }
                let rest: Vec<String> = p.rest().iter().map(|(_, w)| w.to_string()).collect();
                let joined = rest.join("");
                let inner = joined
                    .strip_prefix('{')
                    .and_then(|s| s.strip_suffix('}'))
                    .ok_or_else(|| LangError::new(pos, "expected label set `{..}`"))?;
                let labels: Vec<String> = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect();
                for l in &labels {
                    if !ident_ok(l) {
                        return Err(LangError::new(pos, format!("invalid label `{l}`")));
                    }
                }
                spec.states.push(StateDecl {
                    id,
                    init,
                    labels,
                    pos: head_pos,
                });
            }
            "trans" => {
                let pos = p.pos();
                let state = parse_usize(pos, p.next("state id")?, "state id")?;
                let tuple_pos = p.pos();
                let action = parse_action_tuple(tuple_pos, p.next("joint action")?)?;
                p.expect("->")?;
                let mut branches = Vec::new();
                for (bpos, w) in p.rest() {
                    let (prob, target) = w.split_once(':').ok_or_else(|| {
                        LangError::new(bpos, format!("expected `prob:state`, found `{w}`"))
                    })?;
                    branches.push((
                        parse_prob(bpos, prob)?,
                        parse_usize(bpos, target, "state id")?,
                    ));
                }
                if branches.is_empty() {
                    return Err(LangError::new(pos, "transition has no branches"));
                }
                spec.transitions.push(TransDecl {
                    state,
                    action,
                    branches,
                    pos: head_pos,
                });
            }
            "reward" => {
                let pos = p.pos();
                let name = p.next("reward name")?.to_string();
                if !ident_ok(&name) {
                    return Err(LangError::new(pos, format!("invalid reward name `{name}`")));
                }
                let kind = p.next("`state` or `act`")?;
                let state = parse_usize(p.pos(), p.next("state id")?, "state id")?;
                let target = match kind {
                    "state" => RewardTarget::State { state },
                    "act" => {
                        let tpos = p.pos();
                        let action = parse_action_tuple(tpos, p.next("joint action")?)?;
                        RewardTarget::Action { state, action }
                    }
                    other => {
                        return Err(LangError::new(
                            pos,
                            format!("expected `state` or `act`, found `{other}`"),
                        ))
                    }
                };
                p.expect("=")?;
                let vpos = p.pos();
                let vword = p.next("reward value")?;
                let value: f64 = if let Some((n, d)) = vword.split_once('/') {
                    let n: f64 = n.parse().map_err(|_| {
                        LangError::new(vpos, format!("invalid reward value `{vword}`"))
                    })?;
                    let d: f64 = d.parse().map_err(|_| {
                        LangError::new(vpos, format!("invalid reward value `{vword}`"))
                    })?;
                    n / d
                } else {
                    vword.parse().map_err(|_| {
                        LangError::new(vpos, format!("invalid reward value `{vword}`"))
                    })?
                };
                p.done()?;
                spec.rewards.push(RewardDecl {
                    name,
                    target,
                    value,
                    pos: head_pos,
                });
            }
            other => {
                return Err(LangError::new(
                    head_pos,
                    format!("unknown directive `{other}`"),
                ))
            }
        }
    }

    if !saw_header {
        return Err(LangError::new(Pos { line: 1, col: 1 }, "empty model"));
    }
    let n = declared_players
        .ok_or_else(|| LangError::new(Pos { line: 1, col: 1 }, "missing `players` line"))?;
    if spec.players.is_empty() {
        return Err(LangError::new(
            Pos { line: 1, col: 1 },
            "at least one player required",
        ));
    }
    if spec.players.len() != n {
        return Err(LangError::new(
            spec.players[0].pos,
            format!("declared {n} players, found {}", spec.players.len()),
        ));
    }
    validate_spec(&spec)?;
    Ok(spec)
}

/// Purely syntactic cross-checks with positions: declared names, dense
/// state ids, arity of joint actions, distribution sums.
fn validate_spec(spec: &ModelSpec) -> Result<(), LangError> {
    let n = spec.players.len();

    let mut owner: HashMap<&str, (usize, Pos)> = HashMap::new();
    let mut player_names = BTreeSet::new();
    for (i, pl) in spec.players.iter().enumerate() {
        if !player_names.insert(pl.name.clone()) {
            return Err(LangError::new(pl.pos, format!("duplicate player `{}`", pl.name)));
        }
        for a in &pl.actions {
            if let Some((j, _)) = owner.get(a.as_str()) {
                return Err(LangError::new(
                    pl.pos,
                    format!(
                        "action `{a}` declared by both `{}` and `{}`",
                        spec.players[*j].name, pl.name
                    ),
                ));
            }
            owner.insert(a, (i, pl.pos));
        }
    }

    let mut seen_states = BTreeSet::new();
    for st in &spec.states {
        if !seen_states.insert(st.id) {
            return Err(LangError::new(st.pos, format!("duplicate state {}", st.id)));
        }
    }
    let num_states = spec.states.len();
    for st in &spec.states {
        if st.id >= num_states {
            return Err(LangError::new(
                st.pos,
                format!("state ids must be dense 0..{}, found {}", num_states - 1, st.id),
            ));
        }
    }
    if !spec.states.iter().any(|s| s.init) {
        return Err(LangError::new(Pos { line: 1, col: 1 }, "no initial state declared"));
    }

    let check_tuple = |pos: Pos, state: usize, action: &[Option<String>]| -> Result<(), LangError> {
        if action.len() != n {
            return Err(LangError::new(
                pos,
                format!("joint action has {} entries for {n} players", action.len()),
            ));
        }
        for (i, slot) in action.iter().enumerate() {
            if let Some(a) = slot {
                match owner.get(a.as_str()) {
                    None => {
                        return Err(LangError::new(pos, format!("undeclared action `{a}`")));
                    }
                    Some((p, _)) if *p != i => {
                        return Err(LangError::new(
                            pos,
                            format!(
                                "action `{a}` belongs to `{}`, not position {}",
                                spec.players[*p].name,
                                i + 1
                            ),
                        ));
                    }
                    _ => {}
                }
            }
        }
        if state >= num_states {
            return Err(LangError::new(pos, format!("dangling state index {state}")));
        }
        Ok(())
    };

    for t in &spec.transitions {
        check_tuple(t.pos, t.state, &t.action)?;
        let mut sum = 0.0;
        for &(p, target) in &t.branches {
            if target >= num_states {
                return Err(LangError::new(t.pos, format!("dangling state index {target}")));
            }
            if p < 0.0 {
                return Err(LangError::new(t.pos, "negative branch probability".to_string()));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > crate::DIST_TOLERANCE {
            return Err(LangError::new(
                t.pos,
                format!("distribution sums to {sum} at state {}", t.state),
            ));
        }
    }

    for r in &spec.rewards {
        match &r.target {
            RewardTarget::State { state } => {
                if *state >= num_states {
                    return Err(LangError::new(r.pos, format!("dangling state index {state}")));
                }
            }
            RewardTarget::Action { state, action } => check_tuple(r.pos, *state, action)?,
        }
    }
    Ok(())
}

fn fmt_tuple(action: &[Option<String>]) -> String {
    let parts: Vec<&str> = action
        .iter()
        .map(|a| a.as_deref().unwrap_or("-"))
        .collect();
    format!("({})", parts.join(","))
}

/// Canonical printer; `parse(print(parse(x))) == parse(x)`.
pub fn print_model(spec: &ModelSpec) -> String {
    let mut out = String::from("csg\n");
    let _ = writeln!(out, "players {}", spec.players.len());
    for p in &spec.players {
        let _ = writeln!(out, "player {} actions {}", p.name, p.actions.join(" "));
    }
    let mut states = spec.states.clone();
    states.sort_by_key(|s| s.id);
    for s in &states {
        let init = if s.init { " init" } else { "" };
        let _ = writeln!(out, "state {}{} labels {{{}}}", s.id, init, s.labels.join(","));
    }
    for t in &spec.transitions {
        let branches: Vec<String> = t
            .branches
            .iter()
            .map(|(p, s)| format!("{p}:{s}"))
            .collect();
        let _ = writeln!(
            out,
            "trans {} {} -> {}",
            t.state,
            fmt_tuple(&t.action),
            branches.join(" ")
        );
    }
    for r in &spec.rewards {
        match &r.target {
            RewardTarget::State { state } => {
                let _ = writeln!(out, "reward {} state {} = {}", r.name, state, r.value);
            }
            RewardTarget::Action { state, action } => {
                let _ = writeln!(
                    out,
                    "reward {} act {} {} = {}",
                    r.name,
                    state,
                    fmt_tuple(action),
                    r.value
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const RPS_SNIPPET: &str = "\
csg
players 2
player p1 actions r1 p1a s1 t1
player p2 actions r2 p2a s2 t2
state 0 init labels {}
state 1 labels {win1}
state 2 labels {win2}
state 3 labels {draw}
trans 0 (r1,r2) -> 1.0:3
trans 1 (t1,t2) -> 1.0:0
";

    #[test]
    fn parses_snippet() {
        let spec = parse_model(RPS_SNIPPET).unwrap();
        assert_eq!(spec.players.len(), 2);
        assert_eq!(spec.states.len(), 4);
        assert_eq!(spec.transitions.len(), 2);
        assert!(spec.states[0].init);
        assert_eq!(spec.states[1].labels, vec!["win1"]);
    }

    #[test]
    fn empty_players_rejected() {
        let err = parse_model("csg\nplayers 0\n").unwrap_err();
        assert!(err.message.contains("at least one player required"));
    }

    #[test]
    fn bad_distribution_names_state_and_sum() {
        let text = "\
csg
players 1
player p actions a
state 0 init labels {}
state 1 labels {}
state 2 labels {}
trans 2 (a) -> 0.5:0 0.4:1
";
        let err = parse_model(text).unwrap_err();
        assert!(err.message.contains("state 2"), "{}", err.message);
        assert!(err.message.contains("0.9"), "{}", err.message);
    }

    #[test]
    fn fractions_accepted() {
        let text = "\
csg
players 1
player p actions a
state 0 init labels {}
state 1 labels {}
trans 0 (a) -> 1/3:0 2/3:1
trans 1 (a) -> 1.0:1
";
        let spec = parse_model(text).unwrap();
        assert!((spec.transitions[0].branches[0].0 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_action_across_players_rejected() {
        let text = "\
csg
players 2
player p1 actions a
player p2 actions a
state 0 init labels {}
";
        let err = parse_model(text).unwrap_err();
        assert!(err.message.contains("declared by both"));
    }

    #[test]
    fn dangling_state_rejected() {
        let text = "\
csg
players 1
player p actions a
state 0 init labels {}
trans 0 (a) -> 1.0:7
";
        let err = parse_model(text).unwrap_err();
        assert!(err.message.contains("dangling state index 7"));
    }

    #[test]
    fn print_parse_roundtrip() {
        let spec = parse_model(RPS_SNIPPET).unwrap();
        let printed = print_model(&spec);
        let reparsed = parse_model(&printed).unwrap();
        assert_eq!(spec, reparsed);
        // And printing is a fixed point of parse-then-print.
        assert_eq!(printed, print_model(&reparsed));
    }
}
