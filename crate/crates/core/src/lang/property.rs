//! Property grammar: abstract syntax, recursive-descent parser, canonical
//! printer, normalisation to core path operators, and validation against a
//! built game.
//!
//! ```text
//! <<rbt1>> Pmax=? [ !"crash" U<=10 "goal1" ]
//! <<p1,p2>> R{"steps"}max=? [ F "goal" ]
//! <<rbt1:rbt2>> max=? ( P[F "g1"] + P[F "g2"] )
//! <<p1:p2>> min<=5 ( R{"steps"}[F "g1"] + R{"steps"}[F "g2"] )
//! ```

use super::{LangError, Pos};
use crate::game::Csg;
use std::collections::BTreeSet;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Lt,
    Le,
    Ge,
    Gt,
}

impl Rel {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Rel::Lt => lhs < rhs,
            Rel::Le => lhs <= rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
        }
    }

    /// The relation used when the compared quantity is replaced by its
    /// complement (probability inversion).
    pub fn flipped(self) -> Rel {
        match self {
            Rel::Lt => Rel::Gt,
            Rel::Le => Rel::Ge,
            Rel::Ge => Rel::Le,
            Rel::Gt => Rel::Lt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

/// Query attached to a zero-sum operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZsQuery {
    MaxValue,
    MinValue,
    Threshold(Rel, f64),
}

/// Query attached to a nonzero-sum (equilibrium) operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NashQuery {
    Value,
    Threshold(Rel, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptDir {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    ZsProb {
        coalition: Vec<String>,
        query: ZsQuery,
        path: Box<PathFormula>,
    },
    ZsReward {
        coalition: Vec<String>,
        reward: String,
        query: ZsQuery,
        rho: Box<RewardFormula>,
    },
    Nash {
        coalition1: Vec<String>,
        coalition2: Vec<String>,
        opt: OptDir,
        query: NashQuery,
        obj1: Objective,
        obj2: Objective,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathFormula {
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    BoundedUntil(Box<Formula>, u64, Box<Formula>),
    Finally(Box<Formula>),
    BoundedFinally(Box<Formula>, u64),
    Globally(Box<Formula>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewardFormula {
    Instant(u64),
    Cumulative(u64),
    Reach(Box<Formula>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Prob(PathFormula),
    Reward(String, RewardFormula),
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    Number(f64),
    Int(u64),
    CoalOpen,  // <<
    CoalClose, // >>
    Colon,
    Comma,
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    And,
    Not,
    Plus,
    Rel(Rel),
    Eq,
    Question,
}

fn lex(text: &str) -> Result<Vec<(Pos, Tok)>, LangError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let pos = |line, col| Pos { line, col };
    while i < chars.len() {
        let c = chars[i];
        let p = pos(line, col);
        macro_rules! push {
            ($tok:expr, $len:expr) => {{
                out.push((p, $tok));
                i += $len;
                col += $len;
            }};
        }
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            _ if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '<' if chars.get(i + 1) == Some(&'<') => push!(Tok::CoalOpen, 2),
            '>' if chars.get(i + 1) == Some(&'>') => push!(Tok::CoalClose, 2),
            '<' if chars.get(i + 1) == Some(&'=') => push!(Tok::Rel(Rel::Le), 2),
            '>' if chars.get(i + 1) == Some(&'=') => push!(Tok::Rel(Rel::Ge), 2),
            '<' => push!(Tok::Rel(Rel::Lt), 1),
            '>' => push!(Tok::Rel(Rel::Gt), 1),
            ':' => push!(Tok::Colon, 1),
            ',' => push!(Tok::Comma, 1),
            '[' => push!(Tok::LBracket, 1),
            ']' => push!(Tok::RBracket, 1),
            '(' => push!(Tok::LParen, 1),
            ')' => push!(Tok::RParen, 1),
            '{' => push!(Tok::LBrace, 1),
            '}' => push!(Tok::RBrace, 1),
            '&' => push!(Tok::And, 1),
            '!' => push!(Tok::Not, 1),
            '+' => push!(Tok::Plus, 1),
            '=' => push!(Tok::Eq, 1),
            '?' => push!(Tok::Question, 1),
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' {
                    j += 1;
                }
                if j == chars.len() {
                    return Err(LangError::new(p, "unterminated string"));
                }
                let s: String = chars[start..j].iter().collect();
                let len = j - i + 1;
                push!(Tok::Quoted(s), len);
            }
            _ if c.is_ascii_digit() => {
                let mut j = i;
                let mut is_float = false;
                while j < chars.len()
                    && (chars[j].is_ascii_digit() || chars[j] == '.' || chars[j] == '/')
                {
                    if chars[j] == '.' || chars[j] == '/' {
                        is_float = true;
                    }
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let len = j - i;
                if is_float {
                    let v = if let Some((n, d)) = s.split_once('/') {
                        let n: f64 = n
                            .parse()
                            .map_err(|_| LangError::new(p, format!("bad number `{s}`")))?;
                        let d: f64 = d
                            .parse()
                            .map_err(|_| LangError::new(p, format!("bad number `{s}`")))?;
                        n / d
                    } else {
                        s.parse()
                            .map_err(|_| LangError::new(p, format!("bad number `{s}`")))?
                    };
                    push!(Tok::Number(v), len);
                } else {
                    let v: u64 = s
                        .parse()
                        .map_err(|_| LangError::new(p, format!("bad number `{s}`")))?;
                    push!(Tok::Int(v), len);
                }
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let len = j - i;
                push!(Tok::Ident(s), len);
            }
            other => return Err(LangError::new(p, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<(Pos, Tok)>,
    idx: usize,
}

impl Parser {
    fn pos(&self) -> Pos {
        self.toks
            .get(self.idx)
            .or_else(|| self.toks.last())
            .map_or(Pos { line: 1, col: 1 }, |t| t.0)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|t| &t.1)
    }

    fn next(&mut self, what: &str) -> Result<Tok, LangError> {
        match self.toks.get(self.idx) {
            Some((_, t)) => {
                self.idx += 1;
                Ok(t.clone())
            }
            None => Err(LangError::new(self.pos(), format!("expected {what}"))),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), LangError> {
        let p = self.pos();
        let got = self.next(what)?;
        if got == tok {
            Ok(())
        } else {
            Err(LangError::new(p, format!("expected {what}, found {got:?}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LangError> {
        let p = self.pos();
        match self.next(what)? {
            Tok::Ident(s) => Ok(s),
            other => Err(LangError::new(p, format!("expected {what}, found {other:?}"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, LangError> {
        let p = self.pos();
        match self.next(what)? {
            Tok::Number(v) => Ok(v),
            Tok::Int(v) => Ok(v as f64),
            other => Err(LangError::new(p, format!("expected {what}, found {other:?}"))),
        }
    }

    fn int(&mut self, what: &str) -> Result<u64, LangError> {
        let p = self.pos();
        match self.next(what)? {
            Tok::Int(v) => Ok(v),
            other => Err(LangError::new(p, format!("expected {what}, found {other:?}"))),
        }
    }

    // phi := conj
    fn formula(&mut self) -> Result<Formula, LangError> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::And) {
            let rhs = self.unary()?;
            lhs = Formula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LangError> {
        if self.eat(&Tok::Not) {
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        self.atom_formula()
    }

    fn atom_formula(&mut self) -> Result<Formula, LangError> {
        let p = self.pos();
        match self.next("state formula")? {
            Tok::Ident(s) if s == "true" => Ok(Formula::True),
            Tok::Quoted(a) => Ok(Formula::Atom(a)),
            Tok::LParen => {
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::CoalOpen => self.game_formula(),
            other => Err(LangError::new(
                p,
                format!("expected state formula, found {other:?}"),
            )),
        }
    }

    fn coalition(&mut self) -> Result<Vec<String>, LangError> {
        let mut players = vec![self.ident("player name")?];
        while self.eat(&Tok::Comma) {
            players.push(self.ident("player name")?);
        }
        Ok(players)
    }

    // Called after `<<` was consumed.
    fn game_formula(&mut self) -> Result<Formula, LangError> {
        let c1 = self.coalition()?;
        if self.eat(&Tok::Colon) {
            let c2 = self.coalition()?;
            self.expect(Tok::CoalClose, "`>>`")?;
            return self.nash_tail(c1, c2);
        }
        self.expect(Tok::CoalClose, "`>>`")?;
        let p = self.pos();
        let head = self.ident("`P` or `R`")?;
        match head.as_str() {
            "P" | "Pmax" | "Pmin" => {
                let query = self.zs_query(&head)?;
                if let ZsQuery::Threshold(_, q) = query {
                    if !(0.0..=1.0).contains(&q) {
                        return Err(LangError::new(p, format!("probability threshold {q} not in [0,1]")));
                    }
                }
                self.expect(Tok::LBracket, "`[`")?;
                let path = self.path_formula()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Formula::ZsProb {
                    coalition: c1,
                    query,
                    path: Box::new(path),
                })
            }
            "R" => {
                self.expect(Tok::LBrace, "`{`")?;
                let name = match self.next("reward name")? {
                    Tok::Quoted(s) => s,
                    other => {
                        return Err(LangError::new(p, format!("expected reward name, found {other:?}")))
                    }
                };
                self.expect(Tok::RBrace, "`}`")?;
                let qp = self.pos();
                let query = match self.peek() {
                    Some(Tok::Ident(s)) if s == "max" || s == "min" => {
                        let dir = self.ident("query")?;
                        self.expect(Tok::Eq, "`=?`")?;
                        self.expect(Tok::Question, "`=?`")?;
                        if dir == "max" {
                            ZsQuery::MaxValue
                        } else {
                            ZsQuery::MinValue
                        }
                    }
                    Some(Tok::Rel(_)) => {
                        let Tok::Rel(r) = self.next("relation")? else {
                            unreachable!()
                        };
                        ZsQuery::Threshold(r, self.number("threshold")?)
                    }
                    other => {
                        return Err(LangError::new(
                            qp,
                            format!("expected reward query, found {other:?}"),
                        ))
                    }
                };
                self.expect(Tok::LBracket, "`[`")?;
                let rho = self.reward_formula()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Formula::ZsReward {
                    coalition: c1,
                    reward: name,
                    query,
                    rho: Box::new(rho),
                })
            }
            other => Err(LangError::new(p, format!("expected `P` or `R`, found `{other}`"))),
        }
    }

    fn zs_query(&mut self, head: &str) -> Result<ZsQuery, LangError> {
        match head {
            "Pmax" => {
                self.expect(Tok::Eq, "`=?`")?;
                self.expect(Tok::Question, "`=?`")?;
                Ok(ZsQuery::MaxValue)
            }
            "Pmin" => {
                self.expect(Tok::Eq, "`=?`")?;
                self.expect(Tok::Question, "`=?`")?;
                Ok(ZsQuery::MinValue)
            }
            _ => {
                let p = self.pos();
                match self.next("relation")? {
                    Tok::Rel(r) => Ok(ZsQuery::Threshold(r, self.number("threshold")?)),
                    other => Err(LangError::new(p, format!("expected relation, found {other:?}"))),
                }
            }
        }
    }

    fn nash_tail(&mut self, c1: Vec<String>, c2: Vec<String>) -> Result<Formula, LangError> {
        let p = self.pos();
        let dir = self.ident("`max` or `min`")?;
        let opt = match dir.as_str() {
            "max" => OptDir::Max,
            "min" => OptDir::Min,
            other => return Err(LangError::new(p, format!("expected `max` or `min`, found `{other}`"))),
        };
        let query = if self.eat(&Tok::Eq) {
            self.expect(Tok::Question, "`=?`")?;
            NashQuery::Value
        } else {
            let p = self.pos();
            match self.next("relation")? {
                Tok::Rel(r) => NashQuery::Threshold(r, self.number("threshold")?),
                other => return Err(LangError::new(p, format!("expected relation, found {other:?}"))),
            }
        };
        self.expect(Tok::LParen, "`(`")?;
        let obj1 = self.objective()?;
        self.expect(Tok::Plus, "`+`")?;
        let obj2 = self.objective()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(Formula::Nash {
            coalition1: c1,
            coalition2: c2,
            opt,
            query,
            obj1,
            obj2,
        })
    }

    fn objective(&mut self) -> Result<Objective, LangError> {
        let p = self.pos();
        let head = self.ident("`P` or `R`")?;
        match head.as_str() {
            "P" => {
                self.expect(Tok::LBracket, "`[`")?;
                let path = self.path_formula()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Objective::Prob(path))
            }
            "R" => {
                self.expect(Tok::LBrace, "`{`")?;
                let name = match self.next("reward name")? {
                    Tok::Quoted(s) => s,
                    other => {
                        return Err(LangError::new(p, format!("expected reward name, found {other:?}")))
                    }
                };
                self.expect(Tok::RBrace, "`}`")?;
                self.expect(Tok::LBracket, "`[`")?;
                let rho = self.reward_formula()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Objective::Reward(name, rho))
            }
            other => Err(LangError::new(p, format!("expected `P` or `R`, found `{other}`"))),
        }
    }

    fn path_formula(&mut self) -> Result<PathFormula, LangError> {
        // Prefix operators first.
        if let Some(Tok::Ident(s)) = self.peek() {
            match s.as_str() {
                "X" => {
                    self.idx += 1;
                    return Ok(PathFormula::Next(Box::new(self.formula()?)));
                }
                "F" => {
                    self.idx += 1;
                    if let Some(Tok::Rel(Rel::Le)) = self.peek() {
                        self.idx += 1;
                        let k = self.int("step bound")?;
                        return Ok(PathFormula::BoundedFinally(Box::new(self.formula()?), k));
                    }
                    return Ok(PathFormula::Finally(Box::new(self.formula()?)));
                }
                "G" => {
                    self.idx += 1;
                    return Ok(PathFormula::Globally(Box::new(self.formula()?)));
                }
                _ => {}
            }
        }
        // phi U phi / phi U<=k phi
        let lhs = self.formula()?;
        let p = self.pos();
        let u = self.ident("`U`")?;
        if u != "U" {
            return Err(LangError::new(p, format!("expected `U`, found `{u}`")));
        }
        if let Some(Tok::Rel(Rel::Le)) = self.peek() {
            self.idx += 1;
            let k = self.int("step bound")?;
            let rhs = self.formula()?;
            return Ok(PathFormula::BoundedUntil(Box::new(lhs), k, Box::new(rhs)));
        }
        let rhs = self.formula()?;
        Ok(PathFormula::Until(Box::new(lhs), Box::new(rhs)))
    }

    fn reward_formula(&mut self) -> Result<RewardFormula, LangError> {
        let p = self.pos();
        let head = self.ident("reward formula")?;
        match head.as_str() {
            "I" => {
                self.expect(Tok::Eq, "`=`")?;
                Ok(RewardFormula::Instant(self.int("step bound")?))
            }
            "C" => {
                let p = self.pos();
                match self.next("`<=`")? {
                    Tok::Rel(Rel::Le) => {}
                    other => return Err(LangError::new(p, format!("expected `<=`, found {other:?}"))),
                }
                Ok(RewardFormula::Cumulative(self.int("step bound")?))
            }
            "F" => Ok(RewardFormula::Reach(Box::new(self.formula()?))),
            other => Err(LangError::new(
                p,
                format!("expected `I`, `C` or `F`, found `{other}`"),
            )),
        }
    }
}

/// Parse a property.
pub fn parse_property(text: &str) -> Result<Formula, LangError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, idx: 0 };
    let f = p.formula()?;
    if p.idx < p.toks.len() {
        return Err(LangError::new(
            p.pos(),
            format!("unexpected trailing input {:?}", p.peek().unwrap()),
        ));
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// Printer

fn fmt_number(v: f64) -> String {
    format!("{v}")
}

fn print_state(f: &Formula, out: &mut String) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::Atom(a) => {
            let _ = write!(out, "\"{a}\"");
        }
        Formula::Not(inner) => {
            out.push('!');
            if matches!(**inner, Formula::And(..)) {
                out.push('(');
                print_state(inner, out);
                out.push(')');
            } else {
                print_state(inner, out);
            }
        }
        Formula::And(a, b) => {
            print_state(a, out);
            out.push_str(" & ");
            print_state(b, out);
        }
        Formula::ZsProb {
            coalition,
            query,
            path,
        } => {
            let _ = write!(out, "<<{}>> ", coalition.join(","));
            match query {
                ZsQuery::MaxValue => out.push_str("Pmax=?"),
                ZsQuery::MinValue => out.push_str("Pmin=?"),
                ZsQuery::Threshold(r, x) => {
                    let _ = write!(out, "P{}{}", r.symbol(), fmt_number(*x));
                }
            }
            out.push_str(" [ ");
            print_path(path, out);
            out.push_str(" ]");
        }
        Formula::ZsReward {
            coalition,
            reward,
            query,
            rho,
        } => {
            let _ = write!(out, "<<{}>> R{{\"{reward}\"}}", coalition.join(","));
            match query {
                ZsQuery::MaxValue => out.push_str("max=?"),
                ZsQuery::MinValue => out.push_str("min=?"),
                ZsQuery::Threshold(r, x) => {
                    let _ = write!(out, "{}{}", r.symbol(), fmt_number(*x));
                }
            }
            out.push_str(" [ ");
            print_reward(rho, out);
            out.push_str(" ]");
        }
        Formula::Nash {
            coalition1,
            coalition2,
            opt,
            query,
            obj1,
            obj2,
        } => {
            let _ = write!(out, "<<{}:{}>> ", coalition1.join(","), coalition2.join(","));
            out.push_str(match opt {
                OptDir::Max => "max",
                OptDir::Min => "min",
            });
            match query {
                NashQuery::Value => out.push_str("=?"),
                NashQuery::Threshold(r, x) => {
                    let _ = write!(out, "{}{}", r.symbol(), fmt_number(*x));
                }
            }
            out.push_str(" ( ");
            print_objective(obj1, out);
            out.push_str(" + ");
            print_objective(obj2, out);
            out.push_str(" )");
        }
    }
}

fn print_operand(f: &Formula, out: &mut String) {
    if matches!(f, Formula::And(..)) {
        out.push('(');
        print_state(f, out);
        out.push(')');
    } else {
        print_state(f, out);
    }
}

fn print_path(p: &PathFormula, out: &mut String) {
    match p {
        PathFormula::Next(f) => {
            out.push_str("X ");
            print_operand(f, out);
        }
        PathFormula::Until(a, b) => {
            print_operand(a, out);
            out.push_str(" U ");
            print_operand(b, out);
        }
        PathFormula::BoundedUntil(a, k, b) => {
            print_operand(a, out);
            let _ = write!(out, " U<={k} ");
            print_operand(b, out);
        }
        PathFormula::Finally(f) => {
            out.push_str("F ");
            print_operand(f, out);
        }
        PathFormula::BoundedFinally(f, k) => {
            let _ = write!(out, "F<={k} ");
            print_operand(f, out);
        }
        PathFormula::Globally(f) => {
            out.push_str("G ");
            print_operand(f, out);
        }
    }
}

fn print_reward(r: &RewardFormula, out: &mut String) {
    match r {
        RewardFormula::Instant(k) => {
            let _ = write!(out, "I={k}");
        }
        RewardFormula::Cumulative(k) => {
            let _ = write!(out, "C<={k}");
        }
        RewardFormula::Reach(f) => {
            out.push_str("F ");
            print_operand(f, out);
        }
    }
}

fn print_objective(o: &Objective, out: &mut String) {
    match o {
        Objective::Prob(p) => {
            out.push_str("P[");
            print_path(p, out);
            out.push(']');
        }
        Objective::Reward(name, r) => {
            let _ = write!(out, "R{{\"{name}\"}}[");
            print_reward(r, out);
            out.push(']');
        }
    }
}

/// Canonical rendering of a formula.
pub fn print_property(f: &Formula) -> String {
    let mut out = String::new();
    print_state(f, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Normalisation

/// Rewrite a formula so that path operators are only `X`, `U` and `U<=k`:
/// `F` becomes `true U`, and `G` is removed through the probability
/// inversion equivalences. Numerical queries over `G` have no inversion
/// target and are reported as unsupported.
pub fn normalize(f: &Formula) -> Result<Formula, LangError> {
    let err = |msg: &str| LangError::new(Pos { line: 1, col: 1 }, msg.to_string());
    Ok(match f {
        Formula::True => Formula::True,
        Formula::Atom(a) => Formula::Atom(a.clone()),
        Formula::Not(inner) => Formula::Not(Box::new(normalize(inner)?)),
        Formula::And(a, b) => Formula::And(Box::new(normalize(a)?), Box::new(normalize(b)?)),
        Formula::ZsProb {
            coalition,
            query,
            path,
        } => match &**path {
            PathFormula::Globally(inner) => {
                let inner = normalize(inner)?;
                let negated = PathFormula::Until(
                    Box::new(Formula::True),
                    Box::new(Formula::Not(Box::new(inner))),
                );
                let query = match query {
                    ZsQuery::Threshold(r, q) => ZsQuery::Threshold(r.flipped(), 1.0 - q),
                    _ => {
                        return Err(err(
                            "`G` is unsupported in a numerical query: no inversion target",
                        ))
                    }
                };
                Formula::ZsProb {
                    coalition: coalition.clone(),
                    query,
                    path: Box::new(negated),
                }
            }
            other => Formula::ZsProb {
                coalition: coalition.clone(),
                query: *query,
                path: Box::new(normalize_path(other)?),
            },
        },
        Formula::ZsReward {
            coalition,
            reward,
            query,
            rho,
        } => Formula::ZsReward {
            coalition: coalition.clone(),
            reward: reward.clone(),
            query: *query,
            rho: Box::new(normalize_reward(rho)?),
        },
        Formula::Nash {
            coalition1,
            coalition2,
            opt,
            query,
            obj1,
            obj2,
        } => {
            let g1 = matches!(obj1, Objective::Prob(PathFormula::Globally(_)));
            let g2 = matches!(obj2, Objective::Prob(PathFormula::Globally(_)));
            if g1 != g2 {
                return Err(err(
                    "`G` in an equilibrium objective requires both objectives to be `G`",
                ));
            }
            if g1 {
                // <<C:C'>> max~x (P[G a] + P[G b])
                //   == <<C:C'>> min~'(2-x) (P[F !a] + P[F !b]), and dually.
                let NashQuery::Threshold(r, x) = query else {
                    return Err(err(
                        "`G` is unsupported in a numerical equilibrium query: no inversion target",
                    ));
                };
                let negate = |o: &Objective| -> Result<Objective, LangError> {
                    let Objective::Prob(PathFormula::Globally(inner)) = o else {
                        unreachable!()
                    };
                    Ok(Objective::Prob(PathFormula::Until(
                        Box::new(Formula::True),
                        Box::new(Formula::Not(Box::new(normalize(inner)?))),
                    )))
                };
                return Ok(Formula::Nash {
                    coalition1: coalition1.clone(),
                    coalition2: coalition2.clone(),
                    opt: match opt {
                        OptDir::Max => OptDir::Min,
                        OptDir::Min => OptDir::Max,
                    },
                    query: NashQuery::Threshold(r.flipped(), 2.0 - x),
                    obj1: negate(obj1)?,
                    obj2: negate(obj2)?,
                });
            }
            Formula::Nash {
                coalition1: coalition1.clone(),
                coalition2: coalition2.clone(),
                opt: *opt,
                query: *query,
                obj1: normalize_objective(obj1)?,
                obj2: normalize_objective(obj2)?,
            }
        }
    })
}

fn normalize_path(p: &PathFormula) -> Result<PathFormula, LangError> {
    Ok(match p {
        PathFormula::Next(f) => PathFormula::Next(Box::new(normalize(f)?)),
        PathFormula::Until(a, b) => {
            PathFormula::Until(Box::new(normalize(a)?), Box::new(normalize(b)?))
        }
        PathFormula::BoundedUntil(a, k, b) => {
            PathFormula::BoundedUntil(Box::new(normalize(a)?), *k, Box::new(normalize(b)?))
        }
        PathFormula::Finally(f) => {
            PathFormula::Until(Box::new(Formula::True), Box::new(normalize(f)?))
        }
        PathFormula::BoundedFinally(f, k) => {
            PathFormula::BoundedUntil(Box::new(Formula::True), *k, Box::new(normalize(f)?))
        }
        PathFormula::Globally(_) => {
            return Err(LangError::new(
                Pos { line: 1, col: 1 },
                "`G` must be eliminated at the enclosing operator".to_string(),
            ))
        }
    })
}

fn normalize_reward(r: &RewardFormula) -> Result<RewardFormula, LangError> {
    Ok(match r {
        RewardFormula::Instant(k) => RewardFormula::Instant(*k),
        RewardFormula::Cumulative(k) => RewardFormula::Cumulative(*k),
        RewardFormula::Reach(f) => RewardFormula::Reach(Box::new(normalize(f)?)),
    })
}

fn normalize_objective(o: &Objective) -> Result<Objective, LangError> {
    Ok(match o {
        Objective::Prob(p) => Objective::Prob(normalize_path(p)?),
        Objective::Reward(name, r) => Objective::Reward(name.clone(), normalize_reward(r)?),
    })
}

// ---------------------------------------------------------------------------
// Validation

/// Check a formula against a built game: atoms must label some state,
/// reward names must resolve, coalitions must name declared players, nash
/// coalitions must partition the player set, and numerical queries may
/// only appear at the root.
pub fn validate(game: &Csg, f: &Formula) -> Result<(), LangError> {
    validate_inner(game, f, true)
}

fn validate_inner(game: &Csg, f: &Formula, at_root: bool) -> Result<(), LangError> {
    let err = |msg: String| LangError::new(Pos { line: 1, col: 1 }, msg);
    let check_coalition = |coalition: &[String]| -> Result<(), LangError> {
        let mut seen = BTreeSet::new();
        for p in coalition {
            if !game.players.iter().any(|pl| &pl.name == p) {
                return Err(err(format!("unknown player `{p}`")));
            }
            if !seen.insert(p.clone()) {
                return Err(err(format!("player `{p}` listed twice in coalition")));
            }
        }
        Ok(())
    };
    match f {
        Formula::True => Ok(()),
        Formula::Atom(a) => {
            if game.atoms.contains(a) {
                Ok(())
            } else {
                Err(err(format!("unknown atom \"{a}\"")))
            }
        }
        Formula::Not(inner) => validate_inner(game, inner, false),
        Formula::And(a, b) => {
            validate_inner(game, a, false)?;
            validate_inner(game, b, false)
        }
        Formula::ZsProb {
            coalition,
            query,
            path,
        } => {
            check_coalition(coalition)?;
            if !at_root && matches!(query, ZsQuery::MaxValue | ZsQuery::MinValue) {
                return Err(err("numerical query not allowed in a nested formula".into()));
            }
            validate_path(game, path)
        }
        Formula::ZsReward {
            coalition,
            reward,
            query,
            rho,
        } => {
            check_coalition(coalition)?;
            if !game.rewards.contains_key(reward) {
                return Err(err(format!("unknown reward structure \"{reward}\"")));
            }
            if !at_root && matches!(query, ZsQuery::MaxValue | ZsQuery::MinValue) {
                return Err(err("numerical query not allowed in a nested formula".into()));
            }
            validate_rho(game, rho)
        }
        Formula::Nash {
            coalition1,
            coalition2,
            query,
            obj1,
            obj2,
            ..
        } => {
            check_coalition(coalition1)?;
            check_coalition(coalition2)?;
            let mut union: BTreeSet<&str> = BTreeSet::new();
            for p in coalition1.iter().chain(coalition2) {
                if !union.insert(p) {
                    return Err(err(format!("coalitions overlap on `{p}`")));
                }
            }
            if union.len() != game.players.len() {
                return Err(err("equilibrium coalitions must partition the player set".into()));
            }
            if !at_root && matches!(query, NashQuery::Value) {
                return Err(err("numerical query not allowed in a nested formula".into()));
            }
            for o in [obj1, obj2] {
                match o {
                    Objective::Prob(p) => validate_path(game, p)?,
                    Objective::Reward(name, r) => {
                        if !game.rewards.contains_key(name) {
                            return Err(err(format!("unknown reward structure \"{name}\"")));
                        }
                        validate_rho(game, r)?;
                    }
                }
            }
            Ok(())
        }
    }
}

fn validate_path(game: &Csg, p: &PathFormula) -> Result<(), LangError> {
    match p {
        PathFormula::Next(f)
        | PathFormula::Finally(f)
        | PathFormula::BoundedFinally(f, _)
        | PathFormula::Globally(f) => validate_inner(game, f, false),
        PathFormula::Until(a, b) | PathFormula::BoundedUntil(a, _, b) => {
            validate_inner(game, a, false)?;
            validate_inner(game, b, false)
        }
    }
}

fn validate_rho(game: &Csg, r: &RewardFormula) -> Result<(), LangError> {
    match r {
        RewardFormula::Instant(_) | RewardFormula::Cumulative(_) => Ok(()),
        RewardFormula::Reach(f) => validate_inner(game, f, false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bounded_until_query() {
        let f = parse_property(r#"<<rbt1>> Pmax=? [ !"crash" U<=10 "goal1" ]"#).unwrap();
        let Formula::ZsProb { coalition, query, path } = &f else {
            panic!("expected zero-sum P node");
        };
        assert_eq!(coalition, &vec!["rbt1".to_string()]);
        assert_eq!(*query, ZsQuery::MaxValue);
        assert!(matches!(**path, PathFormula::BoundedUntil(_, 10, _)));
    }

    #[test]
    fn parses_nash_value_query() {
        let f = parse_property(r#"<<rbt1:rbt2>> max=? ( P[F "g1"] + P[F "g2"] )"#).unwrap();
        let Formula::Nash { opt, query, obj1, .. } = &f else {
            panic!("expected nash node");
        };
        assert_eq!(*opt, OptDir::Max);
        assert_eq!(*query, NashQuery::Value);
        assert!(matches!(obj1, Objective::Prob(PathFormula::Finally(_))));
    }

    #[test]
    fn parses_nash_reward_threshold() {
        let f =
            parse_property(r#"<<p1:p2>> min<=5 ( R{"steps"}[F "g1"] + R{"steps"}[F "g2"] )"#)
                .unwrap();
        let Formula::Nash { opt, query, obj2, .. } = &f else {
            panic!("expected nash node");
        };
        assert_eq!(*opt, OptDir::Min);
        assert_eq!(*query, NashQuery::Threshold(Rel::Le, 5.0));
        assert!(matches!(obj2, Objective::Reward(name, RewardFormula::Reach(_)) if name == "steps"));
    }

    #[test]
    fn normalize_globally_inverts_threshold() {
        let f = parse_property(r#"<<p1>> P>=0.9 [ G "safe" ]"#).unwrap();
        let n = normalize(&f).unwrap();
        let Formula::ZsProb { query, path, .. } = &n else {
            panic!()
        };
        let ZsQuery::Threshold(rel, q) = query else {
            panic!()
        };
        assert_eq!(*rel, Rel::Le);
        assert!((q - 0.1).abs() < 1e-12);
        let PathFormula::Until(lhs, rhs) = &**path else {
            panic!("expected until, got {path:?}")
        };
        assert_eq!(**lhs, Formula::True);
        assert!(matches!(&**rhs, Formula::Not(inner) if matches!(**inner, Formula::Atom(_))));
    }

    #[test]
    fn normalize_finally_to_until() {
        let f = parse_property(r#"<<p1>> Pmax=? [ F "a" ]"#).unwrap();
        let n = normalize(&f).unwrap();
        let Formula::ZsProb { path, .. } = &n else { panic!() };
        match &**path {
            PathFormula::Until(a, b) => {
                assert_eq!(**a, Formula::True);
                assert!(matches!(**b, Formula::Atom(_)));
            }
            other => panic!("expected until, got {other:?}"),
        }
    }

    #[test]
    fn normalize_nash_globally_pair() {
        let f = parse_property(r#"<<p1:p2>> max>=0.8 ( P[G "a"] + P[G "b"] )"#).unwrap();
        let n = normalize(&f).unwrap();
        let Formula::Nash { opt, query, obj1, .. } = &n else {
            panic!()
        };
        assert_eq!(*opt, OptDir::Min);
        let NashQuery::Threshold(rel, x) = query else { panic!() };
        assert_eq!(*rel, Rel::Le);
        assert!((x - 1.2).abs() < 1e-12);
        assert!(matches!(obj1, Objective::Prob(PathFormula::Until(..))));
    }

    #[test]
    fn globally_in_numeric_query_unsupported() {
        let f = parse_property(r#"<<p1>> Pmax=? [ G "safe" ]"#).unwrap();
        let err = normalize(&f).unwrap_err();
        assert!(err.message.contains("unsupported"));
    }

    #[test]
    fn print_parse_roundtrip() {
        let cases = [
            r#"<<rbt1>> Pmax=? [ !"crash" U<=10 "goal1" ]"#,
            r#"<<rbt1:rbt2>> max=? ( P[F "g1"] + P[F "g2"] )"#,
            r#"<<p1:p2>> min<=5 ( R{"steps"}[F "g1"] + R{"steps"}[F "g2"] )"#,
            r#"<<p1,p2>> R{"r"}max=? [ F "a" ]"#,
            r#"<<p1>> P>=0.5 [ "a" U "b" & !"c" ]"#,
            r#"<<p1>> Pmin=? [ X <<p2>> P>=0.5 [ F "a" ] ]"#,
        ];
        for case in cases {
            let f = parse_property(case).unwrap();
            let printed = print_property(&f);
            let reparsed = parse_property(&printed).unwrap();
            assert_eq!(f, reparsed, "case `{case}` printed as `{printed}`");
            assert_eq!(printed, print_property(&reparsed));
        }
    }

    #[test]
    fn threshold_out_of_range_rejected() {
        let err = parse_property(r#"<<p1>> P>=1.5 [ F "a" ]"#).unwrap_err();
        assert!(err.message.contains("not in [0,1]"));
    }
}
