//! Line-oriented text formats for POMDPs and pMCs.
//!
//! ```text
//! pomdp                          pmc
//! states <N>                     states <N>
//! initial <id>                   initial <id>
//! observations <M>               params <name> ...
//! obs <state> <obs>              group <name> ...        (optional)
//! trans <s> <action> <s'> <p>    trans <s> <s'> <expr>
//! reward <s> <action> <r>        reward <s> <expr>       (optional)
//! label <name> <s> ...           label <name> <s> ...
//! ```
//! `#` starts a comment.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::expr::{parse_polynomial, table_lookup};
use super::model::{Chain, Labels, Pmc, Pomdp, PomdpBuilder};
use super::polynomial::{Polynomial, Var};
use super::rational::{format_rational, parse_rational, Rational};
use crate::error::{Error, Result};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

struct Line<'a> {
    number: usize,
    tokens: Vec<Token<'a>>,
    raw: &'a str,
}

fn lines(text: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start = None;
        for (pos, c) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
            if c.is_whitespace() {
                if let Some(s) = start.take() {
                    tokens.push(Token { text: &content[s..pos], column: s + 1 });
                }
            } else if start.is_none() {
                start = Some(pos);
            }
        }
        if !tokens.is_empty() {
            out.push(Line { number: i + 1, tokens, raw: content });
        }
    }
    out
}

fn syntax(line: &Line<'_>, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax { line: line.number, column, message: message.into() }
}

fn arity(line: &Line<'_>, min: usize, max: Option<usize>) -> Result<()> {
    let n = line.tokens.len() - 1;
    let ok = n >= min && max.is_none_or(|m| n <= m);
    if ok {
        Ok(())
    } else {
        let column = line.tokens.last().map(|t| t.column).unwrap_or(1);
        Err(syntax(line, column, format!("wrong number of arguments for '{}'", line.tokens[0].text)))
    }
}

fn number(line: &Line<'_>, idx: usize) -> Result<usize> {
    let t = &line.tokens[idx];
    t.text.parse::<usize>().map_err(|_| syntax(line, t.column, format!("expected a natural number, found '{}'", t.text)))
}

fn state(line: &Line<'_>, idx: usize, n: Option<usize>) -> Result<usize> {
    let Some(n) = n else {
        return Err(syntax(line, line.tokens[0].column, "'states' must precede this line"));
    };
    let s = number(line, idx)?;
    if s >= n {
        return Err(syntax(line, line.tokens[idx].column, format!("state {s} out of range (states {n})")));
    }
    Ok(s)
}

fn probability(line: &Line<'_>, idx: usize) -> Result<Rational> {
    let t = &line.tokens[idx];
    parse_rational(t.text).ok_or_else(|| syntax(line, t.column, format!("invalid number '{}'", t.text)))
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_action_label(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn header<'a>(ls: &'a [Line<'a>], keyword: &str) -> Result<&'a [Line<'a>]> {
    match ls.first() {
        Some(l) if l.tokens.len() == 1 && l.tokens[0].text == keyword => Ok(&ls[1..]),
        Some(l) => Err(syntax(l, 1, format!("expected header '{keyword}'"))),
        None => Err(Error::Syntax { line: 1, column: 1, message: format!("empty input, expected '{keyword}'") }),
    }
}

fn once(line: &Line<'_>, slot: &Option<usize>) -> Result<()> {
    if slot.is_some() {
        Err(syntax(line, 1, format!("duplicate '{}' line", line.tokens[0].text)))
    } else {
        Ok(())
    }
}

fn required(value: Option<usize>, what: &str) -> Result<usize> {
    value.ok_or_else(|| Error::semantic(format!("missing '{what}' line")))
}

pub fn parse_pomdp(text: &str) -> Result<Pomdp> {
    let all = lines(text);
    let body = header(&all, "pomdp")?;
    let mut n: Option<usize> = None;
    let mut initial: Option<usize> = None;
    let mut m: Option<usize> = None;
    let mut obs: Vec<Option<usize>> = Vec::new();
    let mut seen_trans: BTreeSet<(usize, String, usize)> = BTreeSet::new();
    let mut seen_reward: BTreeSet<(usize, String)> = BTreeSet::new();
    let mut trans: Vec<(usize, String, usize, Rational)> = Vec::new();
    let mut rewards: Vec<(usize, String, Rational)> = Vec::new();
    let mut labels: Vec<(usize, String, Vec<usize>)> = Vec::new();
    for line in body {
        match line.tokens[0].text {
            "states" => {
                arity(line, 1, Some(1))?;
                once(line, &n)?;
                let v = number(line, 1)?;
                if v == 0 {
                    return Err(syntax(line, line.tokens[1].column, "a model needs at least one state"));
                }
                n = Some(v);
                obs = vec![None; v];
            }
            "initial" => {
                arity(line, 1, Some(1))?;
                once(line, &initial)?;
                initial = Some(state(line, 1, n)?);
            }
            "observations" => {
                arity(line, 1, Some(1))?;
                once(line, &m)?;
                m = Some(number(line, 1)?);
            }
            "obs" => {
                arity(line, 2, Some(2))?;
                let s = state(line, 1, n)?;
                let z = number(line, 2)?;
                let Some(mm) = m else {
                    return Err(syntax(line, 1, "'observations' must precede 'obs' lines"));
                };
                if z >= mm {
                    return Err(syntax(line, line.tokens[2].column, format!("observation {z} out of range (observations {mm})")));
                }
                if obs[s].replace(z).is_some() {
                    return Err(syntax(line, line.tokens[1].column, format!("second observation for state {s}")));
                }
            }
            "trans" => {
                arity(line, 4, Some(4))?;
                let s = state(line, 1, n)?;
                let a = line.tokens[2].text;
                if !is_action_label(a) {
                    return Err(syntax(line, line.tokens[2].column, format!("invalid action label '{a}'")));
                }
                let t = state(line, 3, n)?;
                let p = probability(line, 4)?;
                if p <= Rational::zero() || p > Rational::from_integer(1.into()) {
                    return Err(syntax(line, line.tokens[4].column, "probability must lie in (0, 1]"));
                }
                if !seen_trans.insert((s, a.to_string(), t)) {
                    return Err(syntax(line, 1, format!("duplicate transition {s} {a} {t}")));
                }
                trans.push((s, a.to_string(), t, p));
            }
            "reward" => {
                arity(line, 3, Some(3))?;
                let s = state(line, 1, n)?;
                let a = line.tokens[2].text.to_string();
                let r = probability(line, 3)?;
                if r < Rational::zero() {
                    return Err(syntax(line, line.tokens[3].column, "rewards must be non-negative"));
                }
                if !seen_reward.insert((s, a.clone())) {
                    return Err(syntax(line, 1, format!("duplicate reward for {s} {a}")));
                }
                rewards.push((s, a, r));
            }
            "label" => {
                arity(line, 1, None)?;
                let name = line.tokens[1].text;
                if !is_identifier(name) {
                    return Err(syntax(line, line.tokens[1].column, format!("invalid label name '{name}'")));
                }
                let states = (2..line.tokens.len()).map(|i| state(line, i, n)).collect::<Result<Vec<_>>>()?;
                labels.push((line.number, name.to_string(), states));
            }
            other => return Err(syntax(line, 1, format!("unknown keyword '{other}'"))),
        }
    }
    let n = required(n, "states")?;
    let initial = required(initial, "initial")?;
    let m = required(m, "observations")?;
    let mut observation = Vec::with_capacity(n);
    for (s, z) in obs.iter().enumerate() {
        observation.push(z.ok_or_else(|| Error::semantic(format!("state {s} has no 'obs' line")))?);
    }
    let mut b = PomdpBuilder::new(observation, initial).num_observations(m);
    for (s, a, t, p) in trans {
        b.add_trans(s, &a, t, p);
    }
    for (s, a, r) in rewards {
        b.add_reward(s, &a, r);
    }
    let mut label_names = BTreeSet::new();
    for (line, name, states) in &labels {
        if !label_names.insert(name.clone()) {
            return Err(Error::semantic_at(*line, format!("label '{name}' defined twice")));
        }
        b = b.label(name, states);
    }
    b.build()
}

pub fn write_pomdp(m: &Pomdp) -> String {
    let mut out = String::from("pomdp\n");
    out.push_str(&format!("states {}\n", m.num_states()));
    out.push_str(&format!("initial {}\n", m.mdp.initial));
    out.push_str(&format!("observations {}\n", m.num_observations));
    for (s, z) in m.observation.iter().enumerate() {
        out.push_str(&format!("obs {s} {z}\n"));
    }
    for (s, choices) in m.mdp.choices.iter().enumerate() {
        for c in choices {
            for (t, p) in &c.successors {
                out.push_str(&format!("trans {s} {} {t} {}\n", m.mdp.actions[c.action], format_rational(p)));
            }
        }
    }
    for (s, choices) in m.mdp.choices.iter().enumerate() {
        for c in choices {
            if !c.reward.is_zero() {
                out.push_str(&format!("reward {s} {} {}\n", m.mdp.actions[c.action], format_rational(&c.reward)));
            }
        }
    }
    write_labels(&mut out, &m.mdp.labels);
    out
}

fn write_labels(out: &mut String, labels: &Labels) {
    for (name, states) in labels {
        out.push_str(&format!("label {name}"));
        for s in states {
            out.push_str(&format!(" {s}"));
        }
        out.push('\n');
    }
}

/// Everything after the first `skip` tokens of a line, as written.
fn rest_of_line<'a>(line: &Line<'a>, skip: usize) -> (&'a str, usize) {
    let start = line.tokens[skip].column - 1;
    (&line.raw[start..], start + 1)
}

pub fn parse_pmc(text: &str) -> Result<Pmc> {
    let all = lines(text);
    let body = header(&all, "pmc")?;
    let mut n: Option<usize> = None;
    let mut initial: Option<usize> = None;
    let mut params: Option<Vec<String>> = None;
    let mut groups: Vec<Vec<Var>> = Vec::new();
    let mut rows: Vec<BTreeMap<usize, Polynomial>> = Vec::new();
    let mut rewards: Vec<Option<Polynomial>> = Vec::new();
    let mut labels = Labels::new();
    for line in body {
        match line.tokens[0].text {
            "states" => {
                arity(line, 1, Some(1))?;
                once(line, &n)?;
                let v = number(line, 1)?;
                if v == 0 {
                    return Err(syntax(line, line.tokens[1].column, "a model needs at least one state"));
                }
                n = Some(v);
                rows = vec![BTreeMap::new(); v];
                rewards = vec![None; v];
            }
            "initial" => {
                arity(line, 1, Some(1))?;
                once(line, &initial)?;
                initial = Some(state(line, 1, n)?);
            }
            "params" => {
                if params.is_some() {
                    return Err(syntax(line, 1, "duplicate 'params' line"));
                }
                let mut names = Vec::new();
                for t in &line.tokens[1..] {
                    if !is_identifier(t.text) {
                        return Err(syntax(line, t.column, format!("invalid parameter name '{}'", t.text)));
                    }
                    if names.iter().any(|x| x == t.text) {
                        return Err(syntax(line, t.column, format!("duplicate parameter '{}'", t.text)));
                    }
                    names.push(t.text.to_string());
                }
                params = Some(names);
            }
            "group" => {
                arity(line, 1, None)?;
                let Some(names) = &params else {
                    return Err(syntax(line, 1, "'params' must precede 'group' lines"));
                };
                let mut g = Vec::new();
                for t in &line.tokens[1..] {
                    let v = names
                        .iter()
                        .position(|x| x == t.text)
                        .ok_or_else(|| syntax(line, t.column, format!("unknown parameter '{}'", t.text)))?;
                    if groups.iter().flatten().chain(g.iter()).any(|w: &Var| w.index() == v) {
                        return Err(syntax(line, t.column, format!("parameter '{}' already in a group", t.text)));
                    }
                    g.push(Var(v as u32));
                }
                groups.push(g);
            }
            "trans" => {
                arity(line, 3, None)?;
                let s = state(line, 1, n)?;
                let t = state(line, 2, n)?;
                let names = params.clone().unwrap_or_default();
                let (expr, offset) = rest_of_line(line, 3);
                let f = parse_polynomial(expr, &mut table_lookup(&names))
                    .map_err(|e| syntax(line, offset + e.column - 1, e.message))?;
                if rows[s].contains_key(&t) {
                    return Err(syntax(line, 1, format!("duplicate transition {s} {t}")));
                }
                if !f.is_zero() {
                    rows[s].insert(t, f);
                }
            }
            "reward" => {
                arity(line, 2, None)?;
                let s = state(line, 1, n)?;
                let names = params.clone().unwrap_or_default();
                let (expr, offset) = rest_of_line(line, 2);
                let f = parse_polynomial(expr, &mut table_lookup(&names))
                    .map_err(|e| syntax(line, offset + e.column - 1, e.message))?;
                if rewards[s].replace(f).is_some() {
                    return Err(syntax(line, 1, format!("duplicate reward for state {s}")));
                }
            }
            "label" => {
                arity(line, 1, None)?;
                let name = line.tokens[1].text;
                if !is_identifier(name) {
                    return Err(syntax(line, line.tokens[1].column, format!("invalid label name '{name}'")));
                }
                if labels.contains_key(name) {
                    return Err(syntax(line, line.tokens[1].column, format!("label '{name}' defined twice")));
                }
                let states = (2..line.tokens.len()).map(|i| state(line, i, n)).collect::<Result<BTreeSet<_>>>()?;
                labels.insert(name.to_string(), states);
            }
            other => return Err(syntax(line, 1, format!("unknown keyword '{other}'"))),
        }
    }
    let _n = required(n, "states")?;
    let initial = required(initial, "initial")?;
    let pmc = Pmc {
        chain: Chain {
            initial,
            transitions: rows.into_iter().map(|r| r.into_iter().collect()).collect(),
            rewards: rewards.into_iter().map(|r| r.unwrap_or_else(Polynomial::zero)).collect(),
            labels,
        },
        params: params.unwrap_or_default(),
        groups,
    };
    pmc.validate()?;
    Ok(pmc)
}

pub fn write_pmc(d: &Pmc) -> String {
    let mut out = String::from("pmc\n");
    out.push_str(&format!("states {}\n", d.num_states()));
    out.push_str(&format!("initial {}\n", d.chain.initial));
    out.push_str("params");
    for p in &d.params {
        out.push_str(&format!(" {p}"));
    }
    out.push('\n');
    for g in &d.groups {
        out.push_str("group");
        for v in g {
            out.push_str(&format!(" {}", d.params[v.index()]));
        }
        out.push('\n');
    }
    for (s, row) in d.chain.transitions.iter().enumerate() {
        for (t, f) in row {
            out.push_str(&format!("trans {s} {t} {}\n", f.display(&d.params)));
        }
    }
    for (s, r) in d.chain.rewards.iter().enumerate() {
        if !r.is_zero() {
            out.push_str(&format!("reward {s} {}\n", r.display(&d.params)));
        }
    }
    write_labels(&mut out, &d.chain.labels);
    out
}
