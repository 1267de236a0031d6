//! Parameter valuations and their application to pMCs.

use std::fmt;

use num_traits::{One, Signed, Zero};

use super::model::{Chain, FloatMc, Mc, Pmc};
use super::polynomial::{Polynomial, Var};
use super::rational::{format_rational, parse_rational, Rational};
use crate::error::{Error, Result};

/// Dense valuation indexed by parameter id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Instantiation {
    pub values: Vec<Rational>,
}

impl Instantiation {
    pub fn new(values: Vec<Rational>) -> Self {
        Instantiation { values }
    }

    pub fn empty() -> Self {
        Instantiation::default()
    }

    pub fn get(&self, v: Var) -> &Rational {
        &self.values[v.index()]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(super::rational::to_f64).collect()
    }

    /// Builds a valuation from `(name, value)` pairs; every name in `params`
    /// must be assigned.
    pub fn from_named(params: &[String], pairs: &[(String, Rational)]) -> Result<Self> {
        let mut values: Vec<Option<Rational>> = vec![None; params.len()];
        for (name, value) in pairs {
            let i = params
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown parameter '{name}'")))?;
            values[i] = Some(value.clone());
        }
        let mut out = Vec::with_capacity(params.len());
        for (i, v) in values.into_iter().enumerate() {
            out.push(v.ok_or_else(|| Error::MissingParameter(params[i].clone()))?);
        }
        Ok(Instantiation { values: out })
    }

    /// Parses lines `name = value`; `#` starts a comment.
    pub fn parse(text: &str, params: &[String]) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((name, value)) = line.split_once('=') else {
                return Err(Error::Syntax { line: i + 1, column: 1, message: "expected 'name = value'".into() });
            };
            let value_column = raw.find('=').map(|c| c + 2).unwrap_or(1);
            let value = parse_rational(value).ok_or_else(|| Error::Syntax {
                line: i + 1,
                column: value_column,
                message: format!("invalid number '{}'", value.trim()),
            })?;
            pairs.push((name.trim().to_string(), value));
        }
        Instantiation::from_named(params, &pairs)
    }

    pub fn write(&self, params: &[String]) -> String {
        let mut out = String::new();
        for (name, value) in params.iter().zip(&self.values) {
            out.push_str(&format!("{name} = {}\n", format_rational(value)));
        }
        out
    }
}

/// Exact evaluation; reports the first parameter without a value.
pub fn poly_eval(f: &Polynomial, u: &Instantiation, params: &[String]) -> Result<Rational> {
    if let Some(v) = f.vars().into_iter().find(|v| v.index() >= u.len()) {
        let name = params.get(v.index()).cloned().unwrap_or_else(|| format!("x{}", v.0));
        return Err(Error::MissingParameter(name));
    }
    Ok(f.eval(&u.values))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// A transition evaluates outside [0, 1].
    Entry { state: usize, target: usize, value: Rational },
    /// A row does not sum to 1.
    Row { state: usize, sum: Rational },
    /// A parameter lies outside [0, 1].
    Param { name: String, value: Rational },
    /// A group's remainder `1 - Σ members` is negative.
    Group { members: Vec<String>, remainder: Rational },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NotWellDefined {
    pub violations: Vec<Violation>,
}

impl fmt::Display for NotWellDefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| match v {
                Violation::Entry { state, target, value } => {
                    format!("transition {state} -> {target} has value {}", format_rational(value))
                }
                Violation::Row { state, sum } => format!("row {state} sums to {}", format_rational(sum)),
                Violation::Param { name, value } => format!("{name} = {} outside [0,1]", format_rational(value)),
                Violation::Group { members, remainder } => format!(
                    "remainder of {{{}}} is {}",
                    members.join(", "),
                    format_rational(remainder)
                ),
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// The three well-definedness predicates of an instantiation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WellDefinedness {
    pub well_defined: bool,
    pub graph_preserving: bool,
    pub eps_preserving: bool,
}

impl Pmc {
    fn violations(&self, u: &Instantiation) -> Vec<Violation> {
        let mut out = Vec::new();
        let one = Rational::one();
        for (i, value) in u.values.iter().enumerate() {
            if value.is_negative() || value > &one {
                out.push(Violation::Param { name: self.params[i].clone(), value: value.clone() });
            }
        }
        for g in &self.groups {
            let sum: Rational = g.iter().map(|v| u.get(*v)).sum();
            let remainder = &one - sum;
            if remainder.is_negative() {
                out.push(Violation::Group {
                    members: g.iter().map(|v| self.params[v.index()].clone()).collect(),
                    remainder,
                });
            }
        }
        for (s, row) in self.chain.transitions.iter().enumerate() {
            let mut sum = Rational::zero();
            for (t, f) in row {
                let value = f.eval(&u.values);
                if value.is_negative() || value > one {
                    out.push(Violation::Entry { state: s, target: *t, value: value.clone() });
                }
                sum += value;
            }
            if sum != one {
                out.push(Violation::Row { state: s, sum });
            }
        }
        out
    }

    /// Substitutes `u` exactly. Zero-valued transitions are dropped.
    pub fn apply(&self, u: &Instantiation) -> Result<Mc> {
        if u.len() < self.num_params() {
            return Err(Error::MissingParameter(self.params[u.len()].clone()));
        }
        let violations = self.violations(u);
        if !violations.is_empty() {
            return Err(Error::NotWellDefined(NotWellDefined { violations }));
        }
        Ok(self.apply_unchecked(u))
    }

    pub fn apply_unchecked(&self, u: &Instantiation) -> Mc {
        Chain {
            initial: self.chain.initial,
            transitions: self
                .chain
                .transitions
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|(t, f)| (*t, f.eval(&u.values)))
                        .filter(|(_, p)| !p.is_zero())
                        .collect()
                })
                .collect(),
            rewards: self.chain.rewards.iter().map(|r| r.eval(&u.values)).collect(),
            labels: self.chain.labels.clone(),
        }
    }

    /// Float substitution without checks; entries that evaluate to 0 are dropped.
    pub fn apply_f64(&self, u: &[f64]) -> FloatMc {
        Chain {
            initial: self.chain.initial,
            transitions: self
                .chain
                .transitions
                .iter()
                .map(|row| {
                    row.iter().map(|(t, f)| (*t, f.eval_f64(u))).filter(|(_, p)| *p != 0.0).collect()
                })
                .collect(),
            rewards: self.chain.rewards.iter().map(|r| r.eval_f64(u)).collect(),
            labels: self.chain.labels.clone(),
        }
    }

    /// Evaluates the well-definedness predicates. `eps` bounds every group
    /// coordinate including the remainder from below.
    pub fn check_well_defined(&self, u: &Instantiation, eps: &Rational) -> WellDefinedness {
        let well_defined = u.len() >= self.num_params() && self.violations(u).is_empty();
        let zero = Rational::zero();
        let one = Rational::one();
        let graph_preserving = self.chain.transitions.iter().flatten().all(|(_, f)| {
            if f.is_constant() {
                return true;
            }
            let v = f.eval(&u.values);
            v > zero && v < one
        });
        let eps_preserving = well_defined
            && self.all_groups().iter().all(|g| {
                let sum: Rational = g.iter().map(|v| u.get(*v)).sum();
                g.iter().all(|v| u.get(*v) >= eps) && &(&one - sum) >= eps
            });
        WellDefinedness { well_defined, graph_preserving, eps_preserving }
    }
}
