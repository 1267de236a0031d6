//! Reach-avoid and expected-reward specifications.

use std::fmt;

use num_traits::{One, Signed, Zero};

use super::rational::{format_rational, parse_rational, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    Greater,
    GreaterEq,
    Less,
    LessEq,
}

impl Comparison {
    pub fn holds(self, value: &Rational, threshold: &Rational) -> bool {
        match self {
            Comparison::Greater => value > threshold,
            Comparison::GreaterEq => value >= threshold,
            Comparison::Less => value < threshold,
            Comparison::LessEq => value <= threshold,
        }
    }

    pub fn holds_f64(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Greater => value > threshold,
            Comparison::GreaterEq => value >= threshold,
            Comparison::Less => value < threshold,
            Comparison::LessEq => value <= threshold,
        }
    }

    /// True for `>` and `>=`: larger values are better.
    pub fn is_lower_bound(self) -> bool {
        matches!(self, Comparison::Greater | Comparison::GreaterEq)
    }

    fn symbol(self) -> &'static str {
        match self {
            Comparison::Greater => ">",
            Comparison::GreaterEq => ">=",
            Comparison::Less => "<",
            Comparison::LessEq => "<=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecKind {
    /// Probability to reach `goal` without visiting `bad`.
    ReachAvoid { bad: Option<String>, goal: String },
    /// Expected reward accumulated until `goal`.
    ExpectedReward { direction: Direction, goal: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Specification {
    pub kind: SpecKind,
    pub comparison: Comparison,
    pub threshold: Rational,
}

/// Exact value of a specification: probabilities are finite, rewards may diverge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Finite(Rational),
    Infinite,
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Finite(r) => super::rational::to_f64(r),
            Value::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Value::Finite(r) => Some(r),
            Value::Infinite => None,
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        Some(match (self, other) {
            (Value::Finite(a), Value::Finite(b)) => a.cmp(b),
            (Value::Finite(_), Value::Infinite) => Less,
            (Value::Infinite, Value::Finite(_)) => Greater,
            (Value::Infinite, Value::Infinite) => Equal,
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Finite(r) => write!(f, "{}", format_rational(r)),
            Value::Infinite => write!(f, "inf"),
        }
    }
}

impl Specification {
    pub fn goal(&self) -> &str {
        match &self.kind {
            SpecKind::ReachAvoid { goal, .. } | SpecKind::ExpectedReward { goal, .. } => goal,
        }
    }

    pub fn bad(&self) -> Option<&str> {
        match &self.kind {
            SpecKind::ReachAvoid { bad, .. } => bad.as_deref(),
            SpecKind::ExpectedReward { .. } => None,
        }
    }

    pub fn is_probability(&self) -> bool {
        matches!(self.kind, SpecKind::ReachAvoid { .. })
    }

    /// Whether larger values are preferred when searching for a witness.
    pub fn maximizing(&self) -> bool {
        self.comparison.is_lower_bound()
    }

    pub fn satisfied(&self, value: &Value) -> bool {
        match value {
            Value::Finite(v) => self.comparison.holds(v, &self.threshold),
            // Divergent reward exceeds every threshold.
            Value::Infinite => self.comparison.is_lower_bound(),
        }
    }

    pub fn satisfied_f64(&self, value: f64) -> bool {
        self.comparison.holds_f64(value, super::rational::to_f64(&self.threshold))
    }

    pub fn parse(text: &str) -> Result<Self> {
        // Columns are 1-based byte offsets into `text`; every slice below is a suffix of it.
        let col = |rest: &str| text.len() - rest.len() + 1;
        let err = |column: usize, message: &str| Error::Syntax { line: 1, column, message: message.to_string() };
        let body = text.trim_start();
        let (kind_tag, rest) = if let Some(r) = body.strip_prefix("Emin") {
            ("Emin", r)
        } else if let Some(r) = body.strip_prefix("Emax") {
            ("Emax", r)
        } else if let Some(r) = body.strip_prefix('P') {
            ("P", r)
        } else {
            return Err(err(col(body), "expected 'P', 'Emin' or 'Emax'"));
        };
        let (comparison, rest) = if let Some(r) = rest.strip_prefix(">=") {
            (Comparison::GreaterEq, r)
        } else if let Some(r) = rest.strip_prefix("<=") {
            (Comparison::LessEq, r)
        } else if let Some(r) = rest.strip_prefix('>') {
            (Comparison::Greater, r)
        } else if let Some(r) = rest.strip_prefix('<') {
            (Comparison::Less, r)
        } else {
            return Err(err(col(rest), "expected a comparison operator"));
        };
        let open = rest.find('[').ok_or_else(|| err(col(rest), "expected '[' after threshold"))?;
        let number = rest[..open].trim();
        let threshold = parse_rational(number)
            .ok_or_else(|| err(col(rest.trim_start()), &format!("invalid threshold '{number}'")))?;
        let bracket = &rest[open + 1..];
        let close = bracket.rfind(']').ok_or_else(|| err(col(bracket), "expected ']'"))?;
        if !bracket[close + 1..].trim().is_empty() {
            return Err(err(col(&bracket[close + 1..]), "trailing input after ']'"));
        }
        let inner: Vec<&str> = bracket[..close].split_whitespace().collect();
        let is_label = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        let kind = match (kind_tag, inner.as_slice()) {
            ("P", ["F", goal]) if is_label(goal) => SpecKind::ReachAvoid { bad: None, goal: goal.to_string() },
            ("P", [bad, "U", goal]) if bad.starts_with('!') && is_label(&bad[1..]) && is_label(goal) => {
                SpecKind::ReachAvoid { bad: Some(bad[1..].to_string()), goal: goal.to_string() }
            }
            ("Emin" | "Emax", ["F", goal]) if is_label(goal) => SpecKind::ExpectedReward {
                direction: if kind_tag == "Emin" { Direction::Min } else { Direction::Max },
                goal: goal.to_string(),
            },
            _ => {
                return Err(err(
                    col(bracket),
                    "expected '[!bad U goal]' or '[F goal]' (rewards accept only '[F goal]')",
                ))
            }
        };
        if matches!(kind, SpecKind::ReachAvoid { .. }) && (threshold.is_negative() || threshold >= Rational::one()) {
            return Err(Error::InvalidArgument(format!(
                "probability threshold {} must lie in [0, 1)",
                format_rational(&threshold)
            )));
        }
        if matches!(kind, SpecKind::ExpectedReward { .. }) && threshold < Rational::zero() {
            return Err(Error::InvalidArgument("reward threshold must be non-negative".into()));
        }
        Ok(Specification { kind, comparison, threshold })
    }
}

impl fmt::Display for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = format_rational(&self.threshold);
        let c = self.comparison.symbol();
        match &self.kind {
            SpecKind::ReachAvoid { bad: Some(b), goal } => write!(f, "P{c} {t} [!{b} U {goal}]"),
            SpecKind::ReachAvoid { bad: None, goal } => write!(f, "P{c} {t} [F {goal}]"),
            SpecKind::ExpectedReward { direction, goal } => {
                let d = if *direction == Direction::Min { "min" } else { "max" };
                write!(f, "E{d}{c} {t} [F {goal}]")
            }
        }
    }
}
