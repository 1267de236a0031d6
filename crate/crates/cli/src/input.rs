use std::path::Path;

use fscsynth::models::format::{parse_pmc, parse_pomdp};
use fscsynth::models::rational::{format_decimal, format_rational, parse_rational, Rational};
use fscsynth::models::{Pmc, Pomdp, Specification, Value};
use fscsynth::transforms::{build_induced, InducedOptions, InducedPmc};

use crate::manifest::sha256_hex;
use crate::{Context, InputError, ModelArgs};

pub enum Model {
    Pomdp(Pomdp),
    Pmc(Pmc),
}

/// Reads a file and records its hash.
pub fn read(ctx: &mut Context, path: &Path) -> Result<String, InputError> {
    let bytes = std::fs::read(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    ctx.inputs.push((path.display().to_string(), sha256_hex(&bytes)));
    String::from_utf8(bytes).map_err(|_| InputError(format!("{}: not UTF-8", path.display())))
}

pub fn load_model(ctx: &mut Context, path: &Path) -> Result<Model, InputError> {
    let text = read(ctx, path)?;
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .unwrap_or("");
    let located = |e: fscsynth::Error| InputError(format!("{}: {e}", path.display()));
    match first {
        "pomdp" => parse_pomdp(&text).map(Model::Pomdp).map_err(located),
        "pmc" => parse_pmc(&text).map(Model::Pmc).map_err(located),
        _ => Err(InputError(format!("{}: expected a 'pomdp' or 'pmc' header", path.display()))),
    }
}

/// The pMC to analyse, and how it was induced when the input is a POMDP.
pub struct Target {
    pub pmc: Pmc,
    pub induced: Option<(Pomdp, InducedPmc)>,
}

pub fn target(ctx: &mut Context, args: &ModelArgs) -> Result<Target, InputError> {
    match load_model(ctx, &args.model)? {
        Model::Pmc(pmc) => Ok(Target { pmc, induced: None }),
        Model::Pomdp(m) => {
            let opts = InducedOptions::new(args.memory as usize).topology(args.topology.into()).variant(args.variant());
            let d = build_induced(&m, &opts)?;
            Ok(Target { pmc: d.pmc.clone(), induced: Some((m, d)) })
        }
    }
}

pub fn spec(text: &str) -> Result<Specification, InputError> {
    Specification::parse(text).map_err(|e| InputError(format!("specification: {e}")))
}

pub fn rational(text: &str, what: &str) -> Result<Rational, InputError> {
    parse_rational(text).ok_or_else(|| InputError(format!("{what}: invalid number '{text}'")))
}

const DIGITS: usize = 12;

/// Decimal rendering without trailing zeros; `~` marks a rounded value.
pub fn decimal(r: &Rational) -> String {
    let text = format_decimal(r, DIGITS);
    let text = if text.contains('.') { text.trim_end_matches('0').trim_end_matches('.') } else { &text };
    let scale = parse_rational(&format!("1{}", "0".repeat(DIGITS))).expect("power of ten");
    if (r * scale).is_integer() {
        text.to_string()
    } else {
        format!("~{text}")
    }
}

/// Exact fraction and decimal, e.g. `13/20 (0.65)`.
pub fn show(r: &Rational) -> String {
    format!("{} ({})", format_rational(r), decimal(r))
}

pub fn show_value(v: &Value) -> String {
    match v {
        Value::Finite(r) => show(r),
        Value::Infinite => "inf".into(),
    }
}

pub fn value_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Finite(r) => serde_json::json!({ "exact": format_rational(r), "decimal": decimal(r) }),
        Value::Infinite => serde_json::json!("inf"),
    }
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<(), InputError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| InputError(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
