use std::path::{Path, PathBuf};
use std::time::Duration;

use fscsynth::analysis::{check_mc, check_mc_f64, closed_form, prove_absence, region_bounds, AbsenceResult, Bounds, Region};
use fscsynth::fsc::{fsc_from_instantiation, induced_mc, Fsc, Topology};
use fscsynth::models::format::{write_pmc, write_pomdp};
use fscsynth::models::rational::int;
use fscsynth::models::Instantiation;
use fscsynth::synthesis::{brute_force_oracle, find_permissive, gap, pso_search, SearchConfig};
use fscsynth::transforms::{
    build_induced, insert_intermediate_states, make_binary, make_simple, pmc_to_pomdp, unfold, InducedOptions,
    InducedPmc, Provenance, Role, Variant,
};
use serde_json::json;

use crate::input::{load_model, rational, read, show_value, spec, target, value_json, write_output, Model, Target};
use crate::{
    CheckArgs, ClosedFormArgs, Command, Context, Emit, InputError, Method, Outcome, PermissiveArgs,
    ProveArgs, SearchArgs, SynthesizeArgs, TransformArgs,
};

type CmdResult = Result<Outcome, InputError>;

pub fn run(command: &Command, ctx: &mut Context) -> CmdResult {
    match command {
        Command::Transform(a) => transform(a, ctx),
        Command::Check(a) => check(a, ctx),
        Command::Synthesize(a) => synthesize(a, ctx),
        Command::ClosedForm(a) => closed_form_cmd(a, ctx),
        Command::Prove(a) => prove(a, ctx),
        Command::Permissive(a) => permissive(a, ctx),
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn outcome(code: u8, summary: serde_json::Value, output: Option<&PathBuf>, seed: Option<u64>) -> Outcome {
    Outcome { code, summary, output: output.cloned(), seed }
}

/// Comment lines identifying the tool, the source model and the translation.
fn header(ctx: &Context, command: &str, t: &Target) -> String {
    let (path, hash) = &ctx.inputs[0];
    let mut h = format!("# fscsynth {command} {}\n# source {path} sha256 {hash}\n", env!("CARGO_PKG_VERSION"));
    if let Some((_, d)) = &t.induced {
        h.push_str(&format!("# memory {}\n# topology {}\n# variant {}\n", d.k, d.topology, d.variant));
    }
    h
}

/// One line per parameter: name, role, observation, node, action, successor node.
fn parameter_table(d: &InducedPmc, actions: &[String], prov: Option<&Provenance>) -> String {
    let mut out = String::from("# name\trole\tobservation\tnode\taction\tnext-node\n");
    for (name, p) in d.pmc.params.iter().zip(&d.names) {
        let role = match p.role {
            Role::P => "action",
            Role::Q => "memory",
            Role::R => "joint",
        };
        let z = prov.and_then(|pr| pr.observations.get(p.observation).cloned()).unwrap_or_else(|| p.observation.to_string());
        let a = p.action.map(|a| actions[a].clone()).unwrap_or_else(|| "-".into());
        let t = p.target.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
        out.push_str(&format!("{name}\t{role}\t{z}\t{}\t{a}\t{t}\n", p.node));
    }
    out
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(suffix);
    PathBuf::from(p)
}

fn transform(a: &TransformArgs, ctx: &mut Context) -> CmdResult {
    let k = a.model.memory as usize;
    let topology: Topology = a.model.topology.into();
    let variant = a.model.variant();
    if a.unfold && variant == Variant::NextObs {
        return Err(InputError(
            "--unfold cannot be combined with --variant next-obs: memory updates keyed by the next observation have no unfolding"
                .into(),
        ));
    }
    let model = load_model(ctx, &a.model.model)?;
    let (path, hash) = ctx.inputs[0].clone();
    let mut head = format!("# fscsynth transform {}\n# source {path} sha256 {hash}\n", env!("CARGO_PKG_VERSION"));
    let m = match model {
        Model::Pmc(d) => {
            if a.unfold || a.make_simple || a.intermediate || a.model.memory != 1 {
                return Err(InputError("a pMC input is translated back into a POMDP; POMDP options do not apply".into()));
            }
            let m = pmc_to_pomdp(&d)?;
            write_output(a.output.as_deref(), &format!("{head}{}", write_pomdp(&m)))?;
            let summary = json!({ "emitted": "pomdp", "states": m.num_states(), "observations": m.num_observations });
            return Ok(outcome(0, summary, a.output.as_ref(), None));
        }
        Model::Pomdp(m) => m,
    };
    let mut m = m;
    let mut prov = Provenance::identity(&m);
    let mut steps = Vec::new();
    if a.make_simple {
        let (b, p1) = make_binary(&m)?;
        let (s, p2) = make_simple(&b)?;
        prov = prov.then(&p1).then(&p2);
        m = s;
        steps.push("binary, simple");
    }
    if a.intermediate {
        let (t, p) = insert_intermediate_states(&m)?;
        prov = prov.then(&p);
        m = t;
        steps.push("intermediate states");
    }
    if !steps.is_empty() {
        head.push_str(&format!("# normalized {}\n", steps.join(", ")));
    }
    let k_eff = if a.unfold {
        m = unfold(&m, k, topology)?;
        head.push_str(&format!("# unfolded memory {k} topology {topology}\n"));
        1
    } else {
        if !steps.is_empty() {
            head.push_str(&prov.header());
        }
        k
    };
    if a.emit == Emit::Pomdp {
        write_output(a.output.as_deref(), &format!("{head}{}", write_pomdp(&m)))?;
        let summary = json!({ "emitted": "pomdp", "states": m.num_states(), "observations": m.num_observations });
        return Ok(outcome(0, summary, a.output.as_ref(), None));
    }
    let opts = InducedOptions::new(k_eff).topology(topology).variant(variant);
    let d = build_induced(&m, &opts)?;
    head.push_str(&format!("# memory {}\n# topology {}\n# variant {}\n", d.k, d.topology, d.variant));
    write_output(a.output.as_deref(), &format!("{head}{}", write_pmc(&d.pmc)))?;
    if let Some(out) = &a.output {
        let prov = (!a.unfold).then_some(&prov);
        let table = parameter_table(&d, m.actions(), prov);
        write_output(Some(&sidecar(out, ".params")), &table)?;
    }
    let summary = json!({
        "emitted": "pmc",
        "states": d.pmc.num_states(),
        "parameters": d.pmc.num_params(),
        "transitions": d.pmc.chain.transitions.iter().map(Vec::len).sum::<usize>(),
    });
    Ok(outcome(0, summary, a.output.as_ref(), None))
}

fn check(a: &CheckArgs, ctx: &mut Context) -> CmdResult {
    let s = spec(&a.spec)?;
    let eps = rational(&a.epsilon, "--epsilon")?;
    if let Some(fsc_path) = &a.fsc {
        let Model::Pomdp(m) = load_model(ctx, &a.model.model)? else {
            return Err(InputError("--fsc needs a POMDP input".into()));
        };
        let fsc = Fsc::parse(&read(ctx, fsc_path)?, &m)?;
        let product = induced_mc(&m, &fsc)?;
        let value = check_mc(&product.mc, &s)?;
        let satisfied = s.satisfied(&value);
        println!("value: {}", show_value(&value));
        if a.float {
            println!("float value: {}", check_mc_f64(&product.mc.to_float(), &s)?);
        }
        println!("satisfied: {}", yes(satisfied));
        let summary = json!({ "value": value_json(&value), "satisfied": satisfied, "product_states": product.mc.num_states() });
        return Ok(outcome(if satisfied { 0 } else { 1 }, summary, None, None));
    }
    let t = target(ctx, &a.model)?;
    let u = match &a.instantiation {
        Some(p) => Instantiation::parse(&read(ctx, p)?, &t.pmc.params)?,
        None if t.pmc.num_params() == 0 => Instantiation::new(Vec::new()),
        None => return Err(InputError("--instantiation or --fsc is required for a model with parameters".into())),
    };
    let mc = t.pmc.apply(&u)?;
    let wd = t.pmc.check_well_defined(&u, &eps);
    let value = check_mc(&mc, &s)?;
    let satisfied = s.satisfied(&value);
    println!("value: {}", show_value(&value));
    if a.float {
        println!("float value: {}", check_mc_f64(&mc.to_float(), &s)?);
    }
    if let Some((m, d)) = &t.induced {
        let fsc = fsc_from_instantiation(m, d, &u)?;
        let via = check_mc(&induced_mc(m, &fsc)?.mc, &s)?;
        println!("controller value: {}", show_value(&via));
    }
    println!("satisfied: {}", yes(satisfied));
    println!("well-defined: {}", yes(wd.well_defined));
    println!("graph-preserving: {}", yes(wd.graph_preserving));
    println!("epsilon-preserving: {}", yes(wd.eps_preserving));
    let summary = json!({
        "value": value_json(&value),
        "satisfied": satisfied,
        "graph_preserving": wd.graph_preserving,
        "epsilon_preserving": wd.eps_preserving,
    });
    Ok(outcome(if satisfied { 0 } else { 1 }, summary, None, None))
}

fn search_config(a: &SearchArgs) -> Result<SearchConfig, InputError> {
    let time_budget = match a.time_limit {
        Some(t) => Some(Duration::try_from_secs_f64(t).map_err(|_| InputError(format!("--time-limit: invalid duration {t}")))?),
        None => None,
    };
    let cfg = SearchConfig {
        seed: a.seed,
        swarm_size: a.swarm,
        max_iterations: a.iterations,
        epsilon: rational(&a.epsilon, "--epsilon")?,
        time_budget,
        ..Default::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn synthesize(a: &SynthesizeArgs, ctx: &mut Context) -> CmdResult {
    let s = spec(&a.spec)?;
    let cfg = search_config(&a.search)?;
    let t = target(ctx, &a.model)?;
    let head = header(ctx, "synthesize", &t) + &format!("# spec {s}\n# seed {}\n", cfg.seed);
    let seed = Some(cfg.seed);
    if a.method == Method::Brute {
        let Some((m, _)) = &t.induced else {
            return Err(InputError("--method brute needs a POMDP input".into()));
        };
        let r = brute_force_oracle(m, a.model.memory as usize, a.model.topology.into(), &s, ctx.exec)?;
        let satisfied = s.satisfied(&r.value);
        println!("method: brute");
        println!("controllers enumerated: {}", r.enumerated);
        println!("value: {}", show_value(&r.value));
        println!("satisfied: {}", yes(satisfied));
        let text = format!("{head}# value {}\n{}", r.value, r.fsc.write(m));
        write_output(a.output.as_deref(), &text)?;
        let summary = json!({ "method": "brute", "value": value_json(&r.value), "satisfied": satisfied, "enumerated": r.enumerated.to_string() });
        return Ok(outcome(if satisfied { 0 } else { 1 }, summary, a.output.as_ref(), seed));
    }
    let r = pso_search(&t.pmc, &s, &cfg, ctx.exec)?;
    // The emitted artefact is certified by exact model checking.
    let (value, artefact) = match &t.induced {
        Some((m, d)) => {
            let fsc = fsc_from_instantiation(m, d, &r.instantiation)?;
            (check_mc(&induced_mc(m, &fsc)?.mc, &s)?, fsc.write(m))
        }
        None => (check_mc(&t.pmc.apply(&r.instantiation)?, &s)?, r.instantiation.write(&t.pmc.params)),
    };
    let satisfied = s.satisfied(&value);
    println!("method: pso");
    println!("iterations: {}", r.trace.len() - 1);
    println!("evaluations: {}", r.evaluations);
    println!("value: {}", show_value(&value));
    println!("satisfied: {}", yes(satisfied));
    if !satisfied {
        println!("gap to threshold: {:.6}", gap(&s, value.to_f64()));
    }
    if r.budget_exhausted {
        println!("time limit reached");
    }
    write_output(a.output.as_deref(), &format!("{head}# value {value}\n{artefact}"))?;
    let code = match (satisfied, r.budget_exhausted) {
        (true, _) => 0,
        (false, true) => 3,
        (false, false) => 1,
    };
    let summary = json!({
        "method": "pso",
        "value": value_json(&value),
        "satisfied": satisfied,
        "evaluations": r.evaluations,
        "budget_exhausted": r.budget_exhausted,
    });
    Ok(outcome(code, summary, a.output.as_ref(), seed))
}

fn closed_form_cmd(a: &ClosedFormArgs, ctx: &mut Context) -> CmdResult {
    let s = spec(&a.spec)?;
    let t = target(ctx, &a.model)?;
    let f = closed_form(&t.pmc, &s)?;
    let rendered = f.display(&t.pmc.params).to_string();
    let head = header(ctx, "closed-form", &t)
        + &format!("# spec {s}\n# params {}\n", t.pmc.params.join(" "));
    match &a.output {
        Some(_) => {
            write_output(a.output.as_deref(), &format!("{head}{rendered}\n"))?;
            println!("{rendered}");
        }
        None => println!("{rendered}"),
    }
    let summary = json!({ "function": rendered, "parameters": t.pmc.num_params() });
    Ok(outcome(0, summary, a.output.as_ref(), None))
}

fn show_bounds(b: &Bounds) -> String {
    format!("[{}, {}]", show_value(&b.lower), show_value(&b.upper))
}

fn prove(a: &ProveArgs, ctx: &mut Context) -> CmdResult {
    let s = spec(&a.spec)?;
    let t = target(ctx, &a.model)?;
    let region = match &a.region {
        Some(p) => Region::parse(&read(ctx, p)?, &t.pmc.params)?,
        None => {
            let eps = rational(&a.epsilon, "--epsilon")?;
            Region::uniform(t.pmc.num_params(), eps.clone(), int(1) - eps)
        }
    };
    let bounds = region_bounds(&t.pmc, &s, &region)?;
    println!("bounds: {}", show_bounds(&bounds));
    let verdict = prove_absence(&t.pmc, &s, &region, a.depth)?;
    let summary = match &verdict {
        AbsenceResult::NoFsc { regions } => {
            println!("verdict: no-fsc ({regions} regions)");
            json!({ "verdict": "no-fsc", "regions": regions })
        }
        AbsenceResult::Inconclusive { region: sub, bounds: b } => {
            println!("verdict: inconclusive");
            println!("undecided region bounds: {}", show_bounds(b));
            print!("{}", sub.write(&t.pmc.params));
            json!({ "verdict": "inconclusive", "lower": value_json(&b.lower), "upper": value_json(&b.upper) })
        }
    };
    Ok(outcome(if verdict.is_proven() { 0 } else { 1 }, summary, None, None))
}

fn permissive(a: &PermissiveArgs, ctx: &mut Context) -> CmdResult {
    let s = spec(&a.spec)?;
    let cfg = search_config(&a.search)?;
    let t = target(ctx, &a.model)?;
    let r = find_permissive(&t.pmc, &s, &cfg, a.witnesses, a.runs, ctx.exec)?;
    println!("witnesses: {}", r.candidate.witnesses.len());
    println!("bounds: {}", show_bounds(&r.bounds));
    println!("verified: {}", yes(r.verified));
    let head = header(ctx, "permissive", &t)
        + &format!("# spec {s}\n# seed {}\n# verified {}\n", cfg.seed, yes(r.verified));
    let region = r.candidate.region.write(&t.pmc.params);
    write_output(a.output.as_deref(), &format!("{head}{region}"))?;
    let summary = json!({
        "verified": r.verified,
        "witnesses": r.candidate.witnesses.len(),
        "lower": value_json(&r.bounds.lower),
        "upper": value_json(&r.bounds.upper),
    });
    Ok(outcome(if r.verified { 0 } else { 1 }, summary, a.output.as_ref(), Some(cfg.seed)))
}
