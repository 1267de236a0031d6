//! Regions of instantiations that all satisfy a specification.

use crate::analysis::{certifies, region_bounds, Bounds, Region};
use crate::error::Result;
use crate::models::instantiation::Instantiation;
use crate::models::model::Pmc;
use crate::models::polynomial::Var;
use crate::models::spec::Specification;
use crate::par::Execution;

use super::pso::{pso_search, SearchConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct PermissiveCandidate {
    pub region: Region,
    pub witnesses: Vec<Instantiation>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PermissiveResult {
    pub candidate: PermissiveCandidate,
    pub bounds: Bounds,
    /// Every instantiation in the region satisfies the specification.
    pub verified: bool,
}

/// The bounding box of `witnesses`, checked by interval relaxation.
pub fn build_candidate(d: &Pmc, spec: &Specification, witnesses: Vec<Instantiation>) -> Result<PermissiveResult> {
    let first = witnesses.first().expect("at least one witness");
    let mut lo: Vec<_> = (0..first.len()).map(|i| first.get(Var(i as u32)).clone()).collect();
    let mut hi = lo.clone();
    for w in &witnesses[1..] {
        for i in 0..lo.len() {
            let v = w.get(Var(i as u32));
            if *v < lo[i] {
                lo[i] = v.clone();
            }
            if *v > hi[i] {
                hi[i] = v.clone();
            }
        }
    }
    let region = Region::new(lo, hi);
    let bounds = region_bounds(d, spec, &region)?;
    let verified = certifies(spec, &bounds);
    Ok(PermissiveResult { candidate: PermissiveCandidate { region, witnesses }, bounds, verified })
}

/// Collects up to `wanted` satisfying instantiations from searches with
/// consecutive seeds and returns their bounding box.
///
/// At most `max_runs` searches are started. Without any satisfying
/// instantiation the region is the point of the best one found.
pub fn find_permissive(
    d: &Pmc,
    spec: &Specification,
    cfg: &SearchConfig,
    wanted: usize,
    max_runs: usize,
    exec: Execution,
) -> Result<PermissiveResult> {
    let mut witnesses = Vec::new();
    let mut fallback = None;
    for run in 0..max_runs.max(1) {
        let mut c = cfg.clone();
        c.seed = cfg.seed.wrapping_add(run as u64);
        c.stop_on_satisfied = true;
        c.exact_verify = true;
        let r = pso_search(d, spec, &c, exec)?;
        if r.satisfied {
            if !witnesses.contains(&r.instantiation) {
                witnesses.push(r.instantiation);
            }
            if witnesses.len() >= wanted {
                break;
            }
        } else if fallback.is_none() {
            fallback = Some(r.instantiation);
        }
        if d.num_params() == 0 {
            break;
        }
    }
    if witnesses.is_empty() {
        witnesses.push(fallback.expect("at least one search ran"));
    }
    build_candidate(d, spec, witnesses)
}
