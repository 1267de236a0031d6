//! Structural constructions on POMDPs and pMCs.

pub mod induced;
pub mod normalize;
pub mod to_pomdp;
pub mod unfold;

pub use induced::{
    action_restricted_pmc, build_induced, induced_pmc, next_obs_pmc, param_count, substituted_pmc, InducedOptions,
    InducedPmc, ParamName, RemainMap, Role, Variant,
};
pub use normalize::{insert_intermediate_states, make_binary, make_simple, Provenance};
pub use to_pomdp::pmc_to_pomdp;
pub use unfold::{map_unfolding_instantiation, unfold};
