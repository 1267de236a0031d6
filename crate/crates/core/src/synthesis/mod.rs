//! Search for satisfying controllers.

pub mod oracle;
pub mod permissive;
pub mod pso;

pub use oracle::{brute_force_oracle, deterministic_count, OracleResult, ENUMERATION_BOUND};
pub use permissive::{build_candidate, find_permissive, PermissiveCandidate, PermissiveResult};
pub use pso::{gap, pso_search, PsoResult, SearchConfig, SimplexEncoding};
