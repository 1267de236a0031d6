//! Model checking, closed forms and interval bounds.

pub mod elimination;
pub mod lifting;
pub mod linear;
pub mod mc;
pub mod mdp;
pub mod qualitative;

pub use elimination::{closed_form, state_eliminate, state_eliminate_reward, state_eliminate_with, ClosedForm, EliminationOrder};
pub use lifting::{certifies, excludes, prove_absence, region_bounds, AbsenceResult, Bounds, Region};
pub use linear::FloatSolver;
pub use mc::{check_mc, check_mc_f64, PmcChecker};
pub use mdp::{mdp_optimal, MdpOptimum};
pub use qualitative::QualitativeSets;
