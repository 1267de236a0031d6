pub mod expr;
pub mod format;
pub mod instantiation;
mod modgcd;
pub mod model;
pub mod polynomial;
pub mod ratfunc;
pub mod rational;
pub mod spec;

pub use instantiation::{Instantiation, WellDefinedness};
pub use model::{Chain, Choice, FloatMc, Labels, Mc, Mdp, Pmc, Pomdp, PomdpBuilder};
pub use polynomial::{Monomial, Polynomial, Var};
pub use ratfunc::RationalFunction;
pub use rational::Rational;
pub use spec::{Comparison, Direction, SpecKind, Specification, Value};
