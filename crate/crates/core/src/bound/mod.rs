//! Moment-matrix relaxation bounding W over real quantum models, its
//! SDPA export, and a see-saw lower bound over explicit real strategies.

pub mod check;
pub mod layout;
pub mod linalg;
pub mod problem;
pub mod sdpa;
pub mod seesaw;
pub mod solver;
pub mod words;

pub use check::{feasibility_check, strategy_moments, FeasibilityReport, Strategy};
pub use problem::{assemble_problem, Level, MomentProblem};
pub use sdpa::{export_sdpa, parse_sdpa, render_sdpa, SdpaInstance};
pub use seesaw::{exhaustive_deterministic, seesaw_lower_bound, SeesawResult};
pub use solver::{solve, Bound, BoundStatus, SolverOptions};
pub use words::{build_monomials, moment_key, reduce_word, MomentKey, Party, Word};
