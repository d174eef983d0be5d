//! Exact computation with restricted power series over `Q` with a p-adic
//! absolute value: Weierstrass division and preparation, distinguishing
//! automorphisms, semianalytic formulas, constructible data, a
//! one-variable elimination step and blow-up charts.

pub mod automorphism;
pub mod blowup;
pub mod constructible;
pub mod document;
pub mod error;
pub mod formula;
pub mod logic;
pub mod point;
pub mod projection;
pub mod roots;
pub mod series;
pub mod valued;
pub mod weierstrass;

pub use error::{Error, Result};
pub use logic::Tri;
pub use point::{eval_seminorm, pushforward_eval, Estimate, Point};
pub use series::{Mono, Series, Space, VarSpec};
pub use valued::{norm_of, valuation, NormValue, Scalar};
