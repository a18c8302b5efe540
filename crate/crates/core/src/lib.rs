//! Symbolic jets, range conditions and explicit smooth solutions of linear and
//! nonlinear PDE systems.

pub mod constructor;
pub mod demos;
pub mod expr;
pub mod ideal;
pub mod jet;
pub mod linalg;
pub mod multi_index;
pub mod par;
pub mod range;
pub mod report;
