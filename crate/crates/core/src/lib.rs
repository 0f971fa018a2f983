//! Additive endomorphisms of spaces of convex functions.
//!
//! Convex functions are represented either exactly, as piecewise-linear
//! functions on the line ([`PwlFunction`]), or as expression trees on ℝⁿ
//! ([`ConvexExpr`]). Three operator families act on them:
//!
//! * [`GlEndo`]: `c f(0) + ∫ (f(s x) - f(0)) / s² dν(s)`, equivariant under
//!   the general linear group, with its extension to functions finite near 0;
//! * [`RadialEndo`]: an integral of `f` over rotated copies of `‖x‖` times
//!   orbit atoms, equivariant under rotations;
//! * the one-dimensional kernel calculus in [`oned`].

pub mod endo;
pub mod error;
pub mod expr;
pub mod ext;
pub mod func;
pub mod gl;
pub mod measure;
pub mod oned;
pub mod par;
pub mod pwl;
pub mod radial;
pub mod random;
pub mod sample;
pub mod schema;
pub mod suites;
pub mod tol;

pub use endo::{gw_probe, gw_probe_1d, Endo1D, EndoMap, GwReport, ZeroEndo};
pub use error::{Error, Result};
pub use expr::ConvexExpr;
pub use ext::{ExtReal, Interval};
pub use func::ConvexFunction;
pub use gl::{GlCase, GlEndo, GlReport, ScaleComposeMap};
pub use measure::{LineMeasure, OrbitAtom, OrbitMeasure};
pub use par::Exec;
pub use pwl::{PwlError, PwlFunction, Tail};
pub use radial::{RadialEndo, RadialReport};
