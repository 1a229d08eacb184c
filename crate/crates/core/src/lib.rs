//! Total variation flow with dynamic boundary conditions on intervals, discs and annuli.

// `!(a < b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cahn_hoffman;
pub mod canonical;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod geometry;
pub mod pde;
pub mod profile;
pub mod qp;
pub mod scenario;
pub mod selftest;
pub mod state;
pub mod trajectory;

pub use error::{Error, Result};
pub use geometry::{Chi, DomainKind, DomainSpec, EdgeKind, End, EndKind, FacetSpec, GammaSelect};
pub use state::{FlowConfig, State};
