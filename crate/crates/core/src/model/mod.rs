//! Generalized score function models.

pub mod grad;
pub mod kind;
pub mod score;
pub mod store;

pub use grad::Gradients;
pub use kind::{ModelKind, Norm, SpaceKind};
pub use score::{similarity, similarity_grad};
pub use store::{init_bound, ParameterStore};
