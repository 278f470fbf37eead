//! Reference selection and aggregation (vertical scoring).

pub mod aggregate;
pub mod references;

pub use aggregate::{
    aggregator_len, cosine, cosine_grad, Aggregation, AggregatorParams, VerticalForward,
};
pub use references::{ReferencePair, ReferenceTable};
