//! Dataset ingestion, graph indexes and test-set partitions.

pub mod distance;
pub mod filter;
pub mod graph;
pub mod hash;
pub mod split;
pub mod synthetic;

pub use distance::DistanceIndex;
pub use filter::FilterIndex;
pub use graph::{
    load_dataset, Direction, Edge, EntityId, KnowledgeGraph, RelationId, Split, Triple, Vocabulary,
};
pub use split::{distance_split, rmp_classify, DistanceBucket, MappingClass};
