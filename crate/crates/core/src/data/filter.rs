//! Known-true tails per `(head, relation)` across all splits, for the
//! filtered ranking protocol.

use std::collections::HashMap;

use crate::data::graph::{EntityId, KnowledgeGraph, RelationId};

#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    tails: HashMap<(EntityId, RelationId), Vec<EntityId>>,
}

impl FilterIndex {
    pub fn new(kg: &KnowledgeGraph) -> Self {
        let mut tails: HashMap<(EntityId, RelationId), Vec<EntityId>> = HashMap::new();
        for t in kg.train().iter().chain(kg.valid()).chain(kg.test()) {
            tails.entry((t.head, t.relation)).or_default().push(t.tail);
        }
        for v in tails.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        FilterIndex { tails }
    }

    /// Sorted tails `t'` with `(head, relation, t')` in any split.
    pub fn known_tails(&self, head: EntityId, relation: RelationId) -> &[EntityId] {
        self.tails
            .get(&(head, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn is_known(&self, head: EntityId, relation: RelationId, tail: EntityId) -> bool {
        self.known_tails(head, relation)
            .binary_search(&tail)
            .is_ok()
    }
}
