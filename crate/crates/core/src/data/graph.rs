//! Indexed triple store with train/valid/test splits.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::hash::Fnv1a;
use crate::error::{Error, Result};

pub type EntityId = u32;
pub type RelationId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub const fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }
}

/// Entity and relation names with dense ids assigned in lexicographic order.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_ids: HashMap<String, EntityId>,
    relation_ids: HashMap<String, RelationId>,
}

impl Vocabulary {
    pub fn new(
        entities: impl IntoIterator<Item = String>,
        relations: impl IntoIterator<Item = String>,
    ) -> Self {
        let entities: Vec<String> = entities
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let relations: Vec<String> = relations
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let entity_ids = index_of(&entities);
        let relation_ids = index_of(&relations);
        Vocabulary {
            entities,
            relations,
            entity_ids,
            relation_ids,
        }
    }

    /// Vocabulary with synthetic names `e0..` and `r0..`, ids taken verbatim.
    pub fn synthetic(num_entities: usize, num_relations: usize) -> Self {
        let entities: Vec<String> = (0..num_entities).map(|i| format!("e{i}")).collect();
        let relations: Vec<String> = (0..num_relations).map(|i| format!("r{i}")).collect();
        let entity_ids = index_of(&entities);
        let relation_ids = index_of(&relations);
        Vocabulary {
            entities,
            relations,
            entity_ids,
            relation_ids,
        }
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entities[id as usize]
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        &self.relations[id as usize]
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_ids.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_ids.get(name).copied()
    }

    fn push_relation(&mut self, name: String) -> RelationId {
        let id = self.relations.len() as RelationId;
        self.relation_ids.insert(name.clone(), id);
        self.relations.push(name);
        id
    }
}

fn index_of(names: &[String]) -> HashMap<String, u32> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i as u32))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub relation: RelationId,
    pub neighbor: EntityId,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    vocab: Vocabulary,
    train: Vec<Triple>,
    valid: Vec<Triple>,
    test: Vec<Triple>,
    adjacency: Vec<Vec<Edge>>,
    relation_pairs: Vec<Vec<(EntityId, EntityId)>>,
    base_relations: usize,
    augmented: bool,
    dataset_hash: u64,
    warnings: Vec<String>,
}

impl KnowledgeGraph {
    /// Builds a graph from id triples. Each split is sorted and deduplicated.
    pub fn from_triples(
        vocab: Vocabulary,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Self {
        let mut hasher = Fnv1a::default();
        for split in [&train, &valid, &test] {
            for t in split {
                hasher.update(&t.head.to_le_bytes());
                hasher.update(&t.relation.to_le_bytes());
                hasher.update(&t.tail.to_le_bytes());
            }
            hasher.update(&[0xff]);
        }
        Self::assemble(vocab, train, valid, test, hasher.finish(), Vec::new())
    }

    fn assemble(
        vocab: Vocabulary,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
        dataset_hash: u64,
        warnings: Vec<String>,
    ) -> Self {
        let ne = vocab.num_entities();
        let nr = vocab.num_relations();
        for t in train.iter().chain(&valid).chain(&test) {
            assert!(
                (t.head as usize) < ne && (t.tail as usize) < ne && (t.relation as usize) < nr,
                "triple {t:?} out of vocabulary range"
            );
        }
        let mut g = KnowledgeGraph {
            vocab,
            train: sorted_unique(train),
            valid: sorted_unique(valid),
            test: sorted_unique(test),
            adjacency: Vec::new(),
            relation_pairs: Vec::new(),
            base_relations: nr,
            augmented: false,
            dataset_hash,
            warnings,
        };
        g.rebuild_indexes();
        g
    }

    fn rebuild_indexes(&mut self) {
        let mut adjacency = vec![Vec::new(); self.num_entities()];
        let mut relation_pairs = vec![Vec::new(); self.num_relations()];
        for t in &self.train {
            adjacency[t.head as usize].push(Edge {
                relation: t.relation,
                neighbor: t.tail,
                direction: Direction::Out,
            });
            adjacency[t.tail as usize].push(Edge {
                relation: t.relation,
                neighbor: t.head,
                direction: Direction::In,
            });
            relation_pairs[t.relation as usize].push((t.head, t.tail));
        }
        self.adjacency = adjacency;
        self.relation_pairs = relation_pairs;
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.num_entities()
    }

    pub fn num_relations(&self) -> usize {
        self.vocab.num_relations()
    }

    /// Relation count before reciprocal augmentation.
    pub fn num_base_relations(&self) -> usize {
        self.base_relations
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented
    }

    pub fn train(&self) -> &[Triple] {
        &self.train
    }

    pub fn valid(&self) -> &[Triple] {
        &self.valid
    }

    pub fn test(&self) -> &[Triple] {
        &self.test
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn adjacency(&self, entity: EntityId) -> &[Edge] {
        &self.adjacency[entity as usize]
    }

    /// Training `(head, tail)` pairs of a relation.
    pub fn relation_pairs(&self, relation: RelationId) -> &[(EntityId, EntityId)] {
        &self.relation_pairs[relation as usize]
    }

    /// FNV-1a over the dataset bytes; keys every on-disk cache.
    pub fn dataset_hash(&self) -> u64 {
        self.dataset_hash
    }

    /// Valid/test entities and relations that never occur in training.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Relation of the original direction for a possibly reciprocal id, and
    /// whether the id denotes the reciprocal (head-prediction) direction.
    pub fn base_relation(&self, relation: RelationId) -> (RelationId, bool) {
        let base = self.base_relations as RelationId;
        if self.augmented && relation >= base {
            (relation - base, true)
        } else {
            (relation, false)
        }
    }

    /// Mirrors every triple `(h, r, t)` of every split as `(t, r + |R|, h)`.
    pub fn augment_reciprocal(&self) -> Result<KnowledgeGraph> {
        if self.augmented {
            return Err(Error::AlreadyAugmented);
        }
        let base = self.num_relations() as RelationId;
        let mut vocab = self.vocab.clone();
        for r in 0..base {
            let name = format!("{}_reverse", self.vocab.relation_name(r));
            vocab.push_relation(name);
        }
        let mirror = |split: &[Triple]| -> Vec<Triple> {
            split
                .iter()
                .flat_map(|t| [*t, Triple::new(t.tail, t.relation + base, t.head)])
                .collect()
        };
        let mut g = KnowledgeGraph {
            vocab,
            train: sorted_unique(mirror(&self.train)),
            valid: sorted_unique(mirror(&self.valid)),
            test: sorted_unique(mirror(&self.test)),
            adjacency: Vec::new(),
            relation_pairs: Vec::new(),
            base_relations: self.base_relations,
            augmented: true,
            dataset_hash: self.dataset_hash,
            warnings: self.warnings.clone(),
        };
        g.rebuild_indexes();
        Ok(g)
    }
}

fn sorted_unique(mut v: Vec<Triple>) -> Vec<Triple> {
    v.sort_unstable();
    v.dedup();
    v
}

const SPLIT_FILES: [&str; 3] = ["train.txt", "valid.txt", "test.txt"];

/// Loads `train.txt`, `valid.txt` and `test.txt` (TAB-separated
/// `head relation tail`, no header) from `dir`.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<KnowledgeGraph> {
    let dir = dir.as_ref();
    let mut raw = Vec::with_capacity(3);
    let mut hasher = Fnv1a::default();
    for name in SPLIT_FILES {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::DatasetNotFound {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        hasher.update(&bytes);
        hasher.update(&[0xff]);
        raw.push((path, bytes));
    }

    let mut parsed: Vec<Vec<[String; 3]>> = Vec::with_capacity(3);
    for (path, bytes) in &raw {
        parsed.push(parse_split(path, bytes)?);
    }
    if parsed[0].is_empty() {
        return Err(Error::DatasetNotFound {
            path: raw[0].0.clone(),
            reason: "training split is empty".into(),
        });
    }

    let vocab = Vocabulary::new(
        parsed
            .iter()
            .flatten()
            .flat_map(|[h, _, t]| [h.clone(), t.clone()]),
        parsed.iter().flatten().map(|[_, r, _]| r.clone()),
    );

    let mut seen_entities = vec![false; vocab.num_entities()];
    let mut seen_relations = vec![false; vocab.num_relations()];
    let mut splits: Vec<Vec<Triple>> = Vec::with_capacity(3);
    for rows in &parsed {
        let triples = rows
            .iter()
            .map(|[h, r, t]| {
                Triple::new(
                    vocab.entity_id(h).unwrap(),
                    vocab.relation_id(r).unwrap(),
                    vocab.entity_id(t).unwrap(),
                )
            })
            .collect::<Vec<_>>();
        splits.push(triples);
    }
    for t in &splits[0] {
        seen_entities[t.head as usize] = true;
        seen_entities[t.tail as usize] = true;
        seen_relations[t.relation as usize] = true;
    }
    let mut warnings = Vec::new();
    for (e, seen) in seen_entities.iter().enumerate() {
        if !seen {
            warnings.push(format!(
                "entity {} does not occur in train",
                vocab.entity_name(e as EntityId)
            ));
        }
    }
    for (r, seen) in seen_relations.iter().enumerate() {
        if !seen {
            warnings.push(format!(
                "relation {} does not occur in train",
                vocab.relation_name(r as RelationId)
            ));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let test = splits.pop().unwrap();
    let valid = splits.pop().unwrap();
    let train = splits.pop().unwrap();
    Ok(KnowledgeGraph::assemble(
        vocab,
        train,
        valid,
        test,
        hasher.finish(),
        warnings,
    ))
}

fn parse_split(path: &Path, bytes: &[u8]) -> Result<Vec<[String; 3]>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        path: PathBuf::from(path),
        line: 0,
        message: format!("invalid UTF-8: {e}"),
    })?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: PathBuf::from(path),
                line: i + 1,
                message: format!("expected 3 TAB-separated fields, found {}", fields.len()),
            });
        }
        rows.push([
            fields[0].to_string(),
            fields[1].to_string(),
            fields[2].to_string(),
        ]);
    }
    Ok(rows)
}
