//! Row-sparse gradient accumulator.
//!
//! Buffers are dense, but only rows marked as touched are visited by the
//! optimizer and cleared between steps.

#[derive(Debug, Clone)]
pub struct Gradients {
    entity_width: usize,
    relation_width: usize,
    entities: Vec<f64>,
    entity_touched: Vec<bool>,
    touched_entities: Vec<u32>,
    relations: Vec<f64>,
    relation_touched: Vec<bool>,
    touched_relations: Vec<u32>,
    aggregator: Vec<f64>,
    aggregator_touched: bool,
}

impl Gradients {
    pub fn new(
        num_entities: usize,
        entity_width: usize,
        num_relations: usize,
        relation_width: usize,
        aggregator_len: usize,
    ) -> Self {
        Gradients {
            entity_width,
            relation_width,
            entities: vec![0.0; num_entities * entity_width],
            entity_touched: vec![false; num_entities],
            touched_entities: Vec::new(),
            relations: vec![0.0; num_relations * relation_width],
            relation_touched: vec![false; num_relations],
            touched_relations: Vec::new(),
            aggregator: vec![0.0; aggregator_len],
            aggregator_touched: false,
        }
    }

    pub fn entity_row_mut(&mut self, e: u32) -> &mut [f64] {
        let i = e as usize;
        if !self.entity_touched[i] {
            self.entity_touched[i] = true;
            self.touched_entities.push(e);
        }
        &mut self.entities[i * self.entity_width..(i + 1) * self.entity_width]
    }

    pub fn relation_row_mut(&mut self, r: u32) -> &mut [f64] {
        let i = r as usize;
        if !self.relation_touched[i] {
            self.relation_touched[i] = true;
            self.touched_relations.push(r);
        }
        &mut self.relations[i * self.relation_width..(i + 1) * self.relation_width]
    }

    pub fn aggregator_mut(&mut self) -> &mut [f64] {
        self.aggregator_touched = true;
        &mut self.aggregator
    }

    pub fn entity_row(&self, e: u32) -> &[f64] {
        let i = e as usize;
        &self.entities[i * self.entity_width..(i + 1) * self.entity_width]
    }

    pub fn relation_row(&self, r: u32) -> &[f64] {
        let i = r as usize;
        &self.relations[i * self.relation_width..(i + 1) * self.relation_width]
    }

    pub fn aggregator(&self) -> &[f64] {
        &self.aggregator
    }

    pub fn touched_entities(&self) -> &[u32] {
        &self.touched_entities
    }

    pub fn touched_relations(&self) -> &[u32] {
        &self.touched_relations
    }

    pub fn aggregator_touched(&self) -> bool {
        self.aggregator_touched
    }

    pub fn is_entity_touched(&self, e: u32) -> bool {
        self.entity_touched[e as usize]
    }

    /// Zeroes touched rows and resets the touched sets.
    pub fn clear(&mut self) {
        for &e in &self.touched_entities {
            let i = e as usize;
            self.entities[i * self.entity_width..(i + 1) * self.entity_width].fill(0.0);
            self.entity_touched[i] = false;
        }
        self.touched_entities.clear();
        for &r in &self.touched_relations {
            let i = r as usize;
            self.relations[i * self.relation_width..(i + 1) * self.relation_width].fill(0.0);
            self.relation_touched[i] = false;
        }
        self.touched_relations.clear();
        if self.aggregator_touched {
            self.aggregator.fill(0.0);
            self.aggregator_touched = false;
        }
    }

    /// Largest absolute component over all touched buffers.
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for &e in &self.touched_entities {
            m = self.entity_row(e).iter().fold(m, |a, x| a.max(x.abs()));
        }
        for &r in &self.touched_relations {
            m = self.relation_row(r).iter().fold(m, |a, x| a.max(x.abs()));
        }
        if self.aggregator_touched {
            m = self.aggregator.iter().fold(m, |a, x| a.max(x.abs()));
        }
        m
    }
}
