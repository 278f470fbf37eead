//! Binary checkpoints (`VLPC`).
//!
//! Layout, little-endian: magic, version u32, model code u8, space code u8,
//! dim u32, |E| u64, |R| u64, norm code u8, aggregator hidden width u32 (0
//! when absent), dataset hash u64; then f32 arrays for the entity table, the
//! relation table and the aggregator, followed by the six Adam moment arrays
//! in the same order (first and second moment interleaved per group), and
//! finally the step counter u64.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::distance::{read_u32, read_u64};
use crate::error::{Error, Result};
use crate::model::{ModelKind, Norm, ParameterStore};
use crate::train::adam::AdamState;
use crate::vlp::{aggregator_len, AggregatorParams};

const MAGIC: &[u8; 4] = b"VLPC";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub store: ParameterStore<f32>,
    pub adam: AdamState<f32>,
    pub dataset_hash: u64,
}

impl Checkpoint {
    pub fn step(&self) -> u64 {
        self.adam.step
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let io = |e| Error::io("writing checkpoint", e);
        let mut w = BufWriter::new(w);
        let s = &self.store;
        let hidden = s.aggregator().map_or(0, |a| a.hidden());
        let mut head = Vec::with_capacity(48);
        head.extend_from_slice(MAGIC);
        head.extend_from_slice(&VERSION.to_le_bytes());
        head.push(s.kind().code());
        head.push(s.kind().space().code());
        head.extend_from_slice(&(s.dim() as u32).to_le_bytes());
        head.extend_from_slice(&(s.num_entities() as u64).to_le_bytes());
        head.extend_from_slice(&(s.num_relations() as u64).to_le_bytes());
        head.push(match s.norm() {
            Norm::L1 => 1,
            Norm::L2 => 2,
        });
        head.extend_from_slice(&(hidden as u32).to_le_bytes());
        head.extend_from_slice(&self.dataset_hash.to_le_bytes());
        w.write_all(&head).map_err(io)?;

        let empty: &[f32] = &[];
        let agg = s.aggregator().map_or(empty, |a| a.data());
        let arrays: [&[f32]; 9] = [
            s.entity_table(),
            s.relation_table(),
            agg,
            &self.adam.m_ent,
            &self.adam.v_ent,
            &self.adam.m_rel,
            &self.adam.v_rel,
            &self.adam.m_agg,
            &self.adam.v_agg,
        ];
        for a in arrays {
            for x in a {
                w.write_all(&x.to_le_bytes()).map_err(io)?;
            }
        }
        w.write_all(&self.adam.step.to_le_bytes()).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let bad = |m: &str| Error::format("checkpoint", m);
        let trunc = |_| bad("truncated file");
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(trunc)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = read_u32(&mut r).map_err(trunc)?;
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let mut codes = [0u8; 2];
        r.read_exact(&mut codes).map_err(trunc)?;
        let kind = ModelKind::from_code(codes[0]).ok_or_else(|| bad("unknown model code"))?;
        if kind.space().code() != codes[1] {
            return Err(bad("space code does not match the model"));
        }
        let dim = read_u32(&mut r).map_err(trunc)? as usize;
        let ne = read_u64(&mut r).map_err(trunc)? as usize;
        let nr = read_u64(&mut r).map_err(trunc)? as usize;
        let mut norm = [0u8; 1];
        r.read_exact(&mut norm).map_err(trunc)?;
        let norm = match norm[0] {
            1 => Norm::L1,
            2 => Norm::L2,
            _ => return Err(bad("unknown norm code")),
        };
        let hidden = read_u32(&mut r).map_err(trunc)? as usize;
        let dataset_hash = read_u64(&mut r).map_err(trunc)?;
        if dim == 0 {
            return Err(bad("zero dimension"));
        }

        let ew = kind.entity_width(dim);
        let rw = kind.relation_width(dim);
        let agg_len = if hidden == 0 {
            0
        } else {
            aggregator_len(ew, hidden)
        };
        let sizes = [ne * ew, nr * rw, agg_len];
        let mut read_array = |n: usize| -> Result<Vec<f32>> {
            let mut bytes = vec![0u8; n * 4];
            r.read_exact(&mut bytes).map_err(trunc)?;
            Ok(bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect())
        };
        let entities = read_array(sizes[0])?;
        let relations = read_array(sizes[1])?;
        let agg = read_array(sizes[2])?;
        let mut moments: [Vec<f32>; 6] = Default::default();
        for (i, m) in moments.iter_mut().enumerate() {
            *m = read_array(sizes[i / 2])?;
        }
        let step = read_u64(&mut r).map_err(trunc)?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest)
            .map_err(|e| Error::io("reading checkpoint", e))?
            != 0
        {
            return Err(bad("trailing bytes"));
        }

        let mut store = ParameterStore::from_tables(kind, dim, entities, relations).with_norm(norm);
        if store.num_entities() != ne || store.num_relations() != nr {
            return Err(bad("table sizes do not match the header"));
        }
        if hidden > 0 {
            store.set_aggregator(Some(AggregatorParams::from_parts(ew, hidden, agg)));
        }
        Ok(Checkpoint {
            store,
            adam: AdamState::from_parts(moments, step),
            dataset_hash,
        })
    }

    /// Writes to a sibling temporary file and renames it into place, so an
    /// interrupted write never replaces a good checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("vlpc.tmp");
        let file = fs::File::create(&tmp)
            .map_err(|e| Error::io(format!("creating {}", tmp.display()), e))?;
        self.write_to(&file)?;
        file.sync_all()
            .map_err(|e| Error::io(format!("syncing {}", tmp.display()), e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming to {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::read_from(file)
    }
}
