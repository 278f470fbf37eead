//! Metric aggregation and `report.tsv` / `ranks.tsv` serialization.

use std::fmt::Write as _;

use crate::data::split::rmp_classify;
use crate::data::{
    DistanceBucket, DistanceIndex, FilterIndex, KnowledgeGraph, MappingClass, Triple,
};
use crate::error::{Error, Result};
use crate::eval::rank::{rank_triples, RankResult, Scorer};
use crate::real::Real;

/// MRR and Hits@{1,3,10} over a set of ranks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Metrics {
    pub count: usize,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
}

impl Metrics {
    pub fn from_ranks<I: IntoIterator<Item = f64>>(ranks: I) -> Self {
        let mut m = Metrics::default();
        for r in ranks {
            m.count += 1;
            m.mrr += 1.0 / r;
            m.hits1 += (r <= 1.0) as u8 as f64;
            m.hits3 += (r <= 3.0) as u8 as f64;
            m.hits10 += (r <= 10.0) as u8 as f64;
        }
        if m.count > 0 {
            let n = m.count as f64;
            m.mrr /= n;
            m.hits1 /= n;
            m.hits3 /= n;
            m.hits10 /= n;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub overall: Metrics,
    pub distance: Vec<(DistanceBucket, Metrics)>,
    /// Per base relation name; head and tail prediction merged.
    pub relation: Vec<(String, Metrics)>,
    pub rmp_head: Vec<(MappingClass, Metrics)>,
    pub rmp_tail: Vec<(MappingClass, Metrics)>,
    pub ranks: Vec<RankResult>,
}

/// One `section / key / count / value` line of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportCell {
    pub section: String,
    pub key: String,
    pub count: usize,
    pub value: f64,
}

impl EvalReport {
    pub fn from_ranks(kg: &KnowledgeGraph, ranks: Vec<RankResult>) -> Self {
        let overall = Metrics::from_ranks(ranks.iter().map(|r| r.rank));
        let distance = DistanceBucket::ALL
            .iter()
            .map(|&b| {
                let m = Metrics::from_ranks(ranks.iter().filter(|r| r.bucket == b).map(|r| r.rank));
                (b, m)
            })
            .collect();
        let relation = (0..kg.num_base_relations() as u32)
            .map(|rel| {
                let m = Metrics::from_ranks(
                    ranks
                        .iter()
                        .filter(|r| r.base_relation == rel)
                        .map(|r| r.rank),
                );
                (kg.vocab().relation_name(rel).to_string(), m)
            })
            .collect();
        let rmp = |head: bool| {
            MappingClass::ALL
                .iter()
                .map(|&c| {
                    let m = Metrics::from_ranks(
                        ranks
                            .iter()
                            .filter(|r| r.class == c && r.head_direction == head)
                            .map(|r| r.rank),
                    );
                    (c, m)
                })
                .collect()
        };
        EvalReport {
            overall,
            distance,
            relation,
            rmp_head: rmp(true),
            rmp_tail: rmp(false),
            ranks,
        }
    }

    pub fn cells(&self) -> Vec<ReportCell> {
        let cell = |section: &str, key: &str, count: usize, value: f64| ReportCell {
            section: section.to_string(),
            key: key.to_string(),
            count,
            value,
        };
        let o = &self.overall;
        let mut out = vec![
            cell("overall", "mrr", o.count, o.mrr),
            cell("overall", "hits@1", o.count, o.hits1),
            cell("overall", "hits@3", o.count, o.hits3),
            cell("overall", "hits@10", o.count, o.hits10),
        ];
        for (b, m) in &self.distance {
            out.push(cell("distance", b.label(), m.count, m.mrr));
        }
        for (name, m) in &self.relation {
            out.push(cell("relation", name, m.count, m.mrr));
        }
        for (c, m) in &self.rmp_head {
            out.push(cell("rmp-head", c.label(), m.count, m.mrr));
        }
        for (c, m) in &self.rmp_tail {
            out.push(cell("rmp-tail", c.label(), m.count, m.mrr));
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        cells_to_tsv(&self.cells())
    }

    /// `head relation tail rank bucket`, one line per ranked triple.
    pub fn ranks_tsv(&self, kg: &KnowledgeGraph) -> String {
        let v = kg.vocab();
        let mut s = String::new();
        for r in &self.ranks {
            let Triple {
                head,
                relation,
                tail,
            } = r.triple;
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                v.entity_name(head),
                v.relation_name(relation),
                v.entity_name(tail),
                r.rank,
                r.bucket.label()
            );
        }
        s
    }
}

pub fn cells_to_tsv(cells: &[ReportCell]) -> String {
    let mut s = String::new();
    for c in cells {
        let _ = writeln!(s, "{}\t{}\t{}\t{:.6}", c.section, c.key, c.count, c.value);
    }
    s
}

pub fn parse_report(text: &str) -> Result<Vec<ReportCell>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let bad = |m: &str| Error::format("report", format!("line {}: {m}", i + 1));
        if f.len() != 4 {
            return Err(bad("expected 4 tab-separated fields"));
        }
        out.push(ReportCell {
            section: f[0].to_string(),
            key: f[1].to_string(),
            count: f[2].parse().map_err(|_| bad("bad count"))?,
            value: f[3].parse().map_err(|_| bad("bad value"))?,
        });
    }
    Ok(out)
}

/// Human-readable table of the cells in `sections` (all sections when empty).
pub fn format_table(cells: &[ReportCell], sections: &[&str]) -> String {
    let chosen: Vec<&ReportCell> = cells
        .iter()
        .filter(|c| sections.is_empty() || sections.contains(&c.section.as_str()))
        .collect();
    let sw = chosen
        .iter()
        .map(|c| c.section.len())
        .max()
        .unwrap_or(0)
        .max(7);
    let kw = chosen.iter().map(|c| c.key.len()).max().unwrap_or(0).max(3);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<sw$}  {:<kw$}  {:>8}  {:>8}",
        "section", "key", "count", "value"
    );
    let mut last = "";
    for c in chosen {
        let section = if c.section == last {
            ""
        } else {
            c.section.as_str()
        };
        last = &c.section;
        let _ = writeln!(
            s,
            "{:<sw$}  {:<kw$}  {:>8}  {:>8.4}",
            section, c.key, c.count, c.value
        );
    }
    s
}

/// Ranks `triples` (normally the augmented test split) and aggregates every
/// report cell.
pub fn evaluate<F: Real>(
    kg: &KnowledgeGraph,
    dist: &DistanceIndex,
    filter: &FilterIndex,
    scorer: &Scorer<'_, F>,
    triples: &[Triple],
) -> EvalReport {
    let classes = rmp_classify(kg);
    let ranks = rank_triples(kg, dist, filter, &classes, scorer, triples);
    EvalReport::from_ranks(kg, ranks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_from_ranks() {
        let m = Metrics::from_ranks([1.0, 2.0, 4.0, 20.0]);
        assert_eq!(m.count, 4);
        assert!((m.mrr - (1.0 + 0.5 + 0.25 + 0.05) / 4.0).abs() < 1e-15);
        assert_eq!((m.hits1, m.hits3, m.hits10), (0.25, 0.5, 0.75));
        let perfect = Metrics::from_ranks([1.0; 5]);
        assert_eq!(
            (perfect.mrr, perfect.hits1, perfect.hits10),
            (1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn tsv_round_trip() {
        let cells = vec![
            ReportCell {
                section: "overall".into(),
                key: "mrr".into(),
                count: 10,
                value: 0.25,
            },
            ReportCell {
                section: "distance".into(),
                key: ">=4".into(),
                count: 3,
                value: 0.125,
            },
        ];
        let text = cells_to_tsv(&cells);
        assert_eq!(parse_report(&text).unwrap(), cells);
        assert!(parse_report("a\tb\tc\n").is_err());
        let table = format_table(&cells, &["distance"]);
        assert!(table.contains(">=4") && !table.contains("overall"));
    }
}
