//! Filtered link-prediction evaluation.

pub mod rank;
pub mod report;

pub use rank::{filtered_rank, rank_triples, unfiltered_rank, RankResult, ScoreMode, Scorer};
pub use report::{
    cells_to_tsv, evaluate, format_table, parse_report, EvalReport, Metrics, ReportCell,
};
