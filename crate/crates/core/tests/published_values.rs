//! Reference numbers quoted by the acceptance runner and the default search
//! grids, checked against the published tables in `paper.md`.

mod common;

use common::*;
use vlp_core::train::default_grid;

fn source_text() -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../paper.md");
    std::fs::read_to_string(path).expect("paper.md at the workspace root")
}

/// Numeric cells of every table row whose first cell is `label`, with the
/// LaTeX emphasis, thousands separators and percent signs stripped.
fn rows(text: &str, label: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter_map(|line| {
            let mut cells = line.trim_end().trim_end_matches('\\').split('&');
            (cells.next()?.trim() == label).then(|| {
                cells
                    .filter_map(|c| {
                        let cleaned: String = c
                            .chars()
                            .filter(|ch| ch.is_ascii_digit() || *ch == '.' || *ch == '-')
                            .collect();
                        cleaned.parse().ok()
                    })
                    .collect()
            })
        })
        .collect()
}

fn has_row(text: &str, label: &str, values: &[f64]) -> bool {
    rows(text, label).iter().any(|r| r.starts_with(values))
}

#[test]
fn dataset_statistics() {
    let p = source_text();
    let pairs =
        |f: fn(&DatasetStats) -> usize| [f(&WN18RR_STATS) as f64, f(&FB15K237_STATS) as f64];
    assert!(has_row(&p, r"\#entity", &pairs(|s| s.entities)));
    assert!(has_row(&p, r"\#relation", &pairs(|s| s.relations)));
    assert!(has_row(&p, r"\#training", &pairs(|s| s.train)));
    assert!(has_row(&p, r"\#validation", &pairs(|s| s.valid)));
    assert!(has_row(&p, r"\#test", &pairs(|s| s.test)));
}

#[test]
fn link_prediction_and_distance_split_results() {
    let p = source_text();
    assert!(
        has_row(&p, "RotatE-VLP", &ROTATE_VLP_WN18RR),
        "{:?}",
        rows(&p, "RotatE-VLP")
    );
    assert!(
        has_row(&p, "RotatE", &ROTATE_WN18RR_BUCKETS),
        "{:?}",
        rows(&p, "RotatE")
    );
    let (red, adv) = DISTMULT_FB15K237_RED_ADV;
    assert!(rows(&p, "DistMult-ReD")
        .iter()
        .any(|r| r.get(2) == Some(&red)));
    assert!(rows(&p, "DistMult-Adv")
        .iter()
        .any(|r| r.get(2) == Some(&adv)));
}

#[test]
fn reference_sweep_endpoints() {
    let p = source_text();
    let legend = p
        .find(r"\addlegendentry{RotatE-VLP}")
        .expect("sweep legend");
    let start = p[..legend]
        .rfind("coordinates {")
        .expect("coordinates block");
    let block = &p[start..legend];
    for (n, mrr) in ROTATE_VLP_SWEEP_ENDPOINTS {
        assert!(
            block.contains(&format!("({n}, {mrr})")),
            "({n}, {mrr}) not in {block}"
        );
    }
}

#[test]
fn default_grids_follow_the_search_space_table() {
    let p = source_text();
    let table = &p[p
        .find("Hyperparameter  & Search Space")
        .expect("search space table")..];
    let set = |label: &str| -> Vec<String> {
        let line = table
            .lines()
            .find(|l| l.trim_start().starts_with(label))
            .unwrap();
        let inner = &line[line.find(r"\{").unwrap() + 2..line.find(r"\}").unwrap()];
        inner.split(',').map(|s| s.trim().to_string()).collect()
    };
    let grid = |key: &str| -> Vec<String> {
        default_grid(key)
            .unwrap()
            .into_iter()
            .map(String::from)
            .collect()
    };
    assert_eq!(grid("batch"), set("$b$"));
    assert_eq!(grid("dim"), set("$d$"));
    assert_eq!(grid("lambda"), set(r"$\lambda$"));
    assert_eq!(grid("gamma"), set(r"$\gamma$"));
    for key in ["alpha0", "alpha1", "alpha2"] {
        assert_eq!(grid(key), set(r"$\alpha_0"));
    }
}
