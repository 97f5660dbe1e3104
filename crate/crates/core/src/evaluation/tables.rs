//! Plain-text tables: one row per system, an F1(%) / Acc.(%) column pair per category.

use super::{AblationRow, AnnotatorReport, CvReport, ScoreRow};
use crate::corpus::Category;

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Left-aligns the first column and right-aligns the rest.
pub fn render(headers: &[String], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width = vec![0usize; cols];
    for r in std::iter::once(headers).chain(rows.iter().map(Vec::as_slice)) {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |r: &[String]| {
        r.iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    format!("{:<w$}", c, w = width[i])
                } else {
                    format!("{:>w$}", c, w = width[i])
                }
            })
            .collect::<Vec<_>>()
            .join(" | ")
    };
    let rule: String = width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-");
    let mut out = String::new();
    out.push_str(&line(headers));
    out.push('\n');
    out.push_str(&rule);
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

fn headers(first: &str, categories: &[Category]) -> Vec<String> {
    let mut h = vec![first.to_string()];
    for c in categories {
        h.push(format!("{c} F1(%)"));
        h.push(format!("{c} Acc.(%)"));
    }
    h
}

fn cells(scores: impl IntoIterator<Item = ScoreRow>) -> Vec<String> {
    scores
        .into_iter()
        .flat_map(|s| [pct(s.macro_f1), pct(s.accuracy)])
        .collect()
}

pub fn cv_table(model: &str, reports: &[CvReport]) -> String {
    let cats: Vec<Category> = reports.iter().map(|r| r.category).collect();
    let mut row = vec![model.to_string()];
    row.extend(cells(reports.iter().map(|r| r.mean)));
    render(&headers("Model", &cats), &[row])
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let cats: Vec<Category> = rows
        .first()
        .map(|r| r.cells.iter().map(|c| c.category).collect())
        .unwrap_or_default();
    let body: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let added = r.flags.added();
            let label = if i == 0 || added.is_empty() {
                r.label.clone()
            } else {
                format!("  + {}", added.join(" + "))
            };
            let mut out = vec![label];
            out.extend(cells(r.cells.iter().map(|c| c.mean)));
            out
        })
        .collect();
    render(&headers("Features", &cats), &body)
}

pub fn annotator_table(category: Category, names: &[String], report: &AnnotatorReport) -> String {
    let mut body: Vec<Vec<String>> = report
        .annotators
        .iter()
        .zip(names)
        .map(|(s, n)| {
            let mut r = vec![n.clone()];
            r.extend(cells([*s]));
            r
        })
        .collect();
    for (name, s) in [("Annotator average", report.average), ("Logistic Regression", report.model)] {
        let mut r = vec![name.to_string()];
        r.extend(cells([s]));
        body.push(r);
    }
    let mut out = render(&headers("Annotators", &[category]), &body);
    out.push_str(&format!("free-marginal kappa: {:.4}\n", report.kappa));
    out
}
