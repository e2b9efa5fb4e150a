//! Plain-text result tables for the `evaluate` command.

use std::fmt::Write;

use accu_core::evaluation::MeanMetrics;
use accu_core::model::ModelKind;
use accu_core::neural::format_topology;

const METRIC_LABELS: [&str; 4] = ["Overall Accuracy", "Precision", "Recall", "F1-Score"];

fn metric_values(m: &MeanMetrics) -> [f64; 4] {
    [m.overall_accuracy, m.precision, m.recall, m.f1]
}

/// One row per metric, one column per method.
pub fn method_table(results: &[(ModelKind, MeanMetrics)]) -> String {
    let mut out = String::new();
    write!(out, "{:<18}", "Metric").unwrap();
    for (kind, _) in results {
        write!(out, "{:>10}", kind.as_str()).unwrap();
    }
    out.push('\n');
    for (i, label) in METRIC_LABELS.iter().enumerate() {
        write!(out, "{label:<18}").unwrap();
        for (_, m) in results {
            write!(out, "{:>10.6}", metric_values(m)[i]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// One row per network topology: hidden-layer count, hidden units, metrics.
pub fn topology_table(results: &[(Vec<usize>, MeanMetrics)]) -> String {
    let mut out = String::new();
    write!(out, "{:<6}{:<16}{:>5}  {:<10}", "Model", "Topology", "HLN", "HLNN").unwrap();
    for label in METRIC_LABELS {
        write!(out, "{label:>18}").unwrap();
    }
    out.push('\n');
    for (i, (sizes, m)) in results.iter().enumerate() {
        let hidden = &sizes[1..sizes.len() - 1];
        let units = hidden.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        write!(out, "{:<6}{:<16}{:>5}  {:<10}", format!("M{}", i + 1), format_topology(sizes), hidden.len(), units).unwrap();
        for v in metric_values(m) {
            write!(out, "{v:>18.6}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(x: f64) -> MeanMetrics {
        MeanMetrics { overall_accuracy: x, precision: x / 2.0, recall: x / 4.0, f1: x / 8.0 }
    }

    #[test]
    fn method_table_layout() {
        let t = method_table(&[(ModelKind::Lda, m(0.8)), (ModelKind::Honn, m(0.9))]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("Metric") && lines[0].ends_with("HONN"));
        assert!(lines[1].starts_with("Overall Accuracy") && lines[1].ends_with("0.900000"));
        assert!(lines[4].contains("0.100000"));
    }

    #[test]
    fn topology_table_layout() {
        let t = topology_table(&[(vec![5, 6, 3], m(0.5)), (vec![5, 10, 8, 3], m(0.25))]);
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[1].starts_with("M1    5-6-3") && lines[1].contains("    1  6 "));
        assert!(lines[2].contains("5-10-8-3") && lines[2].contains("    2  10,8"));
    }
}
