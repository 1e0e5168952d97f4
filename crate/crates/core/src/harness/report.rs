//! Rendering of test reports and simulation grids as JSON or text tables.

use std::fmt::Write as _;

use serde_json::Value;

use super::simulate::GridResult;
use crate::hypothesis::{PartitionOutcome, TestReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Table,
}

/// Something [`emit_report`] can render.
pub trait Report {
    fn to_json(&self) -> Value;
    fn to_table(&self) -> String;
}

pub fn emit_report<R: Report + ?Sized>(result: &R, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&result.to_json()).expect("json renders");
            s.push('\n');
            s
        }
        OutputFormat::Table => result.to_table(),
    }
}

fn bits(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3}")
    } else {
        x.to_string()
    }
}

fn decision_word(report: &TestReport) -> &'static str {
    if report.is_reject() {
        "rej"
    } else {
        "acc"
    }
}

fn json_compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Report for TestReport {
    fn to_json(&self) -> Value {
        TestReport::to_json(self)
    }

    fn to_table(&self) -> String {
        let json = TestReport::to_json(self);
        let mut rows: Vec<(String, String)> = vec![
            ("test".into(), json_compact(&json["test"])),
            ("decision".into(), format!("{} ({})", json_compact(&json["decision"]), decision_word(self))),
            ("statistic_bits".into(), bits(self.statistic_bits)),
            ("threshold_bits".into(), bits(self.threshold_bits)),
            ("alpha".into(), self.alpha.to_string()),
            ("code".into(), self.code.clone()),
            ("m".into(), self.m.to_string()),
            ("alphabet_size".into(), self.alphabet_size.to_string()),
            ("piece_lengths".into(), format!("{:?}", self.piece_lengths)),
        ];
        for (k, v) in &self.extra {
            rows.push((k.clone(), json_compact(v)));
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }
}

impl Report for PartitionOutcome {
    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("outcome serializes")
    }

    fn to_table(&self) -> String {
        let mut out = self.aggregate.to_table();
        out.push('\n');
        let _ = writeln!(
            out,
            "{:>9}  {:>6}  {:>14}  {:>14}  decision",
            "partition", "cells", "statistic", "threshold"
        );
        for (i, r) in self.per_partition.iter().enumerate() {
            let trivial = r.extra.get("trivially_accepted") == Some(&Value::Bool(true));
            let _ = writeln!(
                out,
                "{:>9}  {:>6}  {:>14}  {:>14}  {}{}",
                i + 1,
                r.alphabet_size,
                bits(r.statistic_bits),
                bits(r.threshold_bits),
                decision_word(r),
                if trivial { " (trivial)" } else { "" }
            );
        }
        out
    }
}

impl Report for GridResult {
    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("grid serializes")
    }

    /// One row per parameter and one column per length, with the majority
    /// decision and the rejection count of each cell.
    fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {:?} test, code {}, alpha {}, m {}, {} replicates, seed {}",
            self.test, self.code, self.alpha, self.m, self.replicates, self.seed
        );
        let header: Vec<String> = self.lengths.iter().map(|t| length_label(*t)).collect();
        let cells: Vec<Vec<String>> = (0..self.params.len())
            .map(|p| {
                (0..self.lengths.len())
                    .map(|l| {
                        let c = self.cell(p, l);
                        if c.error.is_some() && c.rejections == 0 {
                            "err".to_string()
                        } else {
                            let word = if c.majority_rejects() { "rej" } else { "acc" };
                            format!("{word} {}/{}", c.rejections, c.replicates)
                        }
                    })
                    .collect()
            })
            .collect();
        let width = header
            .iter()
            .chain(cells.iter().flatten())
            .map(String::len)
            .max()
            .unwrap_or(0);
        let label_width = self
            .params
            .iter()
            .map(|p| p.to_string().len())
            .max()
            .unwrap_or(0)
            .max(5);
        let _ = write!(out, "{:<label_width$}", "param");
        for h in &header {
            let _ = write!(out, "  {h:>width$}");
        }
        out.push('\n');
        for (p, row) in self.params.iter().zip(&cells) {
            let _ = write!(out, "{:<label_width$}", p.to_string());
            for cell in row {
                let _ = write!(out, "  {cell:>width$}");
            }
            out.push('\n');
        }
        for c in self.cells.iter().filter(|c| c.error.is_some()) {
            let _ = writeln!(
                out,
                "# error at param {} length {}: {}",
                c.param,
                c.length,
                c.error.as_deref().unwrap_or_default()
            );
        }
        out
    }
}

/// `2^k` for powers of two, the plain number otherwise.
fn length_label(t: usize) -> String {
    if t.is_power_of_two() && t >= 2 {
        format!("2^{}", t.trailing_zeros())
    } else {
        t.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{CodeSpec, RCode};
    use crate::harness::plan::{SimulationPlan, SourceFamily};
    use crate::harness::simulate::run_simulation;
    use crate::hypothesis::{serial_independence_test, TestKind};
    use crate::sample::{Alphabet, Sample};

    fn grid() -> GridResult {
        let mut plan = SimulationPlan::new(
            SourceFamily::Bernoulli,
            TestKind::Serial,
            vec![0.5, 0.9],
            vec![128, 1000],
        );
        plan.replicates = 3;
        plan.code = CodeSpec::R(2);
        run_simulation(&plan).unwrap()
    }

    #[test]
    fn report_json_keys() {
        let s = Sample::single(Alphabet::binary(), vec![0, 1, 1, 0, 1, 0, 0, 1]).unwrap();
        let r = serial_independence_test(&s, 0, &RCode::new(2), 0.01).unwrap();
        let v: Value = serde_json::from_str(&emit_report(&r, OutputFormat::Json)).unwrap();
        assert_eq!(v.as_object().unwrap().len(), 10);
        let table = emit_report(&r, OutputFormat::Table);
        assert!(table.contains("acc"));
    }

    #[test]
    fn grid_table_layout() {
        let table = emit_report(&grid(), OutputFormat::Table);
        let lines: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("2^7") && lines[0].contains("1000"));
        assert!(lines[1].starts_with("0.5"));
        assert!(lines[1].contains("/3"));
    }

    #[test]
    fn grid_json_has_rates() {
        let v = grid().to_json();
        for cell in v["cells"].as_array().unwrap() {
            let rate = cell["rejection_rate"].as_f64().unwrap();
            let expected = cell["rejections"].as_f64().unwrap() / cell["replicates"].as_f64().unwrap();
            assert_eq!(rate, expected);
        }
    }
}
