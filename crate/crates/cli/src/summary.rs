//! Aggregation of instance reports into spread tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ma_lab_core::estimates::{fmt_num, EstimateReport, Verdict};
use serde::Serialize;

use crate::error::CliError;
use crate::manifest::RunManifest;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spread {
    pub name: String,
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerdictCount {
    pub inequality_id: String,
    pub pass: usize,
    pub fail: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema: String,
    pub instances: Vec<String>,
    pub constants: Vec<Spread>,
    pub verdicts: Vec<VerdictCount>,
}

/// Loads reports from manifests, or from report documents given directly.
/// Every file must carry the same schema.
pub fn load_reports(paths: &[PathBuf]) -> Result<Vec<EstimateReport>, CliError> {
    let mut expected: Option<String> = None;
    let mut check = |schema: &str, path: &Path| match &expected {
        None => {
            expected = Some(schema.to_string());
            Ok(())
        }
        Some(e) if e == schema => Ok(()),
        Some(e) => Err(CliError::MixedSchema { expected: e.clone(), found: schema.into(), path: path.into() }),
    };
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(CliError::json(path))?;
        let report_path = if value.get("outputs").is_some() {
            let m: RunManifest = serde_json::from_value(value).map_err(CliError::json(path))?;
            check(&m.schema, path)?;
            let o = m
                .output("report_json")
                .ok_or_else(|| CliError::Validation(format!("{}: manifest lists no report", path.display())))?;
            path.parent().unwrap_or(Path::new(".")).join(&o.path)
        } else {
            path.clone()
        };
        let text = std::fs::read_to_string(&report_path).map_err(CliError::io(&report_path))?;
        let r: EstimateReport = serde_json::from_str(&text).map_err(CliError::json(&report_path))?;
        check(&r.schema, &report_path)?;
        out.push(r);
    }
    Ok(out)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Min, median and max of every constant and verdict counts of every row id.
pub fn summarize(reports: &[EstimateReport]) -> Result<Summary, CliError> {
    let first = reports.first().ok_or(CliError::EmptyInput)?;
    if let Some(r) = reports.iter().find(|r| r.schema != first.schema) {
        return Err(CliError::MixedSchema {
            expected: first.schema.clone(),
            found: r.schema.clone(),
            path: PathBuf::from(&r.instance_id),
        });
    }
    let mut values: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut verdicts: Vec<VerdictCount> = Vec::new();
    for r in reports {
        for (k, v) in &r.constants {
            values.entry(k).or_default().push(*v);
        }
        for row in &r.rows {
            let i = match verdicts.iter().position(|v| v.inequality_id == row.inequality_id) {
                Some(i) => i,
                None => {
                    verdicts.push(VerdictCount { inequality_id: row.inequality_id.clone(), pass: 0, fail: 0 });
                    verdicts.len() - 1
                }
            };
            match row.verdict {
                Verdict::Pass => verdicts[i].pass += 1,
                Verdict::Fail => verdicts[i].fail += 1,
            }
        }
    }
    let constants = values
        .into_iter()
        .map(|(name, mut v)| {
            v.sort_by(f64::total_cmp);
            Spread { name: name.into(), count: v.len(), min: v[0], median: median(&v), max: v[v.len() - 1] }
        })
        .collect();
    Ok(Summary {
        schema: first.schema.clone(),
        instances: reports.iter().map(|r| r.instance_id.clone()).collect(),
        constants,
        verdicts,
    })
}

impl Summary {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# schema={}\nconstant,count,min,median,max\n", self.schema);
        for c in &self.constants {
            let _ = writeln!(s, "\"{}\",{},{},{},{}", c.name, c.count, fmt_num(c.min), fmt_num(c.median), fmt_num(c.max));
        }
        s
    }

    pub fn verdicts_csv(&self) -> String {
        let mut s = format!("# schema={}\ninequality_id,pass,fail\n", self.schema);
        for v in &self.verdicts {
            let _ = writeln!(s, "{},{},{}", v.inequality_id, v.pass, v.fail);
        }
        s
    }

    pub fn to_table(&self) -> String {
        let num = |v: f64| if v.is_finite() { format!("{v:.6e}") } else { fmt_num(v) };
        let w = self.constants.iter().map(|c| c.name.len()).chain([8]).max().unwrap_or(8);
        let mut s = format!("schema {}, {} instance(s)\n\n", self.schema, self.instances.len());
        let _ = writeln!(s, "{:<w$}  {:>5}  {:>13}  {:>13}  {:>13}", "constant", "n", "min", "median", "max");
        for c in &self.constants {
            let _ = writeln!(s, "{:<w$}  {:>5}  {:>13}  {:>13}  {:>13}", c.name, c.count, num(c.min), num(c.median), num(c.max));
        }
        let w = self.verdicts.iter().map(|v| v.inequality_id.len()).chain([10]).max().unwrap_or(10);
        let _ = writeln!(s, "\n{:<w$}  {:>5}  {:>5}", "inequality", "pass", "fail");
        for v in &self.verdicts {
            let _ = writeln!(s, "{:<w$}  {:>5}  {:>5}", v.inequality_id, v.pass, v.fail);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(id: &str, c1: f64, ok: bool) -> EstimateReport {
        let mut r = EstimateReport::new(id);
        r.constant("C1", c1);
        r.row("levelsets", 1.0, 2.0, 0.5, ok);
        r
    }

    #[test]
    fn spread_and_counts() {
        let rs = vec![report("a", 3.0, true), report("b", 1.0, false), report("c", 2.0, true), report("d", 10.0, true)];
        let s = summarize(&rs).unwrap();
        assert_eq!(s.constants, vec![Spread { name: "C1".into(), count: 4, min: 1.0, median: 2.5, max: 10.0 }]);
        assert_eq!(s.verdicts, vec![VerdictCount { inequality_id: "levelsets".into(), pass: 3, fail: 1 }]);
        assert!(s.to_csv().contains("\"C1\",4,1.0,2.5,10.0"));
        assert!(s.to_table().contains("levelsets"));
    }

    #[test]
    fn empty_and_mixed() {
        assert!(matches!(summarize(&[]), Err(CliError::EmptyInput)));
        let mut b = report("b", 1.0, true);
        b.schema = "ma-lab/0".into();
        assert!(matches!(summarize(&[report("a", 1.0, true), b]), Err(CliError::MixedSchema { .. })));
    }

    #[test]
    fn infinite_constants_sort_last() {
        let s = summarize(&[report("a", f64::INFINITY, true), report("b", 1.0, true)]).unwrap();
        assert_eq!((s.constants[0].min, s.constants[0].max), (1.0, f64::INFINITY));
    }
}
