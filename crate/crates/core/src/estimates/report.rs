//! Per-instance estimate reports: measured constants and one row per
//! tested inequality.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance_id: String,
    pub inequality_id: String,
    #[serde(with = "num")]
    pub lhs: f64,
    #[serde(with = "num")]
    pub rhs: f64,
    #[serde(with = "num")]
    pub constant: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralRecord {
    /// `"U/2"`, `"3U/4"` or `"omega_prime"`.
    pub region: String,
    pub k: u32,
    pub value: f64,
}

pub const CSV_HEADER: &str = "instance_id,inequality_id,lhs,rhs,constant,verdict";

/// Every row id an instance report can carry.
pub const ROW_IDS: &[&str] = &[
    "john_det",
    "norm_identity",
    "alexandrov_measure",
    "section_nested",
    "section_height",
    "dilation_chain",
    "engulfing",
    "normalize_double_section",
    "covering_overlap",
    "covering_stability",
    "boundary_zero",
    "alex_band",
    "hessmean_average",
    "hessmean_gradient",
    "transformation_law",
    "divergence_identity",
    "contact_fraction",
    "hessian_floor",
    "abp_chain",
    "envelope_domination",
    "floor_rotation_invariance",
    "levelsets",
    "levelsets_covering",
    "maximal_inequality",
    "key_estimate",
    "layer_cake_k0",
    "layer_cake_k1",
    "layer_cake_k2",
    "main_llogk_k0",
    "main_llogk_k1",
    "main_llogk_k2",
    "reg_shape",
    "reg_transform_bounds",
    "reg_assembled_k0",
    "reg_assembled_k1",
    "reg_assembled_k2",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema: String,
    pub instance_id: String,
    #[serde(with = "num_map")]
    pub constants: BTreeMap<String, f64>,
    pub rows: Vec<ReportRow>,
    pub integrals: Vec<IntegralRecord>,
}

/// JSON has no infinities: non-finite values travel as `"inf"`, `"-inf"`
/// and `"nan"`.
pub mod num {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub(super) enum Repr {
        Num(f64),
        Text(String),
    }

    pub(super) fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Num(v)
        } else {
            Repr::Text(super::fmt_num(v))
        }
    }

    pub(super) fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("not a number: {other:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

mod num_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::num::{from_repr, to_repr, Repr};

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        m.iter().map(|(k, v)| (k, to_repr(*v))).collect::<BTreeMap<_, _>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        BTreeMap::<String, Repr>::deserialize(d)?.into_iter().map(|(k, v)| Ok((k, from_repr(v)?))).collect()
    }
}

/// Shortest round-trip decimal, independent of locale.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

impl EstimateReport {
    pub fn new(instance_id: impl Into<String>) -> Self {
        Self {
            schema: crate::SCHEMA.into(),
            instance_id: instance_id.into(),
            constants: BTreeMap::new(),
            rows: Vec::new(),
            integrals: Vec::new(),
        }
    }

    pub fn constant(&mut self, name: &str, value: f64) {
        self.constants.insert(name.into(), value);
    }

    pub fn row(&mut self, id: &str, lhs: f64, rhs: f64, constant: f64, ok: bool) {
        self.rows.push(ReportRow {
            instance_id: self.instance_id.clone(),
            inequality_id: id.into(),
            lhs,
            rhs,
            constant,
            verdict: Verdict::from_bool(ok),
        });
    }

    pub fn find(&self, id: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.inequality_id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail)
    }

    /// Rows as CSV, preceded by a `# schema` comment line.
    pub fn to_csv(&self) -> String {
        rows_csv(&self.rows)
    }
}

pub fn rows_csv<'a>(rows: impl IntoIterator<Item = &'a ReportRow>) -> String {
    let mut s = format!("# schema={}\n{CSV_HEADER}\n", crate::SCHEMA);
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.instance_id,
            r.inequality_id,
            fmt_num(r.lhs),
            fmt_num(r.rhs),
            fmt_num(r.constant),
            r.verdict.as_str()
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut r = EstimateReport::new("seed3");
        r.row("alex_band", 0.5, 1.0, 2.0, true);
        r.row("levelsets", 1.0, f64::INFINITY, 0.125, false);
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# schema=ma-lab/1");
        assert_eq!(lines[1], CSV_HEADER);
        assert_eq!(lines[2], "seed3,alex_band,0.5,1.0,2.0,pass");
        assert_eq!(lines[3], "seed3,levelsets,1.0,inf,0.125,fail");
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn json_round_trip() {
        let mut r = EstimateReport::new("a");
        r.constant("C1", 0.25);
        r.constant("theta", f64::INFINITY);
        r.row("main_llogk_k0", 1.0, 2.0, 0.5, true);
        r.row("levelsets", 1.0, f64::INFINITY, 0.125, false);
        let back: EstimateReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn row_ids_are_unique() {
        let mut ids = ROW_IDS.to_vec();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), ROW_IDS.len());
    }
}
