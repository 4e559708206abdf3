//! Deterministic number formatting and JSON/CSV report writers.
//!
//! Numbers are written with 17 significant digits in lowercase scientific
//! notation; log-domain magnitudes are emitted as (sign, log-magnitude)
//! pairs next to a plain value that is 0 or ±inf when unrepresentable.

use std::io::Write;

use serde::Serialize;
use serde_json::value::RawValue;

use crate::bounds::CertReport;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

/// Scientific notation with 17 significant digits; non-finite values become
/// `inf`, `-inf` or `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// JSON number in the fixed format; non-finite values become strings.
fn num(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() { fmt_f64(x) } else { format!("\"{}\"", fmt_f64(x)) };
    RawValue::from_string(text).expect("formatted number is valid JSON")
}

fn nums(xs: &[f64]) -> Vec<Box<RawValue>> {
    xs.iter().map(|&x| num(x)).collect()
}

/// A positive quantity known by its natural logarithm.
#[derive(Serialize)]
struct Magnitude {
    value: Box<RawValue>,
    sign: i8,
    log_magnitude: Box<RawValue>,
}

fn magnitude(log: f64) -> Magnitude {
    let sign = if log == f64::NEG_INFINITY || log.is_nan() { 0 } else { 1 };
    Magnitude { value: num(log.exp()), sign, log_magnitude: num(log) }
}

/// Parameters in insertion order with fixed-format numbers.
struct ParamMap(Vec<(String, Box<RawValue>)>);

impl Serialize for ParamMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

#[derive(Serialize)]
struct Failure {
    point: Vec<Box<RawValue>>,
    error: String,
}

#[derive(Serialize)]
struct CertJson {
    theorem: String,
    grid: String,
    params: ParamMap,
    notes: Vec<String>,
    c_fit: Magnitude,
    c_base: Magnitude,
    ratio_min: Magnitude,
    ratio_max: Magnitude,
    ratio_min_base: Magnitude,
    stable: bool,
    lower_stable: bool,
    pass: bool,
    argmax: Vec<Box<RawValue>>,
    points: usize,
    failures: Vec<Failure>,
}

/// The report as a single JSON object (rows go to the CSV).
pub fn cert_report_json(rep: &CertReport) -> Result<String> {
    let params = ParamMap(rep.params.iter().map(|(k, v)| (k.clone(), num(*v))).collect());
    let j = CertJson {
        theorem: rep.theorem_id.clone(),
        grid: rep.grid.clone(),
        params,
        notes: rep.notes.clone(),
        c_fit: magnitude(rep.log_c_fit),
        c_base: magnitude(rep.log_c_base),
        ratio_min: magnitude(rep.log_ratio_min),
        ratio_max: magnitude(rep.log_ratio_max),
        ratio_min_base: magnitude(rep.log_min_base),
        stable: rep.stable,
        lower_stable: rep.lower_stable,
        pass: rep.pass,
        argmax: nums(&rep.argmax),
        points: rep.rows.len(),
        failures: rep.failures.iter().map(|(p, e)| Failure { point: nums(p), error: e.clone() }).collect(),
    };
    let mut s = serde_json::to_string_pretty(&j).map_err(|e| Error::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Per-point CSV: point coordinates, both sides as plain and log values,
/// the log ratio, base-grid membership and any evaluation error.
pub fn write_cert_csv<W: Write>(rep: &CertReport, coords: &[&str], w: W) -> Result<()> {
    let mut wr = csv_writer(w);
    let width = rep.rows.first().map_or(coords.len(), |r| r.point.len());
    let mut header: Vec<String> =
        (0..width).map(|j| coords.get(j).map_or_else(|| format!("p{j}"), |s| s.to_string())).collect();
    header.extend(["lhs", "log_lhs", "rhs", "log_rhs", "log_ratio", "in_base", "error"].map(String::from));
    wr.write_record(&header)?;
    for r in &rep.rows {
        let mut row: Vec<String> = r.point.iter().map(|&x| fmt_f64(x)).collect();
        row.extend([
            fmt_f64(r.log_lhs.exp()),
            fmt_f64(r.log_lhs),
            fmt_f64(r.log_rhs.exp()),
            fmt_f64(r.log_rhs),
            fmt_f64(r.log_ratio()),
            (r.in_base as u8).to_string(),
            r.error.clone().unwrap_or_default(),
        ]);
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// One evaluated solution sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub re: f64,
    pub im: f64,
    pub log_abs: f64,
    /// Log envelope, when an envelope was requested.
    pub log_envelope: Option<f64>,
}

/// `t, x_1..x_d, re_u, im_u, abs_u, log_abs_u, envelope, log_envelope, log_ratio`.
pub fn write_evolve_csv<W: Write>(rows: &[EvolveRow], w: W) -> Result<()> {
    let mut wr = csv_writer(w);
    let d = rows.first().map_or(1, |r| r.x.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|j| format!("x_{j}")));
    header.extend(["re_u", "im_u", "abs_u", "log_abs_u", "envelope", "log_envelope", "log_ratio"].map(String::from));
    wr.write_record(&header)?;
    for r in rows {
        let mut row = vec![fmt_f64(r.t)];
        row.extend(r.x.iter().map(|&v| fmt_f64(v)));
        row.extend([fmt_f64(r.re), fmt_f64(r.im), fmt_f64(r.log_abs.exp()), fmt_f64(r.log_abs)]);
        match r.log_envelope {
            Some(e) => row.extend([fmt_f64(e.exp()), fmt_f64(e), fmt_f64(r.log_abs - e)]),
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// `index, node, weight, log_weight, scaled_weight`.
pub fn write_rule_csv<W: Write>(rule: &QuadratureRule, w: W) -> Result<()> {
    let mut wr = csv_writer(w);
    wr.write_record(["index", "node", "weight", "log_weight", "scaled_weight"])?;
    for i in 0..rule.len() {
        wr.write_record([
            i.to_string(),
            fmt_f64(rule.nodes[i]),
            fmt_f64(rule.weights[i]),
            fmt_f64(rule.log_weights[i]),
            fmt_f64(rule.scaled_weights[i]),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
