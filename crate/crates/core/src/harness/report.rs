use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use super::{Extremes, RankingTable, RunStatistics};
use crate::data_io::FeatureTag;
use crate::{Error, Result};

pub const RUN_COLUMNS: [&str; 12] = [
    "dataset",
    "algorithm",
    "run",
    "sse",
    "nmse",
    "epsilon_ratio",
    "ci",
    "csi",
    "nmi",
    "avg_intra",
    "avg_inter",
    "wall_seconds",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Report<'a> {
    /// One row per run.
    Runs(&'a [RunStatistics]),
    /// Best / worst / average per (dataset, algorithm).
    Summary(&'a [RunStatistics]),
    Ranking(&'a RankingTable),
}

/// Formats a float in `%.9e` precision (nine digits after the leading one),
/// using positional notation for moderate exponents and trimming zeros.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.9e}");
        let (mantissa, exponent) = s.split_once('e').unwrap_or((&s, "0"));
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        format_sig(x).parse::<f64>().map(Value::from).unwrap_or(Value::Null)
    } else {
        Value::Null
    }
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn runs_csv(stats: &[RunStatistics]) -> String {
    let mut out = RUN_COLUMNS.join(",");
    out.push('\n');
    for st in stats {
        for r in &st.runs {
            let _ = write!(out, "{},{},{}", csv_field(&st.dataset), st.algorithm, r.run);
            match &r.report {
                Some(m) => {
                    let fields = [
                        format_sig(m.sse),
                        format_sig(m.nmse),
                        format_sig(m.epsilon_ratio),
                        m.ci.map(|c| c.to_string()).unwrap_or_default(),
                        opt_cell(m.csi),
                        opt_cell(m.nmi),
                        format_sig(m.avg_intra),
                        format_sig(m.avg_inter),
                        format_sig(m.wall_seconds),
                    ];
                    for f in fields {
                        out.push(',');
                        out.push_str(&f);
                    }
                }
                None => out.push_str(&",".repeat(RUN_COLUMNS.len() - 3)),
            }
            out.push('\n');
        }
    }
    out
}

fn runs_json(stats: &[RunStatistics]) -> Value {
    let rows = stats
        .iter()
        .flat_map(|st| {
            st.runs.iter().map(move |r| {
                let mut row = Map::new();
                row.insert("dataset".into(), json!(st.dataset));
                row.insert("algorithm".into(), json!(st.algorithm.as_str()));
                row.insert("run".into(), json!(r.run));
                let m = r.report.as_ref();
                let f = |get: fn(&crate::metrics::MetricReport) -> Option<f64>| {
                    m.and_then(get).map(num).unwrap_or(Value::Null)
                };
                row.insert("sse".into(), f(|m| Some(m.sse)));
                row.insert("nmse".into(), f(|m| Some(m.nmse)));
                row.insert("epsilon_ratio".into(), f(|m| Some(m.epsilon_ratio)));
                row.insert("ci".into(), m.and_then(|m| m.ci).map(Value::from).unwrap_or(Value::Null));
                row.insert("csi".into(), f(|m| m.csi));
                row.insert("nmi".into(), f(|m| m.nmi));
                row.insert("avg_intra".into(), f(|m| Some(m.avg_intra)));
                row.insert("avg_inter".into(), f(|m| Some(m.avg_inter)));
                row.insert("wall_seconds".into(), f(|m| Some(m.wall_seconds)));
                if let Some(e) = &r.error {
                    row.insert("error".into(), json!(e));
                }
                Value::Object(row)
            })
        })
        .collect();
    Value::Array(rows)
}

const SUMMARY_QUANTITIES: [&str; 3] = ["intra", "inter", "wall"];

fn summary_parts(st: &RunStatistics) -> [Option<Extremes>; 3] {
    [st.intra, st.inter, st.wall_seconds]
}

fn summary_csv(stats: &[RunStatistics]) -> String {
    let mut out = String::from("dataset,algorithm,runs,failed");
    for q in SUMMARY_QUANTITIES {
        let _ = write!(out, ",{q}_best,{q}_worst,{q}_average");
    }
    out.push('\n');
    for st in stats {
        let _ = write!(out, "{},{},{},{}", csv_field(&st.dataset), st.algorithm, st.runs.len(), st.failed());
        for e in summary_parts(st) {
            let _ = write!(
                out,
                ",{},{},{}",
                opt_cell(e.map(|e| e.best)),
                opt_cell(e.map(|e| e.worst)),
                opt_cell(e.map(|e| e.average))
            );
        }
        out.push('\n');
    }
    out
}

fn summary_json(stats: &[RunStatistics]) -> Value {
    stats
        .iter()
        .map(|st| {
            let mut row = Map::new();
            row.insert("dataset".into(), json!(st.dataset));
            row.insert("algorithm".into(), json!(st.algorithm.as_str()));
            row.insert("runs".into(), json!(st.runs.len()));
            row.insert("failed".into(), json!(st.failed()));
            for (q, e) in SUMMARY_QUANTITIES.iter().zip(summary_parts(st)) {
                let v = match e {
                    Some(e) => json!({"best": num(e.best), "worst": num(e.worst), "average": num(e.average)}),
                    None => Value::Null,
                };
                row.insert((*q).into(), v);
            }
            Value::Object(row)
        })
        .collect()
}

fn ranking_csv(t: &RankingTable) -> String {
    let mut out = String::from("algorithm");
    for tag in FeatureTag::ALL {
        let _ = write!(out, ",{tag}");
    }
    out.push_str(",overall\n");
    for (i, alg) in t.algorithms.iter().enumerate() {
        out.push_str(&csv_field(alg));
        for tag in FeatureTag::ALL {
            out.push(',');
            out.push_str(&opt_cell(t.feature_ranks.get(&tag).map(|r| r[i])));
        }
        let _ = writeln!(out, ",{}", format_sig(t.overall[i]));
    }
    out
}

fn ranking_json(t: &RankingTable) -> Value {
    let algorithms: Vec<Value> = t
        .algorithms
        .iter()
        .enumerate()
        .map(|(i, alg)| {
            let features: Map<String, Value> =
                t.feature_ranks.iter().map(|(tag, r)| (tag.to_string(), num(r[i]))).collect();
            let datasets: Map<String, Value> =
                t.dataset_ranks.iter().map(|(d, r)| (d.clone(), num(r[i]))).collect();
            json!({"algorithm": alg, "features": features, "datasets": datasets, "overall": num(t.overall[i])})
        })
        .collect();
    Value::Array(algorithms)
}

pub fn render_report(report: Report<'_>, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => match report {
            Report::Runs(s) => runs_csv(s),
            Report::Summary(s) => summary_csv(s),
            Report::Ranking(t) => ranking_csv(t),
        },
        ReportFormat::Json => {
            let value = match report {
                Report::Runs(s) => runs_json(s),
                Report::Summary(s) => summary_json(s),
                Report::Ranking(t) => ranking_json(t),
            };
            let mut s = serde_json::to_string_pretty(&value).unwrap_or_default();
            s.push('\n');
            s
        }
    }
}

pub fn emit_report(report: Report<'_>, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_report(report, format)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits_after_the_leading_one() {
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(0.1), "0.1");
        assert_eq!(format_sig(std::f64::consts::PI), "3.141592654");
        assert_eq!(format_sig(-123456.789012), "-123456.789");
        assert_eq!(format_sig(1.2345678912e20), "1.234567891e20");
        assert_eq!(format_sig(1.5e-9), "1.5e-9");
        assert_eq!(format_sig(f64::NAN), "NaN");
        for x in [0.000123456789123, 98765.4321987654, 7.0 / 3.0] {
            let s = format_sig(x);
            let digits = s.trim_start_matches(['-', '0', '.']).chars().filter(char::is_ascii_digit).count();
            assert!(digits <= 10, "{s}");
            assert!((s.parse::<f64>().unwrap() - x).abs() <= x.abs() * 1e-9);
        }
    }

    #[test]
    fn formats_parse() {
        assert_eq!("CSV".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
