//! Stable text formats for every artifact the command-line front end reads
//! or writes.
//!
//! CSV conventions, shared by all matrix formats:
//!
//! - comma-separated values, one matrix row per line, no padding;
//! - comment/header lines start with `#` and carry `key=value` metadata;
//! - floats print in Rust's shortest round-trip form, so formatting is
//!   deterministic and parsing recovers the exact bits;
//! - `-1` marks an absent (never measured) entry in correlation and counts
//!   matrices; `nan` marks an undefined entry in violation maps;
//! - site indices in files are 0-based internal indices throughout.
//!
//! Counts files hold *directional* coincidence records: ingest sums the
//! `(q, r)` and `(r, q)` cells of each pair, and a pair is absent only when
//! both directions are `-1`. Writers emit totals in the upper triangle with
//! `-1` below the diagonal, which round-trips through that convention.
//!
//! JSON mirrors (`--format json`) use explicit schema structs serialized
//! with serde; absent/undefined entries become `null`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationResult;
use crate::correlations::{CorrelationMatrix, CorrelationMeta, Source, ViolationMap};
use crate::ensemble::EnsembleResult;
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::measurement::CoincidenceCounts;

/// Shortest round-trip float with lowercase `nan` for undefined entries.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

fn parse_f64(token: &str, context: &str) -> Result<f64> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Validation(format!("{context}: cannot parse '{token}' as a number")))
}

/// Split a CSV body into header key/value pairs and data lines.
fn split_headers(text: &str) -> (Vec<(String, String)>, Vec<&str>) {
    let mut headers = Vec::new();
    let mut data = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                headers.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        data.push(trimmed);
    }
    (headers, data)
}

fn parse_rows(data: &[&str], context: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::with_capacity(data.len());
    for line in data {
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|tok| parse_f64(tok, context))
            .collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::Validation(format!("{context}: no data rows")));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::Validation(format!("{context}: ragged rows")));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Lattice specs (JSON)

pub fn parse_lattice_spec(json: &str) -> Result<LatticeSpec> {
    serde_json::from_str(json)
        .map_err(|e| Error::Validation(format!("lattice spec: {e}")))
}

pub fn format_lattice_spec(spec: &LatticeSpec) -> String {
    serde_json::to_string_pretty(spec).expect("spec serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Probability vectors (one float per line)

pub fn format_vector_csv(values: &[f64]) -> String {
    let mut out = String::new();
    for v in values {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

pub fn parse_vector_csv(text: &str) -> Result<Vec<f64>> {
    let (_, data) = split_headers(text);
    if data.is_empty() {
        return Err(Error::validation("pattern file: no data lines"));
    }
    data.iter()
        .map(|line| parse_f64(line, "pattern file"))
        .collect()
}

/// JSON schema of a single-photon output distribution.
#[derive(Debug, Serialize, Deserialize)]
pub struct SingleJson {
    pub n_sites: usize,
    pub input: usize,
    pub probability: Vec<f64>,
}

pub fn format_single_json(input: usize, probability: &[f64]) -> String {
    let json = SingleJson {
        n_sites: probability.len(),
        input,
        probability: probability.to_vec(),
    };
    serde_json::to_string_pretty(&json).expect("distribution serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Correlation matrices

pub fn format_gamma_csv(gamma: &CorrelationMatrix) -> String {
    let n = gamma.n_sites();
    let mut out = String::new();
    if let Some((j, k)) = gamma.meta.input {
        out.push_str(&format!("# input={j},{k}\n"));
    }
    out.push_str(&format!(
        "# indistinguishable={}\n",
        gamma.meta.indistinguishable
    ));
    out.push_str(&format!(
        "# source={}\n",
        match gamma.meta.source {
            Source::Simulated => "simulated",
            Source::Measured => "measured",
        }
    ));
    for q in 0..n {
        let row: Vec<String> = (0..n)
            .map(|r| match gamma.value(q, r) {
                Some(v) => fmt_f64(v),
                None => "-1".to_string(),
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn parse_source(token: &str) -> Result<Source> {
    match token {
        "simulated" => Ok(Source::Simulated),
        "measured" => Ok(Source::Measured),
        other => Err(Error::Validation(format!(
            "unknown source '{other}' (expected simulated|measured)"
        ))),
    }
}

fn parse_input_pair(token: &str) -> Result<(usize, usize)> {
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::Validation(format!("cannot parse input site '{s}'")))
    };
    match token.split_once(',') {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => Err(Error::Validation(format!(
            "input pair '{token}' must be 'j,k'"
        ))),
    }
}

pub fn parse_gamma_csv(text: &str) -> Result<CorrelationMatrix> {
    let (headers, data) = split_headers(text);
    let mut meta = CorrelationMeta {
        input: None,
        indistinguishable: true,
        source: Source::Measured,
    };
    for (key, value) in &headers {
        match key.as_str() {
            "input" => meta.input = Some(parse_input_pair(value)?),
            "indistinguishable" => {
                meta.indistinguishable = value.parse::<bool>().map_err(|_| {
                    Error::Validation(format!("indistinguishable flag '{value}' must be a bool"))
                })?;
            }
            "source" => meta.source = parse_source(value)?,
            _ => {}
        }
    }
    let rows = parse_rows(&data, "correlation file")?;
    let n = rows.len();
    if rows[0].len() != n {
        return Err(Error::Validation(format!(
            "correlation file: {n} rows but {} columns",
            rows[0].len()
        )));
    }
    let mut gamma = DMatrix::zeros(n, n);
    let mut present = DMatrix::from_element(n, n, true);
    for q in 0..n {
        for r in 0..n {
            let v = rows[q][r];
            if v == -1.0 {
                present[(q, r)] = false;
            } else {
                gamma[(q, r)] = v;
            }
        }
    }
    CorrelationMatrix::measured(gamma, present, meta)
}

/// JSON schema of a correlation matrix; absent entries are `null`.
#[derive(Debug, Serialize, Deserialize)]
pub struct GammaJson {
    pub n_sites: usize,
    pub input: Option<(usize, usize)>,
    pub indistinguishable: bool,
    pub source: String,
    pub gamma: Vec<Vec<Option<f64>>>,
}

impl From<&CorrelationMatrix> for GammaJson {
    fn from(m: &CorrelationMatrix) -> Self {
        let n = m.n_sites();
        GammaJson {
            n_sites: n,
            input: m.meta.input,
            indistinguishable: m.meta.indistinguishable,
            source: match m.meta.source {
                Source::Simulated => "simulated".to_string(),
                Source::Measured => "measured".to_string(),
            },
            gamma: (0..n)
                .map(|q| (0..n).map(|r| m.value(q, r)).collect())
                .collect(),
        }
    }
}

pub fn format_gamma_json(gamma: &CorrelationMatrix) -> String {
    serde_json::to_string_pretty(&GammaJson::from(gamma)).expect("gamma serialization cannot fail")
}

pub fn parse_gamma_json(text: &str) -> Result<CorrelationMatrix> {
    let raw: GammaJson =
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("gamma json: {e}")))?;
    let n = raw.n_sites;
    if raw.gamma.len() != n || raw.gamma.iter().any(|row| row.len() != n) {
        return Err(Error::validation("gamma json: matrix shape mismatch"));
    }
    let mut gamma = DMatrix::zeros(n, n);
    let mut present = DMatrix::from_element(n, n, false);
    for q in 0..n {
        for r in 0..n {
            if let Some(v) = raw.gamma[q][r] {
                gamma[(q, r)] = v;
                present[(q, r)] = true;
            }
        }
    }
    CorrelationMatrix::measured(
        gamma,
        present,
        CorrelationMeta {
            input: raw.input,
            indistinguishable: raw.indistinguishable,
            source: parse_source(&raw.source)?,
        },
    )
}

// ---------------------------------------------------------------------------
// Coincidence counts

pub fn format_counts_csv(counts: &CoincidenceCounts) -> String {
    let n = counts.n_sites();
    let mut out = format!("# integration_s={}\n", fmt_f64(counts.integration_s()));
    for q in 0..n {
        let row: Vec<String> = (0..n)
            .map(|r| {
                if q <= r && counts.is_present(q, r) {
                    counts.counts()[(q, r)].to_string()
                } else {
                    "-1".to_string()
                }
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Optional sidecar carrying per-site singles rates and detector
/// efficiencies.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct CountsSidecar {
    #[serde(default)]
    pub singles: Option<Vec<u64>>,
    #[serde(default)]
    pub efficiency: Option<Vec<f64>>,
}

pub fn parse_counts_csv(text: &str, sidecar_json: Option<&str>) -> Result<CoincidenceCounts> {
    let (headers, data) = split_headers(text);
    let integration_s = headers
        .iter()
        .find(|(k, _)| k == "integration_s")
        .ok_or_else(|| Error::validation("counts file: missing '# integration_s=' header"))
        .and_then(|(_, v)| parse_f64(v, "counts file integration_s"))?;

    let n = data.len();
    let mut raw = DMatrix::from_element(n, n, -1i64);
    for (q, line) in data.iter().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n {
            return Err(Error::Validation(format!(
                "counts file: row {q} has {} cells, expected {n}",
                cells.len()
            )));
        }
        for (r, tok) in cells.iter().enumerate() {
            let v = tok.trim().parse::<i64>().map_err(|_| {
                Error::Validation(format!("counts file: '{tok}' is not an integer"))
            })?;
            raw[(q, r)] = v;
        }
    }

    let sidecar: CountsSidecar = match sidecar_json {
        Some(json) => serde_json::from_str(json)
            .map_err(|e| Error::Validation(format!("counts sidecar: {e}")))?,
        None => CountsSidecar::default(),
    };
    CoincidenceCounts::from_raw(&raw, sidecar.singles, sidecar.efficiency, integration_s)
}

// ---------------------------------------------------------------------------
// Violation maps

fn format_named_matrix_csv(name: &str, m: &DMatrix<f64>) -> String {
    let mut out = format!("# matrix={name}\n");
    for q in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|r| fmt_f64(m[(q, r)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Violation values `V`; `nan` where undefined.
pub fn format_violation_csv(map: &ViolationMap) -> String {
    format_named_matrix_csv("v", map.v())
}

/// Propagated standard deviations, when the map came from counts.
pub fn format_violation_sigma_csv(map: &ViolationMap) -> Option<String> {
    map.sigma_v().map(|m| format_named_matrix_csv("sigma_v", m))
}

/// Violation significances, when the map came from counts.
pub fn format_nsigma_csv(map: &ViolationMap) -> Option<String> {
    map.n_sigma().map(|m| format_named_matrix_csv("n_sigma", m))
}

fn matrix_to_nullable(m: &DMatrix<f64>) -> Vec<Vec<Option<f64>>> {
    (0..m.nrows())
        .map(|q| {
            (0..m.ncols())
                .map(|r| {
                    let v = m[(q, r)];
                    v.is_finite().then_some(v)
                })
                .collect()
        })
        .collect()
}

/// JSON schema of a violation map; undefined entries are `null`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ViolationJson {
    pub n_sites: usize,
    pub v: Vec<Vec<Option<f64>>>,
    pub sigma_v: Option<Vec<Vec<Option<f64>>>>,
    pub n_sigma: Option<Vec<Vec<Option<f64>>>>,
}

pub fn format_violation_json(map: &ViolationMap) -> String {
    let json = ViolationJson {
        n_sites: map.n_sites(),
        v: matrix_to_nullable(map.v()),
        sigma_v: map.sigma_v().map(matrix_to_nullable),
        n_sigma: map.n_sigma().map(matrix_to_nullable),
    };
    serde_json::to_string_pretty(&json).expect("violation serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Calibration results

pub fn format_calibration_csv(fit: &CalibrationResult) -> String {
    let mut out = String::new();
    out.push_str(&format!("c_fit,{}\n", fmt_f64(fit.c_fit)));
    out.push_str(&format!("z_eff_fit,{}\n", fmt_f64(fit.z_eff_fit)));
    out.push_str(&format!("cz_product,{}\n", fmt_f64(fit.cz_product())));
    out.push_str(&format!("residual,{}\n", fmt_f64(fit.residual)));
    out.push_str(&format!("boundary_warning,{}\n", fit.boundary_warning));
    out.push_str(&format!("cz_degenerate,{}\n", fit.cz_degenerate));
    for (c, z, sse) in &fit.grid_trace {
        out.push_str(&format!(
            "trace,{},{},{}\n",
            fmt_f64(*c),
            fmt_f64(*z),
            fmt_f64(*sse)
        ));
    }
    out
}

/// JSON schema of a calibration result.
#[derive(Debug, Serialize, Deserialize)]
pub struct CalibrationJson {
    pub c_fit: f64,
    pub z_eff_fit: f64,
    pub cz_product: f64,
    pub residual: f64,
    pub boundary_warning: bool,
    pub cz_degenerate: bool,
    pub grid_trace: Vec<(f64, f64, f64)>,
}

pub fn format_calibration_json(fit: &CalibrationResult) -> String {
    let json = CalibrationJson {
        c_fit: fit.c_fit,
        z_eff_fit: fit.z_eff_fit,
        cz_product: fit.cz_product(),
        residual: fit.residual,
        boundary_warning: fit.boundary_warning,
        cz_degenerate: fit.cz_degenerate,
        grid_trace: fit.grid_trace.clone(),
    };
    serde_json::to_string_pretty(&json).expect("calibration serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Ensemble results

/// Mean correlation matrix with the ensemble statistics as extra headers.
pub fn format_ensemble_gamma_csv(result: &EnsembleResult) -> String {
    let mut out = String::new();
    out.push_str(&format!("# trials={}\n", result.trials));
    out.push_str(&format!(
        "# mean_participation={}\n",
        fmt_f64(result.mean_participation)
    ));
    out.push_str(&format!(
        "# participation_of_mean={}\n",
        fmt_f64(result.participation_of_mean)
    ));
    out.push_str(&format_gamma_csv(&result.mean_gamma));
    out
}

/// Mean single-photon distribution with the same statistics headers.
pub fn format_ensemble_single_csv(result: &EnsembleResult) -> String {
    let mut out = String::new();
    out.push_str(&format!("# trials={}\n", result.trials));
    out.push_str(&format!(
        "# mean_participation={}\n",
        fmt_f64(result.mean_participation)
    ));
    out.push_str(&format!(
        "# participation_of_mean={}\n",
        fmt_f64(result.participation_of_mean)
    ));
    out.push_str(&format_vector_csv(&result.mean_single));
    out
}

/// JSON schema of an ensemble result.
#[derive(Debug, Serialize)]
pub struct EnsembleJson {
    pub trials: u64,
    pub mean_participation: f64,
    pub participation_of_mean: f64,
    pub mean_single: Vec<f64>,
    pub mean_gamma: GammaJson,
}

pub fn format_ensemble_json(result: &EnsembleResult) -> String {
    let json = EnsembleJson {
        trials: result.trials,
        mean_participation: result.mean_participation,
        participation_of_mean: result.participation_of_mean,
        mean_single: result.mean_single.clone(),
        mean_gamma: GammaJson::from(&result.mean_gamma),
    };
    serde_json::to_string_pretty(&json).expect("ensemble serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::quantum_correlation;
    use crate::evolution::propagator;
    use crate::lattice::build_single_hamiltonian;

    fn device_gamma() -> CorrelationMatrix {
        let spec = LatticeSpec::uniform(21, 0.0, 5.0, 0.782).unwrap();
        let h = build_single_hamiltonian(&spec).unwrap();
        let u = propagator(h.matrix(), spec.length_mm).unwrap();
        quantum_correlation(&u, (10, 11)).unwrap()
    }

    #[test]
    fn lattice_spec_json_round_trip() {
        let spec = LatticeSpec::new(vec![0.1, 0.2, 0.3], vec![1.0, 2.0], 0.7, -1).unwrap();
        let parsed = parse_lattice_spec(&format_lattice_spec(&spec)).unwrap();
        assert_eq!(parsed, spec);
    }

    #[test]
    fn vector_csv_round_trip_is_exact_and_stable() {
        let values = vec![0.1, 1.0 / 3.0, 2.5e-17, 0.0, 1.0];
        let text = format_vector_csv(&values);
        let parsed = parse_vector_csv(&text).unwrap();
        assert_eq!(parsed, values);
        assert_eq!(format_vector_csv(&parsed), text, "reformat is byte-stable");
        assert!(parse_vector_csv("# only=headers\n").is_err());
        assert!(parse_vector_csv("0.5\nbogus\n").is_err());
    }

    #[test]
    fn gamma_csv_round_trip() {
        let gamma = device_gamma();
        let text = format_gamma_csv(&gamma);
        assert!(text.starts_with("# input=10,11\n"));
        let parsed = parse_gamma_csv(&text).unwrap();
        assert_eq!(parsed.gamma(), gamma.gamma());
        assert_eq!(parsed.meta.input, Some((10, 11)));
        assert!(parsed.meta.indistinguishable);
        assert_eq!(parsed.meta.source, Source::Simulated);
        assert_eq!(format_gamma_csv(&parsed), text, "byte-stable");
    }

    #[test]
    fn gamma_csv_absent_entries() {
        let text = "# source=measured\n0.5,-1\n-1,0.5\n";
        let parsed = parse_gamma_csv(text).unwrap();
        assert_eq!(parsed.value(0, 0), Some(0.5));
        assert_eq!(parsed.value(0, 1), None);
        let back = format_gamma_csv(&parsed);
        assert!(back.contains("0.5,-1"));
    }

    #[test]
    fn gamma_csv_rejects_malformed_input() {
        assert!(parse_gamma_csv("0.5,0.5\n0.5\n").is_err(), "ragged");
        assert!(parse_gamma_csv("0.1,0.2,0.3\n0.2,0.1,0.3\n").is_err(), "not square");
        assert!(parse_gamma_csv("0.1,0.2\n0.3,0.1\n").is_err(), "asymmetric");
        assert!(parse_gamma_csv("0.1,x\nx,0.1\n").is_err(), "junk token");
        assert!(parse_gamma_csv("# source=bogus\n0.5,0.5\n0.5,0.5\n").is_err());
    }

    #[test]
    fn gamma_json_round_trip() {
        let gamma = device_gamma();
        let parsed = parse_gamma_json(&format_gamma_json(&gamma)).unwrap();
        assert_eq!(parsed.gamma(), gamma.gamma());
        assert_eq!(parsed.meta, gamma.meta);
    }

    #[test]
    fn counts_csv_round_trip_and_directional_sum() {
        let mut raw = DMatrix::from_element(3, 3, -1i64);
        raw[(0, 1)] = 30;
        raw[(1, 0)] = 12;
        raw[(1, 1)] = 5;
        raw[(0, 2)] = 0;
        let counts = CoincidenceCounts::from_raw(&raw, None, None, 3600.0).unwrap();
        assert_eq!(counts.counts()[(0, 1)], 42);

        let text = format_counts_csv(&counts);
        assert!(text.starts_with("# integration_s=3600\n"));
        let reparsed = parse_counts_csv(&text, None).unwrap();
        assert_eq!(reparsed, counts);
        assert_eq!(format_counts_csv(&reparsed), text);
    }

    #[test]
    fn counts_csv_requires_integration_header() {
        assert!(parse_counts_csv("1,2\n2,1\n", None).is_err());
        let ok = parse_counts_csv("# integration_s=10\n1,2\n2,1\n", None).unwrap();
        assert_eq!(ok.integration_s(), 10.0);
        assert!(parse_counts_csv("# integration_s=10\n1,0.5\n2,1\n", None).is_err());
    }

    #[test]
    fn counts_sidecar_parsed() {
        let text = "# integration_s=60\n10,-1\n-1,20\n";
        let sidecar = r#"{"singles": [100, 200], "efficiency": [0.5, 0.25]}"#;
        let counts = parse_counts_csv(text, Some(sidecar)).unwrap();
        assert_eq!(counts.singles(), Some(&[100u64, 200][..]));
        assert_eq!(counts.efficiency(), &[0.5, 0.25]);
        assert!(parse_counts_csv(text, Some("{bogus")).is_err());
    }

    #[test]
    fn violation_csv_marks_undefined_as_nan() {
        let gamma = device_gamma();
        let map = crate::correlations::violation_map(&gamma);
        let text = format_violation_csv(&map);
        assert!(text.starts_with("# matrix=v\n"));
        let first_row = text.lines().nth(1).unwrap();
        assert!(first_row.starts_with("nan,"), "diagonal must be nan: {first_row}");
        assert!(format_nsigma_csv(&map).is_none(), "noiseless map has no n_sigma");
        assert!(format_violation_sigma_csv(&map).is_none());
    }

    #[test]
    fn calibration_and_ensemble_formats_smoke() {
        let fit = CalibrationResult {
            c_fit: 5.0,
            z_eff_fit: 0.782,
            residual: 1e-15,
            grid_trace: vec![(5.0, 0.8, 1e-3), (5.0, 0.782, 1e-15)],
            boundary_warning: false,
            cz_degenerate: true,
        };
        let csv = format_calibration_csv(&fit);
        assert!(csv.contains("cz_product,3.91"));
        assert!(csv.contains("trace,5,0.782,0.000000000000001"));
        let json: serde_json::Value = serde_json::from_str(&format_calibration_json(&fit)).unwrap();
        assert_eq!(json["cz_degenerate"], serde_json::Value::Bool(true));

        let template = LatticeSpec::uniform(5, 0.0, 2.0, 0.4).unwrap();
        let result = crate::ensemble::disorder_ensemble(
            &template,
            &crate::ensemble::EnsembleOptions {
                input: (2, 3),
                indistinguishable: true,
                sigma_beta: 0.0,
                sigma_coupling: 0.0,
                trials: 1,
                seed: 0,
            },
        )
        .unwrap();
        let gamma_csv = format_ensemble_gamma_csv(&result);
        assert!(gamma_csv.starts_with("# trials=1\n"));
        assert!(gamma_csv.contains("# input=2,3\n"));
        let single_csv = format_ensemble_single_csv(&result);
        assert_eq!(single_csv.lines().count(), 3 + 5);
        let json: serde_json::Value = serde_json::from_str(&format_ensemble_json(&result)).unwrap();
        assert_eq!(json["trials"], serde_json::json!(1));
        assert_eq!(json["mean_gamma"]["n_sites"], serde_json::json!(5));
    }
}
