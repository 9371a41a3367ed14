//! File formats: state JSON, mutual-information CSV/JSON, entropy reports
//! and coefficient matrices. All numbers are emitted at full double
//! precision so files can be reanalyzed losslessly.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::entropy::{EntropyProfile, QmiMatrix};
use crate::error::{Error, Result};
use crate::state::DenseState;

/// 17 significant digits round-trip any f64.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize, Deserialize)]
struct StateDoc {
    #[serde(rename = "L")]
    l: usize,
    d: usize,
    amplitudes: Vec<(f64, f64)>,
}

/// `{"L": .., "d": .., "amplitudes": [[re, im], ..]}`
pub fn state_to_json(state: &DenseState) -> Result<String> {
    let doc = StateDoc {
        l: state.num_sites(),
        d: state.local_dim(),
        amplitudes: state.amplitudes().iter().map(|z| (z.re, z.im)).collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn state_from_json(text: &str) -> Result<DenseState> {
    let doc: StateDoc = serde_json::from_str(text)?;
    DenseState::new(doc.l, doc.d, doc.amplitudes.iter().map(|&(re, im)| C64::new(re, im)).collect())
}

#[derive(Serialize, Deserialize)]
struct QmiDoc {
    #[serde(rename = "L")]
    l: usize,
    alpha: f64,
    entries: Vec<Vec<f64>>,
}

pub fn qmi_to_json(q: &QmiMatrix) -> Result<String> {
    let l = q.num_sites();
    let entries = (1..=l).map(|i| (1..=l).map(|j| q.get(i, j)).collect()).collect();
    Ok(serde_json::to_string_pretty(&QmiDoc { l, alpha: q.alpha(), entries })?)
}

pub fn qmi_from_json(text: &str) -> Result<QmiMatrix> {
    let doc: QmiDoc = serde_json::from_str(text)?;
    let flat: Vec<f64> = doc.entries.iter().flatten().copied().collect();
    QmiMatrix::new(doc.l, doc.alpha, flat)
}

/// L rows by L columns, no header.
pub fn qmi_to_csv(q: &QmiMatrix) -> String {
    let l = q.num_sites();
    let mut out = String::new();
    for i in 1..=l {
        let row: Vec<String> = (1..=l).map(|j| fmt_full(q.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parse a bare L x L matrix; the von Neumann order is assumed since the
/// CSV form carries no alpha.
pub fn qmi_from_csv(text: &str) -> Result<QmiMatrix> {
    let rows = parse_float_table(text)?;
    let l = rows.len();
    if rows.iter().any(|r| r.len() != l) {
        return Err(Error::Parse(format!("expected a square {l} x {l} matrix")));
    }
    QmiMatrix::new(l, 1.0, rows.into_iter().flatten().collect())
}

/// Row-major table of floats from CSV: L rows, N columns.
pub fn parse_float_table(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: `{cell}`: {e}", idx + 1)))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty table".into()));
    }
    Ok(rows)
}

/// Slater coefficient matrix: L rows, N columns.
pub fn coeffs_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let rows = parse_float_table(text)?;
    let n = rows[0].len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("rows have inconsistent column counts".into()));
    }
    let l = rows.len();
    Ok(DMatrix::from_fn(l, n, |i, j| rows[i][j]))
}

pub fn coeffs_to_csv(coeffs: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..coeffs.nrows() {
        let row: Vec<String> = (0..coeffs.ncols()).map(|j| fmt_full(coeffs[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Multi-alpha entropy report consumed by the cost pipeline.
#[derive(Serialize, Deserialize)]
pub struct EntropyDoc {
    #[serde(rename = "L")]
    pub l: usize,
    pub unit: String,
    pub profiles: Vec<EntropyProfile>,
}

impl EntropyDoc {
    pub fn new(l: usize, profiles: Vec<EntropyProfile>) -> Self {
        Self { l, unit: "bits".into(), profiles }
    }

    /// The alpha = 1 single-site entropies, required by every cost function.
    pub fn von_neumann_single_site(&self) -> Result<Vec<f64>> {
        self.profiles
            .iter()
            .find(|p| p.alpha == 1.0)
            .map(|p| p.single_site.clone())
            .ok_or_else(|| Error::Parse("no alpha = 1 profile in entropy file".into()))
    }
}

pub fn entropy_doc_to_json(doc: &EntropyDoc) -> Result<String> {
    Ok(serde_json::to_string_pretty(doc)?)
}

pub fn entropy_doc_from_json(text: &str) -> Result<EntropyDoc> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{qmi_matrix, Alpha};
    use crate::generate;
    use approx::assert_abs_diff_eq;

    #[test]
    fn state_json_round_trip() {
        let psi = generate::random_mps(4, 2, 2, 1).unwrap();
        let text = state_to_json(&psi).unwrap();
        let back = state_from_json(&text).unwrap();
        assert_eq!(psi.num_sites(), back.num_sites());
        for (a, b) in psi.amplitudes().iter().zip(back.amplitudes()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn state_json_rejects_denormalized() {
        let text = r#"{"L": 2, "d": 2, "amplitudes": [[0.5, 0.0], [0, 0], [0, 0], [0, 0]]}"#;
        assert!(state_from_json(text).is_err());
    }

    #[test]
    fn qmi_round_trips_through_both_formats() {
        let psi = generate::w_state(4).unwrap();
        let q = qmi_matrix(&psi, Alpha::VON_NEUMANN).unwrap();
        let back = qmi_from_json(&qmi_to_json(&q).unwrap()).unwrap();
        assert_eq!(q, back);
        let back = qmi_from_csv(&qmi_to_csv(&q)).unwrap();
        for i in 1..=4 {
            for j in 1..=4 {
                assert_abs_diff_eq!(q.get(i, j), back.get(i, j), epsilon = 0.0);
            }
        }
    }

    #[test]
    fn coeff_csv_round_trip() {
        let c = generate::random_orthonormal(5, 2, 3);
        let back = coeffs_from_csv(&coeffs_to_csv(&c)).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(coeffs_from_csv("1.0,2.0\n3.0\n").is_err());
        assert!(coeffs_from_csv("").is_err());
        assert!(qmi_from_csv("0.0,1.0\n").is_err());
    }
}
