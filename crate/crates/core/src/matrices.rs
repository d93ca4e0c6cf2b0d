//! Transition-matrix generators and the plain-text matrix format.
//!
//! The text format has one row per line with whitespace-separated decimals.
//! Blank lines and lines starting with `#` are ignored.

use std::fs;
use std::path::Path;

use crate::error::{Result, TrackError};
use crate::model::TransitionMatrix;

/// Birth-death chain on `0..=m` that moves one step up or down with
/// probability `eps` each (reflecting at the ends).
pub fn tridiagonal_eps(m: usize, eps: f64) -> Result<TransitionMatrix> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(TrackError::InvalidMatrix(format!("eps = {eps} must lie in [0, 0.5]")));
    }
    if m == 0 {
        return Err(TrackError::InvalidMatrix("need at least two states (m >= 1)".into()));
    }
    let n = m + 1;
    let rows = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            if i == 0 {
                row[0] = 1.0 - eps;
                row[1] = eps;
            } else if i == m {
                row[m - 1] = eps;
                row[m] = 1.0 - eps;
            } else {
                row[i - 1] = eps;
                row[i] = 1.0 - 2.0 * eps;
                row[i + 1] = eps;
            }
            row
        })
        .collect();
    TransitionMatrix::new(rows)
}

const BAND: [f64; 6] = [0.3, 0.1, 0.2, 0.1, 0.2, 0.1];

/// The 20-state banded chain used for the large-state experiments.
///
/// Rows 0..=2 and 17..=19 are fixed boundary rows. Interior row `k` in
/// `3..=16` carries the band `[.3 .1 .2 .1 .2 .1]` starting at column
/// `k - 2`, continuing the slide of the top rows; row 16 therefore ends in
/// the last column and coincides with row 17.
pub fn banded_20() -> TransitionMatrix {
    let n = 20;
    let mut rows = vec![vec![0.0; n]; n];
    rows[0][..4].copy_from_slice(&[0.6, 0.1, 0.2, 0.1]);
    rows[1][..5].copy_from_slice(&[0.4, 0.2, 0.1, 0.2, 0.1]);
    rows[2][..6].copy_from_slice(&BAND);
    for (k, row) in rows.iter_mut().enumerate().take(17).skip(3) {
        row[k - 2..k + 4].copy_from_slice(&BAND);
    }
    rows[17][14..].copy_from_slice(&BAND);
    rows[18][15..].copy_from_slice(&[0.3, 0.1, 0.2, 0.1, 0.3]);
    rows[19][16..].copy_from_slice(&[0.3, 0.1, 0.2, 0.4]);
    TransitionMatrix::new(rows).expect("banded matrix rows are stochastic")
}

/// Parses the plain-text matrix format and validates the result.
pub fn parse_matrix(text: &str) -> Result<TransitionMatrix> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| TrackError::MatrixParse {
                    line: idx + 1,
                    message: format!("'{tok}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    TransitionMatrix::new(rows)
}

pub fn load_matrix(path: &Path) -> Result<TransitionMatrix> {
    let text = fs::read_to_string(path).map_err(|e| TrackError::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}

/// Writes a matrix in the text format, one row per line.
pub fn format_matrix(p: &TransitionMatrix) -> String {
    let mut out = String::new();
    for i in 0..p.n_states() {
        let row: Vec<String> = p.row(i).iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
