//! Plain-text filter dumps: one coefficient per line for 1-D taps,
//! whitespace-separated rows for 2-D kernels.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::signals::{FilterTaps1D, Kernel2D};

pub fn format_taps(h: &FilterTaps1D) -> String {
    h.taps().iter().fold(String::new(), |mut s, t| {
        let _ = writeln!(s, "{t:.17e}");
        s
    })
}

pub fn format_kernel(k: &Kernel2D) -> String {
    let mut s = String::new();
    for r in 0..k.rows() {
        let row: Vec<String> = (0..k.cols()).map(|c| format!("{:.17e}", k.get(r, c))).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

fn parse_value(tok: &str) -> Result<f64> {
    tok.parse().map_err(|_| Error::format(format!("invalid coefficient '{tok}'")))
}

pub fn parse_taps(text: &str) -> Result<FilterTaps1D> {
    let taps = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(parse_value).collect::<Result<Vec<_>>>()?;
    FilterTaps1D::new(taps)
}

pub fn parse_kernel(text: &str) -> Result<Kernel2D> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(parse_value).collect())
        .collect::<Result<_>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::format("kernel rows differ in length"));
    }
    Kernel2D::new(rows.len(), cols, rows.concat())
}
