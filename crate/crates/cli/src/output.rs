use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use taylornet::metrics::CsvRow;
use taylornet::taylor::ComponentSize;

pub fn ensure_dir(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("writing {}: {e}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    write_text(path, &(text + "\n"))
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format!("writing {}: {e}", path.display()))?;
    for r in rows {
        w.serialize(r).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

/// Whitespace-separated `x y y2` columns with a `#` header.
pub fn plot_data(header: [&str; 3], points: &[(f64, f64, f64)]) -> String {
    let mut s = format!("# {} {} {}\n", header[0], header[1], header[2]);
    for (x, y, y2) in points {
        let _ = writeln!(s, "{x:e} {y:e} {y2:e}");
    }
    s
}

#[cfg(test)]
pub fn parse_plot_data(text: &str) -> Result<Vec<(f64, f64, f64)>, String> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|t| t.parse::<f64>().map_err(|e| format!("{t}: {e}"))).collect::<Result<_, _>>()?;
            match v[..] {
                [x, y, y2] => Ok((x, y, y2)),
                _ => Err(format!("expected 3 columns in `{l}`")),
            }
        })
        .collect()
}

/// Constructed vs formula sizes, one line per component.
pub fn budget_table(rows: &[ComponentSize]) -> String {
    let name_w = rows.iter().map(|r| r.name.chars().count()).max().unwrap_or(9).max(9);
    let mut s = format!("{:<name_w$}  {:>8}  {:>8}  {:>12}  {:>12}  within\n", "component", "width", "depth", "paper_width", "paper_depth");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<name_w$}  {:>8}  {:>8}  {:>12}  {:>12}  {}",
            r.name,
            r.width,
            r.depth,
            r.budget_width,
            r.budget_depth,
            if r.within { "yes" } else { "no" }
        );
    }
    s
}

/// Short results table for the terminal.
pub fn results_table(rows: &[CsvRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let _ = writeln!(
            s,
            "{} {:<28} N={:<3} L={:<3} p={:<4} {}x{} measured {:.3e} bound {:.3e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.label,
            r.n,
            r.l,
            r.p,
            r.constructed_width,
            r.constructed_depth,
            r.measured,
            r.bound
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_round_trip() {
        let pts = vec![(1.0, 0.5, 2.0), (4.0, 1e-17, 3.25)];
        assert_eq!(parse_plot_data(&plot_data(["x", "y", "y2"], &pts)).unwrap(), pts);
    }
}
