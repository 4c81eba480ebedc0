//! Plot-ready whitespace-separated tables built from the runner's CSVs.
//! Each file opens with `#` comments naming its content and columns.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{IsacError, Result};
use crate::experiment::scheme_dir;
use crate::metrics::Scheme;

/// A parsed CSV: header names and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IsacError::MissingInput(format!("column {name}")))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Reads a numeric CSV; a missing file or one without data rows is an error.
pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|_| IsacError::MissingInput(path.display().to_string()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| IsacError::MissingInput(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| IsacError::MissingInput(format!("{}: {e}", path.display())))?;
        if row.len() != header.len() {
            return Err(IsacError::MissingInput(format!("{}: ragged row", path.display())));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IsacError::MissingInput(format!("{} has no rows", path.display())));
    }
    Ok(Table { header, rows })
}

fn column_label(scheme: Scheme, quantity: &str) -> String {
    format!("{}_{quantity}", scheme.name().replace('-', "_"))
}

fn write_columns(path: &Path, title: &str, header: &[String], columns: &[Vec<f64>]) -> Result<()> {
    let mut text = format!("# {title}\n# columns: {}\n", header.join(" "));
    let rows = columns.iter().map(Vec::len).min().unwrap_or(0);
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| format!("{}", c[i])).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Writes one file per quantity into `<out>/plots/` and returns their paths.
/// Only schemes with a `trace.csv` under `out` appear.
pub fn emit_plot_data(out: &Path) -> Result<Vec<PathBuf>> {
    let mut traces = Vec::new();
    for scheme in Scheme::ALL {
        let path = scheme_dir(out, scheme).join("trace.csv");
        if path.is_file() {
            traces.push((scheme, read_table(&path)?));
        }
    }
    if traces.is_empty() {
        return Err(IsacError::MissingInput(format!("no trace.csv under {}", out.display())));
    }
    let dir = out.join("plots");
    fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    let time = traces[0].1.column("time_s")?;

    let per_time = [
        ("rate_vs_time.dat", "mean achievable rate versus time, bits/s/Hz", "rate_opt_bpshz", "rate_bpshz"),
        ("antennas_vs_time.dat", "mean sensing-beam antenna count versus time", "n_antennas", "n_antennas"),
        ("rho_vs_time.dat", "mean sensing time fraction versus time", "rho_opt", "rho"),
    ];
    for (file, title, column, label) in per_time {
        let mut header = vec!["time_s".to_string()];
        let mut cols = vec![time.clone()];
        for (scheme, table) in &traces {
            header.push(column_label(*scheme, label));
            cols.push(table.column(column)?);
        }
        let path = dir.join(file);
        write_columns(&path, title, &header, &cols)?;
        written.push(path);
    }

    let mut header = vec!["time_s".to_string()];
    let mut cols = vec![time];
    for (scheme, _) in &traces {
        let rmse = read_table(&scheme_dir(out, *scheme).join("rmse.csv"))?;
        for (column, label) in [("phi_rmse_rad", "phi_rmse_rad"), ("d_rmse_m", "d_rmse_m"), ("v_rmse_mps", "v_rmse_mps")] {
            header.push(column_label(*scheme, label));
            cols.push(rmse.column(column)?);
        }
    }
    let path = dir.join("rmse_vs_time.dat");
    write_columns(&path, "per-epoch estimation RMSE of angle, distance and speed", &header, &cols)?;
    written.push(path);

    // CDFs differ in length per scheme: one block each, separated by two
    // blank lines so plotting tools can index them
    let mut text = String::from("# empirical CDF of the absolute angle estimation error\n# columns: abs_phi_error_rad probability\n");
    for (scheme, _) in &traces {
        let cdf = read_table(&scheme_dir(out, *scheme).join("cdf.csv"))?;
        let _ = writeln!(text, "# block {}", scheme.name());
        for r in &cdf.rows {
            let _ = writeln!(text, "{} {}", r[0], r[1]);
        }
        text.push_str("\n\n");
    }
    let path = dir.join("angle_error_cdf.dat");
    fs::write(&path, text)?;
    written.push(path);

    let mut header = vec!["velocity_mps".to_string()];
    let mut cols = Vec::new();
    for (scheme, _) in &traces {
        let outage = read_table(&scheme_dir(out, *scheme).join("outage.csv"))?;
        if cols.is_empty() {
            cols.push(outage.column("velocity_mps")?);
        }
        header.push(column_label(*scheme, "outage_probability"));
        cols.push(outage.column("outage_probability")?);
    }
    let path = dir.join("outage_vs_velocity.dat");
    write_columns(&path, "outage probability versus vehicle speed", &header, &cols)?;
    written.push(path);
    Ok(written)
}
