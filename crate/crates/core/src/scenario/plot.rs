//! Gnuplot-ready data files derived from the CSV reports of a run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::converge::{fit_order, CONVERGENCE_CSV_HEADER};
use crate::error::{Error, Result};
use crate::linear::DISPERSION_CSV_HEADER;
use crate::residual::RESIDUAL_CSV_HEADER;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `t L2_abs` from a residual time series.
    Residual,
    /// `k omega_measured omega_analytic` from a dispersion scan.
    Dispersion,
    /// `h value` per check, for log-log axes.
    Convergence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotFile {
    pub name: String,
    pub kind: PlotKind,
    pub contents: String,
}

fn rows(csv: &str) -> Result<Vec<Vec<&str>>> {
    let mut lines = csv.lines();
    let width = lines.next().map(|h| h.split(',').count()).unwrap_or(0);
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != width {
                return Err(Error::Format(format!(
                    "row '{l}' has {} columns, header has {width}",
                    cols.len()
                )));
            }
            Ok(cols)
        })
        .collect()
}

fn num(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("'{s}' is not a number")))
}

/// Plot files for one report, or `None` if its header is not recognised.
pub fn plot_files_for(stem: &str, csv: &str) -> Result<Option<Vec<PlotFile>>> {
    let header = csv.lines().next().unwrap_or("").trim();
    let mut out = Vec::new();
    if header == RESIDUAL_CSV_HEADER {
        let mut s = format!("# {stem}\n# t L2_abs\n");
        for r in rows(csv)? {
            let _ = writeln!(s, "{:e} {:e}", num(r[0])?, num(r[1])?);
        }
        out.push(PlotFile {
            name: format!("{stem}.dat"),
            kind: PlotKind::Residual,
            contents: s,
        });
    } else if header == DISPERSION_CSV_HEADER {
        let mut s = format!("# {stem}\n# k omega_measured omega_analytic\n");
        for r in rows(csv)? {
            let _ = writeln!(s, "{:e} {:e} {:e}", num(r[0])?, num(r[1])?, num(r[2])?);
        }
        out.push(PlotFile {
            name: format!("{stem}.dat"),
            kind: PlotKind::Dispersion,
            contents: s,
        });
    } else if header == CONVERGENCE_CSV_HEADER {
        let table = rows(csv)?;
        let mut checks: Vec<&str> = Vec::new();
        for r in &table {
            if !checks.contains(&r[0]) {
                checks.push(r[0]);
            }
        }
        for check in checks {
            let sel: Vec<&Vec<&str>> = table.iter().filter(|r| r[0] == check).collect();
            let h = sel.iter().map(|r| num(r[2])).collect::<Result<Vec<_>>>()?;
            let v = sel.iter().map(|r| num(r[4])).collect::<Result<Vec<_>>>()?;
            let mut s = format!(
                "# {check}: slope {:.3} in h\n# h value\n",
                fit_order(&h, &v)
            );
            for (a, b) in h.iter().zip(&v) {
                let _ = writeln!(s, "{a:e} {b:e}");
            }
            let tag: String = check
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                .collect();
            out.push(PlotFile {
                name: format!("{stem}_{}.dat", tag.trim_matches('_')),
                kind: PlotKind::Convergence,
                contents: s,
            });
        }
    } else {
        return Ok(None);
    }
    Ok(Some(out))
}

/// Gnuplot script with one plot per data file.
pub fn gnuplot_script(files: &[PlotFile]) -> String {
    let mut s = String::from("set terminal pngcairo size 800,600\n");
    for f in files {
        let stem = f.name.trim_end_matches(".dat");
        let _ = writeln!(s, "\nset output '{stem}.png'\nunset logscale");
        match f.kind {
            PlotKind::Residual => {
                let _ = writeln!(
                    s,
                    "set logscale y\nset xlabel 't'\nset ylabel 'L2'\nplot '{}' using 1:2 with linespoints title '{stem}'",
                    f.name
                );
            }
            PlotKind::Dispersion => {
                let _ = writeln!(
                    s,
                    "set xlabel 'k'\nset ylabel 'omega'\nplot '{0}' using 1:2 with points title 'measured', '{0}' using 1:3 with lines title 'analytic'",
                    f.name
                );
            }
            PlotKind::Convergence => {
                let _ = writeln!(
                    s,
                    "set logscale xy\nset xlabel 'h'\nset ylabel 'error'\nplot '{}' using 1:2 with linespoints title '{stem}'",
                    f.name
                );
            }
        }
    }
    s
}

/// Reads every `reports/*.csv` under `dir` and writes `plots/*.dat` plus
/// `plots/plot.gp`. Returns the written paths.
pub fn emit_plot_data(dir: &Path) -> Result<Vec<PathBuf>> {
    let reports = dir.join("reports");
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&reports)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", reports.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    entries.sort();
    let mut files = Vec::new();
    for path in entries {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("report")
            .to_string();
        let text = std::fs::read_to_string(&path)?;
        if let Some(mut f) = plot_files_for(&stem, &text)? {
            files.append(&mut f);
        }
    }
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots)?;
    let mut written = Vec::new();
    for f in &files {
        let p = plots.join(&f.name);
        std::fs::write(&p, &f.contents)?;
        written.push(p);
    }
    let script = plots.join("plot.gp");
    std::fs::write(&script, gnuplot_script(&files))?;
    written.push(script);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_csv_becomes_two_columns() {
        let csv = format!(
            "{RESIDUAL_CSV_HEADER}\n0.1,2e-3,5e-3,1e-4,audited,1\n0.2,3e-3,6e-3,2e-4,audited,1\n"
        );
        let f = plot_files_for("01_lighthill", &csv).unwrap().unwrap();
        let data: Vec<&str> = f[0]
            .contents
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect();
        assert_eq!(data, ["1e-1 2e-3", "2e-1 3e-3"]);
    }

    #[test]
    fn convergence_slope_in_header() {
        let csv = format!("{CONVERGENCE_CSV_HEADER}\nc,64,0.4,1,0.16,0.16,0\nc,128,0.2,1,0.04,0.04,0\nc,256,0.1,1,0.01,0.01,0\n");
        let f = plot_files_for("convergence", &csv).unwrap().unwrap();
        assert!(f[0].contents.starts_with("# c: slope 2.000"));
    }

    #[test]
    fn unknown_header_is_skipped() {
        assert!(plot_files_for("x", "a,b\n1,2\n").unwrap().is_none());
        let bad = format!("{RESIDUAL_CSV_HEADER}\n0.1,2\n");
        assert!(plot_files_for("x", &bad).is_err());
    }
}
