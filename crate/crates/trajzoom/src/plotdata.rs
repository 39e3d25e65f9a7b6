//! Three-panel plot data from trajectory files: `Q` against real time `s`,
//! `Q` against effective time `t`, and `t` against `s`.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::csvio::{fmt_float, Table};
use crate::error::RunError;

pub const PANELS: [&str; 3] = ["Q_vs_s", "Q_vs_t", "t_vs_s"];

/// Trajectory files of a run directory in index order.
pub fn trajectory_files(dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| RunError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("traj_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Writes `panel,trajectory,index,x,y` rows for every trajectory file in
/// `input` and returns the number of trajectories.
pub fn emit_plotdata(input: &Path, output: &Path) -> Result<usize, RunError> {
    let files = trajectory_files(input)?;
    if files.is_empty() {
        return Err(RunError::Format {
            path: input.to_path_buf(),
            msg: "no traj_*.csv files".to_string(),
        });
    }
    let tables = files
        .iter()
        .map(|p| {
            let t = Table::read(p)?;
            for c in ["s", "Q", "t"] {
                t.require(c, p)?;
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let file = File::create(output).map_err(|e| RunError::io(output, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["panel", "trajectory", "index", "x", "y"])
        .map_err(|e| RunError::csv(output, e))?;
    for (j, panel) in PANELS.iter().enumerate() {
        for (i, t) in tables.iter().enumerate() {
            let (s, q, tt) = (t.column("s").unwrap(), t.column("Q").unwrap(), t.column("t").unwrap());
            let (xs, ys) = match j {
                0 => (s, q),
                1 => (tt, q),
                _ => (s, tt),
            };
            for (k, (x, y)) in xs.iter().zip(ys).enumerate() {
                w.write_record([
                    panel.to_string(),
                    i.to_string(),
                    k.to_string(),
                    fmt_float(*x),
                    fmt_float(*y),
                ])
                .map_err(|e| RunError::csv(output, e))?;
            }
        }
    }
    w.flush().map_err(|e| RunError::io(output, e))?;
    Ok(tables.len())
}
