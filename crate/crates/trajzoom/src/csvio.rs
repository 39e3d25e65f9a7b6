//! CSV files: one header line, floats with 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use trajzoom_core::limit::LimitTrajectory;
use trajzoom_core::Trajectory;

use crate::error::RunError;

pub const TRAJECTORY_HEADER: [&str; 3] = ["s", "Q", "t"];
pub const LIMIT_HEADER: [&str; 6] = ["t", "Q", "L", "U", "s", "B"];

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a table of floats under `header`.
pub fn write_table(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<(), RunError> {
    let n = columns.first().map_or(0, |c| c.len());
    debug_assert!(columns.iter().all(|c| c.len() == n));
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path).map_err(|e| RunError::io(path, e))?));
    w.write_record(header).map_err(|e| RunError::csv(path, e))?;
    let mut row = Vec::with_capacity(columns.len());
    for k in 0..n {
        row.clear();
        row.extend(columns.iter().map(|c| fmt_float(c[k])));
        w.write_record(&row).map_err(|e| RunError::csv(path, e))?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

/// Writes rows of already formatted fields.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path).map_err(|e| RunError::io(path, e))?));
    w.write_record(header).map_err(|e| RunError::csv(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| RunError::csv(path, e))?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

pub fn write_trajectory(path: &Path, tr: &Trajectory) -> Result<(), RunError> {
    write_table(path, &TRAJECTORY_HEADER, &[&tr.s_grid, &tr.q, &tr.t_cum])
}

pub fn write_limit(path: &Path, tr: &LimitTrajectory) -> Result<(), RunError> {
    write_table(
        path,
        &LIMIT_HEADER,
        &[&tr.t_grid, &tr.q, &tr.big_l, &tr.big_u, &tr.s_of_t, &tr.b],
    )
}

/// A CSV of floats read by column name.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, RunError> {
        let mut r = csv::Reader::from_path(path).map_err(|e| RunError::csv(path, e))?;
        let header: Vec<String> = r
            .headers()
            .map_err(|e| RunError::csv(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut columns = vec![Vec::new(); header.len()];
        for (k, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| RunError::csv(path, e))?;
            for (j, field) in rec.iter().enumerate() {
                let v = field.parse::<f64>().map_err(|_| RunError::Format {
                    path: path.to_path_buf(),
                    msg: format!("row {} column {}: `{field}` is not a number", k + 2, header[j]),
                })?;
                columns[j].push(v);
            }
        }
        Ok(Table { header, columns })
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header
            .iter()
            .position(|h| h == name)
            .map(|j| self.columns[j].as_slice())
    }

    pub fn require(&self, name: &str, path: &Path) -> Result<&[f64], RunError> {
        self.column(name).ok_or_else(|| RunError::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, RunError> {
    let t = Table::read(path)?;
    let tr = Trajectory {
        s_grid: t.require("s", path)?.to_vec(),
        q: t.require("Q", path)?.to_vec(),
        t_cum: t.require("t", path)?.to_vec(),
    };
    tr.check_invariants()
        .map_err(|e| RunError::engine(format!("{}", path.display()), e))?;
    Ok(tr)
}

/// Reads a limit-mode path back. The physical-time parameters are not
/// stored in the file and are set to NaN.
pub fn read_limit(path: &Path) -> Result<LimitTrajectory, RunError> {
    let t = Table::read(path)?;
    let t_grid = t.require("t", path)?.to_vec();
    let dt = if t_grid.len() > 1 {
        t_grid[1] - t_grid[0]
    } else {
        f64::NAN
    };
    Ok(LimitTrajectory {
        dt,
        lambda: f64::NAN,
        p: f64::NAN,
        options: Default::default(),
        t_grid,
        q: t.require("Q", path)?.to_vec(),
        big_l: t.require("L", path)?.to_vec(),
        big_u: t.require("U", path)?.to_vec(),
        b: t.require("B", path)?.to_vec(),
        s_of_t: t.require("s", path)?.to_vec(),
    })
}

/// `key=value` lines.
pub fn write_key_values(path: &Path, pairs: &[(String, String)]) -> Result<(), RunError> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| RunError::io(path, e))?);
    for (k, v) in pairs {
        writeln!(f, "{k}={v}").map_err(|e| RunError::io(path, e))?;
    }
    f.flush().map_err(|e| RunError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 5e-324, 0.0, 123456.789, -2.5e-7] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let tr = Trajectory {
            s_grid: vec![0.0, 0.1, 0.2],
            q: vec![0.2, 1.0 / 3.0, 0.9],
            t_cum: vec![0.0, 0.5, 0.7],
        };
        write_trajectory(&path, &tr).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("s,Q,t\n") && text.ends_with('\n'));
        assert_eq!(read_trajectory(&path).unwrap(), tr);
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.csv");
        write_table(&path, &["s", "Q"], &[&[0.0], &[0.5]]).unwrap();
        match read_trajectory(&path) {
            Err(RunError::MissingColumn { column, .. }) => assert_eq!(column, "t"),
            other => panic!("{other:?}"),
        }
    }
}
