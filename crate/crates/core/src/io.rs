//! CSV import and export. Floats are written with 17 significant digits.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::fbm::{AreaValidation, ScalingReport};
use crate::increments::{Grid, Path1};
use crate::lift::AuditReport;

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Float formatting used by every exported file.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `t,<prefix>1,…,<prefix>d` followed by one row per grid point.
pub fn write_path<W: Write>(path: &Path1, prefix: &str, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=path.dim()).map(|i| format!("{prefix}{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (i, t) in path.grid().times().enumerate() {
        let mut row = vec![fmt(t)];
        row.extend(path.at(i).iter().map(|&v| fmt(v)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn path_to_csv(path: &Path1, prefix: &str) -> Result<String> {
    let mut buf = Vec::new();
    write_path(path, prefix, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

/// Reads a path written by [`write_path`]; the time column must be uniform.
pub fn read_path<R: Read>(input: R) -> Result<Path1> {
    let mut r = csv::Reader::from_reader(input);
    let dim = r.headers().map_err(csv_err)?.len().saturating_sub(1);
    if dim == 0 {
        return Err(Error::Parse("path file needs a time column and at least one value column".into()));
    }
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {s:?}: {e}", line + 1)))
        };
        times.push(parse(&rec[0])?);
        for field in rec.iter().skip(1) {
            values.push(parse(field)?);
        }
    }
    if times.len() < 2 {
        return Err(Error::Parse("path file needs at least two rows".into()));
    }
    let n = times.len() - 1;
    let grid = Grid::over(times[0], times[n], n)?;
    for (i, &t) in times.iter().enumerate() {
        if (t - grid.time(i)).abs() > 1e-9 * grid.h().max(t.abs()) {
            return Err(Error::InvalidGrid(format!("time column is not uniform at row {}", i + 1)));
        }
    }
    Path1::new(grid, dim, values)
}

/// Writes a header and pre-formatted rows.
pub fn write_table<W: Write>(header: &[&str], rows: &[Vec<String>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `cell,i,j,value` rows for a per-cell area family whose first cell is `lo`.
pub fn write_area_cells<W: Write>(cells: &[f64], lo: i64, dim: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell", "i", "j", "value"]).map_err(csv_err)?;
    for (c, block) in cells.chunks(dim * dim).enumerate() {
        for (e, &v) in block.iter().enumerate() {
            let (i, j) = (e / dim, e % dim);
            w.write_record([(lo + c as i64).to_string(), i.to_string(), j.to_string(), fmt(v)])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `cell,i,j,k,value` rows for a per-cell volume family whose first cell is `lo`.
pub fn write_volume_cells<W: Write>(cells: &[f64], lo: i64, dim: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell", "i", "j", "k", "value"]).map_err(csv_err)?;
    for (c, block) in cells.chunks(dim * dim * dim).enumerate() {
        for (e, &v) in block.iter().enumerate() {
            let (i, j, k) = (e / (dim * dim), (e / dim) % dim, e % dim);
            w.write_record([
                (lo + c as i64).to_string(),
                i.to_string(),
                j.to_string(),
                k.to_string(),
                fmt(v),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_audit<W: Write>(report: &AuditReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["identity", "family", "residual", "scale", "relative", "checks", "mode"])
        .map_err(csv_err)?;
    for row in &report.rows {
        w.write_record([
            row.identity.clone(),
            row.family.clone(),
            fmt(row.residual),
            fmt(row.scale),
            fmt(row.relative()),
            row.checks.to_string(),
            if row.exhaustive { "exhaustive" } else { "sampled" }.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Header shared by the Monte-Carlo reports.
pub const MC_HEADER: [&str; 10] = ["H", "v1", "v2", "tau", "N", "mean", "stderr", "closed_form", "z", "slope"];

/// One row per validation; `v2` is 0 and `slope` is `nan`.
pub fn write_area_validations<W: Write>(rows: &[AreaValidation], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MC_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            fmt(r.hurst),
            fmt(r.v1),
            fmt(0.0),
            fmt(r.tau),
            r.samples.to_string(),
            fmt(r.mean),
            fmt(r.stderr),
            fmt(r.closed_form),
            fmt(r.z),
            fmt(f64::NAN),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per span length; `mean` is the second moment, `closed_form` and `z` are `nan`
/// and every row repeats the fitted slope.
pub fn write_scaling<W: Write>(report: &ScalingReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MC_HEADER).map_err(csv_err)?;
    for ((tau, m), s) in report.taus.iter().zip(&report.moments).zip(&report.stderrs) {
        w.write_record([
            fmt(report.hurst),
            fmt(report.v1),
            fmt(report.v2),
            fmt(*tau),
            report.samples.to_string(),
            fmt(*m),
            fmt(*s),
            fmt(f64::NAN),
            fmt(f64::NAN),
            fmt(report.slope),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_round_trip_is_exact() {
        let grid = Grid::new(-0.25, 0.125, 6).unwrap();
        let p = Path1::from_fn(grid, 2, |t, o| {
            o[0] = t.exp();
            o[1] = 1.0 / 3.0 - t;
        })
        .unwrap();
        let text = path_to_csv(&p, "x").unwrap();
        assert!(text.starts_with("t,x1,x2\n"));
        assert_eq!(text.lines().count(), 8);
        let back = read_path(text.as_bytes()).unwrap();
        assert_eq!(back.values(), p.values());
        assert_eq!(back.grid().len(), 7);
    }

    #[test]
    fn rejects_non_uniform_time() {
        let text = "t,x1\n0,1\n0.5,2\n0.7,3\n";
        assert!(read_path(text.as_bytes()).is_err());
    }
}
