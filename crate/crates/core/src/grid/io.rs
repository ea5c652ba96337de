use std::io::{Read, Write};

use crate::error::{MfsError, Result};
use crate::grid::{GridDomain, GridFunction};

fn csv_err(e: csv::Error) -> MfsError {
    MfsError::Io(e.to_string())
}

/// Write interior node coordinates and values with header `x,value` or
/// `x,y,value`.
pub fn write_grid_csv<W: Write>(domain: &GridDomain, u: &GridFunction, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if domain.dim() == 2 {
        w.write_record(["x", "y", "value"]).map_err(csv_err)?;
    } else {
        w.write_record(["x", "value"]).map_err(csv_err)?;
    }
    for (k, v) in u.values().iter().enumerate() {
        let p = domain.interior_point(k);
        if domain.dim() == 2 {
            w.write_record([p[0].to_string(), p[1].to_string(), v.to_string()]).map_err(csv_err)?;
        } else {
            w.write_record([p[0].to_string(), v.to_string()]).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn grid_csv_string(domain: &GridDomain, u: &GridFunction) -> Result<String> {
    let mut buf = Vec::new();
    write_grid_csv(domain, u, &mut buf)?;
    String::from_utf8(buf).map_err(|e| MfsError::Io(e.to_string()))
}

/// Read a grid function written by [`write_grid_csv`]. Every interior node
/// must appear exactly once; coordinates are matched to within `h / 1000`.
pub fn read_grid_csv<R: Read>(domain: &GridDomain, input: R) -> Result<GridFunction> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let expected: &[&str] = if domain.dim() == 2 { &["x", "y", "value"] } else { &["x", "value"] };
    if headers != expected {
        return Err(MfsError::Config(format!("expected CSV header {}, got {}", expected.join(","), headers.join(","))));
    }
    let h = domain.h();
    let (lo, _) = domain.extended_box();
    let [nx, _] = domain.ext_shape();
    let mut values = vec![f64::NAN; domain.n_interior()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let nums: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| MfsError::Config(format!("row {}: {e}", line + 2))))
            .collect::<Result<_>>()?;
        let (x, y, v) = if domain.dim() == 2 { (nums[0], nums[1], nums[2]) } else { (nums[0], 0.0, nums[1]) };
        let fx = (x - lo[0]) / h - 0.5;
        let ix = fx.round();
        let (iy, fy) = if domain.dim() == 2 {
            let fy = (y - lo[1]) / h - 0.5;
            (fy.round(), fy)
        } else {
            (0.0, 0.0)
        };
        if (fx - ix).abs() > 1e-3 || (fy - iy).abs() > 1e-3 || ix < 0.0 || iy < 0.0 || ix as usize >= nx {
            return Err(MfsError::Config(format!("row {}: ({x}, {y}) is not a mesh node", line + 2)));
        }
        let node = iy as usize * nx + ix as usize;
        let k = (node < domain.n_nodes())
            .then(|| domain.interior_index(node))
            .flatten()
            .ok_or_else(|| MfsError::Config(format!("row {}: ({x}, {y}) is not an interior node", line + 2)))?;
        if !values[k].is_nan() {
            return Err(MfsError::Config(format!("row {}: node ({x}, {y}) listed twice", line + 2)));
        }
        values[k] = v;
    }
    if let Some(k) = values.iter().position(|v| v.is_nan()) {
        let p = domain.interior_point(k);
        return Err(MfsError::Config(format!("CSV has no value for interior node {p:?}")));
    }
    GridFunction::from_values(domain, values)
}
