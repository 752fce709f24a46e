use std::io::{Read, Write};
use std::path::Path;

use super::{Grid1D, StrandState};
use crate::algebra::Vec3;
use crate::error::{Error, Result};

pub const SNAPSHOT_HEADER: [&str; 13] = [
    "s", "rho_x", "rho_y", "rho_z", "pi_t_x", "pi_t_y", "pi_t_z", "mu_t_x", "mu_t_y", "mu_t_z",
    "omega_s_x", "omega_s_y", "omega_s_z",
];

/// 17 significant digits: bit-exact for binary64.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one row per grid point in ascending `s`.
pub fn write_snapshot_csv<W: Write>(state: &StrandState, grid: &Grid1D, out: W) -> Result<()> {
    state.check_grid(grid)?;
    let mut w = csv::Writer::from_writer(out);
    let to_io = |e: csv::Error| Error::io("<snapshot>", e.into());
    w.write_record(SNAPSHOT_HEADER).map_err(to_io)?;
    let mut row = Vec::with_capacity(13);
    for j in 0..grid.n() {
        row.clear();
        row.push(fmt_f64(grid.point(j)));
        for f in state.fields() {
            row.extend(f[j].iter().map(|x| fmt_f64(*x)));
        }
        w.write_record(&row).map_err(to_io)?;
    }
    w.flush().map_err(|e| Error::io("<snapshot>", e))?;
    Ok(())
}

/// Parses a snapshot written by [`write_snapshot_csv`]. `origin` is used in
/// error messages only.
pub fn read_snapshot_csv<R: Read>(input: R, grid: &Grid1D, t: f64, origin: &Path) -> Result<StrandState> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r
        .headers()
        .map_err(|e| Error::malformed(origin, e.to_string()))?
        .clone();
    if headers.iter().ne(SNAPSHOT_HEADER) {
        return Err(Error::malformed(
            origin,
            format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        ));
    }
    let mut state = StrandState::zeros(0, t);
    for (row_idx, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::malformed(origin, e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::malformed(origin, format!("row {}: {e}", row_idx + 1)))?;
        if vals.len() != SNAPSHOT_HEADER.len() {
            return Err(Error::malformed(origin, format!("row {} has {} columns", row_idx + 1, vals.len())));
        }
        if row_idx < grid.n() && (vals[0] - grid.point(row_idx)).abs() > 1e-9 * grid.length().max(1.0) {
            return Err(Error::malformed(
                origin,
                format!("row {}: s = {} does not match grid point {}", row_idx + 1, vals[0], grid.point(row_idx)),
            ));
        }
        for (k, field) in state.fields_mut().into_iter().enumerate() {
            let b = 1 + 3 * k;
            field.push(Vec3::new(vals[b], vals[b + 1], vals[b + 2]));
        }
    }
    if state.len() != grid.n() {
        return Err(Error::malformed(
            origin,
            format!("expected {} rows, found {}", grid.n(), state.len()),
        ));
    }
    Ok(state)
}
