//! CSV and JSON serialization of trajectories, scans, frame paths and grids.

use crate::atlas::ScanRow;
use crate::curve::{AngleField, CurveError, FramePath, GridFile};
use crate::toda::TrajectoryRow;
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

fn write_serialized<W: Write, T: serde::Serialize>(w: W, rows: &[T]) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(w: W, rows: &[TrajectoryRow]) -> Result<(), IoError> {
    write_serialized(w, rows)
}

pub fn write_scan_csv<W: Write>(w: W, rows: &[ScanRow]) -> Result<(), IoError> {
    write_serialized(w, rows)
}

/// `t`, the 16 entries `E{r}{c}` of the complex 4x4 frame as re/im, then `Z0..Z3` re/im.
pub fn frame_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for r in 0..4 {
        for c in 0..4 {
            h.push(format!("E{r}{c}re"));
            h.push(format!("E{r}{c}im"));
        }
    }
    for i in 0..4 {
        h.push(format!("Z{i}re"));
        h.push(format!("Z{i}im"));
    }
    h
}

pub fn frame_rows(path: &FramePath) -> Vec<Vec<f64>> {
    path.ts
        .iter()
        .zip(path.frames.iter().zip(&path.points))
        .map(|(&t, (g, x))| {
            let mut row = Vec::with_capacity(41);
            row.push(t);
            for r in g.matrix().embed_c4() {
                for z in r {
                    row.push(z.re);
                    row.push(z.im);
                }
            }
            row.extend_from_slice(&x.to_reals());
            row
        })
        .collect()
}

pub fn write_frame_csv<W: Write>(w: W, path: &FramePath) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(frame_header())?;
    for row in frame_rows(path) {
        wtr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_grid_json<R: Read>(r: R) -> Result<AngleField, IoError> {
    let g: GridFile = serde_json::from_reader(r)?;
    Ok(AngleField::from_file(g)?)
}

pub fn write_grid_json<W: Write>(w: W, a: &AngleField) -> Result<(), IoError> {
    serde_json::to_writer(w, &a.to_file())?;
    Ok(())
}
