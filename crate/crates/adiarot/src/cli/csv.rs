//! CSV emission: per-run trace files and sweep aggregates, 12
//! significant digits, comma-delimited, newline-terminated.

use crate::evolve::OverlapSample;
use std::io::{self, Write};

/// Format with 12 significant digits, deterministically.
pub fn sig12(x: f64) -> String {
    format!("{:.11e}", x)
}

pub const TRACE_HEADER: &str = "t,theta,stage,gap1,gap2,coupling1,ground_overlap,norm";

pub fn write_trace<W: Write>(mut w: W, rows: &[OverlapSample]) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            sig12(r.t),
            sig12(r.theta),
            r.stage,
            sig12(r.gap1),
            sig12(r.gap2),
            sig12(r.coupling1),
            sig12(r.ground_overlap),
            sig12(r.norm),
        )?;
    }
    Ok(())
}

pub const AGGREGATE_HEADER: &str = "param,min_gap,total_time,final_fidelity,epsilon";

/// One sweep-point row.
#[derive(Debug, Clone, Copy)]
pub struct AggregateRow {
    pub param: f64,
    pub min_gap: f64,
    pub total_time: f64,
    pub final_fidelity: f64,
    pub epsilon: f64,
}

pub fn write_aggregate<W: Write>(mut w: W, rows: &[AggregateRow]) -> io::Result<()> {
    writeln!(w, "{AGGREGATE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            sig12(r.param),
            sig12(r.min_gap),
            sig12(r.total_time),
            sig12(r.final_fidelity),
            sig12(r.epsilon),
        )?;
    }
    Ok(())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
