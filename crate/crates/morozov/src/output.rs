//! CSV writers for traces and summaries.

use std::io::Write;
use std::path::Path;

use morozov_core::trace::{OuterRecord, TraceRecord};

use crate::error::{Error, Result};

/// Column layout of a per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceLayout {
    Newton,
    Projected,
    Gbit,
    Basic,
}

impl TraceLayout {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            TraceLayout::Newton => &[
                "iter", "alpha", "gamma", "res_norm", "F_norm", "dinv", "theta", "case_id",
            ],
            TraceLayout::Projected => &[
                "iter",
                "alpha",
                "gamma",
                "res_norm",
                "F_norm",
                "dinv",
                "theta",
                "case_id",
                "outer_iter",
                "inner_iter",
                "subspace_dim",
                "proj_res",
            ],
            TraceLayout::Gbit => &[
                "iter",
                "alpha",
                "res_norm",
                "F_norm",
                "subspace_dim",
                "proj_res",
            ],
            TraceLayout::Basic => &["iter", "alpha", "res_norm", "F_norm"],
        }
    }
}

pub(crate) fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn field(r: &TraceRecord, column: &str) -> String {
    match column {
        "iter" => r.iter.to_string(),
        "alpha" => opt(r.alpha),
        "gamma" => opt(r.gamma),
        "res_norm" => r.res_norm.to_string(),
        "F_norm" => opt(r.f_norm),
        "dinv" => opt(r.dinv),
        "theta" => opt(r.theta),
        "case_id" => opt(r.case_id),
        "outer_iter" => opt(r.outer_iter),
        "inner_iter" => opt(r.inner_iter),
        "subspace_dim" => opt(r.subspace_dim),
        "proj_res" => opt(r.proj_res),
        other => unreachable!("unknown trace column {other}"),
    }
}

pub fn write_trace<W: Write>(w: W, layout: TraceLayout, records: &[TraceRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let cols = layout.columns();
    out.write_record(cols)?;
    for r in records {
        out.write_record(cols.iter().map(|c| field(r, c)))?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub const OUTER_COLUMNS: [&str; 9] = [
    "outer_iter",
    "subspace_dim",
    "inner_iters",
    "alpha",
    "res_norm",
    "proj_res",
    "F_norm",
    "inner_converged",
    "alpha_rel_change",
];

pub fn write_outer_trace<W: Write>(w: W, records: &[OuterRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(OUTER_COLUMNS)?;
    for r in records {
        out.write_record([
            r.outer_iter.to_string(),
            r.subspace_dim.to_string(),
            r.inner_iters.to_string(),
            r.alpha.to_string(),
            r.res_norm.to_string(),
            r.proj_res.to_string(),
            r.f_norm.to_string(),
            u8::from(r.inner_converged).to_string(),
            r.alpha_rel_change.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub(crate) fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}
