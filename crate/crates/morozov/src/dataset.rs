//! Problem instances on disk.
//!
//! A problem directory holds `matrix.mtx`, `rhs.txt`, optionally
//! `truth.txt` and `exact_rhs.txt` (one value per line), and `meta.txt`
//! with `key=value` lines for the scalar data.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use morozov_core::linop::LinearOperator;
use morozov_core::InverseProblem;

use crate::error::{Error, Result};
use crate::mtx::{read_matrix_market, write_matrix_market};

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("invalid number `{}`", l.trim())))
        })
        .collect()
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut text = String::with_capacity(v.len() * 24);
    for x in v {
        text.push_str(&format!("{x:e}\n"));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses `key=value` lines; `#` starts a comment line.
pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, i + 1, "expected key=value"))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn write_problem(dir: &Path, p: &InverseProblem) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_matrix_market(&dir.join("matrix.mtx"), &p.operator)?;
    write_vector(&dir.join("rhs.txt"), &p.rhs)?;
    if let Some(t) = &p.ground_truth {
        write_vector(&dir.join("truth.txt"), t)?;
    }
    if let Some(e) = &p.exact_rhs {
        write_vector(&dir.join("exact_rhs.txt"), e)?;
    }
    let mut meta = format!(
        "rows={}\ncols={}\nnoise_level={:e}\neta={:e}\n",
        p.operator.nrows(),
        p.operator.ncols(),
        p.noise_level,
        p.eta
    );
    if let Some(s) = p.sigma {
        meta.push_str(&format!("sigma={s:e}\n"));
    }
    if let Some(s) = p.seed {
        meta.push_str(&format!("seed={s}\n"));
    }
    let path = dir.join("meta.txt");
    fs::write(&path, meta).map_err(|e| Error::io(&path, e))
}

pub fn read_problem(dir: &Path) -> Result<InverseProblem> {
    let meta_path = dir.join("meta.txt");
    let meta = read_key_values(&meta_path)?;
    let number = |key: &str| -> Result<Option<f64>> {
        meta.get(key)
            .map(|v| {
                v.parse().map_err(|_| {
                    Error::Config(format!("{}: bad value for {key}", meta_path.display()))
                })
            })
            .transpose()
    };
    let noise_level = number("noise_level")?
        .ok_or_else(|| Error::Config(format!("{}: missing noise_level", meta_path.display())))?;
    let operator = read_matrix_market(&dir.join("matrix.mtx"))?;
    let rhs = read_vector(&dir.join("rhs.txt"))?;
    let mut p = InverseProblem::new(operator, rhs, noise_level)?;
    if let Some(eta) = number("eta")? {
        p = p.with_eta(eta)?;
    }
    p.sigma = number("sigma")?;
    p.seed = meta
        .get("seed")
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Config(format!("{}: bad seed", meta_path.display())))
        })
        .transpose()?;
    for (name, slot) in [
        ("truth.txt", &mut p.ground_truth),
        ("exact_rhs.txt", &mut p.exact_rhs),
    ] {
        let path = dir.join(name);
        if path.exists() {
            *slot = Some(read_vector(&path)?);
        }
    }
    Ok(p)
}
