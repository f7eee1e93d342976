//! Dataset CSV files and their `key=value` metadata sidecar.
//!
//! CSV layout: header `f0,...,f{d-1},y0,...,y{l-1},labeled`, then one row per
//! sample. Features are written in shortest round-trip decimal form, so a
//! save/load cycle reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Contents of the metadata sidecar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMeta {
    pub d: usize,
    pub l: usize,
    pub n: usize,
    pub seed: Option<u64>,
    pub spec_digest: Option<String>,
}

impl DatasetMeta {
    fn of(ds: &Dataset) -> Self {
        Self {
            d: ds.feature_dim(),
            l: ds.num_labels(),
            n: ds.len(),
            seed: ds.gen_seed,
            spec_digest: ds.gen_spec_digest.clone(),
        }
    }

    fn render(&self) -> String {
        let mut s = format!("d={}\nl={}\nn={}\n", self.d, self.l, self.n);
        if let Some(seed) = self.seed {
            writeln!(s, "seed={seed}").unwrap();
        }
        if let Some(dg) = &self.spec_digest {
            writeln!(s, "spec_digest={dg}").unwrap();
        }
        s
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut meta = DatasetMeta { d: 0, l: 0, n: 0, seed: None, spec_digest: None };
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected key=value"))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::parse(path, i + 1, format!("bad integer for `{k}`")))
            };
            match k.trim() {
                "d" => meta.d = num(v)? as usize,
                "l" => meta.l = num(v)? as usize,
                "n" => meta.n = num(v)? as usize,
                "seed" => meta.seed = Some(num(v)?),
                "spec_digest" => meta.spec_digest = Some(v.trim().to_string()),
                other => return Err(Error::parse(path, i + 1, format!("unknown key `{other}`"))),
            }
        }
        Ok(meta)
    }
}

/// `<path>.meta`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (d, l) = (ds.feature_dim(), ds.num_labels());
    let mut out = String::with_capacity(ds.len() * (d * 20 + l * 2 + 4));
    let header: Vec<String> = (0..d)
        .map(|k| format!("f{k}"))
        .chain((0..l).map(|k| format!("y{k}")))
        .chain(std::iter::once("labeled".to_string()))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..ds.len() {
        for v in ds.features.row(r) {
            write!(out, "{v:?},").unwrap();
        }
        for v in ds.labels.row(r) {
            write!(out, "{},", *v as u8).unwrap();
        }
        writeln!(out, "{}", ds.labeled_mask[r] as u8).unwrap();
    }
    fs::write(path, out)?;
    fs::write(sidecar_path(path), DatasetMeta::of(ds).render())?;
    Ok(())
}

fn parse_header(line: &str, path: &Path) -> Result<(usize, usize)> {
    let cols: Vec<&str> = line.trim_end().split(',').collect();
    if cols.last() != Some(&"labeled") {
        return Err(Error::parse(path, 1, "last column must be `labeled`"));
    }
    let body = &cols[..cols.len() - 1];
    let d = body.iter().take_while(|c| c.starts_with('f')).count();
    let l = body.len() - d;
    for (k, c) in body[..d].iter().enumerate() {
        if *c != format!("f{k}") {
            return Err(Error::parse(path, 1, format!("expected column `f{k}`, found `{c}`")));
        }
    }
    for (k, c) in body[d..].iter().enumerate() {
        if *c != format!("y{k}") {
            return Err(Error::parse(path, 1, format!("expected column `y{k}`, found `{c}`")));
        }
    }
    if d == 0 || l == 0 {
        return Err(Error::parse(path, 1, "need at least one feature and one label column"));
    }
    Ok((d, l))
}

fn parse_bit(tok: &str, what: &str, path: &Path, line: usize) -> Result<bool> {
    match tok.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::parse(path, line, format!("{what} must be 0 or 1, found `{other}`"))),
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let (d, l) = parse_header(header, path)?;
    let width = d + l + 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut mask = Vec::new();
    for (i, line) in lines.enumerate() {
        let ln = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != width {
            return Err(Error::parse(
                path,
                ln,
                format!("expected {width} columns, found {}", toks.len()),
            ));
        }
        for t in &toks[..d] {
            match t.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(v),
                _ => return Err(Error::parse(path, ln, format!("bad feature value `{t}`"))),
            }
        }
        for t in &toks[d..d + l] {
            labels.push(f64::from(parse_bit(t, "label", path, ln)? as u8));
        }
        mask.push(parse_bit(toks[d + l], "labeled flag", path, ln)?);
    }
    let n = mask.len();
    let mut ds = Dataset::with_mask(
        Matrix::new(n, d, features)?,
        Matrix::new(n, l, labels)?,
        mask,
    )?;
    let side = sidecar_path(path);
    if side.exists() {
        let meta = DatasetMeta::parse(&fs::read_to_string(&side)?, &side)?;
        if (meta.d, meta.l, meta.n) != (d, l, n) {
            return Err(Error::parse(
                &side,
                0,
                format!(
                    "metadata says d={} l={} n={}, data has d={d} l={l} n={n}",
                    meta.d, meta.l, meta.n
                ),
            ));
        }
        ds.gen_seed = meta.seed;
        ds.gen_spec_digest = meta.spec_digest;
    }
    Ok(ds)
}
