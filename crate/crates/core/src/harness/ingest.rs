use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{GridPoint, GroupMask, TimedPoint};

/// Default grid bound for quantized features, `2^16`.
pub const DEFAULT_GRID: i64 = 1 << 16;

/// Which columns of a CSV file become coordinates and group bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub features: Vec<String>,
    pub groups: Vec<String>,
    /// Grid bound Δ the features are quantized onto.
    pub delta: i64,
    /// Take integer features as they are instead of rescaling.
    pub raw: bool,
}

impl CsvSchema {
    pub fn new(features: Vec<String>, groups: Vec<String>) -> Self {
        CsvSchema {
            features,
            groups,
            delta: DEFAULT_GRID,
            raw: false,
        }
    }
}

/// Points read from a file plus what was learned on the way.
#[derive(Clone, Debug, PartialEq)]
pub struct Ingested {
    pub points: Vec<TimedPoint>,
    /// `(column, value)` for every group bit, bit `i` at index `i`.
    pub group_bits: Vec<(String, String)>,
    pub skipped: usize,
    /// Per feature `(min, max)` before quantization.
    pub ranges: Vec<(f64, f64)>,
}

impl Ingested {
    pub fn groups(&self) -> usize {
        self.group_bits.len()
    }
}

/// Affine map of `[lo, hi]` onto `[1, Δ]`, rounded to the nearest integer. A
/// constant column maps to 1.
pub fn quantize(v: f64, lo: f64, hi: f64, delta: i64) -> i64 {
    let span = hi - lo;
    if span <= 0.0 {
        return 1;
    }
    let x = 1.0 + (v - lo) / span * (delta - 1) as f64;
    (x.round() as i64).clamp(1, delta)
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Ingested> {
    ingest_reader(std::fs::File::open(path)?, schema)
}

/// Rows whose feature cells do not parse, or whose group cells are empty,
/// are skipped and counted. Timestamps are 1-based row numbers among the
/// kept rows.
pub fn ingest_reader<R: Read>(r: R, schema: &CsvSchema) -> Result<Ingested> {
    if schema.features.is_empty() {
        return Err(Error::InvalidParameter("at least one feature column is required".into()));
    }
    if schema.delta < 1 {
        return Err(Error::InvalidParameter("grid bound must be positive".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers()?.clone();
    let col = |name: &String| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))
    };
    let fcols = schema.features.iter().map(col).collect::<Result<Vec<_>>>()?;
    let gcols = schema.groups.iter().map(col).collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<(Vec<f64>, Vec<String>)> = Vec::new();
    let mut skipped = 0;
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let feats: Option<Vec<f64>> = fcols
            .iter()
            .map(|&i| rec.get(i).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite()))
            .collect();
        let groups: Option<Vec<String>> = gcols
            .iter()
            .map(|&i| rec.get(i).filter(|s| !s.is_empty()).map(String::from))
            .collect();
        match (feats, groups) {
            (Some(f), Some(g)) if !schema.raw || f.iter().all(|v| v.fract() == 0.0) => rows.push((f, g)),
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} malformed rows");
    }
    if rows.is_empty() {
        return Err(Error::NoRows);
    }

    let d = fcols.len();
    let ranges: Vec<(f64, f64)> = (0..d)
        .map(|j| {
            rows.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.0[j]), hi.max(r.0[j])))
        })
        .collect();
    let mut bits: HashMap<(usize, String), usize> = HashMap::new();
    let mut group_bits = Vec::new();
    for (_, g) in &rows {
        for (ci, v) in g.iter().enumerate() {
            bits.entry((ci, v.clone())).or_insert_with(|| {
                group_bits.push((schema.groups[ci].clone(), v.clone()));
                group_bits.len() - 1
            });
        }
    }
    if group_bits.len() > 64 {
        return Err(Error::InvalidParameter(format!("{} group values exceed 64 bits", group_bits.len())));
    }
    let points = rows
        .into_iter()
        .enumerate()
        .map(|(i, (f, g))| {
            let coords = f
                .iter()
                .zip(&ranges)
                .map(|(&v, &(lo, hi))| if schema.raw { v as i64 } else { quantize(v, lo, hi, schema.delta) })
                .collect();
            let mask = g
                .iter()
                .enumerate()
                .fold(0u64, |m, (ci, v)| m | 1 << bits[&(ci, v.clone())]);
            TimedPoint::unit(coords, i as i64 + 1, GroupMask(mask))
        })
        .collect();
    Ok(Ingested {
        points,
        group_bits,
        skipped,
        ranges,
    })
}

/// Writes a stream as `t,x0,…,x{d-1},group` with the group written as the
/// index of the lowest set bit (or the raw mask when several are set).
pub fn write_stream_csv<W: std::io::Write>(w: W, points: &[TimedPoint]) -> Result<()> {
    let d = points.first().map_or(0, |p| p.location.dim());
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((0..d).map(|i| format!("x{i}")));
    header.push("group".into());
    out.write_record(&header)?;
    for p in points {
        let mut row = vec![p.timestamp.to_string()];
        row.extend(p.location.coords().iter().map(i64::to_string));
        let g = p.groups.0;
        row.push(if g.count_ones() == 1 { g.trailing_zeros().to_string() } else { format!("m{g}") });
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Largest coordinate of a stream, at least 1.
pub fn grid_bound(points: &[TimedPoint]) -> i64 {
    points
        .iter()
        .flat_map(|p| p.location.coords().iter().map(|c| c.abs()))
        .max()
        .unwrap_or(1)
        .max(1)
}

pub(crate) fn renumber(points: &[TimedPoint]) -> Vec<TimedPoint> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| TimedPoint::new(GridPoint(p.location.0.clone()), i as i64 + 1, p.weight, p.groups))
        .collect()
}
