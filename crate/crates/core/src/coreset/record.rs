//! Flat record streams of coreset samples.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! header: b"FWCS" | version: u16 | dim: u16 | count: u64
//! record: timestamp: i64 | coords: i64 × dim | weight: f64 | prob: f64
//!         | mask: u64 | center: u32 | ring: i32   (ring −1 = zero-distance)
//! ```
//!
//! `weight` is the original point weight; the coreset weight is `weight/prob`.
//! The CSV form has header `timestamp,x0,…,x{d-1},weight,prob,mask,center,ring`.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::ring::{CoresetSample, RingId};
use crate::error::{Error, Result};
use crate::point::{GridPoint, GroupMask, Ring, TimedPoint};

const MAGIC: &[u8; 4] = b"FWCS";
const VERSION: u16 = 1;

fn ring_code(r: Ring) -> i32 {
    match r {
        Ring::Inner => -1,
        Ring::Annulus(j) => j as i32,
    }
}

fn ring_from_code(c: i32) -> Result<Ring> {
    match c {
        -1 => Ok(Ring::Inner),
        j if j >= 0 => Ok(Ring::Annulus(j as u32)),
        _ => Err(Error::Format(format!("bad ring code {c}"))),
    }
}

fn sample_from_parts(ts: i64, coords: Vec<i64>, weight: f64, prob: f64, mask: u64, center: u32, ring: i32) -> Result<CoresetSample> {
    if !(prob > 0.0 && prob <= 1.0) || !(weight > 0.0) {
        return Err(Error::Format(format!("record {ts} has weight {weight}, prob {prob}")));
    }
    Ok(CoresetSample {
        point: TimedPoint::new(GridPoint(coords), ts, weight, GroupMask(mask)),
        prob,
        coreset_weight: weight / prob,
        ring: RingId::new(center, ring_from_code(ring)?),
    })
}

fn common_dim(samples: &[CoresetSample]) -> Result<usize> {
    let dim = samples.first().map_or(0, |s| s.point.location.dim());
    for s in samples {
        if s.point.location.dim() != dim {
            return Err(Error::DimensionMismatch(dim, s.point.location.dim()));
        }
    }
    Ok(dim)
}

pub fn write_records_binary<W: Write>(mut w: W, samples: &[CoresetSample]) -> Result<()> {
    let dim = common_dim(samples)?;
    let dim16 = u16::try_from(dim).map_err(|_| Error::Format(format!("dimension {dim} too large")))?;
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(VERSION)?;
    w.write_u16::<LittleEndian>(dim16)?;
    w.write_u64::<LittleEndian>(samples.len() as u64)?;
    for s in samples {
        w.write_i64::<LittleEndian>(s.point.timestamp)?;
        for &c in s.point.location.coords() {
            w.write_i64::<LittleEndian>(c)?;
        }
        w.write_f64::<LittleEndian>(s.point.weight)?;
        w.write_f64::<LittleEndian>(s.prob)?;
        w.write_u64::<LittleEndian>(s.point.groups.0)?;
        w.write_u32::<LittleEndian>(s.ring.center)?;
        w.write_i32::<LittleEndian>(ring_code(s.ring.ring))?;
    }
    Ok(())
}

pub fn read_records_binary<R: Read>(mut r: R) -> Result<Vec<CoresetSample>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a coreset record stream".into()));
    }
    let version = r.read_u16::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported record version {version}")));
    }
    let dim = r.read_u16::<LittleEndian>()? as usize;
    let count = r.read_u64::<LittleEndian>()?;
    let mut out = Vec::with_capacity(count.min(1 << 20) as usize);
    for _ in 0..count {
        let ts = r.read_i64::<LittleEndian>()?;
        let coords = (0..dim).map(|_| r.read_i64::<LittleEndian>()).collect::<std::io::Result<Vec<_>>>()?;
        let weight = r.read_f64::<LittleEndian>()?;
        let prob = r.read_f64::<LittleEndian>()?;
        let mask = r.read_u64::<LittleEndian>()?;
        let center = r.read_u32::<LittleEndian>()?;
        let ring = r.read_i32::<LittleEndian>()?;
        out.push(sample_from_parts(ts, coords, weight, prob, mask, center, ring)?);
    }
    Ok(out)
}

pub fn write_records_csv<W: Write>(w: W, samples: &[CoresetSample]) -> Result<()> {
    let dim = common_dim(samples)?;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["timestamp".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend(["weight", "prob", "mask", "center", "ring"].map(String::from));
    out.write_record(&header)?;
    for s in samples {
        let mut row = vec![s.point.timestamp.to_string()];
        row.extend(s.point.location.coords().iter().map(|c| c.to_string()));
        row.push(format!("{:?}", s.point.weight));
        row.push(format!("{:?}", s.prob));
        row.push(s.point.groups.0.to_string());
        row.push(s.ring.center.to_string());
        row.push(ring_code(s.ring.ring).to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(r: R) -> Result<Vec<CoresetSample>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.len() < 6 || &header[0] != "timestamp" {
        return Err(Error::Format("unexpected coreset CSV header".into()));
    }
    let dim = header.len() - 6;
    let bad = |field: &str| Error::Format(format!("bad field {field:?}"));
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let num = |i: usize| row.get(i).ok_or_else(|| bad(""));
        let ts: i64 = num(0)?.parse().map_err(|_| bad(&row[0]))?;
        let coords = (1..=dim)
            .map(|i| row[i].parse::<i64>().map_err(|_| bad(&row[i])))
            .collect::<Result<Vec<_>>>()?;
        let f = |i: usize| row[i].parse::<f64>().map_err(|_| bad(&row[i]));
        let weight = f(dim + 1)?;
        let prob = f(dim + 2)?;
        let mask: u64 = row[dim + 3].parse().map_err(|_| bad(&row[dim + 3]))?;
        let center: u32 = row[dim + 4].parse().map_err(|_| bad(&row[dim + 4]))?;
        let ring: i32 = row[dim + 5].parse().map_err(|_| bad(&row[dim + 5]))?;
        out.push(sample_from_parts(ts, coords, weight, prob, mask, center, ring)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<CoresetSample> {
        vec![
            CoresetSample::exact(TimedPoint::unit(vec![1, 2], -3, GroupMask(1)), RingId::new(0, Ring::Inner)),
            CoresetSample {
                point: TimedPoint::unit(vec![7, 9], -1, GroupMask(2)).with_weight(1.5),
                prob: 0.3,
                coreset_weight: 1.5 / 0.3,
                ring: RingId::new(4, Ring::Annulus(3)),
            },
        ]
    }

    #[test]
    fn binary_round_trip() {
        let mut buf = Vec::new();
        write_records_binary(&mut buf, &samples()).unwrap();
        assert_eq!(&buf[..4], b"FWCS");
        assert_eq!(buf.len(), 16 + 2 * (8 + 16 + 8 + 8 + 8 + 4 + 4));
        assert_eq!(read_records_binary(&buf[..]).unwrap(), samples());
        buf[0] = b'X';
        assert!(read_records_binary(&buf[..]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &samples()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("timestamp,x0,x1,weight,prob,mask,center,ring\n"));
        assert_eq!(read_records_csv(&buf[..]).unwrap(), samples());
    }

    #[test]
    fn empty_stream() {
        let mut buf = Vec::new();
        write_records_binary(&mut buf, &[]).unwrap();
        assert!(read_records_binary(&buf[..]).unwrap().is_empty());
    }
}
