//! Single-file sketch checkpoints.
//!
//! Little-endian layout:
//!
//! ```text
//! b"FWCK" | version: u16 | config_len: u32 | config: JSON bytes
//! t: u64 | hierarchy_count: u32
//! per hierarchy: mask: u64 | inserted: u64 | reduces: u64 | levels: u32
//!     per level: present: u8, then a coreset record stream when present
//! ```
//!
//! The JSON config carries the clustering parameters, window, sampling
//! configuration and seed, so a restored sketch continues with the same coin
//! flips it would have used without the pause.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{BlockHierarchy, WindowConfig, WindowSketch};
use crate::coreset::{read_records_binary, write_records_binary};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FWCK";
const VERSION: u16 = 1;

pub fn write_checkpoint<W: Write>(mut w: W, sketch: &WindowSketch) -> Result<()> {
    let config = serde_json::to_vec(sketch.config())?;
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(config.len() as u32)?;
    w.write_all(&config)?;
    w.write_u64::<LittleEndian>(sketch.time())?;
    let hs: Vec<&BlockHierarchy> = sketch.raw_hierarchies().collect();
    w.write_u32::<LittleEndian>(hs.len() as u32)?;
    for h in hs {
        let (key, inserted, reduces) = h.raw();
        w.write_u64::<LittleEndian>(key)?;
        w.write_u64::<LittleEndian>(inserted)?;
        w.write_u64::<LittleEndian>(reduces)?;
        w.write_u32::<LittleEndian>(h.blocks().len() as u32)?;
        for b in h.blocks() {
            match b {
                None => w.write_u8(0)?,
                Some(samples) => {
                    w.write_u8(1)?;
                    write_records_binary(&mut w, samples)?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<WindowSketch> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a sketch checkpoint".into()));
    }
    let version = r.read_u16::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut config = vec![0u8; len];
    r.read_exact(&mut config)?;
    let config: WindowConfig = serde_json::from_slice(&config)?;
    let t = r.read_u64::<LittleEndian>()?;
    let count = r.read_u32::<LittleEndian>()?;
    let mut hierarchies = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let key = r.read_u64::<LittleEndian>()?;
        let inserted = r.read_u64::<LittleEndian>()?;
        let reduces = r.read_u64::<LittleEndian>()?;
        let levels = r.read_u32::<LittleEndian>()?;
        let mut blocks = Vec::with_capacity(levels as usize);
        for _ in 0..levels {
            blocks.push(match r.read_u8()? {
                0 => None,
                1 => Some(read_records_binary(&mut r)?),
                b => return Err(Error::Format(format!("bad block flag {b}"))),
            });
        }
        hierarchies.push(BlockHierarchy::from_raw(key, inserted, reduces, blocks));
    }
    WindowSketch::from_parts(config, t, hierarchies)
}
