//! On-disk cache of [`FlowTable`]s.
//!
//! Layout, all little-endian:
//!
//! ```text
//! 0   8  magic  b"PDMPFLOW"
//! 8   4  u32    format version
//! 12  4  u32    reserved, zero
//! 16  8  f64 × 6  lower, attractor, discount, lower_drift, start_drift, start_reward
//! 64  8  u64 × 3  tail index, converged flag, node count n
//! 88  8  f64 × 3  tail time, tail position, tail reward
//! 112    f64 × n  × 5 arrays: t, y, slope, reward_cum, reward_rate
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{FlowTable, TailAnchor};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"PDMPFLOW";
pub const VERSION: u32 = 1;

/// Hex key derived from the parameters that determine a table.
pub fn cache_key(values: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_le_bytes());
    }
    hasher.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// File name inside a cache directory for the given key parameters.
pub fn cache_path(dir: &Path, values: &[f64]) -> PathBuf {
    dir.join(format!("flow-{}.bin", cache_key(values)))
}

pub fn encode(table: &FlowTable) -> Vec<u8> {
    let n = table.ts.len();
    let mut out = Vec::with_capacity(112 + 40 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in [
        table.lower,
        table.attractor,
        table.discount,
        table.lower_drift,
        table.start_drift,
        table.start_reward,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [table.tail.index as u64, table.converged as u64, n as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [table.tail.time, table.tail.position, table.tail.reward] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for arr in [
        &table.ts,
        &table.ys,
        &table.slopes,
        &table.reward_cum,
        &table.reward_rate,
    ] {
        for v in arr.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let slice = self.bytes.get(self.pos..self.pos + N)?;
        self.pos += N;
        slice.try_into().ok()
    }

    fn f64(&mut self) -> Option<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn f64s(&mut self, n: usize) -> Option<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn decode(bytes: &[u8]) -> Result<FlowTable> {
    let bad = |what: &str| Error::input(format!("flow cache: {what}"));
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("missing magic header"));
    }
    let mut cur = Cursor { bytes, pos: 8 };
    let version = cur.u32().ok_or_else(|| bad("truncated header"))?;
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let _reserved = cur.u32();
    let truncated = || bad("truncated body");
    let mut scalars = [0.0; 6];
    for s in scalars.iter_mut() {
        *s = cur.f64().ok_or_else(truncated)?;
    }
    let tail_index = cur.u64().ok_or_else(truncated)? as usize;
    let converged = cur.u64().ok_or_else(truncated)? != 0;
    let n = cur.u64().ok_or_else(truncated)? as usize;
    if n < 2 || tail_index >= n || bytes.len() != 112 + 40 * n {
        return Err(bad("inconsistent node count"));
    }
    let tail_time = cur.f64().ok_or_else(truncated)?;
    let tail_position = cur.f64().ok_or_else(truncated)?;
    let tail_reward = cur.f64().ok_or_else(truncated)?;
    let ts = cur.f64s(n).ok_or_else(truncated)?;
    let ys = cur.f64s(n).ok_or_else(truncated)?;
    let slopes = cur.f64s(n).ok_or_else(truncated)?;
    let reward_cum = cur.f64s(n).ok_or_else(truncated)?;
    let reward_rate = cur.f64s(n).ok_or_else(truncated)?;
    Ok(FlowTable {
        lower: scalars[0],
        attractor: scalars[1],
        discount: scalars[2],
        lower_drift: scalars[3],
        start_drift: scalars[4],
        start_reward: scalars[5],
        ts,
        ys,
        slopes,
        reward_cum,
        reward_rate,
        tail: TailAnchor {
            index: tail_index,
            time: tail_time,
            position: tail_position,
            reward: tail_reward,
        },
        converged,
    })
}

pub fn write_table(table: &FlowTable, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode(table))
        .map_err(|e| Error::io(path, e))
}

pub fn read_table(path: &Path) -> Result<FlowTable> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
