//! Versioned binary snapshot of a [`MemoryBank`].
//!
//! Layout (little endian): magic `EMSB`, version u32, dim u32, k u32,
//! stm_cap u32, ltm_cap u32, min_stm u32, decay f64, adapt flag u8,
//! seed u64, compressions u64, three trackers as (correct f64, total f64)
//! in STM/LTM/combined order, then the STM and LTM as
//! `count u64` followed by `count` records of `dim` f64 values and a u8
//! label.

use super::{Memory, MemoryBank, SamConfig, Tracker};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"EMSB";
const VERSION: u32 = 1;

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Snapshot("truncated".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn memory(&mut self, dim: usize) -> Result<Memory> {
        let count = self.u64()? as usize;
        let mut memory = Memory::new(dim);
        let mut x = vec![0.0; dim];
        for _ in 0..count {
            for v in x.iter_mut() {
                *v = self.f64()?;
            }
            let y = self.u8()?;
            if y > 1 {
                return Err(Error::Snapshot(format!("label {y} is not binary")));
            }
            memory.push(&x, y);
        }
        Ok(memory)
    }
}

fn put_memory(out: &mut Vec<u8>, memory: &Memory) {
    out.extend((memory.len() as u64).to_le_bytes());
    for (x, y) in memory.iter() {
        for v in x {
            out.extend(v.to_le_bytes());
        }
        out.push(y);
    }
}

impl MemoryBank {
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = Vec::new();
        out.extend(MAGIC);
        for v in [
            VERSION,
            self.dim as u32,
            c.k as u32,
            c.stm_cap as u32,
            c.ltm_cap as u32,
            c.min_stm as u32,
        ] {
            out.extend(v.to_le_bytes());
        }
        out.extend(c.decay.to_le_bytes());
        out.push(u8::from(c.adapt_per_instance));
        out.extend(c.seed.to_le_bytes());
        out.extend(self.compressions.to_le_bytes());
        for t in [self.stm_tracker, self.ltm_tracker, self.combined_tracker] {
            out.extend(t.correct.to_le_bytes());
            out.extend(t.total.to_le_bytes());
        }
        put_memory(&mut out, &self.stm);
        put_memory(&mut out, &self.ltm);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes };
        if r.take(4)? != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let dim = r.u32()? as usize;
        let config = SamConfig {
            k: r.u32()? as usize,
            stm_cap: r.u32()? as usize,
            ltm_cap: r.u32()? as usize,
            min_stm: r.u32()? as usize,
            decay: r.f64()?,
            adapt_per_instance: r.u8()? != 0,
            seed: r.u64()?,
        };
        config
            .validate()
            .map_err(|e| Error::Snapshot(e.to_string()))?;
        let compressions = r.u64()?;
        let mut trackers = [Tracker::default(); 3];
        for t in trackers.iter_mut() {
            t.correct = r.f64()?;
            t.total = r.f64()?;
        }
        let stm = r.memory(dim)?;
        let ltm = r.memory(dim)?;
        if !r.buf.is_empty() {
            return Err(Error::Snapshot("trailing bytes".into()));
        }
        Ok(MemoryBank {
            config,
            dim,
            stm,
            ltm,
            stm_tracker: trackers[0],
            ltm_tracker: trackers[1],
            combined_tracker: trackers[2],
            compressions,
        })
    }
}
