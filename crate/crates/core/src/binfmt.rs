//! Shared layout for the binary artifacts (datasets, checkpoints, face data).
//!
//! ```text
//! magic            8 bytes
//! schema version   u32 LE
//! header length    u64 LE
//! header           UTF-8 JSON
//! block count      u64 LE
//! per block:       u64 LE element count, then that many f64 LE
//! ```
//!
//! The JSON header carries everything human-readable; every numeric payload
//! lives in the raw blocks so that a load/save round trip is bit-exact.

use serde::{de::DeserializeOwned, Serialize};

use crate::{Error, Result};

pub struct Writer {
    buf: Vec<u8>,
    blocks: Vec<Vec<f64>>,
}

impl Writer {
    pub fn new<H: Serialize>(magic: &[u8; 8], version: u32, header: &H) -> Result<Self> {
        let json = serde_json::to_vec_pretty(header)?;
        let mut buf = Vec::with_capacity(json.len() + 32);
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&version.to_le_bytes());
        buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
        buf.extend_from_slice(&json);
        Ok(Writer { buf, blocks: Vec::new() })
    }

    pub fn block(&mut self, data: impl Into<Vec<f64>>) -> &mut Self {
        self.blocks.push(data.into());
        self
    }

    pub fn finish(mut self) -> Vec<u8> {
        self.buf.extend_from_slice(&(self.blocks.len() as u64).to_le_bytes());
        for block in &self.blocks {
            self.buf.extend_from_slice(&(block.len() as u64).to_le_bytes());
            for v in block {
                self.buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        self.buf
    }
}

pub struct Reader<H> {
    pub header: H,
    blocks: std::vec::IntoIter<Vec<f64>>,
}

impl<H: DeserializeOwned> Reader<H> {
    pub fn parse(bytes: &[u8], magic: &[u8; 8], version: u32) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let m = cur.take(8, "magic")?;
        if m != magic {
            return Err(Error::format(format!(
                "bad magic bytes: expected {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        let v = u32::from_le_bytes(cur.take(4, "schema version")?.try_into().unwrap());
        if v != version {
            return Err(Error::format(format!(
                "schema version {v} not supported (expected {version})"
            )));
        }
        let hlen = cur.u64("header length")?;
        let hbytes = cur.take_len(hlen, "header")?;
        let header: H = serde_json::from_slice(hbytes)?;
        let nblocks = cur.u64("block count")?;
        let mut blocks = Vec::new();
        for i in 0..nblocks {
            let n = cur.u64("block length")?;
            let raw = cur.take_len(n.saturating_mul(8), "block")
                .map_err(|_| Error::format(format!("corrupt length prefix for block {i}")))?;
            blocks.push(
                raw.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            );
        }
        if cur.pos != bytes.len() {
            return Err(Error::format(format!(
                "{} trailing bytes after last block",
                bytes.len() - cur.pos
            )));
        }
        Ok(Reader { header, blocks: blocks.into_iter() })
    }
}

impl<H> Reader<H> {
    pub fn block(&mut self, what: &str) -> Result<Vec<f64>> {
        self.blocks
            .next()
            .ok_or_else(|| Error::format(format!("missing data block: {what}")))
    }

    pub fn block_len(&mut self, what: &str, len: usize) -> Result<Vec<f64>> {
        let b = self.block(what)?;
        if b.len() != len {
            return Err(Error::format(format!(
                "block {what}: expected {len} values, found {}",
                b.len()
            )));
        }
        Ok(b)
    }

    pub fn remaining(&self) -> usize {
        self.blocks.len()
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(format!("truncated while reading {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn take_len(&mut self, n: u64, what: &str) -> Result<&'a [u8]> {
        let n = usize::try_from(n)
            .map_err(|_| Error::format(format!("corrupt length prefix for {what}")))?;
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(format!("corrupt length prefix for {what}")));
        }
        self.take(n, what)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}
