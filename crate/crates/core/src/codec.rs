//! Little-endian binary framing shared by the replay database, the episode
//! trace log and checkpoints: a 4-byte magic, a `u32` version, a body, and a
//! trailer holding the 64-bit checksum of everything before it.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// First eight bytes of the SHA-256 digest, little-endian.
pub fn checksum64(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

#[derive(Debug, Default, Clone)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn with_header(magic: &[u8; 4], version: u32) -> Self {
        let mut w = Self::default();
        w.bytes(magic);
        w.u32(version);
        w
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }

    pub fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.bytes(s.as_bytes());
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Appends the checksum trailer and returns the finished file.
    pub fn seal(mut self) -> Vec<u8> {
        let sum = checksum64(&self.buf);
        self.u64(sum);
        self.buf
    }
}

#[derive(Debug)]
pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    /// Verifies magic, version and trailer, returning a reader positioned
    /// just after the version field.
    pub fn open(file: &'a [u8], magic: &[u8; 4], version: u32) -> Result<Self> {
        if file.len() < 16 {
            return Err(Error::Corrupt("file shorter than header and trailer".into()));
        }
        let (body, trailer) = file.split_at(file.len() - 8);
        let stored = u64::from_le_bytes(trailer.try_into().expect("8-byte trailer"));
        if checksum64(body) != stored {
            return Err(Error::Corrupt("checksum mismatch".into()));
        }
        if &body[..4] != magic {
            return Err(Error::Corrupt(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&body[..4]),
                String::from_utf8_lossy(magic)
            )));
        }
        let mut r = Self { buf: body, pos: 4 };
        let v = r.u32()?;
        if v != version {
            return Err(Error::Corrupt(format!("unsupported version {v}")));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Corrupt("unexpected end of data".into()));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::Corrupt("invalid utf-8".into()))
    }

    pub fn finish(&self) -> Result<()> {
        if self.remaining() == 0 {
            Ok(())
        } else {
            Err(Error::Corrupt(format!("{} trailing bytes", self.remaining())))
        }
    }
}
