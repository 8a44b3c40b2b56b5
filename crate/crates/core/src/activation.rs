//! Bit-packed activation vectors and their `AVF1` on-disk encoding.
//!
//! Layout: magic `AVF1`, `n` (u64 LE), `ones` (u64 LE), then `ceil(n/8)`
//! payload bytes with bit `i` at byte `i / 8`, position `i % 8` (LSB first).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"AVF1";
const HEADER_LEN: usize = 4 + 8 + 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActivationVector {
    len: usize,
    words: Vec<u64>,
    ones: usize,
}

fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl ActivationVector {
    pub fn zeros(len: usize) -> Self {
        ActivationVector {
            len,
            words: vec![0; word_count(len)],
            ones: 0,
        }
    }

    pub fn full(len: usize) -> Self {
        Self::from_predicate(len, |_| true)
    }

    pub fn from_predicate(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut words = vec![0u64; word_count(len)];
        for (w, word) in words.iter_mut().enumerate() {
            let base = w * 64;
            let end = (base + 64).min(len);
            let mut bits = 0u64;
            for i in base..end {
                bits |= (f(i) as u64) << (i - base);
            }
            *word = bits;
        }
        Self::from_words(len, words)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_predicate(bits.len(), |i| bits[i])
    }

    fn from_words(len: usize, words: Vec<u64>) -> Self {
        let ones = words.iter().map(|w| w.count_ones() as usize).sum();
        ActivationVector { len, words, ones }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn coverage(&self) -> f64 {
        if self.len == 0 {
            return 0.0;
        }
        self.ones as f64 / self.len as f64
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(())
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        Ok(Self::from_words(self.len, words))
    }

    /// Popcount of the conjunction without materializing it.
    pub fn and_count(&self, other: &Self) -> Result<usize> {
        self.check_len(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    pub(crate) fn union_in_place(&mut self, other: &Self) -> Result<()> {
        self.check_len(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        self.ones = self.words.iter().map(|w| w.count_ones() as usize).sum();
        Ok(())
    }

    /// Indices of set bits in ascending order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + tz)
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let payload = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(HEADER_LEN + payload);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        out.extend_from_slice(&(self.ones as u64).to_le_bytes());
        for word in &self.words {
            out.extend_from_slice(&word.to_le_bytes());
        }
        out.truncate(HEADER_LEN + payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < HEADER_LEN {
            return Err(format!("truncated header ({} bytes)", bytes.len()));
        }
        if &bytes[..4] != MAGIC {
            return Err("bad magic".into());
        }
        let len = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
        let ones = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let len = usize::try_from(len).map_err(|_| "length does not fit in memory".to_string())?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != len.div_ceil(8) {
            return Err(format!(
                "payload has {} bytes, expected {}",
                payload.len(),
                len.div_ceil(8)
            ));
        }
        if len % 8 != 0 {
            let last = payload[payload.len() - 1];
            if last >> (len % 8) != 0 {
                return Err("padding bits beyond n are set".into());
            }
        }
        let mut words = vec![0u64; word_count(len)];
        for (w, chunk) in payload.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            words[w] = u64::from_le_bytes(buf);
        }
        let av = Self::from_words(len, words);
        if av.ones as u64 != ones {
            return Err(format!("header ones = {ones}, payload popcount = {}", av.ones));
        }
        Ok(av)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|message| Error::ActivationFormat {
            path: path.into(),
            message,
        })
    }
}
