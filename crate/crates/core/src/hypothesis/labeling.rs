use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataspace::PointSet;
use crate::error::{AuditError, Result};

/// A total assignment X → {0, 1}, indexed by point id.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Labeling {
    bits: Vec<bool>,
}

impl Labeling {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Labeling { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Labeling { bits: vec![false; n] }
    }

    pub fn ones(n: usize) -> Self {
        Labeling { bits: vec![true; n] }
    }

    /// Labeling of `n` points whose ones are exactly `ones`.
    pub fn with_ones(n: usize, ones: &[usize]) -> Self {
        let mut bits = vec![false; n];
        for &i in ones {
            bits[i] = true;
        }
        Labeling { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.bits[i] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Labeling {
        Labeling { bits: self.bits.iter().map(|b| !b).collect() }
    }

    /// Number of points of `set` where the two labelings differ.
    pub fn disagreements_on(&self, other: &Labeling, set: &PointSet) -> usize {
        set.ids().iter().filter(|&&i| self.bits[i] != other.bits[i]).count()
    }

    pub fn agrees_on(&self, other: &Labeling, set: &PointSet) -> bool {
        self.disagreements_on(other, set) == 0
    }

    /// Packs bits LSB-first into bytes and renders them as lowercase hex.
    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(self.bits.len().div_ceil(8) * 2);
        for chunk in self.bits.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k));
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    pub fn from_hex(hex: &str, n: usize) -> Result<Self> {
        let bad = || AuditError::InvalidArgument(format!("bad labeling hex `{hex}` for n={n}"));
        if hex.len() != n.div_ceil(8) * 2 {
            return Err(bad());
        }
        let mut bits = Vec::with_capacity(n);
        for k in 0..hex.len() / 2 {
            let byte = u8::from_str_radix(&hex[2 * k..2 * k + 2], 16).map_err(|_| bad())?;
            for j in 0..8 {
                if bits.len() < n {
                    bits.push(byte >> j & 1 == 1);
                } else if byte >> j & 1 == 1 {
                    return Err(bad());
                }
            }
        }
        Ok(Labeling { bits })
    }

    /// Short FNV-1a digest of the packed bits, for reports.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_hex().bytes().chain((self.bits.len() as u64).to_le_bytes()) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

impl fmt::Debug for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.len() <= 64 {
            let s: String = self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            write!(f, "Labeling({s})")
        } else {
            write!(f, "Labeling(n={}, ones={})", self.len(), self.count_ones())
        }
    }
}

/// `"<n>:<hex>"`
impl fmt::Display for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.bits.len(), self.to_hex())
    }
}

impl FromStr for Labeling {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        let (n, hex) = s
            .split_once(':')
            .ok_or_else(|| AuditError::InvalidArgument(format!("bad labeling `{s}`")))?;
        let n = n
            .parse()
            .map_err(|_| AuditError::InvalidArgument(format!("bad labeling length in `{s}`")))?;
        Labeling::from_hex(hex, n)
    }
}

impl Serialize for Labeling {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Labeling {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
