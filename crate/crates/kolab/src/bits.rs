//! Finite binary strings and the numeric/textual encodings used everywhere else.
//!
//! A [`BitStr`] is an ordered sequence of bits; index 0 is the leftmost bit and
//! concatenation `a.concat(&b)` places `a`'s bits first. Equality is exact
//! (length and every bit). Bits are packed MSB-first into `u64` words so that
//! comparing two strings of equal length is a plain word comparison.

use std::cmp::Ordering;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Non-negative integers that fit in 64 bits.
pub type Nat = u64;

/// Hard cap on bit-string length; guards against runaway buffer growth.
pub const LENGTH_CAP: usize = 1 << 20;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitStr {
    len: usize,
    words: Vec<u64>, // bit i lives at words[i/64], position 63 - i%64; trailing bits zero
}

impl BitStr {
    pub fn empty() -> Self {
        BitStr::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The string `0^n`.
    pub fn zeros(n: usize) -> Self {
        BitStr {
            len: n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    /// Bits of `value` read big-endian at width `len` (`len <= 64`).
    /// `from_uint(3, 0b110)` is `"110"`.
    pub fn from_uint(len: usize, value: u64) -> Self {
        assert!(len <= 64, "from_uint width above 64");
        if len == 0 {
            return BitStr::empty();
        }
        debug_assert!(len == 64 || value < 1 << len);
        BitStr {
            len,
            words: vec![value << (64 - len)],
        }
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (63 - (i & 63))) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.words[i >> 6] |= 1 << (63 - (i & 63));
    }

    pub fn push(&mut self, bit: bool) {
        let i = self.len;
        if i.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        if bit {
            self.set(i);
        }
    }

    pub fn pop(&mut self) -> Option<bool> {
        if self.len == 0 {
            return None;
        }
        let i = self.len - 1;
        let bit = self.get(i);
        self.words[i >> 6] &= !(1 << (63 - (i & 63)));
        self.len -= 1;
        if self.words.len() > self.len.div_ceil(64) {
            self.words.pop();
        }
        Some(bit)
    }

    /// Up to 64 bits starting at `start`, MSB-first in the low `len` bits.
    pub fn bits_at(&self, start: usize, len: usize) -> u64 {
        debug_assert!(len <= 64 && start + len <= self.len);
        if len == 0 {
            return 0;
        }
        let w = start >> 6;
        let off = start & 63;
        let mut v = self.words[w] << off;
        if off != 0 && w + 1 < self.words.len() {
            v |= self.words[w + 1] >> (64 - off);
        }
        if len == 64 { v } else { v >> (64 - len) }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn concat(&self, other: &BitStr) -> BitStr {
        let mut out = self.clone();
        out.append(other);
        out
    }

    /// Append the low `len` bits of `value`, MSB-first.
    pub fn push_bits(&mut self, value: u64, len: usize) {
        debug_assert!(len <= 64);
        if len == 0 {
            return;
        }
        let msb = if len == 64 { value } else { value << (64 - len) };
        let off = self.len & 63;
        let word_idx = self.len >> 6;
        self.len += len;
        self.words.resize(self.len.div_ceil(64), 0);
        self.words[word_idx] |= msb >> off;
        if off != 0 && off + len > 64 {
            self.words[word_idx + 1] |= msb << (64 - off);
        }
    }

    pub fn append(&mut self, other: &BitStr) {
        let mut i = 0;
        while i < other.len {
            let chunk = (other.len - i).min(64);
            self.push_bits(other.bits_at(i, chunk), chunk);
            i += chunk;
        }
    }

    pub fn append_zeros(&mut self, n: usize) {
        self.len += n;
        self.words.resize(self.len.div_ceil(64), 0);
    }

    pub fn prefix(&self, n: usize) -> BitStr {
        debug_assert!(n <= self.len);
        let mut out = BitStr {
            len: n,
            words: self.words[..n.div_ceil(64)].to_vec(),
        };
        out.mask_tail();
        out
    }

    /// The bits from index `from` to the end.
    pub fn suffix(&self, from: usize) -> BitStr {
        debug_assert!(from <= self.len);
        let len = self.len - from;
        let mut words = Vec::with_capacity(len.div_ceil(64));
        let mut i = 0;
        while i < len {
            let chunk = (len - i).min(64);
            let v = self.bits_at(from + i, chunk);
            words.push(if chunk == 64 { v } else { v << (64 - chunk) });
            i += chunk;
        }
        BitStr { len, words }
    }

    pub fn starts_with(&self, prefix: &BitStr) -> bool {
        prefix.len <= self.len && self.prefix(prefix.len) == *prefix
    }

    pub fn ends_with_zeros(&self, n: usize) -> bool {
        n <= self.len && (self.len - n..self.len).all(|i| !self.get(i))
    }

    pub fn xor(&self, other: &BitStr) -> BitStr {
        assert_eq!(self.len, other.len, "xor length mismatch");
        let mut out = self.clone();
        for (w, o) in out.words.iter_mut().zip(&other.words) {
            *w ^= o;
        }
        out
    }

    fn mask_tail(&mut self) {
        let r = self.len & 63;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= !0u64 << (64 - r);
            }
        }
    }

    /// Big-endian numeric value, if the string fits in 64 bits.
    pub fn as_uint(&self) -> Option<u64> {
        if self.len > 64 {
            return None;
        }
        Some(self.bits_at(0, self.len))
    }

    /// Parse a string of `'0'`/`'1'` characters.
    pub fn parse_bin(s: &str) -> Result<BitStr> {
        if s.len() > LENGTH_CAP {
            return Err(Error::LengthCap {
                len: s.len(),
                cap: LENGTH_CAP,
            });
        }
        let mut out = BitStr::zeros(0);
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => return Err(Error::MalformedHex(format!("unexpected character {c:?}"))),
            }
        }
        Ok(out)
    }

    pub fn bit_string(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// `HEX:LEN` form: bits left-padded with zeros to a whole number of hex
    /// digits, leftmost bit landing in the most significant bit of the first
    /// digit. `"1011"` becomes `"b:4"`, the empty string `":0"`.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        let pad = digits * 4 - self.len;
        let mut hex = String::with_capacity(digits + 8);
        for d in 0..digits {
            let mut nibble = 0u64;
            for j in 0..4 {
                let padded_idx = d * 4 + j;
                let bit = if padded_idx < pad {
                    false
                } else {
                    self.get(padded_idx - pad)
                };
                nibble = nibble << 1 | bit as u64;
            }
            hex.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        format!("{hex}:{}", self.len)
    }

    /// Inverse of [`to_hex`](Self::to_hex); rejects digit counts that do not
    /// match the length and nonzero padding bits.
    pub fn from_hex(text: &str) -> Result<BitStr> {
        let (hex, len_part) = text
            .split_once(':')
            .ok_or_else(|| Error::MalformedHex(format!("missing ':' in {text:?}")))?;
        let len: usize = len_part
            .parse()
            .map_err(|_| Error::MalformedHex(format!("bad length in {text:?}")))?;
        if len > LENGTH_CAP {
            return Err(Error::LengthCap {
                len,
                cap: LENGTH_CAP,
            });
        }
        let digits = hex.len();
        if digits != len.div_ceil(4) {
            return Err(Error::HexLengthMismatch { digits, len });
        }
        let pad = digits * 4 - len;
        let mut out = BitStr::zeros(len);
        for (d, c) in hex.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Error::MalformedHex(format!("bad digit {c:?}")))?;
            for j in 0..4 {
                let bit = (nibble >> (3 - j)) & 1 == 1;
                let padded_idx = d * 4 + j;
                if padded_idx < pad {
                    if bit {
                        return Err(Error::MalformedHex(format!(
                            "nonzero padding bit in {text:?}"
                        )));
                    }
                } else if bit {
                    out.set(padded_idx - pad);
                }
            }
        }
        Ok(out)
    }

    /// Accepts either a `'0'/'1'` literal or the `HEX:LEN` form.
    pub fn parse_flexible(s: &str) -> Result<BitStr> {
        if s.contains(':') {
            BitStr::from_hex(s)
        } else {
            BitStr::parse_bin(s)
        }
    }
}

/// Minimal big-endian binary form; `encode_nat(0)` is the empty string.
pub fn encode_nat(v: Nat) -> BitStr {
    if v == 0 {
        BitStr::empty()
    } else {
        BitStr::from_uint(64 - v.leading_zeros() as usize, v)
    }
}

/// Big-endian value of a bit string (leading zeros permitted).
/// `None` when the string is longer than 64 bits.
pub fn decode_nat(s: &BitStr) -> Option<Nat> {
    s.as_uint()
}

/// Length-then-lexicographic order; this is the order cache files are sorted
/// in and the order enumeration sweeps visit descriptions.
impl Ord for BitStr {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.words.cmp(&other.words))
    }
}

impl PartialOrd for BitStr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

impl fmt::Debug for BitStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "b\"{}\"", self.bit_string())
        } else {
            write!(f, "b\"{}\"", self.to_hex())
        }
    }
}

impl Serialize for BitStr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for BitStr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BitStr::from_hex(&s).map_err(D::Error::custom)
    }
}
