//! Random binary matrices over GF(2), the matrix-vector product, and the
//! bit-exact serialization that embeds a matrix into descriptions and oracle
//! queries.
//!
//! Serialization is row-major, row 0 first, leftmost bit = column 0; a `k x n`
//! matrix is exactly the `n*k`-bit string the decompressor sees.
//!
//! Randomness comes from a SplitMix64 stream so every experiment reproduces
//! bit-for-bit on any platform: the state advances by the golden-ratio
//! increment `0x9E3779B97F4A7C15` and each output is the standard
//! xorshift-multiply finalizer (`>> 30` * `0xBF58476D1CE4E5B9`, `>> 27` *
//! `0x94D049BB133111EB`, `>> 31`). Per-matrix substreams are derived as
//! `mix(mix(seed) + stream_index)`, which makes sampling order-independent:
//! matrix `i` is the same no matter which worker draws it.

use crate::bits::BitStr;
use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic 64-bit bit stream. Identical `(seed, stream_index)` yields an
/// identical stream everywhere.
#[derive(Debug, Clone)]
pub struct SeededRng {
    state: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> SeededRng {
        SeededRng { state: seed }
    }

    /// Substream `stream_index` of `seed`; see the module docs for the exact
    /// derivation.
    pub fn substream(seed: u64, stream_index: u64) -> SeededRng {
        SeededRng {
            state: mix(seed).wrapping_add(stream_index).wrapping_mul(GOLDEN) ^ mix(stream_index),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// A uniformly random bit string of length `len`: successive words of the
    /// stream read MSB-first.
    pub fn next_bits(&mut self, len: usize) -> BitStr {
        let mut out = BitStr::empty();
        let mut remaining = len;
        while remaining > 0 {
            let chunk = remaining.min(64);
            let w = self.next_u64();
            out.push_bits(w >> (64 - chunk), chunk);
            remaining -= chunk;
        }
        out
    }
}

/// A `k x n` matrix over GF(2), stored as its serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    bits: BitStr,
}

/// Exhaustive census cap: `n*k` bits must enumerate in memory.
pub const CENSUS_CAP: u64 = 16;

impl Gf2Matrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major serialization of length exactly `rows * cols`.
    pub fn serialize(&self) -> &BitStr {
        &self.bits
    }

    pub fn deserialize(bits: &BitStr, rows: usize, cols: usize) -> Result<Gf2Matrix> {
        if rows == 0 || cols == 0 {
            return Err(Error::ZeroDimension);
        }
        if bits.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: bits.len(),
            });
        }
        Ok(Gf2Matrix {
            rows,
            cols,
            bits: bits.clone(),
        })
    }

    pub fn entry(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.rows && col < self.cols);
        self.bits.get(row * self.cols + col)
    }

    /// `A*y` over GF(2): output bit `i` is the parity of `row_i AND y`.
    pub fn matvec(&self, y: &BitStr) -> Result<BitStr> {
        if y.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: y.len(),
            });
        }
        let mut out = BitStr::zeros(0);
        for r in 0..self.rows {
            let mut parity = 0u32;
            let mut c = 0;
            while c < self.cols {
                let chunk = (self.cols - c).min(64);
                let row_bits = self.bits.bits_at(r * self.cols + c, chunk);
                let y_bits = y.bits_at(c, chunk);
                parity ^= (row_bits & y_bits).count_ones() & 1;
                c += chunk;
            }
            out.push(parity == 1);
        }
        Ok(out)
    }
}

/// `n*k` independent uniform bits from `rng`, filled row-major.
pub fn sample_matrix(k: usize, n: usize, rng: &mut SeededRng) -> Result<Gf2Matrix> {
    if k == 0 || n == 0 {
        return Err(Error::ZeroDimension);
    }
    let bits = k
        .checked_mul(n)
        .filter(|&b| b <= crate::bits::LENGTH_CAP)
        .ok_or(Error::LengthCap {
            len: usize::MAX,
            cap: crate::bits::LENGTH_CAP,
        })?;
    Ok(Gf2Matrix {
        rows: k,
        cols: n,
        bits: rng.next_bits(bits),
    })
}

/// Exact count of `k x n` matrices with `A*b1 = A*b2`, over all `2^(nk)`
/// matrices. The ratio `count/total` equals `2^-k` exactly.
pub fn collision_census(n: usize, k: usize, b1: &BitStr, b2: &BitStr) -> Result<(u64, u64)> {
    if b1 == b2 {
        return Err(Error::EqualInputs);
    }
    for b in [b1, b2] {
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
    }
    if n == 0 || k == 0 {
        return Err(Error::ZeroDimension);
    }
    let bits = (n * k) as u64;
    if bits > CENSUS_CAP {
        return Err(Error::CensusRegime {
            bits,
            cap: CENSUS_CAP,
        });
    }
    // A*b1 = A*b2 iff A*(b1 xor b2) = 0; test row parities directly on the
    // integer whose big-endian bits are the serialization.
    let diff = b1.xor(b2).as_uint().expect("n <= 16");
    let total = 1u64 << bits;
    let row_mask = (1u64 << n) - 1;
    let mut count = 0;
    for mat in 0..total {
        let mut all_zero = true;
        for r in 0..k {
            let row = (mat >> ((k - 1 - r) * n)) & row_mask;
            if (row & diff).count_ones() & 1 == 1 {
                all_zero = false;
                break;
            }
        }
        if all_zero {
            count += 1;
        }
    }
    Ok((count, total))
}
