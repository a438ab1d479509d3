//! The halting-aware decompressor `U`, the warm-up parity decompressor `W`,
//! and the scheme constants both are built from.
//!
//! `U` dispatches on a prefix of `d` (with marker length `D`):
//!
//! * case 2, `1^D 0 d'` — halt with `d'` verbatim. This alone makes `U`
//!   universal: every `x` has a description of length `|x| + D + 1`.
//! * case 1, `1^(D-1) 0 d'` — run the even decompressor on `d'`. If the
//!   output looks like a padded matrix block (`y' 0^pad` with `|y'|`
//!   specific), the description is only admitted when `|d'| < |y| - G`;
//!   everything else passes through.
//! * case 3, `0 d'` — only fires when `|d'| + slack` is specific, say
//!   `p*k`. Then `d'` splits as a `k x (p-1)` matrix `A` followed by a
//!   `(k - slack)`-bit tail; the tail is decoded under condition `n = p-1`,
//!   and when its output `y` has length `n` and its first `l` bits form a
//!   halting program, `U` outputs `A . Ay . 0^pad`.
//!
//! Case 3 is the signal channel: a padded matrix block is compressible under
//! `U` exactly when a low-complexity preimage with a halting prefix exists.
//! Its outputs have even length `p*k + pad` (odd times odd plus odd), so no
//! case-3 output is itself of specific length and the construction never
//! feeds back into itself.

use serde::Serialize;

use crate::bits::{encode_nat, BitStr};
use crate::complexity::{build_table, ComplexityTable, ComplexityValue, MachineId};
use crate::error::{Error, Result};
use crate::gf2::Gf2Matrix;
use crate::machine::{in_halting, ExecOutcome, MachineBudgets};
use crate::primes::{default_sieve, Sieve};

/// All construction constants; hashed into every cache and report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeParams {
    /// Case-marker length `D`: case 2 opens with `1^D 0`, case 1 with
    /// `1^(D-1) 0`. At least 2, or the case-1 and case-3 prefixes collide.
    pub case_marker: u32,
    /// Admission gap `G` in the case-1 exception.
    pub pad_gap: u32,
    /// Zero-run appended to case-3 outputs; odd, so those outputs have even
    /// length.
    pub pad: u32,
    /// Reserved gap `k - |tail|`; odd, so `k` is odd and `p*k` can be
    /// specific.
    pub slack: u32,
    pub budgets: MachineBudgets,
    /// Default forward-enumeration bound.
    pub enum_bound: u32,
    /// Compare-run switch: admit case-1 exceptions by the looser
    /// `|y| > |d'| - G` rule instead of `|d'| < |y| - G`.
    pub case1_literal_exception: bool,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            case_marker: 4,
            pad_gap: 8,
            pad: 9,
            slack: 5,
            budgets: MachineBudgets::default(),
            enum_bound: 18,
            case1_literal_exception: false,
        }
    }
}

impl SchemeParams {
    pub fn validate(&self) -> Result<()> {
        if self.case_marker < 2 {
            return Err(Error::InvalidConfig(
                "case_marker must be at least 2 (case prefixes collide below that)".into(),
            ));
        }
        if self.pad_gap < 3 {
            return Err(Error::InvalidConfig("pad_gap must be at least 3".into()));
        }
        if self.pad.is_multiple_of(2) {
            return Err(Error::InvalidConfig("pad must be odd".into()));
        }
        if self.slack.is_multiple_of(2) {
            return Err(Error::InvalidConfig("slack must be odd".into()));
        }
        if self.enum_bound > crate::complexity::BOUND_CAP {
            return Err(Error::BoundTooLarge {
                bound: self.enum_bound,
                cap: crate::complexity::BOUND_CAP,
            });
        }
        self.budgets.validate()
    }

    /// FNV-1a over the canonical key=value rendering; stable across platforms.
    pub fn params_hash(&self) -> u64 {
        let canon = format!(
            "case_marker={} pad_gap={} pad={} slack={} exec_budget={} halt_budget={} \
             max_output={} enum_bound={} case1_literal_exception={}",
            self.case_marker,
            self.pad_gap,
            self.pad,
            self.slack,
            self.budgets.exec_budget,
            self.budgets.halt_budget,
            self.budgets.max_output,
            self.enum_bound,
            self.case1_literal_exception
        );
        fnv1a(canon.as_bytes())
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

/// The matrix-case split of a description body.
#[derive(Debug, Clone)]
pub struct Case3Parse {
    pub p: u64,
    pub k: u64,
    pub l: u64,
    pub n: u64,
    pub matrix: Gf2Matrix,
    /// The `(k - slack)`-bit segment decoded under condition `n`.
    pub tail: BitStr,
}

/// Split `d'` for case 3, or `None` when the length does not parse
/// (not specific, or `k < slack`).
pub fn parse_case3(d_prime: &BitStr, params: &SchemeParams, sieve: &Sieve) -> Option<Case3Parse> {
    let m = d_prime.len() as u64 + params.slack as u64;
    let sp = sieve.parse_specific(m).ok()??;
    if sp.k < params.slack as u64 {
        return None;
    }
    let area = (sp.n * sp.k) as usize;
    debug_assert_eq!(d_prime.len(), area + (sp.k - params.slack as u64) as usize);
    let matrix = Gf2Matrix::deserialize(&d_prime.prefix(area), sp.k as usize, sp.n as usize)
        .expect("length forced by the parse");
    Some(Case3Parse {
        p: sp.p,
        k: sp.k,
        l: sp.l,
        n: sp.n,
        matrix,
        tail: d_prime.suffix(area),
    })
}

/// Does `y` look like a padded matrix block: `y' 0^pad` with `|y'|` specific?
pub fn exception_form(y: &BitStr, params: &SchemeParams, sieve: &Sieve) -> bool {
    let pad = params.pad as usize;
    y.len() > pad
        && y.ends_with_zeros(pad)
        && sieve
            .parse_specific((y.len() - pad) as u64)
            .map(|p| p.is_some())
            .unwrap_or(false)
}

fn case1_admits(d_prime_len: usize, y_len: usize, params: &SchemeParams) -> bool {
    let gap = params.pad_gap as u64;
    if params.case1_literal_exception {
        y_len as u64 + gap > d_prime_len as u64
    } else {
        d_prime_len as u64 + gap < y_len as u64
    }
}

fn leading_ones(d: &BitStr, cap: usize) -> usize {
    let mut n = 0;
    while n < cap && n < d.len() && d.get(n) {
        n += 1;
    }
    n
}

/// The halting-aware decompressor.
pub fn u_decode(d: &BitStr, params: &SchemeParams) -> ExecOutcome {
    let sieve = default_sieve();
    let marker = params.case_marker as usize;
    let ones = leading_ones(d, marker + 1);

    // case 2: 1^D 0 d'
    if ones == marker && d.len() > marker {
        return ExecOutcome::Halted(d.suffix(marker + 1));
    }

    // case 1: 1^(D-1) 0 d'
    if ones == marker - 1 && d.len() > marker - 1 {
        let d_prime = d.suffix(marker);
        let out = crate::complexity::v_decode(&d_prime, &BitStr::empty(), &params.budgets);
        return match out {
            ExecOutcome::Halted(y) => {
                if exception_form(&y, params, sieve)
                    && !case1_admits(d_prime.len(), y.len(), params)
                {
                    ExecOutcome::Stuck
                } else {
                    ExecOutcome::Halted(y)
                }
            }
            other => other,
        };
    }

    // case 3: 0 d'
    if !d.is_empty() && !d.get(0) {
        let d_prime = d.suffix(1);
        let Some(parse) = parse_case3(&d_prime, params, sieve) else {
            return ExecOutcome::Stuck;
        };
        let cond = encode_nat(parse.n);
        if let ExecOutcome::Halted(y) =
            crate::complexity::v_decode(&parse.tail, &cond, &params.budgets)
        {
            if y.len() as u64 == parse.n {
                let program = y.prefix(parse.l as usize);
                if in_halting(&program, &params.budgets) {
                    let image = parse.matrix.matvec(&y).expect("|y| = n");
                    let mut out = parse.matrix.serialize().clone();
                    out.append(&image);
                    out.append_zeros(params.pad as usize);
                    // p*k + pad is even, hence never specific: case 3 cannot
                    // feed its own outputs back into itself.
                    debug_assert_eq!(out.len() % 2, 0);
                    debug_assert!(matches!(
                        sieve.parse_specific(out.len() as u64),
                        Ok(None)
                    ));
                    return ExecOutcome::Halted(out);
                }
            }
        }
        return ExecOutcome::Stuck;
    }

    ExecOutcome::Stuck
}

/// The warm-up decompressor: `00 d'` passes the even decompressor through,
/// `1 d'` additionally requires the output to be a halting program. Minimal
/// descriptions of halting outputs come out odd, everything else even.
pub fn w_decode(d: &BitStr, params: &SchemeParams) -> ExecOutcome {
    if d.is_empty() {
        return ExecOutcome::Stuck;
    }
    if d.get(0) {
        let out = crate::complexity::v_decode(&d.suffix(1), &BitStr::empty(), &params.budgets);
        return match out {
            ExecOutcome::Halted(y) if in_halting(&y, &params.budgets) => ExecOutcome::Halted(y),
            _ => ExecOutcome::Stuck,
        };
    }
    if d.len() < 2 || d.get(1) {
        return ExecOutcome::Stuck;
    }
    crate::complexity::v_decode(&d.suffix(2), &BitStr::empty(), &params.budgets)
}

/// Decide halting from the parity of the warm-up complexity alone.
pub fn parity_solve_halting(x: &BitStr, w_table: &ComplexityTable) -> Result<bool> {
    debug_assert_eq!(w_table.machine, MachineId::W);
    match w_table.complexity_of(x) {
        ComplexityValue::Known(c) => Ok(c % 2 == 1),
        ComplexityValue::Above(bound) => Err(Error::AboveBound { bound }),
    }
}

/// Result of sweeping the admission-gap constant.
#[derive(Debug, Clone, Serialize)]
pub struct GapCalibration {
    /// Smallest gap making the implication hold at the swept lengths.
    pub gap_star: u32,
    /// Worst-case string (first in length-then-lex order), if any constraint
    /// bound the gap.
    pub witness: Option<BitStr>,
    pub witness_padded_complexity: Option<u32>,
    pub max_len: u32,
    pub pad: u32,
    pub case_marker: u32,
    pub bound: u32,
    /// Strings with `C_V(x) >= |x| - D` among those swept.
    pub qualifying: u64,
    pub checked: u64,
    pub params_hash: String,
}

/// Smallest `G` such that, for every `x` up to `max_len` with
/// `C_V(x) >= |x| - D`, the padded string keeps `C_V(x 0^pad) >= |x| + pad - G`.
/// Computed from a full forward table of the even decompressor.
pub fn calibrate_gap(params: &SchemeParams, max_len: u32, threads: usize) -> Result<GapCalibration> {
    params.validate()?;
    if max_len + params.pad > params.enum_bound {
        return Err(Error::Precondition(format!(
            "max_len {} + pad {} exceeds enum_bound {}",
            max_len, params.pad, params.enum_bound
        )));
    }
    let table = build_table(
        MachineId::V,
        params,
        &BitStr::empty(),
        params.enum_bound,
        threads,
    )?;
    let marker = params.case_marker as i64;
    let mut best: i64 = 0;
    let mut witness = None;
    let mut witness_padded = None;
    let mut qualifying = 0u64;
    let mut checked = 0u64;
    for len in 0..=max_len {
        for value in 0..(1u64 << len) {
            checked += 1;
            let x = BitStr::from_uint(len as usize, value);
            let qualifies = match table.complexity_of(&x) {
                ComplexityValue::Known(c) => c as i64 >= len as i64 - marker,
                // above the bound means the complexity is at least bound+1,
                // comfortably over |x| - D at these lengths
                ComplexityValue::Above(_) => true,
            };
            if !qualifies {
                continue;
            }
            qualifying += 1;
            let mut padded = x.clone();
            padded.append_zeros(params.pad as usize);
            if let ComplexityValue::Known(c2) = table.complexity_of(&padded) {
                let deficit = (len + params.pad) as i64 - c2 as i64;
                if deficit > best {
                    best = deficit;
                    witness = Some(x);
                    witness_padded = Some(c2);
                }
            }
        }
    }
    Ok(GapCalibration {
        gap_star: best.max(0) as u32,
        witness,
        witness_padded_complexity: witness_padded,
        max_len,
        pad: params.pad,
        case_marker: params.case_marker,
        bound: params.enum_bound,
        qualifying,
        checked,
        params_hash: format!("{:016x}", params.params_hash()),
    })
}
