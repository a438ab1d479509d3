//! Membership in the set of incompressible strings `R_U = {x : C_U(x) >= |x|}`,
//! in two modes.
//!
//! *Exact* mode enumerates every description shorter than the query; it is
//! complete but only feasible while `|q| - 1` stays within the enumeration
//! bound.
//!
//! *Structural* mode works at any length by inverting the only shapes a short
//! description can take. A case-3 description of `q` forces `q = A . c . 0^pad`
//! with `|q| - pad` specific, which pins the matrix `A` and leaves a
//! `(k - slack)`-bit unknown tail: enumerating `2^(k-slack)` tails replaces a
//! `2^|q|` search. Case-2 descriptions are always longer than their output and
//! never witness anything. Case-1 descriptions are searched up to the
//! enumeration bound. Structural mode is therefore sound whenever it declares
//! non-random (it holds a witness), and can err only toward "random", only
//! for strings whose every description is longer than the bound.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::bits::{encode_nat, BitStr};
use crate::complexity::{
    build_table, find_description, v_decode, ComplexityTable, ComplexityValue, MachineId,
};
use crate::error::{Error, Result};
use crate::gf2::{Gf2Matrix, SeededRng};
use crate::machine::{in_halting, ExecOutcome};
use crate::primes::default_sieve;
use crate::scheme::{exception_form, parse_case3, u_decode, SchemeParams};

/// Cap on the inversion width `k - slack`.
pub const INVERSION_CAP: u32 = 26;

/// Above this enumeration bound the case-1 search streams descriptions per
/// query instead of materializing a forward table.
const TABLE_BOUND_MAX: u32 = 20;

/// Queries at most this long may be answered exactly without a shared table.
const DIRECT_EXACT_MAX: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Exact,
    Structural,
}

impl OracleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleMode::Exact => "exact",
            OracleMode::Structural => "structural",
        }
    }

    pub fn parse(s: &str) -> Result<OracleMode> {
        match s {
            "exact" => Ok(OracleMode::Exact),
            "structural" => Ok(OracleMode::Structural),
            _ => Err(Error::InvalidConfig(format!("unknown oracle mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for OracleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One membership answer. Non-random verdicts always carry a witness: a
/// description that re-decodes to the query and is strictly shorter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleVerdict {
    pub q: BitStr,
    pub random: bool,
    pub mode: OracleMode,
    pub witness: Option<BitStr>,
    /// Machine executions this query performed (0 on memo or table hits).
    pub cost: u64,
}

/// Stateful oracle: owns the forward tables and memoizes verdicts per
/// `(query, mode)` for one parameter set.
pub struct RuOracle {
    params: SchemeParams,
    u_table: Option<Arc<ComplexityTable>>,
    v_table: Option<Arc<ComplexityTable>>,
    memo_exact: HashMap<BitStr, (bool, Option<BitStr>)>,
    memo_structural: HashMap<BitStr, (bool, Option<BitStr>)>,
    threads: usize,
    queries: u64,
    executions: u64,
}

impl RuOracle {
    pub fn new(params: SchemeParams) -> Result<RuOracle> {
        params.validate()?;
        Ok(RuOracle {
            params,
            u_table: None,
            v_table: None,
            memo_exact: HashMap::new(),
            memo_structural: HashMap::new(),
            threads: 1,
            queries: 0,
            executions: 0,
        })
    }

    pub fn with_threads(mut self, threads: usize) -> RuOracle {
        self.threads = threads.max(1);
        self
    }

    /// Share prebuilt forward tables (they must match this oracle's params).
    pub fn with_shared_tables(
        mut self,
        v_table: Option<Arc<ComplexityTable>>,
        u_table: Option<Arc<ComplexityTable>>,
    ) -> Result<RuOracle> {
        let hash = self.params.params_hash();
        for (table, machine) in [(&v_table, MachineId::V), (&u_table, MachineId::U)] {
            if let Some(t) = table {
                if t.machine != machine
                    || t.params_hash != hash
                    || !t.cond.is_empty()
                    || t.bound < self.params.enum_bound
                {
                    return Err(Error::InvalidConfig(
                        "shared table does not match the oracle configuration".into(),
                    ));
                }
            }
        }
        self.v_table = v_table;
        self.u_table = u_table;
        Ok(self)
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    /// Total queries answered (memo hits included).
    pub fn queries(&self) -> u64 {
        self.queries
    }

    /// Total machine executions charged across all queries.
    pub fn executions(&self) -> u64 {
        self.executions
    }

    pub fn query(&mut self, q: &BitStr, mode: OracleMode) -> Result<OracleVerdict> {
        match mode {
            OracleMode::Exact => self.in_r_u_exact(q),
            OracleMode::Structural => self.in_r_u_structural(q),
        }
    }

    fn ensure_v_table(&mut self) -> Result<(Arc<ComplexityTable>, u64)> {
        if let Some(t) = &self.v_table {
            return Ok((Arc::clone(t), 0));
        }
        let t = Arc::new(build_table(
            MachineId::V,
            &self.params,
            &BitStr::empty(),
            self.params.enum_bound,
            self.threads,
        )?);
        let cost = t.executions();
        self.v_table = Some(Arc::clone(&t));
        Ok((t, cost))
    }

    fn ensure_u_table(&mut self) -> Result<(Arc<ComplexityTable>, u64)> {
        if let Some(t) = &self.u_table {
            return Ok((Arc::clone(t), 0));
        }
        let t = Arc::new(build_table(
            MachineId::U,
            &self.params,
            &BitStr::empty(),
            self.params.enum_bound,
            self.threads,
        )?);
        let cost = t.executions();
        self.u_table = Some(Arc::clone(&t));
        Ok((t, cost))
    }

    /// Build both tables up front so later queries are pure lookups.
    pub fn prebuild(&mut self) -> Result<()> {
        if self.params.enum_bound <= TABLE_BOUND_MAX {
            let (_, c1) = self.ensure_v_table()?;
            let (_, c2) = self.ensure_u_table()?;
            self.executions += c1 + c2;
        }
        Ok(())
    }

    fn finish(
        &mut self,
        q: &BitStr,
        mode: OracleMode,
        random: bool,
        witness: Option<BitStr>,
        cost: u64,
    ) -> OracleVerdict {
        // Soundness: every non-random verdict is backed by a shorter
        // description that really decodes to q.
        if let Some(w) = &witness {
            assert!(w.len() < q.len(), "witness not shorter than query");
            assert_eq!(
                u_decode(w, &self.params).output(),
                Some(q),
                "witness does not decode to the query"
            );
        }
        let memo = match mode {
            OracleMode::Exact => &mut self.memo_exact,
            OracleMode::Structural => &mut self.memo_structural,
        };
        memo.insert(q.clone(), (random, witness.clone()));
        self.executions += cost;
        OracleVerdict {
            q: q.clone(),
            random,
            mode,
            witness,
            cost,
        }
    }

    /// Exact membership: `q` is random iff no description shorter than `|q|`
    /// decodes to it. Requires `|q| <= enum_bound + 1`.
    pub fn in_r_u_exact(&mut self, q: &BitStr) -> Result<OracleVerdict> {
        self.queries += 1;
        let max = self.params.enum_bound as usize + 1;
        if q.len() > max {
            return Err(Error::QueryTooLong { len: q.len(), max });
        }
        if let Some((random, witness)) = self.memo_exact.get(q) {
            return Ok(OracleVerdict {
                q: q.clone(),
                random: *random,
                mode: OracleMode::Exact,
                witness: witness.clone(),
                cost: 0,
            });
        }

        // Tiny queries: check the handful of shorter descriptions directly
        // rather than paying for a table.
        if self.u_table.is_none() && q.len() <= DIRECT_EXACT_MAX {
            let mut cost = 0u64;
            for len in 0..q.len() as u32 {
                for value in 0..(1u64 << len) {
                    let d = BitStr::from_uint(len as usize, value);
                    let (out, execs) = u_decode_counted(&d, &self.params);
                    cost += execs;
                    if out.output() == Some(q) {
                        return Ok(self.finish(q, OracleMode::Exact, false, Some(d), cost));
                    }
                }
            }
            return Ok(self.finish(q, OracleMode::Exact, true, None, cost));
        }

        let (table, cost) = self.ensure_u_table()?;
        let (random, witness) = match table.entry(q) {
            Some(e) if (e.len as usize) < q.len() => {
                let witness = match &e.witness {
                    Some(w) => w.clone(),
                    None => {
                        find_description(MachineId::U, &self.params, &BitStr::empty(), q, e.len)
                            .expect("table entry has a description")
                    }
                };
                (false, Some(witness))
            }
            _ => (true, None),
        };
        Ok(self.finish(q, OracleMode::Exact, random, witness, cost))
    }

    /// Structural membership; sound for non-randomness at any length.
    pub fn in_r_u_structural(&mut self, q: &BitStr) -> Result<OracleVerdict> {
        self.queries += 1;
        if let Some((random, witness)) = self.memo_structural.get(q) {
            return Ok(OracleVerdict {
                q: q.clone(),
                random: *random,
                mode: OracleMode::Structural,
                witness: witness.clone(),
                cost: 0,
            });
        }

        let (case3, cost3) = self.invert_case3(q)?;
        if let Some(witness) = case3 {
            return Ok(self.finish(q, OracleMode::Structural, false, Some(witness), cost3));
        }

        // case 2 never witnesses: those descriptions exceed their output by
        // the marker length. Only the bounded case-1 search remains.
        let (case1, cost1) = self.search_case1(q)?;
        let random = case1.is_none();
        Ok(self.finish(q, OracleMode::Structural, random, case1, cost3 + cost1))
    }

    /// Case-3 inversion: reconstruct the forced parse of `q` and enumerate the
    /// unknown tail. The first hit in lex order is the reported witness.
    fn invert_case3(&self, q: &BitStr) -> Result<(Option<BitStr>, u64)> {
        let params = &self.params;
        let sieve = default_sieve();
        let pad = params.pad as usize;
        if q.len() <= pad || !q.ends_with_zeros(pad) {
            return Ok((None, 0));
        }
        let Ok(Some(sp)) = sieve.parse_specific((q.len() - pad) as u64) else {
            return Ok((None, 0));
        };
        if sp.k < params.slack as u64 {
            return Ok((None, 0));
        }
        let width = (sp.k - params.slack as u64) as u32;
        if width > INVERSION_CAP {
            return Err(Error::InversionCap {
                width,
                cap: INVERSION_CAP,
            });
        }
        let area = (sp.n * sp.k) as usize;
        let head = q.prefix(q.len() - pad);
        let matrix = Gf2Matrix::deserialize(&head.prefix(area), sp.k as usize, sp.n as usize)
            .expect("length forced by the parse");
        let image = head.suffix(area);
        let cond = encode_nat(sp.n);
        let mut execs = 0u64;
        for value in 0..(1u64 << width) {
            let tail = BitStr::from_uint(width as usize, value);
            execs += 1;
            let out = v_decode(&tail, &cond, &params.budgets);
            let Some(y) = out.output() else { continue };
            if y.len() as u64 != sp.n {
                continue;
            }
            if matrix.matvec(y).expect("|y| = n") != image {
                continue;
            }
            execs += 1;
            if !in_halting(&y.prefix(sp.l as usize), &params.budgets) {
                continue;
            }
            let mut witness = BitStr::empty();
            witness.push(false);
            witness.append(&head.prefix(area));
            witness.append(&tail);
            return Ok((Some(witness), execs));
        }
        Ok((None, execs))
    }

    /// Bounded case-1 search: a description of `q` under the even decompressor
    /// within `min(|q| - D - 1, enum_bound)` that the exception rule admits.
    fn search_case1(&mut self, q: &BitStr) -> Result<(Option<BitStr>, u64)> {
        let params = self.params.clone();
        let sieve = default_sieve();
        let marker = params.case_marker as usize;
        let Some(room) = q.len().checked_sub(marker + 1) else {
            return Ok((None, 0));
        };
        let limit = (room as u32).min(params.enum_bound);
        let exception = exception_form(q, &params, sieve);

        let (found, cost): (Option<BitStr>, u64) = if params.enum_bound <= TABLE_BOUND_MAX {
            let (table, build_cost) = self.ensure_v_table()?;
            let hit = match table.complexity_of(q) {
                ComplexityValue::Known(c) if c <= limit => {
                    Some(match table.entry(q).and_then(|e| e.witness.clone()) {
                        Some(w) => w,
                        None => find_description(MachineId::V, &params, &BitStr::empty(), q, c)
                            .expect("table entry has a description"),
                    })
                }
                _ => None,
            };
            (hit, build_cost)
        } else {
            stream_min_v_description(q, limit, &params.budgets)
        };

        let Some(desc) = found else {
            return Ok((None, cost));
        };
        // A longer description is never more admissible, so the minimal one
        // decides.
        if exception && !case1_admits_len(desc.len(), q.len(), &params) {
            return Ok((None, cost));
        }
        let mut witness = BitStr::empty();
        for _ in 0..marker - 1 {
            witness.push(true);
        }
        witness.push(false);
        witness.append(&desc);
        Ok((Some(witness), cost))
    }
}

/// Minimal description of `q` under the even decompressor with empty
/// condition, streamed without a table.
///
/// Minimal descriptions have even length (an odd one executes its even
/// prefix, which is shorter and found first), so only even lengths are
/// scanned. Within one length, lexicographic order puts the `00` program
/// block first, then the lone pad description `01`, then the literal `1 q`;
/// only the program block costs machine runs — the other two forms match by
/// inspection. The first hit is therefore the (length, lex)-least
/// description, exactly what a full enumeration would return.
fn stream_min_v_description(
    q: &BitStr,
    limit: u32,
    budgets: &crate::machine::MachineBudgets,
) -> (Option<BitStr>, u64) {
    let mut execs = 0u64;
    for elen in (0..=limit as usize).step_by(2) {
        if elen >= 2 {
            let plen = elen - 2;
            for value in 0..(1u64 << plen) {
                let prog = BitStr::from_uint(plen, value);
                execs += 1;
                let (out, _) = crate::machine::run_program(
                    &prog,
                    &BitStr::empty(),
                    budgets.exec_budget,
                    budgets.max_output,
                );
                if out.output() == Some(q) {
                    // "00" + prog is the same value at width elen
                    return (Some(BitStr::from_uint(elen, value)), execs);
                }
            }
        }
        if elen == 2 && q.is_empty() {
            return (Some(BitStr::from_uint(2, 0b01)), execs);
        }
        if elen == q.len() + 1 {
            let mut lit = BitStr::empty();
            lit.push(true);
            lit.append(q);
            return (Some(lit), execs);
        }
    }
    (None, execs)
}

fn case1_admits_len(d_prime_len: usize, y_len: usize, params: &SchemeParams) -> bool {
    let gap = params.pad_gap as u64;
    if params.case1_literal_exception {
        y_len as u64 + gap > d_prime_len as u64
    } else {
        d_prime_len as u64 + gap < y_len as u64
    }
}

/// `u_decode` plus the machine executions it performed; descriptions whose
/// case pattern is statically stuck cost nothing.
fn u_decode_counted(d: &BitStr, params: &SchemeParams) -> (ExecOutcome, u64) {
    let out = u_decode(d, params);
    let sieve = default_sieve();
    let marker = params.case_marker as usize;
    let mut ones = 0;
    while ones < marker + 1 && ones < d.len() && d.get(ones) {
        ones += 1;
    }
    let execs = if ones == marker && d.len() > marker {
        0 // case 2 copies without running anything
    } else if ones == marker - 1 && d.len() > marker - 1 {
        1
    } else if !d.is_empty() && !d.get(0) {
        match parse_case3(&d.suffix(1), params, sieve) {
            Some(_) => 2, // tail decode plus at most one halting probe
            None => 0,
        }
    } else {
        0
    };
    (out, execs)
}

/// Agreement statistics between the two modes.
#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    pub per_length: Vec<LengthAgreement>,
    pub checked: u64,
    pub disagreements: u64,
    pub agreement: f64,
    pub exhaustive_len_max: u32,
    pub samples_per_length: u64,
    pub seed: u64,
    pub params_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LengthAgreement {
    pub len: u32,
    pub exhaustive: bool,
    pub checked: u64,
    pub disagreements: u64,
}

/// Lengths up to this are compared exhaustively; longer ones are sampled.
pub const EXHAUSTIVE_LEN_MAX: u32 = 15;

/// Compare the two modes over a range of lengths. In the regime where the
/// case-1 search is exhaustive the modes provably coincide, so the report
/// must come back with agreement 1.0.
pub fn cross_validate(
    params: &SchemeParams,
    lengths: std::ops::RangeInclusive<u32>,
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<CrossValidation> {
    let max_len = *lengths.end();
    if max_len as usize > params.enum_bound as usize + 1 {
        return Err(Error::QueryTooLong {
            len: max_len as usize,
            max: params.enum_bound as usize + 1,
        });
    }
    let mut oracle = RuOracle::new(params.clone())?.with_threads(threads);
    oracle.prebuild()?;
    let mut per_length = Vec::new();
    let mut checked = 0u64;
    let mut disagreements = 0u64;
    for len in lengths {
        let exhaustive = len <= EXHAUSTIVE_LEN_MAX;
        let mut row = LengthAgreement {
            len,
            exhaustive,
            checked: 0,
            disagreements: 0,
        };
        let compare = |oracle: &mut RuOracle, q: &BitStr, row: &mut LengthAgreement| {
            let e = oracle.in_r_u_exact(q)?;
            let s = oracle.in_r_u_structural(q)?;
            row.checked += 1;
            if e.random != s.random {
                row.disagreements += 1;
            }
            Ok::<(), Error>(())
        };
        if exhaustive {
            for value in 0..(1u64 << len) {
                let q = BitStr::from_uint(len as usize, value);
                compare(&mut oracle, &q, &mut row)?;
            }
        } else {
            let mut rng = SeededRng::substream(seed, len as u64);
            for _ in 0..samples {
                let q = rng.next_bits(len as usize);
                compare(&mut oracle, &q, &mut row)?;
            }
        }
        checked += row.checked;
        disagreements += row.disagreements;
        per_length.push(row);
    }
    Ok(CrossValidation {
        per_length,
        checked,
        disagreements,
        agreement: if checked == 0 {
            1.0
        } else {
            (checked - disagreements) as f64 / checked as f64
        },
        exhaustive_len_max: EXHAUSTIVE_LEN_MAX,
        samples_per_length: samples,
        seed,
        params_hash: format!("{:016x}", params.params_hash()),
    })
}
