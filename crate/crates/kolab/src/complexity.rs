//! Exact complexity evaluation by forward enumeration: run every description
//! up to a length bound, record the pointwise minimum per output.
//!
//! The even decompressor `V` wraps the base machine so that every complexity
//! value is even: an even-length description runs as-is, an odd-length one
//! runs with its last bit removed. A minimal odd-length description would
//! always lose to its own even prefix, so minima land on even lengths.
//!
//! Values above the enumeration bound are reported as `> bound`, never
//! guessed.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::bits::BitStr;
use crate::error::{Error, Result};
use crate::machine::{v_opt, ExecOutcome};
use crate::scheme::SchemeParams;

/// Hard cap on the enumeration bound (2^(bound+1) executions).
pub const BOUND_CAP: u32 = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MachineId {
    VOpt,
    V,
    U,
    W,
}

impl MachineId {
    pub fn as_str(self) -> &'static str {
        match self {
            MachineId::VOpt => "vopt",
            MachineId::V => "v",
            MachineId::U => "u",
            MachineId::W => "w",
        }
    }

    pub fn parse(s: &str) -> Result<MachineId> {
        match s {
            "vopt" => Ok(MachineId::VOpt),
            "v" => Ok(MachineId::V),
            "u" => Ok(MachineId::U),
            "w" => Ok(MachineId::W),
            _ => Err(Error::InvalidConfig(format!("unknown machine {s:?}"))),
        }
    }

    /// The unconditional machines reject a nonempty condition.
    pub fn takes_condition(self) -> bool {
        matches!(self, MachineId::VOpt | MachineId::V)
    }
}

impl fmt::Display for MachineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The even decompressor: even-length descriptions run the base machine
/// directly, odd-length ones drop their final bit first.
pub fn v_decode(d: &BitStr, cond: &BitStr, budgets: &crate::machine::MachineBudgets) -> ExecOutcome {
    if d.len().is_multiple_of(2) {
        v_opt(d, cond, budgets)
    } else {
        v_opt(&d.prefix(d.len() - 1), cond, budgets)
    }
}

/// Run one description on the selected machine.
pub fn machine_decode(
    machine: MachineId,
    d: &BitStr,
    cond: &BitStr,
    params: &SchemeParams,
) -> ExecOutcome {
    match machine {
        MachineId::VOpt => v_opt(d, cond, &params.budgets),
        MachineId::V => v_decode(d, cond, &params.budgets),
        MachineId::U => crate::scheme::u_decode(d, params),
        MachineId::W => crate::scheme::w_decode(d, params),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableEntry {
    pub len: u32,
    /// Minimal description, (length, lex)-least; absent on cache-loaded tables.
    pub witness: Option<BitStr>,
}

/// Either an exact minimum or "above the enumeration bound".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityValue {
    Known(u32),
    Above(u32),
}

impl ComplexityValue {
    pub fn known(self) -> Option<u32> {
        match self {
            ComplexityValue::Known(c) => Some(c),
            ComplexityValue::Above(_) => None,
        }
    }
}

impl fmt::Display for ComplexityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComplexityValue::Known(c) => write!(f, "{c}"),
            ComplexityValue::Above(b) => write!(f, "> {b}"),
        }
    }
}

/// Exact map output -> minimal description length, complete up to `bound`.
#[derive(Debug, Clone)]
pub struct ComplexityTable {
    pub machine: MachineId,
    pub cond: BitStr,
    pub bound: u32,
    pub params_hash: u64,
    entries: HashMap<BitStr, TableEntry>,
}

impl ComplexityTable {
    pub fn complexity_of(&self, x: &BitStr) -> ComplexityValue {
        match self.entries.get(x) {
            Some(e) => ComplexityValue::Known(e.len),
            None => ComplexityValue::Above(self.bound),
        }
    }

    pub fn entry(&self, x: &BitStr) -> Option<&TableEntry> {
        self.entries.get(x)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitStr, &TableEntry)> {
        self.entries.iter()
    }

    /// Total executions a fresh build of this table performs.
    pub fn executions(&self) -> u64 {
        (1u64 << (self.bound + 1)) - 1
    }
}

/// One enumeration chunk: all descriptions of length `len` whose big-endian
/// value lies in `[start, end)`.
struct Task {
    len: u32,
    start: u64,
    end: u64,
}

fn plan_tasks(bound: u32, threads: usize) -> Vec<Task> {
    let chunk = if threads <= 1 { u64::MAX } else { 1u64 << 16 };
    let mut tasks = Vec::new();
    for len in 0..=bound {
        let total = 1u64 << len;
        let mut start = 0;
        while start < total {
            let end = total.min(start.saturating_add(chunk));
            tasks.push(Task { len, start, end });
            start = end;
        }
    }
    tasks
}

fn run_task(
    machine: MachineId,
    params: &SchemeParams,
    cond: &BitStr,
    task: &Task,
) -> HashMap<BitStr, u64> {
    // Ascending value = lexicographic order at fixed length, so within a task
    // first insertion wins and the stored description is lex-least.
    let mut local: HashMap<BitStr, u64> = HashMap::new();
    for value in task.start..task.end {
        let d = BitStr::from_uint(task.len as usize, value);
        if let ExecOutcome::Halted(x) = machine_decode(machine, &d, cond, params) {
            local.entry(x).or_insert(value);
        }
    }
    local
}

/// Enumerate every description with `|d| <= bound` in length-then-lex order
/// and record pointwise minima. The partition across workers merges by
/// pointwise minimum, so the result is schedule-independent.
pub fn build_table(
    machine: MachineId,
    params: &SchemeParams,
    cond: &BitStr,
    bound: u32,
    threads: usize,
) -> Result<ComplexityTable> {
    if bound > BOUND_CAP {
        return Err(Error::BoundTooLarge {
            bound,
            cap: BOUND_CAP,
        });
    }
    if !machine.takes_condition() && !cond.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "machine {machine} is unconditional; cond must be empty"
        )));
    }
    params.validate()?;

    let tasks = plan_tasks(bound, threads);
    let results: Vec<Option<HashMap<BitStr, u64>>> = if threads <= 1 || tasks.len() <= 1 {
        tasks
            .iter()
            .map(|t| Some(run_task(machine, params, cond, t)))
            .collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<HashMap<BitStr, u64>>>> =
            (0..tasks.len()).map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..threads.min(tasks.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= tasks.len() {
                        break;
                    }
                    let map = run_task(machine, params, cond, &tasks[i]);
                    *slots[i].lock().unwrap() = Some(map);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().unwrap())
            .collect()
    };

    // Merge in task order: tasks ascend by (length, value range), so the
    // first entry seen per output is the (length, lex)-least description.
    let mut entries: HashMap<BitStr, TableEntry> = HashMap::new();
    for (task, result) in tasks.iter().zip(results) {
        let map = result.expect("worker completed");
        for (output, value) in map {
            entries.entry(output).or_insert_with(|| TableEntry {
                len: task.len,
                witness: Some(BitStr::from_uint(task.len as usize, value)),
            });
        }
    }

    Ok(ComplexityTable {
        machine,
        cond: cond.clone(),
        bound,
        params_hash: params.params_hash(),
        entries,
    })
}

/// First description of exactly `len` bits that halts with output `x`, in lex
/// order. Used to re-derive witnesses for cache-loaded tables.
pub fn find_description(
    machine: MachineId,
    params: &SchemeParams,
    cond: &BitStr,
    x: &BitStr,
    len: u32,
) -> Option<BitStr> {
    for value in 0..(1u64 << len) {
        let d = BitStr::from_uint(len as usize, value);
        if machine_decode(machine, &d, cond, params).output() == Some(x) {
            return Some(d);
        }
    }
    None
}

fn cond_field(cond: &BitStr) -> String {
    if cond.is_empty() {
        "-".into()
    } else {
        cond.to_hex()
    }
}

fn parse_cond_field(s: &str) -> Result<BitStr> {
    if s == "-" {
        Ok(BitStr::empty())
    } else {
        BitStr::from_hex(s)
    }
}

/// Render the cache file; deterministic bytes for a given table.
pub fn cache_to_string(table: &ComplexityTable) -> String {
    let mut lines: Vec<(&BitStr, u32)> = table.entries.iter().map(|(x, e)| (x, e.len)).collect();
    lines.sort_by(|a, b| a.0.cmp(b.0));
    let mut out = format!(
        "KCACHE v1 machine={} cond={} bound={} params={:016x}\n",
        table.machine,
        cond_field(&table.cond),
        table.bound,
        table.params_hash
    );
    for (x, c) in lines {
        out.push_str(&format!("{} {}\n", x.to_hex(), c));
    }
    out
}

pub fn save_cache(table: &ComplexityTable, path: &Path) -> Result<()> {
    std::fs::write(path, cache_to_string(table))?;
    Ok(())
}

/// Load a cache written by [`save_cache`]. The stored params hash must match
/// the current configuration; a budget change can flip outcomes and minima.
pub fn load_cache(path: &Path, expected_params_hash: u64) -> Result<ComplexityTable> {
    let text = std::fs::read_to_string(path)?;
    parse_cache(&text, expected_params_hash)
}

pub fn parse_cache(text: &str, expected_params_hash: u64) -> Result<ComplexityTable> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedCache("empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "KCACHE" || fields[1] != "v1" {
        return Err(Error::MalformedCache(format!("bad header {header:?}")));
    }
    let field = |idx: usize, key: &str| -> Result<String> {
        fields[idx]
            .strip_prefix(&format!("{key}="))
            .map(str::to_owned)
            .ok_or_else(|| Error::MalformedCache(format!("expected {key}= in {header:?}")))
    };
    let machine = MachineId::parse(&field(2, "machine")?)?;
    let cond = parse_cond_field(&field(3, "cond")?)?;
    let bound: u32 = field(4, "bound")?
        .parse()
        .map_err(|_| Error::MalformedCache("bad bound".into()))?;
    let params_hash = u64::from_str_radix(&field(5, "params")?, 16)
        .map_err(|_| Error::MalformedCache("bad params hash".into()))?;
    if params_hash != expected_params_hash {
        return Err(Error::StaleCache {
            expected: format!("{expected_params_hash:016x}"),
            found: format!("{params_hash:016x}"),
        });
    }
    let mut entries = HashMap::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let (hex, c) = line
            .split_once(' ')
            .ok_or_else(|| Error::MalformedCache(format!("bad line {line:?}")))?;
        let x = BitStr::from_hex(hex)?;
        let len: u32 = c
            .parse()
            .map_err(|_| Error::MalformedCache(format!("bad value {c:?}")))?;
        if len > bound {
            return Err(Error::MalformedCache(format!(
                "entry {len} above bound {bound}"
            )));
        }
        entries.insert(x, TableEntry { len, witness: None });
    }
    Ok(ComplexityTable {
        machine,
        cond,
        bound,
        params_hash,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::encode_nat;
    use crate::machine::MachineBudgets;

    fn bs(s: &str) -> BitStr {
        BitStr::parse_bin(s).unwrap()
    }

    fn vd(d: &str, cond: &BitStr) -> ExecOutcome {
        v_decode(&bs(d), cond, &MachineBudgets::default())
    }

    #[test]
    fn even_decoder_examples() {
        assert_eq!(vd("10", &BitStr::empty()), ExecOutcome::Halted(bs("0")));
        assert_eq!(vd("101", &BitStr::empty()), ExecOutcome::Halted(bs("0")));
        assert_eq!(vd("1", &BitStr::empty()), ExecOutcome::Stuck);
    }

    #[test]
    fn table_entries_small() {
        let params = SchemeParams::default();
        let t = build_table(MachineId::V, &params, &BitStr::empty(), 4, 1).unwrap();
        assert_eq!(t.complexity_of(&BitStr::empty()), ComplexityValue::Known(2));
        assert_eq!(t.complexity_of(&bs("0")), ComplexityValue::Known(2));
        assert_eq!(t.complexity_of(&bs("1")), ComplexityValue::Known(2));

        let vopt = build_table(MachineId::VOpt, &params, &BitStr::empty(), 3, 1).unwrap();
        assert_eq!(vopt.complexity_of(&bs("0")), ComplexityValue::Known(2));
        // the 1-bit description "1" reaches the empty string directly
        assert_eq!(vopt.complexity_of(&BitStr::empty()), ComplexityValue::Known(1));
    }

    #[test]
    fn long_strings_are_above_bound() {
        let params = SchemeParams::default();
        let t = build_table(MachineId::V, &params, &BitStr::empty(), 8, 1).unwrap();
        assert_eq!(
            t.complexity_of(&BitStr::zeros(30)),
            ComplexityValue::Above(8)
        );
    }

    #[test]
    fn minima_are_even_under_v() {
        let params = SchemeParams::default();
        for cond in [BitStr::empty(), encode_nat(4), encode_nat(9)] {
            let t = build_table(MachineId::V, &params, &cond, 10, 1).unwrap();
            for (x, e) in t.iter() {
                assert_eq!(e.len % 2, 0, "odd minimum for {x:?} under cond {cond:?}");
            }
        }
    }

    #[test]
    fn witnesses_decode_to_their_output() {
        let params = SchemeParams::default();
        let cond = encode_nat(6);
        let t = build_table(MachineId::V, &params, &cond, 9, 1).unwrap();
        for (x, e) in t.iter() {
            let w = e.witness.as_ref().unwrap();
            assert_eq!(w.len() as u32, e.len);
            assert_eq!(
                machine_decode(MachineId::V, w, &cond, &params).output(),
                Some(x)
            );
        }
    }

    #[test]
    fn parallel_build_matches_sequential() {
        let params = SchemeParams::default();
        let cond = encode_nat(5);
        let seq = build_table(MachineId::V, &params, &cond, 12, 1).unwrap();
        let par = build_table(MachineId::V, &params, &cond, 12, 4).unwrap();
        assert_eq!(seq.len(), par.len());
        for (x, e) in seq.iter() {
            assert_eq!(par.entry(x), Some(e), "mismatch at {x:?}");
        }
    }

    #[test]
    fn wrapper_overhead_and_its_limits() {
        let params = SchemeParams::default();
        for cond in [BitStr::empty(), encode_nat(8)] {
            let vopt = build_table(MachineId::VOpt, &params, &cond, 12, 1).unwrap();
            let v = build_table(MachineId::V, &params, &cond, 12, 1).unwrap();
            for (x, e) in v.iter() {
                // every V-description executes a base description of at most
                // its own length
                let base = vopt.complexity_of(x).known().unwrap();
                assert!(base <= e.len, "{x:?}");
            }
            for (x, e) in vopt.iter() {
                // odd-length outputs always have an even-length description
                // within one bit of the base minimum
                if x.len() % 2 == 1 && e.len < 11 {
                    let c = v.complexity_of(x).known().unwrap();
                    assert!(c <= e.len + 1, "{x:?}: {c} vs {}", e.len);
                }
            }
        }
        // with a matching condition, pad mode gives every string of the
        // stated length a description within two bits of its length
        let cond = encode_nat(8);
        let v = build_table(MachineId::V, &params, &cond, 12, 1).unwrap();
        for value in 0..(1u64 << 8) {
            let x = BitStr::from_uint(8, value);
            let c = v.complexity_of(&x).known().unwrap();
            assert!(c <= 8 + 2, "{x:?}: {c}");
        }
        // but even-length outputs under a mismatched condition have no such
        // ceiling: the junk-intolerant literal mode cannot be padded to even
        // length, so "01" falls through to a 12-bit program description
        let vopt = build_table(MachineId::VOpt, &params, &BitStr::empty(), 12, 1).unwrap();
        let v = build_table(MachineId::V, &params, &BitStr::empty(), 12, 1).unwrap();
        let x = bs("01");
        assert_eq!(vopt.complexity_of(&x), ComplexityValue::Known(3));
        assert_eq!(v.complexity_of(&x), ComplexityValue::Known(12));
    }

    #[test]
    fn bound_monotonicity() {
        let params = SchemeParams::default();
        let small = build_table(MachineId::V, &params, &BitStr::empty(), 8, 1).unwrap();
        let big = build_table(MachineId::V, &params, &BitStr::empty(), 12, 1).unwrap();
        for (x, e) in small.iter() {
            let c = big.complexity_of(x).known().unwrap();
            assert!(c <= e.len);
            assert_eq!(c, e.len, "larger bound changed the minimum for {x:?}");
        }
    }

    #[test]
    fn cache_round_trip_and_staleness() {
        let params = SchemeParams::default();
        let t = build_table(MachineId::V, &params, &encode_nat(6), 8, 1).unwrap();
        let text = cache_to_string(&t);
        let text2 = cache_to_string(&t);
        assert_eq!(text, text2, "saves must be byte-identical");
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            format!("KCACHE v1 machine=v cond=6:3 bound=8 params={:016x}", params.params_hash())
        );
        // entries sorted by (length, value), one record per line; under
        // condition 6 the empty output needs a 6-bit program description
        // (pad mode now emits 0^6 instead of the empty string)
        let second = text.lines().nth(1).unwrap();
        assert_eq!(second, ":0 6");

        let back = parse_cache(&text, params.params_hash()).unwrap();
        assert_eq!(back.machine, t.machine);
        assert_eq!(back.cond, t.cond);
        assert_eq!(back.bound, t.bound);
        assert_eq!(back.len(), t.len());
        for (x, e) in t.iter() {
            assert_eq!(back.complexity_of(x), ComplexityValue::Known(e.len));
        }

        let mut other = SchemeParams::default();
        other.budgets.exec_budget = 128;
        assert!(matches!(
            parse_cache(&text, other.params_hash()),
            Err(Error::StaleCache { .. })
        ));
    }

    #[test]
    fn unconditional_machines_reject_condition() {
        let params = SchemeParams::default();
        assert!(build_table(MachineId::U, &params, &encode_nat(3), 6, 1).is_err());
        assert!(build_table(MachineId::W, &params, &encode_nat(3), 6, 1).is_err());
    }

    #[test]
    fn bound_cap_enforced() {
        let params = SchemeParams::default();
        assert!(matches!(
            build_table(MachineId::V, &params, &BitStr::empty(), 27, 1),
            Err(Error::BoundTooLarge { .. })
        ));
    }
}
