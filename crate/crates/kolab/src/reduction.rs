//! The probabilistic decision procedure: decide step-bounded halting with
//! nothing but membership queries against the random-strings oracle.
//!
//! On input `x` of length `l`, let `p_l` be the `l`-th prime, `n = p_l - 1`,
//! and `y = x 0^(n-l)`. For each admissible `k` the procedure draws `m`
//! random `k x n` matrices and counts, per matrix, the event
//!
//! > `A . Ay` is random and `A . Ay . 0^pad` is not.
//!
//! If for some `k` at least a threshold fraction of matrices fire, the verdict
//! is HALTS, otherwise LOOPS. The decision path touches only oracle verdicts;
//! the simulator ground truth is recorded next to it for scoring and never
//! consulted.
//!
//! When `x` halts, the event fires at `k = C_V(y|n) + slack`: `y` itself is a
//! low-complexity preimage with a halting prefix, so the padded block always
//! has a short matrix-case description. When `x` loops, a fire at any `k`
//! needs some other low-complexity halting-prefix preimage to collide with
//! `y` under `A`, and pairwise independence prices that at `2^(1-slack)` per
//! matrix. The per-`k` misclassification probability of the majority vote is
//! then bounded by `exp(-2m(threshold - rate)^2)`, reported in every run.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::bits::BitStr;
use crate::complexity::{build_table, MachineId};
use crate::error::{Error, Result};
use crate::gf2::{sample_matrix, Gf2Matrix, SeededRng};
use crate::machine::in_halting;
use crate::oracle::{OracleMode, RuOracle};
use crate::primes::default_sieve;
use crate::scheme::SchemeParams;

/// Which `k` values the sweep visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KFilter {
    /// Every `k` from 1 to `n-1`.
    All,
    /// Odd `k` only; even `k` can never fire (their query lengths are never
    /// specific), which the sweep asserts rather than assumes.
    OddOnly,
}

impl KFilter {
    pub fn parse(s: &str) -> Result<KFilter> {
        match s {
            "all" => Ok(KFilter::All),
            "odd" | "odd_only" => Ok(KFilter::OddOnly),
            _ => Err(Error::InvalidConfig(format!("unknown k filter {s:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KFilter::All => "all",
            KFilter::OddOnly => "odd_only",
        }
    }

    fn admissible(self, n: u64) -> Vec<u64> {
        (1..n)
            .filter(|k| match self {
                KFilter::All => true,
                KFilter::OddOnly => k % 2 == 1,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ReductionConfig {
    /// Matrices per `k`. The asymptotic analysis wants a large polynomial in
    /// `n`; desk scale runs a fixed count and reports the achieved bound.
    pub matrices_per_k: u32,
    pub seed: u64,
    /// Fire threshold as an exact fraction; default one half.
    pub threshold_num: u32,
    pub threshold_den: u32,
    pub k_filter: KFilter,
    pub oracle_mode: OracleMode,
    pub params: SchemeParams,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig {
            matrices_per_k: 200,
            seed: 0,
            threshold_num: 1,
            threshold_den: 2,
            k_filter: KFilter::All,
            oracle_mode: OracleMode::Structural,
            params: SchemeParams::default(),
        }
    }
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.matrices_per_k == 0 {
            return Err(Error::InvalidConfig("matrices_per_k must be positive".into()));
        }
        if self.threshold_den == 0
            || self.threshold_num == 0
            || self.threshold_num > self.threshold_den
        {
            return Err(Error::InvalidConfig(
                "threshold must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn threshold(&self) -> f64 {
        self.threshold_num as f64 / self.threshold_den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "HALTS")]
    Halts,
    #[serde(rename = "LOOPS")]
    Loops,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Halts => "HALTS",
            Verdict::Loops => "LOOPS",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerK {
    pub k: u64,
    pub fired: u32,
    pub matrices: u32,
    pub fired_fraction: f64,
}

/// The primary observable of the whole construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub x: BitStr,
    pub l: u64,
    pub p_l: u64,
    pub n: u64,
    pub verdict: Verdict,
    /// Smallest `k` whose fired fraction reached the threshold.
    pub firing_k: Option<u64>,
    pub per_k: Vec<PerK>,
    /// Simulator answer, recorded for scoring only.
    pub ground_truth: bool,
    pub seed: u64,
    pub params_hash: String,
    pub oracle_mode: OracleMode,
    pub k_filter: KFilter,
    pub threshold: f64,
    pub oracle_queries: u64,
    pub machine_executions: u64,
    /// `exp(-2m(threshold - rate)^2)` at the per-matrix spurious rate
    /// `2^(1-slack)`: the per-`k` probability that a looping input fires a
    /// majority anyway.
    pub hoeffding_bound_negative_side: f64,
    pub wall_time: f64,
}

/// Misclassification bound for the majority vote: `exp(-2m(threshold - p)^2)`.
pub fn hoeffding_bound(m: u32, p: f64, threshold: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) || threshold > 1.0 || p >= threshold {
        return Err(Error::Precondition(format!(
            "need 0 <= p < threshold <= 1, got p = {p}, threshold = {threshold}"
        )));
    }
    Ok((-2.0 * m as f64 * (threshold - p) * (threshold - p)).exp())
}

/// Per-matrix spurious rate implied by the slack: `2^(1-slack)`.
pub fn spurious_bound(params: &SchemeParams) -> f64 {
    (2.0f64).powi(1 - params.slack as i32)
}

/// One membership pair for matrix `A`: `A.Ay` random and `A.Ay.0^pad` not.
pub fn event_probe(
    y: &BitStr,
    k: u64,
    matrix: &Gf2Matrix,
    oracle: &mut RuOracle,
    mode: OracleMode,
) -> Result<bool> {
    debug_assert_eq!(matrix.rows() as u64, k);
    let image = matrix.matvec(y)?;
    let mut q = matrix.serialize().clone();
    q.append(&image);
    let block_random = oracle.query(&q, mode)?.random;
    q.append_zeros(oracle.params().pad as usize);
    let padded_random = oracle.query(&q, mode)?.random;
    Ok(block_random && !padded_random)
}

/// Decide halting for `x` with oracle queries only. Fully deterministic given
/// `(x, cfg)`; per-`(k, i)` matrix substreams make the order of work
/// irrelevant.
pub fn decide_halting(x: &BitStr, cfg: &ReductionConfig) -> Result<ReductionReport> {
    let mut oracle = RuOracle::new(cfg.params.clone())?;
    decide_halting_with_oracle(x, cfg, &mut oracle)
}

/// As [`decide_halting`], reusing a caller-provided oracle (shared tables,
/// memo continuity across a sweep).
pub fn decide_halting_with_oracle(
    x: &BitStr,
    cfg: &ReductionConfig,
    oracle: &mut RuOracle,
) -> Result<ReductionReport> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(Error::Precondition("input program must be nonempty".into()));
    }
    let start = Instant::now();
    let sieve = default_sieve();
    let l = x.len() as u64;
    let p_l = sieve.nth_prime(l)?;
    let n = p_l - 1;
    debug_assert!(n >= l, "p_l > l for every l >= 1");
    let mut y = x.clone();
    y.append_zeros((n - l) as usize);

    let queries_before = oracle.queries();
    let execs_before = oracle.executions();
    let ks = cfg.k_filter.admissible(n);
    let mut per_k = Vec::with_capacity(ks.len());
    let mut firing_k = None;
    for &k in &ks {
        let mut fired = 0u32;
        for i in 0..cfg.matrices_per_k {
            let mut rng = SeededRng::substream(cfg.seed, (k << 32) | i as u64);
            let matrix = sample_matrix(k as usize, n as usize, &mut rng)?;
            if event_probe(&y, k, &matrix, oracle, cfg.oracle_mode)? {
                fired += 1;
            }
        }
        let reaches = fired as u64 * cfg.threshold_den as u64
            >= cfg.threshold_num as u64 * cfg.matrices_per_k as u64;
        if reaches && firing_k.is_none() {
            firing_k = Some(k);
        }
        per_k.push(PerK {
            k,
            fired,
            matrices: cfg.matrices_per_k,
            fired_fraction: fired as f64 / cfg.matrices_per_k as f64,
        });
    }
    let oracle_queries = oracle.queries() - queries_before;
    debug_assert_eq!(oracle_queries, 2 * cfg.matrices_per_k as u64 * ks.len() as u64);

    // Scoring only; the verdict above never saw this.
    let ground_truth = in_halting(x, &cfg.params.budgets);

    Ok(ReductionReport {
        x: x.clone(),
        l,
        p_l,
        n,
        verdict: if firing_k.is_some() {
            Verdict::Halts
        } else {
            Verdict::Loops
        },
        firing_k,
        per_k,
        ground_truth,
        seed: cfg.seed,
        params_hash: format!("{:016x}", cfg.params.params_hash()),
        oracle_mode: cfg.oracle_mode,
        k_filter: cfg.k_filter,
        threshold: cfg.threshold(),
        oracle_queries,
        machine_executions: oracle.executions() - execs_before,
        hoeffding_bound_negative_side: hoeffding_bound(
            cfg.matrices_per_k,
            spurious_bound(&cfg.params),
            cfg.threshold(),
        )
        .unwrap_or(1.0),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Empirical per-matrix event frequency for a looping input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpuriousReport {
    pub l: u64,
    pub k: u64,
    pub n: u64,
    /// First looping program of length `l` in lex order.
    pub x: BitStr,
    pub trials: u32,
    pub fires: u32,
    pub frequency: f64,
    /// Normal-approximation 95% upper confidence limit.
    pub ci95_upper: f64,
    /// The `2^(1-slack)` per-matrix bound the frequency is checked against.
    pub per_matrix_bound: f64,
    pub seed: u64,
    pub oracle_mode: OracleMode,
    pub params_hash: String,
    pub wall_time: f64,
}

/// First program of length `l` (lex order) that does not halt in budget.
pub fn first_looping_program(l: u64, params: &SchemeParams) -> Option<BitStr> {
    (0..(1u64 << l))
        .map(|v| BitStr::from_uint(l as usize, v))
        .find(|x| !in_halting(x, &params.budgets))
}

/// Estimate the spurious event rate at one `k` for a looping input.
pub fn spurious_rate_experiment(
    l: u64,
    k: u64,
    trials: u32,
    seed: u64,
    params: &SchemeParams,
    mode: OracleMode,
) -> Result<SpuriousReport> {
    params.validate()?;
    if trials == 0 {
        return Err(Error::Precondition("trials must be positive".into()));
    }
    if l == 0 || l > 24 {
        return Err(Error::Precondition(format!("l = {l} out of range")));
    }
    let start = Instant::now();
    let sieve = default_sieve();
    let p_l = sieve.nth_prime(l)?;
    let n = p_l - 1;
    if k == 0 || k >= n {
        return Err(Error::Precondition(format!(
            "k = {k} not admissible at n = {n}"
        )));
    }
    let x = first_looping_program(l, params).ok_or_else(|| {
        Error::Precondition(format!("every program of length {l} halts"))
    })?;
    let mut y = x.clone();
    y.append_zeros((n - l) as usize);

    let mut oracle = RuOracle::new(params.clone())?;
    let mut fires = 0u32;
    for t in 0..trials {
        let mut rng = SeededRng::substream(seed, t as u64);
        let matrix = sample_matrix(k as usize, n as usize, &mut rng)?;
        if event_probe(&y, k, &matrix, &mut oracle, mode)? {
            fires += 1;
        }
    }
    let frequency = fires as f64 / trials as f64;
    let ci95_upper =
        frequency + 1.96 * (frequency * (1.0 - frequency) / trials as f64).sqrt();
    Ok(SpuriousReport {
        l,
        k,
        n,
        x,
        trials,
        fires,
        frequency,
        ci95_upper,
        per_matrix_bound: spurious_bound(params),
        seed,
        oracle_mode: mode,
        params_hash: format!("{:016x}", params.params_hash()),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Verdict-vs-simulator sweep over every program of length `l`.
#[derive(Debug, Clone, Serialize)]
pub struct EndToEndReport {
    pub l: u64,
    pub p_l: u64,
    pub n: u64,
    pub programs: u64,
    pub halting_programs: u64,
    pub correct: u64,
    pub accuracy: f64,
    pub seed: u64,
    pub matrices_per_k: u32,
    pub oracle_mode: OracleMode,
    pub k_filter: KFilter,
    pub threshold: f64,
    pub hoeffding_bound_negative_side: f64,
    pub params_hash: String,
    pub per_program: Vec<ProgramOutcome>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProgramOutcome {
    pub x: BitStr,
    pub verdict: Verdict,
    pub ground_truth: bool,
    pub firing_k: Option<u64>,
    pub firing_fraction: Option<f64>,
}

/// Run [`decide_halting`] on all `2^l` programs and score against the
/// simulator. Work is split across `threads`; per-program results are
/// independent and reassembled in program order.
pub fn end_to_end(l: u64, cfg: &ReductionConfig, threads: usize) -> Result<EndToEndReport> {
    cfg.validate()?;
    if l == 0 || l > 16 {
        return Err(Error::Precondition(format!("l = {l} out of range")));
    }
    let start = Instant::now();
    let sieve = default_sieve();
    let p_l = sieve.nth_prime(l)?;
    let n = p_l - 1;
    let total = 1u64 << l;

    // One pair of forward tables serves every worker.
    let v_table = Arc::new(build_table(
        MachineId::V,
        &cfg.params,
        &BitStr::empty(),
        cfg.params.enum_bound,
        threads,
    )?);

    let run_one = |value: u64| -> Result<ProgramOutcome> {
        let x = BitStr::from_uint(l as usize, value);
        let mut oracle = RuOracle::new(cfg.params.clone())?
            .with_shared_tables(Some(Arc::clone(&v_table)), None)?;
        let report = decide_halting_with_oracle(&x, cfg, &mut oracle)?;
        let firing_fraction = report
            .firing_k
            .and_then(|k| report.per_k.iter().find(|row| row.k == k))
            .map(|row| row.fired_fraction);
        Ok(ProgramOutcome {
            x,
            verdict: report.verdict,
            ground_truth: report.ground_truth,
            firing_k: report.firing_k,
            firing_fraction,
        })
    };

    let outcomes: Vec<ProgramOutcome> = if threads <= 1 {
        (0..total).map(run_one).collect::<Result<_>>()?
    } else {
        let next = std::sync::atomic::AtomicU64::new(0);
        let slots: Vec<std::sync::Mutex<Option<Result<ProgramOutcome>>>> =
            (0..total).map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..threads.min(total as usize) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= total {
                        break;
                    }
                    *slots[i as usize].lock().unwrap() = Some(run_one(i));
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().unwrap().expect("worker completed"))
            .collect::<Result<_>>()?
    };

    let halting_programs = outcomes.iter().filter(|o| o.ground_truth).count() as u64;
    let correct = outcomes
        .iter()
        .filter(|o| (o.verdict == Verdict::Halts) == o.ground_truth)
        .count() as u64;
    Ok(EndToEndReport {
        l,
        p_l,
        n,
        programs: total,
        halting_programs,
        correct,
        accuracy: correct as f64 / total as f64,
        seed: cfg.seed,
        matrices_per_k: cfg.matrices_per_k,
        oracle_mode: cfg.oracle_mode,
        k_filter: cfg.k_filter,
        threshold: cfg.threshold(),
        hoeffding_bound_negative_side: hoeffding_bound(
            cfg.matrices_per_k,
            spurious_bound(&cfg.params),
            cfg.threshold(),
        )
        .unwrap_or(1.0),
        params_hash: format!("{:016x}", cfg.params.params_hash()),
        per_program: outcomes,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Exact census of matrix collisions, packaged for the experiment CLI.
#[derive(Debug, Clone, Serialize)]
pub struct CollisionReport {
    pub rows: Vec<CollisionRow>,
    pub pairs_checked: u64,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CollisionRow {
    pub n: u64,
    pub k: u64,
    pub collisions: u64,
    pub matrices: u64,
    pub expected: u64,
}

/// Sweep every dimension pair within the exhaustive cap and every pair of
/// distinct vectors; each row must match `2^(nk-k)` exactly.
pub fn collision_experiment(max_n: u64, max_k: u64) -> Result<CollisionReport> {
    let mut rows = Vec::new();
    let mut pairs = 0u64;
    let mut exact = true;
    for n in 1..=max_n {
        for k in 1..=max_k {
            if n * k > crate::gf2::CENSUS_CAP {
                continue;
            }
            let mut worst: Option<CollisionRow> = None;
            for v1 in 0..(1u64 << n) {
                for v2 in 0..v1 {
                    let b1 = BitStr::from_uint(n as usize, v1);
                    let b2 = BitStr::from_uint(n as usize, v2);
                    let (count, total) =
                        crate::gf2::collision_census(n as usize, k as usize, &b1, &b2)?;
                    pairs += 1;
                    let expected = 1u64 << (n * k - k);
                    if count != expected {
                        exact = false;
                    }
                    if worst.is_none() {
                        worst = Some(CollisionRow {
                            n,
                            k,
                            collisions: count,
                            matrices: total,
                            expected,
                        });
                    }
                }
            }
            if let Some(row) = worst {
                rows.push(row);
            }
        }
    }
    Ok(CollisionReport {
        rows,
        pairs_checked: pairs,
        exact,
    })
}
