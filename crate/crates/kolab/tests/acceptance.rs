//! Acceptance suite: one test per headline property of the construction,
//! each printing a single PASS line (run with `--nocapture` to see them).
//!
//! 1. even_complexity_parity        — every complexity value of V is even
//! 2. collision_census_exact        — matrix collisions count to 2^(nk-k) exactly
//! 3. universality_overhead         — U dominates with additive marker overhead
//! 4. compressibility_drop_witness  — padded blocks that compress always carry
//!    a low-complexity halting-prefix preimage
//! 5. oracle_mode_agreement         — structural = exact wherever exact runs
//! 6. spurious_event_rate           — looping inputs fire under 2^(1-slack)
//! 7. end_to_end_decision           — all 128 seven-bit programs decided right
//! 8. parity_solver                 — warm-up parity equals the simulator
//! 9. report_determinism            — same seed, byte-identical reports

use kolab::bits::{encode_nat, BitStr};
use kolab::complexity::{build_table, ComplexityValue, MachineId};
use kolab::gf2::collision_census;
use kolab::machine::in_halting;
use kolab::oracle::{cross_validate, OracleMode};
use kolab::reduction::{
    end_to_end, spurious_rate_experiment, KFilter, ReductionConfig, Verdict,
};
use kolab::scheme::{exception_form, parity_solve_halting, SchemeParams};

const THREADS: usize = 4;

fn default_params() -> SchemeParams {
    SchemeParams::default()
}

/// Check 1: Exhaustive parity sweep: for the empty condition and every numeric
/// condition 1..=20, every string with complexity within bound 18 has an even
/// value. Zero tolerance.
#[test]
fn even_complexity_parity() {
    let params = default_params();
    let mut conds = vec![BitStr::empty()];
    conds.extend((1..=20).map(encode_nat));
    let mut checked = 0u64;
    for cond in &conds {
        let table = build_table(MachineId::V, &params, cond, 18, THREADS).unwrap();
        for (x, e) in table.iter() {
            assert_eq!(e.len % 2, 0, "odd value {} for {x:?} under {cond:?}", e.len);
            checked += 1;
        }
    }
    println!(
        "PASS even_complexity_parity: {} values across {} conditions, all even",
        checked,
        conds.len()
    );
}

/// Check 2: Exact collision census: for all n <= 4, k <= 3 and every pair of
/// distinct vectors, exactly 2^(nk-k) of the 2^(nk) matrices collide them.
#[test]
fn collision_census_exact() {
    let mut pairs = 0u64;
    for n in 1..=4usize {
        for k in 1..=3usize {
            for v1 in 0..(1u64 << n) {
                for v2 in 0..v1 {
                    let b1 = BitStr::from_uint(n, v1);
                    let b2 = BitStr::from_uint(n, v2);
                    let (count, total) = collision_census(n, k, &b1, &b2).unwrap();
                    assert_eq!(count, 1u64 << (n * k - k), "n={n} k={k} v1={v1} v2={v2}");
                    assert_eq!(total, 1u64 << (n * k));
                    pairs += 1;
                }
            }
        }
    }
    println!("PASS collision_census_exact: {pairs} (n,k,pair) cases, zero deviations");
}

/// Check 3: Universality with additive overhead D = 4: every string up to 13 bits
/// has C_U(x) <= |x| + D + 1 through the verbatim case, and C_U(x) <=
/// C_V(x) + D off the exception set (on it too, once C_V(x) < |x| - G).
#[test]
fn universality_overhead() {
    let params = default_params();
    let marker = params.case_marker;
    let sieve = kolab::primes::default_sieve();
    let v = build_table(MachineId::V, &params, &BitStr::empty(), 18, THREADS).unwrap();
    let u = build_table(MachineId::U, &params, &BitStr::empty(), 18, THREADS).unwrap();
    let mut checked = 0u64;
    let mut domination_checked = 0u64;
    for len in 0..=13usize {
        for value in 0..(1u64 << len) {
            let x = BitStr::from_uint(len, value);
            let cu = match u.complexity_of(&x) {
                ComplexityValue::Known(c) => c,
                ComplexityValue::Above(b) => panic!("C_U({x:?}) > {b}"),
            };
            assert!(
                cu <= len as u32 + marker + 1,
                "C_U({x:?}) = {cu} > |x| + {}",
                marker + 1
            );
            checked += 1;
            if let ComplexityValue::Known(cv) = v.complexity_of(&x) {
                let applies = if exception_form(&x, &params, sieve) {
                    (cv as u64) + (params.pad_gap as u64) < len as u64
                } else {
                    true
                };
                if applies {
                    assert!(
                        cu <= cv + marker,
                        "C_U({x:?}) = {cu} > C_V + D = {}",
                        cv + marker
                    );
                    domination_checked += 1;
                }
            }
        }
    }
    println!(
        "PASS universality_overhead: {checked} strings <= 13 bits, \
         {domination_checked} domination checks, zero violations"
    );
}

/// Check 4: Exhaustive witness sweep at small parameters (pad = 3, slack = 3,
/// p = 5, k = 3): every 15-bit block that is incompressible yet compresses
/// once padded must decompose as A.c with a length-4 preimage y of
/// conditional complexity <= k - slack whose 3-bit prefix halts. At these
/// parameters the tail width is zero, so the qualifying set is provably
/// empty and the sweep must come back vacuous; the slack = 1 companion run
/// exercises the same implication non-vacuously on 4096 qualifying blocks.
#[test]
fn compressibility_drop_witness() {
    let counts3 = witness_sweep(3);
    assert_eq!(
        counts3, (0, 0),
        "slack 3 leaves no room for a tail, so nothing can qualify"
    );

    let (qualifying, witnessed) = witness_sweep(1);
    assert_eq!(qualifying, 4096, "every block ending in A*0 qualifies");
    assert_eq!(witnessed, qualifying, "zero counterexamples");
    println!(
        "PASS compressibility_drop_witness: slack=3 sweep vacuous (0 of 32768 qualify), \
         slack=1 sweep {witnessed}/{qualifying} witnessed"
    );
}

/// Sweep all 2^15 blocks b = A.c (A a 3x4 matrix, c 3 bits) under
/// (pad = 3, slack), returning (qualifying, witnessed).
fn witness_sweep(slack: u32) -> (u64, u64) {
    let params = SchemeParams {
        pad: 3,
        slack,
        ..Default::default()
    };
    let u = build_table(MachineId::U, &params, &BitStr::empty(), 17, THREADS).unwrap();
    let cond = encode_nat(4);
    let v4 = build_table(MachineId::V, &params, &cond, 8, 1).unwrap();
    let k: u32 = 3;
    let width = k.saturating_sub(slack);
    let mut qualifying = 0u64;
    let mut witnessed = 0u64;
    for value in 0..(1u64 << 15) {
        let b = BitStr::from_uint(15, value);
        let incompressible = match u.complexity_of(&b) {
            ComplexityValue::Known(c) => c >= 15,
            ComplexityValue::Above(_) => true,
        };
        if !incompressible {
            continue;
        }
        let mut padded = b.clone();
        padded.append_zeros(3);
        let drops = matches!(u.complexity_of(&padded), ComplexityValue::Known(c) if c < 18);
        if !drops {
            continue;
        }
        qualifying += 1;
        // b = A.c with A 3x4 row-major, c the last 3 bits
        let matrix = kolab::gf2::Gf2Matrix::deserialize(&b.prefix(12), 3, 4).unwrap();
        let c = b.suffix(12);
        let found = (0..(1u64 << 4)).any(|yv| {
            let y = BitStr::from_uint(4, yv);
            matches!(v4.complexity_of(&y), ComplexityValue::Known(cy) if cy <= width)
                && matrix.matvec(&y).unwrap() == c
                && in_halting(&y.prefix(3), &params.budgets)
        });
        if found {
            witnessed += 1;
        } else {
            panic!("qualifying block {b:?} has no witness preimage");
        }
    }
    (qualifying, witnessed)
}

/// Check 5: Oracle mode agreement: exhaustive to 15 bits, sampled at 16..18;
/// the case-1 search is exhaustive in this whole regime, so agreement must
/// be exactly 100%.
#[test]
fn oracle_mode_agreement() {
    let params = default_params();
    let report = cross_validate(&params, 0..=18, 300, 11, THREADS).unwrap();
    assert_eq!(report.disagreements, 0, "{report:?}");
    assert_eq!(report.agreement, 1.0);
    assert!(report.checked > (1 << 16));
    println!(
        "PASS oracle_mode_agreement: {} queries ({} exhaustive lengths), 100% agreement",
        report.checked,
        report.per_length.iter().filter(|r| r.exhaustive).count()
    );
}

/// Check 6: Spurious rate: for a looping 7-bit input at k = 15, the per-matrix
/// event frequency over 2000 seeded matrices stays within the 2^(1-slack)
/// budget (upper 95% CI <= 1/16 + 0.02).
#[test]
fn spurious_event_rate() {
    let params = default_params();
    let report =
        spurious_rate_experiment(7, 15, 2000, 9, &params, OracleMode::Structural).unwrap();
    assert!(!in_halting(&report.x, &params.budgets));
    let cap = report.per_matrix_bound + 0.02;
    assert!(
        report.ci95_upper <= cap,
        "upper CI {} above {cap}",
        report.ci95_upper
    );
    println!(
        "PASS spurious_event_rate: {}/{} fires, frequency {:.4}, upper CI {:.4} <= {:.4}",
        report.fires, report.trials, report.frequency, report.ci95_upper, cap
    );
}

fn headline_config() -> ReductionConfig {
    ReductionConfig {
        matrices_per_k: 200,
        seed: 1,
        k_filter: KFilter::All,
        oracle_mode: OracleMode::Structural,
        ..Default::default()
    }
}

/// Check 7: The headline run: every one of the 128 seven-bit programs is decided
/// correctly at the fixed seed, every halting program fires at an odd k with
/// fraction >= 0.85, and the reported misclassification bound justifies
/// expecting exactly that.
#[test]
fn end_to_end_decision() {
    let report = end_to_end(7, &headline_config(), THREADS).unwrap();
    assert_eq!(report.programs, 128);
    assert_eq!(report.correct, 128, "accuracy {}", report.accuracy);
    assert_eq!(report.halting_programs, 28);
    assert!(report.hoeffding_bound_negative_side < 1e-30);
    for outcome in &report.per_program {
        if outcome.ground_truth {
            assert_eq!(outcome.verdict, Verdict::Halts);
            let k = outcome.firing_k.expect("halting programs fire");
            assert_eq!(k % 2, 1, "firing k even for {:?}", outcome.x);
            let fraction = outcome.firing_fraction.unwrap();
            assert!(
                fraction >= 0.9 - 0.05,
                "{:?} fired at only {fraction}",
                outcome.x
            );
        } else {
            assert_eq!(outcome.verdict, Verdict::Loops);
        }
    }
    println!(
        "PASS end_to_end_decision: 128/128 correct ({} halting), \
         misclassification bound {:.2e}",
        report.halting_programs, report.hoeffding_bound_negative_side
    );
}

/// Check 8: Warm-up parity solver: for every string up to 10 bits whose warm-up
/// complexity is within bound, odd parity must coincide with the simulator.
#[test]
fn parity_solver() {
    let params = default_params();
    let w = build_table(MachineId::W, &params, &BitStr::empty(), 18, THREADS).unwrap();
    let mut solved = 0u64;
    let mut skipped = 0u64;
    for len in 0..=10usize {
        for value in 0..(1u64 << len) {
            let x = BitStr::from_uint(len, value);
            match parity_solve_halting(&x, &w) {
                Ok(verdict) => {
                    assert_eq!(
                        verdict,
                        in_halting(&x, &params.budgets),
                        "parity wrong for {x:?}"
                    );
                    solved += 1;
                }
                Err(_) => skipped += 1,
            }
        }
    }
    // all 682 odd-length strings are solvable (literal descriptions keep
    // them within bound), plus the compressible even-length ones
    assert!(solved > 682, "solved = {solved}");
    println!(
        "PASS parity_solver: {solved} strings solved by parity alone, \
         {skipped} above bound, zero mismatches"
    );
}

/// Check 9: Determinism: repeating the statistical runs with the same seed yields
/// byte-identical JSON (wall_time normalized away).
#[test]
fn report_determinism() {
    let params = default_params();
    let spur = |_| {
        let r = spurious_rate_experiment(7, 15, 2000, 9, &params, OracleMode::Structural).unwrap();
        normalized(&serde_json::to_value(&r).unwrap())
    };
    assert_eq!(spur(0), spur(1), "spurious reports differ across runs");

    let cfg = headline_config();
    let run = |threads| {
        let r = end_to_end(7, &cfg, threads).unwrap();
        normalized(&serde_json::to_value(&r).unwrap())
    };
    let a = run(THREADS);
    let b = run(1);
    assert_eq!(a, b, "end-to-end reports differ across runs/thread counts");
    println!("PASS report_determinism: spurious and end-to-end reports byte-identical");
}

fn normalized(v: &serde_json::Value) -> String {
    let mut v = v.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.insert("wall_time".into(), 0.0.into());
    }
    serde_json::to_string_pretty(&v).unwrap()
}
