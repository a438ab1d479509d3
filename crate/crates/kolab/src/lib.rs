//! A desk-scale laboratory for a construction that sounds impossible at first
//! hearing: a decompressor engineered so that a seeded polynomial-time
//! algorithm decides the (step-bounded) halting problem while asking nothing
//! but "is this string incompressible?".
//!
//! The pieces, bottom to top:
//!
//! * [`bits`] — bit strings, numeric encodings, `HEX:LEN` literals.
//! * [`primes`] — prime indexing and *specific numbers* `p*k` (odd, `k < p`),
//!   the lengths on which the matrix case of the decompressor activates.
//! * [`gf2`] — random GF(2) matrices, the hashing side of the construction.
//! * [`machine`] — the concrete base decompressor and the step-bounded
//!   halting set it induces.
//! * [`complexity`] — forward-enumeration complexity tables with a versioned
//!   text cache.
//! * [`scheme`] — the halting-aware decompressor `U`, the warm-up parity
//!   decompressor `W`, and calibration of the scheme constants.
//! * [`oracle`] — membership in `R_U = {x : C_U(x) >= |x|}`, exact and
//!   structural.
//! * [`reduction`] — the probabilistic decision procedure and its statistical
//!   experiments.
//! * [`cli`] — the `kolab` command-line front end and JSON report schema.
//!
//! The guide under `book/` walks through the same layering with runnable
//! snippets; `cargo test` keeps those snippets honest.

pub mod bits;
pub mod cli;
pub mod complexity;
pub mod error;
pub mod gf2;
pub mod machine;
pub mod oracle;
pub mod primes;
pub mod reduction;
pub mod scheme;

pub use bits::{decode_nat, encode_nat, BitStr, Nat};
pub use complexity::{build_table, ComplexityTable, ComplexityValue, MachineId};
pub use error::{Error, Result};
pub use gf2::{collision_census, sample_matrix, Gf2Matrix, SeededRng};
pub use machine::{in_halting, v_opt, ExecOutcome, MachineBudgets};
pub use oracle::{cross_validate, OracleMode, OracleVerdict, RuOracle};
pub use reduction::{
    decide_halting, end_to_end, hoeffding_bound, spurious_rate_experiment, ReductionConfig,
    ReductionReport, Verdict,
};
pub use scheme::{calibrate_gap, u_decode, w_decode, SchemeParams};
