//! The base decompressor: a tiny deterministic bit-program machine, and the
//! step-bounded halting set built from it.
//!
//! A description `d` dispatches on its leading bits:
//!
//! * `1 x`  — literal: halt with output `x`.
//! * `01 w` — pad: halt with `w 0^(N-|w|)` where `N` is the numeric value of
//!   the condition; undefined when `N < |w|`.
//! * `00 p` — run `p` on the opcode machine below.
//! * `""` or `"0"` — undefined.
//!
//! The opcode machine consumes `p` three bits at a time at a moving fetch
//! position (starting at 0, one step per instruction):
//!
//! | bits | op          | effect |
//! |------|-------------|--------|
//! | 000  | HALT        | return the buffer |
//! | 001  | APPEND0     | buffer.push(0) |
//! | 010  | APPEND1     | buffer.push(1) |
//! | 011  | APPEND_COND | append the condition verbatim |
//! | 100  | DOUBLE      | buffer = buffer buffer |
//! | 101  | JUMP v      | 3-bit operand; fetch position = 3v |
//! | 110  | DROP_LAST   | remove the final bit (no-op on empty) |
//! | 111  | NOP         | |
//!
//! Fetching fewer than 3 remaining bits (or a JUMP operand past the end) is
//! divergence. There is no conditional branch, so every loop is infinite and
//! the step budget cuts it. The buffer may never exceed `max_output` bits;
//! an instruction that would grow it beyond that leaves the machine stuck.

use crate::bits::{decode_nat, BitStr};
use crate::error::{Error, Result};

/// Result of running a description. Only `Halted` carries an output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecOutcome {
    Halted(BitStr),
    Diverged,
    Stuck,
    BudgetExceeded,
}

impl ExecOutcome {
    pub fn output(&self) -> Option<&BitStr> {
        match self {
            ExecOutcome::Halted(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_halted(&self) -> bool {
        matches!(self, ExecOutcome::Halted(_))
    }
}

/// Desk-scale substitute for unbounded computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MachineBudgets {
    /// Step budget for descriptions run through the decompressor.
    pub exec_budget: u32,
    /// Step budget for raw programs probed for halting.
    pub halt_budget: u32,
    /// Output buffer cap in bits.
    pub max_output: u32,
}

impl Default for MachineBudgets {
    fn default() -> Self {
        MachineBudgets {
            exec_budget: 4096,
            halt_budget: 4096,
            max_output: 1 << 16,
        }
    }
}

impl MachineBudgets {
    pub fn validate(&self) -> Result<()> {
        if self.exec_budget == 0 || self.halt_budget == 0 || self.max_output == 0 {
            return Err(Error::InvalidConfig("budgets must be positive".into()));
        }
        if self.max_output as usize > crate::bits::LENGTH_CAP {
            return Err(Error::InvalidConfig(format!(
                "max_output {} above the bit-string length cap",
                self.max_output
            )));
        }
        Ok(())
    }
}

const HALT: u64 = 0b000;
const APPEND0: u64 = 0b001;
const APPEND1: u64 = 0b010;
const APPEND_COND: u64 = 0b011;
const DOUBLE: u64 = 0b100;
const JUMP: u64 = 0b101;
const DROP_LAST: u64 = 0b110;
const NOP: u64 = 0b111;

/// Run `prog` as a raw opcode stream. Returns the outcome and the number of
/// instructions executed.
pub fn run_program(
    prog: &BitStr,
    cond: &BitStr,
    step_budget: u32,
    max_output: u32,
) -> (ExecOutcome, u32) {
    let mut buf = BitStr::empty();
    let mut pos = 0usize;
    let mut steps = 0u32;
    loop {
        if pos + 3 > prog.len() {
            return (ExecOutcome::Diverged, steps);
        }
        if steps == step_budget {
            return (ExecOutcome::BudgetExceeded, steps);
        }
        let op = prog.bits_at(pos, 3);
        steps += 1;
        match op {
            HALT => return (ExecOutcome::Halted(buf), steps),
            APPEND0 | APPEND1 => {
                if buf.len() + 1 > max_output as usize {
                    return (ExecOutcome::Stuck, steps);
                }
                buf.push(op == APPEND1);
            }
            APPEND_COND => {
                if buf.len() + cond.len() > max_output as usize {
                    return (ExecOutcome::Stuck, steps);
                }
                buf.append(cond);
            }
            DOUBLE => {
                if buf.len() * 2 > max_output as usize {
                    return (ExecOutcome::Stuck, steps);
                }
                let copy = buf.clone();
                buf.append(&copy);
            }
            JUMP => {
                if pos + 6 > prog.len() {
                    return (ExecOutcome::Diverged, steps);
                }
                let v = prog.bits_at(pos + 3, 3);
                pos = 3 * v as usize;
                continue;
            }
            DROP_LAST => {
                buf.pop();
            }
            NOP => {}
            _ => unreachable!(),
        }
        pos += 3;
    }
}

/// The base decompressor: mode dispatch on the leading bits of `d`, with the
/// condition feeding the pad and APPEND_COND forms.
pub fn v_opt(d: &BitStr, cond: &BitStr, budgets: &MachineBudgets) -> ExecOutcome {
    if d.is_empty() {
        return ExecOutcome::Stuck;
    }
    if d.get(0) {
        // literal
        return ExecOutcome::Halted(d.suffix(1));
    }
    if d.len() < 2 {
        return ExecOutcome::Stuck;
    }
    let rest = d.suffix(2);
    if d.get(1) {
        // pad: output w 0^(N-|w|)
        let n = match decode_nat(cond) {
            Some(n) if n <= budgets.max_output as u64 => n as usize,
            _ => return ExecOutcome::Stuck,
        };
        if n < rest.len() {
            return ExecOutcome::Stuck;
        }
        let mut out = rest;
        out.append_zeros(n - out.len());
        ExecOutcome::Halted(out)
    } else {
        run_program(&rest, cond, budgets.exec_budget, budgets.max_output).0
    }
}

/// Membership in the step-bounded halting set: `x` run as a raw opcode stream
/// with empty condition, within `halt_budget` steps.
pub fn in_halting(x: &BitStr, budgets: &MachineBudgets) -> bool {
    run_program(x, &BitStr::empty(), budgets.halt_budget, budgets.max_output)
        .0
        .is_halted()
}
