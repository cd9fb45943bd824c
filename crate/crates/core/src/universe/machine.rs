//! Fuel-bounded counter machines.
//!
//! Eight registers; the input is placed in `r0` and the output is read from
//! `r1` when `HALT` executes. Every executed instruction costs one unit of
//! fuel. `ORC a b` sets `r[b]` to bit `r[a]` of the oracle; reading past a
//! finite oracle prefix diverges, as the use principle demands.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::BitString;

pub const REGISTERS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgramError {
    #[error("line {line}: unknown instruction {text:?}")]
    UnknownInstruction { line: usize, text: String },
    #[error("line {line}: bad operand {text:?}")]
    BadOperand { line: usize, text: String },
    #[error("line {line}: register {register} out of range")]
    BadRegister { line: usize, register: usize },
    #[error("line {line}: jump target {label} outside the program ({len} instructions)")]
    BadLabel { line: usize, label: usize, len: usize },
    #[error("empty program")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instruction {
    Inc(usize),
    /// Jump to the label if the register is zero, otherwise decrement it.
    DecJz(usize, usize),
    /// `r[dst] := oracle(r[src])`.
    Orc(usize, usize),
    Halt,
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instruction::Inc(r) => write!(f, "INC {r}"),
            Instruction::DecJz(r, l) => write!(f, "DECJZ {r} {l}"),
            Instruction::Orc(a, b) => write!(f, "ORC {a} {b}"),
            Instruction::Halt => f.write_str("HALT"),
        }
    }
}

/// A validated program. Text form: one instruction per line, labels are
/// 0-based instruction indices, `#` starts a comment, blank lines are
/// ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineProgram {
    code: Vec<Instruction>,
}

impl MachineProgram {
    pub fn new(code: Vec<Instruction>) -> Result<Self, ProgramError> {
        if code.is_empty() {
            return Err(ProgramError::Empty);
        }
        for (line, ins) in code.iter().enumerate() {
            let regs: &[usize] = match ins {
                Instruction::Inc(r) => &[*r],
                Instruction::DecJz(r, _) => &[*r],
                Instruction::Orc(a, b) => &[*a, *b],
                Instruction::Halt => &[],
            };
            if let Some(&register) = regs.iter().find(|&&r| r >= REGISTERS) {
                return Err(ProgramError::BadRegister { line, register });
            }
            if let Instruction::DecJz(_, label) = *ins {
                if label >= code.len() {
                    return Err(ProgramError::BadLabel {
                        line,
                        label,
                        len: code.len(),
                    });
                }
            }
        }
        Ok(MachineProgram { code })
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.code
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }
}

impl FromStr for MachineProgram {
    type Err = ProgramError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut code = Vec::new();
        for (line, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut parts = body.split_whitespace();
            let op = parts.next().unwrap_or_default().to_ascii_uppercase();
            let operands: Vec<&str> = parts.collect();
            let num = |i: usize| -> Result<usize, ProgramError> {
                operands
                    .get(i)
                    .and_then(|t| t.trim_start_matches('r').parse().ok())
                    .ok_or_else(|| ProgramError::BadOperand {
                        line,
                        text: body.to_string(),
                    })
            };
            let arity = match op.as_str() {
                "INC" => 1,
                "DECJZ" | "ORC" => 2,
                "HALT" => 0,
                _ => {
                    return Err(ProgramError::UnknownInstruction {
                        line,
                        text: body.to_string(),
                    })
                }
            };
            if operands.len() != arity {
                return Err(ProgramError::BadOperand {
                    line,
                    text: body.to_string(),
                });
            }
            code.push(match op.as_str() {
                "INC" => Instruction::Inc(num(0)?),
                "DECJZ" => Instruction::DecJz(num(0)?, num(1)?),
                "ORC" => Instruction::Orc(num(0)?, num(1)?),
                _ => Instruction::Halt,
            });
        }
        MachineProgram::new(code)
    }
}

impl fmt::Display for MachineProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ins) in self.code.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{ins}")?;
        }
        Ok(())
    }
}

/// The oracle a computation consults.
#[derive(Debug, Clone, Copy)]
pub enum Oracle<'a> {
    /// The empty set: every bit reads 0.
    Empty,
    /// A finite prefix; reading beyond it diverges.
    Prefix(&'a BitString),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RunOutcome {
    Halt { value: u64, steps: u64 },
    OutOfFuel,
    /// The computation asked for an oracle bit past the prefix.
    BeyondPrefix { position: u64, steps: u64 },
}

impl RunOutcome {
    pub fn value(self) -> Option<u64> {
        match self {
            RunOutcome::Halt { value, .. } => Some(value),
            _ => None,
        }
    }
}

pub fn run_machine(program: &MachineProgram, input: u64, fuel: u64) -> RunOutcome {
    run_with_oracle(program, input, fuel, Oracle::Empty)
}

pub fn run_with_oracle(
    program: &MachineProgram,
    input: u64,
    fuel: u64,
    oracle: Oracle<'_>,
) -> RunOutcome {
    let mut regs = [0u64; REGISTERS];
    regs[0] = input;
    let mut pc = 0usize;
    let mut steps = 0u64;
    while steps < fuel {
        steps += 1;
        match program.code[pc] {
            Instruction::Inc(r) => {
                regs[r] = regs[r].saturating_add(1);
                pc += 1;
            }
            Instruction::DecJz(r, label) => {
                if regs[r] == 0 {
                    pc = label;
                } else {
                    regs[r] -= 1;
                    pc += 1;
                }
            }
            Instruction::Orc(a, b) => {
                let position = regs[a];
                regs[b] = match oracle {
                    Oracle::Empty => 0,
                    Oracle::Prefix(prefix) => match usize::try_from(position)
                        .ok()
                        .and_then(|i| prefix.bit(i))
                    {
                        Some(bit) => u64::from(bit),
                        None => return RunOutcome::BeyondPrefix { position, steps },
                    },
                };
                pc += 1;
            }
            Instruction::Halt => {
                return RunOutcome::Halt {
                    value: regs[1],
                    steps,
                }
            }
        }
        if pc >= program.code.len() {
            // running off the end of the program counts as divergence
            return RunOutcome::OutOfFuel;
        }
    }
    RunOutcome::OutOfFuel
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(text: &str) -> MachineProgram {
        text.parse().unwrap()
    }

    #[test]
    fn inc_halt_outputs_one() {
        assert_eq!(
            run_machine(&prog("INC 1\nHALT"), 9, 10),
            RunOutcome::Halt { value: 1, steps: 2 }
        );
    }

    #[test]
    fn infinite_loop_never_halts() {
        let p = prog("DECJZ 7 0");
        for fuel in [0, 1, 10, 10_000] {
            assert_eq!(run_machine(&p, 3, fuel), RunOutcome::OutOfFuel);
        }
    }

    #[test]
    fn successor_hand_trace() {
        // 0: DECJZ 0 3   move r0 into r1
        // 1: INC 1
        // 2: DECJZ 7 0   unconditional jump (r7 stays 0)
        // 3: INC 1
        // 4: HALT
        let p = prog("DECJZ 0 3\nINC 1\nDECJZ 7 0\nINC 1\nHALT");
        for x in 0..20u64 {
            // three steps per unit moved, one final test, INC, HALT
            let steps = 3 * x + 3;
            assert_eq!(run_machine(&p, x, steps), RunOutcome::Halt { value: x + 1, steps });
            assert_eq!(run_machine(&p, x, steps - 1), RunOutcome::OutOfFuel);
            assert_eq!(run_machine(&p, x, steps + 50).value(), Some(x + 1));
        }
    }

    #[test]
    fn malformed_programs_are_rejected() {
        assert!(matches!(
            "DECJZ 0 9\nHALT".parse::<MachineProgram>(),
            Err(ProgramError::BadLabel { label: 9, .. })
        ));
        assert!(matches!(
            "INC 8".parse::<MachineProgram>(),
            Err(ProgramError::BadRegister { register: 8, .. })
        ));
        assert!(matches!(
            "JMP 1".parse::<MachineProgram>(),
            Err(ProgramError::UnknownInstruction { .. })
        ));
        assert!(matches!("".parse::<MachineProgram>(), Err(ProgramError::Empty)));
        assert!(matches!(
            "INC".parse::<MachineProgram>(),
            Err(ProgramError::BadOperand { .. })
        ));
    }

    #[test]
    fn oracle_reads_respect_the_prefix() {
        let p = prog("ORC 0 1\nHALT");
        let tau: BitString = "01".parse().unwrap();
        assert_eq!(run_with_oracle(&p, 1, 10, Oracle::Prefix(&tau)).value(), Some(1));
        assert_eq!(run_with_oracle(&p, 0, 10, Oracle::Prefix(&tau)).value(), Some(0));
        assert!(matches!(
            run_with_oracle(&p, 2, 10, Oracle::Prefix(&tau)),
            RunOutcome::BeyondPrefix { position: 2, .. }
        ));
        assert_eq!(run_machine(&p, 5, 10).value(), Some(0));
    }

    #[test]
    fn runs_are_deterministic() {
        let p = prog("DECJZ 0 3\nINC 1\nDECJZ 7 0\nINC 1\nHALT");
        let a: Vec<_> = (0..50).map(|x| run_machine(&p, x, 100)).collect();
        let b: Vec<_> = (0..50).map(|x| run_machine(&p, x, 100)).collect();
        assert_eq!(a, b);
        assert_eq!(p.to_string().parse::<MachineProgram>().unwrap(), p);
    }
}
