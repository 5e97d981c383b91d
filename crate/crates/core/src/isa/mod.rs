//! TMS320C25 instruction subset: encodings, register file and the
//! execution engine with its cycle cost model.
//!
//! The supported subset is the closure of what the routine library needs
//! plus the control instructions a debugger has to drive. Every other
//! opcode decodes to [`DecodeError::IllegalOpcode`].
//!
//! On-chip RAM blocks and the CNF remap are not modeled: program and data
//! memory are flat 64K-word spaces supplied by the board. Of the
//! memory-mapped registers at data addresses 0-5 only IMR (address 4) has
//! behavior.

mod cpu;
mod encoding;
mod format;

pub use cpu::{Bus, CpuState, IntLine, StepEvent, StepReport, STACK_DEPTH};
pub use encoding::{decode, encode, ArUpdate, DecodeError, EncodeError, Form, Instruction, Mnemonic, Mode};
pub use format::disassemble;
