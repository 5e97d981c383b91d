pub mod adda2;
pub mod asm;
pub mod board;
pub mod debugger;
pub mod dsplib;
pub mod isa;
pub mod object;
