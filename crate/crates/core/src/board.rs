//! The coprocessor board: 64K words of program and 64K words of data
//! memory shared with the host, a page port selecting the host window,
//! a control port driving RESET/HOLD/INT, wait states and the ADDA2 codec.
//!
//! Page port layout (5 bits): bit 4 selects the space (0 program, 1 data),
//! bits 3-0 select one of 16 slices of 4K words. Host window offset `o`
//! maps to address `slice << 12 | o`.
//!
//! Control port: bit 0 RESET (level, reset performed on the falling edge),
//! bit 1 HOLD (level), bit 2 INT (rising edge requests INT2).

use thiserror::Error;

use crate::adda2::{Codec, CodecMode};
use crate::isa::{Bus, CpuState, IntLine, StepEvent, StepReport};
use crate::object::{ObjectImage, Space};

pub const WINDOW_WORDS: u16 = 4096;
pub const MAX_WAIT_STATES: u8 = 2;

pub const CTRL_RESET: u8 = 0x01;
pub const CTRL_HOLD: u8 = 0x02;
pub const CTRL_INT: u8 = 0x04;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoardConfig {
    pub clock_mhz: f64,
    pub wait_states: u8,
    pub sample_rate: u32,
}

impl Default for BoardConfig {
    fn default() -> Self {
        BoardConfig { clock_mhz: 40.0, wait_states: 0, sample_rate: 25_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("wait_states {0} exceeds {MAX_WAIT_STATES}")]
    WaitStates(u8),
    #[error("clock_mhz must be positive, got {0}")]
    Clock(f64),
    #[error("sample rate must be positive")]
    Rate,
}

impl BoardConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.wait_states > MAX_WAIT_STATES {
            return Err(ConfigError::WaitStates(self.wait_states));
        }
        if !(self.clock_mhz > 0.0 && self.clock_mhz.is_finite()) {
            return Err(ConfigError::Clock(self.clock_mhz));
        }
        if self.sample_rate == 0 {
            return Err(ConfigError::Rate);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    Idle,
    CycleLimit,
    /// Stopped before executing the instruction at this address.
    Breakpoint(u16),
    /// Address of the offending word.
    IllegalOpcode(u16),
    /// An interrupt was dispatched while `stop_on_interrupt` was set; pc is at the vector.
    Interrupt(IntLine),
    /// The board is in reset or hold.
    Held,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunReport {
    pub cycles_run: u64,
    pub samples_processed: u64,
    pub instructions: u64,
    pub halt_reason: HaltReason,
}

/// Everything the CPU sees through its bus.
#[derive(Debug)]
pub struct Hardware {
    pub prog: Vec<u16>,
    pub data: Vec<u16>,
    pub codec: Codec,
    wait_states: u8,
}

impl Bus for Hardware {
    fn read_prog(&mut self, addr: u16) -> u16 {
        self.prog[addr as usize]
    }

    fn write_prog(&mut self, addr: u16, value: u16) {
        self.prog[addr as usize] = value;
    }

    fn read_data(&mut self, addr: u16) -> u16 {
        self.data[addr as usize]
    }

    fn write_data(&mut self, addr: u16, value: u16) {
        self.data[addr as usize] = value;
    }

    fn io_in(&mut self, port: u8) -> u16 {
        self.codec.io_in(port)
    }

    fn io_out(&mut self, port: u8, value: u16) {
        self.codec.io_out(port, value)
    }

    fn wait_states(&self) -> u8 {
        self.wait_states
    }
}

#[derive(Debug)]
pub struct Board {
    pub cpu: CpuState,
    pub hw: Hardware,
    page: u8,
    control: u8,
    config: BoardConfig,
    /// Make `run` return right after an interrupt dispatch.
    pub stop_on_interrupt: bool,
}

impl Default for Board {
    fn default() -> Self {
        Board::new(BoardConfig::default()).expect("default config is valid")
    }
}

impl Board {
    pub fn new(config: BoardConfig) -> Result<Board, ConfigError> {
        config.validate()?;
        Ok(Board {
            cpu: CpuState::new(),
            hw: Hardware {
                prog: vec![0; 0x10000],
                data: vec![0; 0x10000],
                codec: Codec::new(config.clock_mhz, config.sample_rate),
                wait_states: config.wait_states,
            },
            page: 0,
            control: 0,
            config,
            stop_on_interrupt: false,
        })
    }

    pub fn config(&self) -> BoardConfig {
        self.config
    }

    pub fn codec(&self) -> &Codec {
        &self.hw.codec
    }

    pub fn codec_mut(&mut self) -> &mut Codec {
        &mut self.hw.codec
    }

    pub fn memory(&self, space: Space) -> &[u16] {
        match space {
            Space::Prog => &self.hw.prog,
            Space::Data => &self.hw.data,
        }
    }

    pub fn memory_mut(&mut self, space: Space) -> &mut [u16] {
        match space {
            Space::Prog => &mut self.hw.prog,
            Space::Data => &mut self.hw.data,
        }
    }

    /// Data reads go through the CPU so that address 4 shows IMR.
    pub fn peek(&self, space: Space, addr: u16) -> u16 {
        match space {
            Space::Data if addr == 4 => self.cpu.imr as u16,
            _ => self.memory(space)[addr as usize],
        }
    }

    pub fn poke(&mut self, space: Space, addr: u16, value: u16) {
        if space == Space::Data && addr == 4 {
            self.cpu.imr = (value & 0x3F) as u8;
        }
        self.memory_mut(space)[addr as usize] = value;
    }

    /// Copy every record into memory. `force` sends all records to one space.
    pub fn load(&mut self, image: &ObjectImage, force: Option<Space>) {
        for rec in &image.records {
            let space = force.unwrap_or(rec.space);
            for (i, &w) in rec.words.iter().enumerate() {
                self.poke(space, rec.start.wrapping_add(i as u16), w);
            }
        }
    }

    pub fn page(&self) -> u8 {
        self.page
    }

    pub fn write_page_port(&mut self, value: u8) {
        self.page = value & 0x1F;
    }

    fn window_target(&self, offset: u16) -> (Space, u16) {
        assert!(offset < WINDOW_WORDS, "host window offset {offset} out of range");
        let space = if self.page & 0x10 != 0 { Space::Data } else { Space::Prog };
        (space, ((self.page as u16 & 0x0F) << 12) | offset)
    }

    pub fn host_window_read(&self, offset: u16) -> u16 {
        let (space, addr) = self.window_target(offset);
        self.peek(space, addr)
    }

    pub fn host_window_write(&mut self, offset: u16, value: u16) {
        let (space, addr) = self.window_target(offset);
        self.poke(space, addr, value);
    }

    pub fn control(&self) -> u8 {
        self.control
    }

    pub fn write_control_port(&mut self, bits: u8) {
        let old = self.control;
        self.control = bits & 0x07;
        if old & CTRL_RESET != 0 && bits & CTRL_RESET == 0 {
            self.reset();
        }
        if old & CTRL_INT == 0 && bits & CTRL_INT != 0 {
            self.cpu.request_interrupt(IntLine::Int2);
        }
    }

    pub fn held(&self) -> bool {
        self.control & (CTRL_RESET | CTRL_HOLD) != 0
    }

    /// DSP and codec reset; memory is untouched.
    pub fn reset(&mut self) {
        self.cpu.reset();
        self.hw.codec.reset();
    }

    /// True when the CPU sits in IDLE with nothing that could wake it.
    pub fn idle_halted(&self) -> bool {
        if !self.cpu.idle {
            return false;
        }
        if self.cpu.intm {
            return true;
        }
        let codec = &self.hw.codec;
        let wake = self.cpu.pending & self.cpu.imr != 0
            || (codec.running() && codec.mode == CodecMode::Interrupt && self.cpu.imr & IntLine::Int0.bit() != 0);
        !wake
    }

    fn held_report(&self) -> StepReport {
        StepReport { executed: None, pc_before: self.cpu.pc, pc_after: self.cpu.pc, cycles: 0, event: StepEvent::None }
    }

    fn advance_codec(&mut self, cycles: u64) {
        let ev = self.hw.codec.tick(cycles);
        if ev.interrupts > 0 {
            self.cpu.request_interrupt(IntLine::Int0);
        }
    }

    /// One CPU step with codec accounting. No progress while held.
    pub fn step(&mut self) -> StepReport {
        if self.held() {
            return self.held_report();
        }
        let report = self.cpu.step(&mut self.hw);
        self.advance_codec(report.cycles as u64);
        report
    }

    /// Run until a halt condition. `breakpoint` is consulted before each
    /// instruction fetch with the current pc.
    pub fn run(&mut self, max_cycles: Option<u64>, mut breakpoint: Option<&mut dyn FnMut(u16) -> bool>) -> RunReport {
        let start_cycles = self.cpu.cycles;
        let start_samples = self.hw.codec.samples_produced();
        let mut instructions = 0u64;
        let halt_reason = loop {
            if self.held() {
                break HaltReason::Held;
            }
            let elapsed = self.cpu.cycles - start_cycles;
            if max_cycles.is_some_and(|max| elapsed >= max) {
                break HaltReason::CycleLimit;
            }
            if self.cpu.idle && self.cpu.deliverable_interrupt().is_none() {
                if self.idle_halted() {
                    break HaltReason::Idle;
                }
                // nothing happens until the next codec event
                let mut skip = self.hw.codec.phase() as u64;
                if let Some(max) = max_cycles {
                    skip = skip.min(max - elapsed);
                }
                self.cpu.cycles += skip;
                self.advance_codec(skip);
                continue;
            }
            if self.cpu.deliverable_interrupt().is_none() {
                if let Some(bp) = breakpoint.as_mut() {
                    if bp(self.cpu.pc) {
                        break HaltReason::Breakpoint(self.cpu.pc);
                    }
                }
            }
            let report = self.step();
            if report.executed.is_some() {
                instructions += 1;
            }
            match report.event {
                StepEvent::IllegalOpcode(_) => break HaltReason::IllegalOpcode(report.pc_before),
                StepEvent::InterruptTaken(line) if self.stop_on_interrupt => break HaltReason::Interrupt(line),
                _ => {}
            }
        };
        RunReport {
            cycles_run: self.cpu.cycles - start_cycles,
            samples_processed: self.hw.codec.samples_produced() - start_samples,
            instructions,
            halt_reason,
        }
    }
}
