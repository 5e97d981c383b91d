//! Interactive debugger over a [`Board`].
//!
//! Commands are one per line, arguments in hex:
//!
//! ```text
//! D P|D addr [count]      display memory, 8 words per row
//! U addr [count]          unassemble program memory
//! M P|D src dst count     move a block (overlap-safe)
//! S P|D addr w [w...]     substitute words
//! F P|D addr count w      fill
//! I port / O port w       port input / output
//! L file [P|D]            load a DPX25 object, pc <- entry
//! R / R reg / R reg value registers
//! BP addr / BC id|* / BE id / BD id / BG ON|OFF / BL / BI ON|OFF
//! G [addr] / T [n] / X    run, step, resume past a breakpoint
//! RS / Q                  reset, quit
//! ```
//!
//! Errors print `?syntax`, `?range`, `?nofile` or `?busy` and never change
//! state. Commands that only mutate print nothing.

pub mod remote;

use std::fmt::Write as _;
use std::path::Path;

use crate::board::{Board, HaltReason};
use crate::isa::{decode, disassemble, encode, IntLine, StepEvent};
use crate::object::{read_object, Space};

pub const DEFAULT_CYCLE_GUARD: u64 = 10_000_000;
const DEFAULT_DISPLAY: u32 = 64;
const DEFAULT_UNASSEMBLE: u32 = 16;
/// Cycles per run slice when a run is driven incrementally.
pub const RUN_SLICE: u64 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmdError {
    Syntax,
    Range,
    NoFile,
    Busy,
}

impl CmdError {
    pub fn text(self) -> &'static str {
        match self {
            CmdError::Syntax => "syntax",
            CmdError::Range => "range",
            CmdError::NoFile => "nofile",
            CmdError::Busy => "busy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Breakpoint {
    pub id: u32,
    pub address: u16,
    pub enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Breakpoint {
        id: u32,
        addr: u16,
    },
    Idle,
    CycleLimit,
    IllegalOpcode(u16),
    Interrupt {
        line: IntLine,
        vector: u16,
    },
    Held,
    /// Ended by a remote `stop`.
    Stopped,
    StepDone,
}

impl StopReason {
    pub fn line(self) -> String {
        match self {
            StopReason::Breakpoint { id, addr } => format!("STOP: breakpoint {id} at {addr:04X}"),
            StopReason::Idle => "STOP: idle".into(),
            StopReason::CycleLimit => "STOP: cycle limit".into(),
            StopReason::IllegalOpcode(addr) => format!("STOP: illegal opcode at {addr:04X}"),
            StopReason::Interrupt { line, vector } => format!("STOP: interrupt {} at {vector:04X}", line.name()),
            StopReason::Held => "STOP: held".into(),
            StopReason::Stopped => "STOP: stopped".into(),
            StopReason::StepDone => "STOP: step".into(),
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            StopReason::Breakpoint { .. } => "breakpoint",
            StopReason::Idle => "idle",
            StopReason::CycleLimit => "cycle_limit",
            StopReason::IllegalOpcode(_) => "illegal_opcode",
            StopReason::Interrupt { .. } => "interrupt",
            StopReason::Held => "held",
            StopReason::Stopped => "stopped",
            StopReason::StepDone => "step",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadSummary {
    pub words: usize,
    pub records: usize,
    pub entry: u16,
}

#[derive(Debug, Clone, Copy)]
struct ActiveRun {
    /// Breakpoint address to ignore once, for `X`.
    skip: Option<u16>,
    remaining: u64,
}

pub struct Session {
    pub board: Board,
    breakpoints: Vec<Breakpoint>,
    next_id: u32,
    pub bp_global: bool,
    pub cycle_guard: u64,
    pub last_stop: Option<StopReason>,
    run: Option<ActiveRun>,
    quit: bool,
}

const REGISTERS: &[&str] =
    &["PC", "ACC", "P", "T", "AR0", "AR1", "AR2", "AR3", "AR4", "AR5", "AR6", "AR7", "ARP", "DP", "ST0", "ST1", "IMR"];

fn parse_hex(text: &str, max: u64) -> Result<u64, CmdError> {
    if text.is_empty() || text.len() > 8 || !text.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(CmdError::Syntax);
    }
    let v = u64::from_str_radix(text, 16).map_err(|_| CmdError::Syntax)?;
    if v > max {
        return Err(CmdError::Range);
    }
    Ok(v)
}

fn parse_space(text: &str) -> Result<Space, CmdError> {
    match text.to_ascii_uppercase().as_str() {
        "P" => Ok(Space::Prog),
        "D" => Ok(Space::Data),
        _ => Err(CmdError::Syntax),
    }
}

fn parse_on_off(text: &str) -> Result<bool, CmdError> {
    match text.to_ascii_uppercase().as_str() {
        "ON" => Ok(true),
        "OFF" => Ok(false),
        _ => Err(CmdError::Syntax),
    }
}

/// `addr + count` must stay within the 64K space.
fn check_block(addr: u64, count: u64) -> Result<(), CmdError> {
    if count == 0 || addr + count > 0x10000 {
        Err(CmdError::Range)
    } else {
        Ok(())
    }
}

impl Session {
    pub fn new(board: Board) -> Session {
        Session {
            board,
            breakpoints: Vec::new(),
            next_id: 1,
            bp_global: true,
            cycle_guard: DEFAULT_CYCLE_GUARD,
            last_stop: None,
            run: None,
            quit: false,
        }
    }

    pub fn quit_requested(&self) -> bool {
        self.quit
    }

    pub fn is_running(&self) -> bool {
        self.run.is_some()
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    /// Execute one console line and return its output, each line ending in `\n`.
    pub fn execute_command(&mut self, line: &str) -> String {
        match self.dispatch(line) {
            Ok(out) => out,
            Err(e) => format!("?{}\n", e.text()),
        }
    }

    fn dispatch(&mut self, line: &str) -> Result<String, CmdError> {
        let args: Vec<&str> = line.split_whitespace().collect();
        let Some((cmd, args)) = args.split_first() else {
            return Ok(String::new());
        };
        let cmd = cmd.to_ascii_uppercase();
        let mutating = !matches!(cmd.as_str(), "D" | "U" | "R" | "BL");
        if self.is_running() && (mutating || (cmd == "R" && args.len() == 2)) {
            return Err(CmdError::Busy);
        }
        let hex =
            |i: usize, max: u64| -> Result<u64, CmdError> { parse_hex(args.get(i).ok_or(CmdError::Syntax)?, max) };
        let opt_hex = |i: usize, max: u64, default: u64| -> Result<u64, CmdError> {
            args.get(i).map_or(Ok(default), |a| parse_hex(a, max))
        };
        let nargs = |allowed: std::ops::RangeInclusive<usize>| -> Result<(), CmdError> {
            if allowed.contains(&args.len()) {
                Ok(())
            } else {
                Err(CmdError::Syntax)
            }
        };
        match cmd.as_str() {
            "D" => {
                nargs(2..=3)?;
                let space = parse_space(args[0])?;
                self.display(space, hex(1, 0xFFFF)? as u16, opt_hex(2, 0x10000, DEFAULT_DISPLAY as u64)? as u32)
            }
            "U" => {
                nargs(1..=2)?;
                self.unassemble(hex(0, 0xFFFF)? as u16, opt_hex(1, 0x10000, DEFAULT_UNASSEMBLE as u64)? as u32)
            }
            "M" => {
                nargs(4..=4)?;
                let space = parse_space(args[0])?;
                self.move_block(space, hex(1, 0xFFFF)? as u16, hex(2, 0xFFFF)? as u16, hex(3, 0x10000)? as u32)?;
                Ok(String::new())
            }
            "S" => {
                if args.len() < 3 {
                    return Err(CmdError::Syntax);
                }
                let space = parse_space(args[0])?;
                let addr = hex(1, 0xFFFF)? as u16;
                let words =
                    args[2..].iter().map(|w| parse_hex(w, 0xFFFF).map(|v| v as u16)).collect::<Result<Vec<_>, _>>()?;
                self.substitute(space, addr, &words)?;
                Ok(String::new())
            }
            "F" => {
                nargs(4..=4)?;
                let space = parse_space(args[0])?;
                self.fill(space, hex(1, 0xFFFF)? as u16, hex(2, 0x10000)? as u32, hex(3, 0xFFFF)? as u16)?;
                Ok(String::new())
            }
            "I" => {
                nargs(1..=1)?;
                let port = hex(0, 0xF)? as u8;
                Ok(format!("PORT {port:X} = {:04X}\n", self.port_in(port)))
            }
            "O" => {
                nargs(2..=2)?;
                self.port_out(hex(0, 0xF)? as u8, hex(1, 0xFFFF)? as u16);
                Ok(String::new())
            }
            "L" => {
                nargs(1..=2)?;
                let force = args.get(1).map(|s| parse_space(s)).transpose()?;
                let s = self.load(Path::new(args[0]), force)?;
                Ok(format!("LOADED {} WORDS IN {} RECORDS, ENTRY {:04X}\n", s.words, s.records, s.entry))
            }
            "R" => match args.len() {
                0 => Ok(self.register_block()),
                1 => {
                    let name = args[0].to_ascii_uppercase();
                    let value = self.register(&name)?;
                    Ok(format!("{name}={value}\n"))
                }
                2 => {
                    let value = parse_hex(args[1], 0xFFFF_FFFF)?;
                    self.set_register(&args[0].to_ascii_uppercase(), value as u32)?;
                    Ok(String::new())
                }
                _ => Err(CmdError::Syntax),
            },
            "BP" => {
                nargs(1..=1)?;
                let addr = hex(0, 0xFFFF)? as u16;
                let id = self.add_breakpoint(addr);
                Ok(format!("BREAKPOINT {id} AT {addr:04X}\n"))
            }
            "BC" => {
                nargs(1..=1)?;
                if args[0] == "*" {
                    self.breakpoints.clear();
                } else {
                    self.clear_breakpoint(hex(0, u32::MAX as u64)? as u32)?;
                }
                Ok(String::new())
            }
            "BE" | "BD" => {
                nargs(1..=1)?;
                self.enable_breakpoint(hex(0, u32::MAX as u64)? as u32, cmd == "BE")?;
                Ok(String::new())
            }
            "BG" => {
                nargs(1..=1)?;
                self.bp_global = parse_on_off(args[0])?;
                Ok(String::new())
            }
            "BI" => {
                nargs(1..=1)?;
                self.board.stop_on_interrupt = parse_on_off(args[0])?;
                Ok(String::new())
            }
            "BL" => {
                nargs(0..=0)?;
                let mut out = format!("BREAKPOINTS {}\n", if self.bp_global { "ON" } else { "OFF" });
                for bp in &self.breakpoints {
                    let _ = writeln!(out, "{} {:04X} {}", bp.id, bp.address, if bp.enabled { "ON" } else { "OFF" });
                }
                Ok(out)
            }
            "G" | "X" => {
                let (start, skip) = parse_run_command(line).unwrap_or(Err(CmdError::Syntax))?;
                let stop = self.run_to_stop(start, skip);
                Ok(self.stop_report(stop))
            }
            "T" => {
                nargs(0..=1)?;
                let n = opt_hex(0, 0xFFFF, 1)?;
                if n == 0 {
                    return Err(CmdError::Range);
                }
                let (mut out, _) = self.step(n as u32);
                out.push_str(&self.register_block());
                Ok(out)
            }
            "RS" => {
                nargs(0..=0)?;
                self.reset();
                Ok(String::new())
            }
            "Q" => {
                nargs(0..=0)?;
                self.quit = true;
                Ok(String::new())
            }
            _ => Err(CmdError::Syntax),
        }
    }

    /// Stop line followed by the register block.
    pub fn stop_report(&self, stop: StopReason) -> String {
        format!("{}\n{}", stop.line(), self.register_block())
    }

    pub fn register_block(&self) -> String {
        let c = &self.board.cpu;
        let mut out = format!(
            "PC={:04X} ACC={:08X} P={:08X} T={:04X} ARP={} DP={:03X}\n",
            c.pc, c.acc as u32, c.preg as u32, c.treg, c.arp, c.dp
        );
        for (i, ar) in c.ar.iter().enumerate() {
            let _ = write!(out, "AR{i}={ar:04X} ");
        }
        let _ = writeln!(out, "ST0={:04X} ST1={:04X} CYC={}", c.st0(), c.st1(), c.cycles);
        out
    }

    /// Read one register by name as it is printed (hex digits, no prefix).
    pub fn register(&self, name: &str) -> Result<String, CmdError> {
        let c = &self.board.cpu;
        if let Some(i) = name.strip_prefix('S').and_then(|d| d.parse::<usize>().ok()).filter(|i| *i < 8) {
            if name.len() == 2 {
                return Ok(format!("{:04X}", c.stack[i]));
            }
        }
        let v = match name {
            "PC" => format!("{:04X}", c.pc),
            "ACC" => format!("{:08X}", c.acc as u32),
            "P" => format!("{:08X}", c.preg as u32),
            "T" => format!("{:04X}", c.treg),
            "ARP" => format!("{}", c.arp),
            "DP" => format!("{:03X}", c.dp),
            "ST0" => format!("{:04X}", c.st0()),
            "ST1" => format!("{:04X}", c.st1()),
            "IMR" => format!("{:02X}", c.imr),
            _ => match name.strip_prefix("AR").and_then(|d| d.parse::<usize>().ok()).filter(|i| *i < 8) {
                Some(i) if name.len() == 3 => format!("{:04X}", c.ar[i]),
                _ => return Err(CmdError::Syntax),
            },
        };
        Ok(v)
    }

    pub fn set_register(&mut self, name: &str, value: u32) -> Result<(), CmdError> {
        if !REGISTERS.contains(&name) {
            let stack = name.len() == 2 && name.starts_with('S') && name.as_bytes()[1].is_ascii_digit();
            return Err(if stack { CmdError::Range } else { CmdError::Syntax });
        }
        let max: u32 = match name {
            "ACC" | "P" => u32::MAX,
            "ARP" => 7,
            "DP" => 0x1FF,
            "IMR" => 0x3F,
            _ => 0xFFFF,
        };
        if value > max {
            return Err(CmdError::Range);
        }
        let c = &mut self.board.cpu;
        match name {
            "PC" => c.pc = value as u16,
            "ACC" => c.acc = value as i32,
            "P" => c.preg = value as i32,
            "T" => c.treg = value as u16,
            "ARP" => c.arp = value as u8,
            "DP" => c.dp = value as u16,
            "ST0" => c.set_st0(value as u16, true),
            "ST1" => c.set_st1(value as u16),
            "IMR" => c.imr = value as u8,
            _ => c.ar[name[2..].parse::<usize>().map_err(|_| CmdError::Syntax)?] = value as u16,
        }
        Ok(())
    }

    pub fn display(&self, space: Space, addr: u16, count: u32) -> Result<String, CmdError> {
        check_block(addr as u64, count as u64)?;
        let mut out = String::new();
        for row in 0..count.div_ceil(8) {
            let start = addr as u32 + row * 8;
            let n = (count - row * 8).min(8);
            let words: Vec<String> =
                (0..n).map(|i| format!("{:04X}", self.board.peek(space, (start + i) as u16))).collect();
            let _ = write!(out, "{start:04X}  {}", words[..n.min(4) as usize].join(" "));
            if n > 4 {
                let _ = write!(out, "  {}", words[4..].join(" "));
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn unassemble(&self, addr: u16, count: u32) -> Result<String, CmdError> {
        if count == 0 {
            return Err(CmdError::Range);
        }
        let mut out = String::new();
        let mut pc = addr as u32;
        for _ in 0..count {
            if pc > 0xFFFF {
                break;
            }
            let first = self.board.peek(Space::Prog, pc as u16);
            let second = self.board.peek(Space::Prog, (pc as u16).wrapping_add(1));
            let (words, text) = match decode(first, || second) {
                Ok(instr) => {
                    let words = encode(&instr).unwrap_or_else(|_| vec![first]);
                    (words, disassemble(&instr))
                }
                Err(_) => (vec![first], format!(".word 0x{first:04X}")),
            };
            out.push_str(&listing_line(pc as u16, &words, &text));
            pc += words.len() as u32;
        }
        Ok(out)
    }

    pub fn move_block(&mut self, space: Space, src: u16, dst: u16, count: u32) -> Result<(), CmdError> {
        check_block(src as u64, count as u64)?;
        check_block(dst as u64, count as u64)?;
        let buf: Vec<u16> = (0..count).map(|i| self.board.peek(space, src + i as u16)).collect();
        for (i, w) in buf.into_iter().enumerate() {
            self.board.poke(space, dst + i as u16, w);
        }
        Ok(())
    }

    pub fn substitute(&mut self, space: Space, addr: u16, words: &[u16]) -> Result<(), CmdError> {
        check_block(addr as u64, words.len() as u64)?;
        for (i, &w) in words.iter().enumerate() {
            self.board.poke(space, addr + i as u16, w);
        }
        Ok(())
    }

    pub fn fill(&mut self, space: Space, addr: u16, count: u32, value: u16) -> Result<(), CmdError> {
        check_block(addr as u64, count as u64)?;
        for i in 0..count {
            self.board.poke(space, addr + i as u16, value);
        }
        Ok(())
    }

    pub fn port_in(&mut self, port: u8) -> u16 {
        self.board.codec_mut().io_in(port)
    }

    pub fn port_out(&mut self, port: u8, value: u16) {
        self.board.codec_mut().io_out(port, value)
    }

    pub fn load(&mut self, path: &Path, force: Option<Space>) -> Result<LoadSummary, CmdError> {
        let text = std::fs::read_to_string(path).map_err(|_| CmdError::NoFile)?;
        let image = read_object(&text).map_err(|_| CmdError::NoFile)?;
        self.board.load(&image, force);
        self.board.cpu.pc = image.entry;
        Ok(LoadSummary { words: image.word_count(), records: image.records.len(), entry: image.entry })
    }

    pub fn reset(&mut self) {
        self.board.reset();
        self.last_stop = None;
    }

    /// Returns the id of the breakpoint at `addr`, creating it if needed.
    pub fn add_breakpoint(&mut self, addr: u16) -> u32 {
        if let Some(bp) = self.breakpoints.iter().find(|b| b.address == addr) {
            return bp.id;
        }
        let id = self.next_id;
        self.next_id += 1;
        self.breakpoints.push(Breakpoint { id, address: addr, enabled: true });
        id
    }

    pub fn clear_breakpoint(&mut self, id: u32) -> Result<(), CmdError> {
        let before = self.breakpoints.len();
        self.breakpoints.retain(|b| b.id != id);
        if self.breakpoints.len() == before {
            return Err(CmdError::Range);
        }
        Ok(())
    }

    pub fn clear_all_breakpoints(&mut self) {
        self.breakpoints.clear();
    }

    pub fn enable_breakpoint(&mut self, id: u32, enabled: bool) -> Result<(), CmdError> {
        let bp = self.breakpoints.iter_mut().find(|b| b.id == id).ok_or(CmdError::Range)?;
        bp.enabled = enabled;
        Ok(())
    }

    /// Step `n` instructions, ignoring breakpoints. Returns the trace and
    /// the cycles consumed.
    pub fn step(&mut self, n: u32) -> (String, u64) {
        let mut out = String::new();
        let start = self.board.cpu.cycles;
        for _ in 0..n {
            if self.board.held() {
                out.push_str("STOP: held\n");
                self.last_stop = Some(StopReason::Held);
                return (out, self.board.cpu.cycles - start);
            }
            let r = self.board.step();
            let line = match (r.executed, r.event) {
                (_, StepEvent::InterruptTaken(line)) => {
                    self.last_stop = Some(StopReason::Interrupt { line, vector: r.pc_after });
                    format!("{:04X}  INTERRUPT {} -> {:04X}\n", r.pc_before, line.name(), r.pc_after)
                }
                (_, StepEvent::IllegalOpcode(word)) => {
                    self.last_stop = Some(StopReason::IllegalOpcode(r.pc_before));
                    listing_line(r.pc_before, &[word], "ILLEGAL")
                }
                (Some(instr), _) => {
                    self.last_stop = Some(StopReason::StepDone);
                    let words = encode(&instr).unwrap_or_default();
                    listing_line(r.pc_before, &words, &disassemble(&instr))
                }
                (None, _) => {
                    self.last_stop = Some(StopReason::StepDone);
                    format!("{:04X}  IDLE WAIT\n", r.pc_before)
                }
            };
            out.push_str(&line);
        }
        (out, self.board.cpu.cycles - start)
    }

    /// Begin a run. `skip_current` ignores a breakpoint at the current pc once.
    pub fn start_run(&mut self, start: Option<u16>, skip_current: bool) {
        if let Some(addr) = start {
            self.board.cpu.pc = addr;
        }
        let skip = skip_current.then_some(self.board.cpu.pc);
        self.run = Some(ActiveRun { skip, remaining: self.cycle_guard });
    }

    /// Advance the active run by at most `budget` cycles. Returns the stop
    /// reason once the run ends.
    pub fn run_slice(&mut self, budget: u64) -> Option<StopReason> {
        let mut run = self.run?;
        let slice = budget.min(run.remaining);
        let bps = &self.breakpoints;
        let global = self.bp_global;
        let mut skip = run.skip;
        let mut check = |pc: u16| {
            if skip.take() == Some(pc) {
                return false;
            }
            global && bps.iter().any(|b| b.enabled && b.address == pc)
        };
        let report = self.board.run(Some(slice), Some(&mut check));
        run.skip = skip;
        run.remaining = run.remaining.saturating_sub(report.cycles_run);
        let stop = match report.halt_reason {
            HaltReason::CycleLimit if run.remaining > 0 => {
                self.run = Some(run);
                return None;
            }
            HaltReason::CycleLimit => StopReason::CycleLimit,
            HaltReason::Idle => StopReason::Idle,
            HaltReason::Breakpoint(addr) => {
                let id = self.breakpoints.iter().find(|b| b.address == addr).map_or(0, |b| b.id);
                StopReason::Breakpoint { id, addr }
            }
            HaltReason::IllegalOpcode(addr) => StopReason::IllegalOpcode(addr),
            HaltReason::Interrupt(line) => StopReason::Interrupt { line, vector: self.board.cpu.pc },
            HaltReason::Held => StopReason::Held,
        };
        self.run = None;
        self.last_stop = Some(stop);
        Some(stop)
    }

    /// End an active run from outside.
    pub fn stop_run(&mut self) -> Option<StopReason> {
        self.run.take().map(|_| {
            self.last_stop = Some(StopReason::Stopped);
            StopReason::Stopped
        })
    }

    pub fn run_to_stop(&mut self, start: Option<u16>, skip_current: bool) -> StopReason {
        self.start_run(start, skip_current);
        loop {
            if let Some(stop) = self.run_slice(u64::MAX) {
                return stop;
            }
        }
    }
}

/// For `G [addr]` and `X` lines: the start address and whether to skip a
/// breakpoint at the current pc. `None` for any other command.
pub fn parse_run_command(line: &str) -> Option<Result<(Option<u16>, bool), CmdError>> {
    let args: Vec<&str> = line.split_whitespace().collect();
    let (cmd, rest) = args.split_first()?;
    match (cmd.to_ascii_uppercase().as_str(), rest) {
        ("G", []) => Some(Ok((None, false))),
        ("G", [addr]) => Some(parse_hex(addr, 0xFFFF).map(|a| (Some(a as u16), false))),
        ("X", []) => Some(Ok((None, true))),
        ("G" | "X", _) => Some(Err(CmdError::Syntax)),
        _ => None,
    }
}

fn listing_line(addr: u16, words: &[u16], text: &str) -> String {
    let words: Vec<String> = words.iter().map(|w| format!("{w:04X}")).collect();
    format!("{addr:04X}  {:<9}  {text}\n", words.join(" "))
}

/// Replay a script, echoing each command as `>CMD` followed by its output.
pub fn run_script(session: &mut Session, script: &str) -> String {
    let mut out = String::new();
    for line in script.lines() {
        let cmd = line.trim();
        if cmd.is_empty() {
            continue;
        }
        out.push('>');
        out.push_str(cmd);
        out.push('\n');
        out.push_str(&session.execute_command(cmd));
        if session.quit_requested() {
            break;
        }
    }
    out
}
