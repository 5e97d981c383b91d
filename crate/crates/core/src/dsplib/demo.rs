use std::fmt::Write as _;

use thiserror::Error;

use super::{fft_twiddles, Biquad, FrameSet};
use crate::asm::{assemble, AsmOptions};
use crate::board::{Board, BoardConfig, ConfigError, HaltReason, RunReport};
use crate::object::{ObjectImage, Record, Space};

/// Label on the instruction that stores each output sample.
pub const OUTPUT_LABEL: &str = "OUTST";

const ADDA2_INC: &str = include_str!("../../lib/asm/adda2.inc");
const LPC_INC: &str = include_str!("../../lib/asm/lpc.inc");
const LOOPBACK: &str = include_str!("../../lib/asm/loopback.asm");
const LOOPBACK_INT: &str = include_str!("../../lib/asm/loopback_int.asm");
const FIR: &str = include_str!("../../lib/asm/fir.asm");
const IIR: &str = include_str!("../../lib/asm/iir.asm");
const FFT: &str = include_str!("../../lib/asm/fft.asm");
const LPC_BLOCK: &str = include_str!("../../lib/asm/lpc_block.asm");
const LPC_STREAM: &str = include_str!("../../lib/asm/lpc_stream.asm");

/// The shipped sources, by file name.
pub const SOURCES: &[(&str, &str)] = &[
    ("adda2.inc", ADDA2_INC),
    ("lpc.inc", LPC_INC),
    ("loopback.asm", LOOPBACK),
    ("loopback_int.asm", LOOPBACK_INT),
    ("fir.asm", FIR),
    ("iir.asm", IIR),
    ("fft.asm", FFT),
    ("lpc_block.asm", LPC_BLOCK),
    ("lpc_stream.asm", LPC_STREAM),
];

const IN_BUF: u16 = 0x1000;
const OUT_BUF: u16 = 0x2000;
const DELAY_LINE: u16 = 0x0400;
const PROG_TABLE: u16 = 0x0400;
const LPC_CUR: u16 = 0x0300;
const FFT_TWIDDLES: u16 = 0x4000;
const MAX_BLOCK: usize = 0x1000;
const MAX_LPC_OUT: usize = 0xE000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpcMode {
    /// Samples go to the DAC, paced by the codec.
    Stream,
    /// Samples go to a data-memory buffer as fast as possible.
    Block,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DemoParams {
    Loopback { interrupt: bool },
    Fir { h: Vec<i16>, q: u32, x: Vec<i16> },
    Iir { coeffs: Biquad, x: Vec<i16> },
    Fft { x: Vec<(i16, i16)> },
    LpcSynth { frames: FrameSet, seed: u16, mode: LpcMode },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demo {
    /// Self-contained source: parameters, code and tables.
    pub source: String,
    /// The tables also embedded in `source`.
    pub tables: Vec<Record>,
    /// Result buffer in data memory, in words. `None` when output goes to the DAC.
    pub output: Option<(u16, usize)>,
}

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("bad parameters: {0}")]
    Param(String),
    #[error("demo does not assemble: {}", .0.join("; "))]
    Asm(Vec<String>),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("demo stopped with {0:?}")]
    Halt(HaltReason),
}

fn param(msg: impl Into<String>) -> DemoError {
    DemoError::Param(msg.into())
}

fn expand_includes(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        let t = line.trim_start();
        let inc = t.strip_prefix(".include").and_then(|r| r.trim().strip_prefix('"')).and_then(|r| r.split('"').next());
        match inc.and_then(|name| SOURCES.iter().find(|(n, _)| *n == name)) {
            Some((_, body)) => out.push_str(&expand_includes(body)),
            None => {
                out.push_str(line);
                out.push('\n');
            }
        }
    }
    out
}

struct Builder {
    header: String,
    tables: Vec<Record>,
}

impl Builder {
    fn new(title: &str) -> Self {
        Builder { header: format!("        .title \"{title}\"\n"), tables: Vec::new() }
    }

    fn equ(&mut self, name: &str, value: impl Into<i64>) -> &mut Self {
        let _ = writeln!(self.header, "{name:<8}.equ {}", value.into());
        self
    }

    fn table(&mut self, space: Space, start: u16, words: Vec<u16>) -> &mut Self {
        if !words.is_empty() {
            self.tables.push(Record { space, start, words });
        }
        self
    }

    fn finish(&self, body: &str, output: Option<(u16, usize)>) -> Demo {
        let mut source = self.header.clone();
        source.push_str(&expand_includes(body));
        for r in &self.tables {
            let seg = if r.space == Space::Prog { ".pseg" } else { ".dseg" };
            let _ = writeln!(source, "        {seg}\n        .org 0x{:04X}", r.start);
            for chunk in r.words.chunks(8) {
                let words: Vec<String> = chunk.iter().map(|w| format!("0x{w:04X}")).collect();
                let _ = writeln!(source, "        .word {}", words.join(","));
            }
        }
        Demo { source, tables: self.tables.clone(), output }
    }
}

fn words(v: &[i16]) -> Vec<u16> {
    v.iter().map(|&w| w as u16).collect()
}

/// Generate a ready-to-assemble demo program and its tables.
pub fn build_demo(params: &DemoParams) -> Result<Demo, DemoError> {
    match params {
        DemoParams::Loopback { interrupt } => {
            let b = Builder::new("ADDA2 loopback");
            Ok(b.finish(if *interrupt { LOOPBACK_INT } else { LOOPBACK }, None))
        }
        DemoParams::Fir { h, q, x } => {
            if h.is_empty() || h.len() > 255 {
                return Err(param("FIR needs 1..255 taps"));
            }
            if x.is_empty() || x.len() > MAX_BLOCK {
                return Err(param(format!("FIR input must have 1..{MAX_BLOCK} samples")));
            }
            if *q > 15 {
                return Err(param("FIR shift must be 0..15"));
            }
            let mut rev = h.clone();
            rev.reverse();
            let mut b = Builder::new("FIR filter");
            b.equ("NTAPS", h.len() as i64)
                .equ("NSAMP", x.len() as i64)
                .equ("QSH", *q)
                .equ("QRND", if *q == 0 { 0 } else { 1i64 << (q - 1) })
                .equ("QRPT", q.saturating_sub(1))
                .equ("XIN", IN_BUF)
                .equ("YOUT", OUT_BUF)
                .equ("DLINE", DELAY_LINE)
                .equ("COEF", PROG_TABLE)
                .table(Space::Prog, PROG_TABLE, words(&rev))
                .table(Space::Data, IN_BUF, words(x));
            Ok(b.finish(FIR, Some((OUT_BUF, x.len()))))
        }
        DemoParams::Iir { coeffs, x } => {
            if x.is_empty() || x.len() > MAX_BLOCK {
                return Err(param(format!("IIR input must have 1..{MAX_BLOCK} samples")));
            }
            let mut b = Builder::new("IIR biquad");
            b.equ("NSAMP", x.len() as i64)
                .equ("XIN", IN_BUF)
                .equ("YOUT", OUT_BUF)
                .equ("COEF", PROG_TABLE)
                .table(Space::Prog, PROG_TABLE, words(&coeffs.table()))
                .table(Space::Data, IN_BUF, words(x));
            Ok(b.finish(IIR, Some((OUT_BUF, x.len()))))
        }
        DemoParams::Fft { x } => {
            let n = x.len();
            if !(8..=1024).contains(&n) || !n.is_power_of_two() {
                return Err(param("FFT size must be a power of two in 8..1024"));
            }
            let flat = |v: &[(i16, i16)]| v.iter().flat_map(|&(r, i)| [r as u16, i as u16]).collect::<Vec<u16>>();
            let mut b = Builder::new("FFT");
            b.equ("NPTS", n as i64)
                .equ("NHALF", n as i64 / 2)
                .equ("LOG2N", n.trailing_zeros())
                .equ("XIN", OUT_BUF)
                .equ("BUF", IN_BUF)
                .equ("TW", FFT_TWIDDLES)
                .table(Space::Data, OUT_BUF, flat(x))
                .table(Space::Data, FFT_TWIDDLES, flat(&fft_twiddles(n)));
            Ok(b.finish(FFT, Some((IN_BUF, 2 * n))))
        }
        DemoParams::LpcSynth { frames, seed, mode } => {
            if frames.frames.is_empty() || frames.frame_len == 0 || frames.frame_len > 0x10000 {
                return Err(param("LPC synthesis needs at least one frame and a frame length of 1..65536"));
            }
            let records: Vec<u16> = frames.frames.iter().flat_map(|f| f.record()).collect();
            if records.len() > 0x10000 - PROG_TABLE as usize || frames.frames.len() > 0x10000 {
                return Err(param("too many frames for program memory"));
            }
            if *mode == LpcMode::Block && frames.sample_count() > MAX_LPC_OUT {
                return Err(param(format!("block synthesis is limited to {MAX_LPC_OUT} samples")));
            }
            let mut b = Builder::new("LPC synthesis");
            b.equ("NFRM", frames.frames.len() as i64)
                .equ("FLEN", frames.frame_len as i64)
                .equ("SEED", super::lfsr_seed(*seed))
                .equ("FRAMES", PROG_TABLE)
                .equ("CUR", LPC_CUR)
                .equ("YOUT", IN_BUF)
                .table(Space::Prog, PROG_TABLE, records);
            Ok(match mode {
                LpcMode::Block => b.finish(LPC_BLOCK, Some((IN_BUF, frames.sample_count()))),
                LpcMode::Stream => b.finish(LPC_STREAM, None),
            })
        }
    }
}

#[derive(Debug)]
pub struct DemoRun {
    pub board: Board,
    /// Totals over the whole run.
    pub report: RunReport,
    /// The data-memory result, or every DAC code for streaming demos.
    pub output: Vec<i16>,
    /// Cycle counter each time the output store was about to execute.
    pub store_cycles: Vec<u64>,
}

impl Demo {
    pub fn assemble(&self) -> Result<(ObjectImage, Option<u16>), DemoError> {
        let out = assemble(&self.source, &AsmOptions::default());
        if out.error_count() > 0 {
            return Err(DemoError::Asm(out.diagnostics.iter().map(|d| d.to_string()).collect()));
        }
        let store = out.symbols.get(OUTPUT_LABEL).map(|s| s.value);
        Ok((out.object.expect("object present without errors"), store))
    }
}

/// Assemble, load and run a demo until it idles or `max_cycles` elapse.
/// `input` feeds the ADC. Programs that produce a data buffer must reach
/// their final IDLE; streaming programs may also stop on the cycle limit.
pub fn run_demo(
    demo: &Demo,
    config: BoardConfig,
    input: Option<Vec<f64>>,
    max_cycles: u64,
) -> Result<DemoRun, DemoError> {
    let (image, store) = demo.assemble()?;
    let mut board = Board::new(config)?;
    board.load(&image, None);
    board.cpu.pc = image.entry;
    if let Some(samples) = input {
        board.hw.codec.set_samples(samples);
    }
    let start_samples = board.hw.codec.samples_produced();
    let mut store_cycles = Vec::new();
    let mut instructions = 0;
    let halt = loop {
        let left = max_cycles.saturating_sub(board.cpu.cycles);
        let mut at_store = |pc: u16| Some(pc) == store;
        let r = board.run(Some(left), Some(&mut at_store));
        instructions += r.instructions;
        match r.halt_reason {
            HaltReason::Breakpoint(_) => {
                store_cycles.push(board.cpu.cycles);
                board.step();
                instructions += 1;
            }
            other => break other,
        }
    };
    let report = RunReport {
        cycles_run: board.cpu.cycles,
        samples_processed: board.hw.codec.samples_produced() - start_samples,
        instructions,
        halt_reason: halt,
    };
    let output = match demo.output {
        Some((addr, len)) => {
            if halt != HaltReason::Idle {
                return Err(DemoError::Halt(halt));
            }
            let data = board.memory(Space::Data);
            data[addr as usize..addr as usize + len].iter().map(|&w| w as i16).collect()
        }
        None => {
            if !matches!(halt, HaltReason::Idle | HaltReason::CycleLimit) {
                return Err(DemoError::Halt(halt));
            }
            board.hw.codec.output().to_vec()
        }
    };
    Ok(DemoRun { board, report, output, store_cycles })
}
