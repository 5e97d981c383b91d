//! ADDA2 acquisition module: 12-bit ADC/DAC pair on a shared sample clock,
//! attached to the DSP I/O space.
//!
//! Port map:
//!
//! | port | dir | meaning |
//! |------|-----|---------|
//! | 0 | in  | ADC latch, sign-extended 12-bit code; clears ready |
//! | 1 | out | DAC register, low 12 bits used |
//! | 2 | in  | status: bit0 ready, bit1 DAC ready (always 1), bit2 overrun (cleared by the read), bits 4-6 digital inputs |
//! | 3 | out | control: bit0 interrupt mode, bits 1-3 gain code, bit4 running |
//!
//! Gain codes 0..5 select 0.5, 1.0, ..., 3.0.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use thiserror::Error;

pub const PORT_ADC: u8 = 0;
pub const PORT_DAC: u8 = 1;
pub const PORT_STATUS: u8 = 2;
pub const PORT_CONTROL: u8 = 3;

pub const STATUS_READY: u16 = 0x01;
pub const STATUS_DAC_READY: u16 = 0x02;
pub const STATUS_OVERRUN: u16 = 0x04;

pub const CTRL_INTERRUPT: u16 = 0x01;
pub const CTRL_RUN: u16 = 0x10;

pub const GAINS: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

/// How many DAC samples `dac_tail` keeps.
pub const DAC_HISTORY: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodecMode {
    Polling,
    Interrupt,
}

/// What happened during one `tick`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TickEvents {
    pub samples: u32,
    /// INT0 requests raised (one per sample event in interrupt mode).
    pub interrupts: u32,
}

pub type SampleSource = Box<dyn Iterator<Item = f64> + Send>;

/// Quantize a sample in [-1, 1) scaled by `gain` to a 12-bit code.
pub fn quantize(sample: f64, gain: f64) -> i16 {
    let v = (sample * gain * 2048.0).round();
    v.clamp(-2048.0, 2047.0) as i16
}

/// Sign-extend the low 12 bits of a DAC word.
pub fn dac_code(word: u16) -> i16 {
    ((word << 4) as i16) >> 4
}

pub fn cycles_per_sample(clock_mhz: f64, sample_rate: u32) -> u32 {
    ((clock_mhz * 1e6 / 4.0 / sample_rate as f64).round() as u32).max(1)
}

pub struct Codec {
    sample_rate: u32,
    cycles_per_sample: u32,
    pub gain_code: u8,
    pub mode: CodecMode,
    running: bool,
    phase: u32,
    pub adc_latch: u16,
    pub adc_ready: bool,
    pub overrun: bool,
    pub dac: u16,
    pub din: u8,
    din_script: VecDeque<(u64, u8)>,
    elapsed: u64,
    source: Option<SampleSource>,
    output: Vec<i16>,
    history: VecDeque<i16>,
    sample_count: u64,
}

impl fmt::Debug for Codec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Codec")
            .field("sample_rate", &self.sample_rate)
            .field("cycles_per_sample", &self.cycles_per_sample)
            .field("gain_code", &self.gain_code)
            .field("mode", &self.mode)
            .field("running", &self.running)
            .field("phase", &self.phase)
            .field("adc_latch", &self.adc_latch)
            .field("dac", &self.dac)
            .finish_non_exhaustive()
    }
}

impl Default for Codec {
    fn default() -> Self {
        Codec::new(40.0, 25_000)
    }
}

impl Codec {
    pub fn new(clock_mhz: f64, sample_rate: u32) -> Self {
        let cps = cycles_per_sample(clock_mhz, sample_rate);
        Codec {
            sample_rate,
            cycles_per_sample: cps,
            gain_code: 1,
            mode: CodecMode::Polling,
            running: false,
            phase: cps,
            adc_latch: 0,
            adc_ready: false,
            overrun: false,
            dac: 0,
            din: 0,
            din_script: VecDeque::new(),
            elapsed: 0,
            source: None,
            output: Vec::new(),
            history: VecDeque::new(),
            sample_count: 0,
        }
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn cycles_per_sample(&self) -> u32 {
        self.cycles_per_sample
    }

    pub fn running(&self) -> bool {
        self.running
    }

    /// Cycles until the next sample event.
    pub fn phase(&self) -> u32 {
        self.phase
    }

    pub fn gain(&self) -> f64 {
        GAINS[self.gain_code as usize]
    }

    pub fn samples_produced(&self) -> u64 {
        self.sample_count
    }

    pub fn set_source(&mut self, source: SampleSource) {
        self.source = Some(source);
    }

    pub fn set_samples(&mut self, samples: Vec<f64>) {
        self.source = Some(Box::new(samples.into_iter()));
    }

    /// Digital-input changes as (absolute cycle, value) pairs, in order.
    pub fn set_din_script(&mut self, mut events: Vec<(u64, u8)>) {
        events.sort_by_key(|e| e.0);
        self.din_script = events.into();
    }

    /// Every DAC code emitted so far.
    pub fn output(&self) -> &[i16] {
        &self.output
    }

    pub fn take_output(&mut self) -> Vec<i16> {
        std::mem::take(&mut self.output)
    }

    /// The most recent DAC codes, at most `DAC_HISTORY`.
    pub fn dac_tail(&self) -> Vec<i16> {
        self.history.iter().copied().collect()
    }

    pub fn start(&mut self) {
        if !self.running {
            self.running = true;
            self.phase = self.cycles_per_sample;
        }
    }

    pub fn stop(&mut self) {
        self.running = false;
    }

    /// Power-on state, keeping source, script and captured output.
    pub fn reset(&mut self) {
        self.gain_code = 1;
        self.mode = CodecMode::Polling;
        self.running = false;
        self.phase = self.cycles_per_sample;
        self.adc_latch = 0;
        self.adc_ready = false;
        self.overrun = false;
        self.dac = 0;
    }

    pub fn control_word(&self) -> u16 {
        let mut w = (self.gain_code as u16) << 1;
        if self.mode == CodecMode::Interrupt {
            w |= CTRL_INTERRUPT;
        }
        if self.running {
            w |= CTRL_RUN;
        }
        w
    }

    pub fn status_word(&self) -> u16 {
        let mut w = STATUS_DAC_READY | ((self.din as u16 & 7) << 4);
        if self.adc_ready {
            w |= STATUS_READY;
        }
        if self.overrun {
            w |= STATUS_OVERRUN;
        }
        w
    }

    pub fn io_in(&mut self, port: u8) -> u16 {
        match port {
            PORT_ADC => {
                self.adc_ready = false;
                self.adc_latch
            }
            PORT_STATUS => {
                let w = self.status_word();
                self.overrun = false;
                w
            }
            _ => 0,
        }
    }

    pub fn io_out(&mut self, port: u8, word: u16) {
        match port {
            PORT_DAC => self.dac = word,
            PORT_CONTROL => {
                self.mode = if word & CTRL_INTERRUPT != 0 { CodecMode::Interrupt } else { CodecMode::Polling };
                self.gain_code = ((word >> 1) & 7).min(5) as u8;
                if word & CTRL_RUN != 0 {
                    self.start();
                } else {
                    self.stop();
                }
            }
            _ => {}
        }
    }

    /// Advance the sample clock by `cycles`.
    pub fn tick(&mut self, cycles: u64) -> TickEvents {
        let mut events = TickEvents::default();
        let mut left = cycles;
        while self.running && left >= self.phase as u64 {
            left -= self.phase as u64;
            self.advance_clock(self.phase as u64);
            self.phase = self.cycles_per_sample;
            self.sample_event(&mut events);
        }
        if self.running {
            self.phase -= left as u32;
        }
        self.advance_clock(left);
        events
    }

    fn advance_clock(&mut self, cycles: u64) {
        self.elapsed += cycles;
        while let Some(&(at, value)) = self.din_script.front() {
            if at > self.elapsed {
                break;
            }
            self.din = value & 7;
            self.din_script.pop_front();
        }
    }

    fn sample_event(&mut self, events: &mut TickEvents) {
        events.samples += 1;
        self.sample_count += 1;
        let code = dac_code(self.dac);
        self.output.push(code);
        if self.history.len() == DAC_HISTORY {
            self.history.pop_front();
        }
        self.history.push_back(code);

        let next = match self.source.as_mut() {
            Some(src) => src.next(),
            None => Some(0.0),
        };
        let Some(sample) = next else {
            self.running = false;
            return;
        };
        if self.adc_ready {
            self.overrun = true;
        }
        self.adc_latch = quantize(sample, self.gain()) as u16;
        self.adc_ready = true;
        if self.mode == CodecMode::Interrupt {
            events.interrupts += 1;
        }
    }
}

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
    #[error("expected 16-bit mono PCM, found {channels} channel(s), {bits} bits")]
    Format { channels: u16, bits: u16 },
    #[error("sample rate {found} does not match configured {expected}")]
    Rate { expected: u32, found: u32 },
    #[error("line {0}: {1}")]
    Parse(usize, String),
}

/// Read a 16-bit mono PCM WAV as floats in [-1, 1).
pub fn read_wav(path: &Path, expected_rate: u32) -> Result<Vec<f64>, AudioError> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(AudioError::Format { channels: spec.channels, bits: spec.bits_per_sample });
    }
    if spec.sample_rate != expected_rate {
        return Err(AudioError::Rate { expected: expected_rate, found: spec.sample_rate });
    }
    reader.samples::<i16>().map(|s| s.map(|v| v as f64 / 32768.0).map_err(AudioError::from)).collect()
}

/// Write 16-bit mono PCM; each word is a full-scale Q15 sample.
pub fn write_wav(path: &Path, rate: u32, samples: &[i16]) -> Result<(), AudioError> {
    let spec =
        hound::WavSpec { channels: 1, sample_rate: rate, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &s in samples {
        writer.write_sample(s)?;
    }
    writer.finalize()?;
    Ok(())
}

/// DAC codes as Q15 words (12-bit code scaled by 16).
pub fn dac_to_pcm(codes: &[i16]) -> Vec<i16> {
    codes.iter().map(|&c| c << 4).collect()
}

/// One float per line; blank lines and `#` comments skipped.
pub fn parse_csv(text: &str) -> Result<Vec<f64>, AudioError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| AudioError::Parse(i + 1, format!("bad sample '{t}'")))?;
        out.push(v);
    }
    Ok(out)
}

pub fn format_csv(codes: &[i16]) -> String {
    codes.iter().map(|&c| format!("{}\n", c as f64 / 2048.0)).collect()
}

/// Digital-input script: `cycle value` per line, cycle decimal, value hex 0-7.
pub fn parse_din_script(text: &str) -> Result<Vec<(u64, u8)>, AudioError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        let bad = || AudioError::Parse(i + 1, format!("expected 'cycle value', found '{t}'"));
        let mut parts = t.split_whitespace();
        let cycle = parts.next().and_then(|c| c.parse::<u64>().ok()).ok_or_else(bad)?;
        let value = parts.next().and_then(|v| u8::from_str_radix(v, 16).ok()).filter(|v| *v < 8).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        out.push((cycle, value));
    }
    Ok(out)
}
