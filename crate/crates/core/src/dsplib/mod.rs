//! Applications library: fixed-point golden models, LPC analysis and the
//! assembly demo programs that run on the board.
//!
//! Signals are Q15, filter and LPC coefficients Q13. Accumulation is 32-bit
//! two's complement with wrap-around, rounding is half-up, and saturation
//! happens once per output sample, exactly as the assembly does it.

mod analyze;
mod demo;

use std::fmt::Write as _;

use thiserror::Error;

pub use analyze::{levinson, lpc_analyze, AnalyzeError, AnalyzeOptions, Levinson, PITCH_MAX, PITCH_MIN};
pub use demo::{build_demo, run_demo, Demo, DemoError, DemoParams, DemoRun, LpcMode, OUTPUT_LABEL};

pub const LPC_ORDER: usize = 10;
pub const DEFAULT_FRAME_LEN: usize = 200;
pub const LFSR_TAPS: u16 = 0xB400;
/// Substituted for a zero seed, which would lock the register.
pub const LFSR_DEFAULT_SEED: u16 = 0xACE1;

pub fn saturate16(v: i32) -> i16 {
    v.clamp(i16::MIN as i32, i16::MAX as i32) as i16
}

fn round_shift(acc: i32, q: u32) -> i32 {
    if q == 0 {
        acc
    } else {
        acc.wrapping_add(1 << (q - 1)) >> q
    }
}

/// y[n] = sat16(round(sum h[k] x[n-k] / 2^q)).
pub fn golden_fir(x: &[i16], h: &[i16], q: u32) -> Vec<i16> {
    assert!(q <= 15, "shift out of range");
    (0..x.len())
        .map(|n| {
            let acc = h
                .iter()
                .enumerate()
                .take(n + 1)
                .fold(0i32, |acc, (k, &c)| acc.wrapping_add(c as i32 * x[n - k] as i32));
            saturate16(round_shift(acc, q))
        })
        .collect()
}

/// Biquad coefficients, Q13. The denominator is 1 + a1 z^-1 + a2 z^-2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Biquad {
    pub b0: i16,
    pub b1: i16,
    pub b2: i16,
    pub a1: i16,
    pub a2: i16,
}

impl Biquad {
    pub const IDENTITY: Biquad = Biquad { b0: 8192, b1: 0, b2: 0, a1: 0, a2: 0 };

    /// Program-memory order used by the assembly: b0 b1 b2 -a1 -a2.
    pub fn table(&self) -> [i16; 5] {
        [self.b0, self.b1, self.b2, self.a1.wrapping_neg(), self.a2.wrapping_neg()]
    }
}

/// Direct form I biquad, Q13, one round and saturate per output.
pub fn golden_iir_biquad(x: &[i16], c: &Biquad) -> Vec<i16> {
    let t = c.table();
    let (mut x1, mut x2, mut y1, mut y2) = (0i16, 0i16, 0i16, 0i16);
    x.iter()
        .map(|&x0| {
            let acc =
                [x0, x1, x2, y1, y2].iter().zip(t).fold(0i32, |acc, (&s, k)| acc.wrapping_add(s as i32 * k as i32));
            let y = saturate16(round_shift(acc, 13));
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y;
            y
        })
        .collect()
}

pub fn q15(v: f64) -> i16 {
    (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Per-stage DIT twiddles (cos, -sin) in Q15, stage by stage: N-1 pairs.
pub fn fft_twiddles(n: usize) -> Vec<(i16, i16)> {
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    let mut span = 2;
    while span <= n {
        for j in 0..span / 2 {
            let th = 2.0 * std::f64::consts::PI * j as f64 / span as f64;
            out.push((q15(th.cos()), q15(-th.sin())));
        }
        span *= 2;
    }
    out
}

pub fn bit_reverse(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FftResult {
    pub x: Vec<(i16, i16)>,
    /// The true DFT is `x * 2^scale`.
    pub scale: u32,
}

/// Radix-2 DIT FFT in Q15 with a rounded halving in every butterfly.
pub fn golden_fft_q15(x: &[(i16, i16)]) -> FftResult {
    let n = x.len();
    assert!(n >= 2 && n.is_power_of_two(), "FFT size must be a power of two");
    let bits = n.trailing_zeros();
    let mut v: Vec<(i16, i16)> = (0..n).map(|i| x[bit_reverse(i, bits)]).collect();
    let tw = fft_twiddles(n);
    let mut base = 0;
    let mut span = 2;
    while span <= n {
        let half = span / 2;
        for j in 0..half {
            let (wr, wi) = tw[base + j];
            for g in (0..n).step_by(span) {
                let (ar, ai) = v[g + j];
                let (br, bi) = v[g + j + half];
                let mul = |a: i16, b: i16| a as i32 * b as i32;
                let tr = mul(wr, br).wrapping_sub(mul(wi, bi));
                let ti = mul(wi, br).wrapping_add(mul(wr, bi));
                let fly = |a: i16, t: i32| {
                    let acc_a = ((a as i32) << 15).wrapping_add(t).wrapping_add(1 << 15);
                    let acc_b = ((a as i32) << 16).wrapping_sub(acc_a).wrapping_add(1 << 16);
                    ((acc_a >> 16) as i16, (acc_b >> 16) as i16)
                };
                let (pr, qr) = fly(ar, tr);
                let (pi, qi) = fly(ai, ti);
                v[g + j] = (pr, pi);
                v[g + j + half] = (qr, qi);
            }
        }
        base += half;
        span *= 2;
    }
    FftResult { x: v, scale: bits }
}

/// One step of the 16-bit Fibonacci register: the parity of the tapped
/// bits is shifted in at the bottom and returned.
pub fn lfsr_step(state: u16) -> (u16, bool) {
    let bit = (state & LFSR_TAPS).count_ones() & 1 == 1;
    ((state << 1) | bit as u16, bit)
}

pub fn lfsr_seed(seed: u16) -> u16 {
    if seed == 0 {
        LFSR_DEFAULT_SEED
    } else {
        seed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LpcFrame {
    pub voiced: bool,
    /// Samples between pulses; 0 when unvoiced.
    pub pitch: u16,
    /// Q15.
    pub gain: i16,
    /// Q13 predictor coefficients: y[n] = e[n] g + sum a_i y[n-i].
    pub a: [i16; LPC_ORDER],
}

impl LpcFrame {
    /// The 13-word program-memory record read by the synthesis kernel.
    pub fn record(&self) -> [u16; 13] {
        let mut r = [0u16; 13];
        r[0] = self.voiced as u16;
        r[1] = self.pitch;
        r[2] = self.gain as u16;
        for (d, &a) in r[3..].iter_mut().zip(&self.a) {
            *d = a as u16;
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSet {
    /// Samples synthesized per frame.
    pub frame_len: usize,
    pub frames: Vec<LpcFrame>,
}

impl FrameSet {
    pub fn sample_count(&self) -> usize {
        self.frame_len * self.frames.len()
    }
}

/// Pulse or noise excitation through the order-10 all-pole filter.
pub fn golden_lpc_synth(set: &FrameSet, seed: u16) -> Vec<i16> {
    let mut hist = [0i16; LPC_ORDER];
    let mut cnt: u16 = 0;
    let mut lfsr = lfsr_seed(seed);
    let mut out = Vec::with_capacity(set.sample_count());
    for f in &set.frames {
        for _ in 0..set.frame_len {
            let e: i32 = if f.voiced {
                if cnt == 0 {
                    cnt = f.pitch.wrapping_sub(1);
                    1
                } else {
                    cnt -= 1;
                    0
                }
            } else {
                cnt = 0;
                let (next, bit) = lfsr_step(lfsr);
                lfsr = next;
                if bit {
                    1
                } else {
                    -1
                }
            };
            let mut acc = e.wrapping_mul((f.gain as i32) << 13);
            for (a, y) in f.a.iter().zip(&hist) {
                acc = acc.wrapping_add(*a as i32 * *y as i32);
            }
            let y = saturate16(round_shift(acc, 13));
            hist.rotate_right(1);
            hist[0] = y;
            out.push(y);
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error("expected {expected} frames, found {found}")]
    Count { expected: usize, found: usize },
}

/// `LPC10 <frame_len> <count>` then `V|U pitch gain a1 .. a10` per frame.
pub fn format_frames(set: &FrameSet) -> String {
    let mut s = format!("LPC10 {} {}\n", set.frame_len, set.frames.len());
    for f in &set.frames {
        let _ = write!(s, "{} {} {:04X}", if f.voiced { 'V' } else { 'U' }, f.pitch, f.gain as u16);
        for a in f.a {
            let _ = write!(s, " {:04X}", a as u16);
        }
        s.push('\n');
    }
    s
}

pub fn parse_frames(text: &str) -> Result<FrameSet, FrameError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| FrameError::Parse(1, "empty frame file".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || FrameError::Parse(1, format!("bad header '{header}'"));
    if h.len() != 3 || h[0] != "LPC10" {
        return Err(bad_header());
    }
    let frame_len: usize = h[1].parse().map_err(|_| bad_header())?;
    let count: usize = h[2].parse().map_err(|_| bad_header())?;
    if frame_len == 0 {
        return Err(bad_header());
    }
    let mut frames = Vec::with_capacity(count);
    for (i, line) in lines {
        let err = |m: &str| FrameError::Parse(i + 1, m.to_string());
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 + LPC_ORDER {
            return Err(err("expected 13 fields"));
        }
        let voiced = match t[0] {
            "V" => true,
            "U" => false,
            _ => return Err(err("first field must be V or U")),
        };
        let pitch: u16 = t[1].parse().map_err(|_| err("bad pitch"))?;
        let hex = |s: &str| u16::from_str_radix(s, 16).map_err(|_| err("bad hex word"));
        let gain = hex(t[2])? as i16;
        let mut a = [0i16; LPC_ORDER];
        for (d, s) in a.iter_mut().zip(&t[3..]) {
            *d = hex(s)? as i16;
        }
        frames.push(LpcFrame { voiced, pitch, gain, a });
    }
    if frames.len() != count {
        return Err(FrameError::Count { expected: count, found: frames.len() });
    }
    Ok(FrameSet { frame_len, frames })
}
