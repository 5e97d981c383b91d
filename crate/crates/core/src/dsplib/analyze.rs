use thiserror::Error;

use super::{q15, FrameSet, LpcFrame, LPC_ORDER};

pub const PITCH_MIN: usize = 50;
pub const PITCH_MAX: usize = 400;
const VOICING_THRESHOLD: f64 = 0.3;
const K_LIMIT: f64 = 0.9995;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalyzeOptions {
    pub frame_len: usize,
    pub hop: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions { frame_len: super::DEFAULT_FRAME_LEN, hop: super::DEFAULT_FRAME_LEN }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyzeError {
    #[error("need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("frame length and hop must be positive")]
    BadOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Levinson {
    pub a: Vec<f64>,
    pub k: Vec<f64>,
    /// Prediction error after each order, `err[0] = r[0]`.
    pub err: Vec<f64>,
}

/// Levinson-Durbin on r[0..=p]. Reflection coefficients are clamped to
/// |k| <= 0.9995. Predictor sign: x[n] ~ sum a_i x[n-i].
pub fn levinson(r: &[f64]) -> Levinson {
    let p = r.len() - 1;
    let mut a = vec![0.0; p];
    let mut k = Vec::with_capacity(p);
    let mut err = vec![r[0]];
    let mut e = r[0];
    for i in 0..p {
        if e <= 0.0 {
            k.push(0.0);
            err.push(e);
            continue;
        }
        let acc = r[i + 1] - (0..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let ki = (acc / e).clamp(-K_LIMIT, K_LIMIT);
        let prev = a.clone();
        a[i] = ki;
        for j in 0..i {
            a[j] = prev[j] - ki * prev[i - 1 - j];
        }
        e *= 1.0 - ki * ki;
        k.push(ki);
        err.push(e);
    }
    Levinson { a, k, err }
}

fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n).map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()).collect()
}

/// Best lag in 50..=400 by normalized cross-correlation of the frame with
/// the signal `lag` samples later. Ties go to the shorter lag.
fn pitch(samples: &[f64], start: usize, len: usize) -> (usize, f64) {
    let at = |i: usize| samples.get(i).copied().unwrap_or(0.0);
    let mut best = (0, 0.0);
    for lag in PITCH_MIN..=PITCH_MAX {
        let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
        for n in start..start + len {
            let (x, y) = (at(n), at(n + lag));
            xy += x * y;
            xx += x * x;
            yy += y * y;
        }
        if xx > 0.0 && yy > 0.0 {
            let c = xy / (xx * yy).sqrt();
            if c > best.1 {
                best = (lag, c);
            }
        }
    }
    best
}

/// Quantize to Q13, shrinking the pole radius until every coefficient fits.
fn quantize_coeffs(a: &[f64]) -> [i16; LPC_ORDER] {
    let mut a = a.to_vec();
    while a.iter().any(|v| (v * 8192.0).round().abs() > 32767.0) {
        let mut g = 1.0;
        for v in a.iter_mut() {
            g *= 0.95;
            *v *= g;
        }
    }
    let mut out = [0i16; LPC_ORDER];
    for (d, v) in out.iter_mut().zip(&a) {
        *d = (v * 8192.0).round() as i16;
    }
    out
}

fn analyze_frame(samples: &[f64], start: usize, len: usize, window: &[f64]) -> LpcFrame {
    let x: Vec<f64> = (0..len).map(|i| samples[start + i] * window[i]).collect();
    let norm: f64 = window.iter().map(|w| w * w).sum();
    let r: Vec<f64> = (0..=LPC_ORDER).map(|lag| (lag..len).map(|n| x[n] * x[n - lag]).sum::<f64>() / norm).collect();
    if r[0] <= 0.0 {
        return LpcFrame::default();
    }
    let lev = levinson(&r);
    let e = lev.err[LPC_ORDER].max(0.0);
    let (lag, score) = pitch(samples, start, len);
    let voiced = score > VOICING_THRESHOLD;
    LpcFrame {
        voiced,
        pitch: if voiced { lag as u16 } else { 0 },
        gain: q15(e.sqrt()).max(0),
        a: quantize_coeffs(&lev.a),
    }
}

/// Autocorrelation LPC analysis, order 10, one frame per hop.
pub fn lpc_analyze(samples: &[f64], opts: &AnalyzeOptions) -> Result<FrameSet, AnalyzeError> {
    if opts.frame_len == 0 || opts.hop == 0 {
        return Err(AnalyzeError::BadOptions);
    }
    if samples.len() < opts.frame_len {
        return Err(AnalyzeError::TooShort { needed: opts.frame_len, got: samples.len() });
    }
    let count = (samples.len() - opts.frame_len) / opts.hop + 1;
    let window = hamming(opts.frame_len);
    let frames = (0..count).map(|f| analyze_frame(samples, f * opts.hop, opts.frame_len, &window)).collect();
    Ok(FrameSet { frame_len: opts.hop, frames })
}
