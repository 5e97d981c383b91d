//! One checker per acceptance criterion. Each returns a short summary on
//! success and the first failure otherwise. Shared by `acceptance` and the
//! per-area test targets.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use dsp25::adda2::{cycles_per_sample, quantize, write_wav, CTRL_RUN, PORT_CONTROL};
use dsp25::asm::{assemble, AsmOptions};
use dsp25::board::{Board, BoardConfig, HaltReason};
use dsp25::dsplib::{
    build_demo, golden_fft_q15, golden_fir, golden_iir_biquad, golden_lpc_synth, parse_frames, run_demo, Biquad,
    DemoParams, FrameSet, LpcFrame, LpcMode,
};
use dsp25::isa::{decode, encode, Instruction, Mnemonic};
use dsp25::object::{
    convert_coff, read_object, write_object, ObjectError, ObjectImage, Record, Space, Symbol, SymbolSpace,
};

use super::lattice::lattice;
use super::vectors::{check, VECTORS};

pub type Outcome = Result<String, String>;

pub const ROUNDTRIP_MIN_ENCODINGS: usize = 20_000;
pub const ROUNDTRIP_MAX_TIME: Duration = Duration::from_secs(10);
pub const RANDOM_IMAGES: usize = 1000;
pub const CODEC_RUN_CYCLES: u64 = 1_000_000;
pub const CODEC_EXPECTED_SAMPLES: u64 = 2500;
pub const GOLDEN_CASES: usize = 100;
pub const FFT_MIN_SNR_DB: f64 = 55.0;
pub const LPC_BUDGET_CYCLES: u64 = 400;
pub const VOICE_MAX_TIME: Duration = Duration::from_secs(60);

pub const DEMO_SOURCE: &str = "        LACK 18\n        SACL 20h\n        B $\n";
pub const DEMO_WORDS: [u16; 4] = [0xCA12, 0x6020, 0xFF80, 0x0002];

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dsp25")
}

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn dsp25(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin()).args(args).current_dir(cwd).output().expect("spawn dsp25")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn roundtrip() -> Outcome {
    let t0 = Instant::now();
    let mut distinct = HashSet::new();
    for instr in lattice() {
        let words = encode(&instr).map_err(|e| format!("{instr:?}: {e}"))?;
        let mut rest = words[1..].iter().copied();
        let back = decode(words[0], || rest.next().unwrap_or(0)).map_err(|e| format!("{instr:?}: {e}"))?;
        ensure(back == instr, || format!("{instr:?} decoded as {back:?}"))?;
        distinct.insert(words);
    }
    // every legal first word re-encodes to itself
    let mut legal = 0usize;
    for first in 0..=u16::MAX {
        if let Ok(instr) = decode(first, || 0x1234) {
            legal += 1;
            let words = encode(&instr).map_err(|e| format!("{first:04X}: {e}"))?;
            ensure(words[0] == first, || format!("{first:04X} re-encodes as {:04X}", words[0]))?;
        }
    }
    let elapsed = t0.elapsed();
    ensure(distinct.len() >= ROUNDTRIP_MIN_ENCODINGS, || format!("only {} distinct encodings", distinct.len()))?;
    ensure(elapsed < ROUNDTRIP_MAX_TIME, || format!("took {elapsed:?}"))?;
    Ok(format!("{} distinct encodings, {legal} legal first words, {:.2}s", distinct.len(), elapsed.as_secs_f64()))
}

pub fn semantics() -> Outcome {
    let mut per: std::collections::BTreeMap<&str, usize> = Default::default();
    for v in VECTORS {
        check(v).map_err(|e| format!("{} `{}`: {e}", v.0, v.1))?;
        *per.entry(v.0).or_default() += 1;
    }
    for name in Mnemonic::ALL.iter().map(|m| m.name()) {
        let n = per.get(name).copied().unwrap_or(0);
        ensure(n >= 3, || format!("{name} has {n} vectors"))?;
    }
    Ok(format!("{} vectors over {} mnemonics", VECTORS.len(), per.len()))
}

pub fn assembler() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("demo.asm"), DEMO_SOURCE).map_err(|e| e.to_string())?;
    let out = dsp25(&["asm", "demo.asm", "-o", "demo.dpx"], dir.path());
    ensure(out.status.success(), || format!("asm failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    let text = std::fs::read_to_string(dir.path().join("demo.dpx")).map_err(|e| e.to_string())?;
    let img = read_object(&text).map_err(|e| e.to_string())?;
    let words: Vec<u16> = img.records.iter().filter(|r| r.space == Space::Prog).flat_map(|r| r.words.clone()).collect();
    ensure(words == DEMO_WORDS, || format!("demo assembled to {words:04X?}"))?;

    let bad = "        LACK 1\n        SACL 20h\nLOOP    B NOWHERE\n        B LOOP\n";
    std::fs::write(dir.path().join("bad.asm"), bad).map_err(|e| e.to_string())?;
    let out = dsp25(&["asm", "bad.asm"], dir.path());
    let stderr = String::from_utf8_lossy(&out.stderr);
    ensure(out.status.code() == Some(3), || format!("undefined symbol exit {:?}", out.status.code()))?;
    ensure(stderr.contains("line 3:") && stderr.contains("NOWHERE"), || format!("stderr: {stderr}"))?;
    ensure(!dir.path().join("bad.dpx").exists(), || "object written despite errors".into())?;
    Ok("demo words match, undefined symbol reported at line 3 with exit 3".into())
}

pub fn random_image(rng: &mut StdRng) -> ObjectImage {
    let mut img = ObjectImage::new();
    img.entry = rng.gen();
    for space in [Space::Prog, Space::Data] {
        let mut addr: u32 = rng.gen_range(0..0x100);
        for _ in 0..rng.gen_range(0..5) {
            let len = rng.gen_range(1..40u32);
            if addr + len > 0x10000 {
                break;
            }
            let words = (0..len).map(|_| rng.gen()).collect();
            img.records.push(Record { space, start: addr as u16, words });
            addr += len + rng.gen_range(0..0x2000);
        }
    }
    for i in 0..rng.gen_range(0..4) {
        let space = [SymbolSpace::Prog, SymbolSpace::Data, SymbolSpace::Abs][rng.gen_range(0..3)];
        img.symbols.push(Symbol { name: format!("SYM{i}_{}", rng.gen::<u8>()), space, value: rng.gen() });
    }
    img
}

/// Minimal absolute COFF: one `.text` section holding `data` at `paddr`.
pub fn coff_fixture(v1: bool, paddr: u32, data: &[u8], nreloc: u32) -> Vec<u8> {
    let (header, section) = if v1 { (22, 48) } else { (20, 40) };
    let mut f = Vec::new();
    if v1 {
        f.extend(0x00C1u16.to_le_bytes());
    } else {
        f.extend(0x0092u16.to_le_bytes());
    }
    f.extend(1u16.to_le_bytes()); // sections
    f.extend(0u32.to_le_bytes()); // timestamp
    f.extend(0u32.to_le_bytes()); // symbol table
    f.extend(0u32.to_le_bytes()); // symbols
    f.extend(0u16.to_le_bytes()); // optional header
    f.extend(0x0003u16.to_le_bytes()); // flags: relocs stripped, executable
    if v1 {
        f.extend(0x0092u16.to_le_bytes());
    }
    assert_eq!(f.len(), header);
    let data_ptr = (header + section) as u32;
    let mut h = Vec::new();
    h.extend(b".text\0\0\0");
    h.extend(paddr.to_le_bytes());
    h.extend(paddr.to_le_bytes());
    h.extend((data.len() as u32).to_le_bytes());
    h.extend(data_ptr.to_le_bytes());
    h.extend(0u32.to_le_bytes()); // relocation pointer
    h.extend(0u32.to_le_bytes()); // line pointer
    if v1 {
        h.extend(nreloc.to_le_bytes());
        h.extend(0u32.to_le_bytes());
        h.extend(0x0020u32.to_le_bytes());
        h.extend(0u16.to_le_bytes());
        h.extend(0u16.to_le_bytes());
    } else {
        h.extend((nreloc as u16).to_le_bytes());
        h.extend(0u16.to_le_bytes());
        h.extend(0x0020u16.to_le_bytes());
        h.push(0);
        h.push(0);
    }
    assert_eq!(h.len(), section);
    f.extend(h);
    f.extend(data);
    f
}

pub fn object_formats() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x0BEC7);
    for i in 0..RANDOM_IMAGES {
        let img = random_image(&mut rng);
        let text = write_object(&img).map_err(|e| format!("image {i}: {e}"))?;
        let back = read_object(&text).map_err(|e| format!("image {i}: {e}"))?;
        ensure(back == img, || format!("image {i} changed in round trip"))?;
    }
    for v1 in [false, true] {
        let img = convert_coff(&coff_fixture(v1, 0x0100, &[0x00, 0x55], 0)).map_err(|e| e.to_string())?;
        let expect = vec![Record { space: Space::Prog, start: 0x0100, words: vec![0x5500] }];
        ensure(img.records == expect, || format!("fixture (v1={v1}) gave {:?}", img.records))?;
        let err = convert_coff(&coff_fixture(v1, 0x0100, &[0x00, 0x55], 2));
        ensure(matches!(err, Err(ObjectError::UnsupportedRelocation(_))), || format!("relocatable accepted: {err:?}"))?;
    }
    Ok(format!("{RANDOM_IMAGES} images round-trip, COFF v0/v1 fixture converts, relocatable rejected"))
}

pub fn board_paging() -> Outcome {
    let mut board = Board::default();
    for page in 0..32u8 {
        board.write_page_port(page);
        let space = if page & 0x10 != 0 { Space::Data } else { Space::Prog };
        for offset in 0..4096u16 {
            let addr = ((page as u16 & 0x0F) << 12) | offset;
            let value = (addr ^ (page as u16) << 11).wrapping_mul(0x9E37).wrapping_add(offset);
            // data word 4 is IMR, six bits wide
            let stored = |v: u16| if space == Space::Data && addr == 4 { v & 0x3F } else { v };
            board.host_window_write(offset, value);
            ensure(board.peek(space, addr) == stored(value), || format!("page {page:02X} offset {offset:03X} write"))?;
            board.poke(space, addr, !value);
            ensure(board.host_window_read(offset) == stored(!value), || {
                format!("page {page:02X} offset {offset:03X} read")
            })?;
        }
    }
    for w in 0..=2u8 {
        let n = 1000u64;
        let cycles = single_word_cost(w, n as usize)?;
        ensure(cycles == n * (1 + w as u64), || format!("W={w}: {n} instructions took {cycles} cycles"))?;
    }
    let bad = Board::new(BoardConfig { wait_states: 3, ..Default::default() });
    ensure(bad.is_err(), || "wait_states 3 accepted".into())?;
    Ok("32 pages x 4096 words match, N x (1+W) for W=0,1,2".into())
}

const SINGLE_WORD: &[&str] = &[
    "NOP",
    "ZAC",
    "LACK 7",
    "ADDK 3",
    "SUBK 2",
    "LARK AR3,9",
    "MPYK -5",
    "SFL",
    "SFR",
    "ABS",
    "NEG",
    "CMPL",
    "PAC",
    "APAC",
    "SPAC",
    "ROVM",
    "SOVM",
    "SSXM",
    "RSXM",
    "LDPK 6",
    "SPM 1",
    "SPM 0",
    "LARP AR2",
    "MAR *+",
    "DINT",
    "CNFD",
];

/// Cycles taken by `n` random single-word, non-memory instructions.
pub fn single_word_cost(wait_states: u8, n: usize) -> Result<u64, String> {
    let mut rng = StdRng::seed_from_u64(wait_states as u64);
    let mut src = String::new();
    for _ in 0..n {
        src.push_str("        ");
        src.push_str(SINGLE_WORD[rng.gen_range(0..SINGLE_WORD.len())]);
        src.push('\n');
    }
    src.push_str("        IDLE\n");
    let out = assemble(&src, &AsmOptions::default());
    let obj = out.object.ok_or_else(|| format!("{:?}", out.diagnostics))?;
    let mut board = Board::new(BoardConfig { wait_states, ..Default::default() }).map_err(|e| e.to_string())?;
    board.load(&obj, None);
    board.reset();
    board.cpu.pc = 0;
    let start = board.cpu.cycles;
    for _ in 0..n {
        board.step();
    }
    ensure(board.cpu.pc == n as u16, || format!("pc {:04X} after {n} steps", board.cpu.pc))?;
    Ok(board.cpu.cycles - start)
}

pub fn codec_timing() -> Outcome {
    let cfg = BoardConfig::default();
    let cps = cycles_per_sample(cfg.clock_mhz, cfg.sample_rate) as u64;
    ensure(cps == 400, || format!("cycles per sample {cps}"))?;
    let mut board = Board::new(cfg).map_err(|e| e.to_string())?;
    let nop = encode(&Instruction::new(Mnemonic::Nop)).map_err(|e| e.to_string())?[0];
    board.memory_mut(Space::Prog).fill(nop);
    board.reset();
    board.codec_mut().io_out(PORT_CONTROL, CTRL_RUN | 0x02);
    let mut rng = StdRng::seed_from_u64(400);
    let mut checkpoints = 0;
    while board.cpu.cycles < CODEC_RUN_CYCLES {
        let chunk = rng.gen_range(1..5000).min(CODEC_RUN_CYCLES - board.cpu.cycles);
        board.run(Some(chunk), None);
        let (c, s) = (board.cpu.cycles, board.codec().samples_produced());
        ensure(s == c / cps, || format!("{s} samples after {c} cycles"))?;
        checkpoints += 1;
    }
    let samples = board.codec().samples_produced();
    ensure(board.cpu.cycles == CODEC_RUN_CYCLES, || format!("ran {} cycles", board.cpu.cycles))?;
    ensure(samples == CODEC_EXPECTED_SAMPLES, || format!("{samples} samples"))?;

    let mut rng = StdRng::seed_from_u64(25_000);
    let input: Vec<f64> = (0..500).map(|_| rng.gen_range(-1.2..1.2)).collect();
    let demo = build_demo(&DemoParams::Loopback { interrupt: false }).map_err(|e| e.to_string())?;
    let run = run_demo(&demo, cfg, Some(input.clone()), cps * (input.len() as u64 + 1)).map_err(|e| e.to_string())?;
    let q: Vec<i16> = input.iter().map(|&s| quantize(s, 1.0)).collect();
    ensure(run.output.len() == input.len(), || format!("{} DAC writes for {} samples", run.output.len(), input.len()))?;
    ensure(run.output[0] == 0, || "first DAC word not silent".into())?;
    ensure(run.output[1..] == q[..q.len() - 1], || "loopback differs from quantized input".into())?;
    Ok(format!("{samples} samples in {CODEC_RUN_CYCLES} cycles over {checkpoints} checkpoints, loopback bit-exact"))
}

fn run_block(params: &DemoParams, cfg: BoardConfig) -> Result<dsp25::dsplib::DemoRun, String> {
    let demo = build_demo(params).map_err(|e| e.to_string())?;
    let run = run_demo(&demo, cfg, None, 200_000_000).map_err(|e| e.to_string())?;
    ensure(run.report.halt_reason == HaltReason::Idle, || format!("halted with {:?}", run.report.halt_reason))?;
    Ok(run)
}

/// Between 1 and `max - 1` random words.
fn random_words(rng: &mut StdRng, max: usize) -> Vec<i16> {
    let n = rng.gen_range(1..max);
    (0..n).map(|_| rng.gen()).collect()
}

pub fn random_frames(rng: &mut StdRng, frame_len: usize, count: usize) -> FrameSet {
    let frames = (0..count)
        .map(|_| {
            let mut a = [0i16; 10];
            for v in a.iter_mut() {
                *v = rng.gen();
            }
            LpcFrame { voiced: rng.gen(), pitch: rng.gen_range(1..60), gain: rng.gen(), a }
        })
        .collect();
    FrameSet { frame_len, frames }
}

/// Power ratio of the double-precision DFT (scaled by 1/N) to the error of `out`.
pub fn fft_snr_db(x: &[(i16, i16)], out: &[(i16, i16)]) -> f64 {
    let n = x.len();
    let (mut sig, mut err) = (0.0, 0.0);
    for (k, &(ore, oim)) in out.iter().enumerate() {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, &(xr, xi)) in x.iter().enumerate() {
            let ang = -2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
            let (s, c) = ang.sin_cos();
            re += xr as f64 * c - xi as f64 * s;
            im += xr as f64 * s + xi as f64 * c;
        }
        re /= n as f64;
        im /= n as f64;
        sig += re * re + im * im;
        err += (ore as f64 - re).powi(2) + (oim as f64 - im).powi(2);
    }
    10.0 * (sig / err.max(1e-30)).log10()
}

pub fn golden_equivalence() -> Outcome {
    let cfg = BoardConfig::default();
    let mut rng = StdRng::seed_from_u64(0x60_1DE2);
    for case in 0..GOLDEN_CASES {
        let h = random_words(&mut rng, 33);
        let q = rng.gen_range(0..16);
        let x = random_words(&mut rng, 80);
        let run = run_block(&DemoParams::Fir { h: h.clone(), q, x: x.clone() }, cfg)?;
        ensure(run.output == golden_fir(&x, &h, q), || format!("FIR case {case} differs (h={h:?} q={q})"))?;
    }
    for case in 0..GOLDEN_CASES {
        let c = Biquad { b0: rng.gen(), b1: rng.gen(), b2: rng.gen(), a1: rng.gen(), a2: rng.gen() };
        let x = random_words(&mut rng, 80);
        let run = run_block(&DemoParams::Iir { coeffs: c, x: x.clone() }, cfg)?;
        ensure(run.output == golden_iir_biquad(&x, &c), || format!("IIR case {case} differs ({c:?})"))?;
    }
    let mut worst_snr = f64::INFINITY;
    for case in 0..GOLDEN_CASES {
        let x: Vec<(i16, i16)> = (0..64).map(|_| (rng.gen(), rng.gen())).collect();
        let run = run_block(&DemoParams::Fft { x: x.clone() }, cfg)?;
        let golden = golden_fft_q15(&x);
        let flat: Vec<i16> = golden.x.iter().flat_map(|&(a, b)| [a, b]).collect();
        ensure(run.output == flat, || format!("FFT case {case} differs"))?;
        ensure(golden.scale == 6, || format!("FFT scale {}", golden.scale))?;
        worst_snr = worst_snr.min(fft_snr_db(&x, &golden.x));
    }
    ensure(worst_snr >= FFT_MIN_SNR_DB, || format!("FFT SNR {worst_snr:.1} dB"))?;
    for case in 0..GOLDEN_CASES {
        let frame_len = rng.gen_range(1..40);
        let count = rng.gen_range(1..6);
        let frames = random_frames(&mut rng, frame_len, count);
        let seed: u16 = rng.gen();
        let run = run_block(&DemoParams::LpcSynth { frames: frames.clone(), seed, mode: LpcMode::Block }, cfg)?;
        ensure(run.output == golden_lpc_synth(&frames, seed), || format!("LPC case {case} differs (seed {seed:04X})"))?;
    }
    Ok(format!("{GOLDEN_CASES} cases each bit-identical, worst FFT SNR {worst_snr:.1} dB"))
}

/// Largest cycle count between consecutive output stores.
pub fn lpc_max_interval(frames: &FrameSet, seed: u16) -> Result<u64, String> {
    let cfg = BoardConfig { wait_states: 0, ..Default::default() };
    let run = run_block(&DemoParams::LpcSynth { frames: frames.clone(), seed, mode: LpcMode::Block }, cfg)?;
    ensure(run.store_cycles.len() == frames.sample_count(), || "store count mismatch".into())?;
    Ok(run.store_cycles.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0))
}

pub fn realtime_budget() -> Outcome {
    let mut rng = StdRng::seed_from_u64(10);
    let mut worst = 0;
    for _ in 0..20 {
        let len = rng.gen_range(1..60);
        let frames = random_frames(&mut rng, len, 8);
        worst = worst.max(lpc_max_interval(&frames, rng.gen())?);
    }
    let text =
        std::fs::read_to_string(manifest_dir().join("tests/golden/vowel_a.frames")).map_err(|e| e.to_string())?;
    let vowel = parse_frames(&text).map_err(|e| e.to_string())?;
    worst = worst.max(lpc_max_interval(&vowel, 1)?);
    ensure(worst <= LPC_BUDGET_CYCLES, || format!("{worst} cycles between samples"))?;
    Ok(format!("worst {worst} cycles/sample (budget {LPC_BUDGET_CYCLES})"))
}

pub fn debugger_transcript() -> Outcome {
    let dir = manifest_dir().join("tests/golden");
    let out = dsp25(&["debug", "--script", "session.txt"], &dir);
    ensure(out.status.success(), || {
        format!("debug exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })?;
    let golden = std::fs::read(dir.join("session.out")).map_err(|e| e.to_string())?;
    if out.stdout != golden {
        let got = String::from_utf8_lossy(&out.stdout);
        let want = String::from_utf8_lossy(&golden);
        let line = got
            .lines()
            .zip(want.lines())
            .position(|(a, b)| a != b)
            .unwrap_or(got.lines().count().min(want.lines().count()));
        return Err(format!("transcript differs at line {}", line + 1));
    }
    Ok(format!("{} transcript lines match", golden.iter().filter(|b| **b == b'\n').count()))
}

/// Golden path for the voice demo: frames through the integer model, then
/// the 12-bit DAC and back to 16-bit PCM.
pub fn voice_golden_wav(frames: &FrameSet, seed: u16, path: &Path) -> Result<(), String> {
    let pcm: Vec<i16> = golden_lpc_synth(frames, seed).iter().map(|&y| (y >> 4) << 4).collect();
    write_wav(path, 25_000, &pcm).map_err(|e| e.to_string())
}

pub fn voice_demo() -> Outcome {
    let t0 = Instant::now();
    let wav = manifest_dir().join("assets/vowel_a.wav");
    let wav = wav.to_str().ok_or("non-UTF-8 path")?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dsp25(&["analyze", wav, "-o", "a.frames"], dir.path());
    ensure(out.status.success(), || format!("analyze: {}", String::from_utf8_lossy(&out.stderr)))?;
    let mut runs = Vec::new();
    for name in ["s1.wav", "s2.wav"] {
        let out = dsp25(&["synth", wav, "-o", name, "--frames", "s.frames"], dir.path());
        ensure(out.status.success(), || format!("synth: {}", String::from_utf8_lossy(&out.stderr)))?;
        runs.push(std::fs::read(dir.path().join(name)).map_err(|e| e.to_string())?);
    }
    let elapsed = t0.elapsed();
    ensure(runs[0] == runs[1], || "synth output differs between runs".into())?;
    let analyzed = std::fs::read(dir.path().join("a.frames")).map_err(|e| e.to_string())?;
    let used = std::fs::read(dir.path().join("s.frames")).map_err(|e| e.to_string())?;
    ensure(analyzed == used, || "synth frames differ from analyze output".into())?;
    let frames = parse_frames(&String::from_utf8_lossy(&analyzed)).map_err(|e| e.to_string())?;
    voice_golden_wav(&frames, 1, &dir.path().join("golden.wav"))?;
    let golden = std::fs::read(dir.path().join("golden.wav")).map_err(|e| e.to_string())?;
    ensure(runs[0] == golden, || "synth output differs from golden synthesis".into())?;
    ensure(elapsed < VOICE_MAX_TIME, || format!("took {elapsed:?}"))?;
    Ok(format!("{} frames, {} byte WAV, {:.1}s", frames.frames.len(), golden.len(), elapsed.as_secs_f64()))
}
