//! `dsp25` command line: assemble, convert, run, debug and the voice demo.

use std::collections::HashMap;
use std::io::{BufRead, IsTerminal, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dsp25::adda2::{cycles_per_sample, dac_to_pcm, format_csv, read_wav, write_wav};
use dsp25::asm::{assemble, AsmOptions};
use dsp25::board::{Board, BoardConfig, HaltReason, RunReport};
use dsp25::debugger::{remote, run_script, Session};
use dsp25::dsplib::{self, AnalyzeOptions, DemoParams, LpcMode};
use dsp25::object::{convert_coff, read_object, write_object};

const DEFAULT_CYCLES: u64 = 100_000_000;

#[derive(Parser)]
#[command(name = "dsp25", version, about = "TMS320C25 board simulator and toolchain")]
struct Cli {
    /// key=value settings file; command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    clock_mhz: Option<f64>,
    #[arg(long, global = true)]
    wait_states: Option<u8>,
    /// Codec sample rate in Hz.
    #[arg(long, global = true)]
    rate: Option<u32>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Assemble a source file into a DPX25 object.
    Asm {
        src: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        listing: Option<PathBuf>,
        /// Extra directory searched by .include.
        #[arg(short = 'I', long = "include")]
        include: Vec<PathBuf>,
    },
    /// Convert an absolute COFF file into a DPX25 object.
    Convert {
        coff: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Load, reset and run an object to its halt condition.
    Run {
        obj: PathBuf,
        #[command(flatten)]
        io: RunIo,
    },
    /// Interactive debugger session.
    Debug {
        obj: Option<PathBuf>,
        /// Replay a command script and print the transcript.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Serve the JSON remote protocol on host:port.
        #[arg(long)]
        serve: Option<String>,
    },
    /// Analyze a WAV, synthesize it on the simulated board, write the DAC output.
    Synth {
        wav_in: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the analyzed frames here.
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u16,
    },
    /// LPC analysis of a WAV into a frame file.
    Analyze {
        wav: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = dsplib::DEFAULT_FRAME_LEN)]
        frame_len: usize,
        #[arg(long)]
        hop: Option<usize>,
    },
}

#[derive(Args)]
struct RunIo {
    #[arg(long)]
    cycles: Option<u64>,
    #[arg(long)]
    wav_in: Option<PathBuf>,
    #[arg(long)]
    wav_out: Option<PathBuf>,
    /// Write every DAC code as CSV.
    #[arg(long)]
    dac: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Input(String),
    Assembly,
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Failure {
        Failure::Input(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Debug, Default)]
struct RunConfig {
    board: BoardConfig,
    cycles: Option<u64>,
    wav_in: Option<PathBuf>,
    wav_out: Option<PathBuf>,
    dac: Option<PathBuf>,
    script: Option<PathBuf>,
}

fn parse_config(text: &str) -> Result<HashMap<String, String>, Failure> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) =
            t.split_once('=').ok_or_else(|| Failure::Input(format!("config line {}: expected key=value", i + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        for (k, v) in parse_config(&text)? {
            let bad = || Failure::Input(format!("config: bad value for {k}: '{v}'"));
            match k.as_str() {
                "clock_mhz" => cfg.board.clock_mhz = v.parse().map_err(|_| bad())?,
                "wait_states" => cfg.board.wait_states = v.parse().map_err(|_| bad())?,
                "rate" => cfg.board.sample_rate = v.parse().map_err(|_| bad())?,
                "cycles" => cfg.cycles = Some(v.parse().map_err(|_| bad())?),
                "wav_in" => cfg.wav_in = Some(v.into()),
                "wav_out" => cfg.wav_out = Some(v.into()),
                "dac" => cfg.dac = Some(v.into()),
                "script" => cfg.script = Some(v.into()),
                _ => return Err(Failure::Input(format!("config: unknown key '{k}'"))),
            }
        }
    }
    if let Some(v) = cli.clock_mhz {
        cfg.board.clock_mhz = v;
    }
    if let Some(v) = cli.wait_states {
        cfg.board.wait_states = v;
    }
    if let Some(v) = cli.rate {
        cfg.board.sample_rate = v;
    }
    cfg.board.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn halt_text(h: HaltReason) -> String {
    match h {
        HaltReason::Idle => "IDLE".into(),
        HaltReason::CycleLimit => "CYCLE LIMIT".into(),
        HaltReason::Breakpoint(a) => format!("BREAKPOINT {a:04X}"),
        HaltReason::IllegalOpcode(a) => format!("ILLEGAL OPCODE {a:04X}"),
        HaltReason::Interrupt(line) => format!("INTERRUPT {}", line.name()),
        HaltReason::Held => "HELD".into(),
    }
}

fn print_report(r: &RunReport) {
    println!("halt: {}", halt_text(r.halt_reason));
    println!("cycles: {}", r.cycles_run);
    println!("instructions: {}", r.instructions);
    println!("samples: {}", r.samples_processed);
}

fn cmd_asm(src: &Path, output: Option<&Path>, listing: Option<&Path>, include: &[PathBuf]) -> CmdResult {
    let text = read_text(src)?;
    let mut dirs = vec![src.parent().map(Path::to_path_buf).unwrap_or_default()];
    dirs.extend(include.iter().cloned());
    let opts = AsmOptions { listing: listing.is_some(), include_dirs: dirs, ..Default::default() };
    let out = assemble(&text, &opts);
    for d in &out.diagnostics {
        eprintln!("{}: {d}", src.display());
    }
    if let (Some(path), Some(l)) = (listing, &out.listing) {
        write_text(path, &l.render())?;
    }
    let errors = out.error_count();
    if errors > 0 {
        eprintln!("{errors} error(s)");
        return Err(Failure::Assembly);
    }
    let obj = out.object.expect("object present without errors");
    let path = output.map(Path::to_path_buf).unwrap_or_else(|| src.with_extension("dpx"));
    write_text(&path, &write_object(&obj).map_err(Failure::input)?)
}

fn cmd_convert(coff: &Path, output: &Path) -> CmdResult {
    let bytes = std::fs::read(coff).map_err(|e| Failure::Input(format!("{}: {e}", coff.display())))?;
    let img = convert_coff(&bytes).map_err(|e| Failure::Input(format!("{}: {e}", coff.display())))?;
    write_text(output, &write_object(&img).map_err(Failure::input)?)
}

fn load_board(cfg: &RunConfig, obj: &Path) -> Result<Board, Failure> {
    let img = read_object(&read_text(obj)?).map_err(|e| Failure::Input(format!("{}: {e}", obj.display())))?;
    let mut board = Board::new(cfg.board).map_err(|e| Failure::Usage(e.to_string()))?;
    board.load(&img, None);
    board.reset();
    board.cpu.pc = img.entry;
    Ok(board)
}

fn cmd_run(mut cfg: RunConfig, obj: &Path, io: RunIo) -> CmdResult {
    cfg.cycles = io.cycles.or(cfg.cycles);
    cfg.wav_in = io.wav_in.or(cfg.wav_in);
    cfg.wav_out = io.wav_out.or(cfg.wav_out);
    cfg.dac = io.dac.or(cfg.dac);
    let mut board = load_board(&cfg, obj)?;
    let mut limit = cfg.cycles.unwrap_or(DEFAULT_CYCLES);
    if let Some(path) = &cfg.wav_in {
        let samples =
            read_wav(path, cfg.board.sample_rate).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        if cfg.cycles.is_none() {
            // enough for every input sample plus the final DAC emission
            limit = (samples.len() as u64 + 2) * board.codec().cycles_per_sample() as u64;
        }
        board.codec_mut().set_samples(samples);
    }
    let report = board.run(Some(limit), None);
    print_report(&report);
    let out = board.codec().output();
    if let Some(path) = &cfg.wav_out {
        write_wav(path, cfg.board.sample_rate, &dac_to_pcm(out))
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = &cfg.dac {
        write_text(path, &format_csv(out))?;
    }
    Ok(())
}

fn repl(mut exec: impl FnMut(&str) -> Option<String>, quit: impl Fn() -> bool) {
    let stdin = std::io::stdin();
    let prompt = stdin.is_terminal();
    let mut out = std::io::stdout();
    loop {
        if prompt {
            let _ = write!(out, ">");
            let _ = out.flush();
        }
        let mut line = String::new();
        match stdin.lock().read_line(&mut line) {
            Ok(0) | Err(_) => break,
            Ok(_) => {}
        }
        match exec(line.trim_end()) {
            Some(reply) => {
                let _ = write!(out, "{reply}");
                let _ = out.flush();
            }
            None => break,
        }
        if quit() {
            break;
        }
    }
}

fn cmd_debug(cfg: RunConfig, obj: Option<&Path>, script: Option<PathBuf>, serve: Option<String>) -> CmdResult {
    let board = match obj {
        Some(path) => load_board(&cfg, path)?,
        None => Board::new(cfg.board).map_err(|e| Failure::Usage(e.to_string()))?,
    };
    let mut session = Session::new(board);
    if let Some(path) = script.or(cfg.script) {
        print!("{}", run_script(&mut session, &read_text(&path)?));
        if serve.is_none() || session.quit_requested() {
            return Ok(());
        }
    }
    match serve {
        Some(endpoint) => {
            let listener = TcpListener::bind(&endpoint).map_err(|e| Failure::Input(format!("{endpoint}: {e}")))?;
            if let Ok(addr) = listener.local_addr() {
                eprintln!("serving on {addr}");
            }
            let (handle, executor) = remote::spawn(session);
            let server = handle.clone();
            std::thread::spawn(move || remote::serve(listener, server));
            repl(|line| handle.console(line), || false);
            drop(handle);
            let _ = executor.join();
        }
        None => {
            let cell = std::cell::RefCell::new(session);
            repl(|line| Some(cell.borrow_mut().execute_command(line)), || cell.borrow().quit_requested());
        }
    }
    Ok(())
}

fn read_input_wav(cfg: &RunConfig, path: &Path) -> Result<Vec<f64>, Failure> {
    read_wav(path, cfg.board.sample_rate).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_analyze(cfg: RunConfig, wav: &Path, output: &Path, frame_len: usize, hop: Option<usize>) -> CmdResult {
    let samples = read_input_wav(&cfg, wav)?;
    let opts = AnalyzeOptions { frame_len, hop: hop.unwrap_or(frame_len) };
    let set = dsplib::lpc_analyze(&samples, &opts).map_err(Failure::input)?;
    write_text(output, &dsplib::format_frames(&set))?;
    println!("frames: {}", set.frames.len());
    Ok(())
}

fn cmd_synth(cfg: RunConfig, wav_in: &Path, output: &Path, frames_out: Option<&Path>, seed: u16) -> CmdResult {
    let samples = read_input_wav(&cfg, wav_in)?;
    let set = dsplib::lpc_analyze(&samples, &AnalyzeOptions::default()).map_err(Failure::input)?;
    if let Some(path) = frames_out {
        write_text(path, &dsplib::format_frames(&set))?;
    }
    let demo = dsplib::build_demo(&DemoParams::LpcSynth { frames: set.clone(), seed, mode: LpcMode::Stream })
        .map_err(Failure::input)?;
    let cps = cycles_per_sample(cfg.board.clock_mhz, cfg.board.sample_rate) as u64;
    let limit = cfg.cycles.unwrap_or((set.sample_count() as u64 + 4) * cps * 2);
    let run = dsplib::run_demo(&demo, cfg.board, None, limit).map_err(Failure::input)?;
    let pcm = dac_to_pcm(run.output.get(1..).unwrap_or(&[]));
    write_wav(output, cfg.board.sample_rate, &pcm).map_err(|e| Failure::Input(format!("{}: {e}", output.display())))?;
    println!("frames: {}", set.frames.len());
    print_report(&run.report);
    Ok(())
}

fn dispatch(cli: Cli) -> CmdResult {
    let cfg = load_config(&cli)?;
    match cli.cmd {
        Cmd::Asm { src, output, listing, include } => cmd_asm(&src, output.as_deref(), listing.as_deref(), &include),
        Cmd::Convert { coff, output } => cmd_convert(&coff, &output),
        Cmd::Run { obj, io } => cmd_run(cfg, &obj, io),
        Cmd::Debug { obj, script, serve } => cmd_debug(cfg, obj.as_deref(), script, serve),
        Cmd::Synth { wav_in, output, frames, seed } => cmd_synth(cfg, &wav_in, &output, frames.as_deref(), seed),
        Cmd::Analyze { wav, output, frame_len, hop } => cmd_analyze(cfg, &wav, &output, frame_len, hop),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("dsp25: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Input(m)) => {
            eprintln!("dsp25: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Assembly) => ExitCode::from(3),
    }
}
