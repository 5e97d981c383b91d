//! Remote control: newline-delimited JSON requests over TCP, executed by
//! the same serialized executor as the console.
//!
//! Requests are objects with a `cmd` field:
//!
//! | cmd | fields | reply fields |
//! |-----|--------|--------------|
//! | `regs` | | `regs`, `running`, `stop` |
//! | `readmem` | `space` ("P"/"D"), `addr`, `count` (default 1) | `words` |
//! | `writemem` | `space`, `addr`, `words` | |
//! | `step` | `n` (default 1) | `cycles`, `trace`, `regs` |
//! | `run` | `addr` (optional) | `running` |
//! | `stop` | | `stopped`, `stop`, `regs` |
//! | `reset` | | |
//! | `bp_set` | `addr` | `id` |
//! | `bp_clear` | `id` (number or "*") | |
//! | `load` | `path`, `space` (optional) | `words`, `records`, `entry` |
//! | `dump_dac` | `count` (optional, at most 4096) | `samples` |
//!
//! Addresses and words are numbers or hex strings. Replies always carry
//! `ok`; failures carry `err` (`syntax`, `range`, `nofile`, `busy`).

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::thread::JoinHandle;

use serde_json::{json, Map, Value};

use super::{parse_run_command, CmdError, Session, StopReason, RUN_SLICE};
use crate::object::Space;

enum Request {
    Console(String),
    Remote(String),
}

struct Envelope {
    request: Request,
    reply: Sender<String>,
}

/// Client side of the executor mailbox. Cloneable across threads.
#[derive(Clone)]
pub struct Handle {
    tx: Sender<Envelope>,
}

impl Handle {
    fn call(&self, request: Request) -> Option<String> {
        let (reply, rx) = mpsc::channel();
        self.tx.send(Envelope { request, reply }).ok()?;
        rx.recv().ok()
    }

    /// Run a console line. `G` and `X` reply when the run ends.
    pub fn console(&self, line: &str) -> Option<String> {
        self.call(Request::Console(line.to_string()))
    }

    /// Handle one JSON request line; returns the JSON reply line.
    pub fn remote(&self, line: &str) -> Option<String> {
        self.call(Request::Remote(line.to_string()))
    }
}

/// Move `session` onto an executor thread. The thread ends when every
/// handle is dropped or `Q` is entered, and returns the session.
pub fn spawn(session: Session) -> (Handle, JoinHandle<Session>) {
    let (tx, rx) = mpsc::channel();
    let thread = std::thread::spawn(move || Executor { session, console_wait: None }.run(rx));
    (Handle { tx }, thread)
}

struct Executor {
    session: Session,
    /// Console caller waiting for the active run to end.
    console_wait: Option<Sender<String>>,
}

impl Executor {
    fn run(mut self, rx: Receiver<Envelope>) -> Session {
        loop {
            let next = if self.session.is_running() {
                match rx.try_recv() {
                    Ok(env) => Some(env),
                    Err(TryRecvError::Empty) => None,
                    Err(TryRecvError::Disconnected) => break,
                }
            } else {
                match rx.recv() {
                    Ok(env) => Some(env),
                    Err(_) => break,
                }
            };
            if let Some(env) = next {
                self.handle(env);
                if self.session.quit_requested() {
                    break;
                }
            }
            if self.session.is_running() {
                if let Some(stop) = self.session.run_slice(RUN_SLICE) {
                    self.finish_console(stop);
                }
            }
        }
        if let Some(stop) = self.session.stop_run() {
            self.finish_console(stop);
        }
        self.session
    }

    fn finish_console(&mut self, stop: StopReason) {
        if let Some(tx) = self.console_wait.take() {
            let _ = tx.send(self.session.stop_report(stop));
        }
    }

    fn handle(&mut self, env: Envelope) {
        match env.request {
            Request::Console(line) => {
                if let Some(parsed) = parse_run_command(&line) {
                    match parsed {
                        Ok(_) if self.session.is_running() => {
                            let _ = env.reply.send(format!("?{}\n", CmdError::Busy.text()));
                        }
                        Ok((start, skip)) => {
                            self.session.start_run(start, skip);
                            self.console_wait = Some(env.reply);
                        }
                        Err(e) => {
                            let _ = env.reply.send(format!("?{}\n", e.text()));
                        }
                    }
                    return;
                }
                let _ = env.reply.send(self.session.execute_command(&line));
            }
            Request::Remote(line) => {
                let value = handle_json(&mut self.session, &line);
                if self.session.last_stop == Some(StopReason::Stopped) && !self.session.is_running() {
                    if let Some(tx) = self.console_wait.take() {
                        let _ = tx.send(self.session.stop_report(StopReason::Stopped));
                    }
                }
                let _ = env.reply.send(value.to_string());
            }
        }
    }
}

fn fail(e: CmdError) -> Value {
    json!({"ok": false, "err": e.text()})
}

fn number(v: &Value, max: u64) -> Result<u64, CmdError> {
    let n = match v {
        Value::Number(n) => n.as_u64().ok_or(CmdError::Range)?,
        Value::String(s) => {
            let t = s.trim_start_matches("0x").trim_start_matches("0X");
            if t.is_empty() || t.len() > 8 || !t.chars().all(|c| c.is_ascii_hexdigit()) {
                return Err(CmdError::Syntax);
            }
            u64::from_str_radix(t, 16).map_err(|_| CmdError::Syntax)?
        }
        _ => return Err(CmdError::Syntax),
    };
    if n > max {
        return Err(CmdError::Range);
    }
    Ok(n)
}

fn field<'a>(req: &'a Map<String, Value>, key: &str) -> Result<&'a Value, CmdError> {
    req.get(key).ok_or(CmdError::Syntax)
}

fn space_field(req: &Map<String, Value>) -> Result<Space, CmdError> {
    match field(req, "space")?.as_str().map(str::to_ascii_uppercase).as_deref() {
        Some("P") => Ok(Space::Prog),
        Some("D") => Ok(Space::Data),
        _ => Err(CmdError::Syntax),
    }
}

/// Register snapshot as sent to remote clients.
pub fn regs_json(session: &Session) -> Value {
    let c = &session.board.cpu;
    json!({
        "pc": format!("{:04X}", c.pc),
        "acc": format!("{:08X}", c.acc as u32),
        "p": format!("{:08X}", c.preg as u32),
        "t": format!("{:04X}", c.treg),
        "arp": c.arp,
        "dp": format!("{:03X}", c.dp),
        "ar": c.ar.iter().map(|a| format!("{a:04X}")).collect::<Vec<_>>(),
        "st0": format!("{:04X}", c.st0()),
        "st1": format!("{:04X}", c.st1()),
        "imr": format!("{:02X}", c.imr),
        "stack": c.stack.iter().map(|a| format!("{a:04X}")).collect::<Vec<_>>(),
        "cycles": c.cycles,
    })
}

fn stop_json(stop: Option<StopReason>) -> Value {
    match stop {
        None => Value::Null,
        Some(s) => {
            let mut obj = json!({"reason": s.key(), "text": s.line()});
            if let StopReason::Breakpoint { id, addr } = s {
                obj["id"] = json!(id);
                obj["addr"] = json!(format!("{addr:04X}"));
            }
            obj
        }
    }
}

/// Execute one remote request against `session`.
pub fn handle_json(session: &mut Session, line: &str) -> Value {
    let parsed: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(_) => return fail(CmdError::Syntax),
    };
    let Some(req) = parsed.as_object() else {
        return fail(CmdError::Syntax);
    };
    let Some(cmd) = req.get("cmd").and_then(Value::as_str) else {
        return fail(CmdError::Syntax);
    };
    match remote_command(session, cmd, req) {
        Ok(mut reply) => {
            reply["ok"] = json!(true);
            reply
        }
        Err(e) => fail(e),
    }
}

fn remote_command(session: &mut Session, cmd: &str, req: &Map<String, Value>) -> Result<Value, CmdError> {
    let busy = || if session.is_running() { Err(CmdError::Busy) } else { Ok(()) };
    match cmd {
        "regs" => Ok(json!({
            "regs": regs_json(session),
            "running": session.is_running(),
            "stop": stop_json(session.last_stop),
        })),
        "readmem" => {
            let space = space_field(req)?;
            let addr = number(field(req, "addr")?, 0xFFFF)?;
            let count = req.get("count").map_or(Ok(1), |v| number(v, 0x10000))?;
            if count == 0 || addr + count > 0x10000 {
                return Err(CmdError::Range);
            }
            let words: Vec<String> =
                (0..count).map(|i| format!("{:04X}", session.board.peek(space, (addr + i) as u16))).collect();
            Ok(json!({"words": words}))
        }
        "writemem" => {
            let space = space_field(req)?;
            let addr = number(field(req, "addr")?, 0xFFFF)? as u16;
            let words = field(req, "words")?
                .as_array()
                .ok_or(CmdError::Syntax)?
                .iter()
                .map(|w| number(w, 0xFFFF).map(|v| v as u16))
                .collect::<Result<Vec<_>, _>>()?;
            session.substitute(space, addr, &words)?;
            Ok(json!({}))
        }
        "step" => {
            busy()?;
            let n = req.get("n").map_or(Ok(1), |v| number(v, 0xFFFF))?;
            if n == 0 {
                return Err(CmdError::Range);
            }
            let (trace, cycles) = session.step(n as u32);
            let trace: Vec<&str> = trace.lines().collect();
            Ok(json!({"cycles": cycles, "trace": trace, "regs": regs_json(session)}))
        }
        "run" => {
            busy()?;
            let start = req.get("addr").map(|v| number(v, 0xFFFF)).transpose()?.map(|a| a as u16);
            let skip = req.get("resume").and_then(Value::as_bool).unwrap_or(false);
            session.start_run(start, skip);
            Ok(json!({"running": true}))
        }
        "stop" => {
            let stopped = session.stop_run().is_some();
            Ok(json!({"stopped": stopped, "stop": stop_json(session.last_stop), "regs": regs_json(session)}))
        }
        "reset" => {
            busy()?;
            session.reset();
            Ok(json!({}))
        }
        "bp_set" => {
            let addr = number(field(req, "addr")?, 0xFFFF)? as u16;
            Ok(json!({"id": session.add_breakpoint(addr)}))
        }
        "bp_clear" => {
            match field(req, "id")? {
                Value::String(s) if s == "*" => session.clear_all_breakpoints(),
                v => session.clear_breakpoint(number(v, u32::MAX as u64)? as u32)?,
            }
            Ok(json!({}))
        }
        "load" => {
            busy()?;
            let path = field(req, "path")?.as_str().ok_or(CmdError::Syntax)?;
            let force = match req.get("space") {
                None => None,
                Some(_) => Some(space_field(req)?),
            };
            let s = session.load(Path::new(path), force)?;
            Ok(json!({"words": s.words, "records": s.records, "entry": format!("{:04X}", s.entry)}))
        }
        "dump_dac" => {
            let tail = session.board.codec().dac_tail();
            let count = req.get("count").map_or(Ok(tail.len() as u64), |v| number(v, 4096))? as usize;
            let samples = &tail[tail.len().saturating_sub(count)..];
            Ok(json!({"samples": samples}))
        }
        _ => Err(CmdError::Syntax),
    }
}

/// Serve clients one at a time until the executor goes away.
pub fn serve(listener: TcpListener, handle: Handle) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(_) => continue,
        };
        let mut writer = match stream.try_clone() {
            Ok(w) => w,
            Err(_) => continue,
        };
        for line in BufReader::new(stream).lines() {
            let Ok(line) = line else { break };
            if line.trim().is_empty() {
                continue;
            }
            let Some(reply) = handle.remote(&line) else {
                return Ok(());
            };
            if writer.write_all(reply.as_bytes()).and_then(|_| writer.write_all(b"\n")).is_err() {
                break;
            }
        }
    }
    Ok(())
}
