//! Two-pass symbolic assembler for the supported TMS320C25 subset.
//!
//! Pass one parses every line, assigns addresses with separate location
//! counters for program and data space and builds the symbol table. Pass
//! two evaluates operands and encodes. An object image is produced only
//! when no error was reported.
//!
//! Directives: `.org`, `.pseg`, `.dseg`, `.word`, `.bss`, `.equ`, `.end`,
//! `.list`, `.nolist`, `.title`, `.include`. Mnemonics and directives are
//! case-insensitive; symbols are case-sensitive.

mod operands;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

pub use crate::isa::encode;
use crate::object::{ObjectImage, Space, Symbol, SymbolSpace};
use parse::{eval_expr, valid_identifier, ExprError};
pub use parse::{parse_line, SourceLine};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    UndefinedSymbol,
    DuplicateSymbol,
    OperandRange,
    UnknownMnemonic,
    DirectiveMisuse,
    Syntax,
    Include,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    /// Set for lines that came from an included file.
    pub file: Option<String>,
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.file {
            Some(file) => write!(f, "{file}:{}: {sev}: {}", self.line, self.message),
            None => write!(f, "line {}: {sev}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolEntry {
    pub value: u16,
    pub space: SymbolSpace,
    pub line: usize,
}

pub type SymbolTable = BTreeMap<String, SymbolEntry>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListingLine {
    pub line: usize,
    pub address: Option<u16>,
    pub words: Vec<u16>,
    pub source: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Listing {
    pub title: Option<String>,
    pub lines: Vec<ListingLine>,
    pub diagnostics: Vec<Diagnostic>,
    pub symbols: SymbolTable,
}

impl Listing {
    /// Render the listing file:
    /// `NNNNN AAAA WWWW [WWWW]  <source>` per line, diagnostics as
    /// `***** ERROR <line>: <message>`, then `SYM <name> <space> <hex4>`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(title) = &self.title {
            out.push_str(&format!("TITLE {title}\n"));
        }
        for l in &self.lines {
            let addr = l.address.map(|a| format!("{a:04X}")).unwrap_or_else(|| "    ".into());
            let words: Vec<String> = l.words.iter().map(|w| format!("{w:04X}")).collect();
            let text = format!("{:05} {} {:<9}  {}", l.line, addr, words.join(" "), l.source);
            out.push_str(text.trim_end());
            out.push('\n');
            for d in self.diagnostics.iter().filter(|d| d.line == l.line && d.file.is_none()) {
                let tag = match d.severity {
                    Severity::Error => "ERROR",
                    Severity::Warning => "WARNING",
                };
                out.push_str(&format!("***** {tag} {}: {}\n", d.line, d.message));
            }
        }
        for (name, sym) in &self.symbols {
            out.push_str(&format!("SYM {name} {} {:04X}\n", sym.space.letter(), sym.value));
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct AsmOptions {
    pub listing: bool,
    pub origin: u16,
    /// Directories searched by `.include`.
    pub include_dirs: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct AsmOutput {
    pub object: Option<ObjectImage>,
    pub listing: Option<Listing>,
    pub diagnostics: Vec<Diagnostic>,
    pub symbols: SymbolTable,
}

impl AsmOutput {
    pub fn error_count(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error).count()
    }
}

const MAX_INCLUDE_DEPTH: usize = 8;

/// A line after include expansion.
struct Unit {
    file: Option<String>,
    parsed: SourceLine,
    text: String,
}

/// What pass one decided about a line.
#[derive(Clone)]
enum Plan {
    Nothing,
    Instr { space: Space, addr: u16 },
    Words { space: Space, addr: u16 },
    Reserve { addr: u16 },
}

struct Assembler<'a> {
    opts: &'a AsmOptions,
    units: Vec<Unit>,
    symbols: SymbolTable,
    diagnostics: Vec<Diagnostic>,
}

impl<'a> Assembler<'a> {
    fn diag(&mut self, unit: usize, kind: DiagnosticKind, message: impl Into<String>) {
        let u = &self.units[unit];
        self.diagnostics.push(Diagnostic {
            line: u.parsed.number,
            file: u.file.clone(),
            severity: Severity::Error,
            kind,
            message: message.into(),
        });
    }

    fn warn(&mut self, unit: usize, message: impl Into<String>) {
        let u = &self.units[unit];
        self.diagnostics.push(Diagnostic {
            line: u.parsed.number,
            file: u.file.clone(),
            severity: Severity::Warning,
            kind: DiagnosticKind::Syntax,
            message: message.into(),
        });
    }

    fn expand(&mut self, source: &str, file: Option<String>, depth: usize) {
        for (idx, text) in source.lines().enumerate() {
            let parsed = parse_line(text, idx + 1);
            let is_include = parsed.op.as_deref().is_some_and(|op| op.eq_ignore_ascii_case(".include"));
            self.units.push(Unit { file: file.clone(), parsed, text: text.to_string() });
            if !is_include {
                continue;
            }
            let unit = self.units.len() - 1;
            let operands = self.units[unit].parsed.operands.clone();
            let name = match operands.as_slice() {
                [one] if one.len() >= 2 && one.starts_with('"') && one.ends_with('"') => {
                    one[1..one.len() - 1].to_string()
                }
                _ => {
                    self.diag(unit, DiagnosticKind::DirectiveMisuse, ".include expects one quoted file name");
                    continue;
                }
            };
            if depth >= MAX_INCLUDE_DEPTH {
                self.diag(unit, DiagnosticKind::Include, format!("includes nested too deeply at '{name}'"));
                continue;
            }
            let found = self
                .opts
                .include_dirs
                .iter()
                .map(|d| d.join(&name))
                .chain(std::iter::once(PathBuf::from(&name)))
                .find_map(|p| std::fs::read_to_string(p).ok());
            match found {
                Some(text) => self.expand(&text, Some(name), depth + 1),
                None => self.diag(unit, DiagnosticKind::Include, format!("cannot open include file '{name}'")),
            }
        }
    }

    fn define(&mut self, unit: usize, name: &str, value: u16, space: SymbolSpace) {
        if !valid_identifier(name) {
            self.diag(unit, DiagnosticKind::Syntax, format!("invalid label '{name}'"));
            return;
        }
        let line = self.units[unit].parsed.number;
        if let Some(prev) = self.symbols.get(name) {
            let prev_line = prev.line;
            self.diag(
                unit,
                DiagnosticKind::DuplicateSymbol,
                format!("duplicate symbol '{name}' (first defined at line {prev_line})"),
            );
            return;
        }
        self.symbols.insert(name.to_string(), SymbolEntry { value, space, line });
    }

    /// Evaluate an expression with whatever symbols are known so far.
    fn eval(&self, text: &str, here: u16) -> Result<i64, ExprError> {
        let lookup = |name: &str| self.symbols.get(name).map(|s| s.value as i64);
        eval_expr(text, here as i64, &lookup)
    }

    fn report_expr(&mut self, unit: usize, err: ExprError) {
        match err {
            ExprError::Undefined(name) => {
                self.diag(unit, DiagnosticKind::UndefinedSymbol, format!("undefined symbol '{name}'"))
            }
            ExprError::Syntax(msg) => self.diag(unit, DiagnosticKind::Syntax, msg),
        }
    }

    fn pass_one(&mut self) -> Vec<Plan> {
        let mut counters = [self.opts.origin as u32, 0u32];
        let mut space = Space::Prog;
        let mut plans = vec![Plan::Nothing; self.units.len()];
        let mut ended = false;

        for unit in 0..self.units.len() {
            let parsed = self.units[unit].parsed.clone();
            if ended {
                if parsed.label.is_some() || parsed.op.is_some() {
                    self.warn(unit, "text after .end ignored");
                }
                continue;
            }
            let idx = space as usize;
            let here = counters[idx];
            if here > 0xFFFF {
                self.diag(unit, DiagnosticKind::OperandRange, format!("{} location counter past FFFF", space.letter()));
                counters[idx] = 0xFFFF;
            }
            let here16 = counters[idx].min(0xFFFF) as u16;
            let op = parsed.op.as_deref().map(|o| o.to_ascii_lowercase());

            if op.as_deref() == Some(".equ") {
                let Some(label) = parsed.label.as_deref() else {
                    self.diag(unit, DiagnosticKind::DirectiveMisuse, ".equ needs a label");
                    continue;
                };
                if parsed.operands.len() != 1 {
                    self.diag(unit, DiagnosticKind::DirectiveMisuse, ".equ takes one expression");
                    continue;
                }
                match self.eval(&parsed.operands[0], here16) {
                    Ok(v) if (-32768..=0xFFFF).contains(&v) => self.define(unit, label, v as u16, SymbolSpace::Abs),
                    Ok(v) => {
                        self.diag(unit, DiagnosticKind::OperandRange, format!(".equ value {v} does not fit 16 bits"))
                    }
                    Err(e) => self.report_expr(unit, e),
                }
                continue;
            }
            if let Some(label) = parsed.label.as_deref() {
                self.define(unit, label, here16, space.into());
            }
            let Some(op) = op else { continue };

            let mut advance = |plans: &mut Vec<Plan>, plan: Plan, count: u32| {
                plans[unit] = plan;
                counters[idx] += count;
            };
            match op.as_str() {
                ".pseg" => space = Space::Prog,
                ".dseg" => space = Space::Data,
                ".org" => {
                    if parsed.operands.len() != 1 {
                        self.diag(unit, DiagnosticKind::DirectiveMisuse, ".org takes one expression");
                        continue;
                    }
                    match self.eval(&parsed.operands[0], here16) {
                        Ok(v) if (0..=0xFFFF).contains(&v) => counters[idx] = v as u32,
                        Ok(v) => {
                            self.diag(unit, DiagnosticKind::OperandRange, format!(".org address {v} out of range"))
                        }
                        Err(e) => self.report_expr(unit, e),
                    }
                }
                ".word" => {
                    if parsed.operands.is_empty() {
                        self.diag(unit, DiagnosticKind::DirectiveMisuse, ".word needs at least one value");
                        continue;
                    }
                    advance(&mut plans, Plan::Words { space, addr: here16 }, parsed.operands.len() as u32);
                }
                ".bss" => {
                    if parsed.operands.len() != 1 {
                        self.diag(unit, DiagnosticKind::DirectiveMisuse, ".bss takes one count");
                        continue;
                    }
                    match self.eval(&parsed.operands[0], here16) {
                        Ok(n) if (0..=0x10000).contains(&n) => {
                            advance(&mut plans, Plan::Reserve { addr: here16 }, n as u32)
                        }
                        Ok(n) => self.diag(unit, DiagnosticKind::OperandRange, format!(".bss count {n} out of range")),
                        Err(e) => self.report_expr(unit, e),
                    }
                }
                ".end" => ended = true,
                ".list" | ".nolist" | ".title" | ".include" => {}
                other if other.starts_with('.') => {
                    self.diag(unit, DiagnosticKind::DirectiveMisuse, format!("unknown directive '{other}'"))
                }
                _ => match operands::width_of(&op) {
                    Some(width) => {
                        if space == Space::Data {
                            self.warn(unit, "instruction assembled into data space");
                        }
                        advance(&mut plans, Plan::Instr { space, addr: here16 }, width as u32);
                    }
                    None => {
                        let name = parsed.op.clone().unwrap_or_default();
                        self.diag(unit, DiagnosticKind::UnknownMnemonic, format!("unknown mnemonic '{name}'"));
                    }
                },
            }
        }
        plans
    }
}

/// Assemble a complete translation unit.
pub fn assemble(source: &str, opts: &AsmOptions) -> AsmOutput {
    let mut asm = Assembler { opts, units: Vec::new(), symbols: SymbolTable::new(), diagnostics: Vec::new() };
    asm.expand(source, None, 0);
    let plans = asm.pass_one();

    let mut image = ObjectImage::new();
    image.entry = opts.origin;
    let mut occupied = [vec![false; 0x10000], vec![false; 0x10000]];
    let mut listing = Listing { title: None, ..Default::default() };
    let mut listing_on = true;
    let mut ended = false;

    for (unit, plan) in plans.iter().enumerate() {
        let parsed = asm.units[unit].parsed.clone();
        let included = asm.units[unit].file.is_some();
        let op = parsed.op.as_deref().map(|o| o.to_ascii_lowercase());
        let mut emitted: Vec<u16> = Vec::new();
        let mut address = None;
        let mut space_of_line = Space::Prog;

        if !ended {
            match (plan, op.as_deref()) {
                (Plan::Instr { space, addr }, Some(op)) => {
                    address = Some(*addr);
                    space_of_line = *space;
                    let lookup = |name: &str| asm.symbols.get(name).map(|s| s.value as i64);
                    match operands::build(op, &parsed.operands, *addr, &lookup) {
                        Ok(instr) => match encode(&instr) {
                            Ok(words) => emitted = words,
                            Err(e) => asm.diag(unit, DiagnosticKind::OperandRange, e.to_string()),
                        },
                        Err(e) => asm.report_operand(unit, e),
                    }
                }
                (Plan::Words { space, addr }, _) => {
                    address = Some(*addr);
                    space_of_line = *space;
                    for (i, text) in parsed.operands.iter().enumerate() {
                        match asm.eval(text, addr.wrapping_add(i as u16)) {
                            Ok(v) if (-32768..=0xFFFF).contains(&v) => emitted.push(v as u16),
                            Ok(v) => {
                                asm.diag(unit, DiagnosticKind::OperandRange, format!("value {v} does not fit 16 bits"));
                                emitted.push(0);
                            }
                            Err(e) => {
                                asm.report_expr(unit, e);
                                emitted.push(0);
                            }
                        }
                    }
                }
                (Plan::Reserve { addr, .. }, _) => address = Some(*addr),
                (_, Some(".title")) => match parsed.operands.as_slice() {
                    [t] if t.len() >= 2 && t.starts_with('"') && t.ends_with('"') => {
                        listing.title = Some(t[1..t.len() - 1].to_string())
                    }
                    _ => asm.diag(unit, DiagnosticKind::DirectiveMisuse, ".title expects a quoted string"),
                },
                (_, Some(".end")) => {
                    ended = true;
                    if let [entry] = parsed.operands.as_slice() {
                        match asm.eval(entry, 0) {
                            Ok(v) if (0..=0xFFFF).contains(&v) => image.entry = v as u16,
                            Ok(v) => asm.diag(unit, DiagnosticKind::OperandRange, format!("entry {v} out of range")),
                            Err(e) => asm.report_expr(unit, e),
                        }
                    }
                }
                _ => {}
            }
        }

        if let Some(addr) = address {
            if !emitted.is_empty() {
                let map = &mut occupied[space_of_line as usize];
                let clash = (0..emitted.len()).map(|i| addr as usize + i).find(|a| *a > 0xFFFF || map[*a]);
                match clash {
                    Some(a) if a > 0xFFFF => asm.diag(unit, DiagnosticKind::OperandRange, "code runs past FFFF"),
                    Some(a) => asm.diag(
                        unit,
                        DiagnosticKind::DirectiveMisuse,
                        format!("{} address {a:04X} already used", space_of_line.letter()),
                    ),
                    None => {
                        for i in 0..emitted.len() {
                            map[addr as usize + i] = true;
                        }
                        image.push_words(space_of_line, addr, &emitted);
                    }
                }
            }
        }

        match op.as_deref() {
            Some(".nolist") => listing_on = false,
            Some(".list") => listing_on = true,
            _ => {}
        }
        if (listing_on || op.as_deref() == Some(".nolist")) && !included {
            let source = asm.units[unit].text.clone();
            let mut chunks = emitted.chunks(2);
            listing.lines.push(ListingLine {
                line: parsed.number,
                address,
                words: chunks.next().map(|c| c.to_vec()).unwrap_or_default(),
                source,
            });
            for (i, chunk) in chunks.enumerate() {
                listing.lines.push(ListingLine {
                    line: parsed.number,
                    address: address.map(|a| a.wrapping_add(2 * (i as u16 + 1))),
                    words: chunk.to_vec(),
                    source: String::new(),
                });
            }
        }
    }

    image.records.sort_by_key(|r| (r.space, r.start));
    image.symbols =
        asm.symbols.iter().map(|(name, s)| Symbol { name: name.clone(), space: s.space, value: s.value }).collect();

    let errors = asm.diagnostics.iter().any(|d| d.severity == Severity::Error);
    listing.diagnostics = asm.diagnostics.clone();
    listing.symbols = asm.symbols.clone();
    AsmOutput {
        object: (!errors).then_some(image),
        listing: opts.listing.then_some(listing),
        diagnostics: asm.diagnostics,
        symbols: asm.symbols,
    }
}

impl Assembler<'_> {
    fn report_operand(&mut self, unit: usize, err: operands::OperandError) {
        use operands::OperandError::*;
        match err {
            Expr(e) => self.report_expr(unit, e),
            Range(msg) => self.diag(unit, DiagnosticKind::OperandRange, msg),
            Syntax(msg) => self.diag(unit, DiagnosticKind::Syntax, msg),
            Unknown(name) => self.diag(unit, DiagnosticKind::UnknownMnemonic, format!("unknown mnemonic '{name}'")),
        }
    }
}
