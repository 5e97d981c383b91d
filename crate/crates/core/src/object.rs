//! Loadable object images: the line-oriented DPX25 text format and a
//! converter from fully linked TI COFF files.
//!
//! DPX25 layout:
//!
//! ```text
//! DPX25
//! E 0000              entry point
//! P 0100 0003         record header: space (P|D), start, word count
//! 5500 CA12 6020      exactly `count` words, any whitespace
//! S START P 0100      symbol: name, space (P|D|A), value
//! ; comment
//! ```

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Space {
    Prog,
    Data,
}

impl Space {
    pub fn letter(self) -> char {
        match self {
            Space::Prog => 'P',
            Space::Data => 'D',
        }
    }

    pub fn from_letter(text: &str) -> Option<Space> {
        match text {
            "P" | "p" => Some(Space::Prog),
            "D" | "d" => Some(Space::Data),
            _ => None,
        }
    }
}

/// Space a symbol lives in; `Abs` for constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolSpace {
    Prog,
    Data,
    Abs,
}

impl SymbolSpace {
    pub fn letter(self) -> char {
        match self {
            SymbolSpace::Prog => 'P',
            SymbolSpace::Data => 'D',
            SymbolSpace::Abs => 'A',
        }
    }

    fn from_letter(text: &str) -> Option<SymbolSpace> {
        match text {
            "P" | "p" => Some(SymbolSpace::Prog),
            "D" | "d" => Some(SymbolSpace::Data),
            "A" | "a" => Some(SymbolSpace::Abs),
            _ => None,
        }
    }
}

impl From<Space> for SymbolSpace {
    fn from(space: Space) -> Self {
        match space {
            Space::Prog => SymbolSpace::Prog,
            Space::Data => SymbolSpace::Data,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub space: Space,
    pub start: u16,
    pub words: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub space: SymbolSpace,
    pub value: u16,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectImage {
    pub entry: u16,
    pub records: Vec<Record>,
    pub symbols: Vec<Symbol>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObjectError {
    #[error("line {0}: syntax error")]
    Syntax(usize),
    #[error("record at line {line} declares {expected} words but has {found}")]
    CountMismatch { line: usize, expected: usize, found: usize },
    #[error("record {space:?} {start:04X} with {count} words runs past 0xFFFF")]
    Range { space: Space, start: u16, count: usize },
    #[error("records overlap in {0:?} space at {1:04X}")]
    Overlap(Space, u16),
    #[error("not a COFF file (magic {0:04X})")]
    BadMagic(u16),
    #[error("COFF file truncated")]
    TruncatedFile,
    #[error("section {0} carries relocation entries")]
    UnsupportedRelocation(String),
}

impl ObjectImage {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append words to the record ending exactly at `start`, or open a new one.
    pub fn push_words(&mut self, space: Space, start: u16, words: &[u16]) {
        if words.is_empty() {
            return;
        }
        if let Some(last) = self.records.last_mut() {
            if last.space == space && last.start as usize + last.words.len() == start as usize {
                last.words.extend_from_slice(words);
                return;
            }
        }
        self.records.push(Record { space, start, words: words.to_vec() });
    }

    pub fn word_count(&self) -> usize {
        self.records.iter().map(|r| r.words.len()).sum()
    }

    /// Check the range and non-overlap invariants.
    pub fn validate(&self) -> Result<(), ObjectError> {
        let mut spans: Vec<(Space, usize, usize)> = Vec::with_capacity(self.records.len());
        for r in &self.records {
            let end = r.start as usize + r.words.len();
            if end > 0x10000 {
                return Err(ObjectError::Range { space: r.space, start: r.start, count: r.words.len() });
            }
            if !r.words.is_empty() {
                spans.push((r.space, r.start as usize, end));
            }
        }
        spans.sort();
        for pair in spans.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.0 == b.0 && b.1 < a.2 {
                return Err(ObjectError::Overlap(b.0, b.1 as u16));
            }
        }
        Ok(())
    }
}

const WORDS_PER_LINE: usize = 8;

/// Serialize to canonical DPX25 text.
pub fn write_object(img: &ObjectImage) -> Result<String, ObjectError> {
    img.validate()?;
    let mut out = String::from("DPX25\n");
    writeln!(out, "E {:04X}", img.entry).unwrap();
    for r in &img.records {
        writeln!(out, "{} {:04X} {:04X}", r.space.letter(), r.start, r.words.len()).unwrap();
        for chunk in r.words.chunks(WORDS_PER_LINE) {
            let line: Vec<String> = chunk.iter().map(|w| format!("{w:04X}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    for s in &img.symbols {
        writeln!(out, "S {} {} {:04X}", s.name, s.space.letter(), s.value).unwrap();
    }
    Ok(out)
}

fn hex16(token: &str, line: usize) -> Result<u16, ObjectError> {
    if token.is_empty() || token.len() > 4 {
        return Err(ObjectError::Syntax(line));
    }
    u16::from_str_radix(token, 16).map_err(|_| ObjectError::Syntax(line))
}

/// Parse DPX25 text.
pub fn read_object(text: &str) -> Result<ObjectImage, ObjectError> {
    let mut img = ObjectImage::new();
    let mut seen_header = false;
    // record being filled: (index, declared count, header line)
    let mut open: Option<(usize, usize, usize)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split(';').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if !seen_header {
            if tokens != ["DPX25"] {
                return Err(ObjectError::Syntax(line_no));
            }
            seen_header = true;
            continue;
        }
        if let Some((rec, expected, header_line)) = open {
            let words = &mut img.records[rec].words;
            // data words are exactly four hex digits; anything else ends the record early
            if tokens[0].len() != 4 {
                return Err(ObjectError::CountMismatch { line: header_line, expected, found: words.len() });
            }
            for t in &tokens {
                if t.len() != 4 {
                    return Err(ObjectError::Syntax(line_no));
                }
                words.push(hex16(t, line_no)?);
            }
            if words.len() > expected {
                return Err(ObjectError::CountMismatch { line: header_line, expected, found: words.len() });
            }
            if words.len() == expected {
                open = None;
            }
            continue;
        }
        match tokens[0] {
            "E" if tokens.len() == 2 => img.entry = hex16(tokens[1], line_no)?,
            "P" | "D" if tokens.len() == 3 => {
                let space = Space::from_letter(tokens[0]).unwrap();
                let start = hex16(tokens[1], line_no)?;
                let count = hex16(tokens[2], line_no)? as usize;
                if start as usize + count > 0x10000 {
                    return Err(ObjectError::Range { space, start, count });
                }
                img.records.push(Record { space, start, words: Vec::with_capacity(count) });
                if count > 0 {
                    open = Some((img.records.len() - 1, count, line_no));
                }
            }
            "S" if tokens.len() == 4 => {
                let space = SymbolSpace::from_letter(tokens[2]).ok_or(ObjectError::Syntax(line_no))?;
                img.symbols.push(Symbol { name: tokens[1].to_string(), space, value: hex16(tokens[3], line_no)? });
            }
            _ => return Err(ObjectError::Syntax(line_no)),
        }
    }
    if !seen_header {
        return Err(ObjectError::Syntax(1));
    }
    if let Some((rec, expected, header_line)) = open {
        let found = img.records[rec].words.len();
        return Err(ObjectError::CountMismatch { line: header_line, expected, found });
    }
    img.validate()?;
    Ok(img)
}

// TI COFF constants.
const COFF_V0_HEADER: usize = 20;
const COFF_V1_HEADER: usize = 22;
const COFF_V1_MAGIC: u16 = 0x00C1;
const COFF_C2X_TARGET: u16 = 0x0092;
const COFF_V0_SECTION: usize = 40;
const COFF_V1_SECTION: usize = 48;
const COFF_OPT_MAGIC: u16 = 0x0108;
const STYP_DSECT: u16 = 0x0001;
const STYP_NOLOAD: u16 = 0x0002;
const STYP_COPY: u16 = 0x0010;
const STYP_TEXT: u16 = 0x0020;
const STYP_DATA: u16 = 0x0040;

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn u16_at(&self, off: usize) -> Result<u16, ObjectError> {
        let b = self.0.get(off..off + 2).ok_or(ObjectError::TruncatedFile)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32_at(&self, off: usize) -> Result<u32, ObjectError> {
        let b = self.0.get(off..off + 4).ok_or(ObjectError::TruncatedFile)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Convert an absolute (fully linked) TI COFF file. Version 0 files start
/// with the target id and use 40-byte section headers; version 1 files
/// start with the version id 0x00C1 and use 48-byte section headers.
pub fn convert_coff(bytes: &[u8]) -> Result<ObjectImage, ObjectError> {
    let r = Reader(bytes);
    let magic = r.u16_at(0)?;
    let (header_len, section_len) = match magic {
        COFF_C2X_TARGET => (COFF_V0_HEADER, COFF_V0_SECTION),
        COFF_V1_MAGIC => (COFF_V1_HEADER, COFF_V1_SECTION),
        other => return Err(ObjectError::BadMagic(other)),
    };
    if bytes.len() < header_len {
        return Err(ObjectError::TruncatedFile);
    }
    let nsections = r.u16_at(2)? as usize;
    let opt_len = r.u16_at(16)? as usize;

    let mut img = ObjectImage::new();
    if opt_len >= 28 && r.u16_at(header_len)? == COFF_OPT_MAGIC {
        img.entry = r.u32_at(header_len + 16)? as u16;
    }

    let mut sections = header_len + opt_len;
    for _ in 0..nsections {
        let h = bytes.get(sections..sections + section_len).ok_or(ObjectError::TruncatedFile)?;
        let name: String = h[..8].iter().take_while(|b| **b != 0).map(|b| *b as char).collect();
        let paddr = r.u32_at(sections + 8)?;
        let size = r.u32_at(sections + 16)? as usize;
        let data_ptr = r.u32_at(sections + 20)? as usize;
        // v1 widens nreloc, nlnno and flags to 32 bits
        let (nreloc, flags) = if section_len == COFF_V0_SECTION {
            (r.u16_at(sections + 32)? as u32, r.u16_at(sections + 36)?)
        } else {
            (r.u32_at(sections + 32)?, r.u32_at(sections + 40)? as u16)
        };
        sections += section_len;

        if nreloc != 0 {
            return Err(ObjectError::UnsupportedRelocation(name));
        }
        if flags & (STYP_DSECT | STYP_NOLOAD | STYP_COPY) != 0 || size == 0 || data_ptr == 0 {
            continue;
        }
        let space = if flags & STYP_TEXT != 0 {
            Space::Prog
        } else if flags & STYP_DATA != 0 {
            Space::Data
        } else {
            continue;
        };
        let raw = bytes.get(data_ptr..data_ptr + size).ok_or(ObjectError::TruncatedFile)?;
        if raw.len() % 2 != 0 {
            return Err(ObjectError::TruncatedFile);
        }
        let words: Vec<u16> = raw.chunks_exact(2).map(|p| u16::from_le_bytes([p[0], p[1]])).collect();
        let start = paddr as usize;
        if start + words.len() > 0x10000 {
            return Err(ObjectError::Range { space, start: start as u16, count: words.len() });
        }
        img.records.push(Record { space, start: start as u16, words });
    }
    img.validate()?;
    Ok(img)
}
