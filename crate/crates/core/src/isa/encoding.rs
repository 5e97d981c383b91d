use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

/// Operand layout of an opcode family. Determines which fields of an
/// [`Instruction`] are meaningful and how they pack into the first word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `oooo SSSS I ddddddd`: data operand with a 4-bit left shift.
    MemShift4(u16),
    /// `oooo oSSS I ddddddd`: data operand with a 3-bit shift (stores).
    MemShift3(u16),
    /// `oooooooo I ddddddd`: plain data operand.
    Mem(u16),
    /// `ooooo RRR I ddddddd`: auxiliary register plus data operand.
    MemAr(u16),
    /// `oooo PPPP I ddddddd`: I/O port plus data operand.
    MemPort(u16),
    /// Data operand followed by a program address word.
    MemPma(u16),
    /// `oooooooo 1 xxxxxxx` + target: branch with auxiliary register update.
    Branch(u16),
    /// `oooooooo kkkkkkkk`
    Imm8(u16),
    /// `ooooo RRR kkkkkkkk`
    Imm8Ar(u16),
    /// `ooooooo kkkkkkkkk`
    Imm9(u16),
    /// `ooo kkkkkkkkkkkkk`
    Imm13(u16),
    /// `oooooooooooooo kk`
    Imm2(u16),
    /// `oooo SSSS oooooooo` + 16-bit constant.
    Long(u16),
    /// `ooooo RRR oooooooo` + 16-bit constant.
    LongAr(u16),
    /// Single fixed word, no operands.
    Fixed(u16),
}

macro_rules! mnemonics {
    ($($variant:ident $name:literal $form:expr;)*) => {
        /// Supported instruction mnemonics.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Mnemonic {
            $($variant,)*
        }

        impl Mnemonic {
            pub const ALL: &'static [Mnemonic] = &[$(Mnemonic::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Mnemonic::$variant => $name,)*
                }
            }

            pub fn form(self) -> Form {
                use Form::*;
                match self {
                    $(Mnemonic::$variant => $form,)*
                }
            }
        }
    };
}

mnemonics! {
    Abs "ABS" Fixed(0xCE1B);
    Add "ADD" MemShift4(0x0000);
    Addh "ADDH" Mem(0x4800);
    Addk "ADDK" Imm8(0xCC00);
    Adds "ADDS" Mem(0x4900);
    Adlk "ADLK" Long(0xD002);
    And "AND" Mem(0x4E00);
    Apac "APAC" Fixed(0xCE15);
    B "B" Branch(0xFF80);
    Banz "BANZ" Branch(0xFB80);
    Bgez "BGEZ" Branch(0xF480);
    Bgz "BGZ" Branch(0xF180);
    Blez "BLEZ" Branch(0xF280);
    Blz "BLZ" Branch(0xF380);
    Bnz "BNZ" Branch(0xF580);
    Bv "BV" Branch(0xF080);
    Bz "BZ" Branch(0xF680);
    Call "CALL" Branch(0xFE80);
    Cmpl "CMPL" Fixed(0xCE27);
    Cnfd "CNFD" Fixed(0xCE04);
    Cnfp "CNFP" Fixed(0xCE05);
    Dint "DINT" Fixed(0xCE01);
    Dmov "DMOV" Mem(0x5600);
    Eint "EINT" Fixed(0xCE00);
    Idle "IDLE" Fixed(0xCE1F);
    In "IN" MemPort(0x8000);
    Lac "LAC" MemShift4(0x2000);
    Lack "LACK" Imm8(0xCA00);
    Lalk "LALK" Long(0xD001);
    Lar "LAR" MemAr(0x3000);
    Lark "LARK" Imm8Ar(0xC000);
    Ldp "LDP" Mem(0x5200);
    Ldpk "LDPK" Imm9(0xC800);
    Lrlk "LRLK" LongAr(0xD000);
    Lst "LST" Mem(0x5000);
    Lst1 "LST1" Mem(0x5100);
    Lt "LT" Mem(0x3C00);
    Lta "LTA" Mem(0x3D00);
    Ltd "LTD" Mem(0x3F00);
    Mac "MAC" MemPma(0x5D00);
    Macd "MACD" MemPma(0x5C00);
    Mar "MAR" Mem(0x5500);
    Mpy "MPY" Mem(0x3800);
    Mpyk "MPYK" Imm13(0xA000);
    Neg "NEG" Fixed(0xCE23);
    Nop "NOP" Fixed(0x5500);
    Or "OR" Mem(0x4D00);
    Out "OUT" MemPort(0xE000);
    Pac "PAC" Fixed(0xCE14);
    Pop "POP" Fixed(0xCE1D);
    Push "PUSH" Fixed(0xCE1C);
    Ret "RET" Fixed(0xCE26);
    Rovm "ROVM" Fixed(0xCE02);
    Rpt "RPT" Mem(0x4B00);
    Rptk "RPTK" Imm8(0xCB00);
    Rsxm "RSXM" Fixed(0xCE06);
    Sach "SACH" MemShift3(0x6800);
    Sacl "SACL" MemShift3(0x6000);
    Sar "SAR" MemAr(0x7000);
    Sblk "SBLK" Long(0xD003);
    Sfl "SFL" Fixed(0xCE18);
    Sfr "SFR" Fixed(0xCE19);
    Sovm "SOVM" Fixed(0xCE03);
    Spac "SPAC" Fixed(0xCE16);
    Spm "SPM" Imm2(0xCE08);
    Sst "SST" Mem(0x7800);
    Sst1 "SST1" Mem(0x7900);
    Ssxm "SSXM" Fixed(0xCE07);
    Sub "SUB" MemShift4(0x1000);
    Subh "SUBH" Mem(0x4400);
    Subk "SUBK" Imm8(0xCD00);
    Subs "SUBS" Mem(0x4500);
    Tblr "TBLR" Mem(0x5800);
    Tblw "TBLW" Mem(0x5900);
    Trap "TRAP" Fixed(0xCE1E);
    Xor "XOR" Mem(0x4C00);
    Zalh "ZALH" Mem(0x4000);
    Zals "ZALS" Mem(0x4100);
}

impl Mnemonic {
    /// Case-insensitive lookup by assembler name.
    pub fn from_name(name: &str) -> Option<Mnemonic> {
        Mnemonic::ALL.iter().copied().find(|m| m.name().eq_ignore_ascii_case(name))
    }

    pub fn width(self) -> u8 {
        match self.form() {
            Form::MemPma(_) | Form::Branch(_) | Form::Long(_) | Form::LongAr(_) => 2,
            _ => 1,
        }
    }

    /// True for instructions that take a data-memory operand (direct or indirect).
    pub fn has_mem_operand(self) -> bool {
        matches!(
            self.form(),
            Form::MemShift4(_)
                | Form::MemShift3(_)
                | Form::Mem(_)
                | Form::MemAr(_)
                | Form::MemPort(_)
                | Form::MemPma(_)
        )
    }

    pub fn max_shift(self) -> u8 {
        match self.form() {
            Form::MemShift4(_) | Form::Long(_) => 15,
            Form::MemShift3(_) => 7,
            _ => 0,
        }
    }

    /// Number of values the `reg` field can take (0 when unused).
    pub fn reg_count(self) -> u8 {
        match self.form() {
            Form::MemAr(_) | Form::Imm8Ar(_) | Form::LongAr(_) => 8,
            Form::MemPort(_) => 16,
            _ => 0,
        }
    }

    /// Bit width of the short immediate, if the form carries one.
    pub fn imm_bits(self) -> Option<u8> {
        match self.form() {
            Form::Imm8(_) | Form::Imm8Ar(_) => Some(8),
            Form::Imm9(_) => Some(9),
            Form::Imm13(_) => Some(13),
            Form::Imm2(_) => Some(2),
            _ => None,
        }
    }

    /// Instructions that transfer control and therefore never repeat under RPT.
    pub fn changes_flow(self) -> bool {
        matches!(self.form(), Form::Branch(_))
            || matches!(self, Mnemonic::Ret | Mnemonic::Trap | Mnemonic::Idle | Mnemonic::Rpt | Mnemonic::Rptk)
    }
}

impl fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Auxiliary register update performed after an indirect access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArUpdate {
    /// `*`
    None,
    /// `*-`
    Dec,
    /// `*+`
    Inc,
    /// `*BR0-`
    DecRev,
    /// `*0-`
    SubAr0,
    /// `*0+`
    AddAr0,
    /// `*BR0+`
    IncRev,
}

impl ArUpdate {
    pub const ALL: [ArUpdate; 7] = [
        ArUpdate::None,
        ArUpdate::Dec,
        ArUpdate::Inc,
        ArUpdate::DecRev,
        ArUpdate::SubAr0,
        ArUpdate::AddAr0,
        ArUpdate::IncRev,
    ];

    fn code(self) -> u16 {
        match self {
            ArUpdate::None => 0,
            ArUpdate::Dec => 1,
            ArUpdate::Inc => 2,
            ArUpdate::DecRev => 4,
            ArUpdate::SubAr0 => 5,
            ArUpdate::AddAr0 => 6,
            ArUpdate::IncRev => 7,
        }
    }

    fn from_code(code: u16) -> Option<ArUpdate> {
        Some(match code {
            0 => ArUpdate::None,
            1 => ArUpdate::Dec,
            2 => ArUpdate::Inc,
            4 => ArUpdate::DecRev,
            5 => ArUpdate::SubAr0,
            6 => ArUpdate::AddAr0,
            7 => ArUpdate::IncRev,
            _ => return None,
        })
    }

    pub fn syntax(self) -> &'static str {
        match self {
            ArUpdate::None => "*",
            ArUpdate::Dec => "*-",
            ArUpdate::Inc => "*+",
            ArUpdate::DecRev => "*BR0-",
            ArUpdate::SubAr0 => "*0-",
            ArUpdate::AddAr0 => "*0+",
            ArUpdate::IncRev => "*BR0+",
        }
    }

    pub fn from_syntax(text: &str) -> Option<ArUpdate> {
        let upper = text.to_ascii_uppercase();
        ArUpdate::ALL.iter().copied().find(|u| u.syntax() == upper)
    }
}

/// Addressing mode of a decoded instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    None,
    /// 7-bit offset within the page selected by DP.
    Direct(u8),
    /// Through AR(ARP), with optional load of a new ARP afterwards.
    Indirect {
        update: ArUpdate,
        next_arp: Option<u8>,
    },
    /// Short immediate embedded in the opcode word.
    Imm(u16),
}

/// One decoded instruction.
///
/// `shift` is meaningful only for shifting forms, `reg` holds the auxiliary
/// register or port number for the forms that encode one, and `ext` is the
/// second word of two-word instructions (branch target, program address or
/// long constant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub mnemonic: Mnemonic,
    pub mode: Mode,
    pub shift: u8,
    pub reg: u8,
    pub ext: Option<u16>,
}

impl Instruction {
    pub fn new(mnemonic: Mnemonic) -> Self {
        Instruction { mnemonic, mode: Mode::None, shift: 0, reg: 0, ext: None }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_shift(mut self, shift: u8) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_reg(mut self, reg: u8) -> Self {
        self.reg = reg;
        self
    }

    pub fn with_ext(mut self, ext: u16) -> Self {
        self.ext = Some(ext);
        self
    }

    pub fn width(&self) -> u8 {
        self.mnemonic.width()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("operand out of range: {0}")]
    OperandRange(String),
    #[error("{0} does not accept this addressing mode")]
    BadMode(Mnemonic),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("illegal opcode {0:04X}")]
    IllegalOpcode(u16),
}

fn range(what: &str, value: impl fmt::Display, max: impl fmt::Display) -> EncodeError {
    EncodeError::OperandRange(format!("{what} {value} exceeds {max}"))
}

fn encode_mem(instr: &Instruction) -> Result<u16, EncodeError> {
    match instr.mode {
        Mode::Direct(dma) if dma <= 0x7F => Ok(dma as u16),
        Mode::Direct(dma) => Err(range("dma", dma, 127)),
        Mode::Indirect { update, next_arp } => encode_indirect(update, next_arp),
        _ => Err(EncodeError::BadMode(instr.mnemonic)),
    }
}

fn encode_indirect(update: ArUpdate, next_arp: Option<u8>) -> Result<u16, EncodeError> {
    let mut bits = 0x80 | update.code() << 4;
    if let Some(arp) = next_arp {
        if arp > 7 {
            return Err(range("next ARP", arp, 7));
        }
        bits |= 0x08 | arp as u16;
    }
    Ok(bits)
}

fn decode_mem(low: u16) -> Option<Mode> {
    if low & 0x80 == 0 {
        return Some(Mode::Direct((low & 0x7F) as u8));
    }
    let update = ArUpdate::from_code((low >> 4) & 7)?;
    let next_arp = if low & 0x08 != 0 {
        Some((low & 7) as u8)
    } else if low & 7 != 0 {
        return None;
    } else {
        None
    };
    Some(Mode::Indirect { update, next_arp })
}

fn check_shift(instr: &Instruction) -> Result<u16, EncodeError> {
    let max = instr.mnemonic.max_shift();
    if instr.shift > max {
        return Err(range("shift", instr.shift, max));
    }
    Ok(instr.shift as u16)
}

fn check_reg(instr: &Instruction) -> Result<u16, EncodeError> {
    let count = instr.mnemonic.reg_count();
    if instr.reg >= count {
        return Err(range("register/port", instr.reg, count - 1));
    }
    Ok(instr.reg as u16)
}

fn check_imm(instr: &Instruction) -> Result<u16, EncodeError> {
    let bits = instr.mnemonic.imm_bits().unwrap_or(0);
    match instr.mode {
        Mode::Imm(k) if (k as u32) < (1u32 << bits) => Ok(k),
        Mode::Imm(k) => Err(range("constant", k, (1u32 << bits) - 1)),
        _ => Err(EncodeError::BadMode(instr.mnemonic)),
    }
}

fn require_ext(instr: &Instruction) -> Result<u16, EncodeError> {
    instr.ext.ok_or_else(|| EncodeError::OperandRange(format!("{} needs a second word", instr.mnemonic)))
}

fn reject_ext(instr: &Instruction) -> Result<(), EncodeError> {
    match instr.ext {
        None => Ok(()),
        Some(_) => Err(EncodeError::OperandRange(format!("{} is a one-word instruction", instr.mnemonic))),
    }
}

/// Encode an instruction into one or two words.
pub fn encode(instr: &Instruction) -> Result<Vec<u16>, EncodeError> {
    use Form::*;
    let m = instr.mnemonic;
    let first = match m.form() {
        MemShift4(base) | MemShift3(base) => base | check_shift(instr)? << 8 | encode_mem(instr)?,
        Mem(base) => base | encode_mem(instr)?,
        MemAr(base) | MemPort(base) => base | check_reg(instr)? << 8 | encode_mem(instr)?,
        MemPma(base) => base | encode_mem(instr)?,
        Branch(base) => match instr.mode {
            Mode::Indirect { update, next_arp } => (base & 0xFF00) | encode_indirect(update, next_arp)?,
            _ => return Err(EncodeError::BadMode(m)),
        },
        Imm8(base) | Imm9(base) | Imm13(base) | Imm2(base) => base | check_imm(instr)?,
        Imm8Ar(base) => base | check_reg(instr)? << 8 | check_imm(instr)?,
        Long(base) => {
            if instr.mode != Mode::None {
                return Err(EncodeError::BadMode(m));
            }
            base | check_shift(instr)? << 8
        }
        LongAr(base) => {
            if instr.mode != Mode::None {
                return Err(EncodeError::BadMode(m));
            }
            base | check_reg(instr)? << 8
        }
        Fixed(word) => {
            if instr.mode != Mode::None {
                return Err(EncodeError::BadMode(m));
            }
            word
        }
    };
    if m.width() == 2 {
        Ok(vec![first, require_ext(instr)?])
    } else {
        reject_ext(instr)?;
        Ok(vec![first])
    }
}

/// Every first word a mnemonic can produce.
fn first_words(m: Mnemonic) -> Vec<u16> {
    use Form::*;
    let mem_lows: Vec<u16> = (0..=0xFFu16).filter(|low| decode_mem(*low).is_some()).collect();
    let mut out = Vec::new();
    match m.form() {
        MemShift4(base) => {
            for s in 0..16u16 {
                out.extend(mem_lows.iter().map(|l| base | s << 8 | l));
            }
        }
        MemShift3(base) | MemAr(base) => {
            for s in 0..8u16 {
                out.extend(mem_lows.iter().map(|l| base | s << 8 | l));
            }
        }
        MemPort(base) => {
            for p in 0..16u16 {
                out.extend(mem_lows.iter().map(|l| base | p << 8 | l));
            }
        }
        Mem(base) | MemPma(base) => {
            // MAR with dma 0 is the NOP encoding
            let skip_nop = m == Mnemonic::Mar;
            out.extend(mem_lows.iter().filter(|l| !(skip_nop && **l == 0)).map(|l| base | l));
        }
        Branch(base) => {
            out.extend(mem_lows.iter().filter(|l| **l & 0x80 != 0).map(|l| (base & 0xFF00) | l));
        }
        Imm8(base) => out.extend((0..256u16).map(|k| base | k)),
        Imm8Ar(base) => {
            for r in 0..8u16 {
                out.extend((0..256u16).map(|k| base | r << 8 | k));
            }
        }
        Imm9(base) => out.extend((0..512u16).map(|k| base | k)),
        Imm13(base) => out.extend((0..8192u16).map(|k| base | k)),
        Imm2(base) => out.extend((0..4u16).map(|k| base | k)),
        Long(base) => out.extend((0..16u16).map(|s| base | s << 8)),
        LongAr(base) => out.extend((0..8u16).map(|r| base | r << 8)),
        Fixed(word) => out.push(word),
    }
    out
}

fn opcode_table() -> &'static [Option<Mnemonic>] {
    static TABLE: OnceLock<Vec<Option<Mnemonic>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = vec![None; 0x10000];
        for &m in Mnemonic::ALL {
            for word in first_words(m) {
                let slot = &mut table[word as usize];
                assert!(slot.is_none(), "opcode {word:04X} claimed by {:?} and {m:?}", slot);
                *slot = Some(m);
            }
        }
        table
    })
}

/// Decode the instruction whose first word is `first`. `second` supplies
/// the following word and is only consulted for two-word opcodes.
pub fn decode(first: u16, second: impl FnOnce() -> u16) -> Result<Instruction, DecodeError> {
    use Form::*;
    let m = opcode_table()[first as usize].ok_or(DecodeError::IllegalOpcode(first))?;
    let low = first & 0xFF;
    let mut instr = Instruction::new(m);
    let mem = || decode_mem(low).expect("opcode table only admits valid addressing bits");
    match m.form() {
        MemShift4(_) | MemShift3(_) => {
            instr.shift = ((first >> 8) & m.max_shift() as u16) as u8;
            instr.mode = mem();
        }
        MemAr(_) => {
            instr.reg = ((first >> 8) & 7) as u8;
            instr.mode = mem();
        }
        MemPort(_) => {
            instr.reg = ((first >> 8) & 0xF) as u8;
            instr.mode = mem();
        }
        Mem(_) | MemPma(_) | Branch(_) => instr.mode = mem(),
        Imm8(_) => instr.mode = Mode::Imm(low),
        Imm8Ar(_) => {
            instr.reg = ((first >> 8) & 7) as u8;
            instr.mode = Mode::Imm(low);
        }
        Imm9(_) => instr.mode = Mode::Imm(first & 0x1FF),
        Imm13(_) => instr.mode = Mode::Imm(first & 0x1FFF),
        Imm2(_) => instr.mode = Mode::Imm(first & 3),
        Long(_) => instr.shift = ((first >> 8) & 0xF) as u8,
        LongAr(_) => instr.reg = ((first >> 8) & 7) as u8,
        Fixed(_) => {}
    }
    if m.width() == 2 {
        instr.ext = Some(second());
    }
    Ok(instr)
}
