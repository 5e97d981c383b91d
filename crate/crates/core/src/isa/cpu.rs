use super::encoding::{decode, ArUpdate, DecodeError, Instruction, Mnemonic, Mode};

pub const STACK_DEPTH: usize = 8;

/// Data address of the interrupt mask register.
const IMR_ADDR: u16 = 4;

/// ST1 bits kept verbatim but without behavior (C, HM, FSM, FO, TXM).
const ST1_INERT: u16 = 0x026C;

/// Memory and I/O as seen by the CPU.
pub trait Bus {
    fn read_prog(&mut self, addr: u16) -> u16;
    fn write_prog(&mut self, addr: u16, value: u16);
    fn read_data(&mut self, addr: u16) -> u16;
    fn write_data(&mut self, addr: u16, value: u16);
    fn io_in(&mut self, port: u8) -> u16;
    fn io_out(&mut self, port: u8, value: u16);
    /// Wait states charged per external memory access.
    fn wait_states(&self) -> u8 {
        0
    }
}

/// Maskable interrupt lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntLine {
    Int0,
    Int1,
    Int2,
    Tint,
    Rint,
    Xint,
}

impl IntLine {
    /// In priority order.
    pub const ALL: [IntLine; 6] =
        [IntLine::Int0, IntLine::Int1, IntLine::Int2, IntLine::Tint, IntLine::Rint, IntLine::Xint];

    pub fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn vector(self) -> u16 {
        match self {
            IntLine::Int0 => 0x0002,
            IntLine::Int1 => 0x0004,
            IntLine::Int2 => 0x0006,
            IntLine::Tint => 0x0018,
            IntLine::Rint => 0x001A,
            IntLine::Xint => 0x001C,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IntLine::Int0 => "INT0",
            IntLine::Int1 => "INT1",
            IntLine::Int2 => "INT2",
            IntLine::Tint => "TINT",
            IntLine::Rint => "RINT",
            IntLine::Xint => "XINT",
        }
    }
}

pub const TRAP_VECTOR: u16 = 0x001E;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    None,
    /// The CPU is in (or just entered) the IDLE state.
    Idle,
    Trap,
    IllegalOpcode(u16),
    InterruptTaken(IntLine),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepReport {
    /// `None` when no instruction ran: idle wait, interrupt dispatch or a held board.
    pub executed: Option<Instruction>,
    pub pc_before: u16,
    pub pc_after: u16,
    pub cycles: u32,
    pub event: StepEvent,
}

/// TMS320C25 register file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpuState {
    pub acc: i32,
    pub preg: i32,
    pub treg: u16,
    pub ar: [u16; 8],
    pub arp: u8,
    pub arb: u8,
    pub dp: u16,
    pub pc: u16,
    /// `stack[0]` is the top of stack.
    pub stack: [u16; STACK_DEPTH],
    pub ov: bool,
    pub ovm: bool,
    pub intm: bool,
    pub tc: bool,
    pub sxm: bool,
    pub xf: bool,
    pub cnf: bool,
    pub pm: u8,
    st1_inert: u16,
    pub imr: u8,
    pub pending: u8,
    pub rptc: u8,
    pub idle: bool,
    pub cycles: u64,
}

impl Default for CpuState {
    fn default() -> Self {
        let mut cpu = CpuState {
            acc: 0,
            preg: 0,
            treg: 0,
            ar: [0; 8],
            arp: 0,
            arb: 0,
            dp: 0,
            pc: 0,
            stack: [0; STACK_DEPTH],
            ov: false,
            ovm: false,
            intm: false,
            tc: false,
            sxm: false,
            xf: false,
            cnf: false,
            pm: 0,
            st1_inert: 0,
            imr: 0,
            pending: 0,
            rptc: 0,
            idle: false,
            cycles: 0,
        };
        cpu.reset();
        cpu
    }
}

/// Per-instruction access tally used by the cost model.
#[derive(Default)]
struct Accesses {
    mem: u32,
}

impl CpuState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Deterministic reset: everything cleared except INTM=1 and SXM=1.
    /// The cycle counter survives.
    pub fn reset(&mut self) {
        let cycles = self.cycles;
        *self = CpuState {
            acc: 0,
            preg: 0,
            treg: 0,
            ar: [0; 8],
            arp: 0,
            arb: 0,
            dp: 0,
            pc: 0,
            stack: [0; STACK_DEPTH],
            ov: false,
            ovm: false,
            intm: true,
            tc: false,
            sxm: true,
            xf: false,
            cnf: false,
            pm: 0,
            st1_inert: 0,
            imr: 0,
            pending: 0,
            rptc: 0,
            idle: false,
            cycles,
        };
    }

    pub fn request_interrupt(&mut self, line: IntLine) {
        self.pending |= line.bit();
    }

    pub fn st0(&self) -> u16 {
        (self.arp as u16) << 13
            | (self.ov as u16) << 12
            | (self.ovm as u16) << 11
            | 1 << 10
            | (self.intm as u16) << 9
            | self.dp
    }

    pub fn st1(&self) -> u16 {
        (self.arb as u16) << 13
            | (self.cnf as u16) << 12
            | (self.tc as u16) << 11
            | (self.sxm as u16) << 10
            | 0x0180
            | (self.xf as u16) << 4
            | self.st1_inert
            | self.pm as u16
    }

    /// Load ST0. INTM is left alone unless `with_intm` is set (LST never touches it).
    pub fn set_st0(&mut self, value: u16, with_intm: bool) {
        self.arp = (value >> 13) as u8;
        self.ov = value & 1 << 12 != 0;
        self.ovm = value & 1 << 11 != 0;
        if with_intm {
            self.intm = value & 1 << 9 != 0;
        }
        self.dp = value & 0x1FF;
    }

    pub fn set_st1(&mut self, value: u16) {
        self.arb = (value >> 13) as u8;
        self.cnf = value & 1 << 12 != 0;
        self.tc = value & 1 << 11 != 0;
        self.sxm = value & 1 << 10 != 0;
        self.xf = value & 1 << 4 != 0;
        self.st1_inert = value & ST1_INERT;
        self.pm = (value & 3) as u8;
    }

    pub fn push(&mut self, value: u16) {
        self.stack.copy_within(0..STACK_DEPTH - 1, 1);
        self.stack[0] = value;
    }

    /// Pop the top of stack; the bottom entry is duplicated into the vacated slot.
    pub fn pop(&mut self) -> u16 {
        let top = self.stack[0];
        self.stack.copy_within(1..STACK_DEPTH, 0);
        top
    }

    /// Highest-priority interrupt that would be taken at the next boundary.
    pub fn deliverable_interrupt(&self) -> Option<IntLine> {
        if self.intm {
            return None;
        }
        let ready = self.pending & self.imr;
        IntLine::ALL.into_iter().find(|l| ready & l.bit() != 0)
    }

    fn shifted_p(&self) -> i32 {
        match self.pm & 3 {
            0 => self.preg,
            1 => self.preg.wrapping_shl(1),
            2 => self.preg.wrapping_shl(4),
            _ => self.preg >> 6,
        }
    }

    /// Sign- or zero-extend a 16-bit operand according to SXM.
    fn extend(&self, value: u16) -> i64 {
        if self.sxm {
            value as i16 as i64
        } else {
            value as i64
        }
    }

    /// Accumulate with overflow detection and OVM saturation.
    fn acc_add(&mut self, addend: i64) {
        let sum = self.acc as i64 + addend;
        self.acc = if sum > i32::MAX as i64 {
            self.ov = true;
            if self.ovm {
                i32::MAX
            } else {
                sum as i32
            }
        } else if sum < i32::MIN as i64 {
            self.ov = true;
            if self.ovm {
                i32::MIN
            } else {
                sum as i32
            }
        } else {
            sum as i32
        };
    }

    fn negate_acc(&mut self) {
        if self.acc == i32::MIN {
            self.ov = true;
            self.acc = if self.ovm { i32::MAX } else { i32::MIN };
        } else {
            self.acc = -self.acc;
        }
    }

    fn read_data<B: Bus>(&mut self, bus: &mut B, addr: u16, acc: &mut Accesses) -> u16 {
        acc.mem += 1;
        if addr == IMR_ADDR {
            self.imr as u16
        } else {
            bus.read_data(addr)
        }
    }

    fn write_data<B: Bus>(&mut self, bus: &mut B, addr: u16, value: u16, acc: &mut Accesses) {
        acc.mem += 1;
        if addr == IMR_ADDR {
            self.imr = (value & 0x3F) as u8;
        }
        bus.write_data(addr, value);
    }

    /// Effective data address for a memory operand. Indirect updates are
    /// applied separately by [`CpuState::post_modify`].
    fn operand_address(&self, mode: Mode, page_zero: bool) -> u16 {
        match mode {
            Mode::Direct(dma) => {
                let page = if page_zero { 0 } else { self.dp };
                page << 7 | dma as u16
            }
            Mode::Indirect { .. } => self.ar[self.arp as usize],
            _ => 0,
        }
    }

    fn post_modify(&mut self, mode: Mode) {
        let Mode::Indirect { update, next_arp } = mode else {
            return;
        };
        let cur = self.arp as usize;
        let ar0 = self.ar[0];
        let ar = &mut self.ar[cur];
        *ar = match update {
            ArUpdate::None => *ar,
            ArUpdate::Dec => ar.wrapping_sub(1),
            ArUpdate::Inc => ar.wrapping_add(1),
            ArUpdate::SubAr0 => ar.wrapping_sub(ar0),
            ArUpdate::AddAr0 => ar.wrapping_add(ar0),
            ArUpdate::IncRev => reverse_carry_add(*ar, ar0),
            ArUpdate::DecRev => reverse_carry_sub(*ar, ar0),
        };
        if let Some(next) = next_arp {
            self.arb = self.arp;
            self.arp = next;
        }
    }

    /// Execute one instruction (or one RPT block, or dispatch one interrupt).
    pub fn step<B: Bus>(&mut self, bus: &mut B) -> StepReport {
        let pc_before = self.pc;
        let wait = bus.wait_states() as u32;

        if let Some(line) = self.deliverable_interrupt() {
            self.pending &= !line.bit();
            self.idle = false;
            self.push(self.pc);
            self.pc = line.vector();
            self.intm = true;
            return self.finish(None, pc_before, 2, StepEvent::InterruptTaken(line));
        }
        if self.idle {
            return self.finish(None, pc_before, 1, StepEvent::Idle);
        }

        let mut fetches = 1u32;
        let first = bus.read_prog(pc_before);
        let instr = match decode(first, || {
            fetches += 1;
            bus.read_prog(pc_before.wrapping_add(1))
        }) {
            Ok(instr) => instr,
            Err(DecodeError::IllegalOpcode(word)) => {
                self.pc = pc_before.wrapping_add(1);
                return self.finish(None, pc_before, 1 + wait, StepEvent::IllegalOpcode(word));
            }
        };
        self.pc = pc_before.wrapping_add(instr.width() as u16);

        let mut accesses = Accesses::default();
        let mut outcome = self.execute(&instr, bus, &mut accesses, None);
        let mut cycles = instr.width() as u32 + outcome.extra + wait * (fetches + accesses.mem);

        if matches!(instr.mnemonic, Mnemonic::Rpt | Mnemonic::Rptk) {
            // the repeated instruction executes rptc+1 times inside this step
            let rpt_pc = self.pc;
            let mut fetches = 1u32;
            let first = bus.read_prog(rpt_pc);
            match decode(first, || {
                fetches += 1;
                bus.read_prog(rpt_pc.wrapping_add(1))
            }) {
                Ok(inner) => {
                    self.pc = rpt_pc.wrapping_add(inner.width() as u16);
                    let count = if inner.mnemonic.changes_flow() { 1 } else { self.rptc as u32 + 1 };
                    let mut pfc = None;
                    for i in 0..count {
                        let mut acc = Accesses::default();
                        let out = self.execute_repeated(&inner, bus, &mut acc, &mut pfc);
                        cycles += if i == 0 {
                            inner.width() as u32 + out.extra + wait * (fetches + acc.mem)
                        } else {
                            1 + wait * acc.mem
                        };
                        outcome = out;
                    }
                    self.rptc = 0;
                }
                Err(DecodeError::IllegalOpcode(word)) => {
                    self.pc = rpt_pc.wrapping_add(1);
                    self.rptc = 0;
                    cycles += 1 + wait;
                    outcome.event = StepEvent::IllegalOpcode(word);
                }
            }
        }

        self.finish(Some(instr), pc_before, cycles, outcome.event)
    }

    fn finish(&mut self, executed: Option<Instruction>, pc_before: u16, cycles: u32, event: StepEvent) -> StepReport {
        self.cycles += cycles as u64;
        StepReport { executed, pc_before, pc_after: self.pc, cycles, event }
    }

    fn execute_repeated<B: Bus>(
        &mut self,
        instr: &Instruction,
        bus: &mut B,
        accesses: &mut Accesses,
        pfc: &mut Option<u16>,
    ) -> Outcome {
        let start = match instr.mnemonic {
            Mnemonic::Mac | Mnemonic::Macd => pfc.unwrap_or(instr.ext.unwrap_or(0)),
            Mnemonic::Tblr | Mnemonic::Tblw => pfc.unwrap_or(self.acc as u16),
            _ => 0,
        };
        let out = self.execute(instr, bus, accesses, Some(start));
        *pfc = Some(start.wrapping_add(1));
        out
    }

    /// Execute the semantics of `instr`. `pfc` overrides the program-memory
    /// address used by MAC/MACD/TBLR/TBLW inside a repeat block.
    fn execute<B: Bus>(&mut self, instr: &Instruction, bus: &mut B, acc: &mut Accesses, pfc: Option<u16>) -> Outcome {
        use Mnemonic::*;
        let mode = instr.mode;
        let mut out = Outcome::default();
        let imm = match mode {
            Mode::Imm(k) => k,
            _ => 0,
        };
        let status_page_zero = matches!(instr.mnemonic, Lst | Lst1 | Sst | Sst1);
        let addr = self.operand_address(mode, status_page_zero);

        match instr.mnemonic {
            Add | Sub | Lac => {
                let value = self.read_data(bus, addr, acc);
                let operand = self.extend(value) << instr.shift;
                match instr.mnemonic {
                    Add => self.acc_add(operand),
                    Sub => self.acc_add(-operand),
                    _ => self.acc = operand as i32,
                }
            }
            Addh => {
                let v = self.read_data(bus, addr, acc);
                self.acc_add(((v as i16 as i32) << 16) as i64);
            }
            Adds => {
                let v = self.read_data(bus, addr, acc);
                self.acc_add(v as i64);
            }
            Subh => {
                let v = self.read_data(bus, addr, acc);
                self.acc_add(-(((v as i16 as i32) << 16) as i64));
            }
            Subs => {
                let v = self.read_data(bus, addr, acc);
                self.acc_add(-(v as i64));
            }
            Addk => self.acc_add(imm as i64),
            Subk => self.acc_add(-(imm as i64)),
            Adlk => {
                let k = instr.ext.unwrap_or(0);
                self.acc_add(self.extend(k) << instr.shift);
            }
            Sblk => {
                let k = instr.ext.unwrap_or(0);
                self.acc_add(-(self.extend(k) << instr.shift));
            }
            Lalk => {
                let k = instr.ext.unwrap_or(0);
                self.acc = (self.extend(k) << instr.shift) as i32;
            }
            Lack => self.acc = imm as i32,
            Zalh => {
                let v = self.read_data(bus, addr, acc);
                self.acc = ((v as u32) << 16) as i32;
            }
            Zals => {
                let v = self.read_data(bus, addr, acc);
                self.acc = v as i32;
            }
            And => {
                let v = self.read_data(bus, addr, acc);
                self.acc &= v as i32;
            }
            Or => {
                let v = self.read_data(bus, addr, acc);
                self.acc |= v as i32;
            }
            Xor => {
                let v = self.read_data(bus, addr, acc);
                self.acc ^= v as i32;
            }
            Abs => {
                if self.acc < 0 {
                    self.negate_acc();
                }
            }
            Neg => self.negate_acc(),
            Cmpl => self.acc = !self.acc,
            Sfl => self.acc = self.acc.wrapping_shl(1),
            Sfr => {
                self.acc = if self.sxm { self.acc >> 1 } else { ((self.acc as u32) >> 1) as i32 };
            }
            Apac => self.acc_add(self.shifted_p() as i64),
            Spac => self.acc_add(-(self.shifted_p() as i64)),
            Pac => self.acc = self.shifted_p(),
            Mpy => {
                let v = self.read_data(bus, addr, acc);
                self.preg = self.treg as i16 as i32 * v as i16 as i32;
            }
            Mpyk => {
                let k = ((imm << 3) as i16) >> 3;
                self.preg = self.treg as i16 as i32 * k as i32;
            }
            Lt => self.treg = self.read_data(bus, addr, acc),
            Lta | Ltd => {
                let v = self.read_data(bus, addr, acc);
                self.treg = v;
                if instr.mnemonic == Ltd {
                    self.write_data(bus, addr.wrapping_add(1), v, acc);
                }
                self.acc_add(self.shifted_p() as i64);
            }
            Mac | Macd => {
                self.acc_add(self.shifted_p() as i64);
                let v = self.read_data(bus, addr, acc);
                self.treg = v;
                let pma = pfc.unwrap_or(instr.ext.unwrap_or(0));
                acc.mem += 1;
                let coef = bus.read_prog(pma);
                self.preg = v as i16 as i32 * coef as i16 as i32;
                if instr.mnemonic == Macd {
                    self.write_data(bus, addr.wrapping_add(1), v, acc);
                }
            }
            Dmov => {
                let v = self.read_data(bus, addr, acc);
                self.write_data(bus, addr.wrapping_add(1), v, acc);
            }
            Lar => {
                let v = self.read_data(bus, addr, acc);
                self.post_modify(mode);
                self.ar[instr.reg as usize & 7] = v;
                return out;
            }
            Sar => {
                let v = self.ar[instr.reg as usize & 7];
                self.write_data(bus, addr, v, acc);
            }
            Lark => self.ar[instr.reg as usize & 7] = imm,
            Lrlk => self.ar[instr.reg as usize & 7] = instr.ext.unwrap_or(0),
            Ldp => {
                let v = self.read_data(bus, addr, acc);
                self.dp = v & 0x1FF;
            }
            Ldpk => self.dp = imm & 0x1FF,
            Mar | Nop => {}
            Sacl => {
                let v = self.acc.wrapping_shl(instr.shift as u32) as u16;
                self.write_data(bus, addr, v, acc);
            }
            Sach => {
                let v = ((self.acc as u32).wrapping_shl(instr.shift as u32) >> 16) as u16;
                self.write_data(bus, addr, v, acc);
            }
            Sst => {
                let v = self.st0();
                self.write_data(bus, addr, v, acc);
            }
            Sst1 => {
                let v = self.st1();
                self.write_data(bus, addr, v, acc);
            }
            Lst => {
                let v = self.read_data(bus, addr, acc);
                self.post_modify(mode);
                self.set_st0(v, false);
                return out;
            }
            Lst1 => {
                let v = self.read_data(bus, addr, acc);
                self.post_modify(mode);
                self.set_st1(v);
                self.arp = self.arb;
                return out;
            }
            Push => self.push(self.acc as u16),
            Pop => self.acc = self.pop() as i32,
            In => {
                let v = bus.io_in(instr.reg);
                self.write_data(bus, addr, v, acc);
            }
            Out => {
                let v = self.read_data(bus, addr, acc);
                bus.io_out(instr.reg, v);
            }
            Tblr => {
                let src = pfc.unwrap_or(self.acc as u16);
                acc.mem += 1;
                let v = bus.read_prog(src);
                self.write_data(bus, addr, v, acc);
            }
            Tblw => {
                let dst = pfc.unwrap_or(self.acc as u16);
                let v = self.read_data(bus, addr, acc);
                acc.mem += 1;
                bus.write_prog(dst, v);
            }
            Rpt => {
                let v = self.read_data(bus, addr, acc);
                self.rptc = v as u8;
            }
            Rptk => self.rptc = imm as u8,
            Dint => self.intm = true,
            Eint => self.intm = false,
            Rovm => self.ovm = false,
            Sovm => self.ovm = true,
            Rsxm => self.sxm = false,
            Ssxm => self.sxm = true,
            Cnfd => self.cnf = false,
            Cnfp => self.cnf = true,
            Spm => self.pm = (imm & 3) as u8,
            Idle => {
                self.idle = true;
                out.event = StepEvent::Idle;
            }
            Trap => {
                self.push(self.pc);
                self.pc = TRAP_VECTOR;
                out.extra = 1;
                out.event = StepEvent::Trap;
            }
            Ret => {
                self.pc = self.pop();
                out.extra = 1;
            }
            B | Banz | Bgez | Bgz | Blez | Blz | Bnz | Bv | Bz | Call => {
                let target = instr.ext.unwrap_or(0);
                let a = self.acc;
                let taken = match instr.mnemonic {
                    B | Call => true,
                    Banz => self.ar[self.arp as usize] != 0,
                    Bgez => a >= 0,
                    Bgz => a > 0,
                    Blez => a <= 0,
                    Blz => a < 0,
                    Bnz => a != 0,
                    Bz => a == 0,
                    Bv => {
                        let ov = self.ov;
                        self.ov = false;
                        ov
                    }
                    _ => unreachable!(),
                };
                if taken {
                    if instr.mnemonic == Call {
                        self.push(self.pc);
                    }
                    self.pc = target;
                    out.extra = 1;
                }
            }
        }
        self.post_modify(mode);
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    extra: u32,
    event: StepEvent,
}

impl Default for Outcome {
    fn default() -> Self {
        Outcome { extra: 0, event: StepEvent::None }
    }
}

/// Add with the carry propagating from the MSB towards the LSB.
pub(crate) fn reverse_carry_add(ar: u16, step: u16) -> u16 {
    ar.reverse_bits().wrapping_add(step.reverse_bits()).reverse_bits()
}

pub(crate) fn reverse_carry_sub(ar: u16, step: u16) -> u16 {
    ar.reverse_bits().wrapping_sub(step.reverse_bits()).reverse_bits()
}
