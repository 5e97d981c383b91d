use super::encoding::{ArUpdate, Form, Instruction, Mode};

fn indirect(update: ArUpdate, next_arp: Option<u8>, with_shift: Option<u8>) -> String {
    let mut out = update.syntax().to_string();
    match (with_shift, next_arp) {
        (Some(shift), Some(arp)) => out.push_str(&format!(",{shift},AR{arp}")),
        (Some(shift), None) if shift != 0 => out.push_str(&format!(",{shift}")),
        (None, Some(arp)) => out.push_str(&format!(",AR{arp}")),
        _ => {}
    }
    out
}

fn mem_operand(mode: Mode, shift: Option<u8>) -> String {
    match mode {
        Mode::Direct(dma) => match shift {
            Some(s) if s != 0 => format!("0x{dma:02X},{s}"),
            _ => format!("0x{dma:02X}"),
        },
        Mode::Indirect { update, next_arp } => indirect(update, next_arp, shift),
        _ => String::new(),
    }
}

/// Render an instruction as assembler source text that reassembles to the
/// same words.
pub fn disassemble(instr: &Instruction) -> String {
    let name = instr.mnemonic.name();
    let imm = match instr.mode {
        Mode::Imm(k) => k,
        _ => 0,
    };
    let ext = instr.ext.unwrap_or(0);
    let operands = match instr.mnemonic.form() {
        Form::MemShift4(_) | Form::MemShift3(_) => mem_operand(instr.mode, Some(instr.shift)),
        Form::Mem(_) => mem_operand(instr.mode, None),
        Form::MemAr(_) => format!("AR{},{}", instr.reg, mem_operand(instr.mode, None)),
        Form::MemPort(_) => match instr.mode {
            Mode::Indirect { update, next_arp } => {
                let mut s = format!("{},{}", update.syntax(), instr.reg);
                if let Some(arp) = next_arp {
                    s.push_str(&format!(",AR{arp}"));
                }
                s
            }
            mode => format!("{},{}", mem_operand(mode, None), instr.reg),
        },
        Form::MemPma(_) => format!("0x{ext:04X},{}", mem_operand(instr.mode, None)),
        Form::Branch(_) => match instr.mode {
            Mode::Indirect { update: ArUpdate::None, next_arp: None } => format!("0x{ext:04X}"),
            mode => format!("0x{ext:04X},{}", mem_operand(mode, None)),
        },
        Form::Imm8(_) | Form::Imm9(_) => format!("0x{imm:02X}"),
        Form::Imm8Ar(_) => format!("AR{},0x{imm:02X}", instr.reg),
        Form::Imm13(_) => format!("{}", ((imm << 3) as i16) >> 3),
        Form::Imm2(_) => format!("{imm}"),
        Form::Long(_) if instr.shift != 0 => format!("0x{ext:04X},{}", instr.shift),
        Form::Long(_) => format!("0x{ext:04X}"),
        Form::LongAr(_) => format!("AR{},0x{ext:04X}", instr.reg),
        Form::Fixed(_) => String::new(),
    };
    if operands.is_empty() {
        name.to_string()
    } else {
        format!("{name} {operands}")
    }
}
