use super::parse::{eval_expr, ExprError};
use crate::isa::{ArUpdate, Form, Instruction, Mnemonic, Mode};

#[derive(Debug)]
pub(crate) enum OperandError {
    Expr(ExprError),
    Range(String),
    Syntax(String),
    Unknown(String),
}

impl From<ExprError> for OperandError {
    fn from(e: ExprError) -> Self {
        OperandError::Expr(e)
    }
}

type Lookup<'a> = &'a dyn Fn(&str) -> Option<i64>;

/// Words occupied by an operation, `None` if it is not an instruction.
pub(crate) fn width_of(op: &str) -> Option<u8> {
    if op.eq_ignore_ascii_case("ZAC") || op.eq_ignore_ascii_case("LARP") {
        return Some(1);
    }
    Mnemonic::from_name(op).map(Mnemonic::width)
}

struct Ctx<'a> {
    name: String,
    here: u16,
    lookup: Lookup<'a>,
}

impl Ctx<'_> {
    fn value(&self, text: &str, lo: i64, hi: i64, what: &str) -> Result<i64, OperandError> {
        let v = eval_expr(text, self.here as i64, self.lookup)?;
        if v < lo || v > hi {
            return Err(OperandError::Range(format!("{} {what} {v} outside {lo}..{hi}", self.name)));
        }
        Ok(v)
    }

    fn count(&self, ops: &[String], allowed: &[usize]) -> Result<(), OperandError> {
        if allowed.contains(&ops.len()) {
            Ok(())
        } else {
            Err(OperandError::Syntax(format!(
                "{} takes {} operand(s), found {}",
                self.name,
                describe(allowed),
                ops.len()
            )))
        }
    }

    /// `ARn` or a plain expression 0..7.
    fn ar(&self, text: &str) -> Result<u8, OperandError> {
        let t = text.trim();
        if t.len() == 3 && t[..2].eq_ignore_ascii_case("AR") {
            if let Some(d) = t[2..].chars().next().and_then(|c| c.to_digit(10)).filter(|d| *d < 8) {
                return Ok(d as u8);
            }
        }
        Ok(self.value(t, 0, 7, "auxiliary register")? as u8)
    }
}

fn describe(allowed: &[usize]) -> String {
    let parts: Vec<String> = allowed.iter().map(|n| n.to_string()).collect();
    parts.join(" or ")
}

fn indirect_update(text: &str) -> Option<ArUpdate> {
    let t = text.trim();
    t.starts_with('*').then(|| ArUpdate::from_syntax(&t.to_ascii_uppercase())).flatten()
}

/// Memory operand plus the operands that follow it: either a direct address
/// with `tail` or `*mod` with `tail` and an optional trailing `ARn`.
fn mem(ctx: &Ctx, ops: &[String], tail_max: usize) -> Result<(Mode, Vec<String>), OperandError> {
    let Some(first) = ops.first() else {
        return Err(OperandError::Syntax(format!("{} needs a data operand", ctx.name)));
    };
    if first.trim().starts_with('*') {
        let update = indirect_update(first)
            .ok_or_else(|| OperandError::Syntax(format!("bad indirect operand '{}'", first.trim())))?;
        let rest = &ops[1..];
        if rest.len() > tail_max + 1 {
            return Err(OperandError::Syntax(format!("too many operands for {}", ctx.name)));
        }
        let (tail, next_arp) = if rest.len() == tail_max + 1 {
            (rest[..tail_max].to_vec(), Some(ctx.ar(&rest[tail_max])?))
        } else {
            (rest.to_vec(), None)
        };
        Ok((Mode::Indirect { update, next_arp }, tail))
    } else {
        let rest = &ops[1..];
        if rest.len() > tail_max {
            return Err(OperandError::Syntax(format!("too many operands for {}", ctx.name)));
        }
        let dma = ctx.value(first, 0, 127, "data address")? as u8;
        Ok((Mode::Direct(dma), rest.to_vec()))
    }
}

/// Build the instruction for `op` with its operand strings.
pub(crate) fn build(op: &str, ops: &[String], here: u16, lookup: Lookup) -> Result<Instruction, OperandError> {
    let ctx = Ctx { name: op.to_ascii_uppercase(), here, lookup };
    if op.eq_ignore_ascii_case("ZAC") {
        ctx.count(ops, &[0])?;
        return Ok(Instruction::new(Mnemonic::Lack).with_mode(Mode::Imm(0)));
    }
    if op.eq_ignore_ascii_case("LARP") {
        ctx.count(ops, &[1])?;
        let arp = ctx.ar(&ops[0])?;
        return Ok(
            Instruction::new(Mnemonic::Mar).with_mode(Mode::Indirect { update: ArUpdate::None, next_arp: Some(arp) })
        );
    }
    let m = Mnemonic::from_name(op).ok_or_else(|| OperandError::Unknown(op.to_string()))?;
    let base = Instruction::new(m);
    let shift_of = |tail: &[String], max: u8| -> Result<u8, OperandError> {
        match tail.first() {
            Some(s) => Ok(ctx.value(s, 0, max as i64, "shift")? as u8),
            None => Ok(0),
        }
    };
    let instr = match m.form() {
        Form::MemShift4(_) | Form::MemShift3(_) => {
            let (mode, tail) = mem(&ctx, ops, 1)?;
            base.with_mode(mode).with_shift(shift_of(&tail, m.max_shift())?)
        }
        Form::Mem(_) => base.with_mode(mem(&ctx, ops, 0)?.0),
        Form::MemAr(_) => {
            if ops.is_empty() {
                return Err(OperandError::Syntax(format!("{} needs an auxiliary register", ctx.name)));
            }
            let reg = ctx.ar(&ops[0])?;
            base.with_reg(reg).with_mode(mem(&ctx, &ops[1..], 0)?.0)
        }
        Form::MemPort(_) => {
            let (mode, tail) = mem(&ctx, ops, 1)?;
            let Some(port) = tail.first() else {
                return Err(OperandError::Syntax(format!("{} needs a port number", ctx.name)));
            };
            base.with_mode(mode).with_reg(ctx.value(port, 0, 15, "port")? as u8)
        }
        Form::MemPma(_) => {
            if ops.is_empty() {
                return Err(OperandError::Syntax(format!("{} needs a program address", ctx.name)));
            }
            let pma = ctx.value(&ops[0], 0, 0xFFFF, "program address")? as u16;
            base.with_ext(pma).with_mode(mem(&ctx, &ops[1..], 0)?.0)
        }
        Form::Branch(_) => {
            if ops.is_empty() {
                return Err(OperandError::Syntax(format!("{} needs a target", ctx.name)));
            }
            let target = ctx.value(&ops[0], 0, 0xFFFF, "target")? as u16;
            let mode = if ops.len() == 1 {
                let update = if m == Mnemonic::Banz { ArUpdate::Dec } else { ArUpdate::None };
                Mode::Indirect { update, next_arp: None }
            } else {
                match mem(&ctx, &ops[1..], 0)?.0 {
                    Mode::Direct(_) => {
                        return Err(OperandError::Syntax(format!("{} takes an indirect operand", ctx.name)))
                    }
                    mode => mode,
                }
            };
            base.with_ext(target).with_mode(mode)
        }
        Form::Imm8(_) => {
            ctx.count(ops, &[1])?;
            base.with_mode(Mode::Imm(ctx.value(&ops[0], 0, 255, "constant")? as u16))
        }
        Form::Imm8Ar(_) => {
            ctx.count(ops, &[2])?;
            let reg = ctx.ar(&ops[0])?;
            base.with_reg(reg).with_mode(Mode::Imm(ctx.value(&ops[1], 0, 255, "constant")? as u16))
        }
        Form::Imm9(_) => {
            ctx.count(ops, &[1])?;
            base.with_mode(Mode::Imm(ctx.value(&ops[0], 0, 511, "page")? as u16))
        }
        Form::Imm13(_) => {
            ctx.count(ops, &[1])?;
            let k = ctx.value(&ops[0], -4096, 4095, "constant")?;
            base.with_mode(Mode::Imm((k as u16) & 0x1FFF))
        }
        Form::Imm2(_) => {
            ctx.count(ops, &[1])?;
            base.with_mode(Mode::Imm(ctx.value(&ops[0], 0, 3, "mode")? as u16))
        }
        Form::Long(_) => {
            ctx.count(ops, &[1, 2])?;
            let k = ctx.value(&ops[0], -32768, 0xFFFF, "constant")? as u16;
            base.with_ext(k).with_shift(shift_of(&ops[1..], 15)?)
        }
        Form::LongAr(_) => {
            ctx.count(ops, &[2])?;
            let reg = ctx.ar(&ops[0])?;
            base.with_reg(reg).with_ext(ctx.value(&ops[1], -32768, 0xFFFF, "constant")? as u16)
        }
        Form::Fixed(_) => {
            ctx.count(ops, &[0])?;
            base
        }
    };
    Ok(instr)
}
