use crate::isa::Mnemonic;

/// One physical source line split into its syntactic fields.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceLine {
    pub number: usize,
    pub label: Option<String>,
    pub op: Option<String>,
    pub operands: Vec<String>,
    pub comment: Option<String>,
}

/// Mnemonics accepted by the assembler that have no encoding of their own.
pub(crate) const ALIASES: &[&str] = &["ZAC", "LARP"];

pub(crate) fn is_operation(token: &str) -> bool {
    token.starts_with('.')
        || Mnemonic::from_name(token).is_some()
        || ALIASES.iter().any(|a| a.eq_ignore_ascii_case(token))
}

/// Split `text` at the first `;` outside double quotes.
fn split_comment(text: &str) -> (&str, Option<&str>) {
    let mut quoted = false;
    for (i, c) in text.char_indices() {
        match c {
            '"' => quoted = !quoted,
            ';' if !quoted => return (&text[..i], Some(&text[i + 1..])),
            _ => {}
        }
    }
    (text, None)
}

fn split_operands(text: &str) -> Vec<String> {
    let text = text.trim();
    if text.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut quoted = false;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                current.push(c);
            }
            ',' if !quoted => out.push(std::mem::take(&mut current).trim().to_string()),
            _ => current.push(c),
        }
    }
    out.push(current.trim().to_string());
    out
}

/// Split a line per `[label[:]] [op [operand{,operand}]] [;comment]`.
///
/// The first token is a label when it carries a trailing colon or is not a
/// known mnemonic or directive. Never fails; content errors surface during
/// assembly.
pub fn parse_line(text: &str, number: usize) -> SourceLine {
    let (body, comment) = split_comment(text);
    let mut line = SourceLine { number, comment: comment.map(|c| c.trim().to_string()), ..Default::default() };
    let mut rest = body.trim_start();
    let next_token = |rest: &mut &str| -> Option<String> {
        let s = rest.trim_start();
        if s.is_empty() {
            return None;
        }
        let end = s.find(char::is_whitespace).unwrap_or(s.len());
        let token = s[..end].to_string();
        *rest = &s[end..];
        Some(token)
    };

    let Some(first) = next_token(&mut rest) else {
        return line;
    };
    let op = if let Some(label) = first.strip_suffix(':') {
        line.label = Some(label.to_string());
        next_token(&mut rest)
    } else if is_operation(&first) {
        Some(first)
    } else {
        line.label = Some(first);
        next_token(&mut rest)
    };
    if let Some(op) = op {
        line.op = Some(op);
        line.operands = split_operands(rest);
    }
    line
}

pub(crate) fn valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && name.len() <= 32
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parse a numeric literal: decimal, `0x` prefix, or trailing `h` with a
/// leading digit.
pub(crate) fn parse_number(token: &str) -> Option<i64> {
    let t = token.trim();
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        return i64::from_str_radix(hex, 16).ok().filter(|_| !hex.is_empty());
    }
    if let Some(hex) = t.strip_suffix('h').or_else(|| t.strip_suffix('H')) {
        if hex.starts_with(|c: char| c.is_ascii_digit()) {
            return i64::from_str_radix(hex, 16).ok();
        }
        return None;
    }
    if !t.is_empty() && t.chars().all(|c| c.is_ascii_digit()) {
        return t.parse().ok();
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum ExprError {
    Undefined(String),
    Syntax(String),
}

/// Evaluate `term {(+|-) term}` where a term is a number, a symbol or `$`.
pub(crate) fn eval_expr(text: &str, here: i64, lookup: &dyn Fn(&str) -> Option<i64>) -> Result<i64, ExprError> {
    let bad = || ExprError::Syntax(format!("bad expression '{text}'"));
    let mut total = 0i64;
    let mut sign = 1i64;
    let mut expect_term = true;
    let mut chars = text.trim().char_indices().peekable();
    let src = text.trim();
    if src.is_empty() {
        return Err(bad());
    }
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if expect_term {
            if c == '-' || c == '+' {
                if c == '-' {
                    sign = -sign;
                }
                chars.next();
                continue;
            }
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if d.is_ascii_alphanumeric() || d == '_' || d == '$' {
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            let token = &src[i..end];
            if token.is_empty() {
                return Err(bad());
            }
            let value = if token == "$" {
                here
            } else if token.starts_with(|c: char| c.is_ascii_digit()) {
                parse_number(token).ok_or_else(bad)?
            } else if valid_identifier(token) {
                lookup(token).ok_or_else(|| ExprError::Undefined(token.to_string()))?
            } else {
                return Err(bad());
            };
            total += sign * value;
            sign = 1;
            expect_term = false;
        } else {
            match c {
                '+' => sign = 1,
                '-' => sign = -1,
                _ => return Err(bad()),
            }
            chars.next();
            expect_term = true;
        }
    }
    if expect_term {
        return Err(bad());
    }
    Ok(total)
}
