//! Best-effort reader for the OpenQASM 2.0 subset used by benchmark suites:
//! one `qreg` and the logical gates of [`GateTag`]. `sdg`/`tdg` are read as
//! the equivalent `rz` rotations. `measure`, `barrier` and `creg` statements
//! are skipped and counted.

use std::f64::consts::PI;

use super::{Circuit, CircuitError, GateKind, GateTag};

#[derive(Debug, Clone, PartialEq)]
pub struct QasmCircuit {
    pub circuit: Circuit,
    /// Statements skipped because they have no effect on layout (measure, barrier, creg).
    pub skipped: usize,
}

struct Statement {
    line: usize,
    text: String,
}

fn split_statements(src: &str) -> Result<Vec<Statement>, CircuitError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start_line = 1;
    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find("//") {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        for ch in line.chars() {
            if ch == '{' || ch == '}' {
                return Err(CircuitError::Parse {
                    line: line_no,
                    msg: "gate definitions and blocks are not supported".into(),
                });
            }
            if ch == ';' {
                let text = cur.trim().to_string();
                if !text.is_empty() {
                    out.push(Statement {
                        line: start_line,
                        text,
                    });
                }
                cur.clear();
                continue;
            }
            if cur.trim().is_empty() && !ch.is_whitespace() {
                start_line = line_no;
            }
            cur.push(ch);
        }
        cur.push(' ');
    }
    if !cur.trim().is_empty() {
        return Err(CircuitError::Parse {
            line: start_line,
            msg: "missing `;` at end of statement".into(),
        });
    }
    Ok(out)
}

pub fn parse_qasm_subset(text: &str) -> Result<QasmCircuit, CircuitError> {
    let statements = split_statements(text)?;
    let mut qreg: Option<(String, usize)> = None;
    let mut gates: Vec<(GateKind, Vec<usize>, usize)> = Vec::new();
    let mut skipped = 0;

    for stmt in statements {
        let line = stmt.line;
        let text = stmt.text.as_str();
        let head = leading_identifier(text);
        match head {
            "OPENQASM" | "include" => {}
            "qreg" => {
                if qreg.is_some() {
                    return Err(CircuitError::MultipleQregs { line });
                }
                let (name, size) = parse_indexed(text["qreg".len()..].trim(), line)?;
                let size = size.ok_or_else(|| parse_err(line, "qreg needs a size"))?;
                if size == 0 {
                    return Err(CircuitError::NoQubits);
                }
                qreg = Some((name, size));
            }
            "creg" | "measure" | "barrier" => skipped += 1,
            "if" | "reset" | "opaque" | "gate" => {
                return Err(CircuitError::UnsupportedGate {
                    line,
                    name: head.to_string(),
                })
            }
            "" => return Err(parse_err(line, "expected a statement")),
            name => {
                let (reg_name, size) = qreg
                    .as_ref()
                    .ok_or_else(|| parse_err(line, "gate applied before `qreg`"))?;
                let (kind, operand_text) = parse_gate_head(name, &text[name.len()..], line)?;
                let operands = parse_operands(operand_text, reg_name, *size, line)?;
                expand_broadcast(kind, operands, *size, line, &mut gates)?;
            }
        }
    }

    let (_, num_qubits) = qreg.ok_or_else(|| parse_err(1, "no `qreg` declaration"))?;
    for (kind, qubits, line) in &gates {
        if kind.tag == GateTag::Swap {
            return Err(CircuitError::UnsupportedGate {
                line: *line,
                name: "swap".into(),
            });
        }
        if qubits.iter().enumerate().any(|(i, q)| qubits[..i].contains(q)) {
            return Err(parse_err(*line, "duplicate qubit in one gate"));
        }
    }
    let circuit = Circuit::new(num_qubits, gates.into_iter().map(|(k, q, _)| (k, q)))?;
    Ok(QasmCircuit { circuit, skipped })
}

fn parse_err(line: usize, msg: &str) -> CircuitError {
    CircuitError::Parse {
        line,
        msg: msg.to_string(),
    }
}

fn leading_identifier(text: &str) -> &str {
    let end = text
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(text.len());
    &text[..end]
}

/// Parses `name[idx]` or a bare `name`.
fn parse_indexed(text: &str, line: usize) -> Result<(String, Option<usize>), CircuitError> {
    let text = text.trim();
    match text.find('[') {
        None => {
            if text.is_empty() || leading_identifier(text) != text {
                return Err(parse_err(line, &format!("bad register reference `{text}`")));
            }
            Ok((text.to_string(), None))
        }
        Some(open) => {
            let close = text
                .rfind(']')
                .filter(|&c| c > open && text[c + 1..].trim().is_empty())
                .ok_or_else(|| parse_err(line, &format!("bad register reference `{text}`")))?;
            let name = text[..open].trim();
            let index = text[open + 1..close]
                .trim()
                .parse::<usize>()
                .map_err(|_| parse_err(line, &format!("bad index in `{text}`")))?;
            Ok((name.to_string(), Some(index)))
        }
    }
}

fn parse_gate_head<'a>(
    name: &str,
    rest: &'a str,
    line: usize,
) -> Result<(GateKind, &'a str), CircuitError> {
    let rest = rest.trim_start();
    let (params, operand_text) = if let Some(stripped) = rest.strip_prefix('(') {
        let close = stripped
            .find(')')
            .ok_or_else(|| parse_err(line, "unclosed parameter list"))?;
        let params = stripped[..close]
            .split(',')
            .map(|p| eval_expr(p, line))
            .collect::<Result<Vec<_>, _>>()?;
        (params, &stripped[close + 1..])
    } else {
        (Vec::new(), rest)
    };
    let kind = match name.to_ascii_lowercase().as_str() {
        // Phase-equivalent rewrites (global phase only) for common inverses.
        "sdg" if params.is_empty() => GateKind::with_params(GateTag::Rz, vec![-PI / 2.0]),
        "tdg" if params.is_empty() => GateKind::with_params(GateTag::Rz, vec![-PI / 4.0]),
        "cnot" => GateKind::with_params(GateTag::Cx, params),
        lower => {
            let tag: GateTag = lower.parse().map_err(|_| CircuitError::UnsupportedGate {
                line,
                name: name.to_string(),
            })?;
            GateKind::with_params(tag, params)
        }
    };
    if kind.params.len() != kind.tag.num_params() {
        return Err(parse_err(
            line,
            &format!(
                "gate {} expects {} parameter(s), got {}",
                kind.tag,
                kind.tag.num_params(),
                kind.params.len()
            ),
        ));
    }
    Ok((kind, operand_text))
}

fn parse_operands(
    text: &str,
    reg_name: &str,
    size: usize,
    line: usize,
) -> Result<Vec<Option<usize>>, CircuitError> {
    text.split(',')
        .map(|op| {
            let (name, index) = parse_indexed(op, line)?;
            if name != reg_name {
                return Err(parse_err(line, &format!("unknown register `{name}`")));
            }
            if let Some(i) = index {
                if i >= size {
                    return Err(parse_err(line, &format!("qubit index {i} out of range")));
                }
            }
            Ok(index)
        })
        .collect()
}

fn expand_broadcast(
    kind: GateKind,
    operands: Vec<Option<usize>>,
    size: usize,
    line: usize,
    gates: &mut Vec<(GateKind, Vec<usize>, usize)>,
) -> Result<(), CircuitError> {
    if operands.len() != kind.arity() {
        return Err(parse_err(
            line,
            &format!(
                "gate {} expects {} operand(s), got {}",
                kind.tag,
                kind.arity(),
                operands.len()
            ),
        ));
    }
    if let [None] = operands.as_slice() {
        for q in 0..size {
            gates.push((kind.clone(), vec![q], line));
        }
        return Ok(());
    }
    let qubits = operands
        .into_iter()
        .map(|o| o.ok_or_else(|| parse_err(line, "register broadcast is only supported for one-qubit gates")))
        .collect::<Result<Vec<_>, _>>()?;
    gates.push((kind, qubits, line));
    Ok(())
}

/// Evaluates a gate parameter: numbers, `pi`, `+ - * / ^`, parentheses.
fn eval_expr(text: &str, line: usize) -> Result<f64, CircuitError> {
    let tokens = tokenize(text, line)?;
    let mut parser = ExprParser { tokens, pos: 0, line };
    let value = parser.sum()?;
    if parser.pos != parser.tokens.len() {
        return Err(parse_err(line, &format!("trailing input in expression `{}`", text.trim())));
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Op(char),
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Tok>, CircuitError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_digit()
                    || chars[i] == '.'
                    || chars[i] == 'e'
                    || chars[i] == 'E'
                    || ((chars[i] == '-' || chars[i] == '+') && matches!(chars[i - 1], 'e' | 'E')))
            {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| parse_err(line, &format!("bad number `{s}`")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if word == "pi" {
                out.push(Tok::Num(PI));
            } else {
                return Err(parse_err(line, &format!("unsupported identifier `{word}` in expression")));
            }
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(parse_err(line, &format!("unexpected `{c}` in expression")));
        }
    }
    Ok(out)
}

struct ExprParser {
    tokens: Vec<Tok>,
    pos: usize,
    line: usize,
}

impl ExprParser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn sum(&mut self) -> Result<f64, CircuitError> {
        let mut acc = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.product()?;
            acc = if op == '+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<f64, CircuitError> {
        let mut acc = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if op == '*' { acc * rhs } else { acc / rhs };
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<f64, CircuitError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(base.powf(exp));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<f64, CircuitError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn atom(&mut self) -> Result<f64, CircuitError> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(v)
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let v = self.sum()?;
                if self.peek_op() != Some(')') {
                    return Err(parse_err(self.line, "unbalanced parentheses"));
                }
                self.pos += 1;
                Ok(v)
            }
            _ => Err(parse_err(self.line, "malformed expression")),
        }
    }
}
