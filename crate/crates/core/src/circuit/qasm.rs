//! OpenQASM 2.0 reader and writer for the single-register gate subset the mapper accepts.

use std::fmt::Write as _;

use super::{Circuit, Instruction, Qubit};
use crate::error::{Error, Result};

/// (qubit arity, parameter count) for each accepted gate name.
fn gate_signature(name: &str) -> Option<(usize, usize)> {
    let sig = match name {
        "id" | "x" | "y" | "z" | "h" | "s" | "sdg" | "t" | "tdg" | "sx" | "sxdg" => (1, 0),
        "rx" | "ry" | "rz" | "p" | "u1" => (1, 1),
        "u2" => (1, 2),
        "u3" | "u" | "U" => (1, 3),
        "cx" | "CX" | "cy" | "cz" | "ch" | "swap" => (2, 0),
        "cp" | "cu1" | "crx" | "cry" | "crz" | "rzz" | "rxx" => (2, 1),
        _ => return None,
    };
    Some(sig)
}

fn known_multi_qubit_arity(name: &str) -> Option<usize> {
    match name {
        "ccx" | "cswap" | "ccz" | "rccx" => Some(3),
        "c3x" | "c3sqrtx" | "rc3x" => Some(4),
        "c4x" => Some(5),
        _ => None,
    }
}

fn canonical_name(name: &str) -> &str {
    match name {
        "CX" => "cx",
        "u" | "U" => "u3",
        other => other,
    }
}

struct Statement {
    line: usize,
    text: String,
}

/// Splits source into `;`-terminated statements, dropping `//` comments and
/// remembering the line each statement starts on.
fn statements(text: &str) -> Result<Vec<Statement>> {
    let mut out = Vec::new();
    let mut buf = String::new();
    let mut start_line = 1;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find("//") {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        for ch in line.chars() {
            if buf.trim().is_empty() && !ch.is_whitespace() {
                start_line = line_no;
            }
            if ch == ';' {
                out.push(Statement {
                    line: start_line,
                    text: buf.trim().to_string(),
                });
                buf.clear();
            } else {
                buf.push(ch);
            }
        }
        buf.push(' ');
    }
    if !buf.trim().is_empty() {
        return Err(Error::parse(start_line, "missing `;` at end of statement"));
    }
    Ok(out)
}

struct Registers {
    qreg: Option<(String, usize)>,
    cregs: Vec<(String, usize, usize)>, // name, size, offset
}

impl Registers {
    fn clbit_count(&self) -> usize {
        self.cregs.iter().map(|(_, n, _)| n).sum()
    }

    /// Resolves `q[i]` or `q` to qubit indices.
    fn qubits(&self, arg: &str, line: usize) -> Result<Vec<Qubit>> {
        let (name, size) = self
            .qreg
            .as_ref()
            .ok_or_else(|| Error::parse(line, "qubit used before `qreg`"))?;
        let (reg, idx) = split_indexed(arg, line)?;
        if reg != name {
            return Err(Error::parse(line, format!("unknown quantum register `{reg}`")));
        }
        match idx {
            Some(i) if i < *size => Ok(vec![i]),
            Some(i) => Err(Error::parse(line, format!("qubit index {i} out of range for `{reg}[{size}]`"))),
            None => Ok((0..*size).collect()),
        }
    }

    fn clbits(&self, arg: &str, line: usize) -> Result<Vec<usize>> {
        let (reg, idx) = split_indexed(arg, line)?;
        let (_, size, offset) = self
            .cregs
            .iter()
            .find(|(n, _, _)| n == reg)
            .ok_or_else(|| Error::parse(line, format!("unknown classical register `{reg}`")))?;
        match idx {
            Some(i) if i < *size => Ok(vec![offset + i]),
            Some(i) => Err(Error::parse(line, format!("bit index {i} out of range for `{reg}[{size}]`"))),
            None => Ok((0..*size).map(|i| offset + i).collect()),
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn split_indexed(arg: &str, line: usize) -> Result<(&str, Option<usize>)> {
    let arg = arg.trim();
    match arg.find('[') {
        None if is_ident(arg) => Ok((arg, None)),
        None => Err(Error::parse(line, format!("bad argument `{arg}`"))),
        Some(open) => {
            let name = arg[..open].trim();
            let rest = arg[open + 1..].trim_end();
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(line, format!("missing `]` in `{arg}`")))?;
            let idx = inner
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(line, format!("bad index in `{arg}`")))?;
            if !is_ident(name) {
                return Err(Error::parse(line, format!("bad register name in `{arg}`")));
            }
            Ok((name, Some(idx)))
        }
    }
}

fn parse_decl(rest: &str, line: usize) -> Result<(String, usize)> {
    let (name, idx) = split_indexed(rest, line)?;
    let size = idx.ok_or_else(|| Error::parse(line, "register declaration needs a size"))?;
    Ok((name.to_string(), size))
}

/// Parses an OpenQASM 2.0 program with one `qreg`. Gates keep source order.
pub fn parse_qasm(text: &str) -> Result<Circuit> {
    let stmts = statements(text)?;
    let mut regs = Registers {
        qreg: None,
        cregs: Vec::new(),
    };
    let mut body: Vec<(usize, &str)> = Vec::new();

    for st in &stmts {
        let s = st.text.as_str();
        if s.is_empty() {
            continue;
        }
        let (head, rest) = split_head(s);
        match head {
            "OPENQASM" => {
                if rest.trim() != "2.0" {
                    return Err(Error::Unsupported(format!("OpenQASM version `{}`", rest.trim())));
                }
            }
            "include" => {}
            "qreg" => {
                if regs.qreg.is_some() {
                    return Err(Error::Unsupported(
                        "multiple quantum registers; merge them into one `qreg`".into(),
                    ));
                }
                let (name, size) = parse_decl(rest, st.line)?;
                if size == 0 {
                    return Err(Error::parse(st.line, "empty quantum register"));
                }
                regs.qreg = Some((name, size));
            }
            "creg" => {
                let (name, size) = parse_decl(rest, st.line)?;
                let offset = regs.clbit_count();
                regs.cregs.push((name, size, offset));
            }
            "gate" | "opaque" | "if" | "reset" => {
                return Err(Error::Unsupported(format!(
                    "line {}: `{head}` statements are not supported",
                    st.line
                )));
            }
            _ => body.push((st.line, s)),
        }
    }

    let (_, n_qubits) = regs
        .qreg
        .clone()
        .ok_or_else(|| Error::parse(1, "no `qreg` declaration"))?;
    let mut circuit = Circuit::new("circuit", n_qubits)?.with_clbits(regs.clbit_count());

    for (line, s) in body {
        parse_body_statement(&mut circuit, &regs, s, line)?;
    }
    Ok(circuit)
}

fn split_head(s: &str) -> (&str, &str) {
    let end = s
        .find(|c: char| c.is_whitespace() || c == '(')
        .unwrap_or(s.len());
    (&s[..end], &s[end..])
}

fn parse_body_statement(c: &mut Circuit, regs: &Registers, s: &str, line: usize) -> Result<()> {
    let (head, rest) = split_head(s);
    match head {
        "barrier" => {
            let mut qs = Vec::new();
            for arg in rest.split(',') {
                qs.extend(regs.qubits(arg, line)?);
            }
            qs.sort_unstable();
            qs.dedup();
            c.push_barrier(&qs)
        }
        "measure" => {
            let (src, dst) = rest
                .split_once("->")
                .ok_or_else(|| Error::parse(line, "measure needs `->`"))?;
            let qs = regs.qubits(src, line)?;
            let cs = regs.clbits(dst, line)?;
            if qs.len() != cs.len() {
                return Err(Error::parse(line, "measure register sizes differ"));
            }
            for (q, b) in qs.into_iter().zip(cs) {
                c.push_measure(q, b)?;
            }
            Ok(())
        }
        name => parse_gate(c, regs, name, rest, line),
    }
}

fn parse_gate(c: &mut Circuit, regs: &Registers, name: &str, rest: &str, line: usize) -> Result<()> {
    if !is_ident(name) {
        return Err(Error::parse(line, format!("unexpected `{name}`")));
    }
    let rest = rest.trim_start();
    let (params, args) = if let Some(after) = rest.strip_prefix('(') {
        let close = matching_paren(after)
            .ok_or_else(|| Error::parse(line, "unbalanced parentheses"))?;
        let params = split_top_level(&after[..close])
            .into_iter()
            .map(|e| eval_expr(e).map_err(|m| Error::parse(line, m)))
            .collect::<Result<Vec<f64>>>()?;
        (params, &after[close + 1..])
    } else {
        (Vec::new(), rest)
    };
    let args: Vec<&str> = args.split(',').map(str::trim).collect();
    if args.iter().any(|a| a.is_empty()) {
        return Err(Error::parse(line, format!("gate `{name}` has an empty argument")));
    }

    let Some((arity, n_params)) = gate_signature(name) else {
        let arity = known_multi_qubit_arity(name).unwrap_or(args.len());
        if arity >= 3 {
            return Err(Error::Decompose {
                line,
                gate: name.to_string(),
                arity,
            });
        }
        return Err(Error::parse(line, format!("unknown gate `{name}`")));
    };
    if args.len() != arity {
        return Err(Error::parse(
            line,
            format!("gate `{name}` takes {arity} qubit argument(s), got {}", args.len()),
        ));
    }
    if params.len() != n_params {
        return Err(Error::parse(
            line,
            format!("gate `{name}` takes {n_params} parameter(s), got {}", params.len()),
        ));
    }
    let name = canonical_name(name);
    let resolved = args
        .iter()
        .map(|a| regs.qubits(a, line))
        .collect::<Result<Vec<_>>>()?;

    match resolved.as_slice() {
        [qs] => {
            for &q in qs {
                c.push_gate(name, &[q], &params)?;
            }
        }
        [a, b] => {
            if a.len() != 1 || b.len() != 1 {
                return Err(Error::Unsupported(format!(
                    "line {line}: register broadcast for two-qubit gate `{name}`"
                )));
            }
            if a[0] == b[0] {
                return Err(Error::parse(line, format!("gate `{name}` repeats qubit {}", a[0])));
            }
            c.push_gate(name, &[a[0], b[0]], &params)?;
        }
        _ => unreachable!("arity checked above"),
    }
    Ok(())
}

fn matching_paren(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' if depth == 0 => return Some(i),
            ')' => depth -= 1,
            _ => {}
        }
    }
    None
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s.trim().is_empty() {
        parts.push(&s[start..]);
    }
    parts
}

/// Recursive-descent evaluator for gate parameter expressions.
struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn eval_expr(text: &str) -> std::result::Result<f64, String> {
    let mut p = ExprParser {
        src: text.as_bytes(),
        pos: 0,
    };
    let v = p.sum()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(format!("trailing input in expression `{}`", text.trim()));
    }
    Ok(v)
}

impl ExprParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn sum(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.product()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            v = if op == b'+' { v + rhs } else { v - rhs };
        }
        Ok(v)
    }

    fn product(&mut self) -> std::result::Result<f64, String> {
        let mut v = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            v = if op == b'*' { v * rhs } else { v / rhs };
        }
        Ok(v)
    }

    fn unary(&mut self) -> std::result::Result<f64, String> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> std::result::Result<f64, String> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(base.powf(exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<f64, String> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.sum()?;
                if self.peek() != Some(b')') {
                    return Err("missing `)` in expression".into());
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                if ident == "pi" {
                    return Ok(std::f64::consts::PI);
                }
                let f: fn(f64) -> f64 = match ident {
                    "sin" => f64::sin,
                    "cos" => f64::cos,
                    "tan" => f64::tan,
                    "exp" => f64::exp,
                    "ln" => f64::ln,
                    "sqrt" => f64::sqrt,
                    _ => return Err(format!("unknown identifier `{ident}` in expression")),
                };
                if self.peek() != Some(b'(') {
                    return Err(format!("`{ident}` needs parentheses"));
                }
                let arg = self.atom()?;
                Ok(f(arg))
            }
            _ => Err("malformed expression".into()),
        }
    }

    fn number(&mut self) -> std::result::Result<f64, String> {
        let start = self.pos;
        let bytes = self.src;
        while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < bytes.len() && matches!(bytes[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < bytes.len() && matches!(bytes[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            }
        }
        let s = std::str::from_utf8(&bytes[start..self.pos]).unwrap_or("");
        s.parse::<f64>().map_err(|_| format!("bad number `{s}`"))
    }
}

/// Writes the circuit back as OpenQASM 2.0 using registers `q` and `c`.
/// Parameters are printed in shortest round-trip form so `parse_qasm` restores them exactly.
pub fn serialize_qasm(circuit: &Circuit) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "// {}", circuit.name);
    let _ = writeln!(out, "qreg q[{}];", circuit.n_qubits());
    if circuit.n_clbits() > 0 {
        let _ = writeln!(out, "creg c[{}];", circuit.n_clbits());
    }
    for op in circuit.ops() {
        match op {
            Instruction::Gate(g) => {
                out.push_str(&g.name);
                if !g.params.is_empty() {
                    let ps: Vec<String> = g.params.iter().map(|p| format!("{p:?}")).collect();
                    let _ = write!(out, "({})", ps.join(","));
                }
                let qs: Vec<String> = g.qubits.iter().map(|q| format!("q[{q}]")).collect();
                let _ = writeln!(out, " {};", qs.join(","));
            }
            Instruction::Measure { qubit, clbit } => {
                let _ = writeln!(out, "measure q[{qubit}] -> c[{clbit}];");
            }
            Instruction::Barrier(qs) => {
                let qs: Vec<String> = qs.iter().map(|q| format!("q[{q}]")).collect();
                let _ = writeln!(out, "barrier {};", qs.join(","));
            }
        }
    }
    out
}
