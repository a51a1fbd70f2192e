//! Line-oriented circuit text format:
//!
//! ```text
//! ac0 v1 inputs=2 outputs=3
//! g0 INPUT
//! g1 INPUT
//! g2 NOT 1
//! g3 AND 0 2
//! ```
//!
//! Gate ids are consecutive from zero; operands refer to earlier ids. The
//! i-th INPUT line reads input bit i.

use std::fmt;
use std::str::FromStr;

use super::{Circuit, CircuitBuilder, GateKind};
use crate::error::{Error, Result};

const MAGIC: &str = "ac0";
const VERSION: &str = "v1";

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{MAGIC} {VERSION} inputs={} outputs=", self.input_arity())?;
        for (i, o) in self.outputs().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{o}")?;
        }
        writeln!(f)?;
        for (id, gate) in self.gates() {
            write!(f, "g{id} {}", gate.kind.name())?;
            for x in gate.fan_in {
                write!(f, " {x}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl Circuit {
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(s: &str) -> Result<Circuit> {
        s.parse()
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_header(line: &str) -> Result<(usize, Vec<u32>)> {
    let mut parts = line.split(' ');
    if parts.next() != Some(MAGIC) || parts.next() != Some(VERSION) {
        return Err(parse_err(1, format!("expected header starting with `{MAGIC} {VERSION}`")));
    }
    let inputs = parts
        .next()
        .and_then(|p| p.strip_prefix("inputs="))
        .ok_or_else(|| parse_err(1, "missing inputs="))?
        .parse::<usize>()
        .map_err(|e| parse_err(1, format!("bad input count: {e}")))?;
    let outputs_field =
        parts.next().and_then(|p| p.strip_prefix("outputs=")).ok_or_else(|| parse_err(1, "missing outputs="))?;
    if parts.next().is_some() {
        return Err(parse_err(1, "trailing header fields"));
    }
    let outputs = if outputs_field.is_empty() {
        Vec::new()
    } else {
        outputs_field
            .split(',')
            .map(|t| t.parse::<u32>().map_err(|e| parse_err(1, format!("bad output id {t:?}: {e}"))))
            .collect::<Result<_>>()?
    };
    Ok((inputs, outputs))
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Circuit> {
        let mut lines = s.lines();
        let header = lines.next().ok_or_else(|| parse_err(1, "empty circuit text"))?;
        let (declared_inputs, outputs) = parse_header(header)?;

        let mut b = CircuitBuilder::with_budget(usize::MAX);
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            let mut parts = line.split(' ');
            let id_tok = parts.next().unwrap_or("");
            let id: usize = id_tok
                .strip_prefix('g')
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| parse_err(lineno, format!("bad gate id {id_tok:?}")))?;
            if id != idx {
                return Err(parse_err(lineno, format!("gate ids must be consecutive: expected g{idx}, got g{id}")));
            }
            let kind = match parts.next() {
                Some("INPUT") => GateKind::Input,
                Some("CONST0") => GateKind::Const0,
                Some("CONST1") => GateKind::Const1,
                Some("AND") => GateKind::And,
                Some("OR") => GateKind::Or,
                Some("NOT") => GateKind::Not,
                other => return Err(parse_err(lineno, format!("unknown gate kind {other:?}"))),
            };
            let operands = parts
                .map(|t| t.parse::<u32>().map_err(|e| parse_err(lineno, format!("bad operand {t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let arity_ok = match kind {
                GateKind::Input | GateKind::Const0 | GateKind::Const1 => operands.is_empty(),
                GateKind::Not => operands.len() == 1,
                GateKind::And | GateKind::Or => !operands.is_empty(),
            };
            if !arity_ok {
                return Err(parse_err(lineno, format!("{} cannot take {} operands", kind.name(), operands.len())));
            }
            let wrap = |e: Error| parse_err(lineno, e.to_string());
            match kind {
                GateKind::Input => b.input().map_err(wrap)?,
                // constants are not cached here so that ids stay as written
                GateKind::Const0 | GateKind::Const1 | GateKind::And | GateKind::Or | GateKind::Not => {
                    b.raw(kind, &operands).map_err(wrap)?
                }
            };
        }
        if b.input_count() != declared_inputs {
            return Err(parse_err(
                1,
                format!("header declares {declared_inputs} inputs but {} INPUT gates were found", b.input_count()),
            ));
        }
        if let Some(&bad) = outputs.iter().find(|&&o| o as usize >= b.num_gates()) {
            return Err(parse_err(1, format!("output refers to missing gate {bad}")));
        }
        for o in outputs {
            b.output(o);
        }
        Ok(b.finish())
    }
}

impl CircuitBuilder {
    fn raw(&mut self, kind: GateKind, fan_in: &[u32]) -> Result<u32> {
        self.push(kind, fan_in)
    }

    fn input_count(&self) -> usize {
        self.input_arity
    }
}
