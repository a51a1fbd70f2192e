//! Boolean circuits over the AC⁰ basis: unbounded fan-in AND/OR, NOT, inputs
//! and constants.
//!
//! Gates are stored in topological order with a flat operand array, so a
//! single forward pass evaluates the circuit. [`Circuit::evaluate_packed`]
//! runs 64 independent input vectors at once, one per bit lane.

mod builders;
mod encoding;
mod text;

pub use builders::{
    build_diff_mask_circuit, build_move_validator_circuit, build_move_validator_circuit_with,
    build_nimber_diff_circuit, build_nimber_diff_circuit_with, threshold_at_least, threshold_at_least_with, xor_word,
    BuildLimits, MoveValidator, NimberDiffCircuit,
};
pub use encoding::{CandidateLayout, PositionEncoding};

pub(crate) use builders::emit_threshold;

use serde::Serialize;

use crate::error::{Error, Result};

pub type GateId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Input,
    Const0,
    Const1,
    And,
    Or,
    Not,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Input => "INPUT",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Not => "NOT",
        }
    }

    /// AND, OR and NOT count toward size and depth; inputs and constants do not.
    pub fn is_logic(self) -> bool {
        matches!(self, GateKind::And | GateKind::Or | GateKind::Not)
    }
}

/// Borrowed view of one gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gate<'a> {
    pub kind: GateKind,
    pub fan_in: &'a [GateId],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CircuitMetrics {
    pub depth: usize,
    pub size: usize,
    pub fan_in_max: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// First gate on a path that crosses the depth bound.
    Depth {
        gate: GateId,
        depth: usize,
        bound: usize,
    },
    Size {
        size: usize,
        bound: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Ac0Report {
    pub ok: bool,
    pub metrics: CircuitMetrics,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    kinds: Vec<GateKind>,
    /// `operands[offsets[g]..offsets[g + 1]]` is the fan-in of gate `g`.
    offsets: Vec<u32>,
    operands: Vec<GateId>,
    input_arity: usize,
    outputs: Vec<GateId>,
}

impl Circuit {
    pub fn input_arity(&self) -> usize {
        self.input_arity
    }

    pub fn outputs(&self) -> &[GateId] {
        &self.outputs
    }

    pub fn num_gates(&self) -> usize {
        self.kinds.len()
    }

    pub fn gate(&self, id: GateId) -> Gate<'_> {
        let g = id as usize;
        let (lo, hi) = (self.offsets[g] as usize, self.offsets[g + 1] as usize);
        Gate { kind: self.kinds[g], fan_in: &self.operands[lo..hi] }
    }

    pub fn gates(&self) -> impl Iterator<Item = (GateId, Gate<'_>)> + '_ {
        (0..self.kinds.len() as GateId).map(move |g| (g, self.gate(g)))
    }

    /// Gate-by-gate evaluation on one input vector.
    pub fn evaluate(&self, input: &[bool]) -> Result<Vec<bool>> {
        if input.len() != self.input_arity {
            return Err(Error::ArityMismatch { expected: self.input_arity, actual: input.len() });
        }
        let mut values = vec![false; self.kinds.len()];
        let mut next_input = 0;
        for g in 0..self.kinds.len() {
            let gate = self.gate(g as GateId);
            values[g] = match gate.kind {
                GateKind::Input => {
                    next_input += 1;
                    input[next_input - 1]
                }
                GateKind::Const0 => false,
                GateKind::Const1 => true,
                GateKind::And => gate.fan_in.iter().all(|&x| values[x as usize]),
                GateKind::Or => gate.fan_in.iter().any(|&x| values[x as usize]),
                GateKind::Not => !values[gate.fan_in[0] as usize],
            };
        }
        Ok(self.outputs.iter().map(|&o| values[o as usize]).collect())
    }

    /// Bit-sliced evaluation: bit `k` of `inputs[i]` is input `i` of the
    /// `k`-th vector, and likewise for the returned outputs.
    pub fn evaluate_packed(&self, inputs: &[u64]) -> Result<Vec<u64>> {
        if inputs.len() != self.input_arity {
            return Err(Error::ArityMismatch { expected: self.input_arity, actual: inputs.len() });
        }
        let mut values = vec![0u64; self.kinds.len()];
        let mut next_input = 0;
        for g in 0..self.kinds.len() {
            let (lo, hi) = (self.offsets[g] as usize, self.offsets[g + 1] as usize);
            let fan_in = &self.operands[lo..hi];
            values[g] = match self.kinds[g] {
                GateKind::Input => {
                    next_input += 1;
                    inputs[next_input - 1]
                }
                GateKind::Const0 => 0,
                GateKind::Const1 => !0,
                GateKind::And => fan_in.iter().fold(!0, |acc, &x| acc & values[x as usize]),
                GateKind::Or => fan_in.iter().fold(0, |acc, &x| acc | values[x as usize]),
                GateKind::Not => !values[fan_in[0] as usize],
            };
        }
        Ok(self.outputs.iter().map(|&o| values[o as usize]).collect())
    }

    /// Evaluates many input vectors, 64 per pass.
    pub fn evaluate_many(&self, inputs: &[Vec<bool>]) -> Result<Vec<Vec<bool>>> {
        let mut results = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(64) {
            let mut lanes = vec![0u64; self.input_arity];
            for (k, vector) in chunk.iter().enumerate() {
                if vector.len() != self.input_arity {
                    return Err(Error::ArityMismatch { expected: self.input_arity, actual: vector.len() });
                }
                for (i, &bit) in vector.iter().enumerate() {
                    lanes[i] |= u64::from(bit) << k;
                }
            }
            let out = self.evaluate_packed(&lanes)?;
            for k in 0..chunk.len() {
                results.push(out.iter().map(|&w| (w >> k) & 1 == 1).collect());
            }
        }
        Ok(results)
    }

    /// Depth of each gate: 0 for inputs and constants, else one more than
    /// the deepest operand.
    pub fn gate_depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.kinds.len()];
        for g in 0..self.kinds.len() {
            let gate = self.gate(g as GateId);
            if gate.kind.is_logic() {
                depth[g] = 1 + gate.fan_in.iter().map(|&x| depth[x as usize]).max().unwrap_or(0);
            }
        }
        depth
    }

    pub fn metrics(&self) -> CircuitMetrics {
        let depths = self.gate_depths();
        let depth = self.outputs.iter().map(|&o| depths[o as usize]).max().unwrap_or(0);
        let size = self.kinds.iter().filter(|k| k.is_logic()).count();
        let fan_in_max =
            (0..self.kinds.len()).map(|g| (self.offsets[g + 1] - self.offsets[g]) as usize).max().unwrap_or(0);
        CircuitMetrics { depth, size, fan_in_max }
    }

    /// Checks depth and size bounds; each depth violation names the first
    /// gate on its path that exceeds the bound.
    pub fn validate_ac0(&self, depth_bound: usize, size_bound: usize) -> Ac0Report {
        let depths = self.gate_depths();
        let metrics = self.metrics();
        let mut violations = Vec::new();
        for (g, gate) in self.gates() {
            let d = depths[g as usize];
            if d > depth_bound && gate.fan_in.iter().all(|&x| depths[x as usize] <= depth_bound) {
                violations.push(Violation::Depth { gate: g, depth: d, bound: depth_bound });
            }
        }
        if metrics.size > size_bound {
            violations.push(Violation::Size { size: metrics.size, bound: size_bound });
        }
        Ac0Report { ok: violations.is_empty(), metrics, violations }
    }
}

/// Appends gates in topological order. Every gate-creating call is checked
/// against the gate budget.
#[derive(Debug)]
pub struct CircuitBuilder {
    kinds: Vec<GateKind>,
    offsets: Vec<u32>,
    operands: Vec<GateId>,
    input_arity: usize,
    outputs: Vec<GateId>,
    const0: Option<GateId>,
    const1: Option<GateId>,
    budget: usize,
}

impl Default for CircuitBuilder {
    fn default() -> Self {
        Self::with_budget(BuildLimits::default().gate_budget)
    }
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_budget(budget: usize) -> Self {
        CircuitBuilder {
            kinds: Vec::new(),
            offsets: vec![0],
            operands: Vec::new(),
            input_arity: 0,
            outputs: Vec::new(),
            const0: None,
            const1: None,
            budget,
        }
    }

    fn push(&mut self, kind: GateKind, fan_in: &[GateId]) -> Result<GateId> {
        let id = self.kinds.len();
        if id >= self.budget {
            return Err(Error::ResourceExhausted(format!("gate budget of {} exceeded", self.budget)));
        }
        if let Some(&bad) = fan_in.iter().find(|&&x| x as usize >= id) {
            return Err(Error::MalformedCircuit(format!("gate {id} refers to later gate {bad}")));
        }
        self.kinds.push(kind);
        self.operands.extend_from_slice(fan_in);
        self.offsets.push(self.operands.len() as u32);
        Ok(id as GateId)
    }

    pub fn input(&mut self) -> Result<GateId> {
        self.input_arity += 1;
        self.push(GateKind::Input, &[])
    }

    pub fn inputs(&mut self, n: usize) -> Result<Vec<GateId>> {
        (0..n).map(|_| self.input()).collect()
    }

    /// Cached: each constant appears at most once.
    pub fn constant(&mut self, value: bool) -> Result<GateId> {
        let slot = if value { &mut self.const1 } else { &mut self.const0 };
        if let Some(g) = *slot {
            return Ok(g);
        }
        let g = self.push(if value { GateKind::Const1 } else { GateKind::Const0 }, &[])?;
        if value {
            self.const1 = Some(g);
        } else {
            self.const0 = Some(g);
        }
        Ok(g)
    }

    pub fn and(&mut self, fan_in: &[GateId]) -> Result<GateId> {
        if fan_in.is_empty() {
            return Err(Error::MalformedCircuit("AND needs at least one operand".into()));
        }
        self.push(GateKind::And, fan_in)
    }

    pub fn or(&mut self, fan_in: &[GateId]) -> Result<GateId> {
        if fan_in.is_empty() {
            return Err(Error::MalformedCircuit("OR needs at least one operand".into()));
        }
        self.push(GateKind::Or, fan_in)
    }

    pub fn not(&mut self, x: GateId) -> Result<GateId> {
        self.push(GateKind::Not, &[x])
    }

    pub fn output(&mut self, g: GateId) {
        self.outputs.push(g);
    }

    pub fn num_gates(&self) -> usize {
        self.kinds.len()
    }

    pub fn finish(self) -> Circuit {
        Circuit {
            kinds: self.kinds,
            offsets: self.offsets,
            operands: self.operands,
            input_arity: self.input_arity,
            outputs: self.outputs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn and_gate_truth_table() {
        let mut b = CircuitBuilder::new();
        let x = b.inputs(2).unwrap();
        let g = b.and(&x).unwrap();
        b.output(g);
        let c = b.finish();
        assert_eq!(c.evaluate(&[true, true]).unwrap(), vec![true]);
        assert_eq!(c.evaluate(&[true, false]).unwrap(), vec![false]);
        assert!(matches!(c.evaluate(&[true]), Err(Error::ArityMismatch { expected: 2, actual: 1 })));
    }

    #[test]
    fn const_one_ignores_input() {
        let mut b = CircuitBuilder::new();
        b.inputs(3).unwrap();
        let one = b.constant(true).unwrap();
        assert_eq!(b.constant(true).unwrap(), one);
        b.output(one);
        let c = b.finish();
        for bits in 0..8u8 {
            let input: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
            assert_eq!(c.evaluate(&input).unwrap(), vec![true]);
        }
        assert_eq!(c.metrics(), CircuitMetrics { depth: 0, size: 0, fan_in_max: 0 });
    }

    #[test]
    fn wide_and_metrics() {
        let mut b = CircuitBuilder::new();
        let x = b.inputs(8).unwrap();
        let g = b.and(&x).unwrap();
        b.output(g);
        let m = b.finish().metrics();
        assert_eq!((m.depth, m.size, m.fan_in_max), (1, 1, 8));
    }

    fn not_chain(len: usize) -> Circuit {
        let mut b = CircuitBuilder::new();
        let mut g = b.input().unwrap();
        for _ in 0..len {
            g = b.not(g).unwrap();
        }
        b.output(g);
        b.finish()
    }

    #[test]
    fn depth_violation_names_the_crossing_gate() {
        let c = not_chain(10);
        let report = c.validate_ac0(3, 100);
        assert!(!report.ok);
        assert_eq!(report.metrics.depth, 10);
        // gate 0 is the input, so the fourth NOT is gate 4
        assert_eq!(report.violations, vec![Violation::Depth { gate: 4, depth: 4, bound: 3 }]);
        assert!(c.validate_ac0(10, 10).ok);
    }

    #[test]
    fn size_bound_zero_always_fails_for_logic() {
        let report = not_chain(1).validate_ac0(5, 0);
        assert_eq!(report.violations, vec![Violation::Size { size: 1, bound: 0 }]);
    }

    #[test]
    fn builder_rejects_empty_and_forward_refs() {
        let mut b = CircuitBuilder::new();
        assert!(b.and(&[]).is_err());
        assert!(b.or(&[]).is_err());
        assert!(b.not(3).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let mut b = CircuitBuilder::with_budget(2);
        b.input().unwrap();
        b.input().unwrap();
        assert!(matches!(b.input(), Err(Error::ResourceExhausted(_))));
    }

    #[test]
    fn packed_matches_scalar() {
        let mut b = CircuitBuilder::new();
        let x = b.inputs(3).unwrap();
        let n0 = b.not(x[0]).unwrap();
        let a = b.and(&[n0, x[1]]).unwrap();
        let o = b.or(&[a, x[2]]).unwrap();
        b.output(o);
        b.output(a);
        let c = b.finish();
        let all: Vec<Vec<bool>> = (0..8u8).map(|v| (0..3).map(|i| v >> i & 1 == 1).collect()).collect();
        let many = c.evaluate_many(&all).unwrap();
        for (input, out) in all.iter().zip(&many) {
            assert_eq!(&c.evaluate(input).unwrap(), out);
        }
    }
}
