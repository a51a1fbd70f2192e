//! Constant-depth subcircuit constructions.

use itertools::Itertools;

use super::encoding::{CandidateLayout, PositionEncoding};
use super::{Circuit, CircuitBuilder, GateId};
use crate::error::{Error, Result};
use crate::game::{GameMove, Nimber, Position};
use crate::nimber::BitWidth;

/// Guards against constructions that stop being desk-scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildLimits {
    /// Largest threshold a threshold detector may use. Above this, the
    /// C(n, T) blowup is no longer a constant-exponent polynomial in practice.
    pub max_threshold: u32,
    pub gate_budget: usize,
}

impl Default for BuildLimits {
    fn default() -> Self {
        BuildLimits { max_threshold: 4, gate_budget: 1 << 22 }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn check_budget(estimate: u128, limits: &BuildLimits, what: &str) -> Result<()> {
    if estimate > limits.gate_budget as u128 {
        return Err(Error::ResourceExhausted(format!(
            "{what} needs about {estimate} gates, budget is {}",
            limits.gate_budget
        )));
    }
    Ok(())
}

/// "At least `t` of `sources`": OR over every size-`t` AND. `t = 0` is
/// constant true and `t > sources.len()` constant false.
pub(crate) fn emit_threshold(b: &mut CircuitBuilder, sources: &[GateId], t: usize) -> Result<GateId> {
    if t == 0 {
        return b.constant(true);
    }
    if t > sources.len() {
        return b.constant(false);
    }
    let mut terms = Vec::with_capacity(binomial(sources.len(), t) as usize);
    for combo in sources.iter().copied().combinations(t) {
        terms.push(b.and(&combo)?);
    }
    b.or(&terms)
}

pub fn threshold_at_least(n: usize, t: usize) -> Result<Circuit> {
    threshold_at_least_with(n, t, &BuildLimits::default())
}

/// Circuit on `n` inputs whose single output is 1 iff at least `t` inputs
/// are 1. Size C(n, t) + 1, depth 2 (constant true when `t = 0`).
pub fn threshold_at_least_with(n: usize, t: usize, limits: &BuildLimits) -> Result<Circuit> {
    if t > n {
        return Err(Error::ContractViolation(format!("threshold {t} exceeds input count {n}")));
    }
    if t > limits.max_threshold as usize {
        return Err(Error::ThresholdCap {
            neuron: format!("threshold_at_least({n}, {t})"),
            threshold: t as i64,
            cap: limits.max_threshold,
        });
    }
    check_budget(binomial(n, t) + 1 + n as u128, limits, "threshold detector")?;
    let mut b = CircuitBuilder::with_budget(limits.gate_budget);
    let x = b.inputs(n)?;
    let out = emit_threshold(&mut b, &x, t)?;
    b.output(out);
    Ok(b.finish())
}

/// (x ∧ ¬y) ∨ (¬x ∧ y), depth 3.
pub(crate) fn emit_xor(b: &mut CircuitBuilder, x: GateId, y: GateId) -> Result<GateId> {
    let nx = b.not(x)?;
    let ny = b.not(y)?;
    let left = b.and(&[x, ny])?;
    let right = b.and(&[nx, y])?;
    b.or(&[left, right])
}

/// 2l inputs (word a, then word b) to l outputs a ⊕ b, bit by bit.
pub fn xor_word(width: BitWidth) -> Result<Circuit> {
    let l = width.as_usize();
    let mut b = CircuitBuilder::new();
    let a = b.inputs(l)?;
    let c = b.inputs(l)?;
    for j in 0..l {
        let x = emit_xor(&mut b, a[j], c[j])?;
        b.output(x);
    }
    Ok(b.finish())
}

fn read_words(b: &mut CircuitBuilder, n: usize, width: BitWidth) -> Result<Vec<Vec<GateId>>> {
    (0..n).map(|_| b.inputs(width.as_usize())).collect()
}

/// Two encoded positions (2·n·l bits) to n bits: heap i differs.
pub fn build_diff_mask_circuit(n: usize, width: BitWidth) -> Result<Circuit> {
    let mut b = CircuitBuilder::new();
    let first = read_words(&mut b, n, width)?;
    let second = read_words(&mut b, n, width)?;
    for i in 0..n {
        let bits =
            (0..width.as_usize()).map(|j| emit_xor(&mut b, first[i][j], second[i][j])).collect::<Result<Vec<_>>>()?;
        let changed = b.or(&bits)?;
        b.output(changed);
    }
    Ok(b.finish())
}

/// Gates computing ⊕_{i∈D} (aᵢ ⊕ bᵢ) and whether |D| ≤ k_max.
pub(crate) struct NimberDiffParts {
    /// MSB first.
    pub value: Vec<GateId>,
    pub valid: GateId,
}

/// For every heap subset S with |S| ≤ k_max, `exact[S]` fires iff the diff
/// mask is exactly S. Output bit j is the OR over S of `exact[S]` ANDed with
/// the parity of the j-th difference bits over S, expanded as a DNF over the
/// odd assignments (at most 2^(k_max-1) terms, a constant).
pub(crate) fn emit_nimber_diff(
    b: &mut CircuitBuilder,
    first: &[Vec<GateId>],
    second: &[Vec<GateId>],
    k_max: usize,
) -> Result<NimberDiffParts> {
    let n = first.len();
    let l = first.first().map_or(0, Vec::len);
    let mut diff = Vec::with_capacity(n);
    let mut not_diff = Vec::with_capacity(n);
    for i in 0..n {
        let d = (0..l).map(|j| emit_xor(b, first[i][j], second[i][j])).collect::<Result<Vec<_>>>()?;
        let nd = d.iter().map(|&x| b.not(x)).collect::<Result<Vec<_>>>()?;
        diff.push(d);
        not_diff.push(nd);
    }
    let mask = diff.iter().map(|d| b.or(d)).collect::<Result<Vec<_>>>()?;
    let not_mask = mask.iter().map(|&m| b.not(m)).collect::<Result<Vec<_>>>()?;

    let mut exact = Vec::new();
    for size in 0..=k_max.min(n) {
        for subset in (0..n).combinations(size) {
            let literals: Vec<GateId> =
                (0..n).map(|i| if subset.contains(&i) { mask[i] } else { not_mask[i] }).collect();
            let gate = b.and(&literals)?;
            exact.push((subset, gate));
        }
    }
    let all_exact: Vec<GateId> = exact.iter().map(|(_, g)| *g).collect();
    let valid = b.or(&all_exact)?;

    let mut value = Vec::with_capacity(l);
    for j in 0..l {
        let mut terms = Vec::new();
        for (subset, exact_gate) in exact.iter().filter(|(s, _)| !s.is_empty()) {
            for assignment in 0u32..(1 << subset.len()) {
                if assignment.count_ones() % 2 == 0 {
                    continue;
                }
                let mut literals = vec![*exact_gate];
                for (pos, &i) in subset.iter().enumerate() {
                    literals.push(if assignment >> pos & 1 == 1 { diff[i][j] } else { not_diff[i][j] });
                }
                terms.push(b.and(&literals)?);
            }
        }
        value.push(if terms.is_empty() { b.constant(false)? } else { b.or(&terms)? });
    }
    Ok(NimberDiffParts { value, valid })
}

fn nimber_diff_gate_estimate(n: usize, l: usize, k_max: usize) -> u128 {
    let subsets: u128 = (0..=k_max.min(n)).map(|s| binomial(n, s)).sum();
    let terms: u128 = (1..=k_max.min(n)).map(|s| binomial(n, s) << (s - 1)).sum();
    (8 * n * l + 2 * n) as u128 + subsets + 1 + l as u128 * (terms + 1)
}

/// The nimber-difference circuit together with its shape.
#[derive(Clone, Debug)]
pub struct NimberDiffCircuit {
    circuit: Circuit,
    encoding: PositionEncoding,
    k_max: usize,
}

impl NimberDiffCircuit {
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn into_circuit(self) -> Circuit {
        self.circuit
    }

    pub fn heaps(&self) -> usize {
        self.encoding.heaps
    }

    pub fn width(&self) -> BitWidth {
        self.encoding.width
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn encode(&self, p1: &Position, p2: &Position) -> Result<Vec<bool>> {
        self.encoding.encode(&[p1, p2])
    }

    /// Decodes the outputs: the l value bits (MSB first) and the validity bit.
    pub fn decode(outputs: &[bool]) -> (Nimber, bool) {
        let (valid, value_bits) = outputs.split_last().expect("nimber-diff circuit has a validity output");
        let value = value_bits.iter().fold(0u32, |acc, &bit| acc << 1 | u32::from(bit));
        (Nimber(value), *valid)
    }

    pub fn evaluate(&self, p1: &Position, p2: &Position) -> Result<(Nimber, bool)> {
        let out = self.circuit.evaluate(&self.encode(p1, p2)?)?;
        Ok(Self::decode(&out))
    }
}

/// Inputs: two encoded positions of n heaps × l bits. Outputs: l bits of
/// the XOR of differing heap pairs, then a validity bit that is 0 when more
/// than `k_max` heaps differ (the value bits are then 0 as well).
pub fn build_nimber_diff_circuit(n: usize, width: BitWidth, k_max: usize) -> Result<NimberDiffCircuit> {
    build_nimber_diff_circuit_with(n, width, k_max, &BuildLimits::default())
}

pub fn build_nimber_diff_circuit_with(
    n: usize,
    width: BitWidth,
    k_max: usize,
    limits: &BuildLimits,
) -> Result<NimberDiffCircuit> {
    let encoding = PositionEncoding::new(2, n, width)?;
    check_budget(nimber_diff_gate_estimate(n, width.as_usize(), k_max), limits, "nimber-diff circuit")?;
    let mut b = CircuitBuilder::with_budget(limits.gate_budget);
    let first = read_words(&mut b, n, width)?;
    let second = read_words(&mut b, n, width)?;
    let parts = emit_nimber_diff(&mut b, &first, &second, k_max)?;
    for &g in &parts.value {
        b.output(g);
    }
    b.output(parts.valid);
    Ok(NimberDiffCircuit { circuit: b.finish(), encoding, k_max })
}

/// The three-frame move-validation network.
///
/// Frames are (P₁, Q₁, Current). Output slot (i, v) is 1 iff setting heap i
/// of Current to v is a strict decrease and
/// nimber_diff(P₁, Q₁) = nimber_diff(Current, result), with P₁ and Q₁
/// differing in at most `k_max` heaps.
#[derive(Clone, Debug)]
pub struct MoveValidator {
    circuit: Circuit,
    encoding: PositionEncoding,
    layout: CandidateLayout,
    k_max: usize,
}

impl MoveValidator {
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn into_circuit(self) -> Circuit {
        self.circuit
    }

    pub fn encoding(&self) -> &PositionEncoding {
        &self.encoding
    }

    pub fn layout(&self) -> &CandidateLayout {
        &self.layout
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// One score bit per candidate slot.
    pub fn scores(&self, p1: &Position, q1: &Position, current: &Position) -> Result<Vec<bool>> {
        self.circuit.evaluate(&self.encoding.encode(&[p1, q1, current])?)
    }

    /// Validated candidates in slot order (lowest heap, then lowest count).
    pub fn validated_moves(&self, p1: &Position, q1: &Position, current: &Position) -> Result<Vec<GameMove>> {
        Ok(self
            .scores(p1, q1, current)?
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(slot, _)| self.layout.candidate(slot))
            .collect())
    }
}

pub fn build_move_validator_circuit(encoding: PositionEncoding, k_max: usize) -> Result<MoveValidator> {
    build_move_validator_circuit_with(encoding, k_max, &BuildLimits::default())
}

pub fn build_move_validator_circuit_with(
    encoding: PositionEncoding,
    k_max: usize,
    limits: &BuildLimits,
) -> Result<MoveValidator> {
    if encoding.frames != 3 {
        return Err(Error::ContractViolation(format!(
            "move validator needs 3 frames (P1, Q1, Current), got {}",
            encoding.frames
        )));
    }
    let n = encoding.heaps;
    let l = encoding.width.as_usize();
    let layout = CandidateLayout { heaps: n, width: encoding.width };
    let slots = layout.len() as u128;
    check_budget(nimber_diff_gate_estimate(n, l, k_max) + slots * 3 + (n * l * 6) as u128, limits, "move validator")?;

    let mut b = CircuitBuilder::with_budget(limits.gate_budget);
    let p1 = read_words(&mut b, n, encoding.width)?;
    let q1 = read_words(&mut b, n, encoding.width)?;
    let current = read_words(&mut b, n, encoding.width)?;

    // difference detection on (P₁, Q₁)
    let diff = emit_nimber_diff(&mut b, &p1, &q1, k_max)?;
    let not_diff = diff.value.iter().map(|&d| b.not(d)).collect::<Result<Vec<_>>>()?;

    let per_heap = layout.slots_per_heap();
    let mut outputs = Vec::with_capacity(layout.len());
    for cur in &current {
        let not_cur = cur.iter().map(|&c| b.not(c)).collect::<Result<Vec<_>>>()?;
        // lookup table over the current count: one minterm per value
        let minterm = (0..per_heap)
            .map(|value| {
                let literals: Vec<GateId> =
                    (0..l).map(|j| if value >> (l - 1 - j) & 1 == 1 { cur[j] } else { not_cur[j] }).collect();
                b.and(&literals)
            })
            .collect::<Result<Vec<_>>>()?;
        // parity_match[j][bit]: does diff bit j equal (cur ⊕ bit) at position j
        let mut parity_match = Vec::with_capacity(l);
        for j in 0..l {
            let same_hi = b.and(&[diff.value[j], cur[j]])?;
            let same_lo = b.and(&[not_diff[j], not_cur[j]])?;
            let flip_hi = b.and(&[diff.value[j], not_cur[j]])?;
            let flip_lo = b.and(&[not_diff[j], cur[j]])?;
            let keep = b.or(&[same_hi, same_lo])?;
            let flip = b.or(&[flip_hi, flip_lo])?;
            parity_match.push([keep, flip]);
        }
        for v in 0..per_heap {
            let decreases = if v + 1 < per_heap { b.or(&minterm[v + 1..])? } else { b.constant(false)? };
            let mut literals: Vec<GateId> = (0..l).map(|j| parity_match[j][v >> (l - 1 - j) & 1]).collect();
            literals.push(decreases);
            literals.push(diff.valid);
            outputs.push(b.and(&literals)?);
        }
    }
    for g in outputs {
        b.output(g);
    }
    Ok(MoveValidator { circuit: b.finish(), encoding, layout, k_max })
}
