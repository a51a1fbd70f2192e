use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::RngCore;

use super::{reject_terminal, tie_break_moves, Agent, FrameHistory};
use crate::circuit::{emit_threshold, CandidateLayout, Circuit, CircuitBuilder, GateId, PositionEncoding};
use crate::error::{Error, Result};
use crate::game::{GameMove, GameRules, Position};
use crate::nimber::BitWidth;

/// Largest count of other non-empty heaps the baseline can tell apart.
const HEURISTIC_COUNT_CAP: usize = 4;

/// Scores every move slot by "the resulting number of non-empty heaps is
/// even", counting the other non-empty heaps with threshold detectors up to
/// a fixed cap. Counts at or above the cap score zero either way, so the
/// heuristic degrades on larger boards.
pub fn heuristic_baseline_circuit(heaps: usize, width: BitWidth) -> Result<Circuit> {
    let encoding = PositionEncoding::new(1, heaps, width)?;
    let layout = CandidateLayout { heaps, width };
    let mut b = CircuitBuilder::new();
    let bits = b.inputs(encoding.input_len())?;
    let l = width.as_usize();
    let nonempty: Vec<GateId> = bits.chunks(l).map(|word| b.or(word)).collect::<Result<_>>()?;
    let mut per_heap = Vec::with_capacity(heaps);
    for i in 0..heaps {
        let others: Vec<GateId> = nonempty.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &g)| g).collect();
        let at_least: Vec<GateId> =
            (0..=HEURISTIC_COUNT_CAP).map(|t| emit_threshold(&mut b, &others, t)).collect::<Result<_>>()?;
        let mut exactly = Vec::with_capacity(HEURISTIC_COUNT_CAP);
        for t in 0..HEURISTIC_COUNT_CAP {
            let above = b.not(at_least[t + 1])?;
            exactly.push(b.and(&[at_least[t], above])?);
        }
        let even = b.or(&[exactly[0], exactly[2]])?;
        let odd = b.or(&[exactly[1], exactly[3]])?;
        per_heap.push((even, odd));
    }
    for slot in 0..layout.len() {
        let mv = layout.candidate(slot);
        let (even, odd) = per_heap[mv.heap_index];
        // emptying the heap keeps the other count; anything else adds one
        b.output(if mv.new_count == 0 { even } else { odd });
    }
    Ok(b.finish())
}

enum Source {
    Fixed(Arc<Circuit>),
    Heuristic(Mutex<HashMap<(usize, u32), Arc<Circuit>>>),
}

/// Plays the first legal candidate (in tie-break order) whose score bit is
/// set by a circuit reading only the current position; with no scored
/// candidate it plays the tie-break-minimal legal move.
pub struct SingleFrameAgent {
    source: Source,
    id: String,
}

impl std::fmt::Debug for SingleFrameAgent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SingleFrameAgent").field("id", &self.id).finish_non_exhaustive()
    }
}

impl SingleFrameAgent {
    /// `circuit` reads one frame of `n·l` bits and emits `n·2^l` slot scores.
    pub fn new(circuit: Circuit) -> Self {
        SingleFrameAgent { source: Source::Fixed(Arc::new(circuit)), id: "singleframe".into() }
    }

    pub fn heuristic() -> Self {
        SingleFrameAgent { source: Source::Heuristic(Mutex::new(HashMap::new())), id: "singleframe:heuristic".into() }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    fn circuit_for(&self, p: &Position) -> Result<(Arc<Circuit>, BitWidth)> {
        let n = p.len();
        match &self.source {
            Source::Fixed(c) => {
                let arity = c.input_arity();
                let width = (arity % n == 0)
                    .then(|| u32::try_from(arity / n).ok())
                    .flatten()
                    .and_then(|l| BitWidth::new(l).ok())
                    .ok_or(Error::ArityMismatch { expected: n, actual: arity })?;
                let slots = CandidateLayout { heaps: n, width }.len();
                if c.outputs().len() != slots {
                    return Err(Error::ArityMismatch { expected: slots, actual: c.outputs().len() });
                }
                Ok((Arc::clone(c), width))
            }
            Source::Heuristic(cache) => {
                let width = BitWidth::for_max_heap(p.max_heap());
                let mut cache = cache.lock().unwrap_or_else(|e| e.into_inner());
                if let Some(c) = cache.get(&(n, width.bits())) {
                    return Ok((Arc::clone(c), width));
                }
                let c = Arc::new(heuristic_baseline_circuit(n, width)?);
                cache.insert((n, width.bits()), Arc::clone(&c));
                Ok((c, width))
            }
        }
    }
}

impl Agent for SingleFrameAgent {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn choose(&self, rules: &GameRules, history: &FrameHistory, _rng: &mut dyn RngCore) -> Result<GameMove> {
        let p = history.current();
        reject_terminal(p)?;
        let (circuit, width) = self.circuit_for(p)?;
        let encoding = PositionEncoding::new(1, p.len(), width)?;
        let scores = circuit.evaluate(&encoding.encode(&[p])?)?;
        let layout = CandidateLayout { heaps: p.len(), width };
        let moves = tie_break_moves(p, rules)?;
        let scored =
            moves.iter().find(|m| m.split == 0 && layout.slot(m.heap_index, m.new_count).is_some_and(|s| scores[s]));
        scored.or(moves.first()).copied().ok_or(Error::TerminalPosition)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn choose(agent: &SingleFrameAgent, p: &str) -> Result<GameMove> {
        let h = FrameHistory::new(1, p.parse().unwrap()).unwrap();
        agent.choose(&GameRules::nim(), &h, &mut ChaCha8Rng::seed_from_u64(0))
    }

    fn constant_one(heaps: usize, width: BitWidth) -> Circuit {
        let mut b = CircuitBuilder::new();
        b.inputs(heaps * width.as_usize()).unwrap();
        let one = b.constant(true).unwrap();
        for _ in 0..(CandidateLayout { heaps, width }).len() {
            b.output(one);
        }
        b.finish()
    }

    #[test]
    fn constant_one_plays_tie_break_minimum() {
        let agent = SingleFrameAgent::new(constant_one(3, BitWidth::new(3).unwrap()));
        assert_eq!(choose(&agent, "3,5,7").unwrap(), GameMove::new(0, 0));
        assert_eq!(choose(&agent, "0,5,7").unwrap(), GameMove::new(1, 0));
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let agent = SingleFrameAgent::new(constant_one(3, BitWidth::new(3).unwrap()));
        assert!(matches!(choose(&agent, "3,5"), Err(Error::ArityMismatch { .. })));
        assert!(choose(&agent, "3,5,9").is_err());
    }

    #[test]
    fn only_move_is_played() {
        assert_eq!(choose(&SingleFrameAgent::heuristic(), "1").unwrap(), GameMove::new(0, 0));
    }

    fn nonempty_even_after(p: &Position, m: &GameMove) -> bool {
        let count = p
            .heaps()
            .iter()
            .enumerate()
            .filter(|&(j, &h)| if j == m.heap_index { m.new_count > 0 } else { h > 0 })
            .count();
        count % 2 == 0
    }

    #[test]
    fn heuristic_scores_parity_of_nonempty_heaps_below_cap() {
        let width = BitWidth::new(2).unwrap();
        let c = heuristic_baseline_circuit(4, width).unwrap();
        let layout = CandidateLayout { heaps: 4, width };
        let enc = PositionEncoding::new(1, 4, width).unwrap();
        for code in 0..256u32 {
            let p = Position::new((0..4).map(|i| code >> (2 * i) & 3).collect()).unwrap();
            let scores = c.evaluate(&enc.encode(&[&p]).unwrap()).unwrap();
            for (slot, &s) in scores.iter().enumerate() {
                let m = layout.candidate(slot);
                assert_eq!(s, nonempty_even_after(&p, &m), "{p} {m}");
            }
        }
        assert!(c.metrics().depth <= 6);
    }

    #[test]
    fn heuristic_degrades_past_the_cap() {
        // six other non-empty heaps: true parity is even, the baseline scores zero
        let width = BitWidth::new(1).unwrap();
        let c = heuristic_baseline_circuit(7, width).unwrap();
        let scores = c.evaluate(&[true; 7]).unwrap();
        assert!(!scores[0]);
    }
}
