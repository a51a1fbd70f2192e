//! Closed-form NIM arithmetic and the local nimber-difference primitive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameMove, Heap, Nimber, Position};

/// Default bound on differing heaps: one opponent move plus one reply.
pub const DEFAULT_K_MAX: usize = 2;

/// Bitwise XOR of all heap sizes.
pub fn nim_sum(p: &Position) -> Nimber {
    Nimber(p.heaps().iter().fold(0, |acc, &h| acc ^ h))
}

pub fn is_winning(p: &Position) -> bool {
    !nim_sum(p).is_zero()
}

/// Every move to a zero-sum position, in heap order. At most one per heap.
pub fn winning_moves(p: &Position) -> Vec<GameMove> {
    let s = nim_sum(p).value();
    if s == 0 {
        return Vec::new();
    }
    p.heaps()
        .iter()
        .enumerate()
        .filter_map(|(i, &h)| {
            let target = h ^ s;
            (target < h).then(|| GameMove::new(i, target))
        })
        .collect()
}

/// Indices where two equal-length positions differ, strictly increasing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffMask {
    changed: Vec<usize>,
}

impl DiffMask {
    pub fn changed(&self) -> &[usize] {
        &self.changed
    }

    pub fn len(&self) -> usize {
        self.changed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.changed.is_empty()
    }

    pub fn check_within(&self, k_max: usize) -> Result<()> {
        if self.changed.len() > k_max {
            return Err(Error::ContractViolation(format!(
                "positions differ in {} heaps {:?}, more than k_max = {k_max}",
                self.changed.len(),
                self.changed
            )));
        }
        Ok(())
    }
}

pub fn diff_mask(p1: &Position, p2: &Position) -> Result<DiffMask> {
    if p1.len() != p2.len() {
        return Err(Error::InvalidPosition(format!("heap counts differ: {} vs {}", p1.len(), p2.len())));
    }
    let changed =
        p1.heaps().iter().zip(p2.heaps()).enumerate().filter_map(|(i, (a, b))| (a != b).then_some(i)).collect();
    Ok(DiffMask { changed })
}

/// G(p1) XOR G(p2) computed from the differing heaps only.
///
/// Fails with [`Error::ContractViolation`] when more than `k_max` heaps
/// differ; the result is only locally computable under that bound.
pub fn nimber_diff(p1: &Position, p2: &Position, k_max: usize) -> Result<Nimber> {
    let mask = diff_mask(p1, p2)?;
    mask.check_within(k_max)?;
    let (a, b) = (p1.heaps(), p2.heaps());
    Ok(Nimber(mask.changed().iter().fold(0, |acc, &i| acc ^ a[i] ^ b[i])))
}

/// Number of bits per heap in the binary position encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitWidth(u32);

impl BitWidth {
    pub const MAX: u32 = 31;

    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > Self::MAX {
            return Err(Error::InvalidPosition(format!("bit width must be in 1..={}, got {bits}", Self::MAX)));
        }
        Ok(BitWidth(bits))
    }

    /// ⌈log₂(max_heap + 1)⌉, at least one bit.
    pub fn for_max_heap(max_heap: Heap) -> Self {
        BitWidth((Heap::BITS - max_heap.leading_zeros()).max(1))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    /// Number of distinct values representable (2^l).
    pub fn capacity(self) -> u64 {
        1u64 << self.0
    }

    pub fn fits(self, h: Heap) -> bool {
        u64::from(h) < self.capacity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{apply_move, legal_moves, GameRules};

    fn pos(s: &str) -> Position {
        s.parse().unwrap()
    }

    #[test]
    fn nim_sum_examples() {
        assert_eq!(nim_sum(&pos("3,5,7")), Nimber(1));
        assert_eq!(nim_sum(&pos("9,9")), Nimber(0));
        assert_eq!(nim_sum(&pos("0,0,0")), Nimber(0));
        assert!(is_winning(&pos("3,5,7")));
        assert!(!is_winning(&pos("1,2,3")));
        assert!(!is_winning(&pos("0")));
    }

    #[test]
    fn winning_moves_examples() {
        assert_eq!(winning_moves(&pos("3,5,7")), vec![GameMove::new(0, 2), GameMove::new(1, 4), GameMove::new(2, 6)]);
        assert!(winning_moves(&pos("1,2,3")).is_empty());
        assert_eq!(winning_moves(&pos("6")), vec![GameMove::new(0, 0)]);
    }

    #[test]
    fn winning_moves_match_brute_force_filter() {
        let nim = GameRules::nim();
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..6 {
                    let p = Position::new(vec![a, b, c]).unwrap();
                    let brute: Vec<GameMove> = legal_moves(&p, &nim)
                        .unwrap()
                        .into_iter()
                        .filter(|m| nim_sum(&apply_move(&p, m, &nim).unwrap()).is_zero())
                        .collect();
                    let mut fast = winning_moves(&p);
                    fast.sort();
                    let mut brute = brute;
                    brute.sort();
                    assert_eq!(fast, brute, "{p}");
                }
            }
        }
    }

    #[test]
    fn nimber_diff_examples() {
        assert_eq!(nimber_diff(&pos("3,5,7"), &pos("3,5,2"), 2).unwrap(), Nimber(5));
        assert_eq!(nimber_diff(&pos("3,5,7"), &pos("3,5,7"), 2).unwrap(), Nimber(0));
        assert_eq!(nimber_diff(&pos("3,5,7"), &pos("2,5,6"), 2).unwrap(), Nimber(0));
    }

    #[test]
    fn nimber_diff_enforces_k_max() {
        let err = nimber_diff(&pos("3,5,7"), &pos("2,4,6"), 2).unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));
        assert!(nimber_diff(&pos("3,5,7"), &pos("2,4,6"), 3).is_ok());
        assert!(nimber_diff(&pos("3,5"), &pos("3,5,7"), 2).is_err());
    }

    #[test]
    fn diff_mask_examples() {
        assert_eq!(diff_mask(&pos("3,5,7"), &pos("3,5,2")).unwrap().changed(), &[2]);
        assert!(diff_mask(&pos("3,5,7"), &pos("3,5,7")).unwrap().is_empty());
        assert_eq!(diff_mask(&pos("1,1"), &pos("0,0")).unwrap().changed(), &[0, 1]);
        assert!(diff_mask(&pos("1"), &pos("1,1")).is_err());
    }

    #[test]
    fn bit_width() {
        assert_eq!(BitWidth::for_max_heap(0).bits(), 1);
        assert_eq!(BitWidth::for_max_heap(1).bits(), 1);
        assert_eq!(BitWidth::for_max_heap(7).bits(), 3);
        assert_eq!(BitWidth::for_max_heap(8).bits(), 4);
        assert_eq!(BitWidth::for_max_heap(255).bits(), 8);
        assert!(BitWidth::for_max_heap(15).fits(15));
        assert!(!BitWidth::for_max_heap(15).fits(16));
        assert!(BitWidth::new(0).is_err());
    }
}
