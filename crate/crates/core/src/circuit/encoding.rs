use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameMove, Heap, Position};
use crate::nimber::BitWidth;

/// Fixed-offset binary layout of consecutive frames: frame-major, then
/// heap-major, then bit-major with the most significant bit first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionEncoding {
    pub frames: usize,
    pub heaps: usize,
    pub width: BitWidth,
}

impl PositionEncoding {
    pub fn new(frames: usize, heaps: usize, width: BitWidth) -> Result<Self> {
        if frames == 0 || heaps == 0 {
            return Err(Error::InvalidPosition("encoding needs at least one frame and one heap".into()));
        }
        Ok(PositionEncoding { frames, heaps, width })
    }

    /// The three-frame layout (P₁, Q₁, Current) consumed by the move validator.
    pub fn three_frame(heaps: usize, width: BitWidth) -> Result<Self> {
        Self::new(3, heaps, width)
    }

    pub fn input_len(&self) -> usize {
        self.frames * self.frame_len()
    }

    pub fn frame_len(&self) -> usize {
        self.heaps * self.width.as_usize()
    }

    /// Bit `bit` counts from the most significant bit (0 = MSB).
    pub fn offset(&self, frame: usize, heap: usize, bit: usize) -> usize {
        frame * self.frame_len() + heap * self.width.as_usize() + bit
    }

    pub fn encode(&self, frames: &[&Position]) -> Result<Vec<bool>> {
        if frames.len() != self.frames {
            return Err(Error::ArityMismatch { expected: self.frames, actual: frames.len() });
        }
        let mut bits = Vec::with_capacity(self.input_len());
        for p in frames {
            if p.len() != self.heaps {
                return Err(Error::InvalidPosition(format!(
                    "encoding expects {} heaps, position {p} has {}",
                    self.heaps,
                    p.len()
                )));
            }
            for &h in p.heaps() {
                push_word(&mut bits, h, self.width)?;
            }
        }
        Ok(bits)
    }
}

pub(crate) fn push_word(bits: &mut Vec<bool>, h: Heap, width: BitWidth) -> Result<()> {
    if !width.fits(h) {
        return Err(Error::InvalidPosition(format!("heap {h} does not fit in {} bits", width.bits())));
    }
    let l = width.bits();
    bits.extend((0..l).map(|j| (h >> (l - 1 - j)) & 1 == 1));
    Ok(())
}

/// One output slot per (heap, new_count) pair with new_count < 2^l,
/// heap-major and ascending in new_count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateLayout {
    pub heaps: usize,
    pub width: BitWidth,
}

impl CandidateLayout {
    pub fn slots_per_heap(&self) -> usize {
        self.width.capacity() as usize
    }

    pub fn len(&self) -> usize {
        self.heaps * self.slots_per_heap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slot(&self, heap: usize, new_count: Heap) -> Option<usize> {
        (heap < self.heaps && self.width.fits(new_count)).then(|| heap * self.slots_per_heap() + new_count as usize)
    }

    pub fn candidate(&self, slot: usize) -> GameMove {
        GameMove::new(slot / self.slots_per_heap(), (slot % self.slots_per_heap()) as Heap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_first_layout() {
        let enc = PositionEncoding::new(2, 2, BitWidth::new(3).unwrap()).unwrap();
        let a: Position = "1,6".parse().unwrap();
        let b: Position = "0,7".parse().unwrap();
        let bits = enc.encode(&[&a, &b]).unwrap();
        let as_str: String = bits.iter().map(|&x| if x { '1' } else { '0' }).collect();
        assert_eq!(as_str, "001110000111");
        assert_eq!(enc.offset(1, 1, 0), 9);
        assert_eq!(enc.input_len(), 12);
    }

    #[test]
    fn encode_rejects_overflow_and_shape() {
        let enc = PositionEncoding::new(1, 2, BitWidth::new(2).unwrap()).unwrap();
        assert!(enc.encode(&[&"4,0".parse().unwrap()]).is_err());
        assert!(enc.encode(&[&"1".parse().unwrap()]).is_err());
        assert!(enc.encode(&[]).is_err());
    }

    #[test]
    fn candidate_slots() {
        let layout = CandidateLayout { heaps: 3, width: BitWidth::new(2).unwrap() };
        assert_eq!(layout.len(), 12);
        assert_eq!(layout.slot(2, 3), Some(11));
        assert_eq!(layout.candidate(6), GameMove::new(1, 2));
        assert_eq!(layout.slot(0, 4), None);
    }
}
