//! Pairing strategies for boards made of two identical halves plus one
//! extra heap: `k` heaps of `g` items, the same `k` heaps again, and a last
//! heap `H`. Heap `i` and heap `i + k` form a mirrored pair.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{reject_terminal, require_nim, tie_break_moves, Agent, FrameHistory};
use crate::error::{Error, Result};
use crate::game::{GameMove, GameRules, Heap, Position};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MirrorRole {
    P1,
    P2,
}

impl FromStr for MirrorRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p1" => Ok(MirrorRole::P1),
            "p2" => Ok(MirrorRole::P2),
            other => Err(Error::Config(format!("mirror role must be p1 or p2, got {other:?}"))),
        }
    }
}

impl fmt::Display for MirrorRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MirrorRole::P1 => "p1",
            MirrorRole::P2 => "p2",
        })
    }
}

fn check_board(p: &Position, k: usize, half_max: Heap, extra_max: Heap, name: &str) -> Result<()> {
    let heaps = p.heaps();
    let ok = heaps.len() == 2 * k + 1 && heaps[..2 * k].iter().all(|&h| h <= half_max) && heaps[2 * k] <= extra_max;
    if ok {
        Ok(())
    } else {
        Err(Error::Agent(format!("{p} is not reachable on the {name} board with k = {k}")))
    }
}

/// Lowest-index move on `indices` to a zero NIM sum over `indices`.
fn zeroing_move(p: &Position, indices: &[usize]) -> Option<GameMove> {
    let s = indices.iter().fold(0, |acc, &i| acc ^ p.heaps()[i]);
    if s == 0 {
        return None;
    }
    indices.iter().find_map(|&i| {
        let h = p.heaps()[i];
        (h ^ s < h).then(|| GameMove::new(i, h ^ s))
    })
}

/// Board: 2k heaps of one item plus a heap of two. The first player empties
/// the two-heap, leaving an even number of single items; from then on every
/// move removes one item and the parity takes care of itself. Moving second
/// after any other opening, shrinking the two-heap to 0 or 1 restores an
/// even count of singles.
#[derive(Clone, Copy, Debug)]
pub struct Mirror71Agent {
    k: usize,
}

impl Mirror71Agent {
    pub fn new(k: usize) -> Self {
        Mirror71Agent { k }
    }

    pub fn initial_position(k: usize) -> Position {
        let mut heaps = vec![1; 2 * k];
        heaps.push(2);
        Position::new(heaps).expect("non-empty board")
    }
}

impl Agent for Mirror71Agent {
    fn id(&self) -> String {
        format!("mirror71:{}", self.k)
    }

    fn choose(&self, rules: &GameRules, history: &FrameHistory, _rng: &mut dyn RngCore) -> Result<GameMove> {
        require_nim(rules, "mirror")?;
        let p = history.current();
        reject_terminal(p)?;
        check_board(p, self.k, 1, 2, "single-item mirror")?;
        let extra = 2 * self.k;
        if p.heaps()[extra] == 2 {
            let singles = p.heaps()[..extra].iter().filter(|&&h| h == 1).count();
            return Ok(GameMove::new(extra, (singles % 2) as Heap));
        }
        let first = p.heaps().iter().position(|&h| h > 0).ok_or(Error::TerminalPosition)?;
        Ok(GameMove::new(first, 0))
    }
}

/// Board: 2k heaps of two items plus a heap of three.
///
/// As first player: empty the three-heap, then copy every opponent move onto
/// the paired heap. As second player: play into a zero NIM sum whenever one
/// is reachable (equalizing the single unbalanced pair when the small
/// subgame `{heap 0, heap k, H}` is already balanced), otherwise open by
/// shrinking heap 0 to one item and keep later moves inside the small
/// subgame.
#[derive(Clone, Copy, Debug)]
pub struct Mirror72Agent {
    k: usize,
    role: MirrorRole,
}

impl Mirror72Agent {
    pub fn new(k: usize, role: MirrorRole) -> Self {
        Mirror72Agent { k, role }
    }

    pub fn role(&self) -> MirrorRole {
        self.role
    }

    pub fn initial_position(k: usize) -> Position {
        let mut heaps = vec![2; 2 * k];
        heaps.push(3);
        Position::new(heaps).expect("non-empty board")
    }

    fn unbalanced_pairs(&self, p: &Position, from: usize) -> Vec<usize> {
        (from..self.k).filter(|&i| p.heaps()[i] != p.heaps()[i + self.k]).collect()
    }

    fn equalize(&self, p: &Position, i: usize) -> GameMove {
        let (a, b) = (p.heaps()[i], p.heaps()[i + self.k]);
        if a > b {
            GameMove::new(i, b)
        } else {
            GameMove::new(i + self.k, a)
        }
    }

    fn choose_first(&self, p: &Position, rules: &GameRules) -> Result<GameMove> {
        let extra = 2 * self.k;
        let unbalanced = self.unbalanced_pairs(p, 0);
        match (p.heaps()[extra], unbalanced.as_slice()) {
            (h, []) if h > 0 => Ok(GameMove::new(extra, 0)),
            (0, [i]) => Ok(self.equalize(p, *i)),
            _ => self.fallback(p, rules),
        }
    }

    fn choose_second(&self, p: &Position, rules: &GameRules) -> Result<GameMove> {
        let extra = 2 * self.k;
        let small = [0, self.k, extra];
        let unbalanced = self.unbalanced_pairs(p, 1);
        let small_sum = small.iter().fold(0, |acc, &i| acc ^ p.heaps()[i]);
        match unbalanced.as_slice() {
            [] => {
                if let Some(m) = zeroing_move(p, &small) {
                    return Ok(m);
                }
            }
            [i] => {
                if small_sum == 0 {
                    return Ok(self.equalize(p, *i));
                }
                let active = [0, *i, self.k, *i + self.k, extra];
                if let Some(m) = zeroing_move(p, &active) {
                    return Ok(m);
                }
            }
            _ => {
                let all: Vec<usize> = (0..p.len()).collect();
                if let Some(m) = zeroing_move(p, &all) {
                    return Ok(m);
                }
            }
        }
        if p.heaps()[0] == 2 && p.heaps()[self.k] == 2 {
            return Ok(GameMove::new(0, 1));
        }
        if let Some(&i) = small.iter().find(|&&i| p.heaps()[i] > 0) {
            return Ok(GameMove::new(i, p.heaps()[i] - 1));
        }
        self.fallback(p, rules)
    }

    fn fallback(&self, p: &Position, rules: &GameRules) -> Result<GameMove> {
        let all: Vec<usize> = (0..p.len()).collect();
        match zeroing_move(p, &all) {
            Some(m) => Ok(m),
            None => tie_break_moves(p, rules)?.first().copied().ok_or(Error::TerminalPosition),
        }
    }
}

impl Agent for Mirror72Agent {
    fn id(&self) -> String {
        format!("mirror72:{}:{}", self.k, self.role)
    }

    fn choose(&self, rules: &GameRules, history: &FrameHistory, _rng: &mut dyn RngCore) -> Result<GameMove> {
        require_nim(rules, "mirror")?;
        let p = history.current();
        reject_terminal(p)?;
        check_board(p, self.k, 2, 3, "two-item mirror")?;
        match self.role {
            MirrorRole::P1 => self.choose_first(p, rules),
            MirrorRole::P2 => self.choose_second(p, rules),
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::game::apply_move;

    fn choose(agent: &dyn Agent, p: &Position) -> Result<GameMove> {
        let h = FrameHistory::new(1, p.clone()).unwrap();
        agent.choose(&GameRules::nim(), &h, &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn mirror71_examples() {
        let agent = Mirror71Agent::new(2);
        let start = Mirror71Agent::initial_position(2);
        assert_eq!(start.heaps(), &[1, 1, 1, 1, 2]);
        assert_eq!(choose(&agent, &start).unwrap(), GameMove::new(4, 0));
        let after: Position = "1,0,1,1,0".parse().unwrap();
        assert_eq!(choose(&agent, &after).unwrap(), GameMove::new(0, 0));
        // moving second after the opponent took a single: leave H = 1
        let opened: Position = "0,1,1,1,2".parse().unwrap();
        assert_eq!(choose(&agent, &opened).unwrap(), GameMove::new(4, 1));
        assert!(choose(&agent, &"2,1,1,1,2".parse().unwrap()).is_err());
        assert!(choose(&agent, &"1,1,2".parse().unwrap()).is_err());
    }

    #[test]
    fn mirror72_first_player_examples() {
        let agent = Mirror72Agent::new(2, MirrorRole::P1);
        let start = Mirror72Agent::initial_position(2);
        assert_eq!(choose(&agent, &start).unwrap(), GameMove::new(4, 0));
        let nim = GameRules::nim();
        let after = apply_move(&start, &GameMove::new(4, 0), &nim).unwrap();
        let after = apply_move(&after, &GameMove::new(0, 1), &nim).unwrap();
        assert_eq!(choose(&agent, &after).unwrap(), GameMove::new(2, 1));
        assert!(choose(&agent, &"3,2,2,2,3".parse().unwrap()).is_err());
    }

    #[test]
    fn mirror72_second_player_converts_mistakes() {
        let agent = Mirror72Agent::new(2, MirrorRole::P2);
        let nim = GameRules::nim();
        // opponent opens correctly: no winning reply, open with heap 0 -> 1
        let p: Position = "2,2,2,2,0".parse().unwrap();
        assert_eq!(choose(&agent, &p).unwrap(), GameMove::new(0, 1));
        // opponent blunders by shrinking H to 2: reply to a zero sum
        let p: Position = "2,2,2,2,2".parse().unwrap();
        let m = choose(&agent, &p).unwrap();
        assert!(crate::nimber::nim_sum(&apply_move(&p, &m, &nim).unwrap()).is_zero());
        // duplicate in the G' half
        let p: Position = "1,0,1,2,0".parse().unwrap();
        assert_eq!(choose(&agent, &p).unwrap(), GameMove::new(3, 0));
    }

    #[test]
    fn role_parsing() {
        assert_eq!("p1".parse::<MirrorRole>().unwrap(), MirrorRole::P1);
        assert!("x".parse::<MirrorRole>().is_err());
    }
}
