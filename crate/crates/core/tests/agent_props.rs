use nimcore::agents::{preserving_reply, Agent, FrameHistory, MultiframeAgent, RandomAgent};
use nimcore::game::apply_move;
use nimcore::harness::{exhaustive_adversary, play_match, replay, AdversaryOptions, Seat};
use nimcore::nimber::{is_winning, nim_sum};
use nimcore::{GameMove, GameRules, Position};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn winning(max_len: usize, max_heap: u32) -> impl Strategy<Value = Position> {
    prop::collection::vec(0..=max_heap, 1..=max_len)
        .prop_map(|h| Position::new(h).unwrap())
        .prop_filter("winning start", is_winning)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn preserving_reply_restores_zero(h in prop::collection::vec(0u32..64, 2..7), i in 0usize..7, cut in 0u32..64) {
        let mut h = h;
        // force a zero nim sum by fixing up the last heap
        let last = h.len() - 1;
        h[last] = h[..last].iter().fold(0, |a, &x| a ^ x);
        let p = Position::new(h).unwrap();
        let i = i % p.len();
        prop_assume!(p.heaps()[i] > 0);
        let m = GameMove::new(i, cut % p.heaps()[i]);
        let nim = GameRules::nim();
        let q = apply_move(&p, &m, &nim).unwrap();
        let reply = preserving_reply(&p, &q).unwrap().expect("a zero position always has an answer");
        prop_assert!(nim_sum(&apply_move(&q, &reply, &nim).unwrap()).is_zero());
    }

    #[test]
    fn multiframe_beats_random_from_winning_starts(p in winning(5, 12), seed in any::<u64>()) {
        let r = play_match(&GameRules::nim(), &p, [&MultiframeAgent::default(), &RandomAgent], seed).unwrap();
        prop_assert_eq!(r.winner, 0);
        prop_assert_eq!(r.preservation_failures(0), 0);
        prop_assert_eq!(replay(&r).unwrap(), 0);
    }

    #[test]
    fn multiframe_never_loses_small_trees(p in winning(3, 5)) {
        let r = exhaustive_adversary(&GameRules::nim(), &p, &MultiframeAgent::default(), Seat::First, AdversaryOptions::default()).unwrap();
        prop_assert!(r.complete && r.agent_always_wins);
    }

    #[test]
    fn random_agent_stays_legal(h in prop::collection::vec(0u32..9, 1..5), seed in any::<u64>()) {
        let p = Position::new(h).unwrap();
        prop_assume!(!p.is_terminal());
        let hist = FrameHistory::new(1, p.clone()).unwrap();
        let m = RandomAgent.choose(&GameRules::nim(), &hist, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(apply_move(&p, &m, &GameRules::nim()).is_ok());
    }
}
