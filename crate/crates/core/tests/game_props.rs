use nimcore::game::{apply_move, legal_moves, GrundySolver, Outcome, WinLossSolver};
use nimcore::nimber::{nim_sum, nimber_diff, winning_moves};
use nimcore::{GameRules, Position};
use proptest::prelude::*;

fn heaps(max_len: usize, max_heap: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..=max_heap, 1..=max_len)
}

fn rules() -> impl Strategy<Value = GameRules> {
    prop_oneof![Just(GameRules::nim()), Just(GameRules::kayles()), Just(GameRules::subtraction([1, 2, 3]).unwrap()),]
}

proptest! {
    #[test]
    fn moves_shrink_the_board(h in heaps(4, 9), rules in rules()) {
        let p = Position::new(h).unwrap();
        for m in legal_moves(&p, &rules).unwrap() {
            let q = apply_move(&p, &m, &rules).unwrap();
            prop_assert!(q.total() < p.total());
            rules.validate(&q).unwrap();
        }
    }

    #[test]
    fn nim_sum_ignores_heap_order(mut h in heaps(6, 40)) {
        let a = nim_sum(&Position::new(h.clone()).unwrap());
        h.reverse();
        prop_assert_eq!(a, nim_sum(&Position::new(h).unwrap()));
    }

    #[test]
    fn grundy_matches_nim_sum(h in heaps(3, 12)) {
        let p = Position::new(h).unwrap();
        let mut solver = GrundySolver::new(GameRules::nim());
        prop_assert_eq!(solver.grundy(&p).unwrap(), nim_sum(&p));
    }

    #[test]
    fn zero_nimber_is_a_loss(h in heaps(3, 7), rules in rules()) {
        let p = Position::new(h).unwrap();
        let g = GrundySolver::new(rules.clone()).grundy(&p).unwrap();
        let o = WinLossSolver::new(rules).outcome(&p).unwrap();
        prop_assert_eq!(g.is_zero(), o == Outcome::Loss);
    }

    #[test]
    fn winning_moves_are_exactly_the_zeroing_moves(h in heaps(4, 15)) {
        let p = Position::new(h).unwrap();
        let nim = GameRules::nim();
        let brute: Vec<_> = legal_moves(&p, &nim)
            .unwrap()
            .into_iter()
            .filter(|m| nim_sum(&apply_move(&p, m, &nim).unwrap()).is_zero())
            .collect();
        let mut fast = winning_moves(&p);
        let mut brute = brute;
        fast.sort();
        brute.sort();
        prop_assert_eq!(fast, brute);
    }

    #[test]
    fn local_difference_equals_global(h in heaps(6, 31), changes in prop::collection::vec((0usize..6, 0u32..32), 0..=2)) {
        let p1 = Position::new(h.clone()).unwrap();
        let mut h2 = h;
        for (i, v) in changes {
            let i = i % h2.len();
            h2[i] = v;
        }
        let p2 = Position::new(h2).unwrap();
        prop_assert_eq!(nimber_diff(&p1, &p2, 2).unwrap(), nim_sum(&p1) ^ nim_sum(&p2));
    }

    #[test]
    fn position_text_round_trips(h in heaps(8, 1000)) {
        let p = Position::new(h).unwrap();
        prop_assert_eq!(p.to_string().parse::<Position>().unwrap(), p);
    }
}
