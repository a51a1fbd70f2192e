//! Self-check of every module against brute-force oracles.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use itertools::{iproduct, Itertools};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::adversary::{exhaustive_adversary, AdversaryOptions, Seat};
use super::experiment::{run_experiment, ExperimentConfig};
use super::matches::replay;
use crate::agents::{
    preserving_reply, Agent, Mirror71Agent, Mirror72Agent, MirrorRole, MultiframeAgent, RolloutBudget,
};
use crate::circuit::{build_move_validator_circuit, build_nimber_diff_circuit, CandidateLayout, PositionEncoding};
use crate::error::{Error, Result};
use crate::game::{
    apply_move, disjunctive_sum, legal_moves, GameRules, GrundySolver, Heap, Nimber, Outcome, Position, WinLossSolver,
};
use crate::models::{compile_to_ac0, eval_model, random_network, ModelInput, ModelKind, NetworkShape};
use crate::nimber::{diff_mask, BitWidth};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Extended,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "extended" => Ok(Scale::Extended),
            other => Err(Error::Config(format!("scale must be desk or extended, got {other:?}"))),
        }
    }
}

/// Reference functions the checks compare against. Swapping one for a
/// broken version must make the suite fail.
#[derive(Clone, Copy, Debug)]
pub struct Oracles {
    pub nim_sum: fn(&Position) -> Nimber,
}

impl Default for Oracles {
    fn default() -> Self {
        Oracles { nim_sum: crate::nimber::nim_sum }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub scale: Scale,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{mark}  {:<28} {} ({:.2}s)", c.name, c.detail, c.seconds)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

struct Sizes {
    grundy_heaps: usize,
    grundy_size: Heap,
    diff_ks: Vec<usize>,
    diff_samples: usize,
    validator_samples: usize,
    models_per_kind: usize,
    mastery_size: Heap,
    mirror_k: usize,
}

impl Sizes {
    fn for_scale(scale: Scale) -> Self {
        match scale {
            Scale::Desk => Sizes {
                grundy_heaps: 4,
                grundy_size: 8,
                diff_ks: vec![0, 1, 2],
                diff_samples: 200,
                validator_samples: 640,
                models_per_kind: 70,
                mastery_size: 6,
                mirror_k: 2,
            },
            Scale::Extended => Sizes {
                grundy_heaps: 4,
                grundy_size: 10,
                diff_ks: vec![0, 1, 2, 3],
                diff_samples: 1000,
                validator_samples: 2500,
                models_per_kind: 200,
                mastery_size: 8,
                mirror_k: 4,
            },
        }
    }
}

type Check = std::result::Result<String, String>;
type CheckFn<'a> = Box<dyn Fn() -> Check + 'a>;

/// Every position with 1..=`heaps` heaps of at most `size` objects.
pub fn all_positions(heaps: usize, size: Heap) -> impl Iterator<Item = Position> {
    (1..=heaps).flat_map(move |n| {
        (0..n).map(|_| 0..=size).multi_cartesian_product().map(|h| Position::new(h).expect("non-empty"))
    })
}

fn fail_on<T: fmt::Display>(what: &str, at: T) -> Check {
    Err(format!("{what} at {at}"))
}

fn check_worked_example(o: &Oracles) -> Check {
    let p: Position = "3,5,7".parse().map_err(|e: Error| e.to_string())?;
    let g = GrundySolver::new(GameRules::nim()).grundy(&p).map_err(|e| e.to_string())?;
    match ((o.nim_sum)(&p), g) {
        (Nimber(1), Nimber(1)) => Ok("nim sum and nimber of 3,5,7 are both 1".into()),
        (s, g) => Err(format!("nim sum {s}, nimber {g}")),
    }
}

fn check_grundy(o: &Oracles, sz: &Sizes) -> Check {
    let mut grundy = GrundySolver::new(GameRules::nim());
    let mut count = 0;
    for p in all_positions(sz.grundy_heaps, sz.grundy_size) {
        if grundy.grundy(&p).map_err(|e| e.to_string())? != (o.nim_sum)(&p) {
            return fail_on("nimber differs from nim sum", p);
        }
        count += 1;
    }
    Ok(format!("{count} positions"))
}

fn check_win_loss(o: &Oracles, sz: &Sizes) -> Check {
    let mut solver = WinLossSolver::new(GameRules::nim());
    let mut count = 0;
    for p in all_positions(sz.grundy_heaps, sz.grundy_size) {
        let win = solver.outcome(&p).map_err(|e| e.to_string())? == Outcome::Win;
        if win == (o.nim_sum)(&p).is_zero() {
            return fail_on("win/loss disagrees with the nim sum", p);
        }
        count += 1;
    }
    Ok(format!("{count} positions"))
}

fn check_sum_rule() -> Check {
    let nim = GameRules::nim();
    let mut solver = GrundySolver::new(nim.clone());
    let parts: Vec<Position> = all_positions(2, 6).collect();
    for p in &parts {
        for q in &parts {
            let sum = disjunctive_sum(&nim, p, &nim, q).map_err(|e| e.to_string())?;
            let g = |s: &mut GrundySolver, x: &Position| s.grundy(x).map_err(|e| e.to_string());
            if g(&mut solver, &sum)? != g(&mut solver, p)? ^ g(&mut solver, q)? {
                return fail_on("sum rule", format!("{p} + {q}"));
            }
        }
    }
    Ok(format!("{} pairs", parts.len() * parts.len()))
}

fn check_control(o: &Oracles) -> Check {
    let nim = GameRules::nim();
    let mut count = 0;
    for p in all_positions(3, 6) {
        let children: Vec<Nimber> = legal_moves(&p, &nim)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|m| apply_move(&p, m, &nim).map(|c| (o.nim_sum)(&c)))
            .collect::<Result<_>>()
            .map_err(|e| e.to_string())?;
        let ok = if (o.nim_sum)(&p).is_zero() {
            children.iter().all(|g| !g.is_zero())
        } else {
            children.iter().any(|g| g.is_zero())
        };
        if !ok {
            return fail_on("winning strategy control", p);
        }
        count += 1;
    }
    Ok(format!("{count} positions"))
}

fn random_position(rng: &mut ChaCha8Rng, n: usize, width: BitWidth) -> Position {
    let top = (width.capacity() - 1) as Heap;
    Position::new((0..n).map(|_| rng.gen_range(0..=top)).collect()).expect("non-empty")
}

/// `base` with `changes` distinct heaps redrawn to different values.
fn perturb(rng: &mut ChaCha8Rng, base: &Position, changes: usize, width: BitWidth) -> Position {
    let top = (width.capacity() - 1) as Heap;
    let mut heaps = base.heaps().to_vec();
    let n = heaps.len();
    for i in rand::seq::index::sample(rng, n, changes.min(n)) {
        if top == 0 {
            break;
        }
        let old = heaps[i];
        while heaps[i] == old {
            heaps[i] = rng.gen_range(0..=top);
        }
    }
    Position::new(heaps).expect("non-empty")
}

fn check_nimber_diff(o: &Oracles, sz: &Sizes, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count = 0;
    for (&n, l, &k) in iproduct!(&[1usize, 2, 3, 5, 8], 1..=4u32, &sz.diff_ks) {
        let width = BitWidth::new(l).map_err(|e| e.to_string())?;
        let c = build_nimber_diff_circuit(n, width, k).map_err(|e| e.to_string())?;
        for _ in 0..sz.diff_samples {
            let p1 = random_position(&mut rng, n, width);
            let changes = rng.gen_range(0..=(k + 1).min(n));
            let p2 = perturb(&mut rng, &p1, changes, width);
            let changed = diff_mask(&p1, &p2).map_err(|e| e.to_string())?.len();
            let expected =
                if changed <= k { ((o.nim_sum)(&p1) ^ (o.nim_sum)(&p2), true) } else { (Nimber::ZERO, false) };
            if c.evaluate(&p1, &p2).map_err(|e| e.to_string())? != expected {
                return fail_on("nimber-diff circuit", format!("{p1} vs {p2} (k = {k})"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} pairs, k in {:?}", sz.diff_ks))
}

fn check_diff_depth() -> Check {
    let width = BitWidth::new(3).map_err(|e| e.to_string())?;
    let depths: Vec<usize> = [2usize, 4, 8, 16]
        .iter()
        .map(|&n| build_nimber_diff_circuit(n, width, 2).map(|c| c.circuit().metrics().depth))
        .collect::<Result<_>>()
        .map_err(|e| e.to_string())?;
    if depths.windows(2).all(|w| w[0] == w[1]) {
        Ok(format!("depth {} for n in 2,4,8,16", depths[0]))
    } else {
        Err(format!("depths {depths:?}"))
    }
}

fn check_validator(o: &Oracles, sz: &Sizes, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 2;
    let mut count = 0;
    for (&n, l) in iproduct!(&[1usize, 2, 4, 6], 1..=4u32) {
        let width = BitWidth::new(l).map_err(|e| e.to_string())?;
        let enc = PositionEncoding::three_frame(n, width).map_err(|e| e.to_string())?;
        let v = build_move_validator_circuit(enc, k).map_err(|e| e.to_string())?;
        let layout = CandidateLayout { heaps: n, width };
        for _ in 0..sz.validator_samples {
            let p1 = random_position(&mut rng, n, width);
            let changes = rng.gen_range(0..=(k + 1).min(n));
            let q1 = perturb(&mut rng, &p1, changes, width);
            let cur = random_position(&mut rng, n, width);
            let scores = v.scores(&p1, &q1, &cur).map_err(|e| e.to_string())?;
            let within = diff_mask(&p1, &q1).map_err(|e| e.to_string())?.len() <= k;
            let target = (o.nim_sum)(&p1) ^ (o.nim_sum)(&q1);
            for (slot, &score) in scores.iter().enumerate() {
                let m = layout.candidate(slot);
                let expected = m.new_count < cur.heaps()[m.heap_index] && within && {
                    let mut after = cur.heaps().to_vec();
                    after[m.heap_index] = m.new_count;
                    let after = Position::new(after).expect("non-empty");
                    (o.nim_sum)(&cur) ^ (o.nim_sum)(&after) == target
                };
                if score != expected {
                    return fail_on("move validator", format!("({p1}, {q1}, {cur}) slot {m}"));
                }
            }
            count += 1;
        }
    }
    Ok(format!("{count} three-frame instances"))
}

fn check_compiler(sz: &Sizes, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count = 0;
    for kind in [ModelKind::Nn, ModelKind::Rnn, ModelKind::Ltst] {
        for _ in 0..sz.models_per_kind {
            let net = random_network(&mut rng, kind, &NetworkShape::default());
            let c = compile_to_ac0(&net).map_err(|e| e.to_string())?;
            for _ in 0..100 {
                let bits: Vec<bool> = (0..net.flat_input_len()).map(|_| rng.gen()).collect();
                let input = ModelInput::from_flat(&net, &bits).map_err(|e| e.to_string())?;
                let expected = eval_model(&net, &input).map_err(|e| e.to_string())?;
                if c.evaluate(&bits).map_err(|e| e.to_string())? != expected {
                    return Err(format!("compiled {kind:?} model disagrees:\n{}", net.to_json()));
                }
            }
            count += 1;
        }
    }
    Ok(format!("{count} models"))
}

fn check_preserving_reply(o: &Oracles) -> Check {
    let nim = GameRules::nim();
    let mut count = 0;
    for p in all_positions(3, 6).filter(|p| (o.nim_sum)(p).is_zero()) {
        for m in legal_moves(&p, &nim).map_err(|e| e.to_string())? {
            let q = apply_move(&p, &m, &nim).map_err(|e| e.to_string())?;
            if q.is_terminal() {
                continue;
            }
            let reply = preserving_reply(&p, &q).map_err(|e| e.to_string())?;
            let restored = reply
                .map(|r| apply_move(&q, &r, &nim).map(|x| (o.nim_sum)(&x).is_zero()))
                .transpose()
                .map_err(|e| e.to_string())?;
            if restored != Some(true) {
                return fail_on("no zero-restoring reply", format!("{p} -> {q}"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} opponent moves"))
}

fn check_strong_mastery(o: &Oracles, sz: &Sizes) -> Check {
    let nim = GameRules::nim();
    let agent = MultiframeAgent::new(RolloutBudget::default());
    let (mut count, mut nodes) = (0, 0);
    for p in all_positions(3, sz.mastery_size).filter(|p| !p.is_terminal() && !(o.nim_sum)(p).is_zero()) {
        let r = exhaustive_adversary(&nim, &p, &agent, Seat::First, AdversaryOptions::default())
            .map_err(|e| e.to_string())?;
        if !(r.complete && r.agent_always_wins) {
            return Err(format!("multiframe loses from {p}: {:?}", r.counterexample));
        }
        count += 1;
        nodes += r.nodes;
    }
    Ok(format!("{count} winning starts, {nodes} adversary nodes, no losing line"))
}

fn check_mirrors(sz: &Sizes) -> Check {
    let nim = GameRules::nim();
    let all_lines = AdversaryOptions { explore_all: true, ..AdversaryOptions::default() };
    for k in 1..=sz.mirror_k {
        let cases: [(Box<dyn Agent>, Position, Seat); 4] = [
            (Box::new(Mirror71Agent::new(k)), Mirror71Agent::initial_position(k), Seat::First),
            (Box::new(Mirror71Agent::new(k)), Mirror71Agent::initial_position(k), Seat::Second),
            (Box::new(Mirror72Agent::new(k, MirrorRole::P1)), Mirror72Agent::initial_position(k), Seat::First),
            (Box::new(Mirror72Agent::new(k, MirrorRole::P2)), Mirror72Agent::initial_position(k), Seat::Second),
        ];
        for (agent, start, seat) in cases {
            let r = exhaustive_adversary(&nim, &start, agent.as_ref(), seat, all_lines).map_err(|e| e.to_string())?;
            let ok = r.complete && r.missed_wins == 0 && (seat == Seat::Second || r.agent_always_wins);
            if !ok {
                return Err(format!("{} seated {seat:?} fails: {r:?}", agent.id()));
            }
        }
    }
    Ok(format!("both boards, both seats, k up to {}", sz.mirror_k))
}

fn check_harness(seed: u64) -> Check {
    let json = format!(
        r#"{{"heap_counts":[3,4],"max_heap":7,"agents":["multiframe","singleframe:heuristic"],"opponent":"random","games_per_cell":8,"seed":{seed}}}"#
    );
    let cfg = ExperimentConfig::from_json(&json).map_err(|e| e.to_string())?;
    let a = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let b = run_experiment(&cfg).map_err(|e| e.to_string())?;
    if a.csv().map_err(|e| e.to_string())? != b.csv().map_err(|e| e.to_string())? {
        return Err("two runs of one config differ".into());
    }
    for m in &a.matches {
        replay(m).map_err(|e| e.to_string())?;
    }
    Ok(format!("{} matches replay, CSV repeats byte for byte", a.matches.len()))
}

pub fn verify_suite(scale: Scale) -> VerifyReport {
    verify_suite_with(scale, &Oracles::default())
}

pub fn verify_suite_with(scale: Scale, oracles: &Oracles) -> VerifyReport {
    let sz = Sizes::for_scale(scale);
    let seed = 0x5eed;
    let checks: Vec<(&str, CheckFn)> = vec![
        ("worked example", Box::new(|| check_worked_example(oracles))),
        ("nimber equals nim sum", Box::new(|| check_grundy(oracles, &sz))),
        ("win/loss oracle", Box::new(|| check_win_loss(oracles, &sz))),
        ("sum rule", Box::new(check_sum_rule)),
        ("winning strategy control", Box::new(|| check_control(oracles))),
        ("nimber-diff circuit", Box::new(|| check_nimber_diff(oracles, &sz, seed))),
        ("nimber-diff depth", Box::new(check_diff_depth)),
        ("move validator circuit", Box::new(|| check_validator(oracles, &sz, seed))),
        ("threshold compiler", Box::new(|| check_compiler(&sz, seed))),
        ("preserving reply", Box::new(|| check_preserving_reply(oracles))),
        ("strong mastery", Box::new(|| check_strong_mastery(oracles, &sz))),
        ("mirror strategies", Box::new(|| check_mirrors(&sz))),
        ("harness determinism", Box::new(|| check_harness(seed))),
    ];
    let checks = checks
        .into_iter()
        .map(|(name, run)| {
            let t = Instant::now();
            let outcome = run();
            let seconds = t.elapsed().as_secs_f64();
            let (passed, detail) = match outcome {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult { name: name.to_string(), passed, detail, seconds }
        })
        .collect();
    VerifyReport { scale, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_enumeration_counts() {
        assert_eq!(all_positions(2, 2).count(), 3 + 9);
        assert!(all_positions(1, 0).all(|p| p.is_terminal()));
    }

    #[test]
    fn scale_parsing() {
        assert_eq!("desk".parse::<Scale>().unwrap(), Scale::Desk);
        assert!("huge".parse::<Scale>().is_err());
    }

    #[test]
    fn perturb_changes_exactly_the_requested_heaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = BitWidth::new(3).unwrap();
        for changes in 0..=4 {
            let p = random_position(&mut rng, 4, w);
            let q = perturb(&mut rng, &p, changes, w);
            assert_eq!(diff_mask(&p, &q).unwrap().len(), changes);
        }
    }
}
