use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nimcore::agents::{heuristic_baseline_circuit, Agent, AgentSpec, FrameHistory, RolloutBudget};
use nimcore::circuit::{
    build_move_validator_circuit, build_nimber_diff_circuit, threshold_at_least, Circuit, NimberDiffCircuit,
    PositionEncoding,
};
use nimcore::harness::{play_match, replay, run_experiment, verify_suite, ExperimentConfig, Scale};
use nimcore::models::{compile_to_ac0, ThresholdNetwork};
use nimcore::nimber::{diff_mask, nim_sum, BitWidth};
use nimcore::{Error, GameMove, GameRules, Position, Result};

#[derive(Parser)]
#[command(name = "nimcore", version, about = "Impartial games, AC0 circuits and nimber-preserving agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one seeded match and print the transcript.
    Play {
        #[arg(long, default_value = "nim")]
        rules: String,
        #[arg(long)]
        start: Position,
        /// Agent moving first (oracle, random, multiframe, singleframe:<file>, mirror71:<k>, mirror72:<k>:<p1|p2>, or script).
        #[arg(long)]
        first: String,
        #[arg(long)]
        second: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated moves (`heap:count`) played in turn by any `script` seat.
        #[arg(long, value_delimiter = ',')]
        moves: Vec<GameMove>,
        /// Write the match record here as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a seeded experiment described by a JSON config.
    Tournament {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compile a threshold-network description to the circuit text format.
    CompileModel {
        model: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a circuit file against a reference function.
    VerifyCircuit {
        circuit: PathBuf,
        #[arg(long, value_enum)]
        against: Reference,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: u32,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Random pairs to test when the input space is too large to enumerate.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Emit one of the built-in circuits in the text format.
    BuildCircuit {
        #[arg(value_enum)]
        kind: BuiltIn,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        l: u32,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Threshold for `threshold`.
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the self-check suite.
    Verify {
        #[arg(long, default_value = "desk")]
        scale: Scale,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Reference {
    NimberDiff,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltIn {
    NimberDiff,
    Validator,
    Threshold,
    Heuristic,
}

/// Replays a fixed move list, one move per turn.
struct Scripted {
    moves: Vec<GameMove>,
    next: Mutex<usize>,
}

impl Agent for Scripted {
    fn id(&self) -> String {
        "script".into()
    }

    fn choose(&self, _: &GameRules, _: &FrameHistory, _: &mut dyn RngCore) -> Result<GameMove> {
        let mut next = self.next.lock().expect("script cursor");
        let m = self.moves.get(*next).copied().ok_or_else(|| Error::Agent("script ran out of moves".into()))?;
        *next += 1;
        Ok(m)
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn play(
    rules: &str,
    start: &Position,
    names: [&str; 2],
    seed: u64,
    moves: Vec<GameMove>,
    json: Option<&Path>,
) -> Result<()> {
    let rules: GameRules = rules.parse()?;
    let script = Scripted { moves, next: Mutex::new(0) };
    let built: Vec<Option<Box<dyn Agent>>> =
        names
            .iter()
            .map(|&n| {
                if n == "script" {
                    Ok(None)
                } else {
                    n.parse::<AgentSpec>()?.build(RolloutBudget::default()).map(Some)
                }
            })
            .collect::<Result<_>>()?;
    let agents: Vec<&dyn Agent> = built.iter().map(|a| a.as_deref().unwrap_or(&script)).collect();
    let record = play_match(&rules, start, [agents[0], agents[1]], seed)?;
    replay(&record)?;
    let mut p = record.start.clone();
    println!("start {p} (nimber {})", record.moves.first().map_or(0, |m| m.nimber_before));
    for (ply, m) in record.moves.iter().enumerate() {
        p = nimcore::game::apply_move(&p, &m.mv, &rules)?;
        let mv = m.mv.to_string();
        println!("{:>3}. {} plays {mv:<6} -> {p} (nimber {})", ply + 1, record.agents[m.player], m.nimber_after);
    }
    if let Some(f) = &record.forfeit {
        println!("{} forfeits: {}", record.agents[f.player], f.reason);
    }
    println!("winner: {} ({})", record.agents[record.winner], if record.winner == 0 { "first" } else { "second" });
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&record).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn tournament(config: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_json(&std::fs::read_to_string(config)?)?;
    let out = run_experiment(&cfg)?;
    print!("{}", out.csv()?);
    Ok(())
}

fn compile_model(model: &Path, output: Option<&Path>) -> Result<()> {
    let net = ThresholdNetwork::from_json(&std::fs::read_to_string(model)?)?;
    let circuit = compile_to_ac0(&net)?;
    let m = circuit.metrics();
    eprintln!("depth {}, size {}, max fan-in {}", m.depth, m.size, m.fan_in_max);
    write_or_print(output, &circuit.to_text())
}

fn verify_circuit(path: &Path, n: usize, l: u32, k: usize, samples: usize, seed: u64) -> Result<bool> {
    let circuit = Circuit::from_text(&std::fs::read_to_string(path)?)?;
    let width = BitWidth::new(l)?;
    let reference = build_nimber_diff_circuit(n, width, k)?;
    let expected_arity = reference.circuit().input_arity();
    if circuit.input_arity() != expected_arity || circuit.outputs().len() != l as usize + 1 {
        println!(
            "FAIL shape: {} inputs and {} outputs, expected {expected_arity} and {}",
            circuit.input_arity(),
            circuit.outputs().len(),
            l + 1
        );
        return Ok(false);
    }
    let oracle = |p1: &Position, p2: &Position| -> Result<(u32, bool)> {
        Ok(if diff_mask(p1, p2)?.len() <= k { ((nim_sum(p1) ^ nim_sum(p2)).value(), true) } else { (0, false) })
    };
    let top = width.capacity() - 1;
    let exhaustive = (expected_arity as u32) <= 20;
    let pairs: Box<dyn Iterator<Item = (Position, Position)>> = if exhaustive {
        Box::new((0u64..1 << expected_arity).map(move |bits| {
            let word =
                |j: usize| (0..l as usize).fold(0, |acc, b| acc << 1 | (bits >> (j * l as usize + b) & 1)) as u32;
            let p = |f: usize| Position::new((0..n).map(|i| word(f * n + i)).collect()).expect("non-empty");
            (p(0), p(1))
        }))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Box::new((0..samples).map(move |_| {
            let p1: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=top) as u32).collect();
            let mut p2 = p1.clone();
            for _ in 0..rng.gen_range(0..=k + 1) {
                let i = rng.gen_range(0..n);
                p2[i] = rng.gen_range(0..=top) as u32;
            }
            (Position::new(p1).expect("non-empty"), Position::new(p2).expect("non-empty"))
        }))
    };
    let mut checked = 0usize;
    for (p1, p2) in pairs {
        let got = NimberDiffCircuit::decode(&circuit.evaluate(&reference.encode(&p1, &p2)?)?);
        let want = oracle(&p1, &p2)?;
        if (got.0.value(), got.1) != want {
            println!("FAIL at {p1} vs {p2}: circuit gives {:?}, expected {want:?}", (got.0.value(), got.1));
            return Ok(false);
        }
        checked += 1;
    }
    let m = circuit.metrics();
    let how = if exhaustive { "all" } else { "random" };
    println!("PASS {checked} {how} pairs (depth {}, size {}, max fan-in {})", m.depth, m.size, m.fan_in_max);
    Ok(true)
}

fn build_circuit(kind: BuiltIn, n: usize, l: u32, k: usize, t: usize, output: Option<&Path>) -> Result<()> {
    let width = BitWidth::new(l)?;
    let circuit = match kind {
        BuiltIn::NimberDiff => build_nimber_diff_circuit(n, width, k)?.into_circuit(),
        BuiltIn::Validator => build_move_validator_circuit(PositionEncoding::three_frame(n, width)?, k)?.into_circuit(),
        BuiltIn::Threshold => threshold_at_least(n, t)?,
        BuiltIn::Heuristic => heuristic_baseline_circuit(n, width)?,
    };
    let m = circuit.metrics();
    eprintln!("depth {}, size {}, max fan-in {}", m.depth, m.size, m.fan_in_max);
    write_or_print(output, &circuit.to_text())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Play { rules, start, first, second, seed, moves, json } => {
            play(&rules, &start, [&first, &second], seed, moves, json.as_deref())?
        }
        Command::Tournament { config } => tournament(&config)?,
        Command::CompileModel { model, output } => compile_model(&model, output.as_deref())?,
        Command::VerifyCircuit { circuit, against: Reference::NimberDiff, n, l, k, samples, seed } => {
            return verify_circuit(&circuit, n, l, k, samples, seed);
        }
        Command::BuildCircuit { kind, n, l, k, t, output } => build_circuit(kind, n, l, k, t, output.as_deref())?,
        Command::Verify { scale } => {
            let report = verify_suite(scale);
            println!("{report}");
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
