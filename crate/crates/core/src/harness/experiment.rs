use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adversary::mix;
use super::matches::{play_match, MatchRecord, NimberOracle, RNG_NAME};
use crate::agents::{Agent, AgentSpec, RolloutBudget};
use crate::error::{Error, Result};
use crate::game::{GameRules, Heap, Position};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "NIMCORE_THREADS";

/// Column order of the results CSV.
pub const CSV_COLUMNS: [&str; 8] =
    ["heap_count", "agent", "opponent", "games", "wins", "win_rate", "mean_plies", "preservation_failures"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartKind {
    /// Non-terminal starts with a non-zero nimber (the first mover can force a win).
    #[default]
    Winning,
    Any,
}

fn default_rules() -> String {
    "nim".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_rules")]
    pub rules: String,
    pub heap_counts: Vec<usize>,
    /// Start heaps are drawn uniformly from `0..=max_heap`.
    pub max_heap: Heap,
    #[serde(default)]
    pub starts: StartKind,
    /// Agents under test; each moves first in every game of its row.
    pub agents: Vec<String>,
    pub opponent: String,
    pub games_per_cell: usize,
    pub seed: u64,
    #[serde(default)]
    pub budget: RolloutBudget,
    #[serde(default)]
    pub output_csv: Option<PathBuf>,
    #[serde(default)]
    pub output_json: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.heap_counts.is_empty() || self.agents.is_empty() {
            return Err(Error::Config("heap_counts and agents must be non-empty".into()));
        }
        if self.heap_counts.contains(&0) {
            return Err(Error::Config("heap counts must be positive".into()));
        }
        if self.max_heap == 0 {
            return Err(Error::Config("max_heap must be positive".into()));
        }
        self.rules()?;
        for a in self.agents.iter().chain(std::iter::once(&self.opponent)) {
            a.parse::<AgentSpec>()?;
        }
        Ok(())
    }

    pub fn rules(&self) -> Result<GameRules> {
        self.rules.parse()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub heap_count: usize,
    pub agent: String,
    pub opponent: String,
    pub games: usize,
    pub wins: usize,
    pub win_rate: f64,
    pub mean_plies: f64,
    pub preservation_failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentMetadata {
    pub rng: &'static str,
    pub seed: u64,
    pub csv_columns: [&'static str; 8],
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutput {
    pub metadata: ExperimentMetadata,
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub matches: Vec<MatchRecord>,
}

impl ExperimentOutput {
    pub fn csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(|e| Error::Io(e.to_string()))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Deterministic start for game `game` of heap count `n`.
pub fn start_position(cfg: &ExperimentConfig, rules: &GameRules, n: usize, game: usize) -> Result<Position> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, [n as u64, game as u64]));
    let mut oracle = NimberOracle::new(rules);
    for _ in 0..10_000 {
        let p = Position::new((0..n).map(|_| rng.gen_range(0..=cfg.max_heap)).collect())?;
        if p.is_terminal() {
            continue;
        }
        if cfg.starts == StartKind::Any || oracle.nimber(&p)? != 0 {
            return Ok(p);
        }
    }
    Err(Error::Config(format!("no suitable start found for {n} heaps of at most {}", cfg.max_heap)))
}

/// Runs `f` on a pool sized by `NIMCORE_THREADS` (rayon's default when unset).
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be an integer, got {v:?}")))?,
        Err(_) => 0,
    };
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

fn summarize(n: usize, agent: &str, opponent: &str, matches: &[MatchRecord]) -> ResultRow {
    let games = matches.len();
    let wins = matches.iter().filter(|m| m.winner == 0).count();
    let plies: usize = matches.iter().map(MatchRecord::plies).sum();
    let ratio = |x: usize| if games == 0 { 0.0 } else { x as f64 / games as f64 };
    ResultRow {
        heap_count: n,
        agent: agent.to_string(),
        opponent: opponent.to_string(),
        games,
        wins,
        win_rate: ratio(wins),
        mean_plies: ratio(plies),
        preservation_failures: matches.iter().map(|m| m.preservation_failures(0)).sum(),
    }
}

/// Plays every (heap count, agent, game) cell and tabulates the rows in that
/// order regardless of which worker finished first. Outputs named in the
/// config are written; if a cell fails, the rows before it are still written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let rules = cfg.rules()?;
    let agents: Vec<(String, Box<dyn Agent>)> = cfg
        .agents
        .iter()
        .map(|s| Ok((s.clone(), s.parse::<AgentSpec>()?.build(cfg.budget)?)))
        .collect::<Result<_>>()?;
    let opponent = cfg.opponent.parse::<AgentSpec>()?.build(cfg.budget)?;

    let cells: Vec<(usize, usize)> =
        cfg.heap_counts.iter().flat_map(|&n| (0..agents.len()).map(move |a| (n, a))).collect();
    let tasks: Vec<(usize, usize, usize)> =
        cells.iter().flat_map(|&(n, a)| (0..cfg.games_per_cell).map(move |g| (n, a, g))).collect();
    let results: Vec<Result<MatchRecord>> = with_thread_pool(|| {
        tasks
            .par_iter()
            .map(|&(n, a, g)| {
                let start = start_position(cfg, &rules, n, g)?;
                // every agent in a row meets the same opponent stream
                let seed = mix(cfg.seed, [n as u64, g as u64, u64::MAX]);
                play_match(&rules, &start, [agents[a].1.as_ref(), opponent.as_ref()], seed)
            })
            .collect()
    })?;

    let mut rows = Vec::with_capacity(cells.len());
    let mut matches = Vec::with_capacity(results.len());
    let mut failure = None;
    let mut results = results.into_iter();
    for &(n, a) in &cells {
        let cell: Result<Vec<MatchRecord>> = results.by_ref().take(cfg.games_per_cell).collect();
        match cell {
            Ok(cell) if cell.is_empty() => {}
            Ok(cell) => {
                rows.push(summarize(n, &agents[a].0, &cfg.opponent, &cell));
                matches.extend(cell);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let output = ExperimentOutput {
        metadata: ExperimentMetadata { rng: RNG_NAME, seed: cfg.seed, csv_columns: CSV_COLUMNS },
        config: cfg.clone(),
        rows,
        matches,
    };
    write_outputs(cfg, &output)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(output),
    }
}

fn write_outputs(cfg: &ExperimentConfig, output: &ExperimentOutput) -> Result<()> {
    if let Some(path) = &cfg.output_csv {
        std::fs::write(path, output.csv()?)?;
    }
    if let Some(path) = &cfg.output_json {
        let json = serde_json::to_string_pretty(output).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, json)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(games: usize) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"heap_counts":[2,3],"max_heap":5,"agents":["oracle","random"],"opponent":"random","games_per_cell":{games},"seed":7}}"#
        ))
        .unwrap()
    }

    #[test]
    fn rows_are_ordered_and_oracle_wins() {
        let out = run_experiment(&config(6)).unwrap();
        let keys: Vec<(usize, &str)> = out.rows.iter().map(|r| (r.heap_count, r.agent.as_str())).collect();
        assert_eq!(keys, vec![(2, "oracle"), (2, "random"), (3, "oracle"), (3, "random")]);
        for r in out.rows.iter().filter(|r| r.agent == "oracle") {
            assert_eq!((r.games, r.wins, r.win_rate), (6, 6, 1.0));
            assert_eq!(r.preservation_failures, 0);
        }
        assert_eq!(out.matches.len(), 24);
    }

    #[test]
    fn csv_is_deterministic() {
        let a = run_experiment(&config(4)).unwrap().csv().unwrap();
        let b = run_experiment(&config(4)).unwrap().csv().unwrap();
        assert_eq!(a, b);
        assert!(
            a.starts_with("heap_count,agent,opponent,games,wins,win_rate,mean_plies,preservation_failures\n2,oracle,")
        );
        assert_eq!(a.lines().count(), 5);
    }

    #[test]
    fn zero_games_gives_empty_rows() {
        let out = run_experiment(&config(0)).unwrap();
        assert!(out.rows.is_empty() && out.matches.is_empty());
        assert_eq!(out.csv().unwrap().lines().count(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::from_json(
            r#"{"heap_counts":[],"max_heap":3,"agents":["oracle"],"opponent":"random","games_per_cell":1,"seed":1}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"heap_counts":[2],"max_heap":3,"agents":["oracle"],"opponent":"random","games_per_cell":1}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"heap_counts":[2],"max_heap":3,"agents":["wizard"],"opponent":"random","games_per_cell":1,"seed":1}"#
        )
        .is_err());
    }

    #[test]
    fn starts_are_winning() {
        let cfg = config(1);
        let nim = GameRules::nim();
        for g in 0..50 {
            let p = start_position(&cfg, &nim, 3, g).unwrap();
            assert!(crate::nimber::is_winning(&p));
        }
    }
}
