//! Learning-curve experiments: seeded trials of train-then-test, averaged
//! per evaluation point and written out as CSV.

use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::control_rules::{rule_solve, CollectError, RuleLearner};
use crate::eight_puzzle::{self, blank_first, reachable_boards, Board, EightPuzzle, IntegratedTeacher, TeacherError};
use crate::framework::{Oracle, OracleError};
use crate::integration::{generate_problem, Integration};
use crate::macro_table::{macro_solve, serial_parse_one, MacroTable, SerialParseError, TableCorrupt};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentDomain {
    Integration,
    EightPuzzle,
}

impl FromStr for ExperimentDomain {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "integration" => Ok(ExperimentDomain::Integration),
            "eightpuzzle" => Ok(ExperimentDomain::EightPuzzle),
            _ => Err(ConfigError::UnknownDomain(s.to_owned())),
        }
    }
}

impl fmt::Display for ExperimentDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentDomain::Integration => "integration",
            ExperimentDomain::EightPuzzle => "eightpuzzle",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown domain {0:?} (expected integration or eightpuzzle)")]
    UnknownDomain(String),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("eval_every ({eval_every}) exceeds train_max ({train_max})")]
    EvalAfterEnd { eval_every: usize, train_max: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub domain: ExperimentDomain,
    pub trials: usize,
    pub train_max: usize,
    pub eval_every: usize,
    pub test_set_size: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn defaults(domain: ExperimentDomain) -> ExperimentConfig {
        let (train_max, eval_every) = match domain {
            ExperimentDomain::Integration => (30, 1),
            ExperimentDomain::EightPuzzle => (40, 2),
        };
        ExperimentConfig {
            domain,
            trials: 50,
            train_max,
            eval_every,
            test_set_size: 100,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (v, name) in [
            (self.trials, "trials"),
            (self.train_max, "train_max"),
            (self.eval_every, "eval_every"),
            (self.test_set_size, "test_set_size"),
        ] {
            if v == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if self.eval_every > self.train_max {
            return Err(ConfigError::EvalAfterEnd {
                eval_every: self.eval_every,
                train_max: self.train_max,
            });
        }
        Ok(())
    }

    /// Training-set sizes at which the learner is tested.
    pub fn eval_points(&self) -> Vec<usize> {
        (1..=self.train_max / self.eval_every).map(|k| k * self.eval_every).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub num_examples: usize,
    pub mean_accuracy: f64,
    pub stddev: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialCurve {
    pub seed: u64,
    /// Accuracy at each eval point.
    pub accuracies: Vec<f64>,
    /// Filled macro-table cells after each training example (puzzle only).
    pub fill_counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveRun {
    pub points: Vec<CurvePoint>,
    pub trials: Vec<TrialCurve>,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Collect(#[from] CollectError),
    #[error(transparent)]
    SerialParse(#[from] SerialParseError),
    #[error(transparent)]
    Table(#[from] TableCorrupt),
    #[error(transparent)]
    Teacher(#[from] TeacherError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Seed of trial `i`, split off the master seed.
pub fn trial_seed(master: u64, i: usize) -> u64 {
    master.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x7E57_7E57_7E57_7E57)
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run_curve(cfg: &ExperimentConfig) -> Result<CurveRun, HarnessError> {
    cfg.validate()?;
    info!("{} curve: {} trials of {} examples", cfg.domain, cfg.trials, cfg.train_max);
    let seeds: Vec<u64> = (0..cfg.trials).map(|i| trial_seed(cfg.seed, i)).collect();
    let trials: Vec<TrialCurve> = match cfg.domain {
        ExperimentDomain::Integration => seeds
            .par_iter()
            .map(|&s| integration_trial(cfg, s))
            .collect::<Result<_, _>>()?,
        ExperimentDomain::EightPuzzle => {
            let reference = eight_puzzle::exhaustive_table(blank_first(), &reachable_boards())?;
            seeds
                .par_iter()
                .map(|&s| puzzle_trial(cfg, s, &reference))
                .collect::<Result<_, _>>()?
        }
    };
    let points = cfg
        .eval_points()
        .into_iter()
        .enumerate()
        .map(|(k, num_examples)| {
            let accs: Vec<f64> = trials.iter().map(|t| t.accuracies[k]).collect();
            let (mean_accuracy, stddev) = mean_stddev(&accs);
            CurvePoint {
                num_examples,
                mean_accuracy,
                stddev,
            }
        })
        .collect();
    Ok(CurveRun { points, trials })
}

fn integration_trial(cfg: &ExperimentConfig, seed: u64) -> Result<TrialCurve, HarnessError> {
    let d = Integration::shared();
    let mut oracle = Oracle::new(seed, generate_problem, |p: &_| d.teacher_solve(p));
    let mut tests = test_rng(seed);
    let mut learner = RuleLearner::new(crate::framework::Domain::operator_count(d));
    let mut accuracies = Vec::new();
    for t in 1..=cfg.train_max {
        let ex = oracle.solved_problem(d)?;
        learner.observe(d, &ex)?;
        if t % cfg.eval_every == 0 {
            let correct = (0..cfg.test_set_size)
                .filter(|_| {
                    let p = generate_problem(&mut tests);
                    rule_solve(learner.rules(), d, &p) == d.teacher_solve(&p)
                })
                .count();
            accuracies.push(correct as f64 / cfg.test_set_size as f64);
        }
    }
    debug!("integration trial {seed:#x}: {accuracies:?}");
    Ok(TrialCurve {
        seed,
        accuracies,
        fill_counts: Vec::new(),
    })
}

/// Training solutions come from the integrated teacher and its growing
/// table; test problems are scored against the complete table, which gives
/// the same solutions that teacher would.
fn puzzle_trial(cfg: &ExperimentConfig, seed: u64, reference: &MacroTable) -> Result<TrialCurve, HarnessError> {
    let mut teacher = IntegratedTeacher::new(blank_first());
    let mut oracle = Oracle::new(seed, |r: &mut ChaCha8Rng| Board::random_solvable(r), |b: &Board| {
        teacher.solve(b).expect("solvable boards always have subgoal macros")
    });
    let mut tests = test_rng(seed);
    let mut learned = eight_puzzle::empty_table(blank_first());
    let mut accuracies = Vec::new();
    let mut fill_counts = Vec::new();
    for t in 1..=cfg.train_max {
        let ex = oracle.solved_problem(&EightPuzzle)?;
        serial_parse_one(&mut learned, &EightPuzzle, &ex.problem, &ex.solution)?;
        fill_counts.push(learned.filled_count());
        if t % cfg.eval_every == 0 {
            let mut correct = 0;
            for _ in 0..cfg.test_set_size {
                let b = Board::random_solvable(&mut tests);
                if macro_solve(&learned, &EightPuzzle, &b)? == macro_solve(reference, &EightPuzzle, &b)? {
                    correct += 1;
                }
            }
            accuracies.push(correct as f64 / cfg.test_set_size as f64);
        }
    }
    debug!("puzzle trial {seed:#x}: {accuracies:?}");
    Ok(TrialCurve {
        seed,
        accuracies,
        fill_counts,
    })
}

pub const CSV_HEADER: &str = "num_examples,mean_accuracy,stddev";

pub fn write_csv<W: Write>(points: &[CurvePoint], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        writeln!(out, "{},{},{}", p.num_examples, p.mean_accuracy, p.stddev)?;
    }
    Ok(())
}

pub fn emit_csv(points: &[CurvePoint], path: &Path) -> io::Result<()> {
    let mut buf = Vec::new();
    write_csv(points, &mut buf)?;
    std::fs::write(path, buf)
}
