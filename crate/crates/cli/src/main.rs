use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use speedup_core::control_rules::{learn_rules, SampleCount};
use speedup_core::eight_puzzle::{
    self, blank_first, blank_last, exhaustive_table, ida_star_subgoal, moves_to_string, reachable_boards, Board,
    EightPuzzle, IntegratedTeacher,
};
use speedup_core::framework::{is_consistent, replay, sample_size, Domain, LearnParams, Oracle, Solution};
use speedup_core::grammar::msg;
use speedup_core::harness::{emit_csv, run_curve, write_csv, ExperimentConfig, ExperimentDomain};
use speedup_core::integration::{antiderivative_error, format_solution, generate_problem, Expr, Integration};
use speedup_core::macro_table::{check_serial_decomposability, macro_solve, serial_parse, verify_table};

#[derive(Parser)]
#[command(name = "speedup", version, about = "Learn control rules and macro tables from solved problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a learning-curve experiment and write CSV
    Curve(CurveArgs),
    /// Print the number of examples the sample bound asks for
    Bound {
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long)]
        dim: f64,
    },
    /// Build the complete Eight Puzzle macro table and verify it
    Table {
        #[arg(long)]
        build_exhaustive: bool,
        /// Also print the table grid
        #[arg(long)]
        dump: bool,
    },
    /// Run the property checks
    Verify {
        #[arg(long)]
        all: bool,
        /// Teacher draws for the integration checks
        #[arg(long, default_value_t = 1000)]
        draws: usize,
    },
    /// Print problems drawn from a domain with the teacher's solutions
    Sample {
        #[arg(long)]
        domain: ExperimentDomain,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    domain: ExperimentDomain,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    train_max: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    test_set_size: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV path; stdout when absent
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Curve(args) => curve(args),
        Command::Bound { epsilon, delta, dim } => sample_size(epsilon, delta, dim)
            .map(|m| println!("{m}"))
            .map_err(Into::into),
        Command::Table { build_exhaustive, dump } => table(build_exhaustive, dump),
        Command::Verify { all, draws } => verify(all, draws),
        Command::Sample { domain, count, seed } => sample(domain, count, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn curve(args: CurveArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::defaults(args.domain);
    cfg.seed = args.seed;
    cfg.trials = args.trials.unwrap_or(cfg.trials);
    cfg.train_max = args.train_max.unwrap_or(cfg.train_max);
    cfg.eval_every = args.eval_every.unwrap_or(cfg.eval_every);
    cfg.test_set_size = args.test_set_size.unwrap_or(cfg.test_set_size);
    let start = Instant::now();
    let run = run_curve(&cfg)?;
    info!("curve finished in {:.1?}", start.elapsed());
    match args.output {
        Some(path) => emit_csv(&run.points, &path).with_context(|| format!("writing {}", path.display()))?,
        None => write_csv(&run.points, std::io::stdout().lock())?,
    }
    Ok(())
}

fn table(build: bool, dump: bool) -> Result<()> {
    if !build {
        bail!("nothing to do; pass --build-exhaustive");
    }
    let start = Instant::now();
    let boards = reachable_boards();
    let t = exhaustive_table(blank_first(), &boards)?;
    if dump {
        print!("{}", t.dump(|op| EightPuzzle.operator_name(op)));
    }
    println!("filled cells: {}", t.filled_count());
    println!("nonempty macros: {}", t.nonempty_count());
    println!("longest macro: {}", t.longest_macro());
    match verify_table(&t, &EightPuzzle, &boards) {
        Ok(r) => println!(
            "verified {} cells over {} boards ({} macro applications) in {:.1?}",
            r.cells_checked,
            boards.len(),
            r.applications,
            start.elapsed()
        ),
        Err(v) => bail!("table violation: {v}"),
    }
    Ok(())
}

struct Checks {
    failed: usize,
}

impl Checks {
    fn check(&mut self, name: &str, ok: bool, detail: impl std::fmt::Display) {
        println!("{} {name}: {detail}", if ok { "ok  " } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

fn verify(all: bool, draws: usize) -> Result<()> {
    if !all {
        bail!("nothing to do; pass --all");
    }
    let mut c = Checks { failed: 0 };

    for (dim, want) in [(81.0, 585), (35.0, 266)] {
        let got = sample_size(0.1, 0.1, dim)?;
        c.check("sample bound", got == want, format!("dim {dim} -> {got}"));
    }

    let boards = reachable_boards();
    c.check("state space", boards.len() == eight_puzzle::SOLVABLE_STATES, boards.len());
    c.check(
        "parity test",
        boards.iter().all(Board::is_solvable),
        "every reachable board passes",
    );
    c.check(
        "decomposable, blank first",
        check_serial_decomposability(&EightPuzzle, &blank_first(), &boards).is_ok(),
        "no witness",
    );
    match check_serial_decomposability(&EightPuzzle, &blank_last(), &boards) {
        Ok(()) => c.check("not decomposable, blank last", false, "no witness found"),
        Err(w) => c.check("not decomposable, blank last", true, w),
    }

    let table = exhaustive_table(blank_first(), &boards)?;
    c.check("35 nonempty macros", table.nonempty_count() == 35, table.nonempty_count());
    match verify_table(&table, &EightPuzzle, &boards) {
        Ok(r) => c.check("table property and nonredundancy", true, format!("{} cells", r.cells_checked)),
        Err(v) => c.check("table property and nonredundancy", false, v),
    }

    let board_c: Board = "031245678".parse()?;
    let board_a = board_c.apply_moves("lu").context("undoing dr")?;
    let after = board_a.apply_moves("dr");
    c.check(
        "dr brings the blank home",
        after.map(|b| b.blank()) == Some(0),
        format!("{board_a} -> {}", after.map_or("-".into(), |b| b.to_string())),
    );
    let m = ida_star_subgoal(&board_c, &blank_first(), 1).map(|m| moves_to_string(&m));
    c.check("tile 1 subgoal", m.as_deref() == Some("rdlu"), format!("{m:?}"));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut consistent = true;
    for _ in 0..20 {
        let mut teacher = IntegratedTeacher::new(blank_first());
        let sample: Vec<_> = (0..30)
            .map(|_| {
                let b = Board::random_solvable(&mut rng);
                let solution = teacher.solve(&b)?;
                Ok(speedup_core::framework::Example { problem: b, solution })
            })
            .collect::<Result<_, eight_puzzle::TeacherError>>()?;
        let learned = serial_parse(&sample, &EightPuzzle, eight_puzzle::goal_features(), blank_first())?;
        consistent &= is_consistent(|p| macro_solve(&learned, &EightPuzzle, p).unwrap_or(Solution::Bottom), &sample);
    }
    c.check("serial parsing is consistent", consistent, "20 samples of 30");

    let d = Integration::shared();
    let g = speedup_core::control_rules::GrammarDomain::grammar(d);
    let probs = ["∫ ( sin x ) + ( x ↑ 2 ) d x", "∫ ( cos x ) + ( sin x ) d x"]
        .map(|p| g.symbols_from_str(p))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let form = msg(g, &probs)?;
    let text = form.display(g).to_string();
    c.check("most specific generalization", text == "∫ Trig + P-term d x", &text);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut solved, mut sound) = (0, 0);
    for _ in 0..draws {
        let p = generate_problem(&mut rng);
        if let Solution::Steps(steps) = d.teacher_solve(&p) {
            let last = replay(d, &p, &steps)?.pop().expect("trajectory");
            if d.is_goal(&last) {
                solved += 1;
            }
            let Expr::Integral(f) = &p else { continue };
            if [0.1, 0.5, 1.3]
                .iter()
                .all(|&x| antiderivative_error(&last, f, x).is_some_and(|e| e < 1e-6))
            {
                sound += 1;
            }
        }
    }
    c.check("teacher normalizes", solved == draws, format!("{solved}/{draws}"));
    c.check("answers differentiate back", sound == draws, format!("{sound}/{draws}"));

    let params = LearnParams::new(0.1, 0.1, 64, 200)?;
    let mut consistent = true;
    for seed in 0..20 {
        let mut oracle = Oracle::new(seed, generate_problem, |p: &_| d.teacher_solve(p));
        consistent &= learn_rules(d, &mut oracle, &params, SampleCount::Fixed(30)).is_ok();
    }
    c.check("rule learning is consistent", consistent, "20 samples of 30");

    if c.failed > 0 {
        bail!("{} check(s) failed", c.failed);
    }
    Ok(())
}

fn sample(domain: ExperimentDomain, count: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match domain {
        ExperimentDomain::Integration => {
            let d = Integration::shared();
            for _ in 0..count {
                let p = generate_problem(&mut rng);
                let s = d.teacher_solve(&p);
                let answer = match &s {
                    Solution::Steps(steps) => replay(d, &p, steps)?.pop().expect("trajectory").to_string(),
                    Solution::Bottom => "⊥".to_owned(),
                };
                println!("{p}\n  {}\n  = {answer}", format_solution(&s));
            }
        }
        ExperimentDomain::EightPuzzle => {
            let mut teacher = IntegratedTeacher::new(blank_first());
            for _ in 0..count {
                let b = Board::random_solvable(&mut rng);
                let s = teacher.solve(&b)?;
                let moves = s.steps().map_or("⊥".to_owned(), eight_puzzle::steps_to_string);
                println!("{b} {moves}");
            }
        }
    }
    Ok(())
}
