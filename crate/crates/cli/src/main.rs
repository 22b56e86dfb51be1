//! `cfsm`: command-line access to the analyses of communicating finite state machines.
//!
//! Exit codes: 0 the property holds, 1 it fails (a witness is printed),
//! 2 usage or input error, 3 a precondition on the input is violated.

mod report;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfsm::decide::{
    k_stable, k_synchronizable, normalize_trace, reach_contains, reach_representation, ring_synchronizable,
    strongly_k_stable, DecideError, Stats,
};
use cfsm::explore::{build_lts, ExploreError};
use cfsm::reduce::{builtins, fifo_to_system, fifo_to_system_merged, fifo_to_system_prime, tiling_to_fifo};
use cfsm::syntax::{parse_fifo, parse_system, parse_tiling, write_fifo, write_system};
use cfsm::trace::{causally_equivalent, exists_equiv_k_bounded};
use cfsm::verify::run_suite;
use cfsm::{BoundedLts, ExploreOptions, SemanticsKind, SyncVerdict, System, Trace};
use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{Report, Verdict};

#[derive(Parser)]
#[command(
    name = "cfsm",
    version,
    about = "Synchronizability and stability checks for communicating finite state machines"
)]
struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a property of a system.
    #[command(subcommand)]
    Check(Check),
    /// Explore the state space at a bound and summarize it.
    Explore {
        #[command(flatten)]
        sys: SystemArgs,
        /// Also list every trace with at most this many actions.
        #[arg(long)]
        depth: Option<usize>,
        /// Write the state space as Graphviz to this path.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Regular reachability set of a synchronizable ring, checked against exploration at `--k`.
    Reach(SystemArgs),
    /// Whether every configuration explored at `--k` drains to a stable one by receives.
    Drain(SystemArgs),
    /// Operations on a single trace.
    #[command(subcommand)]
    Trace(TraceCmd),
    /// Build the reduction constructions, printed in the text formats.
    #[command(subcommand)]
    Generate(Generate),
    /// The built-in example systems.
    #[command(subcommand)]
    Examples(Examples),
    /// Run the executable property suites.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Subcommand)]
enum Check {
    /// Bounded observations at `--k` equal the rendezvous ones.
    KSync {
        #[command(flatten)]
        sys: SystemArgs,
        /// Compare send words only, ignoring stable configurations.
        #[arg(long)]
        language_only: bool,
    },
    /// Full synchronizability of an oriented ring.
    RingSync(SystemArgs),
    /// Send-observable behaviour at `--k` and `--k`+1 is branching bisimilar.
    Stable(SystemArgs),
    /// No trace ever holds more than `--k` letters in a buffer.
    StrongStable(SystemArgs),
}

#[derive(Subcommand)]
enum TraceCmd {
    /// Execute a trace and print the reached configurations.
    Run(TraceArgs),
    /// Whether two traces are causally equivalent.
    Equiv {
        #[command(flatten)]
        args: TraceArgs,
        /// The trace to compare with.
        #[arg(long)]
        other: String,
    },
    /// Rewrite a trace of a synchronizable ring into a rendezvous prefix followed by sends.
    Normalize(TraceArgs),
    /// Find a causally equivalent trace that is `--k`-bounded.
    ExistsKbounded(TraceArgs),
}

#[derive(Subcommand)]
enum Generate {
    /// FIFO automaton from a tiling instance file.
    TilingFifo(InputFile),
    /// Three-peer system from a FIFO automaton file.
    FifoSystem(InputFile),
    /// Variant system that synchronizes on channel 1>2 and never receives `--letter`.
    FifoSystemPrime(LetterArgs),
    /// Variant with peers 2 and 3 merged, never receiving `--letter`.
    FifoSystemMerged(LetterArgs),
}

#[derive(Subcommand)]
enum Examples {
    /// Names, summaries and known verdicts.
    List,
    /// Print a built-in in its text format.
    Emit { name: String },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Confluence, encoding and normalization properties over the built-ins.
    Lemmas {
        #[arg(long, default_value_t = 1_000_000)]
        max_states: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Semantics {
    P2p,
    Mailbox,
    Bag,
}

impl From<Semantics> for SemanticsKind {
    fn from(s: Semantics) -> Self {
        match s {
            Semantics::P2p => SemanticsKind::P2pFifo,
            Semantics::Mailbox => SemanticsKind::MailboxFifo,
            Semantics::Bag => SemanticsKind::P2pBag,
        }
    }
}

#[derive(Args)]
struct SystemArgs {
    /// System description file.
    #[arg(long)]
    file: PathBuf,
    #[arg(long, value_enum, default_value = "p2p")]
    semantics: Semantics,
    /// Buffer bound.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Give up once this many configurations have been explored.
    #[arg(long, default_value_t = 1_000_000)]
    max_states: usize,
}

impl SystemArgs {
    fn load(&self) -> Result<System, Failure> {
        parse_system(&read(&self.file)?).map_err(|e| Failure::Input(format!("{}:{e}", self.file.display())))
    }

    fn sem(&self) -> SemanticsKind {
        self.semantics.into()
    }

    fn opts(&self) -> ExploreOptions {
        ExploreOptions { max_states: self.max_states, ..ExploreOptions::default() }
    }

    fn lts(&self, sys: &System, k: usize) -> Result<BoundedLts, Failure> {
        Ok(build_lts(sys, self.sem(), k, &self.opts())?)
    }
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    sys: SystemArgs,
    /// Actions such as `!a ?a !b`.
    #[arg(long)]
    trace: String,
}

#[derive(Args)]
struct InputFile {
    #[arg(long)]
    file: PathBuf,
}

#[derive(Args)]
struct LetterArgs {
    #[arg(long)]
    file: PathBuf,
    /// The distinguished letter.
    #[arg(long)]
    letter: String,
}

/// Why a command produced no report.
enum Failure {
    Input(String),
    Precondition(String),
}

impl From<ExploreError> for Failure {
    fn from(e: ExploreError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<DecideError> for Failure {
    fn from(e: DecideError) -> Self {
        if e.is_precondition() {
            Failure::Precondition(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_trace(sys: &System, text: &str) -> Result<Trace, Failure> {
    Trace::parse(sys.messages(), text).map_err(|e| Failure::Input(e.to_string()))
}

/// Output of a command: an analysis report, or plain text for generators and listings.
enum Output {
    Report(Report),
    Text(String),
}

fn sync_report(command: &str, sys: &System, v: SyncVerdict) -> Report {
    let ms = sys.messages();
    let mut r = Report::new(command, Verdict::of(v.equal)).stats(v.stats);
    if let Some(w) = v.witness {
        let mut text = ms.format_word(&w.word);
        if let Some(c) = w.stable {
            r = r.line(format!("send word reaches stable {} only asynchronously", c.display(sys, v.stats.semantics)));
            text.push_str(" |stable");
        }
        r = r.witness(text);
    }
    r
}

fn check(cmd: Check) -> Result<Output, Failure> {
    let report = match cmd {
        Check::KSync { sys: args, language_only } => {
            let sys = args.load()?;
            let v = k_synchronizable(&sys, args.sem(), args.k, language_only, &args.opts())?;
            sync_report("check k-sync", &sys, v)
        }
        Check::RingSync(args) => {
            let sys = args.load()?;
            let v = ring_synchronizable(&sys, &args.opts())?;
            sync_report("check ring-sync", &sys, v)
        }
        Check::Stable(args) => {
            let sys = args.load()?;
            let holds = k_stable(&sys, args.sem(), args.k, &args.opts())?;
            let stats = Stats::of(&args.lts(&sys, args.k)?);
            Report::new("check stable", Verdict::of(holds)).stats(stats).line(format!(
                "bounds {} and {} {}",
                args.k,
                args.k + 1,
                if holds { "bisimilar" } else { "differ" }
            ))
        }
        Check::StrongStable(args) => {
            let sys = args.load()?;
            let holds = strongly_k_stable(&sys, args.sem(), args.k, &args.opts())?;
            let lts = args.lts(&sys, args.k + 1)?;
            let mut r = Report::new("check strong-stable", Verdict::of(holds)).stats(Stats::of(&lts));
            if let Some(i) = (0..lts.state_count()).find(|&i| lts.state(i).max_buffer_len() > args.k) {
                let path = lts.path_to(i).expect("explored state is reachable");
                r = r.witness(path.display(sys.messages()).to_string());
            }
            r
        }
    };
    Ok(Output::Report(report))
}

fn explore(args: SystemArgs, depth: Option<usize>, dot: Option<PathBuf>) -> Result<Output, Failure> {
    let sys = args.load()?;
    let lts = args.lts(&sys, args.k)?;
    let sinks = lts.sinks(&sys);
    let mut r = Report::new("explore", Verdict::Holds).stats(Stats::of(&lts));
    r = r.line(format!("stable configurations: {}", lts.stable_states().count()));
    for (what, ids) in [
        ("terminal", &sinks.terminal),
        ("orphan", &sinks.orphan),
        ("deadlock", &sinks.deadlock),
        ("bound-limited", &sinks.bound_limited),
    ] {
        r = r.line(format!("{what}: {}", ids.len()));
        if what == "orphan" || what == "deadlock" {
            for &i in ids {
                r = r.line(format!("  {}", lts.state(i).display(&sys, args.sem())));
            }
        }
    }
    if let Some(d) = depth {
        for t in lts.traces_up_to(d) {
            let shown = if t.is_empty() { "(empty)".to_string() } else { t.display(sys.messages()).to_string() };
            r = r.line(format!("trace {shown}"));
        }
    }
    if let Some(path) = dot {
        fs::write(&path, lts.to_dot(&sys)).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(Output::Report(r))
}

fn reach(args: SystemArgs) -> Result<Output, Failure> {
    let sys = args.load()?;
    let rep = reach_representation(&sys, &args.opts())?;
    let sem = SemanticsKind::P2pFifo;
    let lts = build_lts(&sys, sem, args.k, &args.opts())?;
    let missing = lts.states().iter().find(|c| !reach_contains(&rep, c));
    let mut r = Report::new("reach", Verdict::of(missing.is_none())).stats(Stats::of(&lts));
    for c in &rep.base {
        r = r.line(format!("base {}", c.display(&sys, sem)));
    }
    if let Some(c) = missing {
        r = r.witness(c.display(&sys, sem).to_string());
    }
    Ok(Output::Report(r))
}

fn drain(args: SystemArgs) -> Result<Output, Failure> {
    let sys = args.load()?;
    let lts = args.lts(&sys, args.k)?;
    let report = lts.drainable_to_stable();
    let mut r = Report::new("drain", Verdict::of(report.all_drainable())).stats(Stats::of(&lts));
    r = r.line(format!("undrainable configurations: {}", report.undrainable.len()));
    for &i in &lts.sinks(&sys).orphan {
        r = r.line(format!("orphan {}", lts.state(i).display(&sys, args.sem())));
    }
    if let Some(&i) = report.undrainable.first() {
        let path = lts.path_to(i).expect("explored state is reachable");
        r = r.witness(format!("{} reaches {}", path.display(sys.messages()), lts.state(i).display(&sys, args.sem())));
    }
    Ok(Output::Report(r))
}

fn trace(cmd: TraceCmd) -> Result<Output, Failure> {
    let report = match cmd {
        TraceCmd::Run(a) => {
            let sys = a.sys.load()?;
            let t = parse_trace(&sys, &a.trace)?;
            match sys.run_all(a.sys.sem(), &t) {
                Ok(cs) => cs.iter().fold(Report::new("trace run", Verdict::Holds), |r, c| {
                    r.line(format!("reaches {}", c.display(&sys, a.sys.sem())))
                }),
                Err(e) => Report::new("trace run", Verdict::Fails)
                    .witness(t.prefix(e.index + 1).display(sys.messages()).to_string())
                    .line(e.to_string()),
            }
        }
        TraceCmd::Equiv { args: a, other } => {
            let sys = a.sys.load()?;
            let (t, u) = (parse_trace(&sys, &a.trace)?, parse_trace(&sys, &other)?);
            Report::new("trace equiv", Verdict::of(causally_equivalent(sys.messages(), &t, &u)))
        }
        TraceCmd::Normalize(a) => {
            let sys = a.sys.load()?;
            let t = parse_trace(&sys, &a.trace)?;
            let n = normalize_trace(&sys, &t, &a.sys.opts())?;
            let shown = n.display(sys.messages()).to_string();
            Report::new("trace normalize", Verdict::Holds).witness(shown)
        }
        TraceCmd::ExistsKbounded(a) => {
            let sys = a.sys.load()?;
            let t = parse_trace(&sys, &a.trace)?;
            match exists_equiv_k_bounded(sys.messages(), &t, a.sys.k) {
                Some(w) => {
                    Report::new("trace exists-kbounded", Verdict::Holds).witness(w.display(sys.messages()).to_string())
                }
                None => Report::new("trace exists-kbounded", Verdict::Fails)
                    .line(format!("no causally equivalent {}-bounded trace", a.sys.k)),
            }
        }
    };
    Ok(Output::Report(report))
}

fn input<T, E: std::fmt::Display>(path: &Path, parse: impl Fn(&str) -> Result<T, E>) -> Result<T, Failure> {
    parse(&read(path)?).map_err(|e| Failure::Input(format!("{}:{e}", path.display())))
}

fn generate(cmd: Generate) -> Result<Output, Failure> {
    let bad = |e: cfsm::reduce::ReduceError| Failure::Input(e.to_string());
    let text = match cmd {
        Generate::TilingFifo(f) => write_fifo(&tiling_to_fifo(&input(&f.file, parse_tiling)?).map_err(bad)?),
        Generate::FifoSystem(f) => write_system(&fifo_to_system(&input(&f.file, parse_fifo)?).map_err(bad)?),
        Generate::FifoSystemPrime(f) => {
            write_system(&fifo_to_system_prime(&input(&f.file, parse_fifo)?, &f.letter).map_err(bad)?)
        }
        Generate::FifoSystemMerged(f) => {
            write_system(&fifo_to_system_merged(&input(&f.file, parse_fifo)?, &f.letter).map_err(bad)?)
        }
    };
    Ok(Output::Text(text))
}

fn examples(cmd: Examples) -> Result<Output, Failure> {
    match cmd {
        Examples::List => {
            let show = |v: Option<bool>| v.map_or("-", |b| if b { "yes" } else { "no" });
            let mut out = format!("{:<30} {:<6} {:<6} {}\n", "name", "1-sync", "ring", "summary");
            for b in builtins::REGISTRY {
                let e = b.expected;
                out.push_str(&format!(
                    "{:<30} {:<6} {:<6} {}\n",
                    b.name,
                    show(e.one_sync),
                    show(e.ring_sync),
                    b.summary
                ));
            }
            Ok(Output::Text(out))
        }
        Examples::Emit { name } => {
            let b = builtins::lookup(&name).ok_or_else(|| Failure::Input(format!("no built-in named {name}")))?;
            match (b.system(), b.fifo()) {
                (Some(s), _) => Ok(Output::Text(write_system(&s))),
                (_, Some(a)) => Ok(Output::Text(write_fifo(&a))),
                _ => Err(Failure::Input(format!("{name} has no machines: {}", b.summary))),
            }
        }
    }
}

fn verify(cmd: VerifyCmd) -> Result<Output, Failure> {
    let VerifyCmd::Lemmas { max_states } = cmd;
    let opts = ExploreOptions { max_states, ..ExploreOptions::default() };
    let reports = run_suite(&opts).map_err(|e| Failure::Input(e.to_string()))?;
    let failed = reports.iter().find(|r| !r.holds);
    let mut r = Report::new("verify lemmas", Verdict::of(failed.is_none()));
    for p in &reports {
        r = r.line(format!("{} {} ({} cases): {}", if p.holds { "PASS" } else { "FAIL" }, p.name, p.cases, p.detail));
    }
    if let Some(f) = failed {
        r = r.witness(format!("{}: {}", f.name, f.detail));
    }
    Ok(Output::Report(r))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = command_name(&cli.command);
    let result = match cli.command {
        Command::Check(c) => check(c),
        Command::Explore { sys, depth, dot } => explore(sys, depth, dot),
        Command::Reach(a) => reach(a),
        Command::Drain(a) => drain(a),
        Command::Trace(c) => trace(c),
        Command::Generate(c) => generate(c),
        Command::Examples(c) => examples(c),
        Command::Verify(c) => verify(c),
    };
    match result {
        Ok(Output::Report(r)) => {
            emit(&format!("{}\n", r.render(cli.json)));
            r.verdict.exit_code()
        }
        Ok(Output::Text(t)) => {
            emit(&t);
            ExitCode::SUCCESS
        }
        Err(Failure::Precondition(msg)) => {
            let r = Report::new(name, Verdict::Precondition).line(msg.clone());
            if cli.json {
                emit(&format!("{}\n", r.render(true)));
            } else {
                eprintln!("error: {msg}");
            }
            r.verdict.exit_code()
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Writes to stdout; a closed pipe is not an error worth reporting.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

/// The subcommand path, for reports of commands that did not run.
fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Check(Check::KSync { .. }) => "check k-sync",
        Command::Check(Check::RingSync(_)) => "check ring-sync",
        Command::Check(Check::Stable(_)) => "check stable",
        Command::Check(Check::StrongStable(_)) => "check strong-stable",
        Command::Explore { .. } => "explore",
        Command::Reach(_) => "reach",
        Command::Drain(_) => "drain",
        Command::Trace(TraceCmd::Run(_)) => "trace run",
        Command::Trace(TraceCmd::Equiv { .. }) => "trace equiv",
        Command::Trace(TraceCmd::Normalize(_)) => "trace normalize",
        Command::Trace(TraceCmd::ExistsKbounded(_)) => "trace exists-kbounded",
        Command::Generate(_) => "generate",
        Command::Examples(_) => "examples",
        Command::Verify(_) => "verify lemmas",
    }
}
