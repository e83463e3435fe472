//! Command-line front end.
//!
//! Every command returns one of the exit codes in [`exit`]; [`run_cli`] is
//! the testable entry point used by the binary.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value as Json};

use crate::ast::{annotate, roles_of, DiocProcess, GlobalState, Role, UpdateSet};
use crate::connectedness::check_connected;
use crate::dioc_sem::{dioc_trace, DiocSystem, HostEnv, Label, Policy, Schedule, ScheduledChange};
use crate::dpoc_sem::{dpoc_trace, DpocSystem};
use crate::events::{check_minimal_transitions, check_projection_events, check_well_annotated_dpoc};
use crate::parser::{parse_dioc, parse_dpoc_network, parse_update, pretty_dpoc, pretty_network, Diagnostic, SourceFile};
use crate::projection::{proj_with, Network, ProjectionMutation};
use crate::verify::{check_equiv, check_freedom, simplify_network, weaken, ExploreOptions, VerifyError};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Connectedness violations, a failed check, or a refused projection.
    pub const FAILED: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const IO: i32 = 3;
    pub const UNKNOWN_ROLE: i32 = 4;
    /// Invalid schedule, script or run configuration.
    pub const SCHEDULE: i32 = 5;
    pub const BUDGET: i32 = 6;
}

#[derive(Parser, Debug)]
#[command(name = "dioc", version, about = "Dynamically-updatable choreographies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Directory of `.upd` update files, read once at start.
    #[arg(long)]
    pub updates: Option<PathBuf>,
    /// JSON schedule of update-set changes (and optional scripted choices).
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// JSON table of host functions.
    #[arg(long)]
    pub host: Option<PathBuf>,
    /// JSON per-role input queues for `getInput()`.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file of scripted choices `{"choices":[{"step":s,"choiceIndex":c}]}`.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Exhaustive exploration (verification commands only).
    #[arg(long)]
    pub explore: bool,
    #[arg(long, default_value_t = 64)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 2)]
    pub loop_bound: u32,
    #[arg(long)]
    pub json: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Dioc,
    Dpoc,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MutationArg {
    DropAuxRecv,
    SwapBroadcast,
    Misprefix,
    DropAck,
    ReorderScopeBroadcasts,
}

impl From<MutationArg> for ProjectionMutation {
    fn from(m: MutationArg) -> Self {
        match m {
            MutationArg::DropAuxRecv => ProjectionMutation::DropAuxRecv,
            MutationArg::SwapBroadcast => ProjectionMutation::SwapBroadcast,
            MutationArg::Misprefix => ProjectionMutation::Misprefix,
            MutationArg::DropAck => ProjectionMutation::DropAck,
            MutationArg::ReorderScopeBroadcasts => ProjectionMutation::ReorderScopeBroadcasts,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a choreography and check that it is connected.
    Check {
        program: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the endpoint process of every role, or of one role.
    Project {
        program: PathBuf,
        #[arg(long)]
        role: Option<String>,
        /// Project even when the program is not connected.
        #[arg(long)]
        force: bool,
        /// Write one `ROLE.dpoc` file per role into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Execute a choreography or its projection and print the trace as JSON lines.
    Run {
        program: PathBuf,
        #[arg(long, value_enum, default_value = "dioc")]
        level: Level,
        /// Print only observable labels, with operation prefixes removed.
        #[arg(long)]
        weak: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the weak traces of a choreography and its projection.
    Equiv {
        program: PathBuf,
        #[arg(long, value_enum)]
        mutation: Option<MutationArg>,
        #[arg(long, default_value_t = 2_000_000)]
        budget: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Check deadlock, race and orphan freedom of a projection or a network.
    Props {
        program: PathBuf,
        /// Also check the event-structure conditions.
        #[arg(long)]
        events: bool,
        #[arg(long, default_value_t = 2_000_000)]
        budget: usize,
        #[command(flatten)]
        common: Common,
    },
}

/// An error carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }

    fn diagnostics(code: i32, path: &Path, diags: &[Diagnostic]) -> Self {
        let lines: Vec<String> = diags.iter().map(|d| format!("{}:{d}", path.display())).collect();
        CliError::new(code, lines.join("\n"))
    }
}

type CliResult = Result<i32, CliError>;

/// How a run resolves nondeterminism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicyChoice {
    Seed(u64),
    Script(BTreeMap<usize, usize>),
    Explore,
    First,
}

/// Everything a command needs besides its program.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub program: PathBuf,
    pub updates: UpdateSet,
    pub schedule: Schedule,
    pub host: HostEnv,
    pub policy: PolicyChoice,
    pub max_steps: usize,
    pub loop_bound: u32,
    pub json: bool,
}

#[derive(Deserialize, Debug, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ScheduleFile {
    #[serde(default)]
    changes: Vec<ChangeEntry>,
    #[serde(default)]
    choices: Vec<ChoiceEntry>,
}

#[derive(Deserialize, Debug)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ChangeEntry {
    after_weak_label: usize,
    set_updates: Vec<String>,
}

#[derive(Deserialize, Debug)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ChoiceEntry {
    step: usize,
    choice_index: usize,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::new(exit::IO, format!("{}: {e}", path.display())))
}

fn read_schedule(path: &Path) -> Result<ScheduleFile, CliError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::new(exit::SCHEDULE, format!("{}: invalid schedule: {e}", path.display())))
}

/// Parse every `.upd` file of a directory, sorted by file name.
pub fn load_updates(dir: &Path) -> Result<UpdateSet, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::new(exit::IO, format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "upd"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let src = SourceFile::new(&p.display().to_string(), &read(&p)?);
        out.push(parse_update(&src).map_err(|d| CliError::diagnostics(exit::PARSE, &p, &d))?);
    }
    Ok(UpdateSet::new(out))
}

fn select(repo: &UpdateSet, names: &[String]) -> Result<UpdateSet, CliError> {
    let mut chosen = Vec::new();
    for n in names {
        let n = n.strip_suffix(".upd").unwrap_or(n);
        let u = repo
            .updates
            .iter()
            .find(|u| u.name.as_ref() == n)
            .ok_or_else(|| CliError::new(exit::SCHEDULE, format!("schedule names unknown update `{n}`")))?;
        chosen.push((u.name.to_string(), u.body.as_ref().clone()));
    }
    Ok(UpdateSet::new(chosen))
}

impl RunConfig {
    /// Read and validate the files named by the common flags.
    pub fn from_common(program: &Path, c: &Common) -> Result<RunConfig, CliError> {
        if c.max_steps == 0 || c.loop_bound == 0 {
            return Err(CliError::new(exit::SCHEDULE, "--max-steps and --loop-bound must be at least 1"));
        }
        if c.explore && c.seed.is_some() {
            return Err(CliError::new(exit::SCHEDULE, "--explore cannot be combined with --seed"));
        }
        let updates = match &c.updates {
            Some(dir) => load_updates(dir)?,
            None => UpdateSet::empty(),
        };
        let mut host = HostEnv::default();
        if let Some(p) = &c.host {
            host.functions = HostEnv::functions_from_json(&read(p)?)
                .map_err(|e| CliError::new(exit::PARSE, format!("{}: {e}", p.display())))?;
        }
        if let Some(p) = &c.inputs {
            host.inputs = HostEnv::inputs_from_json(&read(p)?)
                .map_err(|e| CliError::new(exit::PARSE, format!("{}: {e}", p.display())))?;
        }
        let mut schedule = Schedule::none();
        let mut choices = BTreeMap::new();
        let mut files = Vec::new();
        if let Some(p) = &c.schedule {
            files.push(read_schedule(p)?);
        }
        if let Some(p) = &c.script {
            files.push(read_schedule(p)?);
        }
        for f in files {
            let mut last = None;
            for ch in f.changes {
                if last.is_some_and(|l| ch.after_weak_label <= l) {
                    return Err(CliError::new(exit::SCHEDULE, "afterWeakLabel values must be strictly increasing"));
                }
                last = Some(ch.after_weak_label);
                schedule
                    .changes
                    .push(ScheduledChange { after_weak_label: ch.after_weak_label, updates: select(&updates, &ch.set_updates)? });
            }
            for ch in f.choices {
                choices.insert(ch.step, ch.choice_index);
            }
        }
        let policy = if c.explore {
            PolicyChoice::Explore
        } else if !choices.is_empty() {
            if c.seed.is_some() {
                return Err(CliError::new(exit::SCHEDULE, "scripted choices cannot be combined with --seed"));
            }
            PolicyChoice::Script(choices)
        } else if let Some(s) = c.seed {
            PolicyChoice::Seed(s)
        } else {
            PolicyChoice::First
        };
        Ok(RunConfig {
            program: program.to_path_buf(),
            updates,
            schedule,
            host,
            policy,
            max_steps: c.max_steps,
            loop_bound: c.loop_bound,
            json: c.json,
        })
    }

    fn explore_options(&self, budget: usize) -> ExploreOptions {
        ExploreOptions { bound: self.max_steps, loop_bound: self.loop_bound, schedule: self.schedule.clone(), budget }
    }
}

fn load_program(path: &Path) -> Result<DiocProcess, CliError> {
    let src = SourceFile::new(&path.display().to_string(), &read(path)?);
    let p = parse_dioc(&src).map_err(|d| CliError::diagnostics(exit::PARSE, path, &d))?;
    Ok(annotate(&p))
}

fn is_network(path: &Path) -> bool {
    path.extension().is_some_and(|x| x == "dpoc")
}

fn load_network(path: &Path) -> Result<Network, CliError> {
    parse_dpoc_network(&read(path)?).map_err(|d| CliError::diagnostics(exit::PARSE, path, &d))
}

fn cmd_check(program: &Path, c: &Common, out: &mut dyn Write) -> CliResult {
    let p = load_program(program)?;
    let report = check_connected(&p);
    let diags: Vec<Diagnostic> = report.violations.iter().map(|v| v.to_diagnostic()).collect();
    if c.json {
        let j = json!({ "connected": report.connected, "violations": diags });
        emit(out, &j.to_string())?;
    } else if report.connected {
        emit(out, &format!("{}: connected", program.display()))?;
    } else {
        for d in &diags {
            emit(out, &format!("{}:{d}", program.display()))?;
        }
    }
    Ok(if report.connected { exit::OK } else { exit::FAILED })
}

fn cmd_project(program: &Path, role: Option<&str>, force: bool, dir: Option<&Path>, c: &Common, out: &mut dyn Write) -> CliResult {
    let p = load_program(program)?;
    let report = check_connected(&p);
    if !report.connected && !force {
        let diags: Vec<Diagnostic> = report.violations.iter().map(|v| v.to_diagnostic()).collect();
        return Err(CliError::diagnostics(exit::FAILED, program, &diags));
    }
    RunConfig::from_common(program, c)?;
    let net = simplify_network(&proj_with(&p, &GlobalState::default(), None));
    if let Some(r) = role {
        let r = Role::new(r);
        if !roles_of(&p).contains(&r) {
            return Err(CliError::new(exit::UNKNOWN_ROLE, format!("unknown role `{r}`")));
        }
        let text = net.proc(&r).map(pretty_dpoc).unwrap_or_default();
        if let Some(d) = dir {
            write_file(&d.join(format!("{r}.dpoc")), &text)?;
        } else {
            emit(out, &text)?;
        }
        return Ok(exit::OK);
    }
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d).map_err(|e| CliError::new(exit::IO, format!("{}: {e}", d.display())))?;
            for (r, (proc, _)) in &net.roles {
                write_file(&d.join(format!("{r}.dpoc")), &pretty_dpoc(proc))?;
            }
        }
        None => emit(out, &pretty_network(&net))?,
    }
    Ok(exit::OK)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, format!("{text}\n")).map_err(|e| CliError::new(exit::IO, format!("{}: {e}", path.display())))
}

fn dpoc_system(cfg: &RunConfig) -> Result<(DpocSystem, Option<DiocSystem>), CliError> {
    if is_network(&cfg.program) {
        return Ok((DpocSystem::new(load_network(&cfg.program)?, cfg.updates.clone()), None));
    }
    let p = load_program(&cfg.program)?;
    let dioc = DiocSystem::new(p, GlobalState::default(), cfg.updates.clone());
    let net = proj_with(&dioc.proc, &dioc.state, None);
    let dpoc = DpocSystem::new(net, cfg.updates.clone()).with_allocator(dioc.next_index);
    Ok((dpoc, Some(dioc)))
}

fn cmd_run(program: &Path, level: Level, weak: bool, c: &Common, out: &mut dyn Write) -> CliResult {
    let cfg = RunConfig::from_common(program, c)?;
    let policy = match &cfg.policy {
        PolicyChoice::Explore => {
            return Err(CliError::new(exit::SCHEDULE, "--explore is only valid for equiv and props"));
        }
        PolicyChoice::Seed(s) => Policy::Seeded(*s),
        PolicyChoice::Script(m) => Policy::Scripted(m.clone()),
        PolicyChoice::First => Policy::FirstEnabled,
    };
    let trace = match level {
        Level::Dioc => {
            if is_network(program) {
                return Err(CliError::new(exit::PARSE, "a network file can only run with --level dpoc"));
            }
            let sys = DiocSystem::new(load_program(program)?, GlobalState::default(), cfg.updates.clone());
            dioc_trace(&sys, &cfg.host, &policy, cfg.max_steps, &cfg.schedule)
        }
        Level::Dpoc => {
            let (sys, _) = dpoc_system(&cfg)?;
            dpoc_trace(&sys, &cfg.host, &policy, cfg.max_steps, &cfg.schedule)
        }
    }
    .map_err(|e| CliError::new(exit::SCHEDULE, e.to_string()))?;
    let shown: Vec<Label> = if weak { weaken(&trace) } else { trace };
    for l in &shown {
        emit(out, &l.to_json().to_string())?;
    }
    Ok(exit::OK)
}

fn budget_error(e: VerifyError) -> CliError {
    match e {
        VerifyError::BudgetExceeded { .. } => CliError::new(exit::BUDGET, e.to_string()),
        VerifyError::Refused(d) => CliError::new(exit::FAILED, d.to_string()),
    }
}

fn cmd_equiv(program: &Path, mutation: Option<MutationArg>, budget: usize, c: &Common, out: &mut dyn Write) -> CliResult {
    let cfg = RunConfig::from_common(program, c)?;
    let sys = DiocSystem::new(load_program(program)?, GlobalState::default(), cfg.updates.clone());
    let report = check_equiv(&sys, &cfg.host, &cfg.explore_options(budget), mutation.map(Into::into)).map_err(budget_error)?;
    if cfg.json {
        emit(out, &report.to_json().to_string())?;
    } else {
        let verdict = if report.is_equivalent() { "equivalent" } else { "counterexample" };
        emit(out, &format!("{verdict} (states {}, truncated {})", report.states, report.truncated))?;
        if !report.is_equivalent() {
            emit(out, &report.to_json()["counterexample"].to_string())?;
        }
    }
    Ok(if report.is_equivalent() { exit::OK } else { exit::FAILED })
}

fn cmd_props(program: &Path, events: bool, budget: usize, c: &Common, out: &mut dyn Write) -> CliResult {
    let cfg = RunConfig::from_common(program, c)?;
    let (sys, dioc) = dpoc_system(&cfg)?;
    let opts = cfg.explore_options(budget);
    let freedom = check_freedom(&sys, &cfg.host, &opts);
    let mut report: Json = freedom.to_json();
    let mut ok = freedom.all_pass();
    if events {
        let wa = check_well_annotated_dpoc(&sys.network);
        let dynamic = check_minimal_transitions(&sys, &cfg.host, &opts);
        let mut violations: Vec<Json> = wa.violations.iter().map(|v| v.to_json()).collect();
        violations.extend(dynamic.violations.iter().map(|v| v.to_json()));
        let mut ev = json!({ "events": wa.events, "statesChecked": dynamic.states_checked });
        if let Some(d) = &dioc {
            let pe = check_projection_events(&d.proc, &sys.network);
            for e in &pe.missing {
                violations.push(json!({ "condition": "missing-event", "events": [e.to_json()] }));
            }
            for (a, b) in &pe.unordered {
                violations.push(json!({ "condition": "order-lost", "events": [a.to_json(), b.to_json()] }));
            }
        }
        ok &= violations.is_empty();
        ev["violations"] = Json::Array(violations);
        report["events"] = ev;
    }
    if cfg.json {
        emit(out, &report.to_string())?;
    } else {
        for key in ["deadlock", "race", "orphan"] {
            let v = &report[key];
            let text = if v == "pass" { "pass".to_string() } else { format!("FAIL {v}") };
            emit(out, &format!("{key}: {text}"))?;
        }
        if events {
            let n = report["events"]["violations"].as_array().map_or(0, Vec::len);
            emit(out, &format!("events: {n} violation(s)"))?;
            for v in report["events"]["violations"].as_array().into_iter().flatten() {
                emit(out, &format!("  {v}"))?;
            }
        }
        emit(out, &format!("states: {}", freedom.states))?;
    }
    if freedom.partial {
        return Err(CliError::new(exit::BUDGET, format!("state budget of {budget} exceeded")));
    }
    Ok(if ok { exit::OK } else { exit::FAILED })
}

fn emit(out: &mut dyn Write, line: &str) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::new(exit::IO, e.to_string()))
}

/// Parse arguments, run the command, and return the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::PARSE } else { exit::OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Check { program, common } => cmd_check(program, common, out),
        Command::Project { program, role, force, out: dir, common } => {
            cmd_project(program, role.as_deref(), *force, dir.as_deref(), common, out)
        }
        Command::Run { program, level, weak, common } => cmd_run(program, *level, *weak, common, out),
        Command::Equiv { program, mutation, budget, common } => cmd_equiv(program, *mutation, *budget, common, out),
        Command::Props { program, events, budget, common } => cmd_props(program, *events, *budget, common, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}", e.message);
            e.code
        }
    }
}
