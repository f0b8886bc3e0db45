use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;

use gaslab_core::advisor::{self, DecisionAnswers};
use gaslab_core::app::pseudo_hash;
use gaslab_core::calibration::{self, CalibrationTargets};
use gaslab_core::emit::{self, Format};
use gaslab_core::harness;
use gaslab_core::{
    AppParams, AppVersion, CallRequest, CodeSizeTable, ConfigError, EmitError, Function, GasSchedule, Pattern,
    ScenarioConfig, Word, World,
};

pub const SCHEDULE_ENV: &str = "GASLAB_SCHEDULE";

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(msg) | CliError::Io(msg) => f.write_str(msg),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid(list) => CliError::Invalid(list.join("\n  ")),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<EmitError> for CliError {
    fn from(e: EmitError) -> Self {
        match e {
            EmitError::Io(e) => CliError::Io(e.to_string()),
            EmitError::Csv(e) if e.is_io_error() => CliError::Io(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Default schedule with the overrides named by `GASLAB_SCHEDULE`, if set.
fn base_schedule() -> Result<GasSchedule, CliError> {
    let Some(path) = std::env::var_os(SCHEDULE_ENV) else {
        return Ok(GasSchedule::default());
    };
    let text = read(Path::new(&path))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{SCHEDULE_ENV}: {e}")))?;
    let schedule = GasSchedule::default().apply_overrides(&value)?;
    schedule.validate()?;
    Ok(schedule)
}

pub fn simulate(
    scenario: &Path,
    out: &Path,
    include_intrinsic: bool,
    seed_name: Option<String>,
) -> Result<(), CliError> {
    let mut config = ScenarioConfig::from_json(&read(scenario)?)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", scenario.display())))?;
    config.include_intrinsic |= include_intrinsic;
    if let Some(name) = seed_name {
        config.base_name = name;
    }
    let run = harness::run_scenario_with(&config, &base_schedule()?)?;
    emit::write_run(&run, out)?;
    println!(
        "{} calls, {} report rows, {} deployments -> {}",
        run.records.len(),
        run.report.rows.len(),
        run.report.deployments.len(),
        out.display()
    );
    Ok(())
}

pub fn report(input: &Path, format: Format, include_reverted: bool) -> Result<(), CliError> {
    let report = emit::read_run_report(input, include_reverted)?;
    emit::write_report(&report, format, io::stdout().lock())?;
    Ok(())
}

fn parse_hash(text: &str) -> Result<Word, CliError> {
    Word::from_hex(text).ok_or_else(|| CliError::Invalid(format!("--hash: `{text}` is not a 32-byte hex value")))
}

pub fn trace(
    pattern: Pattern,
    version: AppVersion,
    function: Function,
    name: &str,
    hash: Option<&str>,
    format: Format,
) -> Result<(), CliError> {
    let schedule = base_schedule()?;
    let hash = match hash {
        Some(h) => parse_hash(h)?,
        None => pseudo_hash(name, 1),
    };
    let mut world = World::deployed(pattern, version, schedule, AppParams::default(), calibration::calibrated_sizes())
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let call = match function {
        Function::AddFile => CallRequest::add_file(name, hash),
        Function::UpdateFile => CallRequest::update_file(name, hash),
        Function::GetFileName => CallRequest::get_file_name(name),
        Function::GetFileHash => CallRequest::get_file_hash(name),
        Function::CompareHashes => CallRequest::compare_hashes(hash, hash),
    };
    // reads and updates act on a file that already exists
    if matches!(function, Function::UpdateFile | Function::GetFileName | Function::GetFileHash) {
        world.call(&CallRequest::add_file(name, pseudo_hash(name, 0)));
    }
    let trace = world.call(&call);
    emit::write_trace(&trace, format, io::stdout().lock())?;
    Ok(())
}

pub fn calibrate(targets: &Path, out: &Path) -> Result<(), CliError> {
    let targets: CalibrationTargets =
        serde_json::from_str(&read(targets)?).map_err(|e| CliError::Invalid(format!("{}: {e}", targets.display())))?;
    let schedule = base_schedule()?;
    let sizes = calibration::calibrate(&targets, &CodeSizeTable::reference(), &schedule)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    for (pattern, target) in &targets.0 {
        let got = calibration::cumulative_deployment_gas(*pattern, &sizes, &schedule)
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        println!("{pattern}: target {target}, simulated {got}");
    }
    let config = ScenarioConfig { code_sizes: sizes, ..ScenarioConfig::default() };
    let text = serde_json::to_string_pretty(&config).map_err(|e| CliError::Invalid(e.to_string()))?;
    write(out, &(text + "\n"))
}

const QUESTIONS: [&str; 4] = [
    "Does the contract need to be upgradeable?",
    "Are extensive features or a large code base expected?",
    "Are upgrades expected to be frequent?",
    "Is modularity a priority?",
];

fn ask(input: &mut impl BufRead, output: &mut impl Write, question: &str) -> Result<bool, CliError> {
    loop {
        write!(output, "{question} [y/n] ").and_then(|_| output.flush()).map_err(|e| CliError::Io(e.to_string()))?;
        let mut line = String::new();
        if input.read_line(&mut line).map_err(|e| CliError::Io(e.to_string()))? == 0 {
            return Err(CliError::Invalid("unexpected end of input".into()));
        }
        match line.trim().to_ascii_lowercase().as_str() {
            "y" | "yes" => return Ok(true),
            "n" | "no" => return Ok(false),
            _ => writeln!(output, "please answer y or n").map_err(|e| CliError::Io(e.to_string()))?,
        }
    }
}

pub fn decide(answers: Option<&Path>, json: bool) -> Result<(), CliError> {
    let answers = match answers {
        Some(path) => {
            serde_json::from_str(&read(path)?).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?
        }
        None => {
            let stdin = io::stdin();
            let mut input = stdin.lock();
            let mut err = io::stderr();
            let mut a = [false; 4];
            for (slot, q) in a.iter_mut().zip(QUESTIONS) {
                *slot = ask(&mut input, &mut err, q)?;
            }
            DecisionAnswers {
                needs_upgradeability: a[0],
                extensive_features_or_large_code: a[1],
                frequent_upgrades: a[2],
                modularity_priority: a[3],
            }
        }
    };
    let rec = advisor::decide(&answers);
    if json {
        emit::write_json(&rec, io::stdout().lock())?;
        return Ok(());
    }
    println!("recommended pattern: {}", rec.pattern);
    for r in &rec.rationale {
        println!("  + {r}");
    }
    for c in &rec.cautions {
        println!("  ! {c}");
    }
    Ok(())
}
