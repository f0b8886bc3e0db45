//! Benchmark workloads and gas reports.
//!
//! For every pattern the harness deploys V1 and upgrades through the selected
//! versions on one simulated chain. After each deployment it snapshots the
//! chain and runs every function's test case against its own copy of that
//! snapshot, so test cases do not see each other's files. Within a test case
//! storage persists across iterations, and every call is its own transaction.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::app::{pseudo_hash, AppParams, AppVersion, CallRequest, Function};
use crate::calibration;
use crate::dispatch::{self, CodeSizeTable, Pattern, World};
use crate::error::{ConfigError, PlanError};
use crate::gas::{Gas, GasSchedule};
use crate::trace::OpTrace;

pub const ALPHABET: &[u8; 26] = b"abcdefghijklmnopqrstuvwxyz";

/// How the `addFile` file name evolves across iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NameConfig {
    /// One character longer every iteration.
    Growing,
    /// Constant length; the trailing characters count through the alphabet.
    VaryingLastChar,
    /// Same name and hash every iteration.
    Identical,
}

impl NameConfig {
    pub const ALL: [NameConfig; 3] = [NameConfig::Growing, NameConfig::VaryingLastChar, NameConfig::Identical];

    pub fn as_str(self) -> &'static str {
        match self {
            NameConfig::Growing => "growing",
            NameConfig::VaryingLastChar => "varying-last-char",
            NameConfig::Identical => "identical",
        }
    }
}

impl fmt::Display for NameConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NameConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NameConfig::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| format!("unknown name config `{s}`"))
    }
}

/// File names used by one `addFile` test case.
///
/// `VaryingLastChar` rewrites the last `k` characters as a base-26 counter,
/// with `k` the fewest positions that keep all `iterations` names distinct.
pub fn name_sequence(config: NameConfig, base_name: &str, iterations: usize) -> Vec<String> {
    match config {
        NameConfig::Growing => (0..iterations)
            .map(|i| {
                let mut name = base_name.to_string();
                name.extend(std::iter::repeat_n(ALPHABET[0] as char, i));
                name
            })
            .collect(),
        NameConfig::Identical => vec![base_name.to_string(); iterations],
        NameConfig::VaryingLastChar => {
            let bytes = base_name.as_bytes();
            let mut positions = 1usize;
            let mut capacity = ALPHABET.len();
            while capacity < iterations && positions < bytes.len() {
                positions += 1;
                capacity = capacity.saturating_mul(ALPHABET.len());
            }
            let positions = positions.min(bytes.len());
            let prefix = &bytes[..bytes.len() - positions];
            (0..iterations)
                .map(|i| {
                    let mut suffix = vec![0u8; positions];
                    let mut n = i;
                    for slot in suffix.iter_mut().rev() {
                        *slot = ALPHABET[n % ALPHABET.len()];
                        n /= ALPHABET.len();
                    }
                    let mut name = prefix.to_vec();
                    name.extend_from_slice(&suffix);
                    String::from_utf8(name).expect("ascii")
                })
                .collect()
        }
    }
}

/// Content hash used by iteration `i` of a test case.
pub fn iteration_hash(config: NameConfig, name: &str, iteration: usize) -> crate::word::Word {
    match config {
        NameConfig::Identical => pseudo_hash(name, 0),
        _ => pseudo_hash(name, iteration as u64),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub patterns: Vec<Pattern>,
    pub versions: Vec<AppVersion>,
    pub iterations: usize,
    pub base_name: String,
    pub name_configs: Vec<NameConfig>,
    /// Partial gas schedule applied over the defaults.
    pub schedule: serde_json::Map<String, serde_json::Value>,
    pub app: AppParams,
    pub code_sizes: CodeSizeTable,
    pub include_intrinsic: bool,
    pub include_reverted: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            patterns: Pattern::ALL.to_vec(),
            versions: AppVersion::ALL.to_vec(),
            iterations: 100,
            base_name: "file".to_string(),
            name_configs: NameConfig::ALL.to_vec(),
            schedule: serde_json::Map::new(),
            app: AppParams::default(),
            code_sizes: calibration::calibrated_sizes().clone(),
            include_intrinsic: false,
            include_reverted: false,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    /// `base` with this scenario's schedule overrides applied.
    pub fn resolve_schedule(&self, base: &GasSchedule) -> Result<GasSchedule, ConfigError> {
        base.apply_overrides(&serde_json::Value::Object(self.schedule.clone()))
    }

    /// Every violation, not only the first.
    pub fn validate(&self, base: &GasSchedule) -> Result<GasSchedule, ConfigError> {
        let mut problems = Vec::new();
        if self.patterns.is_empty() {
            problems.push("patterns must not be empty".to_string());
        }
        if self.versions.is_empty() {
            problems.push("versions must not be empty".to_string());
        }
        if self.iterations < 1 {
            problems.push("iterations must be >= 1".to_string());
        }
        if self.base_name.is_empty() {
            problems.push("base_name must not be empty".to_string());
        }
        if !self.base_name.is_ascii() {
            problems.push("base_name must be ASCII".to_string());
        }
        if self.name_configs.is_empty() {
            problems.push("name_configs must not be empty".to_string());
        }
        problems.extend(self.code_sizes.validate());
        let schedule = match self.resolve_schedule(base) {
            Ok(s) => {
                if let Err(ConfigError::Invalid(list)) = s.validate() {
                    problems.extend(list);
                }
                Some(s)
            }
            Err(ConfigError::Invalid(list)) => {
                problems.extend(list);
                None
            }
            Err(e) => {
                problems.push(e.to_string());
                None
            }
        };
        match schedule {
            Some(s) if problems.is_empty() => Ok(s),
            _ => Err(ConfigError::Invalid(problems)),
        }
    }
}

/// One measured call.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub pattern: Pattern,
    pub version: AppVersion,
    pub function: Function,
    pub config: Option<NameConfig>,
    pub iteration: usize,
    /// Reported gas: `total` or `execution` depending on the scenario flag.
    pub gas: Gas,
    pub total: Gas,
    pub execution: Gas,
    pub reverted: bool,
    #[serde(skip)]
    pub trace: Option<OpTrace>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub pattern: Pattern,
    pub version: AppVersion,
    pub function: Function,
    pub calls: usize,
    pub min: Gas,
    pub avg: Gas,
    pub median: Gas,
    pub max: Gas,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentRow {
    pub pattern: Pattern,
    pub version: AppVersion,
    pub gas: Gas,
    pub cumulative: Gas,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasReport {
    pub rows: Vec<ReportRow>,
    pub deployments: Vec<DeploymentRow>,
}

impl GasReport {
    pub fn row(&self, pattern: Pattern, version: AppVersion, function: Function) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.pattern == pattern && r.version == version && r.function == function)
    }

    pub fn deployment(&self, pattern: Pattern, version: AppVersion) -> Option<&DeploymentRow> {
        self.deployments.iter().find(|d| d.pattern == pattern && d.version == version)
    }
}

/// Min, rounded average, lower median and max of a non-empty sample.
pub fn summarize(values: &[Gas]) -> Option<(Gas, Gas, Gas, Gas)> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as u128;
    let sum: u128 = sorted.iter().map(|v| *v as u128).sum();
    // round half up
    let avg = ((2 * sum + n) / (2 * n)) as Gas;
    Some((sorted[0], avg, sorted[(sorted.len() - 1) / 2], sorted[sorted.len() - 1]))
}

/// Per `(pattern, version, function)` statistics over the included records.
pub fn aggregate(records: &[CallRecord], include_reverted: bool) -> GasReport {
    let mut groups: BTreeMap<(Pattern, AppVersion, Function), Vec<Gas>> = BTreeMap::new();
    for r in records.iter().filter(|r| include_reverted || !r.reverted) {
        groups.entry((r.pattern, r.version, r.function)).or_default().push(r.gas);
    }
    let rows = groups
        .into_iter()
        .filter_map(|((pattern, version, function), values)| {
            let (min, avg, median, max) = summarize(&values)?;
            Some(ReportRow { pattern, version, function, calls: values.len(), min, avg, median, max })
        })
        .collect();
    GasReport { rows, deployments: Vec::new() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternDelta {
    pub pattern: Pattern,
    pub avg: Gas,
    pub delta: i64,
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub version: AppVersion,
    pub function: Function,
    pub baseline: Pattern,
    pub patterns: Vec<PatternDelta>,
}

/// Average gas per function across patterns, against Classic when present
/// and against the first reported pattern otherwise.
pub fn diff_patterns(report: &GasReport) -> Vec<ComparisonRow> {
    let mut by_key: BTreeMap<(AppVersion, Function), BTreeMap<Pattern, Gas>> = BTreeMap::new();
    for row in &report.rows {
        by_key.entry((row.version, row.function)).or_default().insert(row.pattern, row.avg);
    }
    by_key
        .into_iter()
        .map(|((version, function), averages)| {
            let baseline = if averages.contains_key(&Pattern::Classic) {
                Pattern::Classic
            } else {
                *averages.keys().next().expect("group has a row")
            };
            let base = averages[&baseline];
            let patterns = averages
                .iter()
                .map(|(pattern, avg)| {
                    let delta = *avg as i64 - base as i64;
                    PatternDelta {
                        pattern: *pattern,
                        avg: *avg,
                        delta,
                        relative: if base == 0 { 0.0 } else { delta as f64 / base as f64 },
                    }
                })
                .collect();
            ComparisonRow { version, function, baseline, patterns }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub records: Vec<CallRecord>,
    pub report: GasReport,
    /// Deployment and upgrade transactions per `(pattern, version)`.
    pub deployment_traces: BTreeMap<(Pattern, AppVersion), Vec<OpTrace>>,
}

struct CellOutput {
    records: Vec<CallRecord>,
    deployments: Vec<DeploymentRow>,
    traces: BTreeMap<(Pattern, AppVersion), Vec<OpTrace>>,
}

fn record(
    pattern: Pattern,
    version: AppVersion,
    function: Function,
    config: Option<NameConfig>,
    iteration: usize,
    trace: OpTrace,
    include_intrinsic: bool,
) -> CallRecord {
    CallRecord {
        pattern,
        version,
        function,
        config,
        iteration,
        gas: trace.gas(include_intrinsic),
        total: trace.total,
        execution: trace.execution,
        reverted: !trace.outcome.is_ok(),
        trace: Some(trace),
    }
}

/// Runs every function's test case against copies of `snapshot`.
pub fn run_version(snapshot: &World, config: &ScenarioConfig) -> Vec<CallRecord> {
    let pattern = snapshot.pattern();
    let version = snapshot.version().expect("deployed world");
    let iterations = config.iterations;
    let incl = config.include_intrinsic;
    let mut out = Vec::new();
    let fixture_names = name_sequence(NameConfig::VaryingLastChar, &config.base_name, iterations);

    for &function in version.functions() {
        match function {
            Function::AddFile => {
                for &nc in &config.name_configs {
                    let mut world = snapshot.clone();
                    for (i, name) in name_sequence(nc, &config.base_name, iterations).iter().enumerate() {
                        let call = CallRequest::add_file(name, iteration_hash(nc, name, i));
                        out.push(record(pattern, version, function, Some(nc), i, world.call(&call), incl));
                    }
                }
            }
            Function::CompareHashes => {
                let mut world = snapshot.clone();
                for i in 0..iterations {
                    let h = pseudo_hash(&config.base_name, i as u64);
                    let trace = world.call(&CallRequest::compare_hashes(h, h));
                    out.push(record(pattern, version, function, None, i, trace, incl));
                }
            }
            Function::UpdateFile | Function::GetFileName | Function::GetFileHash => {
                let mut world = snapshot.clone();
                for (i, name) in fixture_names.iter().enumerate() {
                    let hash = pseudo_hash(name, i as u64);
                    world.call(&CallRequest::add_file(name, hash));
                    let call = match function {
                        Function::UpdateFile => {
                            CallRequest::update_file(name, pseudo_hash(name, (i + iterations) as u64))
                        }
                        Function::GetFileName => CallRequest::get_file_name(name),
                        _ => CallRequest::get_file_hash(name),
                    };
                    out.push(record(pattern, version, function, None, i, world.call(&call), incl));
                }
            }
        }
    }
    out
}

fn run_pattern(pattern: Pattern, config: &ScenarioConfig, schedule: &GasSchedule) -> Result<CellOutput, PlanError> {
    let mut world = World::new(pattern, schedule.clone(), config.app.clone());
    let last = config.versions.iter().max().copied().unwrap_or(AppVersion::V1);
    let mut cumulative = 0;
    let mut output = CellOutput { records: Vec::new(), deployments: Vec::new(), traces: BTreeMap::new() };
    for version in AppVersion::ALL.into_iter().take_while(|v| *v <= last) {
        let plan = dispatch::plan_for(pattern, version, &config.code_sizes)?;
        let traces = world.apply(&plan)?;
        let gas: Gas = traces.iter().map(|t| t.total).sum();
        cumulative += gas;
        if config.versions.contains(&version) {
            output.deployments.push(DeploymentRow { pattern, version, gas, cumulative });
            output.records.extend(run_version(&world, config));
        }
        output.traces.insert((pattern, version), traces);
    }
    Ok(output)
}

/// Runs the whole scenario. Patterns run in parallel; output order is fixed.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun, ConfigError> {
    run_scenario_with(config, &GasSchedule::default())
}

/// Like [`run_scenario`], with scenario schedule overrides applied over `base`.
pub fn run_scenario_with(config: &ScenarioConfig, base: &GasSchedule) -> Result<ScenarioRun, ConfigError> {
    let schedule = config.validate(base)?;
    let mut patterns = config.patterns.clone();
    patterns.sort();
    patterns.dedup();

    let results: Vec<Result<CellOutput, PlanError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = patterns
            .iter()
            .map(|p| {
                let schedule = &schedule;
                scope.spawn(move || run_pattern(*p, config, schedule))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("pattern worker panicked")).collect()
    });

    let mut records = Vec::new();
    let mut deployments = Vec::new();
    let mut deployment_traces = BTreeMap::new();
    for result in results {
        let cell = result.map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
        records.extend(cell.records);
        deployments.extend(cell.deployments);
        deployment_traces.extend(cell.traces);
    }
    let mut report = aggregate(&records, config.include_reverted);
    report.deployments = deployments;
    Ok(ScenarioRun { records, report, deployment_traces })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn name_sequences() {
        assert_eq!(name_sequence(NameConfig::Growing, "a", 3), vec!["a", "aa", "aaa"]);
        assert_eq!(name_sequence(NameConfig::Identical, "f.txt", 3), vec!["f.txt"; 3]);
        assert_eq!(name_sequence(NameConfig::VaryingLastChar, "aa", 3), vec!["aa", "ab", "ac"]);
    }

    #[test]
    fn varying_names_stay_distinct_and_equal_length() {
        let names = name_sequence(NameConfig::VaryingLastChar, "file", 500);
        let mut unique = names.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), 500);
        assert!(names.iter().all(|n| n.len() == 4));
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(summarize(&[5]), Some((5, 5, 5, 5)));
        assert_eq!(summarize(&[4, 1, 3, 2]), Some((1, 3, 2, 4)));
        assert_eq!(summarize(&[]), None);
        assert_eq!(summarize(&[1, 2]), Some((1, 2, 1, 2)));
        assert_eq!(summarize(&[1, 1, 2]), Some((1, 1, 1, 2)));
    }

    #[test]
    fn aggregate_skips_reverted_unless_asked() {
        let mut r = CallRecord {
            pattern: Pattern::Classic,
            version: AppVersion::V1,
            function: Function::AddFile,
            config: None,
            iteration: 0,
            gas: 10,
            total: 10,
            execution: 10,
            reverted: true,
            trace: None,
        };
        assert!(aggregate(std::slice::from_ref(&r), false).rows.is_empty());
        assert_eq!(aggregate(std::slice::from_ref(&r), true).rows.len(), 1);
        r.reverted = false;
        assert_eq!(aggregate(&[r], false).rows[0].calls, 1);
    }

    #[test]
    fn single_cell_row_cardinality() {
        let config = ScenarioConfig {
            patterns: vec![Pattern::Proxy],
            versions: vec![AppVersion::V2],
            iterations: 1,
            ..Default::default()
        };
        let run = run_scenario(&config).unwrap();
        assert_eq!(run.report.rows.len(), AppVersion::V2.functions().len());
        assert_eq!(run.report.deployments.len(), 1);
    }

    #[test]
    fn validation_lists_every_violation() {
        let config = ScenarioConfig { patterns: vec![], iterations: 0, base_name: String::new(), ..Default::default() };
        match config.validate(&GasSchedule::default()) {
            Err(ConfigError::Invalid(list)) => assert_eq!(list.len(), 3, "{list:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_schedule_override_is_reported() {
        let mut config = ScenarioConfig::default();
        config.schedule.insert("refund_cap_divisor".into(), serde_json::json!(0));
        config.iterations = 0;
        match config.validate(&GasSchedule::default()) {
            Err(ConfigError::Invalid(list)) => assert_eq!(list.len(), 2, "{list:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn diff_against_classic() {
        let run = run_scenario(&ScenarioConfig { iterations: 3, ..Default::default() }).unwrap();
        let table = diff_patterns(&run.report);
        for row in table {
            let classic = row.patterns.iter().find(|p| p.pattern == Pattern::Classic).unwrap();
            assert_eq!(classic.delta, 0);
            let proxy = row.patterns.iter().find(|p| p.pattern == Pattern::Proxy).unwrap();
            let diamond = row.patterns.iter().find(|p| p.pattern == Pattern::Diamond).unwrap();
            assert_eq!(proxy.delta, 4_800);
            assert!(diamond.delta > proxy.delta);
        }
    }

    #[test]
    fn single_pattern_diff_is_zero() {
        let run =
            run_scenario(&ScenarioConfig { patterns: vec![Pattern::Classic], iterations: 2, ..Default::default() })
                .unwrap();
        assert!(diff_patterns(&run.report).iter().all(|r| r.patterns.iter().all(|p| p.delta == 0)));
    }

    #[test]
    fn config_json_defaults_fill_missing_fields() {
        let config = ScenarioConfig::from_json(r#"{"iterations": 5, "patterns": ["proxy"]}"#).unwrap();
        assert_eq!(config.iterations, 5);
        assert_eq!(config.base_name, "file");
        assert!(ScenarioConfig::from_json(r#"{"iterations": 5, "typo": 1}"#).is_err());
    }
}
