//! Versioned JSON schemas for states, filters, settings, behaviors, and
//! protocols. Complex entries are `[re, im]` pairs, row-major; round-trips
//! are bit-exact for doubles. Settings and outcomes are 1-indexed in files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use bellforge::behavior::{Behavior, Scenario};
use bellforge::decomposition::{AlternatingProtocol, InstrumentRound};
use bellforge::filtering::LocalFilter;
use bellforge::operator::{FactorSpace, Operator};
use bellforge::quantum::{BipartiteState, DichotomicObservable, Side};
use bellforge::witness::ChshSettings;

pub const SCHEMA: &str = "bellforge/1";

/// CLI failure classes, mapped onto exit codes: validation → 1, I/O and
/// parsing → 2.
#[derive(Debug)]
pub enum CliError {
    Validation(bellforge::Error),
    Parse(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Parse(_) | CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(e) => write!(f, "validation error: {e}"),
            CliError::Parse(msg) => write!(f, "parse error: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl From<bellforge::Error> for CliError {
    fn from(e: bellforge::Error) -> Self {
        CliError::Validation(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn check_schema(schema: &str) -> CliResult<()> {
    if schema != SCHEMA {
        return Err(CliError::Parse(format!(
            "unsupported schema {schema:?}, expected {SCHEMA:?}"
        )));
    }
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Parse(e.to_string()))?;
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonOperator {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl JsonOperator {
    pub fn from_operator(op: &Operator<f64>) -> Self {
        Self {
            rows: op.rows(),
            cols: op.cols(),
            data: op.entries().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_operator(&self) -> CliResult<Operator<f64>> {
        for pair in &self.data {
            if !pair[0].is_finite() || !pair[1].is_finite() {
                return Err(CliError::Validation(bellforge::Error::ParameterOutOfRange(
                    "operator entries must be finite".into(),
                )));
            }
        }
        let entries = self
            .data
            .iter()
            .map(|[re, im]| num_complex_from(*re, *im))
            .collect();
        Operator::new(self.rows, self.cols, entries).map_err(CliError::Validation)
    }
}

fn num_complex_from(re: f64, im: f64) -> bellforge::C64 {
    bellforge::C64::new(re, im)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub a: Vec<String>,
    pub b: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub schema: String,
    pub labels: Vec<String>,
    pub dims: Vec<usize>,
    pub partition: PartitionSpec,
    pub matrix: JsonOperator,
}

impl StateFile {
    pub fn from_state(state: &BipartiteState<f64>) -> Self {
        let labels = state.space().labels().to_vec();
        Self {
            schema: SCHEMA.into(),
            dims: state.space().dims().to_vec(),
            partition: PartitionSpec {
                a: labels[..state.split()].to_vec(),
                b: labels[state.split()..].to_vec(),
            },
            labels,
            matrix: JsonOperator::from_operator(state.matrix()),
        }
    }

    pub fn to_state(&self) -> CliResult<BipartiteState<f64>> {
        check_schema(&self.schema)?;
        if self.labels.len() != self.dims.len() {
            return Err(CliError::Validation(bellforge::Error::DimensionMismatch(
                "labels and dims must have equal length".into(),
            )));
        }
        let split = self.partition.a.len();
        let prefix: Vec<&String> = self.labels.iter().take(split).collect();
        let suffix: Vec<&String> = self.labels.iter().skip(split).collect();
        let a_ok = self.partition.a.iter().all(|l| prefix.contains(&l))
            && prefix.len() == self.partition.a.len();
        let b_ok = self.partition.b.iter().all(|l| suffix.contains(&l))
            && suffix.len() == self.partition.b.len();
        if !a_ok || !b_ok {
            return Err(CliError::Validation(bellforge::Error::DimensionMismatch(
                "partition must split the label list into an A-side prefix and B-side suffix"
                    .into(),
            )));
        }
        let space = FactorSpace::new(
            self.labels
                .iter()
                .cloned()
                .zip(self.dims.iter().copied())
                .collect(),
        )
        .map_err(CliError::Validation)?;
        let matrix = self.matrix.to_operator()?;
        BipartiteState::new(matrix, space, split).map_err(CliError::Validation)
    }
}

pub fn load_state(path: &Path) -> CliResult<BipartiteState<f64>> {
    read_json::<StateFile>(path)?.to_state()
}

pub fn save_state(path: &Path, state: &BipartiteState<f64>) -> CliResult<()> {
    write_json(path, &StateFile::from_state(state))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterFile {
    pub schema: String,
    pub party: String,
    pub matrix: JsonOperator,
}

impl FilterFile {
    pub fn to_filter(&self) -> CliResult<LocalFilter<f64>> {
        check_schema(&self.schema)?;
        let side = match self.party.as_str() {
            "A" => Side::A,
            "B" => Side::B,
            other => {
                return Err(CliError::Parse(format!(
                    "party must be \"A\" or \"B\", got {other:?}"
                )))
            }
        };
        LocalFilter::new(side, self.matrix.to_operator()?).map_err(CliError::Validation)
    }
}

pub fn load_filter(path: &Path, expect: Side) -> CliResult<LocalFilter<f64>> {
    let filter = read_json::<FilterFile>(path)?.to_filter()?;
    if filter.side() != expect {
        return Err(CliError::Validation(bellforge::Error::DimensionMismatch(
            format!("{} is not a filter for the expected side", path.display()),
        )));
    }
    Ok(filter)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SettingsFile {
    pub schema: String,
    pub a1: JsonOperator,
    pub a2: JsonOperator,
    pub b1: JsonOperator,
    pub b2: JsonOperator,
}

pub fn load_settings(path: &Path) -> CliResult<ChshSettings<f64>> {
    let file: SettingsFile = read_json(path)?;
    check_schema(&file.schema)?;
    let build = |j: &JsonOperator| -> CliResult<DichotomicObservable<f64>> {
        DichotomicObservable::new(j.to_operator()?).map_err(CliError::Validation)
    };
    Ok(ChshSettings {
        a1: build(&file.a1)?,
        a2: build(&file.a2)?,
        b1: build(&file.b1)?,
        b2: build(&file.b2)?,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviorFile {
    pub schema: String,
    #[serde(rename = "mA")]
    pub m_a: Vec<usize>,
    #[serde(rename = "nB")]
    pub n_b: Vec<usize>,
    /// Blocks keyed "k,l" with 1-indexed settings; each block is the matrix
    /// p(ij|kl) with rows i and columns j, row-major.
    pub probs: BTreeMap<String, Vec<Vec<f64>>>,
}

impl BehaviorFile {
    pub fn from_behavior(behavior: &Behavior<f64>) -> Self {
        let sc = behavior.scenario();
        let mut probs = BTreeMap::new();
        for k in 0..sc.settings_a() {
            for l in 0..sc.settings_b() {
                let block: Vec<Vec<f64>> = (0..sc.outcomes_a()[k])
                    .map(|i| {
                        (0..sc.outcomes_b()[l])
                            .map(|j| behavior.prob(k, l, i, j))
                            .collect()
                    })
                    .collect();
                probs.insert(format!("{},{}", k + 1, l + 1), block);
            }
        }
        Self {
            schema: SCHEMA.into(),
            m_a: sc.outcomes_a().to_vec(),
            n_b: sc.outcomes_b().to_vec(),
            probs,
        }
    }

    pub fn to_behavior(&self) -> CliResult<Behavior<f64>> {
        check_schema(&self.schema)?;
        let scenario =
            Scenario::new(self.m_a.clone(), self.n_b.clone()).map_err(CliError::Validation)?;
        let mut table = vec![0.0; scenario.table_len()];
        let mut seen = 0usize;
        for (key, block) in &self.probs {
            let (k, l) = parse_setting_key(key)?;
            if k >= scenario.settings_a() || l >= scenario.settings_b() {
                return Err(CliError::Parse(format!(
                    "block key {key:?} is outside the scenario"
                )));
            }
            if block.len() != self.m_a[k] || block.iter().any(|row| row.len() != self.n_b[l]) {
                return Err(CliError::Parse(format!(
                    "block {key:?} must be {}×{}",
                    self.m_a[k], self.n_b[l]
                )));
            }
            for (i, row) in block.iter().enumerate() {
                for (j, &p) in row.iter().enumerate() {
                    table[scenario.index(k, l, i, j)] = p;
                    seen += 1;
                }
            }
        }
        if seen != scenario.table_len() {
            return Err(CliError::Parse(format!(
                "behavior covers {seen} entries, expected {}",
                scenario.table_len()
            )));
        }
        Behavior::new(scenario, table).map_err(CliError::Validation)
    }
}

fn parse_setting_key(key: &str) -> CliResult<(usize, usize)> {
    let parts: Vec<&str> = key.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Parse(format!(
            "block key {key:?} must look like \"k,l\""
        )));
    }
    let parse_one = |s: &str| -> CliResult<usize> {
        let v: usize = s
            .trim()
            .parse()
            .map_err(|_| CliError::Parse(format!("bad setting index {s:?}")))?;
        if v == 0 {
            return Err(CliError::Parse("setting indices are 1-based".into()));
        }
        Ok(v - 1)
    };
    Ok((parse_one(parts[0])?, parse_one(parts[1])?))
}

pub fn load_behavior(path: &Path) -> CliResult<Behavior<f64>> {
    read_json::<BehaviorFile>(path)?.to_behavior()
}

pub fn save_behavior(path: &Path, behavior: &Behavior<f64>) -> CliResult<()> {
    write_json(path, &BehaviorFile::from_behavior(behavior))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundFile {
    /// Branch operators keyed by outcome history: "" for the first round,
    /// then comma-separated 1-indexed outcomes like "2,1".
    pub ops: BTreeMap<String, Vec<JsonOperator>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolFile {
    pub schema: String,
    pub pairs: usize,
    pub a_rounds: Vec<RoundFile>,
    pub b_rounds: Vec<RoundFile>,
}

fn parse_prefix(key: &str) -> CliResult<Vec<usize>> {
    if key.is_empty() {
        return Ok(vec![]);
    }
    key.split(',')
        .map(|s| {
            let v: usize = s
                .trim()
                .parse()
                .map_err(|_| CliError::Parse(format!("bad outcome index {s:?}")))?;
            if v == 0 {
                return Err(CliError::Parse("outcome indices are 1-based".into()));
            }
            Ok(v - 1)
        })
        .collect()
}

pub fn load_protocol(path: &Path) -> CliResult<AlternatingProtocol<f64>> {
    let file: ProtocolFile = read_json(path)?;
    check_schema(&file.schema)?;
    if file.a_rounds.len() != file.pairs || file.b_rounds.len() != file.pairs {
        return Err(CliError::Parse(format!(
            "protocol declares {} pairs but carries {}+{} rounds",
            file.pairs,
            file.a_rounds.len(),
            file.b_rounds.len()
        )));
    }
    let build = |round: &RoundFile| -> CliResult<InstrumentRound<f64>> {
        let mut ops = BTreeMap::new();
        for (key, branch_ops) in &round.ops {
            let prefix = parse_prefix(key)?;
            let operators: CliResult<Vec<Operator<f64>>> =
                branch_ops.iter().map(|j| j.to_operator()).collect();
            ops.insert(prefix, operators?);
        }
        InstrumentRound::new(ops).map_err(CliError::Validation)
    };
    let a_rounds: CliResult<Vec<_>> = file.a_rounds.iter().map(build).collect();
    let b_rounds: CliResult<Vec<_>> = file.b_rounds.iter().map(build).collect();
    AlternatingProtocol::new(a_rounds?, b_rounds?).map_err(CliError::Validation)
}
