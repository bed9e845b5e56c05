//! Experiment files, flag handling and command dispatch for the `phaselip`
//! binary.

use std::fmt;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use phaselip::constructions::{Built, ConstructionKind, ConstructionSpec, MdSetup};
use phaselip::{
    certify_lipschitz, frame_bounds, frame_id, holder_fit, holder_scan, membership, prior_id, sample, scan_csv,
    subspace_constant, worst_pair_search, Frame, PriorSet, SearchConfig, StabilityReport, Vector, Verdict, Witness,
    SCHEMA_VERSION,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_REFUTED: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;

const DEFAULT_SCAN: RangeInclusive<usize> = 5..=20;
const DEFAULT_SAMPLES: usize = 10;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Spec { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Lib(#[from] phaselip::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Certify,
    Refute,
    Scan,
    Bounds,
    Sample,
    Subspace,
}

impl Command {
    fn searches(self) -> bool {
        matches!(
            self,
            Command::Certify | Command::Refute | Command::Sample | Command::Subspace
        )
    }
}

/// Depth range written `a..b` or `a..=b` (both inclusive) or a single `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Levels(pub RangeInclusive<usize>);

impl FromStr for Levels {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad level `{t}`: {e}"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let m = num(s)?;
                (m, m)
            }
        };
        if lo > hi {
            return Err(format!("empty level range {s}"));
        }
        Ok(Levels(lo..=hi))
    }
}

impl fmt::Display for Levels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..={}", self.0.start(), self.0.end())
    }
}

impl Serialize for Levels {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Levels {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            One(usize),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::One(m) => Ok(Levels(m..=m)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A prior given inline or as a path to its JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorSource {
    Inline(PriorSet),
    File(PathBuf),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// JSON report; printed to stdout when absent.
    pub report: Option<PathBuf>,
    /// Scan CSV; the JSON report goes next to it when `report` is absent.
    pub csv: Option<PathBuf>,
    /// Where to store the frame that was used.
    pub frame: Option<PathBuf>,
}

/// One experiment: the construction keys at top level plus what to run on it.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub setup: ConstructionSpec,
    pub run: RunBlock,
}

/// The keys of an experiment file that are not construction keys.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlock {
    pub command: Option<Command>,
    /// Replaces the construction's prior.
    pub prior: Option<PriorSource>,
    /// Replaces the constructed frame (same field and dimension).
    pub frame: Option<PathBuf>,
    /// Search budget; its seed is always the experiment seed.
    pub search: Option<SearchConfig>,
    pub bound: Option<f64>,
    pub m: Option<Levels>,
    pub samples: Option<usize>,
    pub output: OutputPaths,
}

const RUN_KEYS: [&str; 8] = ["command", "prior", "frame", "search", "bound", "m", "samples", "output"];

fn parse_kind(s: &str) -> std::result::Result<ConstructionKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown construction `{s}` (counterexample, real3_1, complex3_2, real_md, complex_md)"))
}

#[derive(Debug, Parser)]
#[command(
    name = "phaselip",
    version,
    about = "Stability experiments for phase retrieval frames"
)]
pub struct Cli {
    /// What to run; overrides the experiment file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// Experiment file (JSON); flags override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind)]
    pub construction: Option<ConstructionKind>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "R")]
    pub r: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Ambient truncation dimension.
    #[arg(long = "D")]
    pub dim: Option<usize>,
    /// Tail coordinates of a multidimensional construction (default D − N).
    #[arg(long = "D-tail")]
    pub tail: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Lipschitz bound to certify or refute (default: the construction's claim).
    #[arg(long)]
    pub bound: Option<f64>,
    /// Depths for `scan` and `subspace`, e.g. `5..20`.
    #[arg(long)]
    pub m: Option<Levels>,
    /// Output path: the CSV for `scan`, the JSON report otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Number of draws for `sample`.
    #[arg(long)]
    pub samples: Option<usize>,
}

/// Reads an experiment file, reporting the failing field and position.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_spec(&text).map_err(|message| CliError::Spec {
        path: path.to_path_buf(),
        message,
    })
}

pub fn parse_spec(text: &str) -> std::result::Result<ExperimentSpec, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let serde_json::Value::Object(mut all) = value else {
        return Err("experiment file must hold a JSON object".into());
    };
    let mut run = serde_json::Map::new();
    for key in RUN_KEYS {
        if let Some(v) = all.remove(key) {
            run.insert(key.into(), v);
        }
    }
    fn typed<T: for<'de> Deserialize<'de>>(
        map: serde_json::Map<String, serde_json::Value>,
    ) -> std::result::Result<T, String> {
        serde_path_to_error::deserialize(serde_json::Value::Object(map)).map_err(|e| {
            let field = e.path().to_string();
            if field == "." {
                e.inner().to_string()
            } else {
                format!("field `{field}`: {}", e.inner())
            }
        })
    }
    Ok(ExperimentSpec {
        setup: typed(all)?,
        run: typed(run)?,
    })
}

impl Cli {
    /// The experiment described by `--spec` and the flags, with paths
    /// resolved against the experiment file's directory.
    pub fn experiment(&self) -> Result<(ExperimentSpec, PathBuf)> {
        let (mut spec, base) = match &self.spec {
            Some(path) => {
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (load_spec(path)?, base)
            }
            None => {
                let kind = self
                    .construction
                    .ok_or_else(|| CliError::Usage("--construction is required without --spec".into()))?;
                let dim = self
                    .dim
                    .ok_or_else(|| CliError::Usage("--D is required without --spec".into()))?;
                let spec = ExperimentSpec {
                    setup: ConstructionSpec::new(kind, dim),
                    run: RunBlock::default(),
                };
                (spec, PathBuf::new())
            }
        };
        let s = &mut spec.setup;
        if let Some(k) = self.construction {
            s.construction = k;
        }
        if let Some(d) = self.dim {
            s.dim = d;
        }
        s.gamma = self.gamma.or(s.gamma);
        s.r = self.r.or(s.r);
        s.epsilon = self.epsilon.or(s.epsilon);
        s.seed = self.seed.or(s.seed);
        if let Some(t) = self.tail {
            s.md.get_or_insert_with(MdSetup::default).tail = Some(t);
        }
        spec.run.command = self.command.or(spec.run.command);
        spec.run.bound = self.bound.or(spec.run.bound);
        spec.run.m = self.m.clone().or(spec.run.m);
        spec.run.samples = self.samples.or(spec.run.samples);
        if let Some(r) = self.restarts {
            spec.run.search.get_or_insert_with(SearchConfig::default).restarts = r;
        }
        if let Some(out) = &self.out {
            if spec.run.command == Some(Command::Scan) {
                spec.run.output.csv = Some(out.clone());
            } else {
                spec.run.output.report = Some(out.clone());
            }
        }
        Ok((spec, base))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Spec {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn json_text<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(phaselip::Error::from)?;
    text.push('\n');
    Ok(text)
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_text(&json_text(value)?, path)
}

fn write_text(text: &str, path: &Path) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a stability report; the bytes depend only on the report.
pub fn report_write(report: &StabilityReport, path: &Path) -> Result<()> {
    write_json(report, path)
}

pub fn report_read(path: &Path) -> Result<StabilityReport> {
    read_json(path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub schema_version: u32,
    pub frame_id: String,
    pub lower: f64,
    pub upper: f64,
    pub window: Option<(f64, f64)>,
    pub within_window: Option<bool>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub vector: Vector,
    pub member: bool,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub schema_version: u32,
    pub prior_id: String,
    pub samples: Vec<SampleEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceEntry {
    pub m: usize,
    /// `None` when the search found an injectivity failure.
    pub constant: Option<f64>,
    pub injectivity_violation: bool,
    pub converged_restarts: usize,
    pub restarts: usize,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceReport {
    pub schema_version: u32,
    pub frame_id: String,
    pub levels: Vec<SubspaceEntry>,
}

/// What a run produced: the exit code and a one-line summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub code: u8,
    pub summary: String,
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Certified => EXIT_OK,
        Verdict::Refuted => EXIT_REFUTED,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

struct Context {
    built: Built,
    frame: Frame,
    prior: PriorSet,
    cfg: SearchConfig,
    seed: Option<u64>,
}

fn prepare(spec: &ExperimentSpec, command: Command, base: &Path) -> Result<Context> {
    let seed = spec.setup.seed;
    if seed.is_none() && (command.searches() || spec.setup.construction.is_randomized()) {
        return Err(CliError::Usage(format!(
            "{} on {} needs --seed",
            format!("{command:?}").to_lowercase(),
            serde_json::to_value(spec.setup.construction).map_err(phaselip::Error::from)?
        )));
    }
    let prior = match &spec.run.prior {
        Some(PriorSource::Inline(p)) => Some(p.clone()),
        Some(PriorSource::File(path)) => Some(read_json::<PriorSet>(&resolve(base, path))?),
        None => None,
    };
    let frame = match &spec.run.frame {
        Some(path) => Some(read_json::<Frame>(&resolve(base, path))?),
        None => None,
    };
    let built = spec.setup.build()?;
    let frame = match frame {
        Some(f) if f.dim() != built.frame.dim() || f.field() != built.frame.field() => {
            return Err(CliError::Usage(format!(
                "loaded frame is {} of dimension {}, construction is {} of dimension {}",
                f.field(),
                f.dim(),
                built.frame.field(),
                built.frame.dim()
            )))
        }
        Some(f) => f,
        None => built.frame.clone(),
    };
    let prior = prior.unwrap_or_else(|| built.prior.clone());
    if prior.dim() != frame.dim() {
        return Err(CliError::Usage(format!(
            "prior has D = {}, frame has {}",
            prior.dim(),
            frame.dim()
        )));
    }
    let mut cfg = spec.run.search.clone().unwrap_or_default();
    cfg.seed = seed.unwrap_or(0);
    cfg.validate()?;
    Ok(Context {
        built,
        frame,
        prior,
        cfg,
        seed,
    })
}

/// Runs the experiment and writes its outputs.
pub fn run(spec: &ExperimentSpec, base: &Path) -> Result<Outcome> {
    let command = spec
        .run
        .command
        .ok_or_else(|| CliError::Usage("no command given (certify, refute, scan, bounds, sample, subspace)".into()))?;
    let ctx = prepare(spec, command, base)?;
    if let Some(path) = &spec.run.output.frame {
        write_json(&ctx.frame, &resolve(base, path))?;
    }
    let report_path = spec.run.output.report.as_ref().map(|p| resolve(base, p));
    let emit = |text: String| -> Result<()> {
        match &report_path {
            Some(p) => write_text(&text, p),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    };
    match command {
        Command::Certify | Command::Refute => {
            let bound = spec.run.bound.or(ctx.built.claimed_bound);
            let mut report = match (command, bound) {
                (_, Some(b)) => certify_lipschitz(&ctx.frame, &ctx.prior, b, &ctx.cfg)?,
                (Command::Certify, None) => {
                    return Err(CliError::Usage(format!(
                        "{:?} has no claimed bound; pass --bound",
                        spec.setup.construction
                    )))
                }
                _ => worst_pair_search(&ctx.frame, &ctx.prior, &ctx.cfg, None)?,
            };
            if command == Command::Refute && report.verdict == Verdict::Certified {
                report.verdict = Verdict::Inconclusive;
                report.notes.push("no pair exceeded the bound".into());
            }
            report.notes.extend(ctx.built.notes.iter().cloned());
            emit(json_text(&report)?)?;
            Ok(Outcome {
                code: verdict_code(report.verdict),
                summary: format!(
                    "{:?}: max ratio {:e}, bound {:?}",
                    report.verdict, report.max_ratio, bound
                ),
            })
        }
        Command::Scan => {
            let c = match (spec.setup.construction, ctx.built.stability) {
                (ConstructionKind::Counterexample, Some(c)) => c,
                (k, _) => {
                    return Err(CliError::Usage(format!(
                        "scan needs the counterexample construction, got {k:?}"
                    )))
                }
            };
            let levels = spec.run.m.clone().map_or(DEFAULT_SCAN, |l| l.0);
            let (gamma, r) = (spec.setup.gamma(), spec.setup.r());
            let records = holder_scan(&ctx.frame, gamma, r, c, levels.clone())?;
            let fit = holder_fit(&records.iter().map(|r| (r.dq, r.dm)).collect::<Vec<_>>())?;
            let mut report = StabilityReport::new(frame_id(&ctx.frame), prior_id(&ctx.prior));
            for m in levels.clone() {
                let (x, y) = phaselip::level_witness_pair(m, gamma, r, c, ctx.frame.dim(), ctx.frame.field())?;
                report.offer(Witness::evaluate(&ctx.frame, x, y, format!("scan:m={m}"))?);
            }
            report.mark_stage();
            report.sigma_fit = Some(fit);
            report.notes.push(format!(
                "witness scan over m = {}..={}, gamma = {gamma}, R = {r}, C = {c}; sigma target gamma/(1+gamma) = {}",
                levels.start(),
                levels.end(),
                gamma / (1.0 + gamma)
            ));
            let csv = scan_csv(&records);
            match spec.run.output.csv.as_ref().map(|p| resolve(base, p)) {
                Some(path) => {
                    write_text(&csv, &path)?;
                    let json = report_path.clone().unwrap_or_else(|| path.with_extension("json"));
                    report_write(&report, &json)?;
                }
                None => {
                    print!("{csv}");
                    if let Some(p) = &report_path {
                        report_write(&report, p)?;
                    }
                }
            }
            Ok(Outcome {
                code: EXIT_OK,
                summary: format!("{} levels, fitted sigma {:.6}", records.len(), fit.sigma),
            })
        }
        Command::Bounds => {
            let b = frame_bounds(&ctx.frame)?;
            let window = ctx.built.bound_window;
            let report = BoundsReport {
                schema_version: SCHEMA_VERSION,
                frame_id: frame_id(&ctx.frame),
                lower: b.lower,
                upper: b.upper,
                window,
                within_window: window.map(|(lo, hi)| b.lower >= lo && b.upper <= hi),
                notes: ctx.built.notes.clone(),
            };
            emit(json_text(&report)?)?;
            Ok(Outcome {
                code: EXIT_OK,
                summary: format!("bounds ({}, {})", b.lower, b.upper),
            })
        }
        Command::Sample => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed.unwrap_or(0));
            let n = spec.run.samples.unwrap_or(DEFAULT_SAMPLES);
            let samples = (0..n)
                .map(|_| {
                    let v = sample(&ctx.prior, ctx.frame.field(), &mut rng);
                    let mem = membership(&ctx.prior, &v)?;
                    Ok(SampleEntry {
                        vector: v,
                        member: mem.ok,
                        margin: mem.margin,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let members = samples.iter().filter(|s| s.member).count();
            emit(json_text(&SampleReport {
                schema_version: SCHEMA_VERSION,
                prior_id: prior_id(&ctx.prior),
                samples,
            })?)?;
            Ok(Outcome {
                code: EXIT_OK,
                summary: format!("{members}/{n} samples in the prior"),
            })
        }
        Command::Subspace => {
            let levels = spec
                .run
                .m
                .clone()
                .ok_or_else(|| CliError::Usage("subspace needs --m".into()))?
                .0;
            let entries = levels
                .map(|m| {
                    let e = subspace_constant(&ctx.frame, m, &ctx.cfg)?;
                    Ok(SubspaceEntry {
                        m,
                        constant: e.constant.is_finite().then_some(e.constant),
                        injectivity_violation: e.injectivity_violation,
                        converged_restarts: e.converged_restarts,
                        restarts: e.restarts,
                        witness: e.witness,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let summary = entries
                .iter()
                .map(|e| format!("m={}: {}", e.m, e.constant.map_or("inf".into(), |c| format!("{c:.6}"))))
                .collect::<Vec<_>>()
                .join(", ");
            emit(json_text(&SubspaceReport {
                schema_version: SCHEMA_VERSION,
                frame_id: frame_id(&ctx.frame),
                levels: entries,
            })?)?;
            Ok(Outcome { code: EXIT_OK, summary })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_parse() {
        assert_eq!("5..20".parse::<Levels>().unwrap(), Levels(5..=20));
        assert_eq!("5..=20".parse::<Levels>().unwrap(), Levels(5..=20));
        assert_eq!("7".parse::<Levels>().unwrap(), Levels(7..=7));
        assert!("9..3".parse::<Levels>().is_err());
        assert!("a..3".parse::<Levels>().is_err());
    }

    #[test]
    fn spec_parses_with_flattened_construction() {
        let spec = parse_spec(
            r#"{"construction": "counterexample", "D": 12, "gamma": 2, "seed": 3,
                "command": "scan", "m": "5..10", "output": {"csv": "scan.csv"}}"#,
        )
        .unwrap();
        assert_eq!(spec.setup.dim, 12);
        assert_eq!(spec.run.command, Some(Command::Scan));
        assert_eq!(spec.run.m, Some(Levels(5..=10)));
        assert_eq!(spec.run.output.csv, Some(PathBuf::from("scan.csv")));
    }

    #[test]
    fn spec_errors_name_the_field() {
        let err = parse_spec(r#"{"construction": "counterexample", "D": "forty"}"#).unwrap_err();
        assert!(err.contains("D"), "{err}");
        let err = parse_spec(r#"{"construction": "counterexample", "D": 4, "search": {"restart": 3}}"#).unwrap_err();
        assert!(err.contains("search") && err.contains("restart"), "{err}");
        let err = parse_spec("{\"construction\": \"counterexample\",\n \"D\": 4,,}").unwrap_err();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn seed_is_required_for_randomized_runs() {
        let spec = parse_spec(r#"{"construction": "counterexample", "D": 4, "command": "bounds"}"#).unwrap();
        assert!(matches!(run(&spec, Path::new("")), Err(CliError::Usage(_))));
        let spec = parse_spec(r#"{"construction": "real3_1", "D": 4, "command": "certify"}"#).unwrap();
        assert!(matches!(run(&spec, Path::new("")), Err(CliError::Usage(_))));
    }
}
