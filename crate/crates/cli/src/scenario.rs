//! Scenario files: a JSON description of a graph and/or an averaging system
//! plus run parameters. Indices are 1-based in the file and converted to the
//! library's 0-based convention here; weights may be plain numbers or quoted
//! rational literals like "1/9" (the quoted form is required for exact-mode
//! limits).

use std::path::Path;

use netmean::graph::DiGraph;
use netmean::mapping::{AveragingSystem, Interval};
use netmean::means::MeanSpec;
use netmean::stochastic::{parse_rational, RationalMatrix};
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub graph: Option<GraphSection>,
    #[serde(default)]
    pub system: Option<SystemSection>,
    #[serde(default)]
    pub initial_vectors: Vec<Vec<f64>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub sample_range: Option<(f64, f64)>,
    #[serde(default)]
    pub commands: Vec<String>,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    #[serde(default)]
    pub vertices: Option<Vec<String>>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    /// Optional edge-list text file ("u v" per line, tokens become labels),
    /// resolved relative to the scenario file.
    #[serde(default)]
    pub edge_list_path: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub p: usize,
    pub means: Vec<MeanSection>,
    /// 1-based coordinate indices, one vector per node.
    pub alpha: Vec<Vec<usize>>,
    pub domain: DomainSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeanSection {
    Power {
        exponent: ExtendedReal,
        arity: usize,
    },
    Weighted {
        weights: Vec<WeightLiteral>,
    },
    Projection {
        /// 1-based argument position.
        index: usize,
        arity: usize,
    },
    Bumped {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        #[serde(default)]
        r: Option<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ExtendedReal {
    Number(f64),
    Text(String),
}

impl ExtendedReal {
    fn value(&self) -> Result<f64, CliError> {
        match self {
            Self::Number(v) => Ok(*v),
            Self::Text(s) => match s.trim() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(CliError::Validation(format!(
                    "expected a number, \"inf\", or \"-inf\", got {other:?}"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum WeightLiteral {
    Number(f64),
    Text(String),
}

impl WeightLiteral {
    pub fn to_f64(&self) -> Result<f64, CliError> {
        match self {
            Self::Number(v) => Ok(*v),
            Self::Text(s) => Ok(parse_rational(s)?
                .to_f64()
                .ok_or_else(|| CliError::Validation(format!("literal {s:?} overflows f64")))?),
        }
    }

    pub fn to_rational(&self) -> Result<BigRational, CliError> {
        match self {
            Self::Number(_) => Err(CliError::Validation(
                "exact mode requires weights quoted as rational literals, e.g. \"1/9\"".into(),
            )),
            Self::Text(s) => Ok(parse_rational(s)?),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default)]
    pub lo: Option<ExtendedReal>,
    #[serde(default)]
    pub hi: Option<ExtendedReal>,
    #[serde(default = "default_true")]
    pub lo_open: bool,
    #[serde(default = "default_true")]
    pub hi_open: bool,
}

fn default_true() -> bool {
    true
}

/// A loaded and validated scenario: library-level values plus the raw
/// sections needed for exact-mode reconstruction.
pub struct Scenario {
    pub name: String,
    pub graph: Option<DiGraph>,
    pub system: Option<AveragingSystem>,
    pub system_section: Option<SystemSection>,
    pub initial_vectors: Vec<Vec<f64>>,
    pub tol: f64,
    pub max_iter: usize,
    pub sample_range: Option<(f64, f64)>,
    pub commands: Vec<String>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        let file: ScenarioFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_file(file, path.parent().unwrap_or(Path::new(".")))
    }

    fn from_file(file: ScenarioFile, base_dir: &Path) -> Result<Self, CliError> {
        if !(file.tol > 0.0) {
            return Err(CliError::Validation(format!(
                "tol must be positive, got {}",
                file.tol
            )));
        }
        let graph = file
            .graph
            .as_ref()
            .map(|section| build_graph(section, base_dir))
            .transpose()?;
        let system = file.system.as_ref().map(build_system).transpose()?;
        if let Some(sys) = &system {
            for (k, x) in file.initial_vectors.iter().enumerate() {
                sys.check_state(x).map_err(|e| {
                    CliError::Validation(format!("initial vector {}: {e}", k + 1))
                })?;
            }
        }
        Ok(Self {
            name: file.name,
            graph,
            system,
            system_section: file.system,
            initial_vectors: file.initial_vectors,
            tol: file.tol,
            max_iter: file.max_iter,
            sample_range: file.sample_range,
            commands: file.commands,
        })
    }

    /// The graph under analysis: the explicit one, or the incidence graph of
    /// the system.
    pub fn analysis_graph(&self) -> Result<DiGraph, CliError> {
        if let Some(g) = &self.graph {
            return Ok(g.clone());
        }
        if let Some(sys) = &self.system {
            return Ok(sys.incidence_graph());
        }
        Err(CliError::Validation(
            "scenario has neither a graph nor a system section".into(),
        ))
    }

    pub fn require_system(&self) -> Result<&AveragingSystem, CliError> {
        self.system.as_ref().ok_or_else(|| {
            CliError::Validation("this command needs a system section".into())
        })
    }

    /// Box for randomized audits: explicit `sample_range`, or a finite slice
    /// of the domain (open finite endpoints pulled in by 1%).
    pub fn audit_range(&self) -> (f64, f64) {
        if let Some(range) = self.sample_range {
            return range;
        }
        let domain = self
            .system
            .as_ref()
            .map(|s| s.domain())
            .unwrap_or(Interval::reals());
        match (domain.lo.is_finite(), domain.hi.is_finite()) {
            (true, true) => {
                let pad = (domain.hi - domain.lo) / 100.0;
                let lo = if domain.lo_open { domain.lo + pad } else { domain.lo };
                let hi = if domain.hi_open { domain.hi - pad } else { domain.hi };
                (lo, hi)
            }
            (true, false) => (domain.lo + 0.1, domain.lo + 10.0),
            (false, true) => (domain.hi - 10.0, domain.hi - 0.1),
            (false, false) => (0.1, 10.0),
        }
    }

    /// Exact-mode matrix: every node must be a projection or a weighted mean
    /// with quoted rational weights.
    pub fn rational_matrix(&self) -> Result<RationalMatrix, CliError> {
        let section = self.system_section.as_ref().ok_or_else(|| {
            CliError::Validation("this command needs a system section".into())
        })?;
        let p = section.p;
        let mut entries = vec![vec![BigRational::zero(); p]; p];
        for (i, (mean, indices)) in section.means.iter().zip(&section.alpha).enumerate() {
            match mean {
                MeanSection::Weighted { weights } => {
                    for (j, w) in weights.iter().enumerate() {
                        let value = w.to_rational()?;
                        entries[i][indices[j] - 1] += value;
                    }
                }
                MeanSection::Projection { index, .. } => {
                    entries[i][indices[index - 1] - 1] += BigRational::one();
                }
                _ => return Err(netmean::Error::NotAffine { index: i }.into()),
            }
        }
        Ok(RationalMatrix::new(entries)?)
    }
}

fn build_graph(section: &GraphSection, base_dir: &Path) -> Result<DiGraph, CliError> {
    let mut labels: Vec<String> = section.vertices.clone().unwrap_or_default();
    let mut edge_labels: Vec<(String, String)> = section.edges.clone();
    if let Some(rel) = &section.edge_list_path {
        let path = base_dir.join(rel);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tokens = line.split_whitespace();
            match (tokens.next(), tokens.next(), tokens.next()) {
                (Some(u), Some(v), None) => edge_labels.push((u.to_string(), v.to_string())),
                _ => {
                    return Err(CliError::Parse(format!(
                        "{}:{}: expected exactly two tokens",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
    }
    let index_of = |label: &str, labels: &mut Vec<String>| -> usize {
        match labels.iter().position(|l| l == label) {
            Some(i) => i,
            None => {
                labels.push(label.to_string());
                labels.len() - 1
            }
        }
    };
    let mut edges = Vec::with_capacity(edge_labels.len());
    for (u, v) in &edge_labels {
        let ui = index_of(u, &mut labels);
        let vi = index_of(v, &mut labels);
        edges.push((ui, vi));
    }
    Ok(DiGraph::with_labels(labels.len(), edges, labels)?)
}

fn build_system(section: &SystemSection) -> Result<AveragingSystem, CliError> {
    let p = section.p;
    if section.means.len() != p || section.alpha.len() != p {
        return Err(CliError::Validation(format!(
            "system declares p = {p} but has {} means and {} index vectors",
            section.means.len(),
            section.alpha.len()
        )));
    }
    let mut alpha = Vec::with_capacity(p);
    for (i, indices) in section.alpha.iter().enumerate() {
        let converted: Vec<usize> = indices
            .iter()
            .map(|&j| {
                if j == 0 || j > p {
                    Err(CliError::Validation(format!(
                        "node {}: index {j} outside 1..={p}",
                        i + 1
                    )))
                } else {
                    Ok(j - 1)
                }
            })
            .collect::<Result<_, _>>()?;
        alpha.push(converted);
    }
    let means: Vec<MeanSpec> = section
        .means
        .iter()
        .enumerate()
        .map(|(i, mean)| build_mean(i, mean))
        .collect::<Result<_, _>>()?;
    let lo = section
        .domain
        .lo
        .as_ref()
        .map(|e| e.value())
        .transpose()?
        .unwrap_or(f64::NEG_INFINITY);
    let hi = section
        .domain
        .hi
        .as_ref()
        .map(|e| e.value())
        .transpose()?
        .unwrap_or(f64::INFINITY);
    let domain = Interval::new(lo, hi, section.domain.lo_open, section.domain.hi_open)?;
    Ok(AveragingSystem::new(means, alpha, domain)?)
}

fn build_mean(node: usize, section: &MeanSection) -> Result<MeanSpec, CliError> {
    let wrap = |e: netmean::Error| {
        CliError::Validation(format!("node {}: {e}", node + 1))
    };
    match section {
        MeanSection::Power { exponent, arity } => {
            MeanSpec::power(exponent.value()?, *arity).map_err(wrap)
        }
        MeanSection::Weighted { weights } => {
            let values: Vec<f64> = weights
                .iter()
                .map(|w| w.to_f64())
                .collect::<Result<_, _>>()?;
            MeanSpec::weighted(values).map_err(wrap)
        }
        MeanSection::Projection { index, arity } => {
            if *index == 0 {
                return Err(CliError::Validation(format!(
                    "node {}: projection index is 1-based",
                    node + 1
                )));
            }
            MeanSpec::projection(index - 1, *arity).map_err(wrap)
        }
        MeanSection::Bumped { a, b, c, d, r } => {
            let radius = r.unwrap_or_else(|| MeanSpec::bumped_default_radius(*a, *b, *c, *d));
            MeanSpec::bumped(*a, *b, *c, *d, radius).map_err(wrap)
        }
    }
}
