//! Tabular outputs (CSV or JSON) and run manifests.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use seqrisk::cohort::DefendantRecord;
use seqrisk::urn::Classification;
use seqrisk::{CohortConfig, CohortResult, DefendantTrajectory, DisparityRecord};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// One decision of one path: `x` is the decision taken at `step` (from 1) and
/// `p` the risk it was drawn with, i.e. the risk after `step - 1` decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub path_id: usize,
    pub step: usize,
    pub p: f64,
    pub x: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub path_id: usize,
    pub step: usize,
    pub p: f64,
    pub x: u8,
    pub group: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointRow {
    pub path_id: usize,
    pub p_final: f64,
    pub group: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityRow {
    pub t: usize,
    pub group_a: String,
    pub group_b: String,
    pub gap: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub density: f64,
    /// Limit-law probability of the bin.
    pub limit_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub format: Format,
    pub files: Vec<String>,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, format: Format, config: serde_json::Value) -> Self {
        Manifest {
            tool: "seqrisk".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            format,
            files: Vec::new(),
            config,
        }
    }
}

/// Writes `rows` to `dir/stem.{csv,json}` and returns the path.
pub fn write_rows<T: Serialize>(dir: &Path, stem: &str, format: Format, rows: &[T]) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, rows)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
    }
    Ok(path)
}

/// Reads rows written by [`write_rows`]; the format follows the extension.
pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let mut r = csv::Reader::from_reader(BufReader::new(file));
            r.deserialize().map(|row| Ok(row?)).collect()
        }
        Some("json") => Ok(serde_json::from_reader(BufReader::new(file))?),
        _ => bail!("unknown table format: {}", path.display()),
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

pub fn path_rows(paths: &[DefendantTrajectory]) -> Vec<PathRow> {
    paths
        .iter()
        .enumerate()
        .flat_map(|(id, traj)| {
            traj.probabilities
                .iter()
                .zip(&traj.classifications)
                .enumerate()
                .map(move |(i, (&p, &x))| PathRow {
                    path_id: id,
                    step: i + 1,
                    p,
                    x: x.as_u8(),
                })
        })
        .collect()
}

pub fn trajectory_rows(result: &CohortResult) -> Result<Vec<TrajectoryRow>> {
    let mut rows = Vec::with_capacity(result.len() * result.horizon());
    for d in 0..result.len() {
        let traj = result.trajectory(d)?;
        let group = result.group_of(d);
        for (i, (&p, &x)) in traj.probabilities.iter().zip(&traj.classifications).enumerate() {
            rows.push(TrajectoryRow {
                path_id: d,
                step: i + 1,
                p,
                x: x.as_u8(),
                group: group.to_string(),
            });
        }
    }
    Ok(rows)
}

pub fn endpoint_rows(result: &CohortResult) -> Vec<EndpointRow> {
    (0..result.len())
        .map(|d| EndpointRow {
            path_id: d,
            p_final: result.endpoint(d),
            group: result.group_of(d).to_string(),
        })
        .collect()
}

pub fn disparity_rows(curve: &[DisparityRecord]) -> Vec<DisparityRow> {
    curve
        .iter()
        .flat_map(|rec| {
            rec.pairs.iter().map(move |pair| DisparityRow {
                t: rec.time,
                group_a: pair.group_a.clone(),
                group_b: pair.group_b.clone(),
                gap: pair.gap,
                se: pair.se,
            })
        })
        .collect()
}

/// Rebuilds a full-path cohort from trajectory rows written for `config`.
pub fn cohort_from_rows(config: CohortConfig, rows: &[TrajectoryRow]) -> Result<CohortResult> {
    let group_index: HashMap<&str, usize> = config
        .groups
        .iter()
        .enumerate()
        .map(|(i, g)| (g.name.as_str(), i))
        .collect();
    let mut paths: Vec<Option<(usize, Vec<Option<Classification>>)>> = vec![None; config.population];
    for row in rows {
        let Some(slot) = paths.get_mut(row.path_id) else {
            bail!("path_id {} outside population {}", row.path_id, config.population);
        };
        if row.step == 0 || row.step > config.horizon {
            bail!("path {} has step {} outside 1..={}", row.path_id, row.step, config.horizon);
        }
        let Some(&g) = group_index.get(row.group.as_str()) else {
            bail!("path {} has unknown group `{}`", row.path_id, row.group);
        };
        let x = Classification::try_from(row.x)?;
        let (group, steps) = slot.get_or_insert_with(|| (g, vec![None; config.horizon]));
        if *group != g {
            bail!("path {} changes group", row.path_id);
        }
        if steps[row.step - 1].replace(x).is_some() {
            bail!("path {} repeats step {}", row.path_id, row.step);
        }
    }
    let defendants = paths
        .into_iter()
        .enumerate()
        .map(|(d, slot)| {
            let (group, steps) = slot.with_context(|| format!("path {d} missing"))?;
            let path = steps
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .with_context(|| format!("path {d} incomplete"))?;
            let high_count = path.iter().filter(|x| x.is_high()).count() as u64;
            Ok(DefendantRecord {
                group,
                high_count,
                path: Some(path),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CohortResult::from_parts(config, defendants)?)
}
