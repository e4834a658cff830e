//! Task metrics: tip paths, completion time, export and re-import.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::MetricsError;
use crate::frames::Vec3;
use crate::limb::LimbId;
use crate::scenario::spec::ScenarioKind;

/// Sum of straight-line distances between consecutive points.
pub fn path_length(points: &[Vec3]) -> Result<f64, MetricsError> {
    if points.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    Ok(points.windows(2).map(|w| w[0].distance(w[1])).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TipSample {
    /// s
    pub t: f64,
    /// World frame, m.
    pub position: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimbTrack {
    pub limb: LimbId,
    pub samples: Vec<TipSample>,
}

impl LimbTrack {
    pub fn path_length(&self) -> Result<f64, MetricsError> {
        path_length(&self.samples.iter().map(|s| s.position).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scenario: ScenarioKind,
    pub success: bool,
    /// The controller went away before the run finished.
    pub aborted: bool,
    /// Success time, or the time limit when the task was not completed.
    pub time_to_completion: f64,
    pub time_limit: f64,
    /// Sum of the per-limb tip path lengths, m.
    pub path_length: f64,
    pub limb_path_lengths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impact_displacement: Option<f64>,
    pub steps: u64,
    pub final_state_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command_log: Option<String>,
    pub tracks: Vec<LimbTrack>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricsFormat {
    Json,
    Csv,
}

impl MetricsFormat {
    /// `.csv` selects CSV; anything else is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => MetricsFormat::Csv,
            _ => MetricsFormat::Json,
        }
    }
}

const CSV_COLUMNS: [&str; 5] = ["limb", "t", "x", "y", "z"];

impl MetricsRecord {
    pub fn sample_count(&self) -> usize {
        self.tracks.iter().map(|t| t.samples.len()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        Ok(serde_json::from_str(text)?)
    }

    fn summary_lines(&self) -> Vec<(String, String)> {
        let lengths: Vec<String> = self.limb_path_lengths.iter().map(f64::to_string).collect();
        vec![
            ("scenario".into(), self.scenario.as_str().into()),
            ("success".into(), self.success.to_string()),
            ("aborted".into(), self.aborted.to_string()),
            ("time_to_completion".into(), self.time_to_completion.to_string()),
            ("time_limit".into(), self.time_limit.to_string()),
            ("path_length".into(), self.path_length.to_string()),
            ("limb_path_lengths".into(), lengths.join(";")),
            ("impact_displacement".into(), self.impact_displacement.map_or("none".into(), |d| d.to_string())),
            ("steps".into(), self.steps.to_string()),
            ("final_state_hash".into(), self.final_state_hash.clone()),
            ("command_log".into(), self.command_log.clone().unwrap_or_else(|| "none".into())),
        ]
    }

    /// `# key=value` summary lines, a column header, then one row per sample.
    pub fn to_csv(&self) -> Result<String, MetricsError> {
        let mut out = Vec::new();
        for (k, v) in self.summary_lines() {
            writeln!(out, "# {k}={v}").expect("write to vec");
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for track in &self.tracks {
            let limb = track.limb.index().to_string();
            for s in &track.samples {
                let p = s.position;
                w.write_record([limb.clone(), s.t.to_string(), p.x.to_string(), p.y.to_string(), p.z.to_string()])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| MetricsError::Malformed(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self, MetricsError> {
        let bad = |what: &str| MetricsError::Malformed(what.to_owned());
        let mut summary = std::collections::BTreeMap::new();
        let mut body_start = 0;
        for line in text.lines() {
            let Some(rest) = line.strip_prefix("# ") else { break };
            let (k, v) = rest.split_once('=').ok_or_else(|| bad("summary line without '='"))?;
            summary.insert(k.to_owned(), v.to_owned());
            body_start += line.len() + 1;
        }
        let get = |k: &str| summary.get(k).ok_or_else(|| bad(&format!("missing summary field {k}")));
        let num = |k: &str| -> Result<f64, MetricsError> { get(k)?.parse().map_err(|_| bad(&format!("bad number in {k}"))) };
        let flag = |k: &str| -> Result<bool, MetricsError> { get(k)?.parse().map_err(|_| bad(&format!("bad bool in {k}"))) };
        let optional = |k: &str| -> Result<Option<String>, MetricsError> {
            let v = get(k)?;
            Ok((v != "none").then(|| v.clone()))
        };

        let mut tracks: Vec<LimbTrack> = Vec::new();
        let mut reader = csv::Reader::from_reader(&text.as_bytes()[body_start.min(text.len())..]);
        if reader.headers()?.iter().ne(CSV_COLUMNS) {
            return Err(bad("unexpected column header"));
        }
        for row in reader.records() {
            let row = row?;
            let f = |i: usize| -> Result<f64, MetricsError> { row[i].parse().map_err(|_| bad("bad number in row")) };
            let index: usize = row[0].parse().map_err(|_| bad("bad limb index"))?;
            let limb = LimbId::from_index(index).ok_or_else(|| bad("limb index out of range"))?;
            let sample = TipSample { t: f(1)?, position: Vec3::new(f(2)?, f(3)?, f(4)?) };
            match tracks.last_mut() {
                Some(t) if t.limb == limb => t.samples.push(sample),
                _ => tracks.push(LimbTrack { limb, samples: vec![sample] }),
            }
        }

        let lengths = get("limb_path_lengths")?;
        let limb_path_lengths = if lengths.is_empty() {
            Vec::new()
        } else {
            lengths.split(';').map(|s| s.parse().map_err(|_| bad("bad limb_path_lengths"))).collect::<Result<_, _>>()?
        };
        Ok(MetricsRecord {
            scenario: ScenarioKind::parse(get("scenario")?).ok_or_else(|| bad("unknown scenario kind"))?,
            success: flag("success")?,
            aborted: flag("aborted")?,
            time_to_completion: num("time_to_completion")?,
            time_limit: num("time_limit")?,
            path_length: num("path_length")?,
            limb_path_lengths,
            impact_displacement: optional("impact_displacement")?
                .map(|s| s.parse().map_err(|_| bad("bad impact_displacement")))
                .transpose()?,
            steps: get("steps")?.parse().map_err(|_| bad("bad steps"))?,
            final_state_hash: get("final_state_hash")?.clone(),
            command_log: optional("command_log")?,
            tracks,
        })
    }

    pub fn export(&self, path: &Path, format: MetricsFormat) -> Result<(), MetricsError> {
        let text = match format {
            MetricsFormat::Json => self.to_json(),
            MetricsFormat::Csv => self.to_csv()?,
        };
        std::fs::write(path, text).map_err(|source| MetricsError::Io { path: path.to_owned(), source })
    }

    pub fn import(path: &Path, format: MetricsFormat) -> Result<Self, MetricsError> {
        let text = std::fs::read_to_string(path).map_err(|source| MetricsError::Io { path: path.to_owned(), source })?;
        match format {
            MetricsFormat::Json => Self::from_json(&text),
            MetricsFormat::Csv => Self::from_csv(&text),
        }
    }
}
