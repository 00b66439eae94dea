//! Line-delimited metadata records, ground-truth labels and query files.
//!
//! Services travel as JSON Lines with explicit field names: one object per
//! line, schema below. A record carries either the viewable angle directly
//! or the camera intrinsics it derives from, never both:
//!
//! ```text
//! {"id":"img-1","lat":-37.81,"lon":144.96,"time_s":1600000000,
//!  "dir_deg":45.0,"visd_m":120.0,"alpha_deg":60.0}
//! {"id":"img-2","lat":-37.81,"lon":144.97,"time_start_s":1600000000,
//!  "time_end_s":1600000060,"dir_deg":10.0,"visd_m":80.0,
//!  "focal_length_mm":18.0,"sensor_extent_mm":36.0}
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use mosaic_core::coverage::{
    viewable_angle, CameraIntrinsics, Coverage, ServiceId, ServiceTime,
};
use mosaic_core::features::Label;
use mosaic_core::geo::{GeoPoint, SceneQuery};
use mosaic_core::SocSenService;

/// One metadata line as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetadataRecord {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_start_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_end_s: Option<f64>,
    pub dir_deg: f64,
    pub visd_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal_length_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor_extent_mm: Option<f64>,
}

impl MetadataRecord {
    /// Validates the record into a service. The viewable angle comes either
    /// verbatim or from the intrinsics pair; exactly one form must be present.
    pub fn to_service(&self) -> Result<SocSenService<f64>, String> {
        let location =
            GeoPoint::new(self.lat, self.lon).map_err(|e| e.to_string())?;
        let time = match (self.time_s, self.time_start_s, self.time_end_s) {
            (Some(t), None, None) => ServiceTime::instant(t).map_err(|e| e.to_string())?,
            (None, Some(s), Some(e)) => {
                ServiceTime::interval(s, e).map_err(|e| e.to_string())?
            }
            _ => {
                return Err(
                    "time must be either time_s or both time_start_s and time_end_s".to_owned(),
                )
            }
        };
        let alpha = match (self.alpha_deg, self.focal_length_mm, self.sensor_extent_mm) {
            (Some(alpha), None, None) => alpha,
            (None, Some(f), Some(d)) => {
                let intrinsics = CameraIntrinsics::new(f, d).map_err(|e| e.to_string())?;
                viewable_angle(&intrinsics)
            }
            _ => {
                return Err(
                    "coverage must carry either alpha_deg or the focal_length_mm/sensor_extent_mm pair"
                        .to_owned(),
                )
            }
        };
        let coverage =
            Coverage::new(self.dir_deg, alpha, self.visd_m).map_err(|e| e.to_string())?;
        Ok(SocSenService::new(self.id.clone(), location, time, coverage))
    }

    pub fn from_service(service: &SocSenService<f64>) -> Self {
        let (time_s, time_start_s, time_end_s) = match service.time {
            ServiceTime::Instant(t) => (Some(t), None, None),
            ServiceTime::Interval { start, end } => (None, Some(start), Some(end)),
        };
        Self {
            id: service.id.to_string(),
            lat: service.location.lat,
            lon: service.location.lon,
            time_s,
            time_start_s,
            time_end_s,
            dir_deg: service.coverage.dir_deg,
            visd_m: service.coverage.visd_m,
            alpha_deg: Some(service.coverage.alpha_deg),
            focal_length_mm: None,
            sensor_extent_mm: None,
        }
    }
}

/// Ingestion result: validated services plus line-numbered rejections.
/// Accepted + rejected always adds up to the number of non-empty lines.
#[derive(Debug)]
pub struct IngestOutcome {
    pub services: Vec<SocSenService<f64>>,
    pub rejected: Vec<(usize, String)>,
    pub total_records: usize,
}

/// Parses a metadata file. Invalid lines are reported and skipped; an input
/// with zero valid records is fatal. Duplicate ids are rejected per line.
pub fn ingest_str(text: &str) -> anyhow::Result<IngestOutcome> {
    let mut services = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut total = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        total += 1;
        let outcome = serde_json::from_str::<MetadataRecord>(line)
            .map_err(|e| format!("unparseable record: {e}"))
            .and_then(|record| record.to_service());
        match outcome {
            Ok(service) => {
                if !seen.insert(service.id.clone()) {
                    rejected.push((lineno + 1, format!("duplicate id `{}`", service.id)));
                } else {
                    services.push(service);
                }
            }
            Err(reason) => rejected.push((lineno + 1, reason)),
        }
    }
    if services.is_empty() {
        bail!(
            "no valid records among {total} lines ({} rejected)",
            rejected.len()
        );
    }
    Ok(IngestOutcome {
        services,
        rejected,
        total_records: total,
    })
}

pub fn ingest(path: &Path) -> anyhow::Result<IngestOutcome> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading metadata file {}", path.display()))?;
    ingest_str(&text)
}

pub fn write_services(path: &Path, services: &[SocSenService<f64>]) -> anyhow::Result<()> {
    let mut out = String::new();
    for service in services {
        out.push_str(&serde_json::to_string(&MetadataRecord::from_service(service))?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Ground-truth composability labels keyed by the canonical (sorted) pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruthLabels {
    map: BTreeMap<(ServiceId, ServiceId), bool>,
}

impl GroundTruthLabels {
    pub fn canonical(a: &ServiceId, b: &ServiceId) -> (ServiceId, ServiceId) {
        if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        }
    }

    pub fn insert(&mut self, a: &ServiceId, b: &ServiceId, composable: bool) {
        self.map.insert(Self::canonical(a, b), composable);
    }

    pub fn get(&self, a: &ServiceId, b: &ServiceId) -> Option<bool> {
        self.map.get(&Self::canonical(a, b)).copied()
    }

    pub fn label(&self, a: &ServiceId, b: &ServiceId) -> Option<Label> {
        self.get(a, b).map(Label::from_bool)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn positive_rate(&self) -> f64 {
        if self.map.is_empty() {
            return 0.0;
        }
        self.map.values().filter(|&&v| v).count() as f64 / self.map.len() as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(ServiceId, ServiceId), &bool)> {
        self.map.iter()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelLine {
    a: String,
    b: String,
    composable: bool,
}

pub fn write_labels(path: &Path, labels: &GroundTruthLabels) -> anyhow::Result<()> {
    let mut out = String::new();
    for ((a, b), &composable) in labels.iter() {
        out.push_str(&serde_json::to_string(&LabelLine {
            a: a.to_string(),
            b: b.to_string(),
            composable,
        })?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_labels(path: &Path) -> anyhow::Result<GroundTruthLabels> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading labels file {}", path.display()))?;
    let mut labels = GroundTruthLabels::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: LabelLine = serde_json::from_str(line)
            .with_context(|| format!("labels line {}", lineno + 1))?;
        labels.insert(
            &ServiceId::from(parsed.a),
            &ServiceId::from(parsed.b),
            parsed.composable,
        );
    }
    Ok(labels)
}

/// Parses one query line: `lat lon l_m w_m t_start t_end`, whitespace
/// separated.
pub fn parse_query_line(line: &str) -> anyhow::Result<SceneQuery<f64>> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 6 {
        bail!(
            "expected 6 fields `lat lon l_m w_m t_start t_end`, found {}",
            fields.len()
        );
    }
    let nums: Vec<f64> = fields
        .iter()
        .map(|f| f.parse::<f64>().with_context(|| format!("bad number `{f}`")))
        .collect::<anyhow::Result<_>>()?;
    let center = GeoPoint::new(nums[0], nums[1])?;
    Ok(SceneQuery::new(center, nums[2], nums[3], nums[4], nums[5])?)
}

pub fn read_queries(path: &Path) -> anyhow::Result<Vec<SceneQuery<f64>>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading query file {}", path.display()))?;
    let mut queries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        queries.push(
            parse_query_line(line).with_context(|| format!("query line {}", lineno + 1))?,
        );
    }
    if queries.is_empty() {
        bail!("query file {} contains no queries", path.display());
    }
    Ok(queries)
}

pub fn write_queries(path: &Path, queries: &[SceneQuery<f64>]) -> anyhow::Result<()> {
    let mut out = String::from("# lat lon l_m w_m t_start t_end\n");
    for q in queries {
        out.push_str(&format!(
            "{} {} {} {} {} {}\n",
            q.center.lat, q.center.lon, q.half_length_m, q.half_width_m, q.t_start_s, q.t_end_s
        ));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
