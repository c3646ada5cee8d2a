//! File formats: score files (CSV and JSONL), event files (JSON), sample
//! sets (JSONL), feature matrices (binary container with JSON sidecar, or
//! CSV for tiny tests), and the atomic-write primitive everything uses.
//!
//! Floats are serialized with the shortest representation that round-trips
//! exactly, so write-then-read is always bit-identical.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::scorer::FeatureSequence;
use crate::timeline::{EventInterval, ScoreTimeline};
use crate::{Error, Result};

/// Writes `bytes` to `path` via a temp file in the same directory plus an
/// atomic rename; a failed write never leaves a partial file behind.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn malformed(path: &Path, message: impl Into<String>) -> Error {
    Error::Malformed { path: path.display().to_string(), message: message.into() }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| malformed(path, e.to_string()))
}

// ---- score files -----------------------------------------------------------

/// One video's scores in JSONL form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub video: String,
    pub scores: Vec<f64>,
    pub stride: u32,
    pub fps: f64,
}

impl ScoreRecord {
    pub fn from_timeline(video: impl Into<String>, t: &ScoreTimeline) -> Self {
        ScoreRecord {
            video: video.into(),
            scores: t.scores.clone(),
            stride: t.stride,
            fps: t.fps,
        }
    }

    pub fn timeline(&self) -> Result<ScoreTimeline> {
        ScoreTimeline::new(self.scores.clone(), self.stride, self.fps)
    }
}

/// CSV score file: one score per line, nothing else.
pub fn write_scores_csv(path: &Path, t: &ScoreTimeline) -> Result<()> {
    let mut out = String::new();
    for s in &t.scores {
        out.push_str(&format!("{s}\n"));
    }
    atomic_write(path, out.as_bytes())
}

pub fn read_scores_csv(path: &Path, stride: u32, fps: f64) -> Result<ScoreTimeline> {
    let text = read_to_string(path)?;
    let mut scores = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| malformed(path, format!("line {}: not a number: {line:?}", lineno + 1)))?;
        scores.push(v);
    }
    ScoreTimeline::new(scores, stride, fps)
}

pub fn write_scores_jsonl(path: &Path, records: &[ScoreRecord]) -> Result<()> {
    atomic_write(path, jsonl(records)?.as_bytes())
}

pub fn read_scores_jsonl(path: &Path) -> Result<Vec<ScoreRecord>> {
    let records: Vec<ScoreRecord> = parse_jsonl(path)?;
    for r in &records {
        r.timeline()?;
    }
    Ok(records)
}

// ---- event files -----------------------------------------------------------

/// Event file: a JSON array of {start_s, end_s, label}.
pub fn write_events(path: &Path, events: &[EventInterval]) -> Result<()> {
    atomic_write(path, serde_json::to_string_pretty(events)?.as_bytes())
}

pub fn read_events(path: &Path) -> Result<Vec<EventInterval>> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| malformed(path, e.to_string()))
}

// ---- label files -----------------------------------------------------------

/// One video's binary frame labels in JSONL form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub video: String,
    pub labels: Vec<u8>,
}

pub fn write_labels_jsonl(path: &Path, records: &[LabelRecord]) -> Result<()> {
    atomic_write(path, jsonl(records)?.as_bytes())
}

pub fn read_labels_jsonl(path: &Path) -> Result<Vec<LabelRecord>> {
    let records: Vec<LabelRecord> = parse_jsonl(path)?;
    for r in &records {
        if let Some(bad) = r.labels.iter().find(|&&l| l > 1) {
            return Err(malformed(path, format!("{}: label {bad} is not 0/1", r.video)));
        }
    }
    Ok(records)
}

// ---- sample sets -----------------------------------------------------------

/// One video's sampled frame indices in JSONL form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub video: String,
    pub indices: Vec<usize>,
    pub sampler: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub n: usize,
}

pub fn write_samples_jsonl(path: &Path, records: &[SampleRecord]) -> Result<()> {
    atomic_write(path, jsonl(records)?.as_bytes())
}

pub fn read_samples_jsonl(path: &Path) -> Result<Vec<SampleRecord>> {
    parse_jsonl(path)
}

// ---- feature files ---------------------------------------------------------

const FEATURE_MAGIC: &[u8; 4] = b"VAUF";
const FEATURE_VERSION: u32 = 1;
const DTYPE_F32: u32 = 1;

#[derive(Serialize, Deserialize)]
struct FeatureSidecar {
    version: u32,
    video: String,
    t: usize,
    d: usize,
    dtype: String,
}

/// Binary feature container: header {magic, version, T, D, dtype, video id}
/// followed by T*D little-endian f32 values, with a JSON sidecar at
/// `<path>.json`. Values are stored as f32, so a write-read roundtrip
/// quantizes to f32 precision.
pub fn write_features(path: &Path, f: &FeatureSequence) -> Result<()> {
    let (t, d) = (f.features.nrows(), f.features.ncols());
    let id = f.video.as_bytes();
    let mut blob = Vec::with_capacity(24 + id.len() + t * d * 4);
    blob.extend_from_slice(FEATURE_MAGIC);
    blob.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    blob.extend_from_slice(&(t as u32).to_le_bytes());
    blob.extend_from_slice(&(d as u32).to_le_bytes());
    blob.extend_from_slice(&DTYPE_F32.to_le_bytes());
    blob.extend_from_slice(&(id.len() as u32).to_le_bytes());
    blob.extend_from_slice(id);
    for &x in f.features.iter() {
        blob.extend_from_slice(&(x as f32).to_le_bytes());
    }
    let sidecar = FeatureSidecar {
        version: FEATURE_VERSION,
        video: f.video.clone(),
        t,
        d,
        dtype: "f32".into(),
    };
    atomic_write(path, &blob)?;
    atomic_write(&sidecar_path(path), serde_json::to_string_pretty(&sidecar)?.as_bytes())
}

pub fn read_features(path: &Path) -> Result<FeatureSequence> {
    let blob = std::fs::read(path).map_err(|e| malformed(path, e.to_string()))?;
    let mut cur = 0usize;
    let take = |cur: &mut usize, n: usize| -> Result<&[u8]> {
        let end = *cur + n;
        let s = blob
            .get(*cur..end)
            .ok_or_else(|| malformed(path, "truncated feature file"))?;
        *cur = end;
        Ok(s)
    };
    if take(&mut cur, 4)? != FEATURE_MAGIC.as_slice() {
        return Err(malformed(path, "bad magic, not a feature file"));
    }
    let read_u32 = |cur: &mut usize| -> Result<u32> {
        Ok(u32::from_le_bytes(take(cur, 4)?.try_into().unwrap()))
    };
    let version = read_u32(&mut cur)?;
    if version != FEATURE_VERSION {
        return Err(malformed(path, format!("unsupported feature file version {version}")));
    }
    let t = read_u32(&mut cur)? as usize;
    let d = read_u32(&mut cur)? as usize;
    let dtype = read_u32(&mut cur)?;
    if dtype != DTYPE_F32 {
        return Err(malformed(path, format!("unsupported dtype tag {dtype}")));
    }
    let id_len = read_u32(&mut cur)? as usize;
    let video = String::from_utf8(take(&mut cur, id_len)?.to_vec())
        .map_err(|_| malformed(path, "video id is not UTF-8"))?;
    let data = take(&mut cur, t * d * 4)?;
    if cur != blob.len() {
        return Err(malformed(path, "trailing bytes after feature data"));
    }
    let values: Vec<f64> = data
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    let features = Array2::from_shape_vec((t, d), values)
        .map_err(|e| malformed(path, e.to_string()))?;
    FeatureSequence::new(video, features)
}

/// CSV fallback for tiny tests: one row per frame, comma-separated values.
/// The video id is the file stem.
pub fn read_features_csv(path: &Path) -> Result<FeatureSequence> {
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|v| {
                v.trim().parse().map_err(|_| {
                    malformed(path, format!("line {}: not a number: {v:?}", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(malformed(
                    path,
                    format!("line {}: expected {} columns, got {}", lineno + 1, first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(malformed(path, "empty feature file"));
    }
    let (t, d) = (rows.len(), rows[0].len());
    let features = Array2::from_shape_vec((t, d), rows.into_iter().flatten().collect())
        .expect("ragged rows rejected above");
    let video = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    FeatureSequence::new(video, features)
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

// ---- JSONL helpers ---------------------------------------------------------

/// Serializes records as JSON Lines.
pub fn jsonl<T: Serialize>(records: &[T]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a JSON Lines file, reporting the offending line on error.
pub fn parse_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = read_to_string(path)?;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(line)
            .map_err(|e| malformed(path, format!("line {}: {e}", lineno + 1)))?;
        records.push(r);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn awkward_scores() -> Vec<f64> {
        // Values with no short decimal representation.
        vec![0.1, 1.0 / 3.0, 0.7f64.sqrt(), 1e-300, 1.0 - 1e-16, 0.0, 1.0]
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        let t = ScoreTimeline::new(awkward_scores(), 16, 24.0).unwrap();
        write_scores_csv(&path, &t).unwrap();
        let back = read_scores_csv(&path, 16, 24.0).unwrap();
        assert_eq!(t.scores, back.scores);
    }

    #[test]
    fn jsonl_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.jsonl");
        let records = vec![
            ScoreRecord { video: "a".into(), scores: awkward_scores(), stride: 16, fps: 24.0 },
            ScoreRecord { video: "b".into(), scores: vec![0.25], stride: 8, fps: 30.0 },
        ];
        write_scores_jsonl(&path, &records).unwrap();
        assert_eq!(read_scores_jsonl(&path).unwrap(), records);
    }

    #[test]
    fn csv_and_jsonl_agree() {
        let dir = tempfile::tempdir().unwrap();
        let t = ScoreTimeline::new(awkward_scores(), 16, 24.0).unwrap();
        let csv = dir.path().join("s.csv");
        let jl = dir.path().join("s.jsonl");
        write_scores_csv(&csv, &t).unwrap();
        write_scores_jsonl(&jl, &[ScoreRecord::from_timeline("v", &t)]).unwrap();
        let a = read_scores_csv(&csv, 16, 24.0).unwrap();
        let b = read_scores_jsonl(&jl).unwrap()[0].timeline().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_csv_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "0.5\nnope\n").unwrap();
        let err = read_scores_csv(&path, 16, 24.0).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("bad.csv"));
    }

    #[test]
    fn out_of_range_scores_rejected_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "0.5\n1.5\n").unwrap();
        assert!(read_scores_csv(&path, 16, 24.0).is_err());
    }

    #[test]
    fn events_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.json");
        let events = vec![
            EventInterval::new(5.583, 24.542, "Explosion"),
            EventInterval::new(30.0, 31.5, "Fighting"),
        ];
        write_events(&path, &events).unwrap();
        assert_eq!(read_events(&path).unwrap(), events);
    }

    #[test]
    fn samples_roundtrip_and_optional_tau() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.jsonl");
        let records = vec![
            SampleRecord { video: "a".into(), indices: vec![0, 5, 9], sampler: "ats".into(), tau: Some(0.1), n: 3 },
            SampleRecord { video: "b".into(), indices: vec![2], sampler: "topk".into(), tau: None, n: 1 },
        ];
        write_samples_jsonl(&path, &records).unwrap();
        assert_eq!(read_samples_jsonl(&path).unwrap(), records);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.lines().nth(1).unwrap().contains("tau"));
    }

    #[test]
    fn feature_binary_roundtrip_quantizes_to_f32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v1.feat");
        let f = FeatureSequence::new("v1", array![[0.1, -2.5], [1.0 / 3.0, 4.0]]).unwrap();
        write_features(&path, &f).unwrap();
        let back = read_features(&path).unwrap();
        assert_eq!(back.video, "v1");
        for (a, b) in f.features.iter().zip(back.features.iter()) {
            assert_eq!(*a as f32, *b as f32);
            assert_eq!(*b, (*a as f32) as f64);
        }
        assert!(sidecar_path(&path).exists());
    }

    #[test]
    fn feature_csv_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.csv");
        std::fs::write(&path, "0.5, 1.0\n-1.0, 2.0\n").unwrap();
        let f = read_features_csv(&path).unwrap();
        assert_eq!(f.video, "tiny");
        assert_eq!(f.features, array![[0.5, 1.0], [-1.0, 2.0]]);
        std::fs::write(&path, "0.5, 1.0\n-1.0\n").unwrap();
        assert!(read_features_csv(&path).unwrap_err().to_string().contains("line 2"));
    }

    #[test]
    fn truncated_feature_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.feat");
        let f = FeatureSequence::new("v", array![[1.0, 2.0]]).unwrap();
        write_features(&path, &f).unwrap();
        let mut blob = std::fs::read(&path).unwrap();
        blob.truncate(blob.len() - 2);
        std::fs::write(&path, blob).unwrap();
        assert!(read_features(&path).unwrap_err().to_string().contains("truncated"));
    }

    #[test]
    fn atomic_write_replaces_existing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        atomic_write(&path, b"first").unwrap();
        atomic_write(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        // No stray temp files left behind.
        let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(entries.len(), 1);
    }
}
