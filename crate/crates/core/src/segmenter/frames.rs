use std::path::{Path, PathBuf};

use super::{frame_features, FrameFeature, SegmentError};

/// Optional per-frame feature sidecar inside a frames directory
/// (CSV rows `time_s,h,s,v`).
pub const HSV_SIDECAR: &str = "hsv.csv";

/// Frames of one video, named `frame_<milliseconds>.<ext>`, sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameIndex {
    pub dir: PathBuf,
    pub frames: Vec<(f64, PathBuf)>,
}

fn parse_frame_name(path: &Path) -> Option<f64> {
    let stem = path.file_stem()?.to_str()?;
    let ms: u64 = stem.strip_prefix("frame_")?.parse().ok()?;
    path.extension()?;
    Some(ms as f64 / 1000.0)
}

impl FrameIndex {
    pub fn open(dir: &Path) -> Result<Self, SegmentError> {
        let media_err = |message: String| SegmentError::Media {
            path: dir.to_path_buf(),
            message,
        };
        let entries = std::fs::read_dir(dir).map_err(|e| media_err(e.to_string()))?;
        let mut frames = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| media_err(e.to_string()))?.path();
            if let Some(t) = parse_frame_name(&path) {
                frames.push((t, path));
            }
        }
        frames.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            dir: dir.to_path_buf(),
            frames,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// The frame closest to `t`, if one lies within `tolerance`.
    pub fn nearest(&self, t: f64, tolerance: f64) -> Option<(f64, &Path)> {
        let idx = self.frames.partition_point(|(ft, _)| *ft < t);
        [idx.checked_sub(1), Some(idx)]
            .into_iter()
            .flatten()
            .filter_map(|i| self.frames.get(i))
            .map(|(ft, p)| (*ft, p.as_path(), (ft - t).abs()))
            .filter(|(_, _, d)| *d <= tolerance + 1e-9)
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .map(|(ft, p, _)| (ft, p))
    }
}

/// Loads per-frame features for a frames directory, preferring the CSV
/// sidecar and otherwise decoding every frame image.
pub fn load_features(dir: &Path) -> Result<Vec<FrameFeature<f64>>, SegmentError> {
    let sidecar = dir.join(HSV_SIDECAR);
    if sidecar.is_file() {
        return read_sidecar(&sidecar);
    }
    let index = FrameIndex::open(dir)?;
    let mut frames = Vec::with_capacity(index.frames.len());
    for (t, path) in &index.frames {
        let img = image::open(path).map_err(|e| SegmentError::Media {
            path: path.clone(),
            message: e.to_string(),
        })?;
        frames.push((*t, img.to_rgb8()));
    }
    frame_features(&frames)
}

fn read_sidecar(path: &Path) -> Result<Vec<FrameFeature<f64>>, SegmentError> {
    let err = |message: String| SegmentError::Media {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    let mut out: Vec<FrameFeature<f64>> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| err(e.to_string()))?;
        // tolerate a header row
        if i == 0 && row.get(0).is_some_and(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        let vals: Vec<f64> = row
            .iter()
            .map(|c| c.parse::<f64>().map_err(|e| err(format!("row {}: {e}", i + 1))))
            .collect::<Result<_, _>>()?;
        let [t, h, s, v] = vals[..] else {
            return Err(err(format!("row {}: expected 4 columns", i + 1)));
        };
        if out.last().is_some_and(|p| p.time_s >= t) {
            return Err(err(format!("row {}: times must be strictly increasing", i + 1)));
        }
        out.push(FrameFeature {
            time_s: t,
            hsv_mean: [h, s, v],
        });
    }
    Ok(out)
}
