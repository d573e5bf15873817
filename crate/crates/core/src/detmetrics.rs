//! Box and mask detection metrics: IoU, greedy matching, interpolated
//! precision-recall and AP over IoU thresholds.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CocoDataset, CocoRle, PERSON_CATEGORY};
use crate::mask::{BBox, InstanceMask};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("detection {index} references unknown image {image_id}")]
    UnknownImage { index: usize, image_id: u64 },
    #[error("detection {index} has category {category}, only person ({PERSON_CATEGORY}) is evaluated")]
    BadCategory { index: usize, category: u32 },
    #[error("detection {index}: {message}")]
    InvalidDetection { index: usize, message: String },
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IouType {
    Bbox,
    Mask,
}

impl fmt::Display for IouType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IouType::Bbox => "bbox",
            IouType::Mask => "mask",
        })
    }
}

/// One prediction in the COCO results layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: u64,
    pub category_id: u32,
    pub bbox: [f64; 4],
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segmentation: Option<CocoRle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub iou_type: IouType,
    pub iou_thresholds: Vec<f64>,
    /// Detections scoring below this are dropped before matching.
    pub score_threshold: f64,
    pub max_detections: usize,
    pub recall_points: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_type: IouType::Bbox,
            iou_thresholds: (0..10).map(|i| 0.5 + 0.05 * i as f64).collect(),
            score_threshold: 0.0,
            max_detections: 100,
            recall_points: 101,
        }
    }
}

impl EvalConfig {
    pub fn with(iou_type: IouType, score_threshold: f64) -> Self {
        EvalConfig {
            iou_type,
            score_threshold,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidConfig(m));
        let t = &self.iou_thresholds;
        if t.is_empty() || t.iter().any(|&x| !(x > 0.0 && x <= 1.0)) || t.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("IoU thresholds {t:?} must be strictly increasing in (0, 1]"));
        }
        if !t.iter().any(|&x| (x - 0.5).abs() < 1e-12) {
            return bad("IoU thresholds must include 0.5".into());
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return bad(format!("score threshold {} outside [0, 1]", self.score_threshold));
        }
        if self.recall_points < 2 {
            return bad("need at least 2 recall points".into());
        }
        if self.max_detections == 0 {
            return bad("max detections must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub iou_threshold: f64,
    /// Recall and raw precision after each ranked detection.
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
    /// Envelope precision at the interpolation recall points.
    pub interpolated: Vec<f64>,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// Mean AP over the IoU thresholds.
    pub ap: f64,
    /// AP at IoU 0.5.
    pub ap50: f64,
    pub curves: Vec<PrCurve>,
}

fn bbox_area(b: &[f64; 4]) -> f64 {
    b[2].max(0.0) * b[3].max(0.0)
}

/// IoU of two `[x, y, w, h]` boxes; 0 when the union is empty.
pub fn iou_xywh(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let iw = ((a[0] + a[2]).min(b[0] + b[2]) - a[0].max(b[0])).max(0.0);
    let ih = ((a[1] + a[3]).min(b[1] + b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    let union = bbox_area(a) + bbox_area(b) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

pub fn iou_bbox(a: &BBox, b: &BBox) -> f64 {
    iou_xywh(&a.to_xywh(), &b.to_xywh())
}

/// `|a & b| / |a | b|`, defined as 0 when both are empty.
pub fn iou_mask(a: &InstanceMask, b: &InstanceMask) -> Result<f64, crate::mask::MaskError> {
    let inter = a.intersection_area(b)?;
    let union = a.area() + b.area() - inter;
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

struct ImageEval {
    /// Detection input indices, ranked.
    dets: Vec<usize>,
    /// `ious[d][g]` for ranked detection `d` and ground truth `g`.
    ious: Vec<Vec<f64>>,
    n_gt: usize,
}

fn check_detections(gt: &CocoDataset, dets: &[Detection], cfg: &EvalConfig) -> Result<(), EvalError> {
    let images: HashMap<u64, (u32, u32)> = gt.images.iter().map(|i| (i.id, (i.width, i.height))).collect();
    for (index, d) in dets.iter().enumerate() {
        let Some(&(w, h)) = images.get(&d.image_id) else {
            return Err(EvalError::UnknownImage {
                index,
                image_id: d.image_id,
            });
        };
        if d.category_id != PERSON_CATEGORY {
            return Err(EvalError::BadCategory {
                index,
                category: d.category_id,
            });
        }
        let invalid = |message: String| Err(EvalError::InvalidDetection { index, message });
        if !(d.score.is_finite() && (0.0..=1.0).contains(&d.score)) {
            return invalid(format!("score {} outside [0, 1]", d.score));
        }
        if d.bbox.iter().any(|v| !v.is_finite()) || d.bbox[2] < 0.0 || d.bbox[3] < 0.0 {
            return invalid(format!("bad bbox {:?}", d.bbox));
        }
        match &d.segmentation {
            Some(s) if s.size != [h, w] => return invalid(format!("mask size {:?} for a {w}x{h} image", s.size)),
            Some(s) => {
                s.to_mask().map_err(|e| EvalError::InvalidDetection {
                    index,
                    message: e.to_string(),
                })?;
            }
            None if cfg.iou_type == IouType::Mask => return invalid("mask evaluation needs a segmentation".into()),
            None => {}
        }
    }
    Ok(())
}

fn prepare(gt: &CocoDataset, dets: &[Detection], cfg: &EvalConfig) -> Result<Vec<ImageEval>, EvalError> {
    let mut by_image: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, d) in dets.iter().enumerate() {
        if d.score >= cfg.score_threshold {
            by_image.entry(d.image_id).or_default().push(i);
        }
    }
    let mut gts: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, a) in gt.annotations.iter().enumerate() {
        if a.category_id == PERSON_CATEGORY {
            gts.entry(a.image_id).or_default().push(i);
        }
    }
    gt.images
        .par_iter()
        .map(|im| {
            let mut ranked = by_image.get(&im.id).cloned().unwrap_or_default();
            ranked.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));
            ranked.truncate(cfg.max_detections);
            let g = gts.get(&im.id).map(Vec::as_slice).unwrap_or(&[]);
            let ious = match cfg.iou_type {
                IouType::Bbox => ranked
                    .iter()
                    .map(|&d| g.iter().map(|&a| iou_xywh(&dets[d].bbox, &gt.annotations[a].bbox)).collect())
                    .collect(),
                IouType::Mask => {
                    let gm = g
                        .iter()
                        .map(|&a| gt.annotations[a].segmentation.to_mask())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| EvalError::InvalidConfig(format!("ground truth: {e}")))?;
                    ranked
                        .iter()
                        .map(|&d| {
                            let dm = dets[d].segmentation.as_ref().expect("checked").to_mask().expect("checked");
                            gm.iter().map(|m| iou_mask(&dm, m).expect("checked dims")).collect()
                        })
                        .collect()
                }
            };
            Ok(ImageEval {
                dets: ranked,
                ious,
                n_gt: g.len(),
            })
        })
        .collect()
}

/// Each ranked detection takes the unmatched ground truth of highest IoU at
/// or above `threshold` (lowest index on ties). Returns per-detection hits.
fn greedy_match(ious: &[Vec<f64>], n_gt: usize, threshold: f64) -> Vec<bool> {
    let mut taken = vec![false; n_gt];
    ious.iter()
        .map(|row| {
            let mut best: Option<(usize, f64)> = None;
            for (g, &v) in row.iter().enumerate() {
                if !taken[g] && v >= threshold && best.is_none_or(|(_, b)| v > b) {
                    best = Some((g, v));
                }
            }
            if let Some((g, _)) = best {
                taken[g] = true;
            }
            best.is_some()
        })
        .collect()
}

fn curve(images: &[ImageEval], dets: &[Detection], threshold: f64, recall_points: usize) -> PrCurve {
    let n_gt: usize = images.iter().map(|i| i.n_gt).sum();
    let mut ranked: Vec<(usize, bool)> = images
        .iter()
        .flat_map(|im| im.dets.iter().copied().zip(greedy_match(&im.ious, im.n_gt, threshold)))
        .collect();
    ranked.sort_by(|a, b| dets[b.0].score.total_cmp(&dets[a.0].score).then(a.0.cmp(&b.0)));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut recall = Vec::with_capacity(ranked.len());
    let mut precision = Vec::with_capacity(ranked.len());
    for (_, hit) in &ranked {
        if *hit {
            tp += 1;
        } else {
            fp += 1;
        }
        recall.push(if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 });
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    let mut envelope = precision.clone();
    for i in (1..envelope.len()).rev() {
        envelope[i - 1] = envelope[i - 1].max(envelope[i]);
    }
    let interpolated: Vec<f64> = (0..recall_points)
        .map(|j| {
            let r = j as f64 / (recall_points - 1) as f64;
            let i = recall.partition_point(|&x| x < r);
            if n_gt > 0 && i < envelope.len() {
                envelope[i]
            } else {
                0.0
            }
        })
        .collect();
    let ap = interpolated.iter().sum::<f64>() / recall_points as f64;
    PrCurve {
        iou_threshold: threshold,
        recall,
        precision,
        interpolated,
        ap,
    }
}

/// Evaluates person detections against `gt`. Images without ground truth
/// contribute only false positives; with no ground truth at all AP is 0.
pub fn evaluate(gt: &CocoDataset, dets: &[Detection], cfg: &EvalConfig) -> Result<EvalResult, EvalError> {
    cfg.validate()?;
    check_detections(gt, dets, cfg)?;
    let images = prepare(gt, dets, cfg)?;
    let curves: Vec<PrCurve> = cfg
        .iou_thresholds
        .par_iter()
        .map(|&t| curve(&images, dets, t, cfg.recall_points))
        .collect();
    let ap = curves.iter().map(|c| c.ap).sum::<f64>() / curves.len() as f64;
    let ap50 = curves
        .iter()
        .find(|c| (c.iou_threshold - 0.5).abs() < 1e-12)
        .map(|c| c.ap)
        .expect("validated");
    Ok(EvalResult { ap, ap50, curves })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub task: IouType,
    pub score_threshold: f64,
    pub ap: f64,
    pub ap50: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub rows: Vec<ReportRow>,
}

impl fmt::Display for ThresholdReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<6} {:>6} {:>8} {:>8}", "task", "thr", "AP", "AP50")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<6} {:>6.2} {:>8.4} {:>8.4}",
                r.task.to_string(),
                r.score_threshold,
                r.ap,
                r.ap50
            )?;
        }
        Ok(())
    }
}

/// Runs [`evaluate`] for every task and score threshold.
pub fn threshold_report(
    gt: &CocoDataset,
    dets: &[Detection],
    tasks: &[IouType],
    thresholds: &[f64],
) -> Result<ThresholdReport, EvalError> {
    let mut rows = Vec::new();
    for &task in tasks {
        for &thr in thresholds {
            let r = evaluate(gt, dets, &EvalConfig::with(task, thr))?;
            rows.push(ReportRow {
                task,
                score_threshold: thr,
                ap: r.ap,
                ap50: r.ap50,
            });
        }
    }
    Ok(ThresholdReport { rows })
}

pub fn detections_from_json(text: &str, path: &str) -> Result<Vec<Detection>, EvalError> {
    serde_json::from_str(text).map_err(|e| EvalError::Parse {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn read_detections(path: impl AsRef<Path>) -> Result<Vec<Detection>, EvalError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    detections_from_json(&text, &path.display().to_string())
}

pub fn write_detections(path: impl AsRef<Path>, dets: &[Detection]) -> Result<(), EvalError> {
    let path = path.as_ref();
    let mut s = serde_json::to_string(dets).expect("detections serialize");
    s.push('\n');
    std::fs::write(path, s).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// The ground truth as score-1 detections.
pub fn detections_from_ground_truth(gt: &CocoDataset) -> Vec<Detection> {
    gt.annotations
        .iter()
        .map(|a| Detection {
            image_id: a.image_id,
            category_id: a.category_id,
            bbox: a.bbox,
            score: 1.0,
            segmentation: Some(a.segmentation.clone()),
        })
        .collect()
}
