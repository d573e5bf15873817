//! Score detections against COCO ground truth at two confidence thresholds.

use synthscene::dataset::{CocoAnnotation, CocoDataset, CocoImage, CocoRle};
use synthscene::detmetrics::{threshold_report, Detection, IouType};
use synthscene::mask::InstanceMask;

fn rect(x: u32, y: u32, w: u32, h: u32) -> InstanceMask {
    InstanceMask::from_fn(64, 48, |px, py| px >= x && px < x + w && py >= y && py < y + h)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut gt = CocoDataset::default();
    let truth = [(1, rect(5, 5, 10, 20)), (1, rect(40, 10, 12, 30)), (2, rect(20, 8, 8, 16))];
    for id in 1..=2 {
        gt.images.push(CocoImage { id, file_name: format!("{id}.png"), width: 64, height: 48, exposure: 0.02, readout: 0.015 });
    }
    for (i, (image_id, m)) in truth.iter().enumerate() {
        let b = m.bbox()?;
        gt.annotations.push(CocoAnnotation {
            id: i as u64 + 1,
            image_id: *image_id,
            category_id: 1,
            bbox: b.to_xywh(),
            segmentation: CocoRle::from_mask(m),
            area: m.area(),
            iscrowd: 0,
        });
    }
    let det = |image_id, m: InstanceMask, score| -> Result<Detection, Box<dyn std::error::Error>> {
        Ok(Detection { image_id, category_id: 1, bbox: m.bbox()?.to_xywh(), score, segmentation: Some(CocoRle::from_mask(&m)) })
    };
    let dets = vec![
        det(1, rect(6, 5, 10, 19), 0.95)?,
        det(1, rect(40, 12, 12, 28), 0.60)?,
        det(2, rect(30, 30, 8, 8), 0.40)?,
        det(2, rect(19, 8, 9, 16), 0.03)?,
    ];
    print!("{}", threshold_report(&gt, &dets, &[IouType::Bbox, IouType::Mask], &[0.7, 0.05])?);
    Ok(())
}
