//! JSON-lines annotation (`.odann`) and detection (`.oddet`) files.
//!
//! Annotation line:
//!
//! ```text
//! {"ID": "img", "width": 640, "height": 480,
//!  "gtboxes": [{"fbox": [x1,y1,x2,y2], "vbox": [...]|null, "hbox": [...]|null, "ignore": 0|1}]}
//! ```
//!
//! Detection line:
//!
//! ```text
//! {"ID": "img", "dtboxes": [{"box": [x1,y1,x2,y2], "score": 0.93}]}
//! ```
//!
//! Boxes are corner-format floats. Unknown fields are ignored. Blank lines are
//! skipped.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crowdped_core::annotation::{Detection, ImageAnnotation, Instance};
use crowdped_core::BBox;

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct RawGtBox {
    fbox: [f64; 4],
    #[serde(default)]
    vbox: Option<[f64; 4]>,
    #[serde(default)]
    hbox: Option<[f64; 4]>,
    #[serde(default)]
    ignore: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawAnnotation {
    #[serde(rename = "ID")]
    id: String,
    width: u32,
    height: u32,
    #[serde(default)]
    gtboxes: Vec<RawGtBox>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDetBox {
    #[serde(rename = "box")]
    bbox: [f64; 4],
    score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDetections {
    #[serde(rename = "ID")]
    id: String,
    #[serde(default)]
    dtboxes: Vec<RawDetBox>,
}

/// Detections of one image, as stored on one line.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDetections {
    pub image_id: String,
    pub detections: Vec<Detection>,
}

impl ImageDetections {
    pub fn new(image_id: impl Into<String>, detections: Vec<Detection>) -> Self {
        Self {
            image_id: image_id.into(),
            detections,
        }
    }
}

pub fn flatten(groups: &[ImageDetections]) -> Vec<Detection> {
    groups
        .iter()
        .flat_map(|g| g.detections.iter().cloned())
        .collect()
}

fn instance_box(
    raw: [f64; 4],
    image_id: &str,
    instance: usize,
    reason: &'static str,
) -> crowdped_core::Result<BBox> {
    BBox::try_from(raw).map_err(|_| crowdped_core::Error::InvalidInstance {
        image_id: image_id.to_owned(),
        instance,
        reason,
    })
}

fn convert_annotation(raw: RawAnnotation) -> crowdped_core::Result<ImageAnnotation> {
    let mut ann = ImageAnnotation::new(raw.id, raw.width, raw.height);
    for (id, g) in raw.gtboxes.into_iter().enumerate() {
        let full = instance_box(g.fbox, &ann.image_id, id, "invalid fbox")?;
        let mut inst = Instance::new(id, full);
        inst.visible = g
            .vbox
            .map(|v| instance_box(v, &ann.image_id, id, "invalid vbox"))
            .transpose()?;
        inst.head = g
            .hbox
            .map(|v| instance_box(v, &ann.image_id, id, "invalid hbox"))
            .transpose()?;
        inst.ignore = match g.ignore {
            0 => false,
            1 => true,
            _ => {
                return Err(crowdped_core::Error::InvalidInstance {
                    image_id: ann.image_id,
                    instance: id,
                    reason: "ignore must be 0 or 1",
                })
            }
        };
        inst.clip_visible_to_full();
        ann.instances.push(inst);
    }
    ann.validate()?;
    Ok(ann)
}

fn for_each_line<R: BufRead>(
    reader: R,
    mut f: impl FnMut(usize, &str) -> Result<()>,
) -> Result<()> {
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        f(i + 1, &line)?;
    }
    Ok(())
}

pub fn parse_annotations<R: BufRead>(reader: R) -> Result<Vec<ImageAnnotation>> {
    let mut out = Vec::new();
    for_each_line(reader, |line, text| {
        let raw: RawAnnotation =
            serde_json::from_str(text).map_err(|source| Error::Json { line, source })?;
        out.push(convert_annotation(raw).map_err(|source| Error::Invalid { line, source })?);
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_annotations_str(text: &str) -> Result<Vec<ImageAnnotation>> {
    parse_annotations(text.as_bytes())
}

fn annotation_to_raw(ann: &ImageAnnotation) -> RawAnnotation {
    RawAnnotation {
        id: ann.image_id.clone(),
        width: ann.width,
        height: ann.height,
        gtboxes: ann
            .instances
            .iter()
            .map(|i| RawGtBox {
                fbox: i.full.to_array(),
                vbox: i.visible.map(|b| b.to_array()),
                hbox: i.head.map(|b| b.to_array()),
                ignore: u8::from(i.ignore),
            })
            .collect(),
    }
}

pub fn write_annotations<W: Write>(mut writer: W, annotations: &[ImageAnnotation]) -> Result<()> {
    for ann in annotations {
        serde_json::to_writer(&mut writer, &annotation_to_raw(ann))?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io("<stream>", e))?;
    }
    Ok(())
}

pub fn annotations_to_string(annotations: &[ImageAnnotation]) -> String {
    let mut buf = Vec::new();
    write_annotations(&mut buf, annotations).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn parse_detections<R: BufRead>(reader: R) -> Result<Vec<ImageDetections>> {
    let mut out = Vec::new();
    for_each_line(reader, |line, text| {
        let raw: RawDetections =
            serde_json::from_str(text).map_err(|source| Error::Json { line, source })?;
        let detections = raw
            .dtboxes
            .into_iter()
            .map(|d| {
                let bbox = BBox::try_from(d.bbox)?;
                Detection::new(raw.id.as_str(), bbox, d.score)
            })
            .collect::<crowdped_core::Result<Vec<_>>>()
            .map_err(|source| Error::Invalid { line, source })?;
        out.push(ImageDetections::new(raw.id, detections));
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_detections_str(text: &str) -> Result<Vec<ImageDetections>> {
    parse_detections(text.as_bytes())
}

pub fn write_detections<W: Write>(mut writer: W, groups: &[ImageDetections]) -> Result<()> {
    for g in groups {
        let raw = RawDetections {
            id: g.image_id.clone(),
            dtboxes: g
                .detections
                .iter()
                .map(|d| RawDetBox {
                    bbox: d.bbox.to_array(),
                    score: d.score,
                })
                .collect(),
        };
        serde_json::to_writer(&mut writer, &raw)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io("<stream>", e))?;
    }
    Ok(())
}

pub fn detections_to_string(groups: &[ImageDetections]) -> String {
    let mut buf = Vec::new();
    write_detections(&mut buf, groups).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Boxes written as one annotation line per group, e.g. anchors of one pyramid
/// level, for inspection with annotation tooling.
pub fn boxes_as_annotation(
    id: impl Into<String>,
    width: u32,
    height: u32,
    boxes: &[BBox],
) -> ImageAnnotation {
    let mut ann = ImageAnnotation::new(id, width, height);
    ann.instances = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| Instance::new(i, *b))
        .collect();
    ann
}
