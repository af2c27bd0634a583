use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid box [{x1}, {y1}, {x2}, {y2}]: coordinates must be finite with x2 >= x1 and y2 >= y1")]
    InvalidBox { x1: f64, y1: f64, x2: f64, y2: f64 },
    #[error("degenerate box: positive width and height required")]
    DegenerateBox,
    #[error("degenerate instance: full-body box has zero area")]
    DegenerateInstance,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("image {image_id}: {reason}")]
    InvalidImage {
        image_id: String,
        reason: &'static str,
    },
    #[error("image {image_id}, instance {instance}: {reason}")]
    InvalidInstance {
        image_id: String,
        instance: usize,
        reason: &'static str,
    },
    #[error("detection score {0} outside [0, 1]")]
    InvalidScore(f64),
    #[error("detections from several images passed to a per-image operation ({0} and {1})")]
    MixedImageIds(String, String),
    #[error("detections reference unknown image {0}")]
    UnknownImage(String),
    #[error("shape mismatch: expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("no ground-truth instances to evaluate")]
    EmptyGroundTruth,
    #[error("empty evaluation curve")]
    EmptyCurve,
    #[error("class label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("class probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("loss weight or component must be non-negative, got {0}")]
    Negative(f64),
}
