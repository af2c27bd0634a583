//! Subcommands of the `crowdped` tool.
//!
//! Each subcommand has a library entry point that takes parsed inputs and
//! returns plain values; the `run_*` wrappers only add file IO. Per-image work
//! runs on the current rayon pool and is collected in input order, so results
//! do not depend on the thread count.

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crowdped_core::anchors::{self, DEFAULT_STRIDES};
use crowdped_core::annotation::{ImageAnnotation, SubsetSpec};
use crowdped_core::augmentation::{apply_occlusion, plan_occlusion, OcclusionPlan, RasterImage};
use crowdped_core::evaluation::{
    self, log_average_miss_rate, match_annotated_image, sweep_curve, DatasetEvaluation,
};
use crowdped_core::postprocess::{self, DEFAULT_NMS_IOU, DEFAULT_TOP_K};
use crowdped_core::sampling::{
    compare_criteria, jitter_indexed, JitterConfig, MatchConfig, SampleStats,
};
use crowdped_core::synthetic::{synthesize_image, MockDetectorConfig, SceneConfig};
use crowdped_core::{derive_seed, BBox};

use crate::error::{Error, Result};
use crate::formats::{self, ImageDetections};
use crate::raster;

#[derive(Debug, Parser)]
#[command(
    name = "crowdped",
    version,
    about = "Occluded-pedestrian detection tooling: evaluation, postprocessing, sampling and augmentation",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Worker threads for per-image work (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Log-average miss rate (MR-2) of a detection file against annotations.
    Eval(EvalArgs),
    /// NMS followed by top-k truncation, per image.
    Postprocess(PostprocessArgs),
    /// Positive-sample statistics of proposals under strict and baseline matching.
    MatchStats(MatchStatsArgs),
    /// Jittered copies of every ground truth.
    Jitter(JitterArgs),
    /// Occlusion-simulated augmentation of PPM rasters.
    Augment(AugmentArgs),
    /// Dump the anchor lattice as annotation lines, one per pyramid level.
    Anchors(AnchorsArgs),
    /// Generate synthetic crowd scenes and mock detections.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubsetName {
    Reasonable,
    Heavy,
    All,
    Custom,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ann: PathBuf,
    #[arg(long)]
    pub det: PathBuf,
    #[arg(long, value_enum, default_value = "reasonable")]
    pub subset: SubsetName,
    /// Minimum full-box height for `--subset custom`.
    #[arg(long)]
    pub min_height: Option<f64>,
    /// Lower occlusion bound for `--subset custom`.
    #[arg(long)]
    pub occ_lo: Option<f64>,
    /// Upper (exclusive) occlusion bound for `--subset custom`.
    #[arg(long)]
    pub occ_hi: Option<f64>,
    #[arg(long, default_value_t = evaluation::DEFAULT_MATCH_IOU)]
    pub iou: f64,
    /// Also write the full curve as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PostprocessArgs {
    #[arg(long)]
    pub det: PathBuf,
    #[arg(long, default_value_t = DEFAULT_NMS_IOU)]
    pub nms_iou: f64,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatchStatsArgs {
    #[arg(long)]
    pub ann: PathBuf,
    /// Proposals in detection-file format (scores are ignored).
    #[arg(long)]
    pub proposals: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub jitter_count: usize,
    #[arg(long, default_value_t = 0.2)]
    pub jitter_amplitude: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct JitterArgs {
    #[arg(long)]
    pub ann: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 0.2)]
    pub amplitude: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub ann: PathBuf,
    /// Directory holding `<ID>.ppm` for every annotated image.
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub probability: f64,
    /// Fill color as `r,g,b` (default: ImageNet mean).
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub fill: Option<Vec<f32>>,
}

#[derive(Debug, Args)]
pub struct AnchorsArgs {
    #[arg(long)]
    pub width: u32,
    #[arg(long)]
    pub height: u32,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_STRIDES)]
    pub strides: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = anchors::PEDESTRIAN_RATIOS)]
    pub ratios: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// JSON file with `scene`, `detector` and `images` keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of images (overrides the config).
    #[arg(long)]
    pub images: Option<usize>,
    /// Also write one PPM raster per scene under `<out-dir>/images`.
    #[arg(long)]
    pub rasters: bool,
}

pub fn subset_spec(args: &EvalArgs) -> Result<SubsetSpec> {
    match args.subset {
        SubsetName::Reasonable => Ok(SubsetSpec::REASONABLE),
        SubsetName::Heavy => Ok(SubsetSpec::HEAVY),
        SubsetName::All => Ok(SubsetSpec::ALL),
        SubsetName::Custom => match (args.min_height, args.occ_lo, args.occ_hi) {
            (Some(h), Some(lo), Some(hi)) => {
                SubsetSpec::new(h, lo, hi).map_err(|e| Error::Argument(e.to_string()))
            }
            _ => Err(Error::Argument(
                "--subset custom needs --min-height, --occ-lo and --occ-hi".into(),
            )),
        },
    }
}

fn read_text(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn read_annotations(path: &Path) -> Result<Vec<ImageAnnotation>> {
    formats::parse_annotations(read_text(path)?)
}

pub fn read_detections(path: &Path) -> Result<Vec<ImageDetections>> {
    formats::parse_detections(read_text(path)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Detections regrouped in annotation order; images without detections get an
/// empty list. Unknown image ids are an error.
fn align_detections(
    annotations: &[ImageAnnotation],
    groups: &[ImageDetections],
) -> Result<Vec<Vec<crowdped_core::annotation::Detection>>> {
    let flat = formats::flatten(groups);
    Ok(evaluation::group_detections(annotations, &flat)?)
}

// ---------------------------------------------------------------------------
// eval

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub fppi: f64,
    pub miss_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mr2: f64,
    pub points: Vec<ReferencePoint>,
    pub subset: SubsetSpec,
    pub iou: f64,
    pub num_images: usize,
    pub num_ground_truth: usize,
}

impl EvalReport {
    pub fn new(eval: &DatasetEvaluation, subset: SubsetSpec, iou: f64) -> Self {
        Self {
            mr2: eval.result.mr2,
            points: eval
                .result
                .reference_fppi
                .iter()
                .zip(eval.result.miss_rates)
                .map(|(&fppi, miss_rate)| ReferencePoint { fppi, miss_rate })
                .collect(),
            subset,
            iou,
            num_images: eval.curve.num_images,
            num_ground_truth: eval.curve.num_ground_truth,
        }
    }
}

/// Parallel counterpart of [`evaluation::evaluate_dataset_curve`].
pub fn evaluate(
    annotations: &[ImageAnnotation],
    detections: &[ImageDetections],
    spec: &SubsetSpec,
    iou: f64,
) -> Result<DatasetEvaluation> {
    spec.validate()?;
    let grouped = align_detections(annotations, detections)?;
    let matches: Vec<_> = annotations
        .par_iter()
        .zip(grouped.par_iter())
        .map(|(ann, dets)| match_annotated_image(ann, dets, spec, iou))
        .collect();
    let curve = sweep_curve(&matches)?;
    let result = log_average_miss_rate(&curve)?;
    Ok(DatasetEvaluation { curve, result })
}

pub fn curve_csv(eval: &DatasetEvaluation) -> String {
    let mut s = String::from("threshold,fppi,miss_rate\n");
    for p in &eval.curve.points {
        let _ = writeln!(s, "{},{},{}", p.threshold, p.fppi, p.miss_rate);
    }
    s
}

pub fn run_eval(args: &EvalArgs) -> Result<()> {
    let spec = subset_spec(args)?;
    let anns = read_annotations(&args.ann)?;
    let dets = read_detections(&args.det)?;
    let eval = evaluate(&anns, &dets, &spec, args.iou)?;
    if let Some(csv) = &args.csv {
        fs::write(csv, curve_csv(&eval)).map_err(|e| Error::io(csv, e))?;
    }
    emit(
        args.out.as_deref(),
        &to_json_line(&EvalReport::new(&eval, spec, args.iou))?,
    )
}

// ---------------------------------------------------------------------------
// postprocess

pub fn postprocess(
    groups: &[ImageDetections],
    nms_iou: f64,
    top_k: usize,
) -> Result<Vec<ImageDetections>> {
    groups
        .par_iter()
        .map(|g| {
            let kept = postprocess::postprocess_image(&g.detections, nms_iou, top_k)?;
            Ok(ImageDetections::new(g.image_id.clone(), kept))
        })
        .collect()
}

pub fn run_postprocess(args: &PostprocessArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.nms_iou) {
        return Err(Error::Argument("--nms-iou must lie in [0, 1]".into()));
    }
    let groups = read_detections(&args.det)?;
    let out = postprocess(&groups, args.nms_iou, args.top_k)?;
    emit(args.out.as_deref(), &formats::detections_to_string(&out))
}

// ---------------------------------------------------------------------------
// match-stats

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigStats {
    pub name: String,
    pub config: MatchConfig,
    pub stats: SampleStats,
    /// Mean straddling positives per image.
    pub mean_straddling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchStatsReport {
    pub images: usize,
    pub jitter_count: usize,
    pub jitter_amplitude: f64,
    pub seed: u64,
    pub configs: Vec<ConfigStats>,
}

pub fn match_stats(
    annotations: &[ImageAnnotation],
    proposals: &[ImageDetections],
    jitter_count: usize,
    jitter_amplitude: f64,
    seed: u64,
) -> Result<MatchStatsReport> {
    let grouped = align_detections(annotations, proposals)?;
    let per_image: Vec<_> = annotations
        .par_iter()
        .zip(grouped.par_iter())
        .enumerate()
        .map(|(idx, (ann, props))| {
            let gts: Vec<BBox> = ann
                .instances
                .iter()
                .filter(|i| !i.ignore)
                .map(|i| i.full)
                .collect();
            let boxes: Vec<BBox> = props.iter().map(|d| d.bbox).collect();
            let jitter = JitterConfig {
                count: jitter_count,
                amplitude: jitter_amplitude,
                seed: derive_seed(seed, idx as u64),
            };
            compare_criteria(
                &boxes,
                &gts,
                &MatchConfig::RCNN,
                &MatchConfig::RCNN_BASELINE,
                &jitter,
                f64::from(ann.width),
                f64::from(ann.height),
            )
        })
        .collect::<crowdped_core::Result<_>>()?;
    let mut strict = SampleStats::default();
    let mut baseline = SampleStats::default();
    for c in &per_image {
        strict.merge(&c.strict);
        baseline.merge(&c.baseline);
    }
    let n = annotations.len().max(1) as f64;
    let entry = |name: &str, config, stats: SampleStats| ConfigStats {
        name: name.into(),
        config,
        mean_straddling: stats.straddling as f64 / n,
        stats,
    };
    Ok(MatchStatsReport {
        images: annotations.len(),
        jitter_count,
        jitter_amplitude,
        seed,
        configs: vec![
            entry("strict", MatchConfig::RCNN, strict),
            entry("baseline", MatchConfig::RCNN_BASELINE, baseline),
        ],
    })
}

pub fn run_match_stats(args: &MatchStatsArgs) -> Result<()> {
    let anns = read_annotations(&args.ann)?;
    let props = read_detections(&args.proposals)?;
    let report = match_stats(
        &anns,
        &props,
        args.jitter_count,
        args.jitter_amplitude,
        args.seed,
    )?;
    emit(args.out.as_deref(), &to_json_line(&report)?)
}

// ---------------------------------------------------------------------------
// jitter

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitteredBox {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub score: f64,
    /// Index of the source ground truth within its image.
    pub gt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitteredImage {
    #[serde(rename = "ID")]
    pub image_id: String,
    pub dtboxes: Vec<JitteredBox>,
}

/// Jittered boxes per image, written in detection-file layout (score 1) so they
/// can be fed back as proposals. Ignore-flagged instances are skipped.
pub fn jitter(
    annotations: &[ImageAnnotation],
    count: usize,
    amplitude: f64,
    seed: u64,
) -> Result<Vec<JitteredImage>> {
    annotations
        .par_iter()
        .enumerate()
        .map(|(idx, ann)| {
            let kept: Vec<(usize, BBox)> = ann
                .instances
                .iter()
                .enumerate()
                .filter(|(_, i)| !i.ignore)
                .map(|(k, i)| (k, i.full))
                .collect();
            let gts: Vec<BBox> = kept.iter().map(|(_, b)| *b).collect();
            let cfg = JitterConfig {
                count,
                amplitude,
                seed: derive_seed(seed, idx as u64),
            };
            let boxes = jitter_indexed(&gts, &cfg, f64::from(ann.width), f64::from(ann.height))?;
            Ok(JitteredImage {
                image_id: ann.image_id.clone(),
                dtboxes: boxes
                    .into_iter()
                    .map(|(g, bbox)| JitteredBox {
                        bbox,
                        score: 1.0,
                        gt: kept[g].0,
                    })
                    .collect(),
            })
        })
        .collect()
}

pub fn run_jitter(args: &JitterArgs) -> Result<()> {
    let anns = read_annotations(&args.ann)?;
    let images = jitter(&anns, args.count, args.amplitude, args.seed)?;
    let mut text = String::new();
    for img in &images {
        text.push_str(&serde_json::to_string(img)?);
        text.push('\n');
    }
    emit(args.out.as_deref(), &text)
}

// ---------------------------------------------------------------------------
// augment

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePlan {
    #[serde(rename = "ID")]
    pub image_id: String,
    pub plan: OcclusionPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub seed: u64,
    pub probability: f64,
    pub images: Vec<ImagePlan>,
}

/// Occlusion plan and augmented raster for every annotated image. Planning
/// covers the non-ignored instances, in annotation order.
pub fn augment(
    annotations: &[ImageAnnotation],
    rasters: &[RasterImage],
    probability: f64,
    fill: Option<[f32; 3]>,
    seed: u64,
) -> Result<(AugmentReport, Vec<RasterImage>)> {
    if annotations.len() != rasters.len() {
        return Err(Error::Argument(
            "one raster per annotated image is required".into(),
        ));
    }
    let results: Vec<(ImagePlan, RasterImage)> = annotations
        .par_iter()
        .zip(rasters.par_iter())
        .enumerate()
        .map(|(idx, (ann, img))| {
            if img.width() != ann.width as usize || img.height() != ann.height as usize {
                return Err(Error::Core(crowdped_core::Error::InvalidImage {
                    image_id: ann.image_id.clone(),
                    reason: "raster size differs from the annotated size",
                }));
            }
            let gts: Vec<BBox> = ann
                .instances
                .iter()
                .filter(|i| !i.ignore)
                .map(|i| i.full)
                .collect();
            let mut plan = plan_occlusion(&gts, probability, derive_seed(seed, idx as u64))?;
            if let Some(fill) = fill {
                plan.fill = fill;
            }
            let out = apply_occlusion(img, &gts, &plan)?;
            Ok((
                ImagePlan {
                    image_id: ann.image_id.clone(),
                    plan,
                },
                out,
            ))
        })
        .collect::<Result<_>>()?;
    let (images, out): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((
        AugmentReport {
            seed,
            probability,
            images,
        },
        out,
    ))
}

pub fn run_augment(args: &AugmentArgs) -> Result<()> {
    let fill = match args.fill.as_deref() {
        None => None,
        Some([r, g, b]) => Some([*r, *g, *b]),
        Some(_) => return Err(Error::Argument("--fill takes r,g,b".into())),
    };
    let anns = read_annotations(&args.ann)?;
    let rasters: Vec<RasterImage> = anns
        .iter()
        .map(|a| raster::read_ppm(&args.images.join(format!("{}.ppm", a.image_id))))
        .collect::<Result<_>>()?;
    let (report, images) = augment(&anns, &rasters, args.probability, fill, args.seed)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    for (ann, img) in anns.iter().zip(&images) {
        raster::write_ppm(&args.out_dir.join(format!("{}.ppm", ann.image_id)), img)?;
    }
    let plan_path = args.out_dir.join("plan.json");
    fs::write(&plan_path, to_json_line(&report)?).map_err(|e| Error::io(&plan_path, e))?;
    emit(None, &to_json_line(&report)?)
}

// ---------------------------------------------------------------------------
// anchors

pub fn anchor_annotations(
    width: u32,
    height: u32,
    strides: &[u32],
    ratios: &[f64],
) -> Result<Vec<ImageAnnotation>> {
    let grid = anchors::generate_anchor_grid(width, height, strides, ratios)?;
    Ok(grid
        .levels()
        .iter()
        .enumerate()
        .map(|(i, level)| {
            formats::boxes_as_annotation(
                format!("level{i}_stride{}", level.stride),
                width,
                height,
                grid.level_anchors(i),
            )
        })
        .collect())
}

pub fn run_anchors(args: &AnchorsArgs) -> Result<()> {
    let anns = anchor_annotations(args.width, args.height, &args.strides, &args.ratios)?;
    emit(args.out.as_deref(), &formats::annotations_to_string(&anns))
}

// ---------------------------------------------------------------------------
// synth

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub scene: SceneConfig,
    pub detector: MockDetectorConfig,
    pub images: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            detector: MockDetectorConfig::default(),
            images: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub annotations: Vec<ImageAnnotation>,
    pub detections: Vec<ImageDetections>,
    pub rasters: Vec<RasterImage>,
}

pub fn synthesize(cfg: &SynthConfig, seed: u64, rasters: bool) -> Result<SynthOutput> {
    let per_image: Vec<_> = (0..cfg.images)
        .into_par_iter()
        .map(|i| {
            let (scene, dets) = synthesize_image(&cfg.scene, &cfg.detector, seed, i)?;
            let img = if rasters {
                Some(scene.render(cfg.scene.head_width, cfg.scene.head_height)?)
            } else {
                None
            };
            let id = scene.annotation.image_id.clone();
            Ok((scene.annotation, ImageDetections::new(id, dets), img))
        })
        .collect::<crowdped_core::Result<_>>()?;
    let mut out = SynthOutput {
        annotations: Vec::with_capacity(cfg.images),
        detections: Vec::with_capacity(cfg.images),
        rasters: Vec::new(),
    };
    for (ann, dets, img) in per_image {
        out.annotations.push(ann);
        out.detections.push(dets);
        out.rasters.extend(img);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct SynthSummary {
    seed: u64,
    images: usize,
    instances: usize,
    detections: usize,
    annotation_file: PathBuf,
    detection_file: PathBuf,
}

pub const SYNTH_ANNOTATION_FILE: &str = "synth.odann";
pub const SYNTH_DETECTION_FILE: &str = "synth.oddet";

pub fn run_synth(args: &SynthArgs) -> Result<()> {
    let mut cfg: SynthConfig = match &args.config {
        Some(p) => serde_json::from_reader(read_text(p)?)
            .map_err(|source| Error::Json { line: 1, source })?,
        None => SynthConfig::default(),
    };
    if let Some(n) = args.images {
        cfg.images = n;
    }
    let out = synthesize(&cfg, args.seed, args.rasters)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let ann_path = args.out_dir.join(SYNTH_ANNOTATION_FILE);
    let det_path = args.out_dir.join(SYNTH_DETECTION_FILE);
    fs::write(&ann_path, formats::annotations_to_string(&out.annotations))
        .map_err(|e| Error::io(&ann_path, e))?;
    fs::write(&det_path, formats::detections_to_string(&out.detections))
        .map_err(|e| Error::io(&det_path, e))?;
    if args.rasters {
        let dir = args.out_dir.join("images");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (ann, img) in out.annotations.iter().zip(&out.rasters) {
            raster::write_ppm(&dir.join(format!("{}.ppm", ann.image_id)), img)?;
        }
    }
    let summary = SynthSummary {
        seed: args.seed,
        images: out.annotations.len(),
        instances: out.annotations.iter().map(|a| a.instances.len()).sum(),
        detections: out.detections.iter().map(|d| d.detections.len()).sum(),
        annotation_file: ann_path,
        detection_file: det_path,
    };
    emit(None, &to_json_line(&summary)?)
}

// ---------------------------------------------------------------------------

pub fn run(cli: &Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads.filter(|&n| n > 0) {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Eval(a) => run_eval(a),
        Command::Postprocess(a) => run_postprocess(a),
        Command::MatchStats(a) => run_match_stats(a),
        Command::Jitter(a) => run_jitter(a),
        Command::Augment(a) => run_augment(a),
        Command::Anchors(a) => run_anchors(a),
        Command::Synth(a) => run_synth(a),
    })
}

/// Process exit code for an error: 2 for bad arguments, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Argument(_) => 2,
        _ => 1,
    }
}
