use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bevgeo::augment::homography::{fit_homography, Homography, Provenance};
use bevgeo::depth::{metric_to_scale_invariant, pixel_size, scale_invariant_to_metric};
use bevgeo::ordinal::{decode_label, ordinal_loss, ordinal_loss_grad, DomainLabel};
use bevgeo::selftest::run_selftest;
use bevgeo::{
    augment_scene, evaluate, generate_synthetic_scene, Dataset, DepthDecouplingConfig, DetectionRecord, Error, Intrinsics,
    MatchedPairSet, Pose, Raster, RunConfig, Scene,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

type Result<T> = std::result::Result<T, Error>;

#[derive(Parser)]
#[command(name = "bevgeo", version, about = "Camera geometry, perspective augmentation and BEV detection metrics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Overrides the seed from --config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run configuration JSON; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write outputs here instead of stdout.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Convert depths between metres and the focal-invariant representation.
    DepthConvert(DepthArgs),
    /// Perturb camera poses and warp images by the fitted homographies.
    Augment {
        #[arg(long)]
        scene: PathBuf,
    },
    /// Fit a homography to pixel correspondences.
    Homography {
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Map focal lengths to ordinal domain labels.
    BinFocal {
        #[arg(long, value_enum)]
        dataset: Option<DatasetArg>,
        #[arg(required = true, allow_negative_numbers = true)]
        focals: Vec<f64>,
    },
    /// Ordinal loss, gradient and decoded label for a logit vector.
    OrdinalLoss {
        /// JSON object `{"logits": [...], "label": n}`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Score predictions against ground truth.
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
    /// Write a deterministic synthetic scene.
    GenScene {
        #[arg(long, default_value_t = 6)]
        cameras: usize,
        #[arg(long, default_value_t = 20)]
        boxes: usize,
        #[arg(long, default_value = "ring")]
        rig_style: String,
    },
    /// Run the built-in consistency checks.
    Selftest,
}

#[derive(Args)]
struct DepthArgs {
    #[arg(long)]
    fx: f64,
    #[arg(long)]
    fy: f64,
    #[arg(long, value_enum, default_value = "scale-invariant")]
    to: DepthTarget,
    /// Reference constant c. Conflicts with --f-ref.
    #[arg(long, conflicts_with = "f_ref")]
    c: Option<f64>,
    /// Reference focal length; c = sqrt(2) / f_ref.
    #[arg(long)]
    f_ref: Option<f64>,
    /// Dataset whose metric depth range is enforced.
    #[arg(long, value_enum)]
    dataset: Option<DatasetArg>,
    #[arg(required = true, allow_negative_numbers = true)]
    depths: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DepthTarget {
    ScaleInvariant,
    Metric,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Nuscenes,
    Waymo,
    Lyft,
}

impl From<DatasetArg> for Dataset {
    fn from(d: DatasetArg) -> Self {
        match d {
            DatasetArg::Nuscenes => Dataset::Nuscenes,
            DatasetArg::Waymo => Dataset::Waymo,
            DatasetArg::Lyft => Dataset::Lyft,
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn load_config(common: &Common) -> Result<RunConfig<f64>> {
    let mut cfg: RunConfig<f64> = match &common.config {
        Some(path) => read_json(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes `name` into the output directory, or to stdout without one.
fn emit(common: &Common, name: &str, contents: &[u8]) -> Result<()> {
    match &common.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), contents)?;
        }
        None => std::io::stdout().write_all(contents)?,
    }
    Ok(())
}

fn require_output_dir(common: &Common) -> Result<&Path> {
    let dir = common.output_dir.as_deref().ok_or_else(|| Error::InvalidArgument("--output-dir is required".into()))?;
    fs::create_dir_all(dir)?;
    Ok(dir)
}

#[derive(Serialize)]
struct DepthOutput {
    pixel_size: f64,
    reference_pixel_size: f64,
    target: &'static str,
    depths: Vec<f64>,
}

fn depth_convert(common: &Common, a: &DepthArgs) -> Result<()> {
    let base = match a.dataset {
        Some(d) => DepthDecouplingConfig::for_dataset(d.into()),
        None => load_config(common)?.depth,
    };
    let cfg = match (a.c, a.f_ref) {
        (Some(c), _) => DepthDecouplingConfig::new(c, base.metric_depth_range)?,
        (None, Some(f)) => DepthDecouplingConfig::from_reference_focal(f, base.metric_depth_range)?,
        (None, None) => base,
    };
    // principal point and size do not enter the conversion
    let intr = Intrinsics::new(a.fx, a.fy, 0.0, 0.0, 1, 1)?;
    let (target, depths) = match a.to {
        DepthTarget::ScaleInvariant => {
            ("scale-invariant", a.depths.iter().map(|&d| metric_to_scale_invariant(d, &intr, &cfg)).collect::<Result<_>>()?)
        }
        DepthTarget::Metric => {
            ("metric", a.depths.iter().map(|&d| scale_invariant_to_metric(d, &intr, &cfg)).collect::<Result<_>>()?)
        }
    };
    let out = DepthOutput { pixel_size: pixel_size(&intr)?, reference_pixel_size: cfg.reference_pixel_size, target, depths };
    emit(common, "depth.json", to_json(&out).as_bytes())
}

#[derive(Serialize)]
struct HomographyOutput {
    camera_id: String,
    /// Row-major, unit Frobenius norm.
    matrix: [f64; 9],
    provenance: Provenance,
    num_pairs: usize,
}

impl HomographyOutput {
    fn new(camera_id: &str, h: &Homography<f64>, num_pairs: usize) -> Self {
        Self { camera_id: camera_id.to_string(), matrix: h.to_row_major(), provenance: h.provenance(), num_pairs }
    }
}

#[derive(Serialize)]
struct PoseOutput<'a> {
    camera_id: &'a str,
    image: String,
    /// Pose the warped image corresponds to.
    pose: Pose<f64>,
    sampled_pose: Pose<f64>,
    applied: bool,
}

/// Stand-in image for scenes that ship without rasters: a checkerboard over a
/// gradient, different per camera.
fn synthetic_image(width: u32, height: u32, index: usize) -> Result<Raster> {
    Raster::from_fn(width, height, 1, |x, y, _| {
        let check = if ((x / 32) + (y / 32)) % 2 == 0 { 64 } else { 0 };
        ((x * 191 / width.max(1) + check + 13 * index as u32) % 256) as u8
    })
}

fn file_stem(index: usize, camera_id: &str) -> String {
    let safe: String =
        camera_id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    format!("{index:02}_{safe}")
}

fn augment(common: &Common, scene_path: &Path) -> Result<()> {
    let cfg = load_config(common)?;
    let scene: Scene<f64> = read_json(scene_path)?;
    scene.validate()?;
    let base = scene_path.parent().unwrap_or(Path::new("."));
    let images = match &scene.image_paths {
        Some(paths) => paths.iter().map(|p| Raster::load(base.join(p))).collect::<Result<Vec<_>>>()?,
        None => scene
            .cameras
            .iter()
            .enumerate()
            .map(|(i, c)| synthetic_image(c.intrinsics.width, c.intrinsics.height, i))
            .collect::<Result<_>>()?,
    };
    for (cam, img) in scene.cameras.iter().zip(&images) {
        if (img.width, img.height) != (cam.intrinsics.width, cam.intrinsics.height) {
            return Err(Error::Format(format!(
                "image for {} is {}x{}, intrinsics say {}x{}",
                cam.camera_id, img.width, img.height, cam.intrinsics.width, cam.intrinsics.height
            )));
        }
    }
    let range = bevgeo::PerturbationRange { seed: cfg.seed, ..cfg.perturbation };
    let views = augment_scene(&scene.cameras, &images, &scene.boxes, &range)?;

    let dir = require_output_dir(common)?;
    let mut poses = Vec::new();
    let mut homographies = Vec::new();
    for (i, v) in views.iter().enumerate() {
        let name = format!("{}.{}", file_stem(i, &v.camera_id), v.image.extension());
        v.image.save(dir.join(&name))?;
        poses.push(PoseOutput {
            camera_id: &v.camera_id,
            image: name,
            pose: v.pose,
            sampled_pose: v.sampled_pose,
            applied: !v.homography.is_identity_fallback(),
        });
        homographies.push(HomographyOutput::new(&v.camera_id, &v.homography, v.pairs.len()));
    }
    fs::write(dir.join("poses.json"), to_json(&poses))?;
    fs::write(dir.join("homographies.json"), to_json(&homographies))?;
    Ok(())
}

fn homography(common: &Common, path: &Path) -> Result<()> {
    let pairs: MatchedPairSet<f64> = read_json(path)?;
    let h = fit_homography(&pairs)?;
    emit(common, "homography.json", to_json(&HomographyOutput::new(&pairs.camera_id, &h, pairs.len())).as_bytes())
}

#[derive(Serialize)]
struct FocalLabel {
    focal: f64,
    label: usize,
}

fn bin_focal(common: &Common, dataset: Option<DatasetArg>, focals: &[f64]) -> Result<()> {
    let scheme = match dataset {
        Some(d) => bevgeo::OrdinalDomainScheme::for_dataset(d.into()),
        None => load_config(common)?.scheme,
    };
    let out =
        focals.iter().map(|&f| Ok(FocalLabel { focal: f, label: scheme.assign_label(f)?.0 })).collect::<Result<Vec<_>>>()?;
    emit(common, "labels.json", to_json(&out).as_bytes())
}

#[derive(Deserialize)]
struct LossInput {
    logits: Vec<f64>,
    label: usize,
}

#[derive(Serialize)]
struct LossOutput {
    loss: f64,
    gradient: Vec<f64>,
    decoded_label: usize,
}

fn ordinal(common: &Common, path: &Path) -> Result<()> {
    let input: LossInput = read_json(path)?;
    let label = DomainLabel(input.label);
    let out = LossOutput {
        loss: ordinal_loss(&input.logits, label)?,
        gradient: ordinal_loss_grad(&input.logits, label)?,
        decoded_label: decode_label(&input.logits).0,
    };
    emit(common, "loss.json", to_json(&out).as_bytes())
}

fn evaluate_cmd(common: &Common, gt: &Path, pred: &Path) -> Result<()> {
    let cfg = load_config(common)?;
    let gts: Vec<DetectionRecord<f64>> = read_json(gt)?;
    let dets: Vec<DetectionRecord<f64>> = read_json(pred)?;
    for r in gts.iter().chain(&dets) {
        r.bbox.validate().map_err(|e| Error::Format(format!("sample {}: {e}", r.sample_id)))?;
    }
    if let Some(r) = dets.iter().find(|r| r.bbox.score.is_none()) {
        return Err(Error::Format(format!("prediction in sample {} has no score", r.sample_id)));
    }
    let report = evaluate(&gts, &dets, &cfg.metrics)?;
    match &common.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("report.json"), to_json(&report))?;
            fs::write(dir.join("report.txt"), report.table())?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(to_json(&report).as_bytes())?;
            out.write_all(report.table().as_bytes())?;
        }
    }
    Ok(())
}

fn gen_scene(common: &Common, cameras: usize, boxes: usize, rig_style: &str) -> Result<()> {
    let cfg = load_config(common)?;
    let scene = generate_synthetic_scene(cfg.seed, cameras, boxes, rig_style, &cfg.scheme)?;
    emit(common, "scene.json", to_json(&scene).as_bytes())
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let common = &cli.common;
    match &cli.command {
        Command::DepthConvert(a) => depth_convert(common, a)?,
        Command::Augment { scene } => augment(common, scene)?,
        Command::Homography { pairs } => homography(common, pairs)?,
        Command::BinFocal { dataset, focals } => bin_focal(common, *dataset, focals)?,
        Command::OrdinalLoss { input } => ordinal(common, input)?,
        Command::Evaluate { gt, pred } => evaluate_cmd(common, gt, pred)?,
        Command::GenScene { cameras, boxes, rig_style } => gen_scene(common, *cameras, *boxes, rig_style)?,
        Command::Selftest => {
            let report = run_selftest();
            emit(common, "selftest.txt", report.render().as_bytes())?;
            return Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
