use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use orp_core::apaa::{
    apaa_assign, max_iou_assign, AssignmentResult, Candidate, QualityParams, QualityScore,
};
use orp_core::eval::{evaluate, ApMetric, Detection, EvalReport, GtRecord};
use orp_core::geometry::{convex_hull, min_area_rect, nearest_gt_corner, Point2};
use orp_core::io::{
    parse_dota, read_document, tile_annotations, write_document, write_dota, TileSpec,
};
use orp_core::losses::{gradcheck_suite, SuiteRow};
use orp_core::toy::{benchmark, gen_scene, AssignerKind, LearnerConfig, SceneConfig};
use orp_core::{Points, Quad};

#[derive(Parser)]
#[command(name = "orp", version, about = "Oriented point-set detection toolkit")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert point sets into oriented boxes.
    Convert {
        input: PathBuf,
        #[arg(long = "fn", value_enum, default_value = "minarearect")]
        function: ConvertFn,
    },
    /// Score candidates and assign positives.
    Assign {
        input: PathBuf,
        #[arg(long, default_value_t = 0.4)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        mu1: f64,
        #[arg(long, default_value_t = 0.3)]
        mu2: f64,
        #[arg(long, default_value_t = 0.1)]
        mu3: f64,
        #[arg(long, value_enum, default_value = "apaa")]
        assigner: Assigner,
        /// IoU threshold of the max-IoU assigner.
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
    },
    /// Generate a synthetic scene as JSON.
    GenScene {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        objects: usize,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the toy learner on seeded scenes.
    TrainToy {
        /// Seed of the first scene; scene i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        scenes: usize,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 0.4)]
        sigma: f64,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        no_spatial_constraint: bool,
        #[arg(long, value_enum, default_value = "apaa")]
        assigner: Assigner,
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate rotated detections against DOTA ground truth.
    Eval {
        /// DOTA annotation file, or a directory of them named by image id.
        #[arg(long)]
        gt: PathBuf,
        /// Lines of `image class score x1 y1 x2 y2 x3 y3 x4 y4`.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum, default_value = "voc07")]
        metric: Metric,
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        /// Also report mean average orientation error.
        #[arg(long)]
        maoe: bool,
    },
    /// Check analytic loss gradients against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        cases: usize,
        #[arg(long, default_value_t = 1e-6)]
        h: f64,
    },
    /// Split a DOTA annotation file into image patches.
    Tile {
        input: PathBuf,
        #[arg(long)]
        width: f64,
        #[arg(long)]
        height: f64,
        #[arg(long, default_value_t = 1024.0)]
        patch: f64,
        #[arg(long, default_value_t = 824.0)]
        stride: f64,
        #[arg(long, default_value_t = 0.3)]
        min_coverage: f64,
        /// Write one DOTA file per tile into this directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ConvertFn {
    Minarearect,
    Convexhull,
    Nearestgtcorner,
}

#[derive(Clone, Copy, ValueEnum)]
enum Assigner {
    Apaa,
    Maxiou,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Voc07,
    Voc12,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(json: bool, body: &impl Serialize, text: impl FnOnce() -> String) -> Result<()> {
    if json {
        println!("{}", write_document(body)?);
    } else {
        print!("{}", text());
    }
    Ok(())
}

#[derive(Deserialize)]
struct ConvertInput {
    point_sets: Vec<Points>,
    gt: Option<Quad>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum ConvertedBox {
    Rect(orp_core::Rect),
    Polygon(orp_core::Polygon),
    Quad(Quad),
}

#[derive(Serialize)]
struct ConvertOutput {
    function: ConvertFn,
    boxes: Vec<ConvertedBox>,
}

fn fmt_points(pts: &[Point2<f64>]) -> String {
    pts.iter()
        .map(|p| format!("{} {}", p.x, p.y))
        .collect::<Vec<_>>()
        .join(" ")
}

fn convert(json: bool, input: &Path, function: ConvertFn) -> Result<()> {
    let doc: ConvertInput = read_document(&read(input)?)?;
    let mut boxes = Vec::with_capacity(doc.point_sets.len());
    for set in &doc.point_sets {
        boxes.push(match function {
            ConvertFn::Minarearect => ConvertedBox::Rect(min_area_rect(set)?),
            ConvertFn::Convexhull => ConvertedBox::Polygon(convex_hull(set)?),
            ConvertFn::Nearestgtcorner => {
                let gt = doc
                    .gt
                    .as_ref()
                    .context("nearestgtcorner needs a \"gt\" quad in the input")?;
                ConvertedBox::Quad(nearest_gt_corner(set, gt)?)
            }
        });
    }
    let out = ConvertOutput { function, boxes };
    emit(json, &out, || {
        out.boxes
            .iter()
            .map(|b| match b {
                ConvertedBox::Rect(r) => {
                    format!(
                        "rect {} {} {} {} {}\n",
                        r.center.x, r.center.y, r.width, r.height, r.angle
                    )
                }
                ConvertedBox::Polygon(p) => format!("polygon {}\n", fmt_points(p.vertices())),
                ConvertedBox::Quad(q) => format!("quad {}\n", fmt_points(q.corners())),
            })
            .collect()
    })
}

#[derive(Deserialize)]
struct AssignObject {
    gt: Quad,
    class: usize,
}

#[derive(Deserialize)]
struct AssignInput {
    objects: Vec<AssignObject>,
    candidates: Vec<Candidate<f64>>,
    /// Candidate indices per object; required by the quality assigner.
    #[serde(default)]
    groups: Option<Vec<Vec<usize>>>,
}

#[derive(Serialize)]
struct AssignOutput {
    assignment: AssignmentResult,
    scores: Vec<Option<QualityScore<f64>>>,
}

fn assign(
    json: bool,
    input: &Path,
    sigma: f64,
    mu: [f64; 3],
    assigner: Assigner,
    iou: f64,
) -> Result<()> {
    let doc: AssignInput = read_document(&read(input)?)?;
    let objects: Vec<(Quad, usize)> = doc.objects.into_iter().map(|o| (o.gt, o.class)).collect();
    let out = match assigner {
        Assigner::Apaa => {
            let groups = doc
                .groups
                .context("the apaa assigner needs \"groups\" in the input")?;
            let mut params = QualityParams::default();
            params.weights.mu1 = mu[0];
            params.weights.mu2 = mu[1];
            params.weights.mu3 = mu[2];
            let (assignment, scores) =
                apaa_assign(&doc.candidates, &objects, &groups, sigma, &params)?;
            AssignOutput { assignment, scores }
        }
        Assigner::Maxiou => {
            let gts: Vec<Quad> = objects.iter().map(|o| o.0).collect();
            AssignOutput {
                assignment: max_iou_assign(&doc.candidates, &gts, iou)?,
                scores: vec![None; doc.candidates.len()],
            }
        }
    };
    emit(json, &out, || {
        let mut s = String::from("candidate label total\n");
        for (i, label) in out.assignment.labels.iter().enumerate() {
            let l = label
                .object()
                .map_or("negative".to_string(), |o| format!("object {o}"));
            let q = out.scores[i].map_or("-".to_string(), |q| format!("{:.6}", q.total));
            s.push_str(&format!("{i} {l} {q}\n"));
        }
        s
    })
}

fn gen_scene_cmd(seed: u64, objects: usize, classes: usize, out: Option<&Path>) -> Result<()> {
    let cfg = SceneConfig {
        n_objects: objects,
        n_classes: classes,
        ..Default::default()
    };
    let text = write_document(&gen_scene(seed, &cfg)?)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train_toy(
    json: bool,
    seed: u64,
    scenes: usize,
    steps: usize,
    sigma: f64,
    lr: Option<f64>,
    spatial: bool,
    assigner: Assigner,
    iou: f64,
    out: Option<&Path>,
) -> Result<()> {
    let mut cfg = LearnerConfig {
        steps,
        sigma,
        spatial_constraint: spatial,
        assigner: match assigner {
            Assigner::Apaa => AssignerKind::Apaa,
            Assigner::Maxiou => AssignerKind::MaxIou { threshold: iou },
        },
        ..Default::default()
    };
    if let Some(lr) = lr {
        cfg.learn_rate = lr;
    }
    let report = benchmark(&cfg, seed, scenes)?;
    if let Some(p) = out {
        fs::write(p, write_document(&report)? + "\n")
            .with_context(|| format!("writing {}", p.display()))?;
    }
    emit(json, &report, || {
        let mut s = String::from("seed  iou     orient_err  outside  positives\n");
        for r in &report.scenes {
            let e = r
                .mean_orientation_error
                .map_or("-".into(), |e| format!("{e:.3}"));
            s.push_str(&format!(
                "{:<5} {:.4}  {:<10}  {:<7}  {}\n",
                r.seed, r.mean_iou, e, r.outside_points, r.num_positives
            ));
        }
        let e = report
            .mean_orientation_error
            .map_or("-".into(), |e| format!("{e:.3}"));
        s.push_str(&format!(
            "mean  {:.4}  {:<10}  {:.2}\n",
            report.mean_iou, e, report.mean_outside_points
        ));
        s
    })
}

fn image_id(path: &Path) -> String {
    path.file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

fn load_gt(path: &Path) -> Result<Vec<GtRecord>> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)
            .with_context(|| format!("listing {}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "txt"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    let mut out = Vec::new();
    for f in files {
        let image = image_id(&f);
        let recs = parse_dota(&read(&f)?).with_context(|| format!("parsing {}", f.display()))?;
        for r in recs {
            out.push(GtRecord {
                image: image.clone(),
                class: r.class.clone(),
                quad: r.to_quad()?,
                difficult: r.difficulty == 1,
            });
        }
    }
    Ok(out)
}

fn parse_predictions(text: &str) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.is_empty() {
            continue;
        }
        if t.len() != 11 {
            bail!(
                "prediction line {}: expected 11 fields, found {}",
                i + 1,
                t.len()
            );
        }
        let nums = t[2..]
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("prediction line {}: bad number", i + 1))?;
        let c = |k: usize| Point2::new(nums[1 + 2 * k], nums[2 + 2 * k]);
        let quad = Quad::new([c(0), c(1), c(2), c(3)])
            .with_context(|| format!("prediction line {}", i + 1))?;
        out.push(Detection {
            image: t[0].to_string(),
            class: t[1].to_string(),
            quad,
            score: nums[0],
        });
    }
    Ok(out)
}

fn eval_text(r: &EvalReport, maoe: bool) -> String {
    let mut s = if maoe {
        String::from("class                 AP       AOE\n")
    } else {
        String::from("class                 AP\n")
    };
    for c in &r.classes {
        s.push_str(&format!("{:<20}  {:.4}", c.class, c.ap));
        if maoe {
            s.push_str(&c.aoe.map_or("   -".into(), |e| format!("  {e:.3}")));
        }
        s.push('\n');
    }
    s.push_str(&format!(
        "mAP                   {}\n",
        r.map.map_or("-".into(), |m| format!("{m:.4}"))
    ));
    if maoe {
        s.push_str(&format!(
            "mAOE                  {}\n",
            r.maoe.map_or("-".into(), |m| format!("{m:.3}"))
        ));
        s.push_str(&format!("note: {}\n", r.maoe_note));
    }
    s
}

fn eval_cmd(
    json: bool,
    gt: &Path,
    pred: &Path,
    metric: Metric,
    iou: f64,
    maoe: bool,
) -> Result<()> {
    let gts = load_gt(gt)?;
    let dets = parse_predictions(&read(pred)?)?;
    let metric = match metric {
        Metric::Voc07 => ApMetric::Voc07,
        Metric::Voc12 => ApMetric::Voc12,
    };
    let mut report = evaluate(&dets, &gts, metric, iou)?;
    if !maoe {
        report.maoe = None;
        for c in &mut report.classes {
            c.aoe = None;
        }
    }
    emit(json, &report, || eval_text(&report, maoe))
}

#[derive(Serialize)]
struct GradcheckOutput {
    seed: u64,
    cases: usize,
    h: f64,
    tolerance: f64,
    rows: Vec<SuiteRow>,
    passed: bool,
}

fn gradcheck(json: bool, seed: u64, cases: usize, h: f64) -> Result<bool> {
    if !(1e-8..=1e-4).contains(&h) {
        bail!("step h = {h} outside [1e-8, 1e-4]");
    }
    let rows = gradcheck_suite(seed, cases, h);
    let passed = rows.iter().all(|r| r.passed());
    let out = GradcheckOutput {
        seed,
        cases,
        h,
        tolerance: orp_core::losses::GRADCHECK_TOLERANCE,
        rows,
        passed,
    };
    emit(json, &out, || {
        let mut s =
            String::from("loss                       checked  skipped  max_rel_error  status\n");
        for r in &out.rows {
            s.push_str(&format!(
                "{:<25}  {:<7}  {:<7}  {:<13.3e}  {}\n",
                r.loss,
                r.checked,
                r.skipped,
                r.max_rel_error,
                if r.passed() { "ok" } else { "FAIL" }
            ));
        }
        s
    })?;
    Ok(passed)
}

#[derive(Serialize)]
struct TileOutput {
    source: String,
    tiles: Vec<orp_core::io::Tile>,
}

fn tile_cmd(
    json: bool,
    input: &Path,
    width: f64,
    height: f64,
    tiling: TileSpec,
    out_dir: Option<&Path>,
) -> Result<()> {
    let records =
        parse_dota(&read(input)?).with_context(|| format!("parsing {}", input.display()))?;
    let tiles = tile_annotations(&records, width, height, &tiling)?;
    let stem = image_id(input);
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for t in &tiles {
            let recs: Vec<_> = t.records.iter().map(|r| r.record.clone()).collect();
            let name = dir.join(format!("{stem}__{}__{}.txt", t.x, t.y));
            fs::write(&name, write_dota(&recs))
                .with_context(|| format!("writing {}", name.display()))?;
        }
    }
    let out = TileOutput {
        source: stem,
        tiles,
    };
    emit(json, &out, || {
        let mut s = String::from("x       y       records  truncated\n");
        for t in &out.tiles {
            s.push_str(&format!(
                "{:<7} {:<7} {:<8} {}\n",
                t.x,
                t.y,
                t.records.len(),
                t.truncated.len()
            ));
        }
        s
    })
}

fn run(cli: Cli) -> Result<bool> {
    let json = cli.json;
    match cli.command {
        Command::Convert { input, function } => convert(json, &input, function)?,
        Command::Assign {
            input,
            sigma,
            mu1,
            mu2,
            mu3,
            assigner,
            iou,
        } => assign(json, &input, sigma, [mu1, mu2, mu3], assigner, iou)?,
        Command::GenScene {
            seed,
            objects,
            classes,
            out,
        } => gen_scene_cmd(seed, objects, classes, out.as_deref())?,
        Command::TrainToy {
            seed,
            scenes,
            steps,
            sigma,
            lr,
            no_spatial_constraint,
            assigner,
            iou,
            out,
        } => train_toy(
            json,
            seed,
            scenes,
            steps,
            sigma,
            lr,
            !no_spatial_constraint,
            assigner,
            iou,
            out.as_deref(),
        )?,
        Command::Eval {
            gt,
            pred,
            metric,
            iou,
            maoe,
        } => eval_cmd(json, &gt, &pred, metric, iou, maoe)?,
        Command::Gradcheck { seed, cases, h } => return gradcheck(json, seed, cases, h),
        Command::Tile {
            input,
            width,
            height,
            patch,
            stride,
            min_coverage,
            out_dir,
        } => {
            let tiling = TileSpec {
                patch,
                stride,
                min_coverage,
            };
            tile_cmd(json, &input, width, height, tiling, out_dir.as_deref())?
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
