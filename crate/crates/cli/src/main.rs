use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::Value;

use mapchange::change::{
    apply_changeset, changeset_from_json, changeset_to_json, diff_maps, invert_changeset,
    overlay_deletions, validate_canonical, ChangeSet,
};
use mapchange::eval::{evaluate, EvalClass, EvalConfig, EvalReport, FrameSample};
use mapchange::map::{
    crop_patch, parse_map, parse_poses, serialize_map, serialize_poses, validate_scene, EgoPose,
    MapScene, ValidationReport, DEFAULT_PATCH_EXTENT,
};
use mapchange::merge::{merge_elements, unify_crossing_orientation};
use mapchange::prior::synthetic::{road_scene, SyntheticConfig};
use mapchange::prior::{
    gap_compare, perturb_continuous, perturb_discrete, perturb_rulebased, RuleBasedConfig,
};
use mapchange::render::{render_frame_svg, render_svg};
use mapchange::stats::{compute_stats, SceneRecord};

#[derive(Parser, Debug)]
#[command(name = "mapchange", version, about = "Change-aware HD map toolbox")]
struct Cli {
    /// Worker threads for multi-scene commands (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Continuous,
    Discrete,
    Rulebased,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check scene invariants; with --changes, also check that the change
    /// set is the canonical diff from --prior to the (single) map
    Validate {
        maps: Vec<PathBuf>,
        #[arg(long, requires = "prior")]
        changes: Option<PathBuf>,
        #[arg(long)]
        prior: Option<PathBuf>,
    },
    /// Canonical change set turning PRIOR into GT
    Diff {
        prior: PathBuf,
        gt: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Apply a change set to a scene
    Apply {
        scene: PathBuf,
        changes: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Change set undoing CHANGES, which must apply to SCENE
    Invert {
        scene: PathBuf,
        changes: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic prior from a ground-truth scene
    Perturb {
        gt: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON rule-based config; missing fields take defaults
        #[arg(long)]
        config: Option<PathBuf>,
        /// Ego poses (required for rulebased)
        #[arg(long)]
        poses: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        #[arg(long, default_value_t = 0.2)]
        p_del: f64,
        #[arg(long, default_value_t = 0.2)]
        p_shift: f64,
        #[arg(short, long)]
        output: PathBuf,
        /// Where to write the restoring change set
        #[arg(long)]
        changes: Option<PathBuf>,
        /// Where to write the rule-based action log
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Merge lane segments across unnecessary breakpoints and unify
    /// crossing orientation
    Merge {
        scene: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Crop ego-centred patches, one per pose
    Crop {
        scene: PathBuf,
        #[arg(long)]
        poses: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PATCH_EXTENT)]
        extent: f64,
        /// Overlay the deletions of this change set
        #[arg(long)]
        changes: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write frames.jsonl with evaluation ground truth
        #[arg(long)]
        frames: bool,
    },
    /// Score predictions; exit status does not depend on the scores
    Eval {
        /// JSON lines of frames with predictions
        #[arg(long)]
        pred: PathBuf,
        /// JSON lines of frames with ground truth; defaults to the
        /// ground truth carried by --pred
        #[arg(long)]
        gt: Option<PathBuf>,
        /// binary, full, or a comma-separated class list
        #[arg(long, default_value = "full")]
        classes: String,
        #[arg(long, default_value_t = 0.5)]
        conf_threshold: f64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Annotation statistics over a manifest of scenes
    Stats {
        /// JSON array of {"split", "prior", "changes", "poses"}; paths are
        /// relative to the manifest
        manifest: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PATCH_EXTENT)]
        extent: f64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// SVG of a scene, or of a frame when INPUT is JSON lines
    Render {
        input: PathBuf,
        #[arg(long)]
        changes: Option<PathBuf>,
        /// Frame to draw from a JSON lines input (default: first)
        #[arg(long)]
        frame_id: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Test-minus-validation differences of two eval reports
    Gap { val: PathBuf, test: PathBuf },
    /// Synthetic ground-truth scene and ego trajectory
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        poses: PathBuf,
    },
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn load_map(path: &Path) -> Result<MapScene> {
    parse_map(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_changes(path: &Path) -> Result<ChangeSet> {
    changeset_from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_poses(path: &Path) -> Result<Vec<EgoPose>> {
    parse_poses(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_frames(path: &Path) -> Result<Vec<FrameSample>> {
    let text = String::from_utf8(read(path)?).context("frames are not UTF-8")?;
    let lines: Vec<&str> = text.lines().collect();
    lines
        .par_iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .with_context(|| format!("{}:{}: bad frame", path.display(), i + 1))
        })
        .collect()
}

fn print_report(name: &str, r: &ValidationReport) {
    for v in &r.violations {
        println!("{name}: {v}");
    }
}

fn validate(maps: &[PathBuf], changes: Option<&Path>, prior: Option<&Path>) -> Result<()> {
    let reports: Vec<(String, ValidationReport)> = maps
        .par_iter()
        .map(|p| Ok((p.display().to_string(), validate_scene(&load_map(p)?))))
        .collect::<Result<_>>()?;
    let mut errors = 0;
    for (name, r) in &reports {
        print_report(name, r);
        errors += usize::from(r.has_errors());
    }
    if let (Some(changes), Some(prior)) = (changes, prior) {
        let [gt] = maps else {
            bail!("--changes needs exactly one map");
        };
        let r = validate_canonical(&load_changes(changes)?, &load_map(prior)?, &load_map(gt)?);
        print_report(&changes.display().to_string(), &r);
        errors += usize::from(r.has_errors());
    }
    if errors > 0 {
        bail!("{errors} input(s) failed validation");
    }
    println!("ok");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn perturb(
    gt: &Path,
    mode: Mode,
    seed: u64,
    config: Option<&Path>,
    poses: Option<&Path>,
    (sigma, p_del, p_shift): (f64, f64, f64),
    output: &Path,
    changes: Option<&Path>,
    log: Option<&Path>,
) -> Result<()> {
    let gt = load_map(gt)?;
    let (prior, cs) = match mode {
        Mode::Continuous => {
            if sigma < 0.0 {
                bail!("--sigma must be non-negative");
            }
            (perturb_continuous(&gt, sigma, seed), None)
        }
        Mode::Discrete => {
            if !(0.0..=1.0).contains(&p_del)
                || !(0.0..=1.0).contains(&p_shift)
                || p_del + p_shift > 1.0
            {
                bail!("--p-del and --p-shift must be probabilities summing to at most 1");
            }
            let (prior, cs) = perturb_discrete(&gt, p_del, p_shift, sigma, seed);
            (prior, Some(cs))
        }
        Mode::Rulebased => {
            let poses = load_poses(poses.context("--poses is required for rulebased")?)?;
            let cfg: RuleBasedConfig = match config {
                Some(p) => serde_json::from_slice(&read(p)?)
                    .with_context(|| format!("parsing {}", p.display()))?,
                None => RuleBasedConfig::default(),
            };
            let (prior, cs, l) = perturb_rulebased(&gt, &poses, &cfg, seed)?;
            if let Some(p) = log {
                write_out(Some(p), &serde_json::to_vec_pretty(&l)?)?;
            }
            (prior, Some(cs))
        }
    };
    write_out(Some(output), &serialize_map(&prior))?;
    match (changes, cs) {
        (Some(p), Some(cs)) => write_out(Some(p), &changeset_to_json(&cs)),
        (Some(_), None) => bail!("continuous priors have no change set"),
        _ => Ok(()),
    }
}

fn crop(
    scene: &Path,
    poses: &Path,
    extent: f64,
    changes: Option<&Path>,
    out_dir: &Path,
    frames: bool,
) -> Result<()> {
    if extent.is_nan() || extent <= 0.0 {
        bail!("--extent must be positive");
    }
    let mut scene = load_map(scene)?;
    if let Some(c) = changes {
        scene = overlay_deletions(&scene, &load_changes(c)?);
    }
    let poses = load_poses(poses)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let lines: Vec<String> = poses
        .par_iter()
        .enumerate()
        .map(|(i, pose)| {
            let patch = crop_patch(&scene, pose, extent);
            let name = format!("frame_{i:05}");
            write_out(
                Some(&out_dir.join(format!("{name}.json"))),
                &serialize_map(&patch.scene),
            )?;
            let sample =
                FrameSample::from_patch(format!("{}/{name}", scene.scene_id), &patch.scene);
            Ok(serde_json::to_string(&sample)?)
        })
        .collect::<Result<_>>()?;
    if frames {
        let mut body = lines.join("\n");
        body.push('\n');
        write_out(Some(&out_dir.join("frames.jsonl")), body.as_bytes())?;
    }
    Ok(())
}

fn eval(
    pred: &Path,
    gt: Option<&Path>,
    classes: &str,
    conf: f64,
    json: Option<&Path>,
) -> Result<()> {
    let classes =
        EvalClass::parse_set(classes).with_context(|| format!("unknown classes {classes:?}"))?;
    let mut frames = load_frames(pred)?;
    if let Some(gt) = gt {
        let mut by_id: BTreeMap<String, FrameSample> = BTreeMap::new();
        for f in load_frames(gt)? {
            if by_id.insert(f.frame_id.clone(), f).is_some() {
                bail!("duplicate frame id in {}", gt.display());
            }
        }
        for p in frames {
            let f = by_id
                .get_mut(&p.frame_id)
                .with_context(|| format!("prediction for unknown frame {:?}", p.frame_id))?;
            f.predictions.extend(p.predictions);
        }
        frames = by_id.into_values().collect();
    }
    let cfg = EvalConfig {
        conf_threshold: conf,
        ..EvalConfig::default()
    };
    let report = evaluate(&frames, &classes, &cfg)?;
    print!("{}", report.to_table());
    if let Some(p) = json {
        write_out(Some(p), &serde_json::to_vec_pretty(&report)?)?;
    }
    Ok(())
}

fn stats(manifest: &Path, extent: f64, json: Option<&Path>) -> Result<()> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let entries: Vec<Value> = serde_json::from_slice(&read(manifest)?)
        .with_context(|| format!("parsing {}", manifest.display()))?;
    let records: Vec<SceneRecord> = entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let field = |k: &str| {
                e.get(k)
                    .and_then(Value::as_str)
                    .with_context(|| format!("manifest entry {i}: missing string {k:?}"))
            };
            let prior = load_map(&base.join(field("prior")?))?;
            let cs = load_changes(&base.join(field("changes")?))?;
            let poses = load_poses(&base.join(field("poses")?))?;
            SceneRecord::from_change(field("split")?, &prior, &cs, poses)
                .with_context(|| format!("manifest entry {i}"))
        })
        .collect::<Result<_>>()?;
    let table = compute_stats(&records, extent);
    print!("{}", table.to_text());
    if let Some(p) = json {
        write_out(Some(p), &serde_json::to_vec_pretty(&table)?)?;
    }
    Ok(())
}

fn render(
    input: &Path,
    changes: Option<&Path>,
    frame_id: Option<&str>,
    output: Option<&Path>,
) -> Result<()> {
    let svg = if input.extension().is_some_and(|e| e == "jsonl") {
        let frames = load_frames(input)?;
        let frame = match frame_id {
            Some(id) => frames.iter().find(|f| f.frame_id == id),
            None => frames.first(),
        }
        .context("frame not found")?;
        render_frame_svg(frame)
    } else {
        let scene = load_map(input)?;
        let cs = changes.map(load_changes).transpose()?;
        render_svg(&scene, cs.as_ref())
    };
    write_out(output, svg.as_bytes())
}

fn gap(val: &Path, test: &Path) -> Result<()> {
    let load = |p: &Path| -> Result<EvalReport> {
        serde_json::from_slice(&read(p)?).with_context(|| format!("parsing {}", p.display()))
    };
    let g = gap_compare(&load(val)?, &load(test)?)?;
    let cell = |v: Option<f64>| v.map_or_else(|| "--".to_string(), |x| format!("{x:+.1}"));
    println!("{:<8} {:>8} {:>8}", "class", "Δ mAP_c", "Δ mAcc_c");
    for r in &g.rows {
        println!(
            "{:<8} {:>8} {:>8}",
            r.class.short(),
            cell(r.delta_map),
            cell(r.delta_macc)
        );
    }
    println!(
        "Δ mAPC {}  Δ mACC {}",
        cell(g.delta_mapc),
        cell(g.delta_macc)
    );
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .context("configuring thread pool")?;
    }
    match cli.command {
        Command::Validate {
            maps,
            changes,
            prior,
        } => validate(&maps, changes.as_deref(), prior.as_deref()),
        Command::Diff { prior, gt, output } => {
            let cs = diff_maps(&load_map(&prior)?, &load_map(&gt)?)?;
            write_out(output.as_deref(), &changeset_to_json(&cs))
        }
        Command::Apply {
            scene,
            changes,
            output,
        } => {
            let out = apply_changeset(&load_map(&scene)?, &load_changes(&changes)?)?;
            write_out(output.as_deref(), &serialize_map(&out))
        }
        Command::Invert {
            scene,
            changes,
            output,
        } => {
            let inv = invert_changeset(&load_changes(&changes)?, &load_map(&scene)?)?;
            write_out(output.as_deref(), &changeset_to_json(&inv))
        }
        Command::Perturb {
            gt,
            mode,
            seed,
            config,
            poses,
            sigma,
            p_del,
            p_shift,
            output,
            changes,
            log,
        } => perturb(
            &gt,
            mode,
            seed,
            config.as_deref(),
            poses.as_deref(),
            (sigma, p_del, p_shift),
            &output,
            changes.as_deref(),
            log.as_deref(),
        ),
        Command::Merge { scene, output } => {
            let merged = unify_crossing_orientation(&merge_elements(&load_map(&scene)?))?;
            write_out(output.as_deref(), &serialize_map(&merged))
        }
        Command::Crop {
            scene,
            poses,
            extent,
            changes,
            out_dir,
            frames,
        } => crop(&scene, &poses, extent, changes.as_deref(), &out_dir, frames),
        Command::Eval {
            pred,
            gt,
            classes,
            conf_threshold,
            json,
        } => eval(
            &pred,
            gt.as_deref(),
            &classes,
            conf_threshold,
            json.as_deref(),
        ),
        Command::Stats {
            manifest,
            extent,
            json,
        } => stats(&manifest, extent, json.as_deref()),
        Command::Render {
            input,
            changes,
            frame_id,
            output,
        } => render(
            &input,
            changes.as_deref(),
            frame_id.as_deref(),
            output.as_deref(),
        ),
        Command::Gap { val, test } => gap(&val, &test),
        Command::Synth {
            seed,
            config,
            output,
            poses,
        } => {
            let cfg: SyntheticConfig = match config {
                Some(p) => serde_json::from_slice(&read(&p)?)
                    .with_context(|| format!("parsing {}", p.display()))?,
                None => SyntheticConfig::default(),
            };
            let (scene, trajectory) = road_scene(&cfg, seed);
            write_out(Some(&output), &serialize_map(&scene))?;
            write_out(Some(&poses), &serialize_poses(&trajectory))
        }
    }
}
