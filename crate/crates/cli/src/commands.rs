use crate::config::RunConfig;
use crate::render;
use rayon::prelude::*;
use shapereg::data_io::{
    format_annotations, format_detections, image_id_from_path, list_txt_files, load_dataset_dir, load_record,
    read_detections, read_raster, write_raster, AnnotationFormat, RasterData,
};
use shapereg::decode::{decode, PredictionRaster};
use shapereg::encode::{encode, AnnotationPolygon, RasterGrid};
use shapereg::evalkit::{finish, match_detections, pair_by_id, ImageReport};
use shapereg::losses::compute_losses;
use shapereg::netplan::{shape_plan, NetplanError};
use shapereg::roundtrip::{roundtrip_image, IouSummary, Noise};
use shapereg::synth::{stacked_lines, synthetic_suite};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Exit 1 for bad input, 2 for results that miss a threshold.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Threshold(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Self::Input(_) => 1,
            Self::Threshold(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Input(m) | Self::Threshold(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

fn input(e: impl ToString) -> Failure {
    Failure::Input(e.to_string())
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn save_config(cfg: &RunConfig, dir: &Path) -> Result<(), Failure> {
    cfg.write_to(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Per-image noise seed, independent of which other files are present.
fn image_seed(seed: u64, image_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in image_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed
}

fn report_errors(errors: &[String]) -> Outcome {
    for e in errors {
        eprintln!("error: {e}");
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::Input(format!("{} file(s) failed", errors.len())))
    }
}

fn files_with_extension(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, Failure> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == ext))
        .collect();
    files.sort();
    Ok(files)
}

pub fn encode_dir(gt_dir: &Path, format: AnnotationFormat, out_dir: &Path, cfg: &RunConfig) -> Outcome {
    let files = list_txt_files(gt_dir).map_err(input)?;
    ensure_dir(out_dir)?;
    let results: Vec<Result<(usize, usize), String>> = files
        .par_iter()
        .map(|path| {
            let record = load_record(path, format).map_err(|e| e.to_string())?;
            for d in &record.diagnostics {
                eprintln!("note: {}: {d}", path.display());
            }
            let grid = RasterGrid::for_image(record.image_size.0, record.image_size.1, cfg.stride)
                .map_err(|e| e.to_string())?;
            let (labels, diag) = encode(&record.annotations, grid).map_err(|e| format!("{}: {e}", path.display()))?;
            let out = out_dir.join(format!("{}.msrr", record.image_id));
            write_raster(&out, &RasterData::Labels(labels)).map_err(|e| e.to_string())?;
            Ok((record.annotations.len(), diag.conflicts))
        })
        .collect();
    let mut errors = Vec::new();
    let (mut files_ok, mut instances, mut conflicts) = (0, 0, 0);
    for r in results {
        match r {
            Ok((n, c)) => {
                files_ok += 1;
                instances += n;
                conflicts += c;
            }
            Err(e) => errors.push(e),
        }
    }
    save_config(cfg, out_dir)?;
    println!("encoded files={files_ok} instances={instances} conflicts={conflicts}");
    report_errors(&errors)
}

fn as_prediction(raster: RasterData) -> PredictionRaster {
    match raster {
        RasterData::Labels(l) => PredictionRaster::from_labels(&l),
        RasterData::Prediction(p) => p,
    }
}

pub fn decode_dir(pred_dir: &Path, out_dir: &Path, cfg: &RunConfig) -> Outcome {
    let files = files_with_extension(pred_dir, "msrr")?;
    ensure_dir(out_dir)?;
    let dcfg = cfg.decode_config();
    let results: Vec<Result<(usize, usize), String>> = files
        .par_iter()
        .map(|path| {
            let id = image_id_from_path(path);
            let mut pred = as_prediction(read_raster(path).map_err(|e| e.to_string())?);
            if cfg.noise_sigma > 0.0 {
                pred = pred.with_distance_noise(cfg.noise_sigma, image_seed(cfg.seed, &id));
            }
            let out = decode(&pred, &dcfg);
            let text = format_detections(&out.detections);
            fs::write(out_dir.join(format!("{id}.txt")), text).map_err(|e| format!("{}: {e}", out_dir.display()))?;
            Ok((out.detections.len(), out.rejected.len()))
        })
        .collect();
    let mut errors = Vec::new();
    let (mut files_ok, mut detections, mut rejected) = (0, 0, 0);
    for r in results {
        match r {
            Ok((d, x)) => {
                files_ok += 1;
                detections += d;
                rejected += x;
            }
            Err(e) => errors.push(e),
        }
    }
    save_config(cfg, out_dir)?;
    println!("decoded files={files_ok} detections={detections} rejected={rejected}");
    report_errors(&errors)
}

pub fn roundtrip_dir(gt_dir: &Path, format: AnnotationFormat, report: &Path, cfg: &RunConfig) -> Outcome {
    let records = load_dataset_dir(gt_dir, format).map_err(input)?;
    let dcfg = cfg.decode_config();
    let results: Vec<Result<_, String>> = records
        .par_iter()
        .map(|rec| {
            let noise = (cfg.noise_sigma > 0.0)
                .then(|| Noise { sigma: cfg.noise_sigma, seed: image_seed(cfg.seed, &rec.image_id) });
            roundtrip_image(&rec.annotations, rec.image_size, cfg.stride, &dcfg, noise)
                .map_err(|e| format!("{}: {e}", rec.image_id))
        })
        .collect();

    let mut table = String::from("image_id instance iou\n");
    let mut all = Vec::new();
    let mut errors = Vec::new();
    let mut preserved = true;
    let (mut annotations, mut detections) = (0, 0);
    for (rec, r) in records.iter().zip(results) {
        match r {
            Ok(rt) => {
                for (i, iou) in rt.ious.iter().enumerate() {
                    let _ = writeln!(table, "{} {i} {iou:.6}", rec.image_id);
                }
                all.extend_from_slice(&rt.ious);
                preserved &= rt.detections == rt.annotations;
                annotations += rt.annotations;
                detections += rt.detections;
            }
            Err(e) => errors.push(e),
        }
    }
    let summary = IouSummary::from_values(&all);
    let mut text = table;
    let _ = writeln!(text, "instances={}", summary.count);
    let _ = writeln!(text, "mean_iou={:.6}", summary.mean);
    let _ = writeln!(text, "min_iou={:.6}", summary.min);
    let _ = writeln!(text, "annotations={annotations}");
    let _ = writeln!(text, "detections={detections}");
    let _ = writeln!(text, "count_preserved={preserved}");
    let dir = parent_dir(report);
    ensure_dir(&dir)?;
    write_file(report, &text)?;
    save_config(cfg, &dir)?;
    println!(
        "roundtrip instances={} mean_iou={:.6} min_iou={:.6} count_preserved={preserved}",
        summary.count, summary.mean, summary.min
    );
    report_errors(&errors)?;
    let mut missed = Vec::new();
    if summary.count > 0 && summary.mean < cfg.min_mean_iou {
        missed.push(format!("mean IoU {:.4} below {}", summary.mean, cfg.min_mean_iou));
    }
    if summary.count > 0 && summary.min < cfg.min_instance_iou {
        missed.push(format!("min IoU {:.4} below {}", summary.min, cfg.min_instance_iou));
    }
    if missed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Threshold(missed.join("; ")))
    }
}

pub fn eval_dirs(
    det_dir: &Path,
    gt_dir: &Path,
    format: AnnotationFormat,
    report: Option<&Path>,
    per_image: Option<&Path>,
    cfg: &RunConfig,
) -> Outcome {
    let gts: Vec<(String, Vec<AnnotationPolygon>)> =
        load_dataset_dir(gt_dir, format).map_err(input)?.into_iter().map(|r| (r.image_id, r.annotations)).collect();
    let dets = list_txt_files(det_dir)
        .map_err(input)?
        .iter()
        .map(|p| Ok((image_id_from_path(p), read_detections(p)?)))
        .collect::<Result<Vec<_>, shapereg::data_io::DataError>>()
        .map_err(input)?;
    let ecfg = cfg.eval_config();
    let (pairs, missing_dets, missing_gts) = pair_by_id(&dets, &gts, ecfg.allow_missing).map_err(input)?;
    let per: Vec<ImageReport> = pairs
        .par_iter()
        .map(|(id, d, g)| ImageReport { image_id: id.clone(), report: match_detections(d, g, &ecfg) })
        .collect();
    let result = finish(per, missing_dets, missing_gts);
    let kv = result.to_key_values(&ecfg);
    print!("{kv}");
    if let Some(path) = report {
        let dir = parent_dir(path);
        ensure_dir(&dir)?;
        write_file(path, &kv)?;
        save_config(cfg, &dir)?;
    }
    if let Some(path) = per_image {
        ensure_dir(&parent_dir(path))?;
        write_file(path, &result.per_image_table())?;
    }
    Ok(())
}

pub fn render_svg(gt: Option<&Path>, det: Option<&Path>, format: AnnotationFormat, out: &Path, quads: bool) -> Outcome {
    let (gts, size) = match gt {
        Some(p) => {
            let rec = load_record(p, format).map_err(input)?;
            (rec.annotations, Some(rec.image_size))
        }
        None => (Vec::new(), None),
    };
    let dets = match det {
        Some(p) => read_detections(p).map_err(input)?,
        None => Vec::new(),
    };
    let svg = render::svg(&render::layers(&gts, &dets, quads), size);
    ensure_dir(&parent_dir(out))?;
    write_file(out, &svg)
}

pub fn netplan(height: usize, width: usize, channels: usize, strides: &[usize]) -> Outcome {
    let plan = shape_plan(height, width, channels, strides).map_err(|e| match e {
        NetplanError::Misaligned { .. } => Failure::Threshold(e.to_string()),
        _ => Failure::Input(e.to_string()),
    })?;
    print!("{plan}");
    plan.check().map_err(|e| Failure::Threshold(e.to_string()))?;
    println!("aligned=true");
    Ok(())
}

pub fn loss(pred: &Path, labels: &Path, cfg: &RunConfig) -> Outcome {
    let pred = as_prediction(read_raster(pred).map_err(input)?);
    let labels = match read_raster(labels).map_err(input)? {
        RasterData::Labels(l) => l,
        RasterData::Prediction(_) => return Err(Failure::Input("label file holds a prediction raster".into())),
    };
    let report = compute_losses(&pred, &labels, &cfg.loss_config()).map_err(input)?;
    println!("cls={:.9}", report.cls);
    println!("reg={:.9}", report.reg);
    println!("total={:.9}", report.total);
    Ok(())
}

pub enum SynthKind {
    Suite,
    Stacked { lines: usize, gap: f64 },
}

pub fn synth(out_dir: &Path, format: AnnotationFormat, count: usize, kind: SynthKind, cfg: &RunConfig) -> Outcome {
    let images: Vec<(Vec<AnnotationPolygon>, (usize, usize))> = match kind {
        SynthKind::Suite => {
            synthetic_suite(count, cfg.seed).into_iter().map(|i| (vec![i.annotation], i.image_size)).collect()
        }
        SynthKind::Stacked { lines, gap } => {
            (0..count).map(|k| stacked_lines(lines, 200.0 + 40.0 * k as f64, 40.0, gap)).collect()
        }
    };
    let quad_only = matches!(format, AnnotationFormat::Icdar2015 | AnnotationFormat::MsraTd500);
    if quad_only && images.iter().flat_map(|(a, _)| a).any(|a| !a.is_quad()) {
        return Err(Failure::Input(format!("{format} cannot represent curved annotations")));
    }
    ensure_dir(out_dir)?;
    for (i, (anns, size)) in images.iter().enumerate() {
        let path = out_dir.join(format!("synth_{i:04}.txt"));
        write_file(&path, &format_annotations(format, anns, Some(*size)))?;
    }
    save_config(cfg, out_dir)?;
    println!("synth files={}", images.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_seed_depends_on_id_and_seed() {
        assert_eq!(image_seed(1, "a"), image_seed(1, "a"));
        assert_ne!(image_seed(1, "a"), image_seed(1, "b"));
        assert_ne!(image_seed(1, "a"), image_seed(2, "a"));
    }

    #[test]
    fn parent_of_bare_file_is_cwd() {
        assert_eq!(parent_dir(Path::new("report.txt")), PathBuf::from("."));
        assert_eq!(parent_dir(Path::new("out/report.txt")), PathBuf::from("out"));
    }
}
