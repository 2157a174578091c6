//! `shapereg`: batch front end for the shape-regression codec.
//!
//! Exit status: 0 on success, 1 on bad input, 2 when a result misses a
//! configured threshold.

mod commands;
mod config;
mod render;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::{Failure, SynthKind};
use config::RunConfig;
use shapereg::data_io::AnnotationFormat;
use shapereg::evalkit::EvalMode;
use shapereg::netplan::RESNET_STRIDES;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "shapereg", version, about = "Shape-regression text geometry toolkit")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, env = "SHAPEREG_CONFIG")]
    config: Option<PathBuf>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long, global = true)]
    stride: Option<usize>,
    /// Alpha radius in normalized units (`inf` for the convex hull).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    prob_threshold: Option<f64>,
    #[arg(long, global = true)]
    iou_threshold: Option<f64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, global = true)]
    min_points: Option<usize>,
    #[arg(long, global = true)]
    min_cells: Option<usize>,
    #[arg(long, global = true)]
    smooth_radius: Option<usize>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Gaussian noise (pixels) added to distance maps before decoding.
    #[arg(long, global = true)]
    noise_sigma: Option<f64>,
    #[arg(long, global = true)]
    min_mean_iou: Option<f64>,
    #[arg(long, global = true)]
    min_instance_iou: Option<f64>,
    /// Skip images that only one side of an evaluation knows about.
    #[arg(long, global = true)]
    allow_missing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Polygon,
    Quad,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Ctw1500,
    Icdar2015,
    MsraTd500,
    Totaltext,
}

impl From<FormatArg> for AnnotationFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Ctw1500 => AnnotationFormat::Ctw1500,
            FormatArg::Icdar2015 => AnnotationFormat::Icdar2015,
            FormatArg::MsraTd500 => AnnotationFormat::MsraTd500,
            FormatArg::Totaltext => AnnotationFormat::TotalText,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Annotation files -> MSRR label rasters.
    Encode {
        #[arg(long)]
        gt_dir: PathBuf,
        #[arg(long, value_enum)]
        format: FormatArg,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// MSRR prediction (or label) rasters -> detection files.
    Decode {
        #[arg(long)]
        pred_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Encode, decode and compare every annotation.
    Roundtrip {
        #[arg(long)]
        gt_dir: PathBuf,
        #[arg(long, value_enum)]
        format: FormatArg,
        #[arg(long)]
        report: PathBuf,
    },
    /// Precision, recall and F-score of detection files.
    Eval {
        #[arg(long)]
        det_dir: PathBuf,
        #[arg(long)]
        gt_dir: PathBuf,
        #[arg(long, value_enum)]
        format: FormatArg,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        per_image: Option<PathBuf>,
    },
    /// SVG overlay of ground truth and detections.
    Render {
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        det: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "totaltext")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
        /// Add a layer with the oriented rectangle of each detection.
        #[arg(long)]
        quads: bool,
    },
    /// Feature-map shapes and fusion alignment of the detector backbone.
    Netplan {
        height: usize,
        width: usize,
        #[arg(default_value_t = 2)]
        channels: usize,
        #[arg(long, value_delimiter = ',', default_values_t = RESNET_STRIDES)]
        strides: Vec<usize>,
    },
    /// Classification and regression loss of a prediction against labels.
    Loss {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Write synthetic annotation files.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "totaltext")]
        format: FormatArg,
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Stack this many parallel lines per image instead of the mixed suite.
        #[arg(long)]
        stacked: Option<usize>,
        /// Gap between stacked lines as a fraction of line height.
        #[arg(long, default_value_t = 0.5)]
        gap: f64,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(Failure::Input)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = o.stride {
        cfg.stride = v;
    }
    if let Some(v) = o.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = o.prob_threshold {
        cfg.prob_threshold = v;
    }
    if let Some(v) = o.iou_threshold {
        cfg.iou_threshold = v;
    }
    if let Some(m) = o.mode {
        cfg.mode = match m {
            ModeArg::Polygon => EvalMode::Polygon,
            ModeArg::Quad => EvalMode::Quad,
        };
    }
    if let Some(v) = o.min_points {
        cfg.min_points = v;
    }
    if let Some(v) = o.min_cells {
        cfg.min_cells = Some(v);
    }
    if let Some(v) = o.smooth_radius {
        cfg.smooth_radius = v;
    }
    if let Some(v) = o.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.noise_sigma {
        cfg.noise_sigma = v;
    }
    if let Some(v) = o.min_mean_iou {
        cfg.min_mean_iou = v;
    }
    if let Some(v) = o.min_instance_iou {
        cfg.min_instance_iou = v;
    }
    if o.allow_missing {
        cfg.allow_missing = true;
    }
    cfg.validate().map_err(Failure::Input)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = build_config(&cli)?;
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::Input(e.to_string()))?;
    }
    match cli.command {
        Command::Encode { gt_dir, format, out_dir } => commands::encode_dir(&gt_dir, format.into(), &out_dir, &cfg),
        Command::Decode { pred_dir, out_dir } => commands::decode_dir(&pred_dir, &out_dir, &cfg),
        Command::Roundtrip { gt_dir, format, report } => commands::roundtrip_dir(&gt_dir, format.into(), &report, &cfg),
        Command::Eval { det_dir, gt_dir, format, report, per_image } => {
            commands::eval_dirs(&det_dir, &gt_dir, format.into(), report.as_deref(), per_image.as_deref(), &cfg)
        }
        Command::Render { gt, det, format, out, quads } => {
            commands::render_svg(gt.as_deref(), det.as_deref(), format.into(), &out, quads)
        }
        Command::Netplan { height, width, channels, strides } => commands::netplan(height, width, channels, &strides),
        Command::Loss { pred, labels } => commands::loss(&pred, &labels, &cfg),
        Command::Synth { out_dir, format, count, stacked, gap } => {
            let kind = match stacked {
                Some(lines) => SynthKind::Stacked { lines, gap },
                None => SynthKind::Suite,
            };
            commands::synth(&out_dir, format.into(), count, kind, &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
