//! Batch command-line front end.
//!
//! Exit statuses: 0 on success, 1 on I/O or engine failures, 2 on usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::engines::{self, Diagnostics, LabelMap, SegmentationResult};
use crate::error::Error;
use crate::fcm::{self, ClusterParams, FeatureVector, ImageGrid, InitSpec};
use crate::imageio::{self, Palette};
use crate::phantom::{self, NoiseModel, PhantomSpec, Region, Shape};

pub const EXIT_OK: u8 = 0;
pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fuzzyseg",
    version,
    about = "K-Means, FCM and spatial FCM segmentation of grayscale images"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment one image with one algorithm.
    Segment(SegmentArgs),
    /// Generate a synthetic phantom and its ground-truth label image.
    Phantom(PhantomArgs),
    /// Run all three algorithms with a shared initialisation and score them against a truth map.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Kmeans,
    Fcm,
    Sfcm,
}

impl Algorithm {
    fn driver(
        self,
    ) -> fn(
        &FeatureVector,
        usize,
        usize,
        fcm::Centroids,
        &ClusterParams,
    ) -> crate::Result<SegmentationResult> {
        match self {
            Algorithm::Kmeans => engines::kmeans_from,
            Algorithm::Fcm => engines::fcm_from,
            Algorithm::Sfcm => engines::sfcm_from,
        }
    }
}

/// `random` or `list:v1,v2,...` in raw intensity units.
#[derive(Debug, Clone, PartialEq)]
pub struct InitArg(pub InitSpec);

impl FromStr for InitArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "random" {
            return Ok(InitArg(InitSpec::SeededRandom));
        }
        let list = s
            .strip_prefix("list:")
            .ok_or_else(|| format!("expected `random` or `list:v1,v2,...`, got `{s}`"))?;
        list.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad centroid `{v}`: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|v| InitArg(InitSpec::Explicit(v)))
    }
}

/// `none`, `salt:FRACTION` or `gauss:SIGMA`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseArg(pub NoiseModel);

impl FromStr for NoiseArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| format!("bad noise level `{v}`: {e}"))
        };
        let model = match s.split_once(':') {
            None if s == "none" => NoiseModel::None,
            Some(("salt", v)) => NoiseModel::Salt(parse(v)?),
            Some(("gauss", v)) => NoiseModel::Gaussian(parse(v)?),
            _ => return Err(format!("expected none, salt:F or gauss:SIGMA, got `{s}`")),
        };
        model.validate().map_err(|e| e.to_string())?;
        Ok(NoiseArg(model))
    }
}

/// `RADIUS:INTENSITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscArg {
    pub radius: f64,
    pub intensity: u8,
}

impl FromStr for DiscArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (r, i) = s
            .split_once(':')
            .ok_or_else(|| format!("expected RADIUS:INTENSITY, got `{s}`"))?;
        Ok(DiscArg {
            radius: r.parse().map_err(|e| format!("bad radius `{r}`: {e}"))?,
            intensity: i.parse().map_err(|e| format!("bad intensity `{i}`: {e}"))?,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    #[arg(long)]
    pub clusters: usize,
    #[arg(long, default_value_t = ClusterParams::DEFAULT_FUZZINESS)]
    pub fuzziness: f64,
    #[arg(long = "max-iter", default_value_t = ClusterParams::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = ClusterParams::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long = "p", default_value_t = 1.0)]
    pub p: f64,
    #[arg(long = "q", default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1)]
    pub radius: usize,
    #[arg(long, default_value = "random")]
    pub init: InitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl EngineArgs {
    fn params(&self) -> Result<ClusterParams, Failure> {
        let params = ClusterParams {
            clusters: self.clusters,
            fuzziness: self.fuzziness,
            p: self.p,
            q: self.q,
            radius: self.radius,
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            init: self.init.0.clone(),
            seed: self.seed,
        };
        if params.clusters < 2 {
            return Err(Failure::Usage("--clusters: must be at least 2".into()));
        }
        params.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => {
                Failure::Usage(format!("{}: {reason}", flag_for(name)))
            }
            other => Failure::Usage(other.to_string()),
        })?;
        Ok(params)
    }
}

fn flag_for(param: &str) -> &'static str {
    match param {
        "clusters" => "--clusters",
        "fuzziness" => "--fuzziness",
        "p" => "--p",
        "q" => "--q",
        "radius" => "--radius",
        "epsilon" => "--epsilon",
        "max_iter" => "--max-iter",
        "init" => "--init",
        _ => "engine flags",
    }
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    #[arg(long, value_enum)]
    pub algo: Algorithm,
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long = "out-prefix")]
    pub out_prefix: String,
    /// Ground-truth label image; adds metrics to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Store the wall time in the report (makes the report run-dependent).
    #[arg(long = "record-timing")]
    pub record_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PhantomArgs {
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    /// Horizontal band intensities, top to bottom.
    #[arg(long, value_delimiter = ',')]
    pub bands: Vec<u8>,
    /// Centred discs as RADIUS:INTENSITY, painted over the bands in order.
    #[arg(long, value_delimiter = ',')]
    pub discs: Vec<DiscArg>,
    /// Background intensity used when only discs are given.
    #[arg(long, default_value_t = 0)]
    pub background: u8,
    #[arg(long, default_value = "none")]
    pub noise: NoiseArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "out-image")]
    pub out_image: PathBuf,
    #[arg(long = "out-truth")]
    pub out_truth: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long = "record-timing")]
    pub record_timing: bool,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Serialises a float as a plain decimal literal, never in exponent form.
fn decimal<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !v.is_finite() {
        return s.serialize_none();
    }
    let raw = RawValue::from_string(format!("{v}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

fn decimal_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => decimal(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Serialize)]
struct Decimal(#[serde(serialize_with = "decimal")] f64);

fn decimals<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|&x| Decimal(x)))
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitEcho {
    Random,
    List {
        #[serde(serialize_with = "decimals")]
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamsEcho {
    pub clusters: usize,
    #[serde(serialize_with = "decimal")]
    pub fuzziness: f64,
    #[serde(serialize_with = "decimal")]
    pub p: f64,
    #[serde(serialize_with = "decimal")]
    pub q: f64,
    pub radius: usize,
    #[serde(serialize_with = "decimal")]
    pub epsilon: f64,
    pub max_iter: usize,
    pub init: InitEcho,
    pub seed: u64,
}

impl From<&ClusterParams> for ParamsEcho {
    fn from(p: &ClusterParams) -> Self {
        Self {
            clusters: p.clusters,
            fuzziness: p.fuzziness,
            p: p.p,
            q: p.q,
            radius: p.radius,
            epsilon: p.epsilon,
            max_iter: p.max_iter,
            init: match &p.init {
                InitSpec::SeededRandom => InitEcho::Random,
                InitSpec::Explicit(v) => InitEcho::List { values: v.clone() },
            },
            seed: p.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    #[serde(serialize_with = "decimal")]
    pub misclassification_rate: f64,
    pub isolated_pixels: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub params: ParamsEcho,
    pub iterations_run: usize,
    pub converged: bool,
    #[serde(serialize_with = "decimal")]
    pub final_objective: f64,
    #[serde(serialize_with = "decimal_opt")]
    pub wall_time_ms: Option<f64>,
    #[serde(serialize_with = "decimals")]
    pub centroids: Vec<f64>,
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    pub diagnostics: Diagnostics,
}

impl RunReport {
    fn new(algorithm: Algorithm, result: &SegmentationResult, wall_time_ms: Option<f64>) -> Self {
        Self {
            algorithm,
            params: ParamsEcho::from(&result.params),
            iterations_run: result.iterations_run,
            converged: result.converged,
            final_objective: result.trace.last().map_or(0.0, |r| r.objective),
            wall_time_ms,
            centroids: result.centroids.values().to_vec(),
            outputs: BTreeMap::new(),
            metrics: None,
            diagnostics: result.diagnostics,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub input: String,
    pub truth: String,
    pub clusters: usize,
    #[serde(serialize_with = "decimals")]
    pub shared_init: Vec<f64>,
    pub algorithms: Vec<RunReport>,
}

fn read_image(path: &Path) -> Result<ImageGrid, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    imageio::load_grayscale(&bytes)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Failure> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn score(result: &SegmentationResult, truth: &LabelMap, radius: usize) -> Result<Metrics, Failure> {
    let c = result.params.clusters.max(truth.label_count());
    Ok(Metrics {
        misclassification_rate: phantom::misclassification_rate(&result.labels, truth, c)?,
        isolated_pixels: phantom::isolated_pixel_count(&result.labels, radius),
    })
}

fn load_truth(path: &Path, image: &ImageGrid) -> Result<LabelMap, Failure> {
    let truth = imageio::labels_by_rank(&read_image(path)?);
    if (truth.width(), truth.height()) != (image.width(), image.height()) {
        return Err(Failure::Runtime(format!(
            "truth is {}x{} but input is {}x{}",
            truth.width(),
            truth.height(),
            image.width(),
            image.height()
        )));
    }
    Ok(truth)
}

pub fn cmd_segment(args: &SegmentArgs) -> Result<(), Failure> {
    let params = args.engine.params()?;
    let image = read_image(&args.input)?;
    let truth = args
        .truth
        .as_deref()
        .map(|p| load_truth(p, &image))
        .transpose()?;

    let start = Instant::now();
    let result = match args.algo {
        Algorithm::Kmeans => engines::run_kmeans(&image, &params)?,
        Algorithm::Fcm => engines::run_fcm(&image, &params)?,
        Algorithm::Sfcm => engines::run_sfcm(&image, &params)?,
    };
    let elapsed = start.elapsed().as_secs_f64() * 1e3;

    let c = params.clusters;
    let prefix = &args.out_prefix;
    let mut report = RunReport::new(args.algo, &result, args.record_timing.then_some(elapsed));

    let labels_path = format!("{prefix}_labels.pgm");
    imageio::save_label_map(&result.labels, c, create(Path::new(&labels_path))?)?;
    report.outputs.insert("labels".into(), labels_path);

    let color_path = format!("{prefix}_color.ppm");
    imageio::save_pseudocolor(
        &result.labels,
        &Palette::qualitative(c),
        create(Path::new(&color_path))?,
    )?;
    report.outputs.insert("color".into(), color_path);

    if args.algo != Algorithm::Kmeans {
        let trace_path = format!("{prefix}_trace.csv");
        imageio::write_convergence_csv(&result.trace, create(Path::new(&trace_path))?)?;
        report.outputs.insert("trace".into(), trace_path);
    }

    let report_path = format!("{prefix}_report.json");
    report.outputs.insert("report".into(), report_path.clone());
    if let Some(truth) = &truth {
        report.metrics = Some(score(&result, truth, params.radius)?);
    }
    write_json(Path::new(&report_path), &report)
}

pub fn phantom_spec(args: &PhantomArgs) -> Result<PhantomSpec, Failure> {
    let mut regions: Vec<Region> = args
        .bands
        .iter()
        .map(|&intensity| Region {
            shape: Shape::Band,
            intensity,
        })
        .collect();
    if regions.is_empty() {
        if args.discs.is_empty() {
            return Err(Failure::Usage(
                "--bands: give at least one band or disc".into(),
            ));
        }
        regions.push(Region {
            shape: Shape::Band,
            intensity: args.background,
        });
    }
    regions.extend(args.discs.iter().map(|d| Region {
        shape: Shape::Disc { radius: d.radius },
        intensity: d.intensity,
    }));
    let spec = PhantomSpec {
        width: args.width,
        height: args.height,
        regions,
        noise: args.noise.0,
        seed: args.seed,
    };
    spec.validate().map_err(|e| match e {
        Error::InvalidParameter {
            name: "width",
            reason,
        } => Failure::Usage(format!("--width/--height: {reason}")),
        Error::InvalidParameter {
            name: "noise",
            reason,
        } => Failure::Usage(format!("--noise: {reason}")),
        Error::InvalidParameter { reason, .. } => {
            Failure::Usage(format!("--bands/--discs: {reason}"))
        }
        other => Failure::Usage(other.to_string()),
    })?;
    Ok(spec)
}

pub fn cmd_phantom(args: &PhantomArgs) -> Result<(), Failure> {
    let spec = phantom_spec(args)?;
    let (image, truth) = phantom::generate_phantom(&spec)?;
    imageio::save_grayscale(&image, create(&args.out_image)?)?;
    imageio::save_label_map(&truth, spec.regions.len().max(2), create(&args.out_truth)?)?;
    Ok(())
}

pub fn compare_report(args: &CompareArgs) -> Result<CompareReport, Failure> {
    let params = args.engine.params()?;
    let image = read_image(&args.input)?;
    let truth = load_truth(&args.truth, &image)?;

    let features = fcm::normalize_intensities(&image);
    let init = engines::init_centroids(&params, &features, image.bit_depth())?;
    let (w, h) = (image.width(), image.height());
    let algos = [Algorithm::Kmeans, Algorithm::Fcm, Algorithm::Sfcm];

    let runs: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = algos
            .iter()
            .map(|&algo| {
                let (features, params, start) = (&features, &params, init.centroids.clone());
                scope.spawn(move || {
                    let t0 = Instant::now();
                    let r = algo.driver()(features, w, h, start, params);
                    (r, t0.elapsed().as_secs_f64() * 1e3)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("engine thread panicked"))
            .collect()
    });

    let mut reports = Vec::with_capacity(algos.len());
    for (algo, (result, elapsed)) in algos.into_iter().zip(runs) {
        let mut result = result?;
        result.diagnostics.duplicate_init = init.duplicates;
        let mut report = RunReport::new(algo, &result, args.record_timing.then_some(elapsed));
        report.metrics = Some(score(&result, &truth, params.radius)?);
        reports.push(report);
    }
    Ok(CompareReport {
        input: args.input.display().to_string(),
        truth: args.truth.display().to_string(),
        clusters: params.clusters,
        shared_init: init.centroids.values().to_vec(),
        algorithms: reports,
    })
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    let report = compare_report(args)?;
    write_json(&args.report, &report)
}

/// Parses `argv` and runs the selected command, returning the exit status.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Segment(a) => cmd_segment(a),
        Command::Phantom(a) => cmd_phantom(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Runtime(msg) => eprintln!("fuzzyseg: {msg}"),
            }
            f.exit_code()
        }
    }
}
