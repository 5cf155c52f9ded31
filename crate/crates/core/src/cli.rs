//! Command-line front end: `measure`, `perturb`, `compare`, `disentangle`.
//!
//! Output files (all written into `--out-dir`):
//!
//! * `measure` → `morphometrics.csv` with header
//!   `index,label,length,thickness,slant,width,height,error`. Lengths are in
//!   original pixels and slant is in degrees. Failed images keep their row
//!   with empty attribute fields and an `attribute:reason` error code.
//! * `perturb` → `images.idx`, `pert-labels.idx` (menu position per image),
//!   `labels.idx` when labels were given, and `outcomes.jsonl` with one JSON
//!   object per image (`index`, `class`, `spec`, `seed`, `applied`, `failure`,
//!   `detail`). `--examples N` adds `examples.pgm`, a grid with the first `N`
//!   inputs in the top row and one row per menu entry below it.
//! * `compare` → `compare.json` and `hist-<attribute>.csv` (100 equal-width
//!   bins over the pooled min..max range of both files).
//! * `disentangle` → `partial_correlations.csv` and `disentangle.json`.
//!
//! Menus are comma-separated entries `name[:key=value...]` with names
//! `plain`, `thin`, `thick`, `swel`, `frac`, e.g.
//! `plain,thin:strength=0.5,frac:count=2:thickness=1`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::idx::{self, ByteImage, IdxError, ImageDataset, LabelVector};
use crate::morphometry::{measure, Attribute, MorphometryRecord, DEFAULT_SCALE};
use crate::perturb::{assign, build_mixed_dataset, perturb_image, PerturbSpec};
use crate::stats::{self, AttributeTable, CodeKind, CodeTable, StatsError};

/// Seed used when `--seed` is omitted.
pub const DEFAULT_SEED: u64 = 20_190_101;
pub const SCHEMA_VERSION: u32 = 1;
pub const HISTOGRAM_BINS: usize = 100;
pub const DEFAULT_MIG_BINS: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Idx { path: PathBuf, source: IdxError },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("{0}")]
    Alignment(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Idx { .. } => "format",
            CliError::Io { .. } => "io",
            CliError::Schema { .. } => "schema",
            CliError::Alignment(_) => "alignment",
            CliError::Config(_) => "config",
            CliError::Stats(_) => "stats",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut value = json!({"error": {"kind": self.kind(), "message": self.to_string()}});
        if let CliError::Stats(StatsError::SingularCovariance { attribute, columns }) = self {
            value["error"]["attribute"] = json!(attribute);
            value["error"]["columns"] = json!(columns);
        }
        value
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn schema_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

#[derive(Debug, Parser)]
#[command(name = "morpho", version, about = "Glyph morphometry, perturbation and evaluation")]
pub struct Cli {
    /// Print errors as a JSON object on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Directory receiving the output files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = default_workers())]
    pub workers: usize,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure length, thickness, slant, width and height of every image.
    Measure {
        images: PathBuf,
        labels: Option<PathBuf>,
        /// Upscaling factor of the measurement pipeline.
        #[arg(long, default_value_t = DEFAULT_SCALE)]
        scale: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Build a dataset where each image receives a random menu entry.
    Perturb {
        images: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value = "plain,thin,thick")]
        menu: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SCALE)]
        scale: usize,
        /// Also write a sample sheet of the first N images under every menu entry.
        #[arg(long)]
        examples: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Linear-time MMD test between two morphometrics files.
    Compare {
        real: PathBuf,
        samples: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Partial correlations and MIG between attributes and latent codes.
    Disentangle {
        morphometrics: PathBuf,
        codes: PathBuf,
        /// Extra ground-truth factor columns, appended as attribute rows.
        #[arg(long)]
        factors: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MIG_BINS)]
        bins: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            if cli.json_errors {
                eprintln!("{}", e.to_json());
            } else {
                eprintln!("error: {e}");
            }
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Measure {
            images,
            labels,
            scale,
            common,
        } => cmd_measure(images, labels.as_deref(), *scale, common),
        Command::Perturb {
            images,
            labels,
            menu,
            seed,
            scale,
            examples,
            common,
        } => cmd_perturb(images, labels.as_deref(), menu, *seed, *scale, *examples, common),
        Command::Compare {
            real,
            samples,
            out_dir,
        } => cmd_compare(real, samples, out_dir),
        Command::Disentangle {
            morphometrics,
            codes,
            factors,
            bins,
            out_dir,
        } => cmd_disentangle(morphometrics, codes, factors.as_deref(), *bins, out_dir),
    }
}

fn load_images(path: &Path) -> Result<ImageDataset, CliError> {
    idx::load_images(path).map_err(|source| CliError::Idx {
        path: path.to_path_buf(),
        source,
    })
}

fn load_labels(path: &Path, expected: usize) -> Result<LabelVector, CliError> {
    let labels = idx::load_labels(path).map_err(|source| CliError::Idx {
        path: path.to_path_buf(),
        source,
    })?;
    if labels.count() != expected {
        return Err(CliError::Alignment(format!(
            "{} holds {} labels for {} images",
            path.display(),
            labels.count(),
            expected
        )));
    }
    Ok(labels)
}

fn check_config(scale: usize, workers: usize) -> Result<(), CliError> {
    if scale == 0 {
        return Err(CliError::Config("--scale must be at least 1".into()));
    }
    if workers == 0 {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    Ok(())
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub const MEASURE_HEADER: [&str; 8] = [
    "index", "label", "length", "thickness", "slant", "width", "height", "error",
];

fn measure_row(index: usize, label: Option<u8>, result: &Result<MorphometryRecord, String>) -> Vec<String> {
    let mut row = vec![index.to_string(), label.map_or(String::new(), |l| l.to_string())];
    match result {
        Ok(r) => {
            row.extend(
                [r.length, r.thickness, r.slant.to_degrees(), r.width, r.height]
                    .iter()
                    .map(f64::to_string),
            );
            row.push(String::new());
        }
        Err(code) => {
            row.extend(std::iter::repeat_n(String::new(), 5));
            row.push(code.clone());
        }
    }
    row
}

pub fn cmd_measure(images: &Path, labels: Option<&Path>, scale: usize, common: &Common) -> Result<(), CliError> {
    check_config(scale, common.workers)?;
    let dataset = load_images(images)?;
    let labels = labels.map(|p| load_labels(p, dataset.count())).transpose()?;
    let pool = thread_pool(common.workers)?;
    let results: Vec<Result<MorphometryRecord, String>> = pool.install(|| {
        dataset
            .images
            .par_iter()
            .map(|img| measure(&img.to_gray(), scale).map_err(|e| e.code()))
            .collect()
    });
    prepare_out_dir(&common.out_dir)?;
    let path = common.out_dir.join("morphometrics.csv");
    let mut writer = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    writer.write_record(MEASURE_HEADER).map_err(|e| io_err(&path, e))?;
    for (i, result) in results.iter().enumerate() {
        let label = labels.as_ref().map(|l| l.labels[i]);
        writer
            .write_record(measure_row(i, label, result))
            .map_err(|e| io_err(&path, e))?;
    }
    writer.flush().map_err(|e| io_err(&path, e))
}

/// Parses a menu such as `plain,thin:strength=0.5,frac:count=2`.
pub fn parse_menu(menu: &str) -> Result<Vec<PerturbSpec>, CliError> {
    let entries: Vec<PerturbSpec> = menu
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_menu_entry)
        .collect::<Result<_, _>>()?;
    if entries.is_empty() {
        return Err(CliError::Config("menu is empty".into()));
    }
    if entries.len() > 256 {
        return Err(CliError::Config("menu holds more than 256 entries".into()));
    }
    Ok(entries)
}

fn parse_menu_entry(entry: &str) -> Result<PerturbSpec, CliError> {
    let mut parts = entry.split(':');
    let name = parts.next().unwrap_or_default();
    let mut spec = match name {
        "plain" => PerturbSpec::Identity,
        "thin" => PerturbSpec::thin(),
        "thick" => PerturbSpec::thicken(),
        "swel" => PerturbSpec::swell(),
        "frac" => PerturbSpec::fracture(),
        other => {
            return Err(CliError::Config(format!(
                "unknown menu entry `{other}` (expected plain, thin, thick, swel or frac)"
            )))
        }
    };
    for param in parts {
        let (key, value) = param
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("parameter `{param}` in `{entry}` lacks `=value`")))?;
        let number: f64 = value
            .parse()
            .map_err(|_| CliError::Config(format!("parameter `{key}` in `{entry}` is not a number")))?;
        let unknown = || CliError::Config(format!("`{name}` has no parameter `{key}`"));
        match (&mut spec, key) {
            (PerturbSpec::Thin { strength } | PerturbSpec::Thicken { strength }, "strength") => {
                *strength = number
            }
            (PerturbSpec::Swell { strength, .. }, "strength") => *strength = number,
            (PerturbSpec::Swell { radius_coef, .. }, "radius_coef") => *radius_coef = number,
            (PerturbSpec::Fracture { count, .. }, "count") => {
                if number < 0.0 || number.fract() != 0.0 {
                    return Err(CliError::Config(format!("fracture count must be a whole number, got {value}")));
                }
                *count = number as usize
            }
            (PerturbSpec::Fracture { thickness, .. }, "thickness") => *thickness = number,
            (PerturbSpec::Fracture { min_distance, .. }, "min_distance") => *min_distance = number,
            (PerturbSpec::Fracture { window, .. }, "window") => *window = number,
            (PerturbSpec::Fracture { extension, .. }, "extension") => *extension = number,
            _ => return Err(unknown()),
        }
    }
    spec.validate()
        .map_err(|e| CliError::Config(format!("`{entry}`: {e}")))?;
    Ok(spec)
}

/// Binary PGM holding `rows x cols` tiles of `h x w` pixels.
fn pgm_grid(tiles: &[Vec<ByteImage>], h: usize, w: usize) -> Vec<u8> {
    let rows = tiles.len();
    let cols = tiles.iter().map(Vec::len).max().unwrap_or(0);
    let (gh, gw) = (rows * h, cols * w);
    let mut pixels = vec![0u8; gh * gw];
    for (tr, row) in tiles.iter().enumerate() {
        for (tc, tile) in row.iter().enumerate() {
            for r in 0..h {
                let dst = (tr * h + r) * gw + tc * w;
                pixels[dst..dst + w].copy_from_slice(&tile.pixels[r * w..(r + 1) * w]);
            }
        }
    }
    let mut out = format!("P5\n{gw} {gh}\n255\n").into_bytes();
    out.extend(pixels);
    out
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_perturb(
    images: &Path,
    labels: Option<&Path>,
    menu: &str,
    seed: u64,
    scale: usize,
    examples: Option<usize>,
    common: &Common,
) -> Result<(), CliError> {
    check_config(scale, common.workers)?;
    let menu = parse_menu(menu)?;
    let dataset = load_images(images)?;
    let labels = labels.map(|p| load_labels(p, dataset.count())).transpose()?;
    let empty = LabelVector::default();
    let mixed = build_mixed_dataset(
        &dataset,
        labels.as_ref().unwrap_or(&empty),
        &menu,
        seed,
        scale,
        common.workers,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;

    prepare_out_dir(&common.out_dir)?;
    let dir = &common.out_dir;
    let idx_err = |path: PathBuf| move |source| CliError::Idx { path, source };
    idx::save_images(dir.join("images.idx"), &mixed.images).map_err(idx_err(dir.join("images.idx")))?;
    idx::save_labels(dir.join("pert-labels.idx"), &mixed.classes)
        .map_err(idx_err(dir.join("pert-labels.idx")))?;
    if let Some(labels) = &labels {
        idx::save_labels(dir.join("labels.idx"), labels).map_err(idx_err(dir.join("labels.idx")))?;
    }
    let path = dir.join("outcomes.jsonl");
    let file = File::create(&path).map_err(|e| io_err(&path, e))?;
    let mut out = BufWriter::new(file);
    for outcome in &mixed.outcomes {
        let line = serde_json::to_string(outcome).map_err(|e| io_err(&path, e))?;
        writeln!(out, "{line}").map_err(|e| io_err(&path, e))?;
    }
    out.flush().map_err(|e| io_err(&path, e))?;

    if let Some(n) = examples {
        let n = n.min(dataset.count());
        let originals: Vec<ByteImage> = dataset.images[..n].to_vec();
        let mut tiles = vec![originals];
        for spec in &menu {
            let row = (0..n)
                .map(|i| {
                    let (_, image_seed) = assign(seed, i as u64, menu.len());
                    let img = &dataset.images[i];
                    perturb_image(&img.to_gray(), spec, scale, image_seed)
                        .map_or_else(|_| img.clone(), |(out, _)| ByteImage::from_gray(&out))
                })
                .collect();
            tiles.push(row);
        }
        write_file(&dir.join("examples.pgm"), &pgm_grid(&tiles, dataset.height, dataset.width))?;
    }
    Ok(())
}

type Row = Vec<f64>;

/// Rows of a CSV restricted to `columns`. Rows with an empty field in any of
/// them come back as `None`.
pub fn read_numeric_columns(path: &Path, columns: &[&str]) -> Result<Vec<Option<Vec<f64>>>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = reader.headers().map_err(|e| io_err(path, e))?.clone();
    let positions: Vec<usize> = columns
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| schema_err(path, format!("missing column `{name}`")))
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_err(path, e))?;
        let fields: Vec<&str> = positions.iter().map(|&p| record.get(p).unwrap_or("")).collect();
        if fields.iter().any(|f| f.is_empty()) {
            rows.push(None);
            continue;
        }
        let values = fields
            .iter()
            .zip(columns)
            .map(|(f, name)| {
                f.parse::<f64>()
                    .map_err(|_| schema_err(path, format!("row {}: `{name}` value `{f}` is not a number", line + 1)))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(Some(values));
    }
    Ok(rows)
}

fn attribute_names() -> Vec<&'static str> {
    Attribute::ALL.iter().map(|a| a.name()).collect()
}

fn table_from_rows(names: &[&str], rows: &[Vec<f64>]) -> Result<AttributeTable, CliError> {
    Ok(AttributeTable::from_rows(
        names.iter().map(|s| s.to_string()).collect(),
        rows,
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts_a: Vec<u64>,
    pub counts_b: Vec<u64>,
}

/// Equal-width histogram of both samples over their pooled range.
pub fn pooled_histogram(a: &[f64], b: &[f64], bins: usize) -> Histogram {
    let (lo, hi) = a
        .iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let bin_of = |v: f64| {
        if hi > lo {
            (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1)
        } else {
            0
        }
    };
    let count = |xs: &[f64]| {
        let mut c = vec![0u64; bins];
        xs.iter().for_each(|&v| c[bin_of(v)] += 1);
        c
    };
    Histogram {
        lo,
        hi,
        counts_a: count(a),
        counts_b: count(b),
    }
}

pub fn cmd_compare(real: &Path, samples: &Path, out_dir: &Path) -> Result<(), CliError> {
    let names = attribute_names();
    let real_rows = read_numeric_columns(real, &names)?;
    let sample_rows = read_numeric_columns(samples, &names)?;
    let keep = |rows: &[Option<Vec<f64>>]| rows.iter().flatten().cloned().collect::<Vec<_>>();
    let (x, y) = (keep(&real_rows), keep(&sample_rows));
    let tx = table_from_rows(&names, &x)?;
    let ty = table_from_rows(&names, &y)?;
    let result = stats::mmd_linear_test(&tx, &ty)?;

    prepare_out_dir(out_dir)?;
    for (j, name) in names.iter().enumerate() {
        let h = pooled_histogram(tx.column(j), ty.column(j), HISTOGRAM_BINS);
        let path = out_dir.join(format!("hist-{name}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        w.write_record(["bin_lo", "bin_hi", "real", "samples"])
            .map_err(|e| io_err(&path, e))?;
        let width = (h.hi - h.lo) / HISTOGRAM_BINS as f64;
        for k in 0..HISTOGRAM_BINS {
            let lo = h.lo + k as f64 * width;
            let hi = if k + 1 == HISTOGRAM_BINS { h.hi } else { lo + width };
            w.write_record([
                lo.to_string(),
                hi.to_string(),
                h.counts_a[k].to_string(),
                h.counts_b[k].to_string(),
            ])
            .map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "compare",
        "real": real.display().to_string(),
        "samples": samples.display().to_string(),
        "attributes": names,
        "rows_used": {"real": x.len(), "samples": y.len()},
        "rows_skipped": {"real": real_rows.len() - x.len(), "samples": sample_rows.len() - y.len()},
        "slant_units": "degrees",
        "test": "linear-time MMD, Gaussian product kernel, Scott bandwidths",
        "alternative": "one-sided",
        "mmd": result,
        "histogram_bins": HISTOGRAM_BINS,
    });
    let text = serde_json::to_string_pretty(&report).map_err(|e| io_err(out_dir, e))?;
    write_file(&out_dir.join("compare.json"), text.as_bytes())
}

/// Names, kinds and values of the columns of a codes file.
pub type CodeColumns = (Vec<String>, Vec<CodeKind>, Vec<Vec<f64>>);

/// Reads a codes CSV whose headers are `name:cont`, `name:bin` or `name:cat:K`.
pub fn read_codes(path: &Path) -> Result<CodeColumns, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = reader.headers().map_err(|e| io_err(path, e))?.clone();
    let mut names = Vec::new();
    let mut kinds = Vec::new();
    for h in headers.iter() {
        let parts: Vec<&str> = h.split(':').collect();
        let kind = match parts.as_slice() {
            [_, "cont"] => CodeKind::Continuous,
            [_, "bin"] => CodeKind::Binary,
            [_, "cat", k] => CodeKind::Categorical(
                k.parse()
                    .map_err(|_| schema_err(path, format!("header `{h}`: category count is not an integer")))?,
            ),
            _ => {
                return Err(schema_err(
                    path,
                    format!("header `{h}` must be `name:cont`, `name:bin` or `name:cat:K`"),
                ))
            }
        };
        names.push(parts[0].to_string());
        kinds.push(kind);
    }
    let header_refs: Vec<&str> = headers.iter().collect();
    drop(reader);
    let rows = read_numeric_columns(path, &header_refs)?;
    let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.ok_or_else(|| schema_err(path, format!("row {} has an empty field", i + 1)))?;
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(v);
        }
    }
    Ok((names, kinds, columns))
}

fn read_factors(path: &Path) -> Result<(Vec<String>, Vec<Option<Row>>), CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| io_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    drop(reader);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let rows = read_numeric_columns(path, &refs)?;
    Ok((names, rows))
}

pub fn cmd_disentangle(
    morphometrics: &Path,
    codes_path: &Path,
    factors: Option<&Path>,
    bins: usize,
    out_dir: &Path,
) -> Result<(), CliError> {
    let attr_names = attribute_names();
    let morpho_rows = read_numeric_columns(morphometrics, &attr_names)?;
    let (code_names, kinds, code_columns) = read_codes(codes_path)?;
    let n = morpho_rows.len();
    let code_rows = code_columns.first().map_or(n, Vec::len);
    if code_rows != n {
        return Err(CliError::Alignment(format!(
            "{} has {n} rows but {} has {code_rows}",
            morphometrics.display(),
            codes_path.display()
        )));
    }
    let (factor_names, factor_rows) = match factors {
        Some(path) => {
            let (names, rows) = read_factors(path)?;
            if rows.len() != n {
                return Err(CliError::Alignment(format!(
                    "{} has {n} rows but {} has {}",
                    morphometrics.display(),
                    path.display(),
                    rows.len()
                )));
            }
            (names, Some(rows))
        }
        None => (Vec::new(), None),
    };

    // rows where the glyph could not be measured are dropped everywhere
    let keep: Vec<usize> = (0..n)
        .filter(|&i| {
            morpho_rows[i].is_some() && factor_rows.as_ref().is_none_or(|f| f[i].is_some())
        })
        .collect();
    let mut y_names: Vec<String> = attr_names.iter().map(|s| s.to_string()).collect();
    y_names.extend(factor_names.iter().cloned());
    let mut y_columns: Vec<Vec<f64>> = (0..attr_names.len())
        .map(|j| keep.iter().map(|&i| morpho_rows[i].as_ref().unwrap()[j]).collect())
        .collect();
    if let Some(rows) = &factor_rows {
        for j in 0..factor_names.len() {
            y_columns.push(keep.iter().map(|&i| rows[i].as_ref().unwrap()[j]).collect());
        }
    }
    let y = AttributeTable::new(y_names, y_columns)?;
    let codes = CodeTable::new(
        code_names,
        kinds,
        code_columns
            .iter()
            .map(|c| keep.iter().map(|&i| c[i]).collect())
            .collect(),
    )?;
    let table = stats::partial_correlations(&y, &codes)?;
    let mig = stats::mig(&y, &codes, bins)?;

    prepare_out_dir(out_dir)?;
    let path = out_dir.join("partial_correlations.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    let mut header = vec!["attribute".to_string()];
    header.extend(table.codes.iter().cloned());
    w.write_record(&header).map_err(|e| io_err(&path, e))?;
    for (name, row) in table.attributes.iter().zip(&table.values) {
        let mut record = vec![name.clone()];
        record.extend(row.iter().map(f64::to_string));
        w.write_record(&record).map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;

    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "disentangle",
        "rows_used": keep.len(),
        "rows_dropped": n - keep.len(),
        "slant_units": "degrees",
        "partial_correlations": table,
        "mig": mig,
    });
    let text = serde_json::to_string_pretty(&report).map_err(|e| io_err(out_dir, e))?;
    write_file(&out_dir.join("disentangle.json"), text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn menu_parsing() {
        let menu = parse_menu("plain,thin:strength=0.5,frac:count=2:thickness=1").unwrap();
        assert_eq!(menu[0], PerturbSpec::Identity);
        assert_eq!(menu[1], PerturbSpec::Thin { strength: 0.5 });
        match menu[2] {
            PerturbSpec::Fracture { count, thickness, .. } => {
                assert_eq!((count, thickness), (2, 1.0));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_menu("plain,blur").is_err());
        assert!(parse_menu("thin:radius=2").is_err());
        assert!(parse_menu("swel:strength=1").is_err());
        assert!(parse_menu("").is_err());
    }

    #[test]
    fn histogram_covers_pooled_range() {
        let h = pooled_histogram(&[0.0, 1.0], &[2.0, 0.5], 4);
        assert_eq!((h.lo, h.hi), (0.0, 2.0));
        assert_eq!(h.counts_a, vec![1, 0, 1, 0]);
        assert_eq!(h.counts_b, vec![0, 1, 0, 1]);
        let flat = pooled_histogram(&[3.0], &[3.0], 5);
        assert_eq!(flat.counts_a[0], 1);
    }

    #[test]
    fn pgm_layout() {
        let a = ByteImage::new(1, 2, vec![1, 2]);
        let b = ByteImage::new(1, 2, vec![3, 4]);
        let out = pgm_grid(&[vec![a.clone(), b], vec![a]], 1, 2);
        let header = b"P5\n4 2\n255\n";
        assert_eq!(&out[..header.len()], header);
        assert_eq!(&out[header.len()..], &[1, 2, 3, 4, 1, 2, 0, 0]);
    }
}
