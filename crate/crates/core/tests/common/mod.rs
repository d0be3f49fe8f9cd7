//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use fuzzyseg::fcm::{BitDepth, ImageGrid};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Memberships through the weight form `w_j = d_j^(-2/(m-1))`, normalised.
/// Algebraically equal to the ratio form used by the library.
pub fn membership_oracle(dist: &[Vec<f64>], m: f64) -> Vec<Vec<f64>> {
    dist.iter()
        .map(|row| {
            if row.contains(&0.0) {
                let z = row.iter().filter(|&&d| d == 0.0).count() as f64;
                return row
                    .iter()
                    .map(|&d| if d == 0.0 { 1.0 / z } else { 0.0 })
                    .collect();
            }
            let w: Vec<f64> = row.iter().map(|&d| d.powf(-2.0 / (m - 1.0))).collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|v| v / s).collect()
        })
        .collect()
}

/// Column-by-column weighted means.
pub fn centroid_oracle(x: &[f64], u: &[Vec<f64>], m: f64) -> Vec<f64> {
    let c = u[0].len();
    (0..c)
        .map(|j| {
            let num: f64 = (0..x.len()).map(|i| u[i][j].powf(m) * x[i]).sum();
            let den: f64 = (0..x.len()).map(|i| u[i][j].powf(m)).sum();
            num / den
        })
        .collect()
}

/// Cluster-major double sum of `mu^m d^2`.
pub fn objective_oracle(dist: &[Vec<f64>], u: &[Vec<f64>], m: f64) -> f64 {
    let c = dist[0].len();
    let mut total = 0.0;
    for j in 0..c {
        for i in 0..dist.len() {
            total += u[i][j].powf(m) * dist[i][j] * dist[i][j];
        }
    }
    total
}

/// Naive offset loop over the clipped window, row-major.
pub fn spatial_oracle(u: &[Vec<f64>], width: usize, height: usize, r: usize) -> Vec<Vec<f64>> {
    let c = u[0].len();
    let r = r as isize;
    let mut out = vec![vec![0.0; c]; width * height];
    for y in 0..height as isize {
        for x in 0..width as isize {
            let i = (y as usize) * width + x as usize;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (xx, yy) = (x + dx, y + dy);
                    if xx < 0 || yy < 0 || xx >= width as isize || yy >= height as isize {
                        continue;
                    }
                    let k = yy as usize * width + xx as usize;
                    for j in 0..c {
                        out[i][j] += u[k][j];
                    }
                }
            }
        }
    }
    out
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Random row-stochastic matrix with strictly positive entries.
pub fn random_memberships(rng: &mut ChaCha8Rng, n: usize, c: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let w: Vec<f64> = (0..c).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|v| v / s).collect()
        })
        .collect()
}

/// Blocky random 8-bit image: a few flat regions plus mild texture.
pub fn random_image(rng: &mut ChaCha8Rng, width: usize, height: usize) -> ImageGrid {
    let levels: Vec<f64> = (0..3).map(|_| rng.random_range(20.0..235.0)).collect();
    let samples = (0..width * height)
        .map(|i| {
            let (x, y) = (i % width, i / width);
            let base = levels[(x * 3 / width + y * 2 / height) % 3];
            (base + rng.random_range(-15.0..15.0))
                .round()
                .clamp(0.0, 255.0) as u16
        })
        .collect();
    ImageGrid::new(width, height, BitDepth::Eight, samples).unwrap()
}

pub const RUN_REPORT_SCHEMA: &str = include_str!("../../schema/run_report.schema.json");
pub const COMPARE_REPORT_SCHEMA: &str = include_str!("../../schema/compare_report.schema.json");

struct SchemaStore;

impl jsonschema::Retrieve for SchemaStore {
    fn retrieve(
        &self,
        uri: &jsonschema::Uri<String>,
    ) -> Result<serde_json::Value, Box<dyn std::error::Error + Send + Sync>> {
        match uri.as_str() {
            "urn:fuzzyseg:run-report" => Ok(serde_json::from_str(RUN_REPORT_SCHEMA)?),
            other => Err(format!("unknown schema {other}").into()),
        }
    }
}

fn validator(schema: &str) -> jsonschema::Validator {
    let schema: serde_json::Value = serde_json::from_str(schema).unwrap();
    jsonschema::options()
        .with_retriever(SchemaStore)
        .build(&schema)
        .unwrap()
}

/// Schema errors for a run report, empty when valid.
pub fn run_report_errors(report: &serde_json::Value) -> Vec<String> {
    validator(RUN_REPORT_SCHEMA)
        .iter_errors(report)
        .map(|e| e.to_string())
        .collect()
}

pub fn compare_report_errors(report: &serde_json::Value) -> Vec<String> {
    validator(COMPARE_REPORT_SCHEMA)
        .iter_errors(report)
        .map(|e| e.to_string())
        .collect()
}

/// Any number literal written in exponent notation.
pub fn has_exponent_literal(json_text: &str) -> bool {
    let bytes = json_text.as_bytes();
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if in_string {
            match (escaped, b) {
                (true, _) => escaped = false,
                (false, b'\\') => escaped = true,
                (false, b'"') => in_string = false,
                _ => {}
            }
        } else if b == b'"' {
            in_string = true;
        } else if (b == b'e' || b == b'E') && i > 0 && bytes[i - 1].is_ascii_digit() {
            return true;
        }
    }
    false
}

pub fn bin() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_fuzzyseg"))
}
