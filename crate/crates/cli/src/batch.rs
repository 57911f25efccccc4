//! Batch orchestration: list inputs, run the selected pipeline per image,
//! write enhanced PNGs, debug artifacts and the reports.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use dehaze_core::enhance;
use dehaze_core::fastdehaze::{self};
use dehaze_core::imgcore::{self, ImageF};
use dehaze_core::lip;
use dehaze_core::metrics;
use dehaze_core::pde::{self, EvolutionTrace, PostOp};

use crate::config::{Mode, Pipeline, Post, ReportFormat, RunConfig};
use crate::report::{self, ReportRow};

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "ppm", "pgm"];

struct PipelineOutput {
    image: ImageF,
    trace: Option<EvolutionTrace>,
    lambda_used: Option<f64>,
    /// Transmission estimate of the fast pipelines, 0-1 scale.
    t_prime: Option<ImageF>,
    /// Log-inverted field of fast-b, 0-1 scale.
    ilog: Option<ImageF>,
}

fn post_op(cfg: &RunConfig) -> PostOp {
    match cfg.post {
        Post::None => PostOp::None,
        Post::Irces => PostOp::Irces(cfg.irces),
        Post::Fhe => PostOp::Fhe(cfg.fhe),
    }
}

fn dispatch(cfg: &RunConfig, img: &ImageF) -> dehaze_core::Result<PipelineOutput> {
    let post = post_op(cfg);
    match cfg.pipeline {
        Pipeline::Pde => {
            let (image, trace) = match cfg.mode {
                Mode::Haze => pde::dehaze_pde(img, &cfg.pde, &post),
                Mode::Underwater => pde::underwater_pipeline(img, &cfg.pde, &post, &cfg.goc)?,
                Mode::Dust => pde::dust_pipeline(img, &cfg.pde, &post, &cfg.goc)?,
            };
            Ok(PipelineOutput {
                image,
                lambda_used: Some(trace.lambda_used),
                trace: Some(trace),
                t_prime: None,
                ilog: None,
            })
        }
        Pipeline::FastA => {
            let pre = match cfg.mode {
                Mode::Haze => img.clone(),
                Mode::Underwater | Mode::Dust => enhance::goc_cs(img, &cfg.goc)?,
            };
            let outcome = fastdehaze::fast_dehaze_a(&pre, &cfg.clahe, &cfg.pde.lip)?;
            Ok(PipelineOutput {
                image: post.apply(&outcome.image),
                trace: None,
                lambda_used: Some(outcome.lambda_used),
                t_prime: Some(outcome.t_prime.t_prime.gray()),
                ilog: None,
            })
        }
        Pipeline::FastB => {
            let pre = match cfg.mode {
                Mode::Haze => img.clone(),
                Mode::Underwater | Mode::Dust => enhance::goc_cs(img, &cfg.goc)?,
            };
            let refine = cfg.refine.then_some(&cfg.pde);
            let outcome = fastdehaze::fast_dehaze_b(&pre, &cfg.filter, cfg.log_scale, refine);
            let lambda_used = match &outcome.trace {
                Some(t) => Some(t.lambda_used),
                None => Some(lip::resolve_lambda(&imgcore::invert(&pre), &cfg.pde.lip)),
            };
            Ok(PipelineOutput {
                image: post.apply(&outcome.image),
                lambda_used,
                t_prime: Some(outcome.state.t_prime.t_prime.gray().map(|v| v / 255.0)),
                ilog: Some(outcome.state.log_inverted.gray().map(|v| v / 255.0)),
                trace: outcome.trace,
            })
        }
    }
}

fn list_inputs(input: &Path) -> Result<Vec<PathBuf>, String> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    if !input.is_dir() {
        return Err(format!("input path {} does not exist", input.display()));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(|e| format!("cannot read {}: {e}", input.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                    .unwrap_or(false)
        })
        .collect();
    files.sort_by_key(|p| p.file_name().map(|n| n.to_os_string()));
    Ok(files)
}

fn stem_of(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string()
}

fn process_one(cfg: &RunConfig, path: &Path) -> Result<ReportRow, String> {
    let started = Instant::now();
    let stem = stem_of(path);
    let loaded = imgcore::load_image(path).map_err(|e| e.to_string())?;
    let input = imgcore::to_unit(&loaded);
    let output = dispatch(cfg, &input).map_err(|e| format!("{}: {e}", path.display()))?;
    let (before, after) = metrics::paired_report(&input, &output.image);

    let out_png = cfg.out.join(format!("{stem}.png"));
    imgcore::save_image(&imgcore::from_unit(&output.image), &out_png).map_err(|e| e.to_string())?;

    if cfg.debug {
        if let Some(trace) = &output.trace {
            let trace_path = cfg.out.join(format!("{stem}_trace.json"));
            let json = serde_json::to_string_pretty(trace).expect("serializable trace");
            std::fs::write(&trace_path, json).map_err(|e| e.to_string())?;
        }
        if let Some(tp) = &output.t_prime {
            imgcore::save_image(&imgcore::from_unit(tp), cfg.out.join(format!("{stem}_tprime.png")))
                .map_err(|e| e.to_string())?;
        }
        if let Some(ilog) = &output.ilog {
            imgcore::save_image(&imgcore::from_unit(ilog), cfg.out.join(format!("{stem}_ilog.png")))
                .map_err(|e| e.to_string())?;
        }
    }

    let runtime_ms = if cfg.no_timings { 0 } else { started.elapsed().as_millis() as u64 };
    Ok(ReportRow::new(
        path.file_name().and_then(|n| n.to_str()).unwrap_or(&stem).to_string(),
        cfg.mode,
        cfg.pipeline,
        &before,
        &after,
        output.lambda_used,
        output.trace.as_ref().map(|t| t.alpha_used),
        output.trace.as_ref().map(|t| t.iters_run),
        output.trace.as_ref().map(|t| t.best_iter),
        runtime_ms,
    ))
}

/// Run the batch; returns the process exit code (0 ok, 2 usage/empty,
/// 3 partial failure).
pub fn run_batch(cfg: &RunConfig) -> i32 {
    let inputs = match list_inputs(&cfg.input) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if inputs.is_empty() {
        eprintln!("error: no decodable images in {}", cfg.input.display());
        return 2;
    }
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        eprintln!("error: cannot create {}: {e}", cfg.out.display());
        return 2;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .expect("thread pool");
    let results: Vec<(PathBuf, Result<ReportRow, String>)> = pool.install(|| {
        inputs
            .par_iter()
            .map(|path| (path.clone(), process_one(cfg, path)))
            .collect()
    });

    // Aggregation is ordered by input name regardless of worker count.
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (path, result) in results {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((path, e)),
        }
    }

    let echo = serde_json::to_string_pretty(cfg).expect("serializable config");
    if let Err(e) = std::fs::write(cfg.out.join("run_config.json"), echo + "\n") {
        eprintln!("error: cannot write run_config.json: {e}");
        return 2;
    }
    let write_result = match cfg.report {
        ReportFormat::Json => report::write_json(&rows, &cfg.out.join("report.json")),
        ReportFormat::Csv => report::write_csv(&rows, &cfg.out.join("report.csv")),
        ReportFormat::Both => report::write_json(&rows, &cfg.out.join("report.json"))
            .and_then(|_| report::write_csv(&rows, &cfg.out.join("report.csv"))),
    };
    if let Err(e) = write_result {
        eprintln!("error: cannot write report: {e}");
        return 2;
    }

    println!("processed {} image(s), {} failed", rows.len(), failures.len());
    if failures.is_empty() {
        0
    } else {
        for (path, e) in &failures {
            eprintln!("failed: {}: {e}", path.display());
        }
        3
    }
}
