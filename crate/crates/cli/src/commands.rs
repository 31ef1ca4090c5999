use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use tsqrt_core::imaging::grayscale::{luminance_grayscale, pca_grayscale, tdg_grayscale_with};
use tsqrt_core::imaging::io::{encode_gray, encode_rgb, format_for_path, load_image};
use tsqrt_core::imaging::metrics::{correlations_as_rows, EME_BLOCK};
use tsqrt_core::imaging::transfer::{color_transfer_with, reinhard_channelwise_transfer};
use tsqrt_core::imaging::whiten::{whiten_image, WhitenMethod};
use tsqrt_core::imaging::{
    decorrelation_index, eme, pearson_channel_correlations, ssim, CovarianceMode, ImageTensor,
    QualityMetrics,
};
use tsqrt_core::io::{read_tensor, tensor_to_json};
use tsqrt_core::solver::{kappa_sweep, sweep_to_csv, t_sqrt};
use tsqrt_core::tbw::{tbw_report_with, InnerSqrt, TbwOptions};
use tsqrt_core::{Error, IterationConfig, SqrtMethod};

use crate::output::{sibling, RunManifest};
use crate::{Command, GrayMethod, Method, ModeArg, Strategy, TransferArg, WhitenArg};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Outcome {
    Success = 0,
    TargetMissed = 2,
}

fn manifest_path(out: &Path) -> std::path::PathBuf {
    sibling(out, "_manifest.json")
}

fn mode(m: ModeArg) -> CovarianceMode {
    match m {
        ModeArg::Matrix => CovarianceMode::Matrix,
        ModeArg::Tensor => CovarianceMode::Tensor,
    }
}

fn load(path: &Path) -> Result<ImageTensor> {
    load_image(path).with_context(|| format!("reading image {}", path.display()))
}

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Sqrt {
            input,
            method,
            tol,
            max_iter,
            no_early_stop,
            out,
            trace_out,
        } => cmd_sqrt(&input, method, tol, max_iter, !no_early_stop, &out, trace_out.as_deref()),
        Command::Tbw { a, b, strategy, out } => cmd_tbw(&a, &b, strategy, &out),
        Command::Grayscale {
            image,
            method,
            mode: m,
            out,
            metrics_out,
        } => cmd_grayscale(&image, method, mode(m), &out, metrics_out.as_deref()),
        Command::Whiten {
            image,
            method,
            out,
            metrics_out,
        } => cmd_whiten(&image, method, &out, metrics_out.as_deref()),
        Command::Transfer {
            source,
            target,
            method,
            mode: m,
            out,
        } => cmd_transfer(&source, &target, method, mode(m), &out),
        Command::BenchStability {
            n,
            p,
            kappa,
            iterations,
            seed,
            out,
        } => cmd_bench_stability(n, p, &kappa, iterations, seed, &out),
        Command::Reproduce { which, out } => crate::reproduce::run(which, &out),
    }
}

fn cmd_sqrt(
    input: &Path,
    method: Method,
    tol: f64,
    max_iter: usize,
    early_stop: bool,
    out: &Path,
    trace_out: Option<&Path>,
) -> Result<Outcome> {
    let a = read_tensor(input).with_context(|| format!("reading tensor {}", input.display()))?;
    let method = match method {
        Method::Newton => SqrtMethod::Newton,
        Method::Db => SqrtMethod::Db,
        Method::Direct => SqrtMethod::Direct,
    };
    let cfg = IterationConfig {
        max_iterations: max_iter,
        tolerance: tol,
        early_stop,
        ..IterationConfig::default()
    };
    let trace_path = trace_out.map_or_else(|| sibling(out, "_trace.csv"), Path::to_path_buf);
    let mut manifest = RunManifest::new("sqrt");
    manifest
        .input(input)
        .param("method", method.to_string())
        .param("tol", tol)
        .param("max_iter", max_iter)
        .param("early_stop", early_stop);

    let sol = match t_sqrt(&a, method, &cfg) {
        Ok(s) => s,
        Err(Error::SingularSlice {
            slice,
            iteration,
            trace: Some(trace),
        }) => {
            // Breakdown mid-iteration: keep the partial trace for diagnosis.
            manifest.emit(&trace_path, trace.to_csv().as_bytes())?;
            manifest.finish(&manifest_path(out))?;
            eprintln!(
                "iteration broke down: singular slice {:?} at iteration {:?}",
                slice, iteration
            );
            return Ok(Outcome::TargetMissed);
        }
        Err(e) => return Err(e.into()),
    };
    manifest.emit(out, tensor_to_json(&sol.sqrt).as_bytes())?;
    if let Some(inv) = &sol.inv_sqrt {
        manifest.emit(&sibling(out, "_inv.json"), tensor_to_json(inv).as_bytes())?;
    }
    manifest.emit(&trace_path, sol.trace.to_csv().as_bytes())?;
    manifest.finish(&manifest_path(out))?;
    println!(
        "iterations {} final residual {:e} converged {}",
        sol.trace.iterations_run,
        sol.trace.final_residual(),
        sol.trace.converged
    );
    Ok(if sol.trace.converged {
        Outcome::Success
    } else {
        Outcome::TargetMissed
    })
}

fn cmd_tbw(a: &Path, b: &Path, strategy: Strategy, out: &Path) -> Result<Outcome> {
    let ta = read_tensor(a).with_context(|| format!("reading tensor {}", a.display()))?;
    let tb = read_tensor(b).with_context(|| format!("reading tensor {}", b.display()))?;
    let strategy = match strategy {
        Strategy::Direct => InnerSqrt::Direct,
        Strategy::Newton => InnerSqrt::Newton,
        Strategy::Db => InnerSqrt::Db,
    };
    let report = tbw_report_with(&ta, &tb, &TbwOptions { strategy, mirror: false })?;
    let mut manifest = RunManifest::new("tbw");
    manifest.input(a).input(b).param("strategy", strategy);
    manifest.emit(out, report.to_csv().as_bytes())?;
    manifest.finish(&manifest_path(out))?;
    println!("{}", report.total);
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    command: &'a str,
    method: &'a str,
    #[serde(flatten)]
    metrics: QualityMetrics,
}

fn correlations(img: &ImageTensor) -> Option<Vec<Vec<f64>>> {
    pearson_channel_correlations(img)
        .ok()
        .map(|m| correlations_as_rows(&m))
}

fn write_metrics(
    manifest: &mut RunManifest,
    path: Option<&Path>,
    command: &str,
    method: &str,
    metrics: QualityMetrics,
) -> Result<()> {
    let Some(path) = path else { return Ok(()) };
    let file = MetricsFile {
        command,
        method,
        metrics,
    };
    manifest.emit(path, serde_json::to_string_pretty(&file)?.as_bytes())
}

fn cmd_grayscale(
    image: &Path,
    method: GrayMethod,
    mode: CovarianceMode,
    out: &Path,
    metrics_out: Option<&Path>,
) -> Result<Outcome> {
    let format = format_for_path(out)?;
    let img = load(image)?;
    let reference = luminance_grayscale(&img)?;
    let (name, gray) = match method {
        GrayMethod::Tdg => ("tdg", tdg_grayscale_with(&img, mode)?.display),
        GrayMethod::Pca => ("pca", pca_grayscale(&img)?.display),
        GrayMethod::Luminance => ("luminance", reference.clone()),
    };
    let mut manifest = RunManifest::new("grayscale");
    manifest.input(image).param("method", name).param("mode", mode);
    manifest.emit(out, &encode_gray(&gray, format)?)?;
    let metrics = QualityMetrics {
        ssim: ssim(&gray, &reference)?,
        eme: eme(&gray, EME_BLOCK),
        di: decorrelation_index(&img),
        channel_correlations: correlations(&img),
    };
    write_metrics(&mut manifest, metrics_out, "grayscale", name, metrics)?;
    manifest.finish(&manifest_path(out))?;
    Ok(Outcome::Success)
}

fn cmd_whiten(image: &Path, method: WhitenArg, out: &Path, metrics_out: Option<&Path>) -> Result<Outcome> {
    let format = format_for_path(out)?;
    let img = load(image)?;
    let (name, method) = match method {
        WhitenArg::T => ("t", WhitenMethod::T),
        WhitenArg::Matrix => ("matrix", WhitenMethod::Matrix),
        WhitenArg::Channelwise => ("channelwise", WhitenMethod::Channelwise),
    };
    let white = whiten_image(&img, method)?;
    let display = white.display_normalized();
    let mut manifest = RunManifest::new("whiten");
    manifest.input(image).param("method", name);
    manifest.emit(out, &encode_rgb(&display, format)?)?;
    let gray_out = luminance_grayscale(&display)?;
    let metrics = QualityMetrics {
        ssim: ssim(&gray_out, &luminance_grayscale(&img)?)?,
        eme: eme(&gray_out, EME_BLOCK),
        di: decorrelation_index(&white),
        channel_correlations: correlations(&white),
    };
    write_metrics(&mut manifest, metrics_out, "whiten", name, metrics)?;
    manifest.finish(&manifest_path(out))?;
    Ok(Outcome::Success)
}

fn cmd_transfer(
    source: &Path,
    target: &Path,
    method: TransferArg,
    mode: CovarianceMode,
    out: &Path,
) -> Result<Outcome> {
    let format = format_for_path(out)?;
    let (s, t) = (load(source)?, load(target)?);
    let (name, result) = match method {
        TransferArg::Tensor => ("tensor", color_transfer_with(&s, &t, mode)?.display),
        TransferArg::Channelwise => ("channelwise", reinhard_channelwise_transfer(&s, &t)?.clipped()),
    };
    let mut manifest = RunManifest::new("transfer");
    manifest
        .input(source)
        .input(target)
        .param("method", name)
        .param("mode", mode);
    manifest.emit(out, &encode_rgb(&result, format)?)?;
    manifest.finish(&manifest_path(out))?;
    Ok(Outcome::Success)
}

fn cmd_bench_stability(
    n: usize,
    p: usize,
    kappas: &[f64],
    iterations: usize,
    seed: u64,
    out: &Path,
) -> Result<Outcome> {
    let rows = kappa_sweep(n, p, kappas, iterations, seed)?;
    let mut manifest = RunManifest::new("bench-stability");
    manifest
        .param("n", n)
        .param("p", p)
        .param("kappa", kappas)
        .param("iterations", iterations)
        .param("seed", seed);
    manifest.emit(out, sweep_to_csv(&rows).as_bytes())?;
    manifest.finish(&manifest_path(out))?;
    for row in &rows {
        println!(
            "kappa {:>8} newton r_min {:.2e} final/min {:.2e} | db r_min {:.2e} final/min {:.2e}",
            row.kappa,
            row.report.newton.r_min,
            row.report.newton.final_over_min,
            row.report.db.r_min,
            row.report.db.final_over_min
        );
    }
    Ok(Outcome::Success)
}
