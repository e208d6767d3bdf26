//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.
//!
//! The full-scale variant of criterion 1 (ref 2048, 1000 samples) takes
//! several minutes on one core; set `ACSOLVE_SKIP_PAPER_SCALE=1` to skip it
//! while iterating.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;
use std::process::Command;

use acsolve::csv::{parse, ParsedTable};
use acsolve_core::experiments::sample_squared_errors;
use acsolve_core::noise::{increment_variance, sample_fine_increment, NoiseStream};
use acsolve_core::{
    fit_slope, moment_diagnostics, nonlinearity_galerkin, simulate_path, DiagnosticsConfig, ModelParams,
    NoiseGrid, NoiseSource, RunConfig, SpectralField, StudyMode, Taming,
};

const PUBLISHED_ERRORS: [(usize, f64); 6] = [
    (4, 0.106381),
    (8, 0.077172),
    (16, 0.055174),
    (32, 0.039209),
    (64, 0.027624),
    (128, 0.019225),
];

type Outcome = Result<String, String>;

fn converge(dir: &Path, name: &str, args: &[&str]) -> Result<(ParsedTable, Vec<u8>, Vec<u8>), String> {
    let csv = dir.join(format!("{name}.csv"));
    let svg = dir.join(format!("{name}.svg"));
    let out = Command::new(env!("CARGO_BIN_EXE_acsolve"))
        .arg("converge")
        .args(args)
        .arg("--out")
        .arg(&csv)
        .arg("--plot")
        .arg(&svg)
        .output()
        .map_err(|e| format!("cannot run acsolve: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "acsolve exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let csv_bytes = std::fs::read(&csv).map_err(|e| e.to_string())?;
    let svg_bytes = std::fs::read(&svg).map_err(|e| e.to_string())?;
    let table = parse(&String::from_utf8_lossy(&csv_bytes))?;
    Ok((table, csv_bytes, svg_bytes))
}

fn errors(table: &ParsedTable) -> String {
    table
        .rows
        .iter()
        .map(|r| format!("{:.6}", r.rms_error))
        .collect::<Vec<_>>()
        .join(", ")
}

fn matches_published(table: &ParsedTable, factor: f64) -> Outcome {
    let got: Vec<(usize, f64)> = table.rows.iter().map(|r| (r.resolution, r.rms_error)).collect();
    if got.iter().map(|g| g.0).ne(PUBLISHED_ERRORS.iter().map(|t| t.0)) {
        return Err(format!("unexpected resolutions {got:?}"));
    }
    let worst = got
        .iter()
        .zip(PUBLISHED_ERRORS)
        .map(|(g, t)| (g.1 / t.1).max(t.1 / g.1))
        .fold(0.0, f64::max);
    let monotone = got.windows(2).all(|w| w[1].1 < w[0].1);
    let detail = format!("errors [{}], worst ratio {worst:.3} (limit {factor}), monotone {monotone}", errors(table));
    if worst <= factor && monotone {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn slope_in(table: &ParsedTable, lo: f64, hi: f64) -> Outcome {
    let slope = table.fitted_slope.ok_or("no fitted slope")?;
    let detail = format!("slope {slope:.4} (window [{lo}, {hi}]), errors [{}]", errors(table));
    if (lo..=hi).contains(&slope) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1_and_2(dir: &Path) -> (Outcome, Outcome) {
    let run = converge(
        dir,
        "joint",
        &["--mode", "joint", "--resolutions", "4,8,16,32,64,128", "--ref", "1024", "--samples", "200"],
    );
    match run {
        Err(e) => (Err(e.clone()), Err(e)),
        Ok((table, _, _)) => {
            let c1 = matches_published(&table, 1.6);
            let published: Vec<(f64, f64)> = PUBLISHED_ERRORS.iter().map(|&(n, e)| (n as f64, e)).collect();
            let published_slope = fit_slope(&published).map(|f| f.slope).unwrap_or(f64::NAN);
            let c2 = slope_in(&table, 0.38, 0.60).and_then(|d| {
                // least squares on the published values, computed independently with numpy
                if (published_slope - 0.493_719_842_841_117_7).abs() < 1e-12 {
                    Ok(format!("{d}; published-table slope {published_slope:.4}"))
                } else {
                    Err(format!("{d}; published-table slope {published_slope} != 0.49372"))
                }
            });
            (c1, c2)
        }
    }
}

fn criterion_1_full_scale(dir: &Path) -> Option<Outcome> {
    if std::env::var_os("ACSOLVE_SKIP_PAPER_SCALE").is_some() {
        return None;
    }
    Some(
        converge(
            dir,
            "joint-full",
            &["--mode", "joint", "--resolutions", "4,8,16,32,64,128", "--paper-scale"],
        )
        .and_then(|(table, _, _)| matches_published(&table, 1.3)),
    )
}

fn criterion_3(dir: &Path) -> Outcome {
    let (table, _, _) = converge(
        dir,
        "spatial",
        &["--mode", "spatial", "--resolutions", "4,8,16,32,64,128", "--ref", "1024", "--samples", "100"],
    )?;
    slope_in(&table, 0.38, 0.62)
}

fn criterion_4(dir: &Path) -> Outcome {
    let (table, _, _) = converge(
        dir,
        "temporal",
        &["--mode", "temporal", "--resolutions", "8,16,32,64,128,256", "--ref", "1024", "--samples", "100"],
    )?;
    slope_in(&table, 0.35, 0.62)
}

fn criterion_5() -> Outcome {
    const DRAWS: usize = 100_000;
    let mut lines = Vec::new();
    let mut ok = true;
    for steps in [64usize, 2048] {
        let grid = NoiseGrid::new(32, steps, 1.0).map_err(|e| e.to_string())?;
        for mode in [1usize, 4, 32] {
            let draws: Vec<f64> = (0..DRAWS)
                .map(|d| {
                    let stream = NoiseStream::new(2024, (d / steps) as u64, grid).unwrap();
                    sample_fine_increment(&stream.key(mode, (d % steps) as u64), &grid).unwrap()
                })
                .collect();
            let n = DRAWS as f64;
            let mean = draws.iter().sum::<f64>() / n;
            let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            let exact = increment_variance(mode, 1.0 / steps as f64).unwrap();
            let rel = (var / exact - 1.0).abs();
            let z = mean.abs() / (exact / n).sqrt();
            ok &= rel <= 0.05 && z <= 4.0;
            lines.push(format!("i={mode} tau=1/{steps}: var rel {rel:.4}, |mean| {z:.2} sd"));
        }
    }
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Outcome {
    let mut worst = 0.0f64;
    for i in [1usize, 2, 5, 17, 100, 1000, 2048] {
        for tau in [1e-9, 1e-6, 1e-3, 1.0 / 2048.0, 1.0 / 64.0, 0.25, 1.0] {
            let lambda = PI * PI * (i * i) as f64;
            let half = increment_variance(i, tau / 2.0).unwrap();
            let split = (-lambda * tau).exp() * half + half;
            let whole = increment_variance(i, tau).unwrap();
            worst = worst.max((split / whole - 1.0).abs());
        }
    }
    let config = RunConfig {
        mode: StudyMode::Joint,
        resolutions: vec![16, 128],
        ref_resolution: 128,
        samples: 1,
        master_seed: 5,
        params: ModelParams::allen_cahn(),
    };
    let coupled = sample_squared_errors(&config, 3).map_err(|e| e.to_string())?;
    let grid = NoiseGrid::new(128, 128, 1.0).unwrap();
    let source = NoiseSource::Coupled(NoiseStream::new(5, 3, grid).unwrap());
    let a = simulate_path(&config.params, 128, 128, &source).map_err(|e| e.to_string())?;
    let b = simulate_path(&config.params, 128, 128, &source).map_err(|e| e.to_string())?;
    let identical = coupled[1].to_bits() == 0 && a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| x.to_bits() == y.to_bits());
    let detail = format!("split-interval identity worst rel {worst:.2e} (limit 1e-14); coarse==ref path bit-identical: {identical}");
    if worst <= 1e-14 && identical {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Coefficients of `a3 u^3 + a1 u` for a sine polynomial `u`, by expanding
/// products of sines: sin a sin b sin c = (sin(a+b-c) + sin(a-b+c) + sin(-a+b+c) - sin(a+b+c)) / 4.
fn cubic_oracle(c: &[f64], a3: f64, a1: f64) -> Vec<f64> {
    let n = c.len();
    let mut cube = vec![0.0; 3 * n + 1];
    let mut put = |m: i64, v: f64| {
        if m != 0 {
            cube[m.unsigned_abs() as usize] += m.signum() as f64 * v;
        }
    };
    for i in 1..=n as i64 {
        for j in 1..=n as i64 {
            for k in 1..=n as i64 {
                let v = 0.5 * c[i as usize - 1] * c[j as usize - 1] * c[k as usize - 1];
                put(i + j - k, v);
                put(i - j + k, v);
                put(-i + j + k, v);
                put(i + j + k, -v);
            }
        }
    }
    (1..=n).map(|m| a3 * cube[m] + a1 * c[m - 1]).collect()
}

fn criterion_7() -> Outcome {
    let p = ModelParams::allen_cahn();
    let u = SpectralField::single_mode(8, 1, 1.0 / SQRT_2).unwrap();
    let f = nonlinearity_galerkin(&p, &u).map_err(|e| e.to_string())?;
    let a = 1.0 / (4.0 * SQRT_2);
    let single = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| (c - if i == 0 || i == 2 { a } else { 0.0 }).abs())
        .fold(0.0, f64::max);

    // 100 reproducible random fields, N in 1..=32, random a3 < 0 and a1
    let mut state = 0x2545_f491_4f6c_dd1d_u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 1 + (next() * 32.0) as usize;
        let coeffs: Vec<f64> = (0..n).map(|i| (2.0 * next() - 1.0) / (1 + i) as f64).collect();
        let (a3, a1) = (-0.1 - 2.0 * next(), 4.0 * next() - 2.0);
        let params = p.clone().with_coefficients([a3, 0.0, a1, 0.0]).unwrap();
        let field = SpectralField::new(coeffs.clone()).unwrap();
        let got = nonlinearity_galerkin(&params, &field).map_err(|e| e.to_string())?;
        let want = cubic_oracle(&coeffs, a3, a1);
        for (g, w) in got.coeffs().iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    let detail = format!("sin(pi x) max deviation {single:.2e}; 100 random fields max deviation {worst:.2e} (limit 1e-11)");
    if single <= 1e-11 && worst <= 1e-11 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8() -> Outcome {
    let d = moment_diagnostics(&DiagnosticsConfig {
        n_modes: 64,
        n_steps: 4,
        samples: 100,
        master_seed: 42,
        params: ModelParams::allen_cahn(),
        noise: true,
        taming: Taming::Tamed,
    })
    .map_err(|e| e.to_string())?;
    let bound = 1.0 / d.tau;
    let detail = format!(
        "blowups {}, finite {}, sup-norm max {:.3} / p99 {:.3}, max tamed drift norm {:.4} (bound {bound})",
        d.blowups, d.all_finite, d.sup_norm.max, d.sup_norm.p99, d.max_drift_norm
    );
    if d.healthy() && d.sup_norm.max < 1e3 && d.max_drift_norm <= bound {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_9(dir: &Path) -> Outcome {
    let args = ["--mode", "joint", "--resolutions", "4,8,16,32", "--ref", "1024", "--samples", "20", "--threads", "1"];
    let (_, csv_a, svg_a) = converge(dir, "det-a", &args)?;
    let (_, csv_b, svg_b) = converge(dir, "det-b", &args)?;
    let detail = format!("csv {} bytes, svg {} bytes", csv_a.len(), svg_a.len());
    if csv_a == csv_b && svg_a == svg_b {
        Ok(format!("{detail}, byte-identical"))
    } else {
        Err(format!("{detail}, outputs differ"))
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut results: Vec<(&str, Option<Outcome>)> = Vec::new();
    let (c1, c2) = criterion_1_and_2(dir.path());
    results.push(("1 published error table (ref 1024, 200 samples, factor 1.6)", Some(c1)));
    results.push(("1 published error table (ref 2048, 1000 samples, factor 1.3)", criterion_1_full_scale(dir.path())));
    results.push(("2 joint rate", Some(c2)));
    results.push(("3 spatial rate", Some(criterion_3(dir.path()))));
    results.push(("4 temporal rate", Some(criterion_4(dir.path()))));
    results.push(("5 convolution sampler", Some(criterion_5())));
    results.push(("6 coupling exactness", Some(criterion_6())));
    results.push(("7 cubic projection exactness", Some(criterion_7())));
    results.push(("8 taming / moment property", Some(criterion_8())));
    results.push(("9 determinism", Some(criterion_9(dir.path()))));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Some(Ok(d)) => println!("[PASS] {name}: {d}"),
            Some(Err(d)) => {
                failed += 1;
                println!("[FAIL] {name}: {d}")
            }
            None => println!("[SKIP] {name}: ACSOLVE_SKIP_PAPER_SCALE is set"),
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.iter().filter(|r| matches!(r.1, Some(Ok(_)))).count());
    if failed > 0 {
        std::process::exit(1);
    }
}
