use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use qdisk::analysis::{
    check_all, commutator_norm, kernel_evidence, singular_values, verify_triple, ConditionReport, Verdict,
};
use qdisk::dirac::TripleData;
use qdisk::sequences::series::SeriesVerdict;
use qdisk::toeplitz::ToeplitzElement;
use serde::Serialize;

use crate::config::RunConfig;

/// Share of the null vector's mass allowed at the cut for a kernel vector
/// to count as a genuine element of the weighted space.
const EDGE_THRESHOLD: f64 = 1e-3;

/// Outcome of a subcommand: text for stdout and whether it passed.
pub struct Outcome {
    pub text: String,
    pub pass: bool,
    pub failure: Option<String>,
}

fn witness_line(r: &ConditionReport) -> String {
    r.witness
        .as_ref()
        .map(|w| format!("\n    witness: {}", serde_json::to_string(w).expect("plain data")))
        .unwrap_or_default()
}

pub fn check(cfg: &RunConfig) -> Result<Outcome> {
    let data = cfg.data()?;
    let reports = check_all(&data, cfg.options.tail_tol);
    let mut text = cfg.header("check");
    text.push_str(&format!("{:<10} {:<13} detail\n", "condition", "verdict"));
    let mut failure = None;
    for r in &reports {
        let verdict = format!("{:?}", r.verdict).to_lowercase();
        text.push_str(&format!("{:<10} {:<13} {}{}\n", r.condition.label(), verdict, r.detail, witness_line(r)));
        if r.verdict != Verdict::Holds && failure.is_none() {
            failure = Some(format!("condition {} {verdict}: {}{}", r.condition.label(), r.detail, witness_line(r)));
        }
    }
    match data.kernel_count() {
        Ok(n) => text.push_str(&format!("N = {n}\n")),
        Err(e) => {
            text.push_str(&format!("N: {e}\n"));
            failure.get_or_insert_with(|| format!("kernel dimension: {e}"));
        }
    }
    Ok(Outcome { text, pass: failure.is_none(), failure })
}

fn describe(v: &SeriesVerdict) -> String {
    match v {
        SeriesVerdict::Convergent { partial, tail_bound, horizon, exponent } => format!(
            "in space: partial sum {partial:.10e} through k={horizon}, tail <= {tail_bound:.3e}, term exponent {exponent}"
        ),
        SeriesVerdict::Divergent { exponent, partial_sums } => format!(
            "not in space: term exponent {exponent}, partial sums {}",
            partial_sums.iter().map(|(k, s)| format!("{k}:{s:.4e}")).collect::<Vec<_>>().join(" ")
        ),
        SeriesVerdict::Inconclusive { exponent, .. } => format!("undecided: local term exponent {exponent:.4}"),
    }
}

pub fn kernel(cfg: &RunConfig) -> Result<Outcome> {
    let data = cfg.data()?;
    let mut text = cfg.header("kernel");
    let dim = match data.kernel_count() {
        Ok(n) => n,
        Err(e) => {
            text.push_str(&format!("kernel dimension: {e}\n"));
            return Ok(Outcome { text, pass: false, failure: Some(format!("kernel dimension: {e}")) });
        }
    };
    for n in 0..=dim {
        let m = data.kernel_membership(n);
        text.push_str(&format!("mode {n}: {}\n", describe(&m.verdict)));
    }
    text.push_str(&format!("dimension = {dim}\n"));
    Ok(Outcome { text, pass: true, failure: None })
}

#[derive(Serialize)]
struct VerifyDocument<'a> {
    config: &'a RunConfig,
    report: qdisk::analysis::TripleReport,
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let data = cfg.data()?;
    let report = verify_triple(&data, &cfg.options);
    let mut text = cfg.header("verify");
    text.push_str(&format!(
        "kernel dimension: {}\n",
        report.kernel_dimension.map_or("unknown".to_string(), |n| n.to_string())
    ));
    text.push_str(&format!("implementation residual: {:.3e}\n", report.implementation_residual));
    text.push_str(&format!("covariance residual: {:.3e}\n", report.covariance_residual));
    text.push_str(&format!("{:>5} {:<10} {:>10} {:>10} {:>5} {:>12} {:>12} {:>12}\n", "n", "regime", "DQ", "QD", "rank", "HS", "sigma_min", "1/HS"));
    for m in &report.modes {
        text.push_str(&format!(
            "{:>5} {:<10} {:>10.2e} {:>10.2e} {:>5} {:>12.6e} {:>12.6e} {:>12.6e}\n",
            m.n,
            format!("{:?}", m.regime).to_lowercase(),
            m.dq_residual,
            m.qd_residual,
            m.defect_rank,
            m.hs.value,
            m.sigma_min,
            m.sigma_bound
        ));
    }
    if let Some(r) = report.hs_decay_ratio {
        text.push_str(&format!("HS decay ratio: {r:.4}\n"));
    }
    text.push_str(&format!(
        "grading: anticommutator {:.1e}, self-adjoint residual {:.1e}\n",
        report.grading.anticommutator, report.grading.self_adjoint_residual
    ));
    for c in &report.commutators {
        let norms: Vec<String> = c.sizes.iter().zip(&c.norms).map(|(k, v)| format!("K={k}: {v:.12}")).collect();
        text.push_str(&format!("[D, pi({})]: {}\n", c.generator, norms.join(", ")));
    }
    let failure = report.failures.first().cloned();
    let pass = report.pass;
    text.push_str(if pass { "verdict: pass\n" } else { "verdict: FAIL\n" });

    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let path = cfg.out.join("report.json");
    let doc = VerifyDocument { config: cfg, report };
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    text.push_str(&format!("report: {}\n", path.display()));
    Ok(Outcome { text, pass, failure })
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>> {
    let path = dir.join(name);
    csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))
}

/// Maps `f` over `items` on worker threads, keeping the order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get());
    let chunk = items.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(f).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn hs_rows(data: &TripleData, modes: &[i64], big_n: usize, tol: f64) -> Result<Vec<[String; 5]>> {
    let rows = par_map(modes, |&n| -> qdisk::Result<[String; 5]> {
        let hs = data.parametrix(n, big_n)?.hs_norm(tol);
        Ok([
            n.to_string(),
            hs.value.to_string(),
            hs.upper.to_string(),
            hs.tail_bound.to_string(),
            format!("{:?}", hs.status).to_lowercase(),
        ])
    });
    Ok(rows.into_iter().collect::<qdisk::Result<Vec<_>>>()?)
}

pub fn spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let data = cfg.data()?;
    let o = &cfg.options;
    let mut text = cfg.header("spectrum");
    let big_n = match data.kernel_count() {
        Ok(n) => n,
        Err(e) => return Ok(Outcome { text, pass: false, failure: Some(format!("kernel dimension: {e}")) }),
    };
    let modes: Vec<i64> = (o.n_min..=o.n_max).collect();
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;

    let mut hs = csv_writer(&cfg.out, "hs.csv")?;
    hs.write_record(["n", "hs", "upper", "tail_bound", "status"])?;
    let mut all_finite = true;
    for row in hs_rows(&data, &modes, big_n, o.tail_tol)? {
        all_finite &= row[1].parse::<f64>().is_ok_and(f64::is_finite);
        hs.write_record(&row)?;
    }
    hs.flush()?;

    let mut sigma = csv_writer(&cfg.out, "sigma.csv")?;
    sigma.write_record(["n", "j", "sigma"])?;
    for (n, values) in modes.iter().zip(par_map(&modes, |&n| singular_values(&data, n, o.size))) {
        for (j, s) in values.iter().enumerate() {
            sigma.write_record([n.to_string(), j.to_string(), s.to_string()])?;
        }
    }
    sigma.flush()?;

    let mut kernel = csv_writer(&cfg.out, "kernel.csv")?;
    kernel.write_record(["n", "K", "null_sigma", "max_sigma", "cosine", "edge_mass", "in_space"])?;
    let nonneg: Vec<usize> = modes.iter().filter(|&&n| n >= 0).map(|&n| n as usize).collect();
    for ev in par_map(&nonneg, |&n| kernel_evidence(&data, n, o.size, EDGE_THRESHOLD)) {
        kernel.write_record([
            ev.mode.to_string(),
            ev.size.to_string(),
            ev.null_singular_value.to_string(),
            ev.largest_singular_value.to_string(),
            ev.cosine.to_string(),
            ev.edge_mass.to_string(),
            ev.in_space.to_string(),
        ])?;
    }
    kernel.flush()?;

    let mut comm = csv_writer(&cfg.out, "commutator.csv")?;
    comm.write_record(["generator", "K", "norm"])?;
    let (lo, hi) = o.commutator_modes;
    for (name, a) in [("U", ToeplitzElement::shift()), ("U*", ToeplitzElement::shift_adjoint())] {
        for &size in &o.commutator_sizes {
            comm.write_record([name.to_string(), size.to_string(), commutator_norm(&data, &a, size, lo, hi).to_string()])?;
        }
    }
    comm.flush()?;

    text.push_str(&format!("N = {big_n}\n"));
    for name in ["hs.csv", "sigma.csv", "kernel.csv", "commutator.csv"] {
        text.push_str(&format!("wrote {}\n", cfg.out.join(name).display()));
    }
    let failure = (!all_finite).then(|| "a Hilbert-Schmidt norm is not finite".to_string());
    Ok(Outcome { text, pass: failure.is_none(), failure })
}

pub fn emit(out: &Outcome) -> std::io::Result<()> {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(out.text.as_bytes())?;
    stdout.flush()
}
