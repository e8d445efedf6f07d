//! Acceptance suite: runs every preset and prints one PASS/FAIL line per criterion.
//!
//! `cargo test -p sdlab --test acceptance`. Exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use sdlab::diagnostics::identities::spectral_identities;
use sdlab::report::{DiagnosticsReport, Verdict};
use sdlab::runner::{preset, run_with_threads, PRESETS};
use sdlab::spectral::TorusGrid;

struct Run {
    reports: Vec<DiagnosticsReport>,
    jsonl: Vec<u8>,
    elapsed: Duration,
}

fn run_preset(name: &str, root: &Path, threads: usize) -> Run {
    let mut c = preset(name).expect("known preset");
    c.output_dir = root.join(format!("{name}.t{threads}"));
    let start = Instant::now();
    let outcome = run_with_threads(&c, Some(threads)).unwrap_or_else(|e| panic!("{name}: {e}"));
    let elapsed = start.elapsed();
    let jsonl = std::fs::read(outcome.output_dir.join("reports.jsonl")).expect("reports.jsonl");
    Run {
        reports: outcome.reports,
        jsonl,
        elapsed,
    }
}

struct Verdicts {
    lines: Vec<String>,
    failed: usize,
}

impl Verdicts {
    fn record(&mut self, id: usize, title: &str, ok: bool, detail: String) {
        let tag = if ok { "PASS" } else { "FAIL" };
        if !ok {
            self.failed += 1;
        }
        let line = format!("{tag} [{id:>2}] {title}: {detail}");
        println!("{line}");
        self.lines.push(line);
    }
}

fn select<'a>(run: &'a Run, pred: impl Fn(&str) -> bool) -> Vec<&'a DiagnosticsReport> {
    run.reports.iter().filter(|r| pred(&r.name)).collect()
}

/// All selected reports pass and there are at least `min` of them.
fn all_pass(reports: &[&DiagnosticsReport], min: usize) -> (bool, String) {
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| r.verdict != Verdict::Pass)
        .map(|r| format!("{} {} (stat {:.3e}, target {:.3e})", r.name, r.verdict.as_str(), r.statistic, r.target))
        .collect();
    let ok = bad.is_empty() && reports.len() >= min;
    let detail = if bad.is_empty() {
        format!("{} reports pass", reports.len())
    } else {
        format!("{}/{} fail: {}", bad.len(), reports.len(), bad.join("; "))
    };
    (ok, if reports.len() < min { format!("{detail}, expected at least {min}") } else { detail })
}

fn worst(reports: &[&DiagnosticsReport]) -> f64 {
    reports.iter().map(|r| r.statistic).fold(0.0, f64::max)
}

fn meta_str(r: &DiagnosticsReport, key: &str) -> String {
    r.metadata.get(key).and_then(|v| v.as_str()).unwrap_or_default().to_string()
}

fn meta_f64(r: &DiagnosticsReport, key: &str) -> f64 {
    r.metadata.get(key).and_then(|v| v.as_f64()).unwrap_or(f64::NAN)
}

fn main() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut runs: BTreeMap<&str, Run> = BTreeMap::new();
    let mut reruns: BTreeMap<&str, Run> = BTreeMap::new();
    for (name, _) in PRESETS {
        let run = run_preset(name, tmp.path(), 1);
        println!("ran {name} in {:.1} s", run.elapsed.as_secs_f64());
        runs.insert(name, run);
    }
    for (name, _) in PRESETS {
        reruns.insert(name, run_preset(name, tmp.path(), 3));
    }
    let mut v = Verdicts {
        lines: Vec::new(),
        failed: 0,
    };
    let base = &runs["brownian_baseline"];

    let start = Instant::now();
    let mut direct = Vec::new();
    for (d, n) in [(1, 256), (2, 32), (3, 16)] {
        direct.extend(spectral_identities(TorusGrid::new(d, n).unwrap(), 100, 7).unwrap());
    }
    let spectral_time = start.elapsed().as_secs_f64();
    let mut spectral = select(base, |n| n.starts_with("spectral."));
    spectral.extend(direct.iter());
    let (ok, detail) = all_pass(&spectral, 18);
    v.record(
        1,
        "spectral substrate",
        ok && spectral_time < 10.0,
        format!("{detail}, worst {:.2e} <= 1e-12, 100 fields x 3 dims in {spectral_time:.2} s (< 10 s)", worst(&spectral)),
    );

    let helm = select(base, |n| n.starts_with("helmholtz."));
    let (ok, detail) = all_pass(&helm, 6);
    v.record(2, "Helmholtz identity", ok, format!("{detail}, worst {:.2e} <= 1e-12", worst(&helm)));

    let skew = select(base, |n| n == "skew_identity");
    let (ok, detail) = all_pass(&skew, 4);
    v.record(3, "skew identity", ok, format!("{detail} across drift cases, worst {:.2e} <= 1e-8", worst(&skew)));

    let besov = select(base, |n| n.starts_with("besov."));
    let (ok, detail) = all_pass(&besov, 9);
    v.record(4, "Besov layer", ok, format!("{detail}, worst {:.2e}", worst(&besov)));

    let ito = &runs["ito_trick_scaling"];
    let ito_reports = select(ito, |n| n == "ito_trick.oracle" || n == "ito_trick.scaling");
    let (ok, detail) = all_pass(&ito_reports, 2);
    let oracle = ito_reports.iter().find(|r| r.name == "ito_trick.oracle");
    let scaling = ito_reports.iter().find(|r| r.name == "ito_trick.scaling");
    v.record(
        5,
        "Ito trick oracle and scaling",
        ok && ito.elapsed.as_secs_f64() < 120.0,
        format!(
            "{detail}; MC {:.4} vs oracle {:.4} (se {:.4}); exponent ratio {:.3}; {:.1} s (< 120 s)",
            oracle.map_or(f64::NAN, |r| r.statistic),
            oracle.map_or(f64::NAN, |r| r.target),
            oracle.and_then(|r| r.standard_error).unwrap_or(f64::NAN),
            scaling.map_or(f64::NAN, |r| r.statistic),
            ito.elapsed.as_secs_f64()
        ),
    );

    let inv = select(&runs["invariance_shear"], |n| n == "incompressibility");
    let (ok, detail) = all_pass(&inv, 4);
    let mut cells: Vec<(String, String)> = inv
        .iter()
        .map(|r| (meta_str(r, "drift").split('(').next().unwrap_or_default().to_string(), format!("{}", meta_f64(r, "dt"))))
        .collect();
    cells.sort();
    cells.dedup();
    let drifts: std::collections::BTreeSet<&str> = cells.iter().map(|c| c.0.as_str()).collect();
    let covered = drifts.contains("shear") && drifts.contains("gff_curl") && cells.len() >= 4;
    let min_p = inv.iter().map(|r| meta_f64(r, "min_p_value")).fold(f64::INFINITY, f64::min);
    v.record(
        6,
        "Lebesgue invariance",
        ok && covered,
        format!("{detail} over {} drift x dt cells, min chi-square p {min_p:.3} > 0.01", cells.len()),
    );

    let kbe = select(base, |n| n.starts_with("kbe."));
    let (ok, detail) = all_pass(&kbe, 4);
    let summary: Vec<String> = kbe.iter().map(|r| format!("{} {:.1e}", &r.name[4..], r.statistic)).collect();
    v.record(7, "backward solver oracles", ok, format!("{detail}: {}", summary.join(", ")));

    let dual_run = &runs["duality_gff"];
    let dual = select(dual_run, |n| n == "duality");
    let (ok, detail) = all_pass(&dual, 1);
    v.record(
        8,
        "duality witness",
        ok && dual_run.elapsed.as_secs_f64() < 300.0,
        format!(
            "{detail}; MC {:.3e} vs PDE {:.3e}, se {:.2e}; {:.1} s (< 300 s)",
            dual.first().map_or(f64::NAN, |r| r.statistic),
            dual.first().map_or(f64::NAN, |r| r.target),
            dual.first().and_then(|r| r.standard_error).unwrap_or(f64::NAN),
            dual_run.elapsed.as_secs_f64()
        ),
    );

    let res = select(&runs["resolvent_sweep"], |n| n.starts_with("resolvent."));
    let (ok, detail) = all_pass(&res, 3);
    let summary: Vec<String> = res.iter().map(|r| format!("{} {:.3e}", &r.name[10..], r.statistic)).collect();
    v.record(9, "resolvent bound", ok, format!("{detail}: {}", summary.join(", ")));

    let structural = select(&runs["cutoff_demo"], |n| {
        n.starts_with("structural.") || n == "cutoff.invariants" || n.starts_with("morrey.")
    });
    let cutoffs = structural.iter().filter(|r| r.name == "cutoff.invariants").count();
    let (ok, detail) = all_pass(&structural, 10);
    let growth = structural
        .iter()
        .find(|r| r.name == "morrey.shifted_growth")
        .map_or(f64::NAN, |r| r.statistic);
    v.record(
        10,
        "structural conditions",
        ok && cutoffs == 3,
        format!("{detail}; {cutoffs} cutoff scales clean; Morrey shifted growth {growth:.1}x"),
    );

    let conv = select(&runs["variance_gff"], |n| n == "mollified_convergence");
    let (ok, detail) = all_pass(&conv, 1);
    let distances = conv
        .first()
        .and_then(|r| r.metadata.get("distances"))
        .map(|d| d.to_string())
        .unwrap_or_default();
    v.record(11, "mollified-law convergence", ok, format!("{detail}; W1 along n = 4, 8, 16, 32: {distances}"));

    let differing: Vec<&str> = PRESETS
        .iter()
        .map(|(n, _)| *n)
        .filter(|n| runs[n].jsonl != reruns[n].jsonl || runs[n].jsonl.is_empty())
        .collect();
    v.record(
        12,
        "determinism",
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} presets byte-identical with 1 and 3 threads", PRESETS.len())
        } else {
            format!("reports differ for {}", differing.join(", "))
        },
    );

    println!();
    println!("{} of {} criteria pass", v.lines.len() - v.failed, v.lines.len());
    if v.failed > 0 {
        std::process::exit(1);
    }
}
