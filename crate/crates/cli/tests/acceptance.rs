//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use spiketopo::pipeline::{run_repetitions, PipelineConfig};
use spiketopo::selfcheck::{self, CheckOutcome};
use spiketopo::single_neuron::neuron_vp_1nn;
use spiketopo::stability::{q_grid, q_sweep};
use spiketopo::synth::gen_network_a;

const SEED: u64 = 7;

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    run: fn() -> CheckOutcome,
}

fn outcome(name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed,
        detail,
    }
}

fn all_of(name: &str, parts: Vec<CheckOutcome>) -> CheckOutcome {
    let passed = parts.iter().all(|p| p.passed);
    let detail = parts.iter().map(|p| format!("[{}] {}", p.name, p.detail)).collect::<Vec<_>>().join("; ");
    outcome(name, passed, detail)
}

fn vp_oracle() -> CheckOutcome {
    selfcheck::vp_oracle_grid(4, 6, &[0.0, 0.3, 1.0, 2.0, 2.5])
}

fn closed_forms() -> CheckOutcome {
    selfcheck::vp_closed_forms(10_000, SEED)
}

fn metric_axioms() -> CheckOutcome {
    selfcheck::vp_metric_axioms(10_000, SEED)
}

fn lipschitz() -> CheckOutcome {
    all_of("lipschitz", vec![selfcheck::q_bound_fuzz(10_000, SEED), selfcheck::diagram_stability_fuzz(1_000, SEED)])
}

fn degree0() -> CheckOutcome {
    selfcheck::degree0_matches_mst(200, 30, SEED)
}

fn degree1() -> CheckOutcome {
    selfcheck::degree1_matches_naive(100, 7, SEED)
}

fn fast_path() -> CheckOutcome {
    selfcheck::bottleneck_fast_path(200, SEED)
}

fn wasserstein_stability() -> CheckOutcome {
    selfcheck::hausdorff_bound_fuzz(500, SEED)
}

fn network_a() -> CheckOutcome {
    let run = || -> spiketopo::Result<CheckOutcome> {
        let data = gen_network_a(SEED)?;
        let config = PipelineConfig {
            rng_seed: SEED,
            ..PipelineConfig::default()
        };
        let report = run_repetitions(&data, &config)?;
        let singles = (0..5)
            .map(|n| neuron_vp_1nn(&data, n, config.q).map(|r| r.score))
            .collect::<spiketopo::Result<Vec<f64>>>()?;
        let passed = (0.8..=1.0).contains(&report.mean) && singles.iter().all(|s| (0.4..=0.6).contains(s));
        Ok(outcome(
            "network_a",
            passed,
            format!("network mean {:.4} (std {:.4}, target 0.89); single neurons {singles:?}", report.mean, report.std),
        ))
    };
    run().unwrap_or_else(|e| outcome("network_a", false, e.to_string()))
}

fn cascade() -> CheckOutcome {
    selfcheck::cascade_pair_check()
}

fn sweep() -> CheckOutcome {
    let run = || -> spiketopo::Result<CheckOutcome> {
        let data = gen_network_a(SEED)?;
        let config = PipelineConfig {
            rng_seed: SEED,
            ..PipelineConfig::default()
        };
        let rows = q_sweep(&data, &config, &q_grid(0.5, 2.0, 0.05)?)?;
        let lo = rows.iter().map(|r| r.mean).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.mean).fold(f64::NEG_INFINITY, f64::max);
        Ok(outcome(
            "q_sweep",
            hi - lo <= 0.15,
            format!("{} grid points, mean score in [{lo:.4}, {hi:.4}], range {:.4}", rows.len(), hi - lo),
        ))
    };
    run().unwrap_or_else(|e| outcome("q_sweep", false, e.to_string()))
}

fn chance() -> CheckOutcome {
    all_of("chance", vec![selfcheck::chance_calibration(SEED, 2, 20), selfcheck::chance_calibration(SEED, 3, 20)])
}

fn bayes() -> CheckOutcome {
    selfcheck::bayes_reductions(50, SEED)
}

fn write_licks(dir: &Path, raster: &Path) -> std::path::PathBuf {
    // one lick every 150 ticks from a trial-dependent offset, onset at the second lick
    let text = std::fs::read_to_string(raster).expect("raster written");
    let value: serde_json::Value = serde_json::from_str(&text).expect("raster is JSON");
    let trials: Vec<serde_json::Value> = value["trials"]
        .as_array()
        .expect("trials array")
        .iter()
        .map(|t| {
            let id = t["trial_id"].as_i64().expect("integer id");
            let start = id % 40;
            serde_json::json!({
                "trial_id": id,
                "licks": (0..7).map(|k| start + 150 * k).collect::<Vec<i64>>(),
                "onset_index": 1,
            })
        })
        .collect();
    let path = dir.join("licks.json");
    std::fs::write(&path, serde_json::json!({ "trials": trials }).to_string()).expect("write licks");
    path
}

/// Runs every subcommand twice into separate directories and compares bytes.
fn determinism() -> CheckOutcome {
    let bin = env!("CARGO_BIN_EXE_spiketopo");
    let dirs = [tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir")];
    let mut stdouts: Vec<Vec<(String, Vec<u8>)>> = vec![Vec::new(), Vec::new()];
    for (run, dir) in dirs.iter().enumerate() {
        let d = dir.path();
        let p = |name: &str| d.join(name).to_string_lossy().into_owned();
        std::fs::create_dir_all(d.join("dgms")).expect("mkdir");
        let licks = {
            let status = Command::new(bin).args(["synth", "--scenario", "network-a", "--seed", "7", "--out", &p("r.json")]).status();
            assert!(status.expect("spawn").success());
            write_licks(d, &d.join("r.json"))
        };
        let licks = licks.to_string_lossy().into_owned();
        let steps: Vec<Vec<String>> = [
            vec!["synth", "--scenario", "cascade", "--out", &p("c.json")],
            vec!["synth", "--scenario", "chance", "--seed", "3", "--stimuli", "3", "--out", &p("ch.csv")],
            vec!["vp", "--q", "0.5", "--a", "[1,4,9]", "--b", "[2,8]"],
            vec!["vp-matrix", "--q", "2", "--input", &p("c.json"), "--trial", "0", "--out", &p("m0.csv")],
            vec!["vp-matrix", "--q", "2", "--input", &p("c.json"), "--trial", "1", "--out", &p("m1.csv")],
            vec!["ph", "--input", &p("m0.csv"), "--degree", "both", "--out", &p("dgms/0.csv")],
            vec!["ph", "--input", &p("m1.csv"), "--degree", "both", "--out", &p("dgms/1.csv")],
            vec!["bottleneck", "--a", &p("dgms/0.csv"), "--b", &p("dgms/1.csv"), "--degree", "1"],
            vec!["bdm", "--diagrams", &p("dgms"), "--degree", "1", "--out", &p("bdm1.csv")],
            vec!["classify", "--input", &p("r.json"), "--q", "2.005", "--degree", "0", "--trials", "10", "--reps", "5", "--seed", "7", "--out", &p("report.json"), "--bdm-out", &p("bdm.csv")],
            vec!["classify", "--input", &p("ch.csv"), "--degree", "1", "--trials", "8", "--reps", "3", "--seed", "1", "--window-start", "100", "--window-end", "400", "--out", &p("report_ch.json")],
            vec!["sweep", "--input", &p("r.json"), "--q-start", "0", "--q-end", "2", "--q-step", "0.5", "--reps", "3", "--seed", "7", "--out", &p("sweep.csv")],
            vec!["single-neuron", "--input", &p("r.json"), "--method", "vp1nn", "--neuron", "1", "--out", &p("sn_vp.json")],
            vec!["single-neuron", "--input", &p("r.json"), "--licks", &licks, "--method", "bayes", "--seed", "5", "--out", &p("sn_bayes.json")],
            vec!["mds", "--input", &p("bdm.csv"), "--dim", "2", "--out", &p("coords.csv")],
            vec!["selfcheck"],
        ]
        .into_iter()
        .map(|v| v.into_iter().map(String::from).collect())
        .collect();
        for args in steps {
            let out = Command::new(bin).args(&args).output().expect("spawn");
            if !out.status.success() {
                return outcome(
                    "determinism",
                    false,
                    format!("`{}` failed: {}", args[0], String::from_utf8_lossy(&out.stderr)),
                );
            }
            stdouts[run].push((args[0].clone(), out.stdout));
        }
    }
    let mut compared = 0;
    let mut files: Vec<_> = walk(dirs[0].path());
    files.sort();
    for rel in &files {
        let a = std::fs::read(dirs[0].path().join(rel)).expect("read");
        let b = std::fs::read(dirs[1].path().join(rel));
        if b.ok().as_ref() != Some(&a) {
            return outcome("determinism", false, format!("{} differs between runs", rel.display()));
        }
        compared += 1;
    }
    for (x, y) in stdouts[0].iter().zip(&stdouts[1]) {
        if x != y {
            return outcome("determinism", false, format!("stdout of `{}` differs between runs", x.0));
        }
    }
    outcome(
        "determinism",
        true,
        format!("{compared} output files and {} stdout streams byte-identical", stdouts[0].len()),
    )
}

fn walk(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("read dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
    }
    out
}

fn main() {
    let minutes = |m: u64| Duration::from_secs(60 * m);
    let criteria = [
        Criterion { id: 1, title: "VP DP equals brute force on the exhaustive grid", budget: minutes(1), run: vp_oracle },
        Criterion { id: 2, title: "VP closed forms at q=0 and q=2.5", budget: minutes(5), run: closed_forms },
        Criterion { id: 3, title: "VP symmetry and triangle inequality", budget: minutes(5), run: metric_axioms },
        Criterion { id: 4, title: "Lipschitz bounds in q (pairs and ensembles)", budget: minutes(5), run: lipschitz },
        Criterion { id: 5, title: "degree-0 persistence equals MST", budget: minutes(5), run: degree0 },
        Criterion { id: 6, title: "degree-1 reduction equals naive oracle", budget: minutes(5), run: degree1 },
        Criterion { id: 7, title: "degree-0 bottleneck fast path equals matching", budget: minutes(5), run: fast_path },
        Criterion { id: 8, title: "Wasserstein stability of diagram distributions", budget: minutes(5), run: wasserstein_stability },
        Criterion { id: 9, title: "network A: ensemble vs single-neuron scores", budget: minutes(10), run: network_a },
        Criterion { id: 10, title: "cascade pair: loop vs chain", budget: minutes(5), run: cascade },
        Criterion { id: 11, title: "q-sweep stability on network A", budget: minutes(15), run: sweep },
        Criterion { id: 12, title: "chance calibration", budget: minutes(5), run: chance },
        Criterion { id: 13, title: "Bayesian rate-phase reductions and normalization", budget: minutes(5), run: bayes },
        Criterion { id: 14, title: "CLI determinism", budget: minutes(10), run: determinism },
    ];
    let mut failures = 0;
    for c in criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= c.budget;
        let passed = result.passed && in_budget;
        if !passed {
            failures += 1;
        }
        let budget_note = if in_budget { String::new() } else { format!(" (over budget {:?})", c.budget) };
        println!(
            "criterion {:>2} {}: {} [{:.1}s{budget_note}] {}",
            c.id,
            if passed { "PASS" } else { "FAIL" },
            c.title,
            elapsed.as_secs_f64(),
            result.detail
        );
    }
    println!("acceptance: {} passed, {failures} failed", 14 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
