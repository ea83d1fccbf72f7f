use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use spiketopo::diagram_distance::{bottleneck_auto, bottleneck_matrix};
use spiketopo::embed::classical_mds;
use spiketopo::io::{self, LabeledMatrix};
use spiketopo::metrics::{vp_distance, vp_matrix};
use spiketopo::persistence::diagram;
use spiketopo::pipeline::{run_pipeline_once, run_repetitions, PipelineConfig};
use spiketopo::single_neuron::{bayes_rate_phase, neuron_trials, neuron_vp_1nn};
use spiketopo::stability::{q_grid, q_sweep};
use spiketopo::synth::{cascade_dataset, gen_chance_dataset, gen_network_a};
use spiketopo::{selfcheck, Dataset, SpikeTrain, TimeDomain};

use crate::{Command, Failure, Method, Scenario};

type Outcome = Result<(), Failure>;

fn with_path<T>(path: &Path, r: spiketopo::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&PathBuf>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_raster(path: &Path) -> Result<Dataset, Failure> {
    with_path(path, io::read_raster(path))
}

fn parse_spikes(flag: &str, text: &str) -> Result<Vec<u32>, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Usage(format!("--{flag}: expected a JSON array of ticks: {e}")))
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Vp { q, a, b, t_max } => {
            let (a, b) = (parse_spikes("a", &a)?, parse_spikes("b", &b)?);
            let latest = a.iter().chain(&b).copied().max().unwrap_or(0);
            let domain = TimeDomain::new(t_max.unwrap_or(latest));
            let a = SpikeTrain::from_unsorted(a, domain)?;
            let b = SpikeTrain::from_unsorted(b, domain)?;
            println!("{}", io::fmt_num(vp_distance(&a, &b, q)?));
            Ok(())
        }
        Command::VpMatrix { q, input, trial, out } => {
            let data = load_raster(&input)?;
            let t = data
                .trials()
                .iter()
                .find(|t| t.trial_id == trial)
                .ok_or_else(|| Failure::Data(format!("no trial with id {trial}")))?;
            let matrix = vp_matrix(&t.ensemble, q)?;
            let lm = LabeledMatrix {
                ids: (0..matrix.len() as i64).collect(),
                labels: None,
                matrix,
            };
            emit(out.as_ref(), &io::matrix_to_csv(&lm)?)
        }
        Command::Ph { input, degree, out } => {
            let lm = with_path(&input, io::read_matrix(&input))?;
            let diagrams = degree
                .degrees()
                .iter()
                .map(|&d| diagram(&lm.matrix, d))
                .collect::<spiketopo::Result<Vec<_>>>()?;
            emit(out.as_ref(), &io::diagrams_to_csv(&diagrams)?)
        }
        Command::Bottleneck { a, b, degree } => {
            let da = with_path(&a, io::read_diagram(&a, degree))?;
            let db = with_path(&b, io::read_diagram(&b, degree))?;
            println!("{}", io::fmt_num(bottleneck_auto(&da, &db)?));
            Ok(())
        }
        Command::Bdm { diagrams, degree, out } => {
            let mut files: Vec<PathBuf> = fs::read_dir(&diagrams)
                .map_err(|e| Failure::Data(format!("{}: {e}", diagrams.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "csv"))
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(Failure::Data(format!("{}: no .csv diagrams", diagrams.display())));
            }
            let dgms = files
                .iter()
                .map(|f| with_path(f, io::read_diagram(f, degree)))
                .collect::<Result<Vec<_>, _>>()?;
            let stems: Vec<Option<i64>> = files
                .iter()
                .map(|f| f.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse().ok()))
                .collect();
            let ids = if stems.iter().all(Option::is_some) {
                stems.into_iter().flatten().collect()
            } else {
                (0..files.len() as i64).collect()
            };
            let lm = LabeledMatrix {
                ids,
                labels: None,
                matrix: bottleneck_matrix(&dgms)?,
            };
            emit(out.as_ref(), &io::matrix_to_csv(&lm)?)
        }
        Command::Classify {
            input,
            q,
            degree,
            trials,
            reps,
            seed,
            window_start,
            window_end,
            out,
            bdm_out,
        } => {
            let data = load_raster(&input)?;
            let config = PipelineConfig {
                q,
                degree,
                trials_per_stimulus: trials,
                repetitions: reps,
                rng_seed: seed,
                window: window_start.zip(window_end),
            };
            let report = run_repetitions(&data, &config)?;
            if let Some(path) = bdm_out {
                let first = run_pipeline_once(&data, &config)?;
                let lm = LabeledMatrix {
                    ids: first.trial_ids,
                    labels: Some(first.labels),
                    matrix: first.bdm,
                };
                emit(Some(&path), &io::matrix_to_csv(&lm)?)?;
            }
            emit(out.as_ref(), &io::to_json_string(&report)?)
        }
        Command::Sweep {
            input,
            q_start,
            q_end,
            q_step,
            reps,
            trials,
            degree,
            seed,
            out,
        } => {
            let data = load_raster(&input)?;
            let config = PipelineConfig {
                degree,
                trials_per_stimulus: trials,
                repetitions: reps,
                rng_seed: seed,
                ..PipelineConfig::default()
            };
            let grid = q_grid(q_start, q_end, q_step).map_err(|e| Failure::Usage(e.to_string()))?;
            let rows: Vec<Vec<f64>> = q_sweep(&data, &config, &grid)?
                .into_iter()
                .map(|r| vec![r.q, r.mean, r.std])
                .collect();
            emit(out.as_ref(), &io::numeric_table_csv(&["q", "mean", "std"], &rows)?)
        }
        Command::Synth {
            scenario,
            seed,
            stimuli,
            out,
        } => {
            let data = match scenario {
                Scenario::NetworkA => gen_network_a(seed)?,
                Scenario::Cascade => cascade_dataset(),
                Scenario::Chance => gen_chance_dataset(seed, stimuli)?,
            };
            let csv = out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "csv"));
            let text = if csv { io::raster_to_csv(&data)? } else { io::raster_to_json(&data)? };
            emit(out.as_ref(), &text)
        }
        Command::SingleNeuron {
            input,
            licks,
            method,
            alpha,
            q,
            seed,
            neuron,
            out,
        } => {
            let data = load_raster(&input)?;
            let licks = licks.map(|p| with_path(&p, io::read_licks(&p))).transpose()?;
            let neurons: Vec<usize> = match neuron {
                Some(n) => vec![n],
                None => (0..data.neuron_count()).collect(),
            };
            let mut entries = Vec::with_capacity(neurons.len());
            for n in neurons {
                let entry = match method {
                    Method::Vp1nn => json!({ "neuron": n, "report": neuron_vp_1nn(&data, n, q)? }),
                    Method::Bayes => {
                        let (trials, excluded) = neuron_trials(&data, n, licks.as_deref())?;
                        let report = bayes_rate_phase(&trials, alpha, seed)?;
                        json!({ "neuron": n, "excluded_trials": excluded, "report": report })
                    }
                };
                entries.push(entry);
            }
            let method = match method {
                Method::Vp1nn => json!({ "method": "vp1nn", "q": q }),
                Method::Bayes => json!({ "method": "bayes", "alpha": alpha, "seed": seed }),
            };
            let doc = json!({ "settings": method, "neurons": entries });
            emit(out.as_ref(), &io::to_json_string(&doc)?)
        }
        Command::Mds { input, dim, out } => {
            let lm = with_path(&input, io::read_matrix(&input))?;
            let e = classical_mds(&lm.matrix, dim).map_err(|e| Failure::Usage(e.to_string()))?;
            eprintln!("negative eigenvalue mass: {}", io::fmt_num(e.negative_mass));
            emit(out.as_ref(), &io::coords_to_csv(&lm.ids, &e.coords, lm.labels.as_deref())?)
        }
        Command::Selfcheck { seed } => {
            let outcomes = selfcheck::run_quick(seed);
            for o in &outcomes {
                println!("{o}");
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} passed, {failed} failed", outcomes.len() - failed);
            if failed == 0 {
                Ok(())
            } else {
                Err(Failure::Data(format!("{failed} self-check(s) failed")))
            }
        }
    }
}
