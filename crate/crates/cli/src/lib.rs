//! Library surface of the benchmark CLI, exposed so integration tests can
//! drive the exact code paths of the binary.

pub mod config;
pub mod csv_out;
pub mod runner;
pub mod selftest;

use config::{ExperimentConfig, Mode};

/// Run one experiment end to end; returns `(csv, summary)`.
pub fn execute(cfg: &ExperimentConfig) -> Result<(String, String), String> {
    match cfg.mode {
        Mode::Simulate => {
            let out = runner::run_simulate(cfg)?;
            Ok((csv_out::records_to_csv(&out.records), out.summary))
        }
        Mode::Se => {
            let out = runner::run_se_curves(cfg)?;
            Ok((csv_out::records_to_csv(&out.records), out.summary))
        }
        Mode::Chart => runner::run_chart(cfg),
        Mode::Threshold => runner::run_threshold(cfg),
        Mode::Selftest => {
            let report = selftest::run();
            let ok = report.iter().all(|(_, pass)| *pass);
            let text: String = report
                .iter()
                .map(|(name, pass)| format!("{}: {}\n", name, if *pass { "PASS" } else { "FAIL" }))
                .collect();
            if ok {
                Ok((String::new(), text))
            } else {
                Err(text)
            }
        }
    }
}

/// Build the worker pool honoring `--workers`; `execute` must run inside it
/// for worker-count-independent output.
pub fn install_pool(cfg: &ExperimentConfig) -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w.max(1));
    }
    builder.build().expect("worker pool")
}
