use goamp_cli::config::{parse_config, Mode};
use goamp_cli::{execute, install_pool};
use std::io::Write;
use std::process::ExitCode;

const USAGE: &str = "\
goamp - sparse recovery benchmark harness

Usage: goamp <simulate|se|chart|threshold|selftest> [--key value ...]

Common flags (also accepted as `key = value` lines via --config FILE):
  --channel linear|onebit     measurement channel (default linear)
  --n N --k K --m M           problem dimensions (default 65536, 16, 200)
  --kappa LIST                condition numbers, comma separated (default 1)
  --delta LIST                sampling ratios for se/chart modes
  --snr_db DB | --sigma2 S2   noise level (default 40 dB); mutually exclusive
  --law gaussian|constant|twopoint
  --algorithms LIST           goamp,oamp,gamp-ablation,fista,omp,biht,glasso
  --iters_<algo> N            per-algorithm iteration override
  --trials T                  Monte-Carlo trials (default 100)
  --theta_x X --theta_z Z     damping factors in (0, 1]
  --seed S --workers W        reproducibility and parallelism
  --out PATH                  write CSV here (default stdout)
  --trace                     emit every iteration of message-passing runs
  --quantiles LIST            summary quantiles (default 0.5)

Exit codes: 0 success, 2 configuration error, 3 I/O error.
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(mode_arg) = args.first() else {
        eprint!("{USAGE}");
        return ExitCode::from(2);
    };
    let mode = match mode_arg.as_str() {
        "simulate" => Mode::Simulate,
        "se" => Mode::Se,
        "chart" => Mode::Chart,
        "threshold" => Mode::Threshold,
        "selftest" => Mode::Selftest,
        "--help" | "-h" | "help" => {
            print!("{USAGE}");
            return ExitCode::SUCCESS;
        }
        other => {
            eprintln!("unknown subcommand '{other}'\n");
            eprint!("{USAGE}");
            return ExitCode::from(2);
        }
    };

    let cfg = match parse_config(mode, &args[1..]) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    if mode != Mode::Selftest {
        for w in &cfg.warnings {
            eprintln!("warning: {w}");
        }
    }

    let pool = install_pool(&cfg);
    let result = pool.install(|| execute(&cfg));
    let (csv, summary) = match result {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    if !csv.is_empty() {
        match &cfg.out {
            Some(path) => {
                if let Err(e) = std::fs::write(path, &csv) {
                    eprintln!("cannot write {}: {e}", path.display());
                    return ExitCode::from(3);
                }
                eprintln!("wrote {}", path.display());
            }
            None => {
                if std::io::stdout().write_all(csv.as_bytes()).is_err() {
                    return ExitCode::from(3);
                }
            }
        }
    }
    if !summary.is_empty() {
        eprintln!("{summary}");
    }
    ExitCode::SUCCESS
}
