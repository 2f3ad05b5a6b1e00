use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use ndn_dos::harness::bench::bench_crypto;
use ndn_dos::harness::experiment::output_dir;
use ndn_dos::harness::{load_scenario, run_experiment, suite, Scenario};

#[derive(Parser)]
#[command(name = "ndn-dos", version, about = "Discrete-event NDN denial-of-service simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every arm of a scenario for a number of seeded replicates.
    Run {
        scenario: PathBuf,
        /// Base seed; replicate k uses seed + k. Defaults to the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        /// Output directory (overridden by NDN_DOS_OUT).
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a scenario file and report every problem found.
    Validate { scenario: PathBuf },
    /// Run the built-in experiment suite and print one line per check.
    Suite {
        /// Run only these checks (by number).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Write the suite's scenario files to this directory instead of running.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Compare content-hash and RSA-1024 signature verification throughput.
    BenchCrypto {
        #[arg(long, default_value_t = 1500)]
        bytes: usize,
        #[arg(long, default_value_t = 1000)]
        millis: u64,
    },
}

fn load(path: &PathBuf) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    load_scenario(&text).map_err(|errs| {
        let mut msg = format!("{}: {} problem(s)", path.display(), errs.len());
        for e in errs {
            msg.push_str("\n  - ");
            msg.push_str(&e);
        }
        msg
    })
}

fn run(cmd: Cmd) -> Result<bool, String> {
    match cmd {
        Cmd::Run {
            scenario,
            seed,
            replicates,
            out,
        } => {
            let scn = load(&scenario)?;
            let out = output_dir(&out);
            let seed = seed.unwrap_or(scn.doc.seed);
            let summary = run_experiment(&scn, replicates, seed, &out).map_err(|e| e.to_string())?;
            for (arm, s) in &summary.arms {
                let sat = &s.metrics["honest_satisfaction"];
                println!(
                    "{arm}: {} replicate(s), honest satisfaction {:.4} [{:.4}, {:.4}]",
                    s.seeds.len(),
                    sat.mean,
                    sat.ci95[0],
                    sat.ci95[1]
                );
            }
            println!("wrote {}", out.join("summary.json").display());
            Ok(true)
        }
        Cmd::Validate { scenario } => {
            let scn = load(&scenario)?;
            let arms = scn.arms().map_err(|e| e.join("\n"))?;
            println!(
                "{}: ok ({} nodes, {} links, {} arm(s))",
                scenario.display(),
                scn.topology.node_count(),
                scn.doc.links.len(),
                arms.len()
            );
            Ok(true)
        }
        Cmd::Suite { export: Some(dir), .. } => {
            std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            for (name, doc) in suite::scenarios() {
                let path = dir.join(format!("{name}.json"));
                let text = serde_json::to_string_pretty(&doc).expect("scenario serializes") + "\n";
                std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
                println!("wrote {}", path.display());
            }
            Ok(true)
        }
        Cmd::Suite { only, export: None } => {
            let mut all = true;
            for c in suite::CHECKS.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
                let o = (c.run)();
                all &= o.pass;
                println!("{}", o.line());
            }
            Ok(all)
        }
        Cmd::BenchCrypto { bytes, millis } => {
            let r = bench_crypto(bytes, Duration::from_millis(millis)).map_err(|e| e.to_string())?;
            println!("packet size:          {} B", r.packet_bytes);
            println!(
                "sha-256 verification: {:.0} pkt/s ({:.1} Mbit/s)",
                r.hash_per_sec(),
                r.hash_mbps()
            );
            println!(
                "rsa-1024 verification: {:.0} pkt/s ({:.1} Mbit/s)",
                r.sig_per_sec(),
                r.sig_mbps()
            );
            println!("ratio:                {:.1}x", r.ratio());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse().cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
