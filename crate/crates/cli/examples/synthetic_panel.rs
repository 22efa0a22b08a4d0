//! Writes a synthetic daily price panel (seasonality x trend x lognormal
//! noise, plus forward-looking exogenous columns) as a per-coin CSV
//! directory — a way to try the CLI without real data.
//!
//! Usage: cargo run -p cesrnn --example synthetic_panel -- <out_dir> [coins] [days] [seed]

use std::env;
use std::path::PathBuf;
use std::process::ExitCode;

use cesrnn::dataio::export_panel;
use cesrnn_core::synthetic::{generate, SyntheticSpec};

fn main() -> ExitCode {
    let args: Vec<String> = env::args().skip(1).collect();
    let Some(dir) = args.first() else {
        eprintln!("usage: synthetic_panel <out_dir> [coins] [days] [seed]");
        return ExitCode::from(64);
    };
    let mut numbers = [3u64, 400, 42];
    for (slot, arg) in numbers.iter_mut().zip(args.iter().skip(1)) {
        match arg.parse() {
            Ok(v) => *slot = v,
            Err(_) => {
                eprintln!("error: '{arg}' is not a number");
                return ExitCode::from(64);
            }
        }
    }
    let spec = SyntheticSpec {
        coins: numbers[0] as usize,
        days: numbers[1] as usize,
        seed: numbers[2],
        ..SyntheticSpec::default()
    };
    let panel = generate(&spec);
    if let Err(e) = export_panel(&PathBuf::from(dir), &panel, "avg_price_per_day") {
        eprintln!("error: {e}");
        return ExitCode::from(74);
    }
    println!(
        "wrote {} coin(s) x {} day(s) with exogenous leads {:?} to {dir}",
        spec.coins, spec.days, spec.exo_leads
    );
    ExitCode::SUCCESS
}
