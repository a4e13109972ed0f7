//! Run one of the end-to-end experiments by name and write its CSVs.
//!
//! ```bash
//! cargo run --example experiments -- tamper results/
//! cargo run --example experiments -- crypto results/ 100
//! ```
//!
//! The optional third argument shrinks the corpus for a quick look; the
//! thresholds are only meaningful at the default sizes.

use std::path::PathBuf;

use anyhow::bail;
use emsca::experiments::{
    run_crypto, run_downsample, run_programs, run_tamper, CryptoConfig, DownsampleConfig, ProgramsConfig, TamperConfig,
};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "tamper".into());
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results"));
    let per_class: Option<usize> = args.next().map(|s| s.parse()).transpose()?;

    let report = match name.as_str() {
        "crypto" => {
            let d = CryptoConfig::default();
            run_crypto(&CryptoConfig { per_class: per_class.unwrap_or(d.per_class), ..d })?.report()
        }
        "programs" => {
            let d = ProgramsConfig::default();
            run_programs(&ProgramsConfig { per_class: per_class.unwrap_or(d.per_class), ..d })?.report()
        }
        "downsample" => {
            let d = DownsampleConfig::default();
            let cfg = DownsampleConfig { per_class: per_class.unwrap_or(d.per_class), ..d };
            run_downsample(&cfg, &out.join("corpora"))?.report()
        }
        "tamper" => {
            let d = TamperConfig::default();
            run_tamper(&TamperConfig { train_traces: per_class.unwrap_or(d.train_traces), ..d })?.report()
        }
        other => bail!("unknown experiment {other:?}; pick crypto, programs, downsample or tamper"),
    };
    print!("{}", report.text);
    for p in report.write_files(&out)? {
        println!("wrote {}", p.display());
    }
    print!("{}", report.check_lines());
    Ok(())
}
