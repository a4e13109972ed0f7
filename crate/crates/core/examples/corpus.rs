//! Build a small on-disk corpus, verify it, split it for training and
//! resample it to 4 MHz.
//!
//! ```bash
//! cargo run --example corpus -- /tmp/emsca_corpus
//! ```

use std::path::PathBuf;

use emsca::emitter::low_end_profile;
use emsca::store::{build_corpus, resample_corpus, split, CorpusManifest};

fn main() -> anyhow::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("emsca_corpus_example"));
    if root.exists() {
        std::fs::remove_dir_all(&root)?;
    }

    let manifest = build_corpus(&low_end_profile(), 8, 0.01, 20e6, 0, &root.join("20mhz"))?;
    println!(
        "built {} traces over {} labels, {} payload bytes",
        manifest.len(),
        manifest.labels().len(),
        manifest.payload_bytes()
    );

    // Reload from disk and check every payload against the manifest.
    let loaded = CorpusManifest::load(&root.join("20mhz"))?;
    loaded.verify()?;

    let (train, test) = split(&loaded, 0.75, 1)?;
    println!("split: {} train, {} test", train.len(), test.len());

    let small = resample_corpus(&loaded, 4e6, &root.join("4mhz"))?;
    println!(
        "4 MHz copy: {} bytes ({:.1}% of the original)",
        small.payload_bytes(),
        100.0 * small.payload_bytes() as f64 / loaded.payload_bytes() as f64
    );
    println!("manifest:\n{}", small.to_text().lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
