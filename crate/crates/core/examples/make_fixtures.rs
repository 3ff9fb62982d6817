//! Regenerates the shipped fixture files under `data/fixtures/`.
//!
//! ```text
//! cargo run -p gvf-core --example make_fixtures
//! ```

#[path = "../tests/common/fixtures.rs"]
mod fixtures;

use std::fs;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = fixtures_dir();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("scenes_960.jsonl"), fixtures::scenes_jsonl(120, "s"))?;
    fs::write(dir.join("scenes_1200.jsonl"), fixtures::scenes_jsonl(150, "p"))?;
    let (gold, preds) = fixtures::oeq_files()?;
    fs::write(dir.join("oeq_gold.jsonl"), gold)?;
    fs::write(dir.join("oeq_predictions.jsonl"), preds)?;
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}

use fixtures::fixtures_dir;
