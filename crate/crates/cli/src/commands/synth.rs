use std::path::Path;

use datakit::{files, stats_table, synth_generate};

use crate::dataset_dir::write_dataset_dir;
use crate::{runtime, usage, CliError};

pub fn run(spec_path: &Path, out: &Path, seed_override: Option<u64>) -> Result<(), CliError> {
    let mut spec = files::read_synth_spec(spec_path).map_err(usage)?;
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    let split = synth_generate(&spec).map_err(runtime)?;

    let labels: Vec<String> = (0..spec.num_labels).map(|i| format!("TF{i}")).collect();
    write_dataset_dir(out, &labels, &split)?;
    // spec echo and planted ground truth for downstream scoring
    files::write_synth_spec(&out.join("synth_spec.toml"), &spec).map_err(runtime)?;
    files::write_ground_truth(&out.join("groups.tsv"), &spec).map_err(runtime)?;
    std::fs::write(out.join("stats.tsv"), stats_table(&split, spec.num_labels)).map_err(runtime)?;

    println!(
        "synth: {} train / {} valid / {} test records -> {}",
        split.train.len(),
        split.valid.len(),
        split.test.len(),
        out.display()
    );
    Ok(())
}
