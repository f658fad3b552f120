use std::collections::BTreeMap;
use std::path::Path;

use datakit::{
    attach_sequences, build_windows, files, label_windows, split_by_chromosome, stats_table,
    DEFAULT_TEST_CHROMS, DEFAULT_VALID_CHROMS,
};
use serde::Serialize;

use crate::dataset_dir::write_dataset_dir;
use crate::{runtime, usage, CliError};

#[derive(Serialize)]
struct BuildEcho<'a> {
    peaks: String,
    labels: String,
    genome: String,
    window: u64,
    stride: u64,
    score_threshold: f64,
    valid_chromosomes: &'a [&'a str],
    test_chromosomes: &'a [&'a str],
}

pub fn run(
    peaks_path: &Path,
    labels_path: &Path,
    genome_path: &Path,
    out: &Path,
    window: u64,
    stride: u64,
    score_threshold: f64,
) -> Result<(), CliError> {
    if window == 0 || stride == 0 {
        return Err(usage("window and stride must be positive"));
    }
    let labels = files::read_labels(labels_path).map_err(usage)?;
    if labels.is_empty() {
        return Err(usage("label list is empty"));
    }
    let peaks = files::read_peaks(peaks_path, &labels).map_err(usage)?;
    let genome = files::read_genome(genome_path).map_err(usage)?;

    let chrom_lengths: BTreeMap<String, u64> = genome
        .iter()
        .map(|(c, s)| (c.clone(), s.len() as u64))
        .collect();
    let windows = build_windows(&chrom_lengths, window, stride);
    let (labeled, skipped) = label_windows(&windows, &peaks, labels.len(), window, score_threshold);
    if skipped > 0 {
        eprintln!("warning: {skipped} peaks on chromosomes absent from the genome file");
    }
    if labeled.is_empty() {
        eprintln!("warning: no window passed the labeling rule; dataset is empty");
    }
    let records = attach_sequences(&labeled, &genome, window).map_err(runtime)?;
    let split = split_by_chromosome(records, &DEFAULT_VALID_CHROMS, &DEFAULT_TEST_CHROMS);

    write_dataset_dir(out, &labels, &split)?;
    std::fs::write(out.join("stats.tsv"), stats_table(&split, labels.len())).map_err(runtime)?;
    let echo = BuildEcho {
        peaks: peaks_path.display().to_string(),
        labels: labels_path.display().to_string(),
        genome: genome_path.display().to_string(),
        window,
        stride,
        score_threshold,
        valid_chromosomes: &DEFAULT_VALID_CHROMS,
        test_chromosomes: &DEFAULT_TEST_CHROMS,
    };
    let echo_text = toml::to_string_pretty(&echo).map_err(runtime)?;
    std::fs::write(out.join("effective_config.toml"), echo_text).map_err(runtime)?;

    println!(
        "build: {} windows labeled, {} train / {} valid / {} test -> {}",
        split.train.len() + split.valid.len() + split.test.len(),
        split.train.len(),
        split.valid.len(),
        split.test.len(),
        out.display()
    );
    Ok(())
}
