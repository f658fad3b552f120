use std::fs;
use std::path::Path;

use datakit::files::read_ground_truth;
use evalkit::{cluster_prototypes, pair_recovery_score};
use pmn_core::load_checkpoint;
use serde::Serialize;

use crate::{runtime, usage, CliError};

#[derive(Serialize)]
struct ClusterEcho {
    checkpoint: String,
    k: usize,
    groups: Option<String>,
}

pub fn run(checkpoint: &Path, k: usize, groups: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let ckpt = load_checkpoint(checkpoint).map_err(usage)?;
    let bank = ckpt
        .params
        .prototypes
        .as_ref()
        .ok_or_else(|| usage("this checkpoint's variant has no prototype bank"))?;

    let dendrogram = cluster_prototypes(bank).map_err(usage)?;
    let cut = dendrogram.cut(k).map_err(usage)?;

    fs::create_dir_all(out).map_err(runtime)?;
    fs::write(out.join("dendrogram.tsv"), dendrogram.to_table()).map_err(runtime)?;
    let mut cut_table = String::from("label\tcluster\n");
    for (label, cluster) in cut.iter().enumerate() {
        cut_table.push_str(&format!("{label}\t{cluster}\n"));
    }
    fs::write(out.join(format!("cut_k{k}.tsv")), cut_table).map_err(runtime)?;

    let mut recovery_line = String::new();
    if let Some(groups_path) = groups {
        let (planted, _) = read_ground_truth(groups_path).map_err(usage)?;
        let score = pair_recovery_score(&cut, &planted);
        let clusters_used = cut.iter().max().map(|m| m + 1).unwrap_or(0);
        recovery_line = format!("pair_recovery\t{score:.4}\nclusters_used\t{clusters_used}\n");
        fs::write(out.join("recovery.tsv"), &recovery_line).map_err(runtime)?;
    }

    let echo = ClusterEcho {
        checkpoint: checkpoint.display().to_string(),
        k,
        groups: groups.map(|p| p.display().to_string()),
    };
    fs::write(
        out.join("effective_config.toml"),
        toml::to_string_pretty(&echo).map_err(runtime)?,
    )
    .map_err(runtime)?;

    println!(
        "cluster: {} merges, cut to {k} clusters{}",
        dendrogram.merges.len(),
        if recovery_line.is_empty() {
            String::new()
        } else {
            format!(", {}", recovery_line.replace('\n', " ").replace('\t', "="))
        }
    );
    Ok(())
}
