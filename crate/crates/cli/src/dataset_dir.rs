//! Dataset directory layout shared by the commands: `labels.txt` plus
//! `train.tsv`, `valid.tsv`, and `test.tsv`.

use std::fs;
use std::path::Path;

use datakit::{files, DatasetSplit, SequenceRecord, SplitName};

use crate::{usage, CliError};

pub struct DatasetDir {
    pub labels: Vec<String>,
    pub split: DatasetSplit,
}

impl DatasetDir {
    pub fn part(&self, name: &str) -> Result<&[SequenceRecord], CliError> {
        let name = match name {
            "train" => SplitName::Train,
            "valid" => SplitName::Valid,
            "test" => SplitName::Test,
            other => return Err(usage(format!("unknown split {other:?}"))),
        };
        Ok(self.split.part(name))
    }
}

pub fn read_dataset_dir(dir: &Path) -> Result<DatasetDir, CliError> {
    let labels = files::read_labels(&dir.join("labels.txt")).map_err(usage)?;
    if labels.is_empty() {
        return Err(usage(format!("{}: labels.txt is empty", dir.display())));
    }
    let mut split = DatasetSplit::default();
    for (file, slot) in [
        ("train.tsv", &mut split.train),
        ("valid.tsv", &mut split.valid),
        ("test.tsv", &mut split.test),
    ] {
        *slot = files::read_dataset(&dir.join(file), labels.len()).map_err(usage)?;
    }
    Ok(DatasetDir { labels, split })
}

pub fn write_dataset_dir(dir: &Path, labels: &[String], split: &DatasetSplit) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(crate::runtime)?;
    files::write_labels(&dir.join("labels.txt"), labels).map_err(crate::runtime)?;
    files::write_dataset(&dir.join("train.tsv"), &split.train).map_err(crate::runtime)?;
    files::write_dataset(&dir.join("valid.tsv"), &split.valid).map_err(crate::runtime)?;
    files::write_dataset(&dir.join("test.tsv"), &split.test).map_err(crate::runtime)?;
    Ok(())
}
