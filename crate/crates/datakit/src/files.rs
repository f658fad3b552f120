//! On-disk formats: label lists, peak tables, dataset tables, plain genome
//! files, the synthetic spec, and planted-group ground truth. Everything is
//! UTF-8 and tab-separated; `#` starts a comment line.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::DataError;
use crate::records::{PeakRecord, SequenceRecord};
use crate::synth::SynthSpec;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        file: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads the label list: one factor name per line, line order is the index.
pub fn read_labels(path: &Path) -> Result<Vec<String>, DataError> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

pub fn write_labels(path: &Path, labels: &[String]) -> Result<(), DataError> {
    fs::write(path, labels.join("\n") + "\n")?;
    Ok(())
}

/// Reads a peak table: `tf_name  chrom  start  end  score`, resolving factor
/// names through the label list.
pub fn read_peaks(path: &Path, labels: &[String]) -> Result<Vec<PeakRecord>, DataError> {
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 5 {
            return Err(parse_err(path, line_number, format!("expected 5 columns, found {}", fields.len())));
        }
        let tf_index = *index
            .get(fields[0])
            .ok_or_else(|| parse_err(path, line_number, format!("unknown factor name {:?}", fields[0])))?;
        let start: u64 = fields[2]
            .parse()
            .map_err(|_| parse_err(path, line_number, format!("bad start {:?}", fields[2])))?;
        let end: u64 = fields[3]
            .parse()
            .map_err(|_| parse_err(path, line_number, format!("bad end {:?}", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| parse_err(path, line_number, format!("bad score {:?}", fields[4])))?;
        let peak = PeakRecord {
            tf_index,
            chrom: fields[1].to_string(),
            start,
            end,
            score,
        };
        peak.validate()
            .map_err(|e| parse_err(path, line_number, e.to_string()))?;
        out.push(peak);
    }
    Ok(out)
}

/// Reads a dataset table: `chrom  start  sequence  positive_indices`.
pub fn read_dataset(path: &Path, num_labels: usize) -> Result<Vec<SequenceRecord>, DataError> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 4 {
            return Err(parse_err(path, line_number, format!("expected 4 columns, found {}", fields.len())));
        }
        let start: u64 = fields[1]
            .parse()
            .map_err(|_| parse_err(path, line_number, format!("bad start {:?}", fields[1])))?;
        let mut labels = vec![false; num_labels];
        for idx in fields[3].split(',').filter(|s| !s.is_empty()) {
            let i: usize = idx
                .parse()
                .map_err(|_| parse_err(path, line_number, format!("bad label index {idx:?}")))?;
            if i >= num_labels {
                return Err(parse_err(path, line_number, format!("label index {i} out of range {num_labels}")));
            }
            labels[i] = true;
        }
        out.push(SequenceRecord {
            chrom: fields[0].to_string(),
            start,
            sequence: fields[2].to_string(),
            labels,
        });
    }
    Ok(out)
}

pub fn write_dataset(path: &Path, records: &[SequenceRecord]) -> Result<(), DataError> {
    let mut text = String::from("#chrom\tstart\tsequence\tpositive_indices\n");
    for r in records {
        let positives: Vec<String> = r.positives().iter().map(|i| i.to_string()).collect();
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.chrom,
            r.start,
            r.sequence,
            positives.join(",")
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Reads a plain genome file: one `chrom<TAB>sequence` line per chromosome.
pub fn read_genome(path: &Path) -> Result<BTreeMap<String, String>, DataError> {
    let text = fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (chrom, sequence) = trimmed
            .split_once('\t')
            .ok_or_else(|| parse_err(path, line_number, "expected chrom<TAB>sequence"))?;
        if out.insert(chrom.to_string(), sequence.to_string()).is_some() {
            return Err(parse_err(path, line_number, format!("duplicate chromosome {chrom:?}")));
        }
    }
    Ok(out)
}

/// Reads the synthetic dataset spec from TOML; unknown keys are rejected.
pub fn read_synth_spec(path: &Path) -> Result<SynthSpec, DataError> {
    let text = fs::read_to_string(path)?;
    let spec: SynthSpec = toml::from_str(&text).map_err(|e| DataError::Spec(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn write_synth_spec(path: &Path, spec: &SynthSpec) -> Result<(), DataError> {
    let text = toml::to_string_pretty(spec).map_err(|e| DataError::Spec(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

/// Writes planted ground truth: one `group` line per co-binding group and one
/// `conditional` line per anchored pair.
pub fn write_ground_truth(path: &Path, spec: &SynthSpec) -> Result<(), DataError> {
    let mut text = String::new();
    for g in &spec.groups {
        let members: Vec<String> = g.members.iter().map(|m| m.to_string()).collect();
        text.push_str(&format!("group\t{}\n", members.join(",")));
    }
    for c in &spec.conditional {
        text.push_str(&format!("conditional\t{},{}\n", c.anchor, c.dependent));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Reads planted ground truth back: `(groups, conditional pairs)`.
#[allow(clippy::type_complexity)]
pub fn read_ground_truth(path: &Path) -> Result<(Vec<Vec<usize>>, Vec<(usize, usize)>), DataError> {
    let text = fs::read_to_string(path)?;
    let mut groups = Vec::new();
    let mut conditional = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (kind, rest) = trimmed
            .split_once('\t')
            .ok_or_else(|| parse_err(path, line_number, "expected kind<TAB>members"))?;
        let members: Vec<usize> = rest
            .split(',')
            .map(|s| s.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(path, line_number, "bad member list"))?;
        match kind {
            "group" => groups.push(members),
            "conditional" => {
                if members.len() != 2 {
                    return Err(parse_err(path, line_number, "conditional lines take exactly two labels"));
                }
                conditional.push((members[0], members[1]));
            }
            other => return Err(parse_err(path, line_number, format!("unknown kind {other:?}"))),
        }
    }
    Ok((groups, conditional))
}
