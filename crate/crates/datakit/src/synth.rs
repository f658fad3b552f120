use std::collections::HashSet;

use autodiff::rng::{uniform_f64, uniform_index};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::records::{DatasetSplit, SequenceRecord};

/// A set of factors that activate jointly with one probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoBindingGroup {
    pub members: Vec<usize>,
    pub joint_prob: f64,
}

/// `dependent` is labeled positive only when both its own motif and the
/// anchor's motif are planted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalPair {
    pub anchor: usize,
    pub dependent: usize,
    /// Probability of planting the dependent motif when the anchor is active.
    pub prob_given_anchor: f64,
}

/// Blueprint for a synthetic planted-motif dataset with explicit co-binding
/// structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub seed: u64,
    pub num_labels: usize,
    pub seq_len: usize,
    pub motif_len: usize,
    /// Per-position probability of the consensus base; the remaining mass
    /// splits evenly over the other three bases.
    pub consensus_base_prob: f64,
    /// Independent activation probability for factors outside any group and
    /// for conditional anchors.
    pub activation_prob: f64,
    /// Fraction of anchor-inactive samples in which the dependent motif is
    /// planted anyway, with the dependent still labeled negative.
    pub distractor_fraction: f64,
    /// Explicit consensus strings (one per factor); derived from the seed
    /// when absent.
    pub motifs: Option<Vec<String>>,
    pub groups: Vec<CoBindingGroup>,
    pub conditional: Vec<ConditionalPair>,
    pub train_count: usize,
    pub valid_count: usize,
    pub test_count: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 0,
            num_labels: 8,
            seq_len: 100,
            motif_len: 8,
            consensus_base_prob: 0.85,
            activation_prob: 0.25,
            distractor_fraction: 0.1,
            motifs: None,
            groups: Vec::new(),
            conditional: Vec::new(),
            train_count: 1000,
            valid_count: 200,
            test_count: 200,
        }
    }
}

const BASES: [char; 4] = ['A', 'C', 'G', 'T'];

impl SynthSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.num_labels == 0 {
            return Err(DataError::Spec("num_labels must be positive".into()));
        }
        if self.motif_len == 0 || self.motif_len > self.seq_len {
            return Err(DataError::Spec(format!(
                "motif length {} does not fit sequence length {}",
                self.motif_len, self.seq_len
            )));
        }
        // worst case every factor plants a motif in the same sample
        if self.num_labels * self.motif_len > self.seq_len {
            return Err(DataError::Spec(format!(
                "{} motifs of length {} cannot all fit in {} positions without overlap",
                self.num_labels, self.motif_len, self.seq_len
            )));
        }
        for p in [self.consensus_base_prob, self.activation_prob, self.distractor_fraction] {
            if !(0.0..=1.0).contains(&p) {
                return Err(DataError::Spec(format!("probability {p} outside [0, 1]")));
            }
        }
        let mut seen = HashSet::new();
        for group in &self.groups {
            if !(0.0..=1.0).contains(&group.joint_prob) {
                return Err(DataError::Spec("group joint_prob outside [0, 1]".into()));
            }
            if group.members.len() < 2 {
                return Err(DataError::Spec("a co-binding group needs at least two members".into()));
            }
            for m in &group.members {
                if *m >= self.num_labels {
                    return Err(DataError::Spec(format!("group member {m} out of range")));
                }
                if !seen.insert(*m) {
                    return Err(DataError::Spec(format!("label {m} appears in more than one role")));
                }
            }
        }
        for pair in &self.conditional {
            if !(0.0..=1.0).contains(&pair.prob_given_anchor) {
                return Err(DataError::Spec("prob_given_anchor outside [0, 1]".into()));
            }
            for m in [pair.anchor, pair.dependent] {
                if m >= self.num_labels {
                    return Err(DataError::Spec(format!("conditional label {m} out of range")));
                }
                if !seen.insert(m) {
                    return Err(DataError::Spec(format!("label {m} appears in more than one role")));
                }
            }
        }
        if let Some(motifs) = &self.motifs {
            if motifs.len() != self.num_labels {
                return Err(DataError::Spec(format!(
                    "{} motifs for {} labels",
                    motifs.len(),
                    self.num_labels
                )));
            }
            for m in motifs {
                if m.len() != self.motif_len {
                    return Err(DataError::Spec(format!("motif {m} is not {} long", self.motif_len)));
                }
                if !m.chars().all(|c| BASES.contains(&c.to_ascii_uppercase())) {
                    return Err(DataError::Spec(format!("motif {m} has non-ACGT characters")));
                }
            }
        }
        Ok(())
    }

    /// Labels that are conditional dependents (the co-binding learners).
    pub fn dependent_labels(&self) -> Vec<usize> {
        self.conditional.iter().map(|p| p.dependent).collect()
    }

    /// Labels whose activation does not depend on another factor.
    pub fn unconditional_labels(&self) -> Vec<usize> {
        let dependents: HashSet<usize> = self.dependent_labels().into_iter().collect();
        (0..self.num_labels).filter(|l| !dependents.contains(l)).collect()
    }

    /// The consensus strings actually used: explicit ones, or seed-derived
    /// random motifs with pairwise Hamming distance at least 3.
    pub fn resolved_motifs(&self) -> Result<Vec<String>, DataError> {
        if let Some(m) = &self.motifs {
            return Ok(m.iter().map(|s| s.to_ascii_uppercase()).collect());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x4D4F5449); // "MOTI"
        let mut motifs: Vec<String> = Vec::with_capacity(self.num_labels);
        let mut attempts = 0;
        while motifs.len() < self.num_labels {
            attempts += 1;
            if attempts > 10_000 {
                return Err(DataError::Generation(
                    "could not derive sufficiently distinct motifs".into(),
                ));
            }
            let candidate: String = (0..self.motif_len)
                .map(|_| BASES[uniform_index(&mut rng, 4)])
                .collect();
            let distinct = motifs.iter().all(|m| hamming(m, &candidate) >= 3);
            if distinct {
                motifs.push(candidate);
            }
        }
        Ok(motifs)
    }
}

fn hamming(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).filter(|(x, y)| x != y).count()
}

/// Activation and planting decisions for one sample.
struct SampleDraw {
    active: Vec<bool>,
    planted: Vec<bool>,
}

fn draw_sample(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> SampleDraw {
    let l = spec.num_labels;
    let mut active = vec![false; l];
    let mut planted = vec![false; l];

    for group in &spec.groups {
        if uniform_f64(rng) < group.joint_prob {
            for m in &group.members {
                active[*m] = true;
                planted[*m] = true;
            }
        }
    }

    let grouped: HashSet<usize> = spec.groups.iter().flat_map(|g| g.members.iter().copied()).collect();
    let dependents: HashSet<usize> = spec.conditional.iter().map(|p| p.dependent).collect();
    for label in 0..l {
        if grouped.contains(&label) || dependents.contains(&label) {
            continue;
        }
        if uniform_f64(rng) < spec.activation_prob {
            active[label] = true;
            planted[label] = true;
        }
    }

    for pair in &spec.conditional {
        if active[pair.anchor] {
            if uniform_f64(rng) < pair.prob_given_anchor {
                // both motifs present: the dependent is genuinely positive
                planted[pair.dependent] = true;
                active[pair.dependent] = true;
            }
        } else if uniform_f64(rng) < spec.distractor_fraction {
            // distractor: motif present, label stays negative
            planted[pair.dependent] = true;
        }
    }

    SampleDraw { active, planted }
}

/// Samples a motif instance from the consensus-plus-noise position model.
fn sample_motif(consensus: &str, consensus_prob: f64, rng: &mut ChaCha8Rng) -> String {
    consensus
        .chars()
        .map(|c| {
            if uniform_f64(rng) < consensus_prob {
                c
            } else {
                // one of the three other bases, evenly
                let others: Vec<char> = BASES.iter().copied().filter(|b| *b != c).collect();
                others[uniform_index(rng, 3)]
            }
        })
        .collect()
}

/// Writes all motif instances at non-overlapping random positions.
///
/// Placement samples reduced coordinates: `k` sorted draws from the slack
/// space, offset by one motif length each, give `k` disjoint slots in one
/// shot. Never fails while the total motif length fits the sequence.
fn plant_all(
    sequence: &mut [u8],
    instances: &[String],
    rng: &mut ChaCha8Rng,
) -> Result<(), DataError> {
    let k = instances.len();
    if k == 0 {
        return Ok(());
    }
    let m = instances[0].len();
    let total = k * m;
    if total > sequence.len() {
        return Err(DataError::Generation(format!(
            "{k} motifs of length {m} cannot fit in {} positions",
            sequence.len()
        )));
    }
    let slack = sequence.len() - total;
    let mut cuts: Vec<usize> = (0..k).map(|_| uniform_index(rng, slack + 1)).collect();
    cuts.sort_unstable();
    // spread which motif lands in which slot
    let mut slot_of: Vec<usize> = (0..k).collect();
    crate::synth::shuffle_usize(rng, &mut slot_of);
    for (j, instance) in instances.iter().enumerate() {
        let slot = slot_of[j];
        let at = cuts[slot] + slot * m;
        sequence[at..at + m].copy_from_slice(instance.as_bytes());
    }
    Ok(())
}

fn shuffle_usize(rng: &mut ChaCha8Rng, items: &mut [usize]) {
    for i in (1..items.len()).rev() {
        let j = uniform_index(rng, i + 1);
        items.swap(i, j);
    }
}

fn generate_part(
    spec: &SynthSpec,
    motifs: &[String],
    chrom: &str,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SequenceRecord>, DataError> {
    let mut out = Vec::with_capacity(count);
    let mut emitted = 0u64;
    let mut guard = 0usize;
    let attempts_cap = count.saturating_mul(10_000).max(10_000);
    while out.len() < count {
        guard += 1;
        if guard > attempts_cap {
            return Err(DataError::Generation(format!(
                "activation probabilities too low: {} of {count} samples after {guard} draws",
                out.len()
            )));
        }
        let draw = draw_sample(spec, rng);
        // windows binding nothing are discarded
        if draw.active.iter().all(|a| !a) {
            continue;
        }
        let mut sequence: Vec<u8> = (0..spec.seq_len)
            .map(|_| BASES[uniform_index(rng, 4)] as u8)
            .collect();
        let instances: Vec<String> = (0..spec.num_labels)
            .filter(|label| draw.planted[*label])
            .map(|label| sample_motif(&motifs[label], spec.consensus_base_prob, rng))
            .collect();
        plant_all(&mut sequence, &instances, rng)?;
        out.push(SequenceRecord {
            chrom: chrom.to_string(),
            start: emitted,
            sequence: String::from_utf8(sequence).expect("ACGT bytes"),
            labels: draw.active,
        });
        emitted += 1;
    }
    Ok(out)
}

/// Generates the full dataset. A pure function of the spec (including its
/// seed): the same spec always yields byte-identical records.
pub fn synth_generate(spec: &SynthSpec) -> Result<DatasetSplit, DataError> {
    spec.validate()?;
    let motifs = spec.resolved_motifs()?;
    let mut split = DatasetSplit::default();
    for (part, chrom, count, stream) in [
        (0usize, "synth-train", spec.train_count, 1u64),
        (1, "synth-valid", spec.valid_count, 2),
        (2, "synth-test", spec.test_count, 3),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(stream);
        let records = generate_part(spec, &motifs, chrom, count, &mut rng)?;
        split.assignment.insert(
            chrom.to_string(),
            match part {
                0 => "train",
                1 => "valid",
                _ => "test",
            },
        );
        match part {
            0 => split.train = records,
            1 => split.valid = records,
            _ => split.test = records,
        }
    }
    Ok(split)
}
