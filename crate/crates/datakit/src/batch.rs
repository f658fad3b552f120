use autodiff::rng::shuffle;
use autodiff::{Element, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encode::one_hot_encode;
use crate::error::DataError;
use crate::records::SequenceRecord;

/// One batch: encoded inputs, label vectors, and the source record indices.
pub struct Batch<F: Element> {
    pub xs: Vec<Tensor<F>>,
    pub ys: Vec<Vec<F>>,
    pub indices: Vec<usize>,
}

/// Deterministic shuffled batches over a record list. The permutation is a
/// pure function of `(seed, epoch)`; encoding happens lazily per batch and
/// the final partial batch is emitted.
pub struct BatchIter<'a, F: Element> {
    records: &'a [SequenceRecord],
    order: Vec<usize>,
    batch_size: usize,
    at: usize,
    _marker: std::marker::PhantomData<F>,
}

pub fn batch_iter<F: Element>(
    records: &[SequenceRecord],
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> BatchIter<'_, F> {
    assert!(batch_size >= 1, "batch size must be at least 1");
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    shuffle(&mut rng, &mut order);
    BatchIter {
        records,
        order,
        batch_size,
        at: 0,
        _marker: std::marker::PhantomData,
    }
}

impl<F: Element> Iterator for BatchIter<'_, F> {
    type Item = Result<Batch<F>, DataError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.at >= self.order.len() {
            return None;
        }
        let end = (self.at + self.batch_size).min(self.order.len());
        let indices: Vec<usize> = self.order[self.at..end].to_vec();
        self.at = end;
        let mut xs = Vec::with_capacity(indices.len());
        let mut ys = Vec::with_capacity(indices.len());
        for i in &indices {
            let record = &self.records[*i];
            match one_hot_encode::<F>(&record.sequence) {
                Ok(x) => xs.push(x),
                Err(e) => return Some(Err(e)),
            }
            ys.push(record.label_floats());
        }
        Some(Ok(Batch { xs, ys, indices }))
    }
}
