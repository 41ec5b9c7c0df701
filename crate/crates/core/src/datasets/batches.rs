use rand::seq::SliceRandom;
use rand::Rng;

use super::{DataError, LabeledBatch};

/// One shuffled pass over `source` in batches of `batch_size`; a final
/// partial batch is dropped.
pub fn minibatches<'a, R: Rng + ?Sized>(
    source: &'a LabeledBatch,
    batch_size: usize,
    rng: &mut R,
) -> Result<Minibatches<'a>, DataError> {
    if batch_size == 0 || batch_size > source.len() {
        return Err(DataError::BatchSize {
            batch_size,
            len: source.len(),
        });
    }
    let mut order: Vec<usize> = (0..source.len()).collect();
    order.shuffle(rng);
    Ok(Minibatches {
        source,
        order,
        batch_size,
        pos: 0,
    })
}

#[derive(Debug)]
pub struct Minibatches<'a> {
    source: &'a LabeledBatch,
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
}

impl Minibatches<'_> {
    pub fn batches_per_epoch(&self) -> usize {
        self.order.len() / self.batch_size
    }
}

impl Iterator for Minibatches<'_> {
    type Item = LabeledBatch;

    fn next(&mut self) -> Option<LabeledBatch> {
        let end = self.pos + self.batch_size;
        if end > self.order.len() {
            return None;
        }
        let rows = &self.order[self.pos..end];
        self.pos = end;
        Some(self.source.select(rows).expect("indices come from the source"))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.order.len() - self.pos) / self.batch_size;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Minibatches<'_> {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset(n: usize) -> LabeledBatch {
        let features = Tensor::new(vec![n, 1], (0..n).map(|i| i as f64).collect()).unwrap();
        LabeledBatch::new(features, (0..n).map(|i| i % 3).collect(), 3).unwrap()
    }

    #[test]
    fn floor_division_and_partition() {
        let d = dataset(100);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let batches: Vec<_> = minibatches(&d, 32, &mut rng).unwrap().collect();
        assert_eq!(batches.len(), 3);
        let mut seen: Vec<usize> = batches.iter().flat_map(|b| b.features.data().iter().map(|&v| v as usize)).collect();
        assert_eq!(seen.len(), 96);
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 96);
        for b in &batches {
            for (i, &l) in b.labels.iter().enumerate() {
                assert_eq!(l, b.features.data()[i] as usize % 3);
            }
        }
    }

    #[test]
    fn same_seed_same_order() {
        let d = dataset(50);
        let a: Vec<_> = minibatches(&d, 7, &mut ChaCha8Rng::seed_from_u64(3)).unwrap().collect();
        let b: Vec<_> = minibatches(&d, 7, &mut ChaCha8Rng::seed_from_u64(3)).unwrap().collect();
        let c: Vec<_> = minibatches(&d, 7, &mut ChaCha8Rng::seed_from_u64(4)).unwrap().collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_or_oversized_batch_rejected() {
        let d = dataset(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(minibatches(&d, 0, &mut rng), Err(DataError::BatchSize { .. })));
        assert!(matches!(minibatches(&d, 11, &mut rng), Err(DataError::BatchSize { .. })));
    }
}
