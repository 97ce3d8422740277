//! Uniform hash of the d dataset rows into s' buckets.
//!
//! s' is typically much larger than d, so the inverse lists are stored
//! sparsely: only nonempty buckets exist, and the samplers give empty
//! buckets probability zero by never enumerating them.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{ensure_contract, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct BucketHash {
    pub bucket_count: usize,
    assignment: Vec<usize>,
    nonempty: Vec<usize>,
    members: BTreeMap<usize, Vec<usize>>,
}

impl BucketHash {
    pub fn build(d: usize, bucket_count: usize, stream: &RngStream) -> Result<Self> {
        ensure_contract!(d >= 1, "need at least one row to hash");
        ensure_contract!(bucket_count >= 1, "bucket count must be positive");
        let mut rng = stream.rng();
        let assignment: Vec<usize> = (0..d).map(|_| rng.gen_range(0..bucket_count)).collect();
        let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &r) in assignment.iter().enumerate() {
            members.entry(r).or_default().push(i);
        }
        let nonempty = members.keys().copied().collect();
        Ok(BucketHash { bucket_count, assignment, nonempty, members })
    }

    pub fn assignment(&self, i: usize) -> usize {
        self.assignment[i]
    }

    /// Nonempty bucket ids in ascending order.
    pub fn nonempty(&self) -> &[usize] {
        &self.nonempty
    }

    pub fn members(&self, bucket: usize) -> &[usize] {
        self.members.get(&bucket).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_row_lands_in_exactly_one_list() {
        let hash = BucketHash::build(17, 100, &RngStream::from_seed(30)).unwrap();
        let mut seen = vec![0usize; 17];
        for &r in hash.nonempty() {
            for &i in hash.members(r) {
                seen[i] += 1;
                assert_eq!(hash.assignment(i), r);
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        let total: usize = hash.nonempty().iter().map(|&r| hash.members(r).len()).sum();
        assert_eq!(total, 17);
    }

    #[test]
    fn single_bucket_takes_everything() {
        let hash = BucketHash::build(5, 1, &RngStream::from_seed(31)).unwrap();
        assert_eq!(hash.nonempty(), &[0]);
        assert_eq!(hash.members(0), &[0, 1, 2, 3, 4]);
        assert!(hash.members(7).is_empty());
    }

    #[test]
    fn deterministic_and_roughly_uniform() {
        let a = BucketHash::build(64, 8, &RngStream::from_seed(32)).unwrap();
        let b = BucketHash::build(64, 8, &RngStream::from_seed(32)).unwrap();
        assert_eq!(a.assignment, b.assignment);

        // 4096 draws into 8 buckets: each bucket expects 512 ± a few σ
        let wide = BucketHash::build(4096, 8, &RngStream::from_seed(33)).unwrap();
        for r in 0..8 {
            let count = wide.members(r).len() as f64;
            assert!((count - 512.0).abs() < 5.0 * (512.0f64 * (1.0 - 1.0 / 8.0)).sqrt());
        }
    }

    #[test]
    fn rejects_empty_domain() {
        assert!(BucketHash::build(0, 4, &RngStream::from_seed(34)).is_err());
        assert!(BucketHash::build(4, 0, &RngStream::from_seed(34)).is_err());
    }
}
