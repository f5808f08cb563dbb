//! Small index structures used by the move kernels.

use rand::Rng;

/// Fenwick tree over non-negative integer weights, supporting point updates
/// and sampling an index proportionally to its weight.
#[derive(Clone, Debug)]
pub struct Fenwick {
    tree: Vec<u64>,
    weights: Vec<u64>,
    total: u64,
    top_bit: usize,
}

impl Fenwick {
    pub fn new(weights: &[u64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0u64; n + 1];
        for (i, &w) in weights.iter().enumerate() {
            tree[i + 1] += w;
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i + 1];
            }
        }
        let top_bit = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        Fenwick {
            tree,
            weights: weights.to_vec(),
            total: weights.iter().sum(),
            top_bit,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn weight(&self, idx: usize) -> u64 {
        self.weights[idx]
    }

    pub fn set(&mut self, idx: usize, w: u64) {
        let old = self.weights[idx];
        if old == w {
            return;
        }
        self.weights[idx] = w;
        self.total = self.total - old + w;
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_sub(old).wrapping_add(w);
            i += i & i.wrapping_neg();
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `r`; requires `r < total`.
    pub fn find(&self, mut r: u64) -> usize {
        debug_assert!(r < self.total);
        let mut pos = 0;
        let mut step = self.top_bit;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= r {
                pos = next;
                r -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }

    /// Index drawn with probability `weight / total`; `None` when the total is zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        if self.total == 0 {
            return None;
        }
        Some(self.find(rng.random_range(0..self.total)))
    }
}

/// Subset of `0..capacity` with O(1) insert, remove, membership and uniform
/// sampling.
#[derive(Clone, Debug)]
pub struct IndexedSet {
    items: Vec<usize>,
    pos: Vec<usize>,
}

const ABSENT: usize = usize::MAX;

impl IndexedSet {
    pub fn new(capacity: usize) -> Self {
        IndexedSet {
            items: Vec::new(),
            pos: vec![ABSENT; capacity],
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.pos[x] != ABSENT
    }

    pub fn insert(&mut self, x: usize) -> bool {
        if self.pos[x] != ABSENT {
            return false;
        }
        self.pos[x] = self.items.len();
        self.items.push(x);
        true
    }

    pub fn remove(&mut self, x: usize) -> bool {
        let p = self.pos[x];
        if p == ABSENT {
            return false;
        }
        let last = self.items.pop().expect("non-empty");
        if last != x {
            self.items[p] = last;
            self.pos[last] = p;
        }
        self.pos[x] = ABSENT;
        true
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        if self.items.is_empty() {
            None
        } else {
            Some(self.items[rng.random_range(0..self.items.len())])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn fenwick_find_matches_linear_scan() {
        let w = vec![3, 0, 5, 1, 0, 0, 7, 2, 4];
        let mut f = Fenwick::new(&w);
        for r in 0..f.total() {
            let mut acc = 0;
            let expected = w.iter().position(|&x| {
                acc += x;
                acc > r
            });
            assert_eq!(Some(f.find(r)), expected);
        }
        f.set(2, 0);
        f.set(4, 6);
        assert_eq!(f.total(), 3 + 1 + 6 + 7 + 2 + 4);
        assert_eq!(f.find(3), 3);
        assert_eq!(f.find(4), 4);
        assert_eq!(f.find(10), 6);
    }

    #[test]
    fn fenwick_sampling_frequencies() {
        let f = Fenwick::new(&[1, 2, 0, 7]);
        let mut rng = rng_from_seed(1);
        let mut counts = [0usize; 4];
        for _ in 0..100_000 {
            counts[f.sample(&mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[2], 0);
        assert!((counts[3] as f64 / 1e5 - 0.7).abs() < 0.01);
        assert!(Fenwick::new(&[0, 0]).sample(&mut rng).is_none());
    }

    #[test]
    fn indexed_set_ops() {
        let mut s = IndexedSet::new(10);
        assert!(s.insert(3));
        assert!(!s.insert(3));
        s.insert(7);
        s.insert(1);
        assert!(s.remove(3));
        assert!(!s.remove(3));
        assert!(s.contains(7) && s.contains(1) && !s.contains(3));
        let mut items = s.items().to_vec();
        items.sort();
        assert_eq!(items, vec![1, 7]);
    }
}
