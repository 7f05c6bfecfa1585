//! Enumeration and sampling of `l`-subsets of `{0, …, k−1}`.

use std::collections::HashSet;

use rand::Rng;

/// `C(n, k)`, or `None` if it does not fit into a `u128`.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc · (n − i) is divisible by (i + 1) at every step.
        let factor = (n - i) as u128;
        let g = gcd(acc, (i + 1) as u128);
        let reduced = acc / g;
        let divisor = (i + 1) as u128 / g;
        acc = reduced.checked_mul(factor / divisor)?;
    }
    Some(acc)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Revolving-door (Gray code) enumeration of the `t`-subsets of
/// `{0, …, n−1}`: consecutive subsets differ by exchanging one element.
///
/// This is Knuth's Algorithm R (TAOCP 7.2.1.3).
#[derive(Debug, Clone)]
pub struct RevolvingDoor {
    t: usize,
    // c[1..=t] ascending, c[t+1] = n and c[t+2] = n + 1 are sentinels.
    c: Vec<usize>,
    done: bool,
}

impl RevolvingDoor {
    pub fn new(n: usize, t: usize) -> Self {
        assert!(t >= 1 && t <= n, "need 1 <= t <= n, got t = {t}, n = {n}");
        let mut c = vec![0; t + 3];
        for (j, slot) in c.iter_mut().enumerate().take(t + 1).skip(1) {
            *slot = j - 1;
        }
        c[t + 1] = n;
        c[t + 2] = n + 1;
        Self { t, c, done: false }
    }

    /// Current subset in ascending order.
    pub fn current(&self) -> &[usize] {
        &self.c[1..=self.t]
    }

    /// Moves to the next subset and returns `(removed, added)`, or `None`
    /// once every subset has been visited.
    pub fn advance(&mut self) -> Option<(usize, usize)> {
        if self.done {
            return None;
        }
        let t = self.t;
        let c = &mut self.c;
        let mut j = 2;
        let mut try_decrease = t % 2 == 1;
        if t % 2 == 1 {
            if c[1] + 1 < c[2] {
                c[1] += 1;
                return Some((c[1] - 1, c[1]));
            }
        } else if c[1] > 0 {
            c[1] -= 1;
            return Some((c[1] + 1, c[1]));
        }
        loop {
            if j > t {
                self.done = true;
                return None;
            }
            if try_decrease {
                if c[j] >= j {
                    let removed = c[j];
                    c[j] = c[j - 1];
                    c[j - 1] = j - 2;
                    return Some((removed, j - 2));
                }
                j += 1;
                try_decrease = false;
                continue;
            }
            if c[j] + 1 < c[j + 1] {
                let removed = c[j - 1];
                c[j - 1] = c[j];
                c[j] += 1;
                return Some((removed, c[j]));
            }
            j += 1;
            try_decrease = true;
        }
    }
}

/// Pascal triangle restricted to what unranking `l`-subsets of `k` needs.
#[derive(Debug, Clone)]
pub struct CombinationRanker {
    k: usize,
    l: usize,
    // table[m][r] = C(m, r) for m ≤ k, r ≤ l, saturating.
    table: Vec<Vec<u128>>,
}

impl CombinationRanker {
    pub fn new(k: usize, l: usize) -> Self {
        let mut table = vec![vec![0u128; l + 1]; k + 1];
        for m in 0..=k {
            table[m][0] = 1;
            for r in 1..=l.min(m) {
                table[m][r] = table[m - 1][r - 1].saturating_add(table[m - 1][r]);
            }
        }
        Self { k, l, table }
    }

    pub fn total(&self) -> u128 {
        self.table[self.k][self.l]
    }

    /// The `rank`-th subset in lexicographic order, written into `out`.
    pub fn unrank(&self, mut rank: u128, out: &mut Vec<usize>) {
        out.clear();
        let mut candidate = 0;
        for pos in 0..self.l {
            loop {
                let remaining = self.l - pos - 1;
                let with_candidate = self.table[self.k - candidate - 1][remaining];
                if rank < with_candidate {
                    out.push(candidate);
                    candidate += 1;
                    break;
                }
                rank -= with_candidate;
                candidate += 1;
            }
        }
    }
}

/// `count` distinct values from `0..total`, uniformly (Floyd's algorithm).
pub fn sample_distinct_ranks<R: Rng + ?Sized>(rng: &mut R, total: u128, count: usize) -> Vec<u128> {
    assert!(count as u128 <= total, "cannot draw {count} distinct values from {total}");
    let mut chosen = HashSet::with_capacity(count);
    let mut ordered = Vec::with_capacity(count);
    for j in (total - count as u128)..total {
        let t = rng.random_range(0..=j);
        let pick = if chosen.contains(&t) { j } else { t };
        chosen.insert(pick);
        ordered.push(pick);
    }
    ordered
}

/// `count` distinct `l`-subsets of `{0, …, k−1}` drawn uniformly without
/// replacement, each sorted ascending.
pub fn sample_distinct_subsets<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    l: usize,
    count: usize,
) -> Vec<Vec<usize>> {
    match binomial(k, l) {
        Some(total) => {
            assert!(count as u128 <= total, "budget exceeds number of subsets");
            let ranker = CombinationRanker::new(k, l);
            sample_distinct_ranks(rng, total, count)
                .into_iter()
                .map(|rank| {
                    let mut subset = Vec::with_capacity(l);
                    ranker.unrank(rank, &mut subset);
                    subset
                })
                .collect()
        }
        None => {
            // Astronomically many subsets: collisions are negligible, reject them.
            let mut seen = HashSet::with_capacity(count);
            let mut ordered = Vec::with_capacity(count);
            while ordered.len() < count {
                let mut subset = rand::seq::index::sample(rng, k, l).into_vec();
                subset.sort_unstable();
                if seen.insert(subset.clone()) {
                    ordered.push(subset);
                }
            }
            ordered
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;

    fn brute_binomial(n: usize, k: usize) -> u128 {
        if k > n {
            return 0;
        }
        let mut row = vec![1u128];
        for _ in 0..n {
            let mut next = vec![1u128; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        row[k]
    }

    #[test]
    fn binomial_matches_pascal() {
        for n in 0..40 {
            for k in 0..=n + 1 {
                assert_eq!(binomial(n, k), Some(brute_binomial(n, k)), "C({n},{k})");
            }
        }
        assert_eq!(binomial(200, 15), Some(14_629_416_353_818_682_834_880));
        assert!(binomial(1000, 500).is_none());
    }

    #[test]
    fn revolving_door_visits_every_subset_once() {
        for n in 1..=10 {
            for t in 1..=n {
                let mut gen = RevolvingDoor::new(n, t);
                let mut seen = HashSet::new();
                let mut prev: Vec<usize> = gen.current().to_vec();
                seen.insert(prev.clone());
                while let Some((out, inn)) = gen.advance() {
                    let cur = gen.current().to_vec();
                    assert!(cur.windows(2).all(|w| w[0] < w[1]), "{cur:?}");
                    assert!(cur.iter().all(|&x| x < n));
                    let mut expected: Vec<usize> =
                        prev.iter().copied().filter(|&x| x != out).collect();
                    assert_eq!(expected.len(), t - 1, "removed {out} not in {prev:?}");
                    assert!(!expected.contains(&inn));
                    expected.push(inn);
                    expected.sort_unstable();
                    assert_eq!(expected, cur);
                    assert!(seen.insert(cur.clone()), "duplicate {cur:?}");
                    prev = cur;
                }
                assert_eq!(seen.len() as u128, brute_binomial(n, t), "n={n} t={t}");
                assert!(gen.advance().is_none());
            }
        }
    }

    #[test]
    fn unranking_is_lexicographic() {
        let ranker = CombinationRanker::new(7, 3);
        assert_eq!(ranker.total(), 35);
        let mut all = Vec::new();
        let mut subset = Vec::new();
        for r in 0..35 {
            ranker.unrank(r, &mut subset);
            all.push(subset.clone());
        }
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(all, sorted);
        assert_eq!(all[0], vec![0, 1, 2]);
        assert_eq!(all[34], vec![4, 5, 6]);
    }

    #[test]
    fn full_budget_sample_is_every_subset() {
        let mut rng = stream_rng(1, 0);
        let subsets = sample_distinct_subsets(&mut rng, 9, 4, 126);
        let unique: HashSet<_> = subsets.iter().cloned().collect();
        assert_eq!(unique.len(), 126);
    }

    #[test]
    fn floyd_sampling_is_roughly_uniform() {
        let mut rng = stream_rng(2, 0);
        let mut counts = [0usize; 10];
        for _ in 0..20_000 {
            for r in sample_distinct_ranks(&mut rng, 10, 3) {
                counts[r as usize] += 1;
            }
        }
        // Each value appears with probability 3/10.
        for c in counts {
            assert!((c as f64 / 20_000.0 - 0.3).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn huge_subset_spaces_fall_back_to_rejection() {
        let mut rng = stream_rng(3, 0);
        let subsets = sample_distinct_subsets(&mut rng, 1000, 400, 5);
        assert_eq!(subsets.len(), 5);
        assert!(subsets.iter().all(|s| s.len() == 400 && s.windows(2).all(|w| w[0] < w[1])));
    }
}
