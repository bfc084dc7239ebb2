//! Latest-wins acceptance of datagram streams.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Freshness {
    Accept,
    Drop,
}

/// Accepts only ticks strictly newer than the last accepted one.
pub fn freshness_filter(last_accepted_tick: u32, incoming_tick: u32) -> Freshness {
    if incoming_tick > last_accepted_tick {
        Freshness::Accept
    } else {
        Freshness::Drop
    }
}

/// Stateful form of [`freshness_filter`]. The first datagram of a stream is
/// always accepted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FreshnessFilter {
    last: Option<u32>,
}

impl FreshnessFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_accepted(&self) -> Option<u32> {
        self.last
    }

    pub fn accept(&mut self, tick: u32) -> bool {
        let ok = match self.last {
            None => true,
            Some(last) => freshness_filter(last, tick) == Freshness::Accept,
        };
        if ok {
            self.last = Some(tick);
        }
        ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn examples() {
        assert_eq!(freshness_filter(5, 6), Freshness::Accept);
        assert_eq!(freshness_filter(5, 5), Freshness::Drop);
        assert_eq!(freshness_filter(5, 4), Freshness::Drop);
    }

    fn permutations(items: &[u32]) -> Vec<Vec<u32>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let head = rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, head);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn reordered_stream() {
        let mut f = FreshnessFilter::new();
        let accepted: Vec<u32> = [1, 3, 2, 4].into_iter().filter(|&t| f.accept(t)).collect();
        assert_eq!(accepted, vec![1, 3, 4]);

        // every ordering of 4 ticks: accepted ticks strictly increase and
        // equal the running maxima of the ordering
        for order in permutations(&[1, 2, 3, 4]) {
            let mut f = FreshnessFilter::new();
            let accepted: Vec<u32> = order.iter().copied().filter(|&t| f.accept(t)).collect();
            assert!(accepted.windows(2).all(|w| w[0] < w[1]));
            let mut max = 0;
            let maxima: BTreeSet<u32> = order
                .iter()
                .filter(|&&t| {
                    let new = t > max;
                    max = max.max(t);
                    new
                })
                .copied()
                .collect();
            assert_eq!(accepted.into_iter().collect::<BTreeSet<_>>(), maxima);
        }
    }
}
