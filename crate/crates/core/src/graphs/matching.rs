use std::collections::VecDeque;

use super::Bipartite;

/// A maximum-cardinality matching.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub size: usize,
    /// `pair_left[l]` is the right vertex matched to `l`.
    pub pair_left: Vec<Option<usize>>,
    pub pair_right: Vec<Option<usize>>,
}

impl Matching {
    pub fn is_perfect(&self, left: usize, right: usize) -> bool {
        self.size == left.min(right)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pair_left
            .iter()
            .enumerate()
            .filter_map(|(l, r)| r.map(|r| (l, r)))
    }

    pub fn unmatched_left(&self) -> Vec<usize> {
        self.pair_left
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_none())
            .map(|(l, _)| l)
            .collect()
    }
}

/// Hopcroft-Karp.
pub fn max_matching(b: &Bipartite) -> Matching {
    const INF: usize = usize::MAX;
    let mut pair_left: Vec<Option<usize>> = vec![None; b.left];
    let mut pair_right: Vec<Option<usize>> = vec![None; b.right];
    let mut dist = vec![INF; b.left];
    let mut size = 0;

    loop {
        // BFS layering from free left vertices
        let mut queue = VecDeque::new();
        for l in 0..b.left {
            if pair_left[l].is_none() {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = INF;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in b.neighbors(l) {
                match pair_right[r] {
                    None => found = true,
                    Some(l2) if dist[l2] == INF => {
                        dist[l2] = dist[l] + 1;
                        queue.push_back(l2);
                    }
                    Some(_) => {}
                }
            }
        }
        if !found {
            break;
        }
        for l in 0..b.left {
            if pair_left[l].is_none() && augment(b, l, &mut dist, &mut pair_left, &mut pair_right) {
                size += 1;
            }
        }
    }

    Matching {
        size,
        pair_left,
        pair_right,
    }
}

fn augment(
    b: &Bipartite,
    l: usize,
    dist: &mut [usize],
    pair_left: &mut [Option<usize>],
    pair_right: &mut [Option<usize>],
) -> bool {
    for &r in b.neighbors(l) {
        let ok = match pair_right[r] {
            None => true,
            Some(l2) => dist[l2] == dist[l] + 1 && augment(b, l2, dist, pair_left, pair_right),
        };
        if ok {
            pair_left[l] = Some(r);
            pair_right[r] = Some(l);
            return true;
        }
    }
    dist[l] = usize::MAX;
    false
}
