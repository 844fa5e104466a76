use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How the policy head's outputs are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyVariant {
    /// Independent per-link inclusion probabilities; any non-empty subset.
    Subset,
    /// One distribution over links; exactly one link.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectMode {
    Sample,
    Greedy,
}

/// Non-empty set of selected links.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkGroup {
    pub mask: Vec<bool>,
}

impl LinkGroup {
    /// Panics if `mask` selects nothing.
    pub fn new(mask: Vec<bool>) -> Self {
        assert!(mask.iter().any(|&m| m), "link group must not be empty");
        LinkGroup { mask }
    }

    pub fn single(num_links: usize, link: usize) -> Self {
        let mut mask = vec![false; num_links];
        mask[link] = true;
        LinkGroup { mask }
    }

    pub fn all(num_links: usize) -> Self {
        LinkGroup {
            mask: vec![true; num_links],
        }
    }

    /// Number of selected links.
    pub fn size(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn links(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
    }

    /// Jaccard index between two masks of equal length (1 if both are empty).
    pub fn jaccard(&self, other: &[bool]) -> f64 {
        let inter = self
            .mask
            .iter()
            .zip(other)
            .filter(|(&a, &b)| a && b)
            .count();
        let union = self
            .mask
            .iter()
            .zip(other)
            .filter(|(&a, &b)| a || b)
            .count();
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Turns policy probabilities into a link group.
///
/// Subset: Bernoulli draws (sample) or threshold 0.5 (greedy). Single:
/// categorical draw (sample) or argmax (greedy). An empty subset falls back to
/// the most probable link, ties going to the lowest index. `rng` is only
/// consulted when sampling.
pub fn select_action(
    probs: &[f64],
    mode: SelectMode,
    variant: PolicyVariant,
    rng: Option<&mut ChaCha8Rng>,
) -> LinkGroup {
    assert!(!probs.is_empty(), "no links to select from");
    let n = probs.len();
    match (variant, mode) {
        (PolicyVariant::Subset, SelectMode::Greedy) => {
            let mask: Vec<bool> = probs.iter().map(|&p| p >= 0.5).collect();
            if mask.iter().any(|&m| m) {
                LinkGroup { mask }
            } else {
                LinkGroup::single(n, argmax(probs))
            }
        }
        (PolicyVariant::Subset, SelectMode::Sample) => {
            let rng = rng.expect("sampling needs a generator");
            let mask: Vec<bool> = probs.iter().map(|&p| rng.gen::<f64>() < p).collect();
            if mask.iter().any(|&m| m) {
                LinkGroup { mask }
            } else {
                LinkGroup::single(n, argmax(probs))
            }
        }
        (PolicyVariant::Single, SelectMode::Greedy) => LinkGroup::single(n, argmax(probs)),
        (PolicyVariant::Single, SelectMode::Sample) => {
            let rng = rng.expect("sampling needs a generator");
            let total: f64 = probs.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            for (i, &p) in probs.iter().enumerate() {
                if u < p {
                    return LinkGroup::single(n, i);
                }
                u -= p;
            }
            LinkGroup::single(n, argmax(probs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn greedy_subset_thresholds() {
        let g = select_action(
            &[0.9, 0.2, 0.7, 0.4],
            SelectMode::Greedy,
            PolicyVariant::Subset,
            None,
        );
        assert_eq!(g.mask, vec![true, false, true, false]);
        assert_eq!(g.size(), 2);
    }

    #[test]
    fn greedy_subset_falls_back_to_argmax() {
        let g = select_action(
            &[0.1, 0.3, 0.2, 0.3],
            SelectMode::Greedy,
            PolicyVariant::Subset,
            None,
        );
        assert_eq!(g.mask, vec![false, true, false, false]);
    }

    #[test]
    fn greedy_single_is_argmax() {
        let g = select_action(
            &[0.1, 0.1, 0.7, 0.1],
            SelectMode::Greedy,
            PolicyVariant::Single,
            None,
        );
        assert_eq!(g.links().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn sampling_is_never_empty_and_tracks_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let probs = [0.8, 0.05, 0.5, 0.05];
        let mut counts = [0usize; 4];
        for _ in 0..4000 {
            let g = select_action(
                &probs,
                SelectMode::Sample,
                PolicyVariant::Subset,
                Some(&mut rng),
            );
            assert!(g.size() >= 1);
            g.links().for_each(|l| counts[l] += 1);
        }
        // empty draws fall back to link 0
        let fallback = 0.2 * 0.95 * 0.5 * 0.95;
        assert!((counts[0] as f64 / 4000.0 - (0.8 + fallback)).abs() < 0.03);
        assert!((counts[2] as f64 / 4000.0 - 0.5).abs() < 0.05);
        let mut single = [0usize; 4];
        for _ in 0..4000 {
            let g = select_action(
                &[0.1, 0.2, 0.3, 0.4],
                SelectMode::Sample,
                PolicyVariant::Single,
                Some(&mut rng),
            );
            assert_eq!(g.size(), 1);
            single[g.links().next().unwrap()] += 1;
        }
        assert!((single[3] as f64 / 4000.0 - 0.4).abs() < 0.05);
    }

    #[test]
    fn jaccard() {
        let g = LinkGroup::new(vec![true, true, false, false]);
        assert_eq!(g.jaccard(&[true, true, false, false]), 1.0);
        assert!((g.jaccard(&[true, false, true, false]) - 1.0 / 3.0).abs() < 1e-15);
    }
}
