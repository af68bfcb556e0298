//! Branching points by direct triple enumeration.

use crate::space::FiniteMMSpace;

/// `(A₊, A₋)` for potential `u`, enumerating all triples `(x, z, w)`.
pub fn branching_sets_brute(
    space: &FiniteMMSpace,
    u: &[f64],
    tol: f64,
) -> (Vec<usize>, Vec<usize>) {
    let n = space.n();
    let gamma = |a: usize, b: usize| (u[a] - u[b] - space.d(a, b)).abs() <= tol;
    let related = |a: usize, b: usize| gamma(a, b) || gamma(b, a);
    let in_t = |x: usize| (0..n).any(|y| y != x && related(x, y));
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for x in (0..n).filter(|&x| in_t(x)) {
        let mut fwd = false;
        let mut bwd = false;
        for z in 0..n {
            for w in 0..n {
                if related(z, w) {
                    continue;
                }
                fwd |= gamma(x, z) && gamma(x, w);
                bwd |= gamma(z, x) && gamma(w, x);
            }
        }
        if fwd {
            plus.push(x);
        }
        if bwd {
            minus.push(x);
        }
    }
    (plus, minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DiscreteMeasure;

    #[test]
    fn tripod_center_branches() {
        let d = vec![
            vec![0.0, 1.0, 1.0, 1.0],
            vec![1.0, 0.0, 2.0, 2.0],
            vec![1.0, 2.0, 0.0, 2.0],
            vec![1.0, 2.0, 2.0, 0.0],
        ];
        let labels = ["c", "l1", "l2", "l3"].map(String::from).to_vec();
        let s = FiniteMMSpace::new(
            labels,
            vec![None; 4],
            d,
            DiscreteMeasure::uniform(4),
            Vec::new(),
        )
        .unwrap();
        let u: Vec<f64> = (0..4).map(|x| -s.d(x, 1)).collect();
        let (plus, minus) = branching_sets_brute(&s, &u, 1e-9);
        assert_eq!(plus, vec![0, 1]);
        assert!(minus.is_empty());
    }
}
