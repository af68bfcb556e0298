//! Monotone rearrangement of measures on the line.

/// Couples atoms `(position, mass)` in increasing order of position.
///
/// Returns `(source index, target index, mass)` triples; zero-mass pieces
/// are dropped. Totals are assumed equal up to rounding.
pub fn monotone_coupling(src: &[(f64, f64)], dst: &[(f64, f64)]) -> Vec<(usize, usize, f64)> {
    let order = |v: &[(f64, f64)]| {
        let mut idx: Vec<usize> = (0..v.len()).filter(|&i| v[i].1 > 0.0).collect();
        idx.sort_by(|&a, &b| v[a].0.partial_cmp(&v[b].0).unwrap().then(a.cmp(&b)));
        idx
    };
    let (si, di) = (order(src), order(dst));
    let mut out = Vec::new();
    if si.is_empty() || di.is_empty() {
        return out;
    }
    let (mut a, mut b) = (0, 0);
    let mut ra = src[si[0]].1;
    let mut rb = dst[di[0]].1;
    loop {
        let last_a = a + 1 == si.len();
        let last_b = b + 1 == di.len();
        if last_a && last_b {
            out.push((si[a], di[b], ra));
            break;
        }
        let f = if last_a {
            rb
        } else if last_b {
            ra
        } else {
            ra.min(rb)
        };
        if f > 0.0 {
            out.push((si[a], di[b], f));
        }
        if !last_a && (last_b || ra <= rb) {
            rb -= f;
            a += 1;
            ra = src[si[a]].1;
        } else {
            ra -= f;
            b += 1;
            rb = dst[di[b]].1;
        }
    }
    out
}

/// `W_p` between atoms on the line via the monotone coupling.
pub fn wasserstein_line(src: &[(f64, f64)], dst: &[(f64, f64)], p: f64) -> f64 {
    monotone_coupling(src, dst)
        .iter()
        .map(|&(i, j, m)| m * (src[i].0 - dst[j].0).abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_shift() {
        let src = [(0.0, 0.5), (1.0, 0.5)];
        let dst = [(1.0, 0.5), (2.0, 0.5)];
        let c = monotone_coupling(&src, &dst);
        assert_eq!(c, vec![(0, 0, 0.5), (1, 1, 0.5)]);
        assert!((wasserstein_line(&src, &dst, 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn splitting_mass() {
        let src = [(0.0, 1.0)];
        let dst = [(2.0, 0.25), (1.0, 0.75)];
        let c = monotone_coupling(&src, &dst);
        assert_eq!(c, vec![(0, 1, 0.75), (0, 0, 0.25)]);
    }
}
