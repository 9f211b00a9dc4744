//! Multi-index utilities: enumeration, order, and binomial weights for the
//! discrete Leibniz formula.

/// `|α| = Σ α_i`.
pub fn order(alpha: &[u32]) -> u32 {
    alpha.iter().sum()
}

/// All multi-indices of dimension `n` with `|α| <= max_order`, ordered by
/// total order, then lexicographically. Deterministic.
pub fn multi_indices(n: usize, max_order: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=max_order {
        let mut cur = vec![0u32; n];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, axis: usize, remaining: u32) {
    if axis + 1 == cur.len() {
        cur[axis] = remaining;
        out.push(cur.clone());
        return;
    }
    for v in 0..=remaining {
        cur[axis] = v;
        fill(out, cur, axis + 1, remaining - v);
    }
    cur[axis] = 0;
}

/// All β with β <= α componentwise, lexicographic.
pub fn sub_indices(alpha: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &a in alpha {
        let mut next = Vec::with_capacity(out.len() * (a as usize + 1));
        for prefix in &out {
            for v in 0..=a {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// `Π_i binom(α_i, β_i)`, the multi-binomial in the Leibniz expansion.
pub fn multi_binomial(alpha: &[u32], beta: &[u32]) -> f64 {
    alpha
        .iter()
        .zip(beta)
        .map(|(&a, &b)| binomial(a, b))
        .product()
}
