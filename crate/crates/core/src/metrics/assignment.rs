//! Minimum-cost perfect matching on dense square cost matrices.

/// Exact minimum-cost assignment via shortest augmenting paths with
/// potentials, O(n³). `cost` is row-major `n × n`. Returns the column
/// assigned to each row.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    // 1-based internally; index 0 is the virtual source column/row.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            let row = &cost[(i0 - 1) * n..i0 * n];
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    col_of
}

/// Forward auction with ε-scaling. The returned assignment's total cost is
/// within `n · eps_final` of the optimum.
pub fn auction(cost: &[f64], n: usize, eps_final: f64) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    assert!(eps_final > 0.0);
    if n == 0 {
        return Vec::new();
    }
    let max_cost = cost.iter().copied().fold(0.0f64, f64::max);
    let mut prices = vec![0.0f64; n];
    let mut eps = (max_cost / 4.0).max(eps_final);
    let mut owner: Vec<Option<usize>>;
    let mut assigned: Vec<Option<usize>>;

    loop {
        owner = vec![None; n];
        assigned = vec![None; n];
        let mut unassigned: Vec<usize> = (0..n).rev().collect();
        while let Some(i) = unassigned.pop() {
            let row = &cost[i * n..(i + 1) * n];
            // maximize value = -cost - price
            let (mut best_j, mut best, mut second) = (0, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for (j, (&c, &p)) in row.iter().zip(&prices).enumerate() {
                let val = -c - p;
                if val > best {
                    second = best;
                    best = val;
                    best_j = j;
                } else if val > second {
                    second = val;
                }
            }
            let bid = if second.is_finite() { best - second + eps } else { eps };
            prices[best_j] += bid;
            if let Some(prev) = owner[best_j].replace(i) {
                assigned[prev] = None;
                unassigned.push(prev);
            }
            assigned[i] = Some(best_j);
        }
        if eps <= eps_final {
            break;
        }
        eps = (eps / 5.0).max(eps_final);
    }
    assigned
        .into_iter()
        .map(|j| j.expect("auction terminates fully assigned"))
        .collect()
}

pub fn assignment_cost(cost: &[f64], n: usize, cols: &[usize]) -> f64 {
    cols.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum()
}
