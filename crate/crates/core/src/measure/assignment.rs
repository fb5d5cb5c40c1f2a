//! Dense minimum-cost perfect assignment (shortest augmenting paths with
//! dual potentials, O(n³)).

/// Optimal assignment for the `n × n` row-major cost matrix.
///
/// Returns `(total cost, column assigned to each row)`.
pub fn min_cost_assignment(n: usize, cost: &[f64]) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    if n == 0 {
        return (0.0, Vec::new());
    }
    // 1-based bookkeeping; index 0 is the virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let ui0 = u[i0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - ui0 - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    let total = col_of_row
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    (total, col_of_row)
}

/// Minimum-cost assignment of `sinks` unit demands to `sources` nodes of
/// equal capacity `sinks / sources` (successive shortest paths over the
/// sources with Johnson potentials).
///
/// `cost` is `sinks × sources`, row-major. Returns `(total cost, source of
/// each sink)`.
pub fn min_cost_capacitated(sinks: usize, sources: usize, cost: &[f64]) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), sinks * sources, "cost matrix must be sinks x sources");
    assert!(sources > 0 && sinks.is_multiple_of(sources), "capacities must be integral");
    let cap = sinks / sources;
    const NONE: usize = usize::MAX;

    let mut pot_row = vec![0.0f64; sinks];
    let mut pot_src = vec![0.0f64; sources];
    let mut src_of = vec![NONE; sinks];
    let mut members: Vec<Vec<usize>> = vec![Vec::with_capacity(cap); sources];

    let mut dist = vec![0.0f64; sources];
    let mut pred = vec![NONE; sources];
    let mut done = vec![false; sources];
    let mut popped: Vec<usize> = Vec::with_capacity(sources);

    for r0 in 0..sinks {
        let row0 = &cost[r0 * sources..(r0 + 1) * sources];
        pot_row[r0] = (0..sources)
            .map(|j| pot_src[j] - row0[j])
            .fold(f64::NEG_INFINITY, f64::max);
        for j in 0..sources {
            dist[j] = row0[j] + pot_row[r0] - pot_src[j];
            pred[j] = r0;
            done[j] = false;
        }
        popped.clear();
        let (target, reach) = loop {
            let mut best = NONE;
            let mut best_d = f64::INFINITY;
            for j in 0..sources {
                if !done[j] && dist[j] < best_d {
                    best_d = dist[j];
                    best = j;
                }
            }
            debug_assert!(best != NONE, "some source always has spare capacity");
            done[best] = true;
            popped.push(best);
            if members[best].len() < cap {
                break (best, best_d);
            }
            for &r in &members[best] {
                let row = &cost[r * sources..(r + 1) * sources];
                let base = best_d + pot_row[r];
                for j in 0..sources {
                    if !done[j] {
                        let nd = base + row[j] - pot_src[j];
                        if nd < dist[j] {
                            dist[j] = nd;
                            pred[j] = r;
                        }
                    }
                }
            }
        };

        // Potentials shifted by min(d, D) - D; untouched nodes keep theirs.
        for &j in &popped {
            let shift = dist[j] - reach;
            pot_src[j] += shift;
            for &r in &members[j] {
                pot_row[r] += shift;
            }
        }
        pot_row[r0] -= reach;

        let mut j = target;
        loop {
            let r = pred[j];
            let prev = src_of[r];
            if prev != NONE {
                let pos = members[prev].iter().position(|&x| x == r).expect("member listed");
                members[prev].swap_remove(pos);
            }
            members[j].push(r);
            src_of[r] = j;
            if r == r0 {
                break;
            }
            j = prev;
        }
    }

    let total = src_of
        .iter()
        .enumerate()
        .map(|(r, &j)| cost[r * sources + j])
        .sum();
    (total, src_of)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(n: usize, cost: &[f64]) -> f64 {
        fn rec(row: usize, n: usize, cost: &[f64], used: &mut [bool], acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(row + 1, n, cost, used, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(0, n, cost, &mut vec![false; n], 0.0, &mut best);
        best
    }

    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn matches_brute_force_on_small_matrices() {
        let mut s = 42u64;
        for n in 1..=6 {
            for _ in 0..30 {
                let cost: Vec<f64> = (0..n * n).map(|_| lcg(&mut s) * 10.0 - 3.0).collect();
                let (got, perm) = min_cost_assignment(n, &cost);
                let want = brute_force(n, &cost);
                assert!((got - want).abs() < 1e-12, "n={n} got {got} want {want}");
                let mut seen = perm.clone();
                seen.sort_unstable();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn capacitated_matches_replicated_assignment() {
        let mut s = 7u64;
        for (sinks, sources) in [(6, 2), (6, 3), (8, 4), (12, 3), (9, 9), (5, 1)] {
            for _ in 0..10 {
                let cost: Vec<f64> = (0..sinks * sources).map(|_| lcg(&mut s) * 5.0).collect();
                let cap = sinks / sources;
                // square matrix with each source column repeated `cap` times
                let square: Vec<f64> = (0..sinks)
                    .flat_map(|r| (0..sinks).map(move |c| (r, c)))
                    .map(|(r, c)| cost[r * sources + c / cap])
                    .collect();
                let (want, _) = min_cost_assignment(sinks, &square);
                let (got, src) = min_cost_capacitated(sinks, sources, &cost);
                assert!((got - want).abs() < 1e-10, "{sinks}x{sources}: {got} vs {want}");
                for j in 0..sources {
                    assert_eq!(src.iter().filter(|&&x| x == j).count(), cap);
                }
            }
        }
    }
}
