//! Independent reference computations used by the property and acceptance tests.
//!
//! Nothing here calls into the implementation under test.

#![allow(dead_code)]

use std::collections::HashSet;

/// Minimum transport cost by enumerating every basis of `n + m - 1` cells,
/// solving each spanning-tree basis by leaf peeling, and keeping the cheapest
/// non-negative one.
pub fn transport_brute_force(costs: &[Vec<f64>], supply: &[f64], demand: &[f64]) -> f64 {
    let (n, m) = (supply.len(), demand.len());
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let k = n + m - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(k);
    subsets(&cells, k, 0, &mut chosen, &mut |basis| {
        if let Some(flows) = peel(basis, supply, demand) {
            if flows.iter().all(|&f| f >= -1e-12) {
                let cost: f64 = basis.iter().zip(&flows).map(|(&(i, j), f)| costs[i][j] * f).sum();
                best = best.min(cost);
            }
        }
    });
    best
}

fn subsets<F: FnMut(&[(usize, usize)])>(
    cells: &[(usize, usize)],
    k: usize,
    start: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut F,
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    for idx in start..cells.len() {
        if cells.len() - idx < k - chosen.len() {
            break;
        }
        chosen.push(cells[idx]);
        subsets(cells, k, idx + 1, chosen, visit);
        chosen.pop();
    }
}

/// Solves the marginal equations on a tree-shaped basis; `None` if the basis has a cycle.
fn peel(basis: &[(usize, usize)], supply: &[f64], demand: &[f64]) -> Option<Vec<f64>> {
    let mut row_left = supply.to_vec();
    let mut col_left = demand.to_vec();
    let mut flows = vec![f64::NAN; basis.len()];
    let mut open: Vec<bool> = vec![true; basis.len()];
    for _ in 0..basis.len() {
        let mut progressed = false;
        for e in 0..basis.len() {
            if !open[e] {
                continue;
            }
            let (i, j) = basis[e];
            let row_deg = (0..basis.len()).filter(|&f| open[f] && basis[f].0 == i).count();
            let col_deg = (0..basis.len()).filter(|&f| open[f] && basis[f].1 == j).count();
            let flow = if row_deg == 1 {
                row_left[i]
            } else if col_deg == 1 {
                col_left[j]
            } else {
                continue;
            };
            flows[e] = flow;
            row_left[i] -= flow;
            col_left[j] -= flow;
            open[e] = false;
            progressed = true;
        }
        if !progressed {
            break;
        }
    }
    if open.iter().any(|&o| o) {
        return None;
    }
    let residual = row_left.iter().chain(&col_left).map(|r| r.abs()).fold(0.0, f64::max);
    (residual < 1e-9).then_some(flows)
}

/// Pearson r from raw sums: (nΣxy − ΣxΣy) / sqrt((nΣx² − (Σx)²)(nΣy² − (Σy)²)).
pub fn pearson_raw_sums(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

/// Average ranks by counting: 1 + #{smaller} + (#{equal} − 1) / 2.
pub fn ranks_by_counting(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let smaller = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn spearman_by_definition(x: &[f64], y: &[f64]) -> f64 {
    pearson_raw_sums(&ranks_by_counting(x), &ranks_by_counting(y))
}

/// No-ties closed form, evaluated as one division of exact integers:
/// (n(n²−1) − 6Σd²) / (n(n²−1)).
pub fn spearman_closed_form(x: &[f64], y: &[f64]) -> f64 {
    let rx = ranks_by_counting(x);
    let ry = ranks_by_counting(y);
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    let denom = n * (n * n - 1.0);
    (denom - 6.0 * d2) / denom
}

/// F1 of token-presence overlap: precision counts candidate tokens that occur
/// anywhere in the reference, recall the converse.
pub fn presence_overlap_f1(candidate: &[String], reference: &[String]) -> f64 {
    let cand_set: HashSet<&String> = candidate.iter().collect();
    let ref_set: HashSet<&String> = reference.iter().collect();
    let hits_c = candidate.iter().filter(|t| ref_set.contains(t)).count() as f64;
    let hits_r = reference.iter().filter(|t| cand_set.contains(t)).count() as f64;
    let p = hits_c / candidate.len() as f64;
    let r = hits_r / reference.len() as f64;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}
