//! Classical statistics shared by the metrics and the sweep analyses.

use crate::error::{Error, Result};

/// Equal-width binning over the observed min/max of `values`.
///
/// Constant columns land entirely in bin 0. The top edge is inclusive so
/// the maximum falls in bin `bins - 1`.
pub fn bin_equal_width(values: &[f64], bins: usize) -> Vec<usize> {
    assert!(bins >= 1);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0; values.len()];
    }
    let width = (hi - lo) / bins as f64;
    values
        .iter()
        .map(|&v| (((v - lo) / width) as usize).min(bins - 1))
        .collect()
}

/// Plug-in entropy of a discrete sample, in nats.
pub fn entropy(labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let k = labels.iter().max().unwrap() + 1;
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Plug-in mutual information between two discrete samples, in nats.
pub fn discrete_mi(x: &[usize], y: &[usize]) -> f64 {
    assert_eq!(x.len(), y.len(), "mi needs equal-length samples");
    if x.is_empty() {
        return 0.0;
    }
    let kx = x.iter().max().unwrap() + 1;
    let ky = y.iter().max().unwrap() + 1;
    let mut joint = vec![0usize; kx * ky];
    let mut mx = vec![0usize; kx];
    let mut my = vec![0usize; ky];
    for (&a, &b) in x.iter().zip(y) {
        joint[a * ky + b] += 1;
        mx[a] += 1;
        my[b] += 1;
    }
    let n = x.len() as f64;
    let mut mi = 0.0;
    for a in 0..kx {
        for b in 0..ky {
            let c = joint[a * ky + b];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            let px = mx[a] as f64 / n;
            let py = my[b] as f64 / n;
            mi += pxy * (pxy / (px * py)).ln();
        }
    }
    mi.max(0.0)
}

/// MI between a continuous column (equal-width binned) and discrete labels.
pub fn discrete_mi_binned(x: &[f64], y: &[usize], bins: usize) -> f64 {
    discrete_mi(&bin_equal_width(x, bins), y)
}

/// Fractional ranks with average ties.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; `None` when either rank vector is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "spearman needs equal-length samples");
    assert!(a.len() >= 2, "spearman needs at least two points");
    let ra = fractional_ranks(a);
    let rb = fractional_ranks(b);
    pearson(&ra, &rb)
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

/// Result of regressing scores on a categorical predictor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlsFit {
    pub r_squared: f64,
    pub rank_deficient: bool,
}

/// R² of ordinary least squares on one-hot-encoded levels with intercept.
pub fn ols_variance_explained(scores: &[f64], levels: &[usize]) -> Result<OlsFit> {
    let n = scores.len();
    if n != levels.len() {
        return Err(Error::usage("scores and levels must have equal length"));
    }
    let mut distinct: Vec<usize> = levels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::usage("need at least 2 distinct predictor levels"));
    }
    // Intercept plus one dummy per level except the first.
    let p = distinct.len();
    if n <= p {
        return Err(Error::usage(format!(
            "need more samples ({n}) than design columns ({p})"
        )));
    }
    let col_of = |lvl: usize| distinct.iter().position(|&d| d == lvl).expect("mapped");
    let mut design = vec![0.0; n * p];
    for (i, &lvl) in levels.iter().enumerate() {
        design[i * p] = 1.0;
        let c = col_of(lvl);
        if c > 0 {
            design[i * p + c] = 1.0;
        }
    }
    // Normal equations.
    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let row = &design[i * p..(i + 1) * p];
        for a in 0..p {
            if row[a] == 0.0 {
                continue;
            }
            xty[a] += row[a] * scores[i];
            for bcol in 0..p {
                xtx[a * p + bcol] += row[a] * row[bcol];
            }
        }
    }
    let (beta, rank_deficient) = solve_spd_with_fallback(&mut xtx, &xty, p);
    let mean = scores.iter().sum::<f64>() / n as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..n {
        let row = &design[i * p..(i + 1) * p];
        let fit: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
        ss_res += (scores[i] - fit) * (scores[i] - fit);
        ss_tot += (scores[i] - mean) * (scores[i] - mean);
    }
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        0.0
    };
    Ok(OlsFit {
        r_squared,
        rank_deficient,
    })
}

/// Gaussian elimination with partial pivoting; on a near-singular pivot
/// the system is re-solved with a small ridge and flagged.
fn solve_spd_with_fallback(a: &mut [f64], b: &[f64], p: usize) -> (Vec<f64>, bool) {
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    match gaussian_solve(&mut a.to_vec(), b, p, 1e-12 * scale) {
        Some(x) => (x, false),
        None => {
            let mut ridged = a.to_vec();
            for i in 0..p {
                ridged[i * p + i] += 1e-8 * scale;
            }
            let x = gaussian_solve(&mut ridged, b, p, 0.0).expect("ridged system is regular");
            (x, true)
        }
    }
}

fn gaussian_solve(a: &mut [f64], b: &[f64], p: usize, pivot_tol: f64) -> Option<Vec<f64>> {
    let mut aug: Vec<f64> = Vec::with_capacity(p * (p + 1));
    for i in 0..p {
        aug.extend_from_slice(&a[i * p..(i + 1) * p]);
        aug.push(b[i]);
    }
    let w = p + 1;
    for col in 0..p {
        let mut best = col;
        for r in col + 1..p {
            if aug[r * w + col].abs() > aug[best * w + col].abs() {
                best = r;
            }
        }
        if aug[best * w + col].abs() <= pivot_tol {
            return None;
        }
        if best != col {
            for c in 0..w {
                aug.swap(col * w + c, best * w + c);
            }
        }
        let pivot = aug[col * w + col];
        for r in 0..p {
            if r == col {
                continue;
            }
            let factor = aug[r * w + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col..w {
                aug[r * w + c] -= factor * aug[col * w + c];
            }
        }
    }
    Some((0..p).map(|i| aug[i * w + p] / aug[i * w + i]).collect())
}

/// Two-sample Kolmogorov-Smirnov statistic: sup-norm distance between the
/// empirical CDFs.
pub fn ks_statistic(sample_a: &[f64], sample_b: &[f64]) -> f64 {
    assert!(
        !sample_a.is_empty() && !sample_b.is_empty(),
        "ks needs nonempty samples"
    );
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
