//! Multinomial logistic regression, with and without cross-validated
//! regularization, plus the strongly regularized one-vs-rest single-feature
//! classifier used for per-dimension predictability scores.

use super::lbfgs;
use crate::rng::SeededRng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// Inverse-strength grid: 10 values log-spaced in [1e-4, 1e4].
pub fn regularization_grid(n_values: usize) -> Vec<f64> {
    assert!(n_values >= 2);
    (0..n_values)
        .map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / (n_values - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Row-major `[n_features, n_classes]`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    n_features: usize,
    n_classes: usize,
    /// Set when the training labels held a single class.
    pub degenerate: bool,
    /// Inverse regularization strength the fit used (CV-chosen or fixed).
    pub inverse_strength: f64,
}

impl LogisticModel {
    pub fn predict(&self, x: &[f64]) -> usize {
        assert_eq!(x.len(), self.n_features);
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for k in 0..self.n_classes {
            let mut s = self.bias[k];
            for (j, &xv) in x.iter().enumerate() {
                s += xv * self.weights[j * self.n_classes + k];
            }
            if s > best_score {
                best_score = s;
                best = k;
            }
        }
        best
    }

    pub fn accuracy(&self, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
        let hits = xs
            .iter()
            .zip(ys)
            .filter(|(x, &y)| self.predict(x) == y)
            .count();
        hits as f64 / xs.len().max(1) as f64
    }
}

fn distinct_classes(y: &[usize]) -> usize {
    let mut seen: Vec<usize> = y.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

fn degenerate_model(n_features: usize, class: usize) -> LogisticModel {
    let n_classes = class + 1;
    let mut bias = vec![0.0; n_classes];
    bias[class] = 1.0;
    LogisticModel {
        weights: vec![0.0; n_features * n_classes],
        bias,
        n_features,
        n_classes,
        degenerate: true,
        inverse_strength: f64::NAN,
    }
}

/// Mean cross-entropy plus `||W||^2 / (2 C n)`; intercepts unpenalized.
fn softmax_objective(
    xs: &[Vec<f64>],
    ys: &[usize],
    d: usize,
    k: usize,
    c: f64,
    theta: &[f64],
) -> (f64, Vec<f64>) {
    let n = xs.len();
    let lambda = 1.0 / (c * n as f64);
    let (w, b) = theta.split_at(d * k);
    let mut loss = 0.0;
    let mut grad = vec![0.0; theta.len()];
    let (gw, gb) = grad.split_at_mut(d * k);
    let mut scores = vec![0.0; k];
    for (x, &y) in xs.iter().zip(ys) {
        scores.copy_from_slice(b);
        for (j, &xv) in x.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (s, &wv) in scores.iter_mut().zip(&w[j * k..(j + 1) * k]) {
                *s += xv * wv;
            }
        }
        let mx = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = mx + scores.iter().map(|&s| (s - mx).exp()).sum::<f64>().ln();
        loss += lse - scores[y];
        for (cls, &s) in scores.iter().enumerate() {
            let p = (s - lse).exp();
            let gsc = p - f64::from(u8::from(cls == y));
            gb[cls] += gsc;
            for (j, &xv) in x.iter().enumerate() {
                gw[j * k + cls] += gsc * xv;
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    loss *= inv_n;
    for g in grad.iter_mut() {
        *g *= inv_n;
    }
    let (w, _) = theta.split_at(d * k);
    let (gw, _) = grad.split_at_mut(d * k);
    for (g, &wv) in gw.iter_mut().zip(w) {
        *g += lambda * wv;
    }
    loss += 0.5 * lambda * w.iter().map(|&v| v * v).sum::<f64>();
    (loss, grad)
}

/// Multinomial logistic fit at a fixed inverse strength `c`.
pub fn fit_logistic(xs: &[Vec<f64>], ys: &[usize], c: f64) -> LogisticModel {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    if distinct_classes(ys) < 2 {
        return degenerate_model(xs[0].len(), ys[0]);
    }
    let d = xs[0].len();
    let k = ys.iter().max().unwrap() + 1;
    let theta0 = vec![0.0; d * k + k];
    let theta = lbfgs::minimize(theta0, 300, 1e-7, |t| {
        softmax_objective(xs, ys, d, k, c, t)
    });
    let (w, b) = theta.split_at(d * k);
    LogisticModel {
        weights: w.to_vec(),
        bias: b.to_vec(),
        n_features: d,
        n_classes: k,
        degenerate: false,
        inverse_strength: c,
    }
}

/// Cross-validated multinomial logistic regression.
///
/// The inverse strength with the best mean fold accuracy wins; ties go to
/// the smallest grid index. The final model is refit on all rows.
pub fn fit_logistic_cv(
    xs: &[Vec<f64>],
    ys: &[usize],
    folds: usize,
    n_reg_values: usize,
    rng: &mut SeededRng,
) -> LogisticModel {
    assert!(folds >= 2);
    assert!(xs.len() >= folds, "need at least one sample per fold");
    if distinct_classes(ys) < 2 {
        return degenerate_model(xs[0].len(), ys[0]);
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.shuffle(rng);
    let grid = regularization_grid(n_reg_values);
    let mut best = (0usize, f64::NEG_INFINITY);
    for (ci, &c) in grid.iter().enumerate() {
        let mut acc_sum = 0.0;
        for fold in 0..folds {
            let mut train_x = Vec::new();
            let mut train_y = Vec::new();
            let mut test_x = Vec::new();
            let mut test_y = Vec::new();
            for (pos, &idx) in order.iter().enumerate() {
                if pos % folds == fold {
                    test_x.push(xs[idx].clone());
                    test_y.push(ys[idx]);
                } else {
                    train_x.push(xs[idx].clone());
                    train_y.push(ys[idx]);
                }
            }
            if distinct_classes(&train_y) < 2 {
                continue;
            }
            let model = fit_logistic(&train_x, &train_y, c);
            acc_sum += model.accuracy(&test_x, &test_y);
        }
        let mean_acc = acc_sum / folds as f64;
        if mean_acc > best.1 {
            best = (ci, mean_acc);
        }
    }
    fit_logistic(xs, ys, grid[best.0])
}

/// One-vs-rest linear classifier on a single feature with a strongly
/// regularized logistic surrogate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneVsRestLinear {
    /// `(weight, bias)` per class.
    per_class: Vec<(f64, f64)>,
    pub degenerate: bool,
}

impl OneVsRestLinear {
    pub fn predict(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, &(w, b)) in self.per_class.iter().enumerate() {
            let s = w * x + b;
            if s > best_score {
                best_score = s;
                best = k;
            }
        }
        best
    }

    pub fn accuracy(&self, xs: &[f64], ys: &[usize]) -> f64 {
        let hits = xs
            .iter()
            .zip(ys)
            .filter(|(&x, &y)| self.predict(x) == y)
            .count();
        hits as f64 / xs.len().max(1) as f64
    }
}

/// Fit with inverse strength `c` (0.01 in the per-dimension score).
pub fn fit_linear_low_reg(xs: &[f64], ys: &[usize], c: f64) -> OneVsRestLinear {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let k = ys.iter().max().unwrap() + 1;
    if distinct_classes(ys) < 2 {
        let mut per_class = vec![(0.0, 0.0); k];
        per_class[ys[0]].1 = 1.0;
        return OneVsRestLinear {
            per_class,
            degenerate: true,
        };
    }
    let n = xs.len() as f64;
    let lambda = 1.0 / (c * n);
    let per_class = (0..k)
        .map(|cls| {
            let theta = lbfgs::minimize(vec![0.0, 0.0], 200, 1e-8, |t| {
                let (w, b) = (t[0], t[1]);
                let mut loss = 0.0;
                let mut gw = 0.0;
                let mut gb = 0.0;
                for (&x, &y) in xs.iter().zip(ys) {
                    let target = f64::from(u8::from(y == cls));
                    let z = w * x + b;
                    // log(1 + exp(z)) - target * z, stable form.
                    loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - target * z;
                    let p = if z >= 0.0 {
                        1.0 / (1.0 + (-z).exp())
                    } else {
                        let e = z.exp();
                        e / (1.0 + e)
                    };
                    gw += (p - target) * x;
                    gb += p - target;
                }
                loss = loss / n + 0.5 * lambda * w * w;
                ((loss), vec![gw / n + lambda * w, gb / n])
            });
            (theta[0], theta[1])
        })
        .collect();
    OneVsRestLinear {
        per_class,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn blobs(n: usize, rng: &mut SeededRng) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..n {
            let cls = rng.gen_range(0..2usize);
            let cx = if cls == 0 { -2.0 } else { 2.0 };
            xs.push(vec![
                cx + rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            ]);
            ys.push(cls);
        }
        (xs, ys)
    }

    #[test]
    fn separable_blobs_reach_full_accuracy() {
        let mut rng = seeded(21);
        let (xs, ys) = blobs(400, &mut rng);
        let model = fit_logistic_cv(&xs, &ys, 5, 10, &mut rng);
        assert_eq!(model.accuracy(&xs, &ys), 1.0);
    }

    #[test]
    fn labels_independent_of_features_sit_at_chance() {
        let mut rng = seeded(22);
        let xs: Vec<Vec<f64>> = (0..2000)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let ys: Vec<usize> = (0..2000).map(|_| rng.gen_range(0..2usize)).collect();
        let model = fit_logistic_cv(&xs, &ys, 5, 10, &mut rng);
        let acc = model.accuracy(&xs, &ys);
        assert!((acc - 0.5).abs() < 0.05, "acc {acc}");
    }

    #[test]
    fn duplicated_feature_column_matches_single_column_predictions() {
        let mut rng = seeded(23);
        let (xs, ys) = blobs(300, &mut rng);
        let dup: Vec<Vec<f64>> = xs
            .iter()
            .map(|r| vec![r[0], r[1], r[0], r[1]])
            .collect();
        let mut rng_a = seeded(77);
        let mut rng_b = seeded(77);
        let single = fit_logistic_cv(&xs, &ys, 5, 10, &mut rng_a);
        let doubled = fit_logistic_cv(&dup, &ys, 5, 10, &mut rng_b);
        for (x, xd) in xs.iter().zip(&dup) {
            assert_eq!(single.predict(x), doubled.predict(xd));
        }
    }

    #[test]
    fn single_class_labels_yield_flagged_degenerate_model() {
        let xs = vec![vec![0.0], vec![1.0], vec![2.0]];
        let ys = vec![3usize, 3, 3];
        let model = fit_logistic(&xs, &ys, 1.0);
        assert!(model.degenerate);
        assert_eq!(model.predict(&[0.5]), 3);
    }

    #[test]
    fn low_reg_feature_equal_to_class_index_is_learnable() {
        let mut rng = seeded(24);
        let ys: Vec<usize> = (0..4000).map(|_| rng.gen_range(0..4usize)).collect();
        let xs: Vec<f64> = ys.iter().map(|&y| y as f64).collect();
        let model = fit_linear_low_reg(&xs, &ys, 0.01);
        let acc = model.accuracy(&xs, &ys);
        assert!(acc >= 0.9, "acc {acc}");
    }

    #[test]
    fn low_reg_independent_feature_sits_at_chance() {
        let mut rng = seeded(25);
        let ys: Vec<usize> = (0..4000).map(|_| rng.gen_range(0..4usize)).collect();
        let xs: Vec<f64> = (0..4000).map(|_| rng.gen_range(0.0..1.0)).collect();
        let model = fit_linear_low_reg(&xs, &ys, 0.01);
        let acc = model.accuracy(&xs, &ys);
        assert!((acc - 0.25).abs() < 0.05, "acc {acc}");
    }

    #[test]
    fn rescaled_feature_keeps_dimension_ranking() {
        let mut rng = seeded(26);
        let ys: Vec<usize> = (0..2000).map(|_| rng.gen_range(0..4usize)).collect();
        let informative: Vec<f64> = ys.iter().map(|&y| y as f64).collect();
        let noise: Vec<f64> = (0..2000).map(|_| rng.gen_range(0.0..3.0)).collect();
        let acc_info = fit_linear_low_reg(&informative, &ys, 0.01).accuracy(&informative, &ys);
        let scaled: Vec<f64> = informative.iter().map(|&v| v * 10.0).collect();
        let acc_scaled = fit_linear_low_reg(&scaled, &ys, 0.01).accuracy(&scaled, &ys);
        let acc_noise = fit_linear_low_reg(&noise, &ys, 0.01).accuracy(&noise, &ys);
        assert!(acc_info > acc_noise);
        assert!(acc_scaled > acc_noise);
    }
}
