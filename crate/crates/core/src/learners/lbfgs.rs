//! Limited-memory BFGS with Armijo backtracking, for the convex fits in
//! this module. Deterministic: no randomness, fixed iteration order.

/// Minimize `f`, which must return (value, gradient), starting from `x0`.
pub fn minimize(
    x0: Vec<f64>,
    max_iters: usize,
    grad_tol: f64,
    f: impl Fn(&[f64]) -> (f64, Vec<f64>),
) -> Vec<f64> {
    const HISTORY: usize = 8;
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut gx) = f(&x);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();

    for _ in 0..max_iters {
        let gnorm = gx.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if gnorm < grad_tol {
            break;
        }
        // Two-loop recursion for the search direction.
        let mut q = gx.clone();
        let k = s_hist.len();
        let mut alphas = vec![0.0; k];
        for i in (0..k).rev() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let a = rho * dot(&s_hist[i], &q);
            alphas[i] = a;
            axpy(&mut q, -a, &y_hist[i]);
        }
        let gamma = if k > 0 {
            dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1])
        } else {
            1.0
        };
        for v in q.iter_mut() {
            *v *= gamma;
        }
        for i in 0..k {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let beta = rho * dot(&y_hist[i], &q);
            axpy(&mut q, alphas[i] - beta, &s_hist[i]);
        }
        let dir: Vec<f64> = q.iter().map(|&v| -v).collect();

        // Armijo backtracking.
        let slope = dot(&gx, &dir);
        if slope >= 0.0 {
            // Not a descent direction (stale curvature); fall back to -g.
            s_hist.clear();
            y_hist.clear();
            continue;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut xt = x.clone();
            axpy(&mut xt, t, &dir);
            let (ft, gt) = f(&xt);
            if ft <= fx + 1e-4 * t * slope {
                accepted = Some((xt, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((xt, ft, gt)) = accepted else { break };

        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gt.iter().zip(&gx).map(|(a, b)| a - b).collect();
        if dot(&s, &yv) > 1e-12 {
            if s_hist.len() == HISTORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(yv);
        }
        x = xt;
        fx = ft;
        gx = gt;
        debug_assert_eq!(x.len(), n);
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
