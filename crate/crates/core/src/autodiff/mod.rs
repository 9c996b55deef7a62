//! Minimal reverse-mode automatic differentiation, dense layers, and Adam.

pub mod adam;
pub mod fd;
pub mod graph;
pub mod nn;
pub mod tensor;

pub use adam::{AdamParams, AdamState};
pub use graph::{Gradients, Graph, NodeId};
pub use nn::{Activation, MlpSpec, LEAKY_RELU_SLOPE};
pub use tensor::Tensor;

#[cfg(test)]
mod tests {
    use super::fd::{finite_difference_gradients, max_relative_error};
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    #[test]
    fn square_gradient() {
        let mut g = Graph::new();
        let w = g.param(Tensor::scalar(3.0));
        let loss = g.square(w);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.wrt(&g, w).data(), &[6.0]);
    }

    #[test]
    fn disconnected_parameter_gets_exact_zero() {
        let mut g = Graph::new();
        let w = g.param(Tensor::scalar(3.0));
        let unused = g.param(Tensor::vector(vec![1.0, 2.0]));
        let loss = g.square(w);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.wrt(&g, unused).data(), &[0.0, 0.0]);
        assert!(grads.get(unused).is_none());
    }

    #[test]
    fn non_scalar_loss_is_usage_error() {
        let mut g = Graph::new();
        let w = g.param(Tensor::vector(vec![1.0, 2.0]));
        let y = g.square(w);
        assert!(g.backward(y).is_err());
    }

    /// Bernoulli reconstruction loss on a small random MLP, checked
    /// against central finite differences.
    #[test]
    fn mlp_bernoulli_loss_matches_finite_differences() {
        let mut rng = seeded(42);
        let spec = MlpSpec::relu_stack(&[5, 4], 3);
        let params = spec.init_params(4, &mut rng);
        let x = Tensor::uniform(vec![2, 4], 1.0, &mut rng);
        let target = Tensor::new(
            vec![2, 3],
            vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.5],
        )
        .unwrap();

        let build = |ps: &[Tensor]| -> (Graph, Vec<NodeId>, NodeId) {
            let mut g = Graph::new();
            let pids: Vec<NodeId> = ps.iter().map(|p| g.param(p.clone())).collect();
            let xin = g.constant(x.clone());
            let logits = spec.apply_graph(&mut g, &pids, xin).unwrap();
            let t = g.constant(target.clone());
            let sp = g.softplus(logits);
            let lx = g.mul(logits, t);
            let per_pixel = g.sub(sp, lx);
            let per_row = g.sum_rows(per_pixel);
            let loss = g.mean_all(per_row);
            (g, pids, loss)
        };

        let (g, pids, loss) = build(&params);
        let grads = g.backward(loss).unwrap();
        let analytic: Vec<Tensor> = pids.iter().map(|&p| grads.wrt(&g, p)).collect();

        let numeric = finite_difference_gradients(&params, 1e-5, |ps| {
            let (g, _, loss) = build(ps);
            g.value(loss).scalar_value()
        });

        for (a, n) in analytic.iter().zip(&numeric) {
            assert!(
                max_relative_error(a, n) < 1e-4,
                "rel err {}",
                max_relative_error(a, n)
            );
        }
    }

    #[test]
    fn logsumexp_is_stable_and_correct() {
        let mut g = Graph::new();
        let a = g.param(
            Tensor::matrix(1, 3, vec![-1e13, -1e13 + 2.0, -1e13 + 1.0]).unwrap(),
        );
        let l = g.logsumexp_rows(a);
        let v = g.value(l).data()[0];
        assert!(v.is_finite());
        // lse(x) = max + ln(sum exp(x - max))
        let expect = -1e13 + 2.0 + ((-2.0f64).exp() + 1.0 + (-1.0f64).exp()).ln();
        assert!((v - expect).abs() < 1e-6);
    }

    proptest! {
        /// Linearity: grad of (f + g) equals grad f + grad g.
        #[test]
        fn gradient_of_sum_is_sum_of_gradients(vals in proptest::collection::vec(-2.0f64..2.0, 4)) {
            let build = |which: u8| -> (Graph, NodeId, NodeId) {
                let mut g = Graph::new();
                let w = g.param(Tensor::vector(vals.clone()));
                let sq = g.square(w);
                let f = g.sum_all(sq);
                let e = g.exp(w);
                let h = g.mean_all(e);
                let loss = match which {
                    0 => f,
                    1 => h,
                    _ => g.add(f, h),
                };
                (g, w, loss)
            };
            let (g0, w0, l0) = build(0);
            let (g1, w1, l1) = build(1);
            let (g2, w2, l2) = build(2);
            let ga = g0.backward(l0).unwrap().wrt(&g0, w0);
            let gb = g1.backward(l1).unwrap().wrt(&g1, w1);
            let gc = g2.backward(l2).unwrap().wrt(&g2, w2);
            for i in 0..vals.len() {
                prop_assert!((gc.data()[i] - (ga.data()[i] + gb.data()[i])).abs() < 1e-12);
            }
        }

        /// Determinism: identical inputs give bit-identical outputs and grads.
        #[test]
        fn forward_backward_deterministic(seed in 0u64..1000) {
            let run = || {
                let mut rng = seeded(seed);
                let spec = MlpSpec::relu_stack(&[4], 2);
                let params = spec.init_params(3, &mut rng);
                let x = Tensor::uniform(vec![2, 3], 1.0, &mut rng);
                let mut g = Graph::new();
                let pids: Vec<NodeId> = params.iter().map(|p| g.param(p.clone())).collect();
                let xin = g.constant(x);
                let y = spec.apply_graph(&mut g, &pids, xin).unwrap();
                let sq = g.square(y);
                let loss = g.mean_all(sq);
                let grads = g.backward(loss).unwrap();
                let gv: Vec<Vec<f64>> = pids.iter().map(|&p| grads.wrt(&g, p).data().to_vec()).collect();
                (g.value(loss).scalar_value(), gv)
            };
            let (l1, g1) = run();
            let (l2, g2) = run();
            prop_assert!(l1.to_bits() == l2.to_bits());
            prop_assert_eq!(g1, g2);
        }
    }
}
