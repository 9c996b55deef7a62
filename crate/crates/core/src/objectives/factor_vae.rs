//! Density-ratio total-correlation penalty: a two-class discriminator
//! separates joint posterior samples from dimension-wise shuffled ones,
//! and its logit difference estimates the total correlation.

use crate::autodiff::{Graph, MlpSpec, NodeId, Tensor};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Logit column 0 scores "from the joint q(z)", column 1 "from the
/// product of marginals".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Discriminator {
    pub hidden: Vec<usize>,
    pub params: Vec<Tensor>,
}

impl Discriminator {
    pub fn spec(hidden: &[usize]) -> MlpSpec {
        MlpSpec::leaky_stack(hidden, 2)
    }

    pub fn init(latent_dim: usize, hidden: &[usize], rng: &mut SeededRng) -> Self {
        Discriminator {
            hidden: hidden.to_vec(),
            params: Discriminator::spec(hidden).init_params(latent_dim, rng),
        }
    }

    pub fn mlp_spec(&self) -> MlpSpec {
        Discriminator::spec(&self.hidden)
    }
}

/// Independently permute every latent column; samples of the product of
/// marginals from samples of the joint.
pub fn shuffle_columns(z: &Tensor, rng: &mut SeededRng) -> Tensor {
    let (b, d) = (z.rows(), z.cols());
    let mut out = z.clone();
    for col in 0..d {
        // Fisher-Yates per column.
        let mut perm: Vec<usize> = (0..b).collect();
        for i in (1..b).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        for (row, &src) in perm.iter().enumerate() {
            out.set(row, col, z.at(src, col));
        }
    }
    out
}

/// gamma * mean(logit_joint - logit_marginal) on the given codes; the
/// discriminator parameters enter as constants so only the codes carry
/// gradient.
pub fn tc_penalty_node(
    g: &mut Graph,
    disc: &Discriminator,
    z: NodeId,
    gamma: f64,
) -> Result<NodeId> {
    let param_ids: Vec<NodeId> = disc.params.iter().map(|t| g.constant(t.clone())).collect();
    let logits = disc.mlp_spec().apply_graph(g, &param_ids, z)?;
    let joint = g.col(logits, 0);
    let marginal = g.col(logits, 1);
    let diff = g.sub(joint, marginal);
    let mean = g.mean_all(diff);
    Ok(g.mul_scalar(mean, gamma))
}

/// Two-class softmax cross-entropy for the discriminator: codes from the
/// joint labelled class 0, shuffled codes class 1. Returns the scalar
/// loss node; the caller owns which leaves are trainable.
pub fn discriminator_loss_node(
    g: &mut Graph,
    disc_param_ids: &[NodeId],
    spec: &MlpSpec,
    z_joint: NodeId,
    z_shuffled: NodeId,
) -> Result<NodeId> {
    if g.value(z_joint).rows() < 2 {
        return Err(Error::usage(
            "density-ratio step needs a batch of at least 2",
        ));
    }
    let ce_of = |g: &mut Graph, z: NodeId, class: usize| -> Result<NodeId> {
        let logits = spec.apply_graph(g, disc_param_ids, z)?;
        let lse = g.logsumexp_rows(logits);
        let target = g.col(logits, class);
        let ce = g.sub(lse, target);
        Ok(g.mean_all(ce))
    };
    let joint_ce = ce_of(g, z_joint, 0)?;
    let shuffled_ce = ce_of(g, z_shuffled, 1)?;
    let sum = g.add(joint_ce, shuffled_ce);
    Ok(g.mul_scalar(sum, 0.5))
}
