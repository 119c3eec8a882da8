use super::model::{ClassifierModel, Gradients};
use crate::error::{Error, Result};

/// Heavy-ball momentum buffer. The velocity is allocated lazily on the first
/// step and cleared by [`MomentumState::reset`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    coefficient: f64,
    velocity: Option<Gradients>,
}

impl MomentumState {
    pub fn new(coefficient: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&coefficient) {
            return Err(Error::Range {
                name: "momentum",
                value: coefficient,
                range: "[0, 1)",
            });
        }
        Ok(MomentumState {
            coefficient,
            velocity: None,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn reset(&mut self) {
        self.velocity = None;
    }

    pub fn velocity(&self) -> Option<&Gradients> {
        self.velocity.as_ref()
    }
}

/// One SGD update: `p ← p − lr·g`, or with momentum `v ← μv + g`,
/// `p ← p − lr·v`.
pub fn sgd_step(
    params: &mut ClassifierModel,
    grads: &Gradients,
    learning_rate: f64,
    momentum: Option<&mut MomentumState>,
) -> Result<()> {
    if !params.same_shape(grads) {
        return Err(Error::dim("gradient layout does not match parameters"));
    }
    let step = match momentum {
        None => grads,
        Some(state) => {
            let mu = state.coefficient;
            let v = state.velocity.get_or_insert_with(|| grads.zeros_like());
            for ((_, vb), (_, gb)) in v.blocks_mut().into_iter().zip(grads.blocks()) {
                for (vi, gi) in vb.as_mut_slice().iter_mut().zip(gb.as_slice()) {
                    *vi = mu * *vi + gi;
                }
            }
            &*v
        }
    };
    for ((_, pb), (_, sb)) in params.blocks_mut().into_iter().zip(step.blocks()) {
        for (pi, si) in pb.as_mut_slice().iter_mut().zip(sb.as_slice()) {
            *pi -= learning_rate * si;
        }
    }
    Ok(())
}
