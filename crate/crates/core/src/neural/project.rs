//! Projection onto the restricted parameter set: every fan-in weight row of
//! every layer has L1 norm at most `α`.

use crate::error::{Error, Result};
use crate::neural::Network;

fn l1(row: &[f64]) -> f64 {
    row.iter().map(|w| w.abs()).sum()
}

/// Rescales one row in place so its (computed) L1 norm is at most `alpha`.
/// Returns whether the row changed.
pub fn project_row(row: &mut [f64], alpha: f64) -> bool {
    let norm = l1(row);
    if norm <= alpha {
        return false;
    }
    let scale = alpha / norm;
    row.iter_mut().for_each(|w| *w *= scale);
    // rounding can leave the recomputed norm a few ulps above alpha
    while l1(row) > alpha {
        row.iter_mut().for_each(|w| *w *= 1.0 - f64::EPSILON);
    }
    true
}

/// In-place version of [`project_restricted`].
pub fn project_in_place(net: &mut Network, alpha: f64) -> Result<()> {
    if !(alpha >= 1.0) {
        return Err(Error::Config(format!("restriction α must be at least 1, got {alpha}")));
    }
    for layer in &mut net.layers {
        for r in 0..layer.outputs {
            project_row(layer.row_mut(r), alpha);
        }
    }
    Ok(())
}

/// Copy of `net` with every weight row scaled into the L1 ball of radius `α`.
/// Feasible rows are left bit-for-bit unchanged.
pub fn project_restricted(net: &Network, alpha: f64) -> Result<Network> {
    let mut out = net.clone();
    project_in_place(&mut out, alpha)?;
    Ok(out)
}

/// Largest fan-in row L1 norm over all layers.
pub fn max_row_l1(net: &Network) -> f64 {
    net.layers
        .iter()
        .flat_map(|l| (0..l.outputs).map(move |r| l1(l.row(r))))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_row_example() {
        let mut net = Network::zeros(&[2, 1], None).unwrap();
        net.layers[0].weights = vec![3.0, -1.0];
        let p = project_restricted(&net, 2.0).unwrap();
        assert_eq!(p.layers[0].weights, vec![1.5, -0.5]);
        assert_eq!(max_row_l1(&p), 2.0);
    }

    #[test]
    fn rejects_small_alpha() {
        let net = Network::zeros(&[2, 1], None).unwrap();
        assert!(matches!(project_restricted(&net, 0.5), Err(Error::Config(_))));
    }

    proptest! {
        #[test]
        fn projection_is_feasible_idempotent_and_fixes_feasible_rows(
            seed in 0u64..1000,
            alpha in 1.0f64..6.0,
            scale in 0.1f64..5.0,
        ) {
            let mut net = Network::init(&[7, 9, 3], None, seed).unwrap();
            net.layers.iter_mut().for_each(|l| l.weights.iter_mut().for_each(|w| *w *= scale));
            let once = project_restricted(&net, alpha).unwrap();
            let twice = project_restricted(&once, alpha).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(max_row_l1(&once) <= alpha);
            for (a, b) in net.layers.iter().zip(&once.layers) {
                prop_assert_eq!(&a.biases, &b.biases);
                for r in 0..a.outputs {
                    let before = l1(a.row(r));
                    let after = l1(b.row(r));
                    prop_assert!(after <= before);
                    if before <= alpha {
                        prop_assert_eq!(a.row(r), b.row(r));
                    }
                }
            }
        }
    }
}
