use super::EmbeddingVector;
use crate::error::{Error, Result};

/// Margin ranking loss over (anchor, positive, negatives) triplets.
///
/// `(1/M) Σ_i Σ_j max(0, margin + f(a_i, n_ij) − f(a_i, p_i))` where `f` is
/// the inner product of unit vectors and `M` the number of anchors. With
/// `symmetric`, the result is averaged with the same sum taken after
/// swapping each anchor and its positive. Value only; no gradients.
pub fn op_mnrl_loss(
    anchors: &[EmbeddingVector],
    positives: &[EmbeddingVector],
    negatives: &[Vec<EmbeddingVector>],
    margin: f64,
    symmetric: bool,
) -> Result<f64> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::invalid(format!("margin must be positive, got {margin}")));
    }
    if anchors.is_empty() {
        return Err(Error::EmptyInput("anchors"));
    }
    if positives.len() != anchors.len() || negatives.len() != anchors.len() {
        return Err(Error::LengthMismatch(format!(
            "{} anchors, {} positives, {} negative lists",
            anchors.len(),
            positives.len(),
            negatives.len()
        )));
    }
    if negatives.iter().all(Vec::is_empty) {
        return Err(Error::EmptyInput("negatives"));
    }

    let one_side = |pivot: &[EmbeddingVector], other: &[EmbeddingVector]| -> Result<f64> {
        let mut total = 0.0;
        for i in 0..pivot.len() {
            let pos = pivot[i].dot(&other[i])?;
            for neg in &negatives[i] {
                total += (margin + pivot[i].dot(neg)? - pos).max(0.0);
            }
        }
        Ok(total / pivot.len() as f64)
    };

    let forward = one_side(anchors, positives)?;
    if !symmetric {
        return Ok(forward);
    }
    let backward = one_side(positives, anchors)?;
    Ok(0.5 * (forward + backward))
}
