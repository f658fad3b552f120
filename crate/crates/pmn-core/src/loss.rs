use autodiff::{Element, Tape, Var};

use crate::error::ModelError;

/// Positive binary cross entropy summed over labels; predictions are clamped
/// to `[1e-7, 1-1e-7]` inside the op before the logs.
pub fn classification_loss<F: Element>(
    tape: &mut Tape<F>,
    y_hat: Var,
    targets: &[F],
) -> Result<Var, ModelError> {
    Ok(tape.bce_loss(y_hat, targets)?)
}

/// Squared mismatch between the final attention weights and the labels,
/// summed over labels. This is what ties each prototype to its label.
pub fn prototype_matching_loss<F: Element>(
    tape: &mut Tape<F>,
    w_final: Var,
    targets: &[F],
) -> Result<Var, ModelError> {
    Ok(tape.squared_error_loss(w_final, targets)?)
}

/// The minimized objective: classification loss plus `lambda` times the
/// prototype-matching loss. At `lambda = 0` (or without attention weights)
/// this returns the classification loss itself, bit for bit.
pub fn total_loss<F: Element>(
    tape: &mut Tape<F>,
    y_hat: Var,
    w_final: Option<Var>,
    targets: &[F],
    lambda: f64,
) -> Result<Var, ModelError> {
    let classify = classification_loss(tape, y_hat, targets)?;
    let w_final = match w_final {
        Some(w) if lambda > 0.0 => w,
        _ => return Ok(classify),
    };
    let matching = prototype_matching_loss(tape, w_final, targets)?;
    let weighted = tape.scale(matching, F::from_f64_c(lambda));
    Ok(tape.add(classify, weighted)?)
}
