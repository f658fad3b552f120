use autodiff::{Element, Tensor};

use crate::error::DataError;

/// One-hot encodes a DNA string into a `[4 x T]` tensor with channel order
/// A, C, G, T. Case-insensitive; `N` spreads uniform mass 0.25 over all four
/// channels. Any other character is an error naming its position.
pub fn one_hot_encode<F: Element>(sequence: &str) -> Result<Tensor<F>, DataError> {
    let t_len = sequence.chars().count();
    let mut values = vec![F::zero(); 4 * t_len];
    let quarter = F::from_f64_c(0.25);
    for (pos, ch) in sequence.chars().enumerate() {
        match ch.to_ascii_uppercase() {
            'A' => values[pos] = F::one(),
            'C' => values[t_len + pos] = F::one(),
            'G' => values[2 * t_len + pos] = F::one(),
            'T' => values[3 * t_len + pos] = F::one(),
            'N' => {
                for c in 0..4 {
                    values[c * t_len + pos] = quarter;
                }
            }
            other => {
                return Err(DataError::Encoding {
                    position: pos,
                    character: other,
                })
            }
        }
    }
    Ok(Tensor::new(vec![4, t_len], values, false).expect("shape consistent"))
}
