/// Decimal with 17 significant digits; parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.0, 1.0, 0.1, 1.0 / 3.0, 2.753_624_118_606_233_6e-89, -7.25] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
