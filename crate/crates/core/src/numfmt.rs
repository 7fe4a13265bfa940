//! Text formatting for numeric output files.

/// Scientific notation with 17 significant digits; parses back to the
/// identical `f64`.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_and_one() {
        assert_eq!(real(0.0), "0.0000000000000000e0");
        assert_eq!(real(1.0), "1.0000000000000000e0");
    }

    proptest! {
        #[test]
        fn round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(real(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
