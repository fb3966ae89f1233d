//! Small numeric helpers: deterministic summation, seed mixing, formatting.

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// slice length, so the result is reproducible bit for bit.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one well-mixed 64-bit seed.
pub fn hash_seed(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x5EED_0F0E_5EEDu64, |acc, &w| mix64(acc ^ mix64(w)))
}

/// Seed of one grid cell trial, `hash(base_seed, N, p, trial)`.
pub fn trial_seed(base_seed: u64, n: usize, p: f64, trial: usize) -> u64 {
    hash_seed(&[base_seed, n as u64, p.to_bits(), trial as u64])
}

/// Formats `x` with `digits` significant digits, `%g` style.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -5 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        format!("{}e{}", trim_zeros(mantissa), e)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn seeds_differ_per_coordinate() {
        let a = trial_seed(1, 16, 0.5, 0);
        assert_ne!(a, trial_seed(1, 16, 0.5, 1));
        assert_ne!(a, trial_seed(1, 32, 0.5, 0));
        assert_ne!(a, trial_seed(1, 16, 0.25, 0));
        assert_ne!(a, trial_seed(2, 16, 0.5, 0));
        assert_eq!(a, trial_seed(1, 16, 0.5, 0));
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.1, 12), "0.1");
        assert_eq!(format_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_sig(1024.0, 12), "1024");
        assert_eq!(format_sig(-2.5e-9, 12), "-2.5e-9");
        assert_eq!(format_sig(0.0, 12), "0");
        assert_eq!(format_sig(123456789012345.0, 12), "1.23456789012e14");
    }
}
