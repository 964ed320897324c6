/// Fixed-point rendering with ten significant digits, falling back to
/// scientific notation for very large or very small magnitudes.
pub fn sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-6..=15).contains(&exp) {
        return format!("{x:.9e}");
    }
    let decimals = (9 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit (9.9999999999 -> 10.00000000)
    let digits = s.chars().filter(char::is_ascii_digit).collect::<String>();
    if digits.trim_start_matches('0').len() > 10 && decimals > 0 {
        let decimals = decimals - 1;
        return format!("{x:.decimals$}");
    }
    s
}

/// One CSV line from preformatted cells.
pub fn csv_row<I, S>(cells: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut line = cells
        .into_iter()
        .map(|c| c.as_ref().to_string())
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(sig10(5.0), "5.000000000");
        assert_eq!(sig10(23.0 / 3.0), "7.666666667");
        assert_eq!(sig10(std::f64::consts::LOG2_10), "3.321928095");
        assert_eq!(sig10(0.0123456789012), "0.01234567890");
        assert_eq!(sig10(100000.0), "100000.0000");
        assert_eq!(sig10(9.99999999999), "10.00000000");
        assert_eq!(sig10(-2.5), "-2.500000000");
        assert_eq!(sig10(0.0), "0");
        assert_eq!(sig10(1.5e-9), "1.500000000e-9");
    }
}
