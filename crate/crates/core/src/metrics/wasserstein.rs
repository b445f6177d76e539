use super::MetricError;

/// 1-Wasserstein distance between two probability vectors sharing a support.
///
/// Uses the 1-D closed form: the integral of |F1 - F2| over the sorted
/// support, where F1 and F2 are the cumulative distributions. Support values
/// need not be sorted or distinct; mass on equal values is pooled.
pub fn wasserstein_1d(d1: &[f64], d2: &[f64], support: &[f64]) -> Result<f64, MetricError> {
    if d1.len() != support.len() || d2.len() != support.len() {
        return Err(MetricError::SupportMismatch(format!(
            "lengths {} and {} against support of {}",
            d1.len(),
            d2.len(),
            support.len()
        )));
    }
    if support.iter().any(|v| !v.is_finite()) {
        return Err(MetricError::SupportMismatch("non-finite support value".into()));
    }
    let mut order: Vec<usize> = (0..support.len()).collect();
    order.sort_by(|&a, &b| support[a].total_cmp(&support[b]));

    let mut cdf1 = 0.0;
    let mut cdf2 = 0.0;
    let mut total = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        cdf1 += d1[i];
        cdf2 += d2[i];
        if let Some(&next) = order.get(pos + 1) {
            let gap = support[next] - support[i];
            if gap > 0.0 {
                total += (cdf1 - cdf2).abs() * gap;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUPPORT4: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

    #[test]
    fn identical_is_zero() {
        let d = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(wasserstein_1d(&d, &d, &SUPPORT4).unwrap(), 0.0);
    }

    #[test]
    fn extreme_point_masses() {
        let a = [1.0, 0.0, 0.0, 0.0];
        let b = [0.0, 0.0, 0.0, 1.0];
        assert_eq!(wasserstein_1d(&a, &b, &SUPPORT4).unwrap(), 3.0);
    }

    #[test]
    fn split_halves() {
        // Frozen from the LP transport oracle in tests/wasserstein_oracle.rs.
        let a = [0.5, 0.5, 0.0, 0.0];
        let b = [0.0, 0.0, 0.5, 0.5];
        assert!((wasserstein_1d(&a, &b, &SUPPORT4).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unsorted_hedge_support() {
        // {VG, VB, Neither} at {1, 2, 1.5}: moving all mass from VG to Neither costs 0.5.
        let a = [1.0, 0.0, 0.0];
        let b = [0.0, 0.0, 1.0];
        assert!((wasserstein_1d(&a, &b, &[1.0, 2.0, 1.5]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mismatched_lengths() {
        assert!(matches!(
            wasserstein_1d(&[1.0], &[0.5, 0.5], &[1.0, 2.0]),
            Err(MetricError::SupportMismatch(_))
        ));
    }
}
