use super::MetricError;

/// Temperature used for modal representativeness.
pub const DEFAULT_MODAL_TEMPERATURE: f64 = 1e-3;

/// Sharpens (T < 1) or flattens (T > 1) a distribution: `p_i ∝ p_i^(1/T)`.
///
/// Computed in log space with max subtraction; zero entries stay zero.
pub fn temperature_scale(probs: &[f64], temperature: f64) -> Result<Vec<f64>, MetricError> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(MetricError::BadTemperature(temperature));
    }
    let logits: Vec<Option<f64>> = probs.iter().map(|&p| (p > 0.0).then(|| p.ln() / temperature)).collect();
    let Some(max) = logits.iter().flatten().copied().reduce(f64::max) else {
        return Ok(probs.to_vec());
    };
    let scaled: Vec<f64> = logits.iter().map(|l| l.map_or(0.0, |l| (l - max).exp())).collect();
    let total: f64 = scaled.iter().sum();
    Ok(scaled.into_iter().map(|s| s / total).collect())
}

/// Shannon entropy in nats, with 0 ln 0 = 0.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_is_fixed_point() {
        for t in [1e-3, 0.5, 1.0, 7.0] {
            let out = temperature_scale(&[0.25; 4], t).unwrap();
            assert!(out.iter().all(|p| (p - 0.25).abs() < 1e-12), "{t}: {out:?}");
        }
    }

    #[test]
    fn half_temperature_squares() {
        // [0.36, 0.16] / 0.52
        let out = temperature_scale(&[0.6, 0.4], 0.5).unwrap();
        assert!((out[0] - 0.36 / 0.52).abs() < 1e-12);
        assert!((out[1] - 0.16 / 0.52).abs() < 1e-12);
    }

    #[test]
    fn near_zero_temperature_collapses_to_mode() {
        let out = temperature_scale(&[0.6, 0.4], 1e-3).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-12);
        assert!(out[1] < 1e-12);
    }

    #[test]
    fn zeros_stay_zero() {
        let out = temperature_scale(&[0.0, 0.7, 0.3], 0.1).unwrap();
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn rejects_nonpositive_temperature() {
        assert_eq!(
            temperature_scale(&[0.5, 0.5], 0.0),
            Err(MetricError::BadTemperature(0.0))
        );
        assert!(temperature_scale(&[0.5, 0.5], -1.0).is_err());
        assert!(temperature_scale(&[0.5, 0.5], f64::NAN).is_err());
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[0.0, 1.0, 0.0]), 0.0);
        assert!((entropy(&[0.25; 4]) - 4f64.ln()).abs() < 1e-12);
        assert!((entropy(&[0.5, 0.5, 0.0, 0.0]) - 2f64.ln()).abs() < 1e-12);
    }

    fn simplex(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 2..=max_len).prop_filter_map("nonzero", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn unit_temperature_is_identity(p in simplex(6)) {
            let out = temperature_scale(&p, 1.0).unwrap();
            for (a, b) in p.iter().zip(&out) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn argmax_preserved(p in simplex(6), t in 1e-3f64..10.0) {
            let out = temperature_scale(&p, t).unwrap();
            let argmax = |v: &[f64]| v.iter().enumerate().fold(0, |b, (i, x)| if *x > v[b] { i } else { b });
            prop_assert_eq!(out[argmax(&p)], out.iter().cloned().fold(f64::MIN, f64::max));
            let s: f64 = out.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn low_temperature_tends_to_uniform_over_argmax(p in simplex(5)) {
            let max = p.iter().cloned().fold(f64::MIN, f64::max);
            let ties: Vec<usize> = (0..p.len()).filter(|&i| p[i] == max).collect();
            // Gap to the runner-up must be resolvable at this temperature.
            let runner = p.iter().cloned().filter(|&x| x < max).fold(0.0, f64::max);
            prop_assume!(runner == 0.0 || (max / runner).ln() > 0.05);
            let out = temperature_scale(&p, 1e-3).unwrap();
            for i in 0..p.len() {
                let want = if ties.contains(&i) { 1.0 / ties.len() as f64 } else { 0.0 };
                prop_assert!((out[i] - want).abs() < 1e-9, "{:?} -> {:?}", p, out);
            }
        }
    }
}
