use rand::seq::SliceRandom;

use crate::engine::EpisodeTrace;
use crate::error::{Error, Result};
use crate::fsum::fsum;
use crate::rng;

/// Seeded two-sided permutation test settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationTest {
    pub permutations: usize,
    pub seed: u64,
}

impl Default for PermutationTest {
    fn default() -> Self {
        Self { permutations: 10_000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub variable: String,
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

fn centred(v: &[f64]) -> Vec<f64> {
    let m = fsum(v.iter().copied()) / v.len() as f64;
    v.iter().map(|x| x - m).collect()
}

fn check(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!("{} x values, {} y values", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientSamples { required: 3, got: xs.len() });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::UndefinedCorrelation("non-finite sample"));
    }
    Ok(())
}

/// Centred series and their sums of squares.
fn moments(xs: &[f64], ys: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    check(xs, ys)?;
    let (dx, dy) = (centred(xs), centred(ys));
    let sxx = fsum(dx.iter().map(|d| d * d));
    let syy = fsum(dy.iter().map(|d| d * d));
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("x is constant"));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("y is constant"));
    }
    Ok((dx, dy, (sxx * syy).sqrt()))
}

/// Pearson correlation coefficient.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let (dx, dy, denom) = moments(xs, ys)?;
    Ok((fsum(dx.iter().zip(&dy).map(|(a, b)| a * b)) / denom).clamp(-1.0, 1.0))
}

/// Pearson `r` with a two-sided permutation p-value
/// `(1 + #{|r_perm| >= |r|}) / (1 + permutations)`.
pub fn pearson(xs: &[f64], ys: &[f64], test: PermutationTest) -> Result<Correlation> {
    let r = pearson_r(xs, ys)?;
    let (dx, mut dy, denom) = moments(xs, ys)?;
    // Relative slack so permutations that reproduce the observed pairing
    // count as ties despite summation-order rounding.
    let threshold = r.abs() * (1.0 - 1e-12);
    let mut rng = rng::stream(test.seed, &[]);
    let mut extreme = 0usize;
    for _ in 0..test.permutations {
        dy.shuffle(&mut rng);
        let rp: f64 = dx.iter().zip(&dy).map(|(a, b)| a * b).sum::<f64>() / denom;
        if rp.abs() >= threshold {
            extreme += 1;
        }
    }
    let p = (1 + extreme) as f64 / (1 + test.permutations) as f64;
    Ok(Correlation { r, p, n: xs.len() })
}

/// Variables correlated against total abatement cost, in output order.
pub const CORRELATION_VARIABLES: [&str; 4] = ["capital", "tfp", "carbon_intensity", "gross_output"];

/// Correlate each region's total abatement cost over an episode with its
/// initial capital, initial productivity, initial carbon intensity and total
/// gross output, pooling regions across the ensemble.
///
/// One result per variable in [`CORRELATION_VARIABLES`] order; a variable
/// that is constant across the pool yields its own error without hiding the
/// others.
pub fn abatement_correlations(traces: &[EpisodeTrace], test: PermutationTest) -> Vec<Result<CorrelationResult>> {
    let mut cost = Vec::new();
    let mut cols: [Vec<f64>; 4] = Default::default();
    for t in traces {
        cost.extend(t.per_region_total(|r| r.abatement_cost));
        let output = t.per_region_total(|r| r.gross_output);
        for (i, s) in t.initial_regions.iter().enumerate() {
            cols[0].push(s.capital);
            cols[1].push(s.tfp);
            cols[2].push(s.carbon_intensity);
            cols[3].push(output[i]);
        }
    }
    CORRELATION_VARIABLES
        .iter()
        .zip(&cols)
        .enumerate()
        .map(|(k, (name, xs))| {
            let c = pearson(xs, &cost, PermutationTest { seed: rng::derive_seed(test.seed, k as u64), ..test })?;
            Ok(CorrelationResult { variable: name.to_string(), r: c.r, p: c.p, n: c.n })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_series_are_exact() {
        let x: Vec<f64> = (0..10).map(|i| (i as f64).sin() * 3.7 + 0.1).collect();
        let twice: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson_r(&x, &twice).unwrap(), 1.0);
        assert_eq!(pearson_r(&x, &neg).unwrap(), -1.0);
        assert_eq!(pearson_r(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::UndefinedCorrelation(_))));
        assert!(matches!(pearson_r(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::InsufficientSamples { .. })));
        assert!(pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn permutation_p_is_small_for_strong_signal_and_large_for_noise() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 0.5 + (v * 7.3).sin()).collect();
        let c = pearson(&x, &y, PermutationTest { permutations: 2000, seed: 1 }).unwrap();
        assert!(c.p < 0.01, "{c:?}");
        // Under the null the p-value is close to uniform: about 5% of
        // independent noise series fall below .05.
        let mut rejections = 0;
        for k in 0..200 {
            let mut r = rng::stream(99, &[k]);
            let noise: Vec<f64> = x.iter().map(|_| rand::Rng::random::<f64>(&mut r)).collect();
            let t = PermutationTest { permutations: 500, seed: k };
            let c = pearson(&x, &noise, t).unwrap();
            assert_eq!(pearson(&x, &noise, t).unwrap(), c);
            rejections += usize::from(c.p < 0.05);
        }
        assert!((3..=20).contains(&rejections), "{rejections} of 200");
    }

    proptest! {
        #[test]
        fn bounded_and_symmetric(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..40)) {
            let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            if let Ok(r) = pearson_r(&x, &y) {
                prop_assert!(r.abs() <= 1.0);
                prop_assert_eq!(r, pearson_r(&y, &x).unwrap());
            }
        }
    }
}
