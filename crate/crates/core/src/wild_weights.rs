//! Two-point wild-bootstrap weights with prescribed second and third moments.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::WeightScheme;

/// Mean-zero two-point law: `w1` with probability `p_star`, else `w2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPointWeights {
    pub p_star: f64,
    pub w1: f64,
    pub w2: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Solves `E w = 0, E w^2 = c2, E w^3 = c3` over two-point laws.
///
/// `w1` is the rarer support point, positive for `c3 >= 0` and negative
/// otherwise.
pub fn solve_two_point(c2: f64, c3: f64) -> Result<TwoPointWeights> {
    if !(c2 > 0.0) || !c2.is_finite() || !c3.is_finite() {
        return Err(Error::InvalidMoment { c2, c3 });
    }
    let cube = 4.0 * c2 * c2 * c2;
    let denom = cube + c3 * c3;
    // 1/2 - 1/2 sqrt(c3^2 / denom), written without cancellation.
    let q = 0.5 * (cube / denom) / (1.0 + (c3 * c3 / denom).sqrt());
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::InvalidMoment { c2, c3 });
    }
    // The law with moments (c2, -c3) is the mirror image of (c2, c3); keeping
    // the rare point first avoids storing 1 - q for tiny q.
    let sign = if c3 >= 0.0 { 1.0 } else { -1.0 };
    Ok(TwoPointWeights {
        p_star: q,
        w1: sign * ((1.0 - q) / q * c2).sqrt(),
        w2: -sign * (q / (1.0 - q) * c2).sqrt(),
        c2,
        c3,
    })
}

/// Bias-corrected target moments for a dimension with `n` levels.
pub fn corrected_moments(n: u64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::SampleTooSmall(n));
    }
    let n = n as f64;
    Ok((n / (n - 1.0), n * n / ((n - 2.0) * (n - 1.0))))
}

impl TwoPointWeights {
    /// Mammen's law, `c2 = c3 = 1`.
    pub fn mammen() -> Self {
        solve_two_point(1.0, 1.0).expect("Mammen moments are valid")
    }

    /// Weights for a dimension of size `n` under `scheme`. The moment
    /// correction needs `n >= 3`; smaller dimensions use Mammen's law.
    pub fn for_dimension(scheme: WeightScheme, n: usize) -> Self {
        match scheme {
            WeightScheme::Mammen => Self::mammen(),
            WeightScheme::MomentCorrected => match corrected_moments(n as u64) {
                Ok((c2, c3)) => solve_two_point(c2, c3).expect("corrected moments are valid"),
                Err(_) => Self::mammen(),
            },
        }
    }

    /// `(E w, E w^2, E w^3)` evaluated from the support and probabilities.
    pub fn moments(&self) -> (f64, f64, f64) {
        let (p, q) = (self.p_star, 1.0 - self.p_star);
        (
            p * self.w1 + q * self.w2,
            p * self.w1 * self.w1 + q * self.w2 * self.w2,
            p * self.w1.powi(3) + q * self.w2.powi(3),
        )
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.p_star {
            self.w1
        } else {
            self.w2
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, out: &mut [f64], rng: &mut R) {
        for w in out {
            *w = self.draw(rng);
        }
    }
}

/// `count` i.i.d. draws from `dist`.
pub fn sample_weights<R: Rng + ?Sized>(dist: &TwoPointWeights, count: usize, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; count];
    dist.fill(&mut out, rng);
    out
}
