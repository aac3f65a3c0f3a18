use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MaskedPanel, PanelArray, UnbalancedPanel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `s_a a_i + s_g g_t + s_e e_it`.
    Additive,
    /// `(s_a a_i + mu_a)(s_g g_t + mu_g) - mu_a mu_g + s_e e_it`.
    Nonseparable,
}

/// Law of the row factor `a_i`; both have mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaLaw {
    /// `(exp(Z) - e^(1/2)) / sqrt((e - 1) e)`, skewed to the right.
    Lognormal,
    Normal,
}

/// A variance that may shrink with the panel size: `value`, `value / N` or
/// `value / T`. Written as `1`, `5/N` or `5/T` in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VarianceText", into = "String")]
pub enum VarianceRule {
    Fixed(f64),
    PerRows(f64),
    PerCols(f64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VarianceText {
    Number(f64),
    Text(String),
}

impl TryFrom<VarianceText> for VarianceRule {
    type Error = Error;

    fn try_from(v: VarianceText) -> Result<Self> {
        match v {
            VarianceText::Number(x) => VarianceRule::Fixed(x).checked(),
            VarianceText::Text(s) => s.parse(),
        }
    }
}

impl std::str::FromStr for VarianceRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot read variance '{s}'"));
        let s = s.trim();
        let rule = match s.split_once('/') {
            None => VarianceRule::Fixed(s.parse().map_err(|_| bad())?),
            Some((num, den)) => {
                let c: f64 = num.trim().parse().map_err(|_| bad())?;
                match den.trim() {
                    "N" | "n" => VarianceRule::PerRows(c),
                    "T" | "t" => VarianceRule::PerCols(c),
                    _ => return Err(bad()),
                }
            }
        };
        rule.checked()
    }
}

impl fmt::Display for VarianceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarianceRule::Fixed(c) => write!(f, "{c}"),
            VarianceRule::PerRows(c) => write!(f, "{c}/N"),
            VarianceRule::PerCols(c) => write!(f, "{c}/T"),
        }
    }
}

impl From<VarianceRule> for String {
    fn from(v: VarianceRule) -> String {
        v.to_string()
    }
}

impl VarianceRule {
    fn checked(self) -> Result<Self> {
        let (VarianceRule::Fixed(c) | VarianceRule::PerRows(c) | VarianceRule::PerCols(c)) = self;
        if c.is_finite() && c >= 0.0 {
            Ok(self)
        } else {
            Err(Error::InvalidConfig(format!("variance {self} must be finite and nonnegative")))
        }
    }

    pub fn value(self, n: usize, t: usize) -> f64 {
        match self {
            VarianceRule::Fixed(c) => c,
            VarianceRule::PerRows(c) => c / n as f64,
            VarianceRule::PerCols(c) => c / t as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub family: Family,
    pub sigma_alpha2: VarianceRule,
    pub sigma_gamma2: VarianceRule,
    pub sigma_eps2: VarianceRule,
    #[serde(default)]
    pub mu_alpha: f64,
    #[serde(default)]
    pub mu_gamma: f64,
    pub alpha_law: AlphaLaw,
    pub n: usize,
    pub t: usize,
}

/// Population scales of one draw: standard deviations of the three factors.
#[derive(Debug, Clone, Copy)]
struct Scales {
    a: f64,
    g: f64,
    e: f64,
}

impl DgpSpec {
    pub fn additive(sigma_alpha2: f64, sigma_gamma2: f64, sigma_eps2: f64, n: usize, t: usize) -> Self {
        DgpSpec {
            family: Family::Additive,
            sigma_alpha2: VarianceRule::Fixed(sigma_alpha2),
            sigma_gamma2: VarianceRule::Fixed(sigma_gamma2),
            sigma_eps2: VarianceRule::Fixed(sigma_eps2),
            mu_alpha: 0.0,
            mu_gamma: 0.0,
            alpha_law: AlphaLaw::Lognormal,
            n,
            t,
        }
    }

    pub fn nonseparable(sigma2: [f64; 3], mu: f64, n: usize, t: usize) -> Self {
        DgpSpec {
            family: Family::Nonseparable,
            sigma_alpha2: VarianceRule::Fixed(sigma2[0]),
            sigma_gamma2: VarianceRule::Fixed(sigma2[1]),
            sigma_eps2: VarianceRule::Fixed(sigma2[2]),
            mu_alpha: mu,
            mu_gamma: mu,
            alpha_law: AlphaLaw::Normal,
            n,
            t,
        }
    }

    pub fn with_size(mut self, n: usize, t: usize) -> Self {
        self.n = n;
        self.t = t;
        self
    }

    pub fn check(&self) -> Result<()> {
        for v in [self.sigma_alpha2, self.sigma_gamma2, self.sigma_eps2] {
            v.checked()?;
        }
        if self.n < 2 || self.t < 2 {
            return Err(Error::DimensionTooSmall(format!("simulated panel is {}x{}", self.n, self.t)));
        }
        if !self.mu_alpha.is_finite() || !self.mu_gamma.is_finite() {
            return Err(Error::InvalidConfig("factor means must be finite".into()));
        }
        Ok(())
    }

    fn scales(&self) -> Scales {
        let v = |r: VarianceRule| r.value(self.n, self.t).sqrt();
        Scales { a: v(self.sigma_alpha2), g: v(self.sigma_gamma2), e: v(self.sigma_eps2) }
    }

    /// Variances `(sigma_a^2, sigma_g^2, sigma_w^2)` of the row effect, the
    /// column effect and the interaction.
    pub fn components(&self) -> (f64, f64, f64) {
        let s = self.scales();
        let (a2, g2, e2) = (s.a * s.a, s.g * s.g, s.e * s.e);
        match self.family {
            Family::Additive => (a2, g2, e2),
            Family::Nonseparable => (a2 * self.mu_gamma.powi(2), g2 * self.mu_alpha.powi(2), a2 * g2 + e2),
        }
    }

    /// `Var(mean)` under the design.
    pub fn mean_variance(&self) -> f64 {
        let (a, g, w) = self.components();
        let (n, t) = (self.n as f64, self.t as f64);
        a / n + g / t + w / (n * t)
    }

    fn draw_alpha(&self, rng: &mut ChaCha8Rng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        match self.alpha_law {
            AlphaLaw::Normal => z,
            AlphaLaw::Lognormal => {
                let e = std::f64::consts::E;
                (z.exp() - e.sqrt()) / ((e - 1.0) * e).sqrt()
            }
        }
    }

    /// Row factors, column factors and cell noise, in that order.
    fn draw_factors(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let s = self.scales();
        let a = (0..self.n).map(|_| s.a * self.draw_alpha(rng)).collect();
        let g = (0..self.t).map(|_| s.g * rng.sample::<f64, _>(StandardNormal)).collect();
        (a, g)
    }

    fn cell(&self, a: f64, g: f64) -> f64 {
        match self.family {
            Family::Additive => a + g,
            Family::Nonseparable => (a + self.mu_alpha) * (g + self.mu_gamma) - self.mu_alpha * self.mu_gamma,
        }
    }

    /// One panel; the population mean is 0.
    pub fn generate(&self, rng: &mut ChaCha8Rng) -> PanelArray {
        let s = self.scales();
        let (a, g) = self.draw_factors(rng);
        let mut values = Vec::with_capacity(self.n * self.t);
        for ai in &a {
            for gt in &g {
                values.push(self.cell(*ai, *gt) + s.e * rng.sample::<f64, _>(StandardNormal));
            }
        }
        PanelArray::new(self.n, self.t, values).expect("generated values are finite")
    }

    /// A panel with each cell observed independently with probability
    /// `keep`. Every row and column keeps at least one cell.
    pub fn generate_masked(&self, keep: f64, rng: &mut ChaCha8Rng) -> MaskedPanel {
        let panel = self.generate(rng);
        let (n, t) = (self.n, self.t);
        let mut obs: Vec<(usize, usize)> = Vec::new();
        let mut seen = vec![false; n * t];
        for i in 0..n {
            for s in 0..t {
                if rng.random::<f64>() < keep {
                    obs.push((i, s));
                    seen[i * t + s] = true;
                }
            }
        }
        for k in 0..n.max(t) {
            let (i, s) = (k % n, k % t);
            if !seen[i * t + s] {
                seen[i * t + s] = true;
                obs.push((i, s));
            }
        }
        obs.sort_unstable();
        MaskedPanel::new(panel, obs).expect("mask covers every row and column")
    }

    /// Cells with `R_it` uniform on `1..=max_units` units. Unit `r` of cell
    /// `(i, t)` is the cell value of [`DgpSpec::generate`] plus independent
    /// noise with variance `unit_var`.
    pub fn generate_unbalanced(&self, max_units: usize, unit_var: f64, rng: &mut ChaCha8Rng) -> UnbalancedPanel {
        let base = self.generate(rng);
        let sd = unit_var.sqrt();
        let cells = base
            .values()
            .iter()
            .map(|&y| {
                let r = rng.random_range(1..=max_units);
                (0..r).map(|_| y + sd * rng.sample::<f64, _>(StandardNormal)).collect()
            })
            .collect();
        UnbalancedPanel::new(self.n, self.t, cells).expect("generated cells are valid")
    }
}
