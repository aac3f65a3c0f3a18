//! Sample containers for every clustering topology, plus the bootstrap
//! configuration and result records.
//!
//! Every container validates on construction and is immutable afterwards, so
//! a value of one of these types always satisfies its invariants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Re-check the invariants of a sample, returning it unchanged on success.
pub trait Validate: Sized {
    fn validate(self) -> Result<Self>;
}

fn check_finite(values: &[f64], index_of: impl Fn(usize) -> Vec<usize>) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(pos) => Err(Error::NonFinite(index_of(pos))),
        None => Ok(()),
    }
}

/// Dense `N x T` array of outcomes with an optional third (variable) axis.
///
/// Storage is component-major: component `m` occupies a contiguous row-major
/// `N x T` block.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelArray {
    n_rows: usize,
    n_cols: usize,
    n_vars: usize,
    values: Vec<f64>,
}

impl PanelArray {
    /// Univariate panel from row-major values.
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::multivariate(n_rows, n_cols, 1, values)
    }

    /// `M`-variate panel; `values` holds `M` consecutive row-major blocks.
    pub fn multivariate(n_rows: usize, n_cols: usize, n_vars: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols * n_vars {
            return Err(Error::DimensionTooSmall(format!(
                "expected {} values for a {n_rows}x{n_cols}x{n_vars} panel, got {}",
                n_rows * n_cols * n_vars,
                values.len()
            )));
        }
        PanelArray { n_rows, n_cols, n_vars, values }.validate()
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for t in 0..n_cols {
                values.push(f(i, t));
            }
        }
        Self::new(n_rows, n_cols, values)
    }

    /// Stack univariate panels of equal shape into one multivariate panel.
    pub fn stack(components: &[PanelArray]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::DimensionTooSmall("no components to stack".into()))?;
        let mut values = Vec::with_capacity(first.n_cells() * components.len());
        for c in components {
            if c.n_rows != first.n_rows || c.n_cols != first.n_cols {
                return Err(Error::InvalidConfig("stacked components differ in shape".into()));
            }
            values.extend_from_slice(&c.values);
        }
        let n_vars = values.len() / first.n_cells();
        Self::multivariate(first.n_rows, first.n_cols, n_vars, values)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_cells(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.values[i * self.n_cols + t]
    }

    pub fn get_var(&self, i: usize, t: usize, m: usize) -> f64 {
        self.values[m * self.n_cells() + i * self.n_cols + t]
    }

    /// Row-major values of component `m`.
    pub fn component(&self, m: usize) -> &[f64] {
        let len = self.n_cells();
        &self.values[m * len..(m + 1) * len]
    }

    /// Component `m` as its own univariate panel.
    pub fn component_panel(&self, m: usize) -> PanelArray {
        PanelArray {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            n_vars: 1,
            values: self.component(m).to_vec(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Whether `(N-1)(T-1) > 1`, the requirement for a positive residual
    /// degrees-of-freedom count `NT - N - T`.
    pub fn supports_residual_variance(&self) -> bool {
        (self.n_rows - 1) * (self.n_cols - 1) > 1
    }

    /// The same panel viewed as a two-dimensional [`MultiwayArray`].
    pub fn to_multiway(&self) -> Result<MultiwayArray> {
        if self.n_vars != 1 {
            return Err(Error::InvalidConfig("multivariate panel cannot be viewed as a single array".into()));
        }
        MultiwayArray::new(vec![self.n_rows, self.n_cols], self.values.clone())
    }
}

impl Validate for PanelArray {
    fn validate(self) -> Result<Self> {
        if self.n_rows < 2 {
            return Err(Error::DimensionTooSmall(format!("N = {} (need N >= 2)", self.n_rows)));
        }
        if self.n_cols < 2 {
            return Err(Error::DimensionTooSmall(format!("T = {} (need T >= 2)", self.n_cols)));
        }
        if self.n_vars < 1 {
            return Err(Error::DimensionTooSmall("M = 0 (need M >= 1)".into()));
        }
        let (n, t) = (self.n_rows, self.n_cols);
        check_finite(&self.values, |pos| {
            let cell = pos % (n * t);
            vec![cell / t, cell % t, pos / (n * t)]
        })?;
        Ok(self)
    }
}

/// Dense array clustered in `D >= 2` dimensions, stored row-major (last index
/// fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiwayArray {
    sizes: Vec<usize>,
    values: Vec<f64>,
}

impl MultiwayArray {
    pub fn new(sizes: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = sizes.iter().product();
        if sizes.len() >= 2 && values.len() != expected {
            return Err(Error::DimensionTooSmall(format!(
                "expected {expected} values for sizes {sizes:?}, got {}",
                values.len()
            )));
        }
        MultiwayArray { sizes, values }.validate()
    }

    pub fn from_fn(sizes: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let total: usize = sizes.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; sizes.len()];
        for _ in 0..total {
            values.push(f(&idx));
            increment_index(&mut idx, &sizes);
        }
        Self::new(sizes, values)
    }

    pub fn n_dims(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[flat_index(index, &self.sizes)]
    }
}

impl Validate for MultiwayArray {
    fn validate(self) -> Result<Self> {
        if self.sizes.len() < 2 {
            return Err(Error::DimensionTooSmall(format!("D = {} (need D >= 2)", self.sizes.len())));
        }
        if let Some(d) = self.sizes.iter().position(|&n| n < 2) {
            return Err(Error::DimensionTooSmall(format!("N_{} = {} (need >= 2)", d + 1, self.sizes[d])));
        }
        let sizes = self.sizes.clone();
        check_finite(&self.values, |pos| unflatten(pos, &sizes))?;
        Ok(self)
    }
}

/// `D`-adic array over a shared node set `{0..N}`: entry `(i_1, .., i_D)`
/// is the outcome for that ordered tuple of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicArray {
    n_nodes: usize,
    order: usize,
    values: Vec<f64>,
}

impl DyadicArray {
    pub fn new(n_nodes: usize, order: usize, values: Vec<f64>) -> Result<Self> {
        let expected = n_nodes.checked_pow(order as u32).unwrap_or(usize::MAX);
        if order >= 1 && values.len() != expected {
            return Err(Error::DimensionTooSmall(format!(
                "expected {expected} values for {n_nodes} nodes of order {order}, got {}",
                values.len()
            )));
        }
        DyadicArray { n_nodes, order, values }.validate()
    }

    pub fn from_fn(n_nodes: usize, order: usize, f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let sizes = vec![n_nodes; order];
        let arr = MultiwayArray::from_fn_unchecked(sizes, f);
        Self::new(n_nodes, order, arr)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sizes(&self) -> Vec<usize> {
        vec![self.n_nodes; self.order]
    }
}

impl Validate for DyadicArray {
    fn validate(self) -> Result<Self> {
        if self.order < 1 {
            return Err(Error::DimensionTooSmall("order D = 0 (need D >= 1)".into()));
        }
        if self.n_nodes < 2 || self.n_nodes < self.order {
            return Err(Error::DimensionTooSmall(format!(
                "N = {} nodes for order {} (need N >= max(2, D))",
                self.n_nodes, self.order
            )));
        }
        let sizes = self.sizes();
        check_finite(&self.values, |pos| unflatten(pos, &sizes))?;
        Ok(self)
    }
}

impl MultiwayArray {
    fn from_fn_unchecked(sizes: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Vec<f64> {
        let total: usize = sizes.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; sizes.len()];
        for _ in 0..total {
            values.push(f(&idx));
            increment_index(&mut idx, &sizes);
        }
        values
    }
}

/// Panel observed only on a subset `W` of the `N x T` index pairs.
///
/// Values of `base` outside the mask are never read by the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedPanel {
    base: PanelArray,
    observed: Vec<(usize, usize)>,
    dense: Vec<bool>,
}

impl MaskedPanel {
    pub fn new(base: PanelArray, observed: Vec<(usize, usize)>) -> Result<Self> {
        if base.n_vars() != 1 {
            return Err(Error::InvalidConfig("masked panels are univariate".into()));
        }
        MaskedPanel { dense: Vec::new(), base, observed }.validate()
    }

    /// Build from sparse `(i, t, y)` triples; unobserved cells are filled
    /// with zero.
    pub fn from_observations(n_rows: usize, n_cols: usize, obs: &[(usize, usize, f64)]) -> Result<Self> {
        let mut values = vec![0.0; n_rows * n_cols];
        let mut observed = Vec::with_capacity(obs.len());
        for &(i, t, y) in obs {
            if i >= n_rows || t >= n_cols {
                return Err(Error::IndexOutOfRange(format!("({i}, {t}) outside {n_rows}x{n_cols}")));
            }
            if !y.is_finite() {
                return Err(Error::NonFinite(vec![i, t]));
            }
            values[i * n_cols + t] = y;
            observed.push((i, t));
        }
        Self::new(PanelArray::new(n_rows, n_cols, values)?, observed)
    }

    pub fn base(&self) -> &PanelArray {
        &self.base
    }

    pub fn observed(&self) -> &[(usize, usize)] {
        &self.observed
    }

    pub fn is_observed(&self, i: usize, t: usize) -> bool {
        self.dense[i * self.base.n_cols() + t]
    }

    pub fn n_observed(&self) -> usize {
        self.observed.len()
    }

    /// Observed-cell counts per row (`T_i`).
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.base.n_rows()];
        for &(i, _) in &self.observed {
            counts[i] += 1;
        }
        counts
    }

    /// Observed-cell counts per column (`N_t`).
    pub fn col_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.base.n_cols()];
        for &(_, t) in &self.observed {
            counts[t] += 1;
        }
        counts
    }

    /// `(p_i, p_t, p_bar)`.
    pub fn rates(&self) -> (Vec<f64>, Vec<f64>, f64) {
        let (n, t) = (self.base.n_rows() as f64, self.base.n_cols() as f64);
        let p_row = self.row_counts().into_iter().map(|c| c as f64 / t).collect();
        let p_col = self.col_counts().into_iter().map(|c| c as f64 / n).collect();
        (p_row, p_col, self.observed.len() as f64 / (n * t))
    }

    /// Row-major flat indices `i * T + t` of the observed cells, ascending.
    pub fn observed_flat(&self) -> Vec<usize> {
        self.dense.iter().enumerate().filter(|(_, &o)| o).map(|(k, _)| k).collect()
    }

    /// Whether every cell is observed.
    pub fn is_full(&self) -> bool {
        self.observed.len() == self.base.n_cells()
    }
}

impl Validate for MaskedPanel {
    fn validate(mut self) -> Result<Self> {
        let (n, t) = (self.base.n_rows(), self.base.n_cols());
        if self.observed.is_empty() {
            return Err(Error::EmptyMask("no observed cells".into()));
        }
        let mut dense = vec![false; n * t];
        for &(i, s) in &self.observed {
            if i >= n || s >= t {
                return Err(Error::IndexOutOfRange(format!("({i}, {s}) outside {n}x{t}")));
            }
            let k = i * t + s;
            if dense[k] {
                return Err(Error::DuplicateMaskEntry(i, s));
            }
            dense[k] = true;
        }
        self.dense = dense;
        if let Some(i) = self.row_counts().iter().position(|&c| c == 0) {
            return Err(Error::EmptyMask(format!("row {i} has no observations")));
        }
        if let Some(s) = self.col_counts().iter().position(|&c| c == 0) {
            return Err(Error::EmptyMask(format!("column {s} has no observations")));
        }
        Ok(self)
    }
}

/// Panel with `R_it >= 1` i.i.d. units in each cell `(i, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnbalancedPanel {
    n_rows: usize,
    n_cols: usize,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl UnbalancedPanel {
    /// `cells` lists the unit outcomes of each cell in row-major order.
    pub fn new(n_rows: usize, n_cols: usize, cells: Vec<Vec<f64>>) -> Result<Self> {
        if cells.len() != n_rows * n_cols {
            return Err(Error::DimensionTooSmall(format!(
                "expected {} cells for a {n_rows}x{n_cols} panel, got {}",
                n_rows * n_cols,
                cells.len()
            )));
        }
        let mut offsets = Vec::with_capacity(cells.len() + 1);
        let mut values = Vec::new();
        offsets.push(0);
        for c in cells {
            values.extend(c);
            offsets.push(values.len());
        }
        UnbalancedPanel { n_rows, n_cols, offsets, values }.validate()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn cell(&self, i: usize, t: usize) -> &[f64] {
        let k = i * self.n_cols + t;
        &self.values[self.offsets[k]..self.offsets[k + 1]]
    }

    /// `R_it`.
    pub fn cell_size(&self, i: usize, t: usize) -> usize {
        let k = i * self.n_cols + t;
        self.offsets[k + 1] - self.offsets[k]
    }

    /// Row-major `R_it`.
    pub fn cell_sizes(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn n_units(&self) -> usize {
        self.values.len()
    }

    /// Flat unit outcomes, cell by cell in row-major order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// `(r_i, r_t, r_bar)`.
    pub fn rates(&self) -> (Vec<f64>, Vec<f64>, f64) {
        let (n, t) = (self.n_rows, self.n_cols);
        let mut r_row = vec![0.0; n];
        let mut r_col = vec![0.0; t];
        for i in 0..n {
            for s in 0..t {
                let r = self.cell_size(i, s) as f64;
                r_row[i] += r / t as f64;
                r_col[s] += r / n as f64;
            }
        }
        (r_row, r_col, self.values.len() as f64 / (n * t) as f64)
    }
}

impl Validate for UnbalancedPanel {
    fn validate(self) -> Result<Self> {
        if self.n_rows < 2 || self.n_cols < 2 {
            return Err(Error::DimensionTooSmall(format!(
                "{}x{} panel (need N, T >= 2)",
                self.n_rows, self.n_cols
            )));
        }
        for i in 0..self.n_rows {
            for t in 0..self.n_cols {
                if self.cell_size(i, t) == 0 {
                    return Err(Error::DimensionTooSmall(format!("cell ({i}, {t}) is empty (need R_it >= 1)")));
                }
                if let Some(r) = self.cell(i, t).iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(vec![i, t, r]));
                }
            }
        }
        Ok(self)
    }
}

pub(crate) fn flat_index(index: &[usize], sizes: &[usize]) -> usize {
    index.iter().zip(sizes).fold(0, |acc, (&i, &n)| acc * n + i)
}

pub(crate) fn unflatten(mut pos: usize, sizes: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; sizes.len()];
    for d in (0..sizes.len()).rev() {
        idx[d] = pos % sizes[d];
        pos /= sizes[d];
    }
    idx
}

pub(crate) fn increment_index(idx: &mut [usize], sizes: &[usize]) {
    for d in (0..sizes.len()).rev() {
        idx[d] += 1;
        if idx[d] < sizes[d] {
            return;
        }
        idx[d] = 0;
    }
}

/// Two-point wild-weight family used in the residual draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// Mammen's distribution (`c2 = c3 = 1`) in every dimension.
    Mammen,
    /// Finite-sample moment correction with `n` set to the size of the
    /// dimension the weight is attached to.
    MomentCorrected,
}

/// How the shrinkage ratio applied to resampled cluster effects is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// Plug-in ratio with the numerator floored at zero.
    Hat,
    /// Plug-in ratio, set to zero unless some effect variance clears its
    /// threshold.
    Tilde,
    /// Like `Tilde`, but falls back to a conservative upper bound instead of
    /// zero.
    Conservative,
    /// Plug-in ratio after zeroing each effect variance below its threshold.
    Thresholded,
}

/// Size-dependent threshold rule for the effect variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaRule {
    /// `kappa = log(cells per level)`; an effect counts when its variance is
    /// at least `kappa / cells per level`.
    Log,
    /// An effect over `n` levels counts when its variance exceeds
    /// `0.5 log(n) / sqrt(n)`.
    SqrtHalfLog,
}

/// Multiplier on the residual variance in the denominator of the balanced
/// shrinkage ratio: `1` reproduces the plug-in form, `2` the population form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DenominatorFactor {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl DenominatorFactor {
    pub fn value(self) -> f64 {
        match self {
            DenominatorFactor::One => 1.0,
            DenominatorFactor::Two => 2.0,
        }
    }
}

/// Estimator of the asymptotic standard deviation used to studentize the
/// observed and replicate means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleRule {
    /// `sqrt(max(0, T s_a + N s_g + s_w))` with all terms.
    Full,
    /// Drops the effect terms unless some effect variance clears its
    /// threshold, so the scale stays positive when the effects vanish.
    Selection,
    /// Floors each effect variance at zero before summing.
    Floored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub weight_scheme: WeightScheme,
    pub lambda_mode: LambdaMode,
    pub kappa_rule: KappaRule,
    pub denominator_factor: DenominatorFactor,
    pub seed: u64,
    /// Worker threads; `None` runs on the ambient rayon pool. Output does not
    /// depend on this value.
    pub threads: Option<usize>,
    /// Recompute the studentization scale on every replicate.
    pub studentize: bool,
    /// Scale of the studentized mean and its replicates.
    pub scale_rule: ScaleRule,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 999,
            weight_scheme: WeightScheme::MomentCorrected,
            lambda_mode: LambdaMode::Hat,
            kappa_rule: KappaRule::Log,
            denominator_factor: DenominatorFactor::One,
            seed: 0,
            threads: None,
            studentize: true,
            scale_rule: ScaleRule::Floored,
        }
    }
}

impl BootstrapConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::InvalidConfig("replicates must be >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMeta {
    pub replicates: usize,
    pub seed: u64,
    pub weight_scheme: WeightScheme,
    pub lambda_mode: LambdaMode,
}

/// Replicate draws of the mean and of the studentized mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Observed mean.
    pub mean: f64,
    /// Observed studentization scale; `Var(mean) ~ scale^2 / effective_n`.
    pub scale: f64,
    /// Scale used for plug-in Gaussian inference (the selection estimator).
    pub gaussian_scale: f64,
    /// Number of cells (or units) the mean averages over.
    pub effective_n: f64,
    /// Shrinkage ratio applied to the resampled effects.
    pub lambda: f64,
    /// Within-cell shrinkage ratio (unbalanced panels only).
    pub tau: Option<f64>,
    pub replicate_means: Vec<f64>,
    /// `(mean*_b - mean) / scale*_b`; empty when studentization is off.
    pub replicate_t: Vec<f64>,
    /// `scale*_b`; empty when studentization is off.
    pub replicate_scales: Vec<f64>,
    pub meta: ResultMeta,
}

impl BootstrapResult {
    pub fn replicates(&self) -> usize {
        self.replicate_means.len()
    }

    /// Sample variance (divisor `B - 1`) of the replicate means.
    pub fn bootstrap_variance(&self) -> f64 {
        let b = self.replicate_means.len();
        if b < 2 {
            return 0.0;
        }
        let m = self.replicate_means.iter().sum::<f64>() / b as f64;
        self.replicate_means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1) as f64
    }

    pub fn is_studentized(&self) -> bool {
        !self.replicate_t.is_empty()
    }
}
