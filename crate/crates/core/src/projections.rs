//! Empirical projection decomposition of a sample into a grand mean,
//! one effect vector per clustering dimension, and a residual.

use crate::model::{DyadicArray, MaskedPanel, MultiwayArray, PanelArray, UnbalancedPanel};
use crate::numeric::{pairwise_by, pairwise_sum, slice_sums};

/// `Y = grand_mean + sum_d effects[d][i_d] + residual`.
///
/// For unbalanced panels `residuals` holds the cell-level interaction `v`
/// and `unit_residuals` the within-cell deviations `e`, in the unit order of
/// [`UnbalancedPanel::values`]. For masked panels residuals of unobserved
/// cells are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub grand_mean: f64,
    pub sizes: Vec<usize>,
    pub effects: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub unit_residuals: Option<Vec<f64>>,
}

impl Decomposition {
    pub fn n_dims(&self) -> usize {
        self.sizes.len()
    }

    pub fn row_effects(&self) -> &[f64] {
        &self.effects[0]
    }

    pub fn col_effects(&self) -> &[f64] {
        &self.effects[1]
    }

    /// Residual of cell `(i, t)` in a two-dimensional decomposition.
    pub fn residual(&self, i: usize, t: usize) -> f64 {
        self.residuals[i * self.sizes[1] + t]
    }
}

/// Grand mean and per-dimension effects of a dense row-major array.
pub(crate) fn dense_effects(values: &[f64], sizes: &[usize]) -> (f64, Vec<Vec<f64>>) {
    let total = values.len() as f64;
    let grand = pairwise_sum(values) / total;
    let effects = (0..sizes.len())
        .map(|d| {
            let per_level = total / sizes[d] as f64;
            slice_sums(values, sizes, d).into_iter().map(|s| s / per_level - grand).collect()
        })
        .collect();
    (grand, effects)
}

/// Calls `f(row, residuals)` for every run of cells that shares all but the
/// last index, in row-major order. `buf` is scratch of length `sizes[D-1]`.
fn for_each_residual_row(
    values: &[f64],
    sizes: &[usize],
    grand: f64,
    effects: &[Vec<f64>],
    mut f: impl FnMut(usize, &[f64]),
) {
    let last = sizes.len() - 1;
    let inner = sizes[last];
    let outer = values.len() / inner;
    let mut idx = vec![0usize; last];
    let mut buf = vec![0.0; inner];
    for o in 0..outer {
        let row = &values[o * inner..(o + 1) * inner];
        for (t, r) in buf.iter_mut().enumerate() {
            let mut w = row[t] - grand;
            for d in 0..last {
                w -= effects[d][idx[d]];
            }
            *r = w - effects[last][t];
        }
        f(o, &buf);
        crate::model::increment_index(&mut idx, &sizes[..last]);
    }
}

/// Sum of squared residuals, reduced row by row with the same tree that
/// [`residual_sum_of_squares`] applies to materialized residuals.
pub(crate) fn dense_residual_ss(values: &[f64], sizes: &[usize], grand: f64, effects: &[Vec<f64>]) -> f64 {
    let inner = sizes[sizes.len() - 1];
    let mut row_ss = vec![0.0; values.len() / inner];
    for_each_residual_row(values, sizes, grand, effects, |o, r| {
        row_ss[o] = pairwise_by(r.len(), |t| r[t] * r[t]);
    });
    pairwise_sum(&row_ss)
}

/// Sum of squared dense residuals with rows of length `inner`.
pub(crate) fn residual_sum_of_squares(residuals: &[f64], inner: usize) -> f64 {
    let outer = residuals.len() / inner;
    pairwise_by(outer, |o| {
        let r = &residuals[o * inner..(o + 1) * inner];
        pairwise_by(inner, |t| r[t] * r[t])
    })
}

/// Decomposition of any dense row-major array with the given dimension sizes.
pub fn decompose_array(values: &[f64], sizes: &[usize]) -> Decomposition {
    let (grand, effects) = dense_effects(values, sizes);
    let mut residuals = vec![0.0; values.len()];
    let inner = sizes[sizes.len() - 1];
    for_each_residual_row(values, sizes, grand, &effects, |o, r| {
        residuals[o * inner..(o + 1) * inner].copy_from_slice(r);
    });
    Decomposition { grand_mean: grand, sizes: sizes.to_vec(), effects, residuals, unit_residuals: None }
}

/// Two-way decomposition of the first component of `sample`; use
/// [`decompose_components`] for multivariate panels.
pub fn decompose_two_way(sample: &PanelArray) -> Decomposition {
    decompose_array(sample.component(0), &[sample.n_rows(), sample.n_cols()])
}

/// One two-way decomposition per component.
pub fn decompose_components(sample: &PanelArray) -> Vec<Decomposition> {
    let sizes = [sample.n_rows(), sample.n_cols()];
    (0..sample.n_vars()).map(|m| decompose_array(sample.component(m), &sizes)).collect()
}

pub fn decompose_multiway(sample: &MultiwayArray) -> Decomposition {
    decompose_array(sample.values(), sample.sizes())
}

/// Per-dimension projections of a `D`-adic array; each dimension keeps its
/// own effect vector over the shared node set.
pub fn decompose_dyadic(sample: &DyadicArray) -> Decomposition {
    decompose_array(sample.values(), &sample.sizes())
}

/// Decomposition over the observed cells of a masked panel.
///
/// Effects are observed row (column) means centered at their unweighted
/// average, so each effect vector sums to zero; the grand mean is the mean of
/// the observed outcomes.
pub fn decompose_masked(sample: &MaskedPanel) -> Decomposition {
    decompose_masked_values(sample.base().component(0), sample)
}

/// Masked decomposition of dense row-major `y` over the mask of `sample`.
pub(crate) fn decompose_masked_values(y: &[f64], sample: &MaskedPanel) -> Decomposition {
    let (n, t) = (sample.base().n_rows(), sample.base().n_cols());
    let flat = sample.observed_flat();
    let grand = pairwise_by(flat.len(), |j| y[flat[j]]) / flat.len() as f64;

    let row_cells: Vec<Vec<usize>> = (0..n).map(|i| (0..t).filter(|&s| sample.is_observed(i, s)).collect()).collect();
    let col_cells: Vec<Vec<usize>> = (0..t).map(|s| (0..n).filter(|&i| sample.is_observed(i, s)).collect()).collect();
    let row_means: Vec<f64> = row_cells
        .iter()
        .enumerate()
        .map(|(i, c)| pairwise_by(c.len(), |j| y[i * t + c[j]]) / c.len() as f64)
        .collect();
    let col_means: Vec<f64> = col_cells
        .iter()
        .enumerate()
        .map(|(s, c)| pairwise_by(c.len(), |j| y[c[j] * t + s]) / c.len() as f64)
        .collect();
    let center = |m: &[f64]| {
        let c = pairwise_sum(m) / m.len() as f64;
        m.iter().map(|x| x - c).collect::<Vec<f64>>()
    };
    let effects = vec![center(&row_means), center(&col_means)];

    let mut residuals = vec![0.0; n * t];
    for &k in &flat {
        residuals[k] = y[k] - grand - effects[0][k / t] - effects[1][k % t];
    }
    Decomposition { grand_mean: grand, sizes: vec![n, t], effects, residuals, unit_residuals: None }
}

/// Decomposition of a panel with `R_it` units per cell.
///
/// The grand mean is the pooled unit mean; effects are cell-size-weighted
/// row (column) means minus the pooled mean; `v` is the cell mean net of the
/// grand mean and both effects; `e` is the unit's deviation from
/// `b + a_i + g_t + v_it`.
pub fn decompose_unbalanced(sample: &UnbalancedPanel) -> Decomposition {
    decompose_unbalanced_values(sample.values(), sample)
}

/// Unbalanced decomposition of unit outcomes `y` laid out like `sample`.
pub(crate) fn decompose_unbalanced_values(y: &[f64], sample: &UnbalancedPanel) -> Decomposition {
    let (n, t) = (sample.n_rows(), sample.n_cols());
    let off = sample.offsets();
    let grand = pairwise_sum(y) / y.len() as f64;

    let cell_sums: Vec<f64> = (0..n * t).map(|k| pairwise_sum(&y[off[k]..off[k + 1]])).collect();
    let sizes = sample.cell_sizes();

    let row_effects: Vec<f64> = (0..n)
        .map(|i| {
            let units = &y[off[i * t]..off[(i + 1) * t]];
            pairwise_sum(units) / units.len() as f64 - grand
        })
        .collect();
    let col_effects: Vec<f64> = (0..t)
        .map(|s| {
            let total = pairwise_by(n, |i| cell_sums[i * t + s]);
            let count: usize = (0..n).map(|i| sizes[i * t + s]).sum();
            total / count as f64 - grand
        })
        .collect();

    let mut v = vec![0.0; n * t];
    let mut e = vec![0.0; y.len()];
    for i in 0..n {
        for s in 0..t {
            let k = i * t + s;
            let cell_mean = cell_sums[k] / sizes[k] as f64;
            v[k] = cell_mean - grand - row_effects[i] - col_effects[s];
            for u in off[k]..off[k + 1] {
                e[u] = y[u] - grand - row_effects[i] - col_effects[s] - v[k];
            }
        }
    }
    Decomposition {
        grand_mean: grand,
        sizes: vec![n, t],
        effects: vec![row_effects, col_effects],
        residuals: v,
        unit_residuals: Some(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::unflatten;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_panel(n: usize, t: usize, seed: u64) -> PanelArray {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PanelArray::from_fn(n, t, |_, _| rng.random::<f64>() * 4.0 - 2.0).unwrap()
    }

    #[test]
    fn constant_array_has_no_effects() {
        let p = PanelArray::new(3, 4, vec![2.5; 12]).unwrap();
        let d = decompose_two_way(&p);
        assert_eq!(d.grand_mean, 2.5);
        assert!(d.row_effects().iter().chain(d.col_effects()).all(|&x| x == 0.0));
        assert!(d.residuals.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn additive_array_is_recovered() {
        let u = [1.0, -2.0, 1.0];
        let v = [0.5, 0.5, -1.5, 0.5];
        let p = PanelArray::from_fn(3, 4, |i, t| u[i] + v[t]).unwrap();
        let d = decompose_two_way(&p);
        assert!(d.grand_mean.abs() < 1e-15);
        for i in 0..3 {
            assert!((d.row_effects()[i] - u[i]).abs() < 1e-14);
        }
        for t in 0..4 {
            assert!((d.col_effects()[t] - v[t]).abs() < 1e-14);
        }
        assert!(d.residuals.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn two_way_matches_double_loop_oracle() {
        let p = random_panel(4, 5, 11);
        let d = decompose_two_way(&p);
        let (n, t) = (4, 5);
        let mut grand = 0.0;
        for i in 0..n {
            for s in 0..t {
                grand += p.get(i, s);
            }
        }
        grand /= (n * t) as f64;
        for i in 0..n {
            let row: f64 = (0..t).map(|s| p.get(i, s)).sum::<f64>() / t as f64;
            assert!((d.row_effects()[i] - (row - grand)).abs() < 1e-12);
            for s in 0..t {
                let col: f64 = (0..n).map(|j| p.get(j, s)).sum::<f64>() / n as f64;
                let w = p.get(i, s) - row - col + grand;
                assert!((d.residual(i, s) - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn multiway_with_two_dims_is_bitwise_two_way() {
        let p = random_panel(7, 9, 3);
        let a = decompose_two_way(&p);
        let b = decompose_multiway(&p.to_multiway().unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn three_way_matches_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sizes = vec![3, 3, 4];
        let arr = MultiwayArray::from_fn(sizes.clone(), |_| rng.random::<f64>()).unwrap();
        let d = decompose_multiway(&arr);
        let grand: f64 = arr.values().iter().sum::<f64>() / 36.0;
        for dim in 0..3 {
            for j in 0..sizes[dim] {
                let (mut s, mut c) = (0.0, 0.0);
                for (pos, y) in arr.values().iter().enumerate() {
                    if unflatten(pos, &sizes)[dim] == j {
                        s += y;
                        c += 1.0;
                    }
                }
                assert!((d.effects[dim][j] - (s / c - grand)).abs() < 1e-12);
            }
        }
        for (pos, y) in arr.values().iter().enumerate() {
            let idx = unflatten(pos, &sizes);
            let fit = d.grand_mean + (0..3).map(|k| d.effects[k][idx[k]]).sum::<f64>();
            assert!((y - fit - d.residuals[pos]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_cube_has_no_effects() {
        let arr = MultiwayArray::new(vec![3, 3, 3], vec![-1.25; 27]).unwrap();
        let d = decompose_multiway(&arr);
        assert!(d.effects.iter().flatten().chain(&d.residuals).all(|&x| x == 0.0));
    }

    #[test]
    fn unbalanced_with_single_units_is_bitwise_two_way() {
        let p = random_panel(6, 5, 8);
        let cells = p.values().iter().map(|&y| vec![y]).collect();
        let u = UnbalancedPanel::new(6, 5, cells).unwrap();
        let a = decompose_two_way(&p);
        let b = decompose_unbalanced(&u);
        assert_eq!(a.grand_mean, b.grand_mean);
        assert_eq!(a.effects, b.effects);
        assert_eq!(a.residuals, b.residuals);
        assert!(b.unit_residuals.unwrap().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn unbalanced_matches_ragged_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cells: Vec<Vec<f64>> =
            (0..9).map(|_| (0..rng.random_range(1..=3)).map(|_| rng.random::<f64>() * 10.0).collect()).collect();
        let u = UnbalancedPanel::new(3, 3, cells.clone()).unwrap();
        let d = decompose_unbalanced(&u);
        let all: Vec<f64> = cells.iter().flatten().copied().collect();
        let grand = all.iter().sum::<f64>() / all.len() as f64;
        for i in 0..3 {
            let row: Vec<f64> = (0..3).flat_map(|s| cells[i * 3 + s].clone()).collect();
            let a = row.iter().sum::<f64>() / row.len() as f64 - grand;
            assert!((d.row_effects()[i] - a).abs() < 1e-12);
        }
        for s in 0..3 {
            let col: Vec<f64> = (0..3).flat_map(|i| cells[i * 3 + s].clone()).collect();
            let g = col.iter().sum::<f64>() / col.len() as f64 - grand;
            assert!((d.col_effects()[s] - g).abs() < 1e-12);
        }
        let e = d.unit_residuals.as_ref().unwrap();
        let mut pos = 0;
        for i in 0..3 {
            for s in 0..3 {
                let c = &cells[i * 3 + s];
                let mean = c.iter().sum::<f64>() / c.len() as f64;
                let v = mean - grand - d.row_effects()[i] - d.col_effects()[s];
                assert!((d.residual(i, s) - v).abs() < 1e-12);
                let mut e_sum = 0.0;
                for y in c {
                    let fit = d.grand_mean + d.row_effects()[i] + d.col_effects()[s] + d.residual(i, s) + e[pos];
                    assert!((y - fit).abs() < 1e-12);
                    e_sum += e[pos];
                    pos += 1;
                }
                assert!(e_sum.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_unbalanced_has_no_effects() {
        let u = UnbalancedPanel::new(2, 2, vec![vec![3.0, 3.0], vec![3.0], vec![3.0; 4], vec![3.0]]).unwrap();
        let d = decompose_unbalanced(&u);
        assert!(d.effects.iter().flatten().chain(&d.residuals).all(|&x| x == 0.0));
    }

    #[test]
    fn full_mask_matches_two_way() {
        let p = random_panel(5, 6, 4);
        let obs = (0..5).flat_map(|i| (0..6).map(move |t| (i, t))).collect();
        let m = MaskedPanel::new(p.clone(), obs).unwrap();
        let a = decompose_two_way(&p);
        let b = decompose_masked(&m);
        for (x, y) in a.effects.iter().flatten().chain(&a.residuals).zip(b.effects.iter().flatten().chain(&b.residuals)) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn masked_reconstructs_observed_cells() {
        let p = random_panel(4, 4, 9);
        let obs = vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (3, 0), (0, 2)];
        let m = MaskedPanel::new(p.clone(), obs.clone()).unwrap();
        let d = decompose_masked(&m);
        assert!(d.row_effects().iter().sum::<f64>().abs() < 1e-14);
        assert!(d.col_effects().iter().sum::<f64>().abs() < 1e-14);
        for (i, t) in obs {
            let fit = d.grand_mean + d.row_effects()[i] + d.col_effects()[t] + d.residual(i, t);
            assert!((p.get(i, t) - fit).abs() < 1e-14);
        }
        assert_eq!(d.residual(1, 0), 0.0);
    }

    fn panel_strategy() -> impl Strategy<Value = PanelArray> {
        (2usize..50, 2usize..50).prop_flat_map(|(n, t)| {
            prop::collection::vec(-1e3..1e3f64, n * t).prop_map(move |v| PanelArray::new(n, t, v).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reconstruction_and_centering(p in panel_strategy()) {
            let d = decompose_two_way(&p);
            let scale = p.values().iter().fold(1.0f64, |m, x| m.max(x.abs()));
            let (n, t) = (p.n_rows(), p.n_cols());
            prop_assert!(d.row_effects().iter().sum::<f64>().abs() <= 1e-12 * scale * n as f64);
            prop_assert!(d.col_effects().iter().sum::<f64>().abs() <= 1e-12 * scale * t as f64);
            for i in 0..n {
                let rs: f64 = (0..t).map(|s| d.residual(i, s)).sum();
                prop_assert!(rs.abs() <= 1e-12 * scale * t as f64);
                for s in 0..t {
                    let fit = d.grand_mean + d.row_effects()[i] + d.col_effects()[s] + d.residual(i, s);
                    prop_assert!((p.get(i, s) - fit).abs() <= 1e-12 * scale);
                }
            }
            for s in 0..t {
                let cs: f64 = (0..n).map(|i| d.residual(i, s)).sum();
                prop_assert!(cs.abs() <= 1e-12 * scale * n as f64);
            }
        }

        #[test]
        fn shift_and_scale_equivariance(p in panel_strategy(), c in -100.0..100.0f64, k in 0.1..10.0f64) {
            let d = decompose_two_way(&p);
            let shifted = PanelArray::new(p.n_rows(), p.n_cols(), p.values().iter().map(|y| y + c).collect()).unwrap();
            let scaled = PanelArray::new(p.n_rows(), p.n_cols(), p.values().iter().map(|y| y * k).collect()).unwrap();
            let ds = decompose_two_way(&shifted);
            let dk = decompose_two_way(&scaled);
            let tol = 1e-12 * (1.0 + c.abs()) * 1e3;
            prop_assert!((ds.grand_mean - d.grand_mean - c).abs() <= tol);
            for (x, y) in d.effects.iter().flatten().chain(&d.residuals).zip(ds.effects.iter().flatten().chain(&ds.residuals)) {
                prop_assert!((x - y).abs() <= tol);
            }
            for (x, y) in d.effects.iter().flatten().chain(&d.residuals).zip(dk.effects.iter().flatten().chain(&dk.residuals)) {
                prop_assert!((x * k - y).abs() <= 1e-12 * k * 1e3);
            }
        }

        #[test]
        fn row_permutation_permutes_row_effects(p in panel_strategy(), seed in any::<u64>()) {
            let (n, t) = (p.n_rows(), p.n_cols());
            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let q = PanelArray::from_fn(n, t, |i, s| p.get(perm[i], s)).unwrap();
            let d = decompose_two_way(&p);
            let dq = decompose_two_way(&q);
            for i in 0..n {
                prop_assert!((dq.row_effects()[i] - d.row_effects()[perm[i]]).abs() <= 1e-12 * 1e3);
            }
            for s in 0..t {
                prop_assert!((dq.col_effects()[s] - d.col_effects()[s]).abs() <= 1e-12 * 1e3);
            }
        }
    }
}
