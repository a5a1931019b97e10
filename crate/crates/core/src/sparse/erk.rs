//! Erdős–Rényi-Kernel density allocation.
//!
//! Layer `l` with shape `rows × cols` gets density `ε · (rows + cols) /
//! (rows · cols)`. `ε` is chosen so the active weights total `(1 - d)` of all
//! weights; layers whose density would exceed 1 are made dense and `ε` is
//! re-solved over the remaining layers.

use crate::error::{Error, Result};

/// Per-layer densities for matrices of the given `(rows, cols)` shapes.
pub fn erk_densities(shapes: &[(usize, usize)], sparsity: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&sparsity) {
        return Err(Error::invalid(format!("sparsity {sparsity} must be in [0, 1)")));
    }
    if shapes.iter().any(|&(r, c)| r == 0 || c == 0) {
        return Err(Error::invalid("layer with a zero dimension"));
    }
    if sparsity == 0.0 {
        return Ok(vec![1.0; shapes.len()]);
    }
    let sizes: Vec<f64> = shapes.iter().map(|&(r, c)| (r * c) as f64).collect();
    let raw: Vec<f64> = shapes
        .iter()
        .map(|&(r, c)| (r + c) as f64 / (r * c) as f64)
        .collect();
    let budget = (1.0 - sparsity) * sizes.iter().sum::<f64>();
    let mut dense = vec![false; shapes.len()];
    loop {
        let dense_total: f64 = (0..shapes.len()).filter(|&l| dense[l]).map(|l| sizes[l]).sum();
        let weighted: f64 = (0..shapes.len())
            .filter(|&l| !dense[l])
            .map(|l| raw[l] * sizes[l])
            .sum();
        if weighted == 0.0 {
            return Ok(vec![1.0; shapes.len()]);
        }
        let eps = (budget - dense_total) / weighted;
        let overflow: Vec<usize> = (0..shapes.len())
            .filter(|&l| !dense[l] && eps * raw[l] > 1.0)
            .collect();
        if overflow.is_empty() {
            return Ok((0..shapes.len())
                .map(|l| if dense[l] { 1.0 } else { eps * raw[l] })
                .collect());
        }
        for l in overflow {
            dense[l] = true;
        }
    }
}

/// Active-weight count per layer after rounding each layer's allocation.
pub fn erk_active_counts(shapes: &[(usize, usize)], sparsity: f64) -> Result<Vec<usize>> {
    let densities = erk_densities(shapes, sparsity)?;
    shapes
        .iter()
        .zip(densities)
        .enumerate()
        .map(|(l, (&(r, c), dens))| {
            let n = ((r * c) as f64 * dens).round() as usize;
            if n == 0 {
                Err(Error::invalid(format!(
                    "layer {l} ({r}x{c}) would keep no active weight at sparsity {sparsity}"
                )))
            } else {
                Ok(n.min(r * c))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent solve: bisection on ε for Σ min(1, ε·raw)·size = budget.
    fn bisect_oracle(shapes: &[(usize, usize)], d: f64) -> Vec<f64> {
        let raw: Vec<f64> = shapes.iter().map(|&(r, c)| (r + c) as f64 / (r * c) as f64).collect();
        let sizes: Vec<f64> = shapes.iter().map(|&(r, c)| (r * c) as f64).collect();
        let budget = (1.0 - d) * sizes.iter().sum::<f64>();
        let total = |e: f64| -> f64 { raw.iter().zip(&sizes).map(|(r, s)| (e * r).min(1.0) * s).sum() };
        let (mut lo, mut hi) = (0.0, 1e12);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if total(mid) < budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let e = 0.5 * (lo + hi);
        raw.iter().map(|r| (e * r).min(1.0)).collect()
    }

    #[test]
    fn matches_bisection() {
        for shapes in [
            vec![(10, 10), (10, 1000)],
            vec![(1, 8), (8, 64), (16, 64), (16, 9)],
            vec![(4, 4)],
        ] {
            for d in [0.1, 0.5, 0.9, 0.975] {
                let got = erk_densities(&shapes, d).unwrap();
                let want = bisect_oracle(&shapes, d);
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-9, "{shapes:?} d={d}: {got:?} vs {want:?}");
                }
            }
        }
    }

    #[test]
    fn dense_limit_and_errors() {
        assert_eq!(erk_densities(&[(3, 4), (5, 6)], 0.0).unwrap(), vec![1.0, 1.0]);
        assert!(erk_densities(&[(3, 4)], 1.0).is_err());
        assert!(erk_densities(&[(3, 4)], -0.1).is_err());
        assert!(erk_active_counts(&[(2, 2)], 0.9).is_err());
    }

    #[test]
    fn single_layer_half() {
        assert_eq!(erk_active_counts(&[(4, 4)], 0.5).unwrap(), vec![8]);
    }
}
