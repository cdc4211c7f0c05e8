//! Small least-squares fits used to extrapolate `r → 0` sweeps.

use serde::Serialize;

/// Result of fitting a sweep; `limit` is the model's value at `r = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extrapolation {
    pub model: FitModel,
    pub limit: f64,
    /// Remaining coefficients in model order (after the intercept).
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// `E(r) = E0 + a·r`
    Linear,
    /// `E(r) = E0 + a·r² + b·h/r`: smooth fields on spaces without boundary,
    /// where the continuum error is even in `r` and the `h/r` column absorbs
    /// the lattice undercount of small discrete balls.
    Smooth,
    /// `E(r) = E0 + a·r + b·h/r`: domains with boundary layers of width `r`.
    ResolutionAware,
}

impl std::str::FromStr for FitModel {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "smooth" => Ok(Self::Smooth),
            "resolution-aware" => Ok(Self::ResolutionAware),
            other => Err(crate::Error::InvalidInput(format!("unknown fit model `{other}` (linear | smooth | resolution-aware)"))),
        }
    }
}

/// Least squares over arbitrary basis columns; returns `None` when the
/// normal equations are singular or there are fewer points than columns.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = rows.first()?.len();
    if rows.len() < m || rows.len() != y.len() {
        return None;
    }
    let mut a = vec![vec![0.0; m + 1]; m];
    for (row, &yi) in rows.iter().zip(y) {
        for p in 0..m {
            for q in 0..m {
                a[p][q] += row[p] * row[q];
            }
            a[p][m] += row[p] * yi;
        }
    }
    // Gaussian elimination with partial pivoting
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in (col + 1)..m {
            let f = a[r][col] / a[col][col];
            for c in col..=m {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut coef = vec![0.0; m];
    for r in (0..m).rev() {
        let mut s = a[r][m];
        for c in (r + 1)..m {
            s -= a[r][c] * coef[c];
        }
        coef[r] = s / a[r][r];
    }
    let sse: f64 = rows
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let pred: f64 = row.iter().zip(&coef).map(|(x, c)| x * c).sum();
            (yi - pred).powi(2)
        })
        .sum();
    Some((coef, (sse / rows.len() as f64).sqrt()))
}

/// Fits `model` to `(radii, values)`.
pub fn extrapolate(model: FitModel, radii: &[f64], values: &[f64], resolution: f64) -> Option<Extrapolation> {
    let rows: Vec<Vec<f64>> = match model {
        FitModel::Linear => radii.iter().map(|&r| vec![1.0, r]).collect(),
        FitModel::Smooth => radii.iter().map(|&r| vec![1.0, r * r, resolution / r]).collect(),
        FitModel::ResolutionAware => radii.iter().map(|&r| vec![1.0, r, resolution / r]).collect(),
    };
    if model != FitModel::Linear && resolution <= 0.0 {
        return None;
    }
    let (coef, residual) = least_squares(&rows, values)?;
    Some(Extrapolation { model, limit: coef[0], coefficients: coef[1..].to_vec(), residual, points: radii.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let r = [0.4, 0.2, 0.1, 0.05];
        let v: Vec<f64> = r.iter().map(|x| 3.0 - 2.0 * x).collect();
        let fit = extrapolate(FitModel::Linear, &r, &v, 0.0).unwrap();
        assert!((fit.limit - 3.0).abs() < 1e-12);
        assert!((fit.coefficients[0] + 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn recovers_resolution_model() {
        let h = 1e-3;
        let r = [0.2, 0.1, 0.05, 0.025];
        let v: Vec<f64> = r.iter().map(|x| 1.0 + 0.5 * x - 0.7 * h / x).collect();
        let fit = extrapolate(FitModel::ResolutionAware, &r, &v, h).unwrap();
        assert!((fit.limit - 1.0).abs() < 1e-10);
    }

    #[test]
    fn recovers_smooth_model() {
        let h = 1e-3;
        let r = [0.1, 0.05, 0.025, 0.0125];
        let v: Vec<f64> = r.iter().map(|x| 2.0 - 3.0 * x * x - 0.4 * h / x).collect();
        let fit = extrapolate(FitModel::Smooth, &r, &v, h).unwrap();
        assert!((fit.limit - 2.0).abs() < 1e-10);
    }

    #[test]
    fn underdetermined_is_none() {
        assert!(extrapolate(FitModel::Linear, &[0.1], &[1.0], 0.0).is_none());
        assert!(extrapolate(FitModel::ResolutionAware, &[0.1, 0.05], &[1.0, 1.0], 1e-3).is_none());
    }
}
