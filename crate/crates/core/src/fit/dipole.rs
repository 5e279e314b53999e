//! Dipole orientation and coupling versus field from measured gaps.

use crate::error::{domain, Error, Result};
use crate::polariton::g_from_splitting;
use crate::scalar::Real;

/// Angle θ between the zero-field dipole and the cavity axis, from
/// `g' = g0/(√2·cos θ)`.
pub fn infer_dipole_angle<T: Real>(g0: T, g_highfield: T) -> Result<T> {
    if !(g_highfield > T::zero()) || !(g0 >= T::zero()) {
        return Err(domain(format!(
            "couplings must satisfy g0 >= 0 and g' > 0, got g0 = {g0}, g' = {g_highfield}"
        )));
    }
    let ratio = g0 / (T::SQRT_2() * g_highfield);
    if ratio > T::one() {
        return Err(Error::InconsistentPair {
            ratio: ratio.to_f64_lossy(),
        });
    }
    Ok(ratio.acos())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiRow<T> {
    pub field: T,
    pub g_plus: T,
    pub g_minus: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiTable<T> {
    pub rows: Vec<RabiRow<T>>,
    /// Mean `1 - g/g0` over the rows, when a reference `g0` is given.
    pub mean_reduction_plus: Option<T>,
    pub mean_reduction_minus: Option<T>,
}

impl<T: Real> RabiTable<T> {
    /// Table of couplings, with mean reductions when `g0` is given.
    pub fn from_rows(rows: Vec<RabiRow<T>>, g0: Option<T>) -> Self {
        let mean_reduction = |col: fn(&RabiRow<T>) -> T| {
            g0.filter(|_| !rows.is_empty()).map(|g0| {
                let n = T::from_usize_lossy(rows.len());
                rows.iter().map(|r| T::one() - col(r) / g0).sum::<T>() / n
            })
        };
        Self {
            mean_reduction_plus: mean_reduction(|r| r.g_plus),
            mean_reduction_minus: mean_reduction(|r| r.g_minus),
            rows,
        }
    }

    /// Largest relative deviation of any row from the column mean.
    pub fn flatness(&self) -> T {
        let spread = |col: &dyn Fn(&RabiRow<T>) -> T| {
            let n = T::from_usize_lossy(self.rows.len().max(1));
            let mean = self.rows.iter().map(col).sum::<T>() / n;
            self.rows
                .iter()
                .map(|r| ((col(r) - mean) / mean).abs())
                .fold(T::zero(), T::max)
        };
        spread(&|r| r.g_plus).max(spread(&|r| r.g_minus))
    }
}

/// Converts `(B, gap+, gap-)` rows into couplings via the inverse splitting
/// formula.
pub fn rabi_vs_field<T: Real>(series: &[(T, T, T)], gamma_c: T, gamma_x: T, g0: Option<T>) -> Result<RabiTable<T>> {
    let rows = series
        .iter()
        .map(|&(field, gp, gm)| {
            Ok(RabiRow {
                field,
                g_plus: g_from_splitting(gp, gamma_c, gamma_x)?,
                g_minus: g_from_splitting(gm, gamma_c, gamma_x)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RabiTable::from_rows(rows, g0))
}
