use serde::Serialize;

use crate::bounds::BoundsEntry;
use crate::error::{Error, Result};
use crate::numfmt;
use crate::stats::{fit_line, LineFit};

/// Empirical `P(0 < |phi| <= t)` over a threshold grid for one kink `phi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginComponent {
    pub name: &'static str,
    #[serde(with = "numfmt::float_seq")]
    pub fractions: Vec<f64>,
    /// Share of units with `phi` exactly zero.
    #[serde(with = "numfmt::float")]
    pub at_zero: f64,
    /// Least-squares line of `fractions` against `t`.
    pub fit: Option<LineFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginCurve {
    pub n: usize,
    #[serde(with = "numfmt::float_seq")]
    pub t_grid: Vec<f64>,
    pub components: Vec<MarginComponent>,
}

/// Margin curves for the two kinks of the minimax-regret score,
/// `tau_high` and `-tau_low`.
pub fn margin_diagnostic(bounds: &[BoundsEntry], t_grid: &[f64]) -> Result<MarginCurve> {
    if bounds.is_empty() {
        return Err(Error::Invalid("margin diagnostic of an empty sample".into()));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Invalid("threshold grid must be non-empty, finite and positive".into()));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid("threshold grid must be strictly increasing".into()));
    }
    let n = bounds.len() as f64;
    let component = |name: &'static str, phi: Vec<f64>| {
        let fractions: Vec<f64> = t_grid
            .iter()
            .map(|&t| phi.iter().filter(|v| **v != 0.0 && v.abs() <= t).count() as f64 / n)
            .collect();
        let at_zero = phi.iter().filter(|v| **v == 0.0).count() as f64 / n;
        let fit = (t_grid.len() >= 2).then(|| fit_line(t_grid, &fractions));
        MarginComponent { name, fractions, at_zero, fit }
    };
    Ok(MarginCurve {
        n: bounds.len(),
        t_grid: t_grid.to_vec(),
        components: vec![
            component("tau_high", bounds.iter().map(|b| b.tau_high).collect()),
            component("neg_tau_low", bounds.iter().map(|b| -b.tau_low).collect()),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(lo: f64, hi: f64) -> BoundsEntry {
        BoundsEntry { y: None, tau_low: lo, tau_high: hi }
    }

    #[test]
    fn counts_by_hand() {
        let b = [entry(-0.05, 0.3), entry(0.0, 0.02), entry(-0.2, 0.0), entry(0.04, 0.5)];
        let m = margin_diagnostic(&b, &[0.01, 0.05, 0.25]).unwrap();
        assert_eq!(m.components[0].fractions, vec![0.0, 0.25, 0.25]);
        assert_eq!(m.components[0].at_zero, 0.25);
        assert_eq!(m.components[1].fractions, vec![0.0, 0.5, 0.75]);
        assert_eq!(m.components[1].at_zero, 0.25);
    }

    #[test]
    fn bad_grids_rejected() {
        let b = [entry(0.0, 1.0)];
        assert!(margin_diagnostic(&b, &[]).is_err());
        assert!(margin_diagnostic(&b, &[0.1, 0.05]).is_err());
        assert!(margin_diagnostic(&b, &[-0.1]).is_err());
        assert!(margin_diagnostic(&[], &[0.1]).is_err());
    }
}
