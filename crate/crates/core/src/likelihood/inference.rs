use super::chi_square_sf;
use crate::error::{Error, Result};
use crate::graph::{BidirectedGraph, VertexSet};
use crate::icf::Algorithm;
use crate::mobius::{CellDistribution, ConnectedParams};

/// Outcome of a maximum-likelihood fit, with its test against the saturated model.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub graph: BidirectedGraph,
    pub p_hat: CellDistribution,
    pub q_hat: ConnectedParams,
    pub loglik: f64,
    /// Model dimension: connected sets, or their orbits under a symmetry group.
    pub dim: usize,
    pub deviance: f64,
    pub df: usize,
    pub p_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `max_C |∂ℓ/∂q_C|` at the returned point.
    pub score_norm: f64,
    pub algorithm: Algorithm,
}

/// Likelihood-ratio statistic with its asymptotic chi-square p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrTest {
    pub deviance: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Tests a model nested in an alternative of larger dimension.
///
/// A deviance below `-1e-8·max(1, |alt_loglik|)` means the smaller model
/// was not fitted to its maximum; smaller negative values are round-off and
/// reported as zero.
pub fn lr_test(
    model_loglik: f64,
    model_dim: usize,
    alt_loglik: f64,
    alt_dim: usize,
) -> Result<LrTest> {
    if alt_dim < model_dim {
        return Err(Error::InvalidOption(format!(
            "alternative dimension {alt_dim} is below model dimension {model_dim}"
        )));
    }
    let mut deviance = 2.0 * (alt_loglik - model_loglik);
    if deviance < 0.0 {
        if deviance < -1e-8 * alt_loglik.abs().max(1.0) {
            return Err(Error::NegativeDeviance(deviance));
        }
        deviance = 0.0;
    }
    let df = alt_dim - model_dim;
    Ok(LrTest {
        deviance,
        df,
        p_value: chi_square_sf(deviance, df),
    })
}

/// Tests `fit` against an alternative with the given maximized log-likelihood and dimension.
pub fn deviance_test(fit: &FitResult, alt_loglik: f64, alt_dim: usize) -> Result<LrTest> {
    lr_test(fit.loglik, fit.dim, alt_loglik, alt_dim)
}

/// Marginal odds ratio of a pair of variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddsRatio {
    pub v: usize,
    pub w: usize,
    pub value: f64,
}

/// `m00·m11 / (m01·m10)` from every two-way margin, pairs in lexicographic order.
pub fn pairwise_odds_ratios(p: &CellDistribution) -> Result<Vec<OddsRatio>> {
    let n = p.n_vars();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for v in 0..n {
        for w in v + 1..n {
            let pair = VertexSet::singleton(v).union(VertexSet::singleton(w));
            let m = |a: VertexSet| p.marginal(a, pair);
            let m00 = m(pair);
            let m01 = m(VertexSet::singleton(v));
            let m10 = m(VertexSet::singleton(w));
            let m11 = m(VertexSet::EMPTY);
            if [m00, m01, m10, m11].iter().any(|&x| !(x > 0.0)) {
                return Err(Error::DegenerateMargin { v, w });
            }
            out.push(OddsRatio {
                v,
                w,
                value: m00 * m11 / (m01 * m10),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturated_against_itself() {
        let t = lr_test(-100.0, 15, -100.0, 15).unwrap();
        assert_eq!(t.deviance, 0.0);
        assert_eq!(t.df, 0);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn negative_deviance_beyond_tolerance() {
        assert!(matches!(
            lr_test(-10.0, 3, -10.5, 4),
            Err(Error::NegativeDeviance(_))
        ));
        let t = lr_test(-1000.0 + 1e-9, 3, -1000.0, 4).unwrap();
        assert_eq!(t.deviance, 0.0);
    }

    #[test]
    fn deviance_and_tail() {
        let t = lr_test(-20.0, 2, -17.0, 4).unwrap();
        assert!((t.deviance - 6.0).abs() < 1e-12);
        assert!((t.p_value - (-3.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn independent_pair_has_unit_odds_ratio() {
        let p = CellDistribution::product(&[0.3, 0.6, 0.8]);
        for or in pairwise_odds_ratios(&p).unwrap() {
            assert!((or.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn odds_ratio_of_two_by_two() {
        // cells (x0, x1): (0,0)=0.4, (1,0)=0.1, (0,1)=0.2, (1,1)=0.3
        let p = CellDistribution::new(vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let or = pairwise_odds_ratios(&p).unwrap();
        assert_eq!(or.len(), 1);
        assert!((or[0].value - 0.4 * 0.3 / (0.1 * 0.2)).abs() < 1e-12);
        let degenerate = CellDistribution::new(vec![0.5, 0.0, 0.2, 0.3]).unwrap();
        assert_eq!(
            pairwise_odds_ratios(&degenerate),
            Err(Error::DegenerateMargin { v: 0, w: 1 })
        );
    }
}
