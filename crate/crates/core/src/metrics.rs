//! Convergence indicators computed from a per-episode return series.
//!
//! A window of `W` consecutive episodes is *stable* when every return in it
//! is finite and their sample standard deviation is at most
//! `std_tolerance`. `d` is the first episode from which every window is
//! stable, `eta = d + W` is the episode at which the steady state is
//! declared, and `e` is the mean return from `eta` on.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("trace has {len} episodes, shorter than the window of {window}")]
    TraceTooShort { len: usize, window: usize },
    #[error("invalid convergence setting: {0}")]
    Config(String),
    #[error("{0} did not converge")]
    NotConverged(&'static str),
    #[error("baseline {0} is zero, relative improvement is undefined")]
    ZeroBaseline(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceConfig {
    pub window: usize,
    /// Largest allowed gap between the first stable window's mean and the
    /// final window's mean.
    pub target: f64,
    pub std_tolerance: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            window: 10,
            target: 0.25,
            std_tolerance: 1e-9,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.window < 2 {
            return Err(MetricsError::Config("window must be at least 2".into()));
        }
        if [self.target, self.std_tolerance]
            .iter()
            .any(|x| x.is_nan() || *x < 0.0)
        {
            return Err(MetricsError::Config(
                "target and std_tolerance must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample (n - 1) standard deviation; `None` if any value is not finite.
pub fn sample_std(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Standard deviation of each trailing window; `None` for the first
/// `window - 1` episodes and for windows holding a non-finite value.
pub fn rolling_std(returns: &[f64], window: usize) -> Vec<Option<f64>> {
    (0..returns.len())
        .map(|i| {
            if i + 1 < window {
                None
            } else {
                sample_std(&returns[i + 1 - window..=i])
            }
        })
        .collect()
}

fn checked(returns: &[f64], cfg: &ConvergenceConfig) -> Result<(), MetricsError> {
    cfg.validate()?;
    if returns.len() < cfg.window {
        return Err(MetricsError::TraceTooShort {
            len: returns.len(),
            window: cfg.window,
        });
    }
    Ok(())
}

pub fn d_metric(returns: &[f64], cfg: &ConvergenceConfig) -> Result<Option<usize>, MetricsError> {
    checked(returns, cfg)?;
    let w = cfg.window;
    let stable = |i: usize| sample_std(&returns[i..i + w]).is_some_and(|s| s <= cfg.std_tolerance);
    let last = returns.len() - w;
    let mut first = None;
    for i in (0..=last).rev() {
        if !stable(i) {
            break;
        }
        first = Some(i);
    }
    Ok(first)
}

pub fn eta_metric(returns: &[f64], cfg: &ConvergenceConfig) -> Result<Option<usize>, MetricsError> {
    let Some(d) = d_metric(returns, cfg)? else {
        return Ok(None);
    };
    let w = cfg.window;
    let gap = (mean(&returns[d..d + w]) - mean(&returns[returns.len() - w..])).abs();
    Ok((gap <= cfg.target).then_some(d + w))
}

/// Mean return from `eta` on. When the steady state is only declared at the
/// very end of the trace the final window is used instead.
pub fn e_metric(returns: &[f64], cfg: &ConvergenceConfig) -> Result<Option<f64>, MetricsError> {
    let Some(eta) = eta_metric(returns, cfg)? else {
        return Ok(None);
    };
    let from = eta.min(returns.len() - cfg.window);
    Ok(Some(mean(&returns[from..])))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub eta: Option<usize>,
    pub d: Option<usize>,
    pub e: Option<f64>,
}

impl MetricsReport {
    pub fn evaluate(returns: &[f64], cfg: &ConvergenceConfig) -> Result<Self, MetricsError> {
        Ok(MetricsReport {
            eta: eta_metric(returns, cfg)?,
            d: d_metric(returns, cfg)?,
            e: e_metric(returns, cfg)?,
        })
    }

    pub fn summary(&self) -> Option<MetricSummary> {
        Some(MetricSummary {
            eta: self.eta? as f64,
            d: self.d? as f64,
            e: self.e?,
        })
    }
}

/// Fully defined indicator values; aggregated means over seeds are not
/// integral, hence `f64` throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub eta: f64,
    pub d: f64,
    pub e: f64,
}

/// Relative improvements of `improved` over `base`, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JIndex {
    pub eta_pct: f64,
    pub d_pct: f64,
    pub e_pct: f64,
    pub j: f64,
}

/// Composite index: the mean of the three relative improvements. Fewer
/// episodes and a higher expected return both count as improvements; the
/// return term is normalised by `|e_base|` so the orientation holds for
/// negative returns too.
pub fn j_index(base: &MetricSummary, improved: &MetricSummary) -> Result<JIndex, MetricsError> {
    if base.eta == 0.0 {
        return Err(MetricsError::ZeroBaseline("eta"));
    }
    if base.d == 0.0 {
        return Err(MetricsError::ZeroBaseline("d"));
    }
    if base.e == 0.0 {
        return Err(MetricsError::ZeroBaseline("e"));
    }
    let eta_pct = (base.eta - improved.eta) / base.eta * 100.0;
    let d_pct = (base.d - improved.d) / base.d * 100.0;
    let e_pct = (improved.e - base.e) / base.e.abs() * 100.0;
    Ok(JIndex {
        eta_pct,
        d_pct,
        e_pct,
        j: (eta_pct + d_pct + e_pct) / 3.0,
    })
}

/// [`j_index`] on per-run reports, failing if either did not converge.
pub fn j_index_reports(
    base: &MetricsReport,
    improved: &MetricsReport,
) -> Result<JIndex, MetricsError> {
    let b = base
        .summary()
        .ok_or(MetricsError::NotConverged("baseline"))?;
    let i = improved
        .summary()
        .ok_or(MetricsError::NotConverged("improved run"))?;
    j_index(&b, &i)
}
