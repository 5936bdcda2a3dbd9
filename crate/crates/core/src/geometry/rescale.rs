use std::sync::Arc;

use super::{ChartedMetric, GeometryError, MetricField};

/// `h^t(x) = h(t x)`: the metric seen through the dilation `x -> t x`.
#[derive(Clone, Debug)]
pub struct RescaledField {
    inner: ChartedMetric,
    t: f64,
}

impl RescaledField {
    pub fn scale(&self) -> f64 {
        self.t
    }

    pub fn inner(&self) -> &ChartedMetric {
        &self.inner
    }
}

impl MetricField for RescaledField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let y: Vec<f64> = x.iter().map(|v| v * self.t).collect();
        self.inner.metric_raw(&y, out);
    }

    fn eval_deriv(&self, x: &[f64], out: &mut [f64]) -> bool {
        let n = self.inner.dim();
        let y: Vec<f64> = x.iter().map(|v| v * self.t).collect();
        self.inner.metric_deriv_raw(&y, out);
        out[..n * n * n].iter_mut().for_each(|v| *v *= self.t);
        true
    }
}

/// The rescaled family member `h^t_p(x) = h_p(t x)` on the domain scaled by
/// `1 / t`. As `t -> 0` it tends to the constant metric `h_p(0)`.
pub fn rescaled_metric(hp: &ChartedMetric, t: f64) -> Result<ChartedMetric, GeometryError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(GeometryError::NonpositiveScale(t));
    }
    let periods = hp.periodicity().iter().map(|p| p.map(|p| p / t)).collect();
    Ok(ChartedMetric::new(
        format!("{}|t={t}", hp.name()),
        hp.domain().scaled(1.0 / t),
        Arc::new(RescaledField {
            inner: hp.clone(),
            t,
        }),
    )
    .with_periodicity(periods))
}
