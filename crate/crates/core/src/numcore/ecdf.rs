use super::series::Series;

/// Right-continuous empirical CDF: fraction of the sample at or below `x`.
pub fn ecdf(sample: &Series, x: f64) -> f64 {
    Ecdf::from_values(sample.values()).eval(x)
}

/// Sorted-sample form for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(sample: &Series) -> Self {
        Self::from_values(sample.values())
    }

    pub fn from_values(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(|a, b| a.total_cmp(b));
        Ecdf { sorted }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.sorted.len() as f64
    }
}
