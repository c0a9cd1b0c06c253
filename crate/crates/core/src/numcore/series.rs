use crate::error::{Error, Result};

/// A named column of 64-bit floats. Values are validated to be finite on
/// construction; rows with missing entries are dropped upstream during
/// ingestion, so a `Series` never carries NaN or infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    name: String,
    values: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { name, row });
        }
        Ok(Series { name, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        super::stats::mean(&self.values)
    }

    /// Sample variance with the 1/n divisor used throughout the crate.
    pub fn variance(&self) -> f64 {
        super::stats::variance(&self.values)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A set of equally long, uniquely named columns.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    columns: Vec<Series>,
}

impl Dataset {
    pub fn new() -> Self {
        Dataset { columns: Vec::new() }
    }

    pub fn from_columns(columns: Vec<Series>) -> Result<Self> {
        let mut data = Dataset::new();
        for c in columns {
            data.push(c)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, column: Series) -> Result<()> {
        if let Some(first) = self.columns.first() {
            if first.n() != column.n() {
                return Err(Error::LengthMismatch(first.n(), column.n()));
            }
        }
        if self.columns.iter().any(|c| c.name() == column.name()) {
            return Err(Error::DuplicateColumn(column.name().to_string()));
        }
        self.columns.push(column);
        Ok(())
    }

    /// Shared row count; 0 for an empty dataset.
    pub fn n(&self) -> usize {
        self.columns.first().map_or(0, Series::n)
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Series] {
        &self.columns
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(Series::name).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Series> {
        self.columns.iter().find(|c| c.name() == name)
    }

    pub fn require(&self, name: &str) -> Result<&Series> {
        self.get(name).ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn select(&self, names: &[String]) -> Result<Dataset> {
        let mut out = Dataset::new();
        for name in names {
            out.push(self.require(name)?.clone())?;
        }
        Ok(out)
    }

    /// Keep rows with index in `keep` (in order), all columns.
    pub fn filter_rows(&self, keep: &[usize]) -> Result<Dataset> {
        let mut out = Dataset::new();
        for c in &self.columns {
            let vals = keep.iter().map(|&i| c.values()[i]).collect();
            out.push(Series::new(c.name(), vals)?)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan() {
        let err = Series::new("x", vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, .. }));
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(Series::new("x", vec![]), Err(Error::EmptySeries)));
    }

    #[test]
    fn dataset_rejects_mismatched_lengths() {
        let mut d = Dataset::new();
        d.push(Series::new("a", vec![1.0, 2.0]).unwrap()).unwrap();
        let err = d.push(Series::new("b", vec![1.0]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch(2, 1)));
    }

    #[test]
    fn dataset_rejects_duplicates() {
        let mut d = Dataset::new();
        d.push(Series::new("a", vec![1.0]).unwrap()).unwrap();
        assert!(matches!(
            d.push(Series::new("a", vec![2.0]).unwrap()),
            Err(Error::DuplicateColumn(_))
        ));
    }
}
