use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Ascending,
    Descending,
}

/// A nonempty vector of positive scalars sorted in the declared order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    values: Vec<f64>,
    order: Order,
}

impl Weights {
    /// Validates positivity and ordering. Indices in errors are 1-based.
    pub fn new(values: Vec<f64>, order: Order) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("weights must be nonempty".into()));
        }
        if let Some(i) = values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Order {
                index: i + 1,
                message: format!("weight {} is not a positive finite number", values[i]),
            });
        }
        let bad = values.windows(2).position(|w| match order {
            Order::Ascending => w[1] < w[0],
            Order::Descending => w[1] > w[0],
        });
        if let Some(i) = bad {
            return Err(Error::Order {
                index: i + 2,
                message: format!(
                    "weights must be {}: {} follows {}",
                    match order {
                        Order::Ascending => "ascending",
                        Order::Descending => "descending",
                    },
                    values[i + 1],
                    values[i]
                ),
            });
        }
        Ok(Self { values, order })
    }

    /// Sorts `values` into the requested order before validating.
    pub fn sorted(mut values: Vec<f64>, order: Order) -> Result<Self> {
        values.sort_by(f64::total_cmp);
        if order == Order::Descending {
            values.reverse();
        }
        Self::new(values, order)
    }

    /// Parses one positive decimal per line; blank lines and `#` comments are skipped.
    pub fn parse_csv(text: &str, order: Order) -> Result<Self> {
        Self::new(parse_values(text)?, order)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(1/x_i)` in the stored order.
    pub fn reciprocals(&self) -> Vec<f64> {
        self.values.iter().map(|v| 1.0 / v).collect()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * factor).collect(), self.order)
    }
}

/// Parses one decimal per line without validating sign or order.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("expected one positive decimal, got `{line}`"),
        })?;
        values.push(v);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_enforced_with_index() {
        let err = Weights::new(vec![1.0, 2.0, 1.5], Order::Ascending).unwrap_err();
        assert!(matches!(err, Error::Order { index: 3, .. }), "{err}");
        let err = Weights::new(vec![3.0, 2.0, 2.5], Order::Descending).unwrap_err();
        assert!(matches!(err, Error::Order { index: 3, .. }));
        assert!(Weights::new(vec![1.0, 1.0, 2.0], Order::Ascending).is_ok());
    }

    #[test]
    fn nonpositive_rejected() {
        let err = Weights::new(vec![1.0, 0.0], Order::Ascending).unwrap_err();
        assert!(matches!(err, Error::Order { index: 2, .. }));
        assert!(Weights::new(vec![], Order::Ascending).is_err());
    }

    #[test]
    fn csv_parsing() {
        let w = Weights::parse_csv("1\n# c\n\n2.5\n3e0\n", Order::Ascending).unwrap();
        assert_eq!(w.values(), &[1.0, 2.5, 3.0]);
        let err = Weights::parse_csv("1\n2\nx\n", Order::Ascending).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn sorted_constructor() {
        let w = Weights::sorted(vec![3.0, 1.0, 2.0], Order::Descending).unwrap();
        assert_eq!(w.values(), &[3.0, 2.0, 1.0]);
    }
}
