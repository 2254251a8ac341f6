use std::fmt;
use std::str::FromStr;

use super::grid::DensityGrid;

/// Norm orders supported by the averaging diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormOrder {
    Two,
    Four,
    Infinity,
}

impl NormOrder {
    pub const ALL: [NormOrder; 3] = [NormOrder::Two, NormOrder::Four, NormOrder::Infinity];

    pub fn exponent(self) -> f64 {
        match self {
            NormOrder::Two => 2.0,
            NormOrder::Four => 4.0,
            NormOrder::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for NormOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormOrder::Two => "2",
            NormOrder::Four => "4",
            NormOrder::Infinity => "inf",
        })
    }
}

impl FromStr for NormOrder {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "2" => Ok(NormOrder::Two),
            "4" => Ok(NormOrder::Four),
            "inf" | "infinity" => Ok(NormOrder::Infinity),
            other => Err(format!("unsupported norm order '{other}' (use 2, 4 or inf)")),
        }
    }
}

/// Time series of `‖∫ρ dθ‖_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragingSeries {
    pub order: NormOrder,
    pub values: Vec<f64>,
}

impl AveragingSeries {
    pub fn new(order: NormOrder) -> Self {
        AveragingSeries {
            order,
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, grid: &DensityGrid) {
        self.values.push(grid.averaged_norm(self.order.exponent()));
    }

    /// `max_t ‖·‖ / ‖·‖ at t = 0`.
    pub fn growth_ratio(&self) -> f64 {
        match self.values.first() {
            Some(&first) if first > 0.0 => {
                self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max) / first
            }
            _ => f64::NAN,
        }
    }

    /// True when no entry after `from` exceeds its predecessor by more than `slack`.
    pub fn non_increasing_from(&self, from: usize, slack: f64) -> bool {
        self.values
            .windows(2)
            .skip(from)
            .all(|w| w[1] <= w[0] + slack)
    }
}

pub fn averaging_diagnostic(history: &[DensityGrid], order: NormOrder) -> AveragingSeries {
    let mut series = AveragingSeries::new(order);
    for g in history {
        series.push(g);
    }
    series
}
