//! Discrete mitigation/tariff levels, proportional trade flows and tariff
//! settlement.

use std::fmt;

use crate::error::{Error, Result};
use crate::fsum::fsum;

/// Highest level on the shared 0..=10 scale.
pub const MAX_LEVEL: u8 = 10;

macro_rules! level_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(u8);

        impl $name {
            pub const ZERO: Self = Self(0);
            pub const MAX: Self = Self(MAX_LEVEL);

            pub fn new(level: u8) -> Result<Self> {
                if level <= MAX_LEVEL {
                    Ok(Self(level))
                } else {
                    Err(Error::InvalidLevel(level as i64))
                }
            }

            pub fn get(self) -> u8 {
                self.0
            }

            /// The level as a fraction in `[0, 1]`.
            pub fn rate(self) -> f64 {
                self.0 as f64 / MAX_LEVEL as f64
            }

            pub fn all() -> impl DoubleEndedIterator<Item = Self> {
                (0..=MAX_LEVEL).map(Self)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }

        impl TryFrom<u8> for $name {
            type Error = Error;
            fn try_from(v: u8) -> Result<Self> {
                Self::new(v)
            }
        }
    };
}

level_type!(
    /// Mitigation level; the mitigation rate is `level / 10`.
    MitigationLevel
);
level_type!(
    /// Tariff level; the ad-valorem tariff rate is `level / 10`.
    TariffLevel
);

/// Smallest tariff a club may levy on an exporter committed below it.
pub fn tariff_floor_level(exporter: MitigationLevel) -> TariffLevel {
    TariffLevel(MAX_LEVEL - exporter.0)
}

/// Largest tariff a club may levy on an exporter committed at or above it.
pub fn tariff_ceiling_level(exporter: MitigationLevel) -> TariffLevel {
    TariffLevel(MAX_LEVEL - exporter.0)
}

/// Inclusive tariff bounds `(min, max)` for one importer/exporter pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TariffBounds {
    pub min: TariffLevel,
    pub max: TariffLevel,
}

impl TariffBounds {
    pub const UNCONSTRAINED: Self = Self { min: TariffLevel::ZERO, max: TariffLevel::MAX };

    pub fn new(min: TariffLevel, max: TariffLevel) -> Self {
        Self { min, max }
    }

    pub fn is_consistent(&self) -> bool {
        self.min <= self.max
    }

    pub fn contains(&self, t: TariffLevel) -> bool {
        self.min <= t && t <= self.max
    }

    /// Level at fractional `position` between the bounds (0 = min, 1 = max).
    pub fn at_position(&self, position: f64) -> TariffLevel {
        let span = (self.max.0 - self.min.0) as f64;
        let offset = (position.clamp(0.0, 1.0) * span).round() as u8;
        TariffLevel(self.min.0 + offset)
    }
}

/// Clamp a proposed tariff into `bounds`. Inverted bounds are a protocol defect.
pub fn clamp_tariff(proposed: TariffLevel, bounds: TariffBounds) -> Result<TariffLevel> {
    if !bounds.is_consistent() {
        return Err(Error::BoundInversion {
            importer: usize::MAX,
            exporter: usize::MAX,
            min: bounds.min.0,
            max: bounds.max.0,
        });
    }
    Ok(proposed.max(bounds.min).min(bounds.max))
}

/// Tariffs `tau[importer][exporter]`; the diagonal is always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TariffMatrix {
    n: usize,
    entries: Vec<TariffLevel>,
}

impl TariffMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, entries: vec![TariffLevel::ZERO; n * n] }
    }

    /// Every off-diagonal entry set to `level`.
    pub fn uniform(n: usize, level: TariffLevel) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.entries[i * n + j] = level;
                }
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, importer: usize, exporter: usize) -> TariffLevel {
        self.entries[importer * self.n + exporter]
    }

    pub fn set(&mut self, importer: usize, exporter: usize, level: TariffLevel) -> Result<()> {
        if importer == exporter && level != TariffLevel::ZERO {
            return Err(Error::Shape(format!("diagonal tariff ({importer},{importer}) must be 0")));
        }
        self.entries[importer * self.n + exporter] = level;
        Ok(())
    }
}

/// Allocate each region's exports (`openness * output`) to its partners in
/// proportion to their output. Returns `x[importer][exporter]`.
pub fn build_trade_flows(outputs: &[f64], openness: f64) -> Result<Vec<Vec<f64>>> {
    if !(0.0..=1.0).contains(&openness) {
        return Err(Error::InputDomain { name: "openness", value: openness, domain: "[0, 1]" });
    }
    if let Some(&bad) = outputs.iter().find(|y| !(**y >= 0.0) || !y.is_finite()) {
        return Err(Error::InputDomain { name: "output", value: bad, domain: "[0, inf)" });
    }
    let n = outputs.len();
    let mut x = vec![vec![0.0; n]; n];
    if n < 2 {
        return Ok(x);
    }
    let total = fsum(outputs.iter().copied());
    for (j, &yj) in outputs.iter().enumerate() {
        let exports = openness * yj;
        if exports == 0.0 {
            continue;
        }
        let partners = total - yj;
        for (i, &yi) in outputs.iter().enumerate() {
            if i == j {
                continue;
            }
            x[i][j] = if partners > 0.0 {
                exports * (yi / partners)
            } else {
                // No partner produces anything; split evenly.
                exports / (n - 1) as f64
            };
        }
    }
    Ok(x)
}

/// Result of applying tariffs to trade flows.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeOutcome {
    /// Pre-tariff flows `x[importer][exporter]`.
    pub flows: Vec<Vec<f64>>,
    /// Tariff paid on each flow, same layout as `flows`.
    pub revenue_by_flow: Vec<Vec<f64>>,
    pub tariff_revenue: Vec<f64>,
    pub export_income: Vec<f64>,
    pub import_value: Vec<f64>,
}

/// Split one flow into (exporter income, importer revenue) so the two parts
/// add back to the flow without rounding error.
fn split_flow(x: f64, tariff: TariffLevel) -> (f64, f64) {
    let tau = tariff.rate();
    if tariff.get() <= MAX_LEVEL / 2 {
        let income = x * (1.0 - tau);
        (income, x - income)
    } else {
        let revenue = x * tau;
        (x - revenue, revenue)
    }
}

pub fn settle_trade(flows: &[Vec<f64>], tariffs: &TariffMatrix) -> Result<TradeOutcome> {
    let n = flows.len();
    if tariffs.len() != n || flows.iter().any(|row| row.len() != n) {
        return Err(Error::Shape(format!(
            "flows are {n}x? but tariffs are {0}x{0}",
            tariffs.len()
        )));
    }
    let mut income_by_flow = vec![vec![0.0; n]; n];
    let mut revenue_by_flow = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let (inc, rev) = split_flow(flows[i][j], tariffs.get(i, j));
            income_by_flow[i][j] = inc;
            revenue_by_flow[i][j] = rev;
        }
    }
    let export_income = (0..n).map(|j| fsum((0..n).map(|i| income_by_flow[i][j]))).collect();
    let tariff_revenue = revenue_by_flow.iter().map(|row| fsum(row.iter().copied())).collect();
    let import_value = flows.iter().map(|row| fsum(row.iter().copied())).collect();
    Ok(TradeOutcome {
        flows: flows.to_vec(),
        revenue_by_flow,
        tariff_revenue,
        export_income,
        import_value,
    })
}

impl TradeOutcome {
    /// Export income earned on flow `x[importer][exporter]`.
    pub fn income_on(&self, importer: usize, exporter: usize) -> f64 {
        self.flows[importer][exporter] - self.revenue_by_flow[importer][exporter]
    }

    /// `(sum of income + revenue, sum of flows)`, both exactly rounded over
    /// the individual flows.
    pub fn value_balance(&self) -> (f64, f64) {
        let n = self.flows.len();
        let parts = (0..n).flat_map(|i| {
            (0..n).flat_map(move |j| [self.income_on(i, j), self.revenue_by_flow[i][j]])
        });
        let settled = fsum(parts);
        let gross = fsum(self.flows.iter().flatten().copied());
        (settled, gross)
    }
}

/// Income available for consumption and saving after trade: domestic
/// absorption of net output plus export income plus tariff revenue.
pub fn disposable_income(net_output: f64, openness: f64, export_income: f64, tariff_revenue: f64) -> f64 {
    net_output - openness * net_output + export_income + tariff_revenue
}
