use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{PowerAllocation, Scenario};

use super::Link;

/// Water-filling solution `p_n = max(level - c_n, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFill {
    pub power: Vec<f64>,
    pub level: f64,
}

impl WaterFill {
    /// Power dual of the normalized objective, `1 / (level N ln 2)`.
    pub fn lambda(&self) -> f64 {
        1.0 / (self.level * self.power.len() as f64 * LN_2)
    }
}

/// Pours `budget` over floors `c_n` (infinite floors never fill). The level
/// is found exactly by scanning the sorted floors.
pub fn water_fill(floors: &[f64], budget: f64) -> Result<WaterFill> {
    if budget < 0.0 || budget.is_nan() {
        return Err(Error::NegativeInput {
            what: "power budget",
            value: budget,
        });
    }
    let mut sorted: Vec<f64> = floors.iter().copied().filter(|c| c.is_finite()).collect();
    if sorted.is_empty() {
        return Err(Error::NoUsableChannel("every subcarrier has zero gain".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let mut level = sorted[0] + budget;
    let mut prefix = 0.0;
    for (i, &c) in sorted.iter().enumerate() {
        prefix += c;
        let candidate = (budget + prefix) / (i + 1) as f64;
        let next = sorted.get(i + 1).copied().unwrap_or(f64::INFINITY);
        if candidate <= next {
            level = candidate;
            break;
        }
    }
    let power = floors.iter().map(|&c| (level - c).max(0.0)).collect();
    Ok(WaterFill { power, level })
}

/// Power allocation maximizing the wireless rate alone.
pub fn water_filling(scenario: &Scenario) -> Result<PowerAllocation> {
    let link = Link::from_scenario(scenario)?;
    let wf = link_water_filling(&link)?;
    Ok(PowerAllocation::from_per_sc(scenario, &wf.power))
}

pub(crate) fn link_water_filling(link: &Link) -> Result<WaterFill> {
    let floors: Vec<f64> = (0..link.len()).map(|n| link.inv_cnr(n)).collect();
    water_fill(&floors, link.power_budget)
}
