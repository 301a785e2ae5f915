//! Scenario templates in engineering units and their seeded realization.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Scenario;

use super::units::{dbm_to_watts, mbps_to_bps, mhz_to_hz, noise_power_watts, path_loss_db};

/// Distances below this are clamped so the path loss stays finite.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Geometry {
    /// RRHs and users dropped uniformly in a disc.
    Disc { radius_m: f64 },
    /// Every RRH-user pair at the same distance.
    FixedDistance { distance_m: f64 },
    /// Explicit per-subcarrier gains of a single link; path loss and fading
    /// are bypassed.
    PinnedGains { gains: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    pub intercept_db: f64,
    pub slope_db: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        Self {
            intercept_db: 30.6,
            slope_db: 36.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fading {
    None,
    /// Unit-mean exponential power gain, independent per (RRH, user, SC).
    #[default]
    Rayleigh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTemplate {
    pub geometry: Geometry,
    #[serde(default)]
    pub path_loss: PathLoss,
    #[serde(default)]
    pub fading: Fading,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub tx_power_dbm: f64,
    pub bandwidth_mhz: f64,
    pub num_subcarriers: usize,
    pub num_users: usize,
    pub num_rrhs: usize,
    /// Defaults to `N / K`.
    #[serde(default)]
    pub scs_per_user: Option<usize>,
    /// One value shared by all RRHs, or one per RRH.
    pub fronthaul_mbps: Vec<f64>,
}

impl ScenarioTemplate {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTemplate(msg));
        let (n, k, m) = (self.num_subcarriers, self.num_users, self.num_rrhs);
        if n == 0 || k == 0 || m == 0 {
            return bad("N, K and M must all be at least 1".into());
        }
        let per_user = self.scs_per_user.unwrap_or(n / k);
        if per_user * k != n {
            return bad(format!("{k} users cannot split {n} subcarriers evenly"));
        }
        if !(self.bandwidth_mhz > 0.0) || !self.bandwidth_mhz.is_finite() {
            return bad(format!("bandwidth must be positive, got {} MHz", self.bandwidth_mhz));
        }
        for (what, v) in [
            ("noise PSD", self.noise_psd_dbm_hz),
            ("noise figure", self.noise_figure_db),
            ("transmit power", self.tx_power_dbm),
        ] {
            if !v.is_finite() {
                return bad(format!("{what} must be finite"));
            }
        }
        if self.fronthaul_mbps.len() != 1 && self.fronthaul_mbps.len() != m {
            return bad(format!(
                "fronthaul_mbps needs 1 or {m} entries, got {}",
                self.fronthaul_mbps.len()
            ));
        }
        if self.fronthaul_mbps.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return bad("fronthaul capacities must be finite and non-negative".into());
        }
        match &self.geometry {
            Geometry::Disc { radius_m } if !(*radius_m > 0.0) || !radius_m.is_finite() => {
                bad(format!("radius must be positive, got {radius_m}"))
            }
            Geometry::FixedDistance { distance_m } if !(*distance_m > 0.0) || !distance_m.is_finite() => {
                bad(format!("distance must be positive, got {distance_m}"))
            }
            Geometry::PinnedGains { gains } if m != 1 || k != 1 || gains.len() != n => {
                bad("pinned gains need one user, one RRH and one gain per subcarrier".into())
            }
            Geometry::PinnedGains { gains } if gains.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) => {
                bad("pinned gains must be finite and non-negative".into())
            }
            _ => Ok(()),
        }
    }

    pub fn preset(name: &str) -> Result<ScenarioTemplate> {
        let base = ScenarioTemplate {
            geometry: Geometry::FixedDistance { distance_m: 50.0 },
            path_loss: PathLoss::default(),
            fading: Fading::Rayleigh,
            noise_psd_dbm_hz: -169.0,
            noise_figure_db: 7.0,
            tx_power_dbm: 23.0,
            bandwidth_mhz: 100.0,
            num_subcarriers: 32,
            num_users: 1,
            num_rrhs: 1,
            scs_per_user: None,
            fronthaul_mbps: vec![400.0],
        };
        match name {
            "fig3" => Ok(ScenarioTemplate {
                geometry: Geometry::PinnedGains {
                    gains: vec![1.276e-9, 6.12e-10, 2.9e-11, 1.8e-11],
                },
                fading: Fading::None,
                num_subcarriers: 4,
                ..base
            }),
            "fig5" => Ok(base),
            "fig7" => Ok(ScenarioTemplate {
                geometry: Geometry::Disc { radius_m: 100.0 },
                bandwidth_mhz: 300.0,
                num_subcarriers: 64,
                num_users: 16,
                num_rrhs: 7,
                scs_per_user: Some(4),
                fronthaul_mbps: vec![4000.0],
                ..base
            }),
            other => Err(Error::Unknown {
                what: "preset",
                name: other.to_string(),
            }),
        }
    }

    pub const PRESETS: [&'static str; 3] = ["fig3", "fig5", "fig7"];
}

fn disc_point(rng: &mut impl Rng, radius: f64) -> (f64, f64) {
    let r = radius * rng.random::<f64>().sqrt();
    let a = std::f64::consts::TAU * rng.random::<f64>();
    (r * a.cos(), r * a.sin())
}

/// Draws a scenario from the template. The same seed always yields the same
/// scenario.
pub fn generate_scenario(template: &ScenarioTemplate, seed: u64) -> Result<Scenario> {
    template.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, k, m) = (template.num_subcarriers, template.num_users, template.num_rrhs);
    let per_user = template.scs_per_user.unwrap_or(n / k);
    let bandwidth_hz = mhz_to_hz(template.bandwidth_mhz);
    let sigma2 = noise_power_watts(template.noise_psd_dbm_hz, template.noise_figure_db, bandwidth_hz / n as f64);

    let (gains, distance_m) = match &template.geometry {
        Geometry::PinnedGains { gains } => (vec![vec![gains.clone()]], None),
        geometry => {
            let dist: Vec<Vec<f64>> = match geometry {
                Geometry::Disc { radius_m } => {
                    let rrhs: Vec<_> = (0..m).map(|_| disc_point(&mut rng, *radius_m)).collect();
                    let users: Vec<_> = (0..k).map(|_| disc_point(&mut rng, *radius_m)).collect();
                    rrhs.iter()
                        .map(|r| {
                            users
                                .iter()
                                .map(|u| (r.0 - u.0).hypot(r.1 - u.1).max(MIN_DISTANCE_M))
                                .collect()
                        })
                        .collect()
                }
                Geometry::FixedDistance { distance_m } => vec![vec![distance_m.max(MIN_DISTANCE_M); k]; m],
                Geometry::PinnedGains { .. } => unreachable!(),
            };
            let pl = template.path_loss;
            let gains = dist
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&d| {
                            let mean = 10f64.powf(-path_loss_db(pl.intercept_db, pl.slope_db, d) / 10.0);
                            (0..n)
                                .map(|_| match template.fading {
                                    Fading::None => mean,
                                    Fading::Rayleigh => {
                                        let f: f64 = Exp1.sample(&mut rng);
                                        mean * f
                                    }
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            (gains, Some(dist))
        }
    };

    let cap: Vec<f64> = if template.fronthaul_mbps.len() == 1 {
        vec![mbps_to_bps(template.fronthaul_mbps[0]); m]
    } else {
        template.fronthaul_mbps.iter().map(|&c| mbps_to_bps(c)).collect()
    };
    let scenario = Scenario {
        bandwidth_hz,
        num_subcarriers: n,
        num_rrhs: m,
        num_users: k,
        channel_gain_sq: gains,
        noise_var: vec![vec![sigma2; n]; m],
        power_budget: vec![dbm_to_watts(template.tx_power_dbm); k],
        fronthaul_cap: cap,
        sc_owner: (0..n).map(|i| i / per_user).collect(),
        distance_m,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Contents of a scenario file: either a concrete scenario in SI units or a
/// template in engineering units to be drawn with the run's seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioFile {
    Scenario(Scenario),
    Template(ScenarioTemplate),
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<ScenarioFile> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn realize(&self, seed: u64) -> Result<Scenario> {
        match self {
            ScenarioFile::Scenario(s) => {
                s.validate()?;
                Ok(s.clone())
            }
            ScenarioFile::Template(t) => generate_scenario(t, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fig3_pins_the_gains() {
        let s = generate_scenario(&ScenarioTemplate::preset("fig3").unwrap(), 9).unwrap();
        assert_eq!(s.channel_gain_sq[0][0], vec![1.276e-9, 6.12e-10, 2.9e-11, 1.8e-11]);
        assert_eq!(s.bandwidth_hz, 100e6);
        assert_eq!(s.num_subcarriers, 4);
        let sigma2 = 10f64.powf(-16.2) / 1000.0 * 25e6;
        assert!((s.noise_var[0][0] / sigma2 - 1.0).abs() < 1e-12);
        assert!((s.power_budget[0] - 0.199_526_231_496_888).abs() < 1e-12);
    }

    #[test]
    fn fixed_distance_without_fading_uses_path_loss() {
        let mut t = ScenarioTemplate::preset("fig5").unwrap();
        t.fading = Fading::None;
        let s = generate_scenario(&t, 1).unwrap();
        let expect = 10f64.powf(-(30.6 + 36.7 * 50f64.log10()) / 10.0);
        assert!(s.channel_gain_sq[0][0].iter().all(|g| (g / expect - 1.0).abs() < 1e-12));
        assert_eq!(s.distance_m, Some(vec![vec![50.0]]));
    }

    #[test]
    fn fig7_shape() {
        let s = generate_scenario(&ScenarioTemplate::preset("fig7").unwrap(), 3).unwrap();
        assert_eq!((s.num_rrhs, s.num_users, s.num_subcarriers), (7, 16, 64));
        assert_eq!(s.bandwidth_hz, 300e6);
        for k in 0..16 {
            assert_eq!(s.subcarriers_of(k), (4 * k..4 * k + 4).collect::<Vec<_>>());
        }
        let d = s.distance_m.as_ref().unwrap();
        assert!(d.iter().flatten().all(|&x| (MIN_DISTANCE_M..=200.0).contains(&x)));
        assert_eq!(s.fronthaul_cap, vec![4e9; 7]);
    }

    #[test]
    fn rayleigh_fading_has_unit_mean() {
        let mut t = ScenarioTemplate::preset("fig5").unwrap();
        t.num_subcarriers = 20_000;
        let s = generate_scenario(&t, 4).unwrap();
        t.fading = Fading::None;
        let mean = generate_scenario(&t, 4).unwrap().channel_gain_sq[0][0][0];
        let avg = s.channel_gain_sq[0][0].iter().sum::<f64>() / 20_000.0 / mean;
        assert!((avg - 1.0).abs() < 0.03, "{avg}");
    }

    #[test]
    fn bad_templates_are_rejected() {
        let mut t = ScenarioTemplate::preset("fig7").unwrap();
        t.scs_per_user = Some(3);
        assert!(matches!(generate_scenario(&t, 0), Err(Error::InvalidTemplate(_))));
        let mut t = ScenarioTemplate::preset("fig7").unwrap();
        t.geometry = Geometry::Disc { radius_m: 0.0 };
        assert!(generate_scenario(&t, 0).is_err());
        let mut t = ScenarioTemplate::preset("fig7").unwrap();
        t.fronthaul_mbps = vec![1.0, 2.0];
        assert!(generate_scenario(&t, 0).is_err());
        assert!(ScenarioTemplate::preset("fig9").is_err());
    }

    #[test]
    fn files_parse_both_forms() {
        let t = ScenarioTemplate::preset("fig7").unwrap();
        let text = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioFile>(&text).unwrap(), ScenarioFile::Template(t.clone()));
        let s = generate_scenario(&t, 2).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioFile>(&text).unwrap(), ScenarioFile::Scenario(s));
    }

    proptest! {
        #[test]
        fn same_seed_same_scenario(seed in any::<u64>()) {
            let t = ScenarioTemplate::preset("fig7").unwrap();
            let a = serde_json::to_string(&generate_scenario(&t, seed).unwrap()).unwrap();
            let b = serde_json::to_string(&generate_scenario(&t, seed).unwrap()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
