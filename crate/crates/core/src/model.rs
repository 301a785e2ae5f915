//! Domain types and the analytic rate, SNR and fronthaul-load formulas for
//! an uplink OFDMA C-RAN cluster.
//!
//! All quantities are SI: Hz, watts, bit/s. Channel gains are stored as
//! power gains `|h|^2`. Indices are zero-based: `m` for RRHs, `k` for users,
//! `n` for subcarriers.
//!
//! Both quantization models reduce, per `(m, n)`, to a post-MRC SNR term of
//! the form `g p / (sigma^2 + q)` where the quantization noise `q` is a
//! function of the fronthaul rate spent on that subcarrier:
//!
//! * Gaussian test channel: `q = S / (2^x - 1)`
//! * uniform scalar quantizer: `q = 3 S 2^-x`
//!
//! with `S = g p + sigma^2` and `x = N t / B` (so `x = 2 D` for `D` bits).
//! A zero fronthaul rate means the RRH does not forward the subcarrier and
//! its term is zero under both models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for feasibility checks.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub bandwidth_hz: f64,
    pub num_subcarriers: usize,
    pub num_rrhs: usize,
    pub num_users: usize,
    /// `channel_gain_sq[m][k][n] = |h_{m,k,n}|^2`.
    pub channel_gain_sq: Vec<Vec<Vec<f64>>>,
    /// `noise_var[m][n]` in watts.
    pub noise_var: Vec<Vec<f64>>,
    /// Per-user transmit power budget in watts.
    pub power_budget: Vec<f64>,
    /// Per-RRH fronthaul capacity in bit/s.
    pub fronthaul_cap: Vec<f64>,
    /// Owning user of every subcarrier.
    pub sc_owner: Vec<usize>,
    /// Optional RRH-to-user distances `[m][k]` in meters, recorded by the
    /// scenario generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<Vec<Vec<f64>>>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            return bad(format!("bandwidth must be positive, got {}", self.bandwidth_hz));
        }
        let (n, m, k) = (self.num_subcarriers, self.num_rrhs, self.num_users);
        if n == 0 || m == 0 || k == 0 {
            return bad("N, M and K must all be at least 1".into());
        }
        if self.sc_owner.len() != n {
            return bad(format!("sc_owner has {} entries, expected {n}", self.sc_owner.len()));
        }
        if let Some(&o) = self.sc_owner.iter().find(|&&o| o >= k) {
            return bad(format!("subcarrier owner {o} is not a valid user (K = {k})"));
        }
        if self.channel_gain_sq.len() != m
            || self
                .channel_gain_sq
                .iter()
                .any(|per_user| per_user.len() != k || per_user.iter().any(|g| g.len() != n))
        {
            return bad(format!("channel_gain_sq must have shape [{m}][{k}][{n}]"));
        }
        if self.noise_var.len() != m || self.noise_var.iter().any(|row| row.len() != n) {
            return bad(format!("noise_var must have shape [{m}][{n}]"));
        }
        if self.power_budget.len() != k {
            return bad(format!("power_budget must have {k} entries"));
        }
        if self.fronthaul_cap.len() != m {
            return bad(format!("fronthaul_cap must have {m} entries"));
        }
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !self.channel_gain_sq.iter().flatten().flatten().all(|&g| nonneg(g)) {
            return bad("channel gains must be finite and nonnegative".into());
        }
        if !self.noise_var.iter().flatten().all(|&s| nonneg(s)) {
            return bad("noise variances must be finite and nonnegative".into());
        }
        if !self.power_budget.iter().all(|&p| nonneg(p)) {
            return bad("power budgets must be finite and nonnegative".into());
        }
        if !self.fronthaul_cap.iter().all(|&t| t >= 0.0 && !t.is_nan()) {
            return bad("fronthaul capacities must be nonnegative".into());
        }
        if let Some(d) = &self.distance_m {
            if d.len() != m || d.iter().any(|row| row.len() != k) {
                return bad(format!("distance_m must have shape [{m}][{k}]"));
            }
        }
        Ok(())
    }

    /// Bandwidth of one subcarrier, `B / N`.
    pub fn sc_bandwidth(&self) -> f64 {
        self.bandwidth_hz / self.num_subcarriers as f64
    }

    pub fn owner(&self, n: usize) -> usize {
        self.sc_owner[n]
    }

    /// Power gain from the owner of subcarrier `n` to RRH `m`.
    pub fn gain(&self, m: usize, n: usize) -> f64 {
        self.channel_gain_sq[m][self.sc_owner[n]][n]
    }

    /// `Omega_k`: subcarriers owned by user `k`, in increasing order.
    pub fn subcarriers_of(&self, k: usize) -> Vec<usize> {
        (0..self.num_subcarriers).filter(|&n| self.sc_owner[n] == k).collect()
    }

    pub fn is_single_link(&self) -> bool {
        self.num_rrhs == 1 && self.num_users == 1
    }

    /// Fronthaul rate of one grid step, `2B/N` (one bit per I/Q sample).
    pub fn bit_rate_step(&self) -> f64 {
        2.0 * self.sc_bandwidth()
    }

    /// Copy of the scenario with every RRH's fronthaul capacity set to `cap`.
    pub fn with_common_fronthaul(&self, cap: f64) -> Scenario {
        let mut s = self.clone();
        s.fronthaul_cap = vec![cap; s.num_rrhs];
        s
    }

    fn check_sc(&self, n: usize) -> Result<()> {
        if n >= self.num_subcarriers {
            return Err(Error::IndexOutOfRange {
                what: "subcarrier",
                index: n,
                len: self.num_subcarriers,
            });
        }
        Ok(())
    }
}

/// Per-(user, subcarrier) transmit power in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    /// `p[k][n]`, nonzero only on subcarriers owned by `k`.
    pub p: Vec<Vec<f64>>,
}

impl PowerAllocation {
    pub fn zeros(scenario: &Scenario) -> Self {
        Self {
            p: vec![vec![0.0; scenario.num_subcarriers]; scenario.num_users],
        }
    }

    /// Builds an allocation from per-subcarrier powers, placing each value
    /// on the subcarrier's owner.
    pub fn from_per_sc(scenario: &Scenario, per_sc: &[f64]) -> Self {
        let mut out = Self::zeros(scenario);
        for (n, &v) in per_sc.iter().enumerate() {
            out.p[scenario.owner(n)][n] = v;
        }
        out
    }

    /// Power on subcarrier `n` as transmitted by its owner.
    pub fn on_sc(&self, scenario: &Scenario, n: usize) -> f64 {
        self.p[scenario.owner(n)][n]
    }

    pub fn per_sc(&self, scenario: &Scenario) -> Vec<f64> {
        (0..scenario.num_subcarriers).map(|n| self.on_sc(scenario, n)).collect()
    }

    pub fn total(&self, k: usize) -> f64 {
        self.p[k].iter().sum()
    }

    pub(crate) fn check_shape(&self, scenario: &Scenario) -> Result<()> {
        if self.p.len() != scenario.num_users
            || self.p.iter().any(|row| row.len() != scenario.num_subcarriers)
        {
            return Err(Error::Shape(format!(
                "power allocation must have shape [{}][{}]",
                scenario.num_users, scenario.num_subcarriers
            )));
        }
        Ok(())
    }
}

/// Per-(RRH, subcarrier) fronthaul rate in bit/s, optionally tied to an
/// integer number of quantization bits per I/Q sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FronthaulAllocation {
    /// `t[m][n]` in bit/s.
    pub t: Vec<Vec<f64>>,
    /// `d[m][n]` when the allocation is on the integer-bit grid, with
    /// `t[m][n] = 2 B d[m][n] / N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<Vec<Vec<u32>>>,
}

impl FronthaulAllocation {
    pub fn zeros(scenario: &Scenario) -> Self {
        Self::continuous(vec![vec![0.0; scenario.num_subcarriers]; scenario.num_rrhs])
    }

    pub fn continuous(t: Vec<Vec<f64>>) -> Self {
        Self { t, bits: None }
    }

    pub fn from_bits(scenario: &Scenario, bits: Vec<Vec<u32>>) -> Self {
        let step = scenario.bit_rate_step();
        let t = bits
            .iter()
            .map(|row| row.iter().map(|&d| step * d as f64).collect())
            .collect();
        Self { t, bits: Some(bits) }
    }

    pub fn is_integer(&self) -> bool {
        self.bits.is_some()
    }

    /// Total rate on RRH `m`'s fronthaul link.
    pub fn load(&self, m: usize) -> f64 {
        self.t[m].iter().sum()
    }

    /// Exponent `x = N t / B` driving the quantization noise; exactly `2D`
    /// on the integer grid.
    pub fn exponent(&self, scenario: &Scenario, m: usize, n: usize) -> f64 {
        match &self.bits {
            Some(d) => 2.0 * d[m][n] as f64,
            None => self.t[m][n] / scenario.sc_bandwidth(),
        }
    }

    pub(crate) fn check_shape(&self, scenario: &Scenario) -> Result<()> {
        let (m, n) = (scenario.num_rrhs, scenario.num_subcarriers);
        if self.t.len() != m || self.t.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!(
                "fronthaul allocation must have shape [{}][{}]",
                scenario.num_rrhs, scenario.num_subcarriers
            )));
        }
        if let Some(d) = &self.bits {
            if d.len() != m || d.iter().any(|r| r.len() != n) {
                return Err(Error::Shape("bit allocation shape differs from rates".into()));
            }
        }
        Ok(())
    }
}

/// Which quantization model maps fronthaul rate to quantization noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantModel {
    GaussianTestChannel,
    UniformScalar,
}

impl QuantModel {
    pub fn name(self) -> &'static str {
        match self {
            QuantModel::GaussianTestChannel => "gaussian",
            QuantModel::UniformScalar => "uniform",
        }
    }

    /// Quantization noise variance for received power `signal_power` and
    /// exponent `x = N t / B`. Infinite when nothing is forwarded.
    pub fn noise_var(self, signal_power: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::INFINITY;
        }
        match self {
            // S / (2^x - 1), written via expm1 for small x.
            QuantModel::GaussianTestChannel => signal_power / (x * std::f64::consts::LN_2).exp_m1(),
            QuantModel::UniformScalar => 3.0 * signal_power * (-x).exp2(),
        }
    }

    /// Post-MRC SNR contribution `g p / (sigma^2 + q)` of one RRH, evaluated
    /// in a form that stays finite for very large `x`.
    pub fn snr_term(self, gp: f64, noise: f64, x: f64) -> f64 {
        if x <= 0.0 || gp <= 0.0 {
            return 0.0;
        }
        let u = (-x).exp2();
        match self {
            QuantModel::GaussianTestChannel => {
                let one_minus_u = -(-x * std::f64::consts::LN_2).exp_m1();
                gp * one_minus_u / (noise + u * gp)
            }
            QuantModel::UniformScalar => gp / (noise + 3.0 * u * (gp + noise)),
        }
    }
}

impl std::str::FromStr for QuantModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "gaussian-test-channel" => Ok(QuantModel::GaussianTestChannel),
            "uniform" | "uniform-scalar" => Ok(QuantModel::UniformScalar),
            other => Err(Error::Unknown {
                what: "quantization model",
                name: other.to_string(),
            }),
        }
    }
}

/// Output of every solver and benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: String,
    pub power: PowerAllocation,
    pub fronthaul: FronthaulAllocation,
    pub objective_bps: f64,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective of the continuous relaxation when the reported allocation
    /// was obtained by rounding it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxed_objective_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SolveReport {
    /// Spectral efficiency in bit/s/Hz.
    pub fn spectral_efficiency(&self, scenario: &Scenario) -> f64 {
        self.objective_bps / scenario.bandwidth_hz
    }
}

/// Per-subcarrier rates and their sum, both in bit/s.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBreakdown {
    pub per_sc: Vec<f64>,
    pub total: f64,
}

fn check_noise_matrix(scenario: &Scenario, noise_q: &[Vec<f64>]) -> Result<()> {
    if noise_q.len() != scenario.num_rrhs
        || noise_q.iter().any(|r| r.len() != scenario.num_subcarriers)
    {
        return Err(Error::Shape("noise_q must have shape [M][N]".into()));
    }
    if let Some(&q) = noise_q.iter().flatten().find(|&&q| q < 0.0 || q.is_nan()) {
        return Err(Error::NegativeInput {
            what: "quantization noise",
            value: q,
        });
    }
    Ok(())
}

fn check_power(scenario: &Scenario, power: &PowerAllocation) -> Result<()> {
    power.check_shape(scenario)?;
    if let Some(&p) = power.p.iter().flatten().find(|&&p| p < 0.0 || p.is_nan()) {
        return Err(Error::NegativeInput { what: "power", value: p });
    }
    Ok(())
}

/// MRC combining weights `w_n = (diag(sigma^2) + diag(q))^{-1} h_n` for the
/// owner of subcarrier `n`. Gains are power gains, so the channel vector is
/// taken as `sqrt(|h|^2)`; the phase does not affect the combined SNR.
pub fn mrc_weights(scenario: &Scenario, noise_q: &[Vec<f64>], n: usize) -> Result<Vec<f64>> {
    scenario.check_sc(n)?;
    check_noise_matrix(scenario, noise_q)?;
    Ok((0..scenario.num_rrhs)
        .map(|m| {
            let denom = scenario.noise_var[m][n] + noise_q[m][n];
            if denom > 0.0 {
                scenario.gain(m, n).sqrt() / denom
            } else {
                0.0
            }
        })
        .collect())
}

/// SNR of a linear combiner `w` applied to the quantized symbols of
/// subcarrier `n`: `p |w^H h|^2 / (w^H (diag(sigma^2) + diag(q)) w)`.
pub fn combiner_snr(
    scenario: &Scenario,
    power: &PowerAllocation,
    noise_q: &[Vec<f64>],
    n: usize,
    weights: &[f64],
) -> Result<f64> {
    scenario.check_sc(n)?;
    check_power(scenario, power)?;
    check_noise_matrix(scenario, noise_q)?;
    if weights.len() != scenario.num_rrhs {
        return Err(Error::Shape("combiner needs one weight per RRH".into()));
    }
    let p = power.on_sc(scenario, n);
    let mut signal = 0.0;
    let mut noise = 0.0;
    for (m, &w) in weights.iter().enumerate() {
        signal += w * scenario.gain(m, n).sqrt();
        noise += w * w * (scenario.noise_var[m][n] + noise_q[m][n]);
    }
    if noise == 0.0 {
        return Ok(0.0);
    }
    Ok(p * signal * signal / noise)
}

/// Linear post-MRC SNR of the owner of subcarrier `n`:
/// `sum_m |h_m|^2 p / (sigma_m^2 + q_m)`.
pub fn snr_post_mrc(
    scenario: &Scenario,
    power: &PowerAllocation,
    noise_q: &[Vec<f64>],
    n: usize,
) -> Result<f64> {
    scenario.check_sc(n)?;
    check_power(scenario, power)?;
    check_noise_matrix(scenario, noise_q)?;
    let p = power.on_sc(scenario, n);
    let mut gamma = 0.0;
    for m in 0..scenario.num_rrhs {
        let gp = scenario.gain(m, n) * p;
        if gp == 0.0 {
            continue;
        }
        gamma += gp / (scenario.noise_var[m][n] + noise_q[m][n]);
    }
    Ok(gamma)
}

fn sum_rate_with(
    model: QuantModel,
    scenario: &Scenario,
    power: &PowerAllocation,
    fronthaul: &FronthaulAllocation,
) -> Result<RateBreakdown> {
    check_power(scenario, power)?;
    fronthaul.check_shape(scenario)?;
    if let Some(&t) = fronthaul.t.iter().flatten().find(|&&t| t < 0.0 || t.is_nan()) {
        return Err(Error::NegativeInput {
            what: "fronthaul rate",
            value: t,
        });
    }
    let w = scenario.sc_bandwidth();
    let per_sc: Vec<f64> = (0..scenario.num_subcarriers)
        .map(|n| {
            let p = power.on_sc(scenario, n);
            let gamma: f64 = (0..scenario.num_rrhs)
                .map(|m| {
                    let x = fronthaul.exponent(scenario, m, n);
                    model.snr_term(scenario.gain(m, n) * p, scenario.noise_var[m][n], x)
                })
                .sum();
            w * gamma.ln_1p() / std::f64::consts::LN_2
        })
        .collect();
    let total = per_sc.iter().sum();
    Ok(RateBreakdown { per_sc, total })
}

/// End-to-end sum rate under the Gaussian test channel model.
pub fn gaussian_sum_rate(
    scenario: &Scenario,
    power: &PowerAllocation,
    fronthaul: &FronthaulAllocation,
) -> Result<RateBreakdown> {
    sum_rate_with(QuantModel::GaussianTestChannel, scenario, power, fronthaul)
}

/// End-to-end sum rate under uniform scalar quantization. A subcarrier with
/// zero bits contributes nothing on that RRH.
pub fn uniform_sum_rate(
    scenario: &Scenario,
    power: &PowerAllocation,
    fronthaul: &FronthaulAllocation,
) -> Result<RateBreakdown> {
    check_grid(scenario, fronthaul)?;
    sum_rate_with(QuantModel::UniformScalar, scenario, power, fronthaul)
}

pub fn sum_rate(
    model: QuantModel,
    scenario: &Scenario,
    power: &PowerAllocation,
    fronthaul: &FronthaulAllocation,
) -> Result<RateBreakdown> {
    match model {
        QuantModel::GaussianTestChannel => gaussian_sum_rate(scenario, power, fronthaul),
        QuantModel::UniformScalar => uniform_sum_rate(scenario, power, fronthaul),
    }
}

fn grid_mismatch(scenario: &Scenario, fronthaul: &FronthaulAllocation) -> Option<(usize, usize)> {
    let bits = fronthaul.bits.as_ref()?;
    let step = scenario.bit_rate_step();
    for (m, row) in fronthaul.t.iter().enumerate() {
        for (n, &t) in row.iter().enumerate() {
            let expected = step * bits[m][n] as f64;
            if (t - expected).abs() > FEASIBILITY_TOL * expected.max(step) {
                return Some((m, n));
            }
        }
    }
    None
}

fn check_grid(scenario: &Scenario, fronthaul: &FronthaulAllocation) -> Result<()> {
    fronthaul.check_shape(scenario)?;
    match grid_mismatch(scenario, fronthaul) {
        Some((rrh, sc)) => Err(Error::OffGrid { rrh, sc }),
        None => Ok(()),
    }
}

/// Fronthaul rate needed by each RRH to forward its subcarriers with
/// Gaussian quantization noise `noise_q`:
/// `(B/N) sum_n log2(1 + (|h|^2 p + sigma^2) / q)`.
pub fn gaussian_fronthaul_load(
    scenario: &Scenario,
    power: &PowerAllocation,
    noise_q: &[Vec<f64>],
) -> Result<Vec<f64>> {
    check_power(scenario, power)?;
    check_noise_matrix(scenario, noise_q)?;
    let w = scenario.sc_bandwidth();
    let mut loads = vec![0.0; scenario.num_rrhs];
    for (m, load) in loads.iter_mut().enumerate() {
        for n in 0..scenario.num_subcarriers {
            let s = scenario.gain(m, n) * power.on_sc(scenario, n) + scenario.noise_var[m][n];
            let q = noise_q[m][n];
            if s == 0.0 {
                continue;
            }
            if q == 0.0 {
                return Err(Error::InfiniteLoad { rrh: m, sc: n });
            }
            *load += gaussian_rate_for_noise(s, q, w);
        }
    }
    Ok(loads)
}

/// Per-subcarrier Gaussian fronthaul rate for received power `s` and
/// quantization noise `q`.
pub fn gaussian_rate_for_noise(signal_power: f64, q: f64, sc_bandwidth: f64) -> f64 {
    if q.is_infinite() {
        return 0.0;
    }
    sc_bandwidth * (signal_power / q).ln_1p() / std::f64::consts::LN_2
}

/// Inverse of [`gaussian_rate_for_noise`]: the noise that a per-subcarrier
/// rate `t` buys.
pub fn gaussian_noise_for_rate(signal_power: f64, t: f64, sc_bandwidth: f64) -> f64 {
    QuantModel::GaussianTestChannel.noise_var(signal_power, t / sc_bandwidth)
}

/// Uniform-quantizer noise power `3 S 2^{-N t / B}`.
pub fn uniform_noise_power(signal_power: f64, t: f64, sc_bandwidth: f64) -> f64 {
    QuantModel::UniformScalar.noise_var(signal_power, t / sc_bandwidth)
}

/// Fronthaul load `sum_n 2 B d[m][n] / N` of an integer-bit allocation.
pub fn uniform_fronthaul_load(scenario: &Scenario, fronthaul: &FronthaulAllocation) -> Result<Vec<f64>> {
    fronthaul.check_shape(scenario)?;
    let bits = fronthaul.bits.as_ref().ok_or(Error::MissingBits)?;
    let step = scenario.bit_rate_step();
    Ok(bits
        .iter()
        .map(|row| row.iter().map(|&d| step * d as f64).sum())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    NegativePower { user: usize, sc: usize, value: f64 },
    /// Power placed on a subcarrier the user does not own.
    ForeignSubcarrier { user: usize, sc: usize },
    PowerBudget { user: usize, used: f64, budget: f64 },
    NegativeRate { rrh: usize, sc: usize, value: f64 },
    FronthaulCapacity { rrh: usize, used: f64, capacity: f64 },
    OffGrid { rrh: usize, sc: usize },
    MissingBits,
    Shape { detail: String },
}

fn exceeds(used: f64, limit: f64) -> bool {
    used > limit + FEASIBILITY_TOL * limit.abs().max(f64::MIN_POSITIVE)
}

/// Lists every constraint of the sum-rate problem that the allocation
/// breaks. An empty list means feasible.
pub fn check_feasible(
    scenario: &Scenario,
    power: &PowerAllocation,
    fronthaul: &FronthaulAllocation,
    model: QuantModel,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Err(e) = power.check_shape(scenario) {
        out.push(Violation::Shape { detail: e.to_string() });
    }
    if let Err(e) = fronthaul.check_shape(scenario) {
        out.push(Violation::Shape { detail: e.to_string() });
    }
    if !out.is_empty() {
        return out;
    }
    for (k, row) in power.p.iter().enumerate() {
        for (n, &p) in row.iter().enumerate() {
            if p < 0.0 {
                out.push(Violation::NegativePower { user: k, sc: n, value: p });
            } else if p > 0.0 && scenario.owner(n) != k {
                out.push(Violation::ForeignSubcarrier { user: k, sc: n });
            }
        }
        let used = power.total(k);
        if exceeds(used, scenario.power_budget[k]) {
            out.push(Violation::PowerBudget {
                user: k,
                used,
                budget: scenario.power_budget[k],
            });
        }
    }
    for (m, row) in fronthaul.t.iter().enumerate() {
        for (n, &t) in row.iter().enumerate() {
            if t < 0.0 {
                out.push(Violation::NegativeRate { rrh: m, sc: n, value: t });
            }
        }
        let used = fronthaul.load(m);
        if exceeds(used, scenario.fronthaul_cap[m]) {
            out.push(Violation::FronthaulCapacity {
                rrh: m,
                used,
                capacity: scenario.fronthaul_cap[m],
            });
        }
    }
    if model == QuantModel::UniformScalar {
        if fronthaul.bits.is_none() {
            out.push(Violation::MissingBits);
        } else if let Some((rrh, sc)) = grid_mismatch(scenario, fronthaul) {
            out.push(Violation::OffGrid { rrh, sc });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn scenario(m: usize, gains: Vec<Vec<f64>>, noise: Vec<Vec<f64>>) -> Scenario {
        let n = gains[0].len();
        Scenario {
            bandwidth_hz: 1.0,
            num_subcarriers: n,
            num_rrhs: m,
            num_users: 1,
            channel_gain_sq: gains.into_iter().map(|g| vec![g]).collect(),
            noise_var: noise,
            power_budget: vec![1.0],
            fronthaul_cap: vec![1.0; m],
            sc_owner: vec![0; n],
            distance_m: None,
        }
    }

    fn power(s: &Scenario, v: f64) -> PowerAllocation {
        PowerAllocation::from_per_sc(s, &vec![v; s.num_subcarriers])
    }

    #[test]
    fn single_branch_snr_is_one() {
        let s = scenario(1, vec![vec![2.0]], vec![vec![1.0]]);
        let g = snr_post_mrc(&s, &power(&s, 0.5), &[vec![0.0]], 0).unwrap();
        assert_eq!(g, 1.0);
    }

    #[test]
    fn zero_power_zero_snr() {
        let s = scenario(2, vec![vec![3.0], vec![1.0]], vec![vec![1.0], vec![2.0]]);
        let g = snr_post_mrc(&s, &power(&s, 0.0), &[vec![0.7], vec![0.1]], 0).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn two_branch_snr_matches_weighted_combiner() {
        // |h1|^2 p = 1, sigma1^2 = 1, q1 = 1; |h2|^2 p = 2, sigma2^2 = 1, q2 = 0.
        let s = scenario(2, vec![vec![1.0], vec![2.0]], vec![vec![1.0], vec![1.0]]);
        let p = power(&s, 1.0);
        let q = [vec![1.0], vec![0.0]];
        let gamma = snr_post_mrc(&s, &p, &q, 0).unwrap();
        assert!((gamma - 2.5).abs() < 1e-15);
        let w = mrc_weights(&s, &q, 0).unwrap();
        let via_weights = combiner_snr(&s, &p, &q, 0, &w).unwrap();
        assert!((via_weights - gamma).abs() <= 1e-12 * gamma);
        // Any other combiner does worse.
        let worse = combiner_snr(&s, &p, &q, 0, &[1.0, 1.0]).unwrap();
        assert!(worse < gamma);
    }

    #[test]
    fn snr_errors() {
        let s = scenario(1, vec![vec![1.0]], vec![vec![1.0]]);
        assert!(matches!(
            snr_post_mrc(&s, &power(&s, 1.0), &[vec![0.0]], 3),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            snr_post_mrc(&s, &power(&s, 1.0), &[vec![-1.0]], 0),
            Err(Error::NegativeInput { .. })
        ));
        assert!(matches!(
            snr_post_mrc(&s, &power(&s, -1.0), &[vec![0.0]], 0),
            Err(Error::NegativeInput { .. })
        ));
    }

    #[test]
    fn gaussian_rate_hand_value() {
        // |h|^2 p / sigma^2 = 3, t = 2 bit/s, B = 1, N = 1.
        let s = scenario(1, vec![vec![3.0]], vec![vec![1.0]]);
        let f = FronthaulAllocation::continuous(vec![vec![2.0]]);
        let r = gaussian_sum_rate(&s, &power(&s, 1.0), &f).unwrap();
        // log2(1 + 3 / (1 + 4/3)) = log2(16/7)
        let expected = (16.0f64 / 7.0).log2();
        assert!((r.total - expected).abs() < 1e-14, "{} vs {expected}", r.total);
    }

    #[test]
    fn gaussian_rate_limits() {
        let s = scenario(1, vec![vec![3.0, 0.5]], vec![vec![1.0, 2.0]]);
        let p = power(&s, 1.0);
        let huge = FronthaulAllocation::continuous(vec![vec![5000.0, 5000.0]]);
        let r = gaussian_sum_rate(&s, &p, &huge).unwrap();
        let wireless = 0.5 * (4.0f64.log2() + 1.25f64.log2());
        assert!((r.total - wireless).abs() < 1e-12);
        let zero_p = gaussian_sum_rate(&s, &power(&s, 0.0), &huge).unwrap();
        assert_eq!(zero_p.total, 0.0);
        let no_fh = gaussian_sum_rate(&s, &p, &FronthaulAllocation::zeros(&s)).unwrap();
        assert_eq!(no_fh.total, 0.0);
    }

    #[test]
    fn load_of_matched_noise_is_sc_bandwidth() {
        let mut s = scenario(1, vec![vec![2.0, 1.0]], vec![vec![1.0, 1.0]]);
        s.bandwidth_hz = 10.0;
        let p = power(&s, 1.0);
        let q = vec![vec![3.0, 2.0]];
        let load = gaussian_fronthaul_load(&s, &p, &q).unwrap();
        assert!((load[0] - 10.0).abs() < 1e-12);
        let far = gaussian_fronthaul_load(&s, &p, &[vec![1e300, 1e300]]).unwrap();
        assert!(far[0] < 1e-290);
        assert!(matches!(
            gaussian_fronthaul_load(&s, &p, &[vec![0.0, 1.0]]),
            Err(Error::InfiniteLoad { rrh: 0, sc: 0 })
        ));
    }

    #[test]
    fn uniform_noise_at_one_bit() {
        let s = 2.5;
        // D = 1  <=>  t = 2B/N
        let q = uniform_noise_power(s, 2.0, 1.0);
        assert!((q - 0.75 * s).abs() < 1e-15);
    }

    #[test]
    fn uniform_load_arithmetic() {
        let s = Scenario {
            bandwidth_hz: 100e6,
            num_subcarriers: 32,
            num_rrhs: 1,
            num_users: 1,
            channel_gain_sq: vec![vec![vec![1.0; 32]]],
            noise_var: vec![vec![1.0; 32]],
            power_budget: vec![1.0],
            fronthaul_cap: vec![1e9],
            sc_owner: vec![0; 32],
            distance_m: None,
        };
        let f = FronthaulAllocation::from_bits(&s, vec![vec![4; 32]]);
        assert!((uniform_fronthaul_load(&s, &f).unwrap()[0] - 800e6).abs() < 1e-3);
        let z = FronthaulAllocation::from_bits(&s, vec![vec![0; 32]]);
        assert_eq!(uniform_fronthaul_load(&s, &z).unwrap()[0], 0.0);
        let mut one = vec![0; 32];
        one[5] = 1;
        let f1 = FronthaulAllocation::from_bits(&s, vec![one]);
        assert!((uniform_fronthaul_load(&s, &f1).unwrap()[0] - 2.0 * 100e6 / 32.0).abs() < 1e-6);
        assert!(matches!(
            uniform_fronthaul_load(&s, &FronthaulAllocation::zeros(&s)),
            Err(Error::MissingBits)
        ));
    }

    #[test]
    fn uniform_rate_rejects_off_grid() {
        let s = scenario(1, vec![vec![1.0]], vec![vec![1.0]]);
        let mut f = FronthaulAllocation::from_bits(&s, vec![vec![1]]);
        f.t[0][0] = 3.0;
        assert!(matches!(
            uniform_sum_rate(&s, &power(&s, 1.0), &f),
            Err(Error::OffGrid { .. })
        ));
    }

    #[test]
    fn feasibility_checks() {
        let mut s = scenario(1, vec![vec![1.0, 1.0]], vec![vec![1.0, 1.0]]);
        s.bandwidth_hz = 2.0;
        s.fronthaul_cap = vec![10.0];
        let zero_p = PowerAllocation::zeros(&s);
        let zero_t = FronthaulAllocation::zeros(&s);
        assert!(check_feasible(&s, &zero_p, &zero_t, QuantModel::GaussianTestChannel).is_empty());
        let zero_bits = FronthaulAllocation::from_bits(&s, vec![vec![0, 0]]);
        assert!(check_feasible(&s, &zero_p, &zero_bits, QuantModel::UniformScalar).is_empty());

        let over = power(&s, 1.0); // 2x the unit budget
        let v = check_feasible(&s, &over, &zero_t, QuantModel::GaussianTestChannel);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::PowerBudget { user: 0, .. }));

        // 1.5 grid steps with the integer flag set.
        let mut off = FronthaulAllocation::from_bits(&s, vec![vec![1, 0]]);
        off.t[0][0] = 1.5 * s.bit_rate_step();
        let v = check_feasible(&s, &zero_p, &off, QuantModel::UniformScalar);
        assert!(v.contains(&Violation::OffGrid { rrh: 0, sc: 0 }));
    }
}
