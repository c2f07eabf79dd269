//! Analog part of a sideband-separating receiver.
//!
//! Each IF channel is described by a [`GainMatrix`] mapping the two
//! down-converted sidebands onto the two IF ports:
//!
//! ```text
//! v1 = g1U * V_U + g1L * V_L
//! v2 = g2U * V_U + g2L * V_L
//! ```
//!
//! Receivers are synthesized from a nominal topology plus a smooth,
//! frequency-dependent [`ImbalanceProfile`]. Angles are degrees at the
//! interface and radians internally.

mod config;

use std::f64::consts::{FRAC_1_SQRT_2, LN_10};

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::ratio::Rejection;
use crate::rng::SimRng;

pub use config::{NoiseSection, ReceiverConfig, TopologySection};

/// Complex voltage, gain or constant.
pub type ComplexValue = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    NoIfHybrid,
    WithIfHybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sideband {
    Usb,
    Lsb,
}

impl Sideband {
    pub fn label(self) -> &'static str {
        match self {
            Sideband::Usb => "USB",
            Sideband::Lsb => "LSB",
        }
    }
}

/// The four complex voltage gains of one IF channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainMatrix {
    pub g1u: ComplexValue,
    pub g1l: ComplexValue,
    pub g2u: ComplexValue,
    pub g2l: ComplexValue,
}

impl GainMatrix {
    /// Validating constructor: entries must be finite and each sideband
    /// must reach at least one port.
    pub fn new(
        g1u: ComplexValue,
        g1l: ComplexValue,
        g2u: ComplexValue,
        g2l: ComplexValue,
    ) -> Result<Self> {
        let all = [g1u, g1l, g2u, g2l];
        if all.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(Error::invalid("gains", "entries must be finite"));
        }
        if g1u.norm_sqr() == 0.0 && g2u.norm_sqr() == 0.0 {
            return Err(Error::invalid("gains", "USB reaches neither port"));
        }
        if g1l.norm_sqr() == 0.0 && g2l.norm_sqr() == 0.0 {
            return Err(Error::invalid("gains", "LSB reaches neither port"));
        }
        Ok(Self { g1u, g1l, g2u, g2l })
    }

    pub fn from_real(g1u: f64, g1l: f64, g2u: f64, g2l: f64) -> Result<Self> {
        Self::new(g1u.into(), g1l.into(), g2u.into(), g2l.into())
    }

    /// Ideal quadrature outputs of a receiver without IF hybrid:
    /// `(1, 1, -j, +j) / sqrt(2)`.
    pub fn nominal_no_hybrid() -> Self {
        let s = FRAC_1_SQRT_2;
        Self {
            g1u: ComplexValue::new(s, 0.0),
            g1l: ComplexValue::new(s, 0.0),
            g2u: ComplexValue::new(0.0, -s),
            g2l: ComplexValue::new(0.0, s),
        }
    }

    /// Receiver with IF hybrid whose port-1 rejection is `m_a` (linear)
    /// and whose leakage terms carry phase `leak_phase_rad`.
    ///
    /// Both calibration ratios equal `sqrt(m_a) * exp(-j leak_phase)`.
    pub fn with_hybrid(m_a: f64, leak_phase_rad: f64) -> Self {
        let main = (m_a / (1.0 + m_a)).sqrt();
        let leak = (1.0 / (1.0 + m_a)).sqrt();
        let leak = ComplexValue::from_polar(leak, leak_phase_rad);
        Self {
            g1u: main.into(),
            g1l: leak,
            g2u: leak,
            g2l: main.into(),
        }
    }

    /// `(v1, v2)` for the given sideband inputs.
    pub fn apply(&self, v_u: ComplexValue, v_l: ComplexValue) -> (ComplexValue, ComplexValue) {
        (
            self.g1u * v_u + self.g1l * v_l,
            self.g2u * v_u + self.g2l * v_l,
        )
    }

    fn scale_port(&mut self, port: Port, factor: ComplexValue) {
        match port {
            Port::Port1 => {
                self.g1u *= factor;
                self.g1l *= factor;
            }
            Port::Port2 => {
                self.g2u *= factor;
                self.g2l *= factor;
            }
        }
    }
}

/// `offset + slope_per_ghz * f_GHz`
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearTerm {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub slope_per_ghz: f64,
}

impl LinearTerm {
    pub fn constant(offset: f64) -> Self {
        Self {
            offset,
            slope_per_ghz: 0.0,
        }
    }

    pub fn at(&self, if_freq_mhz: f64) -> f64 {
        self.offset + self.slope_per_ghz * if_freq_mhz * 1e-3
    }
}

/// Frequency-dependent analog imbalance: a linear trend plus a sinusoidal
/// standing-wave ripple.
///
/// The ripple is modeled as a single weak reflection `1 + rho e^{j theta}`,
/// so an amplitude ripple of `ripple_amp_db * cos(theta)` comes with a
/// quadrature phase ripple of `rho * sin(theta)` radians, where
/// `rho = ripple_amp_db * ln(10) / 20`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImbalanceProfile {
    #[serde(default)]
    pub amp_imbalance_db: LinearTerm,
    #[serde(default)]
    pub phase_imbalance_deg: LinearTerm,
    #[serde(default)]
    pub ripple_amp_db: f64,
    #[serde(default = "default_ripple_period")]
    pub ripple_period_mhz: f64,
    #[serde(default)]
    pub ripple_phase_deg: f64,
}

fn default_ripple_period() -> f64 {
    250.0
}

impl Default for ImbalanceProfile {
    fn default() -> Self {
        Self::zero()
    }
}

impl ImbalanceProfile {
    pub fn zero() -> Self {
        Self {
            amp_imbalance_db: LinearTerm::default(),
            phase_imbalance_deg: LinearTerm::default(),
            ripple_amp_db: 0.0,
            ripple_period_mhz: default_ripple_period(),
            ripple_phase_deg: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("amp_imbalance_db.offset", self.amp_imbalance_db.offset),
            (
                "amp_imbalance_db.slope_per_ghz",
                self.amp_imbalance_db.slope_per_ghz,
            ),
            (
                "phase_imbalance_deg.offset",
                self.phase_imbalance_deg.offset,
            ),
            (
                "phase_imbalance_deg.slope_per_ghz",
                self.phase_imbalance_deg.slope_per_ghz,
            ),
            ("ripple_amp_db", self.ripple_amp_db),
            ("ripple_period_mhz", self.ripple_period_mhz),
            ("ripple_phase_deg", self.ripple_phase_deg),
        ] {
            ensure_finite(name, v)?;
        }
        if self.ripple_amp_db < 0.0 {
            return Err(Error::invalid("ripple_amp_db", "must be >= 0"));
        }
        if self.ripple_period_mhz <= 0.0 {
            return Err(Error::invalid("ripple_period_mhz", "must be > 0"));
        }
        Ok(())
    }

    fn ripple_angle(&self, if_freq_mhz: f64) -> f64 {
        2.0 * std::f64::consts::PI * if_freq_mhz / self.ripple_period_mhz
            + self.ripple_phase_deg.to_radians()
    }

    /// Total amplitude imbalance in dB.
    pub fn amplitude_db(&self, if_freq_mhz: f64) -> f64 {
        self.amp_imbalance_db.at(if_freq_mhz)
            + self.ripple_amp_db * self.ripple_angle(if_freq_mhz).cos()
    }

    /// Total phase imbalance in degrees.
    pub fn phase_deg(&self, if_freq_mhz: f64) -> f64 {
        let rho = self.ripple_amp_db * LN_10 / 20.0;
        self.phase_imbalance_deg.at(if_freq_mhz)
            + (rho * self.ripple_angle(if_freq_mhz).sin()).to_degrees()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyPlan {
    pub lo1_ghz: f64,
    pub lo2_ghz: f64,
    pub if_grid_mhz: Vec<f64>,
    #[serde(default = "default_sideband")]
    pub sideband: Sideband,
}

fn default_sideband() -> Sideband {
    Sideband::Usb
}

impl FrequencyPlan {
    pub fn new(lo1_ghz: f64, lo2_ghz: f64, if_grid_mhz: Vec<f64>) -> Result<Self> {
        let plan = Self {
            lo1_ghz,
            lo2_ghz,
            if_grid_mhz,
            sideband: Sideband::Usb,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// `n` channels evenly spaced over `[start_mhz, stop_mhz]`.
    pub fn uniform(
        lo1_ghz: f64,
        lo2_ghz: f64,
        start_mhz: f64,
        stop_mhz: f64,
        n: usize,
    ) -> Result<Self> {
        let grid = match n {
            0 => Vec::new(),
            1 => vec![start_mhz],
            _ => (0..n)
                .map(|i| start_mhz + (stop_mhz - start_mhz) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Self::new(lo1_ghz, lo2_ghz, grid)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("lo1_ghz", self.lo1_ghz)?;
        ensure_finite("lo2_ghz", self.lo2_ghz)?;
        if self.lo1_ghz <= 0.0 || self.lo2_ghz <= 0.0 {
            return Err(Error::invalid("plan", "LO frequencies must be > 0"));
        }
        if self.if_grid_mhz.is_empty() {
            return Err(Error::invalid("if_grid_mhz", "empty IF grid"));
        }
        for (i, f) in self.if_grid_mhz.iter().enumerate() {
            ensure_finite("if_grid_mhz", *f)?;
            if *f <= 0.0 {
                return Err(Error::invalid("if_grid_mhz", "entries must be > 0"));
            }
            if i > 0 && *f <= self.if_grid_mhz[i - 1] {
                return Err(Error::invalid("if_grid_mhz", "must be strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.if_grid_mhz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.if_grid_mhz.is_empty()
    }

    pub fn if_freq_mhz(&self, channel: usize) -> Result<f64> {
        self.if_grid_mhz
            .get(channel)
            .copied()
            .ok_or(Error::ChannelOutOfRange {
                channel,
                len: self.len(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    Port1,
    Port2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftTarget {
    Port1,
    Port2,
    Both,
}

impl DriftTarget {
    fn hits(self, port: Port) -> bool {
        matches!(
            (self, port),
            (DriftTarget::Both, _)
                | (DriftTarget::Port1, Port::Port1)
                | (DriftTarget::Port2, Port::Port2)
        )
    }
}

/// Gain and phase perturbation of the IF ports; index 0 is port 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftEvent {
    pub dgain_db: [f64; 2],
    pub dphase_deg: [f64; 2],
    pub target: DriftTarget,
}

impl DriftEvent {
    pub fn zero() -> Self {
        Self {
            dgain_db: [0.0; 2],
            dphase_deg: [0.0; 2],
            target: DriftTarget::Both,
        }
    }

    pub fn port1(dgain_db: f64, dphase_deg: f64) -> Self {
        Self {
            dgain_db: [dgain_db, 0.0],
            dphase_deg: [dphase_deg, 0.0],
            target: DriftTarget::Port1,
        }
    }

    pub fn port2(dgain_db: f64, dphase_deg: f64) -> Self {
        Self {
            dgain_db: [0.0, dgain_db],
            dphase_deg: [0.0, dphase_deg],
            target: DriftTarget::Port2,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            dgain_db: self.dgain_db.map(|g| -g),
            dphase_deg: self.dphase_deg.map(|p| -p),
            target: self.target,
        }
    }

    /// Per-port sum; the target widens to cover both events.
    pub fn accumulate(&self, other: &DriftEvent) -> Self {
        let pick = |e: &DriftEvent, port: Port, v: [f64; 2]| {
            let i = port as usize;
            if e.target.hits(port) {
                v[i]
            } else {
                0.0
            }
        };
        let mut out = Self::zero();
        for port in [Port::Port1, Port::Port2] {
            let i = port as usize;
            out.dgain_db[i] = pick(self, port, self.dgain_db) + pick(other, port, other.dgain_db);
            out.dphase_deg[i] =
                pick(self, port, self.dphase_deg) + pick(other, port, other.dphase_deg);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for v in self.dgain_db.iter().chain(self.dphase_deg.iter()) {
            ensure_finite("drift", *v)?;
        }
        Ok(())
    }
}

/// An immutable, fully specified receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverInstance {
    pub topology: Topology,
    pub plan: FrequencyPlan,
    pub gains: Vec<GainMatrix>,
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

/// Synthesize per-channel gains from a topology and imbalance profile.
///
/// `nominal_analog_rejection_db` is ignored without IF hybrid.
pub fn build_receiver(
    topology: Topology,
    profile: &ImbalanceProfile,
    nominal_analog_rejection_db: f64,
    plan: &FrequencyPlan,
    noise_sigma: f64,
    rng_seed: u64,
) -> Result<ReceiverInstance> {
    profile.validate()?;
    plan.validate()?;
    ensure_finite("noise_sigma", noise_sigma)?;
    if noise_sigma < 0.0 {
        return Err(Error::invalid("noise_sigma", "must be >= 0"));
    }
    if topology == Topology::WithIfHybrid {
        ensure_finite("nominal_analog_rejection_db", nominal_analog_rejection_db)?;
    }

    let gains = plan
        .if_grid_mhz
        .iter()
        .map(|&f| {
            let amp_db = profile.amplitude_db(f);
            let phase = profile.phase_deg(f).to_radians();
            let g = match topology {
                Topology::NoIfHybrid => {
                    let mut g = GainMatrix::nominal_no_hybrid();
                    if amp_db != 0.0 || phase != 0.0 {
                        let a = 10f64.powf(amp_db / 20.0);
                        g.g2u *= ComplexValue::from_polar(a, phase);
                        g.g2l *= ComplexValue::from_polar(a, -phase);
                    }
                    g
                }
                Topology::WithIfHybrid => {
                    let m_a = 10f64.powf((nominal_analog_rejection_db + amp_db) / 10.0);
                    GainMatrix::with_hybrid(m_a, phase)
                }
            };
            GainMatrix::new(g.g1u, g.g1l, g.g2u, g.g2l)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ReceiverInstance {
        topology,
        plan: plan.clone(),
        gains,
        noise_sigma,
        rng_seed,
    })
}

impl ReceiverInstance {
    /// Single-channel receiver with explicit gains.
    pub fn from_gains(
        topology: Topology,
        plan: FrequencyPlan,
        gains: Vec<GainMatrix>,
        noise_sigma: f64,
        rng_seed: u64,
    ) -> Result<Self> {
        plan.validate()?;
        if gains.len() != plan.len() {
            return Err(Error::invalid(
                "gains",
                format!("{} gain matrices for {} channels", gains.len(), plan.len()),
            ));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma", "must be finite and >= 0"));
        }
        Ok(Self {
            topology,
            plan,
            gains,
            noise_sigma,
            rng_seed,
        })
    }

    pub fn channels(&self) -> usize {
        self.gains.len()
    }

    pub fn gain(&self, channel: usize) -> Result<&GainMatrix> {
        self.gains.get(channel).ok_or(Error::ChannelOutOfRange {
            channel,
            len: self.gains.len(),
        })
    }

    pub fn with_noise_sigma(&self, noise_sigma: f64) -> Self {
        Self {
            noise_sigma,
            ..self.clone()
        }
    }

    /// Exact, noiseless port voltages.
    pub fn analog_outputs(
        &self,
        channel: usize,
        v_u: ComplexValue,
        v_l: ComplexValue,
    ) -> Result<(ComplexValue, ComplexValue)> {
        Ok(self.gain(channel)?.apply(v_u, v_l))
    }

    /// Port voltages with i.i.d. Gaussian noise of std. dev. `noise_sigma`
    /// on each real component. No random draws are consumed when the
    /// receiver is noiseless.
    pub fn observe(
        &self,
        channel: usize,
        v_u: ComplexValue,
        v_l: ComplexValue,
        rng: &mut SimRng,
    ) -> Result<(ComplexValue, ComplexValue)> {
        let (v1, v2) = self.analog_outputs(channel, v_u, v_l)?;
        if self.noise_sigma == 0.0 {
            return Ok((v1, v2));
        }
        let s = self.noise_sigma;
        let mut n = || -> f64 { StandardNormal.sample(rng) };
        let n1 = ComplexValue::new(n(), n()) * s;
        let n2 = ComplexValue::new(n(), n()) * s;
        Ok((v1 + n1, v2 + n2))
    }

    /// Analog rejection `|g1U|^2 / |g1L|^2` of port 1.
    pub fn analog_rejection(&self, channel: usize) -> Result<Rejection> {
        if self.topology == Topology::NoIfHybrid {
            return Err(Error::NoAnalogRejection);
        }
        let g = self.gain(channel)?;
        Ok(Rejection::from_powers(g.g1u.norm_sqr(), g.g1l.norm_sqr()))
    }

    /// New instance with the drift applied to the targeted ports.
    pub fn apply_drift(&self, drift: &DriftEvent) -> Result<Self> {
        drift.validate()?;
        let mut out = self.clone();
        for port in [Port::Port1, Port::Port2] {
            let i = port as usize;
            let (dg, dp) = (drift.dgain_db[i], drift.dphase_deg[i]);
            if !drift.target.hits(port) || (dg == 0.0 && dp == 0.0) {
                continue;
            }
            let factor = ComplexValue::from_polar(10f64.powf(dg / 20.0), dp.to_radians());
            for g in &mut out.gains {
                g.scale_port(port, factor);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    fn c(re: f64, im: f64) -> ComplexValue {
        ComplexValue::new(re, im)
    }

    fn one_channel() -> FrequencyPlan {
        FrequencyPlan::new(662.0, 7.0, vec![500.0]).unwrap()
    }

    #[test]
    fn nominal_no_hybrid_is_exact() {
        let r = build_receiver(
            Topology::NoIfHybrid,
            &ImbalanceProfile::zero(),
            0.0,
            &one_channel(),
            0.0,
            1,
        )
        .unwrap();
        let s = FRAC_1_SQRT_2;
        let g = r.gains[0];
        assert_eq!(g.g1u, c(s, 0.0));
        assert_eq!(g.g1l, c(s, 0.0));
        assert_eq!(g.g2u, c(0.0, -s));
        assert_eq!(g.g2l, c(0.0, s));
    }

    #[test]
    fn hybrid_realizes_requested_rejection() {
        for target in [13.0, 20.0] {
            let r = build_receiver(
                Topology::WithIfHybrid,
                &ImbalanceProfile::zero(),
                target,
                &one_channel(),
                0.0,
                1,
            )
            .unwrap();
            let m = r.analog_rejection(0).unwrap();
            assert!((m.db() - target).abs() < 1e-12, "{}", m.db());
        }
    }

    #[test]
    fn ripple_moves_rejection_per_channel() {
        let profile = ImbalanceProfile {
            ripple_amp_db: 0.5,
            ripple_period_mhz: 250.0,
            ..ImbalanceProfile::zero()
        };
        let plan = FrequencyPlan::uniform(662.0, 7.0, 100.0, 975.0, 8).unwrap();
        let r = build_receiver(Topology::WithIfHybrid, &profile, 20.0, &plan, 0.0, 1).unwrap();
        let mut min: f64 = f64::MAX;
        let mut max: f64 = f64::MIN;
        for (ch, f) in plan.if_grid_mhz.iter().enumerate() {
            // direct evaluation of the ripple term
            let expected = 20.0 + 0.5 * (2.0 * std::f64::consts::PI * f / 250.0).cos();
            let got = r.analog_rejection(ch).unwrap().db();
            assert!(
                (got - expected).abs() < 1e-9,
                "ch {ch}: {got} vs {expected}"
            );
            min = min.min(got);
            max = max.max(got);
        }
        assert!(min < 20.0 && max > 20.0);
        assert!(max - min <= 1.0 + 1e-12);
    }

    #[test]
    fn identity_separation() {
        let g = GainMatrix::from_real(1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(
            g.apply(c(1.0, 0.0), c(0.0, 0.0)),
            (c(1.0, 0.0), c(0.0, 0.0))
        );
    }

    #[test]
    fn conjugate_convention_substitution() {
        let s = FRAC_1_SQRT_2;
        let g = GainMatrix::new(c(s, 0.0), c(s, 0.0), c(0.0, s), c(0.0, -s)).unwrap();
        let (v1, v2) = g.apply(c(1.0, 0.0), c(0.0, 0.0));
        assert_eq!(v1, c(s, 0.0));
        assert_eq!(v2, c(0.0, s));
    }

    #[test]
    fn analog_outputs_match_real_expansion() {
        let mut rng = rng_for(9, 0);
        use rand::Rng;
        for _ in 0..200 {
            let mut r = || rng.random_range(-2.0..2.0);
            let g = GainMatrix::new(c(r(), r()), c(r(), r()), c(r(), r()), c(r(), r())).unwrap();
            let (vu, vl) = (c(r(), r()), c(r(), r()));
            let (v1, v2) = g.apply(vu, vl);
            // (a+jb)(c+jd) = (ac - bd) + j(ad + bc)
            let mul = |x: ComplexValue, y: ComplexValue| {
                (x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re)
            };
            let (a, b) = mul(g.g1u, vu);
            let (cc, d) = mul(g.g1l, vl);
            assert!((v1.re - (a + cc)).abs() < 1e-14 && (v1.im - (b + d)).abs() < 1e-14);
            let (a, b) = mul(g.g2u, vu);
            let (cc, d) = mul(g.g2l, vl);
            assert!((v2.re - (a + cc)).abs() < 1e-14 && (v2.im - (b + d)).abs() < 1e-14);
        }
    }

    #[test]
    fn analog_rejection_edge_cases() {
        let plan = one_channel();
        let ideal = ReceiverInstance::from_gains(
            Topology::WithIfHybrid,
            plan.clone(),
            vec![GainMatrix::from_real(1.0, 0.0, 0.0, 1.0).unwrap()],
            0.0,
            0,
        )
        .unwrap();
        let m = ideal.analog_rejection(0).unwrap();
        assert!(m.is_above_cap());
        assert_eq!(m.db(), crate::ratio::CAP_DB);

        let leaky = ReceiverInstance::from_gains(
            Topology::WithIfHybrid,
            plan.clone(),
            vec![GainMatrix::from_real(1.0, 0.1, 0.1, 1.0).unwrap()],
            0.0,
            0,
        )
        .unwrap();
        assert!((leaky.analog_rejection(0).unwrap().linear() - 100.0).abs() < 1e-9);

        let nohyb = build_receiver(
            Topology::NoIfHybrid,
            &ImbalanceProfile::zero(),
            0.0,
            &plan,
            0.0,
            0,
        )
        .unwrap();
        assert!(matches!(
            nohyb.analog_rejection(0),
            Err(Error::NoAnalogRejection)
        ));
    }

    #[test]
    fn observe_noiseless_and_deterministic() {
        let plan = one_channel();
        let r = build_receiver(
            Topology::NoIfHybrid,
            &ImbalanceProfile::zero(),
            0.0,
            &plan,
            0.0,
            0,
        )
        .unwrap();
        let mut rng = rng_for(1, 0);
        let exact = r.analog_outputs(0, c(1.0, 0.0), c(0.3, 0.1)).unwrap();
        assert_eq!(
            r.observe(0, c(1.0, 0.0), c(0.3, 0.1), &mut rng).unwrap(),
            exact
        );

        let noisy = r.with_noise_sigma(0.01);
        let a = noisy
            .observe(0, c(1.0, 0.0), c(0.0, 0.0), &mut rng_for(5, 2))
            .unwrap();
        let b = noisy
            .observe(0, c(1.0, 0.0), c(0.0, 0.0), &mut rng_for(5, 2))
            .unwrap();
        assert_eq!(a.0.re.to_bits(), b.0.re.to_bits());
        assert_eq!(a.1.im.to_bits(), b.1.im.to_bits());
    }

    #[test]
    fn observe_noise_has_requested_sigma() {
        let plan = one_channel();
        let base = build_receiver(
            Topology::NoIfHybrid,
            &ImbalanceProfile::zero(),
            0.0,
            &plan,
            0.0,
            0,
        )
        .unwrap();
        let v1 = base.analog_outputs(0, c(1.0, 0.0), c(0.0, 0.0)).unwrap().0;
        let sigma = 1e-3 * v1.norm();
        let r = base.with_noise_sigma(sigma);
        let mut rng = rng_for(77, 0);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                r.observe(0, c(1.0, 0.0), c(0.0, 0.0), &mut rng)
                    .unwrap()
                    .0
                    .re
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let rel = (var.sqrt() - sigma).abs() / sigma;
        assert!(rel < 0.02, "relative sigma error {rel}");
    }

    #[test]
    fn drift_scales_targeted_ports() {
        let plan = one_channel();
        let r = build_receiver(
            Topology::NoIfHybrid,
            &ImbalanceProfile::zero(),
            0.0,
            &plan,
            0.0,
            0,
        )
        .unwrap();
        assert_eq!(r.apply_drift(&DriftEvent::zero()).unwrap(), r);

        let doubled = r
            .apply_drift(&DriftEvent::port1(20.0 * 2f64.log10(), 0.0))
            .unwrap();
        let (g0, g1) = (r.gains[0], doubled.gains[0]);
        assert!((g1.g1u.norm() - 2.0 * g0.g1u.norm()).abs() < 1e-15);
        assert!((g1.g1l.norm() - 2.0 * g0.g1l.norm()).abs() < 1e-15);
        assert_eq!(g1.g2u, g0.g2u);

        let turned = r.apply_drift(&DriftEvent::port2(0.0, 0.5)).unwrap();
        let rot = ComplexValue::from_polar(1.0, 0.5f64.to_radians());
        assert!((turned.gains[0].g2u - g0.g2u * rot).norm() < 1e-15);
        assert!((turned.gains[0].g2l - g0.g2l * rot).norm() < 1e-15);
        let shift = (turned.gains[0].g2u / g0.g2u).arg().to_degrees();
        assert!((shift - 0.5).abs() < 1e-12);
        assert_eq!(r.gains[0], g0, "original unchanged");
    }

    #[test]
    fn rejects_bad_inputs() {
        let empty = FrequencyPlan {
            lo1_ghz: 662.0,
            lo2_ghz: 7.0,
            if_grid_mhz: vec![],
            sideband: Sideband::Usb,
        };
        assert!(build_receiver(
            Topology::NoIfHybrid,
            &ImbalanceProfile::zero(),
            0.0,
            &empty,
            0.0,
            0
        )
        .is_err());
        let plan = one_channel();
        assert!(build_receiver(
            Topology::WithIfHybrid,
            &ImbalanceProfile::zero(),
            f64::NAN,
            &plan,
            0.0,
            0
        )
        .is_err());
        assert!(build_receiver(
            Topology::NoIfHybrid,
            &ImbalanceProfile::zero(),
            f64::NAN,
            &plan,
            0.0,
            0
        )
        .is_ok());
        assert!(build_receiver(
            Topology::NoIfHybrid,
            &ImbalanceProfile::zero(),
            0.0,
            &plan,
            f64::INFINITY,
            0
        )
        .is_err());
        assert!(FrequencyPlan::new(662.0, 7.0, vec![500.0, 400.0]).is_err());
        assert!(GainMatrix::from_real(0.0, 1.0, 0.0, 1.0).is_err());
    }
}
