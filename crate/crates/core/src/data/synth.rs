//! Synthetic offshore wind farm.
//!
//! A farm-level weather process (seasonal wind, turbulence, correlated sea
//! state) drives each turbine's operating state. The tower is a single
//! fore-aft and side-to-side mode; its response to turbulence, waves and
//! rotor harmonics is synthesised as a sum of sinusoids over a 10-minute
//! window, giving the base bending moment (rainflow-counted into DEM labels)
//! and the accelerations at the three sensor levels. A per-row excitation
//! factor is visible to the accelerometers but not to SCADA.
//!
//! Scales are arbitrary but plausible: moments in MNm, accelerations in g,
//! wave height in cm.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::schema::{AccelLevel, LABEL_COLUMNS, SCADA_COLUMNS, WAVE_COLUMNS};
use super::time::{add_months, day_of_year};
use super::Dataset;
use crate::fatigue::{dem, rainflow_count, LoadSeries, SnParams, DEFAULT_BINS};
use crate::math::{cos, exp, fmod, pow, sin, sqrt, tanh};
use crate::rng::{standard_normal, stream, uniform, Stream};
use crate::{Error, Result};

const WEATHER_TAG: u64 = 0x5745_4154;
const TURBINE_TAG: u64 = 0x5455_5242;
const OUTAGE_TAG: u64 = 0x4f55_5441;
const ROW_TAG: u64 = 0x524f_5753;

/// First tower mode of the reference turbine (Hz).
const BASE_F0: f64 = 0.30;
const CUT_IN: f64 = 3.5;
const RATED_WIND: f64 = 12.5;
const CUT_OUT: f64 = 25.0;
const RATED_POWER_KW: f64 = 8000.0;
const RATED_THRUST_MN: f64 = 1.25;
const RATED_RPM: f64 = 11.5;
const MIN_RPM: f64 = 4.5;
/// Lever arm from rotor thrust to the strain-gauge level (m).
const LEVER_M: f64 = 93.0;
/// Base moment per metre of hub displacement (MNm/m).
const MODAL_STIFFNESS: f64 = 180.0;
const TURBULENCE_LENGTH_M: f64 = 340.0;
const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TurbineSpec {
    pub id: String,
    /// Relative shift of the first tower mode: `f0 = 0.30 Hz · (1 + shift)`.
    pub resonance_shift: f64,
    /// Structural damping ratio.
    pub damping: f64,
    /// Multiplier on accelerometer noise.
    pub noise_scale: f64,
    /// Multiplier on hydrodynamic loading at this location.
    pub wave_load_factor: f64,
    /// Moment per unit hub displacement relative to the reference tower.
    pub stiffness_factor: f64,
}

impl Default for TurbineSpec {
    fn default() -> Self {
        Self {
            id: "turbine".into(),
            resonance_shift: 0.0,
            damping: 0.01,
            noise_scale: 1.0,
            wave_load_factor: 1.0,
            stiffness_factor: 1.0,
        }
    }
}

impl TurbineSpec {
    pub fn new(id: &str, resonance_shift: f64) -> Self {
        Self {
            id: id.to_string(),
            resonance_shift,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::invalid("turbine id must not be empty"));
        }
        if !(self.resonance_shift > -0.5 && self.resonance_shift < 1.0) {
            return Err(Error::invalid(format!("{}: resonance_shift must lie in (-0.5, 1)", self.id)));
        }
        if !(self.damping > 0.0 && self.damping <= 0.2) {
            return Err(Error::invalid(format!("{}: damping must lie in (0, 0.2]", self.id)));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::invalid(format!("{}: noise_scale must be positive", self.id)));
        }
        if !(self.wave_load_factor > 0.0 && self.wave_load_factor.is_finite()) {
            return Err(Error::invalid(format!("{}: wave_load_factor must be positive", self.id)));
        }
        if !(self.stiffness_factor > 0.0 && self.stiffness_factor.is_finite()) {
            return Err(Error::invalid(format!("{}: stiffness_factor must be positive", self.id)));
        }
        Ok(())
    }

    /// Stream key; depends on the id only, so turbines can be reordered or added freely.
    fn key(&self) -> u64 {
        self.id
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
    }

    fn f0(&self) -> f64 {
        BASE_F0 * (1.0 + self.resonance_shift)
    }
}

/// Farm-level sea-state parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SeaState {
    /// `Hs ≈ hs_base + hs_per_wind2 · U²` (m, U in m/s).
    pub hs_base: f64,
    pub hs_per_wind2: f64,
    /// Swell contribution scale (m).
    pub swell: f64,
}

impl Default for SeaState {
    fn default() -> Self {
        Self {
            hs_base: 0.2,
            hs_per_wind2: 0.011,
            swell: 0.35,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FarmSpec {
    pub seed: u64,
    /// Unix seconds of the first 10-minute record.
    pub start: i64,
    pub months: u32,
    /// Spacing between emitted records.
    pub row_interval_minutes: u32,
    /// Per-record probability that an outage starts, and that a running outage ends.
    pub outage_start: f64,
    pub outage_end: f64,
    pub sea: SeaState,
    /// Sampling interval of the synthesised series (s).
    pub series_dt: f64,
    pub series_duration_s: f64,
    pub sn: SnParams,
    pub n_bins: usize,
    pub turbines: Vec<TurbineSpec>,
}

impl Default for FarmSpec {
    /// Fleet leader, a near-identical neighbour and a turbine with a 20%
    /// stiffer first mode, lower damping, noisier accelerometers and more
    /// wave exposure.
    fn default() -> Self {
        Self {
            seed: 0,
            start: 1_577_836_800,
            months: 24,
            row_interval_minutes: 240,
            outage_start: 0.003,
            outage_end: 0.06,
            sea: SeaState::default(),
            series_dt: 0.5,
            series_duration_s: 600.0,
            sn: SnParams::default(),
            n_bins: DEFAULT_BINS,
            turbines: vec![
                TurbineSpec::new("fleet_leader", 0.0),
                TurbineSpec::new("mp01", 0.01),
                TurbineSpec {
                    damping: 0.005,
                    noise_scale: 3.0,
                    wave_load_factor: 1.3,
                    ..TurbineSpec::new("mp02", 0.20)
                },
            ],
        }
    }
}

impl FarmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.months == 0 {
            return Err(Error::invalid("months must be >= 1"));
        }
        if self.row_interval_minutes == 0 || self.row_interval_minutes % 10 != 0 {
            return Err(Error::invalid("row interval must be a positive multiple of 10 minutes"));
        }
        for (name, p) in [("outage_start", self.outage_start), ("outage_end", self.outage_end)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} must be a probability")));
            }
        }
        if self.outage_end == 0.0 && self.outage_start > 0.0 {
            return Err(Error::invalid("outages must be able to end"));
        }
        if !(self.series_dt > 0.0 && self.series_duration_s >= 2.0 * self.series_dt) {
            return Err(Error::invalid("series needs at least two samples"));
        }
        if !(self.sea.hs_base > 0.0 && self.sea.hs_per_wind2 >= 0.0 && self.sea.swell >= 0.0) {
            return Err(Error::invalid("sea-state parameters must be positive"));
        }
        if self.n_bins == 0 {
            return Err(Error::invalid("n_bins must be >= 1"));
        }
        self.sn.validate()?;
        if self.turbines.is_empty() {
            return Err(Error::invalid("farm needs at least one turbine"));
        }
        for (i, t) in self.turbines.iter().enumerate() {
            t.validate()?;
            if self.turbines[..i].iter().any(|o| o.id == t.id) {
                return Err(Error::invalid(format!("duplicate turbine id {}", t.id)));
            }
            if 0.5 / self.series_dt <= 1.6 * t.f0() {
                return Err(Error::invalid("series_dt too coarse for the tower mode"));
            }
        }
        Ok(())
    }

    /// Timestamps of every record slot (before outages).
    pub fn slot_timestamps(&self) -> Result<Vec<i64>> {
        let end = add_months(self.start, self.months)?;
        let step = i64::from(self.row_interval_minutes) * 60;
        Ok((0..).map(|k| self.start + k * step).take_while(|t| *t < end).collect())
    }

    pub fn turbine_index(&self, id: &str) -> Option<usize> {
        self.turbines.iter().position(|t| t.id == id)
    }
}

#[derive(Debug, Clone, Copy)]
struct Weather {
    wind: f64,
    sigma_wind: f64,
    wind_dir: f64,
    hs_m: f64,
    tp: f64,
    wave_dir: f64,
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

fn ar1(prev: f64, phi: f64, rng: &mut Stream) -> f64 {
    phi * prev + sqrt(1.0 - phi * phi) * standard_normal(rng)
}

fn wrap_deg(x: f64) -> f64 {
    let r = fmod(x, 360.0);
    if r < 0.0 {
        r + 360.0
    } else {
        r
    }
}

fn weather(spec: &FarmSpec, slots: &[i64]) -> Result<Vec<Weather>> {
    let mut rng = stream(spec.seed, &[WEATHER_TAG]);
    let hours = f64::from(spec.row_interval_minutes) / 60.0;
    let phi = |tau_h: f64| exp(-hours / tau_h);
    let (mut a, mut b, mut s) = (standard_normal(&mut rng), standard_normal(&mut rng), standard_normal(&mut rng));
    let mut lagged: Option<f64> = None;
    let mut out = Vec::with_capacity(slots.len());
    for &ts in slots {
        a = ar1(a, phi(30.0), &mut rng);
        b = ar1(b, phi(60.0), &mut rng);
        s = ar1(s, phi(36.0), &mut rng);
        let doy = day_of_year(ts)?;
        let seasonal = 8.8 + 2.4 * cos(2.0 * PI * (doy - 20.0) / 365.25);
        let wind = (seasonal * exp(0.42 * a - 0.09)).clamp(0.2, 32.0);
        let ti = (0.055 + 1.2 / (wind + 4.0)) * exp(0.22 * standard_normal(&mut rng));
        let w_lag = match lagged {
            None => wind,
            Some(prev) => prev + (1.0 - phi(6.0)) * (wind - prev),
        };
        lagged = Some(w_lag);
        let hs_m = (spec.sea.hs_base + spec.sea.hs_per_wind2 * w_lag * w_lag + spec.sea.swell * s.abs())
            * exp(0.1 * standard_normal(&mut rng));
        let tp = (2.8 + 2.0 * sqrt(hs_m) + 1.2 * s.abs() + 0.4 * standard_normal(&mut rng)).max(2.0);
        // Prevailing south-westerly sector; never crosses north, where yaw
        // and direction readings would land on opposite sides of 0/360.
        let wind_dir = 225.0 + 110.0 * tanh(0.65 * b);
        let wave_dir = wrap_deg(wind_dir + 15.0 * standard_normal(&mut rng) + 35.0 * s);
        out.push(Weather {
            wind,
            sigma_wind: wind * ti,
            wind_dir,
            hs_m,
            tp,
            wave_dir,
        });
    }
    Ok(out)
}

fn outages(spec: &FarmSpec, turbine: &TurbineSpec, slots: usize) -> Vec<bool> {
    let mut rng = stream(spec.seed, &[TURBINE_TAG, turbine.key(), OUTAGE_TAG]);
    let mut down = false;
    (0..slots)
        .map(|_| {
            let u = uniform(&mut rng, 0.0, 1.0);
            down = if down { u >= spec.outage_end } else { u < spec.outage_start };
            down
        })
        .collect()
}

/// Rotor thrust (MN) at hub wind speed `u`.
fn thrust(u: f64) -> f64 {
    if !(CUT_IN..CUT_OUT).contains(&u) {
        0.00055 * u * u
    } else if u < RATED_WIND {
        RATED_THRUST_MN * (u / RATED_WIND) * (u / RATED_WIND)
    } else {
        RATED_THRUST_MN * pow(RATED_WIND / u, 1.5)
    }
}

fn thrust_slope(u: f64) -> f64 {
    let h = 0.05;
    ((thrust(u + h) - thrust(u - h)) / (2.0 * h)).abs()
}

/// Everything about one record except the synthesised series.
struct RowState {
    scada: [f64; 7],
    wave: [f64; 3],
    /// FA and SS: `(mean moment, damping ratio, latent factor)`.
    fa: (f64, f64, f64),
    ss: (f64, f64, f64),
    wind: f64,
    sigma_wind: f64,
    hs_m: f64,
    tp: f64,
    misalignment_rad: f64,
    rpm: f64,
    thrust: f64,
    operating: bool,
}

fn row_state(turbine: &TurbineSpec, w: &Weather, rng: &mut Stream) -> RowState {
    let n = |rng: &mut Stream| standard_normal(rng);
    let wind = (w.wind * (1.0 + 0.03 * n(rng))).max(0.1);
    let sigma_wind = w.sigma_wind * (1.0 + 0.05 * n(rng)).max(0.2);
    let operating = (CUT_IN..CUT_OUT).contains(&wind);
    let rpm = if operating {
        (MIN_RPM + (RATED_RPM - MIN_RPM) * (wind - CUT_IN) / (9.5 - CUT_IN)).min(RATED_RPM) + 0.1 * n(rng)
    } else {
        (0.6 + 0.3 * n(rng)).abs()
    };
    let power = if operating {
        let frac = ((wind * wind * wind - CUT_IN * CUT_IN * CUT_IN)
            / (RATED_WIND * RATED_WIND * RATED_WIND - CUT_IN * CUT_IN * CUT_IN))
            .clamp(0.0, 1.0);
        (RATED_POWER_KW * frac * (1.0 + 0.015 * n(rng))).max(0.0)
    } else {
        0.0
    };
    let pitch = if !operating {
        86.0 + n(rng)
    } else if wind > RATED_WIND {
        4.5 * pow(wind - RATED_WIND, 0.7) + 0.3 * n(rng)
    } else {
        0.3 * n(rng)
    };
    let yaw = wrap_deg(w.wind_dir + 4.0 * n(rng));
    let wdir = wrap_deg(w.wind_dir + 2.0 * n(rng));
    let t = thrust(wind);
    let aero_fa = if operating { 0.045 + 0.01 * n(rng).clamp(-2.0, 2.0) } else { 0.004 };
    let aero_ss = if operating { 0.004 } else { 0.001 };
    let z1 = n(rng);
    let z2 = n(rng);
    let latent_fa = exp(0.05 * z1);
    let latent_ss = exp(0.05 * (0.5 * z1 + 0.866 * z2));
    RowState {
        scada: [rpm, yaw, pitch, power, wind, sigma_wind, wdir],
        wave: [100.0 * w.hs_m, w.tp, w.wave_dir],
        fa: (t * LEVER_M, turbine.damping + aero_fa, latent_fa),
        ss: (0.6 * power / RATED_POWER_KW, turbine.damping + aero_ss, latent_ss),
        wind,
        sigma_wind,
        hs_m: w.hs_m,
        tp: w.tp,
        misalignment_rad: (w.wave_dir - yaw) * PI / 180.0,
        rpm,
        thrust: t,
        operating,
    }
}

/// Kaimal longitudinal turbulence spectrum with a simple rotor admittance.
fn turbulence_psd(f: f64, u: f64, sigma: f64) -> f64 {
    let lu = TURBULENCE_LENGTH_M / u.max(0.5);
    let kaimal = sigma * sigma * 4.0 * lu / pow(1.0 + 6.0 * f * lu, 5.0 / 3.0);
    let x = f * 80.0 / u.max(0.5);
    kaimal / (1.0 + x * x)
}

/// Pierson-Moskowitz elevation spectrum (m²/Hz).
fn wave_psd(f: f64, hs: f64, tp: f64) -> f64 {
    let fp = 1.0 / tp;
    let r = fp / f;
    let r4 = r * r * r * r;
    5.0 / 16.0 * hs * hs * r4 / f * exp(-1.25 * r4)
}

/// Base moment per metre of wave elevation (MNm/m).
fn wave_moment_gain(f: f64, factor: f64) -> f64 {
    let x = f / 0.2;
    3.0 * factor * (1.0 + x * x)
}

fn transfer_sq(f: f64, f0: f64, zeta: f64) -> f64 {
    let r = f / f0;
    let a = 1.0 - r * r;
    let b = 2.0 * zeta * r;
    1.0 / (a * a + b * b)
}

/// Frequency nodes with their band edges: log-spaced below the mode, a
/// dense band centred exactly on the mode, and a sparse tail.
fn frequency_nodes(f0: f64, duration: f64, nyquist: f64) -> Vec<(f64, f64, f64)> {
    let mut centres = Vec::new();
    let f_lo = 1.0 / duration;
    let f_band = 0.6 * f0;
    for i in 0..14 {
        centres.push(f_lo * pow(f_band / f_lo, (i as f64 + 0.5) / 14.0));
    }
    let half = 36;
    let step = 0.4 * f0 / half as f64;
    for i in 0..=2 * half {
        centres.push(f0 + (i as f64 - half as f64) * step);
    }
    let f_hi = (0.95 * nyquist).min(4.0 * f0);
    let tail_start = 1.4 * f0 + step;
    for i in 0..10 {
        centres.push(tail_start + (f_hi - tail_start) * (i as f64 + 0.5) / 10.0);
    }
    let n = centres.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { f_lo * 0.5 } else { 0.5 * (centres[i - 1] + centres[i]) };
            let hi = if i + 1 == n { f_hi } else { 0.5 * (centres[i] + centres[i + 1]) };
            (centres[i], lo, hi)
        })
        .collect()
}

/// Band integral of `psd(f) · |H(f)|²` by the midpoint rule.
fn band_energy<F: Fn(f64) -> f64>(lo: f64, hi: f64, f0: f64, zeta: f64, psd: F) -> f64 {
    const SUB: usize = 8;
    let df = (hi - lo) / SUB as f64;
    (0..SUB)
        .map(|j| {
            let f = lo + (j as f64 + 0.5) * df;
            psd(f) * transfer_sq(f, f0, zeta)
        })
        .sum::<f64>()
        * df
}

struct Component {
    freq: f64,
    amp: f64,
    phase: f64,
}

fn direction_components(
    state: &RowState,
    turbine: &TurbineSpec,
    nodes: &[(f64, f64, f64)],
    fore_aft: bool,
    rng: &mut Stream,
) -> Vec<Component> {
    let f0 = turbine.f0();
    let (_, zeta, latent) = if fore_aft { state.fa } else { state.ss };
    let dir = if fore_aft {
        cos(state.misalignment_rad) * cos(state.misalignment_rad)
    } else {
        sin(state.misalignment_rad) * sin(state.misalignment_rad) + 0.1
    };
    let turb_gain = LEVER_M * thrust_slope(state.wind) * if fore_aft { 1.0 } else { 0.12 };
    let psd = |f: f64| {
        latent
            * latent
            * (turb_gain * turb_gain * turbulence_psd(f, state.wind, state.sigma_wind)
                + dir * sq(wave_moment_gain(f, turbine.wave_load_factor)) * wave_psd(f, state.hs_m, state.tp))
    };
    let mut comps: Vec<Component> = nodes
        .iter()
        .map(|&(fc, lo, hi)| {
            let var = band_energy(lo, hi, f0, zeta, psd);
            // Complex Gaussian coefficient: Rayleigh amplitude, uniform phase.
            let (a, b) = (standard_normal(rng), standard_normal(rng));
            Component {
                freq: fc,
                amp: sqrt(var) * sqrt(a * a + b * b),
                phase: uniform(rng, 0.0, 2.0 * PI),
            }
        })
        .collect();
    if state.operating {
        let f1 = state.rpm / 60.0;
        let (a1, a3) = if fore_aft {
            (0.12 * sq(state.rpm / RATED_RPM), 0.03 * state.thrust * LEVER_M)
        } else {
            (0.5 * sq(state.rpm / RATED_RPM), 0.015 * state.thrust * LEVER_M)
        };
        for (f, a) in [(f1, a1), (3.0 * f1, a3)] {
            let gain = sqrt(transfer_sq(f, f0, zeta));
            comps.push(Component {
                freq: f,
                amp: a * gain * (1.0 + 0.2 * standard_normal(rng)).abs(),
                phase: uniform(rng, 0.0, 2.0 * PI),
            });
        }
    }
    comps
}

/// Moment series (MNm) and hub acceleration (g) from a component set.
fn synthesise(comps: &[Component], mean: f64, stiffness: f64, dt: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut moment = vec![mean; n];
    let mut accel = vec![0.0; n];
    for c in comps {
        let w = 2.0 * PI * c.freq;
        let acc_amp = -w * w * c.amp / stiffness / GRAVITY;
        let (step_c, step_s) = (cos(w * dt), sin(w * dt));
        let (mut re, mut im) = (cos(c.phase), sin(c.phase));
        for k in 0..n {
            moment[k] += c.amp * re;
            accel[k] += acc_amp * re;
            let next = re * step_c - im * step_s;
            im = re * step_s + im * step_c;
            re = next;
        }
    }
    (moment, accel)
}

/// Mode-shape ordinate at each accelerometer level relative to the hub.
fn mode_shape(level: AccelLevel) -> f64 {
    match level {
        AccelLevel::Lat017 => 0.06,
        AccelLevel::Lat038 => 0.25,
        AccelLevel::Lat077 => 0.66,
    }
}

const SENSOR_NOISE_G: f64 = 0.0012;

fn accel_stats(hub: &[f64], level: AccelLevel, noise_scale: f64, rng: &mut Stream) -> [f64; 3] {
    let phi = mode_shape(level);
    let (mut max, mut min, mut sq) = (f64::NEG_INFINITY, f64::INFINITY, 0.0);
    for &a in hub {
        let v = phi * a;
        max = max.max(v);
        min = min.min(v);
        sq += v * v;
    }
    let rms = sqrt(sq / hub.len() as f64);
    // White sensor noise: raises the rms and pushes the extremes outwards.
    let sn = SENSOR_NOISE_G * noise_scale;
    let rms_obs = sqrt(rms * rms + sn * sn) * (1.0 + 0.02 * standard_normal(rng));
    let max_obs = max + sn * (3.0 + 0.3 * standard_normal(rng));
    let min_obs = min - sn * (3.0 + 0.3 * standard_normal(rng));
    [max_obs, min_obs, rms_obs]
}

struct Record {
    values: Vec<f64>,
    series: [LoadSeries; 2],
}

fn record(spec: &FarmSpec, turbine: &TurbineSpec, w: &Weather, slot: usize, nodes: &[(f64, f64, f64)]) -> Result<Record> {
    let mut rng = stream(spec.seed, &[TURBINE_TAG, turbine.key(), ROW_TAG, slot as u64]);
    let state = row_state(turbine, w, &mut rng);
    let n = (spec.series_duration_s / spec.series_dt) as usize;
    let fa = direction_components(&state, turbine, nodes, true, &mut rng);
    let ss = direction_components(&state, turbine, nodes, false, &mut rng);
    let stiffness = MODAL_STIFFNESS * turbine.stiffness_factor;
    let (m_fa, a_fa) = synthesise(&fa, state.fa.0, stiffness, spec.series_dt, n);
    let (m_ss, a_ss) = synthesise(&ss, state.ss.0, stiffness, spec.series_dt, n);

    let mut values = Vec::with_capacity(30);
    values.extend_from_slice(&state.scada);
    values.extend_from_slice(&state.wave);
    for level in AccelLevel::ALL {
        let f = accel_stats(&a_fa, level, turbine.noise_scale, &mut rng);
        let s = accel_stats(&a_ss, level, turbine.noise_scale, &mut rng);
        values.extend_from_slice(&f);
        values.extend_from_slice(&s);
    }
    let tl = LoadSeries::new(m_ss, spec.series_dt)?;
    let tn = LoadSeries::new(m_fa, spec.series_dt)?;
    values.push(dem(&rainflow_count(&tl, spec.n_bins)?, &spec.sn));
    values.push(dem(&rainflow_count(&tn, spec.n_bins)?, &spec.sn));
    Ok(Record { values, series: [tl, tn] })
}

fn column_names() -> Vec<String> {
    let mut names: Vec<String> = SCADA_COLUMNS.iter().chain(&WAVE_COLUMNS).map(|s| s.to_string()).collect();
    for level in AccelLevel::ALL {
        names.extend(level.columns());
    }
    names.extend(LABEL_COLUMNS.iter().map(|s| s.to_string()));
    names
}

fn nodes_for(spec: &FarmSpec, turbine: &TurbineSpec) -> Vec<(f64, f64, f64)> {
    frequency_nodes(turbine.f0(), spec.series_duration_s, 0.5 / spec.series_dt)
}

/// Generates the dataset of turbine `index`.
pub fn synth_turbine(spec: &FarmSpec, index: usize) -> Result<Dataset> {
    spec.validate()?;
    let turbine = spec
        .turbines
        .get(index)
        .ok_or_else(|| Error::invalid(format!("turbine index {index} out of range")))?;
    let slots = spec.slot_timestamps()?;
    let wx = weather(spec, &slots)?;
    let down = outages(spec, turbine, slots.len());
    let nodes = nodes_for(spec, turbine);
    let names = column_names();
    let mut columns: Vec<Vec<f64>> = names.iter().map(|_| Vec::new()).collect();
    let mut stamps = Vec::new();
    for (k, &ts) in slots.iter().enumerate() {
        if down[k] {
            continue;
        }
        let rec = record(spec, turbine, &wx[k], k, &nodes)?;
        for (col, v) in columns.iter_mut().zip(rec.values) {
            col.push(v);
        }
        stamps.push(ts);
    }
    Dataset::new(&turbine.id, stamps, names, columns)
}

/// Generates every turbine of the farm, in spec order.
pub fn synth_farm(spec: &FarmSpec) -> Result<Vec<Dataset>> {
    (0..spec.turbines.len()).map(|i| synth_turbine(spec, i)).collect()
}

/// Regenerates the side-to-side and fore-aft moment series behind the
/// record of turbine `index` at `timestamp`.
pub fn synth_load_series(spec: &FarmSpec, index: usize, timestamp: i64) -> Result<[LoadSeries; 2]> {
    spec.validate()?;
    let turbine = spec
        .turbines
        .get(index)
        .ok_or_else(|| Error::invalid(format!("turbine index {index} out of range")))?;
    let slots = spec.slot_timestamps()?;
    let k = slots
        .binary_search(&timestamp)
        .map_err(|_| Error::invalid(format!("no record slot at timestamp {timestamp}")))?;
    let wx = weather(spec, &slots[..=k])?;
    Ok(record(spec, turbine, &wx[k], k, &nodes_for(spec, turbine))?.series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_cover_the_mode_contiguously() {
        let nodes = frequency_nodes(0.3, 600.0, 1.0);
        assert!(nodes.iter().any(|n| (n.0 - 0.3).abs() < 1e-12));
        for w in nodes.windows(2) {
            assert!((w[0].2 - w[1].1).abs() < 1e-12);
            assert!(w[0].0 < w[1].0);
        }
    }

    #[test]
    fn thrust_curve_is_continuous_at_rated() {
        assert!((thrust(RATED_WIND - 1e-9) - thrust(RATED_WIND)).abs() < 1e-6);
    }
}
