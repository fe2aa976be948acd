//! Deterministic synthetic engine deck.
//!
//! Records are produced by a closed-form surrogate of a combined-cycle
//! engine: three latent operating variables (Mach number, altitude, throttle)
//! drive a standard-atmosphere model, an intake recovery schedule and a set
//! of cycle relations, and every sensor column receives its own small
//! multiplicative jitter. Both targets are then computed *from the recorded
//! columns* by [`surrogate_targets`], so with `noise_sd = 0` the targets are
//! an exact function of the inputs — which is what makes the generator
//! usable as a regression oracle.
//!
//! Determinism contract: sample `i` of a run is produced by an independent
//! generator seeded with `mix_seed(seed, i)`, and the draw order within a
//! sample is fixed (Mach, altitude, throttle, the 15 sensor jitters, the two
//! target-noise draws). Two runs with the same config are bitwise identical,
//! and changing `count` never changes the records shared by both runs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::mix_seed;
use crate::schema::SampleRecord;
use crate::{Error, Result};

/// Standard gravitational acceleration, m/s^2.
pub const GRAVITY: f64 = 9.806_65;
/// Ratio of specific heats for air.
const GAMMA: f64 = 1.4;
/// Specific gas constant for air, J/(kg K).
const R_AIR: f64 = 287.052_87;
/// Installation reference area for the drag bookkeeping term, m^2.
const REF_AREA: f64 = 0.05;
/// Test-bench resolution: below this net thrust [N] the specific-impulse
/// reading is meaningless and is recorded as zero. Keeping a dead band,
/// rather than cutting exactly at zero, also keeps relative errors bounded
/// for every record that survives the zero-impulse drop.
pub const MIN_MEASURABLE_THRUST: f64 = 150.0;
/// Corrected-flow scale tying intake mass flow to stagnation conditions.
const MDOT_SCALE: f64 = 2.0e-3;
/// Number of per-sensor jitter draws consumed by one record.
const JITTER_DRAWS: usize = 17;

/// International Standard Atmosphere, valid up to 32 km.
///
/// Returns `(static temperature [K], static pressure [Pa])`.
pub fn isa_atmosphere(altitude_m: f64) -> (f64, f64) {
    let h = altitude_m.clamp(0.0, 32_000.0);
    let t11: f64 = 288.15 - 0.0065 * 11_000.0;
    let p11 = 101_325.0 * (t11 / 288.15).powf(GRAVITY / (0.0065 * R_AIR));
    if h <= 11_000.0 {
        let t = 288.15 - 0.0065 * h;
        let p = 101_325.0 * (t / 288.15).powf(GRAVITY / (0.0065 * R_AIR));
        (t, p)
    } else if h <= 20_000.0 {
        let p = p11 * (-GRAVITY * (h - 11_000.0) / (R_AIR * t11)).exp();
        (t11, p)
    } else {
        let p20 = p11 * (-GRAVITY * 9_000.0 / (R_AIR * t11)).exp();
        let t = t11 + 0.001 * (h - 20_000.0);
        let p = p20 * (t11 / t).powf(GRAVITY / (0.001 * R_AIR));
        (t, p)
    }
}

/// Military-standard intake total-pressure recovery schedule.
pub fn intake_recovery(mach: f64) -> f64 {
    if mach <= 1.0 {
        1.0
    } else {
        1.0 - 0.075 * (mach - 1.0).powf(1.35)
    }
}

/// Flight regime of a generated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Supersonic cruise: Mach 2-4, 8-24 km, throttle 0.35-1. Clean deck
    /// with light sensor jitter; thrust is positive everywhere.
    HighSpeed,
    /// Take-off through transonic acceleration: Mach 0-2.3, 0-11 km,
    /// throttle 0.05-1. Noisier sensors, and installation drag drives
    /// net thrust negative in the low-throttle / high-Mach corner.
    LowSpeed,
}

impl Regime {
    pub const ALL: [Regime; 2] = [Regime::HighSpeed, Regime::LowSpeed];

    pub fn name(self) -> &'static str {
        match self {
            Regime::HighSpeed => "high-speed",
            Regime::LowSpeed => "low-speed",
        }
    }

    /// Short tag used in file names and CSV cells.
    pub fn tag(self) -> &'static str {
        match self {
            Regime::HighSpeed => "hs",
            Regime::LowSpeed => "ls",
        }
    }

    pub fn parse(text: &str) -> Result<Regime> {
        match text.trim().to_ascii_lowercase().as_str() {
            "hs" | "high-speed" | "high_speed" | "highspeed" | "high" => Ok(Regime::HighSpeed),
            "ls" | "low-speed" | "low_speed" | "lowspeed" | "low" => Ok(Regime::LowSpeed),
            other => Err(Error::Invalid(format!(
                "unknown regime {other:?} (expected hs or ls)"
            ))),
        }
    }

    pub fn mach_range(self) -> (f64, f64) {
        match self {
            Regime::HighSpeed => (2.0, 4.0),
            Regime::LowSpeed => (0.05, 2.3),
        }
    }

    pub fn altitude_range(self) -> (f64, f64) {
        match self {
            Regime::HighSpeed => (8_000.0, 24_000.0),
            Regime::LowSpeed => (0.0, 11_000.0),
        }
    }

    pub fn throttle_range(self) -> (f64, f64) {
        match self {
            Regime::HighSpeed => (0.35, 1.0),
            Regime::LowSpeed => (0.05, 1.0),
        }
    }

    /// Relative standard deviation of the per-sensor jitters.
    pub fn sensor_jitter(self) -> f64 {
        match self {
            Regime::HighSpeed => 0.006,
            Regime::LowSpeed => 0.015,
        }
    }

    /// Default relative noise applied to the recorded targets.
    pub fn default_noise_sd(self) -> f64 {
        match self {
            Regime::HighSpeed => 0.005,
            Regime::LowSpeed => 0.012,
        }
    }

    /// Default mini-batch size used when training on this regime.
    pub fn default_batch_size(self) -> usize {
        match self {
            Regime::HighSpeed => 100,
            Regime::LowSpeed => 40,
        }
    }
}

/// Configuration of one generated dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub regime: Regime,
    pub count: usize,
    /// Relative standard deviation of the multiplicative target noise.
    pub noise_sd: f64,
    pub seed: u64,
}

impl GenConfig {
    pub fn new(regime: Regime, count: usize, seed: u64) -> Self {
        GenConfig {
            regime,
            count,
            noise_sd: regime.default_noise_sd(),
            seed,
        }
    }

    pub fn with_noise_sd(mut self, noise_sd: f64) -> Self {
        self.noise_sd = noise_sd;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Invalid("sample count must be positive".into()));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(Error::Invalid(format!(
                "noise standard deviation must be >= 0, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

/// Generates `config.count` records. See the module docs for the
/// determinism contract.
pub fn generate(config: &GenConfig) -> Result<Vec<SampleRecord>> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.count);
    for index in 0..config.count {
        records.push(generate_one(config, index as u64));
    }
    Ok(records)
}

fn generate_one(config: &GenConfig, index: u64) -> SampleRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, index));
    let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();

    let regime = config.regime;
    let mach = uniform(&mut rng, regime.mach_range());
    let altitude = uniform(&mut rng, regime.altitude_range());
    let throttle = uniform(&mut rng, regime.throttle_range());

    let mut etas = [0.0; JITTER_DRAWS];
    for eta in etas.iter_mut() {
        *eta = rng.sample::<f64, _>(StandardNormal);
    }
    let thrust_noise: f64 = rng.sample(StandardNormal);
    let impulse_noise: f64 = rng.sample(StandardNormal);

    build_record(
        regime,
        mach,
        altitude,
        throttle,
        &etas,
        (
            1.0 + config.noise_sd * thrust_noise,
            1.0 + config.noise_sd * impulse_noise,
        ),
    )
}

/// Record at the nominal operating point: all sensor jitters and target
/// noise zero. Used by design checks and documentation examples.
pub fn nominal_record(regime: Regime, mach: f64, altitude: f64, throttle: f64) -> SampleRecord {
    build_record(
        regime,
        mach,
        altitude,
        throttle,
        &[0.0; JITTER_DRAWS],
        (1.0, 1.0),
    )
}

fn build_record(
    regime: Regime,
    mach: f64,
    altitude: f64,
    throttle: f64,
    etas: &[f64; JITTER_DRAWS],
    noise_factors: (f64, f64),
) -> SampleRecord {
    let js = regime.sensor_jitter();
    let jit = |k: f64, eta: f64| 1.0 + k * js * eta;

    let (t_amb, p_amb) = isa_atmosphere(altitude);
    let ram = 1.0 + 0.2 * mach * mach;
    let t0 = t_amb * ram;
    let p0 = p_amb * ram.powf(3.5);

    let sigma = (intake_recovery(mach) * jit(0.4, etas[0])).clamp(0.30, 1.0);
    let mdot =
        MDOT_SCALE * p0 * sigma / t0.sqrt() * (0.60 + 0.40 * throttle) * jit(1.0, etas[1]);
    // The throttle actually reaching the fuel system; the combined throttle
    // angle column encodes it exactly, so targets can be reconstructed.
    let tau = throttle * jit(0.5, etas[2]);

    let fan_speed = (0.52 + 0.44 * tau + 0.0075 * mach) * jit(1.0, etas[3]);
    let compressor_speed = (0.58 + 0.40 * tau.powf(0.85)) * jit(1.0, etas[4]);
    let t5 = t0 * (1.15 + 2.05 * tau) * jit(0.8, etas[5]);
    let p2 = p0 * sigma * 0.985 * jit(1.0, etas[6]);
    let p5 = p2 * (0.38 + 0.40 * tau) * jit(1.0, etas[7]);
    let epr = ((1.10 + 1.30 * tau) * (1.0 - 0.045 * mach) * jit(1.0, etas[8])).max(1.02);
    let lever_angle = 18.0 + 95.0 * tau * jit(0.5, etas[9]);
    let turbine_opening = ((0.95 - 0.52 * tau) * jit(1.0, etas[10])).max(0.05);
    let bypass_ratio = (0.62 - 0.0325 * mach + 0.10 * (1.0 - tau)) * jit(1.0, etas[11]);
    let combined_angle = 15.0 + 100.0 * tau;
    let fuel_flow = (0.02 + 3.0 * tau * (0.25 + 0.75 * ((mach - 1.5) / 2.5).clamp(0.0, 1.0)))
        * jit(1.0, etas[12]);
    let throat_area = 0.28 * (0.80 + 0.25 * tau) * jit(0.5, etas[13]);
    let exit_area = throat_area * (1.30 + 0.125 * mach.min(4.0)) * jit(0.5, etas[14]);
    // Ambient statics are measured through probes too. Without this, decks
    // flown entirely in the isothermal layer (11-20 km) would record a
    // constant temperature column, which cannot be normalised.
    let p_static = p_amb * jit(0.3, etas[15]);
    let t_static = t_amb * jit(0.3, etas[16]);

    let inputs = [
        p_static,
        t_static,
        mach,
        sigma,
        mdot,
        fan_speed,
        compressor_speed,
        t5,
        p2,
        p5,
        epr,
        lever_angle,
        turbine_opening,
        bypass_ratio,
        combined_angle,
        fuel_flow,
        throat_area,
        exit_area,
    ];

    let (thrust, impulse) = surrogate_targets(&inputs);
    let thrust = thrust * noise_factors.0;
    let impulse = if impulse > 0.0 {
        (impulse * noise_factors.1).max(0.0)
    } else {
        0.0
    };
    SampleRecord {
        inputs,
        thrust,
        specific_impulse: impulse,
    }
}

/// Closed-form targets as a function of the *recorded* inputs.
///
/// Returns `(net thrust [N], specific impulse [s])`; the impulse is defined
/// as `thrust / (fuel flow * g)` and reported as `0.0` whenever net thrust
/// falls below [`MIN_MEASURABLE_THRUST`].
///
/// The model is a momentum balance: gross thrust from an exhaust velocity
/// driven by the turbine outlet temperature ratio and the overall nozzle
/// pressure ratio, a ramjet fuel contribution, a nozzle pressure-mismatch
/// term, minus ram drag (inside the momentum term) and an installation drag
/// that grows as the throttle closes. A small oscillatory factor on the
/// momentum term adds waviness so the map is not globally low-order.
pub fn surrogate_targets(inputs: &[f64; crate::schema::INPUT_COLUMNS]) -> (f64, f64) {
    let p_amb = inputs[0];
    let t_amb = inputs[1];
    let mach = inputs[2];
    let sigma = inputs[3];
    let mdot = inputs[4];
    let t5 = inputs[7];
    let epr = inputs[10];
    let combined_angle = inputs[14];
    let fuel_flow = inputs[15];
    let exit_area = inputs[17];

    let tau = (combined_angle - 15.0) / 100.0;
    let sound_speed = (GAMMA * R_AIR * t_amb).sqrt();
    let flight_speed = mach * sound_speed;
    let ram = 1.0 + 0.2 * mach * mach;

    let nozzle_pr = epr * sigma * ram.powf(3.5) * 0.92;
    let nozzle_eff = 0.82 + 0.58 * nozzle_pr.ln().clamp(0.0, 3.2) / 3.2;
    let exhaust_speed = sound_speed * (t5 / t_amb).sqrt() * nozzle_eff;
    let core_fuel_ratio = 0.018 + 0.032 * tau;

    let wave = 1.0 + 0.07 * (2.0 * mach + 2.6 * tau).sin();
    let momentum = mdot * ((1.0 + core_fuel_ratio) * exhaust_speed - flight_speed) * wave;
    let ramjet = fuel_flow * (500.0 + 290.0 * mach);
    let dynamic_pressure = 0.7 * p_amb * mach * mach;
    let pressure_mix = 0.35 * p_amb + 0.65 * dynamic_pressure;
    let pressure_term = (0.12 * tau - 0.08) * pressure_mix * exit_area;
    let drag_cd = 0.012 + 0.030 * (-((mach - 1.05) / 0.22).powi(2)).exp();
    let installation_drag = dynamic_pressure * REF_AREA * drag_cd * (1.15 - tau);

    let thrust = momentum + ramjet + pressure_term - installation_drag;
    let total_fuel = mdot * core_fuel_ratio + fuel_flow;
    let impulse = if thrust > MIN_MEASURABLE_THRUST {
        thrust / (total_fuel * GRAVITY)
    } else {
        0.0
    };
    (thrust, impulse)
}
