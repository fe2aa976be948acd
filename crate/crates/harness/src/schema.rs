//! Canonical record layout.
//!
//! Every CSV file read or written by this crate uses the same 20 columns in
//! the same order: 18 engine-state inputs grouped as overall flight state (3),
//! intake (2), core path (11) and exhaust (2), followed by the two targets.
//! The grouping matches [`penn_core::models::InputDims`]'s default partition,
//! so column order here is load-bearing: group-structured models slice the
//! input vector positionally.

use penn_core::models::InputDims;
use penn_core::objectives::Target;

/// Number of model input features.
pub const INPUT_COLUMNS: usize = 18;
/// Inputs plus the two target columns.
pub const TOTAL_COLUMNS: usize = INPUT_COLUMNS + 2;

/// Canonical header, index-aligned with [`SampleRecord`] fields.
pub const COLUMN_NAMES: [&str; TOTAL_COLUMNS] = [
    // Overall flight state.
    "atmospheric_static_pressure",
    "atmospheric_static_temperature",
    "flight_mach_number",
    // Intake.
    "intake_pressure_recovery",
    "intake_mass_flow_rate",
    // Core path: low-speed spool sensors, then high-speed duct controls.
    "fan_relative_speed",
    "compressor_relative_speed",
    "lpt_outlet_total_temperature",
    "fan_inlet_total_pressure",
    "lpt_outlet_static_pressure",
    "engine_pressure_ratio",
    "turbine_throttle_lever_angle",
    "turbine_outlet_relative_opening",
    "bypass_outlet_area_ratio",
    "combined_throttle_angle",
    "ramjet_fuel_flow_rate",
    // Exhaust geometry.
    "nozzle_throat_area",
    "nozzle_exit_area",
    // Targets.
    "thrust",
    "specific_impulse",
];

/// Index of the thrust column.
pub const THRUST_COLUMN: usize = 18;
/// Index of the specific-impulse column.
pub const IMPULSE_COLUMN: usize = 19;

/// Returns the input-group partition this layout encodes.
pub fn input_dims() -> InputDims {
    InputDims::default()
}

/// One dataset row: the 18 inputs in canonical order plus both targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub inputs: [f64; INPUT_COLUMNS],
    /// Net thrust in newtons. May be negative at low throttle and high Mach,
    /// where installation drag exceeds gross thrust.
    pub thrust: f64,
    /// Specific impulse in seconds; recorded as exactly `0.0` when the
    /// thrust is non-positive and the quantity is undefined.
    pub specific_impulse: f64,
}

impl SampleRecord {
    /// Value of the requested regression target.
    pub fn target(&self, target: Target) -> f64 {
        match target {
            Target::Thrust => self.thrust,
            Target::SpecificImpulse => self.specific_impulse,
        }
    }

    /// Flat 20-element view in column order, for writing.
    pub fn to_row(&self) -> [f64; TOTAL_COLUMNS] {
        let mut row = [0.0; TOTAL_COLUMNS];
        row[..INPUT_COLUMNS].copy_from_slice(&self.inputs);
        row[THRUST_COLUMN] = self.thrust;
        row[IMPULSE_COLUMN] = self.specific_impulse;
        row
    }

    /// Rebuilds a record from a flat row (inverse of [`Self::to_row`]).
    pub fn from_row(row: &[f64; TOTAL_COLUMNS]) -> Self {
        let mut inputs = [0.0; INPUT_COLUMNS];
        inputs.copy_from_slice(&row[..INPUT_COLUMNS]);
        SampleRecord {
            inputs,
            thrust: row[THRUST_COLUMN],
            specific_impulse: row[IMPULSE_COLUMN],
        }
    }

    /// Checks physical plausibility bounds. Returns the offending column
    /// name and a short reason on failure.
    pub fn validate(&self) -> std::result::Result<(), (usize, String)> {
        for (i, v) in self.inputs.iter().enumerate() {
            if !v.is_finite() {
                return Err((i, format!("non-finite value {v}")));
            }
        }
        if !self.thrust.is_finite() {
            return Err((THRUST_COLUMN, format!("non-finite value {}", self.thrust)));
        }
        if !self.specific_impulse.is_finite() || self.specific_impulse < 0.0 {
            return Err((
                IMPULSE_COLUMN,
                format!("specific impulse must be finite and >= 0, got {}", self.specific_impulse),
            ));
        }
        let positive = [
            (0, "atmospheric static pressure"),
            (1, "atmospheric static temperature"),
            (3, "intake pressure recovery"),
            (4, "intake mass flow rate"),
            (7, "lpt outlet total temperature"),
            (8, "fan inlet total pressure"),
            (9, "lpt outlet static pressure"),
            (15, "ramjet fuel flow rate"),
            (16, "nozzle throat area"),
            (17, "nozzle exit area"),
        ];
        for (i, what) in positive {
            if self.inputs[i] <= 0.0 {
                return Err((i, format!("{what} must be positive, got {}", self.inputs[i])));
            }
        }
        if self.inputs[2] < 0.0 {
            return Err((2, format!("flight Mach number must be >= 0, got {}", self.inputs[2])));
        }
        if self.inputs[3] > 1.000_001 {
            return Err((
                3,
                format!("intake pressure recovery cannot exceed 1, got {}", self.inputs[3]),
            ));
        }
        Ok(())
    }
}
