//! Rotary-wing UAV power model.
//!
//! Powers are in watts; every energy elsewhere in the crate is power times
//! duration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("UAV altitude {altitude_m} m exceeds communication range {comm_range_m} m")]
    InfeasibleAltitude { altitude_m: f64, comm_range_m: f64 },
    #[error("induced-power radicand is negative ({0:e}) at the requested speed")]
    NegativeRadicand(f64),
    #[error("invalid UAV parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid data rate {0} bit/s (must be > 0)")]
    InvalidRate(f64),
}

/// Airframe, rotor and radio constants.
///
/// Defaults describe a heavy-lift industrial quadcopter in the DJI Matrice
/// 350 class, plus a 5 W radio draw while communicating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UavEnergyParams {
    /// Battery energy capacity (J).
    pub beta_j: f64,
    /// Cruise speed (m/s).
    pub speed_mps: f64,
    /// Mean rotor induced velocity in hover (m/s).
    pub induced_velocity_mps: f64,
    /// Rotor blade tip speed (m/s).
    pub tip_speed_mps: f64,
    pub fuselage_drag_ratio: f64,
    pub rotor_solidity: f64,
    /// Air density (kg/m^3).
    pub air_density: f64,
    /// Rotor disc area (m^2).
    pub rotor_disc_area_m2: f64,
    pub profile_drag_coeff: f64,
    /// Blade angular velocity (rad/s).
    pub blade_angular_velocity: f64,
    pub rotor_radius_m: f64,
    /// Incremental correction factor to induced power.
    pub induced_power_correction: f64,
    /// Aircraft weight (N).
    pub weight_n: f64,
    /// Extra radio power while exchanging data (W).
    pub comm_power_w: f64,
}

impl Default for UavEnergyParams {
    fn default() -> Self {
        Self {
            beta_j: 1.9e6,
            speed_mps: 10.0,
            induced_velocity_mps: 5.5,
            tip_speed_mps: 180.0,
            fuselage_drag_ratio: 0.8,
            rotor_solidity: 0.08,
            air_density: 1.225,
            rotor_disc_area_m2: 0.7,
            profile_drag_coeff: 0.011,
            blade_angular_velocity: 320.0,
            rotor_radius_m: 0.45,
            induced_power_correction: 0.15,
            weight_n: 63.4,
            comm_power_w: 5.0,
        }
    }
}

impl UavEnergyParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let positive = [
            ("beta_j", self.beta_j),
            ("speed_mps", self.speed_mps),
            ("induced_velocity_mps", self.induced_velocity_mps),
            ("tip_speed_mps", self.tip_speed_mps),
            ("rotor_solidity", self.rotor_solidity),
            ("air_density", self.air_density),
            ("rotor_disc_area_m2", self.rotor_disc_area_m2),
            ("blade_angular_velocity", self.blade_angular_velocity),
            ("rotor_radius_m", self.rotor_radius_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(EnergyError::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("fuselage_drag_ratio", self.fuselage_drag_ratio),
            ("profile_drag_coeff", self.profile_drag_coeff),
            ("induced_power_correction", self.induced_power_correction),
            ("weight_n", self.weight_n),
            ("comm_power_w", self.comm_power_w),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EnergyError::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Blade profile power `P0 = (delta/8) rho s A Omega^3 R^3`.
    pub fn blade_profile_power(&self) -> f64 {
        self.profile_drag_coeff / 8.0
            * self.air_density
            * self.rotor_solidity
            * self.rotor_disc_area_m2
            * self.blade_angular_velocity.powi(3)
            * self.rotor_radius_m.powi(3)
    }

    /// Induced power `Pi = (1 + k) W^{3/2} / sqrt(2 rho A)`.
    pub fn induced_power(&self) -> f64 {
        (1.0 + self.induced_power_correction) * self.weight_n.powf(1.5)
            / (2.0 * self.air_density * self.rotor_disc_area_m2).sqrt()
    }

    /// Hover power, the sum of blade profile and induced power.
    pub fn hover_power(&self) -> f64 {
        self.blade_profile_power() + self.induced_power()
    }

    /// Forward-flight power at speed `v` (m/s).
    pub fn propulsion_power(&self, v: f64) -> Result<f64, EnergyError> {
        Ok(self.propulsion_terms(v)?.total())
    }

    pub fn propulsion_terms(&self, v: f64) -> Result<PropulsionTerms, EnergyError> {
        let v2 = v * v;
        let v0_2 = self.induced_velocity_mps * self.induced_velocity_mps;
        let mut radicand = (1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)).sqrt() - v2 / (2.0 * v0_2);
        if radicand < 0.0 {
            if radicand < -1e-12 {
                return Err(EnergyError::NegativeRadicand(radicand));
            }
            radicand = 0.0;
        }
        Ok(PropulsionTerms {
            blade_profile: self.blade_profile_power()
                * (1.0 + 3.0 * v2 / (self.tip_speed_mps * self.tip_speed_mps)),
            induced: self.induced_power() * radicand.sqrt(),
            parasite: 0.5
                * self.fuselage_drag_ratio
                * self.air_density
                * self.rotor_solidity
                * self.rotor_disc_area_m2
                * v2
                * v,
        })
    }

    /// Propulsion power at the configured cruise speed.
    pub fn cruise_power(&self) -> Result<f64, EnergyError> {
        self.propulsion_power(self.speed_mps)
    }
}

/// The three additive components of forward-flight power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropulsionTerms {
    pub blade_profile: f64,
    pub induced: f64,
    pub parasite: f64,
}

impl PropulsionTerms {
    pub fn total(&self) -> f64 {
        self.blade_profile + self.induced + self.parasite
    }
}

/// Horizontal radius within which a UAV at altitude `h` reaches a ground node.
pub fn reception_range(comm_range_m: f64, altitude_m: f64) -> Result<f64, EnergyError> {
    if altitude_m > comm_range_m {
        return Err(EnergyError::InfeasibleAltitude {
            altitude_m,
            comm_range_m,
        });
    }
    Ok((comm_range_m * comm_range_m - altitude_m * altitude_m).sqrt())
}

/// Time to move `bits` over a link of `rate_bps`.
pub fn transfer_time(bits: f64, rate_bps: f64) -> Result<f64, EnergyError> {
    if !(rate_bps > 0.0) {
        return Err(EnergyError::InvalidRate(rate_bps));
    }
    Ok(bits / rate_bps)
}

/// Per-edge dwell times used to charge hover and radio energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommProfile {
    pub hover_time_per_edge_s: f64,
    pub comm_time_per_edge_s: f64,
    pub data_rate_bps: f64,
}

impl CommProfile {
    /// Derives the per-edge communication time from a payload size.
    pub fn from_payload(
        hover_time_per_edge_s: f64,
        payload_bits: f64,
        data_rate_bps: f64,
    ) -> Result<Self, EnergyError> {
        Ok(Self {
            hover_time_per_edge_s,
            comm_time_per_edge_s: transfer_time(payload_bits, data_rate_bps)?,
            data_rate_bps,
        })
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        for (name, v) in [
            ("hover_time_per_edge_s", self.hover_time_per_edge_s),
            ("comm_time_per_edge_s", self.comm_time_per_edge_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EnergyError::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.data_rate_bps > 0.0) {
            return Err(EnergyError::InvalidRate(self.data_rate_bps));
        }
        Ok(())
    }
}

impl Default for CommProfile {
    /// 10 s hover per edge; a 10 Mbit payload over a 2 Mbit/s link.
    fn default() -> Self {
        Self {
            hover_time_per_edge_s: 10.0,
            comm_time_per_edge_s: 5.0,
            data_rate_bps: 2.0e6,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Hand evaluation of the rotor formulas with the default constants.
    const P0: f64 = 281.652_940_8;
    const PI: f64 = 443.301_973_788_764_6;

    #[test]
    fn default_component_powers() {
        let p = UavEnergyParams::default();
        assert_relative_eq!(p.blade_profile_power(), P0, max_relative = 1e-12);
        assert_relative_eq!(p.induced_power(), PI, max_relative = 1e-12);
        assert!((p.hover_power() - 724.96).abs() < 0.05);
    }

    #[test]
    fn hover_with_a_term_removed() {
        let p = UavEnergyParams {
            profile_drag_coeff: 0.0,
            ..Default::default()
        };
        assert!((p.hover_power() - 443.30).abs() < 0.005);
        let p = UavEnergyParams {
            weight_n: 0.0,
            ..Default::default()
        };
        assert!((p.hover_power() - 281.65).abs() < 0.005);
    }

    #[test]
    fn cruise_power_terms() {
        let p = UavEnergyParams::default();
        let t = p.propulsion_terms(10.0).unwrap();
        assert!((t.blade_profile - 284.26).abs() < 0.005);
        assert!((t.induced - 234.14).abs() < 0.005);
        assert!((t.parasite - 27.44).abs() < 1e-9);
        assert!((t.total() - 545.84).abs() < 0.005);
        let no_drag = UavEnergyParams {
            fuselage_drag_ratio: 0.0,
            ..p
        };
        assert!((no_drag.propulsion_power(10.0).unwrap() - 518.40).abs() < 0.005);
    }

    #[test]
    fn zero_speed_equals_hover() {
        let p = UavEnergyParams::default();
        assert_eq!(p.propulsion_power(0.0).unwrap(), p.hover_power());
    }

    #[test]
    fn reception_range_examples() {
        assert_eq!(reception_range(200.0, 120.0).unwrap(), 160.0);
        assert_eq!(reception_range(200.0, 0.0).unwrap(), 200.0);
        assert_eq!(reception_range(100.0, 100.0).unwrap(), 0.0);
        assert!(matches!(
            reception_range(100.0, 100.5),
            Err(EnergyError::InfeasibleAltitude { .. })
        ));
    }

    #[test]
    fn transfer_time_examples() {
        assert_eq!(transfer_time(2e6, 1e6).unwrap(), 2.0);
        assert_eq!(transfer_time(0.0, 1e6).unwrap(), 0.0);
        assert_eq!(transfer_time(8e6, 2e6).unwrap(), 4.0);
        assert_eq!(transfer_time(1.0, 0.0), Err(EnergyError::InvalidRate(0.0)));
    }

    #[test]
    fn default_comm_profile_matches_payload_derivation() {
        let derived = CommProfile::from_payload(10.0, 1.0e7, 2.0e6).unwrap();
        assert_eq!(derived, CommProfile::default());
    }

    #[test]
    fn default_params_validate() {
        UavEnergyParams::default().validate().unwrap();
        let bad = UavEnergyParams {
            air_density: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn continuity_over_cruise_range() {
        let p = UavEnergyParams::default();
        let mut v = 0.0;
        while v <= 30.0 {
            let a = p.propulsion_power(v).unwrap();
            let b = p.propulsion_power(v + 1e-6).unwrap();
            assert!((b - a).abs() < 1e-2, "jump at v = {v}");
            v += 0.01;
        }
    }

    #[test]
    fn doubling_profile_drag_doubles_blade_term() {
        let p = UavEnergyParams::default();
        let d = UavEnergyParams {
            profile_drag_coeff: 2.0 * p.profile_drag_coeff,
            ..p.clone()
        };
        for v in [0.0, 5.0, 10.0, 20.0] {
            let base = p.propulsion_terms(v).unwrap();
            let doubled = d.propulsion_terms(v).unwrap();
            let blade = |t: PropulsionTerms| t.total() - t.induced - t.parasite;
            assert_relative_eq!(blade(doubled), 2.0 * blade(base), max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn powers_positive_and_continuous_at_hover(
            tip in 50.0..300.0f64,
            v0 in 1.0..15.0f64,
            f in 0.01..2.0f64,
            s in 0.01..0.2f64,
            rho in 0.5..1.5f64,
            area in 0.1..3.0f64,
            delta in 0.001..0.05f64,
            omega in 50.0..600.0f64,
            radius in 0.1..1.5f64,
            k in 0.01..0.5f64,
            w in 1.0..300.0f64,
            v in 0.0..40.0f64,
        ) {
            let p = UavEnergyParams {
                tip_speed_mps: tip,
                induced_velocity_mps: v0,
                fuselage_drag_ratio: f,
                rotor_solidity: s,
                air_density: rho,
                rotor_disc_area_m2: area,
                profile_drag_coeff: delta,
                blade_angular_velocity: omega,
                rotor_radius_m: radius,
                induced_power_correction: k,
                weight_n: w,
                ..Default::default()
            };
            prop_assert!(p.hover_power() > 0.0);
            prop_assert!(p.propulsion_power(v).unwrap() > 0.0);
            let at_rest = p.propulsion_power(0.0).unwrap();
            prop_assert!((at_rest - p.hover_power()).abs() <= 1e-9 * p.hover_power());
        }
    }
}
