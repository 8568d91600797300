//! Surrogate longitudinal car model with a four-speed automatic gearbox.
//!
//! This is not a model of any particular vehicle. It stands in for an
//! automatic-transmission benchmark with inputs `throttle ∈ [0, 100]` and
//! `brake ∈ [0, 325]` and outputs `speed`, `rpm` and `gear`:
//!
//! ```text
//! v̇ = (gain(gear)·engine·throttle·τ(rpm) − brake_gain·brake − drag·v²) / mass,   v ≥ 0
//! rpm = v · ratio(gear)
//! ```
//!
//! `τ` is 1 up to `torque_full_rpm` and falls linearly to 0 at the rev
//! limiter `redline_rpm`. Gears shift at sample instants along a
//! throttle-dependent schedule: up from gear `g` when the speed reaches
//! `upshift[g]` interpolated at the current throttle, down when it falls below
//! `downshift[g]`. As in real shift schedules, more throttle means later
//! shifts. At full throttle the 3→4 upshift lies above the gear-3 rev limit,
//! so flooring the pedal holds gear 3 on the limiter; getting into gear 4
//! requires easing off first, and flooring again at low speed kicks back down.

use crate::signal::Signal;

use super::rk4::{check_finite, rk4_step};
use super::{InputRange, SimError, SystemModel};

/// A shift threshold as a function of throttle: `at_idle` for throttle 0,
/// `at_full` for throttle 100, linear in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftLine {
    pub at_idle: f64,
    pub at_full: f64,
}

impl ShiftLine {
    pub const fn new(at_idle: f64, at_full: f64) -> Self {
        Self { at_idle, at_full }
    }

    pub fn speed(&self, throttle: f64) -> f64 {
        self.at_idle + (self.at_full - self.at_idle) * (throttle / 100.0).clamp(0.0, 1.0)
    }
}

/// Constants of the surrogate car, version 2.
#[derive(Debug, Clone, PartialEq)]
pub struct CarParams {
    pub mass: f64,
    pub engine: f64,
    pub gear_gain: [f64; 4],
    pub brake_gain: f64,
    pub drag: f64,
    pub rpm_per_speed: [f64; 4],
    pub torque_full_rpm: f64,
    pub redline_rpm: f64,
    /// Speed at which gear `g` shifts up to `g + 1` (gears 1–3).
    pub upshift: [ShiftLine; 3],
    /// Speed below which gear `g + 1` shifts down to `g`.
    pub downshift: [ShiftLine; 3],
}

impl CarParams {
    pub const V2: CarParams = CarParams {
        mass: 1.0,
        engine: 0.15,
        gear_gain: [1.0, 0.75, 0.6, 0.5],
        brake_gain: 0.028,
        drag: 2.93e-4,
        rpm_per_speed: [150.0, 90.0, 60.0, 40.0],
        torque_full_rpm: 5000.0,
        redline_rpm: 6000.0,
        upshift: [ShiftLine::new(15.0, 35.0), ShiftLine::new(30.0, 60.0), ShiftLine::new(45.0, 110.0)],
        downshift: [ShiftLine::new(10.0, 20.0), ShiftLine::new(22.0, 42.0), ShiftLine::new(35.0, 72.0)],
    };

    /// Torque factor at engine speed `rpm`.
    pub fn torque(&self, rpm: f64) -> f64 {
        if rpm <= self.torque_full_rpm {
            1.0
        } else {
            ((self.redline_rpm - rpm) / (self.redline_rpm - self.torque_full_rpm)).max(0.0)
        }
    }
}

impl Default for CarParams {
    fn default() -> Self {
        Self::V2
    }
}

#[derive(Debug, Clone)]
pub struct SurrogateCar {
    pub params: CarParams,
    pub substeps: usize,
    inputs: Vec<InputRange>,
    outputs: Vec<String>,
}

impl Default for SurrogateCar {
    fn default() -> Self {
        Self::new(CarParams::V2)
    }
}

impl SurrogateCar {
    pub fn new(params: CarParams) -> Self {
        Self {
            params,
            substeps: 4,
            inputs: vec![InputRange::new("throttle", 0.0, 100.0), InputRange::new("brake", 0.0, 325.0)],
            outputs: ["speed", "rpm", "gear"].map(String::from).to_vec(),
        }
    }

    fn accel(&self, v: f64, gear: usize, throttle: f64, brake: f64) -> f64 {
        let p = &self.params;
        let drive = p.gear_gain[gear] * p.engine * throttle * p.torque(v * p.rpm_per_speed[gear]);
        (drive - p.brake_gain * brake - p.drag * v * v) / p.mass
    }

    fn shift(&self, v: f64, gear: usize, throttle: f64) -> usize {
        let p = &self.params;
        let mut g = gear;
        while g < 3 && v >= p.upshift[g].speed(throttle) {
            g += 1;
        }
        while g > 0 && v < p.downshift[g - 1].speed(throttle) {
            g -= 1;
        }
        g
    }
}

impl SystemModel for SurrogateCar {
    fn name(&self) -> &str {
        "car"
    }

    fn inputs(&self) -> &[InputRange] {
        &self.inputs
    }

    fn outputs(&self) -> &[String] {
        &self.outputs
    }

    fn horizon(&self) -> f64 {
        30.0
    }

    fn nominal_step(&self) -> f64 {
        0.1
    }

    fn run(&self, u: &Signal) -> Result<Signal, SimError> {
        let h = u.step() / self.substeps.max(1) as f64;
        let mut v = 0.0f64;
        let mut gear = 0usize;
        let mut data = Vec::with_capacity(u.len() * 3);
        for j in 0..u.len() {
            data.extend_from_slice(&[v, v * self.params.rpm_per_speed[gear], (gear + 1) as f64]);
            if j + 1 == u.len() {
                break;
            }
            let (throttle, brake) = (u.sample(j)[0], u.sample(j)[1]);
            for _ in 0..self.substeps.max(1) {
                let next = rk4_step(|s: &[f64; 1]| [self.accel(s[0], gear, throttle, brake)], &[v], h)[0];
                v = next.max(0.0);
            }
            check_finite(&[v], u.time(j + 1))?;
            gear = self.shift(v, gear, u.sample(j + 1)[0]);
        }
        Signal::from_flat(u.step(), self.outputs.clone(), data).map_err(|e| SimError::External(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::simulate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant(throttle: f64, brake: f64) -> Signal {
        Signal::constant(0.1, vec!["throttle".into(), "brake".into()], &[throttle, brake], 30.0).unwrap()
    }

    #[test]
    fn full_throttle_accelerates_monotonically() {
        let out = simulate(&SurrogateCar::default(), &constant(100.0, 0.0)).unwrap();
        let speed: Vec<f64> = out.column(0).collect();
        assert!(speed.windows(2).all(|w| w[1] >= w[0]));
        assert!(speed[..100].windows(2).all(|w| w[1] > w[0]));
        // held in third near the rev limiter, short of 100
        assert_eq!(out.sample(out.len() - 1)[2], 3.0);
        let top = speed[speed.len() - 1];
        assert!(top > 90.0 && top < 100.0, "{top}");
    }

    #[test]
    fn easing_off_reaches_fourth_and_higher_speeds() {
        // floor it, ease off to shift up, floor it again
        let rows: Vec<Vec<f64>> = (0..=300)
            .map(|j| match j {
                0..120 => vec![100.0, 0.0],
                120..150 => vec![55.0, 0.0],
                _ => vec![100.0, 0.0],
            })
            .collect();
        let u = Signal::new(0.1, vec!["throttle".into(), "brake".into()], rows).unwrap();
        let out = simulate(&SurrogateCar::default(), &u).unwrap();
        assert_eq!(out.sample(300)[2], 4.0);
        assert!(out.sample(300)[0] > 100.0, "{}", out.sample(300)[0]);
    }

    #[test]
    fn torque_curve() {
        let p = CarParams::V2;
        assert_eq!(p.torque(4000.0), 1.0);
        assert_eq!(p.torque(5500.0), 0.5);
        assert_eq!(p.torque(7000.0), 0.0);
        assert_eq!(p.upshift[2].speed(50.0), 77.5);
    }

    #[test]
    fn braking_from_rest_stays_at_rest() {
        let out = simulate(&SurrogateCar::default(), &constant(0.0, 325.0)).unwrap();
        assert!(out.column(0).all(|v| v == 0.0));
        assert!(out.column(2).all(|g| g == 1.0));
    }

    #[test]
    fn gear_is_a_step_function_in_one_to_four() {
        let car = SurrogateCar::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let rows: Vec<Vec<f64>> = (0..=300)
                .map(|j| {
                    if j % 50 == 0 || j == 0 {
                        vec![rng.random_range(0.0..100.0), rng.random_range(0.0..325.0)]
                    } else {
                        vec![0.0, 0.0]
                    }
                })
                .collect();
            let u = Signal::new(0.1, vec!["throttle".into(), "brake".into()], rows).unwrap();
            let out = simulate(&car, &u).unwrap();
            let speed: Vec<f64> = out.column(0).collect();
            let gear: Vec<f64> = out.column(2).collect();
            assert!(gear.iter().all(|g| [1.0, 2.0, 3.0, 4.0].contains(g)));
            assert!(speed.iter().all(|&v| v >= 0.0));
            // shifts move one gear per sample at most given bounded acceleration
            assert!(gear.windows(2).all(|w| (w[1] - w[0]).abs() <= 1.0));
            for (g, (v, rpm)) in gear.iter().zip(speed.iter().zip(out.column(1))) {
                assert_eq!(rpm, v * car.params.rpm_per_speed[*g as usize - 1]);
            }
        }
    }

    #[test]
    fn hysteresis_holds_gear_near_threshold() {
        let car = SurrogateCar::default();
        assert_eq!(car.shift(25.0, 0, 0.0), 1);
        assert_eq!(car.shift(25.0, 0, 100.0), 0);
        assert_eq!(car.shift(20.0, 1, 100.0), 1);
        assert_eq!(car.shift(19.9, 1, 100.0), 0);
        assert_eq!(car.shift(0.0, 3, 0.0), 0);
        // kick-down: flooring in fourth below 72 drops to third
        assert_eq!(car.shift(71.0, 3, 100.0), 2);
        assert_eq!(car.shift(71.0, 3, 50.0), 3);
    }
}
