//! Free floating robot: a planar vehicle with four boosters.

use crate::signal::Signal;

use super::{rk4_integrate, InputRange, SimError, SystemModel};

/// `[ẋ, ẏ, φ̇, ẍ, ÿ, φ̈]` for state `[x, y, φ, ẋ, ẏ, φ̇]` under boosters `u`.
pub fn ffr_derivative(s: &[f64; 6], u: &[f64]) -> [f64; 6] {
    let phi = s[2];
    let (sin, cos) = phi.sin_cos();
    let a = u[0] + u[2];
    let b = u[1] + u[3];
    [s[3], s[4], s[5], 0.1 * a * cos - 0.1 * b * sin, 0.1 * a * sin + 0.1 * b * cos, 5.0 / 12.0 * a - 5.0 / 12.0 * b]
}

#[derive(Debug, Clone)]
pub struct FreeFloatingRobot {
    inputs: Vec<InputRange>,
    outputs: Vec<String>,
    /// RK4 steps per input sample interval.
    pub substeps: usize,
}

impl Default for FreeFloatingRobot {
    fn default() -> Self {
        Self {
            inputs: (1..=4).map(|i| InputRange::new(format!("u{i}"), -10.0, 10.0)).collect(),
            outputs: ["x", "y", "phi", "xdot", "ydot", "phidot"].map(String::from).to_vec(),
            substeps: 4,
        }
    }
}

impl SystemModel for FreeFloatingRobot {
    fn name(&self) -> &str {
        "ffr"
    }

    fn inputs(&self) -> &[InputRange] {
        &self.inputs
    }

    fn outputs(&self) -> &[String] {
        &self.outputs
    }

    fn horizon(&self) -> f64 {
        5.0
    }

    fn nominal_step(&self) -> f64 {
        0.05
    }

    fn run(&self, u: &Signal) -> Result<Signal, SimError> {
        // starts at rest at the origin
        let states = rk4_integrate(ffr_derivative, [0.0; 6], u, self.substeps)?;
        let data = states.into_iter().flatten().collect();
        Signal::from_flat(u.step(), self.outputs.clone(), data).map_err(|e| SimError::External(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::simulate;

    fn input(levels: [f64; 4], step: f64, horizon: f64) -> Signal {
        let names = (1..=4).map(|i| format!("u{i}")).collect();
        Signal::constant(step, names, &levels, horizon).unwrap()
    }

    #[test]
    fn derivative_by_substitution() {
        let d = ffr_derivative(&[0.0; 6], &[10.0, 10.0, 10.0, 10.0]);
        assert_eq!(&d[3..], &[2.0, 2.0, 0.0]);
        assert_eq!(ffr_derivative(&[1.0, 2.0, 0.3, 0.0, 0.0, 0.0], &[0.0; 4])[3..], [0.0; 3]);
        let d = ffr_derivative(&[0.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0, 0.0], &[10.0, 0.0, 10.0, 0.0]);
        assert!(d[3].abs() < 1e-15);
        assert_eq!(d[4], 2.0);
        assert_eq!(d[5], 5.0 / 12.0 * 20.0);
    }

    #[test]
    fn zero_input_stays_at_origin() {
        let out = simulate(&FreeFloatingRobot::default(), &input([0.0; 4], 0.05, 5.0)).unwrap();
        assert!(out.as_flat().iter().all(|&v| v == 0.0));
        assert_eq!(out.len(), 101);
    }

    #[test]
    fn matches_fine_reference_integration() {
        // u = (10, 0, 10, 0) spins the robot while pushing; compare against 16x finer RK4.
        let u = input([10.0, 0.0, 10.0, 0.0], 0.05, 0.5);
        let coarse = simulate(&FreeFloatingRobot::default(), &u).unwrap();
        let fine = FreeFloatingRobot { substeps: 64, ..Default::default() };
        let reference = simulate(&fine, &u).unwrap();
        for (a, b) in coarse.as_flat().iter().zip(reference.as_flat()) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
        // early on φ ≈ 0, so x ≈ t²
        let x_at = |t: f64| coarse.sample((t / 0.05).round() as usize)[0];
        assert!((x_at(0.1) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn deterministic() {
        let m = FreeFloatingRobot::default();
        let u = input([3.0, -7.0, 1.0, 9.5], 0.05, 5.0);
        assert_eq!(simulate(&m, &u).unwrap(), simulate(&m, &u).unwrap());
    }

    #[test]
    fn free_drift_keeps_velocity() {
        // thrust for one second, then coast: velocities constant afterwards
        let names: Vec<String> = (1..=4).map(|i| format!("u{i}")).collect();
        let rows = (0..=40).map(|j| if j < 20 { vec![5.0, 0.0, 0.0, 5.0] } else { vec![0.0; 4] }).collect();
        let u = Signal::new(0.05, names, rows).unwrap();
        let out = simulate(&FreeFloatingRobot::default(), &u).unwrap();
        let v20 = out.sample(20)[3..].to_vec();
        for j in 20..out.len() {
            assert_eq!(out.sample(j)[3..], v20[..]);
        }
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let u = input([10.0, -4.0, 7.0, 2.0], 0.1, 2.0);
        let run = |n: usize| {
            let m = FreeFloatingRobot { substeps: n, ..Default::default() };
            simulate(&m, &u).unwrap().sample(20).to_vec()
        };
        let exact = run(256);
        let err = |v: Vec<f64>| v.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let (e1, e2) = (err(run(1)), err(run(2)));
        assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
        assert!((e1 / e2).log2() >= 3.5);
    }
}
