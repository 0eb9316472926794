//! Explicit Runge–Kutta integration that lands exactly on requested output
//! nodes.
//!
//! Fixed-step classic RK4 is the default; an adaptive Dormand–Prince 5(4)
//! pair is available for exploratory runs.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeState {
    pub x: f64,
    pub y: Vec<f64>,
}

impl OdeState {
    pub fn new(x: f64, y: Vec<f64>) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepControl {
    /// Classic RK4; each output interval is split into equal steps no longer than `h`.
    Fixed { h: f64 },
    /// Dormand–Prince 5(4) with a standard step-size controller.
    Adaptive { rtol: f64, atol: f64, h_init: f64, h_min: f64, h_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RkControls {
    pub step: StepControl,
}

impl Default for RkControls {
    fn default() -> Self {
        Self { step: StepControl::Fixed { h: 1e-4 } }
    }
}

impl RkControls {
    pub fn fixed(h: f64) -> Self {
        Self { step: StepControl::Fixed { h } }
    }

    pub fn adaptive(rtol: f64, atol: f64) -> Self {
        Self { step: StepControl::Adaptive { rtol, atol, h_init: 1e-3, h_min: 1e-12, h_max: 0.1 } }
    }
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// The halt predicate fired after the step ending at `x`.
    Halted { x: f64 },
    /// The adaptive step shrank below its minimum; `x` is the last accepted point.
    StepUnderflow { x: f64 },
    /// A right-hand-side evaluation was not finite; `x` is the last accepted point.
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// States at the output nodes reached, in integration order.
    pub states: Vec<OdeState>,
    pub termination: Termination,
    pub steps: usize,
    /// Last accepted state, which may lie between output nodes.
    pub last: OdeState,
}

/// Integrates `y' = f(x, y)` from `from` through `outputs`, failing on step
/// underflow or a non-finite derivative.
pub fn integrate_rk<F>(rhs: F, from: &OdeState, outputs: &[f64], controls: &RkControls) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let traj = integrate_rk_partial(rhs, from, outputs, controls, |_| false)?;
    match traj.termination {
        Termination::StepUnderflow { x } => Err(Error::StepUnderflow { last_x: x }),
        Termination::NonFinite { x } => Err(Error::NonFiniteDerivative { x }),
        _ => Ok(traj),
    }
}

/// Like [`integrate_rk`] but returns the partial trajectory on failure and
/// stops early once `halt` returns true for an accepted state.
pub fn integrate_rk_partial<F, H>(
    rhs: F,
    from: &OdeState,
    outputs: &[f64],
    controls: &RkControls,
    halt: H,
) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
    H: Fn(&OdeState) -> bool,
{
    if from.y.iter().any(|v| !v.is_finite()) || !from.x.is_finite() {
        return Err(invalid("initial state must be finite"));
    }
    let dir = outputs.iter().map(|x| x - from.x).find(|d| *d != 0.0).map_or(1.0, f64::signum);
    let mut prev = from.x;
    for &x in outputs {
        if !x.is_finite() || (x - prev) * dir < 0.0 {
            return Err(invalid("output nodes must be finite and monotone away from the start"));
        }
        prev = x;
    }
    match controls.step {
        StepControl::Fixed { h } if !(h > 0.0) => return Err(invalid("step must be positive")),
        StepControl::Adaptive { rtol, atol, h_init, h_min, h_max }
            if !(rtol > 0.0 && atol >= 0.0 && h_init > 0.0 && h_min > 0.0 && h_max >= h_min) =>
        {
            return Err(invalid("invalid adaptive step controls"))
        }
        _ => {}
    }

    let mut stepper = Stepper::new(rhs, from.y.len());
    let mut state = from.clone();
    let mut states = Vec::with_capacity(outputs.len());
    let mut steps = 0;
    let mut h_adapt = match controls.step {
        StepControl::Adaptive { h_init, .. } => h_init,
        StepControl::Fixed { h } => h,
    };

    for &target in outputs {
        let outcome = match controls.step {
            StepControl::Fixed { h } => {
                let span = target - state.x;
                let n = (span.abs() / h * (1.0 - 1e-12)).ceil() as usize;
                let mut result = None;
                for i in 0..n {
                    let x_next = if i + 1 == n { target } else { state.x + span / n as f64 };
                    let dx = x_next - state.x;
                    match stepper.rk4(&state, dx) {
                        Some(y) => {
                            state = OdeState { x: x_next, y };
                            steps += 1;
                            if halt(&state) {
                                result = Some(Termination::Halted { x: state.x });
                                break;
                            }
                        }
                        None => {
                            result = Some(Termination::NonFinite { x: state.x });
                            break;
                        }
                    }
                }
                result
            }
            StepControl::Adaptive { rtol, atol, h_min, h_max, .. } => {
                let mut result = None;
                while (target - state.x) * dir > 0.0 {
                    let remaining = (target - state.x).abs();
                    let h = h_adapt.min(h_max).min(remaining);
                    let last = h == remaining;
                    match stepper.dopri(&state, dir * h, rtol, atol) {
                        Err(()) => {
                            result = Some(Termination::NonFinite { x: state.x });
                            break;
                        }
                        Ok((y, err)) => {
                            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                            if err <= 1.0 {
                                state = OdeState { x: if last { target } else { state.x + dir * h }, y };
                                steps += 1;
                                if !last || factor > 1.0 {
                                    h_adapt = h * factor;
                                }
                                if halt(&state) {
                                    result = Some(Termination::Halted { x: state.x });
                                    break;
                                }
                            } else {
                                h_adapt = h * factor;
                                if h_adapt < h_min {
                                    result = Some(Termination::StepUnderflow { x: state.x });
                                    break;
                                }
                            }
                        }
                    }
                }
                result
            }
        };
        if let Some(t) = outcome {
            if state.x == target && !matches!(t, Termination::NonFinite { .. }) {
                states.push(state.clone());
            }
            return Ok(Trajectory { states, termination: t, steps, last: state });
        }
        states.push(state.clone());
    }
    Ok(Trajectory { states, termination: Termination::Completed, steps, last: state })
}

struct Stepper<F> {
    f: F,
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl<F: Fn(f64, &[f64], &mut [f64])> Stepper<F> {
    fn new(f: F, dim: usize) -> Self {
        Self { f, k: vec![vec![0.0; dim]; 7], tmp: vec![0.0; dim] }
    }

    fn eval(&mut self, stage: usize, x: f64) -> bool {
        (self.f)(x, &self.tmp, &mut self.k[stage]);
        self.k[stage].iter().all(|v| v.is_finite())
    }

    fn rk4(&mut self, s: &OdeState, h: f64) -> Option<Vec<f64>> {
        let y = &s.y;
        self.tmp.copy_from_slice(y);
        if !self.eval(0, s.x) {
            return None;
        }
        for (stage, frac) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
            for i in 0..y.len() {
                self.tmp[i] = y[i] + frac * h * self.k[stage - 1][i];
            }
            if !self.eval(stage, s.x + frac * h) {
                return None;
            }
        }
        let out: Vec<f64> = (0..y.len())
            .map(|i| y[i] + h / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]))
            .collect();
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    fn dopri(&mut self, s: &OdeState, h: f64, rtol: f64, atol: f64) -> std::result::Result<(Vec<f64>, f64), ()> {
        let y = &s.y;
        let n = y.len();
        for stage in 0..7 {
            for i in 0..n {
                self.tmp[i] = y[i] + h * (0..stage).map(|j| DP_A[stage][j] * self.k[j][i]).sum::<f64>();
            }
            if !self.eval(stage, s.x + DP_C[stage] * h) {
                return Err(());
            }
        }
        let mut y5 = vec![0.0; n];
        let mut err = 0.0;
        for i in 0..n {
            y5[i] = y[i] + h * (0..7).map(|j| DP_B5[j] * self.k[j][i]).sum::<f64>();
            let y4 = y[i] + h * (0..7).map(|j| DP_B4[j] * self.k[j][i]).sum::<f64>();
            let sc = atol + rtol * y[i].abs().max(y5[i].abs());
            err += ((y5[i] - y4) / sc).powi(2);
        }
        if y5.iter().any(|v| !v.is_finite()) {
            return Err(());
        }
        Ok((y5, (err / n as f64).sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn exp_rhs(_x: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[0];
    }

    fn osc_rhs(_x: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn exponential_fixed_and_adaptive() {
        let s = OdeState::new(0.0, vec![1.0]);
        let t = integrate_rk(exp_rhs, &s, &[1.0], &RkControls::default()).unwrap();
        assert!((t.states[0].y[0] - E).abs() < 1e-8);
        let t = integrate_rk(exp_rhs, &s, &[1.0], &RkControls::adaptive(1e-12, 1e-14)).unwrap();
        assert!((t.states[0].y[0] - E).abs() < 1e-8);
        assert_eq!(t.states[0].x, 1.0);
    }

    #[test]
    fn sine_lands_on_pi() {
        let s = OdeState::new(0.0, vec![0.0, 1.0]);
        let t = integrate_rk(osc_rhs, &s, &[PI / 2.0, PI], &RkControls::default()).unwrap();
        assert_eq!(t.states.len(), 2);
        assert!((t.states[0].y[0] - 1.0).abs() < 1e-8);
        assert!(t.states[1].y[0].abs() < 1e-8);
        assert_eq!(t.states[1].x, PI);
    }

    #[test]
    fn integrates_backwards() {
        let s = OdeState::new(1.0, vec![E]);
        let t = integrate_rk(exp_rhs, &s, &[0.5, 0.0], &RkControls::default()).unwrap();
        assert!((t.states[1].y[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn blow_up_halts_or_fails() {
        // y' = y², y(0) = 1 blows up at x = 1.
        let rhs = |_x: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0];
        let s = OdeState::new(0.0, vec![1.0]);
        let out: Vec<f64> = (1..=20).map(|i| i as f64 * 0.1).collect();
        let t = integrate_rk_partial(rhs, &s, &out, &RkControls::default(), |st| st.y[0].abs() > 1e6).unwrap();
        let Termination::Halted { x: stop } = t.termination else {
            panic!("{:?}", t.termination)
        };
        assert!((stop - 1.0).abs() < 1e-3);
        assert!(t.states.iter().all(|st| st.x <= stop && st.y[0].abs() <= 1e6));

        let err = integrate_rk(rhs, &s, &out, &RkControls::adaptive(1e-10, 1e-12)).unwrap_err();
        match err {
            Error::StepUnderflow { last_x } | Error::NonFiniteDerivative { x: last_x } => {
                assert!(last_x < 1.0 && last_x > 0.99)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_non_monotone_outputs() {
        let s = OdeState::new(0.0, vec![1.0]);
        assert!(integrate_rk(exp_rhs, &s, &[1.0, 0.5], &RkControls::default()).is_err());
    }
}
