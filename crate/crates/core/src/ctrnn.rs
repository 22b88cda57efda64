//! The three-layer neural circuit and its genotype encoding.
//!
//! Seven stateful sensory neurons feed a fully recurrent interneuron
//! layer, which projects to two non-recurrent motor neurons. All three
//! layers are leaky integrators advanced by forward Euler at [`crate::DT`].
//!
//! Sensory neurons: `tau_s * ds_i/dt = -s_i + I_i`, output
//! `o_i = sigmoid(-g_s * (s_i + theta_s))`. Note the negated argument:
//! higher state lowers the output.
//!
//! Interneurons: `tau_i * ds_i/dt = -s_i + sum_j w[j][i] * sigmoid(s_j + theta_j)
//! + sum_k w[k][i] * o_k`, with interneuron gains fixed at 1.
//!
//! Motor neurons use the same leaky-integrator form driven by the
//! weighted sum of interneuron outputs, with no recurrence. The agent's
//! acceleration is `g_m * (sigmoid(s_r + theta_m) - sigmoid(s_l + theta_m))`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of sensory rays / sensory neurons.
pub const N_SENSORS: usize = 7;

/// Parameter ranges used by the genotype decoding (lo, hi).
pub const GAIN_RANGE: (f64, f64) = (1.0, 20.0);
pub const TAU_RANGE: (f64, f64) = (1.0, 2.0);
pub const BIAS_RANGE: (f64, f64) = (-4.0, 4.0);
pub const WEIGHT_RANGE: (f64, f64) = (-5.0, 5.0);

/// The standard logistic sigmoid, strictly increasing, output in (0,1).
#[inline(always)]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Decoded phenotype: every constant and weight matrix of the circuit.
///
/// Weight layouts (all row-major, source index outer):
/// - `w_sensor_to_inter[k * n_inter + i]`: sensory neuron `k` to interneuron `i`
/// - `w_inter[j * n_inter + i]`: interneuron `j` to interneuron `i`
/// - `w_inter_to_motor[j * 2 + m]`: interneuron `j` to motor `m` (0 = left, 1 = right)
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub n_inter: usize,
    pub sensory_tau: f64,
    pub sensory_gain: f64,
    pub sensory_bias: f64,
    pub w_sensor_to_inter: Vec<f64>,
    pub w_inter: Vec<f64>,
    pub inter_bias: Vec<f64>,
    pub inter_tau: Vec<f64>,
    pub w_inter_to_motor: Vec<f64>,
    pub motor_gain: f64,
    pub motor_bias: f64,
    pub motor_tau: f64,
}

/// All neuron states at one instant. Reset state is all zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub s_sensor: [f64; N_SENSORS],
    pub s_inter: Vec<f64>,
    pub s_motor: [f64; 2],
    // scratch buffers so a step never allocates
    #[serde(skip)]
    inter_out: Vec<f64>,
    #[serde(skip)]
    inter_next: Vec<f64>,
}

impl NetworkState {
    pub fn zeros(n_inter: usize) -> Self {
        Self {
            s_sensor: [0.0; N_SENSORS],
            s_inter: vec![0.0; n_inter],
            s_motor: [0.0; 2],
            inter_out: vec![0.0; n_inter],
            inter_next: vec![0.0; n_inter],
        }
    }

    pub fn reset(&mut self) {
        self.s_sensor = [0.0; N_SENSORS];
        self.s_inter.iter_mut().for_each(|s| *s = 0.0);
        self.s_motor = [0.0; 2];
    }
}

/// One Euler step of the sensory layer: `s <- s + (dt/tau_s) * (-s + I)`.
#[inline]
pub fn step_sensory(state: &mut [f64; N_SENSORS], inputs: &[f64; N_SENSORS], tau: f64, dt: f64) {
    let k = dt / tau;
    for i in 0..N_SENSORS {
        state[i] += k * (-state[i] + inputs[i]);
    }
}

/// Sensory outputs `o_i = sigmoid(-g_s * (s_i + theta_s))`.
#[inline]
pub fn sensory_output(
    state: &[f64; N_SENSORS],
    gain: f64,
    bias: f64,
) -> [f64; N_SENSORS] {
    let mut out = [0.0; N_SENSORS];
    for i in 0..N_SENSORS {
        out[i] = sigmoid(-gain * (state[i] + bias));
    }
    out
}

/// Interneuron outputs `sigmoid(s_j + theta_j)` written into `out`.
#[inline]
pub fn interneuron_output(state: &[f64], bias: &[f64], out: &mut [f64]) {
    for (o, (s, th)) in out.iter_mut().zip(state.iter().zip(bias)) {
        *o = sigmoid(s + th);
    }
}

/// One Euler step of the interneuron layer. `inter_out` must hold the
/// outputs computed from the pre-step states; `next` receives the new states.
#[inline]
pub fn step_interneurons(
    state: &[f64],
    inter_out: &[f64],
    sensor_out: &[f64; N_SENSORS],
    params: &AgentParams,
    dt: f64,
    next: &mut [f64],
) {
    let n = params.n_inter;
    for i in 0..n {
        let mut drive = 0.0;
        for j in 0..n {
            drive += params.w_inter[j * n + i] * inter_out[j];
        }
        for k in 0..N_SENSORS {
            drive += params.w_sensor_to_inter[k * n + i] * sensor_out[k];
        }
        next[i] = state[i] + dt / params.inter_tau[i] * (-state[i] + drive);
    }
}

/// One Euler step of the two motor neurons, driven by interneuron outputs.
#[inline]
pub fn step_motors(state: &mut [f64; 2], inter_out: &[f64], params: &AgentParams, dt: f64) {
    let k = dt / params.motor_tau;
    for m in 0..2 {
        let mut drive = 0.0;
        for (j, o) in inter_out.iter().enumerate() {
            drive += params.w_inter_to_motor[j * 2 + m] * o;
        }
        state[m] += k * (-state[m] + drive);
    }
}

/// Agent acceleration `g_m * (sigmoid(s_r + theta_m) - sigmoid(s_l + theta_m))`,
/// bounded in `[-g_m, g_m]`.
#[inline]
pub fn motor_acceleration(s_left: f64, s_right: f64, gain: f64, bias: f64) -> f64 {
    gain * (sigmoid(s_right + bias) - sigmoid(s_left + bias))
}

impl AgentParams {
    /// Acceleration produced by the current (pre-step) motor states.
    #[inline]
    pub fn acceleration(&self, state: &NetworkState) -> f64 {
        motor_acceleration(state.s_motor[0], state.s_motor[1], self.motor_gain, self.motor_bias)
    }

    /// Advance the whole network one Euler step. All derivatives are
    /// evaluated at the pre-step state (synchronous update). Returns the
    /// acceleration computed from the pre-step motor states, which is the
    /// value the body uses over this step.
    pub fn step(&self, st: &mut NetworkState, inputs: &[f64; N_SENSORS], dt: f64) -> f64 {
        let accel = self.acceleration(st);
        let sensor_out = sensory_output(&st.s_sensor, self.sensory_gain, self.sensory_bias);
        let mut inter_out = std::mem::take(&mut st.inter_out);
        let mut inter_next = std::mem::take(&mut st.inter_next);
        interneuron_output(&st.s_inter, &self.inter_bias, &mut inter_out);
        step_interneurons(&st.s_inter, &inter_out, &sensor_out, self, dt, &mut inter_next);
        step_motors(&mut st.s_motor, &inter_out, self, dt);
        step_sensory(&mut st.s_sensor, inputs, self.sensory_tau, dt);
        std::mem::swap(&mut st.s_inter, &mut inter_next);
        st.inter_out = inter_out;
        st.inter_next = inter_next;
        accel
    }

    /// Interneuron outputs for the given state, as a fresh vector.
    pub fn interneuron_outputs(&self, s_inter: &[f64]) -> Vec<f64> {
        s_inter
            .iter()
            .zip(&self.inter_bias)
            .map(|(s, th)| sigmoid(s + th))
            .collect()
    }

    /// Check every decoded parameter against its declared range.
    pub fn check_ranges(&self) -> bool {
        let in_range = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        in_range(self.sensory_tau, TAU_RANGE)
            && in_range(self.sensory_gain, GAIN_RANGE)
            && in_range(self.sensory_bias, BIAS_RANGE)
            && in_range(self.motor_gain, GAIN_RANGE)
            && in_range(self.motor_bias, BIAS_RANGE)
            && in_range(self.motor_tau, TAU_RANGE)
            && self.inter_tau.iter().all(|&v| in_range(v, TAU_RANGE))
            && self.inter_bias.iter().all(|&v| in_range(v, BIAS_RANGE))
            && self
                .w_sensor_to_inter
                .iter()
                .chain(&self.w_inter)
                .chain(&self.w_inter_to_motor)
                .all(|&v| in_range(v, WEIGHT_RANGE))
    }
}

/// Number of genes required for a circuit with `n_inter` interneurons:
/// `3 + 7N + N^2 + 2N + 2N + 3`.
pub fn genotype_len(n_inter: usize) -> usize {
    3 + N_SENSORS * n_inter + n_inter * n_inter + 2 * n_inter + 2 * n_inter + 3
}

/// Flat parameter vector, every gene in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genotype {
    pub genes: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("genotype length {got} does not match {expected} (n_inter = {n_inter})")]
    LengthMismatch {
        n_inter: usize,
        expected: usize,
        got: usize,
    },
}

/// Affine map from a gene in `[-1, 1]` to `[lo, hi]`.
#[inline]
fn scale(gene: f64, (lo, hi): (f64, f64)) -> f64 {
    lo + (gene + 1.0) / 2.0 * (hi - lo)
}

/// Decode a genotype into agent parameters.
///
/// Gene layout, in order (see the genome schema in the README):
/// 1. sensory tau, sensory gain, sensory bias
/// 2. sensor-to-interneuron weights, row-major `[k][i]`
/// 3. recurrent interneuron weights, row-major `[j][i]`
/// 4. interneuron biases, then interneuron taus
/// 5. interneuron-to-motor weights, row-major `[j][m]` (left, right)
/// 6. motor gain, motor bias, motor tau
pub fn decode_genotype(g: &Genotype, n_inter: usize) -> Result<AgentParams, DecodeError> {
    let expected = genotype_len(n_inter);
    if g.genes.len() != expected {
        return Err(DecodeError::LengthMismatch {
            n_inter,
            expected,
            got: g.genes.len(),
        });
    }
    let mut it = g.genes.iter().copied();
    let mut take = |n: usize, range: (f64, f64)| -> Vec<f64> {
        (0..n).map(|_| scale(it.next().unwrap(), range)).collect()
    };
    let sensory_tau = take(1, TAU_RANGE)[0];
    let sensory_gain = take(1, GAIN_RANGE)[0];
    let sensory_bias = take(1, BIAS_RANGE)[0];
    let w_sensor_to_inter = take(N_SENSORS * n_inter, WEIGHT_RANGE);
    let w_inter = take(n_inter * n_inter, WEIGHT_RANGE);
    let inter_bias = take(n_inter, BIAS_RANGE);
    let inter_tau = take(n_inter, TAU_RANGE);
    let w_inter_to_motor = take(2 * n_inter, WEIGHT_RANGE);
    let motor_gain = take(1, GAIN_RANGE)[0];
    let motor_bias = take(1, BIAS_RANGE)[0];
    let motor_tau = take(1, TAU_RANGE)[0];
    Ok(AgentParams {
        n_inter,
        sensory_tau,
        sensory_gain,
        sensory_bias,
        w_sensor_to_inter,
        w_inter,
        inter_bias,
        inter_tau,
        w_inter_to_motor,
        motor_gain,
        motor_bias,
        motor_tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3.0_f64.ln()) - 0.75).abs() < 1e-15);
        assert!(sigmoid(-50.0) < 1e-20);
        assert!(sigmoid(1.0) > sigmoid(0.999));
    }

    #[test]
    fn sensory_equilibrium_and_single_step() {
        let mut s = [0.0; N_SENSORS];
        step_sensory(&mut s, &[0.0; N_SENSORS], 1.0, 0.1);
        assert_eq!(s, [0.0; N_SENSORS]);

        let mut s = [0.0; N_SENSORS];
        step_sensory(&mut s, &[1.0; N_SENSORS], 1.0, 0.1);
        assert!((s[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn sensory_converges_to_clamped_input() {
        // analytic solution of the linear ODE: |s - I| <= |I| e^(-t/tau)
        for &(tau, input) in &[(1.0, 1.0), (2.0, -3.0), (1.5, 10.0)] {
            let mut s = [0.0; N_SENSORS];
            let inputs = [input; N_SENSORS];
            let steps = (10.0 * tau / 0.1) as usize;
            for _ in 0..steps {
                step_sensory(&mut s, &inputs, tau, 0.1);
            }
            let tol = 1e-4 * input.abs().max(1.0);
            assert!((s[0] - input).abs() < tol, "tau={tau} input={input} s={}", s[0]);
        }
    }

    #[test]
    fn sensory_output_is_negated() {
        let gain = 2.0;
        let bias = 0.5;
        let mut s = [0.0; N_SENSORS];
        s[0] = -bias;
        s[1] = -bias - 3.0_f64.ln() / gain;
        s[2] = 1e6;
        let out = sensory_output(&s, gain, bias);
        assert!((out[0] - 0.5).abs() < 1e-15);
        assert!((out[1] - 0.75).abs() < 1e-12);
        assert!(out[2] < 1e-10); // large state drives output toward 0
    }

    fn tiny_params(n: usize) -> AgentParams {
        AgentParams {
            n_inter: n,
            sensory_tau: 1.0,
            sensory_gain: 1.0,
            sensory_bias: 0.0,
            w_sensor_to_inter: vec![0.0; N_SENSORS * n],
            w_inter: vec![0.0; n * n],
            inter_bias: vec![0.0; n],
            inter_tau: vec![1.0; n],
            w_inter_to_motor: vec![0.0; 2 * n],
            motor_gain: 1.0,
            motor_bias: 0.0,
            motor_tau: 1.0,
        }
    }

    #[test]
    fn interneuron_settles_to_constant_drive() {
        // with zero weights, tau ds/dt = -s + c settles at s = c
        let n = 1;
        let mut p = tiny_params(n);
        p.w_sensor_to_inter[0] = 2.0; // only ray 0 drives it
        let drive = 2.0 * 0.5; // sensory output at state 0, gain 1, bias 0
        let mut st = NetworkState::zeros(n);
        for _ in 0..2000 {
            p.step(&mut st, &[0.0; N_SENSORS], 0.1);
        }
        // sensory state stays at 0 (zero input), so drive is constant
        assert!((st.s_inter[0] - drive).abs() < 1e-6);
        // residual of the right-hand side at the settled state
        let resid = -st.s_inter[0] + drive;
        assert!(resid.abs() < 1e-6);
    }

    #[test]
    fn motor_symmetry() {
        let n = 2;
        let mut p = tiny_params(n);
        // identical columns: both motors receive the same drive
        p.w_inter_to_motor = vec![1.5, 1.5, -0.7, -0.7];
        let mut st = NetworkState::zeros(n);
        st.s_inter = vec![0.3, -0.8];
        for _ in 0..100 {
            p.step(&mut st, &[0.0; N_SENSORS], 0.1);
        }
        assert_eq!(st.s_motor[0], st.s_motor[1]);
        assert_eq!(p.acceleration(&st), 0.0);
    }

    #[test]
    fn acceleration_bounds_and_value() {
        assert_eq!(motor_acceleration(1.23, 1.23, 7.0, 0.4), 0.0);
        let a = motor_acceleration(-1e9, 1e9, 7.0, 0.0);
        assert!((a - 7.0).abs() < 1e-12);
        // s_r = -theta, s_l = -theta - ln 3, g = 10 -> 10 * (0.5 - 0.25)
        let theta: f64 = 0.9;
        let a = motor_acceleration(-theta - 3.0_f64.ln(), -theta, 10.0, theta);
        assert!((a - 2.5).abs() < 1e-12);
    }

    #[test]
    fn genotype_dimension() {
        assert_eq!(genotype_len(2), 32);
        assert_eq!(genotype_len(1), 18);
        assert_eq!(genotype_len(5), 86);
    }

    #[test]
    fn decode_endpoints_and_midpoint() {
        assert_eq!(scale(0.0, GAIN_RANGE), 10.5);
        assert_eq!(scale(-1.0, WEIGHT_RANGE), -5.0);
        assert_eq!(scale(1.0, WEIGHT_RANGE), 5.0);
        assert_eq!(scale(0.0, BIAS_RANGE), 0.0);
    }

    #[test]
    fn decode_layout_and_ranges() {
        let n = 2;
        let genes: Vec<f64> = (0..genotype_len(n))
            .map(|i| -1.0 + 2.0 * (i as f64) / (genotype_len(n) - 1) as f64)
            .collect();
        let p = decode_genotype(&Genotype { genes: genes.clone() }, n).unwrap();
        assert!(p.check_ranges());
        // spot-check the layout
        assert_eq!(p.sensory_tau, scale(genes[0], TAU_RANGE));
        assert_eq!(p.sensory_gain, scale(genes[1], GAIN_RANGE));
        assert_eq!(p.sensory_bias, scale(genes[2], BIAS_RANGE));
        assert_eq!(p.w_sensor_to_inter[0], scale(genes[3], WEIGHT_RANGE));
        assert_eq!(p.w_inter[0], scale(genes[3 + 14], WEIGHT_RANGE));
        assert_eq!(p.inter_bias[0], scale(genes[3 + 14 + 4], BIAS_RANGE));
        assert_eq!(p.inter_tau[0], scale(genes[3 + 14 + 4 + 2], TAU_RANGE));
        assert_eq!(p.w_inter_to_motor[0], scale(genes[3 + 14 + 4 + 4], WEIGHT_RANGE));
        assert_eq!(p.motor_gain, scale(genes[29], GAIN_RANGE));
        assert_eq!(p.motor_tau, scale(genes[31], TAU_RANGE));
    }

    #[test]
    fn decode_is_monotone_per_gene() {
        let n = 2;
        let d = genotype_len(n);
        let base = Genotype { genes: vec![0.0; d] };
        for i in 0..d {
            let mut lo = base.clone();
            let mut hi = base.clone();
            lo.genes[i] = -0.5;
            hi.genes[i] = 0.5;
            let plo = decode_genotype(&lo, n).unwrap();
            let phi = decode_genotype(&hi, n).unwrap();
            let flat = |p: &AgentParams| -> Vec<f64> {
                let mut v = vec![p.sensory_tau, p.sensory_gain, p.sensory_bias];
                v.extend(&p.w_sensor_to_inter);
                v.extend(&p.w_inter);
                v.extend(&p.inter_bias);
                v.extend(&p.inter_tau);
                v.extend(&p.w_inter_to_motor);
                v.extend([p.motor_gain, p.motor_bias, p.motor_tau]);
                v
            };
            let a = flat(&plo);
            let b = flat(&phi);
            assert!(a[i] < b[i], "gene {i} not monotone");
            for j in 0..d {
                if j != i {
                    assert_eq!(a[j], b[j], "gene {i} leaked into param {j}");
                }
            }
        }
    }

    #[test]
    fn decode_length_mismatch() {
        let g = Genotype { genes: vec![0.0; 31] };
        assert!(decode_genotype(&g, 2).is_err());
    }

    #[test]
    fn determinism_of_trajectories() {
        let n = 2;
        let genes: Vec<f64> = (0..genotype_len(n)).map(|i| ((i * 37 % 19) as f64 / 9.5) - 1.0).collect();
        let p = decode_genotype(&Genotype { genes }, n).unwrap();
        let run = || {
            let mut st = NetworkState::zeros(n);
            let mut trace = Vec::new();
            for t in 0..500 {
                let inputs = [(t as f64 * 0.01).sin().abs(); N_SENSORS];
                p.step(&mut st, &inputs, 0.1);
                trace.push((st.s_sensor, st.s_inter.clone(), st.s_motor));
            }
            trace
        };
        assert_eq!(run(), run());
    }
}
