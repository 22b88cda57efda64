//! Test-only reference implementations, kept deliberately independent
//! of the production code paths they check: a straight-line
//! transcription of the network update equations, and a dense
//! brute-force attractor scan.

use minicog::ctrnn::AgentParams;

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + f64::exp(-x))
}

/// One synchronous Euler step of the full network, transcribed directly
/// from the update equations with no shared code.
#[allow(clippy::needless_range_loop)]
pub fn reference_step(
    p: &AgentParams,
    s_sensor: &[f64; 7],
    s_inter: &[f64],
    s_motor: &[f64; 2],
    inputs: &[f64; 7],
    dt: f64,
) -> ([f64; 7], Vec<f64>, [f64; 2]) {
    let n = p.n_inter;

    // sensory outputs from the pre-step states: o_k = sigma(-g_s (s_k + theta_s))
    let mut o = [0.0; 7];
    for k in 0..7 {
        o[k] = sig(-p.sensory_gain * (s_sensor[k] + p.sensory_bias));
    }
    // interneuron outputs from the pre-step states, gain fixed at 1
    let mut io = vec![0.0; n];
    for j in 0..n {
        io[j] = sig(1.0 * (s_inter[j] + p.inter_bias[j]));
    }

    // tau_s ds_k/dt = -s_k + I_k
    let mut next_sensor = [0.0; 7];
    for k in 0..7 {
        next_sensor[k] = s_sensor[k] + dt * (-s_sensor[k] + inputs[k]) / p.sensory_tau;
    }

    // tau_i ds_i/dt = -s_i + sum_j w_ji sigma(g_j (s_j + theta_j)) + sum_k w_ki o_k
    let mut next_inter = vec![0.0; n];
    for i in 0..n {
        let mut recurrent = 0.0;
        for j in 0..n {
            recurrent += p.w_inter[j * n + i] * io[j];
        }
        let mut sensory = 0.0;
        for k in 0..7 {
            sensory += p.w_sensor_to_inter[k * n + i] * o[k];
        }
        next_inter[i] =
            s_inter[i] + dt * (-s_inter[i] + recurrent + sensory) / p.inter_tau[i];
    }

    // motors: same form, driven by interneuron outputs, no recurrence
    let mut next_motor = [0.0; 2];
    for m in 0..2 {
        let mut drive = 0.0;
        for j in 0..n {
            drive += p.w_inter_to_motor[j * 2 + m] * io[j];
        }
        next_motor[m] = s_motor[m] + dt * (-s_motor[m] + drive) / p.motor_tau;
    }

    (next_sensor, next_inter, next_motor)
}

/// Autonomous interneuron right-hand side (times tau), transcribed
/// independently.
pub fn reference_rhs(p: &AgentParams, s: &[f64], inputs: &[f64; 7]) -> Vec<f64> {
    let n = p.n_inter;
    let mut o = [0.0; 7];
    for k in 0..7 {
        o[k] = sig(-p.sensory_gain * (inputs[k] + p.sensory_bias));
    }
    (0..n)
        .map(|i| {
            let mut v = -s[i];
            for j in 0..n {
                v += p.w_inter[j * n + i] * sig(s[j] + p.inter_bias[j]);
            }
            for k in 0..7 {
                v += p.w_sensor_to_inter[k * n + i] * o[k];
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum RefAttractor {
    FixedPoint(Vec<f64>),
    LimitCycle(Vec<Vec<f64>>),
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl RefAttractor {
    pub fn distance(&self, other: &RefAttractor) -> f64 {
        match (self, other) {
            (RefAttractor::FixedPoint(a), RefAttractor::FixedPoint(b)) => sup(a, b),
            (RefAttractor::LimitCycle(a), RefAttractor::LimitCycle(b)) => {
                let one = |xs: &[Vec<f64>], ys: &[Vec<f64>]| {
                    xs.iter()
                        .map(|x| ys.iter().map(|y| sup(x, y)).fold(f64::INFINITY, f64::min))
                        .fold(0.0, f64::max)
                };
                one(a, b).max(one(b, a))
            }
            _ => f64::INFINITY,
        }
    }
}

/// Integrate one initial state of the autonomous system to its
/// attractor. `known_fps` allows early termination once the trajectory
/// is essentially on an already-verified fixed point.
fn integrate_to_attractor(
    p: &AgentParams,
    inputs: &[f64; 7],
    s0: &[f64],
    known_fps: &[Vec<f64>],
) -> Option<RefAttractor> {
    let dt = 0.1;
    let max_steps = 50_000;
    let mut s = s0.to_vec();
    let mut reference: Option<(Vec<f64>, usize)> = None;
    let mut excursion = 0.0_f64;
    for step in 0..max_steps {
        let rhs = reference_rhs(p, &s, inputs);
        let resid = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if resid < 1e-8 {
            return Some(RefAttractor::FixedPoint(s));
        }
        if step % 10 == 0 {
            if let Some(fp) = known_fps.iter().find(|fp| sup(fp, &s) < 1e-6) {
                return Some(RefAttractor::FixedPoint(fp.clone()));
            }
        }
        if step >= 1000 {
            match &reference {
                None => {
                    reference = Some((s.clone(), step));
                    excursion = 0.0;
                }
                Some((r, r_step)) => {
                    let d = sup(&s, r);
                    excursion = excursion.max(d);
                    let elapsed = (step - r_step) as f64 * dt;
                    if elapsed > 1.0 && d < 1e-4 && excursion > 1e-2 {
                        let mut orbit = Vec::new();
                        let mut q = s.clone();
                        for _ in 0..(step - r_step) {
                            orbit.push(q.clone());
                            let rhs = reference_rhs(p, &q, inputs);
                            for (i, qi) in q.iter_mut().enumerate() {
                                *qi += dt * rhs[i] / p.inter_tau[i];
                            }
                        }
                        return Some(RefAttractor::LimitCycle(orbit));
                    }
                    if step - r_step >= 5_000 {
                        reference = Some((s.clone(), step));
                        excursion = 0.0;
                    }
                }
            }
        }
        for (i, si) in s.iter_mut().enumerate() {
            *si += dt * rhs[i] / p.inter_tau[i];
        }
    }
    None
}

/// Dense brute-force attractor scan over `[-15, 15]^N` with the given
/// state-space step, deduplicated at `eps`. Returns the attractors and
/// the number of non-converging grid points.
pub fn dense_scan(
    p: &AgentParams,
    inputs: &[f64; 7],
    step: f64,
    eps: f64,
) -> (Vec<RefAttractor>, usize) {
    let n = p.n_inter;
    let axis: Vec<f64> = {
        let mut v = Vec::new();
        let mut x = -15.0;
        while x <= 15.0 + 1e-9 {
            v.push(x);
            x += step;
        }
        v
    };
    let mut found: Vec<RefAttractor> = Vec::new();
    let mut known_fps: Vec<Vec<f64>> = Vec::new();
    let mut non_convergent = 0usize;
    let mut idx = vec![0usize; n];
    loop {
        let s0: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        match integrate_to_attractor(p, inputs, &s0, &known_fps) {
            None => non_convergent += 1,
            Some(att) => {
                if !found.iter().any(|f| f.distance(&att) < eps) {
                    if let RefAttractor::FixedPoint(loc) = &att {
                        known_fps.push(loc.clone());
                    }
                    found.push(att);
                }
            }
        }
        // odometer over the grid
        let mut d = 0;
        loop {
            if d == n {
                return (found, non_convergent);
            }
            idx[d] += 1;
            if idx[d] < axis.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}
