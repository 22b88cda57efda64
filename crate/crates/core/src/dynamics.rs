//! Three-level reuse analysis: autonomous attractor extraction under
//! clamped inputs, attractor-set comparison across behaviors, basin
//! censuses, and time-shifted transient matching.
//!
//! The autonomous system is the interneuron layer alone. Sensory states
//! are pre-relaxed to the clamped input (their analytic equilibrium), so
//! the sensory contribution reduces to a constant drive per interneuron,
//! and the motors do not feed back.

use serde::{Deserialize, Serialize};

use crate::ctrnn::{sensory_output, sigmoid, AgentParams, N_SENSORS};
use crate::embodiment::{Pose, TrialResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Behavior {
    CircleCatch,
    LineAvoid,
    PoleBalance,
}

/// One clamped sensory input vector, with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputCondition {
    pub behavior: Behavior,
    pub inputs: [f64; N_SENSORS],
    /// Relative object pose that generated this condition.
    pub provenance: String,
}

/// Tolerances and sweep settings for the analysis. All exposed in the
/// experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    /// Fixed-point tolerance on the sup-norm of the autonomous
    /// right-hand side.
    pub fp_tol: f64,
    /// Recurrence distance for limit-cycle detection.
    pub cycle_tol: f64,
    /// Attractor deduplication / matching radius (sup-norm).
    pub eps_loc: f64,
    /// Give up settling after this much simulated time.
    pub max_time: f64,
    /// Settling transient before recurrence detection starts.
    pub transient_time: f64,
    /// Minimum excursion for a recurrence to count as a cycle rather
    /// than slow convergence.
    pub min_cycle_amplitude: f64,
    /// Initial-state grid: points per dimension over `state_range`.
    pub grid_points_per_dim: usize,
    pub state_range: (f64, f64),
    /// Spacing (time units) at which trajectory samples become input
    /// conditions and extra initial states.
    pub sample_interval: f64,
    /// Minimum matched-window length for transient matching (time units).
    pub match_window: f64,
    /// Neuron-output tolerance for transient matching.
    pub match_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            fp_tol: 1e-8,
            cycle_tol: 1e-4,
            eps_loc: 0.05,
            max_time: 5000.0,
            transient_time: 100.0,
            min_cycle_amplitude: 1e-2,
            grid_points_per_dim: 5,
            state_range: (-15.0, 15.0),
            sample_interval: 5.0,
            match_window: 50.0,
            match_tol: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttractorKind {
    FixedPoint { location: Vec<f64> },
    LimitCycle { orbit: Vec<Vec<f64>>, period: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attractor {
    pub kind: AttractorKind,
    pub source: InputCondition,
    /// How many settle() calls ended up here.
    pub basin_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorSet {
    pub behavior: Behavior,
    pub attractors: Vec<Attractor>,
    pub non_convergent: usize,
}

/// Outcome of settling from one initial state.
#[derive(Debug, Clone, PartialEq)]
pub enum SettleOutcome {
    FixedPoint { location: Vec<f64> },
    LimitCycle { orbit: Vec<Vec<f64>>, period: f64 },
    NonConvergent { last: Vec<f64> },
}

/// Constant drive each interneuron receives once the sensory layer is
/// relaxed to the clamped input.
pub fn interneuron_drive(params: &AgentParams, inputs: &[f64; N_SENSORS]) -> Vec<f64> {
    let out = sensory_output(inputs, params.sensory_gain, params.sensory_bias);
    let n = params.n_inter;
    (0..n)
        .map(|i| {
            (0..N_SENSORS)
                .map(|k| params.w_sensor_to_inter[k * n + i] * out[k])
                .sum()
        })
        .collect()
}

/// Right-hand side of the autonomous interneuron equation (the quantity
/// multiplied by `1/tau_i`): `-s_i + sum_j w[j][i] sigmoid(s_j + theta_j) + drive_i`.
pub fn autonomous_rhs(params: &AgentParams, state: &[f64], drive: &[f64], rhs: &mut [f64]) {
    let n = params.n_inter;
    for i in 0..n {
        let mut v = -state[i] + drive[i];
        for j in 0..n {
            v += params.w_inter[j * n + i] * sigmoid(state[j] + params.inter_bias[j]);
        }
        rhs[i] = v;
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Integrate the autonomous interneuron dynamics from `s0` under the
/// clamped `inputs` until a fixed point (sup-norm of the right-hand
/// side below `fp_tol`) or a recurrence with positive period is found,
/// or `max_time` elapses.
pub fn settle(
    params: &AgentParams,
    inputs: &[f64; N_SENSORS],
    s0: &[f64],
    opts: &AnalysisOptions,
) -> SettleOutcome {
    let dt = crate::DT;
    let n = params.n_inter;
    let drive = interneuron_drive(params, inputs);
    let mut s = s0.to_vec();
    let mut rhs = vec![0.0; n];
    let max_steps = (opts.max_time / dt) as usize;
    // recurrence reference, refreshed periodically so the trajectory
    // gets a chance to land on the cycle first
    let refresh_steps = (500.0_f64.min(opts.max_time) / dt) as usize;
    let transient_steps = (opts.transient_time / dt) as usize;
    let mut reference: Option<Vec<f64>> = None;
    let mut ref_step = 0usize;
    let mut excursion = 0.0_f64;

    for step in 0..max_steps {
        autonomous_rhs(params, &s, &drive, &mut rhs);
        if sup_norm(&rhs) < opts.fp_tol {
            return SettleOutcome::FixedPoint { location: s };
        }
        if step >= transient_steps {
            match &reference {
                None => {
                    reference = Some(s.clone());
                    ref_step = step;
                    excursion = 0.0;
                }
                Some(r) => {
                    let d = sup_dist(&s, r);
                    excursion = excursion.max(d);
                    let elapsed = (step - ref_step) as f64 * dt;
                    if elapsed > 1.0 && d < opts.cycle_tol && excursion > opts.min_cycle_amplitude
                    {
                        // capture one loop of the orbit
                        let period = elapsed;
                        let mut orbit = Vec::with_capacity(step - ref_step);
                        let mut p = s.clone();
                        for _ in 0..(step - ref_step) {
                            orbit.push(p.clone());
                            autonomous_rhs(params, &p, &drive, &mut rhs);
                            for i in 0..n {
                                p[i] += dt / params.inter_tau[i] * rhs[i];
                            }
                        }
                        return SettleOutcome::LimitCycle { orbit, period };
                    }
                    if step - ref_step >= refresh_steps {
                        reference = Some(s.clone());
                        ref_step = step;
                        excursion = 0.0;
                    }
                }
            }
        }
        for i in 0..n {
            s[i] += dt / params.inter_tau[i] * rhs[i];
        }
    }
    SettleOutcome::NonConvergent { last: s }
}

/// Distance between two attractors for dedup/matching: sup-norm between
/// fixed points, symmetric orbit-to-orbit sup distance between cycles,
/// infinite across kinds.
pub fn attractor_distance(a: &AttractorKind, b: &AttractorKind) -> f64 {
    match (a, b) {
        (AttractorKind::FixedPoint { location: la }, AttractorKind::FixedPoint { location: lb }) => {
            sup_dist(la, lb)
        }
        (AttractorKind::LimitCycle { orbit: oa, .. }, AttractorKind::LimitCycle { orbit: ob, .. }) => {
            let one_way = |xs: &Vec<Vec<f64>>, ys: &Vec<Vec<f64>>| {
                xs.iter()
                    .map(|x| ys.iter().map(|y| sup_dist(x, y)).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max)
            };
            one_way(oa, ob).max(one_way(ob, oa))
        }
        _ => f64::INFINITY,
    }
}

fn outcome_kind(outcome: SettleOutcome) -> Option<AttractorKind> {
    match outcome {
        SettleOutcome::FixedPoint { location } => Some(AttractorKind::FixedPoint { location }),
        SettleOutcome::LimitCycle { orbit, period } => {
            Some(AttractorKind::LimitCycle { orbit, period })
        }
        SettleOutcome::NonConvergent { .. } => None,
    }
}

/// Cartesian grid of initial interneuron states.
pub fn state_grid(n: usize, points_per_dim: usize, range: (f64, f64)) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..points_per_dim)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (points_per_dim - 1).max(1) as f64)
        .collect();
    let mut grid = vec![Vec::new()];
    for _ in 0..n {
        grid = grid
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    grid
}

/// Settle from every initial state under every input condition and
/// collect the deduplicated attractor set for one behavior.
pub fn build_attractor_set(
    params: &AgentParams,
    behavior: Behavior,
    conditions: &[InputCondition],
    initial_states: &[Vec<f64>],
    opts: &AnalysisOptions,
) -> AttractorSet {
    let mut set = AttractorSet {
        behavior,
        attractors: Vec::new(),
        non_convergent: 0,
    };
    for cond in conditions {
        for s0 in initial_states {
            let outcome = settle(params, &cond.inputs, s0, opts);
            match outcome_kind(outcome) {
                None => set.non_convergent += 1,
                Some(kind) => {
                    match set
                        .attractors
                        .iter_mut()
                        .find(|a| attractor_distance(&a.kind, &kind) < opts.eps_loc)
                    {
                        Some(existing) => existing.basin_samples += 1,
                        None => set.attractors.push(Attractor {
                            kind,
                            source: cond.clone(),
                            basin_samples: 1,
                        }),
                    }
                }
            }
        }
    }
    set
}

/// Sample input conditions along a recorded trajectory every
/// `sample_interval` time units. Also returns the interneuron states
/// visited at those instants (extra initial states for settling).
pub fn trajectory_conditions(
    behavior: Behavior,
    traj: &TrialResult,
    opts: &AnalysisOptions,
) -> (Vec<InputCondition>, Vec<Vec<f64>>) {
    let stride = (opts.sample_interval / crate::DT).round().max(1.0) as usize;
    let mut conditions: Vec<InputCondition> = Vec::new();
    let mut states = Vec::new();
    for ts in traj.trajectory.iter().step_by(stride) {
        let provenance = match ts.pose {
            Pose::Falling { x, y, .. } => {
                format!("t={:.1} rel=({:.2},{:.2})", ts.t, x - ts.x_agent, y)
            }
            Pose::Pole { theta, .. } => format!("t={:.1} theta={:.4}", ts.t, theta),
        };
        // duplicate input vectors add nothing
        if !conditions.iter().any(|c| c.inputs == ts.inputs) {
            conditions.push(InputCondition {
                behavior,
                inputs: ts.inputs,
                provenance,
            });
        }
        states.push(ts.s_inter.clone());
    }
    (conditions, states)
}

/// Static grid of object poses for a behavior, turned into clamped
/// input conditions. Complements the trajectory-driven conditions.
pub fn static_conditions(
    behavior: Behavior,
    sim: &crate::embodiment::SimConfig,
) -> Vec<InputCondition> {
    let mut conditions = Vec::new();
    match behavior {
        Behavior::CircleCatch | Behavior::LineAvoid => {
            let shape = if behavior == Behavior::CircleCatch {
                crate::embodiment::Shape::Circle
            } else {
                crate::embodiment::Shape::Line
            };
            for dx in [-40.0, -20.0, 0.0, 20.0, 40.0] {
                for dy in [60.0, 140.0, 220.0] {
                    conditions.push(InputCondition {
                        behavior,
                        inputs: crate::embodiment::cast_rays(0.0, shape, dx, dy, sim),
                        provenance: format!("static rel=({dx},{dy})"),
                    });
                }
            }
        }
        Behavior::PoleBalance => {
            for deg in [-12.0_f64, -9.0, -6.0, -3.0, 0.0, 3.0, 6.0, 9.0, 12.0] {
                conditions.push(InputCondition {
                    behavior,
                    inputs: crate::embodiment::pole_inputs(deg.to_radians(), sim),
                    provenance: format!("static theta={deg}deg"),
                });
            }
        }
    }
    conditions
}

/// How two attractor sets overlap: indices into each set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetComparison {
    pub shared: Vec<(usize, usize)>,
    pub only_a: Vec<usize>,
    pub only_b: Vec<usize>,
}

/// Greedy mutual-nearest-neighbor matching of two attractor sets under
/// the sup-norm threshold `eps_loc`.
pub fn compare_attractor_sets(a: &AttractorSet, b: &AttractorSet, eps_loc: f64) -> SetComparison {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, aa) in a.attractors.iter().enumerate() {
        for (j, bb) in b.attractors.iter().enumerate() {
            let d = attractor_distance(&aa.kind, &bb.kind);
            if d < eps_loc {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; a.attractors.len()];
    let mut used_b = vec![false; b.attractors.len()];
    let mut shared = Vec::new();
    for (_, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            shared.push((i, j));
        }
    }
    let only_a = used_a.iter().enumerate().filter(|(_, u)| !**u).map(|(i, _)| i).collect();
    let only_b = used_b.iter().enumerate().filter(|(_, u)| !**u).map(|(i, _)| i).collect();
    SetComparison { shared, only_a, only_b }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinCensus {
    /// Fraction of converged grid points reaching each attractor
    /// (indexed like the attractor list passed in).
    pub fractions: Vec<f64>,
    pub converged: usize,
    pub non_convergent: usize,
    /// Converged points whose endpoint matched no known attractor.
    pub unmatched: usize,
}

/// Classify every grid initial state by which attractor settle()
/// reaches.
pub fn basin_census(
    params: &AgentParams,
    inputs: &[f64; N_SENSORS],
    attractors: &[Attractor],
    grid: &[Vec<f64>],
    opts: &AnalysisOptions,
) -> BasinCensus {
    let mut counts = vec![0usize; attractors.len()];
    let mut non_convergent = 0usize;
    let mut unmatched = 0usize;
    let mut converged = 0usize;
    for s0 in grid {
        match outcome_kind(settle(params, inputs, s0, opts)) {
            None => non_convergent += 1,
            Some(kind) => {
                converged += 1;
                match attractors
                    .iter()
                    .position(|a| attractor_distance(&a.kind, &kind) < opts.eps_loc)
                {
                    Some(i) => counts[i] += 1,
                    None => unmatched += 1,
                }
            }
        }
    }
    let denom = converged.max(1) as f64;
    BasinCensus {
        fractions: counts.iter().map(|&c| c as f64 / denom).collect(),
        converged,
        non_convergent,
        unmatched,
    }
}

/// One matched window between two interneuron-output series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientMatch {
    /// Start time within series A.
    pub t_a: f64,
    /// Start time within series B.
    pub t_b: f64,
    /// Time shift applied to A (t_a - t_b).
    pub shift: f64,
    /// Window length in time units.
    pub duration: f64,
}

/// Find all maximal windows of length at least `window` time units
/// where, at some time shift, the two interneuron-output series agree
/// within `tol` on every neuron. Shift search granularity is one step.
/// Matches are reported longest first.
pub fn match_transients(
    series_a: &[Vec<f64>],
    series_b: &[Vec<f64>],
    window: f64,
    shift_range: f64,
    tol: f64,
    dt: f64,
) -> Vec<TransientMatch> {
    let w_steps = (window / dt).round().max(1.0) as usize;
    let max_shift = (shift_range / dt).round() as i64;
    let (la, lb) = (series_a.len() as i64, series_b.len() as i64);
    let mut matches = Vec::new();
    for shift in -max_shift..=max_shift {
        // a[i + shift] compared against b[i]
        let i_lo = (-shift).max(0);
        let i_hi = (lb).min(la - shift);
        if i_hi - i_lo < w_steps as i64 {
            continue;
        }
        let mut run_start: Option<i64> = None;
        let close = |matches: &mut Vec<TransientMatch>, start: i64, end: i64| {
            let len = (end - start) as usize;
            if len >= w_steps {
                matches.push(TransientMatch {
                    t_a: (start + shift) as f64 * dt,
                    t_b: start as f64 * dt,
                    shift: shift as f64 * dt,
                    duration: len as f64 * dt,
                });
            }
        };
        for i in i_lo..i_hi {
            let ok = sup_dist(&series_a[(i + shift) as usize], &series_b[i as usize]) < tol;
            match (ok, run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(start)) => {
                    close(&mut matches, start, i);
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(start) = run_start {
            close(&mut matches, start, i_hi);
        }
    }
    matches.sort_by(|a, b| {
        b.duration
            .partial_cmp(&a.duration)
            .unwrap()
            .then(a.shift.abs().partial_cmp(&b.shift.abs()).unwrap())
    });
    matches
}

/// Per-ray input statistics over a time interval of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayStats {
    pub mean: f64,
    pub peak: f64,
    /// Fraction of samples with nonzero input.
    pub active_fraction: f64,
}

/// Summarize which sensory channels were active during `[t0, t1]`.
pub fn sensory_context(traj: &TrialResult, t0: f64, t1: f64) -> [RayStats; N_SENSORS] {
    let samples: Vec<_> = traj
        .trajectory
        .iter()
        .filter(|ts| ts.t >= t0 && ts.t <= t1)
        .collect();
    std::array::from_fn(|k| {
        let n = samples.len().max(1) as f64;
        let mut mean = 0.0;
        let mut peak = 0.0_f64;
        let mut active = 0usize;
        for ts in &samples {
            mean += ts.inputs[k];
            peak = peak.max(ts.inputs[k]);
            if ts.inputs[k] > 0.0 {
                active += 1;
            }
        }
        RayStats {
            mean: mean / n,
            peak,
            active_fraction: active as f64 / n,
        }
    })
}
