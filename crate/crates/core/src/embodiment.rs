//! Agent body, ray sensing, falling-object and pole physics, trial
//! execution and both fitness functions.
//!
//! The agent lives on a 1-D track. Seven sensory rays radiate upward
//! from its center, equally spaced over a total angle of pi/6 and
//! symmetric about vertical (index 0 leftmost, 6 rightmost). Ray input
//! falls off linearly with intersection distance: `I = I_max * (1 - d / range)`,
//! zero beyond the range.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctrnn::{AgentParams, NetworkState, N_SENSORS};

/// Body geometry shared by both tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub diameter: f64,
    pub ray_spread: f64,
    pub ray_range: f64,
}

impl Default for BodySpec {
    fn default() -> Self {
        Self {
            diameter: 30.0,
            ray_spread: std::f64::consts::FRAC_PI_6,
            ray_range: 265.0,
        }
    }
}

impl BodySpec {
    /// Ray angles in radians from vertical, negative = left, ascending.
    pub fn ray_angles(&self) -> [f64; N_SENSORS] {
        let half = self.ray_spread / 2.0;
        let step = self.ray_spread / (N_SENSORS - 1) as f64;
        std::array::from_fn(|k| -half + k as f64 * step)
    }
}

/// Physics and task constants. Defaults follow the task definitions;
/// pole constants (gravity, length) and the drop height are configurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    pub i_max: f64,
    pub body: BodySpec,
    /// Circle diameter and line length.
    pub object_size: f64,
    pub fall_speed: f64,
    pub start_height: f64,
    /// Final-distance clip for the categorization score.
    pub offset_clip: f64,
    pub gravity: f64,
    pub pole_length: f64,
    pub pole_eval_time: f64,
    /// The pole counts as dropped beyond this angle (degrees).
    pub pole_fail_angle_deg: f64,
    /// The pole trial ends if the agent strays farther than this.
    pub max_stray: f64,
    /// Magnitude of the initial pole angular velocity (radians/s) in
    /// the 16-trial grid.
    pub pole_init_angvel: f64,
    /// Sample categorization offsets uniformly at random instead of the
    /// deterministic 8-point grid.
    pub random_trials: bool,
    /// Clamp the per-trial pole score below at 0 (cos(6*theta) can go
    /// negative for transients beyond 7.5 degrees).
    pub clamp_pole_score: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: crate::DT,
            i_max: 10.0,
            body: BodySpec::default(),
            object_size: 30.0,
            fall_speed: 0.3,
            start_height: 275.0,
            offset_clip: 45.0,
            gravity: 9.8,
            pole_length: 200.0,
            pole_eval_time: 500.0,
            pole_fail_angle_deg: 15.0,
            max_stray: 45.0,
            pole_init_angvel: 0.1,
            random_trials: false,
            clamp_pole_score: true,
        }
    }
}

/// Shape of a falling object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Circle,
    Line,
}

/// Pose of whatever the agent is sensing, one sample in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Pose {
    Falling { shape: Shape, x: f64, y: f64 },
    Pole { theta: f64, omega: f64 },
}

/// One task trial's initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrialSpec {
    /// Falling circle to be caught; `offset` is the object's initial
    /// horizontal offset from the agent, in [-50, 50].
    Catch { offset: f64 },
    /// Falling line to be avoided.
    Avoid { offset: f64 },
    /// Pole balancing from an initial angle (radians) and angular velocity.
    Pole { theta0: f64, omega0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    PoleFell,
    AgentStrayed,
}

/// One recorded simulation step (pre-step state plus the acceleration
/// applied over the step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajSample {
    pub t: f64,
    pub x_agent: f64,
    pub v_agent: f64,
    pub pose: Pose,
    pub inputs: [f64; N_SENSORS],
    pub s_sensor: [f64; N_SENSORS],
    pub s_inter: Vec<f64>,
    pub s_motor: [f64; 2],
    pub accel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub spec: TrialSpec,
    pub score: f64,
    pub termination: Termination,
    pub trajectory: Vec<TrajSample>,
}

#[derive(Debug, Error)]
pub enum TrialError {
    #[error("trial spec {0:?} is not valid for task {1:?}")]
    SpecMismatch(TrialSpec, Task),
}

/// Ray input from an intersection at distance `d`: linear falloff,
/// `I_max` at contact, zero at and beyond the range.
#[inline]
pub fn ray_input(d: f64, range: f64, i_max: f64) -> f64 {
    if (0.0..=range).contains(&d) {
        i_max * (1.0 - d / range)
    } else {
        0.0
    }
}

/// Cast all 7 rays from the agent against a falling object.
pub fn cast_rays(
    agent_x: f64,
    shape: Shape,
    obj_x: f64,
    obj_y: f64,
    sim: &SimConfig,
) -> [f64; N_SENSORS] {
    let angles = sim.body.ray_angles();
    let half = sim.object_size / 2.0;
    std::array::from_fn(|k| {
        let (sin_a, cos_a) = angles[k].sin_cos();
        let d = match shape {
            Shape::Circle => {
                // ray-circle: origin at the agent center, direction (sin, cos)
                let ocx = obj_x - agent_x;
                let ocy = obj_y;
                let proj = ocx * sin_a + ocy * cos_a;
                let d2 = ocx * ocx + ocy * ocy - proj * proj;
                let r2 = half * half;
                if proj < 0.0 || d2 > r2 {
                    f64::INFINITY
                } else {
                    (proj - (r2 - d2).sqrt()).max(0.0)
                }
            }
            Shape::Line => {
                // horizontal segment of length `object_size` at height obj_y
                if obj_y <= 0.0 || cos_a <= 0.0 {
                    f64::INFINITY
                } else {
                    let t = obj_y / cos_a;
                    let x_hit = agent_x + t * sin_a;
                    if (x_hit - obj_x).abs() <= half {
                        t
                    } else {
                        f64::INFINITY
                    }
                }
            }
        };
        ray_input(d, sim.body.ray_range, sim.i_max)
    })
}

/// Input to a single ray at angle `phi` from a pole at angle `theta`
/// (both radians): triangular profile, peak `i_max` at `theta == phi`,
/// reaching 0 one degree to either side. Between rays the pole is
/// invisible.
#[inline]
pub fn pole_ray_input(theta: f64, phi: f64, i_max: f64) -> f64 {
    let diff_deg = (theta - phi).to_degrees().abs();
    i_max * (1.0 - diff_deg).max(0.0)
}

/// Inputs to all 7 rays from the pole.
pub fn pole_inputs(theta: f64, sim: &SimConfig) -> [f64; N_SENSORS] {
    let angles = sim.body.ray_angles();
    std::array::from_fn(|k| pole_ray_input(theta, angles[k], sim.i_max))
}

/// One Euler step of the pole: `theta_dd = (g/L) sin(theta) - (a/L) cos(theta)`,
/// both state variables advanced from their pre-step values.
#[inline]
pub fn step_pole(
    theta: f64,
    omega: f64,
    accel: f64,
    gravity: f64,
    length: f64,
    dt: f64,
) -> (f64, f64) {
    let alpha = (gravity / length) * theta.sin() - (accel / length) * theta.cos();
    (theta + dt * omega, omega + dt * alpha)
}

/// Run a single categorization trial. The object starts `start_height`
/// above the agent and falls at constant speed; the trial ends when the
/// vertical offset reaches 0. Score is `1 - d` for circles and `d` for
/// lines, where `d` is the final horizontal distance clipped at
/// `offset_clip` and normalized by it.
pub fn run_categorization_trial(
    params: &AgentParams,
    spec: &TrialSpec,
    sim: &SimConfig,
    record: bool,
) -> Result<TrialResult, TrialError> {
    let (shape, offset) = match *spec {
        TrialSpec::Catch { offset } => (Shape::Circle, offset),
        TrialSpec::Avoid { offset } => (Shape::Line, offset),
        other => return Err(TrialError::SpecMismatch(other, Task::Categorization)),
    };
    let mut st = NetworkState::zeros(params.n_inter);
    let (mut x, mut v) = (0.0_f64, 0.0_f64);
    let obj_x = offset;
    let mut y = sim.start_height;
    let mut t = 0.0;
    let mut trajectory = Vec::new();
    while y > 0.0 {
        let inputs = cast_rays(x, shape, obj_x, y, sim);
        if record {
            trajectory.push(TrajSample {
                t,
                x_agent: x,
                v_agent: v,
                pose: Pose::Falling { shape, x: obj_x, y },
                inputs,
                s_sensor: st.s_sensor,
                s_inter: st.s_inter.clone(),
                s_motor: st.s_motor,
                accel: params.acceleration(&st),
            });
        }
        let a = params.step(&mut st, &inputs, sim.dt);
        x += sim.dt * v;
        v += sim.dt * a;
        y -= sim.dt * sim.fall_speed;
        t += sim.dt;
    }
    let d = (x - obj_x).abs().min(sim.offset_clip) / sim.offset_clip;
    let score = match shape {
        Shape::Circle => 1.0 - d,
        Shape::Line => d,
    };
    Ok(TrialResult {
        spec: *spec,
        score,
        termination: Termination::Completed,
        trajectory,
    })
}

/// Run a single pole-balancing trial. Reward `cos(6 * theta)` accrues
/// each step over the evaluation horizon; the trial terminates early if
/// the pole falls beyond the rays or the agent strays too far, and the
/// remaining steps contribute 0. The sum is always divided by the full
/// step count, so dropping early strictly loses score.
pub fn run_pole_trial(
    params: &AgentParams,
    spec: &TrialSpec,
    sim: &SimConfig,
    record: bool,
) -> Result<TrialResult, TrialError> {
    let (theta0, omega0) = match *spec {
        TrialSpec::Pole { theta0, omega0 } => (theta0, omega0),
        other => return Err(TrialError::SpecMismatch(other, Task::PoleBalance)),
    };
    let fail_angle = sim.pole_fail_angle_deg.to_radians();
    let total_steps = (sim.pole_eval_time / sim.dt).round() as usize;
    let mut st = NetworkState::zeros(params.n_inter);
    let (mut x, mut v) = (0.0_f64, 0.0_f64);
    let (mut theta, mut omega) = (theta0, omega0);
    let mut sum = 0.0;
    let mut termination = Termination::Completed;
    let mut trajectory = Vec::new();
    for step in 0..total_steps {
        if theta.abs() > fail_angle {
            termination = Termination::PoleFell;
            break;
        }
        if x.abs() > sim.max_stray {
            termination = Termination::AgentStrayed;
            break;
        }
        sum += (6.0 * theta).cos();
        let inputs = pole_inputs(theta, sim);
        if record {
            trajectory.push(TrajSample {
                t: step as f64 * sim.dt,
                x_agent: x,
                v_agent: v,
                pose: Pose::Pole { theta, omega },
                inputs,
                s_sensor: st.s_sensor,
                s_inter: st.s_inter.clone(),
                s_motor: st.s_motor,
                accel: params.acceleration(&st),
            });
        }
        let a = params.step(&mut st, &inputs, sim.dt);
        let (th, om) = step_pole(theta, omega, a, sim.gravity, sim.pole_length, sim.dt);
        theta = th;
        omega = om;
        x += sim.dt * v;
        v += sim.dt * a;
    }
    let mean = sum / total_steps as f64;
    let score = if sim.clamp_pole_score {
        mean.clamp(0.0, 1.0)
    } else {
        mean.min(1.0)
    };
    Ok(TrialResult {
        spec: *spec,
        score,
        termination,
        trajectory,
    })
}

/// Run any trial, dispatching on its spec.
pub fn run_trial(
    params: &AgentParams,
    spec: &TrialSpec,
    sim: &SimConfig,
    record: bool,
) -> Result<TrialResult, TrialError> {
    match spec {
        TrialSpec::Catch { .. } | TrialSpec::Avoid { .. } => {
            run_categorization_trial(params, spec, sim, record)
        }
        TrialSpec::Pole { .. } => run_pole_trial(params, spec, sim, record),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    Categorization,
    PoleBalance,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// The 16 categorization trials: 8 circle and 8 line offsets. The
/// deterministic grid is evenly spaced over [-50, 50]; random mode
/// samples offsets uniformly instead.
pub fn categorization_trials<R: Rng>(sim: &SimConfig, mut rng: Option<&mut R>) -> Vec<TrialSpec> {
    let offsets: Vec<f64> = if sim.random_trials {
        let rng = rng
            .as_deref_mut()
            .expect("random trial sampling needs an RNG");
        (0..8).map(|_| rng.gen_range(-50.0..=50.0)).collect()
    } else {
        linspace(-50.0, 50.0, 8)
    };
    let line_offsets: Vec<f64> = if sim.random_trials {
        let rng = rng.as_deref_mut().unwrap();
        (0..8).map(|_| rng.gen_range(-50.0..=50.0)).collect()
    } else {
        offsets.clone()
    };
    offsets
        .into_iter()
        .map(|offset| TrialSpec::Catch { offset })
        .chain(line_offsets.into_iter().map(|offset| TrialSpec::Avoid { offset }))
        .collect()
}

/// The 16 pole trials: angle magnitudes {2.25, 4.5, 6.75, 9} degrees,
/// both signs, angular velocity `-pole_init_angvel` or
/// `+pole_init_angvel` (default magnitude 0.1).
pub fn pole_trials(sim: &SimConfig) -> Vec<TrialSpec> {
    let mut specs = Vec::with_capacity(16);
    for mag in [2.25_f64, 4.5, 6.75, 9.0] {
        for sign in [-1.0, 1.0] {
            for omega0 in [-sim.pole_init_angvel, sim.pole_init_angvel] {
                specs.push(TrialSpec::Pole {
                    theta0: (sign * mag).to_radians(),
                    omega0,
                });
            }
        }
    }
    specs
}

/// Task fitness: mean trial score over the 16-trial grid. The network
/// state is reset to zero before every trial.
pub fn evaluate_task<R: Rng>(
    params: &AgentParams,
    task: Task,
    sim: &SimConfig,
    rng: Option<&mut R>,
) -> f64 {
    let specs = match task {
        Task::Categorization => categorization_trials(sim, rng),
        Task::PoleBalance => pole_trials(sim),
    };
    let sum: f64 = specs
        .iter()
        .map(|spec| run_trial(params, spec, sim, false).unwrap().score)
        .sum();
    sum / specs.len() as f64
}
