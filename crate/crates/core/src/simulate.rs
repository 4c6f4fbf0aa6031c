//! Fixed-step time-domain simulation of the modal circuit equations.
//!
//! Sources are scheduled per mode (`u_ext − u_int`) and per loop. In the modal
//! domain every mode is integrated on its own; the nodal domain integrates the
//! arm equations directly and projects back, which makes it an independent
//! check on the decoupling.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_traits::{Float, NumCast};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::loops::LoopBasis;
use crate::ratmat::Matrix;
use crate::scalar::{format_float, Rational, Scalar};
use crate::spectral::{edge_current_map, modal_ohm, ArmModel, SpectralBasis};
use crate::topology::Topology;

/// `(dc + ac·sin(2πft + φ)) · s(t)`, where `s(t)` is the scale of the latest
/// step event at or before `t` (1 before the first event).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Waveform {
    pub dc_level: f64,
    pub ac_amplitude: f64,
    pub ac_frequency: f64,
    pub ac_phase: f64,
    /// `(time, scale)` pairs with strictly increasing times.
    pub step_events: Vec<(f64, f64)>,
}

impl Waveform {
    pub fn dc(level: f64) -> Self {
        Self { dc_level: level, ..Self::default() }
    }

    pub fn ac(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self { ac_amplitude: amplitude, ac_frequency: frequency, ac_phase: phase, ..Self::default() }
    }

    pub fn with_step(mut self, time: f64, scale: f64) -> Self {
        self.step_events.push((time, scale));
        self
    }

    pub fn validate(&self) -> Result<()> {
        let values = [self.dc_level, self.ac_amplitude, self.ac_frequency, self.ac_phase];
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("waveform parameters must be finite");
        }
        if self.ac_frequency < 0.0 {
            return invalid("waveform frequency must be non-negative");
        }
        if self.step_events.iter().any(|(t, s)| !t.is_finite() || !s.is_finite()) {
            return invalid("step events must be finite");
        }
        if self.step_events.windows(2).any(|w| w[1].0 <= w[0].0) {
            return invalid("step event times must be strictly increasing");
        }
        Ok(())
    }

    pub fn scale_at(&self, t: f64) -> f64 {
        self.step_events.iter().rev().find(|(te, _)| *te <= t).map_or(1.0, |&(_, s)| s)
    }

    fn base(&self, t: f64) -> f64 {
        self.dc_level + self.ac_amplitude * (2.0 * PI * self.ac_frequency * t + self.ac_phase).sin()
    }

    /// Antiderivative of the unscaled waveform.
    fn base_primitive(&self, t: f64) -> f64 {
        let w = 2.0 * PI * self.ac_frequency;
        let ac = if w == 0.0 {
            self.ac_amplitude * self.ac_phase.sin() * t
        } else {
            -self.ac_amplitude / w * (w * t + self.ac_phase).cos()
        };
        self.dc_level * t + ac
    }

    pub fn value(&self, t: f64) -> f64 {
        self.base(t) * self.scale_at(t)
    }

    /// Exact `∫ₐᵇ value(t) dt`, split at step events.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut cuts = vec![a];
        cuts.extend(self.step_events.iter().map(|&(t, _)| t).filter(|&t| t > a && t < b));
        cuts.push(b);
        cuts.windows(2).map(|w| self.scale_at(w[0]) * (self.base_primitive(w[1]) - self.base_primitive(w[0]))).sum()
    }

    /// Whether the waveform can be nonzero on a window that contains no step event.
    pub fn active_from(&self, t: f64) -> bool {
        self.scale_at(t) != 0.0 && (self.dc_level != 0.0 || self.ac_amplitude != 0.0)
    }
}

/// Modal sources keyed by mode label (`alpha`, …) and loop label (`Phi1`, …).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub external: BTreeMap<String, Waveform>,
    pub internal: BTreeMap<String, Waveform>,
    pub loops: BTreeMap<String, Waveform>,
}

impl Schedule {
    pub fn validate(&self, basis: &SpectralBasis, lb: &LoopBasis) -> Result<()> {
        for (name, map) in [("external", &self.external), ("internal", &self.internal)] {
            for (label, w) in map {
                if basis.label_index(label).is_none() {
                    return invalid(format!("{name} source for unknown mode `{label}`"));
                }
                w.validate()?;
            }
        }
        for (label, w) in &self.loops {
            if !lb.labels().contains(label) {
                return invalid(format!("source for unknown loop `{label}`"));
            }
            w.validate()?;
        }
        Ok(())
    }

    /// Net modal voltage `u_ext − u_int` of `label` at `t`.
    pub fn mode_voltage(&self, label: &str, t: f64) -> f64 {
        self.external.get(label).map_or(0.0, |w| w.value(t)) - self.internal.get(label).map_or(0.0, |w| w.value(t))
    }

    pub fn mode_integral(&self, label: &str, a: f64, b: f64) -> f64 {
        self.external.get(label).map_or(0.0, |w| w.integral(a, b))
            - self.internal.get(label).map_or(0.0, |w| w.integral(a, b))
    }

    pub fn loop_voltage(&self, label: &str, t: f64) -> f64 {
        self.loops.get(label).map_or(0.0, |w| w.value(t))
    }

    pub fn loop_integral(&self, label: &str, a: f64, b: f64) -> f64 {
        self.loops.get(label).map_or(0.0, |w| w.integral(a, b))
    }

    /// True when channel `label` (mode or loop) has a source that can be nonzero from `t` on.
    pub fn drives(&self, label: &str, t: f64) -> bool {
        [&self.external, &self.internal, &self.loops].iter().any(|m| m.get(label).is_some_and(|w| w.active_from(t)))
    }

    fn waveforms(&self) -> impl Iterator<Item = &Waveform> {
        self.external.values().chain(self.internal.values()).chain(self.loops.values())
    }

    /// Sorted, deduplicated step times of every source.
    pub fn event_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self.waveforms().flat_map(|w| w.step_events.iter().map(|&(t, _)| t)).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    pub fn max_frequency(&self) -> f64 {
        self.waveforms().filter(|w| w.ac_amplitude != 0.0).map(|w| w.ac_frequency).fold(0.0, f64::max)
    }

    /// The same schedule restricted to the sources of one channel.
    pub fn only(&self, label: &str) -> Schedule {
        let pick = |m: &BTreeMap<String, Waveform>| m.iter().filter(|(k, _)| *k == label).map(|(k, v)| (k.clone(), v.clone())).collect();
        Schedule { external: pick(&self.external), internal: pick(&self.internal), loops: pick(&self.loops) }
    }

    /// Labels of every channel that has at least one source entry.
    pub fn channels(&self) -> Vec<String> {
        let mut out: Vec<String> =
            self.external.keys().chain(self.internal.keys()).chain(self.loops.keys()).cloned().collect();
        out.sort();
        out.dedup();
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Classical fourth-order Runge–Kutta; for these source-driven integrators
    /// it reduces to Simpson quadrature of the source over each step.
    Rk4,
    /// Closed-form integral of the source over each step.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// One scalar equation per mode and loop.
    Modal,
    /// Arm equations on the graph, projected back onto the modes.
    Nodal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ArmModel,
    pub g_a: f64,
    pub l_a: f64,
    pub dt: f64,
    pub duration: f64,
    pub integrator: Integrator,
    pub domain: Domain,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            model: ArmModel::Inductive,
            g_a: 100.0,
            l_a: 5e-3,
            dt: 1e-5,
            duration: 0.16,
            integrator: Integrator::Rk4,
            domain: Domain::Modal,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid("dt must be positive");
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return invalid("duration must be at least one step");
        }
        match self.model {
            ArmModel::Resistive if !(self.g_a > 0.0 && self.g_a.is_finite()) => invalid("G_a must be positive"),
            ArmModel::Inductive if !(self.l_a > 0.0 && self.l_a.is_finite()) => invalid("L_a must be positive"),
            _ => Ok(()),
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// Sampled currents; each inner vector is one channel over the shared time axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace<F> {
    pub times: Vec<F>,
    pub mode_labels: Vec<String>,
    pub mode_currents: Vec<Vec<F>>,
    pub node_currents: Vec<Vec<F>>,
    pub edge_currents: Vec<Vec<F>>,
    pub loop_labels: Vec<String>,
    pub loop_currents: Vec<Vec<F>>,
    pub warnings: Vec<String>,
}

impl<F: Float + Scalar> SimTrace<F> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Series of a mode or loop channel by label.
    pub fn channel(&self, label: &str) -> Option<&[F]> {
        if let Some(k) = self.mode_labels.iter().position(|l| l == label) {
            return Some(&self.mode_currents[k]);
        }
        self.loop_labels.iter().position(|l| l == label).map(|k| self.loop_currents[k].as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for l in &self.mode_labels {
            let _ = write!(out, ",mode:{l}");
        }
        for i in 0..self.node_currents.len() {
            let _ = write!(out, ",node:{i}");
        }
        for j in 0..self.edge_currents.len() {
            let _ = write!(out, ",edge:{j}");
        }
        for l in &self.loop_labels {
            let _ = write!(out, ",loop:{l}");
        }
        out.push('\n');
        for s in 0..self.len() {
            out.push_str(&format_float(Scalar::to_f64(&self.times[s])));
            for series in self.mode_currents.iter().chain(&self.node_currents).chain(&self.edge_currents).chain(&self.loop_currents) {
                out.push(',');
                out.push_str(&format_float(Scalar::to_f64(&series[s])));
            }
            out.push('\n');
        }
        out
    }
}

fn cast<F: Float>(x: f64) -> F {
    <F as NumCast>::from(x).expect("finite f64 converts")
}

fn to_float<F: Float + Scalar>(m: &Matrix<Rational>) -> Matrix<F> {
    m.map(F::from_rational)
}

struct Operators<F> {
    p: Matrix<F>,
    p_inv: Matrix<F>,
    incidence: Matrix<F>,
    edge_current: Matrix<F>,
    loops: Vec<Vec<F>>,
    loop_norms: Vec<F>,
    eigenvalues: Vec<F>,
}

impl<F: Float + Scalar> Operators<F> {
    fn new(t: &Topology, basis: &SpectralBasis, lb: &LoopBasis) -> Result<Self> {
        let unit = modal_ohm(basis, &Rational::from_integer(1.into()))?;
        Ok(Self {
            p: to_float(basis.p()),
            p_inv: to_float(basis.p_inv()),
            incidence: to_float(&t.incidence()),
            edge_current: to_float(&edge_current_map(t, basis, &unit)?),
            loops: lb.columns().iter().map(|c| c.iter().map(F::from_rational).collect()).collect(),
            loop_norms: lb.squared_norms().iter().map(F::from_rational).collect(),
            eigenvalues: basis.eigenvalues().iter().map(F::from_rational).collect(),
        })
    }

    fn loop_synthesis(&self, i_loop: &[F], m: usize) -> Vec<F> {
        let mut out = vec![F::zero(); m];
        for (c, &x) in self.loops.iter().zip(i_loop) {
            for (o, &ce) in out.iter_mut().zip(c) {
                *o = *o + ce * x;
            }
        }
        out
    }
}

/// Runs the configured simulation.
pub fn simulate<F: Float + Scalar>(
    t: &Topology,
    basis: &SpectralBasis,
    lb: &LoopBasis,
    schedule: &Schedule,
    config: &SimConfig,
) -> Result<SimTrace<F>> {
    config.validate()?;
    schedule.validate(basis, lb)?;
    if lb.n_edges() != t.n_edges() || basis.len() != t.n_vertices() {
        return invalid("basis sizes do not match the topology");
    }
    let ops = Operators::<F>::new(t, basis, lb)?;
    let mut warnings = Vec::new();
    let f_max = schedule.max_frequency();
    if f_max > 0.0 && config.dt >= 1.0 / (4.0 * f_max) {
        warnings.push(format!("dt = {} s is not below a quarter period of {} Hz", config.dt, f_max));
    }
    let steps = config.steps();
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * config.dt).collect();
    let mode_labels = basis.labels().to_vec();
    let loop_labels = lb.labels().to_vec();
    let (modes, loops, arm_states) = match config.domain {
        Domain::Modal => {
            let (modes, loops) = modal_run(&ops, &mode_labels, &loop_labels, schedule, config, &times);
            (modes, loops, None)
        }
        Domain::Nodal => {
            let (modes, loops, edges) = nodal_run(&ops, &mode_labels, &loop_labels, schedule, config, &times);
            (modes, loops, Some(edges))
        }
    };
    let (n, m) = (t.n_vertices(), t.n_edges());
    let bt = ops.incidence.transpose();
    let mut trace = SimTrace {
        times: times.iter().map(|&x| cast(x)).collect(),
        mode_labels,
        mode_currents: vec![Vec::with_capacity(times.len()); n],
        node_currents: vec![Vec::with_capacity(times.len()); n],
        edge_currents: vec![Vec::with_capacity(times.len()); m],
        loop_labels,
        loop_currents: vec![Vec::with_capacity(times.len()); lb.rank()],
        warnings,
    };
    for s in 0..times.len() {
        let i_dec = &modes[s];
        let i_loop = &loops[s];
        // nodal runs keep their own arm currents; modal runs synthesise them
        let (nodes, edges) = match &arm_states {
            Some(states) => (bt.mul_vec(&states[s])?, states[s].clone()),
            None => {
                let circ = ops.loop_synthesis(i_loop, m);
                let edges = ops.edge_current.mul_vec(i_dec)?.into_iter().zip(circ).map(|(a, b)| a + b).collect();
                (ops.p.mul_vec(i_dec)?, edges)
            }
        };
        for (k, x) in i_dec.iter().enumerate() {
            trace.mode_currents[k].push(*x);
        }
        for (k, x) in nodes.into_iter().enumerate() {
            trace.node_currents[k].push(x);
        }
        for (k, x) in edges.into_iter().enumerate() {
            trace.edge_currents[k].push(x);
        }
        for (k, x) in i_loop.iter().enumerate() {
            trace.loop_currents[k].push(*x);
        }
    }
    Ok(trace)
}

/// Resistive arms: the algebraic modal relation at every sample.
pub fn solve_resistive<F: Float + Scalar>(
    t: &Topology,
    basis: &SpectralBasis,
    lb: &LoopBasis,
    schedule: &Schedule,
    config: &SimConfig,
) -> Result<SimTrace<F>> {
    simulate(t, basis, lb, schedule, &SimConfig { model: ArmModel::Resistive, ..config.clone() })
}

/// Inductive arms: one integrator per mode and loop.
pub fn solve_inductive<F: Float + Scalar>(
    t: &Topology,
    basis: &SpectralBasis,
    lb: &LoopBasis,
    schedule: &Schedule,
    config: &SimConfig,
) -> Result<SimTrace<F>> {
    simulate(t, basis, lb, schedule, &SimConfig { model: ArmModel::Inductive, ..config.clone() })
}

/// Source integral over one step, by Simpson's rule (what RK4 computes for a
/// state-independent right-hand side) or exactly.
fn step_integral(integrator: Integrator, a: f64, b: f64, value: impl Fn(f64) -> f64, exact: impl Fn(f64, f64) -> f64) -> f64 {
    match integrator {
        Integrator::Rk4 => (b - a) / 6.0 * (value(a) + 4.0 * value(0.5 * (a + b)) + value(b)),
        Integrator::Exact => exact(a, b),
    }
}

type Series<F> = Vec<Vec<F>>;

fn modal_run<F: Float + Scalar>(
    ops: &Operators<F>,
    mode_labels: &[String],
    loop_labels: &[String],
    schedule: &Schedule,
    config: &SimConfig,
    times: &[f64],
) -> (Series<F>, Series<F>) {
    let g_a: F = cast(config.g_a);
    let inv_l: F = cast(1.0 / config.l_a);
    let mut modes = Vec::with_capacity(times.len());
    let mut loops = Vec::with_capacity(times.len());
    match config.model {
        ArmModel::Resistive => {
            for &t in times {
                let i_dec: Vec<F> = mode_labels
                    .iter()
                    .zip(&ops.eigenvalues)
                    .map(|(l, &lam)| g_a * lam * cast(schedule.mode_voltage(l, t)))
                    .collect();
                let i_loop: Vec<F> = loop_labels.iter().map(|l| -(g_a * cast(schedule.loop_voltage(l, t)))).collect();
                modes.push(i_dec);
                loops.push(i_loop);
            }
        }
        ArmModel::Inductive => {
            let mut i_dec = vec![F::zero(); mode_labels.len()];
            let mut i_loop = vec![F::zero(); loop_labels.len()];
            modes.push(i_dec.clone());
            loops.push(i_loop.clone());
            for w in times.windows(2) {
                let (a, b) = (w[0], w[1]);
                for ((x, l), &lam) in i_dec.iter_mut().zip(mode_labels).zip(&ops.eigenvalues) {
                    let du = step_integral(config.integrator, a, b, |s| schedule.mode_voltage(l, s), |p, q| schedule.mode_integral(l, p, q));
                    *x = *x + lam * inv_l * cast(du);
                }
                for (x, l) in i_loop.iter_mut().zip(loop_labels) {
                    let du = step_integral(config.integrator, a, b, |s| schedule.loop_voltage(l, s), |p, q| schedule.loop_integral(l, p, q));
                    *x = *x - inv_l * cast(du);
                }
                modes.push(i_dec.clone());
                loops.push(i_loop.clone());
            }
        }
    }
    (modes, loops)
}

/// Arm currents integrated directly from the arm voltages
/// `u_e = B·P·u_dec − B_loop·u_loop`.
fn nodal_edge_states<F: Float + Scalar>(
    ops: &Operators<F>,
    mode_labels: &[String],
    loop_labels: &[String],
    schedule: &Schedule,
    config: &SimConfig,
    times: &[f64],
) -> Vec<Vec<F>> {
    let m = ops.incidence.rows();
    let bp = ops.incidence.mul(&ops.p).expect("conformable");
    let arm_voltage = |u_dec: Vec<F>, u_loop: Vec<F>| -> Vec<F> {
        let nodal = bp.mul_vec(&u_dec).expect("conformable");
        let circ = ops.loop_synthesis(&u_loop, m);
        nodal.into_iter().zip(circ).map(|(a, b)| a - b).collect()
    };
    let g_a: F = cast(config.g_a);
    let inv_l: F = cast(1.0 / config.l_a);
    let mut out = Vec::with_capacity(times.len());
    match config.model {
        ArmModel::Resistive => {
            for &t in times {
                let u_dec = mode_labels.iter().map(|l| cast(schedule.mode_voltage(l, t))).collect();
                let u_loop = loop_labels.iter().map(|l| cast(schedule.loop_voltage(l, t))).collect();
                out.push(arm_voltage(u_dec, u_loop).into_iter().map(|u| g_a * u).collect());
            }
        }
        ArmModel::Inductive => {
            let mut i_e = vec![F::zero(); m];
            out.push(i_e.clone());
            for w in times.windows(2) {
                let (a, b) = (w[0], w[1]);
                let du_dec = mode_labels
                    .iter()
                    .map(|l| cast(step_integral(config.integrator, a, b, |s| schedule.mode_voltage(l, s), |p, q| schedule.mode_integral(l, p, q))))
                    .collect();
                let du_loop = loop_labels
                    .iter()
                    .map(|l| cast(step_integral(config.integrator, a, b, |s| schedule.loop_voltage(l, s), |p, q| schedule.loop_integral(l, p, q))))
                    .collect();
                for (x, du) in i_e.iter_mut().zip(arm_voltage(du_dec, du_loop)) {
                    *x = *x + inv_l * du;
                }
                out.push(i_e.clone());
            }
        }
    }
    out
}

fn nodal_run<F: Float + Scalar>(
    ops: &Operators<F>,
    mode_labels: &[String],
    loop_labels: &[String],
    schedule: &Schedule,
    config: &SimConfig,
    times: &[f64],
) -> (Series<F>, Series<F>, Series<F>) {
    let bt = ops.incidence.transpose();
    let edges = nodal_edge_states(ops, mode_labels, loop_labels, schedule, config, times);
    let mut modes = Vec::with_capacity(edges.len());
    let mut loops = Vec::with_capacity(edges.len());
    for i_e in &edges {
        let i_v = bt.mul_vec(i_e).expect("conformable");
        modes.push(ops.p_inv.mul_vec(&i_v).expect("conformable"));
        loops.push(
            ops.loops
                .iter()
                .zip(&ops.loop_norms)
                .map(|(c, &nn)| c.iter().zip(i_e).fold(F::zero(), |acc, (&a, &b)| acc + a * b) / nn)
                .collect(),
        );
    }
    (modes, loops, edges)
}

/// Largest relative residuals of `P·i_dec = i_v` and `Bᵀ·i_e = i_v` over the trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Reconstruction {
    pub modes_to_nodes: f64,
    pub kirchhoff: f64,
}

pub fn reconstruction_residuals<F: Float + Scalar>(t: &Topology, basis: &SpectralBasis, trace: &SimTrace<F>) -> Result<Reconstruction> {
    let p: Matrix<F> = to_float(basis.p());
    let bt: Matrix<F> = to_float(&t.incidence().transpose());
    let mut worst = Reconstruction { modes_to_nodes: 0.0, kirchhoff: 0.0 };
    let column = |series: &[Vec<F>], s: usize| -> Vec<F> { series.iter().map(|c| c[s]).collect() };
    for s in 0..trace.len() {
        let i_v = column(&trace.node_currents, s);
        let scale = i_v.iter().fold(1.0f64, |acc, x| acc.max(Scalar::to_f64(&x.abs())));
        let from_modes = p.mul_vec(&column(&trace.mode_currents, s))?;
        let from_edges = bt.mul_vec(&column(&trace.edge_currents, s))?;
        for k in 0..i_v.len() {
            let a = Scalar::to_f64(&(from_modes[k] - i_v[k])).abs() / scale;
            let b = Scalar::to_f64(&(from_edges[k] - i_v[k])).abs() / scale;
            worst.modes_to_nodes = worst.modes_to_nodes.max(a);
            worst.kirchhoff = worst.kirchhoff.max(b);
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeakageEntry {
    pub driven: String,
    pub other: String,
    pub leakage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowReport {
    pub start: f64,
    pub end: f64,
    pub driven: Vec<String>,
    pub idle: Vec<String>,
    /// False when every channel is driven, so no idle channel can witness leakage.
    pub attributable: bool,
    pub entries: Vec<LeakageEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecouplingReport {
    pub windows: Vec<WindowReport>,
    pub max_leakage: f64,
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Splits the trace at every step event and, inside each window, measures how
/// far each idle channel drifts relative to the peak of each driven channel.
/// Zero modes are excluded: they carry no current by construction.
pub fn verify_decoupling<F: Float + Scalar>(trace: &SimTrace<F>, schedule: &Schedule) -> Result<DecouplingReport> {
    if trace.is_empty() {
        return invalid("empty trace");
    }
    let times: Vec<f64> = trace.times.iter().map(Scalar::to_f64).collect();
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let mut cuts = vec![t0];
    cuts.extend(schedule.event_times().into_iter().filter(|&x| x > t0 && x < t1));
    cuts.push(t1);
    let channels: Vec<String> = trace
        .mode_labels
        .iter()
        .filter(|l| !l.starts_with('0'))
        .chain(&trace.loop_labels)
        .cloned()
        .collect();
    let mut windows = Vec::new();
    let mut max_leakage = 0.0f64;
    for (w, bounds) in cuts.windows(2).enumerate() {
        let (a, b) = (bounds[0], bounds[1]);
        let last = w + 2 == cuts.len();
        let idx: Vec<usize> = (0..times.len()).filter(|&s| times[s] >= a && (times[s] < b || (last && times[s] <= b))).collect();
        if idx.is_empty() {
            continue;
        }
        let (driven, idle): (Vec<String>, Vec<String>) = channels.iter().cloned().partition(|c| schedule.drives(c, a));
        let mut entries = Vec::new();
        for d in &driven {
            let ds = trace.channel(d).expect("channel exists");
            let peak = idx.iter().map(|&s| Scalar::to_f64(&ds[s]).abs()).fold(0.0, f64::max);
            for o in &idle {
                let os = trace.channel(o).expect("channel exists");
                let base = Scalar::to_f64(&os[idx[0]]);
                let drift = idx.iter().map(|&s| (Scalar::to_f64(&os[s]) - base).abs()).fold(0.0, f64::max);
                let leakage = ratio_or_zero(drift, peak);
                max_leakage = max_leakage.max(leakage);
                entries.push(LeakageEntry { driven: d.clone(), other: o.clone(), leakage });
            }
        }
        windows.push(WindowReport { start: a, end: b, attributable: !idle.is_empty() && !driven.is_empty(), driven, idle, entries });
    }
    Ok(DecouplingReport { windows, max_leakage })
}

/// Drives each scheduled channel on its own and reports the peak response of
/// every other channel relative to the driven channel's peak.
pub fn isolation_leakage(
    t: &Topology,
    basis: &SpectralBasis,
    lb: &LoopBasis,
    schedule: &Schedule,
    config: &SimConfig,
) -> Result<Vec<LeakageEntry>> {
    let mut out = Vec::new();
    for d in schedule.channels() {
        let trace: SimTrace<f64> = simulate(t, basis, lb, &schedule.only(&d), config)?;
        let peak = trace.channel(&d).expect("validated").iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if peak == 0.0 {
            continue;
        }
        for o in trace.mode_labels.iter().filter(|l| !l.starts_with('0')).chain(&trace.loop_labels) {
            if *o == d {
                continue;
            }
            let resp = trace.channel(o).expect("exists").iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            out.push(LeakageEntry { driven: d.clone(), other: o.clone(), leakage: resp / peak });
        }
    }
    Ok(out)
}

/// The four-mode validation scenario: a DC mode doubling at 0.04 s, an idle
/// mode, and two 50 Hz modes in quadrature stepping at 0.08 s and 0.12 s.
pub fn fig7_schedule() -> Schedule {
    let mut external = BTreeMap::new();
    external.insert("alpha".to_string(), Waveform::dc(1.0).with_step(0.04, 2.0));
    external.insert("beta".to_string(), Waveform::default());
    external.insert("gamma".to_string(), Waveform::ac(1.0, 50.0, 0.0).with_step(0.08, 1.5));
    external.insert("delta".to_string(), Waveform::ac(1.0, 50.0, -PI / 2.0).with_step(0.12, 0.5));
    Schedule { external, ..Schedule::default() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loops::topology_loops;
    use crate::spectral::topology_basis;

    fn two_y() -> (Topology, SpectralBasis, LoopBasis) {
        let t = Topology::new(5, vec![(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)])
            .unwrap()
            .with_partitions(vec![vec![0, 4], vec![1, 2, 3]])
            .unwrap();
        let b = topology_basis(&t).unwrap();
        let lb = topology_loops(&t);
        (t, b, lb)
    }

    fn short(model: ArmModel) -> SimConfig {
        SimConfig { model, duration: 0.02, ..SimConfig::default() }
    }

    #[test]
    fn waveform_integral_matches_quadrature() {
        let w = Waveform::ac(2.0, 50.0, 0.3).with_step(0.011, 0.5);
        let n = 20000;
        let (a, b) = (0.0, 0.02);
        let h = (b - a) / n as f64;
        let mid: f64 = (0..n).map(|k| w.value(a + (k as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!((w.integral(a, b) - mid).abs() < 1e-6);
        assert_eq!(w.scale_at(0.011), 0.5);
        assert_eq!(w.scale_at(0.0109), 1.0);
    }

    #[test]
    fn rejects_bad_waveforms() {
        assert!(Waveform::ac(1.0, -1.0, 0.0).validate().is_err());
        assert!(Waveform::dc(1.0).with_step(0.2, 1.0).with_step(0.1, 1.0).validate().is_err());
    }

    #[test]
    fn zero_sources_zero_trace() {
        let (t, b, lb) = two_y();
        for model in [ArmModel::Resistive, ArmModel::Inductive] {
            let tr: SimTrace<f64> = simulate(&t, &b, &lb, &Schedule::default(), &short(model)).unwrap();
            assert!(tr.mode_currents.iter().chain(&tr.edge_currents).flatten().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn resistive_step_on_one_mode() {
        let (t, b, lb) = two_y();
        let mut s = Schedule::default();
        s.external.insert("alpha".into(), Waveform::dc(0.0).with_step(0.0, 1.0));
        s.external.get_mut("alpha").unwrap().dc_level = 2.0;
        let tr: SimTrace<f64> = solve_resistive(&t, &b, &lb, &s, &short(ArmModel::Resistive)).unwrap();
        let lam = b.eigenvalues()[1].to_f64();
        assert_eq!(tr.channel("alpha").unwrap()[5], 100.0 * lam * 2.0);
        for l in ["0", "beta", "gamma", "delta", "Phi1", "Phi2"] {
            assert!(tr.channel(l).unwrap().iter().all(|&x| x == 0.0), "{l}");
        }
    }

    #[test]
    fn zero_mode_drive_produces_nothing() {
        let (t, b, lb) = two_y();
        let mut s = Schedule::default();
        s.external.insert("0".into(), Waveform::dc(3.0));
        let tr: SimTrace<f64> = solve_resistive(&t, &b, &lb, &s, &short(ArmModel::Resistive)).unwrap();
        assert!(tr.node_currents.iter().chain(&tr.edge_currents).flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn inductive_ramp_is_exact() {
        let (t, b, lb) = two_y();
        let mut s = Schedule::default();
        s.external.insert("beta".into(), Waveform::dc(1.5));
        let cfg = SimConfig { integrator: Integrator::Exact, ..short(ArmModel::Inductive) };
        let tr: SimTrace<f64> = simulate(&t, &b, &lb, &s, &cfg).unwrap();
        let lam = b.eigenvalues()[2].to_f64();
        let (k, time) = (tr.len() - 1, tr.times[tr.len() - 1]);
        let want = lam / cfg.l_a * 1.5 * time;
        assert!((tr.channel("beta").unwrap()[k] - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn inductive_sine_response() {
        let (t, b, lb) = two_y();
        let mut s = Schedule::default();
        s.external.insert("gamma".into(), Waveform::ac(1.0, 50.0, 0.0));
        let cfg = short(ArmModel::Inductive);
        let tr: SimTrace<f64> = simulate(&t, &b, &lb, &s, &cfg).unwrap();
        let lam = b.eigenvalues()[3].to_f64();
        let w = 2.0 * PI * 50.0;
        let amp = lam / cfg.l_a / w;
        // i(t) = amp·(1 − cos ωt) for a sine source starting at zero
        let worst = tr
            .times
            .iter()
            .zip(tr.channel("gamma").unwrap())
            .map(|(&time, &i)| (i - amp * (1.0 - (w * time).cos())).abs())
            .fold(0.0, f64::max);
        assert!(worst / amp < 1e-6, "{worst}");
    }

    #[test]
    fn nodal_domain_agrees_with_modal() {
        let (t, b, lb) = two_y();
        let mut s = fig7_schedule();
        s.loops.insert("Phi2".into(), Waveform::dc(0.25));
        for model in [ArmModel::Resistive, ArmModel::Inductive] {
            let modal: SimTrace<f64> = simulate(&t, &b, &lb, &s, &short(model)).unwrap();
            let nodal: SimTrace<f64> = simulate(&t, &b, &lb, &s, &SimConfig { domain: Domain::Nodal, ..short(model) }).unwrap();
            let scale = modal.edge_currents.iter().flatten().fold(1.0f64, |a, x| a.max(x.abs()));
            for (x, y) in modal.edge_currents.iter().flatten().zip(nodal.edge_currents.iter().flatten()) {
                assert!((x - y).abs() < 1e-12 * scale, "{model:?}");
            }
            for (x, y) in modal.loop_currents.iter().flatten().zip(nodal.loop_currents.iter().flatten()) {
                assert!((x - y).abs() < 1e-12 * scale);
            }
            let r = reconstruction_residuals(&t, &b, &nodal).unwrap();
            assert!(r.kirchhoff < 1e-12 && r.modes_to_nodes < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn loops_leave_nodes_untouched() {
        let (t, b, lb) = two_y();
        let mut s = Schedule::default();
        s.loops.insert("Phi1".into(), Waveform::ac(1.0, 50.0, 0.0));
        let tr: SimTrace<f64> = simulate(&t, &b, &lb, &s, &short(ArmModel::Inductive)).unwrap();
        assert!(tr.node_currents.iter().flatten().all(|&x| x == 0.0));
        assert!(tr.edge_currents.iter().flatten().any(|&x| x != 0.0));
    }

    #[test]
    fn all_driven_is_not_attributable() {
        let (t, b, lb) = two_y();
        let mut s = Schedule::default();
        for l in ["alpha", "beta", "gamma", "delta", "Phi1", "Phi2"] {
            let map = if l.starts_with("Phi") { &mut s.loops } else { &mut s.external };
            map.insert(l.into(), Waveform::dc(1.0));
        }
        let tr: SimTrace<f64> = simulate(&t, &b, &lb, &s, &short(ArmModel::Resistive)).unwrap();
        let rep = verify_decoupling(&tr, &s).unwrap();
        assert!(rep.windows.iter().all(|w| !w.attributable && w.entries.is_empty()));
    }

    #[test]
    fn single_driven_mode_has_zero_leakage() {
        let (t, b, lb) = two_y();
        let mut s = Schedule::default();
        s.external.insert("gamma".into(), Waveform::ac(1.0, 50.0, 0.0));
        let tr: SimTrace<f64> = simulate(&t, &b, &lb, &s, &short(ArmModel::Inductive)).unwrap();
        let rep = verify_decoupling(&tr, &s).unwrap();
        assert_eq!(rep.max_leakage, 0.0);
        assert_eq!(rep.windows[0].idle.len(), 5);
    }

    #[test]
    fn coarse_step_warns() {
        let (t, b, lb) = two_y();
        let cfg = SimConfig { dt: 0.005, ..short(ArmModel::Inductive) };
        let tr: SimTrace<f64> = simulate(&t, &b, &lb, &fig7_schedule(), &cfg).unwrap();
        assert_eq!(tr.warnings.len(), 1);
    }

    #[test]
    fn runs_in_f32() {
        let (t, b, lb) = two_y();
        let tr: SimTrace<f32> = simulate(&t, &b, &lb, &fig7_schedule(), &short(ArmModel::Resistive)).unwrap();
        assert_eq!(tr.channel("beta").unwrap().iter().copied().fold(0.0f32, f32::max), 0.0);
    }

    #[test]
    fn csv_header() {
        let (t, b, lb) = two_y();
        let cfg = SimConfig { duration: 2e-5, ..SimConfig::default() };
        let tr: SimTrace<f64> = simulate(&t, &b, &lb, &fig7_schedule(), &cfg).unwrap();
        let csv = tr.to_csv();
        let header = csv.lines().next().unwrap();
        assert!(header.starts_with("t,mode:0,mode:alpha,"));
        assert!(header.ends_with("edge:5,loop:Phi1,loop:Phi2"));
        assert_eq!(csv.lines().count(), 4);
    }
}
