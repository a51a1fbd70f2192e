//! Constant-precision threshold networks (feed-forward, recurrent, and
//! lag-window attention) with exact evaluation and a compiler to
//! constant-depth circuits.
//!
//! Every weight and threshold is an integer numerator over a shared
//! denominator `q0`, so a neuron fires iff
//! `Σ pᵢ·xᵢ (+ recurrent terms) ≥ p_θ`, compared as integers.

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{BuildLimits, Circuit, CircuitBuilder, GateId};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Nn,
    Rnn,
    Ltst,
}

fn one() -> usize {
    1
}

fn is_zero(x: &usize) -> bool {
    *x == 0
}

/// Network description; the JSON model file mirrors these fields.
///
/// `widths[0]` is the input width and `widths[l]` the width of layer `l`.
/// `weights[l][j][i]` feeds input `i` of layer `l` into neuron `j`.
/// `recurrent[l][j]` holds, for RNNs, one weight per neuron of the same
/// layer at the previous step; for LTST models, one weight per lag `1..=K`
/// on the neuron's own history.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdNetwork {
    pub kind: ModelKind,
    #[serde(rename = "L")]
    pub layers: usize,
    pub widths: Vec<usize>,
    pub q0: u32,
    #[serde(rename = "P")]
    pub p_bound: i64,
    pub weights: Vec<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub recurrent: Vec<Vec<Vec<i64>>>,
    pub thresholds: Vec<Vec<i64>>,
    #[serde(rename = "T", default = "one")]
    pub steps: usize,
    #[serde(rename = "K", default, skip_serializing_if = "is_zero")]
    pub window: usize,
}

fn shape_err(what: impl Into<String>) -> Error {
    Error::InvalidModel(what.into())
}

impl ThresholdNetwork {
    pub fn from_json(text: &str) -> Result<Self> {
        let net: ThresholdNetwork =
            serde_json::from_str(text).map_err(|e| Error::InvalidModel(format!("bad model JSON: {e}")))?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        self.widths[self.layers]
    }

    /// Time steps the network is unrolled over (1 for feed-forward nets).
    pub fn effective_steps(&self) -> usize {
        match self.kind {
            ModelKind::Nn => 1,
            _ => self.steps,
        }
    }

    /// Total input bits of the compiled circuit: one input vector per step.
    pub fn flat_input_len(&self) -> usize {
        self.effective_steps() * self.input_width()
    }

    fn recurrent_len(&self, layer: usize) -> usize {
        match self.kind {
            ModelKind::Nn => 0,
            ModelKind::Rnn => self.widths[layer + 1],
            ModelKind::Ltst => self.window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(shape_err("L must be at least 1"));
        }
        if self.widths.len() != self.layers + 1 {
            return Err(shape_err(format!(
                "widths needs L + 1 = {} entries, got {}",
                self.layers + 1,
                self.widths.len()
            )));
        }
        if self.widths.contains(&0) {
            return Err(shape_err("every width must be positive"));
        }
        if self.q0 == 0 {
            return Err(shape_err("q0 must be at least 1"));
        }
        if self.p_bound < 0 {
            return Err(shape_err("P must be non-negative"));
        }
        match self.kind {
            ModelKind::Nn => {
                if self.steps != 1 || !self.recurrent.is_empty() || self.window != 0 {
                    return Err(shape_err("feed-forward nets take T = 1, K = 0 and no recurrent weights"));
                }
            }
            ModelKind::Rnn => {
                if self.window > 1 {
                    return Err(shape_err("RNN recurrence uses exactly one lag"));
                }
            }
            ModelKind::Ltst => {
                if self.window == 0 {
                    return Err(shape_err("LTST models need K ≥ 1"));
                }
            }
        }
        if self.steps == 0 {
            return Err(shape_err("T must be at least 1"));
        }
        if self.weights.len() != self.layers || self.thresholds.len() != self.layers {
            return Err(shape_err("weights and thresholds need one entry per layer"));
        }
        if self.kind != ModelKind::Nn && self.recurrent.len() != self.layers {
            return Err(shape_err("recurrent weights need one entry per layer"));
        }
        for l in 0..self.layers {
            let (fan_in, width) = (self.widths[l], self.widths[l + 1]);
            if self.weights[l].len() != width || self.weights[l].iter().any(|row| row.len() != fan_in) {
                return Err(shape_err(format!("layer {} weights must be {width}×{fan_in}", l + 1)));
            }
            if self.thresholds[l].len() != width {
                return Err(shape_err(format!("layer {} needs {width} thresholds", l + 1)));
            }
            if self.kind != ModelKind::Nn {
                let r = self.recurrent_len(l);
                if self.recurrent[l].len() != width || self.recurrent[l].iter().any(|row| row.len() != r) {
                    return Err(shape_err(format!("layer {} recurrent weights must be {width}×{r}", l + 1)));
                }
            }
        }
        let numerators =
            self.weights.iter().chain(&self.recurrent).flatten().flatten().chain(self.thresholds.iter().flatten());
        if let Some(p) = numerators.into_iter().find(|p| p.abs() > self.p_bound) {
            return Err(shape_err(format!("numerator {p} is outside [-P, P] with P = {}", self.p_bound)));
        }
        Ok(())
    }
}

/// Input bits: one vector for feed-forward nets, one per step otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelInput {
    Static(Vec<bool>),
    Sequence(Vec<Vec<bool>>),
}

impl ModelInput {
    /// Splits a flat (time-major) bit vector according to the network shape.
    pub fn from_flat(net: &ThresholdNetwork, bits: &[bool]) -> Result<Self> {
        if bits.len() != net.flat_input_len() {
            return Err(Error::ArityMismatch { expected: net.flat_input_len(), actual: bits.len() });
        }
        Ok(match net.kind {
            ModelKind::Nn => ModelInput::Static(bits.to_vec()),
            _ => ModelInput::Sequence(bits.chunks(net.input_width()).map(<[bool]>::to_vec).collect()),
        })
    }

    pub fn flatten(&self) -> Vec<bool> {
        match self {
            ModelInput::Static(u) => u.clone(),
            ModelInput::Sequence(seq) => seq.concat(),
        }
    }
}

/// Exact evaluation. Hidden states before the first step are zero; the
/// result is the last layer at the last step.
pub fn eval_model(net: &ThresholdNetwork, input: &ModelInput) -> Result<Vec<bool>> {
    net.validate()?;
    let steps: Vec<&[bool]> = match (net.kind, input) {
        (ModelKind::Nn, ModelInput::Static(u)) => vec![u.as_slice()],
        (ModelKind::Rnn | ModelKind::Ltst, ModelInput::Sequence(seq)) => {
            if seq.len() != net.steps {
                return Err(Error::ArityMismatch { expected: net.steps, actual: seq.len() });
            }
            seq.iter().map(Vec::as_slice).collect()
        }
        _ => return Err(Error::InvalidModel("input kind does not match the network kind".into())),
    };
    if let Some(bad) = steps.iter().find(|u| u.len() != net.input_width()) {
        return Err(Error::ArityMismatch { expected: net.input_width(), actual: bad.len() });
    }

    // history[t][l][j]
    let mut history: Vec<Vec<Vec<bool>>> = Vec::with_capacity(steps.len());
    for (t, u) in steps.iter().enumerate() {
        let mut layers: Vec<Vec<bool>> = Vec::with_capacity(net.layers);
        for l in 0..net.layers {
            let x: &[bool] = if l == 0 { u } else { &layers[l - 1] };
            let mut out = Vec::with_capacity(net.widths[l + 1]);
            for j in 0..net.widths[l + 1] {
                let mut acc: i64 = net.weights[l][j].iter().zip(x).filter(|(_, &b)| b).map(|(&w, _)| w).sum();
                match net.kind {
                    ModelKind::Nn => {}
                    ModelKind::Rnn => {
                        if t > 0 {
                            let prev = &history[t - 1][l];
                            acc +=
                                net.recurrent[l][j].iter().zip(prev).filter(|(_, &h)| h).map(|(&v, _)| v).sum::<i64>();
                        }
                    }
                    ModelKind::Ltst => {
                        for lag in 1..=net.window {
                            if t >= lag && history[t - lag][l][j] {
                                acc += net.recurrent[l][j][lag - 1];
                            }
                        }
                    }
                }
                out.push(acc >= net.thresholds[l][j]);
            }
            layers.push(out);
        }
        history.push(layers);
    }
    Ok(history.pop().and_then(|mut layers| layers.pop()).unwrap_or_default())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompileOptions {
    pub limits: BuildLimits,
}

fn neuron_name(l: usize, j: usize, t: Option<usize>) -> String {
    match t {
        Some(t) => format!("neuron {j} of layer {} at step {}", l + 1, t + 1),
        None => format!("neuron {j} of layer {}", l + 1),
    }
}

/// Fires iff the weighted count of true sources reaches `tau`: OR over the
/// minimal source sets whose weights sum to at least `tau`. With unit
/// weights these are exactly the size-`tau` subsets, so the neuron lowers to
/// the plain threshold detector; a weight p behaves like p copies of its
/// source with identical copies merged.
fn emit_weighted_threshold(b: &mut CircuitBuilder, sources: &[(GateId, i64)], tau: i64) -> Result<GateId> {
    if tau <= 0 {
        return b.constant(true);
    }
    let mut merged: BTreeMap<GateId, i64> = BTreeMap::new();
    for &(g, w) in sources.iter().filter(|(_, w)| *w > 0) {
        *merged.entry(g).or_default() += w;
    }
    let merged: Vec<(GateId, i64)> = merged.into_iter().collect();
    if merged.iter().map(|(_, w)| w).sum::<i64>() < tau {
        return b.constant(false);
    }
    let mut terms = Vec::new();
    for size in 1..=(tau as usize).min(merged.len()) {
        for combo in merged.iter().combinations(size) {
            let total: i64 = combo.iter().map(|(_, w)| w).sum();
            let lightest = combo.iter().map(|(_, w)| *w).min().unwrap_or(0);
            if total >= tau && total - lightest < tau {
                let gates: Vec<GateId> = combo.iter().map(|(g, _)| *g).collect();
                terms.push(b.and(&gates)?);
            }
        }
    }
    b.or(&terms)
}

pub fn compile_to_ac0(net: &ThresholdNetwork) -> Result<Circuit> {
    compile_to_ac0_with(net, &CompileOptions::default())
}

/// Lowers every neuron to a depth-2 threshold subcircuit, composing layers
/// and unrolling recurrent models over their steps. Circuit inputs are the
/// per-step input vectors in time order.
///
/// Only non-negative numerators are supported, and each positive threshold
/// numerator must be within `limits.max_threshold`.
pub fn compile_to_ac0_with(net: &ThresholdNetwork, opts: &CompileOptions) -> Result<Circuit> {
    net.validate()?;
    for l in 0..net.layers {
        for j in 0..net.widths[l + 1] {
            let negative = net.weights[l][j].iter().any(|&w| w < 0)
                || net.recurrent.get(l).is_some_and(|r| r[j].iter().any(|&v| v < 0));
            if negative {
                return Err(Error::UnsupportedModel(format!(
                    "{} has a negative weight; only non-negative weights compile to constant depth",
                    neuron_name(l, j, None)
                )));
            }
            let tau = net.thresholds[l][j];
            if tau > i64::from(opts.limits.max_threshold) {
                return Err(Error::ThresholdCap {
                    neuron: neuron_name(l, j, None),
                    threshold: tau,
                    cap: opts.limits.max_threshold,
                });
            }
        }
    }

    let steps = net.effective_steps();
    let mut b = CircuitBuilder::with_budget(opts.limits.gate_budget);
    let inputs: Vec<Vec<GateId>> = (0..steps).map(|_| b.inputs(net.input_width())).collect::<Result<_>>()?;
    // state[t][l][j]
    let mut state: Vec<Vec<Vec<GateId>>> = Vec::with_capacity(steps);
    for t in 0..steps {
        let mut layers: Vec<Vec<GateId>> = Vec::with_capacity(net.layers);
        for l in 0..net.layers {
            let x = if l == 0 { inputs[t].clone() } else { layers[l - 1].clone() };
            let mut out = Vec::with_capacity(net.widths[l + 1]);
            for j in 0..net.widths[l + 1] {
                let mut sources: Vec<(GateId, i64)> = x.iter().zip(&net.weights[l][j]).map(|(&g, &w)| (g, w)).collect();
                match net.kind {
                    ModelKind::Nn => {}
                    ModelKind::Rnn => {
                        for (k, &v) in net.recurrent[l][j].iter().enumerate() {
                            let src = if t > 0 { state[t - 1][l][k] } else { b.constant(false)? };
                            sources.push((src, v));
                        }
                    }
                    ModelKind::Ltst => {
                        for lag in 1..=net.window {
                            let src = if t >= lag { state[t - lag][l][j] } else { b.constant(false)? };
                            sources.push((src, net.recurrent[l][j][lag - 1]));
                        }
                    }
                }
                out.push(emit_weighted_threshold(&mut b, &sources, net.thresholds[l][j])?);
            }
            layers.push(out);
        }
        state.push(layers);
    }
    for &g in &state[steps - 1][net.layers - 1] {
        b.output(g);
    }
    Ok(b.finish())
}

/// Depth and size of one member of a size-parameterized family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationRow {
    pub n: usize,
    pub depth: usize,
    pub size: usize,
    pub size_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    pub rows: Vec<CertificationRow>,
    pub depth_constant: bool,
    /// Exponent of the polynomial size bound (the largest threshold numerator).
    pub exponent: u32,
    /// Constant fitted at the smallest n.
    pub constant: f64,
    pub violations: Vec<String>,
}

impl CertificationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// n·(n−1)···(n−e+1), which never exceeds n^e.
fn falling_power(n: usize, e: u32) -> f64 {
    (0..e as usize).map(|i| n.saturating_sub(i) as f64).product()
}

/// Compiles `family(n)` for every n in `sweep` and checks that depth is the
/// same everywhere and that size stays within C·n^(e) (falling power, so
/// also within C·n^e), with C fitted at the smallest n and e the largest
/// threshold numerator in the family. Problems are reported, not thrown.
pub fn certify_compilation<F>(family: F, sweep: &[usize], opts: &CompileOptions) -> CertificationReport
where
    F: Fn(usize) -> Result<ThresholdNetwork>,
{
    let mut sweep = sweep.to_vec();
    sweep.sort_unstable();
    sweep.dedup();
    let mut violations = Vec::new();
    let mut compiled = Vec::new();
    let mut exponent = 1u32;
    for &n in &sweep {
        let net = match family(n) {
            Ok(net) => net,
            Err(e) => {
                violations.push(format!("n = {n}: {e}"));
                continue;
            }
        };
        let tau_max = net.thresholds.iter().flatten().copied().max().unwrap_or(1).max(1);
        exponent = exponent.max(tau_max as u32);
        match compile_to_ac0_with(&net, opts) {
            Ok(c) => compiled.push((n, c.metrics())),
            Err(e) => violations.push(format!("n = {n}: {e}")),
        }
    }

    let depth_constant = compiled.windows(2).all(|w| w[0].1.depth == w[1].1.depth);
    if !depth_constant {
        let depths: Vec<String> = compiled.iter().map(|(n, m)| format!("n={n}:{}", m.depth)).collect();
        violations.push(format!("depth varies across the sweep: {}", depths.join(", ")));
    }
    let basis = |n: usize| {
        let f = falling_power(n, exponent);
        if f > 0.0 {
            f
        } else {
            (n as f64).powi(exponent as i32).max(1.0)
        }
    };
    let constant = compiled.first().map_or(0.0, |(n, m)| m.size as f64 / basis(*n));
    let mut rows = Vec::with_capacity(compiled.len());
    for (n, m) in compiled {
        let size_bound = constant * basis(n);
        if m.size as f64 > size_bound + 1e-9 {
            violations.push(format!("n = {n}: size {} exceeds {constant:.4}·n^{exponent} = {size_bound:.1}", m.size));
        }
        rows.push(CertificationRow { n, depth: m.depth, size: m.size, size_bound });
    }
    CertificationReport { rows, depth_constant, exponent, constant, violations }
}

/// One neuron over `n` unit-weight inputs with threshold numerator `tau`.
pub fn single_neuron_family(n: usize, tau: i64) -> Result<ThresholdNetwork> {
    let net = ThresholdNetwork {
        kind: ModelKind::Nn,
        layers: 1,
        widths: vec![n, 1],
        q0: 1,
        p_bound: tau.max(1),
        weights: vec![vec![vec![1; n]]],
        recurrent: Vec::new(),
        thresholds: vec![vec![tau]],
        steps: 1,
        window: 0,
    };
    net.validate()?;
    Ok(net)
}

/// Bounds for [`random_network`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetworkShape {
    pub max_layers: usize,
    pub max_width: usize,
    pub max_steps: usize,
    pub max_window: usize,
    /// Numerators are drawn from `0..=p_bound`; thresholds from `-1..=p_bound`.
    pub p_bound: i64,
}

impl Default for NetworkShape {
    fn default() -> Self {
        NetworkShape { max_layers: 3, max_width: 6, max_steps: 3, max_window: 2, p_bound: 3 }
    }
}

/// A random network that the compiler accepts under the default limits when
/// `p_bound` is within the threshold cap: non-negative weights only.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, kind: ModelKind, shape: &NetworkShape) -> ThresholdNetwork {
    let layers = rng.gen_range(1..=shape.max_layers.max(1));
    let widths: Vec<usize> = (0..=layers).map(|_| rng.gen_range(1..=shape.max_width.max(1))).collect();
    let (steps, window) = match kind {
        ModelKind::Nn => (1, 0),
        ModelKind::Rnn => (rng.gen_range(1..=shape.max_steps.max(1)), 1),
        ModelKind::Ltst => (rng.gen_range(1..=shape.max_steps.max(1)), rng.gen_range(1..=shape.max_window.max(1))),
    };
    let p = shape.p_bound.max(0);
    let mut matrix = |rows: usize, cols: usize| -> Vec<Vec<i64>> {
        (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(0..=p)).collect()).collect()
    };
    let weights: Vec<_> = (0..layers).map(|l| matrix(widths[l + 1], widths[l])).collect();
    let recurrent: Vec<_> = match kind {
        ModelKind::Nn => Vec::new(),
        ModelKind::Rnn => (0..layers).map(|l| matrix(widths[l + 1], widths[l + 1])).collect(),
        ModelKind::Ltst => (0..layers).map(|l| matrix(widths[l + 1], window)).collect(),
    };
    let thresholds = (0..layers).map(|l| (0..widths[l + 1]).map(|_| rng.gen_range(-1..=p)).collect()).collect();
    ThresholdNetwork {
        kind,
        layers,
        widths,
        q0: rng.gen_range(1..=4),
        p_bound: p,
        weights,
        recurrent,
        thresholds,
        steps,
        window,
    }
}

/// Every layer `width` wide (a single output neuron), every weight 1 and
/// every threshold `tau`. Its compiled depth depends only on kind, layers
/// and steps as long as `width ≥ tau`.
pub fn uniform_network(
    kind: ModelKind,
    layers: usize,
    width: usize,
    steps: usize,
    window: usize,
    tau: i64,
) -> Result<ThresholdNetwork> {
    let mut widths = vec![width; layers];
    widths.push(1);
    let recurrent_len = |l: usize| match kind {
        ModelKind::Nn => 0,
        ModelKind::Rnn => widths[l + 1],
        ModelKind::Ltst => window,
    };
    let net = ThresholdNetwork {
        kind,
        layers,
        weights: (0..layers).map(|l| vec![vec![1; widths[l]]; widths[l + 1]]).collect(),
        recurrent: match kind {
            ModelKind::Nn => Vec::new(),
            _ => (0..layers).map(|l| vec![vec![1; recurrent_len(l)]; widths[l + 1]]).collect(),
        },
        thresholds: (0..layers).map(|l| vec![tau; widths[l + 1]]).collect(),
        q0: 1,
        p_bound: tau.max(1),
        steps: if kind == ModelKind::Nn { 1 } else { steps },
        window: match kind {
            ModelKind::Nn => 0,
            ModelKind::Rnn => 1,
            ModelKind::Ltst => window,
        },
        widths,
    };
    net.validate()?;
    Ok(net)
}
