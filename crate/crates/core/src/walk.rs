//! The self-balancing walk.
//!
//! Given `v_1, …, v_t` with `‖v_i‖₂ ≤ 1` arriving online, the walk keeps the
//! partial sum `w_{i-1}` and picks `ε_i = +1` with probability
//! `1/2 − ⟨w_{i-1}, v_i⟩ / (2c)`. It fails if `|⟨w_{i-1}, v_i⟩| > c` or (in
//! online mode) `‖w_{i-1}‖∞ > c`, and otherwise moves to `w_i = w_{i-1} + ε_i v_i`.
//! With `c = 30 ln(nt/δ)` every partial sum stays `O(log(nt/δ))` in sup-norm
//! with probability `1 − δ` against an oblivious adversary.

use rand::Rng;

use crate::covariance::CovarianceTracker;
use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, WalkRng};
use crate::vector::{InputVector, Sign};

/// The spread constant `L = 2π`.
pub const SPREAD_CONSTANT: f64 = 2.0 * std::f64::consts::PI;

/// Leading constant of the bias scale `c = 30 ln(nt/δ)`.
pub const BIAS_FACTOR: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Check `|⟨w,v⟩| ≤ c` and `‖w‖∞ ≤ c` before every step.
    #[default]
    Online,
    /// Check only `|⟨w,v⟩| ≤ c` per step; the sup-norm is audited at the end.
    KomlosFinalCheck,
}

/// `c = 30 ln(nt/δ)`, rejected when it falls below 1.
pub fn compute_c(n: usize, t: usize, delta: f64) -> Result<f64> {
    compute_c_nominal(n as f64, t, delta)
}

/// As [`compute_c`] for a coordinate count that may not fit a `usize`
/// (dyadic box spaces are indexed lazily).
pub fn compute_c_nominal(n: f64, t: usize, delta: f64) -> Result<f64> {
    if !(n >= 1.0) || t == 0 {
        return Err(Error::config(format!("n and t must be positive (n = {n}, t = {t})")));
    }
    check_delta(delta)?;
    let c = BIAS_FACTOR * (n.ln() + (t as f64).ln() - delta.ln());
    if c < 1.0 {
        return Err(Error::config(format!(
            "c = 30 ln(nt/delta) = {c} < 1; need n*t/delta > e^(1/30)"
        )));
    }
    Ok(c)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config(format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub n: usize,
    pub t: usize,
    pub delta: f64,
    pub c: f64,
    pub spread: f64,
    pub mode: Mode,
    /// Maintain the covariance certificate `M_i` alongside the walk (n² per step).
    pub track_covariance: bool,
}

impl WalkConfig {
    pub fn new(n: usize, t: usize, delta: f64) -> Result<Self> {
        let c = compute_c(n, t, delta)?;
        Ok(Self {
            n,
            t,
            delta,
            c,
            spread: SPREAD_CONSTANT,
            mode: Mode::Online,
            track_covariance: false,
        })
    }

    /// Configuration over a nominal coordinate space of `n` dimensions, of
    /// which only the touched ones are ever materialized.
    pub fn nominal(n: f64, t: usize, delta: f64) -> Result<Self> {
        let c = compute_c_nominal(n, t, delta)?;
        Ok(Self {
            n: n.min(usize::MAX as f64) as usize,
            t,
            delta,
            c,
            spread: SPREAD_CONSTANT,
            mode: Mode::Online,
            track_covariance: false,
        })
    }

    /// Overrides the bias scale. Experiments only; `c ≥ 1` is still enforced.
    pub fn with_c(mut self, c: f64) -> Result<Self> {
        if !(c >= 1.0) || !c.is_finite() {
            return Err(Error::config(format!("c = {c} violates c >= 1")));
        }
        self.c = c;
        Ok(self)
    }

    pub fn with_spread(mut self, spread: f64) -> Result<Self> {
        if !(spread > 0.0) || !spread.is_finite() {
            return Err(Error::config(format!("spread constant L = {spread} must be positive")));
        }
        self.spread = spread;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_covariance_tracking(mut self, on: bool) -> Self {
        self.track_covariance = on;
        self
    }

    /// `L·c`, the uniform bound on the covariance certificate.
    pub fn lc(&self) -> f64 {
        self.spread * self.c
    }
}

/// Probability of `ε = +1` given the precomputed inner product, clamped to [0, 1].
#[inline]
pub fn probability_from_inner(inner: f64, c: f64) -> f64 {
    (0.5 - inner / (2.0 * c)).clamp(0.0, 1.0)
}

/// `1/2 − ⟨w,v⟩/(2c)`.
///
/// Panics if `|⟨w,v⟩| > c`: the failure check must run first.
pub fn sign_probability<V: InputVector + ?Sized>(w: &[f64], v: &V, c: f64) -> f64 {
    let inner = v.dot(w);
    assert!(
        inner.abs() <= c,
        "sign_probability called with |<w,v>| = {} > c = {c}",
        inner.abs()
    );
    probability_from_inner(inner, c)
}

/// Running maximum of `|w_j|` with O(log n) point updates.
#[derive(Debug, Clone)]
struct SupNormTree {
    size: usize,
    nodes: Vec<f64>,
}

impl SupNormTree {
    fn new(n: usize) -> Self {
        let size = n.max(1).next_power_of_two();
        Self {
            size,
            nodes: vec![0.0; 2 * size],
        }
    }

    fn rebuild(w: &[f64]) -> Self {
        let mut tree = Self::new(w.len());
        for (i, x) in w.iter().enumerate() {
            tree.nodes[tree.size + i] = x.abs();
        }
        for i in (1..tree.size).rev() {
            tree.nodes[i] = tree.nodes[2 * i].max(tree.nodes[2 * i + 1]);
        }
        tree
    }

    fn set(&mut self, i: usize, value: f64) {
        let mut pos = self.size + i;
        self.nodes[pos] = value.abs();
        while pos > 1 {
            pos /= 2;
            let m = self.nodes[2 * pos].max(self.nodes[2 * pos + 1]);
            if self.nodes[pos] == m {
                break;
            }
            self.nodes[pos] = m;
        }
    }

    fn max(&self) -> f64 {
        self.nodes[1]
    }
}

/// The partial signed sum and step counter.
#[derive(Debug, Clone)]
pub struct WalkState {
    w: Vec<f64>,
    step: usize,
    sup: SupNormTree,
}

impl WalkState {
    pub fn new(n: usize) -> Self {
        Self {
            w: vec![0.0; n],
            step: 0,
            sup: SupNormTree::new(n),
        }
    }

    /// Starts from an arbitrary partial sum (useful for testing single steps).
    pub fn from_vector(w: Vec<f64>, step: usize) -> Self {
        let sup = SupNormTree::rebuild(&w);
        Self { w, step, sup }
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Number of completed steps.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup.max()
    }

    /// Grows the coordinate space with zeros (lazily indexed coordinate spaces).
    pub fn ensure_dim(&mut self, n: usize) {
        if n <= self.w.len() {
            return;
        }
        self.w.resize(n, 0.0);
        if n > self.sup.size {
            self.sup = SupNormTree::rebuild(&self.w);
        }
    }

    /// `w ← w + ε v`, one step forward.
    pub fn apply<V: InputVector + ?Sized>(&mut self, v: &V, sign: Sign) {
        let e = sign.as_f64();
        let (w, sup) = (&mut self.w, &mut self.sup);
        v.for_each_entry(|i, x| {
            w[i] += e * x;
            sup.set(i, w[i]);
        });
        self.step += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub sign: Sign,
    /// `⟨w_{i-1}, v_i⟩`.
    pub inner: f64,
    /// `‖w_i‖∞` after the move.
    pub sup_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Signed(StepRecord),
    /// The failure check tripped before step `step` (1-based) could be taken.
    Failed { step: usize },
}

/// What a signing rule decided for one step, before the state is updated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    Sign { sign: Sign, inner: f64 },
    Fail { inner: f64 },
}

/// The balance rule on an already validated input: failure check, then
/// `ε = +1` iff `u < p`.
pub fn balance_decision<V: InputVector + ?Sized>(
    state: &WalkState,
    v: &V,
    config: &WalkConfig,
    u: f64,
) -> Decision {
    let inner = v.dot(state.w());
    let sup_exceeded = config.mode == Mode::Online && state.sup_norm() > config.c;
    if inner.abs() > config.c || sup_exceeded {
        return Decision::Fail { inner };
    }
    let p = probability_from_inner(inner, config.c);
    let sign = if u < p { Sign::Plus } else { Sign::Minus };
    Decision::Sign { sign, inner }
}

fn validate_input<V: InputVector + ?Sized>(state: &WalkState, v: &V, horizon: usize) -> Result<()> {
    let step = state.step() + 1;
    if state.step() >= horizon {
        return Err(Error::config(format!(
            "step {step} exceeds the horizon t = {horizon}"
        )));
    }
    v.check_dim(state.dim(), step)?;
    v.check_norm(step)
}

/// One step of the walk with an explicit uniform draw `u ∈ [0, 1)`.
pub fn balance_step<V: InputVector + ?Sized>(
    state: &mut WalkState,
    v: &V,
    config: &WalkConfig,
    u: f64,
) -> Result<StepOutcome> {
    validate_input(state, v, config.t)?;
    match balance_decision(state, v, config, u) {
        Decision::Fail { .. } => Ok(StepOutcome::Failed {
            step: state.step() + 1,
        }),
        Decision::Sign { sign, inner } => {
            state.apply(v, sign);
            Ok(StepOutcome::Signed(StepRecord {
                sign,
                inner,
                sup_norm: state.sup_norm(),
            }))
        }
    }
}

/// An online signing rule.
pub trait Signer {
    fn name(&self) -> &'static str;

    fn decide<V: InputVector + ?Sized>(&mut self, state: &WalkState, v: &V) -> Decision;
}

/// The balance rule with its own deterministic random stream: one uniform
/// draw per step, in step order.
#[derive(Debug, Clone)]
pub struct BalanceSigner {
    config: WalkConfig,
    rng: WalkRng,
}

impl BalanceSigner {
    pub fn new(config: WalkConfig, seed: u64) -> Self {
        Self {
            config,
            rng: rng_from_seed(seed),
        }
    }

    pub fn config(&self) -> &WalkConfig {
        &self.config
    }
}

impl Signer for BalanceSigner {
    fn name(&self) -> &'static str {
        "balance"
    }

    fn decide<V: InputVector + ?Sized>(&mut self, state: &WalkState, v: &V) -> Decision {
        let u: f64 = self.rng.random();
        balance_decision(state, v, &self.config, u)
    }
}

/// A source of input vectors, consumed strictly online: the i-th vector is
/// requested only after the (i−1)-th sign has been applied.
pub trait VectorStream {
    type Item: InputVector;

    fn dim(&self) -> usize;

    fn horizon(&self) -> usize;

    /// Adaptive streams see the current partial sum; oblivious ones must not.
    fn is_adaptive(&self) -> bool {
        false
    }

    fn next_vector(&mut self, observed: Option<&[f64]>) -> Result<Self::Item>;
}

/// Streams a fixed list of dense vectors.
#[derive(Debug, Clone)]
pub struct SliceStream<'a> {
    dim: usize,
    vectors: &'a [Vec<f64>],
    next: usize,
}

impl<'a> SliceStream<'a> {
    pub fn new(dim: usize, vectors: &'a [Vec<f64>]) -> Self {
        Self {
            dim,
            vectors,
            next: 0,
        }
    }
}

impl VectorStream for SliceStream<'_> {
    type Item = Vec<f64>;

    fn dim(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> usize {
        self.vectors.len()
    }

    fn next_vector(&mut self, observed: Option<&[f64]>) -> Result<Vec<f64>> {
        if observed.is_some() {
            return Err(Error::Contract("oblivious stream was shown the walk state".into()));
        }
        let v = self
            .vectors
            .get(self.next)
            .ok_or_else(|| Error::config("stream exhausted"))?
            .clone();
        self.next += 1;
        Ok(v)
    }
}

#[derive(Debug, Clone)]
pub struct WalkTrace {
    pub signs: Vec<Sign>,
    /// `‖w_i‖∞` after each completed step.
    pub sup_norms: Vec<f64>,
    /// `⟨w_{i-1}, v_i⟩` for each completed step.
    pub inner_products: Vec<f64>,
    /// `max_i |⟨w_{i-1}, v_i⟩|`, including the step that failed, if any.
    pub max_inner: f64,
    pub failed: bool,
    /// 1-based step at which the failure check tripped.
    pub fail_step: Option<usize>,
    pub seed: u64,
    /// The last partial sum reached.
    pub final_w: Vec<f64>,
    /// Covariance certificate after the last processed step, when tracked.
    pub covariance: Option<CovarianceTracker>,
}

impl WalkTrace {
    fn with_capacity(t: usize, seed: u64) -> Self {
        Self {
            signs: Vec::with_capacity(t),
            sup_norms: Vec::with_capacity(t),
            inner_products: Vec::with_capacity(t),
            max_inner: 0.0,
            failed: false,
            fail_step: None,
            seed,
            final_w: Vec::new(),
            covariance: None,
        }
    }

    pub fn steps(&self) -> usize {
        self.signs.len()
    }

    pub fn max_sup_norm(&self) -> f64 {
        self.sup_norms.iter().fold(0.0_f64, |m, &x| m.max(x))
    }
}

/// Runs a signing rule over an online stream, recording the trace.
/// `on_step` sees every processed input before it is signed.
pub fn drive<S, G, F>(stream: &mut S, signer: &mut G, seed: u64, on_step: F) -> Result<WalkTrace>
where
    S: VectorStream,
    G: Signer,
    F: FnMut(&S::Item),
{
    drive_observed(stream, signer, seed, on_step, |_, _| {})
}

/// [`drive`] with a second hook called with each input and the sign it
/// received, once the state has moved. The stream's dimension may grow
/// between steps.
pub fn drive_observed<S, G, F, H>(
    stream: &mut S,
    signer: &mut G,
    seed: u64,
    mut on_step: F,
    mut on_signed: H,
) -> Result<WalkTrace>
where
    S: VectorStream,
    G: Signer,
    F: FnMut(&S::Item),
    H: FnMut(&S::Item, Sign),
{
    let t = stream.horizon();
    let mut state = WalkState::new(stream.dim());
    let mut trace = WalkTrace::with_capacity(t, seed);
    while state.step() < t {
        let observed = stream.is_adaptive().then(|| state.w());
        let v = stream.next_vector(observed)?;
        state.ensure_dim(stream.dim());
        validate_input(&state, &v, t)?;
        on_step(&v);
        match signer.decide(&state, &v) {
            Decision::Fail { inner } => {
                trace.max_inner = trace.max_inner.max(inner.abs());
                trace.failed = true;
                trace.fail_step = Some(state.step() + 1);
                break;
            }
            Decision::Sign { sign, inner } => {
                state.apply(&v, sign);
                trace.max_inner = trace.max_inner.max(inner.abs());
                trace.signs.push(sign);
                trace.inner_products.push(inner);
                trace.sup_norms.push(state.sup_norm());
                on_signed(&v, sign);
            }
        }
    }
    trace.final_w = state.w;
    Ok(trace)
}

/// The balance walk over a stream; deterministic in `(stream, config, seed)`.
pub fn run_balance<S: VectorStream>(stream: &mut S, config: &WalkConfig, seed: u64) -> Result<WalkTrace> {
    if stream.dim() != config.n || stream.horizon() != config.t {
        return Err(Error::config(format!(
            "stream shape {}x{} does not match config n = {}, t = {}",
            stream.dim(),
            stream.horizon(),
            config.n,
            config.t
        )));
    }
    let mut signer = BalanceSigner::new(config.clone(), seed);
    if !config.track_covariance {
        return drive(stream, &mut signer, seed, |_| {});
    }
    let mut tracker = CovarianceTracker::new(config.n, config.c, config.spread)?;
    let mut trace = drive(stream, &mut signer, seed, |v| tracker.push(v))?;
    trace.covariance = Some(tracker);
    Ok(trace)
}
