//! The two-track forecasting architecture and its day-by-day engine.
//!
//! One *member* holds two stacks of dilated recurrent layers plus per-series
//! smoothing parameters:
//!
//! - the **context track** runs on one designated series and emits a small
//!   vector `r_t` (shared market state) plus a smoothing correction for its
//!   own exponential-smoothing level;
//! - the **main track** runs on every forecast series and consumes
//!   `[x_in, exo, log10(level), r_t .* g_j]` where `x_in` is the log-ratio
//!   price window, `exo` the embedded (and per-series modulated) exogenous
//!   block, and `g_j` a learned per-series modulation of the context vector.
//!
//! Each track is: layer 1 an attentive dilated cell pair (dilation 2), layer
//! 2 a plain dilated cell (dilation 4) fed `[h1; pattern]` (the input is
//! re-injected), then a residual shortcut `h2 + P h1` into an affine head.
//! The main head emits `3h + 1` values (point, lower, upper, one smoothing
//! correction); the context head emits `u + 1`.
//!
//! Per calendar day the engine updates the context series' level, steps the
//! context track, then for every active main series updates its level, steps
//! the main track, and applies that series' own smoothing correction. The
//! whole day runs on the gradient tape, so training reaches every parameter
//! — including the per-series smoothing logits through the level recursion.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::cells::{
    adrnn_step, drnn_step, uniform_fan_in, AdCellParams, AdCellState, CellParams, CellState,
};
use crate::error::{DataError, ForecastError};
use crate::es;
use crate::math;
use crate::panel::SeriesPanel;
use crate::preprocess;
use crate::tape::{NodeId, ParamId, ParamStore, Tape, Tensor};

/// Dilation of the attentive first layer.
pub const DILATION_1: usize = 2;
/// Dilation of the plain second layer.
pub const DILATION_2: usize = 4;
/// Largest dilation in the stack; drives the recurrent warm-up length.
pub const MAX_DILATION: usize = 4;

/// Days of value-mode stepping between tape compactions during inference.
const SWAP_EVERY: usize = 64;

/// Architecture hyperparameters shared by both tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Input window length (days).
    pub n: usize,
    /// Forecast horizon (days).
    pub h: usize,
    /// Number of exogenous variables (set from the panel).
    pub n_exo: usize,
    /// Embedding size per exogenous variable; must stay below `n`.
    pub d_embed: usize,
    /// Context vector length.
    pub u: usize,
    /// Hidden size of layer 1.
    pub s1: usize,
    /// Hidden size of layer 2.
    pub s2: usize,
    /// Days averaged to seed each series' smoothing level.
    pub level_warmup: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            n: 28,
            h: 7,
            n_exo: 0,
            d_embed: 4,
            u: 8,
            s1: 32,
            s2: 32,
            level_warmup: 7,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        let positive: [(&str, usize); 6] = [
            ("n", self.n),
            ("h", self.h),
            ("u", self.u),
            ("s1", self.s1),
            ("s2", self.s2),
            ("level_warmup", self.level_warmup),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ForecastError::Config(format!("{name} must be positive")));
            }
        }
        if self.n_exo > 0 {
            if self.d_embed == 0 {
                return Err(ForecastError::Config(
                    "d_embed must be positive when exogenous variables are present".to_string(),
                ));
            }
            if self.d_embed >= self.n {
                return Err(ForecastError::Config(format!(
                    "d_embed must stay below the window length: d_embed={} n={}",
                    self.d_embed, self.n
                )));
            }
        }
        Ok(())
    }

    /// Length of the embedded exogenous block.
    pub fn exo_len(&self) -> usize {
        self.d_embed * self.n_exo
    }

    /// Main-track input pattern length: window + exo block + level + context.
    pub fn main_input_len(&self) -> usize {
        self.n + self.exo_len() + 1 + self.u
    }

    /// Context-track input pattern length (no context block).
    pub fn context_input_len(&self) -> usize {
        self.n + self.exo_len() + 1
    }

    /// Main head width: point, lower, and upper vectors plus one correction.
    pub fn main_head_len(&self) -> usize {
        3 * self.h + 1
    }

    /// Context head width: the context vector plus one correction.
    pub fn context_head_len(&self) -> usize {
        self.u + 1
    }

    /// First series-local day with a full input window, warmed-up recurrent
    /// ring, and seeded level.
    pub fn warmup_days(&self) -> usize {
        self.n.max(2 * MAX_DILATION).max(self.level_warmup)
    }
}

/// Parameter handles for one track (embeddings, two layers, shortcut, head).
#[derive(Debug, Clone)]
pub struct TrackParams {
    pub embed: Vec<(ParamId, ParamId)>,
    pub l1: AdCellParams,
    pub l2: CellParams,
    pub proj: ParamId,
    pub head_w: ParamId,
    pub head_b: ParamId,
}

impl TrackParams {
    fn register(
        store: &mut ParamStore,
        prefix: &str,
        cfg: &NetworkConfig,
        input_len: usize,
        head_len: usize,
        rng: &mut impl Rng,
    ) -> TrackParams {
        let embed = (0..cfg.n_exo)
            .map(|i| {
                let w = store.add(
                    format!("{prefix}.embed.{i}.w"),
                    uniform_fan_in(rng, cfg.d_embed, cfg.n),
                );
                let b = store.add(format!("{prefix}.embed.{i}.b"), Tensor::zeros(cfg.d_embed, 1));
                (w, b)
            })
            .collect();
        let l1 = AdCellParams::register(store, &format!("{prefix}.l1"), input_len, cfg.s1, rng);
        let l2 = CellParams::register(
            store,
            &format!("{prefix}.l2"),
            cfg.s1 + input_len,
            cfg.s2,
            rng,
        );
        let proj = store.add(format!("{prefix}.proj.w"), uniform_fan_in(rng, cfg.s2, cfg.s1));
        let head_w = store.add(format!("{prefix}.head.w"), uniform_fan_in(rng, head_len, cfg.s2));
        let head_b = store.add(format!("{prefix}.head.b"), Tensor::zeros(head_len, 1));
        TrackParams { embed, l1, l2, proj, head_w, head_b }
    }

    fn bind(
        store: &ParamStore,
        prefix: &str,
        cfg: &NetworkConfig,
        input_len: usize,
        head_len: usize,
    ) -> Result<TrackParams, ForecastError> {
        let embed = (0..cfg.n_exo)
            .map(|i| {
                let w = lookup(store, &format!("{prefix}.embed.{i}.w"), cfg.d_embed, cfg.n)?;
                let b = lookup(store, &format!("{prefix}.embed.{i}.b"), cfg.d_embed, 1)?;
                Ok((w, b))
            })
            .collect::<Result<Vec<_>, ForecastError>>()?;
        let l1 = bind_ad_cell(store, &format!("{prefix}.l1"), input_len, cfg.s1)?;
        let l2 = bind_cell(store, &format!("{prefix}.l2"), cfg.s1 + input_len, cfg.s2)?;
        let proj = lookup(store, &format!("{prefix}.proj.w"), cfg.s2, cfg.s1)?;
        let head_w = lookup(store, &format!("{prefix}.head.w"), head_len, cfg.s2)?;
        let head_b = lookup(store, &format!("{prefix}.head.b"), head_len, 1)?;
        Ok(TrackParams { embed, l1, l2, proj, head_w, head_b })
    }
}

/// Finds a named tensor and checks its shape.
fn lookup(
    store: &ParamStore,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<ParamId, ForecastError> {
    let id = store
        .id(name)
        .ok_or_else(|| ForecastError::Config(format!("missing parameter tensor `{name}`")))?;
    let t = store.get(id);
    if t.rows != rows || t.cols != cols {
        return Err(ForecastError::Config(format!(
            "parameter tensor `{name}` has shape {}x{}, expected {rows}x{cols}",
            t.rows, t.cols
        )));
    }
    Ok(id)
}

fn bind_cell(
    store: &ParamStore,
    prefix: &str,
    in_dim: usize,
    hidden: usize,
) -> Result<CellParams, ForecastError> {
    let cols = in_dim + 2 * hidden;
    let mut ids = [ParamId(0); 8];
    for (slot, gate) in crate::cells::GATE_NAMES.iter().enumerate() {
        ids[2 * slot] = lookup(store, &format!("{prefix}.w_{gate}"), hidden, cols)?;
        ids[2 * slot + 1] = lookup(store, &format!("{prefix}.b_{gate}"), hidden, 1)?;
    }
    let [w_f, b_f, w_i, b_i, w_c, b_c, w_o, b_o] = ids;
    Ok(CellParams { w_f, b_f, w_i, b_i, w_c, b_c, w_o, b_o, in_dim, hidden })
}

fn bind_ad_cell(
    store: &ParamStore,
    prefix: &str,
    in_dim: usize,
    hidden: usize,
) -> Result<AdCellParams, ForecastError> {
    Ok(AdCellParams {
        cell_a: bind_cell(store, &format!("{prefix}.cellA"), in_dim, hidden)?,
        att_w: lookup(store, &format!("{prefix}.att.w"), in_dim, hidden)?,
        att_b: lookup(store, &format!("{prefix}.att.b"), in_dim, 1)?,
        cell_b: bind_cell(store, &format!("{prefix}.cellB"), in_dim, hidden)?,
    })
}

/// Learned per-series adjustments: exogenous modulation `p`, context
/// modulation `g`, and the smoothing logit.
#[derive(Debug, Clone, Copy)]
pub struct SeriesParams {
    pub p: Option<ParamId>,
    pub g: ParamId,
    pub i_alpha: ParamId,
}

/// One ensemble member: both tracks plus per-series parameters, addressed by
/// panel coin order. The context track owns a separate smoothing logit even
/// when the context coin is also forecast on the main track.
#[derive(Debug, Clone)]
pub struct MemberParams {
    pub main: TrackParams,
    pub ctx: TrackParams,
    pub series: Vec<SeriesParams>,
    pub ctx_i_alpha: ParamId,
}

impl MemberParams {
    /// Registers every tensor of a fresh member into `store`. Cell gates and
    /// dense maps draw fan-in uniform values from `rng`; attention
    /// projections, biases, and smoothing logits start at zero; modulation
    /// vectors start at ones (exact pass-through).
    pub fn register(
        store: &mut ParamStore,
        cfg: &NetworkConfig,
        coin_ids: &[String],
        rng: &mut impl Rng,
    ) -> Result<MemberParams, ForecastError> {
        cfg.validate()?;
        if coin_ids.is_empty() {
            return Err(ForecastError::Config("a member needs at least one series".to_string()));
        }
        let main = TrackParams::register(
            store,
            "main",
            cfg,
            cfg.main_input_len(),
            cfg.main_head_len(),
            rng,
        );
        let ctx = TrackParams::register(
            store,
            "ctx",
            cfg,
            cfg.context_input_len(),
            cfg.context_head_len(),
            rng,
        );
        let ctx_i_alpha = store.add("ctx.ialpha", Tensor::zeros(1, 1));
        let series = coin_ids
            .iter()
            .map(|id| {
                let p = (cfg.exo_len() > 0).then(|| {
                    store.add(
                        format!("series.{id}.p"),
                        Tensor::vector(alloc::vec![1.0; cfg.exo_len()]),
                    )
                });
                let g = store.add(
                    format!("series.{id}.g"),
                    Tensor::vector(alloc::vec![1.0; cfg.u]),
                );
                let i_alpha = store.add(format!("series.{id}.ialpha"), Tensor::zeros(1, 1));
                SeriesParams { p, g, i_alpha }
            })
            .collect();
        Ok(MemberParams { main, ctx, series, ctx_i_alpha })
    }

    /// Re-attaches handles to a store that already holds a member's tensors
    /// (e.g. one loaded from a checkpoint), verifying names and shapes.
    pub fn bind(
        store: &ParamStore,
        cfg: &NetworkConfig,
        coin_ids: &[String],
    ) -> Result<MemberParams, ForecastError> {
        cfg.validate()?;
        let main =
            TrackParams::bind(store, "main", cfg, cfg.main_input_len(), cfg.main_head_len())?;
        let ctx =
            TrackParams::bind(store, "ctx", cfg, cfg.context_input_len(), cfg.context_head_len())?;
        let ctx_i_alpha = lookup(store, "ctx.ialpha", 1, 1)?;
        let series = coin_ids
            .iter()
            .map(|id| {
                let p = if cfg.exo_len() > 0 {
                    Some(lookup(store, &format!("series.{id}.p"), cfg.exo_len(), 1)?)
                } else {
                    None
                };
                let g = lookup(store, &format!("series.{id}.g"), cfg.u, 1)?;
                let i_alpha = lookup(store, &format!("series.{id}.ialpha"), 1, 1)?;
                Ok(SeriesParams { p, g, i_alpha })
            })
            .collect::<Result<Vec<_>, ForecastError>>()?;
        Ok(MemberParams { main, ctx, series, ctx_i_alpha })
    }
}

/// Embeds each exogenous window through its own affine map and concatenates
/// the results in variable order. `None` when there are no variables.
pub fn embed_exo(
    tape: &mut Tape,
    store: &ParamStore,
    embed: &[(ParamId, ParamId)],
    blocks: &[NodeId],
) -> Result<Option<NodeId>, ForecastError> {
    if blocks.len() != embed.len() {
        return Err(ForecastError::Shape {
            context: "exogenous embedding",
            expected: embed.len(),
            got: blocks.len(),
        });
    }
    if embed.is_empty() {
        return Ok(None);
    }
    let parts: Vec<NodeId> = embed
        .iter()
        .zip(blocks)
        .map(|(&(w, b), &x)| tape.affine(store, w, Some(b), x))
        .collect();
    Ok(Some(tape.concat(&parts)))
}

/// Per-series modulation of the embedded exogenous block: `x .* p`.
pub fn modulate_exo(
    tape: &mut Tape,
    store: &ParamStore,
    embedded: NodeId,
    p: ParamId,
) -> Result<NodeId, ForecastError> {
    let want = store.get(p).len();
    let got = tape.len_of(embedded);
    if want != got {
        return Err(ForecastError::Shape { context: "exogenous modulation", expected: want, got });
    }
    let pn = tape.param(store, p);
    Ok(tape.mul(embedded, pn))
}

/// Per-series modulation of the context vector: `r .* g`.
pub fn modulate_context(
    tape: &mut Tape,
    store: &ParamStore,
    r: NodeId,
    g: ParamId,
) -> Result<NodeId, ForecastError> {
    let want = store.get(g).len();
    let got = tape.len_of(r);
    if want != got {
        return Err(ForecastError::Shape { context: "context modulation", expected: want, got });
    }
    let gn = tape.param(store, g);
    Ok(tape.mul(r, gn))
}

/// Recurrent state of one track on one series.
#[derive(Debug, Clone)]
pub struct TrackState {
    pub l1: AdCellState,
    pub l2: CellState,
}

impl TrackState {
    pub fn fresh(cfg: &NetworkConfig) -> TrackState {
        TrackState {
            l1: AdCellState::fresh(DILATION_1, cfg.s1),
            l2: CellState::fresh(DILATION_2, cfg.s2),
        }
    }

    pub fn detach_in_place(&mut self, tape: &mut Tape) {
        self.l1.detach_in_place(tape);
        self.l2.detach_in_place(tape);
    }

    pub fn detach_onto(&mut self, source: &Tape, fresh: &mut Tape) {
        self.l1.detach_onto(source, fresh);
        self.l2.detach_onto(source, fresh);
    }
}

/// One track step on an assembled input pattern: attentive layer, second
/// layer on `[h1; pattern]`, residual projection of `h1`, affine head.
pub fn track_forward(
    tape: &mut Tape,
    store: &ParamStore,
    track: &TrackParams,
    pattern: NodeId,
    state: &mut TrackState,
) -> NodeId {
    let (h1, _att) = adrnn_step(tape, store, &track.l1, pattern, &mut state.l1);
    let l2_in = tape.concat(&[h1, pattern]);
    let h2 = drnn_step(tape, store, &track.l2, l2_in, &mut state.l2);
    let skip = tape.affine(store, track.proj, None, h1);
    let pre = tape.add(h2, skip);
    tape.affine(store, track.head_w, Some(track.head_b), pre)
}

/// Slices of one main-track day: three forecast tracks, the smoothing
/// correction, and the level nodes needed to (de)normalize around this day.
#[derive(Debug, Clone, Copy)]
pub struct MainStep {
    pub point: NodeId,
    pub lower: NodeId,
    pub upper: NodeId,
    pub delta_alpha: NodeId,
    pub level: NodeId,
    pub ln_level: NodeId,
}

/// Main-track forward pass over an assembled pattern, returning the bundle
/// slices (level fields are filled by the engine).
pub fn main_forward(
    tape: &mut Tape,
    store: &ParamStore,
    cfg: &NetworkConfig,
    track: &TrackParams,
    pattern: NodeId,
    state: &mut TrackState,
) -> Result<(NodeId, NodeId, NodeId, NodeId), ForecastError> {
    let got = tape.len_of(pattern);
    if got != cfg.main_input_len() {
        return Err(ForecastError::Shape {
            context: "main-track input pattern",
            expected: cfg.main_input_len(),
            got,
        });
    }
    let out = track_forward(tape, store, track, pattern, state);
    let h = cfg.h;
    let point = tape.slice(out, 0, h);
    let lower = tape.slice(out, h, h);
    let upper = tape.slice(out, 2 * h, h);
    let delta_alpha = tape.slice(out, 3 * h, 1);
    Ok((point, lower, upper, delta_alpha))
}

/// Context-track forward pass: returns the raw context vector and the
/// context series' smoothing correction.
pub fn context_forward(
    tape: &mut Tape,
    store: &ParamStore,
    cfg: &NetworkConfig,
    track: &TrackParams,
    pattern: NodeId,
    state: &mut TrackState,
) -> Result<(NodeId, NodeId), ForecastError> {
    let got = tape.len_of(pattern);
    if got != cfg.context_input_len() {
        return Err(ForecastError::Shape {
            context: "context-track input pattern",
            expected: cfg.context_input_len(),
            got,
        });
    }
    let out = track_forward(tape, store, track, pattern, state);
    let r = tape.slice(out, 0, cfg.u);
    let delta_alpha = tape.slice(out, cfg.u, 1);
    Ok((r, delta_alpha))
}

/// One series of a panel, preprocessed for the engine: raw and log prices,
/// normalized exogenous tracks (scaled by training-period means only), and
/// the seeded level.
#[derive(Debug, Clone)]
pub struct PreparedSeries {
    pub id: String,
    /// Calendar day number of the series' first observation.
    pub start: i64,
    pub prices: Vec<f64>,
    pub ln_prices: Vec<f64>,
    /// `[variable][day]`, already squashed.
    pub exo_norm: Vec<Vec<f64>>,
    pub init_level: f64,
}

impl PreparedSeries {
    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// A panel ready to run: per-series tensors plus the context designation.
#[derive(Debug, Clone)]
pub struct PreparedPanel {
    pub series: Vec<PreparedSeries>,
    pub context_index: usize,
    /// `(coin, variable)` pairs whose training-period mean was not positive;
    /// their blocks are all zeros.
    pub dead_exo: Vec<(String, String)>,
}

impl PreparedPanel {
    pub fn context(&self) -> &PreparedSeries {
        &self.series[self.context_index]
    }

    /// First calendar day the context vector exists, hence the first day any
    /// main series can produce a forecast.
    pub fn first_context_day(&self, cfg: &NetworkConfig) -> i64 {
        self.context().start + cfg.warmup_days() as i64
    }

    /// First calendar day series `idx` emits forecasts: its own warm-up and
    /// the context track's must both be complete.
    pub fn first_forecast_day(&self, idx: usize, cfg: &NetworkConfig) -> i64 {
        (self.series[idx].start + cfg.warmup_days() as i64).max(self.first_context_day(cfg))
    }

    /// Last calendar day with a full actual window for scoring series `idx`.
    pub fn last_scored_day(&self, idx: usize, cfg: &NetworkConfig) -> i64 {
        let s = &self.series[idx];
        s.start + s.len() as i64 - 1 - cfg.h as i64
    }

    /// Last calendar day the engine can step series `idx` at all.
    pub fn last_step_day(&self, idx: usize) -> i64 {
        let s = &self.series[idx];
        s.start + s.len() as i64 - 1
    }
}

/// Validates a panel against the config and precomputes everything the
/// engine reads per day. `train_len[i]` is how many leading days of coin `i`
/// belong to the training period; exogenous scaling statistics come from
/// those days only, and the seeded level must fit inside them.
pub fn prepare_panel(
    panel: &SeriesPanel,
    train_len: &[usize],
    context_id: &str,
    cfg: &NetworkConfig,
) -> Result<PreparedPanel, ForecastError> {
    cfg.validate()?;
    if panel.coins.is_empty() {
        return Err(DataError::EmptyPanel.into());
    }
    if train_len.len() != panel.coins.len() {
        return Err(ForecastError::Shape {
            context: "training lengths per coin",
            expected: panel.coins.len(),
            got: train_len.len(),
        });
    }
    if panel.exo_names.len() != cfg.n_exo {
        return Err(ForecastError::Config(format!(
            "config expects {} exogenous variables, panel provides {}",
            cfg.n_exo,
            panel.exo_names.len()
        )));
    }
    let context_index = panel
        .coin_index(context_id)
        .ok_or_else(|| DataError::MissingContext(context_id.to_string()))?;
    let mut series = Vec::with_capacity(panel.coins.len());
    let mut dead_exo = Vec::new();
    for (ci, coin) in panel.coins.iter().enumerate() {
        let tl = train_len[ci];
        if tl == 0 || tl > coin.len() {
            return Err(ForecastError::Config(format!(
                "training length {tl} invalid for series `{}` of {} days",
                coin.id,
                coin.len()
            )));
        }
        if tl < cfg.level_warmup {
            return Err(ForecastError::Config(format!(
                "series `{}` has training length {tl}, below the level warm-up {}",
                coin.id, cfg.level_warmup
            )));
        }
        for (i, z) in coin.prices.iter().enumerate() {
            if !(z.is_finite() && *z > 0.0) {
                return Err(DataError::NonPositivePrice { coin: coin.id.clone(), index: i }.into());
            }
        }
        let mut exo_norm = Vec::with_capacity(coin.exo.len());
        if coin.exo.len() != cfg.n_exo {
            return Err(DataError::ExoMismatch { coin: coin.id.clone() }.into());
        }
        for (vi, values) in coin.exo.iter().enumerate() {
            if values.len() != coin.len() {
                return Err(DataError::LengthMismatch {
                    coin: coin.id.clone(),
                    expected: coin.len(),
                    got: values.len(),
                }
                .into());
            }
            for (i, v) in values.iter().enumerate() {
                if !(v.is_finite() && *v >= 0.0) {
                    return Err(DataError::BadExogenous {
                        coin: coin.id.clone(),
                        var: panel.exo_names[vi].clone(),
                        index: i,
                    }
                    .into());
                }
            }
            let pbar = preprocess::exo_mean(values, tl);
            if pbar > 0.0 {
                exo_norm.push(preprocess::normalize_exo(values, pbar));
            } else {
                dead_exo.push((coin.id.clone(), panel.exo_names[vi].clone()));
                exo_norm.push(alloc::vec![0.0; values.len()]);
            }
        }
        let init_level = es::init_level(&coin.prices, cfg.level_warmup, 0.0)?.level;
        series.push(PreparedSeries {
            id: coin.id.clone(),
            start: coin.start.0,
            ln_prices: coin.prices.iter().map(|z| math::ln(*z)).collect(),
            prices: coin.prices.clone(),
            exo_norm,
            init_level,
        });
    }
    Ok(PreparedPanel { series, context_index, dead_exo })
}

/// Running state of one track on one series during an engine pass.
#[derive(Debug, Clone)]
struct SeriesRun {
    series_idx: usize,
    /// Level node `l_t`; `None` until the warm-up mean is seeded.
    level: Option<NodeId>,
    alpha: Option<NodeId>,
    cells: TrackState,
}

impl SeriesRun {
    fn new(series_idx: usize, cfg: &NetworkConfig) -> SeriesRun {
        SeriesRun { series_idx, level: None, alpha: None, cells: TrackState::fresh(cfg) }
    }

    fn detach_in_place(&mut self, tape: &mut Tape) {
        self.cells.detach_in_place(tape);
        if let Some(l) = self.level {
            let v = tape.scalar_value(l);
            self.level = Some(tape.const_scalar(v));
        }
        if let Some(a) = self.alpha {
            let v = tape.scalar_value(a);
            self.alpha = Some(tape.const_scalar(v));
        }
    }

    fn detach_onto(&mut self, source: &Tape, fresh: &mut Tape) {
        self.cells.detach_onto(source, fresh);
        if let Some(l) = self.level {
            self.level = Some(fresh.const_scalar(source.scalar_value(l)));
        }
        if let Some(a) = self.alpha {
            self.alpha = Some(fresh.const_scalar(source.scalar_value(a)));
        }
    }
}

/// All run state of one engine pass: the context run plus one run per active
/// main series.
pub struct RunSet {
    ctx: SeriesRun,
    mains: Vec<SeriesRun>,
}

impl RunSet {
    /// Starts a pass over the given main series (panel indices, deduplicated
    /// and sorted). The context series always runs, with independent state.
    pub fn start(
        prep: &PreparedPanel,
        cfg: &NetworkConfig,
        active: &[usize],
    ) -> Result<RunSet, ForecastError> {
        if active.is_empty() {
            return Err(ForecastError::Config("no active series for this pass".to_string()));
        }
        let mut idx: Vec<usize> = active.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|i| **i >= prep.series.len()) {
            return Err(ForecastError::Config(format!(
                "active series index {bad} outside the panel (len {})",
                prep.series.len()
            )));
        }
        Ok(RunSet {
            ctx: SeriesRun::new(prep.context_index, cfg),
            mains: idx.into_iter().map(|i| SeriesRun::new(i, cfg)).collect(),
        })
    }

    /// Calendar day the pass must start on so every involved series is seen
    /// at or before its level seeding day.
    pub fn first_day(&self, prep: &PreparedPanel, cfg: &NetworkConfig) -> i64 {
        let w = cfg.level_warmup as i64;
        let mut first = prep.series[self.ctx.series_idx].start + w;
        for run in &self.mains {
            first = first.min(prep.series[run.series_idx].start + w);
        }
        first
    }

    /// Cuts every gradient path at the current values (truncation boundary).
    pub fn detach_in_place(&mut self, tape: &mut Tape) {
        self.ctx.detach_in_place(tape);
        for run in &mut self.mains {
            run.detach_in_place(tape);
        }
    }

    /// Moves all state values onto a fresh tape (value-mode compaction).
    pub fn detach_onto(&mut self, source: &Tape, fresh: &mut Tape) {
        self.ctx.detach_onto(source, fresh);
        for run in &mut self.mains {
            run.detach_onto(source, fresh);
        }
    }
}

/// Steps one track one calendar day: seeds/updates the smoothing level and —
/// once windows, ring, and context are available — runs the network and
/// applies the day's smoothing correction. Returns the head output node on
/// network days.
#[allow(clippy::too_many_arguments)]
fn step_track_day(
    tape: &mut Tape,
    store: &ParamStore,
    cfg: &NetworkConfig,
    track: &TrackParams,
    s: &PreparedSeries,
    run: &mut SeriesRun,
    i_alpha: ParamId,
    p: Option<ParamId>,
    context: Option<NodeId>,
    allow_network: bool,
    day: i64,
) -> Result<Option<(NodeId, NodeId)>, ForecastError> {
    let offset = day - s.start;
    if offset < 0 {
        return Ok(None);
    }
    let t = offset as usize;
    if t >= s.len() {
        return Ok(None);
    }
    let w = cfg.level_warmup;
    if t < w {
        return Ok(None);
    }
    if run.level.is_none() {
        if t != w {
            return Err(ForecastError::State(
                "a series joined the pass after its level seeding day",
            ));
        }
        run.level = Some(tape.const_scalar(s.init_level));
        let ia = tape.param(store, i_alpha);
        run.alpha = Some(tape.sigmoid(ia));
    }
    // Daily smoothing step: l_t = alpha * z_t + (1 - alpha) * l_{t-1}.
    let alpha = run.alpha.expect("alpha seeded with level");
    let prev = run.level.expect("level seeded above");
    let z = tape.const_scalar(s.prices[t]);
    let one = tape.const_scalar(1.0);
    let keep = tape.sub(one, alpha);
    let pulled = tape.mul(alpha, z);
    let held = tape.mul(keep, prev);
    let level = tape.add(pulled, held);
    run.level = Some(level);
    if !allow_network || t < cfg.warmup_days() {
        return Ok(None);
    }
    // Assemble the input pattern around the just-updated level.
    let ln_level = tape.ln(level);
    let log10_level = tape.axpb(ln_level, 1.0 / math::LN_10, 0.0);
    let lnz = tape.constv(&s.ln_prices[t + 1 - cfg.n..=t]);
    let ln_level_w = tape.broadcast(ln_level, cfg.n);
    let x_in = tape.sub(lnz, ln_level_w);
    let blocks: Vec<NodeId> = s
        .exo_norm
        .iter()
        .map(|var| tape.constv(&var[t + 1 - cfg.n..=t]))
        .collect();
    let mut exo = embed_exo(tape, store, &track.embed, &blocks)?;
    if let (Some(e), Some(pid)) = (exo, p) {
        exo = Some(modulate_exo(tape, store, e, pid)?);
    }
    let mut parts = alloc::vec![x_in];
    if let Some(e) = exo {
        parts.push(e);
    }
    parts.push(log10_level);
    if let Some(c) = context {
        parts.push(c);
    }
    let pattern = tape.concat(&parts);
    let out = track_forward(tape, store, track, pattern, &mut run.cells);
    // The day's correction feeds the coefficient used tomorrow.
    let head_len = tape.len_of(out);
    let delta = tape.slice(out, head_len - 1, 1);
    let ia = tape.param(store, i_alpha);
    let logit = tape.add(ia, delta);
    run.alpha = Some(tape.sigmoid(logit));
    Ok(Some((out, ln_level)))
}

/// Steps the whole engine one calendar day in the mandated order: context
/// track first (producing `r_t`), then every active main series. Returns one
/// `(panel index, bundle)` per main series that produced a forecast.
pub fn step_calendar_day(
    tape: &mut Tape,
    store: &ParamStore,
    member: &MemberParams,
    prep: &PreparedPanel,
    cfg: &NetworkConfig,
    runs: &mut RunSet,
    day: i64,
) -> Result<Vec<(usize, MainStep)>, ForecastError> {
    let ctx_series = &prep.series[runs.ctx.series_idx];
    let ctx_out = step_track_day(
        tape,
        store,
        cfg,
        &member.ctx,
        ctx_series,
        &mut runs.ctx,
        member.ctx_i_alpha,
        None,
        None,
        true,
        day,
    )?;
    let r = ctx_out.map(|(out, _)| tape.slice(out, 0, cfg.u));
    let mut bundles = Vec::new();
    for run in &mut runs.mains {
        let si = run.series_idx;
        let s = &prep.series[si];
        let sp = &member.series[si];
        let context = match r {
            Some(rv) => Some(modulate_context(tape, store, rv, sp.g)?),
            None => None,
        };
        let stepped = step_track_day(
            tape,
            store,
            cfg,
            &member.main,
            s,
            run,
            sp.i_alpha,
            sp.p,
            context,
            r.is_some(),
            day,
        )?;
        if let Some((out, ln_level)) = stepped {
            let h = cfg.h;
            let point = tape.slice(out, 0, h);
            let lower = tape.slice(out, h, h);
            let upper = tape.slice(out, 2 * h, h);
            let delta_alpha = tape.slice(out, 3 * h, 1);
            let level = run.level.expect("level exists on network days");
            bundles.push((si, MainStep { point, lower, upper, delta_alpha, level, ln_level }));
        }
    }
    Ok(bundles)
}

/// One forecast anchored at a training day, kept as tape nodes for the loss.
#[derive(Debug, Clone, Copy)]
pub struct LossAnchor {
    /// Panel index of the series.
    pub coin: usize,
    /// Calendar day of the anchor.
    pub day: i64,
    /// Series-local day index.
    pub t: usize,
    pub step: MainStep,
}

/// Runs one differentiable training segment: a value-mode prefix from each
/// series' beginning, a gradient cut at `seg_from` (unless
/// `differentiate_prefix`), then `steps` consecutive days on tape. Returns
/// an anchor per (active series, segment day) whose full actual window
/// exists.
#[allow(clippy::too_many_arguments)]
pub fn run_training_segment(
    tape: &mut Tape,
    store: &ParamStore,
    member: &MemberParams,
    prep: &PreparedPanel,
    cfg: &NetworkConfig,
    active: &[usize],
    seg_from: i64,
    steps: usize,
    differentiate_prefix: bool,
) -> Result<Vec<LossAnchor>, ForecastError> {
    let mut runs = RunSet::start(prep, cfg, active)?;
    let first = runs.first_day(prep, cfg);
    if seg_from < first {
        return Err(ForecastError::Config(format!(
            "segment start day {seg_from} precedes the first steppable day {first}"
        )));
    }
    let mut day = first;
    while day < seg_from {
        step_calendar_day(tape, store, member, prep, cfg, &mut runs, day)?;
        day += 1;
    }
    if !differentiate_prefix {
        runs.detach_in_place(tape);
    }
    let mut anchors = Vec::new();
    for k in 0..steps {
        let d = seg_from + k as i64;
        let outs = step_calendar_day(tape, store, member, prep, cfg, &mut runs, d)?;
        for (coin, step) in outs {
            let s = &prep.series[coin];
            let t = (d - s.start) as usize;
            if t + cfg.h < s.len() {
                anchors.push(LossAnchor { coin, day: d, t, step });
            }
        }
    }
    Ok(anchors)
}

/// A denormalized, price-space forecast from one anchor day.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceBundle {
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub delta_alpha: f64,
    /// The smoothing level the bundle was denormalized with.
    pub level: f64,
}

fn extract_bundle(tape: &Tape, step: &MainStep) -> PriceBundle {
    let level = tape.scalar_value(step.level);
    PriceBundle {
        point: preprocess::denormalize(tape.value(step.point), level),
        lower: preprocess::denormalize(tape.value(step.lower), level),
        upper: preprocess::denormalize(tape.value(step.upper), level),
        delta_alpha: tape.scalar_value(step.delta_alpha),
        level,
    }
}

/// Value-mode pass over the panel: steps every day from the series
/// beginnings through `last_day` inclusive and hands each day's denormalized
/// forecasts to `emit(panel index, calendar day, series-local day, bundle)`.
/// Memory stays bounded regardless of span.
pub fn run_inference<F>(
    store: &ParamStore,
    member: &MemberParams,
    prep: &PreparedPanel,
    cfg: &NetworkConfig,
    active: &[usize],
    last_day: i64,
    mut emit: F,
) -> Result<(), ForecastError>
where
    F: FnMut(usize, i64, usize, PriceBundle),
{
    let mut tape = Tape::new();
    let mut scratch = Tape::new();
    let mut runs = RunSet::start(prep, cfg, active)?;
    let mut day = runs.first_day(prep, cfg);
    let mut since_swap = 0usize;
    while day <= last_day {
        let outs = step_calendar_day(&mut tape, store, member, prep, cfg, &mut runs, day)?;
        for (coin, step) in outs {
            let t = (day - prep.series[coin].start) as usize;
            emit(coin, day, t, extract_bundle(&tape, &step));
        }
        since_swap += 1;
        if since_swap >= SWAP_EVERY {
            runs.detach_onto(&tape, &mut scratch);
            tape.clear();
            core::mem::swap(&mut tape, &mut scratch);
            since_swap = 0;
        }
        day += 1;
    }
    Ok(())
}
