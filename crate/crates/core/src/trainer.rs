//! Cross-learning training loop, gradient verification, ensembling, and the
//! rolling-origin backtest.
//!
//! Training runs truncated backpropagation through time over the engine: per
//! update it samples `J` series without replacement, warm-starts their state
//! from the series beginnings in value mode, cuts the gradient at a uniformly
//! random segment start, unrolls the scheduled number of consecutive days on
//! tape, averages the composite quantile loss over every `(series, day)`
//! anchor in the segment, and applies one adaptive-moment update. The
//! training panel is truncated at the test boundary before anything runs, so
//! no test-period value can influence a checkpoint.
//!
//! Default schedules: batch size 2 through epoch 5 and 4 afterwards;
//! segment lengths 15, 30, 45, 60, 75 and then 75 onwards; updates per epoch
//! chosen by horizon (400 / 175 / 60 for short / week / month scale); learning
//! rate 1e-3 halved every 2 epochs.
//!
//! Ensemble members differ only by seed. Aggregation is the arithmetic mean
//! of member outputs per component (median behind a switch). Interval bounds
//! are reported as produced — bound crossings are counted by the metrics, not
//! repaired.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::ForecastError;
use crate::loss::{composite_loss_node, QuantileSpec};
use crate::metrics::{compute_metrics, EvalPoint, MetricsRow};
use crate::network::{
    prepare_panel, run_inference, run_training_segment, MemberParams, NetworkConfig,
    PreparedPanel, PriceBundle,
};
use crate::panel::{split_test, Day, SeriesPanel, TestView};
use crate::tape::{GradStore, ParamStore, Tape, Tensor};

/// How ensemble member outputs are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Mean,
    Median,
}

/// Epoch-indexed staircase: `(from_epoch, value)` pairs, epochs 1-based, the
/// last reached entry wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule(pub Vec<(usize, usize)>);

impl Schedule {
    pub fn validate(&self, what: &str) -> Result<(), ForecastError> {
        if self.0.is_empty() {
            return Err(ForecastError::Config(format!("{what} schedule is empty")));
        }
        if self.0[0].0 != 1 {
            return Err(ForecastError::Config(format!(
                "{what} schedule must start at epoch 1"
            )));
        }
        for pair in self.0.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(ForecastError::Config(format!(
                    "{what} schedule epochs must increase strictly"
                )));
            }
        }
        if self.0.iter().any(|(_, v)| *v == 0) {
            return Err(ForecastError::Config(format!("{what} schedule values must be positive")));
        }
        Ok(())
    }

    /// Value in force at a 1-based epoch.
    pub fn value_at(&self, epoch: usize) -> usize {
        let mut v = self.0[0].1;
        for &(from, value) in &self.0 {
            if from <= epoch {
                v = value;
            }
        }
        v
    }
}

/// Default updates per epoch for a horizon: the midpoints of 300–500 for
/// day-scale, 150–200 for week-scale, and 50–70 for month-scale horizons.
pub fn default_updates_per_epoch(h: usize) -> usize {
    match h {
        0..=3 => 400,
        4..=14 => 175,
        _ => 60,
    }
}

/// Everything a training run needs besides the panel itself.
#[derive(Debug, Clone)]
pub struct TrainingConfig {
    pub net: NetworkConfig,
    pub quantiles: QuantileSpec,
    /// Id of the series driving the context track.
    pub context_id: String,
    pub epochs: usize,
    /// Series sampled per update (without replacement).
    pub batch_schedule: Schedule,
    /// Consecutive loss-bearing days unrolled per update.
    pub steps_schedule: Schedule,
    pub updates_per_epoch: usize,
    pub learning_rate: f64,
    /// The learning rate halves after every this many epochs.
    pub lr_halve_every: usize,
    pub ensemble_size: usize,
    /// Base seed; member `k` trains with `seed + k`.
    pub seed: u64,
    pub aggregation: Aggregation,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let net = NetworkConfig::default();
        let updates = default_updates_per_epoch(net.h);
        TrainingConfig {
            net,
            quantiles: QuantileSpec::default(),
            context_id: String::from("BTC"),
            epochs: 8,
            batch_schedule: Schedule(vec![(1, 2), (6, 4)]),
            steps_schedule: Schedule(vec![(1, 15), (2, 30), (3, 45), (4, 60), (5, 75)]),
            updates_per_epoch: updates,
            learning_rate: 1e-3,
            lr_halve_every: 2,
            ensemble_size: 5,
            seed: 1,
            aggregation: Aggregation::Mean,
        }
    }
}

impl TrainingConfig {
    /// Defaults with the horizon (and its update budget) switched.
    pub fn for_horizon(h: usize) -> Self {
        let mut cfg = TrainingConfig::default();
        cfg.net.h = h;
        cfg.updates_per_epoch = default_updates_per_epoch(h);
        cfg
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        self.net.validate()?;
        self.quantiles.validate()?;
        self.batch_schedule.validate("batch-size")?;
        self.steps_schedule.validate("steps-per-batch")?;
        if self.epochs == 0 {
            return Err(ForecastError::Config("epochs must be positive".to_string()));
        }
        if self.updates_per_epoch == 0 {
            return Err(ForecastError::Config("updates_per_epoch must be positive".to_string()));
        }
        if self.ensemble_size == 0 {
            return Err(ForecastError::Config("ensemble_size must be positive".to_string()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ForecastError::Config("learning_rate must be positive".to_string()));
        }
        if self.lr_halve_every == 0 {
            return Err(ForecastError::Config("lr_halve_every must be positive".to_string()));
        }
        if self.context_id.is_empty() {
            return Err(ForecastError::Config("context_id must be set".to_string()));
        }
        Ok(())
    }

    /// Learning rate in force at a 1-based epoch.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let halvings = (epoch - 1) / self.lr_halve_every;
        self.learning_rate * crate::math::powf(0.5, halvings as f64)
    }
}

/// One logged training update.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRow {
    pub epoch: usize,
    pub update: usize,
    /// Series sampled this update.
    pub j: usize,
    /// Days unrolled this update.
    pub steps: usize,
    pub lr: f64,
    pub loss: f64,
}

/// A trained member: its parameter tensors plus the full update log.
#[derive(Debug, Clone)]
pub struct TrainedMember {
    pub store: ParamStore,
    pub log: Vec<TrainLogRow>,
}

/// Bias-corrected adaptive-moment optimizer over a parameter store.
struct Adam {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(store: &ParamStore) -> Adam {
        let shapes: Vec<Tensor> =
            store.ids().map(|id| Tensor::zeros(store.get(id).rows, store.get(id).cols)).collect();
        Adam { m: shapes.clone(), v: shapes, t: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    fn step(&mut self, store: &mut ParamStore, grads: &GradStore, lr: f64) {
        self.t += 1;
        let b1t = 1.0 - crate::math::powf(self.beta1, self.t as f64);
        let b2t = 1.0 - crate::math::powf(self.beta2, self.t as f64);
        for (slot, id) in store.ids().enumerate() {
            let g = &grads.get(id).data;
            let m = &mut self.m[slot].data;
            let v = &mut self.v[slot].data;
            let theta = &mut store.get_mut(id).data;
            for i in 0..theta.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mhat = m[i] / b1t;
                let vhat = v[i] / b2t;
                theta[i] -= lr * mhat / (crate::math::sqrt(vhat) + self.eps);
            }
        }
    }
}

/// Draws `k` distinct indices from `0..n`, order random, via a partial
/// Fisher–Yates shuffle.
fn sample_distinct(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Returns the panel cut to its training prefix: coin `i` keeps its first
/// `train_len[i]` days of prices and exogenous values.
pub fn truncate_to_train(
    panel: &SeriesPanel,
    train_len: &[usize],
) -> Result<SeriesPanel, ForecastError> {
    if train_len.len() != panel.coins.len() {
        return Err(ForecastError::Shape {
            context: "training lengths per coin",
            expected: panel.coins.len(),
            got: train_len.len(),
        });
    }
    let mut cut = panel.clone();
    for (coin, &tl) in cut.coins.iter_mut().zip(train_len) {
        if tl == 0 || tl > coin.len() {
            return Err(ForecastError::Config(format!(
                "training length {tl} invalid for series `{}` of {} days",
                coin.id,
                coin.len()
            )));
        }
        coin.prices.truncate(tl);
        for var in &mut coin.exo {
            var.truncate(tl);
        }
    }
    Ok(cut)
}

/// The inclusive calendar-day range from which a training segment for the
/// sampled series may start, such that every sampled series anchors every
/// segment day with a full actual window.
fn segment_day_range(
    prep: &PreparedPanel,
    cfg: &NetworkConfig,
    sampled: &[usize],
    steps: usize,
) -> Result<(i64, i64), ForecastError> {
    let mut lo = i64::MIN;
    let mut hi = i64::MAX;
    for &idx in sampled {
        lo = lo.max(prep.first_forecast_day(idx, cfg));
        hi = hi.min(prep.last_scored_day(idx, cfg));
    }
    let latest_start = hi - (steps as i64 - 1);
    if latest_start < lo {
        return Err(ForecastError::Config(format!(
            "schedule asks for {steps} unrolled days but the sampled series only share {} anchor days",
            (hi - lo + 1).max(0)
        )));
    }
    Ok((lo, latest_start))
}

/// Builds the mean composite loss over a segment's anchors. Returns the loss
/// node and the anchor count.
#[allow(clippy::too_many_arguments)]
fn segment_loss(
    tape: &mut Tape,
    store: &ParamStore,
    member: &MemberParams,
    prep: &PreparedPanel,
    cfg: &NetworkConfig,
    quantiles: &QuantileSpec,
    sampled: &[usize],
    seg_from: i64,
    steps: usize,
    differentiate_prefix: bool,
) -> Result<(crate::tape::NodeId, usize), ForecastError> {
    let anchors = run_training_segment(
        tape,
        store,
        member,
        prep,
        cfg,
        sampled,
        seg_from,
        steps,
        differentiate_prefix,
    )?;
    if anchors.is_empty() {
        return Err(ForecastError::Config(
            "training segment produced no loss anchors".to_string(),
        ));
    }
    let mut losses = Vec::with_capacity(anchors.len());
    for a in &anchors {
        let s = &prep.series[a.coin];
        let lnz = tape.constv(&s.ln_prices[a.t + 1..=a.t + cfg.h]);
        let lvl = tape.broadcast(a.step.ln_level, cfg.h);
        let target = tape.sub(lnz, lvl);
        losses.push(composite_loss_node(
            tape,
            target,
            a.step.point,
            a.step.lower,
            a.step.upper,
            quantiles,
        ));
    }
    let stacked = tape.concat(&losses);
    Ok((tape.mean(stacked), losses.len()))
}

/// Trains one ensemble member on the training prefix of `panel`.
///
/// `train_len` marks, per coin, how many leading days are training data; the
/// panel is cut there before anything else happens, so later days cannot
/// influence the result. The member's own seed drives initialization and
/// sampling. Returns the trained tensors and the per-update log.
pub fn train_member(
    panel: &SeriesPanel,
    train_len: &[usize],
    cfg: &TrainingConfig,
    seed: u64,
) -> Result<TrainedMember, ForecastError> {
    cfg.validate()?;
    let train_panel = truncate_to_train(panel, train_len)?;
    let full_lens: Vec<usize> = train_panel.coins.iter().map(|c| c.len()).collect();
    let prep = prepare_panel(&train_panel, &full_lens, &cfg.context_id, &cfg.net)?;
    let coin_ids: Vec<String> = train_panel.coins.iter().map(|c| c.id.clone()).collect();
    let n_coins = coin_ids.len();

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let member = MemberParams::register(&mut store, &cfg.net, &coin_ids, &mut rng)?;
    let mut adam = Adam::new(&store);
    let mut grads = GradStore::zeros_like(&store);
    let mut tape = Tape::new();
    let mut log = Vec::with_capacity(cfg.epochs * cfg.updates_per_epoch);

    for epoch in 1..=cfg.epochs {
        let j = cfg.batch_schedule.value_at(epoch);
        if j > n_coins {
            return Err(ForecastError::Config(format!(
                "batch size {j} at epoch {epoch} exceeds the {n_coins}-series panel"
            )));
        }
        let steps = cfg.steps_schedule.value_at(epoch);
        let lr = cfg.lr_at(epoch);
        for update in 1..=cfg.updates_per_epoch {
            let sampled = sample_distinct(&mut rng, n_coins, j);
            let (lo, latest) = segment_day_range(&prep, &cfg.net, &sampled, steps)?;
            let seg_from = rng.gen_range(lo..=latest);
            tape.clear();
            let (loss, _) = segment_loss(
                &mut tape,
                &store,
                &member,
                &prep,
                &cfg.net,
                &cfg.quantiles,
                &sampled,
                seg_from,
                steps,
                false,
            )?;
            let loss_val = tape.scalar_value(loss);
            if !loss_val.is_finite() {
                return Err(ForecastError::Diverged { epoch, update });
            }
            grads.reset();
            tape.backward(&store, loss, &mut grads);
            adam.step(&mut store, &grads, lr);
            if !store.all_finite() {
                return Err(ForecastError::Diverged { epoch, update });
            }
            log.push(TrainLogRow { epoch, update, j, steps, lr, loss: loss_val });
        }
    }
    Ok(TrainedMember { store, log })
}

/// Trains the whole ensemble sequentially: member `k` uses `seed + k`.
/// (Callers that want member-level parallelism can call `train_member`
/// directly; members are fully independent.)
pub fn train_ensemble(
    panel: &SeriesPanel,
    train_len: &[usize],
    cfg: &TrainingConfig,
) -> Result<Vec<TrainedMember>, ForecastError> {
    (0..cfg.ensemble_size as u64)
        .map(|k| train_member(panel, train_len, cfg, cfg.seed + k))
        .collect()
}

/// Largest relative disagreement between an analytic and a finite-difference
/// gradient, per tensor.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// `(tensor name, max relative error over its scalars)`.
    pub per_tensor: Vec<(String, f64)>,
    pub max_rel: f64,
}

impl GradCheckReport {
    /// Name of the worst-agreeing tensor.
    pub fn worst(&self) -> &str {
        self.per_tensor
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal))
            .map(|(n, _)| n.as_str())
            .unwrap_or("")
    }
}

/// Compares analytic gradients of the segment loss against central finite
/// differences over every trainable scalar.
///
/// The check runs the full graph — warm-up included — without any gradient
/// cut, so the finite-difference perturbation and the analytic pass see the
/// same dependency structure. `tamper` names a tensor whose analytic
/// gradient is deliberately corrupted first (a planted fault for testing the
/// check itself).
pub fn gradient_check(
    panel: &SeriesPanel,
    cfg: &TrainingConfig,
    seed: u64,
    steps: usize,
    tamper: Option<&str>,
) -> Result<GradCheckReport, ForecastError> {
    cfg.validate()?;
    let lens: Vec<usize> = panel.coins.iter().map(|c| c.len()).collect();
    let prep = prepare_panel(panel, &lens, &cfg.context_id, &cfg.net)?;
    let coin_ids: Vec<String> = panel.coins.iter().map(|c| c.id.clone()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let member = MemberParams::register(&mut store, &cfg.net, &coin_ids, &mut rng)?;
    let sampled: Vec<usize> = (0..coin_ids.len()).collect();
    let (lo, _) = segment_day_range(&prep, &cfg.net, &sampled, steps)?;

    let loss_value = |store: &ParamStore| -> Result<f64, ForecastError> {
        let mut tape = Tape::new();
        let (loss, _) = segment_loss(
            &mut tape,
            store,
            &member,
            &prep,
            &cfg.net,
            &cfg.quantiles,
            &sampled,
            lo,
            steps,
            true,
        )?;
        Ok(tape.scalar_value(loss))
    };

    // Analytic pass over the identical, uncut graph.
    let mut tape = Tape::new();
    let (loss, _) = segment_loss(
        &mut tape,
        &store,
        &member,
        &prep,
        &cfg.net,
        &cfg.quantiles,
        &sampled,
        lo,
        steps,
        true,
    )?;
    let mut grads = GradStore::zeros_like(&store);
    tape.backward(&store, loss, &mut grads);
    if let Some(name) = tamper {
        let id = store
            .id(name)
            .ok_or_else(|| ForecastError::Config(format!("unknown tamper target `{name}`")))?;
        grads.get_mut(id).data[0] += 1.0;
    }

    let ids: Vec<_> = store.ids().collect();
    let mut per_tensor = Vec::with_capacity(ids.len());
    let mut max_rel = 0.0f64;
    for id in ids {
        let name = store.name(id).to_string();
        let len = store.get(id).len();
        let mut tensor_worst = 0.0f64;
        for i in 0..len {
            let theta = store.get(id).data[i];
            let step = 5e-6 * theta.abs().max(1.0);
            store.get_mut(id).data[i] = theta + step;
            let up = loss_value(&store)?;
            store.get_mut(id).data[i] = theta - step;
            let down = loss_value(&store)?;
            store.get_mut(id).data[i] = theta;
            let fd = (up - down) / (2.0 * step);
            let analytic = grads.get(id).data[i];
            let rel = (analytic - fd).abs() / (analytic.abs() + fd.abs()).max(1e-6);
            tensor_worst = tensor_worst.max(rel);
        }
        max_rel = max_rel.max(tensor_worst);
        per_tensor.push((name, tensor_worst));
    }
    Ok(GradCheckReport { per_tensor, max_rel })
}

/// Componentwise combination of member bundles.
pub fn aggregate_bundles(bundles: &[PriceBundle], mode: Aggregation) -> PriceBundle {
    assert!(!bundles.is_empty(), "cannot aggregate zero bundles");
    let h = bundles[0].point.len();
    let combine = |pick: &dyn Fn(&PriceBundle) -> &[f64], k: usize| -> f64 {
        match mode {
            Aggregation::Mean => {
                bundles.iter().map(|b| pick(b)[k]).sum::<f64>() / bundles.len() as f64
            }
            Aggregation::Median => {
                let mut vals: Vec<f64> = bundles.iter().map(|b| pick(b)[k]).collect();
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
                let n = vals.len();
                if n % 2 == 1 {
                    vals[n / 2]
                } else {
                    0.5 * (vals[n / 2 - 1] + vals[n / 2])
                }
            }
        }
    };
    let scalar = |pick: &dyn Fn(&PriceBundle) -> f64| -> f64 {
        match mode {
            Aggregation::Mean => bundles.iter().map(pick).sum::<f64>() / bundles.len() as f64,
            Aggregation::Median => {
                let mut vals: Vec<f64> = bundles.iter().map(pick).collect();
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
                let n = vals.len();
                if n % 2 == 1 {
                    vals[n / 2]
                } else {
                    0.5 * (vals[n / 2 - 1] + vals[n / 2])
                }
            }
        }
    };
    PriceBundle {
        point: (0..h).map(|k| combine(&|b: &PriceBundle| &b.point, k)).collect(),
        lower: (0..h).map(|k| combine(&|b: &PriceBundle| &b.lower, k)).collect(),
        upper: (0..h).map(|k| combine(&|b: &PriceBundle| &b.upper, k)).collect(),
        delta_alpha: scalar(&|b: &PriceBundle| b.delta_alpha),
        level: scalar(&|b: &PriceBundle| b.level),
    }
}

/// One aggregated forecast from one anchor day of the test period.
#[derive(Debug, Clone)]
pub struct ForecastRow {
    /// Panel index of the coin.
    pub coin: usize,
    pub anchor: Day,
    /// Anchor's local index in the coin's series.
    pub t: usize,
    /// Fewer than `h` actuals exist past this anchor; the row is excluded
    /// from accuracy metrics.
    pub truncated: bool,
    pub bundle: PriceBundle,
}

/// Backtest output: the raw aggregated forecast table plus accuracy
/// summaries per coin and pooled.
#[derive(Debug, Clone)]
pub struct BacktestReport {
    pub rows: Vec<ForecastRow>,
    /// Parallel to `panel.coins`; `None` when a coin scored no steps.
    pub per_coin: Vec<Option<MetricsRow>>,
    pub pooled: Option<MetricsRow>,
    /// Per-member pointwise absolute-percentage losses on scored steps,
    /// keyed by coin — the raw material for predictive-ability comparisons.
    pub member_point: Vec<Vec<(usize, usize, Vec<f64>)>>,
}

/// Rolls trained members over `[test_start, test_end]` without retraining:
/// each member runs once from the series beginnings (states warm-started),
/// bundles at test anchors are aggregated across members, and accuracy is
/// scored on anchors with a full actual window.
pub fn backtest(
    panel: &SeriesPanel,
    members: &[ParamStore],
    cfg: &TrainingConfig,
    test_start: Day,
    test_end: Day,
) -> Result<BacktestReport, ForecastError> {
    cfg.validate()?;
    if members.is_empty() {
        return Err(ForecastError::Config("backtest needs at least one member".to_string()));
    }
    let (train_view, test_view) = split_test(panel, test_start, test_end, cfg.net.n, cfg.net.h)?;
    let prep = prepare_panel(panel, &train_view.train_len, &cfg.context_id, &cfg.net)?;
    let coin_ids: Vec<String> = panel.coins.iter().map(|c| c.id.clone()).collect();

    // Anchor lookup per coin: calendar day -> anchor record.
    let wanted: Vec<BTreeMap<i64, (usize, bool)>> = test_view
        .anchors
        .iter()
        .map(|list| list.iter().map(|a| (a.day.0, (a.t, a.truncated))).collect())
        .collect();
    let last_day = test_end.0;

    // (coin, day) -> one bundle per member, in member order.
    let mut collected: BTreeMap<(usize, i64), Vec<PriceBundle>> = BTreeMap::new();
    let active: Vec<usize> = (0..panel.coins.len()).collect();
    for store in members {
        let member = MemberParams::bind(store, &cfg.net, &coin_ids)?;
        run_inference(store, &member, &prep, &cfg.net, &active, last_day, |coin, day, _, b| {
            if wanted[coin].contains_key(&day) {
                collected.entry((coin, day)).or_default().push(b);
            }
        })?;
    }

    let mut rows = Vec::with_capacity(collected.len());
    let mut per_coin_points: Vec<Vec<EvalPoint>> = vec![Vec::new(); panel.coins.len()];
    let mut member_point: Vec<Vec<(usize, usize, Vec<f64>)>> =
        vec![Vec::new(); members.len()];
    for ((coin, day), bundles) in collected {
        if bundles.len() != members.len() {
            return Err(ForecastError::State("a member skipped a test anchor"));
        }
        let (t, truncated) = wanted[coin][&day];
        let agg = aggregate_bundles(&bundles, cfg.aggregation);
        if !truncated {
            let prices = &panel.coins[coin].prices;
            for k in 0..cfg.net.h {
                let actual = prices[t + 1 + k];
                per_coin_points[coin].push(EvalPoint {
                    actual,
                    point: agg.point[k],
                    lower: agg.lower[k],
                    upper: agg.upper[k],
                });
            }
            for (mi, b) in bundles.iter().enumerate() {
                let losses: Vec<f64> = (0..cfg.net.h)
                    .map(|k| {
                        let actual = prices[t + 1 + k];
                        100.0 * ((actual - b.point[k]) / actual).abs()
                    })
                    .collect();
                member_point[mi].push((coin, t, losses));
            }
        }
        rows.push(ForecastRow { coin, anchor: Day(day), t, truncated, bundle: agg });
    }

    let per_coin: Vec<Option<MetricsRow>> =
        per_coin_points.iter().map(|pts| compute_metrics(pts)).collect();
    let pooled_points: Vec<EvalPoint> = per_coin_points.into_iter().flatten().collect();
    let pooled = compute_metrics(&pooled_points);
    Ok(BacktestReport { rows, per_coin, pooled, member_point })
}

/// Aggregated forecast for every coin from one anchor day, using members
/// trained on data strictly before it. Bundles are member means (or medians)
/// of fully warm-started single-member runs.
pub fn forecast_at(
    panel: &SeriesPanel,
    members: &[ParamStore],
    cfg: &TrainingConfig,
    anchor: Day,
) -> Result<Vec<(usize, PriceBundle)>, ForecastError> {
    let report = backtest(panel, members, cfg, anchor, anchor)?;
    Ok(report.rows.into_iter().map(|r| (r.coin, r.bundle)).collect())
}

/// Test-view re-export point for callers that need anchor geometry along
/// with backtest results.
pub fn test_anchors(
    panel: &SeriesPanel,
    cfg: &TrainingConfig,
    test_start: Day,
    test_end: Day,
) -> Result<TestView, ForecastError> {
    let (_, view) = split_test(panel, test_start, test_end, cfg.net.n, cfg.net.h)?;
    Ok(view)
}
