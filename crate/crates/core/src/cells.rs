//! Dilated recurrent cells.
//!
//! The base cell is LSTM-like but fuses two saved states: the most recent one
//! (`t-1`) and a delayed one from `d` steps back (`t-d`). With gate input
//! `u = [x; h_recent; h_delayed]`:
//!
//! ```text
//! f = sigmoid(W_f u + b_f)            fusion gate
//! c_mix = f .* c_recent + (1 - f) .* c_delayed
//! i = sigmoid(W_i u + b_i)            update gate
//! chat = tanh(W_c u + b_c)            candidate
//! o = sigmoid(W_o u + b_o)            output gate
//! c_new = (1 - i) .* c_mix + i .* chat
//! h_new = o .* tanh(c_new)
//! ```
//!
//! The attentive variant runs two such cells: cell A sees the raw input and
//! its new hidden state is projected to an attention vector `a = 2 *
//! sigmoid(m)` in (0, 2); cell B then consumes `x .* a`, so the pair learns
//! to amplify or damp individual input components per step. The projection
//! starts at zero, so `a = 1` and the pair behaves exactly like cell B alone
//! until training moves it.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::tape::{NodeId, ParamId, ParamStore, Tape, Tensor};

/// Draws a `rows x cols` matrix with entries uniform in
/// `[-1/sqrt(cols), 1/sqrt(cols)]`.
pub(crate) fn uniform_fan_in(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor {
    let bound = 1.0 / crate::math::sqrt(cols as f64);
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor { rows, cols, data }
}

/// Parameter handles for one dilated cell.
#[derive(Debug, Clone, Copy)]
pub struct CellParams {
    pub w_f: ParamId,
    pub b_f: ParamId,
    pub w_i: ParamId,
    pub b_i: ParamId,
    pub w_c: ParamId,
    pub b_c: ParamId,
    pub w_o: ParamId,
    pub b_o: ParamId,
    pub in_dim: usize,
    pub hidden: usize,
}

impl CellParams {
    /// Registers the four gate matrices (`hidden x (in_dim + 2*hidden)`) and
    /// zero biases under `<prefix>.w_f`, `<prefix>.b_f`, ...
    pub fn register(
        params: &mut ParamStore,
        prefix: &str,
        in_dim: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> CellParams {
        let cols = in_dim + 2 * hidden;
        let mut ids = [ParamId(0); 8];
        for (slot, gate) in GATE_NAMES.iter().enumerate() {
            ids[2 * slot] =
                params.add(format!("{prefix}.w_{gate}"), uniform_fan_in(rng, hidden, cols));
            ids[2 * slot + 1] = params.add(format!("{prefix}.b_{gate}"), Tensor::zeros(hidden, 1));
        }
        let [w_f, b_f, w_i, b_i, w_c, b_c, w_o, b_o] = ids;
        CellParams { w_f, b_f, w_i, b_i, w_c, b_c, w_o, b_o, in_dim, hidden }
    }
}

/// Rolling state of one cell on one series: the last `d` hidden/cell pairs,
/// newest at the back. Slots that have not been produced yet read as zeros,
/// so the first `d` steps of a series see a zero delayed state.
#[derive(Debug, Clone)]
pub struct CellState {
    d: usize,
    hidden: usize,
    ring: VecDeque<(NodeId, NodeId)>,
}

impl CellState {
    pub fn fresh(d: usize, hidden: usize) -> CellState {
        assert!(d >= 1, "dilation must be at least 1");
        CellState { d, hidden, ring: VecDeque::with_capacity(d + 1) }
    }

    pub fn dilation(&self) -> usize {
        self.d
    }

    /// `(h_recent, c_recent, h_delayed, c_delayed)` as tape nodes, minting
    /// zeros for slots that do not exist yet.
    pub fn slots(&self, tape: &mut Tape) -> (NodeId, NodeId, NodeId, NodeId) {
        let zero = |tape: &mut Tape| tape.zeros(self.hidden);
        let (h_recent, c_recent) = match self.ring.back() {
            Some(&(h, c)) => (h, c),
            None => {
                let z = zero(tape);
                (z, z)
            }
        };
        let (h_delayed, c_delayed) = if self.ring.len() == self.d {
            *self.ring.front().unwrap()
        } else {
            let z = zero(tape);
            (z, z)
        };
        (h_recent, c_recent, h_delayed, c_delayed)
    }

    fn push(&mut self, h: NodeId, c: NodeId) {
        self.ring.push_back((h, c));
        if self.ring.len() > self.d {
            self.ring.pop_front();
        }
    }

    /// Most recent hidden state, if any step has run.
    pub fn last_h(&self) -> Option<NodeId> {
        self.ring.back().map(|&(h, _)| h)
    }

    /// Re-interns the saved states as constants on `fresh` — used to truncate
    /// gradients at an unroll boundary while keeping the recurrence values.
    pub fn detach_onto(&mut self, source: &Tape, fresh: &mut Tape) {
        for (h, c) in self.ring.iter_mut() {
            *h = fresh.constv(source.value(*h));
            *c = fresh.constv(source.value(*c));
        }
    }

    /// Same as [`CellState::detach_onto`] but staying on one tape: the saved
    /// states become constants, so a later backward pass stops here.
    pub fn detach_in_place(&mut self, tape: &mut Tape) {
        for (h, c) in self.ring.iter_mut() {
            let hv: Vec<f64> = tape.value(*h).to_vec();
            *h = tape.constv(&hv);
            let cv: Vec<f64> = tape.value(*c).to_vec();
            *c = tape.constv(&cv);
        }
    }
}

/// One step of the dilated cell. Returns the new hidden state and advances
/// `state`.
pub fn drnn_step(
    tape: &mut Tape,
    params: &ParamStore,
    cell: &CellParams,
    x: NodeId,
    state: &mut CellState,
) -> NodeId {
    debug_assert_eq!(tape.len_of(x), cell.in_dim, "cell input width mismatch");
    let (h_recent, c_recent, h_delayed, c_delayed) = state.slots(tape);
    let u = tape.concat(&[x, h_recent, h_delayed]);

    let f = {
        let a = tape.affine(params, cell.w_f, Some(cell.b_f), u);
        tape.sigmoid(a)
    };
    let c_mix = {
        let keep = tape.mul(f, c_recent);
        let inv = tape.axpb(f, -1.0, 1.0);
        let reach = tape.mul(inv, c_delayed);
        tape.add(keep, reach)
    };
    let i = {
        let a = tape.affine(params, cell.w_i, Some(cell.b_i), u);
        tape.sigmoid(a)
    };
    let chat = {
        let a = tape.affine(params, cell.w_c, Some(cell.b_c), u);
        tape.tanh(a)
    };
    let o = {
        let a = tape.affine(params, cell.w_o, Some(cell.b_o), u);
        tape.sigmoid(a)
    };
    let c_new = {
        let inv = tape.axpb(i, -1.0, 1.0);
        let hold = tape.mul(inv, c_mix);
        let inject = tape.mul(i, chat);
        tape.add(hold, inject)
    };
    let h_new = {
        let ct = tape.tanh(c_new);
        tape.mul(o, ct)
    };
    state.push(h_new, c_new);
    h_new
}

/// Parameter handles for an attentive pair: cell A, the attention projection
/// (`in_dim x hidden`, zero-initialized so attention starts neutral), and
/// cell B.
#[derive(Debug, Clone, Copy)]
pub struct AdCellParams {
    pub cell_a: CellParams,
    pub att_w: ParamId,
    pub att_b: ParamId,
    pub cell_b: CellParams,
}

impl AdCellParams {
    pub fn register(
        params: &mut ParamStore,
        prefix: &str,
        in_dim: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> AdCellParams {
        let cell_a = CellParams::register(params, &format!("{prefix}.cellA"), in_dim, hidden, rng);
        let att_w = params.add(format!("{prefix}.att.w"), Tensor::zeros(in_dim, hidden));
        let att_b = params.add(format!("{prefix}.att.b"), Tensor::zeros(in_dim, 1));
        let cell_b = CellParams::register(params, &format!("{prefix}.cellB"), in_dim, hidden, rng);
        AdCellParams { cell_a, att_w, att_b, cell_b }
    }
}

/// Per-series state for an attentive pair.
#[derive(Debug, Clone)]
pub struct AdCellState {
    pub a: CellState,
    pub b: CellState,
}

impl AdCellState {
    pub fn fresh(d: usize, hidden: usize) -> AdCellState {
        AdCellState { a: CellState::fresh(d, hidden), b: CellState::fresh(d, hidden) }
    }

    pub fn detach_onto(&mut self, source: &Tape, fresh: &mut Tape) {
        self.a.detach_onto(source, fresh);
        self.b.detach_onto(source, fresh);
    }

    pub fn detach_in_place(&mut self, tape: &mut Tape) {
        self.a.detach_in_place(tape);
        self.b.detach_in_place(tape);
    }
}

/// One step of the attentive pair: cell A reads the raw input, its hidden
/// state is projected to the attention vector `a = 2 * sigmoid(m)`, and cell
/// B consumes `x .* a`. Returns cell B's new hidden state and the attention
/// vector.
pub fn adrnn_step(
    tape: &mut Tape,
    params: &ParamStore,
    cell: &AdCellParams,
    x: NodeId,
    state: &mut AdCellState,
) -> (NodeId, NodeId) {
    let h_a = drnn_step(tape, params, &cell.cell_a, x, &mut state.a);
    let m = tape.affine(params, cell.att_w, Some(cell.att_b), h_a);
    let att = {
        let s = tape.sigmoid(m);
        tape.axpb(s, 2.0, 0.0)
    };
    let x_b = tape.mul(x, att);
    let h_b = drnn_step(tape, params, &cell.cell_b, x_b, &mut state.b);
    (h_b, att)
}

/// Human-readable gate names in registration order, used by checkpoints and
/// diagnostics.
pub const GATE_NAMES: [&str; 4] = ["f", "i", "c", "o"];

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Independent scalar re-implementation of the cell recurrence, written
    /// directly from the gate equations with its own state handling. The tape
    /// version must agree with it to near machine precision.
    struct OracleCell {
        w: [Vec<f64>; 4], // f, i, c, o — row-major hidden x (in + 2*hidden)
        b: [Vec<f64>; 4],
        in_dim: usize,
        hidden: usize,
        d: usize,
        past: VecDeque<(Vec<f64>, Vec<f64>)>,
    }

    impl OracleCell {
        fn sig(x: f64) -> f64 {
            1.0 / (1.0 + (-x).exp())
        }

        fn gate(&self, g: usize, u: &[f64]) -> Vec<f64> {
            let cols = self.in_dim + 2 * self.hidden;
            (0..self.hidden)
                .map(|r| {
                    self.b[g][r]
                        + u.iter()
                            .enumerate()
                            .map(|(c, v)| self.w[g][r * cols + c] * v)
                            .sum::<f64>()
                })
                .collect()
        }

        fn step(&mut self, x: &[f64]) -> Vec<f64> {
            let zeros = vec![0.0; self.hidden];
            let (h_rec, c_rec) = self.past.back().cloned().unwrap_or((zeros.clone(), zeros.clone()));
            let (h_del, c_del) = if self.past.len() == self.d {
                self.past.front().cloned().unwrap()
            } else {
                (zeros.clone(), zeros)
            };
            let mut u = x.to_vec();
            u.extend_from_slice(&h_rec);
            u.extend_from_slice(&h_del);
            let f: Vec<f64> = self.gate(0, &u).iter().map(|v| Self::sig(*v)).collect();
            let i: Vec<f64> = self.gate(1, &u).iter().map(|v| Self::sig(*v)).collect();
            let chat: Vec<f64> = self.gate(2, &u).iter().map(|v| v.tanh()).collect();
            let o: Vec<f64> = self.gate(3, &u).iter().map(|v| Self::sig(*v)).collect();
            let mut c_new = vec![0.0; self.hidden];
            let mut h_new = vec![0.0; self.hidden];
            for k in 0..self.hidden {
                let c_mix = f[k] * c_rec[k] + (1.0 - f[k]) * c_del[k];
                c_new[k] = (1.0 - i[k]) * c_mix + i[k] * chat[k];
                h_new[k] = o[k] * c_new[k].tanh();
            }
            self.past.push_back((h_new.clone(), c_new.clone()));
            if self.past.len() > self.d {
                self.past.pop_front();
            }
            h_new
        }
    }

    fn oracle_from(params: &ParamStore, cell: &CellParams, d: usize) -> OracleCell {
        let grab = |id: ParamId| params.get(id).data.clone();
        OracleCell {
            w: [grab(cell.w_f), grab(cell.w_i), grab(cell.w_c), grab(cell.w_o)],
            b: [grab(cell.b_f), grab(cell.b_i), grab(cell.b_c), grab(cell.b_o)],
            in_dim: cell.in_dim,
            hidden: cell.hidden,
            d,
            past: VecDeque::new(),
        }
    }

    fn random_inputs(rng: &mut ChaCha12Rng, steps: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..steps)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect())
            .collect()
    }

    #[test]
    fn tape_cell_matches_the_scalar_oracle() {
        for seed in 0..10u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut params = ParamStore::new();
            let cell = CellParams::register(&mut params, "c", 3, 4, &mut rng);
            // Non-zero biases to exercise every term.
            for id in [cell.b_f, cell.b_i, cell.b_c, cell.b_o] {
                for v in &mut params.get_mut(id).data {
                    *v = rng.gen_range(-0.5..0.5);
                }
            }
            let mut oracle = oracle_from(&params, &cell, 2);
            let mut tape = Tape::new();
            let mut state = CellState::fresh(2, 4);
            for x in random_inputs(&mut rng, 9, 3) {
                let xn = tape.constv(&x);
                let h = drnn_step(&mut tape, &params, &cell, xn, &mut state);
                let want = oracle.step(&x);
                for (a, b) in tape.value(h).iter().zip(&want) {
                    assert!((a - b).abs() < 1e-12, "seed {seed}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn attentive_pair_with_neutral_attention_equals_plain_cell_b() {
        // The attention projection registers as zeros, so a = 1 exactly and
        // cell B must see the raw input: bit-for-bit equality.
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut params = ParamStore::new();
        let ad = AdCellParams::register(&mut params, "ad", 3, 4, &mut rng);

        let mut tape = Tape::new();
        let mut paired = AdCellState::fresh(2, 4);
        let mut plain = CellState::fresh(2, 4);
        let mut rng2 = ChaCha12Rng::seed_from_u64(8);
        for x in random_inputs(&mut rng2, 7, 3) {
            let xn = tape.constv(&x);
            let (h_pair, att) = adrnn_step(&mut tape, &params, &ad, xn, &mut paired);
            let h_plain = drnn_step(&mut tape, &params, &ad.cell_b, xn, &mut plain);
            assert!(tape.value(att).iter().all(|a| *a == 1.0));
            let lhs: Vec<u64> = tape.value(h_pair).iter().map(|v| v.to_bits()).collect();
            let rhs: Vec<u64> = tape.value(h_plain).iter().map(|v| v.to_bits()).collect();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn attention_stays_inside_the_open_interval() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut params = ParamStore::new();
        let ad = AdCellParams::register(&mut params, "ad", 3, 4, &mut rng);
        // Randomize the projection so attention actually moves.
        for id in [ad.att_w, ad.att_b] {
            for v in &mut params.get_mut(id).data {
                *v = rng.gen_range(-3.0..3.0);
            }
        }
        let mut tape = Tape::new();
        let mut state = AdCellState::fresh(2, 4);
        let mut moved = false;
        for x in random_inputs(&mut rng, 12, 3) {
            let xn = tape.constv(&x);
            let (_, att) = adrnn_step(&mut tape, &params, &ad, xn, &mut state);
            for a in tape.value(att) {
                assert!(*a > 0.0 && *a < 2.0, "attention left (0, 2): {a}");
                moved |= (*a - 1.0).abs() > 0.05;
            }
        }
        assert!(moved, "attention never deviated from neutral");
    }

    #[test]
    fn unit_dilation_reduces_to_the_equal_state_fusion() {
        // With d = 1 the recent and delayed slots are the same state, so
        // c_mix collapses to that state regardless of the fusion gate. An
        // oracle with c_mix hard-wired to c_recent must agree.
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let mut params = ParamStore::new();
        let cell = CellParams::register(&mut params, "c", 2, 3, &mut rng);
        let mut tape = Tape::new();
        let mut state = CellState::fresh(1, 3);

        let mut h_prev = vec![0.0; 3];
        let mut c_prev = vec![0.0; 3];
        let cols = 2 + 2 * 3;
        let gate = |id: ParamId, bid: ParamId, u: &[f64], params: &ParamStore| -> Vec<f64> {
            let w = params.get(id);
            let b = params.get(bid);
            (0..3)
                .map(|r| {
                    b.data[r]
                        + u.iter().enumerate().map(|(c, v)| w.data[r * cols + c] * v).sum::<f64>()
                })
                .collect()
        };
        for x in random_inputs(&mut rng, 6, 2) {
            let xn = tape.constv(&x);
            let h = drnn_step(&mut tape, &params, &cell, xn, &mut state);

            let mut u = x.clone();
            u.extend_from_slice(&h_prev);
            u.extend_from_slice(&h_prev); // equal slots
            let i: Vec<f64> = gate(cell.w_i, cell.b_i, &u, &params)
                .iter()
                .map(|v| 1.0 / (1.0 + (-v).exp()))
                .collect();
            let chat: Vec<f64> =
                gate(cell.w_c, cell.b_c, &u, &params).iter().map(|v| v.tanh()).collect();
            let o: Vec<f64> = gate(cell.w_o, cell.b_o, &u, &params)
                .iter()
                .map(|v| 1.0 / (1.0 + (-v).exp()))
                .collect();
            for k in 0..3 {
                // Fusion gate omitted entirely: c_mix == c_prev.
                c_prev[k] = (1.0 - i[k]) * c_prev[k] + i[k] * chat[k];
            }
            h_prev = (0..3).map(|k| o[k] * c_prev[k].tanh()).collect();
            for (a, b) in tape.value(h).iter().zip(&h_prev) {
                assert!((a - b).abs() < 1e-12);
            }
            c_prev = (0..3)
                .map(|k| {
                    // Track the tape's own c for the next round to avoid
                    // drift in the comparison itself.
                    c_prev[k]
                })
                .collect();
        }
    }

    #[test]
    fn perturbations_travel_through_the_delayed_wiring() {
        // Cut the recent path: zero every gate column that reads h_recent and
        // saturate the fusion gate so c_mix = c_delayed exactly. A change to
        // x at step t must then reach h at t and t+2, but not t+1 or t+3.
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        let mut params = ParamStore::new();
        let cell = CellParams::register(&mut params, "c", 2, 3, &mut rng);
        let (in_dim, hidden, d) = (2usize, 3usize, 2usize);
        let cols = in_dim + 2 * hidden;
        for w in [cell.w_f, cell.w_i, cell.w_c, cell.w_o] {
            let t = params.get_mut(w);
            for r in 0..hidden {
                for c in in_dim..in_dim + hidden {
                    t.data[r * cols + c] = 0.0;
                }
            }
        }
        // sigmoid(-800) underflows to exactly 0, so f = 0 and c_mix is the
        // delayed cell state with no recent contribution at all.
        for v in &mut params.get_mut(cell.b_f).data {
            *v = -800.0;
        }

        let run = |params: &ParamStore, inputs: &[Vec<f64>]| -> Vec<Vec<f64>> {
            let mut tape = Tape::new();
            let mut state = CellState::fresh(d, hidden);
            inputs
                .iter()
                .map(|x| {
                    let xn = tape.constv(x);
                    let h = drnn_step(&mut tape, params, &cell, xn, &mut state);
                    tape.value(h).to_vec()
                })
                .collect()
        };

        let inputs = random_inputs(&mut rng, 8, in_dim);
        let base = run(&params, &inputs);
        let mut poked = inputs.clone();
        poked[3][0] += 0.25;
        poked[3][1] -= 0.5;
        let alt = run(&params, &poked);

        let delta = |t: usize| -> f64 {
            base[t].iter().zip(&alt[t]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        assert_eq!(delta(0), 0.0);
        assert_eq!(delta(2), 0.0);
        assert!(delta(3) > 1e-6, "no effect at the perturbed step");
        assert_eq!(delta(4), 0.0, "recent path not fully cut");
        assert!(delta(5) > 1e-9, "delayed wiring carried nothing to t+2");
        assert_eq!(delta(6), 0.0);
        assert!(delta(7) > 1e-12);
    }

    #[test]
    fn cold_start_slots_read_as_zeros() {
        let state = CellState::fresh(3, 4);
        let mut tape = Tape::new();
        let (h_r, c_r, h_d, c_d) = state.slots(&mut tape);
        for id in [h_r, c_r, h_d, c_d] {
            assert_eq!(tape.value(id), &[0.0; 4]);
        }
    }

    #[test]
    fn detaching_preserves_state_values_onto_a_fresh_tape() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut params = ParamStore::new();
        let cell = CellParams::register(&mut params, "c", 2, 3, &mut rng);
        let mut tape = Tape::new();
        let mut state = CellState::fresh(2, 3);
        let mut last = Vec::new();
        for x in random_inputs(&mut rng, 5, 2) {
            let xn = tape.constv(&x);
            let h = drnn_step(&mut tape, &params, &cell, xn, &mut state);
            last = tape.value(h).to_vec();
        }
        let mut fresh = Tape::new();
        state.detach_onto(&tape, &mut fresh);
        tape.clear();
        let (h_r, _, h_dl, _) = state.slots(&mut fresh);
        assert_eq!(fresh.value(h_r), &last[..]);
        assert_eq!(fresh.len_of(h_dl), 3);
    }

    #[test]
    fn gradients_flow_through_an_unrolled_cell() {
        // Differentiate a 6-step unroll against finite differences for a few
        // parameters of each gate matrix and bias.
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let mut params = ParamStore::new();
        let cell = CellParams::register(&mut params, "c", 2, 3, &mut rng);
        let inputs = random_inputs(&mut rng, 6, 2);

        let run = |params: &ParamStore| -> (f64, Tape, NodeId) {
            let mut tape = Tape::new();
            let mut state = CellState::fresh(2, 3);
            let mut hs = Vec::new();
            for x in &inputs {
                let xn = tape.constv(x);
                hs.push(drnn_step(&mut tape, params, &cell, xn, &mut state));
            }
            let cat = tape.concat(&hs);
            let sq = tape.mul(cat, cat);
            let loss = tape.mean(sq);
            (tape.scalar_value(loss), tape, loss)
        };

        let (_, mut tape, loss) = run(&params);
        let mut grads = crate::tape::GradStore::zeros_like(&params);
        tape.backward(&params, loss, &mut grads);

        for id in [cell.w_f, cell.w_i, cell.w_c, cell.w_o, cell.b_f, cell.b_o] {
            let len = params.get(id).len();
            for k in [0, len / 2, len - 1] {
                let orig = params.get(id).data[k];
                let eps = 1e-6;
                params.get_mut(id).data[k] = orig + eps;
                let up = run(&params).0;
                params.get_mut(id).data[k] = orig - eps;
                let down = run(&params).0;
                params.get_mut(id).data[k] = orig;
                let fd = (up - down) / (2.0 * eps);
                let an = grads.get(id).data[k];
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-9);
                assert!(rel < 1e-5, "{}[{k}]: analytic {an}, numeric {fd}", params.name(id));
            }
        }
    }
}
