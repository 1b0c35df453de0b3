use super::step::*;
use super::*;
use crate::autodiff::{Tape, Tensor, Var};
use crate::Error;

fn params(config: &ReaderConfig, vocab: usize, seed: u64) -> ModelParams {
    ModelParams::init(config, vocab, seed).unwrap()
}

fn vector(t: &mut Tape, v: &[f64]) -> Var {
    t.constant_vector(v.to_vec()).unwrap()
}

fn scalar(t: &mut Tape, v: f64) -> Var {
    t.constant_scalar(v).unwrap()
}

// Plain-arithmetic oracles, independent of the tape.
mod oracle {
    pub fn matvec(w: &[f64], rows: usize, x: &[f64]) -> Vec<f64> {
        let cols = x.len();
        assert_eq!(w.len(), rows * cols);
        (0..rows)
            .map(|r| (0..cols).map(|c| w[r * cols + c] * x[c]).sum())
            .collect()
    }

    pub fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    pub struct Gru<'a> {
        pub get: &'a dyn Fn(&str) -> Vec<f64>,
        pub prefix: &'a str,
    }

    impl Gru<'_> {
        pub fn step(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
            let n = h.len();
            let p = |s: &str| (self.get)(&format!("{}.{}", self.prefix, s));
            let pre = |w: &str, u: &str| -> Vec<f64> {
                let wx = matvec(&p(w), n, x);
                let uh = matvec(&p(u), n, h);
                (0..n).map(|i| wx[i] + uh[i]).collect()
            };
            let zp = pre("wz", "uz");
            let rp = pre("wr", "ur");
            let (bz, br, bn, bhn) = (p("bz"), p("br"), p("bn"), p("bhn"));
            let wnx = matvec(&p("wn"), n, x);
            let unh = matvec(&p("un"), n, h);
            (0..n)
                .map(|i| {
                    let z = sig(zp[i] + bz[i]);
                    let r = sig(rp[i] + br[i]);
                    let cand = (wnx[i] + bn[i] + r * (unh[i] + bhn[i])).tanh();
                    (1.0 - z) * cand + z * h[i]
                })
                .collect()
        }
    }
}

#[test]
fn pre_recurrent_of_zero_inputs_is_zero() {
    let c = ReaderConfig::uniform(2, 4);
    let p = params(&c, 3, 1);
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let h = vector(&mut t, &[0.0; 4]);
    let x = vector(&mut t, &[0.0; 4]);
    let ht = pre_recurrent(&mut t, &pv, h, x).unwrap();
    assert_eq!(t.data(ht), &[0.0; 4]);
}

#[test]
fn pre_recurrent_with_zero_weights_is_zero() {
    let c = ReaderConfig::uniform(2, 3);
    let mut p = params(&c, 3, 1);
    p.set("pre.w", Tensor::zeros(&[3, 3])).unwrap();
    p.set("pre.u", Tensor::zeros(&[3, 3])).unwrap();
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let h = vector(&mut t, &[0.4, -0.9, 0.2]);
    let x = vector(&mut t, &[1.5, 2.0, -3.0]);
    let ht = pre_recurrent(&mut t, &pv, h, x).unwrap();
    assert_eq!(t.data(ht), &[0.0; 3]);
}

#[test]
fn pre_recurrent_matches_hand_evaluation() {
    let mut c = ReaderConfig::uniform(2, 3);
    c.embed_dim = 2;
    let p = params(&c, 3, 7);
    let hp = [0.3, -0.6, 0.9];
    let xv = [1.2, -0.4];
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let h = vector(&mut t, &hp);
    let x = vector(&mut t, &xv);
    let ht = pre_recurrent(&mut t, &pv, h, x).unwrap();
    let wh = oracle::matvec(p.get("pre.w").data(), 3, &hp);
    let ux = oracle::matvec(p.get("pre.u").data(), 3, &xv);
    for i in 0..3 {
        let expected = (wh[i] + ux[i]).tanh();
        assert!((t.data(ht)[i] - expected).abs() < 1e-14);
        assert!(t.data(ht)[i].abs() < 1.0);
    }
}

#[test]
fn gates_at_zero_vectors_are_half_and_quarter() {
    let c = ReaderConfig::uniform(2, 3);
    let mut p = params(&c, 3, 1);
    p.set("gate.phi_e", Tensor::zeros(&[3])).unwrap();
    p.set("gate.phi_r", Tensor::zeros(&[3])).unwrap();
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let ht = vector(&mut t, &[0.2, -0.7, 0.5]);
    let (e, r) = entity_and_reference_gates(&mut t, &pv, ht).unwrap();
    assert_eq!(t.scalar(e), 0.5);
    assert_eq!(t.scalar(r), 0.25);
}

#[test]
fn gates_saturate_for_large_negative_logit() {
    let c = ReaderConfig::uniform(2, 2);
    let mut p = params(&c, 3, 1);
    p.set("gate.phi_e", Tensor::vector(vec![-500.0, 0.0]).unwrap()).unwrap();
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let ht = vector(&mut t, &[0.9, 0.1]);
    let (e, r) = entity_and_reference_gates(&mut t, &pv, ht).unwrap();
    assert!(t.scalar(e) < 1e-100);
    assert!(t.scalar(r) <= t.scalar(e));
}

#[test]
fn reference_gate_ratio_is_reference_sigmoid() {
    let c = ReaderConfig::uniform(2, 4);
    let p = params(&c, 3, 11);
    let hv = [0.1, -0.8, 0.35, 0.6];
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let ht = vector(&mut t, &hv);
    let (e, r) = entity_and_reference_gates(&mut t, &pv, ht).unwrap();
    let phi_r: f64 = p.get("gate.phi_r").data().iter().zip(hv).map(|(a, b)| a * b).sum();
    assert!((t.scalar(r) / t.scalar(e) - oracle::sig(phi_r)).abs() < 1e-14);
}

fn attention_params(bias: f64) -> ModelParams {
    let c = ReaderConfig::uniform(2, 2);
    let mut p = params(&c, 3, 1);
    p.set("attn.bias", Tensor::scalar(bias).unwrap()).unwrap();
    p
}

#[test]
fn attention_is_zero_without_reference() {
    let p = attention_params(0.0);
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let ht = vector(&mut t, &[0.4, 0.4]);
    let k1 = vector(&mut t, &[1.0, 2.0]);
    let k2 = vector(&mut t, &[-1.0, 0.5]);
    let r = scalar(&mut t, 0.0);
    let a = memory_attention(&mut t, &pv, ht, &[k1, k2], r).unwrap();
    assert_eq!(t.data(a.alpha), &[0.0, 0.0]);
}

#[test]
fn attention_mass_goes_to_null_for_very_negative_bias() {
    let p = attention_params(-500.0);
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let ht = vector(&mut t, &[0.4, 0.4]);
    let k1 = vector(&mut t, &[1.0, 2.0]);
    let k2 = vector(&mut t, &[-1.0, 0.5]);
    let r = scalar(&mut t, 1.0);
    let a = memory_attention(&mut t, &pv, ht, &[k1, k2], r).unwrap();
    assert!(t.data(a.alpha).iter().all(|&v| v < 1e-100));
}

#[test]
fn attention_with_unit_logits_matches_softmax_oracle() {
    // Make the query network output exactly q = (1, 0): zero output weights
    // and bias (1, 0). Keys (1, 5) and (1, -3) then both score 1.
    let c = ReaderConfig::uniform(2, 2);
    let mut p = params(&c, 3, 1);
    p.set("query.w2", Tensor::zeros(&[2, 2])).unwrap();
    p.set("query.b2", Tensor::vector(vec![1.0, 0.0]).unwrap()).unwrap();
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let ht = vector(&mut t, &[0.3, -0.2]);
    let k1 = vector(&mut t, &[1.0, 5.0]);
    let k2 = vector(&mut t, &[1.0, -3.0]);
    let r = scalar(&mut t, 1.0);
    let a = memory_attention(&mut t, &pv, ht, &[k1, k2], r).unwrap();
    let e = 1f64.exp();
    let expected = e / (2.0 * e + 1.0);
    for &v in t.data(a.alpha) {
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.4223).abs() < 1e-4);
    }
    let total: f64 = t.data(a.alpha).iter().sum();
    assert!(total < 1.0);
}

#[test]
fn update_gate_is_clipped_by_twice_salience() {
    let mut t = Tape::new();
    let alpha = vector(&mut t, &[0.9]);
    let s = vector(&mut t, &[0.05]);
    let e = scalar(&mut t, 1.0);
    let g = update_overwrite_gates(&mut t, alpha, s, e, 1.0, None).unwrap();
    assert_eq!(t.data(g.u), &[0.1]);
}

#[test]
fn fresh_memory_must_overwrite() {
    let mut t = Tape::new();
    let alpha = vector(&mut t, &[0.4, 0.3]);
    let s = vector(&mut t, &[0.0, 0.0]);
    let e = scalar(&mut t, 0.8);
    let g = update_overwrite_gates(&mut t, alpha, s, e, 1.0, None).unwrap();
    assert_eq!(t.data(g.u), &[0.0, 0.0]);
    assert_eq!(t.scalar(g.overwrite_total), 0.8);
    let o: f64 = t.data(g.o).iter().sum();
    assert!((o - 0.8).abs() < 1e-15);
}

#[test]
fn deterministic_overwrite_prefers_low_salience() {
    let mut t = Tape::new();
    let alpha = vector(&mut t, &[0.0, 0.0]);
    let s = vector(&mut t, &[0.2, 0.8]);
    let e = scalar(&mut t, 1.0);
    let g = update_overwrite_gates(&mut t, alpha, s, e, 0.1, None).unwrap();
    // softmax((-2, -8))
    let expected0 = 1.0 / (1.0 + (-6f64).exp());
    assert!((t.data(g.o)[0] - expected0).abs() < 1e-15);
    assert!((t.data(g.o)[0] - 0.9975).abs() < 1e-4);
    assert!((t.data(g.o)[1] - 0.0025).abs() < 1e-4);
    for i in 0..2 {
        let sum = t.data(g.u)[i] + t.data(g.o)[i] + t.data(g.copy)[i];
        assert!((sum - 1.0).abs() < 1e-15);
    }
}

#[test]
fn gumbel_noise_shifts_overwrite_choice() {
    let mut t = Tape::new();
    let alpha = vector(&mut t, &[0.0, 0.0]);
    let s = vector(&mut t, &[0.2, 0.8]);
    let e = scalar(&mut t, 1.0);
    let g = update_overwrite_gates(&mut t, alpha, s, e, 0.1, Some(&[0.0, 10.0])).unwrap();
    assert!(t.data(g.o)[1] > 0.99);
}

fn gates(t: &mut Tape, u: &[f64], o: &[f64], copy: &[f64]) -> WriteGates {
    let total: f64 = o.iter().sum();
    WriteGates {
        u: vector(t, u),
        o: vector(t, o),
        copy: vector(t, copy),
        overwrite_total: scalar(t, total),
    }
}

#[test]
fn salience_step_examples() {
    let c = ReaderConfig::default();
    let mut t = Tape::new();

    let s0 = vector(&mut t, &[0.0]);
    let g = gates(&mut t, &[0.0], &[1.0], &[0.0]);
    let e = scalar(&mut t, 1.0);
    let (_, s) = salience_step(&mut t, s0, &g, e, &c).unwrap();
    assert_eq!(t.data(s), &[1.0]);

    let s0 = vector(&mut t, &[0.5]);
    let g = gates(&mut t, &[0.0], &[0.0], &[1.0]);
    let e = scalar(&mut t, 0.0);
    let (lambda, s) = salience_step(&mut t, s0, &g, e, &c).unwrap();
    assert!((t.scalar(lambda) - 0.977159968434246).abs() < 1e-12);
    assert!((t.data(s)[0] - 0.5 * 0.5f64.powf(1.0 / 30.0)).abs() < 1e-15);
    assert!((t.data(s)[0] - 0.488580).abs() < 1e-6);

    let s0 = vector(&mut t, &[0.5]);
    let g = gates(&mut t, &[0.2], &[0.1], &[0.7]);
    let e = scalar(&mut t, 1.0);
    let (_, s) = salience_step(&mut t, s0, &g, e, &c).unwrap();
    let expected = 0.5f64.powf(0.25) * 0.7 * 0.5 + 0.3;
    assert!((t.data(s)[0] - expected).abs() < 1e-15);
    assert!((t.data(s)[0] - 0.594314).abs() < 1e-6);
}

fn memory_setup(seed: u64) -> (ReaderConfig, ModelParams) {
    let mut c = ReaderConfig::uniform(2, 3);
    c.key_dim = 2;
    c.value_dim = 4;
    (c.clone(), params(&c, 3, seed))
}

#[test]
fn copy_only_leaves_memory_unchanged() {
    let (_, p) = memory_setup(3);
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let ht = vector(&mut t, &[0.2, 0.1, -0.3]);
    let k = [vector(&mut t, &[0.5, -0.25]), vector(&mut t, &[1.0, 2.0])];
    let v = [vector(&mut t, &[0.1, 0.2, 0.3, 0.4]), vector(&mut t, &[-1.0, 0.0, 1.0, 2.0])];
    let g = gates(&mut t, &[0.0, 0.0], &[0.0, 0.0], &[1.0, 1.0]);
    let w = memory_state_step(&mut t, &pv, ht, &k, &v, &g).unwrap();
    for i in 0..2 {
        assert_eq!(t.data(w.keys[i]), t.data(k[i]));
        assert_eq!(t.data(w.values[i]), t.data(v[i]));
    }
}

#[test]
fn full_overwrite_stores_candidates() {
    let (_, p) = memory_setup(3);
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let ht = vector(&mut t, &[0.2, 0.1, -0.3]);
    let k = [vector(&mut t, &[0.5, -0.25]), vector(&mut t, &[1.0, 2.0])];
    let v = [vector(&mut t, &[0.1, 0.2, 0.3, 0.4]), vector(&mut t, &[-1.0, 0.0, 1.0, 2.0])];
    let g = gates(&mut t, &[0.0, 0.0], &[1.0, 1.0], &[0.0, 0.0]);
    let w = memory_state_step(&mut t, &pv, ht, &k, &v, &g).unwrap();
    for i in 0..2 {
        assert_eq!(t.data(w.keys[i]), t.data(w.key_candidate));
        assert_eq!(t.data(w.values[i]), t.data(w.value_candidate));
    }
}

#[test]
fn mixed_gates_match_independent_oracle() {
    let (_, p) = memory_setup(21);
    let hv = [0.2, 0.1, -0.3];
    let keys = [[0.5, -0.25], [1.0, 2.0]];
    let vals = [[0.1, 0.2, 0.3, 0.4], [-1.0, 0.0, 1.0, 2.0]];
    let (u, o, cp) = ([0.3, 0.1], [0.2, 0.35], [0.5, 0.55]);

    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let ht = vector(&mut t, &hv);
    let k = [vector(&mut t, &keys[0]), vector(&mut t, &keys[1])];
    let v = [vector(&mut t, &vals[0]), vector(&mut t, &vals[1])];
    let g = gates(&mut t, &u, &o, &cp);
    let w = memory_state_step(&mut t, &pv, ht, &k, &v, &g).unwrap();

    let get = |name: &str| p.get(name).data().to_vec();
    let z: Vec<f64> = oracle::matvec(&get("key.w1"), 2, &hv)
        .iter()
        .zip(get("key.b1"))
        .map(|(a, b)| (a + b).tanh())
        .collect();
    let inner = oracle::matvec(&get("key.w2"), 2, &z);
    let kc: Vec<f64> = (0..2).map(|i| z[i] + (inner[i] + get("key.b2")[i]).tanh()).collect();
    let vc: Vec<f64> = oracle::matvec(&get("value.w"), 4, &hv)
        .iter()
        .zip(get("value.b"))
        .map(|(a, b)| (a + b).tanh())
        .collect();
    let gru_k = oracle::Gru { get: &get, prefix: "gru_k" };
    let gru_v = oracle::Gru { get: &get, prefix: "gru_v" };
    for i in 0..2 {
        let gk = gru_k.step(&kc, &keys[i]);
        let gv = gru_v.step(&vc, &vals[i]);
        for d in 0..2 {
            let expected = u[i] * gk[d] + o[i] * kc[d] + cp[i] * keys[i][d];
            assert!((t.data(w.keys[i])[d] - expected).abs() < 1e-14);
        }
        for d in 0..4 {
            let expected = u[i] * gv[d] + o[i] * vc[d] + cp[i] * vals[i][d];
            assert!((t.data(w.values[i])[d] - expected).abs() < 1e-14);
        }
    }
}

#[test]
fn recurrent_step_ignores_empty_memory() {
    let c = ReaderConfig::uniform(2, 3);
    let p = params(&c, 3, 5);
    let hp = [0.1, 0.2, -0.4];
    let xv = [0.7, -0.3, 0.05];
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let h = vector(&mut t, &hp);
    let x = vector(&mut t, &xv);
    let v = [vector(&mut t, &[9.0, 9.0, 9.0]), vector(&mut t, &[-9.0, 1.0, 2.0])];
    let s = vector(&mut t, &[0.0, 0.0]);
    let ht = vector(&mut t, &[0.3, 0.3, 0.3]);
    let out = recurrent_step(&mut t, &pv, h, x, &v, s, ht).unwrap();
    assert_eq!(t.scalar(out.c), 0.0);
    let get = |name: &str| p.get(name).data().to_vec();
    let expected = oracle::Gru { get: &get, prefix: "gru" }.step(&xv, &hp);
    for d in 0..3 {
        assert!((t.data(out.hidden)[d] - expected[d]).abs() < 1e-14);
    }
}

#[test]
fn recurrent_gate_is_clipped_by_total_salience() {
    let c = ReaderConfig::uniform(2, 2);
    let mut p = params(&c, 3, 5);
    p.set("gate.w_c", Tensor::zeros(&[2])).unwrap();
    // σ(b_c) = 0.7
    p.set("gate.b_c", Tensor::scalar((0.7f64 / 0.3).ln()).unwrap()).unwrap();
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let h = vector(&mut t, &[0.0, 0.0]);
    let x = vector(&mut t, &[0.0, 0.0]);
    let v = [vector(&mut t, &[1.0, 0.0]), vector(&mut t, &[0.0, 1.0])];
    let s = vector(&mut t, &[0.1, 0.2]);
    let ht = vector(&mut t, &[0.0, 0.0]);
    let out = recurrent_step(&mut t, &pv, h, x, &v, s, ht).unwrap();
    assert!((t.scalar(out.c) - 0.3).abs() < 1e-15);
}

#[test]
fn memory_summary_is_salience_weighted_sum() {
    let c = ReaderConfig::uniform(2, 3);
    let p = params(&c, 3, 5);
    let mut t = Tape::new();
    let pv = ParamVars::register(&mut t, &p);
    let h = vector(&mut t, &[0.0; 3]);
    let x = vector(&mut t, &[0.0; 3]);
    let v1 = [0.4, -1.0, 2.0];
    let v2 = [1.2, 0.8, -0.4];
    let v = [vector(&mut t, &v1), vector(&mut t, &v2)];
    let s = vector(&mut t, &[0.5, 0.25]);
    let ht = vector(&mut t, &[0.1, 0.2, 0.3]);
    let out = recurrent_step(&mut t, &pv, h, x, &v, s, ht).unwrap();
    let expected = [0.5 * 0.4 + 0.25 * 1.2, 0.5 * -1.0 + 0.25 * 0.8, 0.5 * 2.0 + 0.25 * -0.4];
    for d in 0..3 {
        assert!((t.data(out.summary)[d] - expected[d]).abs() < 1e-15);
    }
}

#[test]
fn read_sequence_with_suppressed_entity_gate_leaves_memory_alone() {
    let c = ReaderConfig::uniform(2, 3);
    let mut p = params(&c, 4, 2);
    p.set("pre.w", Tensor::zeros(&[3, 3])).unwrap();
    // h̃ saturates near 1, so a large negative φ_e drives e to zero
    p.set("pre.u", Tensor::matrix(3, 3, vec![5.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 5.0]).unwrap()).unwrap();
    p.set("embed", Tensor::filled(&[4, 3], 1.0)).unwrap();
    p.set("gate.phi_e", Tensor::vector(vec![-400.0, -400.0, -400.0]).unwrap()).unwrap();
    let out = read_sequence(&p, &c, &[1], Mode::Eval, 0).unwrap();
    let g = &out.records[0];
    assert!(g.e < 1e-100);
    assert!(g.u.iter().chain(&g.o).all(|&v| v < 1e-100));
    assert_eq!(out.final_state.salience, vec![0.0, 0.0]);
    assert!(out.final_state.keys.iter().flatten().all(|&v| v.abs() < 1e-100));
}

#[test]
fn first_entity_is_written_by_overwrite_only() {
    let c = ReaderConfig::uniform(2, 3);
    let mut p = params(&c, 4, 2);
    p.set("embed", Tensor::filled(&[4, 3], 1.0)).unwrap();
    p.set("pre.u", Tensor::matrix(3, 3, vec![5.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 5.0]).unwrap()).unwrap();
    p.set("gate.phi_e", Tensor::vector(vec![20.0, 20.0, 20.0]).unwrap()).unwrap();
    let out = read_sequence(&p, &c, &[2], Mode::Eval, 0).unwrap();
    let g = &out.records[0];
    assert!(g.e > 1.0 - 1e-12);
    assert_eq!(g.u, vec![0.0, 0.0]);
    assert!((g.o.iter().sum::<f64>() - g.e).abs() < 1e-12);
}

#[test]
fn read_sequence_is_deterministic_per_seed() {
    let mut c = ReaderConfig::uniform(2, 4);
    c.dropout = 0.3;
    let p = params(&c, 6, 4);
    let toks = [1, 2, 3, 4, 5, 1];
    let a = read_sequence(&p, &c, &toks, Mode::Train, 17).unwrap();
    let b = read_sequence(&p, &c, &toks, Mode::Train, 17).unwrap();
    let d = read_sequence(&p, &c, &toks, Mode::Train, 18).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.hidden, b.hidden);
    assert_ne!(a.records, d.records);
    let e1 = read_sequence(&p, &c, &toks, Mode::Eval, 1).unwrap();
    let e2 = read_sequence(&p, &c, &toks, Mode::Eval, 2).unwrap();
    assert_eq!(e1.records, e2.records);
}

#[test]
fn read_sequence_rejects_bad_input() {
    let c = ReaderConfig::uniform(2, 3);
    let p = params(&c, 4, 2);
    assert!(matches!(read_sequence(&p, &c, &[], Mode::Eval, 0), Err(Error::Contract(_))));
    assert!(matches!(read_sequence(&p, &c, &[4], Mode::Eval, 0), Err(Error::Contract(_))));
}

#[test]
fn numeric_failure_names_the_token() {
    let c = ReaderConfig::uniform(1, 2);
    let mut p = params(&c, 3, 2);
    p.set("output", Tensor::zeros(&[3, 2])).unwrap();
    p.set("embed", Tensor::matrix(3, 2, vec![0.0, 0.0, 1e300, 1e300, 0.0, 0.0]).unwrap()).unwrap();
    p.set("pre.u", Tensor::filled(&[2, 2], 1e300)).unwrap();
    match read_sequence(&p, &c, &[0, 1], Mode::Eval, 0) {
        Err(Error::Numeric { token_index, .. }) => assert_eq!(token_index, 1),
        other => panic!("expected numeric error, got {:?}", other.map(|o| o.records.len())),
    }
}
