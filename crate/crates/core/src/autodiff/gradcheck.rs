use std::collections::BTreeMap;

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// A named collection of tensors that can be perturbed in place.
pub trait Parameters: Clone {
    fn names(&self) -> Vec<String>;
    fn tensor(&self, name: &str) -> Option<&Tensor>;
    fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor>;
}

impl Parameters for BTreeMap<String, Tensor> {
    fn names(&self) -> Vec<String> {
        self.keys().cloned().collect()
    }

    fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.get(name)
    }

    fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.get_mut(name)
    }
}

#[derive(Clone, Debug)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    /// Flat index of the worst entry.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub tol: f64,
    pub entries: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.entries.iter().map(|e| e.max_rel_error).fold(0.0, f64::max)
    }
}

/// Entries whose magnitudes are both below this are compared absolutely.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// `|a - n| / max(|a|, |n|, REL_ERROR_FLOOR)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
    (analytic - numeric).abs() / scale
}

fn evaluate<P, F>(f: &F, params: &P) -> Result<f64>
where
    F: Fn(&P, &mut Tape) -> Result<Var>,
{
    let mut tape = Tape::new();
    let loss = f(params, &mut tape)?;
    if !tape.value(loss).is_scalar() {
        return Err(Error::Contract("grad_check objective must be scalar".into()));
    }
    Ok(tape.scalar(loss))
}

/// Compares tape gradients against central finite differences for every
/// entry of every parameter.
///
/// `f` must be a pure function of the parameters: it is evaluated twice at
/// the base point and the results must agree bit for bit.
pub fn grad_check<P, F>(f: F, params: &P, step: f64, tol: f64) -> Result<GradCheckReport>
where
    P: Parameters,
    F: Fn(&P, &mut Tape) -> Result<Var>,
{
    let names = params.names();
    if names.is_empty() {
        return Ok(GradCheckReport { tol, entries: vec![] });
    }

    let mut tape = Tape::new();
    let loss = f(params, &mut tape)?;
    let base = tape.scalar(loss);
    let analytic = tape.backward(loss)?;

    let again = evaluate(&f, params)?;
    if again.to_bits() != base.to_bits() {
        return Err(Error::Reproducibility(format!(
            "objective evaluated to {base} then {again} at identical parameters"
        )));
    }

    let mut work = params.clone();
    let mut entries = Vec::with_capacity(names.len());
    for name in names {
        let numel = params
            .tensor(&name)
            .map(Tensor::numel)
            .ok_or_else(|| Error::Contract(format!("parameter {name} vanished")))?;
        let grad = analytic.get(&name);
        let mut worst = ParamCheck {
            name: name.clone(),
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
            passed: true,
        };
        for k in 0..numel {
            let original = work.tensor(&name).unwrap().data()[k];
            work.tensor_mut(&name).unwrap().data_mut()[k] = original + step;
            let plus = evaluate(&f, &work)?;
            work.tensor_mut(&name).unwrap().data_mut()[k] = original - step;
            let minus = evaluate(&f, &work)?;
            work.tensor_mut(&name).unwrap().data_mut()[k] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let a = grad.map(|g| g.data()[k]).unwrap_or(0.0);
            let err = relative_error(a, numeric);
            if err > worst.max_rel_error || k == 0 {
                worst.max_rel_error = err;
                worst.worst_index = k;
                worst.analytic = a;
                worst.numeric = numeric;
            }
        }
        worst.passed = worst.max_rel_error < tol;
        entries.push(worst);
    }
    Ok(GradCheckReport { tol, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_params() -> BTreeMap<String, Tensor> {
        let mut p = BTreeMap::new();
        p.insert("x".to_string(), Tensor::vector(vec![0.7, -1.3, 2.1]).unwrap());
        p
    }

    // 0.5 xᵀAx + bᵀx with symmetric A
    const A: [f64; 9] = [2.0, 0.5, -0.3, 0.5, 1.5, 0.2, -0.3, 0.2, 3.0];
    const B: [f64; 3] = [0.1, -0.4, 0.9];

    fn quadratic(p: &BTreeMap<String, Tensor>, t: &mut Tape) -> Result<Var> {
        let x = t.param("x", &p["x"]);
        let a = t.constant(Tensor::matrix(3, 3, A.to_vec())?);
        let b = t.constant_vector(B.to_vec())?;
        let ax = t.matvec(a, x)?;
        let xax = t.dot(x, ax)?;
        let half = t.scale(xax, 0.5)?;
        let bx = t.dot(b, x)?;
        t.add(half, bx)
    }

    #[test]
    fn quadratic_form_matches_closed_form_gradient() {
        let p = quadratic_params();
        let mut t = Tape::new();
        let loss = quadratic(&p, &mut t).unwrap();
        let g = t.backward(loss).unwrap();
        let x = p["x"].data();
        for i in 0..3 {
            let expected: f64 = (0..3).map(|j| A[i * 3 + j] * x[j]).sum::<f64>() + B[i];
            assert!((g["x"].data()[i] - expected).abs() < 1e-12);
        }

        let report = grad_check(quadratic, &p, 1e-4, 1e-8).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.max_rel_error() < 1e-8);
    }

    #[test]
    fn empty_parameter_set_passes_trivially() {
        let p: BTreeMap<String, Tensor> = BTreeMap::new();
        let report = grad_check(|_, t: &mut Tape| t.constant_scalar(1.0), &p, 1e-4, 1e-4).unwrap();
        assert!(report.entries.is_empty());
        assert!(report.passed());
    }

    #[test]
    fn detects_non_deterministic_objective() {
        use std::cell::Cell;
        let calls = Cell::new(0.0);
        let p = quadratic_params();
        let result = grad_check(
            |p: &BTreeMap<String, Tensor>, t: &mut Tape| {
                calls.set(calls.get() + 1.0);
                let x = t.param("x", &p["x"]);
                let s = t.sum(x)?;
                t.affine(s, 1.0, calls.get())
            },
            &p,
            1e-4,
            1e-4,
        );
        assert!(matches!(result, Err(Error::Reproducibility(_))));
    }

    #[test]
    fn every_op_matches_finite_differences() {
        let mut p = BTreeMap::new();
        p.insert("w".to_string(), Tensor::matrix(3, 4, (0..12).map(|i| ((i as f64) * 0.37).sin() * 0.5).collect()).unwrap());
        p.insert("x".to_string(), Tensor::vector(vec![0.3, -0.2, 0.8, 0.1]).unwrap());
        p.insert("emb".to_string(), Tensor::matrix(2, 3, vec![0.1, 0.4, -0.3, 0.2, -0.1, 0.6]).unwrap());
        p.insert("s".to_string(), Tensor::scalar(0.45).unwrap());

        let f = |p: &BTreeMap<String, Tensor>, t: &mut Tape| -> Result<Var> {
            let w = t.param("w", &p["w"]);
            let x = t.param("x", &p["x"]);
            let emb = t.param("emb", &p["emb"]);
            let s = t.param("s", &p["s"]);
            let h = t.matvec(w, x)?;
            let h = t.tanh(h)?;
            let row = t.row(emb, 1)?;
            let h = t.add(h, row)?;
            let h = t.mul(s, h)?;
            let sig = t.sigmoid(h)?;
            let masked = t.mul_const(sig, &[2.0, 0.0, 2.0])?;
            let shifted = t.add_const(masked, &[0.1, 0.2, 0.3])?;
            let sm = t.gumbel_softmax(shifted, Some(&[0.05, -0.2, 0.4]), 0.7)?;
            let e = t.exp(sm)?;
            let l = t.log(e)?;
            let cut = t.slice(l, 0, 2)?;
            let half = t.affine(s, 0.5, 0.1)?;
            let two = t.concat(&[half, half])?;
            let m = t.min(cut, two)?;
            let c = t.clip(m, 0.0, 0.4)?;
            let d = t.dot(c, cut)?;
            let first = t.index(sig, 0)?;
            let diff = t.sub(d, first)?;
            let logits = t.concat(&[sig, h])?;
            let ce = t.cross_entropy(logits, 2)?;
            let total = t.add(diff, ce)?;
            let sq = t.mul(total, total)?;
            t.sum(sq)
        };
        let report = grad_check(f, &p, 1e-5, 1e-6).unwrap();
        assert!(report.passed(), "{report:#?}");
    }
}
