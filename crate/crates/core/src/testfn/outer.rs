use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of arguments of an outer function.
pub const MAX_ARITY: usize = 8;

/// Outer function `g: ℝᴺ → ℝ` from a closed vocabulary of polynomials,
/// `tanh`, sums and products, with exact first and second partials by
/// forward-mode differentiation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OuterFunction {
    Const { value: f64 },
    Arg { index: usize },
    Tanh { inner: Box<OuterFunction> },
    Scale { factor: f64, inner: Box<OuterFunction> },
    Sum { terms: Vec<OuterFunction> },
    Product { factors: Vec<OuterFunction> },
    Pow { inner: Box<OuterFunction>, exponent: u32 },
}

/// Value and gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet1 {
    pub value: f64,
    pub grad: [f64; MAX_ARITY],
}

/// Value, gradient and Hessian (row-major `MAX_ARITY × MAX_ARITY`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; MAX_ARITY],
    pub hess: [[f64; MAX_ARITY]; MAX_ARITY],
}

impl Jet1 {
    fn constant(value: f64) -> Self {
        Self {
            value,
            grad: [0.0; MAX_ARITY],
        }
    }
}

impl Jet2 {
    fn constant(value: f64) -> Self {
        Self {
            value,
            grad: [0.0; MAX_ARITY],
            hess: [[0.0; MAX_ARITY]; MAX_ARITY],
        }
    }

    fn chain(self, f: f64, f1: f64, f2: f64, n: usize) -> Self {
        let mut out = Self::constant(f);
        for i in 0..n {
            out.grad[i] = f1 * self.grad[i];
            for j in 0..n {
                out.hess[i][j] = f1 * self.hess[i][j] + f2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    fn mul(self, o: Self, n: usize) -> Self {
        let mut out = Self::constant(self.value * o.value);
        for i in 0..n {
            out.grad[i] = self.value * o.grad[i] + o.value * self.grad[i];
            for j in 0..n {
                out.hess[i][j] =
                    self.value * o.hess[i][j] + o.value * self.hess[i][j] + self.grad[i] * o.grad[j] + o.grad[i] * self.grad[j];
            }
        }
        out
    }
}

impl OuterFunction {
    pub fn constant(value: f64) -> Self {
        OuterFunction::Const { value }
    }

    pub fn arg(index: usize) -> Self {
        OuterFunction::Arg { index }
    }

    pub fn tanh(inner: OuterFunction) -> Self {
        OuterFunction::Tanh { inner: Box::new(inner) }
    }

    pub fn scale(factor: f64, inner: OuterFunction) -> Self {
        OuterFunction::Scale {
            factor,
            inner: Box::new(inner),
        }
    }

    pub fn sum(terms: Vec<OuterFunction>) -> Self {
        OuterFunction::Sum { terms }
    }

    pub fn product(factors: Vec<OuterFunction>) -> Self {
        OuterFunction::Product { factors }
    }

    pub fn pow(inner: OuterFunction, exponent: u32) -> Self {
        OuterFunction::Pow {
            inner: Box::new(inner),
            exponent,
        }
    }

    /// Smooth stand-in for `min(max(t, 0), 1)` applied to `self`:
    /// `½ + ½ tanh(2t - 1)`, whose slope never exceeds 1.
    pub fn unit_contraction(self) -> Self {
        Self::sum(vec![
            Self::constant(0.5),
            Self::scale(0.5, Self::tanh(Self::sum(vec![Self::scale(2.0, self), Self::constant(-1.0)]))),
        ])
    }

    /// One more than the largest argument index; 0 for constants.
    pub fn arity(&self) -> usize {
        match self {
            OuterFunction::Const { .. } => 0,
            OuterFunction::Arg { index } => index + 1,
            OuterFunction::Tanh { inner } | OuterFunction::Scale { inner, .. } | OuterFunction::Pow { inner, .. } => inner.arity(),
            OuterFunction::Sum { terms: v } | OuterFunction::Product { factors: v } => v.iter().map(Self::arity).max().unwrap_or(0),
        }
    }

    fn is_affine(&self) -> bool {
        match self {
            OuterFunction::Const { .. } | OuterFunction::Arg { .. } => true,
            OuterFunction::Scale { inner, .. } => inner.is_affine(),
            OuterFunction::Sum { terms } => terms.iter().all(Self::is_affine),
            _ => false,
        }
    }

    /// True when the function and its first two partials are bounded on ℝᴺ:
    /// every argument enters through `tanh` of an affine expression.
    pub fn is_bounded(&self) -> bool {
        match self {
            OuterFunction::Const { .. } => true,
            OuterFunction::Arg { .. } => false,
            OuterFunction::Tanh { inner } => inner.is_affine() || inner.is_bounded(),
            OuterFunction::Scale { inner, .. } | OuterFunction::Pow { inner, .. } => inner.is_bounded(),
            OuterFunction::Sum { terms: v } | OuterFunction::Product { factors: v } => v.iter().all(Self::is_bounded),
        }
    }

    pub fn validate(&self, arity: usize) -> Result<()> {
        if arity > MAX_ARITY {
            return Err(Error::Unsupported(format!("at most {MAX_ARITY} arguments, got {arity}")));
        }
        if self.arity() > arity {
            return Err(Error::Domain(format!(
                "outer function reads argument {} of {arity}",
                self.arity() - 1
            )));
        }
        Ok(())
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        match self {
            OuterFunction::Const { value } => *value,
            OuterFunction::Arg { index } => args[*index],
            OuterFunction::Tanh { inner } => inner.eval(args).tanh(),
            OuterFunction::Scale { factor, inner } => factor * inner.eval(args),
            OuterFunction::Sum { terms } => terms.iter().map(|t| t.eval(args)).sum(),
            OuterFunction::Product { factors } => factors.iter().map(|t| t.eval(args)).product(),
            OuterFunction::Pow { inner, exponent } => inner.eval(args).powi(*exponent as i32),
        }
    }

    pub fn jet1(&self, args: &[f64]) -> Jet1 {
        let n = args.len();
        match self {
            OuterFunction::Const { value } => Jet1::constant(*value),
            OuterFunction::Arg { index } => {
                let mut j = Jet1::constant(args[*index]);
                j.grad[*index] = 1.0;
                j
            }
            OuterFunction::Tanh { inner } => {
                let a = inner.jet1(args);
                let t = a.value.tanh();
                let d = 1.0 - t * t;
                let mut j = Jet1::constant(t);
                for i in 0..n {
                    j.grad[i] = d * a.grad[i];
                }
                j
            }
            OuterFunction::Scale { factor, inner } => {
                let mut a = inner.jet1(args);
                a.value *= factor;
                for g in &mut a.grad[..n] {
                    *g *= factor;
                }
                a
            }
            OuterFunction::Sum { terms } => {
                let mut j = Jet1::constant(0.0);
                for t in terms {
                    let a = t.jet1(args);
                    j.value += a.value;
                    for i in 0..n {
                        j.grad[i] += a.grad[i];
                    }
                }
                j
            }
            OuterFunction::Product { factors } => {
                let mut j = Jet1::constant(1.0);
                for t in factors {
                    let a = t.jet1(args);
                    for i in 0..n {
                        j.grad[i] = j.value * a.grad[i] + a.value * j.grad[i];
                    }
                    j.value *= a.value;
                }
                j
            }
            OuterFunction::Pow { inner, exponent } => {
                let a = inner.jet1(args);
                let k = *exponent as i32;
                let d = if k == 0 { 0.0 } else { k as f64 * a.value.powi(k - 1) };
                let mut j = Jet1::constant(a.value.powi(k));
                for i in 0..n {
                    j.grad[i] = d * a.grad[i];
                }
                j
            }
        }
    }

    pub fn jet2(&self, args: &[f64]) -> Jet2 {
        let n = args.len();
        match self {
            OuterFunction::Const { value } => Jet2::constant(*value),
            OuterFunction::Arg { index } => {
                let mut j = Jet2::constant(args[*index]);
                j.grad[*index] = 1.0;
                j
            }
            OuterFunction::Tanh { inner } => {
                let a = inner.jet2(args);
                let t = a.value.tanh();
                let d1 = 1.0 - t * t;
                a.chain(t, d1, -2.0 * t * d1, n)
            }
            OuterFunction::Scale { factor, inner } => {
                let a = inner.jet2(args);
                a.chain(factor * a.value, *factor, 0.0, n)
            }
            OuterFunction::Sum { terms } => {
                let mut j = Jet2::constant(0.0);
                for t in terms {
                    let a = t.jet2(args);
                    j.value += a.value;
                    for i in 0..n {
                        j.grad[i] += a.grad[i];
                        for k in 0..n {
                            j.hess[i][k] += a.hess[i][k];
                        }
                    }
                }
                j
            }
            OuterFunction::Product { factors } => {
                let mut j = Jet2::constant(1.0);
                for t in factors {
                    j = j.mul(t.jet2(args), n);
                }
                j
            }
            OuterFunction::Pow { inner, exponent } => {
                let a = inner.jet2(args);
                let k = *exponent as i32;
                let f = a.value.powi(k);
                let f1 = if k == 0 { 0.0 } else { k as f64 * a.value.powi(k - 1) };
                let f2 = if k < 2 { 0.0 } else { (k * (k - 1)) as f64 * a.value.powi(k - 2) };
                a.chain(f, f1, f2, n)
            }
        }
    }
}
