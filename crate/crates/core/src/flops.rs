//! Operation counting for the SNR solvers.
//!
//! Each of `+ − × ÷ √ ! exp ln Q⁻¹` costs one flop. A named subexpression
//! evaluated through [`Arith::memo`] is charged on first use only, so loop
//! invariants such as `N·ln 2 / m` cost three flops per solve rather than per
//! iteration.

use std::collections::HashMap;

use crate::scalar;

/// Arithmetic with optional accounting. The solvers are written once against
/// this trait and run either plainly ([`Exact`]) or instrumented ([`FlopLedger`]).
pub trait Arith {
    fn add(&mut self, a: f64, b: f64) -> f64;
    fn sub(&mut self, a: f64, b: f64) -> f64;
    fn mul(&mut self, a: f64, b: f64) -> f64;
    fn div(&mut self, a: f64, b: f64) -> f64;
    fn sqrt(&mut self, a: f64) -> f64;
    fn exp(&mut self, a: f64) -> f64;
    fn ln(&mut self, a: f64) -> f64;
    /// `Q⁻¹(eps)` for an already validated probability.
    fn q_inv(&mut self, eps: f64) -> f64;
    fn factorial(&mut self, n: u32) -> f64;
    /// Evaluates `f` once per key and reuses the value afterwards.
    fn memo<F: FnOnce(&mut Self) -> f64>(&mut self, key: &'static str, f: F) -> f64
    where
        Self: Sized;
}

fn q_inv_value(eps: f64) -> f64 {
    scalar::q_inv(eps).unwrap_or(f64::NAN)
}

fn factorial_value(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Plain floating-point arithmetic with no bookkeeping.
#[derive(Debug, Default, Clone, Copy)]
pub struct Exact;

impl Arith for Exact {
    #[inline]
    fn add(&mut self, a: f64, b: f64) -> f64 {
        a + b
    }
    #[inline]
    fn sub(&mut self, a: f64, b: f64) -> f64 {
        a - b
    }
    #[inline]
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        a * b
    }
    #[inline]
    fn div(&mut self, a: f64, b: f64) -> f64 {
        a / b
    }
    #[inline]
    fn sqrt(&mut self, a: f64) -> f64 {
        a.sqrt()
    }
    #[inline]
    fn exp(&mut self, a: f64) -> f64 {
        a.exp()
    }
    #[inline]
    fn ln(&mut self, a: f64) -> f64 {
        a.ln()
    }
    fn q_inv(&mut self, eps: f64) -> f64 {
        q_inv_value(eps)
    }
    fn factorial(&mut self, n: u32) -> f64 {
        factorial_value(n)
    }
    #[inline]
    fn memo<F: FnOnce(&mut Self) -> f64>(&mut self, _key: &'static str, f: F) -> f64 {
        f(self)
    }
}

/// Counting arithmetic.
#[derive(Debug, Default, Clone)]
pub struct FlopLedger {
    count: u64,
    memo: HashMap<&'static str, f64>,
}

impl FlopLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Whether `key` has already been charged.
    pub fn is_memoized(&self, key: &str) -> bool {
        self.memo.contains_key(key)
    }

    #[inline]
    fn charge(&mut self) {
        self.count += 1;
    }
}

impl Arith for FlopLedger {
    fn add(&mut self, a: f64, b: f64) -> f64 {
        self.charge();
        a + b
    }
    fn sub(&mut self, a: f64, b: f64) -> f64 {
        self.charge();
        a - b
    }
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        self.charge();
        a * b
    }
    fn div(&mut self, a: f64, b: f64) -> f64 {
        self.charge();
        a / b
    }
    fn sqrt(&mut self, a: f64) -> f64 {
        self.charge();
        a.sqrt()
    }
    fn exp(&mut self, a: f64) -> f64 {
        self.charge();
        a.exp()
    }
    fn ln(&mut self, a: f64) -> f64 {
        self.charge();
        a.ln()
    }
    fn q_inv(&mut self, eps: f64) -> f64 {
        self.charge();
        q_inv_value(eps)
    }
    fn factorial(&mut self, n: u32) -> f64 {
        self.charge();
        factorial_value(n)
    }
    fn memo<F: FnOnce(&mut Self) -> f64>(&mut self, key: &'static str, f: F) -> f64 {
        if let Some(v) = self.memo.get(key) {
            return *v;
        }
        let v = f(self);
        self.memo.insert(key, v);
        v
    }
}
