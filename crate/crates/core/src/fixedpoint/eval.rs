// SPDX-License-Identifier: Apache-2.0
use std::fmt;

use super::{Fixed, FixedError, ONE_RAW};
use crate::ops::{Comparison, OpKind};

/// Non-fatal event raised while evaluating an operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    DivideByZero,
    TanPole,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DivideByZero => f.write_str("division by zero saturated"),
            Warning::TanPole => f.write_str("tan at a pole saturated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub values: Vec<Fixed>,
    pub warning: Option<Warning>,
}

impl EvalOutcome {
    fn one(v: Fixed) -> Self {
        EvalOutcome {
            values: vec![v],
            warning: None,
        }
    }
}

/// Evaluates one operator on Q16.16 arguments.
///
/// `Merge` takes `[if_value, else_value, select]`; `IfCompare` returns raw
/// 1 or 0 and needs `cmp`.
pub fn eval_op(op: &OpKind, cmp: Option<Comparison>, args: &[Fixed]) -> Result<EvalOutcome, FixedError> {
    let expect = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(FixedError::Arity {
                op: op.function_name().to_string(),
                expected: n,
                got: args.len(),
            })
        }
    };
    match op {
        OpKind::Add => {
            expect(2)?;
            Ok(EvalOutcome::one(Fixed(args[0].0.wrapping_add(args[1].0))))
        }
        OpKind::Sub => {
            expect(2)?;
            Ok(EvalOutcome::one(Fixed(args[0].0.wrapping_sub(args[1].0))))
        }
        OpKind::Mul => {
            expect(2)?;
            Ok(EvalOutcome::one(mul(args[0], args[1])))
        }
        OpKind::Div => {
            expect(2)?;
            let (v, w) = div(args[0], args[1]);
            Ok(EvalOutcome {
                values: vec![v],
                warning: w,
            })
        }
        OpKind::Power => {
            expect(2)?;
            let exp = power_exponent(args[1])?;
            let (v, w) = power(args[0], exp);
            Ok(EvalOutcome {
                values: vec![v],
                warning: w,
            })
        }
        OpKind::Log => {
            expect(2)?;
            Ok(EvalOutcome::one(log(args[0], args[1])?))
        }
        OpKind::Sqrt => {
            expect(1)?;
            Ok(EvalOutcome::one(sqrt(args[0])?))
        }
        OpKind::SinCosTan => {
            expect(1)?;
            let (s, c, t, w) = sin_cos_tan(args[0]);
            Ok(EvalOutcome {
                values: vec![s, c, t],
                warning: w,
            })
        }
        OpKind::Value => {
            expect(1)?;
            Ok(EvalOutcome::one(args[0]))
        }
        OpKind::IfCompare => {
            expect(2)?;
            let cmp = cmp.ok_or_else(|| FixedError::Domain("comparison missing".into()))?;
            Ok(EvalOutcome::one(Fixed(cmp.holds(args[0].0, args[1].0) as i32)))
        }
        OpKind::Merge => {
            expect(3)?;
            let pick = if args[2].0 != 0 { args[0] } else { args[1] };
            Ok(EvalOutcome::one(pick))
        }
        OpKind::Call(label) => Err(FixedError::Opaque(label.clone())),
    }
}

/// 64-bit product, arithmetic shift right 16, low 32 bits.
pub(crate) fn mul(a: Fixed, b: Fixed) -> Fixed {
    let p = (a.0 as i64) * (b.0 as i64);
    Fixed((p >> 16) as i32)
}

/// `(a << 16) / b`, truncating toward zero. Division by zero saturates
/// toward the sign of the dividend.
pub(crate) fn div(a: Fixed, b: Fixed) -> (Fixed, Option<Warning>) {
    if b.0 == 0 {
        let v = if a.0 < 0 { Fixed::MIN } else { Fixed::MAX };
        return (v, Some(Warning::DivideByZero));
    }
    let q = ((a.0 as i64) << 16) / (b.0 as i64);
    (Fixed(q as i32), None)
}

/// Exponent operand must hold an integer in `[-128, 127]`.
pub fn power_exponent(d: Fixed) -> Result<i32, FixedError> {
    if d.0 & (ONE_RAW - 1) != 0 {
        return Err(FixedError::Domain(format!("power exponent {d} is not an integer")));
    }
    let e = d.0 >> 16;
    if !(-128..=127).contains(&e) {
        return Err(FixedError::Domain(format!("power exponent {e} outside [-128, 127]")));
    }
    Ok(e)
}

const Q32_ONE: i64 = 1 << 32;

fn mul_q32(a: i64, b: i64) -> i64 {
    (((a as i128) * (b as i128)) >> 32) as i64
}

/// Binary exponentiation in Q32.32 with 64-bit wrap; negative exponents take
/// the Q32.32 reciprocal of the positive power.
pub(crate) fn power(a: Fixed, exp: i32) -> (Fixed, Option<Warning>) {
    let mut base = (a.0 as i64) << 16;
    let mut result = Q32_ONE;
    let mut e = exp.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result = mul_q32(result, base);
        }
        e >>= 1;
        if e > 0 {
            base = mul_q32(base, base);
        }
    }
    let mut warning = None;
    if exp < 0 {
        if result == 0 {
            result = i64::MAX;
            warning = Some(Warning::DivideByZero);
        } else {
            result = ((1i128 << 64) / result as i128) as i64;
        }
    }
    (Fixed((result >> 16) as i32), warning)
}

/// Integer square root of the raw value is the Q8.8 root; widened back to
/// Q16.16 by shifting left 8.
pub(crate) fn sqrt(a: Fixed) -> Result<Fixed, FixedError> {
    if a.0 < 0 {
        return Err(FixedError::Domain(format!("sqrt of negative value {a}")));
    }
    let q8 = isqrt(a.0 as u64);
    Ok(Fixed((q8 << 8) as i32))
}

pub(crate) fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

const Q29_SCALE: f64 = (1u64 << 29) as f64;

fn quantize_q29(x: f64) -> i64 {
    (x * Q29_SCALE).round() as i64
}

/// sin and cos are rounded into Q3.29 and truncated into Q16.16; tan is the
/// Q3.29 quotient, truncated toward zero and saturated.
pub(crate) fn sin_cos_tan(a: Fixed) -> (Fixed, Fixed, Fixed, Option<Warning>) {
    let x = a.to_f64();
    let s29 = quantize_q29(x.sin());
    let c29 = quantize_q29(x.cos());
    let s = Fixed((s29 >> 13) as i32);
    let c = Fixed((c29 >> 13) as i32);
    if c29 == 0 {
        let t = if s29 < 0 { Fixed::MIN } else { Fixed::MAX };
        return (s, c, t, Some(Warning::TanPole));
    }
    let q = (s29 << 16) / c29;
    let t = Fixed(q.clamp(i32::MIN as i64, i32::MAX as i64) as i32);
    (s, c, t, None)
}

/// `log_base(arg) = ln(arg) / ln(base)`, quantized through Q64.64 and
/// truncated into Q16.16 with saturation.
pub(crate) fn log(base: Fixed, arg: Fixed) -> Result<Fixed, FixedError> {
    if base.0 <= 0 || base.0 == ONE_RAW {
        return Err(FixedError::Domain(format!("logarithm base {base} is invalid")));
    }
    if arg.0 <= 0 {
        return Err(FixedError::Domain(format!("logarithm of non-positive value {arg}")));
    }
    let r = arg.to_f64().ln() / base.to_f64().ln();
    let q64 = (r * 2f64.powi(64)).floor() as i128;
    let q16 = q64 >> 48;
    Ok(Fixed(q16.clamp(i32::MIN as i128, i32::MAX as i128) as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::to_fixed;
    use proptest::prelude::*;

    fn fx(x: f64) -> Fixed {
        to_fixed(x).unwrap()
    }

    fn eval1(op: OpKind, args: &[Fixed]) -> Fixed {
        eval_op(&op, None, args).unwrap().values[0]
    }

    #[test]
    fn mul_half_by_half() {
        assert_eq!(eval1(OpKind::Mul, &[fx(0.5), fx(0.5)]).bits(), 0x0000_4000);
    }

    #[test]
    fn div_one_by_three() {
        // floor(2^32 / 196608) = 21845
        assert_eq!(eval1(OpKind::Div, &[fx(1.0), fx(3.0)]).raw(), 21845);
        // truncation toward zero for negative quotients
        assert_eq!(eval1(OpKind::Div, &[fx(-1.0), fx(3.0)]).raw(), -21845);
    }

    #[test]
    fn div_by_zero_saturates() {
        let out = eval_op(&OpKind::Div, None, &[fx(2.0), Fixed::ZERO]).unwrap();
        assert_eq!(out.values[0], Fixed::MAX);
        assert_eq!(out.warning, Some(Warning::DivideByZero));
        let out = eval_op(&OpKind::Div, None, &[fx(-2.0), Fixed::ZERO]).unwrap();
        assert_eq!(out.values[0], Fixed::MIN);
    }

    #[test]
    fn power_cases() {
        assert_eq!(eval1(OpKind::Power, &[fx(2.0), fx(0.0)]), Fixed::ONE);
        assert_eq!(eval1(OpKind::Power, &[fx(2.0), fx(10.0)]), fx(1024.0));
        assert_eq!(eval1(OpKind::Power, &[fx(-1.5), fx(3.0)]), fx(-3.375));
        assert_eq!(eval1(OpKind::Power, &[fx(2.0), fx(-2.0)]), fx(0.25));
        assert_eq!(eval1(OpKind::Power, &[fx(0.5), fx(-3.0)]), fx(8.0));
        assert!(eval_op(&OpKind::Power, None, &[fx(2.0), fx(0.5)]).is_err());
        assert!(eval_op(&OpKind::Power, None, &[fx(2.0), fx(128.0)]).is_err());
        assert!(eval_op(&OpKind::Power, None, &[fx(2.0), fx(-128.0)]).is_ok());
        let zero_inv = eval_op(&OpKind::Power, None, &[Fixed::ZERO, fx(-1.0)]).unwrap();
        assert_eq!(zero_inv.warning, Some(Warning::DivideByZero));
    }

    #[test]
    fn sqrt_goes_through_q8_8() {
        assert_eq!(eval1(OpKind::Sqrt, &[fx(4.0)]), fx(2.0));
        assert_eq!(eval1(OpKind::Sqrt, &[fx(2.0)]).raw(), 362 << 8); // floor(1.41421 * 256)
        assert!(matches!(
            eval_op(&OpKind::Sqrt, None, &[fx(-1.0)]),
            Err(FixedError::Domain(_))
        ));
    }

    #[test]
    fn sin_cos_tan_at_zero() {
        let out = eval_op(&OpKind::SinCosTan, None, &[Fixed::ZERO]).unwrap();
        assert_eq!(out.values, vec![Fixed::ZERO, Fixed::ONE, Fixed::ZERO]);
    }

    #[test]
    fn log_domain() {
        assert_eq!(eval1(OpKind::Log, &[fx(2.0), fx(8.0)]), fx(3.0));
        assert_eq!(eval1(OpKind::Log, &[fx(10.0), fx(100.0)]), fx(2.0));
        for (b, a) in [(0.0, 2.0), (-2.0, 2.0), (1.0, 2.0), (2.0, 0.0), (2.0, -1.0)] {
            assert!(eval_op(&OpKind::Log, None, &[fx(b), fx(a)]).is_err());
        }
    }

    #[test]
    fn compare_and_merge() {
        let c = |cmp, a, b| eval_op(&OpKind::IfCompare, Some(cmp), &[fx(a), fx(b)]).unwrap().values[0].raw();
        assert_eq!(c(Comparison::Ge, 0.0, 0.0), 1);
        assert_eq!(c(Comparison::Gt, 0.0, 0.0), 0);
        assert_eq!(c(Comparison::Ne, 1.0, 0.0), 1);
        let m = eval1(OpKind::Merge, &[fx(1.0), fx(2.0), Fixed(1)]);
        assert_eq!(m, fx(1.0));
        let m = eval1(OpKind::Merge, &[fx(1.0), fx(2.0), Fixed(0)]);
        assert_eq!(m, fx(2.0));
    }

    #[test]
    fn wraps_on_overflow() {
        assert_eq!(eval1(OpKind::Add, &[Fixed::MAX, Fixed(1)]), Fixed::MIN);
        assert_eq!(eval1(OpKind::Sub, &[Fixed::MIN, Fixed(1)]), Fixed::MAX);
    }

    #[test]
    fn arity_checked() {
        assert!(matches!(
            eval_op(&OpKind::Add, None, &[Fixed::ONE]),
            Err(FixedError::Arity { .. })
        ));
    }

    const LSB: f64 = 1.0 / 65536.0;

    proptest! {
        #[test]
        fn add_mul_commute(a in any::<i32>(), b in any::<i32>()) {
            let (a, b) = (Fixed(a), Fixed(b));
            prop_assert_eq!(eval1(OpKind::Add, &[a, b]), eval1(OpKind::Add, &[b, a]));
            prop_assert_eq!(eval1(OpKind::Mul, &[a, b]), eval1(OpKind::Mul, &[b, a]));
        }

        #[test]
        fn mul_truncation_bound(a in -(1i32 << 23)..(1i32 << 23), b in -(1i32 << 23)..(1i32 << 23)) {
            let (a, b) = (Fixed(a), Fixed(b));
            let exact = a.to_f64() * b.to_f64();
            prop_assume!(exact.abs() < 32767.0);
            let got = eval1(OpKind::Mul, &[a, b]).to_f64();
            prop_assert!((got - exact).abs() < LSB);
            // floor semantics: never above the exact product
            prop_assert!(got <= exact);
        }

        #[test]
        fn sin_cos_within_contract(raw in -205887i32..=205887) {
            // principal domain [-pi, pi]
            let a = Fixed(raw);
            let out = eval_op(&OpKind::SinCosTan, None, &[a]).unwrap();
            let x = a.to_f64();
            let tol = 1.0 / 256.0 + 2f64.powi(-29);
            prop_assert!((out.values[0].to_f64() - x.sin()).abs() <= tol);
            prop_assert!((out.values[1].to_f64() - x.cos()).abs() <= tol);
        }

        #[test]
        fn sqrt_within_contract(raw in 0i32..=(255 << 16)) {
            let a = Fixed(raw);
            let got = eval1(OpKind::Sqrt, &[a]).to_f64();
            let tol = 1.0 / 256.0 + 1.0 / 256.0;
            prop_assert!((got - a.to_f64().sqrt()).abs() <= tol);
        }

        #[test]
        fn log_within_contract(b in 65537i32..=(100 << 16), x in 65537i32..=(100 << 16)) {
            let (b, x) = (Fixed(b), Fixed(x));
            let r = x.to_f64().ln() / b.to_f64().ln();
            prop_assume!(r.abs() < 32767.0);
            let got = eval1(OpKind::Log, &[b, x]).to_f64();
            prop_assert!((got - r).abs() <= 1.0 / 256.0 + 2f64.powi(-64));
        }

        #[test]
        fn isqrt_is_floor(n in any::<u32>()) {
            let r = isqrt(n as u64);
            prop_assert!(r * r <= n as u64);
            prop_assert!((r + 1) * (r + 1) > n as u64);
        }
    }
}
