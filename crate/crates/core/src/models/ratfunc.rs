//! Rational functions over the parameters and multivariate polynomial gcd.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::polynomial::{Polynomial, Var};
use super::rational::Rational;

/// Term count above which arithmetic triggers a gcd cancellation.
pub const GCD_TERM_THRESHOLD: usize = 64;

/// Scales `p` to integer coefficients with content 1 and a positive leading
/// coefficient. Returns the scaled polynomial and the factor applied.
pub fn integer_primitive(p: &Polynomial) -> (Polynomial, Rational) {
    if p.is_zero() {
        return (Polynomial::zero(), Rational::one());
    }
    let mut lcm = BigInt::one();
    let mut gcd = BigInt::zero();
    for (_, c) in p.terms() {
        lcm = lcm.lcm(c.denom());
    }
    for (_, c) in p.terms() {
        let scaled = c.numer() * (&lcm / c.denom());
        gcd = gcd.gcd(&scaled);
    }
    let mut factor = Rational::new(lcm, gcd);
    if p.leading_term().is_some_and(|(_, c)| c.is_negative()) {
        factor = -factor;
    }
    (p.scale(&factor), factor)
}

fn smallest_var(f: &Polynomial, g: &Polynomial) -> Option<u32> {
    let a = f.vars().first().map(|v| v.0);
    let b = g.vars().first().map(|v| v.0);
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

/// Content of `f` viewed as a polynomial in `var`: gcd of its coefficients.
fn content_in(f: &Polynomial, var: u32) -> Polynomial {
    let mut acc = Polynomial::zero();
    for c in f.coefficients_in(var) {
        if c.is_zero() {
            continue;
        }
        acc = gcd(&acc, &c);
        if acc.is_one() {
            break;
        }
    }
    acc
}

fn primitive_part_in(f: &Polynomial, var: u32) -> Polynomial {
    let c = content_in(f, var);
    f.div_exact(&c).expect("content divides the polynomial")
}

fn lead_coeff_in(f: &Polynomial, var: u32) -> Polynomial {
    f.coefficients_in(var).pop().unwrap_or_else(Polynomial::zero)
}

/// Pseudo-remainder of `a` by `b` with respect to `var`.
fn pseudo_rem(a: &Polynomial, b: &Polynomial, var: u32) -> Polynomial {
    let db = b.degree_in(var);
    let lb = lead_coeff_in(b, var);
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(var) >= db {
        let dr = r.degree_in(var);
        let lr = lead_coeff_in(&r, var);
        let shift = Polynomial::from_coefficients_in(
            var,
            &(0..=dr - db)
                .map(|i| if i == dr - db { lr.clone() } else { Polynomial::zero() })
                .collect::<Vec<_>>(),
        );
        r = &(&lb * &r) - &(&shift * b);
    }
    r
}

/// Greatest common divisor, normalized by [`integer_primitive`]. `gcd(0, 0) = 0`.
pub fn gcd(f: &Polynomial, g: &Polynomial) -> Polynomial {
    if f.is_zero() {
        return integer_primitive(g).0;
    }
    if g.is_zero() {
        return integer_primitive(f).0;
    }
    if f.is_constant() || g.is_constant() {
        return Polynomial::one();
    }
    if let Some(h) = super::modgcd::gcd(f, g) {
        return h;
    }
    let Some(var) = smallest_var(f, g) else {
        return Polynomial::one();
    };
    let in_f = f.contains_var(var);
    let in_g = g.contains_var(var);
    if !in_f {
        return gcd(f, &content_in(g, var));
    }
    if !in_g {
        return gcd(&content_in(f, var), g);
    }
    let cf = content_in(f, var);
    let cg = content_in(g, var);
    let c = gcd(&cf, &cg);
    let mut a = f.div_exact(&cf).expect("content divides");
    let mut b = g.div_exact(&cg).expect("content divides");
    if a.degree_in(var) < b.degree_in(var) {
        std::mem::swap(&mut a, &mut b);
    }
    while !b.is_zero() {
        if b.degree_in(var) == 0 {
            // b is a primitive non-zero polynomial free of var: unit part only.
            a = Polynomial::one();
            break;
        }
        let r = pseudo_rem(&a, &b, var);
        a = b;
        b = if r.is_zero() { r } else { primitive_part_in(&r, var) };
    }
    let a = primitive_part_in(&a, var);
    integer_primitive(&(&a * &c)).0
}

/// Quotient of two polynomials. The denominator is never zero.
#[derive(Clone, Debug)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    /// Builds `num / den` with integer coefficients and content 1 overall.
    /// Panics if `den` is zero.
    pub fn new(num: Polynomial, den: Polynomial) -> Self {
        assert!(!den.is_zero(), "rational function with zero denominator");
        let mut rf = RationalFunction { num, den };
        rf.normalize_scalars();
        if rf.num.num_terms() > GCD_TERM_THRESHOLD || rf.den.num_terms() > GCD_TERM_THRESHOLD {
            rf.cancel();
        }
        rf
    }

    /// Builds `num / den` in fully canonical (gcd-cancelled) form.
    pub fn canonical(num: Polynomial, den: Polynomial) -> Self {
        let mut rf = RationalFunction::new(num, den);
        rf.cancel();
        rf
    }

    pub fn from_poly(p: Polynomial) -> Self {
        RationalFunction::new(p, Polynomial::one())
    }

    pub fn constant(c: Rational) -> Self {
        RationalFunction::from_poly(Polynomial::constant(c))
    }

    pub fn zero() -> Self {
        RationalFunction { num: Polynomial::zero(), den: Polynomial::one() }
    }

    pub fn one() -> Self {
        RationalFunction { num: Polynomial::one(), den: Polynomial::one() }
    }

    pub fn var(v: Var) -> Self {
        RationalFunction::from_poly(Polynomial::var(v))
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The value if no parameter occurs after cancellation of constants.
    pub fn constant_value(&self) -> Option<Rational> {
        let n = self.num.constant_value()?;
        let d = self.den.constant_value()?;
        Some(n / d)
    }

    /// The polynomial if the denominator is constant.
    pub fn to_polynomial(&self) -> Option<Polynomial> {
        let d = self.den.constant_value()?;
        Some(self.num.scale(&d.recip()))
    }

    fn normalize_scalars(&mut self) {
        if self.num.is_zero() {
            self.den = Polynomial::one();
            return;
        }
        let (den, factor) = integer_primitive(&self.den);
        let num = self.num.scale(&factor);
        let lcm = num.terms().fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()));
        let num = num.scale(&Rational::from_integer(lcm.clone()));
        let g = num.terms().fold(lcm.clone(), |acc, (_, c)| acc.gcd(c.numer()));
        let scale = Rational::new(lcm, g.clone());
        self.num = num.scale(&Rational::new(BigInt::one(), g));
        self.den = den.scale(&scale);
    }

    /// Cancels the polynomial gcd of numerator and denominator.
    pub fn cancel(&mut self) {
        if self.num.is_zero() || self.den.is_constant() {
            self.normalize_scalars();
            return;
        }
        let g = gcd(&self.num, &self.den);
        if !g.is_constant() {
            self.num = self.num.div_exact(&g).expect("gcd divides numerator");
            self.den = self.den.div_exact(&g).expect("gcd divides denominator");
        }
        self.normalize_scalars();
    }

    /// Exact value; `None` if the denominator vanishes.
    pub fn eval(&self, values: &[Rational]) -> Option<Rational> {
        let d = self.den.eval(values);
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(values) / d)
    }

    pub fn eval_f64(&self, values: &[f64]) -> f64 {
        self.num.eval_f64(values) / self.den.eval_f64(values)
    }

    pub fn recip(&self) -> RationalFunction {
        RationalFunction::new(self.den.clone(), self.num.clone())
    }

    pub fn add(&self, other: &RationalFunction) -> RationalFunction {
        if self.den == other.den {
            return RationalFunction::new(&self.num + &other.num, self.den.clone());
        }
        RationalFunction::new(
            &(&self.num * &other.den) + &(&other.num * &self.den),
            &self.den * &other.den,
        )
    }

    pub fn sub(&self, other: &RationalFunction) -> RationalFunction {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RationalFunction {
        RationalFunction { num: -&self.num, den: self.den.clone() }
    }

    pub fn mul(&self, other: &RationalFunction) -> RationalFunction {
        if other.den.is_one() && self.den.is_one() {
            return RationalFunction::new(&self.num * &other.num, Polynomial::one());
        }
        RationalFunction::new(&self.num * &other.num, &self.den * &other.den)
    }

    /// Panics if `other` is the zero function.
    pub fn div(&self, other: &RationalFunction) -> RationalFunction {
        RationalFunction::new(&self.num * &other.den, &self.den * &other.num)
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> RatFuncDisplay<'a> {
        RatFuncDisplay { rf: self, names }
    }
}

impl PartialEq for RationalFunction {
    /// Equality as functions: cross-multiplied numerators agree.
    fn eq(&self, other: &Self) -> bool {
        &self.num * &other.den == &other.num * &self.den
    }
}

pub struct RatFuncDisplay<'a> {
    rf: &'a RationalFunction,
    names: &'a [String],
}

fn wrapped(p: &Polynomial, names: &[String]) -> String {
    let text = p.display(names).to_string();
    let atomic = p.num_terms() == 1
        && p.terms().next().is_some_and(|(m, c)| {
            (m.is_one() && c.is_integer() && !c.is_negative()) || (!m.is_one() && c.is_one())
        });
    if atomic {
        text
    } else {
        format!("({text})")
    }
}

impl fmt::Display for RatFuncDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rf.den.is_one() {
            return write!(f, "{}", self.rf.num.display(self.names));
        }
        write!(f, "{}/{}", wrapped(&self.rf.num, self.names), wrapped(&self.rf.den, self.names))
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&[]))
    }
}
