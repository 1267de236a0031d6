//! Multivariate gcd by evaluation and interpolation modulo word-sized primes.
//!
//! Images modulo a prime are computed recursively: the last variable is
//! evaluated at enough points, the image gcds are scaled by the image of the
//! gcd of leading coefficients, and interpolated back. Images from several
//! primes are combined by Chinese remaindering and rational reconstruction.
//! A candidate is accepted only if it divides both inputs over the rationals.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::polynomial::{Monomial, Polynomial};
use super::rational::Rational;
use super::ratfunc::integer_primitive;

/// Primes tried before giving up.
const MAX_PRIMES: usize = 40;

type Exps = Vec<u16>;
/// Dense univariate polynomial, ascending, without trailing zeros.
type UPoly = Vec<u64>;
/// Sparse polynomial over `Z_p`, lexicographic in the exponent vectors.
type MPoly = BTreeMap<Exps, u64>;

#[derive(Clone, Copy)]
struct Zp(u64);

impl Zp {
    fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    fn mul(self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.0 as u128) as u64
    }

    fn pow(self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    fn inv(self, a: u64) -> u64 {
        self.pow(a, self.0 - 2)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let zp = Zp(n);
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &b in &BASES {
        let mut x = zp.pow(b, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = zp.mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes below `2^62`, descending.
fn primes() -> impl Iterator<Item = u64> {
    let mut n = (1u64 << 62) - 1;
    std::iter::from_fn(move || {
        while !is_prime(n) {
            n -= 2;
        }
        let p = n;
        n -= 2;
        Some(p)
    })
}

fn utrim(mut a: UPoly) -> UPoly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn ueval(zp: Zp, a: &[u64], x: u64) -> u64 {
    a.iter().rev().fold(0, |acc, &c| zp.add(zp.mul(acc, x), c))
}

/// Quotient and remainder; `b` must be non-zero.
fn udivrem(zp: Zp, a: &[u64], b: &[u64]) -> (UPoly, UPoly) {
    let mut r = a.to_vec();
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let inv = zp.inv(*b.last().unwrap());
    let mut q = vec![0; r.len() - b.len() + 1];
    for i in (0..q.len()).rev() {
        let c = zp.mul(r[i + b.len() - 1], inv);
        q[i] = c;
        if c != 0 {
            for (j, &y) in b.iter().enumerate() {
                r[i + j] = zp.sub(r[i + j], zp.mul(c, y));
            }
        }
    }
    r.truncate(b.len() - 1);
    (utrim(q), utrim(r))
}

fn umonic(zp: Zp, a: UPoly) -> UPoly {
    match a.last() {
        Some(&lc) if lc != 1 => {
            let inv = zp.inv(lc);
            a.into_iter().map(|c| zp.mul(c, inv)).collect()
        }
        _ => a,
    }
}

fn ugcd(zp: Zp, a: &[u64], b: &[u64]) -> UPoly {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    while !b.is_empty() {
        let r = udivrem(zp, &a, &b).1;
        a = b;
        b = r;
    }
    umonic(zp, a)
}

fn uinterpolate(zp: Zp, xs: &[u64], ys: &[u64]) -> UPoly {
    let m = xs.len();
    let mut c = ys.to_vec();
    for j in 1..m {
        for i in (j..m).rev() {
            let den = zp.sub(xs[i], xs[i - j]);
            c[i] = zp.mul(zp.sub(c[i], c[i - 1]), zp.inv(den));
        }
    }
    let mut out: UPoly = vec![c[m - 1]];
    for i in (0..m - 1).rev() {
        // out = out * (y - xs[i]) + c[i]
        let mut next = vec![0; out.len() + 1];
        for (k, &v) in out.iter().enumerate() {
            next[k + 1] = zp.add(next[k + 1], v);
            next[k] = zp.sub(next[k], zp.mul(v, xs[i]));
        }
        next[0] = zp.add(next[0], c[i]);
        out = next;
    }
    utrim(out)
}

fn lead(f: &MPoly) -> Option<(&Exps, u64)> {
    f.last_key_value().map(|(k, &c)| (k, c))
}

fn monic(zp: Zp, f: MPoly) -> MPoly {
    match lead(&f) {
        Some((_, lc)) if lc != 1 => {
            let inv = zp.inv(lc);
            f.into_iter().map(|(k, c)| (k, zp.mul(c, inv))).collect()
        }
        _ => f,
    }
}

fn one(n: usize) -> MPoly {
    BTreeMap::from([(vec![0; n], 1)])
}

/// Views `f` as a polynomial in all but the last variable over `Z_p[y]`.
fn split_last(f: &MPoly) -> BTreeMap<Exps, UPoly> {
    let mut out: BTreeMap<Exps, UPoly> = BTreeMap::new();
    for (k, &c) in f {
        let (head, e) = (k[..k.len() - 1].to_vec(), k[k.len() - 1] as usize);
        let u = out.entry(head).or_default();
        if u.len() <= e {
            u.resize(e + 1, 0);
        }
        u[e] = c;
    }
    out
}

fn join_last(parts: &BTreeMap<Exps, UPoly>) -> MPoly {
    let mut out = MPoly::new();
    for (head, u) in parts {
        for (e, &c) in u.iter().enumerate() {
            if c != 0 {
                let mut k = head.clone();
                k.push(e as u16);
                out.insert(k, c);
            }
        }
    }
    out
}

fn eval_last(zp: Zp, f: &MPoly, x: u64) -> MPoly {
    let mut out = MPoly::new();
    for (k, &c) in f {
        let v = zp.mul(c, zp.pow(x, k[k.len() - 1] as u64));
        let e = out.entry(k[..k.len() - 1].to_vec()).or_insert(0);
        *e = zp.add(*e, v);
    }
    out.retain(|_, c| *c != 0);
    out
}

fn mpoly_mul(zp: Zp, a: &MPoly, b: &MPoly) -> MPoly {
    let mut out = MPoly::new();
    for (ka, &ca) in a {
        for (kb, &cb) in b {
            let k: Exps = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
            let e = out.entry(k).or_insert(0);
            *e = zp.add(*e, zp.mul(ca, cb));
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

/// Whether `d` divides `f`. Remainders of an exact division never exceed
/// the per-variable degrees of `f`, which bounds the work otherwise.
fn divides(zp: Zp, d: &MPoly, f: &MPoly) -> bool {
    let Some((ld, cd)) = lead(d) else { return f.is_empty() };
    let ld = ld.clone();
    let n = ld.len();
    let bound: Vec<u16> = (0..n).map(|i| f.keys().map(|k| k[i]).max().unwrap_or(0)).collect();
    let inv = zp.inv(cd);
    let mut r = f.clone();
    while let Some((lr, cr)) = lead(&r) {
        if lr.iter().zip(&ld).any(|(a, b)| a < b) {
            return false;
        }
        let shift: Exps = lr.iter().zip(&ld).map(|(a, b)| a - b).collect();
        let q = zp.mul(cr, inv);
        for (k, &c) in d {
            let key: Exps = k.iter().zip(&shift).map(|(a, b)| a + b).collect();
            if key.iter().zip(&bound).any(|(a, b)| a > b) {
                return false;
            }
            let v = zp.sub(r.get(&key).copied().unwrap_or(0), zp.mul(q, c));
            if v == 0 {
                r.remove(&key);
            } else {
                r.insert(key, v);
            }
        }
    }
    true
}

fn content(zp: Zp, parts: &BTreeMap<Exps, UPoly>) -> UPoly {
    let mut acc: UPoly = Vec::new();
    for u in parts.values() {
        acc = ugcd(zp, &acc, u);
        if acc.len() == 1 {
            break;
        }
    }
    acc
}

fn divide_content(zp: Zp, parts: &mut BTreeMap<Exps, UPoly>, c: &[u64]) {
    if c.len() > 1 || c.first().is_some_and(|&x| x != 1) {
        for u in parts.values_mut() {
            *u = udivrem(zp, u, c).0;
        }
    }
}

/// Monic gcd over `Z_p` of two polynomials in `n` variables, or `None` if
/// too many evaluation points were unlucky.
fn gcd_mod(zp: Zp, f: &MPoly, g: &MPoly, n: usize) -> Option<MPoly> {
    if f.is_empty() {
        return Some(monic(zp, g.clone()));
    }
    if g.is_empty() {
        return Some(monic(zp, f.clone()));
    }
    if n == 0 {
        return Some(one(0));
    }
    let mut fs = split_last(f);
    let mut gs = split_last(g);
    if n == 1 {
        let h = ugcd(zp, &fs[&Vec::new()], &gs[&Vec::new()]);
        return Some(join_last(&BTreeMap::from([(Vec::new(), h)])));
    }
    let cf = content(zp, &fs);
    let cg = content(zp, &gs);
    let c = ugcd(zp, &cf, &cg);
    let c_poly = join_last(&BTreeMap::from([(vec![0; n - 1], c)]));
    divide_content(zp, &mut fs, &cf);
    divide_content(zp, &mut gs, &cg);
    let constant = |p: &BTreeMap<Exps, UPoly>| p.keys().all(|k| k.iter().all(|&e| e == 0));
    if constant(&fs) || constant(&gs) {
        return Some(monic(zp, c_poly));
    }
    let lcf = fs.last_key_value().unwrap().1.clone();
    let lcg = gs.last_key_value().unwrap().1.clone();
    let gamma = ugcd(zp, &lcf, &lcg);
    let degree = |p: &BTreeMap<Exps, UPoly>| p.values().map(|u| u.len() - 1).max().unwrap_or(0);
    let bound = degree(&fs).min(degree(&gs)) + gamma.len() - 1;
    let f1 = join_last(&fs);
    let g1 = join_last(&gs);

    let mut xs: Vec<u64> = Vec::new();
    let mut images: Vec<MPoly> = Vec::new();
    let mut lm: Option<Exps> = None;
    let mut x = 0u64;
    for _ in 0..4 * (bound + 1) + 16 {
        x += 1;
        if ueval(zp, &lcf, x) == 0 || ueval(zp, &lcg, x) == 0 {
            continue;
        }
        let h = gcd_mod(zp, &eval_last(zp, &f1, x), &eval_last(zp, &g1, x), n - 1)?;
        let hl = lead(&h).expect("gcd of non-zero polynomials").0.clone();
        if hl.iter().all(|&e| e == 0) {
            return Some(monic(zp, c_poly));
        }
        match &lm {
            Some(l) if hl > *l => continue,
            Some(l) if hl == *l => {}
            _ => {
                xs.clear();
                images.clear();
                lm = Some(hl);
            }
        }
        let s = ueval(zp, &gamma, x);
        xs.push(x);
        images.push(h.into_iter().map(|(k, c)| (k, zp.mul(c, s))).collect());
        if xs.len() > bound {
            let keys: BTreeSet<&Exps> = images.iter().flat_map(|h| h.keys()).collect();
            let mut parts: BTreeMap<Exps, UPoly> = BTreeMap::new();
            for k in keys {
                let ys: Vec<u64> = images.iter().map(|h| h.get(k).copied().unwrap_or(0)).collect();
                let u = uinterpolate(zp, &xs, &ys);
                if !u.is_empty() {
                    parts.insert(k.clone(), u);
                }
            }
            let ch = content(zp, &parts);
            divide_content(zp, &mut parts, &ch);
            let candidate = join_last(&parts);
            if divides(zp, &candidate, &f1) && divides(zp, &candidate, &g1) {
                return Some(monic(zp, mpoly_mul(zp, &candidate, &c_poly)));
            }
        }
    }
    None
}

/// `n/d` with `n/d ≡ u (mod m)` and `|n|, d ≤ √(m/2)`, if one exists.
fn rational_reconstruction(u: &BigInt, m: &BigInt) -> Option<Rational> {
    let bound = (m / BigInt::from(2)).sqrt();
    let (mut r0, mut r1) = (m.clone(), u.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound || !r1.gcd(&t1).is_one() {
        return None;
    }
    Some(Rational::new(r1, t1))
}

/// Greatest common divisor normalized by [`integer_primitive`], or `None`
/// if no prime produced a verified candidate.
pub fn gcd(f: &Polynomial, g: &Polynomial) -> Option<Polynomial> {
    let vars: Vec<u32> = f.vars().into_iter().chain(g.vars()).map(|v| v.0).collect::<BTreeSet<_>>().into_iter().collect();
    let n = vars.len();
    let position = |v: u32| vars.binary_search(&v).expect("variable collected");
    let dense = |p: &Polynomial| -> Option<BTreeMap<Exps, BigInt>> {
        let (q, _) = integer_primitive(p);
        let mut out = BTreeMap::new();
        for (m, c) in q.terms() {
            let mut k = vec![0u16; n];
            for &(v, e) in m.pairs() {
                k[position(v)] = u16::try_from(e).ok()?;
            }
            out.insert(k, c.numer().clone());
        }
        Some(out)
    };
    let (fz, gz) = (dense(f)?, dense(g)?);
    let (fi, gi) = (integer_primitive(f).0, integer_primitive(g).0);

    let mut modulus = BigInt::one();
    let mut acc: BTreeMap<Exps, BigInt> = BTreeMap::new();
    let mut lm: Option<Exps> = None;
    for p in primes().take(MAX_PRIMES) {
        let zp = Zp(p);
        let big_p = BigInt::from(p);
        let reduce = |m: &BTreeMap<Exps, BigInt>| -> MPoly {
            m.iter()
                .map(|(k, c)| (k.clone(), c.mod_floor(&big_p).to_u64().expect("reduced below p")))
                .filter(|(_, c)| *c != 0)
                .collect()
        };
        let (fp, gp) = (reduce(&fz), reduce(&gz));
        // The prime must keep both leading terms.
        if lead(&fp).map(|l| l.0) != fz.keys().last() || lead(&gp).map(|l| l.0) != gz.keys().last() {
            continue;
        }
        let Some(h) = gcd_mod(zp, &fp, &gp, n) else { continue };
        let hl = lead(&h).expect("non-zero gcd").0.clone();
        if hl.iter().all(|&e| e == 0) {
            return Some(Polynomial::one());
        }
        match &lm {
            Some(l) if hl > *l => continue,
            Some(l) if hl == *l => {
                let inv = BigInt::from(zp.inv(modulus.mod_floor(&big_p).to_u64().unwrap()));
                let keys: BTreeSet<Exps> = acc.keys().chain(h.keys()).cloned().collect();
                for k in keys {
                    let a = acc.get(&k).cloned().unwrap_or_default();
                    let b = BigInt::from(h.get(&k).copied().unwrap_or(0));
                    let t = ((b - &a) * &inv).mod_floor(&big_p);
                    acc.insert(k, a + &modulus * t);
                }
                modulus *= &big_p;
            }
            _ => {
                acc = h.iter().map(|(k, &c)| (k.clone(), BigInt::from(c))).collect();
                modulus = big_p;
                lm = Some(hl);
            }
        }
        let mut terms = Vec::with_capacity(acc.len());
        for (k, c) in &acc {
            let Some(r) = rational_reconstruction(c, &modulus) else { break };
            let pairs = k.iter().enumerate().map(|(i, &e)| (vars[i], e as u32)).collect();
            terms.push((Monomial::from_pairs(pairs), r));
        }
        if terms.len() < acc.len() {
            continue;
        }
        let candidate = integer_primitive(&Polynomial::from_terms(terms)).0;
        if fi.div_exact(&candidate).is_some() && gi.div_exact(&candidate).is_some() {
            return Some(candidate);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::expr::{parse_polynomial, table_lookup};

    fn poly(text: &str) -> Polynomial {
        let names: Vec<String> = ["x", "y", "z", "w"].iter().map(|s| s.to_string()).collect();
        let p = parse_polynomial(text, &mut table_lookup(&names)).unwrap();
        p
    }

    #[test]
    fn primes_are_prime() {
        let ps: Vec<u64> = primes().take(3).collect();
        assert_eq!(ps[0], (1 << 62) - 57);
        assert!(ps.windows(2).all(|w| w[0] > w[1]));
        assert!(is_prime(1_000_000_007) && !is_prime(1_000_000_007 * 3));
    }

    #[test]
    fn univariate_interpolation_round_trips() {
        let zp = Zp(1_000_000_007);
        let f = vec![3, 0, 5, 1];
        let xs = vec![1, 2, 3, 4];
        let ys: Vec<u64> = xs.iter().map(|&x| ueval(zp, &f, x)).collect();
        assert_eq!(uinterpolate(zp, &xs, &ys), f);
    }

    #[test]
    fn recovers_common_factor() {
        let a = poly("(1 - x*y + 2/3*z) * (x + w^2)");
        let b = poly("(1 - x*y + 2/3*z) * (y - z + 5)");
        let g = gcd(&a, &b).unwrap();
        assert_eq!(g, integer_primitive(&poly("1 - x*y + 2/3*z")).0);
    }

    #[test]
    fn coprime_inputs_give_one() {
        assert_eq!(gcd(&poly("x + y"), &poly("x - y")), Some(Polynomial::one()));
        assert_eq!(gcd(&poly("x^2*y + 1"), &poly("z")), Some(Polynomial::one()));
    }

    #[test]
    fn large_coefficients_need_several_primes() {
        let c = poly("123456789123456789*x + 987654321987654321*y - 1");
        let a = &c * &poly("x - 3");
        let b = &c * &poly("y^2 + x");
        assert_eq!(gcd(&a, &b).unwrap(), integer_primitive(&c).0);
    }
}
