//! Multivariate polynomial gcd over Q by recursive primitive remainder sequences.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::Polynomial;
use super::Scalar;

/// Monic greatest common divisor. `gcd(0, 0) = 0`.
pub fn gcd(a: &Polynomial, b: &Polynomial) -> Polynomial {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() || a == b {
        return a.monic();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Polynomial::one();
    }
    // split off the monomial content first; it is the whole answer when
    // either side is a single term
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let len = ma.len().min(mb.len());
    let mono: Vec<u32> = (0..len).map(|i| ma[i].min(mb[i])).collect();
    let mono_poly = Polynomial::term(mono, num_traits::One::one());
    if a.is_monomial() || b.is_monomial() {
        return mono_poly;
    }
    let a = a.div_monomial(&ma);
    let b = b.div_monomial(&mb);
    if coprime_by_images(&a, &b) {
        return mono_poly;
    }
    let g = heuristic_gcd(&integral(&a), &integral(&b)).unwrap_or_else(|| gcd_rec(&a, &b));
    (&mono_poly * &g).monic()
}

const PRIME: u64 = 2_147_483_629;

fn mod_pow(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    b %= PRIME;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % PRIME;
        }
        b = b * b % PRIME;
        e >>= 1;
    }
    r
}

fn scalar_mod(c: &super::Scalar) -> Option<u64> {
    let p = BigInt::from(PRIME);
    let num = (c.numer() % &p + &p) % &p;
    let den = (c.denom() % &p + &p) % &p;
    let den = den.to_u64()?;
    (den != 0).then(|| num.to_u64().unwrap() * mod_pow(den, PRIME - 2) % PRIME)
}

/// Image of `p` in `F_p[x_var]` with the other variables set to `point`.
fn univariate_image(p: &Polynomial, var: usize, point: &[u64]) -> Option<Vec<u64>> {
    let mut out = vec![0u64; p.degree_in(var) as usize + 1];
    for (m, c) in p.terms() {
        let mut v = scalar_mod(c)?;
        for (i, &e) in m.iter().enumerate() {
            if i != var && e > 0 {
                v = v * mod_pow(point[i], e as u64) % PRIME;
            }
        }
        let d = m.get(var).copied().unwrap_or(0) as usize;
        out[d] = (out[d] + v) % PRIME;
    }
    Some(out)
}

fn trim_mod(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn univariate_gcd_degree(mut a: Vec<u64>, mut b: Vec<u64>) -> usize {
    trim_mod(&mut a);
    trim_mod(&mut b);
    while !b.is_empty() {
        // a mod b
        let inv = mod_pow(*b.last().unwrap(), PRIME - 2);
        while a.len() >= b.len() {
            let f = a.last().unwrap() * inv % PRIME;
            let shift = a.len() - b.len();
            for (i, bc) in b.iter().enumerate() {
                a[i + shift] = (a[i + shift] + PRIME - f * bc % PRIME) % PRIME;
            }
            trim_mod(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len().saturating_sub(1)
}

/// Certify `gcd(a, b) = 1` from univariate images modulo a prime.
///
/// If the leading coefficients in `x` survive the evaluation, the image of the
/// gcd divides the gcd of the images, so a constant image gcd rules `x` out.
/// A `false` answer is inconclusive.
fn coprime_by_images(a: &Polynomial, b: &Polynomial) -> bool {
    let nv = a.nvars().max(b.nvars());
    let mut seed: u64 = 0x9e37_79b9;
    for var in 0..nv {
        let (da, db) = (a.degree_in(var), b.degree_in(var));
        if da == 0 || db == 0 {
            continue;
        }
        let mut settled = false;
        for _ in 0..3 {
            let point: Vec<u64> = (0..nv)
                .map(|_| {
                    seed = seed.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
                    (seed >> 33) % PRIME
                })
                .collect();
            let (Some(ia), Some(ib)) = (univariate_image(a, var, &point), univariate_image(b, var, &point)) else {
                return false;
            };
            if ia.len() != da as usize + 1 || ib.len() != db as usize + 1 || ia[da as usize] == 0 || ib[db as usize] == 0 {
                continue;
            }
            if univariate_gcd_degree(ia, ib) > 0 {
                return false;
            }
            settled = true;
            break;
        }
        if !settled {
            return false;
        }
    }
    true
}

fn gcd_rec(a: &Polynomial, b: &Polynomial) -> Polynomial {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Polynomial::one();
    }
    if a == b {
        return a.monic();
    }
    let var = a.nvars().max(b.nvars()) - 1;
    let da = a.degree_in(var);
    let db = b.degree_in(var);
    if da == 0 {
        return gcd_rec(a, &content(b, var));
    }
    if db == 0 {
        return gcd_rec(&content(a, var), b);
    }
    let ca = content(a, var);
    let cb = content(b, var);
    let c = gcd_rec(&ca, &cb);
    let mut p = a.div_exact(&ca).expect("content divides");
    let mut q = b.div_exact(&cb).expect("content divides");
    if p.degree_in(var) < q.degree_in(var) {
        std::mem::swap(&mut p, &mut q);
    }
    loop {
        let r = pseudo_remainder(&p, &q, var);
        if r.is_zero() {
            break;
        }
        if r.degree_in(var) == 0 {
            q = Polynomial::one();
            break;
        }
        p = q;
        q = primitive_part(&r, var);
    }
    (&c * &primitive_part(&q, var)).monic()
}

/// Scale `p` to integer coefficients with trivial content.
fn integral(p: &Polynomial) -> Polynomial {
    let den = p.terms().fold(BigInt::one(), |l, (_, c)| l.lcm(c.denom()));
    let scaled = p.scale(&Scalar::from_integer(den));
    let c = int_content(&scaled);
    scaled.scale(&Scalar::new(BigInt::one(), c))
}

fn int_content(p: &Polynomial) -> BigInt {
    p.terms().fold(BigInt::zero(), |g, (_, c)| g.gcd(c.numer()))
}

fn max_norm(p: &Polynomial) -> BigInt {
    p.terms().map(|(_, c)| c.numer().abs()).max().unwrap_or_default()
}

/// `p` with `x_var = xi`.
fn eval_at(p: &Polynomial, var: usize, xi: &BigInt) -> Polynomial {
    Polynomial::from_terms(p.terms().map(|(m, c)| {
        let mut m = m.clone();
        let e = m.get(var).copied().unwrap_or(0);
        if let Some(x) = m.get_mut(var) {
            *x = 0;
        }
        (m, c * Scalar::from_integer(xi.pow(e)))
    }))
}

/// Representative of `c mod xi` in `(-xi/2, xi/2]`.
fn symmetric_mod(c: &BigInt, xi: &BigInt) -> BigInt {
    let r = c.mod_floor(xi);
    if &r * 2 > *xi {
        r - xi
    } else {
        r
    }
}

/// Undo the evaluation: read the coefficients of `x_var` off the `xi`-adic
/// digits of `gamma`.
fn reconstruct(gamma: &Polynomial, var: usize, xi: &BigInt, max_deg: u32) -> Option<Polynomial> {
    let mut rest = gamma.clone();
    let mut terms = Vec::new();
    let mut i = 0u32;
    while !rest.is_zero() {
        if i > max_deg {
            return None;
        }
        let digit = Polynomial::from_terms(rest.terms().map(|(m, c)| (m.clone(), Scalar::from_integer(symmetric_mod(c.numer(), xi)))));
        rest = (&rest - &digit).scale(&Scalar::new(BigInt::one(), xi.clone()));
        for (m, c) in digit.terms() {
            let mut m = m.clone();
            if m.len() <= var {
                m.resize(var + 1, 0);
            }
            m[var] = i;
            terms.push((m, c.clone()));
        }
        i += 1;
    }
    Some(Polynomial::from_terms(terms))
}

/// Heuristic gcd of integer polynomials: evaluate one variable at a large
/// integer, recurse, and lift the answer back from its `xi`-adic digits. A
/// lifted candidate that divides both inputs is the gcd. `None` means give up.
fn heuristic_gcd(a: &Polynomial, b: &Polynomial) -> Option<Polynomial> {
    const MAX_BITS: u64 = 16_384;
    let (ca, cb) = (int_content(a), int_content(b));
    if ca.is_zero() || cb.is_zero() {
        return None;
    }
    let c = ca.gcd(&cb);
    let nv = a.nvars().max(b.nvars());
    let Some(var) = (0..nv).rev().find(|&v| a.degree_in(v) > 0 || b.degree_in(v) > 0) else {
        return Some(Polynomial::constant(Scalar::from_integer(c)));
    };
    let pa = a.scale(&Scalar::new(BigInt::one(), ca));
    let pb = b.scale(&Scalar::new(BigInt::one(), cb));
    let (da, db) = (pa.degree_in(var), pb.degree_in(var));
    let mut xi: BigInt = max_norm(&pa).min(max_norm(&pb)) * 2 + 29;
    for _ in 0..6 {
        if xi.bits() * u64::from(da.max(db)) > MAX_BITS {
            return None;
        }
        let gamma = heuristic_gcd(&eval_at(&pa, var, &xi), &eval_at(&pb, var, &xi))?;
        if let Some(g) = reconstruct(&gamma, var, &xi, da.min(db)) {
            let content = int_content(&g);
            if !content.is_zero() {
                let g = g.scale(&Scalar::new(BigInt::one(), content));
                if pa.div_exact(&g).is_some() && pb.div_exact(&g).is_some() {
                    let g = if g.leading_coefficient().numer().sign() == Sign::Minus { -g } else { g };
                    return Some(g.scale(&Scalar::from_integer(c)));
                }
            }
        }
        xi = xi * 73_794 / 27_011;
    }
    None
}

/// gcd of the coefficients of `p` viewed as a polynomial in `var`.
fn content(p: &Polynomial, var: usize) -> Polynomial {
    let mut g = Polynomial::zero();
    for c in p.to_univariate(var) {
        if c.is_zero() {
            continue;
        }
        g = gcd_rec(&g, &c);
        if g.as_constant().is_some() {
            return Polynomial::one();
        }
    }
    g
}

fn primitive_part(p: &Polynomial, var: usize) -> Polynomial {
    let c = content(p, var);
    p.div_exact(&c).expect("content divides")
}

/// `lc(b)^(deg a - deg b + 1) * a  mod  b` with respect to `var`.
pub(crate) fn pseudo_remainder(a: &Polynomial, b: &Polynomial, var: usize) -> Polynomial {
    let bu = b.to_univariate(var);
    let db = bu.len() - 1;
    let lb = bu[db].clone();
    let mut r = a.to_univariate(var);
    let mut steps = (r.len() as isize - db as isize + 1).max(0) as u32;
    while r.len() > db && !r.is_empty() {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        let shift = dr - db;
        for c in r.iter_mut() {
            *c = &*c * &lb;
        }
        for (i, bc) in bu.iter().enumerate() {
            let t = &lr * bc;
            r[i + shift] = &r[i + shift] - &t;
        }
        while r.last().is_some_and(Polynomial::is_zero) {
            r.pop();
        }
        steps -= 1;
    }
    let mut out = Polynomial::from_univariate(&r, var);
    if steps > 0 {
        out = &out * &lb.pow(steps);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Polynomial {
        Polynomial::var(i)
    }

    #[test]
    fn recovers_common_factor() {
        let f = &(&x(0) * &x(1)) + &Polynomial::from_int(1);
        let g1 = &(&x(0) + &x(2)) * &f;
        let g2 = &(&x(1).pow(2) - &x(2)) * &f;
        assert_eq!(gcd(&g1, &g2), f.monic());
    }

    #[test]
    fn coprime_inputs() {
        let a = &x(0).pow(2) + &x(1);
        let b = &x(0) - &x(1).pow(3);
        assert!(gcd(&a, &b).is_one());
    }

    #[test]
    fn monomial_fast_path() {
        let a = &x(0).pow(3) * &x(1);
        let b = &(&x(0).pow(2) * &x(1).pow(2)) + &x(0).pow(5);
        assert_eq!(gcd(&a, &b), x(0).pow(2));
    }

    #[test]
    fn gcd_with_multivariate_cofactors() {
        let f = &(&x(0).pow(2) * &x(2)) - &(&x(1) * &x(2)).pow(2);
        let h = &x(0) + &(&x(1) * &x(2));
        let a = &f * &h;
        let b = &h * &(&h + &Polynomial::from_int(2));
        let g = gcd(&a, &b);
        // f itself contains the factor (x0 + x1 x2) once after removing x2
        assert!(a.div_exact(&g).is_some());
        assert!(b.div_exact(&g).is_some());
        assert!(g.div_exact(&h.monic()).is_some());
    }

    #[test]
    fn heuristic_agrees_with_remainder_sequence() {
        let q = &(&(&Polynomial::one() + &x(0).pow(2)) + &x(1).pow(2)) + &x(2).pow(2);
        let n = &(&x(0).pow(2) * &x(1)) - &x(2).pow(2).scale(&Scalar::from_integer(3.into()));
        let a = &(&n * &q) - &x(1).scale(&Scalar::new(1.into(), 2.into()));
        let a = &a * &q;
        let b = q.pow(3);
        let h = heuristic_gcd(&integral(&a), &integral(&b)).expect("heuristic succeeds");
        assert_eq!(h.monic(), gcd_rec(&a, &b));
        assert_eq!(gcd(&a, &b), q.monic());
    }
}
