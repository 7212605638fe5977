//! High-precision shadow of the density-evolution recursions.
//!
//! The recursions are iterated independently here in 60-decimal-digit
//! fixed-point arithmetic over `BigInt` (exact rationals blow up in size
//! after a few steps; sixty digits leave fifty spare digits below the
//! twelve-significant-digit certification target). This file is a deliberate
//! from-scratch transcription with flat loops and no helpers shared with the
//! crate. Ten f64 steps are validated at three parameter points per
//! algorithm.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use vbcs::de::{DeRecursion, GenieDe, LmDe, SbbDe};

const DIGITS: u32 = 60;

/// Fixed-point number: `value = mantissa / 10^DIGITS`.
#[derive(Clone, Debug)]
struct Fx(BigInt);

fn scale() -> BigInt {
    BigInt::from(10u32).pow(DIGITS)
}

impl Fx {
    fn zero() -> Fx {
        Fx(BigInt::zero())
    }

    fn one() -> Fx {
        Fx(scale())
    }

    fn from_ratio(num: i64, den: i64) -> Fx {
        Fx(BigInt::from(num) * scale() / BigInt::from(den))
    }

    fn from_int(k: i64) -> Fx {
        Fx(BigInt::from(k) * scale())
    }

    fn add(&self, rhs: &Fx) -> Fx {
        Fx(&self.0 + &rhs.0)
    }

    fn sub(&self, rhs: &Fx) -> Fx {
        Fx(&self.0 - &rhs.0)
    }

    fn mul(&self, rhs: &Fx) -> Fx {
        Fx(&self.0 * &rhs.0 / scale())
    }

    fn div(&self, rhs: &Fx) -> Fx {
        Fx(&self.0 * scale() / &rhs.0)
    }

    fn pow(&self, k: usize) -> Fx {
        let mut acc = Fx::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn to_f64(&self) -> f64 {
        let digits = self.0.to_string();
        let neg = digits.starts_with('-');
        let body = if neg { &digits[1..] } else { &digits[..] };
        let mut out = 0.0f64;
        for ch in body.chars() {
            out = out * 10.0 + (ch as u8 - b'0') as f64;
        }
        out /= 10f64.powi(DIGITS as i32);
        if neg {
            -out
        } else {
            out
        }
    }

    fn abs(&self) -> Fx {
        Fx(self.0.abs())
    }
}

fn choose_fx(n: usize, k: usize) -> Fx {
    let mut num = BigInt::from(1u32);
    let mut den = BigInt::from(1u32);
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    Fx(num * scale() / den)
}

fn assert_close_12(expected: &Fx, got: f64, what: &str) {
    let e = expected.to_f64();
    let denom = e.abs().max(got.abs()).max(1e-300);
    let rel = (e - got).abs() / denom;
    assert!(rel <= 1e-12, "{what}: shadow {e:.17e}, f64 {got:.17e}, rel {rel:.3e}");
}

// ---------------------------------------------------------------------------
// Genie
// ---------------------------------------------------------------------------

struct GenieShadow {
    dv: usize,
    dc: usize,
    alpha: Fx,
    p_n: Vec<Fx>,
}

impl GenieShadow {
    fn new(dv: usize, dc: usize, alpha0: Fx) -> Self {
        let q = Fx::one().sub(&alpha0);
        let p_n = (0..=dc)
            .map(|i| choose_fx(dc, i).mul(&alpha0.pow(i)).mul(&q.pow(dc - i)))
            .collect();
        GenieShadow { dv, dc, alpha: alpha0, p_n }
    }

    fn step(&mut self) {
        let edge_mass = self.alpha.mul(&Fx::from_int(self.dc as i64));
        let p = if edge_mass.is_zero() { Fx::zero() } else { self.p_n[1].div(&edge_mass) };
        let pk0 = Fx::one().sub(&p).pow(self.dv);
        let a = Fx::one().sub(&Fx::one().sub(&p).pow(self.dv - 1));
        let mut next = vec![Fx::zero(); self.dc + 1];
        next[0] = self.p_n[0].add(&self.p_n[1]);
        for j in 2..=self.dc {
            for i in 0..=j {
                let t = choose_fx(j, i)
                    .mul(&Fx::one().sub(&a).pow(i))
                    .mul(&a.pow(j - i));
                next[i] = next[i].add(&self.p_n[j].mul(&t));
            }
        }
        self.alpha = self.alpha.mul(&pk0);
        self.p_n = next;
    }
}

#[test]
fn genie_matches_shadow() {
    for (dv, dc, num, den) in [(3usize, 6usize, 429i64, 1000i64), (5, 6, 55, 100), (4, 8, 383, 1000)] {
        let a0 = Fx::from_ratio(num, den);
        let mut shadow = GenieShadow::new(dv, dc, a0.clone());
        let mut fast = GenieDe::new(dv, dc, num as f64 / den as f64);
        for step in 0..10 {
            shadow.step();
            fast.step().unwrap();
            assert_close_12(&shadow.alpha, fast.alpha(), &format!("genie alpha step {step}"));
            let mut mass = Fx::zero();
            for x in &shadow.p_n {
                mass = mass.add(x);
            }
            assert!(Fx::one().sub(&mass).abs().to_f64() < 1e-50);
        }
    }
}

// ---------------------------------------------------------------------------
// LM
// ---------------------------------------------------------------------------

struct LmShadow {
    dv: usize,
    dc: usize,
    alpha: Fx,
    p_delta: Fx,
    n_tbl: Vec<Vec<Fx>>,
    d_prev: Fx,
}

impl LmShadow {
    fn new(dv: usize, dc: usize, alpha0: Fx) -> Self {
        let q = Fx::one().sub(&alpha0);
        let d0 = q.pow(dc - 1);
        let p_delta = q.mul(&Fx::one().sub(&d0).pow(dv));
        let mut n_tbl = vec![vec![Fx::zero(); dc + 1]; dc + 1];
        for i in 0..=dc {
            n_tbl[i][dc - i] = choose_fx(dc, i).mul(&alpha0.pow(i)).mul(&q.pow(dc - i));
        }
        LmShadow { dv, dc, alpha: alpha0, p_delta, n_tbl, d_prev: d0 }
    }

    fn step(&mut self) {
        let (dv, dc) = (self.dv, self.dc);
        let a = Fx::one().sub(&self.d_prev).pow(dv - 1);

        let mut r1 = vec![vec![Fx::zero(); dc + 1]; dc + 1];
        for k in 0..=dc {
            r1[0][0] = r1[0][0].add(&self.n_tbl[0][k]);
        }
        for i in 1..=dc {
            for k in 0..=(dc - i) {
                if self.n_tbl[i][k].is_zero() {
                    continue;
                }
                for j in 0..=k {
                    let t = choose_fx(k, j).mul(&a.pow(j)).mul(&Fx::one().sub(&a).pow(k - j));
                    r1[i][j] = r1[i][j].add(&self.n_tbl[i][k].mul(&t));
                }
            }
        }

        let edge_mass = self.alpha.mul(&Fx::from_int(dc as i64));
        let b = if edge_mass.is_zero() { Fx::zero() } else { r1[1][0].div(&edge_mass) };
        let pk0 = Fx::one().sub(&b).pow(dv);
        let alpha_next = self.alpha.mul(&pk0);

        let one_minus_b = Fx::one().sub(&b);
        let c = if one_minus_b.is_zero() { Fx::zero() } else { pk0.div(&one_minus_b) };
        let mut r2 = vec![vec![Fx::zero(); dc + 1]; dc + 1];
        for k in 0..=dc {
            for i in 0..=(dc - k) {
                if r1[i][k].is_zero() {
                    continue;
                }
                if i == 0 {
                    r2[0][k] = r2[0][k].add(&r1[0][k]);
                } else if i == 1 && k == 0 {
                    r2[0][0] = r2[0][0].add(&r1[1][0]);
                } else {
                    for j in 0..=i {
                        let t =
                            choose_fx(i, j).mul(&c.pow(j)).mul(&Fx::one().sub(&c).pow(i - j));
                        r2[j][k] = r2[j][k].add(&r1[i][k].mul(&t));
                    }
                }
            }
        }

        let mut num = Fx::zero();
        let mut den = Fx::zero();
        for i in 0..=dc {
            for j in 1..=dc {
                let w = Fx::from_int(j as i64).mul(&r2[i][j]);
                den = den.add(&w);
                if i == 0 {
                    num = num.add(&w);
                }
            }
        }
        let d = if den.is_zero() { Fx::zero() } else { num.div(&den) };
        self.p_delta = self.p_delta.mul(&Fx::one().sub(&d).pow(dv));
        self.alpha = alpha_next;
        self.n_tbl = r2;
        self.d_prev = d;
    }
}

#[test]
fn lm_matches_shadow() {
    for (dv, dc, num, den) in [(3usize, 6usize, 17i64, 100i64), (5, 6, 287, 1000), (4, 8, 155, 1000)] {
        let a0 = Fx::from_ratio(num, den);
        let mut shadow = LmShadow::new(dv, dc, a0);
        let mut fast = LmDe::new(dv, dc, num as f64 / den as f64);
        assert_close_12(&shadow.p_delta, fast.p_delta(), "lm p_delta init");
        for step in 0..10 {
            shadow.step();
            fast.step().unwrap();
            assert_close_12(&shadow.alpha, fast.alpha(), &format!("lm alpha step {step}"));
            assert_close_12(&shadow.p_delta, fast.p_delta(), &format!("lm p_delta step {step}"));
        }
    }
}

// ---------------------------------------------------------------------------
// SBB
// ---------------------------------------------------------------------------

struct SbbShadow {
    dv: usize,
    dc: usize,
    alpha: Fx,
    p_delta: Fx,
    n_tbl: Vec<Vec<Fx>>,
    n1_plus: Vec<Fx>,
    n1_c: Vec<Fx>,
    pk0_prev: Fx,
    pk1_prev: Fx,
    d_prev: Fx,
}

impl SbbShadow {
    fn new(dv: usize, dc: usize, alpha0: Fx) -> Self {
        let q = Fx::one().sub(&alpha0);
        let d0 = q.pow(dc - 1);
        let p_delta = q.mul(&Fx::one().sub(&d0).pow(dv));
        let mut n_tbl = vec![vec![Fx::zero(); dc + 1]; dc + 1];
        let mut n1_plus = vec![Fx::zero(); dc];
        for i in 0..=dc {
            let mass = choose_fx(dc, i).mul(&alpha0.pow(i)).mul(&q.pow(dc - i));
            if i == 1 {
                n1_plus[dc - 1] = mass;
            } else {
                n_tbl[i][dc - i] = mass;
            }
        }
        SbbShadow {
            dv,
            dc,
            alpha: alpha0,
            p_delta,
            n_tbl,
            n1_plus,
            n1_c: vec![Fx::zero(); dc],
            pk0_prev: Fx::one(),
            pk1_prev: Fx::zero(),
            d_prev: d0,
        }
    }

    fn step(&mut self) {
        let (dv, dc) = (self.dv, self.dc);
        let a = Fx::one().sub(&self.d_prev).pow(dv - 1);

        let mut r1 = vec![vec![Fx::zero(); dc + 1]; dc + 1];
        for k in 0..=dc {
            r1[0][0] = r1[0][0].add(&self.n_tbl[0][k]);
        }
        let shift = |src: &[Fx]| -> Vec<Fx> {
            let mut out = vec![Fx::zero(); dc + 1];
            for (k, mass) in src.iter().enumerate() {
                if mass.is_zero() {
                    continue;
                }
                for j in 0..=k {
                    let t = choose_fx(k, j).mul(&a.pow(j)).mul(&Fx::one().sub(&a).pow(k - j));
                    out[j] = out[j].add(&mass.mul(&t));
                }
            }
            out
        };
        for i in 2..=dc {
            r1[i] = shift(&self.n_tbl[i][..=(dc - i)]);
        }
        let n1p = shift(&self.n1_plus)[..dc].to_vec();
        let n1c = shift(&self.n1_c)[..dc].to_vec();

        let mut sum_plus = Fx::zero();
        for x in &n1p {
            sum_plus = sum_plus.add(x);
        }
        let mut sum_c = Fx::zero();
        for x in &n1c {
            sum_c = sum_c.add(x);
        }
        let mut deep = Fx::zero();
        for i in 2..=dc {
            let mut row = Fx::zero();
            for x in &r1[i] {
                row = row.add(x);
            }
            deep = deep.add(&Fx::from_int(i as i64).mul(&row));
        }
        let b_den = sum_plus.add(&deep);
        let b = if b_den.is_zero() { Fx::zero() } else { sum_plus.div(&b_den) };

        let tr0: Vec<Fx> = (0..=dv)
            .map(|j| choose_fx(dv, j).mul(&b.pow(j)).mul(&Fx::one().sub(&b).pow(dv - j)))
            .collect();
        let tr1: Vec<Fx> = (0..=dv)
            .map(|j| {
                if j == 0 {
                    Fx::zero()
                } else {
                    choose_fx(dv - 1, j - 1)
                        .mul(&b.pow(j - 1))
                        .mul(&Fx::one().sub(&b).pow(dv - j))
                }
            })
            .collect();
        let f_plus = if sum_plus.is_zero() { Fx::zero() } else { n1p[0].div(&sum_plus) };
        let f_c = if sum_c.is_zero() { Fx::zero() } else { n1c[0].div(&sum_c) };

        let raw0 = self.pk0_prev.mul(&tr0[0]);
        let raw1p = self.pk0_prev.mul(&tr0[1]).mul(&Fx::one().sub(&f_plus));
        let raw1c = self.pk1_prev.mul(&tr1[1]).mul(&Fx::one().sub(&f_c));
        let n_norm = raw0.add(&raw1p).add(&raw1c);
        let (pk0, pk1) = if n_norm.is_zero() {
            (Fx::one(), Fx::zero())
        } else {
            (raw0.div(&n_norm), raw1p.add(&raw1c).div(&n_norm))
        };
        let alpha_next = self.alpha.mul(&n_norm);

        let k_edge_mass = self.alpha.mul(&Fx::from_int(dc as i64));
        let p_r1 = if k_edge_mass.is_zero() {
            Fx::zero()
        } else {
            sum_plus.add(&sum_c).div(&k_edge_mass)
        };
        let c_num = raw0.add(
            &raw1p.add(&raw1c).mul(&Fx::from_ratio(dv as i64 - 1, dv as i64)),
        );
        let one_minus_p = Fx::one().sub(&p_r1);
        let c = if one_minus_p.is_zero() { Fx::zero() } else { c_num.div(&one_minus_p) };

        let mut denom_f = Fx::zero();
        for j in 1..=dv {
            denom_f = denom_f.add(&Fx::from_int(j as i64).mul(&self.pk0_prev).mul(&tr0[j]));
            if j >= 2 {
                denom_f =
                    denom_f.add(&Fx::from_int(j as i64 - 1).mul(&self.pk1_prev).mul(&tr1[j]));
            }
        }
        let frac_f_plus = if denom_f.is_zero() {
            Fx::zero()
        } else {
            self.pk0_prev.mul(&tr0[1]).div(&denom_f)
        };
        let mut tr1_sum = Fx::zero();
        for x in &tr1 {
            tr1_sum = tr1_sum.add(x);
        }
        let frac_f_c = if tr1_sum.is_zero() { Fx::zero() } else { tr1[1].div(&tr1_sum) };

        let mut r2 = vec![vec![Fx::zero(); dc + 1]; dc + 1];
        let mut n1p_next = vec![Fx::zero(); dc];
        let mut n1c_next = vec![Fx::zero(); dc];
        for k in 0..=dc {
            r2[0][k] = r2[0][k].add(&r1[0][k]);
        }
        for i in 2..=dc {
            for k in 0..=(dc - i) {
                if r1[i][k].is_zero() {
                    continue;
                }
                for j in 0..=i {
                    let t = choose_fx(i, j).mul(&c.pow(j)).mul(&Fx::one().sub(&c).pow(i - j));
                    let mass = r1[i][k].mul(&t);
                    if j == 0 {
                        r2[0][k] = r2[0][k].add(&mass);
                    } else if j == 1 {
                        n1p_next[k] = n1p_next[k].add(&mass);
                    } else {
                        r2[j][k] = r2[j][k].add(&mass);
                    }
                }
            }
        }
        for k in 0..dc {
            let keep = n1p[k].mul(&frac_f_plus).add(&n1c[k].mul(&frac_f_c));
            let drain = n1p[k].add(&n1c[k]).sub(&keep);
            if k == 0 {
                r2[0][0] = r2[0][0].add(&keep).add(&drain);
            } else {
                n1c_next[k] = n1c_next[k].add(&keep);
                r2[0][k] = r2[0][k].add(&drain);
            }
        }

        let mut num = Fx::zero();
        let mut den = Fx::zero();
        for i in 0..=dc {
            for j in 1..=dc {
                let w = Fx::from_int(j as i64).mul(&r2[i][j]);
                den = den.add(&w);
                if i == 0 {
                    num = num.add(&w);
                }
            }
        }
        for j in 1..dc {
            den = den.add(&Fx::from_int(j as i64).mul(&n1p_next[j].add(&n1c_next[j])));
        }
        let d = if den.is_zero() { Fx::zero() } else { num.div(&den) };
        self.p_delta = self.p_delta.mul(&Fx::one().sub(&d).pow(dv));
        self.alpha = alpha_next;
        self.n_tbl = r2;
        self.n1_plus = n1p_next;
        self.n1_c = n1c_next;
        self.pk0_prev = pk0;
        self.pk1_prev = pk1;
        self.d_prev = d;
    }
}

#[test]
fn sbb_matches_shadow() {
    for (dv, dc, num, den) in [(3usize, 6usize, 257i64, 1000i64), (5, 6, 389, 1000), (4, 8, 239, 1000)] {
        let a0 = Fx::from_ratio(num, den);
        let mut shadow = SbbShadow::new(dv, dc, a0);
        // SbbDe::new already performs iteration 1.
        shadow.step();
        let mut fast = SbbDe::new(dv, dc, num as f64 / den as f64).unwrap();
        assert_close_12(&shadow.alpha, fast.alpha(), "sbb alpha after init");
        assert_close_12(&shadow.p_delta, fast.p_delta(), "sbb p_delta after init");
        for step in 0..9 {
            shadow.step();
            fast.step().unwrap();
            assert_close_12(&shadow.alpha, fast.alpha(), &format!("sbb alpha step {step}"));
            assert_close_12(&shadow.p_delta, fast.p_delta(), &format!("sbb p_delta step {step}"));
        }
    }
}

#[test]
fn lm_single_step_alpha2_to_twelve_digits() {
    // One step from the iteration-0 state at d_v=3, d_c=6, alpha0 = 1/10.
    let mut shadow = LmShadow::new(3, 6, Fx::from_ratio(1, 10));
    shadow.step();
    let mut fast = LmDe::new(3, 6, 0.1);
    fast.step().unwrap();
    assert_close_12(&shadow.alpha, fast.alpha(), "lm alpha^(2) single step");
}
