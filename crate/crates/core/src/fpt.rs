//! Floquet perturbation theory in the interaction `H_1` for the square-pulse
//! drive, to third order.
//!
//! In the frame rotating with the drive, `H_1` splits into components of
//! definite charge under `Σσˣ`,
//!
//! ```text
//! H_1 = Σ_m O_m,   [Σσˣ, O_m] = 2m O_m,   m ∈ {-2, …, 2},
//! ```
//!
//! and the rotating-frame operator `O_m(t) = f_m(t) O_m` carries the phase
//! `f_m(t) = e^{2imh0 t}` on the first half period and `e^{2imh0(T-t)}` on the
//! second. Here `σ±_j = σᶻ_j ∓ iσʸ_j`, a ladder in the y–z plane rather than
//! the usual x–y one:
//!
//! ```text
//! O_0  = (V0/4) Σ_j [1 + (σᶻσᶻ + σʸσʸ)/2]
//! O_±1 = (V0/4) Σ_j σ±_j
//! O_±2 = (V0/4) Σ_j σ±_j σ±_{j+1} / 4
//! ```
//!
//! The time-ordered coefficients
//! `c_{m…} = ∫_0^T dt_1 f_m(t_1) ∫_0^{t_1} dt_2 f_n(t_2) …` are evaluated in
//! closed form: every integrand is a sum of `t^p e^{2ih0 n t}` on each half,
//! and such terms integrate exactly.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::floquet::{drive_operator, quasienergies, DriveConfig, FloquetOperator};
use crate::hilbert::{total_sx, Axis, OperatorMatrix, PauliSum, SpinBasis};
use crate::models::build_h1;
use crate::{C64, I};

/// The charges `m` carried by the components of `H_1`.
pub const MODES: [i32; 5] = [-2, -1, 0, 1, 2];

fn slot(m: i32) -> usize {
    assert!((-2..=2).contains(&m), "Fourier index {m} outside -2..=2");
    (m + 2) as usize
}

#[derive(Clone, Debug)]
pub struct FourierComponent {
    pub m: i32,
    pub op: OperatorMatrix,
}

/// `O_{-2}, …, O_2` in that order.
pub fn build_fourier_components(basis: &SpinBasis, v0: f64) -> Vec<FourierComponent> {
    let l = basis.sites();
    let s = v0 / 4.0;
    let mut out = Vec::with_capacity(5);
    for m in MODES {
        let mut sum = PauliSum::new();
        for j in 0..l {
            let k = basis.right(j);
            match m {
                0 => {
                    sum.push_real(s, &[]);
                    sum.push_real(s / 2.0, &[(j, Axis::Z), (k, Axis::Z)]);
                    sum.push_real(s / 2.0, &[(j, Axis::Y), (k, Axis::Y)]);
                }
                1 | -1 => {
                    let sign = m as f64;
                    sum.push_real(s, &[(j, Axis::Z)]);
                    sum.push(C64::new(0.0, -sign * s), &[(j, Axis::Y)]);
                }
                _ => {
                    // (σᶻ ∓ iσʸ)(σᶻ ∓ iσʸ) = zz - yy ∓ i(zy + yz)
                    let sign = (m / 2) as f64;
                    let q = s / 4.0;
                    sum.push_real(q, &[(j, Axis::Z), (k, Axis::Z)]);
                    sum.push_real(-q, &[(j, Axis::Y), (k, Axis::Y)]);
                    sum.push(C64::new(0.0, -sign * q), &[(j, Axis::Z), (k, Axis::Y)]);
                    sum.push(C64::new(0.0, -sign * q), &[(j, Axis::Y), (k, Axis::Z)]);
                }
            }
        }
        let op = sum.build(basis, m == 0).expect("sites are in range");
        out.push(FourierComponent { m, op });
    }
    out
}

/// `f_m(t)` on `[0, T]`.
pub fn drive_phase(m: i32, h0: f64, period: f64, t: f64) -> C64 {
    let w = 2.0 * m as f64 * h0;
    if t <= period / 2.0 {
        C64::new(0.0, w * t).exp()
    } else {
        C64::new(0.0, w * (period - t)).exp()
    }
}

/// `I_m = ∫_0^T f_m = -(i/(m h0)) (e^{imh0T} - 1)`, and `T` for `m = 0`.
pub fn drive_integral(m: i32, h0: f64, period: f64) -> C64 {
    if m == 0 {
        return C64::new(period, 0.0);
    }
    let mh = m as f64 * h0;
    -I / mh * (C64::new(0.0, mh * period).exp() - 1.0)
}

/// `coef · t^power · e^{i ω n t}` with `ω = 2 h0`.
#[derive(Clone, Copy, Debug)]
struct Term {
    coef: C64,
    power: u32,
    n: i32,
}

#[derive(Clone, Debug, Default)]
struct ExpPoly(Vec<Term>);

impl ExpPoly {
    fn one() -> Self {
        ExpPoly(vec![Term {
            coef: C64::new(1.0, 0.0),
            power: 0,
            n: 0,
        }])
    }

    fn eval(&self, t: f64, omega: f64) -> C64 {
        self.0
            .iter()
            .map(|u| u.coef * t.powi(u.power as i32) * C64::new(0.0, omega * u.n as f64 * t).exp())
            .sum()
    }

    fn shifted(&self, factor: C64, dn: i32) -> Self {
        ExpPoly(
            self.0
                .iter()
                .map(|u| Term {
                    coef: u.coef * factor,
                    power: u.power,
                    n: u.n + dn,
                })
                .collect(),
        )
    }

    /// `∫_a^t` as a function of `t`.
    fn integral_from(&self, a: f64, omega: f64) -> Self {
        let mut out = Vec::new();
        for u in &self.0 {
            if u.n == 0 {
                out.push(Term {
                    coef: u.coef / (u.power + 1) as f64,
                    power: u.power + 1,
                    n: 0,
                });
            } else {
                // ∫ s^p e^{αs} ds = e^{αs} Σ_j (-1)^j p!/(p-j)! s^{p-j} / α^{j+1}
                let alpha = C64::new(0.0, omega * u.n as f64);
                let mut falling = 1.0;
                let mut apow = alpha;
                for j in 0..=u.power {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    out.push(Term {
                        coef: u.coef * sign * falling / apow,
                        power: u.power - j,
                        n: u.n,
                    });
                    falling *= (u.power - j) as f64;
                    apow *= alpha;
                }
            }
        }
        let mut poly = ExpPoly(out);
        let at_a = poly.eval(a, omega);
        poly.0.push(Term {
            coef: -at_a,
            power: 0,
            n: 0,
        });
        poly
    }
}

/// `∫_0^T dt_1 f_{ms[0]}(t_1) ∫_0^{t_1} dt_2 f_{ms[1]}(t_2) …` in closed form.
pub fn ordered_integral(ms: &[i32], h0: f64, period: f64) -> C64 {
    let omega = 2.0 * h0;
    let half = period / 2.0;
    // antiderivative on each half: G(t) = ∫_0^t f G_inner
    let mut first = ExpPoly::one();
    let mut second = ExpPoly::one();
    for &m in ms.iter().rev() {
        let g1 = first.shifted(C64::new(1.0, 0.0), m);
        let g2 = second.shifted(C64::new(0.0, omega * m as f64 * period).exp(), -m);
        let new_first = g1.integral_from(0.0, omega);
        let mut new_second = g2.integral_from(half, omega);
        new_second.0.push(Term {
            coef: new_first.eval(half, omega),
            power: 0,
            n: 0,
        });
        first = new_first;
        second = new_second;
    }
    second.eval(period, omega)
}

const GL_ORDER: usize = 20;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

struct Quadrature {
    rule: Vec<(f64, f64)>,
    panels: usize,
    h0: f64,
    period: f64,
}

impl Quadrature {
    fn nested(&self, ms: &[i32], upper: f64) -> C64 {
        if ms.is_empty() {
            return C64::new(1.0, 0.0);
        }
        let half = self.period / 2.0;
        let mut pieces = vec![(0.0, upper.min(half))];
        if upper > half {
            pieces.push((half, upper));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (a, b) in pieces {
            let w = (b - a) / self.panels as f64;
            for p in 0..self.panels {
                let lo = a + p as f64 * w;
                for &(x, wt) in &self.rule {
                    let t = lo + 0.5 * w * (x + 1.0);
                    acc += drive_phase(ms[0], self.h0, self.period, t) * self.nested(&ms[1..], t) * (0.5 * w * wt);
                }
            }
        }
        acc
    }
}

/// The same ordered integral by nested composite Gauss–Legendre quadrature,
/// doubling the panel count until successive estimates agree to `tol`.
pub fn ordered_integral_quadrature(ms: &[i32], h0: f64, period: f64, tol: f64) -> Result<C64> {
    let mut q = Quadrature {
        rule: gauss_legendre(GL_ORDER),
        panels: 1,
        h0,
        period,
    };
    let mut prev = q.nested(ms, period);
    let mut change = f64::INFINITY;
    let max_panels = if ms.len() >= 3 { 8 } else { 64 };
    while q.panels < max_panels {
        q.panels *= 2;
        let next = q.nested(ms, period);
        change = (next - prev).norm();
        prev = next;
        if change <= tol * prev.norm().max(1.0) {
            return Ok(prev);
        }
    }
    Err(Error::Quadrature { change })
}

/// `I_m`, `c_mn` and `c_mnk` for one drive point, indexed by `m ∈ -2..=2`.
#[derive(Clone, Debug)]
pub struct FptCoefficients {
    pub h0: f64,
    pub period: f64,
    i_m: [C64; 5],
    c_mn: [[C64; 5]; 5],
    c_mnk: [[[C64; 5]; 5]; 5],
}

impl FptCoefficients {
    pub fn new(h0: f64, period: f64) -> Result<Self> {
        if !(h0 > 0.0) || !(period > 0.0) {
            return Err(Error::Config(format!(
                "h0 and T must be positive, got h0 = {h0}, T = {period}"
            )));
        }
        let zero = C64::new(0.0, 0.0);
        let mut i_m = [zero; 5];
        let mut c_mn = [[zero; 5]; 5];
        let mut c_mnk = [[[zero; 5]; 5]; 5];
        for m in MODES {
            i_m[slot(m)] = drive_integral(m, h0, period);
        }
        for m in MODES {
            for n in MODES {
                c_mn[slot(m)][slot(n)] = 0.5 * i_m[slot(m)] * i_m[slot(n)];
                for k in MODES {
                    c_mnk[slot(m)][slot(n)][slot(k)] = ordered_integral(&[m, n, k], h0, period);
                }
            }
        }
        Ok(FptCoefficients {
            h0,
            period,
            i_m,
            c_mn,
            c_mnk,
        })
    }

    pub fn for_drive(drive: &DriveConfig) -> Result<Self> {
        Self::new(drive.h0, drive.period())
    }

    pub fn i(&self, m: i32) -> C64 {
        self.i_m[slot(m)]
    }

    /// `c_mn = I_m I_n / 2`.
    pub fn cmn(&self, m: i32, n: i32) -> C64 {
        self.c_mn[slot(m)][slot(n)]
    }

    pub fn cmnk(&self, m: i32, n: i32, k: i32) -> C64 {
        self.c_mnk[slot(m)][slot(n)][slot(k)]
    }

    /// `max |c_mn + c_nm - I_m I_n|`, with `c_mn` taken from the ordered
    /// double integral rather than the closed form.
    pub fn pair_sum_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in MODES {
            for n in MODES {
                let a = ordered_integral(&[m, n], self.h0, self.period);
                let b = ordered_integral(&[n, m], self.h0, self.period);
                worst = worst.max((a + b - self.i(m) * self.i(n)).norm());
            }
        }
        worst
    }

    /// `max |c_mn - I_m I_n / 2|` against the ordered double integral.
    pub fn pair_closed_form_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in MODES {
            for n in MODES {
                let a = ordered_integral(&[m, n], self.h0, self.period);
                worst = worst.max((a - self.cmn(m, n)).norm());
            }
        }
        worst
    }

    /// `max |c_mnk - c_knm|`.
    pub fn reversal_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in MODES {
            for n in MODES {
                for k in MODES {
                    worst = worst.max((self.cmnk(m, n, k) - self.cmnk(k, n, m)).norm());
                }
            }
        }
        worst
    }

    /// `max |c_mnk + c_kmn + c_nkm - I_m I_n I_k / 2|`.
    pub fn cyclic_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in MODES {
            for n in MODES {
                for k in MODES {
                    let lhs = self.cmnk(m, n, k) + self.cmnk(k, m, n) + self.cmnk(n, k, m);
                    let rhs = 0.5 * self.i(m) * self.i(n) * self.i(k);
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
        worst
    }
}

/// A term of the perturbative Floquet Hamiltonian.
#[derive(Clone, Debug)]
pub struct FloquetOrder {
    pub order: u32,
    pub op: OperatorMatrix,
}

fn weighted_sum<I>(dim: usize, terms: I) -> OperatorMatrix
where
    I: IntoIterator<Item = (C64, OperatorMatrix)>,
{
    let mut acc = OperatorMatrix::zeros(dim).untagged();
    for (w, op) in terms {
        if w.norm() > 0.0 {
            acc = &acc + &(&op * w);
        }
    }
    acc
}

/// `(U_1, U_2)` with `U_1 = -i Σ I_m O_m` and `U_2 = -Σ c_mn O_m O_n`.
pub fn first_second_order(comps: &[FourierComponent], cf: &FptCoefficients) -> (OperatorMatrix, OperatorMatrix) {
    let dim = comps[0].op.dim();
    let u1 = weighted_sum(dim, comps.iter().map(|c| (-I * cf.i(c.m), c.op.clone())));
    let u2 = weighted_sum(
        dim,
        comps.iter().flat_map(|a| {
            comps
                .iter()
                .map(move |b| (-cf.cmn(a.m, b.m), a.op.matmul(&b.op)))
        }),
    );
    (u1, u2)
}

/// `U_3 = i Σ c_mnk O_m O_n O_k`.
pub fn third_order_product(comps: &[FourierComponent], cf: &FptCoefficients) -> OperatorMatrix {
    let dim = comps[0].op.dim();
    let mut terms = Vec::new();
    for a in comps {
        for b in comps {
            let ab = a.op.matmul(&b.op);
            for c in comps {
                terms.push((I * cf.cmnk(a.m, b.m, c.m), ab.matmul(&c.op)));
            }
        }
    }
    weighted_sum(dim, terms)
}

fn hermitian(op: OperatorMatrix, order: u32) -> Result<FloquetOrder> {
    let defect = op.hermitian_defect();
    let scale = op.max_abs().max(1.0);
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian { defect });
    }
    let sym = &(&op + &op.adjoint()) * 0.5;
    Ok(FloquetOrder {
        order,
        op: sym.tagged_hermitian()?,
    })
}

/// `H_F^(1) = (1/T) Σ_m I_m O_m`.
pub fn hf1_coefficient_sum(comps: &[FourierComponent], cf: &FptCoefficients) -> OperatorMatrix {
    let dim = comps[0].op.dim();
    weighted_sum(dim, comps.iter().map(|c| (cf.i(c.m) / cf.period, c.op.clone())))
}

/// First-order Floquet Hamiltonian written out in Pauli strings, `y = h0 T`:
///
/// ```text
/// (V0/4) Σ_j [ 1 + (zz + yy)/2 + (2 sin y / y) σᶻ_j - (2 (cos y - 1) / y) σʸ_j
///              + (sin 2y / 4y)(zz - yy) - ((cos 2y - 1) / 4y)(zy + yz) ]
/// ```
pub fn hf1_closed_form(basis: &SpinBasis, v0: f64, h0: f64, period: f64) -> OperatorMatrix {
    let y = h0 * period;
    let s = v0 / 4.0;
    let mut sum = PauliSum::new();
    for j in 0..basis.sites() {
        let k = basis.right(j);
        sum.push_real(s, &[]);
        sum.push_real(s * 0.5, &[(j, Axis::Z), (k, Axis::Z)]);
        sum.push_real(s * 0.5, &[(j, Axis::Y), (k, Axis::Y)]);
        sum.push_real(s * 2.0 * y.sin() / y, &[(j, Axis::Z)]);
        sum.push_real(-s * 2.0 * (y.cos() - 1.0) / y, &[(j, Axis::Y)]);
        let a = s * (2.0 * y).sin() / (4.0 * y);
        sum.push_real(a, &[(j, Axis::Z), (k, Axis::Z)]);
        sum.push_real(-a, &[(j, Axis::Y), (k, Axis::Y)]);
        let b = -s * ((2.0 * y).cos() - 1.0) / (4.0 * y);
        sum.push_real(b, &[(j, Axis::Z), (k, Axis::Y)]);
        sum.push_real(b, &[(j, Axis::Y), (k, Axis::Z)]);
    }
    sum.build(basis, true).expect("sites are in range")
}

/// Agreement of the two constructions of `H_F^(1)` required by [`hf1`].
pub const HF1_TOL: f64 = 1e-12;

/// First-order Floquet Hamiltonian; fails if the coefficient sum and the
/// closed form disagree.
pub fn hf1(basis: &SpinBasis, v0: f64, h0: f64, period: f64) -> Result<FloquetOrder> {
    let comps = build_fourier_components(basis, v0);
    let cf = FptCoefficients::new(h0, period)?;
    let sum = hf1_coefficient_sum(&comps, &cf);
    let closed = hf1_closed_form(basis, v0, h0, period);
    let residual = sum.max_abs_diff(&closed);
    if residual > HF1_TOL * v0.abs().max(1.0) {
        return Err(Error::Tolerance {
            check: "first-order Floquet Hamiltonian, closed form vs coefficient sum".into(),
            residual,
            tol: HF1_TOL,
        });
    }
    hermitian(closed, 1)
}

/// `max |U_2 - U_1²/2|`, whose vanishing means `H_F^(2) = 0`.
pub fn hf2_check(basis: &SpinBasis, v0: f64, h0: f64, period: f64) -> Result<f64> {
    let comps = build_fourier_components(basis, v0);
    let cf = FptCoefficients::new(h0, period)?;
    let (u1, u2) = first_second_order(&comps, &cf);
    Ok((&u2 - &(&u1.matmul(&u1) * 0.5)).max_abs())
}

/// `H_F^(3) = (i/T)(U_3 - U_1 U_2 + U_1³/3)`.
pub fn hf3_direct(comps: &[FourierComponent], cf: &FptCoefficients) -> OperatorMatrix {
    let (u1, u2) = first_second_order(comps, cf);
    let u3 = third_order_product(comps, cf);
    let cube = u1.matmul(&u1).matmul(&u1);
    let inner = &(&u3 - &u1.matmul(&u2)) + &(&cube * (1.0 / 3.0));
    &inner * (I / cf.period)
}

fn double_commutator(a: &OperatorMatrix, b: &OperatorMatrix, c: &OperatorMatrix) -> OperatorMatrix {
    let ab = &a.matmul(b) - &b.matmul(a);
    &ab.matmul(c) - &c.matmul(&ab)
}

/// `H_F^(3) = -(1/3T) [ Σ_{m≠k} (c_mmk - c_mkm) [[O_k, O_m], O_m]
///                    + Σ_{m,n,k distinct} c_mnk [[O_m, O_n], O_k] ]`.
pub fn hf3_commutator(comps: &[FourierComponent], cf: &FptCoefficients) -> OperatorMatrix {
    let dim = comps[0].op.dim();
    let mut terms = Vec::new();
    for a in comps {
        for c in comps {
            if a.m == c.m {
                continue;
            }
            let w = cf.cmnk(a.m, a.m, c.m) - cf.cmnk(a.m, c.m, a.m);
            terms.push((w, double_commutator(&c.op, &a.op, &a.op)));
        }
    }
    for a in comps {
        for b in comps {
            for c in comps {
                if a.m == b.m || b.m == c.m || a.m == c.m {
                    continue;
                }
                terms.push((cf.cmnk(a.m, b.m, c.m), double_commutator(&a.op, &b.op, &c.op)));
            }
        }
    }
    let s = weighted_sum(dim, terms);
    &s * C64::new(-1.0 / (3.0 * cf.period), 0.0)
}

/// Agreement of the two constructions of `H_F^(3)`, relative to its size.
pub const HF3_TOL: f64 = 1e-10;

/// Third-order Floquet Hamiltonian; fails if the product and commutator
/// forms disagree.
pub fn hf3(basis: &SpinBasis, v0: f64, h0: f64, period: f64) -> Result<FloquetOrder> {
    let comps = build_fourier_components(basis, v0);
    let cf = FptCoefficients::new(h0, period)?;
    let direct = hf3_direct(&comps, &cf);
    let comm = hf3_commutator(&comps, &cf);
    let residual = direct.max_abs_diff(&comm);
    if residual > HF3_TOL * comm.max_abs().max(1.0) {
        return Err(Error::Tolerance {
            check: "third-order Floquet Hamiltonian, product vs commutator form".into(),
            residual,
            tol: HF3_TOL,
        });
    }
    hermitian(comm, 3)
}

/// The `(m, n, k) = (0, 0, 1)` contribution `-(1/3T)(c_001 - c_010)[[O_1, O_0], O_0]`.
pub fn hf3_block_001(comps: &[FourierComponent], cf: &FptCoefficients) -> OperatorMatrix {
    let o0 = &comps[slot(0)].op;
    let o1 = &comps[slot(1)].op;
    let w = (cf.cmnk(0, 0, 1) - cf.cmnk(0, 1, 0)) * (-1.0 / (3.0 * cf.period));
    &double_commutator(o1, o0, o0) * w
}

/// Prefactor `-(1/(4h0²) + iT/(8h0)) (V0/4)³` of the `(0, 0, 1)` block at
/// `h0 T = 2πp`.
pub fn block_001_prefactor(v0: f64, h0: f64, period: f64) -> C64 {
    -(C64::new(1.0 / (4.0 * h0 * h0), period / (8.0 * h0))) * (v0 / 4.0).powi(3)
}

/// Which string content to pair with [`block_001_prefactor`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockForm {
    /// The published form, whose σˣ terms `x_j (z_{j±1} - i y_{j±1})` are
    /// those of the single commutator `[O_1, O_0]`.
    Published,
    /// The double commutator expanded in full.
    Derived,
}

/// `Σ_j [ i z_{j-1} z_j y_{j+1} + i y_{j-1} z_j z_{j+1} - 2i z_{j-1} y_j z_{j+1}
///        - z_{j-1} y_j y_{j+1} - y_{j-1} y_j z_{j+1} + 2 y_{j-1} z_j y_{j+1} + R_j ]`
///
/// with `R_j = x_j (z_{j-1} + z_{j+1} - i y_{j-1} - i y_{j+1})` for the
/// published form and
/// `R_j = x_{j-1} x_j (z_{j+1} - i y_{j+1}) + (z_{j-1} - i y_{j-1}) x_j x_{j+1} + 2 (z_j - i y_j)`
/// for `(V0/4)^{-3} [[O_1, O_0], O_0]`.
pub fn block_001_strings(basis: &SpinBasis, form: BlockForm) -> OperatorMatrix {
    use Axis::{X, Y, Z};
    let l = basis.sites();
    let mut sum = PauliSum::new();
    let one = C64::new(1.0, 0.0);
    for j in 0..l {
        let a = (j + l - 1) % l;
        let b = basis.right(j);
        sum.push(I, &[(a, Z), (j, Z), (b, Y)]);
        sum.push(I, &[(a, Y), (j, Z), (b, Z)]);
        sum.push(-2.0 * I, &[(a, Z), (j, Y), (b, Z)]);
        sum.push(-one, &[(a, Z), (j, Y), (b, Y)]);
        sum.push(-one, &[(a, Y), (j, Y), (b, Z)]);
        sum.push(2.0 * one, &[(a, Y), (j, Z), (b, Y)]);
        match form {
            BlockForm::Published => {
                sum.push(one, &[(a, Z), (j, X)]);
                sum.push(one, &[(j, X), (b, Z)]);
                sum.push(-I, &[(a, Y), (j, X)]);
                sum.push(-I, &[(j, X), (b, Y)]);
            }
            BlockForm::Derived => {
                sum.push(one, &[(a, X), (j, X), (b, Z)]);
                sum.push(-I, &[(a, X), (j, X), (b, Y)]);
                sum.push(one, &[(a, Z), (j, X), (b, X)]);
                sum.push(-I, &[(a, Y), (j, X), (b, X)]);
                sum.push(2.0 * one, &[(j, Z)]);
                sum.push(-2.0 * I, &[(j, Y)]);
            }
        }
    }
    sum.build(basis, false).expect("sites are in range")
}

/// The `(0, 0, 1)` block in Pauli-string form at `h0 T = 2πp`.
pub fn hf3_block_001_explicit(basis: &SpinBasis, v0: f64, h0: f64, period: f64, form: BlockForm) -> OperatorMatrix {
    &block_001_strings(basis, form) * block_001_prefactor(v0, h0, period)
}

/// `H_F = (i/T) log U` on the principal branch.
#[derive(Clone, Debug)]
pub struct ExactFloquetHamiltonian {
    pub op: OperatorMatrix,
    /// Some phase of `U` lies within [`BRANCH_TOL`] of `±π`.
    pub branch_warning: bool,
}

pub fn exact_hf(u: &FloquetOperator) -> Result<ExactFloquetHamiltonian> {
    let qs = quasienergies(u)?;
    let h = qs.floquet_hamiltonian(u.period());
    Ok(ExactFloquetHamiltonian {
        op: OperatorMatrix::from_dense(h, true)?,
        branch_warning: qs.branch_warning,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ParityReport {
    /// `max |U(-V0) U(V0) - I|`.
    pub product_defect: f64,
    /// `max |H_F(-V0) + H_F(V0)|`.
    pub hamiltonian_defect: f64,
    /// Pairing distance of `{θ(-V0)}` and `{-θ(V0)}`.
    pub phase_defect: f64,
    pub branch_warning: bool,
}

impl ParityReport {
    pub fn passed(&self) -> bool {
        self.product_defect < 1e-10 && self.phase_defect < 1e-9 && (self.branch_warning || self.hamiltonian_defect < 1e-9)
    }
}

/// `U(-V0) = U(V0)^{-1}`, hence `H_F` is odd in `V0`.
pub fn parity_check_v0(basis: &SpinBasis, h0: f64, period: f64, v0: f64) -> Result<ParityReport> {
    let plus = DriveConfig::new(h0, 2.0 * PI / period, v0)?;
    let minus = plus.with_v0(-v0);
    let up = drive_operator(basis, &plus)?;
    let um = drive_operator(basis, &minus)?;
    let prod = um.matrix() * up.matrix();
    let n = prod.nrows();
    let product_defect = (prod - DMatrix::<C64>::identity(n, n)).camax();
    let qp = quasienergies(&up)?;
    let qm = quasienergies(&um)?;
    let neg: Vec<f64> = qp.phases.iter().map(|t| -t).collect();
    let phase_defect = crate::floquet::phase_multiset_distance(&qm.phases, &neg).unwrap_or(f64::INFINITY);
    let hp = qp.floquet_hamiltonian(period);
    let hm = qm.floquet_hamiltonian(period);
    let hamiltonian_defect = (hp + hm).camax();
    Ok(ParityReport {
        product_defect,
        hamiltonian_defect,
        phase_defect,
        branch_warning: qp.branch_warning || qm.branch_warning,
    })
}

/// `‖[A, Σσˣ]‖_max`.
pub fn sx_commutator_norm(basis: &SpinBasis, op: &OperatorMatrix) -> f64 {
    op.matmul(&total_sx(basis)).max_abs_diff(&total_sx(basis).matmul(op))
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(name: &str, residual: f64, tol: f64) -> Self {
        IdentityCheck {
            name: name.into(),
            residual,
            tol,
            passed: residual <= tol,
        }
    }
}

/// Residuals of every perturbation-theory identity at one parameter point.
#[derive(Clone, Debug, Serialize)]
pub struct FptReport {
    pub sites: usize,
    pub v0: f64,
    pub h0: f64,
    pub period: f64,
    /// `h0 T / 2π`.
    pub cycles: f64,
    pub checks: Vec<IdentityCheck>,
    /// Comparison with the published string form of the `(0, 0, 1)` block;
    /// informational, not part of [`FptReport::passed`].
    pub published_block: Option<IdentityCheck>,
    pub hf1_sx_commutator: f64,
    pub hf3_sx_commutator: f64,
    pub branch_warning: bool,
}

impl FptReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Integer `p` with `h0 T = 2πp`, if any.
pub fn special_index(h0: f64, period: f64) -> Option<u32> {
    let p = h0 * period / (2.0 * PI);
    let r = p.round();
    ((p - r).abs() < 1e-9 && r >= 1.0).then_some(r as u32)
}

pub fn fpt_report(basis: &SpinBasis, v0: f64, h0: f64, period: f64) -> Result<FptReport> {
    let comps = build_fourier_components(basis, v0);
    let cf = FptCoefficients::new(h0, period)?;
    let sx = total_sx(basis);
    let mut checks = Vec::new();

    let sum = weighted_sum(basis.dim(), comps.iter().map(|c| (C64::new(1.0, 0.0), c.op.clone())));
    checks.push(IdentityCheck::new(
        "components_sum_to_interaction",
        sum.max_abs_diff(&build_h1(basis, v0)),
        1e-14 * v0.abs().max(1.0),
    ));
    let mut charge = 0.0f64;
    for c in &comps {
        charge = charge.max((&sx.commutator(&c.op)? - &(&c.op * (2.0 * c.m as f64))).max_abs());
    }
    checks.push(IdentityCheck::new("component_charges", charge, 1e-10));
    let adj = comps
        .iter()
        .map(|c| c.op.adjoint().max_abs_diff(&comps[slot(-c.m)].op))
        .fold(0.0, f64::max);
    checks.push(IdentityCheck::new("component_adjoints", adj, 1e-14));

    checks.push(IdentityCheck::new("pair_sum", cf.pair_sum_residual(), 1e-12 * period.powi(2).max(1.0)));
    checks.push(IdentityCheck::new(
        "pair_closed_form",
        cf.pair_closed_form_residual(),
        1e-12 * period.powi(2).max(1.0),
    ));
    checks.push(IdentityCheck::new("triple_reversal", cf.reversal_residual(), 1e-12 * period.powi(3).max(1.0)));
    checks.push(IdentityCheck::new("triple_cyclic_sum", cf.cyclic_residual(), 1e-12 * period.powi(3).max(1.0)));

    let (u1, u2) = first_second_order(&comps, &cf);
    checks.push(IdentityCheck::new(
        "second_order_vanishes",
        (&u2 - &(&u1.matmul(&u1) * 0.5)).max_abs(),
        1e-12 * u2.max_abs().max(1.0),
    ));

    let h1_sum = hf1_coefficient_sum(&comps, &cf);
    let h1_closed = hf1_closed_form(basis, v0, h0, period);
    checks.push(IdentityCheck::new(
        "first_order_closed_form",
        h1_sum.max_abs_diff(&h1_closed),
        HF1_TOL * v0.abs().max(1.0),
    ));

    let direct = hf3_direct(&comps, &cf);
    let comm = hf3_commutator(&comps, &cf);
    checks.push(IdentityCheck::new(
        "third_order_commutator_form",
        direct.max_abs_diff(&comm),
        HF3_TOL * comm.max_abs().max(1.0),
    ));
    checks.push(IdentityCheck::new(
        "third_order_hermitian",
        comm.hermitian_defect(),
        HF3_TOL * comm.max_abs().max(1.0),
    ));

    let mut published_block = None;
    if special_index(h0, period).is_some() {
        let c001 = C64::new(period / (4.0 * h0 * h0), period * period / (8.0 * h0));
        let scale = c001.norm().max(1.0);
        checks.push(IdentityCheck::new("c001_value", (cf.cmnk(0, 0, 1) - c001).norm(), 1e-12 * scale));
        checks.push(IdentityCheck::new(
            "c010_ratio",
            (cf.cmnk(0, 1, 0) + 2.0 * cf.cmnk(0, 0, 1)).norm(),
            1e-12 * scale,
        ));
        let block = hf3_block_001(&comps, &cf);
        let derived = hf3_block_001_explicit(basis, v0, h0, period, BlockForm::Derived);
        let tol = 1e-12 * block.max_abs().max(1.0);
        checks.push(IdentityCheck::new("third_order_block_001", block.max_abs_diff(&derived), tol));
        let published = hf3_block_001_explicit(basis, v0, h0, period, BlockForm::Published);
        published_block = Some(IdentityCheck::new(
            "third_order_block_001_published",
            block.max_abs_diff(&published),
            tol,
        ));
    }

    let parity = parity_check_v0(basis, h0, period, v0)?;
    checks.push(IdentityCheck::new("parity_product", parity.product_defect, 1e-10));
    checks.push(IdentityCheck::new("parity_phases", parity.phase_defect, 1e-9));

    Ok(FptReport {
        sites: basis.sites(),
        v0,
        h0,
        period,
        cycles: h0 * period / (2.0 * PI),
        checks,
        published_block,
        hf1_sx_commutator: sx_commutator_norm(basis, &h1_closed),
        hf3_sx_commutator: sx_commutator_norm(basis, &comm),
        branch_warning: parity.branch_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::DriveConfig;

    fn special(h0: f64, p: u32) -> f64 {
        2.0 * PI * p as f64 / h0
    }

    #[test]
    fn components_decompose_interaction() {
        let b = SpinBasis::new(4).unwrap();
        let comps = build_fourier_components(&b, 1.7);
        let mut sum = OperatorMatrix::zeros(16);
        for c in &comps {
            sum = &sum + &c.op;
        }
        assert!(sum.max_abs_diff(&build_h1(&b, 1.7)) < 1e-14);
        let sx = total_sx(&b);
        let o2 = &comps[slot(2)].op;
        assert!(sx.commutator(o2).unwrap().max_abs_diff(&(o2 * 4.0)) < 1e-10);
        assert_eq!(comps[slot(1)].op.adjoint().max_abs_diff(&comps[slot(-1)].op), 0.0);
    }

    #[test]
    fn drive_integrals() {
        assert_eq!(drive_integral(0, 2.0, 0.7), C64::new(0.7, 0.0));
        let h0 = 3.0;
        for m in [-2, -1, 1, 2] {
            assert!(drive_integral(m, h0, special(h0, 2)).norm() < 1e-14);
        }
        let t = PI / h0;
        assert!((drive_integral(1, h0, t) - C64::new(0.0, 2.0 / h0)).norm() < 1e-14);
        let q = ordered_integral_quadrature(&[1], h0, t, 1e-13).unwrap();
        assert!((q - drive_integral(1, h0, t)).norm() < 1e-12);
    }

    #[test]
    fn pair_coefficients_match_quadrature() {
        let (h0, t) = (1.7, 0.9);
        let cf = FptCoefficients::new(h0, t).unwrap();
        assert!((cf.cmn(0, 0) - C64::new(t * t / 2.0, 0.0)).norm() < 1e-15);
        for (m, n) in [(1, 0), (2, -1), (-2, 2), (1, 1)] {
            let q = ordered_integral_quadrature(&[m, n], h0, t, 1e-13).unwrap();
            assert!((q - cf.cmn(m, n)).norm() < 1e-10, "({m},{n})");
        }
        let t = PI / h0;
        let cf = FptCoefficients::new(h0, t).unwrap();
        assert!((cf.cmn(1, 0) - 0.5 * C64::new(0.0, 2.0 / h0) * t).norm() < 1e-14);
    }

    #[test]
    fn triple_coefficients_match_quadrature() {
        for (h0, t) in [(1.3, 1.0), (2.0, special(2.0, 1)), (0.8, 3.7)] {
            let cf = FptCoefficients::new(h0, t).unwrap();
            for (m, n, k) in [(0, 0, 1), (0, 1, 0), (2, -1, 1), (-2, 0, 2), (1, 2, -2)] {
                let q = ordered_integral_quadrature(&[m, n, k], h0, t, 1e-12).unwrap();
                assert!((q - cf.cmnk(m, n, k)).norm() < 1e-9, "({m},{n},{k}) at h0={h0}");
            }
        }
    }

    #[test]
    fn triple_coefficients_closed_values() {
        let cf = FptCoefficients::new(1.1, 2.3).unwrap();
        assert!((cf.cmnk(0, 0, 0) - C64::new(2.3f64.powi(3) / 6.0, 0.0)).norm() < 1e-13);
        for p in 1..=3 {
            let (h0, t) = (2.5, special(2.5, p));
            let cf = FptCoefficients::new(h0, t).unwrap();
            let c001 = C64::new(t / (4.0 * h0 * h0), t * t / (8.0 * h0));
            assert!((cf.cmnk(0, 0, 1) - c001).norm() < 1e-12);
            assert!((cf.cmnk(1, 0, 0) - c001).norm() < 1e-12);
            assert!((cf.cmnk(0, 1, 0) + 2.0 * c001).norm() < 1e-12);
        }
    }

    #[test]
    fn coefficient_identities() {
        for (h0, t) in [(1.3, 1.0), (2.0, special(2.0, 1)), (0.5, 4.1), (5.0, 0.2)] {
            let cf = FptCoefficients::new(h0, t).unwrap();
            let s = t.max(1.0);
            assert!(cf.pair_sum_residual() < 1e-12 * s * s);
            assert!(cf.pair_closed_form_residual() < 1e-12 * s * s);
            assert!(cf.reversal_residual() < 1e-12 * s.powi(3));
            assert!(cf.cyclic_residual() < 1e-12 * s.powi(3));
        }
    }

    #[test]
    fn first_order_at_special_frequency() {
        let b = SpinBasis::new(4).unwrap();
        let (v0, h0) = (0.6, 2.0);
        let h = hf1(&b, v0, h0, special(h0, 1)).unwrap();
        let mut expect = PauliSum::new();
        for j in 0..4 {
            expect.push_real(v0 / 4.0, &[]);
            expect.push_real(v0 / 8.0, &[(j, Axis::Z), ((j + 1) % 4, Axis::Z)]);
            expect.push_real(v0 / 8.0, &[(j, Axis::Y), ((j + 1) % 4, Axis::Y)]);
        }
        assert!(h.op.max_abs_diff(&expect.build(&b, true).unwrap()) < 1e-14);
        assert!(sx_commutator_norm(&b, &h.op) < 1e-12);
        // generic point: coefficient sum and closed form agree inside hf1
        let g = hf1(&b, v0, h0, 1.3 / h0).unwrap();
        assert!(g.op.is_hermitian());
        assert!(sx_commutator_norm(&b, &g.op) > 1e-3);
    }

    #[test]
    fn second_order_vanishes() {
        let b3 = SpinBasis::new(3).unwrap();
        assert!(hf2_check(&b3, 1.0, 1.0, 0.7).unwrap() < 1e-12);
        assert_eq!(hf2_check(&b3, 0.0, 1.0, 0.7).unwrap(), 0.0);
        let b4 = SpinBasis::new(4).unwrap();
        for (v0, h0, t) in [(0.3, 1.1, 0.9), (1.2, 0.4, 2.5), (0.05, 7.0, 0.31)] {
            assert!(hf2_check(&b4, v0, h0, t).unwrap() < 1e-12);
        }
    }

    #[test]
    fn third_order_properties() {
        let b = SpinBasis::new(4).unwrap();
        let h0 = 2.0;
        let t = special(h0, 1);
        let h3 = hf3(&b, 0.5, h0, t).unwrap();
        assert!(sx_commutator_norm(&b, &h3.op) > 1e-4);
        let tripled = hf3(&b, 1.5, h0, t).unwrap();
        let ratio = tripled.op.frobenius_norm() / h3.op.frobenius_norm();
        assert!((ratio - 27.0).abs() < 27.0 * 1e-6);
    }

    #[test]
    fn third_order_block() {
        let b = SpinBasis::new(5).unwrap();
        let (v0, h0) = (0.8, 1.5);
        let t = special(h0, 2);
        let comps = build_fourier_components(&b, v0);
        let cf = FptCoefficients::new(h0, t).unwrap();
        let block = hf3_block_001(&comps, &cf);
        let derived = hf3_block_001_explicit(&b, v0, h0, t, BlockForm::Derived);
        assert!(block.max_abs_diff(&derived) < 1e-13);
        // the published σʸ/σᶻ strings agree; only the σˣ terms differ
        let published = hf3_block_001_explicit(&b, v0, h0, t, BlockForm::Published);
        assert!(block.max_abs_diff(&published) > 1e-3);
        // derived minus published is exactly the σˣ-bearing strings
        let diff = &block_001_strings(&b, BlockForm::Derived) - &block_001_strings(&b, BlockForm::Published);
        let mut xs = PauliSum::new();
        for j in 0..5 {
            let (a, c) = ((j + 4) % 5, (j + 1) % 5);
            xs.push_real(1.0, &[(a, Axis::X), (j, Axis::X), (c, Axis::Z)]);
            xs.push(-I, &[(a, Axis::X), (j, Axis::X), (c, Axis::Y)]);
            xs.push_real(1.0, &[(a, Axis::Z), (j, Axis::X), (c, Axis::X)]);
            xs.push(-I, &[(a, Axis::Y), (j, Axis::X), (c, Axis::X)]);
            xs.push_real(2.0, &[(j, Axis::Z)]);
            xs.push(-2.0 * I, &[(j, Axis::Y)]);
            xs.push_real(-1.0, &[(a, Axis::Z), (j, Axis::X)]);
            xs.push_real(-1.0, &[(j, Axis::X), (c, Axis::Z)]);
            xs.push(I, &[(a, Axis::Y), (j, Axis::X)]);
            xs.push(I, &[(j, Axis::X), (c, Axis::Y)]);
        }
        assert!(diff.max_abs_diff(&xs.build(&b, false).unwrap()) < 1e-14);
    }

    #[test]
    fn exact_hamiltonian_round_trip() {
        let b = SpinBasis::new(4).unwrap();
        let drive = DriveConfig::new(1.0, 2.0 * PI / 1.3, 0.4).unwrap();
        let u = drive_operator(&b, &drive).unwrap();
        let hf = exact_hf(&u).unwrap();
        assert!(!hf.branch_warning);
        let rebuilt = crate::floquet::dense_exponential(&hf.op, u.period()).unwrap();
        assert!((rebuilt - u.matrix()).camax() < 1e-9);
        let id = FloquetOperator::new(DMatrix::identity(4, 4), 1.0).unwrap();
        assert!(exact_hf(&id).unwrap().op.max_abs() < 1e-15);
    }

    #[test]
    fn exact_minus_first_order_is_third_order() {
        let b = SpinBasis::new(4).unwrap();
        let (h0, t) = (1.0, 1.3);
        let mut diffs = Vec::new();
        for v0 in [0.1, 0.05] {
            let u = drive_operator(&b, &DriveConfig::new(h0, 2.0 * PI / t, v0).unwrap()).unwrap();
            let exact = exact_hf(&u).unwrap().op;
            let first = hf1(&b, v0, h0, t).unwrap().op;
            let third = hf3(&b, v0, h0, t).unwrap().op;
            let rest = &exact - &first;
            diffs.push(rest.frobenius_norm());
            // what is left after third order is fifth order
            assert!((&rest - &third).frobenius_norm() < 0.05 * third.frobenius_norm());
        }
        let ratio = diffs[0] / diffs[1];
        assert!((ratio - 8.0).abs() < 0.5, "halving V0 shrank the residual by {ratio}");
    }

    #[test]
    fn parity() {
        let b4 = SpinBasis::new(4).unwrap();
        let r = parity_check_v0(&b4, 1.0, 1.7, 0.3).unwrap();
        assert!(r.passed(), "{r:?}");
        let b3 = SpinBasis::new(3).unwrap();
        assert!(parity_check_v0(&b3, 1.0, special(1.0, 1), 1.0).unwrap().passed());
        let r0 = parity_check_v0(&b3, 1.0, 0.5, 0.0).unwrap();
        assert!(r0.product_defect < 1e-14);
    }

    #[test]
    fn report_passes() {
        let b = SpinBasis::new(3).unwrap();
        let r = fpt_report(&b, 0.4, 2.0, special(2.0, 1)).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        assert!(!r.published_block.as_ref().unwrap().passed);
        assert!(r.hf1_sx_commutator < 1e-12);
        assert!(r.hf3_sx_commutator > 0.0);
        assert_eq!(special_index(2.0, special(2.0, 3)), Some(3));
        assert_eq!(special_index(2.0, 1.0), None);
    }
}
