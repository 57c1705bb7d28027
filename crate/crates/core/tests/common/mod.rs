#![allow(dead_code)]

use bundle_flow::geometry::RadialJet;

/// `H = sin s`, `F² = 4 − 2 cos s`, differentiated by hand.
pub fn test_b_jet(s: f64) -> RadialJet {
    let f2 = 4.0 - 2.0 * s.cos();
    let f = f2.sqrt();
    // (F²)' = 2 sin s  ⇒  F' = sin s / F,  F'' = (cos s − F'²)/F
    let df = s.sin() / f;
    let d2f = (s.cos() - df * df) / f;
    RadialJet {
        h: s.sin(),
        dh: s.cos(),
        d2h: -s.sin(),
        f: vec![f],
        df: vec![df],
        d2f: vec![d2f],
    }
}

/// Values and first two derivatives of a radial function.
pub type Profile = fn(f64) -> (f64, f64, f64);

/// A Berger-type profile that is not Kähler for any twist.
pub fn berger_h(s: f64) -> (f64, f64, f64) {
    (
        s.sin() + 0.125 * (2.0 * s).sin(),
        s.cos() + 0.25 * (2.0 * s).cos(),
        -s.sin() - 0.5 * (2.0 * s).sin(),
    )
}

pub fn berger_f(s: f64) -> (f64, f64, f64) {
    (
        1.5 + 0.4 * s.cos() + 0.1 * (2.0 * s).cos(),
        -0.4 * s.sin() - 0.2 * (2.0 * s).sin(),
        -0.4 * s.cos() - 0.4 * (2.0 * s).cos(),
    )
}

pub fn jet_of(h: Profile, f: Profile, s: f64) -> RadialJet {
    let (h, dh, d2h) = h(s);
    let (f, df, d2f) = f(s);
    RadialJet { h, dh, d2h, f: vec![f], df: vec![df], d2f: vec![d2f] }
}

/// Ricci tensor of `ds² + H² σ₃² + F² c (σ₁² + σ₂²)` on `I × S³`, computed
/// from scratch in the orthonormal frame
/// `e₀ = ∂_s, e₁ = X₁/(F√c), e₂ = X₂/(F√c), e₃ = X₃/H`, where the
/// left-invariant fields satisfy `[X_i, X_j] = 2ε_ijk X_k`.
///
/// The base `CP¹` then carries the round metric of curvature `4/c` and the
/// circle bundle has twist `2/c`.
pub struct BergerOracle {
    pub h: Profile,
    pub f: Profile,
    pub c: f64,
}

type Tensor3 = [[[f64; 4]; 4]; 4];

/// Forward-mode dual number `v + d·ε`, used to differentiate the structure
/// functions in `s` exactly.
#[derive(Clone, Copy)]
struct Dual {
    v: f64,
    d: f64,
}

impl Dual {
    fn of((v, d, _): (f64, f64, f64)) -> Self {
        Dual { v, d }
    }
    fn derivative_of((_, d, dd): (f64, f64, f64)) -> Self {
        Dual { v: d, d: dd }
    }
    fn constant(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
    fn div(self, o: Dual) -> Dual {
        Dual { v: self.v / o.v, d: (self.d * o.v - self.v * o.d) / (o.v * o.v) }
    }
    fn neg(self) -> Dual {
        Dual { v: -self.v, d: -self.d }
    }
}

impl BergerOracle {
    /// `C_abc = g([e_a, e_b], e_c)` at `s` together with `∂_s C_abc`.
    fn structure(&self, s: f64) -> (Tensor3, Tensor3) {
        let (hs, fs) = ((self.h)(s), (self.f)(s));
        let (h, dh) = (Dual::of(hs), Dual::derivative_of(hs));
        let (f, df) = (Dual::of(fs), Dual::derivative_of(fs));
        let mut c = [[[0.0; 4]; 4]; 4];
        let mut dc = [[[0.0; 4]; 4]; 4];
        let mut set = |a: usize, b: usize, k: usize, x: Dual| {
            c[a][b][k] = x.v;
            c[b][a][k] = -x.v;
            dc[a][b][k] = x.d;
            dc[b][a][k] = -x.d;
        };
        let two = Dual::constant(2.0);
        set(0, 1, 1, df.div(f).neg());
        set(0, 2, 2, df.div(f).neg());
        set(0, 3, 3, dh.div(h).neg());
        set(1, 2, 3, two.mul(h).div(Dual::constant(self.c).mul(f).mul(f)));
        set(2, 3, 1, two.div(h));
        set(3, 1, 2, two.div(h));
        (c, dc)
    }

    /// Koszul formula in an orthonormal frame:
    /// `Γ_abc = g(∇_{e_a} e_b, e_c) = ½(C_abc − C_bca + C_cab)`.
    fn koszul(c: &Tensor3) -> Tensor3 {
        let mut g = [[[0.0; 4]; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                for k in 0..4 {
                    g[a][b][k] = 0.5 * (c[a][b][k] - c[b][k][a] + c[k][a][b]);
                }
            }
        }
        g
    }

    /// `R_abcd = g(R(e_a, e_b) e_c, e_d)` with `R(X,Y) = [∇_X, ∇_Y] − ∇_[X,Y]`.
    pub fn riemann(&self, s: f64) -> [[[[f64; 4]; 4]; 4]; 4] {
        let (c, dc) = self.structure(s);
        let g = Self::koszul(&c);
        // Γ is linear in C, so ∂_s Γ is the Koszul combination of ∂_s C
        let dg = Self::koszul(&dc);
        // only e_0 differentiates functions of s
        let deriv = |a: usize, b: usize, cc: usize, d: usize| if a == 0 { dg[b][cc][d] } else { 0.0 };
        let mut r = [[[[0.0; 4]; 4]; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                for cc in 0..4 {
                    for d in 0..4 {
                        let mut v = deriv(a, b, cc, d) - deriv(b, a, cc, d);
                        for e in 0..4 {
                            v += g[b][cc][e] * g[a][e][d] - g[a][cc][e] * g[b][e][d];
                            v -= c[a][b][e] * g[e][cc][d];
                        }
                        r[a][b][cc][d] = v;
                    }
                }
            }
        }
        r
    }

    /// `Ric(e_x, e_y) = Σ_a R(e_a, e_x, e_y, e_a)`.
    pub fn ricci(&self, s: f64) -> [[f64; 4]; 4] {
        let r = self.riemann(s);
        let mut ric = [[0.0; 4]; 4];
        for x in 0..4 {
            for y in 0..4 {
                ric[x][y] = (0..4).map(|a| r[a][x][y][a]).sum();
            }
        }
        ric
    }

    /// Twist and Einstein constant of the base in the convention of
    /// [`bundle_flow::BundleSpec`].
    pub fn bundle(&self) -> (i64, f64) {
        ((2.0 / self.c).round() as i64, 4.0 / self.c)
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn verdict_line(id: u32, name: &str, pass: bool, detail: &str) {
    println!("{} [{id:>2}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}
