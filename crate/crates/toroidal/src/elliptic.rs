//! Complete elliptic integrals by the arithmetic–geometric mean, and the
//! unduloid half-period `τ_a` and half-height `h_a` built on them.
//!
//! The modulus is carried together with its complementary square
//! `k'² = 1 − k²`, which is the quantity the AGM is seeded with. Unduloids
//! with small necks live at `k → 1`, where recomputing `1 − k²` would lose
//! every significant digit.

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

const AGM_CAP: usize = 40;

/// Elliptic modulus `k` together with `k'² = 1 − k²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modulus<T> {
    k: T,
    kprime2: T,
}

impl<T: Real> Modulus<T> {
    /// Modulus from `k ∈ [0, 1]`.
    pub fn new(k: T) -> Result<Self> {
        if !(k >= T::zero() && k <= T::one()) {
            return Err(Error::Domain(format!("modulus k = {k} outside [0, 1]")));
        }
        Ok(Self {
            k,
            kprime2: (T::one() - k) * (T::one() + k),
        })
    }

    /// Modulus from the complementary square `k'² ∈ [0, 1]`, exact in `k'²`.
    pub fn from_complement(kprime2: T) -> Result<Self> {
        if !(kprime2 >= T::zero() && kprime2 <= T::one()) {
            return Err(Error::Domain(format!("k'^2 = {kprime2} outside [0, 1]")));
        }
        Ok(Self {
            k: (T::one() - kprime2).sqrt(),
            kprime2,
        })
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn kprime2(&self) -> T {
        self.kprime2
    }

    /// The complementary modulus as a [`Modulus`] (`k ↔ k'`).
    pub fn complement(&self) -> Self {
        Self {
            k: self.kprime2.sqrt(),
            kprime2: self.k * self.k,
        }
    }
}

fn agm_tol<T: Real>() -> T {
    T::lit(1e-15).max(T::epsilon() * T::lit(4.0))
}

/// Runs the AGM on `(1, k')` and returns `(AGM, Σ 2^(n−1) c_n²)`.
fn agm<T: Real>(m: &Modulus<T>) -> Result<(T, T)> {
    let half = T::lit(0.5);
    let mut a = T::one();
    let mut b = m.kprime2.sqrt();
    let mut sum = half * m.k * m.k;
    let mut pow = half;
    let tol = agm_tol::<T>();
    for _ in 0..AGM_CAP {
        if (a - b).abs() <= tol * a {
            return Ok((a, sum));
        }
        let c = half * (a - b);
        let an = half * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow = pow + pow;
        sum = sum + pow * c * c;
    }
    Err(Error::IterationCap {
        what: "AGM",
        cap: AGM_CAP,
    })
}

/// Complete elliptic integral of the first kind `K(k)`, `0 ≤ k < 1`.
pub fn ellip_k<T: Real>(m: &Modulus<T>) -> Result<T> {
    if m.kprime2 <= T::zero() {
        return Err(Error::Domain("K(k) diverges at k = 1".into()));
    }
    let (g, _) = agm(m)?;
    Ok(T::FRAC_PI_2() / g)
}

/// Complete elliptic integral of the second kind `E(k)`, `0 ≤ k ≤ 1`.
pub fn ellip_e<T: Real>(m: &Modulus<T>) -> Result<T> {
    if m.kprime2 <= T::zero() {
        return Ok(T::one());
    }
    let (g, sum) = agm(m)?;
    Ok(T::FRAC_PI_2() / g * (T::one() - sum))
}

/// Neck size `a ∈ (0, 1/2]` of a Delaunay unduloid with mean curvature 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeckSize<T> {
    a: T,
}

impl<T: Real> NeckSize<T> {
    pub fn new(a: T) -> Result<Self> {
        if !(a > T::zero() && a <= T::lit(0.5)) {
            return Err(Error::Domain(format!("neck size a = {a} outside (0, 1/2]")));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> T {
        self.a
    }

    /// `γ_a = a(1 − a)`.
    pub fn gamma(&self) -> T {
        self.a * (T::one() - self.a)
    }

    /// `k_a` with `k_a'² = a²/(1 − a)²`.
    pub fn modulus(&self) -> Modulus<T> {
        let r = self.a / (T::one() - self.a);
        Modulus::from_complement(r * r).expect("a/(1-a) lies in (0, 1]")
    }
}

/// Half-period `τ_a = K(k_a)/(1 − a)` of the conformal profile.
pub fn period_tau<T: Real>(a: &NeckSize<T>) -> T {
    ellip_k(&a.modulus()).expect("k_a < 1 for a > 0") / (T::one() - a.a())
}

/// Half-height `h_a = γ_a τ_a + (1 − a) E(k_a)`.
pub fn height_h<T: Real>(a: &NeckSize<T>) -> T {
    let e = ellip_e(&a.modulus()).expect("E defined on [0, 1]");
    a.gamma() * period_tau(a) + (T::one() - a.a()) * e
}

/// Area of one period of the unduloid, `4π(1 − a)E(k_a)`.
pub fn period_area<T: Real>(a: &NeckSize<T>) -> T {
    let e = ellip_e(&a.modulus()).expect("E defined on [0, 1]");
    T::lit(4.0) * T::PI() * (T::one() - a.a()) * e
}

/// Volume enclosed by one period, `(2π/3)(1 − a)((2 − a + a²)E − a²K)`.
pub fn period_volume<T: Real>(a: &NeckSize<T>) -> T {
    let m = a.modulus();
    let e = ellip_e(&m).expect("E defined on [0, 1]");
    let k = ellip_k(&m).expect("k_a < 1 for a > 0");
    let av = a.a();
    let two = T::lit(2.0);
    two * T::PI() / T::lit(3.0)
        * (T::one() - av)
        * ((two - av + av * av) * e - av * av * k)
}
