//! Adaptive Gauss–Kronrod integration over finite intervals, for real- and
//! complex-valued integrands.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use crate::error::{numeric, Result};
use crate::C64;

/// Values that can be integrated: closed under addition and real scaling,
/// with a magnitude for error control.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// 7-point Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<T: Integrand>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).magnitude())
}

/// Integrates `f` over `[a, b]` by globally adaptive 15-point Gauss–Kronrod
/// bisection until the error estimate falls below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<T: Integrand>(f: impl Fn(f64) -> T, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<T> {
    const MAX_INTERVALS: usize = 4000;
    if a == b {
        return Ok(T::zero());
    }
    let (v, e) = kronrod15(&f, a, b);
    let mut pieces: Vec<(f64, f64, T, f64)> = alloc::vec![(a, b, v, e)];
    loop {
        let mut total = T::zero();
        let mut err = 0.0;
        let mut worst = 0;
        for (i, p) in pieces.iter().enumerate() {
            total = total + p.2;
            err += p.3;
            if p.3 > pieces[worst].3 {
                worst = i;
            }
        }
        if !err.is_finite() || !total.magnitude().is_finite() {
            return Err(numeric!("non-finite integrand on [{a}, {b}]"));
        }
        if err <= abs_tol.max(rel_tol * total.magnitude()) {
            return Ok(total);
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(numeric!("adaptive quadrature on [{a}, {b}] stalled with error estimate {err:e}"));
        }
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (vl, el) = kronrod15(&f, lo, mid);
        let (vr, er) = kronrod15(&f, mid, hi);
        pieces.push((lo, mid, vl, el));
        pieces.push((mid, hi, vr, er));
    }
}

/// Composite Simpson rule on `n` (even) panels of `[a, b]`.
pub fn simpson<T: Integrand>(f: impl Fn(f64) -> T, a: f64, b: f64, n: usize) -> T {
    assert!(n >= 2 && n.is_multiple_of(2), "Simpson needs an even panel count");
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc = acc + f(a + i as f64 * h) * w;
    }
    acc * (h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_exactly() {
        let v = integrate(|x: f64| x.powi(5) - 3.0 * x, -1.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((v - (64.0 / 6.0 - 1.0 / 6.0 - 4.5)).abs() < 1e-13);
    }

    #[test]
    fn integrates_peaked_and_complex() {
        let v = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-12).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-9 * exact);
        let z = integrate(|x: f64| C64::new(0.0, 3.0 * x).exp(), 0.0, 1.0, 1e-14, 1e-14).unwrap();
        let exact = (C64::new(0.0, 3.0).exp() - 1.0) / C64::new(0.0, 3.0);
        assert!((z - exact).norm() < 1e-14);
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x: f64| x * x * x + x, 0.0, 2.0, 2);
        assert!((v - 6.0).abs() < 1e-14);
    }
}
