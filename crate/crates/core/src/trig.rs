//! Branch-light `sin_cos` for the dipole inner loop, which evaluates one
//! phase per `(t, t₁)` pair. Cody–Waite reduction by π/2 followed by the
//! fdlibm kernel polynomials; accurate to a few ulp for `|x| < 2^20·π/2`.

const SHIFTER: f64 = 6_755_399_441_055_744.0;
const FRAC_2_PI: f64 = 0.636_619_772_367_581_4;
/// First 33 bits of π/2 and the remainder.
const PIO2_HI: f64 = 1.570_796_326_734_125_6;
const PIO2_LO: f64 = 6.077_100_506_506_192e-11;

const S1: f64 = -1.666_666_666_666_663_2e-1;
const S2: f64 = 8.333_333_333_322_49e-3;
const S3: f64 = -1.984_126_982_985_795e-4;
const S4: f64 = 2.755_731_370_707_006_8e-6;
const S5: f64 = -2.505_076_025_340_686_3e-8;
const S6: f64 = 1.589_690_995_211_55e-10;

const C1: f64 = 4.166_666_666_666_660_2e-2;
const C2: f64 = -1.388_888_888_887_411e-3;
const C3: f64 = 2.480_158_728_947_673e-5;
const C4: f64 = -2.755_731_435_139_066_3e-7;
const C5: f64 = 2.087_572_321_298_175e-9;
const C6: f64 = -1.135_964_755_778_819_5e-11;

/// `(sin x, cos x)`; falls back to the standard library outside the
/// reduction range.
#[inline]
pub fn sin_cos(x: f64) -> (f64, f64) {
    if !(x.abs() < 1.6e6) {
        return x.sin_cos();
    }
    // round-to-nearest through the 1.5·2^52 shifter; `f64::round` is a libm
    // call on baseline x86-64
    let shifted = x * FRAC_2_PI + SHIFTER;
    let quadrant = shifted.to_bits() & 3;
    let k = shifted - SHIFTER;
    let r = (x - k * PIO2_HI) - k * PIO2_LO;
    let z = r * r;
    let s = r + r * z * (S1 + z * (S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)))));
    let c = 1.0 - 0.5 * z + z * z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
    // rotate by quadrant·π/2
    let (s, c) = if quadrant & 1 == 1 { (c, -s) } else { (s, c) };
    let sign = 1.0 - (quadrant & 2) as f64;
    (sign * s, sign * c)
}
