//! sRGB / CIELAB conversion, CIE76 colour difference and single-patch
//! calibration.
//!
//! Conversions use the D65 reference white, the 2° observer and the standard
//! sRGB primaries. The sRGB transfer curve is the piecewise IEC 61966-2-1 form.

use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// An 8-bit sRGB-encoded colour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SrgbColor {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl SrgbColor {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }
}

/// A CIELAB coordinate triple.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabColor<F> {
    #[serde(rename = "L")]
    pub l: F,
    pub a: F,
    pub b: F,
}

impl<F: Scalar> LabColor<F> {
    pub fn new(l: F, a: F, b: F) -> Self {
        Self { l, a, b }
    }

    pub fn is_finite(&self) -> bool {
        self.l.is_finite() && self.a.is_finite() && self.b.is_finite()
    }

    /// CIE76 colour difference to `other`.
    pub fn delta_e(&self, other: &Self) -> F {
        delta_e(*self, *other)
    }
}

/// Additive per-channel correction in CIELAB.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabOffset<F> {
    pub dl: F,
    pub da: F,
    pub db: F,
}

impl<F: Scalar> LabOffset<F> {
    pub fn new(dl: F, da: F, db: F) -> Self {
        Self { dl, da, db }
    }

    pub fn zero() -> Self {
        Self::new(F::zero(), F::zero(), F::zero())
    }
}

impl<F: Scalar> Add for LabOffset<F> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.dl + rhs.dl, self.da + rhs.da, self.db + rhs.db)
    }
}

// Linear sRGB -> XYZ (D65), and its inverse.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];
const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];
const D65_WHITE: [f64; 3] = [0.950_47, 1.0, 1.088_83];

/// (6/29)^3
const LAB_EPSILON: f64 = 216.0 / 24389.0;
const LAB_DELTA: f64 = 6.0 / 29.0;

fn decode_channel<F: Scalar>(v: u8) -> F {
    let c = F::lit(f64::from(v) / 255.0);
    if c <= F::lit(0.040_45) {
        c / F::lit(12.92)
    } else {
        ((c + F::lit(0.055)) / F::lit(1.055)).powf(F::lit(2.4))
    }
}

fn encode_channel<F: Scalar>(lin: F) -> F {
    if lin <= F::lit(0.003_130_8) {
        lin * F::lit(12.92)
    } else {
        F::lit(1.055) * lin.powf(F::lit(1.0 / 2.4)) - F::lit(0.055)
    }
}

fn mat_mul<F: Scalar>(m: &[[f64; 3]; 3], v: [F; 3]) -> [F; 3] {
    let row = |r: &[f64; 3]| F::lit(r[0]) * v[0] + F::lit(r[1]) * v[1] + F::lit(r[2]) * v[2];
    [row(&m[0]), row(&m[1]), row(&m[2])]
}

fn lab_f<F: Scalar>(t: F) -> F {
    if t > F::lit(LAB_EPSILON) {
        t.cbrt()
    } else {
        t / F::lit(3.0 * LAB_DELTA * LAB_DELTA) + F::lit(4.0 / 29.0)
    }
}

fn lab_f_inv<F: Scalar>(f: F) -> F {
    if f > F::lit(LAB_DELTA) {
        f * f * f
    } else {
        F::lit(3.0 * LAB_DELTA * LAB_DELTA) * (f - F::lit(4.0 / 29.0))
    }
}

pub fn srgb_to_lab<F: Scalar>(c: SrgbColor) -> LabColor<F> {
    let lin: [F; 3] = [decode_channel(c.r), decode_channel(c.g), decode_channel(c.b)];
    let xyz = mat_mul(&RGB_TO_XYZ, lin);
    let fx = lab_f(xyz[0] / F::lit(D65_WHITE[0]));
    let fy = lab_f(xyz[1] / F::lit(D65_WHITE[1]));
    let fz = lab_f(xyz[2] / F::lit(D65_WHITE[2]));
    LabColor::new(
        F::lit(116.0) * fy - F::lit(16.0),
        F::lit(500.0) * (fx - fy),
        F::lit(200.0) * (fy - fz),
    )
}

/// Inverse of [`srgb_to_lab`]. Linear channels outside `[0, 1]` are clamped
/// before encoding and the returned flag is raised.
pub fn lab_to_srgb<F: Scalar>(c: LabColor<F>) -> (SrgbColor, bool) {
    let fy = (c.l + F::lit(16.0)) / F::lit(116.0);
    let fx = fy + c.a / F::lit(500.0);
    let fz = fy - c.b / F::lit(200.0);
    let xyz = [
        lab_f_inv(fx) * F::lit(D65_WHITE[0]),
        lab_f_inv(fy) * F::lit(D65_WHITE[1]),
        lab_f_inv(fz) * F::lit(D65_WHITE[2]),
    ];
    let lin = mat_mul(&XYZ_TO_RGB, xyz);

    // Round-off on in-gamut colours (e.g. white) lands a hair outside [0, 1].
    let slack = F::lit(1e-4);
    let mut clamped = false;
    let mut out = [0u8; 3];
    for (o, &v) in out.iter_mut().zip(lin.iter()) {
        if !v.is_finite() || v < -slack || v > F::one() + slack {
            clamped = true;
        }
        let v = if v.is_finite() {
            v.max(F::zero()).min(F::one())
        } else {
            F::zero()
        };
        let enc = (encode_channel(v) * F::lit(255.0)).round();
        *o = enc.to_u8().unwrap_or(if enc > F::zero() { 255 } else { 0 });
    }
    (SrgbColor::new(out[0], out[1], out[2]), clamped)
}

/// CIE76 colour difference: Euclidean distance in CIELAB.
pub fn delta_e<F: Scalar>(x: LabColor<F>, y: LabColor<F>) -> F {
    let dl = x.l - y.l;
    let da = x.a - y.a;
    let db = x.b - y.b;
    (dl * dl + da * da + db * db).sqrt()
}

/// Offset that maps the observed reference patch onto its known value.
pub fn derive_calibration<F: Scalar>(observed: LabColor<F>, reference: LabColor<F>) -> LabOffset<F> {
    LabOffset::new(
        reference.l - observed.l,
        reference.a - observed.a,
        reference.b - observed.b,
    )
}

pub fn apply_calibration<F: Scalar>(c: LabColor<F>, off: LabOffset<F>) -> LabColor<F> {
    LabColor::new(c.l + off.dl, c.a + off.da, c.b + off.db)
}
