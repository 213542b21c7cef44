//! Unit conversion constants. SI everywhere inside the library; knots, feet,
//! and nautical miles appear only at file-format boundaries.

/// Nautical mile in meters (exact).
pub const NM_TO_M: f64 = 1852.0;
/// Knot in m/s (exact: 1852/3600).
pub const KT_TO_MPS: f64 = 1852.0 / 3600.0;
/// International foot in meters (exact).
pub const FT_TO_M: f64 = 0.3048;

pub fn nm(x: f64) -> f64 {
    x * NM_TO_M
}

pub fn kt(x: f64) -> f64 {
    x * KT_TO_MPS
}

pub fn ft(x: f64) -> f64 {
    x * FT_TO_M
}

pub fn to_nm(m: f64) -> f64 {
    m / NM_TO_M
}

pub fn to_kt(mps: f64) -> f64 {
    mps / KT_TO_MPS
}

pub fn to_ft(m: f64) -> f64 {
    m / FT_TO_M
}
