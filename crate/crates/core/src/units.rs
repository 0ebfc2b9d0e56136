//! Unit conversions. Everything inside the crate is SI with angular
//! frequencies in rad/s and hbar = 1.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

#[inline]
pub fn hz_to_angular(f: f64) -> f64 {
    TWO_PI * f
}

#[inline]
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / TWO_PI
}

pub const MICROSECOND: f64 = 1e-6;
pub const MILLISECOND: f64 = 1e-3;
