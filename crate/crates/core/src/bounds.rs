//! Closed-form volume constants and lower bounds for Clifford-type tori.
//!
//! Volumes use the metric in which `vol(RP^n)` is half the area of the unit
//! `n`-sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{gamma_half, vol_rpn};

/// Minimal intersection number of the Clifford torus with `RP^n`: `2^ceil(n/2)`.
pub fn min_intersections(n: u32) -> u64 {
    1u64 << n.div_ceil(2)
}

/// Crofton constant `vol(RP^n) / (n + 1)`.
pub fn xi(n: u32) -> f64 {
    vol_rpn(n) / (n as f64 + 1.0)
}

/// Two-Lagrangian kinematic constant `pi^(n+1) / ((n+1) Gamma((n+1)/2)^2)`.
pub fn goldstein_zeta(n: u32) -> f64 {
    let g = gamma_half(n + 1);
    PI.powi(n as i32 + 1) / ((n as f64 + 1.0) * g * g)
}

/// Volume of the monotone Clifford torus, `(2 pi)^n / (n+1)^((n+1)/2)`.
pub fn vol_clifford(n: u32) -> f64 {
    let m = n as f64 + 1.0;
    (2.0 * PI).powi(n as i32) / m.powf(m / 2.0)
}

/// Lower bound obtained from the Crofton formula and the minimal count.
pub fn alston_amorim(n: u32) -> f64 {
    xi(n) * min_intersections(n) as f64
}

/// Lower bound `sqrt(2^n pi^(n+1) / (n+1)) / Gamma((n+1)/2)`.
pub fn goldstein(n: u32) -> f64 {
    let m = n as f64 + 1.0;
    (2f64.powi(n as i32) * PI.powi(n as i32 + 1) / m).sqrt() / gamma_half(n + 1)
}

/// Mean of `#(T^n ∩ g RP^n)` under Haar measure,
/// `2^n pi^((n-1)/2) Gamma((n+1)/2) / (n+1)^((n-1)/2)`.
pub fn expected_count(n: u32) -> f64 {
    let half = (n as f64 - 1.0) / 2.0;
    2f64.powi(n as i32) * PI.powf(half) * gamma_half(n + 1) / (n as f64 + 1.0).powf(half)
}

/// Stirling-style approximation `2^(c n)` of [`expected_count`], with
/// `c = log2(2 pi / e) / 2`.
pub fn expected_count_stirling(n: u32) -> f64 {
    let c = 0.5 * (2.0 * PI / std::f64::consts::E).log2();
    2f64.powf(c * n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub n: u32,
    pub alston_amorim: f64,
    pub goldstein: f64,
    pub vol_clifford: f64,
    pub xi: f64,
    pub zeta: f64,
    pub min_intersections: u64,
    pub expected_count: f64,
}

impl BoundsRow {
    pub fn for_dimension(n: u32) -> Self {
        Self {
            n,
            alston_amorim: alston_amorim(n),
            goldstein: goldstein(n),
            vol_clifford: vol_clifford(n),
            xi: xi(n),
            zeta: goldstein_zeta(n),
            min_intersections: min_intersections(n),
            expected_count: expected_count(n),
        }
    }

    pub const CSV_HEADER: &'static str =
        "n,alston_amorim,goldstein,vol_clifford,xi,zeta,min_intersections,expected_count";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            self.n,
            self.alston_amorim,
            self.goldstein,
            self.vol_clifford,
            self.xi,
            self.zeta,
            self.min_intersections,
            self.expected_count
        )
    }
}

/// Rows `1..=n_max` of the bounds table.
pub fn table1(n_max: u32) -> Vec<BoundsRow> {
    (1..=n_max).map(BoundsRow::for_dimension).collect()
}
