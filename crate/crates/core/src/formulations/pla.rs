//! Piecewise linear link delay.

/// `(slope, offset)` of each affine piece `slope * z - offset`, in interval order.
pub const PLA_PIECES: [(f64, f64); 6] = [
    (1.5, 0.0),
    (4.5, 1.0),
    (15.0, 8.0),
    (50.0, 36.0),
    (200.0, 171.0),
    (4000.0, 3781.0),
];

/// Utilizations where consecutive pieces meet, as `(numerator, denominator)`.
pub const PLA_BREAKPOINTS: [(i64, i64); 5] = [(1, 3), (2, 3), (4, 5), (9, 10), (19, 20)];

/// Delay approximation `g(z)` at utilization `z >= 0`: the largest affine piece.
pub fn pla_delay(z: f64) -> f64 {
    PLA_PIECES
        .iter()
        .map(|&(a, b)| a * z - b)
        .fold(f64::NEG_INFINITY, f64::max)
}
