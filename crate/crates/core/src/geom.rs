//! Minimal 2-D vector helpers.

pub type Point = [f64; 2];

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: Point, c: f64) -> Point {
    [a[0] * c, a[1] * c]
}

#[inline]
pub fn norm_sq(a: Point) -> f64 {
    a[0] * a[0] + a[1] * a[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist_sq(a: Point, b: Point) -> f64 {
    norm_sq(sub(a, b))
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Euclidean norm of a stacked vector of points.
pub fn stacked_norm(v: &[Point]) -> f64 {
    v.iter().map(|p| norm_sq(*p)).sum::<f64>().sqrt()
}

/// Euclidean norm of `a − b` for stacked vectors.
pub fn stacked_dist(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| dist_sq(*x, *y))
        .sum::<f64>()
        .sqrt()
}
