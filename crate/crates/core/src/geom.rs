//! Small fixed-size vector helpers. Points are plain `[f64; 3]`.

pub type Vec3 = [f64; 3];

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    libm::sqrt(dot(a, a))
}

#[inline]
pub fn l1_distance(a: Vec3, b: Vec3) -> f64 {
    libm::fabs(a[0] - b[0]) + libm::fabs(a[1] - b[1]) + libm::fabs(a[2] - b[2])
}

#[inline]
pub fn l2_distance_sq(a: Vec3, b: Vec3) -> f64 {
    let d = sub(a, b);
    dot(d, d)
}

#[inline]
pub fn is_finite(a: Vec3) -> bool {
    a.iter().all(|c| c.is_finite())
}

/// Sign with `sign(0) = 0`.
#[inline]
pub fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Componentwise mean. Returns the origin for an empty slice.
pub fn mean(points: &[Vec3]) -> Vec3 {
    if points.is_empty() {
        return [0.0; 3];
    }
    let mut acc = [0.0; 3];
    for p in points {
        acc = add(acc, *p);
    }
    scale(acc, 1.0 / points.len() as f64)
}

/// Componentwise population standard deviation.
pub fn std_dev(points: &[Vec3]) -> Vec3 {
    if points.is_empty() {
        return [0.0; 3];
    }
    let m = mean(points);
    let mut acc = [0.0; 3];
    for p in points {
        let d = sub(*p, m);
        for a in 0..3 {
            acc[a] += d[a] * d[a];
        }
    }
    let n = points.len() as f64;
    [libm::sqrt(acc[0] / n), libm::sqrt(acc[1] / n), libm::sqrt(acc[2] / n)]
}

/// Row-major 3x3 matrix.
pub type Mat3 = [[f64; 3]; 3];

pub fn mat3_mul_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

/// Inverse via the adjugate; `None` when the determinant is zero or not finite.
pub fn mat3_inverse(m: &Mat3) -> Option<Mat3> {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    Some([
        [
            c00 * inv,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv,
        ],
        [
            c01 * inv,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv,
        ],
        [
            c02 * inv,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv,
        ],
    ])
}
