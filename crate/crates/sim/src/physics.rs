//! Pairwise and boundary displacement terms.
//!
//! All vectors are physical. `d` is always `x_j - x_i`, the vector from the
//! object being moved to its neighbour.

pub type Vec3 = [f64; 3];

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn norm(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Adhesion pulls toward the neighbour: `(1 - |d|/R_A)^2 * d/|d|` inside `R_A`.
pub fn adhesive_disp(d: Vec3, r_a: f64) -> Vec3 {
    let n = norm(d);
    if n == 0.0 || n >= r_a {
        return [0.0; 3];
    }
    let m = (1.0 - n / r_a).powi(2);
    scale(d, m / n)
}

/// Magnitude of the repulsive term at distance `n`; the vector points along `-d`.
pub fn repulsive_magnitude(n: f64, r_n: f64, r_m: f64) -> f64 {
    if n <= r_n {
        let edge = (1.0 - r_n / r_m).powi(2);
        (edge - 1.0) * n / r_n + 1.0
    } else if n < r_m {
        (1.0 - n / r_m).powi(2)
    } else {
        0.0
    }
}

/// Repulsion pushes away from the neighbour: linear ramp up to `R_N`, then
/// quadratic decay to 0 at `R_M`.
///
/// Coincident centres have no direction; `tie` supplies a unit vector to
/// push along (pass the same vector negated for the partner).
pub fn repulsive_disp(d: Vec3, r_n: f64, r_m: f64, tie: Vec3) -> Vec3 {
    let n = norm(d);
    let m = repulsive_magnitude(n, r_n, r_m);
    if m == 0.0 {
        return [0.0; 3];
    }
    if n == 0.0 {
        return scale(tie, -m);
    }
    scale(d, -m / n)
}

/// Spherical shell that keeps objects between `r_inner` and `r_outer`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shell {
    pub center: Vec3,
    pub r_inner: f64,
    pub r_outer: f64,
    /// Steepness of the sigmoidal push.
    pub steepness: f64,
}

/// Zero inside the shell, outward below `r_inner`, inward above `r_outer`.
/// The magnitude `1 - exp(-a * overshoot)` saturates at 1.
///
/// `tie` gives the direction used when `x` sits exactly on the centre.
pub fn boundary_disp(x: Vec3, shell: &Shell, tie: Vec3) -> Vec3 {
    let v = sub(x, shell.center);
    let n = norm(v);
    let a = shell.steepness;
    if n < shell.r_inner {
        let m = 1.0 - (-a * (shell.r_inner - n)).exp();
        if n == 0.0 {
            return scale(tie, m);
        }
        scale(v, m / n)
    } else if n > shell.r_outer {
        let m = 1.0 - (-a * (n - shell.r_outer)).exp();
        scale(v, -m / n)
    } else {
        [0.0; 3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adhesion_reference_values() {
        assert_eq!(adhesive_disp([2.0, 0.0, 0.0], 2.0), [0.0; 3]);
        assert_eq!(adhesive_disp([0.0; 3], 2.0), [0.0; 3]);
        let v = adhesive_disp([0.0, 1.0, 0.0], 2.0);
        assert!((v[1] - 0.25).abs() < 1e-15 && v[0] == 0.0);
    }

    #[test]
    fn repulsion_reference_values() {
        let v = repulsive_disp([1.5, 0.0, 0.0], 1.0, 2.0, [1.0, 0.0, 0.0]);
        assert!((v[0] + 0.0625).abs() < 1e-15);
        assert_eq!(repulsive_disp([0.0, 2.0, 0.0], 1.0, 2.0, [1.0, 0.0, 0.0]), [0.0; 3]);
        assert_eq!(repulsive_disp([0.0; 3], 1.0, 2.0, [0.0, 0.0, 1.0]), [0.0, 0.0, -1.0]);
    }
}
