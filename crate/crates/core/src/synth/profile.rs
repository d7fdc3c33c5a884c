use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `10 s^3 - 15 s^4 + 6 s^5`: zero velocity and acceleration at both ends.
    MinJerk,
    /// `3 s^2 - 2 s^3`: zero velocity at both ends, constant jerk.
    Cubic,
    Stationary,
}

/// Point-to-point motion from `p0` to `pf` during `[t_start, t_start + t_move]`,
/// at rest before and after.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub kind: ProfileKind,
    pub p0: Vec<f64>,
    pub pf: Vec<f64>,
    #[serde(default)]
    pub t_start: f64,
    pub t_move: f64,
}

/// Roots of the min-jerk jerk polynomial `60 - 360 s + 360 s^2`.
const MJ_ROOTS: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];

/// `int_0^1 |60 - 360 s + 360 s^2| ds`, from the antiderivative
/// `60 s - 180 s^2 + 120 s^3` split at the polynomial's roots.
pub fn min_jerk_abs_integral() -> f64 {
    let f = |s: f64| 60.0 * s - 180.0 * s * s + 120.0 * s * s * s;
    let [r1, r2] = MJ_ROOTS;
    (f(r1) - f(0.0)).abs() + (f(r2) - f(r1)).abs() + (f(1.0) - f(r2)).abs()
}

impl Profile {
    pub fn stationary(p: Vec<f64>) -> Self {
        Self {
            kind: ProfileKind::Stationary,
            pf: p.clone(),
            p0: p,
            t_start: 0.0,
            t_move: 1.0,
        }
    }

    pub fn min_jerk(p0: Vec<f64>, pf: Vec<f64>, t_start: f64, t_move: f64) -> Self {
        Self {
            kind: ProfileKind::MinJerk,
            p0,
            pf,
            t_start,
            t_move,
        }
    }

    pub fn cubic(p0: Vec<f64>, pf: Vec<f64>, t_start: f64, t_move: f64) -> Self {
        Self {
            kind: ProfileKind::Cubic,
            p0,
            pf,
            t_start,
            t_move,
        }
    }

    pub fn dims(&self) -> usize {
        self.p0.len()
    }

    fn displacement(&self) -> f64 {
        match self.kind {
            ProfileKind::Stationary => 0.0,
            _ => self.p0.iter().zip(&self.pf).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt(),
        }
    }

    fn phase(&self, t: f64) -> f64 {
        ((t - self.t_start) / self.t_move).clamp(0.0, 1.0)
    }

    /// Shape function and its first two derivatives with respect to `s`.
    fn shape(&self, s: f64) -> (f64, f64, f64) {
        match self.kind {
            ProfileKind::MinJerk => (
                s * s * s * (10.0 - 15.0 * s + 6.0 * s * s),
                30.0 * s * s * (1.0 - s) * (1.0 - s),
                60.0 * s * (1.0 - 3.0 * s + 2.0 * s * s),
            ),
            ProfileKind::Cubic => (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s), 6.0 - 12.0 * s),
            ProfileKind::Stationary => (0.0, 0.0, 0.0),
        }
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        let (u, _, _) = self.shape(self.phase(t));
        self.p0.iter().zip(&self.pf).map(|(a, b)| a + (b - a) * u).collect()
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let s = self.phase(t);
        let inside = t > self.t_start && t < self.t_start + self.t_move;
        let (_, du, _) = self.shape(s);
        let k = if inside { du / self.t_move } else { 0.0 };
        self.p0.iter().zip(&self.pf).map(|(a, b)| (b - a) * k).collect()
    }

    pub fn acceleration(&self, t: f64) -> Vec<f64> {
        let s = self.phase(t);
        let inside = t > self.t_start && t < self.t_start + self.t_move;
        let (_, _, ddu) = self.shape(s);
        let k = if inside { ddu / self.t_move.powi(2) } else { 0.0 };
        self.p0.iter().zip(&self.pf).map(|(a, b)| (b - a) * k).collect()
    }

    /// `|p'''(t)|`, zero outside the motion.
    pub fn jerk_magnitude(&self, t: f64) -> f64 {
        if t <= self.t_start || t >= self.t_start + self.t_move {
            return 0.0;
        }
        let s = self.phase(t);
        let d = self.displacement() / self.t_move.powi(3);
        match self.kind {
            ProfileKind::MinJerk => d * (60.0 - 360.0 * s + 360.0 * s * s).abs(),
            ProfileKind::Cubic => d * 12.0,
            ProfileKind::Stationary => 0.0,
        }
    }

    /// `int |p'''| dt` over the whole motion, in closed form. For the cubic
    /// profile this leaves out the acceleration steps at both ends.
    pub fn jerk_integral(&self) -> f64 {
        let d = self.displacement();
        match self.kind {
            ProfileKind::MinJerk => d * min_jerk_abs_integral() / self.t_move.powi(2),
            ProfileKind::Cubic => d * 12.0 / self.t_move.powi(2),
            ProfileKind::Stationary => 0.0,
        }
    }

    /// The path is a straight segment traversed monotonically.
    pub fn path_length(&self) -> f64 {
        self.displacement()
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.t_move
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_integral() {
        // 5 / sqrt(3) * 8 from the hand-evaluated antiderivative
        assert!((min_jerk_abs_integral() - 40.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn endpoints_and_rest() {
        let p = Profile::min_jerk(vec![0.0, 1.0], vec![2.0, -1.0], 1.0, 2.0);
        assert_eq!(p.position(0.0), vec![0.0, 1.0]);
        assert_eq!(p.position(1.0), vec![0.0, 1.0]);
        assert_eq!(p.position(3.0), vec![2.0, -1.0]);
        assert_eq!(p.position(9.0), vec![2.0, -1.0]);
        let mid = p.position(2.0);
        assert!((mid[0] - 1.0).abs() < 1e-15 && mid[1].abs() < 1e-15);
        assert_eq!(p.jerk_magnitude(0.5), 0.0);
    }

    #[test]
    fn derivatives_match_differences() {
        for p in [
            Profile::min_jerk(vec![0.1, 0.0, -0.2], vec![0.5, 0.3, 0.1], 0.5, 1.7),
            Profile::cubic(vec![0.0], vec![1.0], 0.0, 2.0),
        ] {
            let h = 1e-5;
            for &t in &[0.9, 1.2, 1.6] {
                let v = p.velocity(t);
                let a = p.acceleration(t);
                let pp = p.position(t + h);
                let pm = p.position(t - h);
                let vp = p.velocity(t + h);
                let vm = p.velocity(t - h);
                for i in 0..p.dims() {
                    assert!((v[i] - (pp[i] - pm[i]) / (2.0 * h)).abs() < 1e-6);
                    assert!((a[i] - (vp[i] - vm[i]) / (2.0 * h)).abs() < 1e-6);
                }
            }
        }
    }
}
