//! Quadrature rules.

/// Tanh-sinh nodes and weights on [a, b]; endpoints excluded.
pub fn tanh_sinh(a: f64, b: f64, h: f64, t_max: f64) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let steps = (t_max / h).round() as i64;
    let mut out = Vec::with_capacity(2 * steps as usize + 1);
    for k in -steps..=steps {
        let t = k as f64 * h;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let w = h * std::f64::consts::FRAC_PI_2 * t.cosh() / (u.cosh() * u.cosh());
        // distance to the nearer endpoint without cancellation
        let gap = 2.0 / (1.0 + (2.0 * u.abs()).exp());
        let node = if k < 0 {
            a + half * gap
        } else if k > 0 {
            b - half * gap
        } else {
            mid
        };
        if node > a && node < b && w > 0.0 {
            out.push((node, half * w));
        }
    }
    out
}
