//! Chebyshev sampling grids and barycentric interpolation for density tables.

use super::real::{pi, MpReal};

/// First-kind Chebyshev points on `[a, b]`, increasing; no endpoint touch.
pub fn cheb_points(n: usize, a: &MpReal, b: &MpReal) -> Vec<MpReal> {
    let prec = a.prec();
    let half = MpReal::from_f64(0.5, prec);
    let c = a.add_r(b).mul_r(&half);
    let h = b.sub_r(a).mul_r(&half);
    let pi_p = pi(prec);
    let mut pts: Vec<MpReal> = (0..n)
        .map(|i| {
            let theta = pi_p
                .mul_i64(2 * i as i64 + 1)
                .div_i64(2 * n as i64);
            let (_, cos_t) = theta.sin_cos();
            c.add_r(&h.mul_r(&cos_t))
        })
        .collect();
    pts.reverse();
    pts
}

/// Chebyshev points on the interval shrunk by `clearance` at both ends.
pub fn cheb_points_with_clearance(
    n: usize,
    a: &MpReal,
    b: &MpReal,
    clearance: &MpReal,
) -> Vec<MpReal> {
    let aa = a.add_r(clearance);
    let bb = b.sub_r(clearance);
    cheb_points(n, &aa, &bb)
}

/// Barycentric interpolant on arbitrary distinct nodes with real values.
#[derive(Clone, Debug)]
pub struct Interpolant {
    nodes: Vec<MpReal>,
    bary: Vec<MpReal>,
    values: Vec<MpReal>,
}

impl Interpolant {
    pub fn new(nodes: Vec<MpReal>, values: Vec<MpReal>) -> Self {
        assert_eq!(nodes.len(), values.len());
        let prec = nodes.first().map(|x| x.prec()).unwrap_or(64);
        let n = nodes.len();
        // w_i = 1 / prod_{j != i} (x_i - x_j), normalized to unit max magnitude
        let mut logs: Vec<MpReal> = Vec::with_capacity(n);
        let mut bary: Vec<MpReal> = Vec::with_capacity(n);
        for i in 0..n {
            let mut prod = MpReal::one(prec);
            for j in 0..n {
                if i != j {
                    prod = prod.mul_r(&nodes[i].sub_r(&nodes[j]));
                }
            }
            bary.push(prod.recip());
            logs.push(MpReal::zero(prec));
        }
        let mut max_mag = MpReal::zero(prec);
        for w in &bary {
            max_mag = max_mag.max_r(&w.abs());
        }
        if !max_mag.is_zero() {
            for w in bary.iter_mut() {
                *w = w.div_r(&max_mag);
            }
        }
        Interpolant { nodes, bary, values }
    }

    pub fn nodes(&self) -> &[MpReal] {
        &self.nodes
    }

    pub fn values(&self) -> &[MpReal] {
        &self.values
    }

    pub fn eval(&self, x: &MpReal) -> MpReal {
        let prec = x.prec().max(self.nodes[0].prec());
        let mut num = MpReal::zero(prec);
        let mut den = MpReal::zero(prec);
        for i in 0..self.nodes.len() {
            let dx = x.sub_r(&self.nodes[i]);
            if dx.is_zero() {
                return self.values[i].clone();
            }
            let t = self.bary[i].div_r(&dx);
            num = num.add_r(&t.mul_r(&self.values[i]));
            den = den.add_r(&t);
        }
        num.div_r(&den)
    }

    /// Derivative by a tiny symmetric difference of the interpolant; the
    /// interpolant is smooth so h ~ 2^-80 keeps full working accuracy.
    pub fn deriv(&self, x: &MpReal) -> MpReal {
        let prec = x.prec().max(self.nodes[0].prec());
        let h = MpReal::eps(prec).ldexp(prec as i64 / 3);
        let scale = MpReal::one(prec).max_r(&x.abs());
        let hh = h.mul_r(&scale);
        let fp = self.eval(&x.add_r(&hh));
        let fm = self.eval(&x.sub_r(&hh));
        fp.sub_r(&fm).div_r(&hh.ldexp(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_analytic_function_spectrally() {
        let prec = 256;
        let a = MpReal::from_i64(-1, prec);
        let b = MpReal::from_i64(1, prec);
        let nodes = cheb_points(48, &a, &b);
        let f = |x: &MpReal| x.mul_r(x).add_r(&MpReal::from_i64(2, prec)).recip();
        let values: Vec<MpReal> = nodes.iter().map(f).collect();
        let itp = Interpolant::new(nodes, values);
        // singularities at +-i sqrt2: Bernstein parameter sqrt2 + sqrt3,
        // so 48 nodes give roughly (sqrt2+sqrt3)^-48 ~ 2e-24
        let x = MpReal::from_f64(0.3125, prec);
        let err = itp.eval(&x).sub_r(&f(&x)).abs();
        assert!(err.to_f64() < 1e-22, "interp error {}", err.to_f64());
        // derivative of 1/(x^2+2) is -2x/(x^2+2)^2
        let denom = x.mul_r(&x).add_r(&MpReal::from_i64(2, prec));
        let dref = -x.ldexp(1).div_r(&denom.square());
        let derr = itp.deriv(&x).sub_r(&dref).abs();
        assert!(derr.to_f64() < 1e-20, "deriv error {}", derr.to_f64());
    }

    #[test]
    fn clearance_grid_stays_inside() {
        let prec = 128;
        let a = MpReal::zero(prec);
        let b = MpReal::one(prec);
        let cl = MpReal::from_f64(1e-4, prec);
        let pts = cheb_points_with_clearance(32, &a, &b, &cl);
        assert!(pts.iter().all(|x| {
            x.to_f64() >= 1e-4 * 0.99 && x.to_f64() <= 1.0 - 1e-4 * 0.99
        }));
        for w in pts.windows(2) {
            assert!(w[0] < w[1]);
        }
    }
}
