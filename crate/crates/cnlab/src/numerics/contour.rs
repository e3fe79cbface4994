//! Trapezoid-rule contour integration on elliptic Jordan curves.

use super::complex::MpComplex;
use super::context::PrecisionContext;
use super::real::{pi, MpReal};
use crate::error::{Error, Result};

/// Ellipse `center + semi_x cos t + i semi_y sin t` enclosing a designated
/// real interval with a declared clearance.
#[derive(Clone, Debug)]
pub struct JordanContour {
    pub center: MpComplex,
    pub semi_x: MpReal,
    pub semi_y: MpReal,
    pub node_count: usize,
    /// Declared minimum distance from the curve to the enclosed interval.
    pub margin: MpReal,
}

impl JordanContour {
    /// Ellipse around `[a, b]` with margin `margin_frac * (b - a)` in every
    /// direction (default caller value 0.25).
    pub fn around_interval(
        a: &MpReal,
        b: &MpReal,
        margin_frac: f64,
        ctx: &PrecisionContext,
    ) -> Result<Self> {
        if a.cmp_r(b) != std::cmp::Ordering::Less {
            return Err(Error::InvalidConfig("contour interval needs a < b".into()));
        }
        let prec = ctx.prec();
        let len = b.sub_r(a);
        let margin = len.mul_r(&MpReal::from_f64(margin_frac, prec));
        let half = MpReal::from_f64(0.5, prec);
        let center = MpComplex::from_real(a.add_r(b).mul_r(&half));
        let semi_x = len.mul_r(&half).add_r(&margin);
        let semi_y = margin.clone();
        Ok(JordanContour { center, semi_x, semi_y, node_count: 64, margin })
    }

    pub fn with_nodes(mut self, node_count: usize) -> Self {
        self.node_count = node_count.max(16);
        if self.node_count % 2 == 1 {
            self.node_count += 1;
        }
        self
    }

    fn point_and_tangent(&self, cos_t: &MpReal, sin_t: &MpReal) -> (MpComplex, MpComplex) {
        let z = MpComplex::new(
            self.center.re.add_r(&self.semi_x.mul_r(cos_t)),
            self.center.im.add_r(&self.semi_y.mul_r(sin_t)),
        );
        let dz = MpComplex::new(-self.semi_x.mul_r(sin_t), self.semi_y.mul_r(cos_t));
        (z, dz)
    }
}

/// Contour integral of `f` along the ellipse by the trapezoid rule with node
/// doubling until the relative change drops below `convergence_tol`.
/// Returns the value and the last observed change as an error estimate.
pub fn contour_integral<F>(
    f: F,
    gamma: &JordanContour,
    ctx: &PrecisionContext,
) -> Result<(MpComplex, MpReal)>
where
    F: Fn(&MpComplex) -> Result<MpComplex>,
{
    let prec = ctx.prec();
    let two_pi = pi(prec).ldexp(1);
    let mut n = gamma.node_count.max(16);
    let max_nodes = 1usize << 17;

    // f(gamma(t)) * gamma'(t) at the current node set, refined by interleaving.
    let eval_ring = |n: usize| -> Result<Vec<MpComplex>> {
        let step = two_pi.div_i64(n as i64);
        let (s1, c1) = step.sin_cos();
        let rot = MpComplex::new(c1, s1);
        let mut w = MpComplex::one(prec);
        let mut vals = Vec::with_capacity(n);
        for j in 0..n {
            if j > 0 {
                w = w.mul_c(&rot);
            }
            let (z, dz) = gamma.point_and_tangent(&w.re, &w.im);
            vals.push(f(&z)?.mul_c(&dz));
        }
        Ok(vals)
    };

    let mut vals = eval_ring(n)?;
    let sum_of = |vals: &[MpComplex]| -> MpComplex {
        let mut s = MpComplex::zero(prec);
        for v in vals {
            s = s + v.clone();
        }
        s
    };
    let mut integral = sum_of(&vals).scale(&two_pi.div_i64(n as i64));
    let mut previous: Option<MpComplex> = None;

    loop {
        let n2 = n * 2;
        if n2 > max_nodes {
            let last_change = previous
                .as_ref()
                .map(|p| (integral.clone() - p).abs().to_f64())
                .unwrap_or(f64::NAN);
            return Err(Error::NonConvergence {
                what: format!(
                    "contour integral (last two iterates {:?} and {:?})",
                    previous.as_ref().map(|p| p.to_f64()),
                    integral.to_f64()
                ),
                iterations: (max_nodes / gamma.node_count).trailing_zeros() as usize,
                last_change,
            });
        }
        // refine: old node j sits at position 2j in the new ring
        let step = two_pi.div_i64(n2 as i64);
        let (s1, c1) = step.sin_cos();
        let odd0 = MpComplex::new(c1, s1);
        let rot2 = odd0.mul_c(&odd0);
        let mut new_vals = Vec::with_capacity(n2);
        let mut w = odd0.clone(); // first odd node angle = step
        for j in 0..n {
            new_vals.push(vals[j].clone());
            if j > 0 {
                w = w.mul_c(&rot2);
            }
            let (z, dz) = gamma.point_and_tangent(&w.re, &w.im);
            new_vals.push(f(&z)?.mul_c(&dz));
        }
        vals = new_vals;
        n = n2;
        let next = sum_of(&vals).scale(&two_pi.div_i64(n as i64));
        let change = (next.clone() - &integral).abs();
        previous = Some(integral.clone());
        // natural scale: mean node magnitude times curve parameter length
        let mut mag = MpReal::zero(prec);
        for v in &vals {
            mag = mag.add_r(&v.abs());
        }
        let scale = mag
            .div_i64(n as i64)
            .mul_r(&two_pi)
            .max_r(&next.abs())
            .max_r(&MpReal::eps(prec));
        integral = next;
        if change <= ctx.convergence_tol.mul_r(&scale) {
            return Ok((integral, change));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_circleish(ctx: &PrecisionContext) -> JordanContour {
        // ellipse around [-0.5, 0.5] with margin 0.5: semi_x = 1, semi_y = 0.5
        let a = MpReal::from_f64(-0.5, ctx.prec());
        let b = MpReal::from_f64(0.5, ctx.prec());
        JordanContour::around_interval(&a, &b, 0.5, ctx).unwrap()
    }

    #[test]
    fn residue_of_inverse_z() {
        let ctx = PrecisionContext::standard();
        let gamma = unit_circleish(&ctx);
        let (v, err) = contour_integral(|z| Ok(z.recip()), &gamma, &ctx).unwrap();
        let two_pi = pi(ctx.prec()).ldexp(1);
        // stops once the doubling change is below convergence_tol (1e-30)
        assert!(v.re.abs().to_f64() < 1e-28);
        assert!(v.im.sub_r(&two_pi).abs().to_f64() < 1e-28);
        assert!(v.im.sub_r(&two_pi).abs() <= err.add_r(&MpReal::from_f64(1e-28, ctx.prec())));
    }

    #[test]
    fn analytic_integrand_vanishes() {
        let ctx = PrecisionContext::standard();
        let gamma = unit_circleish(&ctx);
        let (v, _) = contour_integral(|z| Ok(z.clone()), &gamma, &ctx).unwrap();
        assert!(v.abs().to_f64() < 1e-40);
    }

    #[test]
    fn cauchy_formula_pole_outside_interval() {
        // 1/(z - 2) has no pole inside: integral 0
        let ctx = PrecisionContext::standard();
        let gamma = unit_circleish(&ctx);
        let two = MpComplex::from_f64(2.0, 0.0, ctx.prec());
        let (v, _) =
            contour_integral(|z| Ok((z.clone() - &two).recip()), &gamma, &ctx).unwrap();
        assert!(v.abs().to_f64() < 1e-28);
    }
}
