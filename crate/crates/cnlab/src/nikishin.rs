//! Nikishin systems: generating measures on disjoint consecutive intervals
//! and the nested Cauchy-transform products that define the system measures
//! mu_1, ..., mu_p on the first interval.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::numerics::complex::MpComplex;
use crate::numerics::context::PrecisionContext;
use crate::numerics::poly::{poly_roots, Polynomial};
use crate::numerics::quad::gauss_rule;
use crate::numerics::real::MpReal;

/// Compact interval [a, b], a < b.
#[derive(Clone, Debug)]
pub struct Interval {
    pub a: MpReal,
    pub b: MpReal,
}

impl Interval {
    pub fn new(a: MpReal, b: MpReal) -> Result<Self> {
        if a.cmp_r(&b) != std::cmp::Ordering::Less {
            return Err(Error::InvalidConfig(format!(
                "interval needs a < b, got [{a}, {b}]"
            )));
        }
        Ok(Interval { a, b })
    }

    pub fn from_f64(a: f64, b: f64, prec: u32) -> Result<Self> {
        Self::new(MpReal::from_f64(a, prec), MpReal::from_f64(b, prec))
    }

    pub fn len(&self) -> MpReal {
        self.b.sub_r(&self.a)
    }

    pub fn midpoint(&self) -> MpReal {
        self.a.add_r(&self.b).ldexp(-1)
    }

    pub fn contains_open(&self, x: &MpReal) -> bool {
        self.a < *x && *x < self.b
    }

    /// Euclidean distance from a complex point to the segment.
    pub fn distance(&self, z: &MpComplex) -> MpReal {
        if z.re >= self.a && z.re <= self.b {
            z.im.abs()
        } else {
            let da = (z.clone() - &MpComplex::from_real(self.a.clone())).abs();
            let db = (z.clone() - &MpComplex::from_real(self.b.clone())).abs();
            da.min_r(&db)
        }
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        !(self.b < other.a || other.b < self.a)
    }
}

/// Density family of a generating measure: Jacobi-type weight optionally
/// modulated by a polynomial that stays strictly positive on the interval.
#[derive(Clone, Debug)]
pub enum DensityFamily {
    Uniform,
    Jacobi { alpha: MpReal, beta: MpReal },
    JacobiTimesPolynomial { alpha: MpReal, beta: MpReal, modulation: Polynomial },
}

/// A finite positive measure `(x-a)^alpha (b-x)^beta s(x) dx` on its interval.
#[derive(Clone, Debug)]
pub struct GeneratingMeasure {
    pub interval: Interval,
    pub family: DensityFamily,
}

impl GeneratingMeasure {
    pub fn uniform(interval: Interval) -> Self {
        GeneratingMeasure { interval, family: DensityFamily::Uniform }
    }

    pub fn jacobi(interval: Interval, alpha: MpReal, beta: MpReal) -> Self {
        GeneratingMeasure { interval, family: DensityFamily::Jacobi { alpha, beta } }
    }

    /// Endpoint exponents (alpha at the left end, beta at the right end).
    pub fn exponents(&self, prec: u32) -> (MpReal, MpReal) {
        match &self.family {
            DensityFamily::Uniform => (MpReal::zero(prec), MpReal::zero(prec)),
            DensityFamily::Jacobi { alpha, beta }
            | DensityFamily::JacobiTimesPolynomial { alpha, beta, .. } => {
                (alpha.clone(), beta.clone())
            }
        }
    }

    /// Smooth (weight-free) part of the density.
    pub fn smooth_factor(&self, x: &MpReal) -> MpReal {
        match &self.family {
            DensityFamily::Uniform | DensityFamily::Jacobi { .. } => MpReal::one(x.prec()),
            DensityFamily::JacobiTimesPolynomial { modulation, .. } => {
                modulation.eval_real(x).re
            }
        }
    }

    /// Full density at an interior point.
    pub fn density(&self, x: &MpReal) -> MpReal {
        let prec = x.prec();
        let (alpha, beta) = self.exponents(prec);
        let s = self.smooth_factor(x);
        let left = x.sub_r(&self.interval.a);
        let right = self.interval.b.sub_r(x);
        let wl = if alpha.is_zero() { MpReal::one(prec) } else { left.ln().mul_r(&alpha).exp() };
        let wr = if beta.is_zero() { MpReal::one(prec) } else { right.ln().mul_r(&beta).exp() };
        s.mul_r(&wl).mul_r(&wr)
    }

    pub fn validate(&self, ctx: &PrecisionContext) -> Result<()> {
        let prec = ctx.prec();
        let m_one = MpReal::from_i64(-1, prec);
        let (alpha, beta) = self.exponents(prec);
        if alpha <= m_one || beta <= m_one {
            return Err(Error::InvalidConfig(
                "generating measure exponents must exceed -1".into(),
            ));
        }
        if let DensityFamily::JacobiTimesPolynomial { modulation, .. } = &self.family {
            // positivity: dense sampling plus a check that no essentially
            // real root of the modulation lies on the interval
            let pts =
                crate::numerics::cheb::cheb_points(129, &self.interval.a, &self.interval.b);
            for x in pts.iter().chain([&self.interval.a, &self.interval.b]) {
                if !modulation.eval_real(x).re.is_positive() {
                    return Err(Error::DensityNotPositive(format!(
                        "modulation non-positive near x = {}",
                        x.to_f64()
                    )));
                }
            }
            if modulation.degree() >= 1 {
                let roots = poly_roots(modulation, ctx)?;
                let tol = ctx.tie_tol.mul_r(&self.interval.len());
                for r in &roots.roots {
                    if self.interval.distance(r) <= tol {
                        return Err(Error::DensityNotPositive(format!(
                            "modulation root at ({:.6}, {:.6}) touches the interval",
                            r.re.to_f64(),
                            r.im.to_f64()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Total mass by stabilized Gauss-Jacobi quadrature of the smooth factor.
    pub fn mass(&self, ctx: &PrecisionContext) -> Result<MpReal> {
        let prec = ctx.prec();
        let _ = prec;
        let (alpha, beta) = self.exponents(ctx.prec());
        let (v, _) = crate::numerics::quad::stabilized_integral(
            (&self.interval.a, &self.interval.b),
            &alpha,
            &beta,
            |x| self.smooth_factor(x),
            ctx,
        )?;
        Ok(v)
    }
}

/// The Nikishin input: p generating measures with consecutive supports
/// pairwise disjoint (non-consecutive supports may overlap).
#[derive(Debug)]
pub struct NikishinSystem {
    generators: Vec<GeneratingMeasure>,
    memo: Mutex<HashMap<MemoKey, MpReal>>,
}

/// Internal stabilization target for the quantities feeding the moment
/// Gram systems: the solve's conditioning grows exponentially in the degree,
/// so these stabilize near working precision rather than at the user-facing
/// convergence_tol.
fn deep_tol(prec: u32) -> MpReal {
    MpReal::eps(prec).ldexp(48)
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct MemoKey {
    first: usize,
    last: usize,
    order: usize,
    node: usize,
    prec: u32,
}

impl NikishinSystem {
    pub fn new(generators: Vec<GeneratingMeasure>, ctx: &PrecisionContext) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidConfig("need at least one generating measure".into()));
        }
        for g in &generators {
            g.validate(ctx)?;
        }
        for k in 0..generators.len() - 1 {
            if generators[k].interval.overlaps(&generators[k + 1].interval) {
                return Err(Error::IntervalsOverlap { first: k + 1, second: k + 2 });
            }
        }
        Ok(NikishinSystem { generators, memo: Mutex::new(HashMap::new()) })
    }

    pub fn p(&self) -> usize {
        self.generators.len()
    }

    /// 1-indexed generating measure.
    pub fn generator(&self, k: usize) -> &GeneratingMeasure {
        &self.generators[k - 1]
    }

    /// 1-indexed support interval Delta_k.
    pub fn delta(&self, k: usize) -> &Interval {
        &self.generators[k - 1].interval
    }

    /// Reference two-interval configuration: p = 2, uniform densities on
    /// [-1, 0] and [0.5, 1.5].
    pub fn reference_p2(ctx: &PrecisionContext) -> Result<Self> {
        let prec = ctx.prec();
        Self::new(
            vec![
                GeneratingMeasure::uniform(Interval::from_f64(-1.0, 0.0, prec)?),
                GeneratingMeasure::uniform(Interval::from_f64(0.5, 1.5, prec)?),
            ],
            ctx,
        )
    }

    /// Reference three-interval configuration: p = 3, uniform densities on
    /// [-1, 0], [0.5, 1.5], [2, 3].
    pub fn reference_p3(ctx: &PrecisionContext) -> Result<Self> {
        let prec = ctx.prec();
        Self::new(
            vec![
                GeneratingMeasure::uniform(Interval::from_f64(-1.0, 0.0, prec)?),
                GeneratingMeasure::uniform(Interval::from_f64(0.5, 1.5, prec)?),
                GeneratingMeasure::uniform(Interval::from_f64(2.0, 3.0, prec)?),
            ],
            ctx,
        )
    }

    /// Cauchy transform of the nested product <sigma_first, ..., sigma_last>
    /// at a real point off Delta_first; real-valued by construction. Values
    /// at quadrature nodes are memoized per (levels, rule order).
    fn nested_transform(
        &self,
        first: usize,
        last: usize,
        x: &MpReal,
        ctx: &PrecisionContext,
    ) -> Result<MpReal> {
        debug_assert!(first >= 2 && last <= self.p() && first <= last);
        let g = self.generator(first);
        let prec = ctx.prec();
        let (alpha, beta) = g.exponents(prec);
        let mut order = ctx.quad_order_min.max(16);
        let mut prev: Option<MpReal> = None;
        loop {
            if order > ctx.quad_order_max {
                return Err(Error::NonConvergence {
                    what: format!("nested transform level {first}"),
                    iterations: 0,
                    last_change: f64::NAN,
                });
            }
            let rule = gauss_rule(
                (&g.interval.a, &g.interval.b),
                &alpha,
                &beta,
                order,
                ctx,
            )?;
            let mut acc = MpReal::zero(prec);
            let mut scale = MpReal::zero(prec);
            for (idx, (t, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                let inner = if first == last {
                    MpReal::one(prec)
                } else {
                    self.nested_node_value(first, last, order, idx, t, ctx)?
                };
                let val = g.smooth_factor(t).mul_r(&inner).div_r(&x.sub_r(t));
                acc = acc.add_r(&val.mul_r(w));
                scale = scale.add_r(&val.abs().mul_r(w));
            }
            if let Some(p) = prev {
                let diff = acc.sub_r(&p).abs();
                let s = scale.max_r(&acc.abs()).max_r(&MpReal::eps(prec));
                if diff <= deep_tol(prec).min_r(&ctx.convergence_tol).mul_r(&s) {
                    return Ok(acc);
                }
            }
            prev = Some(acc);
            order *= 2;
        }
    }

    /// Memoized value of the (first+1..=last) transform at node `idx` of the
    /// order-`order` rule on Delta_first.
    fn nested_node_value(
        &self,
        first: usize,
        last: usize,
        order: usize,
        idx: usize,
        t: &MpReal,
        ctx: &PrecisionContext,
    ) -> Result<MpReal> {
        let key = MemoKey { first: first + 1, last, order, node: idx, prec: ctx.prec() };
        if let Some(v) = self.memo.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let v = self.nested_transform(first + 1, last, t, ctx)?;
        self.memo.lock().unwrap().insert(key, v.clone());
        Ok(v)
    }

    /// Density of mu_k at x interior to Delta_1:
    /// sigma_1'(x) times the nested transform of <sigma_2, ..., sigma_k>.
    pub fn mu_density(&self, k: usize, x: &MpReal, ctx: &PrecisionContext) -> Result<MpReal> {
        if k == 0 || k > self.p() {
            return Err(Error::IndexOutOfRange { index: k, max: self.p() });
        }
        if !self.delta(1).contains_open(x) {
            return Err(Error::InvalidConfig(format!(
                "x = {} not interior to Delta_1",
                x.to_f64()
            )));
        }
        let base = self.generator(1).density(x);
        if k == 1 {
            return Ok(base);
        }
        let tail = self.nested_transform(2, k, x, ctx)?;
        Ok(base.mul_r(&tail))
    }

    /// Weight-free part of the mu_k density: smooth factor of sigma_1 times
    /// the nested transform (sigma_1's Jacobi weight is factored out).
    pub fn mu_smooth_part(
        &self,
        k: usize,
        x: &MpReal,
        ctx: &PrecisionContext,
    ) -> Result<MpReal> {
        let s = self.generator(1).smooth_factor(x);
        if k == 1 {
            return Ok(s);
        }
        let tail = self.nested_transform(2, k, x, ctx)?;
        Ok(s.mul_r(&tail))
    }

    /// First N+1 modified moments of mu_k against the Chebyshev basis of
    /// Delta_1. Returns (moments, per-moment error estimates).
    pub fn modified_moments(
        &self,
        k: usize,
        basis_degree: usize,
        ctx: &PrecisionContext,
    ) -> Result<(Vec<MpReal>, Vec<MpReal>)> {
        if k == 0 || k > self.p() {
            return Err(Error::IndexOutOfRange { index: k, max: self.p() });
        }
        let prec = ctx.prec();
        let g1 = self.generator(1);
        let (alpha, beta) = g1.exponents(prec);
        let delta1 = g1.interval.clone();
        let n_moments = basis_degree + 1;

        let compute = |order: usize| -> Result<Vec<MpReal>> {
            let rule = gauss_rule((&delta1.a, &delta1.b), &alpha, &beta, order, ctx)?;
            let mut acc = vec![MpReal::zero(prec); n_moments];
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                let smooth = self.mu_smooth_part(k, t, ctx)?;
                let f = smooth.mul_r(w);
                // Chebyshev recurrence on the normalized coordinate
                let u = t.ldexp(1).sub_r(&delta1.a).sub_r(&delta1.b).div_r(&delta1.len());
                let mut tm1 = MpReal::one(prec);
                let mut tc = u.clone();
                acc[0] = acc[0].add_r(&f);
                if n_moments > 1 {
                    acc[1] = acc[1].add_r(&f.mul_r(&tc));
                }
                for slot in acc.iter_mut().skip(2) {
                    let tn = u.ldexp(1).mul_r(&tc).sub_r(&tm1);
                    *slot = slot.add_r(&f.mul_r(&tn));
                    tm1 = tc;
                    tc = tn;
                }
            }
            Ok(acc)
        };

        // The integrand carries Chebyshev polynomials up to basis_degree;
        // start above the exactness threshold.
        let mut order = (basis_degree / 2 + 16).max(ctx.quad_order_min);
        let mut prev = compute(order)?;
        loop {
            order *= 2;
            if order > ctx.quad_order_max {
                return Err(Error::NonConvergence {
                    what: "modified moments".into(),
                    iterations: 0,
                    last_change: f64::NAN,
                });
            }
            let cur = compute(order)?;
            let scale = cur
                .iter()
                .fold(MpReal::zero(prec), |m, v| m.max_r(&v.abs()))
                .max_r(&MpReal::eps(prec));
            let target = deep_tol(prec).min_r(&ctx.convergence_tol);
            let mut errs = Vec::with_capacity(n_moments);
            let mut ok = true;
            for (a, b) in cur.iter().zip(&prev) {
                let e = a.sub_r(b).abs();
                if e > target.mul_r(&scale) {
                    ok = false;
                }
                errs.push(e);
            }
            if ok {
                return Ok((cur, errs));
            }
            prev = cur;
        }
    }
}

/// Cauchy transform `int dsigma(t) / (z - t)` of a generating measure by
/// adaptive Gauss-Jacobi quadrature with stabilization.
pub fn cauchy_transform(
    measure: &GeneratingMeasure,
    z: &MpComplex,
    ctx: &PrecisionContext,
) -> Result<MpComplex> {
    let prec = ctx.prec();
    let dist = measure.interval.distance(z);
    let required = ctx.tie_tol.mul_r(&measure.interval.len());
    if dist <= required {
        return Err(Error::ProximityToSupport {
            distance: dist.to_f64(),
            required: required.to_f64(),
        });
    }
    let (alpha, beta) = measure.exponents(prec);
    let mut order = ctx.quad_order_min.max(16);
    let mut prev: Option<MpComplex> = None;
    loop {
        if order > ctx.quad_order_max {
            return Err(Error::NonConvergence {
                what: "cauchy transform".into(),
                iterations: 0,
                last_change: f64::NAN,
            });
        }
        let rule = gauss_rule(
            (&measure.interval.a, &measure.interval.b),
            &alpha,
            &beta,
            order,
            ctx,
        )?;
        let acc = rule.integrate_complex(|t| {
            let s = measure.smooth_factor(t);
            (z.clone() - &MpComplex::from_real(t.clone()))
                .recip()
                .scale(&s)
        });
        if let Some(p) = prev {
            let diff = (acc.clone() - &p).abs();
            let scale = acc.abs().max_r(&MpReal::eps(prec));
            if diff <= ctx.convergence_tol.mul_r(&scale) {
                return Ok(acc);
            }
        }
        prev = Some(acc);
        order *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::standard()
    }

    #[test]
    fn cauchy_of_uniform_is_log() {
        // uniform density 1 on [-1,1], z = 2 -> log 3
        let c = ctx();
        let prec = c.prec();
        let m = GeneratingMeasure::uniform(Interval::from_f64(-1.0, 1.0, prec).unwrap());
        let z = MpComplex::from_f64(2.0, 0.0, prec);
        let v = cauchy_transform(&m, &z, &c).unwrap();
        let expect = MpReal::from_i64(3, prec).ln();
        assert!(v.re.sub_r(&expect).abs().to_f64() < 1e-60);
        assert!(v.im.abs().to_f64() < 1e-70);
    }

    #[test]
    fn transform_tends_to_mass_over_z() {
        let c = ctx();
        let prec = c.prec();
        let m = GeneratingMeasure::uniform(Interval::from_f64(-1.0, 1.0, prec).unwrap());
        let z = MpComplex::from_f64(1e8, 0.0, prec);
        let v = cauchy_transform(&m, &z, &c).unwrap();
        let scaled = v.scale(&MpReal::from_f64(1e8, prec));
        // mass 2; centered interval so the correction is ~ mass*var/z^2
        assert!((scaled.re.to_f64() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn conjugate_symmetry() {
        let c = ctx();
        let prec = c.prec();
        let m = GeneratingMeasure::jacobi(
            Interval::from_f64(0.0, 1.0, prec).unwrap(),
            MpReal::from_f64(0.5, prec),
            MpReal::from_f64(0.5, prec),
        );
        let z = MpComplex::from_f64(0.3, 0.8, prec);
        let v = cauchy_transform(&m, &z, &c).unwrap();
        let vc = cauchy_transform(&m, &z.conj(), &c).unwrap();
        assert!((v.conj() - &vc).abs().to_f64() < 1e-70);
    }

    #[test]
    fn proximity_guard_fires() {
        let c = ctx();
        let prec = c.prec();
        let m = GeneratingMeasure::uniform(Interval::from_f64(-1.0, 1.0, prec).unwrap());
        let z = MpComplex::from_f64(0.5, 1e-14, prec);
        match cauchy_transform(&m, &z, &c) {
            Err(Error::ProximityToSupport { .. }) => {}
            other => panic!("expected proximity error, got {other:?}"),
        }
    }

    #[test]
    fn disjointness_enforced() {
        let c = ctx();
        let prec = c.prec();
        let bad = NikishinSystem::new(
            vec![
                GeneratingMeasure::uniform(Interval::from_f64(-1.0, 0.2, prec).unwrap()),
                GeneratingMeasure::uniform(Interval::from_f64(0.1, 1.5, prec).unwrap()),
            ],
            &c,
        );
        assert!(matches!(bad, Err(Error::IntervalsOverlap { first: 1, second: 2 })));
    }

    #[test]
    fn mu2_density_matches_log_closed_form() {
        // Delta_1 = [-1,0], Delta_2 = [0.5,1.5] both uniform:
        // mu_2'(x) = log((x-0.5)/(x-1.5)) for x in Delta_1
        let c = ctx();
        let prec = c.prec();
        let sys = NikishinSystem::reference_p2(&c).unwrap();
        for xf in [-0.9, -0.5, -0.21, -0.03] {
            let x = MpReal::from_f64(xf, prec);
            let d = sys.mu_density(2, &x, &c).unwrap();
            let num = MpReal::from_f64(0.5, prec).sub_r(&x);
            let den = MpReal::from_f64(1.5, prec).sub_r(&x);
            let expect = num.div_r(&den).ln();
            assert!(
                d.sub_r(&expect).abs().to_f64() < 1e-55,
                "x={xf}: {} vs {}",
                d.to_f64(),
                expect.to_f64()
            );
            assert!(d.is_negative());
        }
    }

    #[test]
    fn mu1_density_is_sigma1() {
        let c = ctx();
        let prec = c.prec();
        let sys = NikishinSystem::reference_p2(&c).unwrap();
        let x = MpReal::from_f64(-0.37, prec);
        let d = sys.mu_density(1, &x, &c).unwrap();
        assert!((d.to_f64() - 1.0).abs() < 1e-70);
    }

    #[test]
    fn mu_density_signs_constant() {
        let c = ctx();
        let prec = c.prec();
        let sys = NikishinSystem::reference_p3(&c).unwrap();
        for k in 1..=3 {
            let mut signs = Vec::new();
            for i in 1..40 {
                let x = MpReal::from_f64(-1.0 + i as f64 / 41.0, prec);
                let d = sys.mu_density(k, &x, &c).unwrap();
                signs.push(d.is_positive());
            }
            assert!(
                signs.iter().all(|&s| s == signs[0]),
                "sign change in mu_{k} density"
            );
        }
    }

    #[test]
    fn moment_zero_is_generator_mass() {
        let c = ctx();
        let sys = NikishinSystem::reference_p2(&c).unwrap();
        let (moments, errs) = sys.modified_moments(1, 4, &c).unwrap();
        // sigma_1 uniform on [-1,0]: mass 1
        assert!((moments[0].to_f64() - 1.0).abs() < 1e-60);
        assert!(errs[0].to_f64() < 1e-60);
    }

    #[test]
    fn mu2_moments_match_log_oracle_at_512_bits() {
        // independent oracle: direct quadrature of T_l(x) log((x-.5)/(x-1.5))
        // at 512 bits, never touching the nested-transform path
        let c = ctx();
        let c512 = PrecisionContext::with_bits(512).unwrap();
        let prec = c512.prec();
        let sys = NikishinSystem::reference_p2(&c).unwrap();
        let n = 6usize;
        let (moments, _) = sys.modified_moments(2, n, &c).unwrap();

        let a = MpReal::from_i64(-1, prec);
        let b = MpReal::zero(prec);
        let z = MpReal::zero(prec);
        let rule = gauss_rule((&a, &b), &z, &z, 220, &c512).unwrap();
        for l in 0..=n {
            let oracle = rule.integrate(|x| {
                let num = MpReal::from_f64(0.5, prec).sub_r(x);
                let den = MpReal::from_f64(1.5, prec).sub_r(x);
                let w = num.div_r(&den).ln();
                // T_l on [-1,0]: argument u = 2x + 1
                let u = x.ldexp(1).add_r(&MpReal::one(prec));
                let mut tm1 = MpReal::one(prec);
                let mut tc = u.clone();
                let t = match l {
                    0 => tm1.clone(),
                    1 => tc.clone(),
                    _ => {
                        let mut tn = MpReal::zero(prec);
                        for _ in 2..=l {
                            tn = u.ldexp(1).mul_r(&tc).sub_r(&tm1);
                            tm1 = tc;
                            tc = tn.clone();
                        }
                        tn
                    }
                };
                w.mul_r(&t)
            });
            let rel = moments[l]
                .with_prec(prec)
                .sub_r(&oracle)
                .abs()
                .div_r(&oracle.abs().max_r(&MpReal::from_f64(1e-3, prec)));
            assert!(
                rel.to_f64() < 1e-25,
                "moment {l}: rel dev {}",
                rel.to_f64()
            );
        }
    }

    #[test]
    fn doubling_stays_within_error_estimate() {
        let c = ctx();
        let sys = NikishinSystem::reference_p2(&c).unwrap();
        let (m1, e1) = sys.modified_moments(2, 8, &c).unwrap();
        // recompute under a stricter stabilization target: values must agree
        // within the reported estimates
        let strict = PrecisionContext::new(256, 64, 4096, "1e-40", "1e-12").unwrap();
        let (m2, _) = sys.modified_moments(2, 8, &strict).unwrap();
        for l in 0..m1.len() {
            let d = m1[l].sub_r(&m2[l]).abs();
            let allowance = e1[l].add_r(&MpReal::from_f64(1e-55, c.prec()));
            assert!(d <= allowance, "moment {l} drifted beyond estimate");
        }
    }
}
