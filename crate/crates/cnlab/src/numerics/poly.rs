//! Dense univariate polynomials over [`MpComplex`] and simultaneous-iteration
//! root finding.

use super::complex::MpComplex;
use super::context::PrecisionContext;
use super::real::MpReal;
use crate::error::{Error, Result};

/// Polynomial with coefficients in ascending degree order.
///
/// The zero polynomial is the empty coefficient vector; otherwise the leading
/// coefficient is nonzero.
#[derive(Clone, Debug)]
pub struct Polynomial {
    coeffs: Vec<MpComplex>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<MpComplex>) -> Self {
        while let Some(c) = coeffs.last() {
            if c.is_zero() {
                coeffs.pop();
            } else {
                break;
            }
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: MpComplex) -> Self {
        Self::new(vec![c])
    }

    pub fn one(prec: u32) -> Self {
        Self::constant(MpComplex::one(prec))
    }

    /// The monomial x at the given precision.
    pub fn x(prec: u32) -> Self {
        Self::new(vec![MpComplex::zero(prec), MpComplex::one(prec)])
    }

    pub fn from_real_coeffs(coeffs: Vec<MpReal>) -> Self {
        Self::new(coeffs.into_iter().map(MpComplex::from_real).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports degree 0 by convention of callers
    /// that first check [`is_zero`](Self::is_zero).
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[MpComplex] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> MpComplex {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| MpComplex::zero(self.prec()))
    }

    pub fn prec(&self) -> u32 {
        self.coeffs.iter().map(|c| c.prec()).max().unwrap_or(64)
    }

    pub fn leading(&self) -> Option<&MpComplex> {
        self.coeffs.last()
    }

    pub fn is_monic(&self, tol: &MpReal) -> bool {
        match self.leading() {
            None => false,
            Some(c) => {
                let one = MpComplex::one(c.prec());
                (c.clone() - one).abs() <= *tol
            }
        }
    }

    pub fn eval(&self, z: &MpComplex) -> MpComplex {
        let prec = z.prec().max(self.prec());
        let mut acc = MpComplex::zero(prec);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul_c(z) + c;
        }
        acc
    }

    pub fn eval_real(&self, x: &MpReal) -> MpComplex {
        self.eval(&MpComplex::from_real(x.clone()))
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        let prec = self.prec();
        let d: Vec<MpComplex> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.scale(&MpReal::from_i64(k as i64, prec)))
            .collect();
        Polynomial::new(d)
    }

    pub fn add(&self, rhs: &Polynomial) -> Polynomial {
        let prec = self.prec().max(rhs.prec());
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let a = self.coeffs.get(k).cloned().unwrap_or_else(|| MpComplex::zero(prec));
            let b = rhs.coeffs.get(k).cloned().unwrap_or_else(|| MpComplex::zero(prec));
            out.push(a + b);
        }
        Polynomial::new(out)
    }

    pub fn sub(&self, rhs: &Polynomial) -> Polynomial {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn scale(&self, k: &MpComplex) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c.mul_c(k)).collect())
    }

    pub fn scale_real(&self, k: &MpReal) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c.scale(k)).collect())
    }

    pub fn mul(&self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let prec = self.prec().max(rhs.prec());
        let mut out = vec![MpComplex::zero(prec); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.mul_c(b);
            }
        }
        Polynomial::new(out)
    }

    /// Multiply by the monomial x (shift coefficients up).
    pub fn mul_x(&self) -> Polynomial {
        if self.is_zero() {
            return Polynomial::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(MpComplex::zero(self.prec()));
        out.extend(self.coeffs.iter().cloned());
        Polynomial { coeffs: out }
    }

    pub fn max_coeff_abs(&self) -> MpReal {
        let prec = self.prec();
        let mut m = MpReal::zero(prec);
        for c in &self.coeffs {
            m = m.max_r(&c.abs());
        }
        m
    }

    /// All coefficients have negligible imaginary part relative to `tol`.
    pub fn imag_below(&self, tol: &MpReal) -> bool {
        let scale = self.max_coeff_abs().max_r(&MpReal::one(self.prec()));
        self.coeffs
            .iter()
            .all(|c| c.im.abs() <= tol.mul_r(&scale))
    }

    pub fn real_coeffs(&self) -> Vec<MpReal> {
        self.coeffs.iter().map(|c| c.re.clone()).collect()
    }
}

/// Roots with tie clustering metadata.
#[derive(Clone, Debug)]
pub struct RootsOutput {
    pub roots: Vec<MpComplex>,
    /// multiplicity of the cluster each root belongs to (clustered at tie_tol)
    pub cluster_sizes: Vec<usize>,
}

/// All complex roots of `poly` by Durand-Kerner simultaneous iteration,
/// seeded at reduced precision and refined at working precision until the
/// residual contract |poly(z)| <= convergence_tol * max|coeff| * max(1,|z|)^deg
/// holds for every root.
pub fn poly_roots(poly: &Polynomial, ctx: &PrecisionContext) -> Result<RootsOutput> {
    let deg = poly.degree();
    if poly.is_zero() || deg < 1 {
        return Err(Error::InvalidConfig("poly_roots requires degree >= 1".into()));
    }
    let prec = ctx.prec();
    // Monic normalization.
    let lead = poly.leading().unwrap().clone();
    let monic: Vec<MpComplex> = poly.coeffs().iter().map(|c| c.div_c(&lead)).collect();

    // Cauchy bound for the root radius.
    let mut bound = MpReal::zero(prec);
    for c in &monic[..deg] {
        bound = bound.max_r(&c.abs());
    }
    let radius = MpReal::one(prec).add_r(&bound);

    // Seeds on a slightly irrational spiral to avoid symmetry locking.
    let two_pi = super::real::pi(prec).ldexp(1);
    let seed_ring: Vec<MpComplex> = (0..deg)
        .map(|k| {
            let theta = two_pi
                .mul_r(&MpReal::from_f64(k as f64 / deg as f64 + 0.137, prec));
            let (s, c) = theta.sin_cos();
            MpComplex::new(c, s).scale(&radius)
        })
        .collect();

    let coeffs_scale = poly.max_coeff_abs();

    // Stage 1 at reduced precision to get cheap seeds, stage 2 at working
    // precision until the step stalls below ~2^-(prec-24).
    let low = 96.min(prec);
    let monic_low: Vec<MpComplex> = monic
        .iter()
        .map(|c| MpComplex::new(c.re.with_prec(low), c.im.with_prec(low)))
        .collect();
    let mut zs_low: Vec<MpComplex> = seed_ring
        .iter()
        .map(|z| MpComplex::new(z.re.with_prec(low), z.im.with_prec(low)))
        .collect();
    dk_sweeps(&monic_low, &mut zs_low, low, 260, 20);
    let mut zs: Vec<MpComplex> = zs_low
        .iter()
        .map(|z| MpComplex::new(z.re.with_prec(prec), z.im.with_prec(prec)))
        .collect();
    let converged = dk_sweeps(&monic, &mut zs, prec, 80, 24);

    // Residual contract check.
    let mut worst_ratio = MpReal::zero(prec);
    for z in &zs {
        let r = poly.eval(z).abs();
        let growth = MpReal::one(prec).max_r(&z.abs()).powi(deg as i64);
        let scale = coeffs_scale.mul_r(&growth);
        let ratio = r.div_r(&scale);
        worst_ratio = worst_ratio.max_r(&ratio);
    }
    if worst_ratio > ctx.convergence_tol && !converged {
        return Err(Error::PrecisionInsufficient {
            what: format!(
                "root finding (degree {deg}, residual ratio {:.3e})",
                worst_ratio.to_f64()
            ),
            bits: prec,
        });
    }

    // Deterministic order: by modulus, then argument proxy (re, im).
    zs.sort_by(|a, b| {
        a.norm_sqr()
            .cmp_r(&b.norm_sqr())
            .then(a.re.cmp_r(&b.re))
            .then(a.im.cmp_r(&b.im))
    });

    let cluster_sizes = cluster_multiplicities(&zs, &ctx.tie_tol);
    Ok(RootsOutput { roots: zs, cluster_sizes })
}

/// Durand-Kerner sweeps on a monic coefficient vector; returns true when the
/// largest relative step fell below 2^-(prec - stall_bits).
fn dk_sweeps(
    monic: &[MpComplex],
    zs: &mut [MpComplex],
    prec: u32,
    max_sweeps: usize,
    stall_bits: i64,
) -> bool {
    let deg = zs.len();
    let eval = |z: &MpComplex| -> MpComplex {
        let mut acc = MpComplex::zero(prec);
        for c in monic.iter().rev() {
            acc = acc.mul_c(z) + c;
        }
        acc
    };
    let step_tol = MpReal::eps(prec).ldexp(stall_bits);
    for _ in 0..max_sweeps {
        let mut max_step = MpReal::zero(prec);
        for i in 0..deg {
            let mut denom = MpComplex::one(prec);
            for j in 0..deg {
                if i != j {
                    denom = denom.mul_c(&(zs[i].clone() - &zs[j]));
                }
            }
            if denom.is_zero() {
                zs[i] = zs[i].clone() + MpComplex::from_f64(1e-20, 2e-20, prec);
                continue;
            }
            let delta = eval(&zs[i]).div_c(&denom);
            max_step = max_step
                .max_r(&delta.abs().div_r(&MpReal::one(prec).max_r(&zs[i].abs())));
            zs[i] = zs[i].clone() - delta;
        }
        if max_step < step_tol {
            return true;
        }
    }
    false
}

/// Cluster roots whose mutual distance is below `tie_tol` times the local
/// scale; returns for each root the size of its cluster.
pub fn cluster_multiplicities(roots: &[MpComplex], tie_tol: &MpReal) -> Vec<usize> {
    let n = roots.len();
    let mut labels = vec![usize::MAX; n];
    let mut next = 0usize;
    for i in 0..n {
        if labels[i] != usize::MAX {
            continue;
        }
        labels[i] = next;
        for j in i + 1..n {
            if labels[j] != usize::MAX {
                continue;
            }
            let d = (roots[i].clone() - &roots[j]).abs();
            let scale = roots[i]
                .abs()
                .max_r(&roots[j].abs())
                .max_r(&MpReal::eps(roots[i].prec()));
            if d <= tie_tol.mul_r(&scale) {
                labels[j] = next;
            }
        }
        next += 1;
    }
    let mut counts = vec![0usize; next];
    for &l in &labels {
        counts[l] += 1;
    }
    labels.into_iter().map(|l| counts[l]).collect()
}

/// Monic polynomial with the given roots (test helper and oracle support).
pub fn poly_from_roots(roots: &[MpComplex], prec: u32) -> Polynomial {
    let mut p = Polynomial::one(prec);
    for r in roots {
        let factor = Polynomial::new(vec![-r.clone(), MpComplex::one(prec)]);
        p = p.mul(&factor);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::standard()
    }

    #[test]
    fn quadratic_unit_roots() {
        // z^2 - 1 -> {-1, +1}
        let p = Polynomial::from_real_coeffs(vec![
            MpReal::from_i64(-1, 256),
            MpReal::zero(256),
            MpReal::from_i64(1, 256),
        ]);
        let out = poly_roots(&p, &ctx()).unwrap();
        let mut vals: Vec<f64> = out.roots.iter().map(|z| z.re.to_f64()).collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + 1.0).abs() < 1e-70);
        assert!((vals[1] - 1.0).abs() < 1e-70);
        assert!(out.roots.iter().all(|z| z.im.to_f64().abs() < 1e-70));
    }

    #[test]
    fn golden_ratio_quadratic() {
        // z^2 - 3z + 1 -> (3 +- sqrt5)/2
        let p = Polynomial::from_real_coeffs(vec![
            MpReal::from_i64(1, 256),
            MpReal::from_i64(-3, 256),
            MpReal::from_i64(1, 256),
        ]);
        let out = poly_roots(&p, &ctx()).unwrap();
        let five = MpReal::from_i64(5, 256);
        let s5 = five.sqrt();
        let expect_small = MpReal::from_i64(3, 256).sub_r(&s5).ldexp(-1);
        let expect_big = MpReal::from_i64(3, 256).add_r(&s5).ldexp(-1);
        let d0 = out.roots[0].re.sub_r(&expect_small).abs();
        let d1 = out.roots[1].re.sub_r(&expect_big).abs();
        assert!(d0.to_f64() < 1e-70 && d1.to_f64() < 1e-70);
        assert!((out.roots[0].re.to_f64() - 0.381966).abs() < 1e-6);
        assert!((out.roots[1].re.to_f64() - 2.618034).abs() < 1e-6);
    }

    #[test]
    fn residual_contract_on_wilkinson_slice() {
        // Moderate-degree real-rooted polynomial: product of (z - k/7), k=1..12
        let prec = 256;
        let roots: Vec<MpComplex> = (1..=12)
            .map(|k| MpComplex::from_f64(k as f64 / 7.0, 0.0, prec))
            .collect();
        let p = poly_from_roots(&roots, prec);
        let out = poly_roots(&p, &ctx()).unwrap();
        let scale = p.max_coeff_abs();
        for z in &out.roots {
            let growth = MpReal::one(prec).max_r(&z.abs()).powi(12);
            let res = p.eval(z).abs();
            assert!(res <= ctx().convergence_tol.mul_r(&scale).mul_r(&growth));
        }
    }

    #[test]
    fn clustering_flags_double_root() {
        let prec = 256;
        let r = MpComplex::from_f64(0.5, 0.0, prec);
        let p = poly_from_roots(&[r.clone(), r.clone()], prec);
        let out = poly_roots(&p, &ctx()).unwrap();
        assert_eq!(out.cluster_sizes, vec![2, 2]);
    }
}
