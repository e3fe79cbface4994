//! The measures nu_k on the first interval, the layered hierarchy nu_j^(l)
//! on the deeper intervals, the diagonal generating measures rho_k, the
//! layered reconstruction check and the orthogonality verdicts for the
//! Chebyshev-Nikishin polynomials.

use crate::error::{Error, Result};
use crate::nikishin::Interval;
use crate::numerics::cheb::{cheb_points_with_clearance, Interpolant};
use crate::numerics::complex::MpComplex;
use crate::numerics::context::PrecisionContext;
use crate::numerics::contour::{contour_integral, JordanContour};
use crate::numerics::quad::gauss_rule;
use crate::numerics::real::{pi, MpReal};
use crate::surface::{branches_at, exact_boundary_sample};
use crate::toeplitz::BlockToeplitzOperator;

/// Sampled density on an interval with square-root endpoint behaviour:
/// density(x) = smooth(x) * sqrt((x-a)(b-x)), tabulated on a Chebyshev grid
/// with endpoint clearance and interpolated through the weight-free factor.
#[derive(Clone, Debug)]
pub struct DensityTable {
    pub interval: Interval,
    pub layer: usize,
    pub index: usize,
    pub xs: Vec<MpReal>,
    pub values: Vec<MpReal>,
    /// interpolant of density / sqrt((x-a)(b-x))
    pub smooth: Interpolant,
}

pub const TABLE_POINTS: usize = 256;
pub const ENDPOINT_CLEARANCE_FRAC: f64 = 1e-4;

impl DensityTable {
    /// Tabulate a density function on the interval; `f` is evaluated at
    /// interior Chebyshev points.
    pub fn build<F: FnMut(&MpReal) -> Result<MpReal>>(
        interval: &Interval,
        layer: usize,
        index: usize,
        points: usize,
        mut f: F,
    ) -> Result<Self> {
        let prec = interval.a.prec();
        let clearance = interval
            .len()
            .mul_r(&MpReal::from_f64(ENDPOINT_CLEARANCE_FRAC, prec));
        let xs = cheb_points_with_clearance(points, &interval.a, &interval.b, &clearance);
        let mut values = Vec::with_capacity(points);
        let mut smooth_vals = Vec::with_capacity(points);
        for x in &xs {
            let v = f(x)?;
            let w = x.sub_r(&interval.a).mul_r(&interval.b.sub_r(x)).sqrt();
            smooth_vals.push(v.div_r(&w));
            values.push(v);
        }
        let smooth = Interpolant::new(xs.clone(), smooth_vals);
        Ok(DensityTable { interval: interval.clone(), layer, index, xs, values, smooth })
    }

    /// Density value by interpolation (through the weight-free factor).
    pub fn density(&self, x: &MpReal) -> MpReal {
        let w = x.sub_r(&self.interval.a).mul_r(&self.interval.b.sub_r(x)).sqrt();
        self.smooth.eval(x).mul_r(&w)
    }

    /// Total mass via the (1/2, 1/2)-Jacobi endpoint rule on the smooth part.
    pub fn mass(&self, order: usize, ctx: &PrecisionContext) -> Result<MpReal> {
        let prec = ctx.prec();
        let half = MpReal::from_f64(0.5, prec);
        let rule = gauss_rule(
            (&self.interval.a, &self.interval.b),
            &half,
            &half,
            order,
            ctx,
        )?;
        Ok(rule.integrate(|x| self.smooth.eval(x)))
    }

    /// Integral of f d(table) via the endpoint-weighted rule.
    pub fn integrate<F: Fn(&MpReal) -> MpReal>(
        &self,
        order: usize,
        ctx: &PrecisionContext,
        f: F,
    ) -> Result<MpReal> {
        let prec = ctx.prec();
        let half = MpReal::from_f64(0.5, prec);
        let rule = gauss_rule(
            (&self.interval.a, &self.interval.b),
            &half,
            &half,
            order,
            ctx,
        )?;
        Ok(rule.integrate(|x| self.smooth.eval(x).mul_r(&f(x))))
    }

    /// Complex-valued integral of f d(table).
    pub fn integrate_complex<F: Fn(&MpReal) -> MpComplex>(
        &self,
        order: usize,
        ctx: &PrecisionContext,
        f: F,
    ) -> Result<MpComplex> {
        let prec = ctx.prec();
        let half = MpReal::from_f64(0.5, prec);
        let rule = gauss_rule(
            (&self.interval.a, &self.interval.b),
            &half,
            &half,
            order,
            ctx,
        )?;
        Ok(rule.integrate_complex(|x| f(x).scale(&self.smooth.eval(x))))
    }

    /// No sign change between adjacent interior samples.
    pub fn sign_constant(&self) -> bool {
        let mut signs = self.values.iter().map(|v| v.is_negative());
        match signs.next() {
            None => true,
            Some(first) => signs.all(|s| s == first),
        }
    }

    /// Fitted endpoint exponent from a log-log tail at the left endpoint.
    pub fn left_endpoint_exponent(&self) -> f64 {
        let n = self.xs.len().min(24);
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            let u = self.xs[i].sub_r(&self.interval.a).to_f64();
            let v = self.values[i].abs().to_f64();
            if u > 0.0 && v > 0.0 {
                pts.push((u.ln(), v.ln()));
            }
        }
        slope(&pts)
    }
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Density of nu_j at x interior to the first arc: the Stieltjes-Perron jump
/// of 1/F_j across the cut, from ladder boundary values of psi_0^{(j)}.
pub fn nu_density(
    op: &BlockToeplitzOperator,
    j: usize,
    x: &MpReal,
    ctx: &PrecisionContext,
) -> Result<MpReal> {
    if j == 0 || j > op.p {
        return Err(Error::IndexOutOfRange { index: j, max: op.p });
    }
    let prec = ctx.prec();
    let s = exact_boundary_sample(op, x, ctx)?;
    let u = s.psi[j - 1][0].recip();
    // (1/2 pi i)(conj(u) - u) = -Im(u)/pi
    Ok(-u.im.div_r(&pi(prec)))
}

/// Density of the layer-l measure nu_j^{(l)} at x interior to the l-th arc:
/// (m_{l,j} / 2 pi i) * [prod_{t=0}^{l-2} psi_t^{(l-1)}] / [prod_{t=0}^{l} psi_t^{(j)}]
/// * (psi_{l-1,-}^{(1)} - psi_{l-1,+}^{(1)}).
/// Returns the (real) density; the imaginary residue is a diagnostic.
pub fn layer_density(
    op: &BlockToeplitzOperator,
    constants: &crate::surface::SurfaceConstants,
    l: usize,
    j: usize,
    x: &MpReal,
    ctx: &PrecisionContext,
) -> Result<(MpReal, MpReal)> {
    let p = op.p;
    if l < 1 || l > p {
        return Err(Error::IndexOutOfRange { index: l, max: p });
    }
    if j < l || j > p {
        return Err(Error::IndexOutOfRange { index: j, max: p });
    }
    let prec = ctx.prec();
    if l == 1 {
        let d = nu_density(op, j, x, ctx)?;
        return Ok((d, MpReal::zero(prec)));
    }
    let s = exact_boundary_sample(op, x, ctx)?;
    let mut num = MpComplex::one(prec);
    for t in 0..=l - 2 {
        num = num.mul_c(&s.psi[l - 2][t]);
    }
    let mut den = MpComplex::one(prec);
    for t in 0..=l {
        den = den.mul_c(&s.psi[j - 1][t]);
    }
    // jump of psi_{l-1}^{(1)}: minus side is the conjugate at real x
    let plus = &s.psi[0][l - 1];
    let jump = plus.conj() - plus;
    let m = constants.m_const(l, j);
    let two_pi_i = MpComplex::new(MpReal::zero(prec), pi(prec).ldexp(1));
    let val = num.div_c(&den).mul_c(&jump).scale(m).div_c(&two_pi_i);
    Ok((val.re.clone(), val.im.abs()))
}

/// The analytic continuation F_j^{(l)}(x) away from the l-th arc, from the
/// branch products (all quantities at an off-cut point):
/// (m_{l-1,j}/m_{l-1,l-1}) [prod_{t=0}^{l-1} psi_t^{(l-1)}]/[prod_{t=0}^{l-1} psi_t^{(j)}],
/// with psi^{(0)} = 1 understood for l = 1.
pub fn layer_transform(
    op: &BlockToeplitzOperator,
    constants: &crate::surface::SurfaceConstants,
    l: usize,
    j: usize,
    x: &MpComplex,
    ctx: &PrecisionContext,
) -> Result<MpComplex> {
    let p = op.p;
    if l < 1 || l > p || j < l || j > p {
        return Err(Error::IndexOutOfRange { index: j.max(l), max: p });
    }
    let prec = ctx.prec();
    let (_, br) = branches_at(op, x, ctx)?;
    let mut num = MpComplex::one(prec);
    if l >= 2 {
        for t in 0..=l - 1 {
            num = num.mul_c(&br.psi[l - 2][t]);
        }
    }
    let mut den = MpComplex::one(prec);
    for t in 0..=l - 1 {
        den = den.mul_c(&br.psi[j - 1][t]);
    }
    let ratio = constants
        .m_const(l - 1, j)
        .div_r(constants.m_const(l - 1, l - 1));
    Ok(num.div_c(&den).scale(&ratio))
}

/// Sampled diagonal generating measure rho_k = nu_k^{(k)} on its arc.
pub fn rho_table(
    op: &BlockToeplitzOperator,
    constants: &crate::surface::SurfaceConstants,
    k: usize,
    arc: &Interval,
    points: usize,
    ctx: &PrecisionContext,
) -> Result<DensityTable> {
    DensityTable::build(arc, k, k, points, |x| {
        layer_density(op, constants, k, k, x, ctx).map(|(v, _)| v)
    })
}

/// Sampled nu_j on the first arc.
pub fn nu_table(
    op: &BlockToeplitzOperator,
    j: usize,
    arc: &Interval,
    points: usize,
    ctx: &PrecisionContext,
) -> Result<DensityTable> {
    DensityTable::build(arc, 1, j, points, |x| nu_density(op, j, x, ctx))
}

/// Mass of nu_j by the pole-free contour route: (1/2 pi i) times the contour
/// integral of 1/F_j around the first arc (equals the z^-1 coefficient).
pub fn nu_mass_contour(
    op: &BlockToeplitzOperator,
    j: usize,
    arc: &Interval,
    ctx: &PrecisionContext,
) -> Result<MpReal> {
    let prec = ctx.prec();
    let gamma = JordanContour::around_interval(&arc.a, &arc.b, 0.25, ctx)?;
    let (v, _) = contour_integral(
        |x| {
            let (_, br) = branches_at(op, x, ctx)?;
            Ok(br.psi[j - 1][0].recip())
        },
        &gamma,
        ctx,
    )?;
    let two_pi_i = MpComplex::new(MpReal::zero(prec), pi(prec).ldexp(1));
    let mass = v.div_c(&two_pi_i);
    Ok(mass.re.clone())
}

/// Ratio-of-jumps consistency at an interior point of arc l-1: the jump
/// ratio of the layer (l-1) transforms against the analytic continuation of
/// F_j^{(l)}. Returns the relative deviation.
pub fn ratio_of_jumps_residual(
    op: &BlockToeplitzOperator,
    constants: &crate::surface::SurfaceConstants,
    l: usize,
    j: usize,
    x: &MpReal,
    ctx: &PrecisionContext,
) -> Result<MpReal> {
    let p = op.p;
    if l < 2 || l > p || j < l || j > p {
        return Err(Error::IndexOutOfRange { index: j.max(l), max: p });
    }
    let prec = ctx.prec();
    // numerator and denominator jumps from the layer densities on arc l-1
    let (num, _) = layer_density(op, constants, l - 1, j, x, ctx)?;
    let (den, _) = layer_density(op, constants, l - 1, l - 1, x, ctx)?;
    if den.is_zero() {
        return Err(Error::ExceptionalPoint { gap: 0.0 });
    }
    let lhs = num.div_r(&den);
    let rhs = layer_transform(op, constants, l, j, &MpComplex::from_real(x.clone()), ctx)?;
    let dev = (MpComplex::from_real(lhs) - &rhs).abs();
    Ok(dev.div_r(&rhs.abs().max_r(&MpReal::eps(prec))))
}

/// Reconstruction check: nu_j against the nested product of the diagonal
/// tables <rho_1, rho_2, ..., rho_j> computed by nested Cauchy transforms
/// over the sampled tables (independent of the branch route for nu_j).
pub struct ReconstructionReport {
    pub max_rel_deviation: MpReal,
    pub samples: usize,
}

/// Nested transform over tables: C_i(x) = int rho_i'(t) C_{i+1}(t)/(x - t) dt.
fn nested_table_transform(
    tables: &[DensityTable],
    level: usize,
    x: &MpReal,
    order: usize,
    ctx: &PrecisionContext,
) -> Result<MpReal> {
    let prec = ctx.prec();
    let table = &tables[level];
    let half = MpReal::from_f64(0.5, prec);
    let rule = gauss_rule(
        (&table.interval.a, &table.interval.b),
        &half,
        &half,
        order,
        ctx,
    )?;
    let mut acc = MpReal::zero(prec);
    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
        let inner = if level + 1 < tables.len() {
            nested_table_transform(tables, level + 1, t, order, ctx)?
        } else {
            MpReal::one(prec)
        };
        acc = acc.add_r(&table.smooth.eval(t).mul_r(&inner).div_r(&x.sub_r(t)).mul_r(w));
    }
    Ok(acc)
}

/// Compare the nu_j table against rho_1' (x) * C_2(x) on an interior grid.
pub fn nikishin_reconstruct_check(
    nu_j: &DensityTable,
    rho_tables: &[DensityTable],
    order: usize,
    grid: usize,
    ctx: &PrecisionContext,
) -> Result<ReconstructionReport> {
    let prec = ctx.prec();
    let j = rho_tables.len();
    let interval = &nu_j.interval;
    let margin = interval.len().mul_r(&MpReal::from_f64(0.05, prec));
    let a = interval.a.add_r(&margin);
    let b = interval.b.sub_r(&margin);
    let mut worst = MpReal::zero(prec);
    for i in 0..grid {
        let t = (i as f64 + 0.5) / grid as f64;
        let x = a.add_r(&b.sub_r(&a).mul_r(&MpReal::from_f64(t, prec)));
        let lhs = nu_j.density(&x);
        let rhs = if j == 1 {
            rho_tables[0].density(&x)
        } else {
            let tail = nested_table_transform(rho_tables, 1, &x, order, ctx)?;
            rho_tables[0].density(&x).mul_r(&tail)
        };
        let scale = lhs.abs().max_r(&rhs.abs()).max_r(&MpReal::eps(prec));
        worst = worst.max_r(&lhs.sub_r(&rhs).abs().div_r(&scale));
    }
    Ok(ReconstructionReport { max_rel_deviation: worst, samples: grid })
}

/// Orthogonality verdict for one (n, j, l): both computation routes and the
/// scale reference from the first non-orthogonal moment.
#[derive(Clone, Debug)]
pub struct OrthogonalityEntry {
    pub n: usize,
    pub j: usize,
    pub l: usize,
    /// real-line route: int P_n x^l d nu_j over the first arc
    pub real_route: MpReal,
    /// contour route: (1/2 pi i) oint P_n(x) x^l / F_j(x) dx
    pub contour_route: MpReal,
    pub contour_error: MpReal,
    /// scale: the first non-orthogonal moment l = n_j
    pub scale: MpReal,
}

/// Orthogonality table for P_n against the nu measures of the operator,
/// internal staircase counts (m+1 repeated k times, then m).
pub struct OrthogonalityReport {
    pub entries: Vec<OrthogonalityEntry>,
    pub max_rel_residual: MpReal,
    pub max_route_disagreement: MpReal,
}

pub struct OrthogonalityEngine<'a> {
    op: &'a BlockToeplitzOperator,
    gamma: JordanContour,
    /// memoized branch ratios F_j(x) at contour nodes, keyed by the
    /// rendered coordinates (node sets repeat across integrals)
    cache: std::sync::Mutex<std::collections::HashMap<String, Vec<MpComplex>>>,
}

impl<'a> OrthogonalityEngine<'a> {
    pub fn new(
        op: &'a BlockToeplitzOperator,
        arc1: &Interval,
        ctx: &PrecisionContext,
    ) -> Result<Self> {
        let gamma = JordanContour::around_interval(&arc1.a, &arc1.b, 0.25, ctx)?;
        Ok(OrthogonalityEngine {
            op,
            gamma,
            cache: std::sync::Mutex::new(std::collections::HashMap::new()),
        })
    }

    fn ratios_at(&self, x: &MpComplex, ctx: &PrecisionContext) -> Result<Vec<MpComplex>> {
        let key = format!(
            "{}|{}",
            x.re.to_decimal_string(45),
            x.im.to_decimal_string(45)
        );
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let (_, br) = branches_at(self.op, x, ctx)?;
        let vals: Vec<MpComplex> = (0..self.op.p).map(|j| br.psi[j][0].clone()).collect();
        self.cache.lock().unwrap().insert(key, vals.clone());
        Ok(vals)
    }

    pub fn check(
        &self,
        n: usize,
        nu_tables: &[DensityTable],
        order: usize,
        ctx: &PrecisionContext,
    ) -> Result<OrthogonalityReport> {
        let p = self.op.p;
        let prec = ctx.prec();
        let mi = crate::mop::staircase(n, p, &crate::mop::identity_permutation(p))?;
        let pn = self.op.p_coeffs(n);
        let two_pi_i = MpComplex::new(MpReal::zero(prec), pi(prec).ldexp(1));

        let mut entries = Vec::new();
        let mut max_rel = MpReal::zero(prec);
        let mut max_dis = MpReal::zero(prec);
        for j in 1..=p {
            let count = mi.components[j - 1];
            // scale reference: the first non-orthogonal moment
            let scale = nu_tables[j - 1]
                .integrate(order, ctx, |x| {
                    pn.eval_real(x).re.mul_r(&x.powi(count as i64))
                })?
                .abs();
            for l in 0..count {
                let real_route = nu_tables[j - 1].integrate(order, ctx, |x| {
                    pn.eval_real(x).re.mul_r(&x.powi(l as i64))
                })?;
                let (cv, cerr) = contour_integral(
                    |x| {
                        let ratios = self.ratios_at(x, ctx)?;
                        Ok(pn.eval(x).mul_c(&x.powi(l as i64)).div_c(&ratios[j - 1]))
                    },
                    &self.gamma,
                    ctx,
                )?;
                let contour_route = cv.div_c(&two_pi_i);
                let s = scale.max_r(&MpReal::eps(prec));
                let rel = real_route.abs().max_r(&contour_route.abs()).div_r(&s);
                max_rel = max_rel.max_r(&rel);
                let dis = (MpComplex::from_real(real_route.clone()) - &contour_route)
                    .abs()
                    .div_r(&s);
                max_dis = max_dis.max_r(&dis);
                entries.push(OrthogonalityEntry {
                    n,
                    j,
                    l,
                    real_route,
                    contour_route: contour_route.abs(),
                    contour_error: cerr,
                    scale: scale.clone(),
                });
            }
        }
        Ok(OrthogonalityReport {
            entries,
            max_rel_residual: max_rel,
            max_route_disagreement: max_dis,
        })
    }
}

pub fn orthogonality_check(
    op: &BlockToeplitzOperator,
    n: usize,
    nu_tables: &[DensityTable],
    arc1: &Interval,
    order: usize,
    ctx: &PrecisionContext,
) -> Result<OrthogonalityReport> {
    OrthogonalityEngine::new(op, arc1, ctx)?.check(n, nu_tables, order, ctx)
}
