//! The limiting block Toeplitz operator, its Chebyshev-Nikishin polynomials,
//! the matrix symbol with its characteristic roots, root-modulus curve scans
//! and the eigenvalue-limit measures sigma_k.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mop::LimitCoefficients;
use crate::nikishin::Interval;
use crate::numerics::complex::MpComplex;
use crate::numerics::context::PrecisionContext;
use crate::numerics::linalg::{det, solve, Matrix};
use crate::numerics::poly::{cluster_multiplicities, poly_roots, Polynomial};
use crate::numerics::quad::gauss_rule;
use crate::numerics::real::MpReal;

/// Periodic-band operator data: p and the canonical band values
/// band[j][d] = b_{j+d, j} for j = 0..p-1, d = 0..=p.
#[derive(Clone, Debug)]
pub struct BlockToeplitzOperator {
    pub p: usize,
    band: Vec<Vec<MpReal>>,
    prec: u32,
    coeff_cache: std::sync::OnceLock<Vec<Polynomial>>,
}

impl BlockToeplitzOperator {
    /// Assemble from estimated limit coefficients; fails when a diagonal
    /// entry of B_1 vanishes (then f_p = 0 and the symbol degenerates).
    pub fn from_limits(b: &LimitCoefficients, ctx: &PrecisionContext) -> Result<Self> {
        let p = b.p;
        let prec = ctx.prec();
        let mut band = Vec::with_capacity(p);
        for j in 0..p {
            let mut row = Vec::with_capacity(p + 1);
            for d in 0..=p {
                row.push(b.value((j + d) as i64, j as i64).clone());
            }
            band.push(row);
        }
        Self::from_band(p, band, prec)
    }

    /// Direct construction from canonical band values (synthetic operators).
    pub fn from_band(p: usize, band: Vec<Vec<MpReal>>, prec: u32) -> Result<Self> {
        if band.len() != p || band.iter().any(|r| r.len() != p + 1) {
            return Err(Error::InvalidConfig(
                "band must be p rows of p+1 values".into(),
            ));
        }
        let op = BlockToeplitzOperator {
            p,
            band,
            prec,
            coeff_cache: std::sync::OnceLock::new(),
        };
        for i in 0..p {
            if op.b_value(p + i, i).is_zero() {
                return Err(Error::InvalidLimits(format!(
                    "diagonal entry b_({},{}) of B_1 vanishes",
                    p + i,
                    i
                )));
            }
        }
        Ok(op)
    }

    pub fn from_band_f64(p: usize, rows: Vec<Vec<f64>>, prec: u32) -> Result<Self> {
        let band = rows
            .into_iter()
            .map(|row| row.into_iter().map(|v| MpReal::from_f64(v, prec)).collect())
            .collect();
        Self::from_band(p, band, prec)
    }

    /// The p = 1 operator with zero diagonal and unit subdiagonal (classical
    /// Chebyshev case on [-2, 2]).
    pub fn chebyshev_p1(prec: u32) -> Self {
        BlockToeplitzOperator {
            p: 1,
            band: vec![vec![MpReal::zero(prec), MpReal::one(prec)]],
            prec,
            coeff_cache: std::sync::OnceLock::new(),
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Canonical periodic value b_{i,j}, 0 <= i - j <= p.
    pub fn b_value(&self, i: usize, j: usize) -> &MpReal {
        let d = i - j;
        debug_assert!(d <= self.p);
        &self.band[j % self.p][d]
    }

    /// Scalar entry of the semi-infinite matrix T at (row, col), 0-indexed.
    pub fn entry(&self, row: usize, col: usize) -> MpReal {
        if col == row + 1 {
            return MpReal::one(self.prec);
        }
        if col <= row && row - col <= self.p {
            return self.b_value(row, col).clone();
        }
        MpReal::zero(self.prec)
    }

    /// Dense principal truncation T_n.
    pub fn truncation(&self, n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n, self.prec);
        for r in 0..n {
            for c in 0..n {
                *m.at_mut(r, c) = MpComplex::from_real(self.entry(r, c));
            }
        }
        m
    }

    /// The blocks (B_-1, B_0, B_1) of the block-tridiagonal layout.
    pub fn blocks(&self) -> (Matrix, Matrix, Matrix) {
        let p = self.p;
        let mut bm1 = Matrix::zeros(p, p, self.prec);
        let mut b0 = Matrix::zeros(p, p, self.prec);
        let mut b1 = Matrix::zeros(p, p, self.prec);
        for r in 0..p {
            for c in 0..p {
                *b0.at_mut(r, c) = MpComplex::from_real(self.entry(r, c));
                // B_1 carries rows p..2p against cols 0..p of T
                *b1.at_mut(r, c) = MpComplex::from_real(self.entry(p + r, c));
                // B_-1 carries rows 0..p against cols p..2p
                *bm1.at_mut(r, c) = MpComplex::from_real(self.entry(r, p + c));
            }
        }
        (bm1, b0, b1)
    }

    /// f_p: product of the diagonal entries of B_1.
    pub fn f_p(&self) -> MpReal {
        let mut acc = MpReal::one(self.prec);
        for i in 0..self.p {
            acc = acc.mul_r(self.b_value(self.p + i, i));
        }
        acc
    }

    /// P_n(z) by the scalar (p+2)-term recurrence.
    pub fn p_eval(&self, n: usize, z: &MpComplex) -> MpComplex {
        let prec = self.prec.max(z.prec());
        // window[d-1] = P_{m-d}
        let mut window: Vec<MpComplex> = vec![MpComplex::zero(prec); self.p + 1];
        let mut cur = MpComplex::one(prec); // P_0
        if n == 0 {
            return cur;
        }
        for m in 0..n {
            let mut next = (z.clone() - &MpComplex::from_real(self.b_value(m, m).clone()))
                .mul_c(&cur);
            for d in 1..=m.min(self.p) {
                let b = self.b_value(m, m - d);
                next = next - window[d - 1].scale(b);
            }
            window.rotate_right(1);
            window[0] = cur;
            cur = next;
        }
        cur
    }

    /// Coefficient form of P_n by the polynomial recurrence.
    pub fn p_coeffs(&self, n: usize) -> Polynomial {
        let prec = self.prec;
        let mut history: Vec<Polynomial> = vec![Polynomial::one(prec)];
        for m in 0..n {
            let zp = history[m].mul_x();
            let mut next = zp.sub(&history[m].scale_real(self.b_value(m, m)));
            for d in 1..=m.min(self.p) {
                next = next.sub(&history[m - d].scale_real(self.b_value(m, m - d)));
            }
            history.push(next);
        }
        history.pop().unwrap()
    }

    /// The symbol F(z, x) = z^-1 B_-1 + B_0 + z B_1 - x I as a dense matrix.
    pub fn symbol(&self, z: &MpComplex, x: &MpComplex) -> Matrix {
        let p = self.p;
        let prec = self.prec.max(z.prec()).max(x.prec());
        let z_inv = z.recip();
        let mut m = Matrix::zeros(p, p, prec);
        for r in 0..p {
            for c in 0..p {
                let mut v = MpComplex::from_real(self.entry(r, c));
                let b1 = self.entry(p + r, c);
                if !b1.is_zero() {
                    v = v + z.scale(&b1);
                }
                let bm1 = self.entry(r, p + c);
                if !bm1.is_zero() {
                    v = v + z_inv.scale(&bm1);
                }
                if r == c {
                    v = v - x.clone();
                }
                *m.at_mut(r, c) = v;
            }
        }
        m
    }

    /// det of the symbol with row p and column `col` deleted (1-indexed);
    /// the empty determinant at p = 1 is 1.
    pub fn symbol_minor(&self, z: &MpComplex, x: &MpComplex, col: usize) -> MpComplex {
        let f = self.symbol(z, x);
        det(&f.minor_matrix(self.p - 1, col - 1))
    }

    /// Coefficients of z f(z, x) (degree p+1 in z) recovered by sampling at
    /// p+2 nonzero points and solving the Vandermonde system; the leading
    /// coefficient equals f_p.
    pub fn char_poly_in_z(&self, x: &MpComplex, _ctx: &PrecisionContext) -> Polynomial {
        let p = self.p;
        let prec = self.prec.max(x.prec());
        let m = p + 2;
        let samples: Vec<MpComplex> = (0..m)
            .map(|s| {
                let v = match s {
                    0 => 1.0,
                    1 => -1.0,
                    2 => 2.0,
                    3 => -2.0,
                    4 => 0.5,
                    5 => -0.5,
                    _ => (s as f64) - 2.0,
                };
                MpComplex::from_f64(v, 0.0, prec)
            })
            .collect();
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for zs in &samples {
            let f = det(&self.symbol(zs, x));
            rhs.push(zs.mul_c(&f));
            let mut row = Vec::with_capacity(m);
            let mut pw = MpComplex::one(prec);
            for _ in 0..m {
                row.push(pw.clone());
                pw = pw.mul_c(zs);
            }
            rows.push(row);
        }
        let mat = Matrix::from_rows(rows);
        let coeffs = solve(&mat, &rhs).expect("fixed Vandermonde is nonsingular");
        Polynomial::new(coeffs)
    }

    /// Cached copy of [`Self::char_poly_coeffs_in_x`].
    pub fn coeffs_in_x(&self, ctx: &PrecisionContext) -> &[Polynomial] {
        self.coeff_cache
            .get_or_init(|| self.char_poly_coeffs_in_x(ctx))
    }

    /// Coefficients of z f(z, x) as polynomials in x (degree <= p each),
    /// interpolated from p+1 x-samples: the cheap path for grid scans.
    pub fn char_poly_coeffs_in_x(&self, ctx: &PrecisionContext) -> Vec<Polynomial> {
        let p = self.p;
        let prec = self.prec;
        let nx = p + 1;
        let xs: Vec<MpComplex> = (0..nx)
            .map(|s| MpComplex::from_f64(s as f64 - (p as f64) / 2.0, 0.0, prec))
            .collect();
        let per_x: Vec<Polynomial> =
            xs.iter().map(|x| self.char_poly_in_z(x, ctx)).collect();
        let mut rows = Vec::with_capacity(nx);
        for x in &xs {
            let mut row = Vec::with_capacity(nx);
            let mut pw = MpComplex::one(prec);
            for _ in 0..nx {
                row.push(pw.clone());
                pw = pw.mul_c(x);
            }
            rows.push(row);
        }
        let vand = Matrix::from_rows(rows);
        (0..p + 2)
            .map(|j| {
                let rhs: Vec<MpComplex> = per_x.iter().map(|q| q.coeff(j)).collect();
                let c = solve(&vand, &rhs).expect("x-sample Vandermonde nonsingular");
                Polynomial::new(c)
            })
            .collect()
    }
}

/// The p+1 characteristic roots at a point, modulus-ordered, with tie flags.
#[derive(Clone, Debug)]
pub struct RootSet {
    pub x: MpComplex,
    /// |z_1| <= ... <= |z_{p+1}|
    pub roots: Vec<MpComplex>,
    /// tie_flags[k-1]: |z_k| and |z_{k+1}| differ by less than tie_tol
    pub tie_flags: Vec<bool>,
    /// smallest relative modulus gap between consecutive roots
    pub min_gap: MpReal,
    /// smallest pairwise relative distance between root values
    pub min_pair_distance: MpReal,
}

impl RootSet {
    /// Vieta consistency: (-1)^(p+1) f_p prod(roots) against the constant
    /// coefficient of z f(z,x); returns the relative error.
    pub fn vieta_residual(&self, op: &BlockToeplitzOperator, ctx: &PrecisionContext) -> MpReal {
        let charpoly = op.char_poly_in_z(&self.x, ctx);
        let prec = op.prec();
        let mut prod = MpComplex::one(prec);
        for r in &self.roots {
            prod = prod.mul_c(r);
        }
        let signed = if (op.p + 1) % 2 == 1 { -prod } else { prod };
        let lhs = signed.scale(&op.f_p());
        let rhs = charpoly.coeff(0);
        (lhs - &rhs)
            .abs()
            .div_r(&rhs.abs().max_r(&MpReal::eps(prec)))
    }
}

fn sort_and_flag(x: &MpComplex, mut roots: Vec<MpComplex>, ctx: &PrecisionContext) -> RootSet {
    let prec = ctx.prec();
    roots.sort_by(|a, b| {
        a.norm_sqr()
            .cmp_r(&b.norm_sqr())
            .then(a.im.cmp_r(&b.im))
            .then(a.re.cmp_r(&b.re))
    });
    let mut tie_flags = Vec::with_capacity(roots.len().saturating_sub(1));
    let mut min_gap = MpReal::from_i64(1, prec);
    for w in roots.windows(2) {
        let m0 = w[0].abs();
        let m1 = w[1].abs();
        let gap = m1.sub_r(&m0).abs().div_r(&m1.max_r(&MpReal::eps(prec)));
        tie_flags.push(gap < ctx.tie_tol);
        min_gap = min_gap.min_r(&gap);
    }
    let mut min_pair = MpReal::from_f64(f64::MAX, prec);
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let d = (roots[i].clone() - &roots[j]).abs();
            let s = roots[i].abs().max_r(&roots[j].abs()).max_r(&MpReal::eps(prec));
            min_pair = min_pair.min_r(&d.div_r(&s));
        }
    }
    RootSet { x: x.clone(), roots, tie_flags, min_gap, min_pair_distance: min_pair }
}

/// Modulus-ordered roots of z f(z, x) with tie classification.
pub fn roots_sorted(
    op: &BlockToeplitzOperator,
    x: &MpComplex,
    ctx: &PrecisionContext,
) -> Result<RootSet> {
    let charpoly = op.char_poly_in_z(x, ctx);
    let out = poly_roots(&charpoly, ctx)?;
    Ok(sort_and_flag(x, out.roots, ctx))
}

/// Warm-started Durand-Kerner for scans: seeds from a neighbouring point.
pub(crate) fn roots_warm(coeffs: &[MpComplex], seeds: &[MpComplex], prec: u32) -> Option<Vec<MpComplex>> {
    let deg = coeffs.len() - 1;
    if seeds.len() != deg {
        return None;
    }
    let lead = coeffs.last().unwrap().clone();
    if lead.is_zero() {
        return None;
    }
    let monic: Vec<MpComplex> = coeffs.iter().map(|c| c.div_c(&lead)).collect();
    let mut zs: Vec<MpComplex> = seeds.to_vec();
    let eval = |z: &MpComplex| -> MpComplex {
        let mut acc = MpComplex::zero(prec);
        for c in monic.iter().rev() {
            acc = acc.mul_c(z) + c;
        }
        acc
    };
    let step_tol = MpReal::eps(prec).ldexp(20);
    for _ in 0..80 {
        let mut max_step = MpReal::zero(prec);
        for i in 0..deg {
            let mut denom = MpComplex::one(prec);
            for j in 0..deg {
                if i != j {
                    denom = denom.mul_c(&(zs[i].clone() - &zs[j]));
                }
            }
            if denom.is_zero() {
                return None;
            }
            let delta = eval(&zs[i]).div_c(&denom);
            max_step =
                max_step.max_r(&delta.abs().div_r(&MpReal::one(prec).max_r(&zs[i].abs())));
            zs[i] = zs[i].clone() - delta;
        }
        if max_step < step_tol {
            return Some(zs);
        }
    }
    None
}

/// One classified grid point of a curve scan.
#[derive(Clone, Debug)]
pub struct ScanPoint {
    pub re: f64,
    pub im: f64,
    /// per-k relative modulus gap between z_k and z_{k+1}
    pub gaps: Vec<f64>,
}

/// Result of a region scan: per-point modulus gaps plus the real-axis
/// classification of each curve as a union of intervals.
#[derive(Clone, Debug)]
pub struct CurveScan {
    pub region: (f64, f64, f64, f64),
    pub steps: usize,
    pub points: Vec<ScanPoint>,
    /// refined real intervals of each curve, index k-1 for curve k
    pub real_intervals: Vec<Vec<Interval>>,
}

impl CurveScan {
    /// Grid points whose k-th gap drops below the threshold.
    pub fn tie_points(&self, k: usize, threshold: f64) -> Vec<(f64, f64, f64)> {
        self.points
            .iter()
            .filter(|pt| pt.gaps[k - 1] < threshold)
            .map(|pt| (pt.re, pt.im, pt.gaps[k - 1]))
            .collect()
    }

    pub fn grid_spacing(&self) -> f64 {
        let (re0, re1, im0, im1) = self.region;
        ((re1 - re0) / self.steps as f64).max((im1 - im0) / self.steps as f64)
    }

    /// Conjugation symmetry of the classified tie points: for every flagged
    /// point the mirrored grid point is flagged too.
    pub fn conjugation_symmetric(&self, k: usize, threshold: f64) -> bool {
        let pts = self.tie_points(k, threshold);
        let spacing = self.grid_spacing();
        pts.iter().all(|&(re, im, _)| {
            pts.iter()
                .any(|&(re2, im2, _)| (re2 - re).abs() < 0.5 * spacing && (im2 + im).abs() < 0.5 * spacing)
        })
    }
}

/// Relative modulus gaps of the ordered roots at x via precomputed
/// coefficient polynomials; optional warm seeds.
fn gaps_at(
    coeffs_in_x: &[Polynomial],
    p: usize,
    x: &MpComplex,
    seeds: Option<&[MpComplex]>,
    ctx: &PrecisionContext,
) -> Result<(Vec<MpReal>, Vec<MpComplex>)> {
    let prec = ctx.prec();
    let coeffs: Vec<MpComplex> = coeffs_in_x.iter().map(|q| q.eval(x)).collect();
    let roots = match seeds.and_then(|s| roots_warm(&coeffs, s, prec)) {
        Some(r) => r,
        None => poly_roots(&Polynomial::new(coeffs), ctx)?.roots,
    };
    let rs = sort_and_flag(x, roots, ctx);
    let mut gaps = Vec::with_capacity(p);
    for k in 0..p {
        let m0 = rs.roots[k].abs();
        let m1 = rs.roots[k + 1].abs();
        gaps.push(m1.sub_r(&m0).abs().div_r(&m1.max_r(&MpReal::eps(prec))));
    }
    Ok((gaps, rs.roots))
}

/// Scan a rectangle for root-modulus ties and refine the real-axis
/// classification of every curve by bisection on the tie indicator.
pub fn gamma_scan(
    op: &BlockToeplitzOperator,
    region: (f64, f64, f64, f64),
    steps: usize,
    ctx: &PrecisionContext,
) -> Result<CurveScan> {
    let p = op.p;
    let prec = ctx.prec();
    let (re0, re1, im0, im1) = region;
    if steps < 32 {
        return Err(Error::InvalidConfig("scan resolution must be >= 32".into()));
    }
    let coeffs_in_x = op.char_poly_coeffs_in_x(ctx);

    let rows: Vec<Vec<ScanPoint>> = (0..=steps)
        .into_par_iter()
        .map(|iy| {
            let im = im0 + (im1 - im0) * iy as f64 / steps as f64;
            let mut row = Vec::with_capacity(steps + 1);
            let mut seeds: Option<Vec<MpComplex>> = None;
            for ix in 0..=steps {
                let re = re0 + (re1 - re0) * ix as f64 / steps as f64;
                let x = MpComplex::from_f64(re, im, prec);
                let (gaps, roots) = gaps_at(&coeffs_in_x, p, &x, seeds.as_deref(), ctx)?;
                seeds = Some(roots);
                row.push(ScanPoint {
                    re,
                    im,
                    gaps: gaps.iter().map(|g| g.to_f64()).collect(),
                });
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<ScanPoint> = rows.into_iter().flatten().collect();

    let real_intervals = real_axis_classification(op, re0, re1, 4 * steps, ctx)?;

    Ok(CurveScan { region, steps, points, real_intervals })
}

/// Classify the real-axis sections of every curve by dense sampling of the
/// tie indicator followed by bisection of each edge.
pub fn real_axis_classification(
    op: &BlockToeplitzOperator,
    re0: f64,
    re1: f64,
    fine: usize,
    ctx: &PrecisionContext,
) -> Result<Vec<Vec<Interval>>> {
    let p = op.p;
    let prec = ctx.prec();
    let coeffs_in_x = op.char_poly_coeffs_in_x(ctx);
    let mut real_intervals = vec![Vec::new(); p];
    let mut seeds: Option<Vec<MpComplex>> = None;
    let mut flags: Vec<Vec<bool>> = Vec::with_capacity(fine + 1);
    let mut xs: Vec<f64> = Vec::with_capacity(fine + 1);
    for ix in 0..=fine {
        let re = re0 + (re1 - re0) * ix as f64 / fine as f64;
        let x = MpComplex::from_f64(re, 0.0, prec);
        let (gaps, roots) = gaps_at(&coeffs_in_x, p, &x, seeds.as_deref(), ctx)?;
        seeds = Some(roots);
        flags.push(gaps.iter().map(|g| *g < ctx.tie_tol).collect());
        xs.push(re);
    }
    for k in 0..p {
        let mut ix = 0usize;
        while ix <= fine {
            if flags[ix][k] {
                let mut jx = ix;
                while jx + 1 <= fine && flags[jx + 1][k] {
                    jx += 1;
                }
                let lo = if ix == 0 {
                    MpReal::from_f64(xs[0], prec)
                } else {
                    let seed = bisect_edge(&coeffs_in_x, p, k, xs[ix - 1], xs[ix], ctx)?;
                    polish_branch_point(&coeffs_in_x, seed, ctx)?
                };
                let hi = if jx == fine {
                    MpReal::from_f64(xs[fine], prec)
                } else {
                    let seed = bisect_edge(&coeffs_in_x, p, k, xs[jx + 1], xs[jx], ctx)?;
                    polish_branch_point(&coeffs_in_x, seed, ctx)?
                };
                real_intervals[k].push(Interval::new(lo, hi)?);
                ix = jx + 1;
            } else {
                ix += 1;
            }
        }
    }
    Ok(real_intervals)
}

/// Bisect between an untied outer point and a tied inner point at working
/// precision; the square-root weights of the density tables need the arc
/// endpoints far below f64 resolution.
fn bisect_edge(
    coeffs_in_x: &[Polynomial],
    p: usize,
    k: usize,
    outer: f64,
    inner: f64,
    ctx: &PrecisionContext,
) -> Result<MpReal> {
    let prec = ctx.prec();
    let mut lo = MpReal::from_f64(outer, prec);
    let mut hi = MpReal::from_f64(inner, prec);
    let width_tol = hi.sub_r(&lo).abs().mul_r(&MpReal::from_f64(1e-40, prec));
    for _ in 0..160 {
        if hi.sub_r(&lo).abs() <= width_tol {
            break;
        }
        let mid = lo.add_r(&hi).ldexp(-1);
        let x = MpComplex::from_real(mid.clone());
        let (gaps, _) = gaps_at(coeffs_in_x, p, &x, None, ctx)?;
        if gaps[k] < ctx.tie_tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo.add_r(&hi).ldexp(-1))
}

/// Newton polish of a branch point: the squared difference of the colliding
/// root pair is analytic across the branch point with a simple zero there.
/// The bisection seed sits ~(tie_tol)^2 away; a few Newton steps bring the
/// endpoint to working precision, which the square-root weights of the
/// density tables require.
fn polish_branch_point(
    coeffs_in_x: &[Polynomial],
    x0: MpReal,
    ctx: &PrecisionContext,
) -> Result<MpReal> {
    let prec = ctx.prec();
    let mut x = x0;
    let mut seeds: Option<Vec<MpComplex>> = None;
    let step_floor = MpReal::eps(prec).ldexp(12);
    for _ in 0..80 {
        let xc = MpComplex::from_real(x.clone());
        let coeffs: Vec<MpComplex> = coeffs_in_x.iter().map(|q| q.eval(&xc)).collect();
        let roots = match seeds.as_deref().and_then(|s| roots_warm(&coeffs, s, prec)) {
            Some(r) => r,
            None => poly_roots(&Polynomial::new(coeffs.clone()), ctx)?.roots,
        };
        seeds = Some(roots.clone());
        // closest pair
        let mut best = (0usize, 1usize);
        let mut best_d: Option<MpReal> = None;
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                let d = (roots[i].clone() - &roots[j]).norm_sqr();
                if best_d.as_ref().map(|b| d < *b).unwrap_or(true) {
                    best_d = Some(d);
                    best = (i, j);
                }
            }
        }
        let (a, b) = best;
        let diff = roots[a].clone() - &roots[b];
        let d_val = diff.mul_c(&diff);
        // implicit derivatives z' = -g_x/g_z at both roots
        let dcoeffs: Vec<MpComplex> = coeffs_in_x
            .iter()
            .map(|q| q.derivative().eval(&xc))
            .collect();
        let zprime = |z: &MpComplex| -> Result<MpComplex> {
            let mut gz = MpComplex::zero(prec);
            let mut gx = MpComplex::zero(prec);
            let mut zjm1 = MpComplex::one(prec);
            let mut zj = MpComplex::one(prec);
            for (j, cj) in coeffs.iter().enumerate() {
                gx = gx + dcoeffs[j].mul_c(&zj);
                if j >= 1 {
                    gz = gz + cj.scale(&MpReal::from_i64(j as i64, prec)).mul_c(&zjm1);
                    zjm1 = zjm1.mul_c(z);
                }
                zj = zj.mul_c(z);
            }
            if gz.is_zero() {
                return Err(Error::ExceptionalPoint { gap: 0.0 });
            }
            Ok(-gx.div_c(&gz))
        };
        let dp = diff
            .mul_c(&(zprime(&roots[a])? - &zprime(&roots[b])?))
            .scale(&MpReal::from_i64(2, prec));
        if dp.is_zero() {
            break;
        }
        let step = d_val.div_c(&dp);
        x = x.sub_r(&step.re);
        if step.re.abs() <= step_floor.mul_r(&MpReal::one(prec).max_r(&x.abs())) {
            break;
        }
    }
    Ok(x)
}

/// Density of sigma_k at a real point interior to a classified arc:
/// (1/pi) sum_{j<=k} Im(z'_{j,+} / z_{j,+}) from ladder boundary values.
pub fn sigma_density(
    op: &BlockToeplitzOperator,
    k: usize,
    x: &MpReal,
    ctx: &PrecisionContext,
) -> Result<MpReal> {
    if k == 0 || k > op.p {
        return Err(Error::IndexOutOfRange { index: k, max: op.p });
    }
    let prec = ctx.prec();
    let sample = crate::surface::boundary_with_derivatives(op, x, ctx)?;
    let mut acc = MpReal::zero(prec);
    for j in 0..k {
        let v = sample.droots[j].div_c(&sample.value.roots[j]);
        acc = acc.add_r(&v.im);
    }
    Ok(acc.div_r(&crate::numerics::real::pi(prec)))
}

/// Total mass of sigma_k over a classified arc by inverse-square-root
/// endpoint quadrature of density * sqrt((x-a)(b-x)).
pub fn sigma_mass(
    op: &BlockToeplitzOperator,
    k: usize,
    arc: &Interval,
    order: usize,
    ctx: &PrecisionContext,
) -> Result<MpReal> {
    let prec = ctx.prec();
    let mh = MpReal::from_f64(-0.5, prec);
    let rule = gauss_rule((&arc.a, &arc.b), &mh, &mh, order, ctx)?;
    let mut acc = MpReal::zero(prec);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let d = sigma_density(op, k, x, ctx)?;
        let h = x.sub_r(&arc.a).mul_r(&arc.b.sub_r(x)).sqrt();
        acc = acc.add_r(&d.mul_r(&h).mul_r(w));
    }
    Ok(acc)
}

/// Tie flags computed on a 10x finer local probe agree with the base point
/// (no flag flickering under refinement).
pub fn tie_stability_probe(
    op: &BlockToeplitzOperator,
    x: &MpComplex,
    scale: f64,
    ctx: &PrecisionContext,
) -> Result<bool> {
    let base = roots_sorted(op, x, ctx)?;
    for t in 1..=10 {
        let dx = MpComplex::from_f64(t as f64 * scale / 10.0, 0.0, ctx.prec());
        let probe = roots_sorted(op, &(x.clone() + &dx), ctx)?;
        if probe.tie_flags != base.tie_flags {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Multiplicity clustering of a root set at tie_tol.
pub fn root_cluster_sizes(rs: &RootSet, ctx: &PrecisionContext) -> Vec<usize> {
    cluster_multiplicities(&rs.roots, &ctx.tie_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::standard()
    }

    fn synthetic_p2(prec: u32) -> BlockToeplitzOperator {
        BlockToeplitzOperator::from_band_f64(
            2,
            vec![vec![0.12, 0.8, 0.3], vec![-0.34, 0.8, 0.45]],
            prec,
        )
        .unwrap()
    }

    #[test]
    fn zero_b1_diagonal_rejected() {
        let bad = BlockToeplitzOperator::from_band_f64(
            2,
            vec![vec![0.1, 0.5, 0.0], vec![0.2, 0.5, 0.3]],
            128,
        );
        assert!(matches!(bad, Err(crate::error::Error::InvalidLimits(_))));
    }

    #[test]
    fn p1_blocks_are_scalars() {
        let op = BlockToeplitzOperator::chebyshev_p1(256);
        let (bm1, b0, b1) = op.blocks();
        assert!((bm1.at(0, 0).re.to_f64() - 1.0).abs() < 1e-70);
        assert!(b0.at(0, 0).re.to_f64().abs() < 1e-70);
        assert!((b1.at(0, 0).re.to_f64() - 1.0).abs() < 1e-70);
    }

    #[test]
    fn bminus1_single_one_bottom_left() {
        let prec = 256;
        let op = BlockToeplitzOperator::from_band_f64(
            3,
            vec![
                vec![0.1, 0.7, 0.2, 0.3],
                vec![-0.2, 0.7, 0.1, 0.25],
                vec![0.3, 0.7, -0.15, 0.4],
            ],
            prec,
        )
        .unwrap();
        let (bm1, _, _) = op.blocks();
        for r in 0..3 {
            for c in 0..3 {
                let expect = if r == 2 && c == 0 { 1.0 } else { 0.0 };
                assert!((bm1.at(r, c).re.to_f64() - expect).abs() < 1e-70);
            }
        }
        // round-trip: band entries of the truncation match by position
        for r in 0..6usize {
            for c in 0..6usize {
                if c <= r && r - c <= 3 {
                    let got = op.entry(r, c);
                    let want = op.b_value(r, c);
                    assert!(got.sub_r(want).is_zero());
                }
            }
        }
    }

    #[test]
    fn p_eval_chebyshev_values() {
        let op = BlockToeplitzOperator::chebyshev_p1(256);
        let z3 = MpComplex::from_f64(3.0, 0.0, 256);
        assert!((op.p_eval(0, &z3).re.to_f64() - 1.0).abs() < 1e-70);
        assert!((op.p_eval(1, &z3).re.to_f64() - 3.0).abs() < 1e-70);
        assert!((op.p_eval(2, &z3).re.to_f64() - 8.0).abs() < 1e-70);
        let p2 = op.p_coeffs(2);
        assert!((p2.coeff(0).re.to_f64() + 1.0).abs() < 1e-70);
        assert!(p2.coeff(1).abs().to_f64() < 1e-70);
        assert!((p2.coeff(2).re.to_f64() - 1.0).abs() < 1e-70);
    }

    #[test]
    fn charpoly_p1_is_z2_minus_xz_plus_1() {
        let c = ctx();
        let op = BlockToeplitzOperator::chebyshev_p1(256);
        let x = MpComplex::from_f64(1.75, 0.0, 256);
        let q = op.char_poly_in_z(&x, &c);
        assert_eq!(q.degree(), 2);
        assert!((q.coeff(0).re.to_f64() - 1.0).abs() < 1e-60);
        assert!((q.coeff(1).re.to_f64() + 1.75).abs() < 1e-60);
        assert!((q.coeff(2).re.to_f64() - 1.0).abs() < 1e-60);
    }

    #[test]
    fn dense_determinant_matches_recurrence() {
        let prec = 256;
        let op = synthetic_p2(prec);
        let z = MpComplex::from_f64(0.83, -0.41, prec);
        let t5 = op.truncation(5);
        let mut zi = Matrix::zeros(5, 5, prec);
        for i in 0..5 {
            for j in 0..5 {
                *zi.at_mut(i, j) = if i == j {
                    z.clone() - t5.at(i, j)
                } else {
                    -t5.at(i, j).clone()
                };
            }
        }
        let dd = det(&zi);
        let pr = op.p_eval(5, &z);
        assert!((dd - &pr).abs().to_f64() < 1e-60);
    }

    #[test]
    fn charpoly_leading_coefficient_is_fp() {
        let c = ctx();
        let op = synthetic_p2(256);
        let x = MpComplex::from_f64(0.3, 0.9, 256);
        let q = op.char_poly_in_z(&x, &c);
        assert_eq!(q.degree(), 3);
        let lead = q.coeff(3);
        let fp = op.f_p();
        assert!((lead.re.sub_r(&fp)).abs().to_f64() < 1e-60);
        assert!(lead.im.abs().to_f64() < 1e-60);
    }

    #[test]
    fn roots_p1_golden_and_tie() {
        let c = ctx();
        let op = BlockToeplitzOperator::chebyshev_p1(256);
        let rs = roots_sorted(&op, &MpComplex::from_f64(3.0, 0.0, 256), &c).unwrap();
        assert!((rs.roots[0].re.to_f64() - 0.3819660113).abs() < 1e-9);
        assert!((rs.roots[1].re.to_f64() - 2.6180339887).abs() < 1e-9);
        assert!(!rs.tie_flags[0]);
        assert!(rs.vieta_residual(&op, &c).to_f64() < 1e-25);
        let rs0 = roots_sorted(&op, &MpComplex::zero(256), &c).unwrap();
        assert!(rs0.tie_flags[0]);
        assert!(rs0
            .roots
            .iter()
            .all(|z| (z.abs().to_f64() - 1.0).abs() < 1e-40));
    }

    #[test]
    fn gamma_p1_is_minus_two_two() {
        let c = ctx();
        let op = BlockToeplitzOperator::chebyshev_p1(256);
        let scan = gamma_scan(&op, (-3.0, 3.0, -1.0, 1.0), 48, &c).unwrap();
        assert_eq!(scan.real_intervals[0].len(), 1);
        let arc = &scan.real_intervals[0][0];
        assert!((arc.a.to_f64() + 2.0).abs() < 1e-9, "left endpoint {}", arc.a.to_f64());
        assert!((arc.b.to_f64() - 2.0).abs() < 1e-9);
        let spacing = scan.grid_spacing();
        for (_re, im, _gap) in scan.tie_points(1, 1e-6) {
            assert!(im.abs() <= 2.0 * spacing + 1e-12);
        }
        assert!(scan.conjugation_symmetric(1, 1e-6));
    }

    #[test]
    fn growth_at_large_x() {
        let c = ctx();
        let op = synthetic_p2(256);
        let x = MpComplex::from_f64(1e3, 0.0, 256);
        let rs = roots_sorted(&op, &x, &c).unwrap();
        let z1 = rs.roots[0].abs().to_f64();
        assert!((z1 * 1e6 - 1.0).abs() < 0.01, "z1 = {z1}");
        for j in 1..=2 {
            let m = rs.roots[j].abs().to_f64();
            assert!(m > 1e2 && m < 1e4, "z_{} = {m}", j + 1);
        }
    }
}
