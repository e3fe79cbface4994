//! Branches of the surface functions attached to the characteristic roots,
//! the constants they generate, branch products, the signed measures s_k,
//! and the shared epsilon-ladder boundary-value machinery used by every
//! density computation on the cuts.

use crate::error::{Error, Result};
use crate::nikishin::Interval;
use crate::numerics::complex::MpComplex;
use crate::numerics::context::PrecisionContext;
use crate::numerics::context::PrecisionContext as Ctx;
use crate::numerics::quad::gauss_rule;
use crate::numerics::real::{pi, MpReal};
use crate::toeplitz::{roots_sorted, BlockToeplitzOperator, RootSet};

/// Branch values at one point: psi[k-1][j] is the branch of the k-th surface
/// function attached to the root z_{j+1}(x).
#[derive(Clone, Debug)]
pub struct BranchValues {
    pub x: MpComplex,
    pub psi: Vec<Vec<MpComplex>>,
}

impl BranchValues {
    /// psi_j^{(k)}(x) with 1-indexed k and 0-indexed sheet j.
    pub fn value(&self, k: usize, j: usize) -> &MpComplex {
        &self.psi[k - 1][j]
    }
}

/// Branch values from the symbol minors at given roots (no tie guard).
pub fn branch_values_at_roots(
    op: &BlockToeplitzOperator,
    x: &MpComplex,
    roots: &[MpComplex],
    ctx: &Ctx,
) -> Result<BranchValues> {
    let p = op.p;
    let prec = ctx.prec();
    let mut psi = vec![Vec::with_capacity(p + 1); p];
    for zj in roots {
        // minors det F^[p,t] at this root, t = 1..p
        let minors: Vec<MpComplex> = (1..=p)
            .map(|t| op.symbol_minor(zj, x, t))
            .collect();
        for k in 1..=p {
            let denom = &minors[k - 1];
            if denom.abs() <= MpReal::eps(prec).ldexp(40) {
                return Err(Error::ExceptionalPoint { gap: denom.abs().to_f64() });
            }
            let val = if k < p {
                -minors[k].div_c(denom)
            } else {
                let ratio = minors[0].div_c(&minors[p - 1]);
                let signed = if (p - 1) % 2 == 1 { -ratio } else { ratio };
                signed.div_c(zj)
            };
            psi[k - 1].push(val);
        }
    }
    Ok(BranchValues { x: x.clone(), psi })
}

/// Branch values at a point off the exceptional set; errors inside a tie
/// neighbourhood where branch attachment is ill-posed.
pub fn psi_branches(
    op: &BlockToeplitzOperator,
    x: &MpComplex,
    roots: &RootSet,
    ctx: &Ctx,
) -> Result<BranchValues> {
    if roots.min_pair_distance < ctx.tie_tol {
        return Err(Error::ExceptionalPoint { gap: roots.min_pair_distance.to_f64() });
    }
    branch_values_at_roots(op, x, &roots.roots, ctx)
}

/// The branch products 1/(psi_{k-1}^{(1)} ... psi_{k-1}^{(p)}), k = 1..p+1,
/// which reproduce the modulus-ordered roots.
pub fn ztilde(branches: &BranchValues) -> Result<Vec<MpComplex>> {
    let p = branches.psi.len();
    let prec = branches.x.prec();
    let mut out = Vec::with_capacity(p + 1);
    for j in 0..=p {
        let mut prod = MpComplex::one(prec);
        for t in 0..p {
            prod = prod.mul_c(&branches.psi[t][j]);
        }
        if prod.is_zero() {
            return Err(Error::ExceptionalPoint { gap: 0.0 });
        }
        out.push(prod.recip());
    }
    Ok(out)
}

/// Elementwise multiset comparison of the branch products against the
/// modulus-ordered roots; returns the largest relative deviation.
pub fn ztilde_vs_roots(zt: &[MpComplex], roots: &[MpComplex]) -> MpReal {
    let prec = zt.first().map(|z| z.prec()).unwrap_or(64);
    let mut remaining: Vec<MpComplex> = roots.to_vec();
    let mut worst = MpReal::zero(prec);
    for z in zt {
        let mut best = usize::MAX;
        let mut best_d = MpReal::from_f64(f64::MAX, prec);
        for (i, r) in remaining.iter().enumerate() {
            let d = (z.clone() - r).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        let scale = z.abs().max_r(&MpReal::eps(prec));
        worst = worst.max_r(&best_d.div_r(&scale));
        remaining.remove(best);
    }
    worst
}

/// Surface constants: the pole offsets K_k of the branch functions and the
/// hierarchy constants m_{l,j}.
#[derive(Clone, Debug)]
pub struct SurfaceConstants {
    pub p: usize,
    /// K_1..K_p
    pub k_vals: Vec<MpReal>,
    /// m[l][j] for 0 <= l <= p, 0 <= j <= p (entries outside the defined
    /// range are zero placeholders)
    m: Vec<Vec<MpReal>>,
    pub beta: MpReal,
}

impl SurfaceConstants {
    /// K_t with periodic index reduction into 1..=p.
    pub fn k_periodic(&self, t: i64) -> &MpReal {
        let p = self.p as i64;
        let idx = (t - 1).rem_euclid(p) as usize;
        &self.k_vals[idx]
    }

    pub fn m_const(&self, l: usize, j: usize) -> &MpReal {
        &self.m[l][j]
    }

    /// Closed-form m_{l,j} = prod_{i=1}^{l-1}(K_j - K_i) / prod_{i=1}^{l-2}(K_{l-1} - K_i).
    pub fn m_closed_form(&self, l: usize, j: usize) -> MpReal {
        let prec = self.beta.prec();
        match l {
            0 => return MpReal::one(prec),
            1 => return -MpReal::one(prec),
            _ => {}
        }
        let mut num = MpReal::one(prec);
        for i in 1..=l - 1 {
            num = num.mul_r(&self.k_vals[j - 1].sub_r(&self.k_vals[i - 1]));
        }
        let mut den = MpReal::one(prec);
        for i in 1..=l.saturating_sub(2) {
            den = den.mul_r(&self.k_vals[l - 2].sub_r(&self.k_vals[i - 1]));
        }
        num.div_r(&den)
    }

    /// Largest deviation between the recursive table and the closed form.
    pub fn m_recursion_residual(&self) -> MpReal {
        let prec = self.beta.prec();
        let mut worst = MpReal::zero(prec);
        for l in 2..=self.p {
            for j in l..=self.p {
                let d = self.m[l][j].sub_r(&self.m_closed_form(l, j)).abs();
                worst = worst.max_r(&d);
            }
        }
        worst
    }
}

/// Constants from the limit coefficients: K_k = -b_{k-1,k-1} plus the
/// m-recursion m_{l,j} = m_{l-1,j} (K_j - K_{l-1}) / m_{l-1,l-1}.
pub fn surface_constants(
    b: &crate::mop::LimitCoefficients,
    ctx: &Ctx,
) -> Result<SurfaceConstants> {
    let p = b.p;
    let prec = ctx.prec();
    let k_vals: Vec<MpReal> = (1..=p as i64)
        .map(|k| -b.value(k - 1, k - 1).clone())
        .collect();
    // distinct diagonal limits are required; coincident values degenerate
    // the branch functions into each other
    for i in 0..p {
        for j in i + 1..p {
            let d = k_vals[i].sub_r(&k_vals[j]).abs();
            if d <= ctx.tie_tol {
                return Err(Error::DegenerateConfiguration(format!(
                    "K_{} and K_{} coincide within tie_tol",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let mut m = vec![vec![MpReal::zero(prec); p + 1]; p + 1];
    for j in 0..=p {
        m[0][j] = MpReal::one(prec);
    }
    for j in 1..=p {
        m[1][j] = -MpReal::one(prec);
    }
    for l in 2..=p {
        for j in l..=p {
            let num = m[l - 1][j].mul_r(&k_vals[j - 1].sub_r(&k_vals[l - 2]));
            m[l][j] = num.div_r(&m[l - 1][l - 1]);
        }
    }
    Ok(SurfaceConstants { p, k_vals, m, beta: b.beta.clone() })
}

// ---------------------------------------------------------------------------
// boundary-value ladder
// ---------------------------------------------------------------------------

/// Boundary values at x + i0+ obtained from the epsilon ladder
/// {1e-6, 1e-8, 1e-10} with Richardson (polynomial) extrapolation to 0.
/// Labels follow the modulus order of the smallest rung.
#[derive(Clone, Debug)]
pub struct BoundarySample {
    pub x: MpReal,
    pub roots: Vec<MpComplex>,
    /// psi[k-1][j]: branch boundary values attached to root label j
    pub psi: Vec<Vec<MpComplex>>,
    pub ztilde: Vec<MpComplex>,
}

/// Boundary values plus x-derivatives by 5-point centred differences at the
/// ladder's own scale.
#[derive(Clone, Debug)]
pub struct BoundaryDerivatives {
    pub value: BoundarySample,
    pub droots: Vec<MpComplex>,
    pub dztilde: Vec<MpComplex>,
}

const LADDER: [f64; 3] = [1e-6, 1e-8, 1e-10];
const STENCIL_H: f64 = 1e-8;

/// Polynomial extrapolation of (eps_i, f_i) to eps = 0 (Neville scheme).
fn neville_at_zero(eps: &[MpReal], vals: &[MpComplex]) -> MpComplex {
    let n = vals.len();
    let mut tbl: Vec<MpComplex> = vals.to_vec();
    for level in 1..n {
        for i in 0..n - level {
            // p_i = (x_{i+level} p_i - x_i p_{i+1}) / (x_{i+level} - x_i) at 0
            let xi = &eps[i];
            let xj = &eps[i + level];
            let num = tbl[i].scale(xj) - &tbl[i + 1].scale(xi);
            tbl[i] = num.unscale(&xj.sub_r(xi));
        }
    }
    tbl[0].clone()
}

/// Permute `target` so it aligns with `reference` by total-displacement
/// minimization (exhaustive for the small degrees used here).
fn match_labels(reference: &[MpComplex], target: &[MpComplex]) -> Vec<usize> {
    let n = reference.len();
    let prec = reference[0].prec();
    if n <= 4 {
        let mut idx: Vec<usize> = (0..n).collect();
        let mut best: Vec<usize> = idx.clone();
        let mut best_cost = MpReal::from_f64(f64::MAX, prec);
        permute_search(&mut idx, 0, reference, target, &mut best, &mut best_cost);
        best
    } else {
        // greedy nearest assignment
        let mut used = vec![false; n];
        let mut out = vec![0usize; n];
        for (i, r) in reference.iter().enumerate() {
            let mut bd = MpReal::from_f64(f64::MAX, prec);
            let mut bj = usize::MAX;
            for (j, t) in target.iter().enumerate() {
                if used[j] {
                    continue;
                }
                let d = (r.clone() - t).abs();
                if d < bd {
                    bd = d;
                    bj = j;
                }
            }
            used[bj] = true;
            out[i] = bj;
        }
        out
    }
}

fn permute_search(
    idx: &mut Vec<usize>,
    k: usize,
    reference: &[MpComplex],
    target: &[MpComplex],
    best: &mut Vec<usize>,
    best_cost: &mut MpReal,
) {
    let n = idx.len();
    if k == n {
        let prec = reference[0].prec();
        let mut cost = MpReal::zero(prec);
        for i in 0..n {
            cost = cost.add_r(&(reference[i].clone() - &target[idx[i]]).abs());
        }
        if cost < *best_cost {
            *best_cost = cost;
            *best = idx.clone();
        }
        return;
    }
    for i in k..n {
        idx.swap(k, i);
        permute_search(idx, k + 1, reference, target, best, best_cost);
        idx.swap(k, i);
    }
}

/// Boundary sample by the ladder: roots, branch values and branch products
/// at x + i0+, each extrapolated rung-by-rung.
pub fn boundary_sample(
    op: &BlockToeplitzOperator,
    x: &MpReal,
    ctx: &Ctx,
) -> Result<BoundarySample> {
    let p = op.p;
    let prec = ctx.prec();
    // smallest rung first: it fixes the labels
    let mut rung_eps: Vec<MpReal> = Vec::with_capacity(LADDER.len());
    let mut rung_roots: Vec<Vec<MpComplex>> = Vec::with_capacity(LADDER.len());
    let mut rung_psi: Vec<Vec<Vec<MpComplex>>> = Vec::with_capacity(LADDER.len());
    let mut rung_zt: Vec<Vec<MpComplex>> = Vec::with_capacity(LADDER.len());
    let mut order: Vec<f64> = LADDER.to_vec();
    order.sort_by(f64::total_cmp); // ascending: 1e-10 first
    let mut labels: Option<Vec<MpComplex>> = None;
    for eps in order {
        let e = MpReal::from_f64(eps, prec);
        let xc = MpComplex::new(x.clone(), e.clone());
        let rs = roots_sorted(op, &xc, ctx)?;
        let roots = match &labels {
            None => {
                labels = Some(rs.roots.clone());
                rs.roots.clone()
            }
            Some(reference) => {
                let perm = match_labels(reference, &rs.roots);
                perm.iter().map(|&j| rs.roots[j].clone()).collect()
            }
        };
        let branches = branch_values_at_roots(op, &xc, &roots, ctx)?;
        let zt = ztilde(&branches)?;
        rung_eps.push(e);
        rung_roots.push(roots);
        rung_psi.push(branches.psi);
        rung_zt.push(zt);
    }
    let nroots = p + 1;
    let roots: Vec<MpComplex> = (0..nroots)
        .map(|j| {
            let vals: Vec<MpComplex> =
                rung_roots.iter().map(|r| r[j].clone()).collect();
            neville_at_zero(&rung_eps, &vals)
        })
        .collect();
    let psi: Vec<Vec<MpComplex>> = (0..p)
        .map(|k| {
            (0..nroots)
                .map(|j| {
                    let vals: Vec<MpComplex> =
                        rung_psi.iter().map(|ps| ps[k][j].clone()).collect();
                    neville_at_zero(&rung_eps, &vals)
                })
                .collect()
        })
        .collect();
    let zt: Vec<MpComplex> = (0..nroots)
        .map(|j| {
            let vals: Vec<MpComplex> = rung_zt.iter().map(|z| z[j].clone()).collect();
            neville_at_zero(&rung_eps, &vals)
        })
        .collect();
    Ok(BoundarySample { x: x.clone(), roots, psi, ztilde: zt })
}

/// Boundary sample plus derivatives by the 5-point stencil with h at the
/// ladder scale; off-centre samples are label-matched to the centre.
pub fn boundary_with_derivatives(
    op: &BlockToeplitzOperator,
    x: &MpReal,
    ctx: &Ctx,
) -> Result<BoundaryDerivatives> {
    let prec = ctx.prec();
    let h = MpReal::from_f64(STENCIL_H, prec);
    let center = boundary_sample(op, x, ctx)?;
    let offsets = [-2i64, -1, 1, 2];
    let mut samples = Vec::with_capacity(4);
    for o in offsets {
        let xo = x.add_r(&h.mul_i64(o));
        let s = boundary_sample(op, &xo, ctx)?;
        // align labels with the centre
        let perm = match_labels(&center.roots, &s.roots);
        let roots = perm.iter().map(|&j| s.roots[j].clone()).collect::<Vec<_>>();
        let psi = s
            .psi
            .iter()
            .map(|row| perm.iter().map(|&j| row[j].clone()).collect::<Vec<_>>())
            .collect::<Vec<_>>();
        let zt = perm.iter().map(|&j| s.ztilde[j].clone()).collect::<Vec<_>>();
        samples.push(BoundarySample { x: xo, roots, psi, ztilde: zt });
    }
    let twelve_h = h.mul_i64(12);
    let diff5 = |fm2: &MpComplex, fm1: &MpComplex, fp1: &MpComplex, fp2: &MpComplex| {
        (fm2.clone() - &fp2.clone() + (fp1.clone() - fm1).scale(&MpReal::from_i64(8, prec)))
            .unscale(&twelve_h)
    };
    let nroots = op.p + 1;
    let droots: Vec<MpComplex> = (0..nroots)
        .map(|j| {
            diff5(
                &samples[0].roots[j],
                &samples[1].roots[j],
                &samples[2].roots[j],
                &samples[3].roots[j],
            )
        })
        .collect();
    let dztilde: Vec<MpComplex> = (0..nroots)
        .map(|j| {
            diff5(
                &samples[0].ztilde[j],
                &samples[1].ztilde[j],
                &samples[2].ztilde[j],
                &samples[3].ztilde[j],
            )
        })
        .collect();
    Ok(BoundaryDerivatives { value: center, droots, dztilde })
}

/// Boundary values at x + i0+ computed without extrapolation: at real x the
/// characteristic polynomial has real coefficients, so the boundary roots
/// are exact roots, with each conjugate pair's +/- assignment (and the
/// modulus-order labels) fixed by one reference solve at x + i delta.
pub fn exact_boundary_sample(
    op: &BlockToeplitzOperator,
    x: &MpReal,
    ctx: &Ctx,
) -> Result<BoundarySample> {
    let prec = ctx.prec();
    let coeffs_in_x = op.coeffs_in_x(ctx);
    let xc = MpComplex::from_real(x.clone());
    let coeffs: Vec<MpComplex> = coeffs_in_x.iter().map(|q| q.eval(&xc)).collect();
    let exact = crate::numerics::poly::poly_roots(
        &crate::numerics::poly::Polynomial::new(coeffs),
        ctx,
    )?
    .roots;
    // reference labeling just above the axis
    let zref = MpComplex::new(x.clone(), MpReal::from_f64(1e-8, prec));
    let coeffs_ref: Vec<MpComplex> = coeffs_in_x.iter().map(|q| q.eval(&zref)).collect();
    let mut ref_roots = match crate::toeplitz::roots_warm(&coeffs_ref, &exact, prec) {
        Some(r) => r,
        None => {
            crate::numerics::poly::poly_roots(
                &crate::numerics::poly::Polynomial::new(coeffs_ref),
                ctx,
            )?
            .roots
        }
    };
    ref_roots.sort_by(|a, b| {
        a.norm_sqr()
            .cmp_r(&b.norm_sqr())
            .then(a.im.cmp_r(&b.im))
            .then(a.re.cmp_r(&b.re))
    });
    let perm = match_labels(&ref_roots, &exact);
    let roots: Vec<MpComplex> = perm.iter().map(|&i| exact[i].clone()).collect();
    let branches = branch_values_at_roots(op, &xc, &roots, ctx)?;
    let zt = ztilde(&branches)?;
    Ok(BoundarySample { x: x.clone(), roots, psi: branches.psi, ztilde: zt })
}

/// Exact boundary sample plus x-derivatives by implicit differentiation of
/// z f(z,x) = 0: z' = -g_x/g_z at each boundary root (the branch products
/// coincide with the roots along the boundary, so they share derivatives).
pub fn exact_boundary_with_derivatives(
    op: &BlockToeplitzOperator,
    x: &MpReal,
    ctx: &Ctx,
) -> Result<BoundaryDerivatives> {
    let value = exact_boundary_sample(op, x, ctx)?;
    let coeffs_in_x = op.coeffs_in_x(ctx);
    let xc = MpComplex::from_real(x.clone());
    let c: Vec<MpComplex> = coeffs_in_x.iter().map(|q| q.eval(&xc)).collect();
    let cx: Vec<MpComplex> = coeffs_in_x
        .iter()
        .map(|q| q.derivative().eval(&xc))
        .collect();
    let prec = ctx.prec();
    let mut droots = Vec::with_capacity(value.roots.len());
    for z in &value.roots {
        let mut gz = MpComplex::zero(prec);
        let mut gx = MpComplex::zero(prec);
        let mut zjm1 = MpComplex::one(prec); // z^(j-1), meaningful from j = 1
        let mut zj = MpComplex::one(prec); // z^j
        for (j, cj) in c.iter().enumerate() {
            gx = gx + cx[j].mul_c(&zj);
            if j >= 1 {
                gz = gz + cj.scale(&MpReal::from_i64(j as i64, prec)).mul_c(&zjm1);
                zjm1 = zjm1.mul_c(z);
            }
            zj = zj.mul_c(z);
        }
        if gz.is_zero() {
            return Err(Error::ExceptionalPoint { gap: 0.0 });
        }
        droots.push(-gx.div_c(&gz));
    }
    let dztilde = droots.clone();
    Ok(BoundaryDerivatives { value, droots, dztilde })
}

/// Density of the signed measure s_k at an interior point of its arc:
/// (1/pi) Im(ztilde_k' / ztilde_k) from the + boundary values.
pub fn s_density(
    op: &BlockToeplitzOperator,
    k: usize,
    x: &MpReal,
    ctx: &Ctx,
) -> Result<MpReal> {
    if k == 0 || k > op.p {
        return Err(Error::IndexOutOfRange { index: k, max: op.p });
    }
    let prec = ctx.prec();
    let s = boundary_with_derivatives(op, x, ctx)?;
    let w = s.dztilde[k - 1].div_c(&s.value.ztilde[k - 1]);
    Ok(w.im.div_r(&pi(prec)))
}

/// Mass of s_k over an arc via inverse-square-root endpoint quadrature.
pub fn s_mass(
    op: &BlockToeplitzOperator,
    k: usize,
    arc: &Interval,
    order: usize,
    ctx: &Ctx,
) -> Result<MpReal> {
    let prec = ctx.prec();
    let mh = MpReal::from_f64(-0.5, prec);
    let rule = gauss_rule((&arc.a, &arc.b), &mh, &mh, order, ctx)?;
    let mut acc = MpReal::zero(prec);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let d = s_density(op, k, x, ctx)?;
        let h = x.sub_r(&arc.a).mul_r(&arc.b.sub_r(x)).sqrt();
        acc = acc.add_r(&d.mul_r(&h).mul_r(w));
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// identity reports
// ---------------------------------------------------------------------------

/// Largest relative residual of the degree-(p+1) product identity
/// (-1)^(p+1) prod_i psi_i^{(k+1)} = b_{k, k-p} over k = 0..p-1.
pub fn branch_product_residual(
    op: &BlockToeplitzOperator,
    branches: &BranchValues,
) -> MpReal {
    let p = op.p;
    let prec = op.prec();
    let mut worst = MpReal::zero(prec);
    for k in 0..p {
        let mut prod = MpComplex::one(prec);
        for j in 0..=p {
            prod = prod.mul_c(&branches.psi[k][j]);
        }
        if (p + 1) % 2 == 1 {
            prod = -prod;
        }
        let expect = op.b_value(k + p, k);
        let resid = (prod - &MpComplex::from_real(expect.clone()))
            .abs()
            .div_r(&expect.abs().max_r(&MpReal::eps(prec)));
        worst = worst.max_r(&resid);
    }
    worst
}

/// Largest deviation of the sheet differences psi_j^{(a)} - psi_j^{(b)} from
/// K_a - K_b, over all sheet labels and pairs (a, b).
pub fn sheet_difference_residual(
    branches: &BranchValues,
    constants: &SurfaceConstants,
) -> MpReal {
    let p = branches.psi.len();
    let prec = branches.x.prec();
    let mut worst = MpReal::zero(prec);
    for a in 1..=p {
        for b in a + 1..=p {
            let expect = constants.k_vals[a - 1].sub_r(&constants.k_vals[b - 1]);
            for j in 0..=p {
                let d = branches.psi[a - 1][j].clone() - &branches.psi[b - 1][j];
                let resid = (d - &MpComplex::from_real(expect.clone())).abs();
                worst = worst.max_r(&resid);
            }
        }
    }
    worst
}

/// Deviation of psi_0^{(k)}(x) from x - b_{k-1,k-1} at a (large) sample x.
pub fn normalization_deviation(
    op: &BlockToeplitzOperator,
    branches: &BranchValues,
    constants: &SurfaceConstants,
) -> MpReal {
    let p = op.p;
    let prec = op.prec();
    let mut worst = MpReal::zero(prec);
    for k in 1..=p {
        let expect = branches.x.clone()
            + &MpComplex::from_real(constants.k_vals[k - 1].clone());
        let d = (branches.psi[k - 1][0].clone() - &expect).abs();
        worst = worst.max_r(&d);
    }
    worst
}

/// Telescoping constants c_{i,j-1} (i = 0..j-1) for the weight collapse
/// G_j^{(k)} = 1/F_{k-j+1}, plus the sampled identity residual.
#[derive(Clone, Debug)]
pub struct TelescopeReport {
    pub constants: Vec<MpReal>,
    pub max_rel_error: MpReal,
}

/// c_{0,j-1} = 1 and c_{i,j-1} = prod_{t=0}^{i-1} (K_{k-t} - K_{k-j+1});
/// the identity is checked at the supplied off-cut sample points.
pub fn telescope_constants(
    op: &BlockToeplitzOperator,
    constants: &SurfaceConstants,
    j: usize,
    k: i64,
    sample_points: &[MpComplex],
    ctx: &Ctx,
) -> Result<TelescopeReport> {
    let prec = ctx.prec();
    if j == 0 || j > op.p {
        return Err(Error::IndexOutOfRange { index: j, max: op.p });
    }
    let base = constants.k_periodic(k - j as i64 + 1).clone();
    let mut cs = Vec::with_capacity(j);
    cs.push(MpReal::one(prec));
    for i in 1..j {
        let factor = constants.k_periodic(k - (i as i64) + 1).sub_r(&base);
        let prev = cs[i - 1].clone();
        cs.push(prev.mul_r(&factor));
    }

    let mut worst = MpReal::zero(prec);
    for x in sample_points {
        let rs = roots_sorted(op, x, ctx)?;
        let br = psi_branches(op, x, &rs, ctx)?;
        // F_t(x) = psi_0^{(t)} with periodic index reduction
        let f_at = |t: i64| -> MpComplex {
            let p = op.p as i64;
            let idx = (t - 1).rem_euclid(p) as usize;
            br.psi[idx][0].clone()
        };
        let mut lhs = MpComplex::zero(prec);
        let mut denom = MpComplex::one(prec);
        for (i, c) in cs.iter().enumerate() {
            denom = denom.mul_c(&f_at(k - i as i64));
            lhs = lhs + denom.recip().scale(c);
        }
        let rhs = f_at(k - j as i64 + 1).recip();
        let resid = (lhs - &rhs).abs().div_r(&rhs.abs().max_r(&MpReal::eps(prec)));
        worst = worst.max_r(&resid);
    }
    Ok(TelescopeReport { constants: cs, max_rel_error: worst })
}

/// Constants straight from an operator's band: the diagonal entries play the
/// roles of the diagonal limits and the first subdiagonal supplies beta
/// (exact on the coefficient-relation manifold, where the subdiagonal is
/// constant).
pub fn constants_from_operator(
    op: &BlockToeplitzOperator,
    ctx: &Ctx,
) -> Result<SurfaceConstants> {
    let p = op.p;
    let prec = ctx.prec();
    let k_vals: Vec<MpReal> = (0..p).map(|k| -op.b_value(k, k).clone()).collect();
    for i in 0..p {
        for j in i + 1..p {
            if k_vals[i].sub_r(&k_vals[j]).abs() <= ctx.tie_tol {
                return Err(Error::DegenerateConfiguration(format!(
                    "K_{} and K_{} coincide within tie_tol",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let mut m = vec![vec![MpReal::zero(prec); p + 1]; p + 1];
    for j in 0..=p {
        m[0][j] = MpReal::one(prec);
    }
    for j in 1..=p {
        m[1][j] = -MpReal::one(prec);
    }
    for l in 2..=p {
        for j in l..=p {
            let num = m[l - 1][j].mul_r(&k_vals[j - 1].sub_r(&k_vals[l - 2]));
            m[l][j] = num.div_r(&m[l - 1][l - 1]);
        }
    }
    Ok(SurfaceConstants { p, k_vals, m, beta: op.b_value(1, 0).clone() })
}

/// Convenience: roots plus branches at an off-cut point.
pub fn branches_at(
    op: &BlockToeplitzOperator,
    x: &MpComplex,
    ctx: &PrecisionContext,
) -> Result<(RootSet, BranchValues)> {
    let rs = roots_sorted(op, x, ctx)?;
    let br = psi_branches(op, x, &rs, ctx)?;
    Ok((rs, br))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Ctx {
        Ctx::standard()
    }

    /// p = 2 operator on the coefficient-relation manifold (the branch
    /// identities are exact there).
    fn synthetic_p2(prec: u32) -> BlockToeplitzOperator {
        let d = vec![MpReal::from_f64(0.12, prec), MpReal::from_f64(-0.34, prec)];
        let beta = MpReal::from_f64(0.8, prec);
        let seeds = vec![MpReal::from_f64(0.3, prec)];
        let band = crate::mop::relation_band(&d, &beta, &seeds, prec);
        BlockToeplitzOperator::from_band(2, band, prec).unwrap()
    }

    #[test]
    fn p1_branches_are_reciprocal_roots() {
        let c = ctx();
        let op = BlockToeplitzOperator::chebyshev_p1(256);
        let x = MpComplex::from_f64(3.0, 0.0, 256);
        let (rs, br) = branches_at(&op, &x, &c).unwrap();
        for j in 0..2 {
            let expect = rs.roots[j].recip();
            assert!((br.psi[0][j].clone() - &expect).abs().to_f64() < 1e-40);
        }
        // ztilde reproduces the roots elementwise
        let zt = ztilde(&br).unwrap();
        assert!(ztilde_vs_roots(&zt, &rs.roots).to_f64() < 1e-40);
    }

    #[test]
    fn branch_product_identity_synthetic_p2() {
        let c = ctx();
        let op = synthetic_p2(256);
        for (re, im) in [(2.0, 1.0), (-1.3, 0.7), (0.4, -2.2), (5.0, 0.1)] {
            let x = MpComplex::from_f64(re, im, 256);
            let (_, br) = branches_at(&op, &x, &c).unwrap();
            let resid = branch_product_residual(&op, &br);
            assert!(resid.to_f64() < 1e-40, "residual {} at ({re},{im})", resid.to_f64());
        }
    }

    #[test]
    fn ztilde_multiset_matches_roots_p2() {
        let c = ctx();
        let op = synthetic_p2(256);
        let x = MpComplex::from_f64(2.0, 1.0, 256);
        let (rs, br) = branches_at(&op, &x, &c).unwrap();
        let zt = ztilde(&br).unwrap();
        assert!(ztilde_vs_roots(&zt, &rs.roots).to_f64() < 1e-40);
    }

    #[test]
    fn ladder_reproduces_arcsine_density() {
        // p = 1: sigma_1 density = 1/(pi sqrt(4 - x^2)) comes from
        // Im(z'_{1,+}/z_{1,+}); check s-side ztilde agrees too
        let c = ctx();
        let op = BlockToeplitzOperator::chebyshev_p1(256);
        for xf in [-1.5, -0.4, 0.0, 0.9, 1.7] {
            let x = MpReal::from_f64(xf, 256);
            let d = s_density(&op, 1, &x, &c).unwrap();
            let expect = 1.0 / (std::f64::consts::PI * (4.0 - xf * xf).sqrt());
            assert!(
                (d.to_f64() - expect).abs() < 1e-12,
                "x={xf}: {} vs {expect}",
                d.to_f64()
            );
        }
    }

    #[test]
    fn s_mass_p1_is_one() {
        let c = ctx();
        let op = BlockToeplitzOperator::chebyshev_p1(256);
        let arc = Interval::from_f64(-2.0, 2.0, 256).unwrap();
        let m = s_mass(&op, 1, &arc, 48, &c).unwrap();
        assert!((m.to_f64() - 1.0).abs() < 1e-10, "mass {}", m.to_f64());
    }

    #[test]
    fn constants_and_m_recursion() {
        // synthetic distinct K values through a fabricated limits table
        let prec = 256;
        let c = ctx();
        let d = vec![
            MpReal::from_f64(0.1, prec),
            MpReal::from_f64(-0.4, prec),
            MpReal::from_f64(0.3, prec),
        ];
        let beta = MpReal::from_f64(0.7, prec);
        let seeds = vec![MpReal::from_f64(0.2, prec), MpReal::from_f64(0.3, prec)];
        let band = crate::mop::relation_band(&d, &beta, &seeds, prec);
        let op = BlockToeplitzOperator::from_band(3, band, prec).unwrap();
        let sc = constants_from_operator(&op, &c).unwrap();
        assert!((sc.k_vals[0].to_f64() + 0.1).abs() < 1e-70);
        assert!((sc.k_vals[1].to_f64() - 0.4).abs() < 1e-70);
        assert!((sc.k_vals[2].to_f64() + 0.3).abs() < 1e-70);
        // base rows
        assert!((sc.m_const(0, 2).to_f64() - 1.0).abs() < 1e-70);
        assert!((sc.m_const(1, 3).to_f64() + 1.0).abs() < 1e-70);
        // m_{2,j} = K_j - K_1
        for j in 2..=3 {
            let expect = sc.k_vals[j - 1].sub_r(&sc.k_vals[0]);
            assert!(sc.m_const(2, j).sub_r(&expect).abs().to_f64() < 1e-70);
        }
        assert!(sc.m_recursion_residual().to_f64() < 1e-70);
    }

    #[test]
    fn sheet_differences_constant_p2() {
        let c = ctx();
        let op = synthetic_p2(256);
        let sc = constants_from_operator(&op, &c).unwrap();
        for (re, im) in [(1.9, 1.1), (-0.8, 2.0), (3.5, -0.6)] {
            let x = MpComplex::from_f64(re, im, 256);
            let (_, br) = branches_at(&op, &x, &c).unwrap();
            let resid = sheet_difference_residual(&br, &sc);
            assert!(resid.to_f64() < 1e-38, "residual {}", resid.to_f64());
        }
    }

    #[test]
    fn normalization_at_large_x() {
        let c = ctx();
        let op = synthetic_p2(256);
        let x = MpComplex::from_f64(1e3, 0.0, 256);
        let (_, br) = branches_at(&op, &x, &c).unwrap();
        let sc = constants_from_operator(&op, &c).unwrap();
        let dev = normalization_deviation(&op, &br, &sc);
        // psi_0^{(k)} = x + K_k + O(1/x)
        assert!(dev.to_f64() < 1e-2, "deviation {}", dev.to_f64());
    }

    #[test]
    fn telescope_constants_p2() {
        let c = ctx();
        let op = synthetic_p2(256);
        let sc = constants_from_operator(&op, &c).unwrap();
        let xs: Vec<MpComplex> = (0..10)
            .map(|t| MpComplex::from_f64(2.2 + 0.3 * t as f64, 0.9, 256))
            .collect();
        // j = 2, k = 1: c_{1,1} = K_1 - K_2 and the collapse must hold
        let rep = telescope_constants(&op, &sc, 2, 1, &xs, &c).unwrap();
        let expect = sc.k_vals[0].sub_r(&sc.k_vals[1]);
        assert!(rep.constants[1].sub_r(&expect).abs().to_f64() < 1e-70);
        assert!(rep.max_rel_error.to_f64() < 1e-22, "resid {}", rep.max_rel_error.to_f64());
        // negative control: a wrong constant breaks the collapse
        let mut bad = sc.clone();
        bad.k_vals[1] = bad.k_vals[1].add_r(&MpReal::from_f64(0.1, 256));
        let rep_bad = telescope_constants(&op, &bad, 2, 1, &xs[..3], &c).unwrap();
        assert!(rep_bad.max_rel_error.to_f64() > 1e-6);
    }

    #[test]
    fn j_equals_one_needs_no_constants() {
        let c = ctx();
        let op = synthetic_p2(256);
        let sc = constants_from_operator(&op, &c).unwrap();
        let xs = [MpComplex::from_f64(2.7, 1.3, 256)];
        let rep = telescope_constants(&op, &sc, 1, 1, &xs, &c).unwrap();
        assert_eq!(rep.constants.len(), 1);
        assert!(rep.max_rel_error.to_f64() < 1e-40);
    }
}
