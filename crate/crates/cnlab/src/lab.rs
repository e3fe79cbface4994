//! End-to-end experiment pipeline and the verdict generators shared by the
//! CLI and the acceptance suite: build the orthogonal polynomials, estimate
//! and project the limit coefficients, assemble the operator, classify its
//! curves, tabulate the measures, then run every identity and asymptotics
//! check with pinned tolerances.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hessenberg;
use crate::hierarchy::{self, DensityTable};
use crate::mop::{self, LimitCoefficients, RecurrenceTable};
use crate::nikishin::{GeneratingMeasure, Interval, NikishinSystem};
use crate::numerics::complex::MpComplex;
use crate::numerics::context::PrecisionContext;
use crate::numerics::poly::Polynomial;
use crate::numerics::real::MpReal;
use crate::report::Verdict;
use crate::surface::{self, SurfaceConstants};
use crate::toeplitz::{self, BlockToeplitzOperator, CurveScan};
use crate::widom;
use num_traits::Zero;

/// Everything the checks need, computed once per (system, staircase).
pub struct Pipeline {
    pub ctx: PrecisionContext,
    pub system: NikishinSystem,
    pub permutation: Vec<usize>,
    pub n_max: usize,
    pub q: Vec<Polynomial>,
    pub rec_table: RecurrenceTable,
    /// raw tail estimates (the relation residuals are measured here)
    pub limits_raw: LimitCoefficients,
    /// relation-manifold projection used for the operator
    pub limits: LimitCoefficients,
    pub op: BlockToeplitzOperator,
    pub constants: SurfaceConstants,
    /// refined real arc of each curve, k = 1..p
    pub arcs: Vec<Interval>,
    pub nu_tables: Vec<DensityTable>,
    pub rho_tables: Vec<DensityTable>,
}

impl Pipeline {
    pub fn p(&self) -> usize {
        self.system.p()
    }

    /// Real span that covers every generator interval with margin 1.
    pub fn span(&self) -> (f64, f64) {
        let p = self.system.p();
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for k in 1..=p {
            lo = lo.min(self.system.delta(k).a.to_f64());
            hi = hi.max(self.system.delta(k).b.to_f64());
        }
        (lo - 1.0, hi + 1.0)
    }

    /// Region for curve scans: the span with imaginary extent 1.5.
    pub fn scan_region(&self) -> (f64, f64, f64, f64) {
        let (lo, hi) = self.span();
        (lo, hi, -1.5, 1.5)
    }

    /// Ring of off-cut sample points around all the arcs; points carry a
    /// nonzero imaginary part so they avoid the cuts and (generically) the
    /// exceptional set.
    pub fn offcut_ring(&self, count: usize) -> Vec<MpComplex> {
        let prec = self.ctx.prec();
        let (lo, hi) = self.span();
        let cx = 0.5 * (lo + hi);
        let rx = 0.62 * (hi - lo);
        (0..count)
            .map(|t| {
                let theta = 2.0 * std::f64::consts::PI * (t as f64 + 0.371) / count as f64;
                let re = cx + rx * theta.cos();
                let im = 0.9 * theta.sin() + 0.15 * theta.cos().signum();
                MpComplex::from_f64(re, im, prec)
            })
            .collect()
    }

    /// Build the full pipeline; `table_points` controls density sampling.
    pub fn build(
        system: NikishinSystem,
        n_max: usize,
        permutation: Vec<usize>,
        table_points: usize,
        ctx: &PrecisionContext,
    ) -> Result<Pipeline> {
        Self::build_with_depth(system, n_max, permutation, table_points, true, ctx)
    }

    /// Limits-only pipeline: polynomials, recurrence table and coefficient
    /// estimates, without curve classification or density tables.
    pub fn build_limits_only(
        system: NikishinSystem,
        n_max: usize,
        permutation: Vec<usize>,
        ctx: &PrecisionContext,
    ) -> Result<Pipeline> {
        Self::build_with_depth(system, n_max, permutation, 0, false, ctx)
    }

    fn build_with_depth(
        system: NikishinSystem,
        n_max: usize,
        permutation: Vec<usize>,
        table_points: usize,
        full: bool,
        ctx: &PrecisionContext,
    ) -> Result<Pipeline> {
        let p = system.p();
        let q = mop::compute_q(&system, n_max, &permutation, ctx)?;
        let rec_table = mop::extract_recurrence(&q, p, ctx)?;
        let limits_raw = mop::estimate_limits(&rec_table, p, ctx)?;
        let limits = limits_raw.relation_projected(ctx);
        let op = BlockToeplitzOperator::from_limits(&limits, ctx)?;
        let constants = surface::constants_from_operator(&op, ctx)?;
        if !full {
            return Ok(Pipeline {
                ctx: ctx.clone(),
                system,
                permutation,
                n_max,
                q,
                rec_table,
                limits_raw,
                limits,
                op,
                constants,
                arcs: Vec::new(),
                nu_tables: Vec::new(),
                rho_tables: Vec::new(),
            });
        }

        let (lo, hi) = {
            let mut lo = f64::MAX;
            let mut hi = f64::MIN;
            for k in 1..=p {
                lo = lo.min(system.delta(k).a.to_f64());
                hi = hi.max(system.delta(k).b.to_f64());
            }
            (lo - 1.0, hi + 1.0)
        };
        let classes = toeplitz::real_axis_classification(&op, lo, hi, 2048, ctx)?;
        let mut arcs = Vec::with_capacity(p);
        for (k, class) in classes.iter().enumerate() {
            let arc = class
                .iter()
                .max_by(|a, b| a.len().cmp_r(&b.len()))
                .cloned()
                .ok_or_else(|| {
                    Error::DegenerateConfiguration(format!(
                        "curve {} has no real section",
                        k + 1
                    ))
                })?;
            arcs.push(arc);
        }

        let nu_tables: Vec<DensityTable> = (1..=p)
            .into_par_iter()
            .map(|j| hierarchy::nu_table(&op, j, &arcs[0], table_points, ctx))
            .collect::<Result<Vec<_>>>()?;
        let rho_tables: Vec<DensityTable> = (1..=p)
            .into_par_iter()
            .map(|k| hierarchy::rho_table(&op, &constants, k, &arcs[k - 1], table_points, ctx))
            .collect::<Result<Vec<_>>>()?;

        Ok(Pipeline {
            ctx: ctx.clone(),
            system,
            permutation,
            n_max,
            q,
            rec_table,
            limits_raw,
            limits,
            op,
            constants,
            arcs,
            nu_tables,
            rho_tables,
        })
    }

    pub fn scan(&self, steps: usize) -> Result<CurveScan> {
        toeplitz::gamma_scan(&self.op, self.scan_region(), steps, &self.ctx)
    }
}

/// Reference systems.
pub fn reference_system(p: usize, ctx: &PrecisionContext) -> Result<NikishinSystem> {
    match p {
        1 => NikishinSystem::new(
            vec![GeneratingMeasure::uniform(Interval::from_f64(
                -2.0,
                2.0,
                ctx.prec(),
            )?)],
            ctx,
        ),
        2 => NikishinSystem::reference_p2(ctx),
        3 => NikishinSystem::reference_p3(ctx),
        _ => Err(Error::InvalidConfig(format!("no reference system for p = {p}"))),
    }
}

/// The p=2 reference intervals with jacobi(1/2,1/2) generators.
pub fn reference_p2_jacobi(ctx: &PrecisionContext) -> Result<NikishinSystem> {
    let prec = ctx.prec();
    let half = MpReal::from_f64(0.5, prec);
    NikishinSystem::new(
        vec![
            GeneratingMeasure::jacobi(
                Interval::from_f64(-1.0, 0.0, prec)?,
                half.clone(),
                half.clone(),
            ),
            GeneratingMeasure::jacobi(Interval::from_f64(0.5, 1.5, prec)?, half.clone(), half),
        ],
        ctx,
    )
}

/// The p=3 reference intervals with jacobi(1/2,1/2) generators; their limit
/// coefficients converge to working precision at small depth, which the
/// curve-dependent checks need (the uniform family's third diagonal is
/// still ~1e-3 away at reachable degrees, comparable to the K_2 - K_3 gap).
pub fn reference_p3_jacobi(ctx: &PrecisionContext) -> Result<NikishinSystem> {
    let prec = ctx.prec();
    let half = MpReal::from_f64(0.5, prec);
    NikishinSystem::new(
        vec![
            GeneratingMeasure::jacobi(
                Interval::from_f64(-1.0, 0.0, prec)?,
                half.clone(),
                half.clone(),
            ),
            GeneratingMeasure::jacobi(
                Interval::from_f64(0.5, 1.5, prec)?,
                half.clone(),
                half.clone(),
            ),
            GeneratingMeasure::jacobi(Interval::from_f64(2.0, 3.0, prec)?, half.clone(), half),
        ],
        ctx,
    )
}

// ---------------------------------------------------------------------------
// criterion checks
// ---------------------------------------------------------------------------

/// Criterion 1: the p = 1 uniform system on [-2,2] reduces to the classical
/// second-kind Chebyshev data.
pub fn check_chebyshev_reduction(ctx: &PrecisionContext) -> Result<Vec<Verdict>> {
    let system = reference_system(1, ctx)?;
    let q = mop::compute_q(&system, 40, &[1], ctx)?;
    let table = mop::extract_recurrence(&q, 1, ctx)?;
    let b = mop::estimate_limits(&table, 1, ctx)?;
    let mut out = Vec::new();
    out.push(Verdict::check(
        "c1.diagonal-limit",
        "p=1 uniform [-2,2]: |b_00| vanishes by symmetry",
        b.value(0, 0).abs().to_f64(),
        1e-25,
    ));
    out.push(Verdict::check(
        "c1.subdiagonal-limit",
        "p=1 uniform [-2,2]: |b_10 - 1| at N=40 (tail 4n^2/(4n^2-1))",
        (b.value(1, 0).to_f64() - 1.0).abs(),
        1e-3,
    ));
    // the reduced limit operator reproduces the monic Chebyshev recurrence
    let prec = ctx.prec();
    let op = BlockToeplitzOperator::chebyshev_p1(prec);
    let mut worst: f64 = 0.0;
    for t in 0..10 {
        let x = MpComplex::from_f64(-2.7 + 0.6 * t as f64, 0.4, prec);
        // independent route: the three-term recurrence u_{n+1} = x u_n - u_{n-1}
        let mut um1 = MpComplex::zero(prec);
        let mut u = MpComplex::one(prec);
        for n in 0..12 {
            let v = op.p_eval(n, &x);
            let dev = (v - &u).abs().to_f64();
            let scale = u.abs().to_f64().max(1.0);
            worst = worst.max(dev / scale);
            let next = x.mul_c(&u) - &um1;
            um1 = u;
            u = next;
        }
    }
    out.push(Verdict::check(
        "c1.chebyshev-values",
        "P_n of the limit operator matches the monic Chebyshev recurrence at 10 points",
        worst,
        1e-25,
    ));
    Ok(out)
}

/// Criterion 2: limit tables from two density families on the same intervals
/// agree within combined error estimates.
pub fn check_interval_only_dependence(a: &Pipeline, b: &Pipeline) -> Vec<Verdict> {
    let p = a.p();
    let mut worst_plain: f64 = 0.0;
    let mut worst_drift: f64 = 0.0;
    for j in 0..p as i64 {
        for d in 0..=p as i64 {
            let (i, jj) = (j + d, j);
            let dv = a
                .limits_raw
                .value(i, jj)
                .sub_r(b.limits_raw.value(i, jj))
                .abs()
                .to_f64();
            let plain =
                a.limits_raw.error(i, jj).to_f64() + b.limits_raw.error(i, jj).to_f64();
            let drift =
                a.limits_raw.drift(i, jj).to_f64() + b.limits_raw.drift(i, jj).to_f64();
            worst_plain = worst_plain.max(dv / plain.max(1e-300));
            worst_drift = worst_drift.max(dv / drift.max(1e-300));
        }
    }
    vec![
        Verdict::check(
            "c2.interval-only",
            "uniform vs jacobi(1/2,1/2) limit tables agree within combined window-drift estimates",
            worst_drift,
            1.0,
        ),
        Verdict::check(
            "c2.interval-only-last-difference",
            "same comparison against the last-two-differences bars (diagnostic)",
            worst_plain,
            1.0,
        )
        .warn_if_failed(),
    ]
}

/// Criterion 3: the limit-coefficient relations hold on the raw estimates
/// within 10x the propagated extrapolation error.
pub fn check_relation_residuals(pipe: &Pipeline) -> Vec<Verdict> {
    let rep = mop::relation_residuals(&pipe.limits_raw);
    let mut worst_ratio: f64 = 0.0;
    for row in &rep.rows {
        let ratio = row.residual.to_f64() / row.propagated_error.to_f64().max(1e-300);
        worst_ratio = worst_ratio.max(ratio);
    }
    vec![Verdict::check(
        &format!("c3.relations-p{}", pipe.p()),
        "coefficient relations: per-row residual within 10x propagated error",
        worst_ratio,
        10.0,
    )]
}

/// Criterion 4: refined real curves match the generator intervals within
/// max(extrapolation error, 1e-6); no off-axis tie points beyond the band.
pub fn check_gamma_matches_intervals(
    pipe: &Pipeline,
    scan: &CurveScan,
    label: &str,
) -> Result<Vec<Verdict>> {
    let p = pipe.p();
    let mut out = Vec::new();
    // propagate the coefficient drift through the endpoint map: perturb the
    // limits by their drift, re-refine, and take 3x the displacement
    let drift = pipe.limits_raw.max_drift().to_f64();
    let sens = endpoint_sensitivity(pipe)?;
    let tol = (3.0 * sens).max(drift).max(1e-6);
    let mut worst: f64 = 0.0;
    for k in 1..=p {
        let arc = &pipe.arcs[k - 1];
        let delta = pipe.system.delta(k);
        worst = worst
            .max((arc.a.to_f64() - delta.a.to_f64()).abs())
            .max((arc.b.to_f64() - delta.b.to_f64()).abs());
    }
    out.push(
        Verdict::check(
            &format!("c4.endpoints-{label}"),
            "classified curve endpoints match the generator intervals",
            worst,
            tol,
        )
        .with_detail(format!(
            "coefficient drift {drift:.3e}, propagated endpoint sensitivity {sens:.3e}"
        )),
    );
    let spacing = scan.grid_spacing();
    let mut off_axis = 0usize;
    for k in 1..=p {
        for (_, im, _) in scan.tie_points(k, 1e-6) {
            if im.abs() > 2.0 * spacing {
                off_axis += 1;
            }
        }
    }
    out.push(Verdict::check(
        &format!("c4.no-off-axis-{label}"),
        "no off-axis near-tie grid points outside the real-axis band",
        off_axis as f64,
        0.0,
    ));
    let sym = (1..=p).all(|k| scan.conjugation_symmetric(k, 1e-6));
    out.push(Verdict::check(
        &format!("c4.conjugation-{label}"),
        "tie point sets closed under conjugation",
        if sym { 0.0 } else { 1.0 },
        0.0,
    ));
    Ok(out)
}

/// Displacement of the classified endpoints when the limit table moves by
/// its drift bars (a directional condition estimate of the endpoint map).
fn endpoint_sensitivity(pipe: &Pipeline) -> Result<f64> {
    let p = pipe.p();
    let prec = pipe.ctx.prec();
    // perturbed operator: every canonical band value shifted by its drift
    let mut band: Vec<Vec<MpReal>> = Vec::with_capacity(p);
    for j in 0..p {
        let mut row = Vec::with_capacity(p + 1);
        for d in 0..=p {
            let v = pipe.limits.value((j + d) as i64, j as i64);
            let dr = pipe.limits_raw.drift((j + d) as i64, j as i64);
            row.push(v.add_r(dr));
        }
        band.push(row);
    }
    let op2 = BlockToeplitzOperator::from_band(p, band, prec)?;
    let (lo, hi) = pipe.span();
    let classes = toeplitz::real_axis_classification(&op2, lo, hi, 512, &pipe.ctx)?;
    let mut disp: f64 = 0.0;
    for k in 0..p {
        let arc2 = classes[k]
            .iter()
            .max_by(|a, b| a.len().cmp_r(&b.len()))
            .ok_or_else(|| {
                Error::DegenerateConfiguration("perturbed operator lost an arc".into())
            })?;
        disp = disp
            .max((arc2.a.to_f64() - pipe.arcs[k].a.to_f64()).abs())
            .max((arc2.b.to_f64() - pipe.arcs[k].b.to_f64()).abs());
    }
    Ok(disp)
}

/// Criterion 5: the Widom sum reproduces the recurrence polynomials.
pub fn check_widom_oracle(pipe: &Pipeline, n_max: usize, points: usize) -> Result<Vec<Verdict>> {
    let p = pipe.p();
    let prec = pipe.ctx.prec();
    let ring = pipe.offcut_ring(points);
    let worst = ring
        .par_iter()
        .map(|x| -> Result<f64> {
            let widom_vals = widom::widom_p_range(&pipe.op, x, n_max, &pipe.ctx)?;
            let mut local: f64 = 0.0;
            for (n, w) in widom_vals.iter().enumerate() {
                let r = pipe.op.p_eval(n, x);
                let rel = (w.clone() - &r)
                    .abs()
                    .div_r(&r.abs().max_r(&MpReal::from_f64(1e-30, prec)));
                local = local.max(rel.to_f64());
            }
            Ok(local)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    Ok(vec![Verdict::check(
        &format!("c5.widom-oracle-p{p}"),
        "Widom sum vs recurrence values for all n <= n_max at off-cut points",
        worst,
        1e-20,
    )])
}

/// Criterion 6: geometric decay of the strong-asymptotics error at the
/// predicted ratio |z_1/z_2|.
pub fn check_strong_asymptotics(pipe: &Pipeline, points: usize) -> Result<Vec<Verdict>> {
    let p = pipe.p();
    let ring = pipe.offcut_ring(points);
    let mut worst: f64 = 0.0;
    for x in ring.iter().take(points) {
        let (fitted, expected) = widom::strong_asymptotics_fit(&pipe.op, 0, x, 5..38, &pipe.ctx)?;
        worst = worst.max((fitted - expected).abs() / expected);
    }
    Ok(vec![Verdict::check(
        &format!("c6.strong-asymptotics-p{p}"),
        "fitted strong-asymptotics decay ratio within 10% of |z_1/z_2|",
        worst,
        0.10,
    )])
}

/// Criterion 7: orthogonality of P_n against the nu measures via both
/// routes, all l below the staircase counts.
pub fn check_orthogonality(pipe: &Pipeline, n_max: usize, label: &str) -> Result<Vec<Verdict>> {
    let engine = hierarchy::OrthogonalityEngine::new(&pipe.op, &pipe.arcs[0], &pipe.ctx)?;
    let mut worst_rel: f64 = 0.0;
    let mut worst_dis: f64 = 0.0;
    for n in 1..=n_max {
        let rep = engine.check(n, &pipe.nu_tables, 192, &pipe.ctx)?;
        worst_rel = worst_rel.max(rep.max_rel_residual.to_f64());
        worst_dis = worst_dis.max(rep.max_route_disagreement.to_f64());
    }
    Ok(vec![
        Verdict::check(
            &format!("c7.orthogonality-{label}"),
            "orthogonality integrals below 1e-12 of the scale moment (both routes)",
            worst_rel,
            1e-12,
        ),
        Verdict::check(
            &format!("c7.route-agreement-{label}"),
            "contour and real-line routes agree",
            worst_dis,
            1e-12,
        ),
    ])
}

/// Criterion 8: the nu measures reconstruct as a layered product of the
/// diagonal generating tables; densities sign-constant; residual decreases
/// under refinement.
pub fn check_reconstruction(pipe: &Pipeline) -> Result<Vec<Verdict>> {
    let p = pipe.p();
    let mut out = Vec::new();
    for j in 2..=p {
        let coarse = hierarchy::nikishin_reconstruct_check(
            &pipe.nu_tables[j - 1],
            &pipe.rho_tables[..j],
            100,
            24,
            &pipe.ctx,
        )?;
        let fine = hierarchy::nikishin_reconstruct_check(
            &pipe.nu_tables[j - 1],
            &pipe.rho_tables[..j],
            200,
            24,
            &pipe.ctx,
        )?;
        out.push(Verdict::check(
            &format!("c8.reconstruction-nu{j}"),
            "nu_j matches the nested product of the diagonal tables",
            fine.max_rel_deviation.to_f64(),
            1e-6,
        ));
        let decreasing = fine.max_rel_deviation.to_f64()
            <= coarse.max_rel_deviation.to_f64().max(1e-12);
        out.push(Verdict::check(
            &format!("c8.refinement-nu{j}"),
            "reconstruction residual does not grow under quadrature refinement",
            if decreasing { 0.0 } else { 1.0 },
            0.0,
        ));
    }
    let mut sign_ok = true;
    for t in pipe.nu_tables.iter().chain(&pipe.rho_tables) {
        sign_ok &= t.sign_constant();
    }
    out.push(Verdict::check(
        &format!("c8.sign-constancy-p{p}"),
        "every sampled layer density keeps one sign on its interior grid",
        if sign_ok { 0.0 } else { 1.0 },
        0.0,
    ));
    // nu measures are positive
    let nu_positive = pipe
        .nu_tables
        .iter()
        .all(|t| t.values.iter().all(|v| v.is_positive()));
    out.push(Verdict::check(
        &format!("c8.nu-positivity-p{p}"),
        "nu densities positive on the interior grid",
        if nu_positive { 0.0 } else { 1.0 },
        0.0,
    ));
    // diagonal generating densities vanish like a square root
    let mut worst_expo: f64 = 0.0;
    for t in &pipe.rho_tables {
        worst_expo = worst_expo.max((t.left_endpoint_exponent() - 0.5).abs());
    }
    out.push(Verdict::check(
        &format!("c8.endpoint-exponent-p{p}"),
        "fitted endpoint exponent of the diagonal densities within [0.4, 0.6]",
        worst_expo,
        0.1,
    ));
    // ratio-of-jumps consistency across layers and the O(1/x) decay of the
    // layer transforms
    let prec = pipe.ctx.prec();
    let mut worst_jump_ratio: f64 = 0.0;
    let mut worst_far: f64 = 0.0;
    for l in 2..=p {
        for j in l..=p {
            let arc = &pipe.arcs[l - 2];
            for t in [0.22f64, 0.47, 0.76] {
                let x = arc.a.add_r(&arc.len().mul_r(&MpReal::from_f64(t, prec)));
                let r = hierarchy::ratio_of_jumps_residual(
                    &pipe.op,
                    &pipe.constants,
                    l,
                    j,
                    &x,
                    &pipe.ctx,
                )?;
                worst_jump_ratio = worst_jump_ratio.max(r.to_f64());
            }
            let far = MpComplex::from_f64(1.0e3, 0.0, prec);
            let v = hierarchy::layer_transform(&pipe.op, &pipe.constants, l, j, &far, &pipe.ctx)?;
            // x F^{(l)}_j should stay bounded
            let scaled = v.abs().to_f64() * 1.0e3;
            if !(scaled.is_finite() && scaled < 1.0e3) {
                worst_far = worst_far.max(scaled);
            }
        }
    }
    if p >= 2 {
        out.push(Verdict::check(
            &format!("c8.ratio-of-jumps-p{p}"),
            "jump ratios of layer transforms match their analytic continuations",
            worst_jump_ratio,
            1e-10,
        ));
        out.push(Verdict::check(
            &format!("c8.layer-decay-p{p}"),
            "layer transforms decay like 1/x at large x",
            worst_far,
            0.0,
        ));
    }
    Ok(out)
}

/// Criterion 9: total masses: nu_j = 1 (contour route), sigma_k and s_k
/// equal p+1-k over their arcs.
pub fn check_mass_laws(pipe: &Pipeline, order: usize) -> Result<Vec<Verdict>> {
    let p = pipe.p();
    let mut out = Vec::new();
    let mut worst_nu: f64 = 0.0;
    for j in 1..=p {
        let m = hierarchy::nu_mass_contour(&pipe.op, j, &pipe.arcs[0], &pipe.ctx)?;
        worst_nu = worst_nu.max((m.to_f64() - 1.0).abs());
    }
    out.push(Verdict::check(
        &format!("c9.nu-mass-p{p}"),
        "every nu_j has unit mass (contour route)",
        worst_nu,
        1e-20,
    ));
    let mut worst_sigma: f64 = 0.0;
    let mut worst_s: f64 = 0.0;
    for k in 1..=p {
        let expect = (p + 1 - k) as f64;
        let sm = toeplitz::sigma_mass(&pipe.op, k, &pipe.arcs[k - 1], order, &pipe.ctx)?;
        worst_sigma = worst_sigma.max((sm.to_f64() - expect).abs());
        let s = surface::s_mass(&pipe.op, k, &pipe.arcs[k - 1], order, &pipe.ctx)?;
        worst_s = worst_s.max((s.to_f64() - expect).abs());
    }
    out.push(Verdict::check(
        &format!("c9.sigma-mass-p{p}"),
        "sigma_k carries mass p+1-k over its arc",
        worst_sigma,
        1e-8,
    ));
    out.push(Verdict::check(
        &format!("c9.s-mass-p{p}"),
        "s_k carries mass p+1-k over its arc",
        worst_s,
        1e-8,
    ));
    Ok(out)
}

/// Criterion 10: surface identities on the relation-projected operator.
pub fn check_surface_identities(pipe: &Pipeline, samples: usize) -> Result<Vec<Verdict>> {
    let p = pipe.p();
    let prec = pipe.ctx.prec();
    let ring = pipe.offcut_ring(samples);
    let mut worst_zt: f64 = 0.0;
    let mut worst_prod: f64 = 0.0;
    let mut diffs: Vec<(f64, f64)> = Vec::new();
    for x in &ring {
        let (rs, br) = surface::branches_at(&pipe.op, x, &pipe.ctx)?;
        let zt = surface::ztilde(&br)?;
        worst_zt = worst_zt.max(surface::ztilde_vs_roots(&zt, &rs.roots).to_f64());
        worst_prod = worst_prod.max(surface::branch_product_residual(&pipe.op, &br).to_f64());
        for a in 1..=p {
            for b in a + 1..=p {
                let expect = pipe.constants.k_vals[a - 1]
                    .sub_r(&pipe.constants.k_vals[b - 1]);
                for j in 0..=p {
                    let d = br.psi[a - 1][j].clone() - &br.psi[b - 1][j];
                    let dev = d - &MpComplex::from_real(expect.clone());
                    diffs.push((dev.re.to_f64(), dev.im.to_f64()));
                }
            }
        }
    }
    // variance of the sheet differences about their prescribed constants
    let var = if diffs.is_empty() {
        0.0
    } else {
        diffs.iter().map(|(a, b)| a * a + b * b).sum::<f64>() / diffs.len() as f64
    };
    let mut out = vec![
        Verdict::check(
            &format!("c10.ztilde-roots-p{p}"),
            "branch products reproduce the root multiset",
            worst_zt,
            1e-18,
        ),
        Verdict::check(
            &format!("c10.branch-product-p{p}"),
            "degree-(p+1) branch product identity",
            worst_prod,
            1e-20,
        ),
        Verdict::check(
            &format!("c10.sheet-variance-p{p}"),
            "variance of sheet differences about K_a - K_b",
            var,
            1e-20,
        ),
        Verdict::check(
            &format!("c10.m-recursion-p{p}"),
            "hierarchy constants recursion vs closed form",
            pipe.constants.m_recursion_residual().to_f64(),
            1e-28,
        ),
    ];
    // normalization at |x| = 1e3
    let far = MpComplex::from_f64(1.0e3, 0.0, prec);
    let (_, brf) = surface::branches_at(&pipe.op, &far, &pipe.ctx)?;
    out.push(Verdict::check(
        &format!("c10.normalization-p{p}"),
        "psi_0^{(k)}(x) - (x + K_k) = O(1/x) at |x| = 1e3",
        surface::normalization_deviation(&pipe.op, &brf, &pipe.constants).to_f64(),
        1e-2,
    ));
    // telescoping constants collapse the mixed weights
    let mut worst_tel: f64 = 0.0;
    let tel_pts: Vec<MpComplex> = ring.iter().take(6).cloned().collect();
    for j in 1..=p {
        for k in 1..=p as i64 {
            let rep =
                surface::telescope_constants(&pipe.op, &pipe.constants, j, k, &tel_pts, &pipe.ctx)?;
            worst_tel = worst_tel.max(rep.max_rel_error.to_f64());
        }
    }
    out.push(Verdict::check(
        &format!("c10.telescope-p{p}"),
        "weight-collapse constants reproduce 1/F_{k-j+1} at sample points",
        worst_tel,
        1e-22,
    ));
    Ok(out)
}

/// Criterion 11: exact-rational algebra on the operator truncations.
pub fn check_exact_algebra(pipe: &Pipeline) -> Result<Vec<Verdict>> {
    let p = pipe.p();
    let n_alg = 12usize;
    let a = hessenberg::BandedHessenberg::from_toeplitz(&pipe.op, 80);
    let seqs = hessenberg::qp_sequences(&a, n_alg)?;
    let mut out = Vec::new();
    let lemma = hessenberg::pd_sum_identity_residual(&seqs);
    out.push(Verdict::check(
        &format!("c11.lemma-pd-p{p}"),
        "p/D identity exact in rational arithmetic (n <= 12)",
        if lemma.is_zero() { 0.0 } else { 1.0 },
        0.0,
    ));
    let qd = hessenberg::q_equals_d_residual(&seqs);
    out.push(Verdict::check(
        &format!("c11.q-equals-d-p{p}"),
        "q_n = D_n exactly",
        if qd.is_zero() { 0.0 } else { 1.0 },
        0.0,
    ));
    // reflection determinant formula at n = 12 - (12 mod p) residue match
    let n_refl = 12 - (12 % p);
    let k_res = n_refl % p;
    let refl = hessenberg::reflect_truncation(&pipe.op, k_res, n_refl)?;
    let ps = hessenberg::exact_p_sequence(&pipe.op, n_refl);
    let mut refl_ok = true;
    for j in 0..=p {
        let sub = hessenberg::delete_leading(&refl, j);
        let det = hessenberg::charpoly_dense(&sub);
        refl_ok &= det == ps[n_refl - j];
    }
    out.push(Verdict::check(
        &format!("c11.reflection-p{p}"),
        "reflected truncation determinants reproduce P_{n-j} exactly (0 <= j <= p)",
        if refl_ok { 0.0 } else { 1.0 },
        0.0,
    ));
    // Hermite-Pade orders and functional orthogonality, exact
    let mut hp_ok = true;
    let mut orth_exact = true;
    for n in [5usize, 8, 12] {
        let mi = mop::staircase(n, p, &mop::identity_permutation(p))?;
        let rep = hessenberg::hermite_pade_order(&a, &seqs, n, &mi.components)?;
        hp_ok &= rep.passes();
        let res = hessenberg::functional_orthogonality_residual(&a, &seqs, n, &mi.components)?;
        orth_exact &= res.is_zero();
    }
    out.push(Verdict::check(
        &format!("c11.hermite-pade-p{p}"),
        "rational-series vanishing orders reach the staircase counts",
        if hp_ok { 0.0 } else { 1.0 },
        0.0,
    ));
    out.push(Verdict::check(
        &format!("c11.functional-orthogonality-p{p}"),
        "L_j(q_n z^l) = 0 exactly for l below each staircase count",
        if orth_exact { 0.0 } else { 1.0 },
        0.0,
    ));
    Ok(out)
}

/// Criterion 12: second kind functions: formula vs direct quadrature, jump
/// relation, decay exponents and the strong-asymptotics corollary.
pub fn check_second_kind(pipe: &Pipeline) -> Result<Vec<Verdict>> {
    let p = pipe.p();
    let prec = pipe.ctx.prec();
    let m = 8usize;
    let n = m * p;
    let order = 200usize;
    let mut out = Vec::new();
    let ev = widom::SecondKindEvaluator::new(&pipe.op, n, &pipe.rho_tables, order, &pipe.ctx)?;

    // formula vs direct at off-cut points
    let ring = pipe.offcut_ring(10);
    let mut worst_psi: f64 = 0.0;
    let mut worst_phi: f64 = 0.0;
    for l in 1..=p {
        for x in ring.iter() {
            let w = widom::psi_widom(&pipe.op, m, 0, l, x, &pipe.constants, &pipe.ctx)?;
            let d = ev.eval(l, x)?;
            let rel = (w - &d)
                .abs()
                .div_r(&d.abs().max_r(&MpReal::from_f64(1e-30, prec)));
            worst_psi = worst_psi.max(rel.to_f64());
        }
        let x = &ring[1];
        let wphi = widom::phi_widom(&pipe.op, m, 0, l, x, &pipe.ctx)?;
        let dphi =
            widom::phi_direct(&pipe.op, n, l, x, &pipe.nu_tables, order, &pipe.ctx)?;
        let rel = (wphi - &dphi)
            .abs()
            .div_r(&dphi.abs().max_r(&MpReal::from_f64(1e-30, prec)));
        worst_phi = worst_phi.max(rel.to_f64());
    }
    out.push(Verdict::check(
        &format!("c12.psi-routes-p{p}"),
        "Widom-type formula vs iterated quadrature for the second kind functions (m = 8)",
        worst_psi,
        1e-8,
    ));
    out.push(Verdict::check(
        &format!("c12.phi-routes-p{p}"),
        "linear-remainder formula vs direct transform (m = 8)",
        worst_phi,
        1e-8,
    ));

    // jump relation at interior points of each arc
    let mut worst_jump: f64 = 0.0;
    for l in 1..=p {
        let arc = &pipe.arcs[l - 1];
        for t in [0.31f64, 0.52, 0.71] {
            let x = arc.a.add_r(&arc.len().mul_r(&MpReal::from_f64(t, prec)));
            let (plus, minus) = widom::psi_widom_boundary(
                &pipe.op,
                m,
                0,
                l,
                &x,
                &pipe.constants,
                &pipe.ctx,
            )?;
            let jump = minus - &plus;
            let psi_prev = ev.eval(l - 1, &MpComplex::from_real(x.clone()))?;
            let rho_l = pipe.rho_tables[l - 1].density(&x);
            let two_pi_i = MpComplex::new(
                MpReal::zero(prec),
                crate::numerics::real::pi(prec).ldexp(1),
            );
            let expect = two_pi_i.mul_c(&psi_prev).scale(&rho_l);
            let scale = expect.abs().max_r(&jump.abs()).max_r(&MpReal::eps(prec));
            worst_jump = worst_jump.max((jump - &expect).abs().div_r(&scale).to_f64());
        }
    }
    out.push(Verdict::check(
        &format!("c12.jump-p{p}"),
        "boundary jump of the formula equals 2 pi i Psi_(n,l-1) rho_l'",
        worst_jump,
        1e-8,
    ));

    // decay exponents n_l + 1
    let mut worst_decay: f64 = 0.0;
    let mi = mop::staircase(n, p, &mop::identity_permutation(p))?;
    for l in 1..=p {
        let e = widom::psi_decay_exponent_with(&ev, l, &pipe.ctx)?;
        let expect = mi.components[l - 1] as f64 + 1.0;
        worst_decay = worst_decay.max((e - expect).abs());
    }
    out.push(Verdict::check(
        &format!("c12.decay-p{p}"),
        "fitted decay exponent of Psi_(n,l) equals n_l + 1",
        worst_decay,
        0.05,
    ));

    // endpoint boundedness of the formula route
    let mut worst_bound: f64 = 0.0;
    for l in 1..=p {
        let r = widom::endpoint_boundedness_ratio(
            &pipe.op,
            m,
            0,
            l,
            &pipe.arcs[l - 1],
            &pipe.constants,
            &pipe.ctx,
        )?;
        worst_bound = worst_bound.max(r);
    }
    out.push(Verdict::check(
        &format!("c12.boundedness-p{p}"),
        "no endpoint growth beyond 10x the interior median",
        worst_bound,
        10.0,
    ));

    // corollary: geometric decay of the scaled formula error at the
    // predicted root ratios, for Psi (z_(l+1) scaling) and Phi (z_2 scaling)
    let mut worst_fit: f64 = 0.0;
    let x = &ring[0];
    let rs = toeplitz::roots_sorted(&pipe.op, x, &pipe.ctx)?;
    for l in 1..p {
        let expect = rs.roots[l].abs().div_r(&rs.roots[l + 1].abs()).to_f64();
        let vals =
            widom::psi_widom_sequence(&pipe.op, 5..22, 0, l, x, &pipe.constants, &pipe.ctx)?;
        let scaled: Vec<MpComplex> = vals
            .iter()
            .enumerate()
            .map(|(idx, v)| v.mul_c(&rs.roots[l].powi(idx as i64 + 5 + 1)))
            .collect();
        let limit = scaled.last().unwrap().clone();
        let mut pts = Vec::new();
        for (idx, v) in scaled.iter().enumerate().take(scaled.len() - 3) {
            pts.push((idx + 5, (v.clone() - &limit).abs().to_f64()));
        }
        let fitted = fit_ratio(&pts);
        worst_fit = worst_fit.max((fitted - expect).abs() / expect);
    }
    if p >= 2 {
        // Phi route decays at |z_2/z_3|
        let expect = rs.roots[1].abs().div_r(&rs.roots[2].abs()).to_f64();
        let mut scaled = Vec::new();
        for mm in 5..22usize {
            let v = widom::phi_widom(&pipe.op, mm, 0, 1, x, &pipe.ctx)?;
            scaled.push(v.mul_c(&rs.roots[1].powi(mm as i64 + 1)));
        }
        let limit = scaled.last().unwrap().clone();
        let mut pts = Vec::new();
        for (idx, v) in scaled.iter().enumerate().take(scaled.len() - 3) {
            pts.push((idx + 5, (v.clone() - &limit).abs().to_f64()));
        }
        let fitted = fit_ratio(&pts);
        worst_fit = worst_fit.max((fitted - expect).abs() / expect);
        out.push(Verdict::check(
            &format!("c12.corollary-fit-p{p}"),
            "scaled second-kind errors decay at the predicted root ratios within 10%",
            worst_fit,
            0.10,
        ));
    }
    Ok(out)
}

fn fit_ratio(points: &[(usize, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > 0.0 && e.is_finite())
        .map(|(m, e)| (*m as f64, e.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    ((n * sxy - sx * sy) / (n * sxx - sx * sx)).exp()
}
