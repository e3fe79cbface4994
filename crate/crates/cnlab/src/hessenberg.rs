//! Banded Hessenberg machinery: the polynomial sequences attached to any
//! operator with p subdiagonals and a unit superdiagonal, truncation
//! determinants, moment functionals, Hermite-Pade order checks and the
//! anti-diagonal reflection. An exact-rational mode removes tolerance
//! ambiguity from the algebraic identities; floating-point band values
//! convert to rationals exactly (they are dyadic).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::numerics::real::MpReal;
use crate::toeplitz::BlockToeplitzOperator;

type Q = BigRational;
/// Polynomial over Q, ascending coefficients.
type QPoly = Vec<Q>;

fn qp_trim(p: &mut QPoly) {
    while p.last().map(|c| c.is_zero()).unwrap_or(false) {
        p.pop();
    }
}

fn qp_add(a: &QPoly, b: &QPoly) -> QPoly {
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).cloned().unwrap_or_else(Q::zero);
        let y = b.get(i).cloned().unwrap_or_else(Q::zero);
        out.push(x + y);
    }
    qp_trim(&mut out);
    out
}

fn qp_sub(a: &QPoly, b: &QPoly) -> QPoly {
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).cloned().unwrap_or_else(Q::zero);
        let y = b.get(i).cloned().unwrap_or_else(Q::zero);
        out.push(x - y);
    }
    qp_trim(&mut out);
    out
}

fn qp_scale(a: &QPoly, k: &Q) -> QPoly {
    if k.is_zero() {
        return Vec::new();
    }
    a.iter().map(|c| c * k).collect()
}

fn qp_mul_x(a: &QPoly) -> QPoly {
    if a.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(a.len() + 1);
    out.push(Q::zero());
    out.extend(a.iter().cloned());
    out
}


/// Exact conversion of a dyadic floating value.
pub fn rational_from_mpreal(x: &MpReal) -> Q {
    // x = mant * 2^exp; recover via the 40+ digit decimal? No: decompose
    // through to_decimal would round. Use the binary pieces via ldexp jumps.
    // MpReal does not expose mant/exp directly, so rebuild: scale by 2^-e
    // until integral. Cheaper: use msb_exp and shift into an integer.
    if x.is_zero() {
        return Q::zero();
    }
    // shift x left until it is an integer: x * 2^s has zero fractional part
    // once s >= -exp; msb_exp bounds the magnitude so 2*prec bits suffice.
    let prec = x.prec() as i64;
    let s = 2 * prec + 64;
    let scaled = x.ldexp(s);
    // scaled is a (possibly huge) integer-valued MpReal: extract via decimal
    // string round-trip at full integer digits
    let digits = scaled.to_decimal_string(200);
    // parse d.dddgeN into BigInt exactly (the value is integral by
    // construction, so the expansion terminates)
    let q: Q = parse_decimal_rational(&digits);
    q / Q::from_integer(BigInt::from(2).pow(s as u32))
}

fn parse_decimal_rational(s: &str) -> Q {
    let (mant, exp10) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().unwrap()),
        None => (s, 0i64),
    };
    let (sign, rest) = match mant.strip_prefix('-') {
        Some(r) => (-1, r),
        None => (1, mant),
    };
    let (int_part, frac_part) = match rest.find('.') {
        Some(i) => (&rest[..i], &rest[i + 1..]),
        None => (rest, ""),
    };
    let digits: BigInt = format!("{int_part}{frac_part}").parse().unwrap();
    let e = exp10 - frac_part.len() as i64;
    let base = Q::from_integer(digits * sign);
    let ten = Q::from_integer(BigInt::from(10));
    let mut scale = Q::one();
    for _ in 0..e.unsigned_abs() {
        scale = scale * &ten;
    }
    if e >= 0 {
        base * scale
    } else {
        base / scale
    }
}

/// Banded Hessenberg operator in exact arithmetic: rows[n][d] = a_{n, n-d},
/// d = 0..=min(n, p), with an implicit unit superdiagonal.
#[derive(Clone, Debug)]
pub struct BandedHessenberg {
    pub p: usize,
    rows: Vec<Vec<Q>>,
}

impl BandedHessenberg {
    pub fn new(p: usize, rows: Vec<Vec<Q>>) -> Result<Self> {
        for (n, row) in rows.iter().enumerate() {
            if row.len() != n.min(p) + 1 {
                return Err(Error::InvalidConfig(format!(
                    "row {n} must hold {} entries",
                    n.min(p) + 1
                )));
            }
        }
        Ok(BandedHessenberg { p, rows })
    }

    pub fn from_integer_rows(p: usize, rows: Vec<Vec<i64>>) -> Result<Self> {
        Self::new(
            p,
            rows.into_iter()
                .map(|r| r.into_iter().map(|v| Q::from_integer(BigInt::from(v))).collect())
                .collect(),
        )
    }

    /// Truncation rows of a block Toeplitz operator, entries converted
    /// exactly (dyadic values).
    pub fn from_toeplitz(op: &BlockToeplitzOperator, depth: usize) -> Self {
        let p = op.p;
        let rows = (0..depth)
            .map(|n| {
                (0..=n.min(p))
                    .map(|d| rational_from_mpreal(op.b_value(n, n - d)))
                    .collect()
            })
            .collect();
        BandedHessenberg { p, rows }
    }

    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    /// a_{n, n-d}; None outside the band or the stored depth.
    pub fn coefficient(&self, n: usize, d: usize) -> Option<&Q> {
        self.rows.get(n).and_then(|r| r.get(d))
    }

    /// Dense entry (r, c) of the truncated matrix.
    pub fn entry(&self, r: usize, c: usize) -> Q {
        if c == r + 1 {
            return Q::one();
        }
        if c <= r && r - c <= self.p {
            if let Some(v) = self.coefficient(r, r - c) {
                return v.clone();
            }
        }
        Q::zero()
    }

    /// Largest |a| over the stored rows (boundedness record).
    pub fn max_abs(&self) -> Q {
        let mut m = Q::zero();
        for row in &self.rows {
            for v in row {
                if v.abs() > m {
                    m = v.abs();
                }
            }
        }
        m
    }
}

/// The recurrence/determinant polynomial families of an operator.
#[derive(Clone, Debug)]
pub struct KaliaguineSequences {
    /// q_n, degree n
    pub q: Vec<QPoly>,
    /// p_j[j-1][n] = p_n^{(j)}, degree n-1
    pub p_seqs: Vec<Vec<QPoly>>,
    /// D_n built by the truncated-determinant recursion
    pub d: Vec<QPoly>,
    /// d_seqs[j-1][n] = D_n^{(j)}
    pub d_seqs: Vec<Vec<QPoly>>,
}

/// Build q, p^{(j)}, D, D^{(j)} up to degree N.
///
/// The q/p family uses the recurrence with the initial-condition table and
/// the convention a_{i,j} = -1 for 0 <= i <= p-1, j <= -1; the D family uses
/// the same recurrence with determinant initial data, so their agreement is
/// a contentful identity.
pub fn qp_sequences(a: &BandedHessenberg, n_max: usize) -> Result<KaliaguineSequences> {
    let p = a.p;
    if n_max + 1 > a.depth() {
        return Err(Error::InsufficientDepth { available: a.depth(), needed: n_max + 1 });
    }
    let idx = |n: i64| -> usize { (n + p as i64) as usize };
    // histories indexed from n = -p
    let total = n_max as i64 + 1 + p as i64;
    let mut q_hist: Vec<QPoly> = vec![Vec::new(); total as usize];
    let mut p_hist: Vec<Vec<QPoly>> = vec![vec![Vec::new(); total as usize]; p];
    // initial conditions: q_0 = 1; p^{(j)}_{-p+j-1} = 1
    q_hist[idx(0)] = vec![Q::one()];
    for j in 1..=p {
        p_hist[j - 1][idx(-(p as i64) + j as i64 - 1)] = vec![Q::one()];
    }
    // a-lookup including the negative-column convention
    let a_at = |n: usize, col: i64| -> Q {
        if col < 0 {
            if n <= p - 1 {
                return -Q::one();
            }
            return Q::zero();
        }
        a.entry(n, col as usize)
    };
    for n in 0..=n_max as i64 {
        // y_{n+1} = (z - a_{n,n}) y_n - sum_{d=1..p} a_{n,n-d} y_{n-d}
        let nn = n as usize;
        if nn + 1 <= n_max {
            // build later rows only while needed
        }
        let step = |hist: &mut Vec<QPoly>| {
            let zy = qp_mul_x(&hist[idx(n)]);
            let mut next = qp_sub(&zy, &qp_scale(&hist[idx(n)], &a_at(nn, n)));
            for d in 1..=p as i64 {
                let coeff = a_at(nn, n - d);
                if !coeff.is_zero() {
                    next = qp_sub(&next, &qp_scale(&hist[idx(n - d)], &coeff));
                }
            }
            next
        };
        if n < n_max as i64 {
            let nq = step(&mut q_hist);
            q_hist[idx(n + 1)] = nq;
            for j in 0..p {
                let np = step(&mut p_hist[j]);
                p_hist[j][idx(n + 1)] = np;
            }
        }
    }
    let q: Vec<QPoly> = (0..=n_max as i64).map(|n| q_hist[idx(n)].clone()).collect();
    let p_seqs: Vec<Vec<QPoly>> = (0..p)
        .map(|j| (0..=n_max as i64).map(|n| p_hist[j][idx(n)].clone()).collect())
        .collect();

    // D_n by the same recurrence with determinant initial data: D_0 = 1,
    // D_n = 0 for n < 0
    let mut d_hist: Vec<QPoly> = vec![Vec::new(); total as usize];
    d_hist[idx(0)] = vec![Q::one()];
    for n in 0..n_max as i64 {
        let nn = n as usize;
        let zy = qp_mul_x(&d_hist[idx(n)]);
        let mut next = qp_sub(&zy, &qp_scale(&d_hist[idx(n)], &a.entry(nn, nn)));
        for d in 1..=p.min(nn) as i64 {
            let coeff = a.entry(nn, (n - d) as usize);
            if !coeff.is_zero() {
                next = qp_sub(&next, &qp_scale(&d_hist[idx(n - d)], &coeff));
            }
        }
        d_hist[idx(n + 1)] = next;
    }
    let d: Vec<QPoly> = (0..=n_max as i64).map(|n| d_hist[idx(n)].clone()).collect();

    // D_n^{(j)}: zero for n < j, D_j^{(j)} = 1, recurrence for n >= j with
    // the truncated operator rows (entries a_{n,m} with m >= j only)
    let mut d_seqs = Vec::with_capacity(p);
    for j in 1..=p {
        let mut hist: Vec<QPoly> = vec![Vec::new(); total as usize];
        hist[idx(j as i64)] = vec![Q::one()];
        for n in j as i64..n_max as i64 {
            let nn = n as usize;
            let zy = qp_mul_x(&hist[idx(n)]);
            let mut next = qp_sub(&zy, &qp_scale(&hist[idx(n)], &a.entry(nn, nn)));
            for d in 1..=p as i64 {
                let col = n - d;
                if col < j as i64 {
                    break;
                }
                let coeff = a.entry(nn, col as usize);
                if !coeff.is_zero() {
                    next = qp_sub(&next, &qp_scale(&hist[idx(n - d)], &coeff));
                }
            }
            hist[idx(n + 1)] = next;
        }
        d_seqs.push((0..=n_max as i64).map(|n| hist[idx(n)].clone()).collect());
    }

    Ok(KaliaguineSequences { q, p_seqs, d, d_seqs })
}

/// Largest coefficient deviation in the identity
/// p_n^{(j)} = D_n^{(1)} + ... + D_n^{(j)} over all n <= N and j; exact mode
/// returns an exactly-zero rational when the identity holds.
pub fn pd_sum_identity_residual(seqs: &KaliaguineSequences) -> Q {
    let mut worst = Q::zero();
    let p = seqs.p_seqs.len();
    for j in 1..=p {
        for n in 0..seqs.q.len() {
            let mut acc: QPoly = Vec::new();
            for t in 1..=j {
                acc = qp_add(&acc, &seqs.d_seqs[t - 1][n]);
            }
            let diff = qp_sub(&seqs.p_seqs[j - 1][n], &acc);
            for c in &diff {
                if c.abs() > worst {
                    worst = c.abs();
                }
            }
        }
    }
    worst
}

/// Largest coefficient deviation between q_n and D_n.
pub fn q_equals_d_residual(seqs: &KaliaguineSequences) -> Q {
    let mut worst = Q::zero();
    for n in 0..seqs.q.len() {
        let diff = qp_sub(&seqs.q[n], &seqs.d[n]);
        for c in &diff {
            if c.abs() > worst {
                worst = c.abs();
            }
        }
    }
    worst
}

/// Exact dense determinant det(zI - M) by evaluation at size+1 rational
/// points and Lagrange interpolation; independent of every recurrence above.
pub fn charpoly_dense(m: &[Vec<Q>]) -> QPoly {
    let n = m.len();
    let pts: Vec<Q> = (0..=n as i64).map(|t| Q::from_integer(BigInt::from(t))).collect();
    let vals: Vec<Q> = pts
        .iter()
        .map(|z| {
            let mut a: Vec<Vec<Q>> = m
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, v)| if i == j { z - v } else { -v.clone() })
                        .collect()
                })
                .collect();
            exact_det(&mut a)
        })
        .collect();
    // Lagrange interpolation
    let mut out: QPoly = Vec::new();
    for (i, zi) in pts.iter().enumerate() {
        // basis polynomial prod_{j != i} (x - z_j) / (z_i - z_j)
        let mut basis: QPoly = vec![Q::one()];
        let mut denom = Q::one();
        for (j, zj) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            basis = qp_sub(&qp_mul_x(&basis), &qp_scale(&basis, zj));
            denom = denom * (zi - zj);
        }
        out = qp_add(&out, &qp_scale(&basis, &(vals[i].clone() / denom)));
    }
    qp_trim(&mut out);
    out
}

fn exact_det(a: &mut [Vec<Q>]) -> Q {
    let n = a.len();
    let mut det = Q::one();
    for k in 0..n {
        // pivot
        let mut piv = k;
        while piv < n && a[piv][k].is_zero() {
            piv += 1;
        }
        if piv == n {
            return Q::zero();
        }
        if piv != k {
            a.swap(piv, k);
            det = -det;
        }
        let pivot = a[k][k].clone();
        det = det * &pivot;
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let factor = &a[i][k] / &pivot;
            for j in k..n {
                let upd = &a[i][j] - &(&factor * &a[k][j]);
                a[i][j] = upd;
            }
        }
    }
    det
}

/// The moment functionals L_j(z^n) = (A^n v_j, e_0) by banded powers.
pub fn moments(a: &BandedHessenberg, j: usize, n_max: usize) -> Result<Vec<Q>> {
    let p = a.p;
    if j == 0 || j > p {
        return Err(Error::IndexOutOfRange { index: j, max: p });
    }
    let needed = n_max * (p + 1) + 1;
    if a.depth() < needed {
        return Err(Error::InsufficientDepth { available: a.depth(), needed });
    }
    let depth = a.depth();
    // w = v_j
    let mut w = vec![Q::zero(); depth];
    for t in 0..j {
        w[t] = Q::one();
    }
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(w[0].clone());
    for _ in 0..n_max {
        let mut next = vec![Q::zero(); depth];
        for (r, slot) in next.iter_mut().enumerate() {
            // row r of A: a_{r, r-d} for d = 0..=min(r,p), plus superdiag 1
            let mut acc = Q::zero();
            for d in 0..=r.min(p) {
                let v = a.coefficient(r, d).cloned().unwrap_or_else(Q::zero);
                if !v.is_zero() && !w[r - d].is_zero() {
                    acc = acc + v * &w[r - d];
                }
            }
            if r + 1 < depth && !w[r + 1].is_zero() {
                acc = acc + &w[r + 1];
            }
            *slot = acc;
        }
        w = next;
        out.push(w[0].clone());
    }
    Ok(out)
}

/// L_j applied to a polynomial: sum of coefficients against moments.
pub fn functional_apply(moment_seq: &[Q], poly: &QPoly) -> Q {
    let mut acc = Q::zero();
    for (t, c) in poly.iter().enumerate() {
        if !c.is_zero() {
            acc = acc + c * &moment_seq[t];
        }
    }
    acc
}

/// Per-j vanishing-order report of q_n phi_j - p_n^{(j)} in powers of 1/z.
#[derive(Clone, Debug)]
pub struct HermitePadeReport {
    /// first index r >= 1 with a nonvanishing z^-r coefficient (None when
    /// every checked coefficient vanished)
    pub first_nonvanishing: Vec<Option<usize>>,
    /// the orders required by the multi-index: n_j + 1
    pub required: Vec<usize>,
    /// exact match of the polynomial (non-negative power) part
    pub polynomial_part_matches: Vec<bool>,
}

impl HermitePadeReport {
    pub fn passes(&self) -> bool {
        self.polynomial_part_matches.iter().all(|&b| b)
            && self
                .first_nonvanishing
                .iter()
                .zip(&self.required)
                .all(|(f, r)| f.map(|v| v >= *r).unwrap_or(true))
    }
}

/// Expand q_n phi_j - p_n^{(j)} using the moment series of phi_j = g_1+..+g_j
/// and report the first non-vanishing coefficient index per j.
pub fn hermite_pade_order(
    a: &BandedHessenberg,
    seqs: &KaliaguineSequences,
    n: usize,
    components: &[usize],
) -> Result<HermitePadeReport> {
    let p = a.p;
    let q_n = &seqs.q[n];
    let deg_q = q_n.len().saturating_sub(1);
    let mut first = Vec::with_capacity(p);
    let mut required = Vec::with_capacity(p);
    let mut poly_ok = Vec::with_capacity(p);
    for j in 1..=p {
        let n_j = components[j - 1];
        let check_to = n_j + p + 2;
        let mu = moments(a, j, deg_q + check_to + 1)?;
        // polynomial part: coeff of z^s in q_n phi_j is
        // sum_t c_t mu[t - s - 1]; must match p_n^{(j)}
        let pj = &seqs.p_seqs[j - 1][n];
        let mut matches = true;
        for s in 0..deg_q {
            let mut acc = Q::zero();
            for (t, c) in q_n.iter().enumerate() {
                if t >= s + 1 && !c.is_zero() {
                    acc = acc + c * &mu[t - s - 1];
                }
            }
            let want = pj.get(s).cloned().unwrap_or_else(Q::zero);
            if acc != want {
                matches = false;
                break;
            }
        }
        poly_ok.push(matches);
        // negative powers: d_r = sum_t c_t mu[t + r - 1]
        let mut found = None;
        for r in 1..=check_to {
            let mut acc = Q::zero();
            for (t, c) in q_n.iter().enumerate() {
                if !c.is_zero() {
                    acc = acc + c * &mu[t + r - 1];
                }
            }
            if !acc.is_zero() {
                found = Some(r);
                break;
            }
        }
        first.push(found);
        required.push(n_j + 1);
    }
    Ok(HermitePadeReport {
        first_nonvanishing: first,
        required,
        polynomial_part_matches: poly_ok,
    })
}

/// Orthogonality of q_n against the moment functionals: largest |L_j(q_n z^l)|
/// over l < components[j-1]; exactly zero in rational arithmetic when the
/// operator's staircase matches the multi-index.
pub fn functional_orthogonality_residual(
    a: &BandedHessenberg,
    seqs: &KaliaguineSequences,
    n: usize,
    components: &[usize],
) -> Result<Q> {
    let p = a.p;
    let mut worst = Q::zero();
    for j in 1..=p {
        let n_j = components[j - 1];
        if n_j == 0 {
            continue;
        }
        let deg = seqs.q[n].len() + n_j;
        let mu = moments(a, j, deg)?;
        let mut poly = seqs.q[n].clone();
        for l in 0..n_j {
            if l > 0 {
                poly = qp_mul_x(&poly);
            }
            let v = functional_apply(&mu, &poly);
            if v.abs() > worst {
                worst = v.abs();
            }
        }
    }
    Ok(worst)
}

/// Scalar entry of the semi-infinite operator in exact arithmetic.
fn toeplitz_entry_q(op: &BlockToeplitzOperator, r: usize, c: usize) -> Q {
    let p = op.p;
    if c == r + 1 {
        Q::one()
    } else if c <= r && r - c <= p {
        rational_from_mpreal(op.b_value(r, c))
    } else {
        Q::zero()
    }
}

/// Anti-diagonal reflection of the truncation: the n x n block-tridiagonal
/// matrix whose blocks are the anti-transposed blocks of the k-shifted
/// operator. Entrywise this is the anti-transpose of the truncation,
/// (r, c) -> T(n-1-c, n-1-r). Fails unless n = mp + k.
pub fn reflect_truncation(
    op: &BlockToeplitzOperator,
    k: usize,
    n: usize,
) -> Result<Vec<Vec<Q>>> {
    let p = op.p;
    if n % p != k % p {
        return Err(Error::ResidueMismatch { n, k, p });
    }
    let mut out = vec![vec![Q::zero(); n]; n];
    for (big_r, row) in out.iter_mut().enumerate() {
        for (big_c, slot) in row.iter_mut().enumerate() {
            *slot = toeplitz_entry_q(op, n - 1 - big_c, n - 1 - big_r);
        }
    }
    Ok(out)
}

/// The anti-transposed block of the k-shifted operator at block offset
/// delta in {-1, 0, 1}: tilde-B[r][c] = B_delta^{(k)}[p-1-c][p-1-r].
pub fn reflected_block(op: &BlockToeplitzOperator, k: usize, delta: i64) -> Vec<Vec<Q>> {
    let p = op.p;
    let row0 = k + if delta > 0 { p } else { 0 };
    let col0 = k + if delta < 0 { p } else { 0 };
    (0..p)
        .map(|r| {
            (0..p)
                .map(|c| toeplitz_entry_q(op, row0 + (p - 1 - c), col0 + (p - 1 - r)))
                .collect()
        })
        .collect()
}

/// Submatrix after deleting the first j rows and columns.
pub fn delete_leading(m: &[Vec<Q>], j: usize) -> Vec<Vec<Q>> {
    m.iter().skip(j).map(|row| row.iter().skip(j).cloned().collect()).collect()
}

/// Exact P_n coefficient vectors of the operator by the recurrence in
/// rational arithmetic.
pub fn exact_p_sequence(op: &BlockToeplitzOperator, n_max: usize) -> Vec<QPoly> {
    let p = op.p;
    let mut history: Vec<QPoly> = vec![vec![Q::one()]];
    for m in 0..n_max {
        let zp = qp_mul_x(&history[m]);
        let mut next = qp_sub(
            &zp,
            &qp_scale(&history[m], &rational_from_mpreal(op.b_value(m, m))),
        );
        for d in 1..=m.min(p) {
            next = qp_sub(
                &next,
                &qp_scale(
                    &history[m - d],
                    &rational_from_mpreal(op.b_value(m, m - d)),
                ),
            );
        }
        history.push(next);
    }
    history
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_integer_operator(p: usize, depth: usize, seed: u64) -> BandedHessenberg {
        // deterministic small-integer band via an LCG
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % 7) as i64 - 3
        };
        let rows: Vec<Vec<i64>> = (0..depth)
            .map(|n| {
                (0..=n.min(p))
                    .map(|d| {
                        let v = next();
                        if d == p && v == 0 {
                            1
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        BandedHessenberg::from_integer_rows(p, rows).unwrap()
    }

    #[test]
    fn initial_conditions_table() {
        let a = random_integer_operator(3, 8, 11);
        let seqs = qp_sequences(&a, 4).unwrap();
        // q_0 = 1, p_0^{(j)} = 0
        assert_eq!(seqs.q[0], vec![Q::one()]);
        for j in 0..3 {
            assert!(seqs.p_seqs[j][0].is_empty());
        }
        // degrees: deg q_n = n, deg p_n^{(j)} = n - 1
        for n in 1..=4usize {
            assert_eq!(seqs.q[n].len(), n + 1);
            for j in 0..3 {
                assert_eq!(seqs.p_seqs[j][n].len(), n, "p^{}_{} degree", j + 1, n);
            }
        }
    }

    #[test]
    fn q_equals_d_and_lemma_identity_exact() {
        // 5-band random integer operator, identities exactly zero
        let a = random_integer_operator(5, 14, 7);
        let seqs = qp_sequences(&a, 12).unwrap();
        assert!(q_equals_d_residual(&seqs).is_zero());
        assert!(pd_sum_identity_residual(&seqs).is_zero());
    }

    #[test]
    fn d_sequences_match_dense_determinants() {
        let p = 2;
        let a = random_integer_operator(p, 10, 23);
        let n = 8usize;
        let seqs = qp_sequences(&a, n).unwrap();
        // dense truncation of A
        let dense: Vec<Vec<Q>> = (0..n)
            .map(|r| (0..n).map(|c| a.entry(r, c)).collect())
            .collect();
        // D_n = det(zI_n - A_n)
        let dn = charpoly_dense(&dense);
        assert_eq!(dn, seqs.d[n]);
        for j in 1..=p {
            let sub = delete_leading(&dense, j);
            let dj = charpoly_dense(&sub);
            assert_eq!(dj, seqs.d_seqs[j - 1][n], "D^{j} mismatch");
        }
    }

    #[test]
    fn catalan_moments_of_chebyshev_operator() {
        // p=1 operator with zero diagonal and unit subdiagonal
        let rows: Vec<Vec<i64>> = (0..41)
            .map(|n| if n == 0 { vec![0] } else { vec![0, 1] })
            .collect();
        let a = BandedHessenberg::from_integer_rows(1, rows).unwrap();
        let mu = moments(&a, 1, 8).unwrap();
        let expect = [1i64, 0, 1, 0, 2, 0, 5, 0, 14];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(mu[i], Q::from_integer(BigInt::from(*e)), "moment {i}");
        }
    }

    #[test]
    fn moments_depth_guard() {
        let a = random_integer_operator(2, 5, 3);
        assert!(matches!(
            moments(&a, 1, 10),
            Err(Error::InsufficientDepth { .. })
        ));
    }

    #[test]
    fn hermite_pade_chebyshev_p1() {
        let rows: Vec<Vec<i64>> = (0..61)
            .map(|n| if n == 0 { vec![0] } else { vec![0, 1] })
            .collect();
        let a = BandedHessenberg::from_integer_rows(1, rows).unwrap();
        let seqs = qp_sequences(&a, 6).unwrap();
        let rep = hermite_pade_order(&a, &seqs, 4, &[4]).unwrap();
        assert!(rep.polynomial_part_matches[0]);
        match rep.first_nonvanishing[0] {
            None => {}
            Some(r) => assert!(r >= 5, "vanishing order {r} < 5"),
        }
        assert!(rep.passes());
    }

    #[test]
    fn functional_orthogonality_exact_p2() {
        let p = 2;
        let a = random_integer_operator(p, 64, 91);
        let n = 7usize;
        let seqs = qp_sequences(&a, n).unwrap();
        let mi = crate::mop::staircase(n, p, &[1, 2]).unwrap();
        let res = functional_orthogonality_residual(&a, &seqs, n, &mi.components).unwrap();
        assert!(res.is_zero(), "residual {res}");
    }

    #[test]
    fn hp_orders_p2_operator() {
        let p = 2;
        let a = random_integer_operator(p, 64, 91);
        let n = 7usize;
        let seqs = qp_sequences(&a, n).unwrap();
        let mi = crate::mop::staircase(n, p, &[1, 2]).unwrap();
        assert_eq!(mi.components, vec![4, 3]);
        let rep = hermite_pade_order(&a, &seqs, n, &mi.components).unwrap();
        assert!(rep.passes(), "orders {:?}", rep.first_nonvanishing);
    }

    #[test]
    fn reflection_reproduces_p_sequence() {
        // p = 2 dyadic-band operator from the relation manifold
        let prec = 256;
        let d = vec![MpReal::from_f64(0.125, prec), MpReal::from_f64(-0.375, prec)];
        let beta = MpReal::from_f64(0.75, prec);
        let seeds = vec![MpReal::from_f64(0.25, prec)];
        let band = crate::mop::relation_band(&d, &beta, &seeds, prec);
        let op = BlockToeplitzOperator::from_band(2, band, prec).unwrap();
        let n = 6usize;
        let k = 0usize;
        let refl = reflect_truncation(&op, k, n).unwrap();
        // the reflection must coincide with the tiling by the
        // anti-transposed blocks of the k-shifted operator
        for r in 0..n {
            for c in 0..n {
                let bi = r / 2;
                let bj = c / 2;
                let expected = if bi.abs_diff(bj) > 1 {
                    Q::zero()
                } else {
                    let block = reflected_block(&op, k, bi as i64 - bj as i64);
                    block[r % 2][c % 2].clone()
                };
                assert_eq!(refl[r][c], expected, "entry ({r},{c})");
            }
        }
        // determinant identity: det(zI_{n-j} - refl^{[1..j]}) = P_{n-j}
        let ps = exact_p_sequence(&op, n);
        for j in 0..=2usize {
            let sub = delete_leading(&refl, j);
            let det = charpoly_dense(&sub);
            assert_eq!(det, ps[n - j], "P_{} mismatch", n - j);
        }
        // residue guard
        assert!(matches!(
            reflect_truncation(&op, 1, 6),
            Err(Error::ResidueMismatch { .. })
        ));
    }
}
