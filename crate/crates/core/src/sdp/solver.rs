//! Primal-dual interior-point method on the homogeneous self-dual embedding.
//!
//! Unknowns are the PSD blocks `X_k`, the free vector `z`, the multipliers
//! `y`, the dual slacks `S_k` and the homogenizing pair `(τ, κ)`. Each
//! iteration uses Nesterov-Todd scaling, a Mehrotra predictor-corrector step
//! and a Schur-complement solve that factors the per-block parts of
//! `A W Aᵀ` separately and couples them through the free columns.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::problem::{SdpProblem, Var};
use super::{Residuals, SdpError, SdpSolution, SdpStatus, Settings};

const STEP_FRACTION: f64 = 0.98;

/// Row of the constraint operator restricted to one block, with the
/// symmetric matrix expanded to both triangles.
#[derive(Debug, Clone)]
struct BlockRow {
    row: usize,
    entries: Vec<(usize, usize, f64)>,
}

struct Data {
    dims: Vec<usize>,
    m: usize,
    nf: usize,
    block_rows: Vec<Vec<BlockRow>>,
    f: DMatrix<f64>,
    b: DVector<f64>,
    c_blocks: Vec<DMatrix<f64>>,
    c_free: DVector<f64>,
    /// Row index sets coupled through shared blocks, and the rows touching no block.
    groups: Vec<Vec<usize>>,
    free_rows: Vec<usize>,
}

impl Data {
    fn new(prob: &SdpProblem) -> Self {
        let dims = prob.block_dims.clone();
        let m = prob.rows.len();
        let nf = prob.n_free;
        let mut block_rows: Vec<Vec<BlockRow>> = vec![Vec::new(); dims.len()];
        let mut f = DMatrix::zeros(m, nf);
        let mut touches: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (i, row) in prob.rows.iter().enumerate() {
            let mut per_block: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); dims.len()];
            for &(v, a) in row {
                match v {
                    Var::Block { block, row: p, col: q } => {
                        if p == q {
                            per_block[block].push((p, p, a));
                        } else {
                            per_block[block].push((p, q, 0.5 * a));
                            per_block[block].push((q, p, 0.5 * a));
                        }
                    }
                    Var::Free(k) => f[(i, k)] += a,
                }
            }
            for (k, entries) in per_block.into_iter().enumerate() {
                if !entries.is_empty() {
                    touches[i].push(k);
                    block_rows[k].push(BlockRow { row: i, entries });
                }
            }
        }

        // union-find over blocks so that rows sharing a block land in one group
        let mut parent: Vec<usize> = (0..dims.len()).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for t in &touches {
            for w in t.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let mut group_of_root: Vec<Option<usize>> = vec![None; dims.len()];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut free_rows = Vec::new();
        for (i, t) in touches.iter().enumerate() {
            match t.first() {
                None => free_rows.push(i),
                Some(&blk) => {
                    let r = find(&mut parent, blk);
                    let g = *group_of_root[r].get_or_insert_with(|| {
                        groups.push(Vec::new());
                        groups.len() - 1
                    });
                    groups[g].push(i);
                }
            }
        }

        let mut c_blocks: Vec<DMatrix<f64>> = dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        let mut c_free = DVector::zeros(nf);
        for &(v, a) in &prob.objective {
            match v {
                Var::Block { block, row, col } => {
                    if row == col {
                        c_blocks[block][(row, row)] += a;
                    } else {
                        c_blocks[block][(row, col)] += 0.5 * a;
                        c_blocks[block][(col, row)] += 0.5 * a;
                    }
                }
                Var::Free(k) => c_free[k] += a,
            }
        }

        Data {
            dims,
            m,
            nf,
            block_rows,
            f,
            b: DVector::from_vec(prob.rhs.clone()),
            c_blocks,
            c_free,
            groups,
            free_rows,
        }
    }

    /// `A(X) + F z`.
    fn apply_a(&self, xs: &[DMatrix<f64>], z: Option<&DVector<f64>>) -> DVector<f64> {
        let mut out = match z {
            Some(z) => &self.f * z,
            None => DVector::zeros(self.m),
        };
        for (k, rows) in self.block_rows.iter().enumerate() {
            let x = &xs[k];
            for br in rows {
                out[br.row] += br.entries.iter().map(|&(p, q, a)| a * x[(p, q)]).sum::<f64>();
            }
        }
        out
    }

    /// Block part of `Aᵀ y`.
    fn apply_at(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        for (k, rows) in self.block_rows.iter().enumerate() {
            for br in rows {
                let yi = y[br.row];
                if yi == 0.0 {
                    continue;
                }
                for &(p, q, a) in &br.entries {
                    out[k][(p, q)] += a * yi;
                }
            }
        }
        out
    }
}

/// Nesterov-Todd scaling of one block: `X = G Λ Gᵀ`, `S = G⁻ᵀ Λ G⁻¹`.
struct NtScaling {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    w: DMatrix<f64>,
    lam: DVector<f64>,
}

fn robust_cholesky(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    if let Some(ch) = sym.clone().cholesky() {
        return Some(ch.l());
    }
    let scale = sym.diagonal().amax().max(1e-300);
    let mut shift = 1e-14 * scale;
    for _ in 0..8 {
        let shifted = &sym + DMatrix::identity(sym.nrows(), sym.ncols()) * shift;
        if let Some(ch) = shifted.cholesky() {
            return Some(ch.l());
        }
        shift *= 100.0;
    }
    None
}

impl NtScaling {
    fn new(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Self> {
        let lx = robust_cholesky(x)?;
        let ls = robust_cholesky(s)?;
        let prod = ls.transpose() * &lx;
        let svd = prod.svd(true, true);
        let u = svd.u?;
        let vt = svd.v_t?;
        let lam = svd.singular_values;
        if lam.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return None;
        }
        let inv_sqrt = DMatrix::from_diagonal(&lam.map(|l| 1.0 / l.sqrt()));
        let g = &lx * vt.transpose() * &inv_sqrt;
        let ginv = &inv_sqrt * u.transpose() * ls.transpose();
        let w = &g * g.transpose();
        Some(NtScaling { g, ginv, w, lam })
    }

    fn scale_primal(&self, dx: &DMatrix<f64>) -> DMatrix<f64> {
        &self.ginv * dx * self.ginv.transpose()
    }

    fn scale_dual(&self, ds: &DMatrix<f64>) -> DMatrix<f64> {
        self.g.transpose() * ds * &self.g
    }

    /// Solves `Λ ∘ u = r` for symmetric `u`.
    fn lyap_solve(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.lam.len();
        DMatrix::from_fn(n, n, |i, j| 2.0 * r[(i, j)] / (self.lam[i] + self.lam[j]))
    }

    /// Largest step keeping `Λ + α·d` positive semidefinite.
    fn max_step(&self, d_scaled: &DMatrix<f64>) -> f64 {
        let n = self.lam.len();
        let inv = self.lam.map(|l| 1.0 / l.sqrt());
        let t = DMatrix::from_fn(n, n, |i, j| inv[i] * d_scaled[(i, j)] * inv[j]);
        let t = (&t + t.transpose()) * 0.5;
        let min_eig = t.symmetric_eigenvalues().min();
        if min_eig < 0.0 {
            -1.0 / min_eig
        } else {
            f64::INFINITY
        }
    }
}

fn sym_prod(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let ab = a * b;
    (&ab + ab.transpose()) * 0.5
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// Factored Newton system
/// `[H F; Fᵀ 0] [dy; dz] = [r; r_z]` with `H = A W Aᵀ`.
struct Kkt {
    chol_groups: Vec<(Vec<usize>, nalgebra::Cholesky<f64, nalgebra::Dyn>)>,
    /// `H_g⁻¹ F_g` for every group.
    hinv_f: Vec<DMatrix<f64>>,
    f_groups: Vec<DMatrix<f64>>,
    reduced: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    h_full: Vec<DMatrix<f64>>,
}

fn schur_block(data: &Data, scal: &[NtScaling], rows: &[usize]) -> DMatrix<f64> {
    let mg = rows.len();
    let mut local = vec![usize::MAX; data.m];
    for (li, &r) in rows.iter().enumerate() {
        local[r] = li;
    }
    let mut h = DMatrix::zeros(mg, mg);
    for (k, brs) in data.block_rows.iter().enumerate() {
        let w = &scal[k].w;
        let n = data.dims[k];
        let mine: Vec<&BlockRow> = brs.iter().filter(|br| local[br.row] != usize::MAX).collect();
        if mine.is_empty() {
            continue;
        }
        let mut bj = DMatrix::zeros(n, n);
        for (jj, brj) in mine.iter().enumerate() {
            // W A_j W
            bj.fill(0.0);
            for &(r, s, a) in &brj.entries {
                for p in 0..n {
                    let wpr = w[(p, r)] * a;
                    if wpr == 0.0 {
                        continue;
                    }
                    for q in 0..n {
                        bj[(p, q)] += wpr * w[(s, q)];
                    }
                }
            }
            let lj = local[brj.row];
            for bri in mine.iter().take(jj + 1) {
                let li = local[bri.row];
                let v: f64 = bri.entries.iter().map(|&(p, q, a)| a * bj[(p, q)]).sum();
                h[(li, lj)] += v;
                if li != lj {
                    h[(lj, li)] += v;
                }
            }
        }
    }
    h
}

impl Kkt {
    fn factor(data: &Data, scal: &[NtScaling]) -> Option<Self> {
        let mut chol_groups = Vec::with_capacity(data.groups.len());
        let mut hinv_f = Vec::with_capacity(data.groups.len());
        let mut h_full = Vec::with_capacity(data.groups.len());
        let mut f_groups = Vec::with_capacity(data.groups.len());
        let nf = data.nf;
        let mut s = DMatrix::zeros(nf, nf);
        for rows in &data.groups {
            let h = schur_block(data, scal, rows);
            let scale = h.diagonal().amax().max(1e-300);
            let mut shift = 0.0;
            let chol = loop {
                let hs = if shift > 0.0 {
                    &h + DMatrix::identity(h.nrows(), h.ncols()) * shift
                } else {
                    h.clone()
                };
                if let Some(c) = hs.cholesky() {
                    break c;
                }
                shift = if shift == 0.0 { 1e-13 * scale } else { shift * 100.0 };
                if shift > 1e-3 * scale {
                    return None;
                }
            };
            let fg = data_f_rows(data, rows);
            let hf = chol.solve(&fg);
            if nf > 0 {
                s += fg.transpose() * &hf;
            }
            chol_groups.push((rows.clone(), chol));
            hinv_f.push(hf);
            f_groups.push(fg);
            h_full.push(h);
        }
        let m0 = data.free_rows.len();
        let reduced = if nf + m0 > 0 {
            let dim = nf + m0;
            let mut r = DMatrix::zeros(dim, dim);
            let reg = 1e-11 * (1.0 + s.diagonal().amax());
            for i in 0..nf {
                for j in 0..nf {
                    r[(i, j)] = -s[(i, j)];
                }
                r[(i, i)] -= reg;
            }
            for (a, &row) in data.free_rows.iter().enumerate() {
                for j in 0..nf {
                    r[(nf + a, j)] = data.f[(row, j)];
                    r[(j, nf + a)] = data.f[(row, j)];
                }
                r[(nf + a, nf + a)] = reg;
            }
            Some(r.lu())
        } else {
            None
        };
        Some(Kkt {
            chol_groups,
            hinv_f,
            f_groups,
            reduced,
            h_full,
        })
    }

    fn solve_once(&self, data: &Data, ry: &DVector<f64>, rz: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let nf = data.nf;
        let m0 = data.free_rows.len();
        let mut hinv_r: Vec<DVector<f64>> = Vec::with_capacity(self.chol_groups.len());
        let mut rhs_z = rz.clone();
        for (g, (rows, chol)) in self.chol_groups.iter().enumerate() {
            let rg = DVector::from_fn(rows.len(), |i, _| ry[rows[i]]);
            let hr = chol.solve(&rg);
            if nf > 0 {
                rhs_z -= self.f_groups[g].transpose() * &hr;
            }
            hinv_r.push(hr);
        }
        let mut dz = DVector::zeros(nf);
        let mut dy = DVector::zeros(data.m);
        if let Some(lu) = &self.reduced {
            let mut rhs = DVector::zeros(nf + m0);
            rhs.rows_mut(0, nf).copy_from(&rhs_z);
            for (a, &row) in data.free_rows.iter().enumerate() {
                rhs[nf + a] = ry[row];
            }
            if let Some(sol) = lu.solve(&rhs) {
                dz.copy_from(&sol.rows(0, nf));
                for (a, &row) in data.free_rows.iter().enumerate() {
                    dy[row] = sol[nf + a];
                }
            }
        }
        for (g, (rows, _)) in self.chol_groups.iter().enumerate() {
            let dyg = if nf > 0 {
                &hinv_r[g] - &self.hinv_f[g] * &dz
            } else {
                hinv_r[g].clone()
            };
            for (i, &r) in rows.iter().enumerate() {
                dy[r] = dyg[i];
            }
        }
        (dy, dz)
    }

    /// Residual of the unregularized system.
    fn residual(&self, data: &Data, dy: &DVector<f64>, dz: &DVector<f64>, ry: &DVector<f64>, rz: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let mut res_y = ry - &data.f * dz;
        for (g, (rows, _)) in self.chol_groups.iter().enumerate() {
            let dyg = DVector::from_fn(rows.len(), |i, _| dy[rows[i]]);
            let hy = &self.h_full[g] * dyg;
            for (i, &r) in rows.iter().enumerate() {
                res_y[r] -= hy[i];
            }
        }
        let res_z = rz - data.f.transpose() * dy;
        (res_y, res_z)
    }

    fn solve(&self, data: &Data, ry: &DVector<f64>, rz: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (mut dy, mut dz) = self.solve_once(data, ry, rz);
        for _ in 0..3 {
            let (ey, ez) = self.residual(data, &dy, &dz, ry, rz);
            let err = ey.amax().max(ez.amax());
            if err <= 1e-14 * (1.0 + ry.amax().max(rz.amax())) {
                break;
            }
            let (cy, cz) = self.solve_once(data, &ey, &ez);
            dy += cy;
            dz += cz;
        }
        (dy, dz)
    }
}

fn data_f_rows(data: &Data, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), data.nf, |i, j| data.f[(rows[i], j)])
}

#[derive(Clone)]
struct Iterate {
    x: Vec<DMatrix<f64>>,
    s: Vec<DMatrix<f64>>,
    z: DVector<f64>,
    y: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
    dz: DVector<f64>,
    dy: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

#[derive(Clone, Copy)]
struct Measures {
    pres: f64,
    dres: f64,
    gap: f64,
    pobj: f64,
    dobj: f64,
    pinf: Option<f64>,
    dinf: Option<f64>,
}

fn measure(data: &Data, it: &Iterate) -> Measures {
    let tau = it.tau;
    let bnorm = 1.0 + data.b.amax();
    let cnorm = 1.0
        + data
            .c_blocks
            .iter()
            .map(|c| c.amax())
            .fold(data.c_free.amax(), f64::max);
    let ax = data.apply_a(&it.x, Some(&it.z));
    let pres = (&ax / tau - &data.b).amax() / bnorm;
    let aty = data.apply_at(&it.y);
    let mut dres: f64 = 0.0;
    let mut ray_res: f64 = 0.0;
    for k in 0..data.dims.len() {
        let r = (&aty[k] + &it.s[k]) / tau - &data.c_blocks[k];
        dres = dres.max(r.amax());
        ray_res = ray_res.max((&aty[k] + &it.s[k]).amax());
    }
    let fty = data.f.transpose() * &it.y;
    if data.nf > 0 {
        dres = dres.max((&fty / tau - &data.c_free).amax());
        ray_res = ray_res.max(fty.amax());
    }
    dres /= cnorm;
    let cx: f64 = data
        .c_blocks
        .iter()
        .zip(&it.x)
        .map(|(c, x)| inner(c, x))
        .sum::<f64>()
        + data.c_free.dot(&it.z);
    let by = data.b.dot(&it.y);
    let pobj = cx / tau;
    let dobj = by / tau;
    let compl: f64 = it.x.iter().zip(&it.s).map(|(x, s)| inner(x, s)).sum::<f64>() / (tau * tau);
    let gap = (pobj - dobj).abs().max(compl.abs()) / (1.0 + pobj.abs().max(dobj.abs()));
    let pinf = if by > 0.0 { Some(ray_res / by) } else { None };
    let dinf = if cx < 0.0 {
        Some(data.apply_a(&it.x, Some(&it.z)).amax() / -cx)
    } else {
        None
    };
    Measures {
        pres,
        dres,
        gap,
        pobj,
        dobj,
        pinf,
        dinf,
    }
}

/// Solves `prob` with the homogeneous self-dual interior-point method.
pub fn solve(prob: &SdpProblem, settings: &Settings) -> Result<SdpSolution, SdpError> {
    prob.validate()?;
    let start = Instant::now();
    let data = Data::new(prob);
    let nu: f64 = data.dims.iter().sum::<usize>() as f64;

    let mut it = Iterate {
        x: data.dims.iter().map(|&d| DMatrix::identity(d, d)).collect(),
        s: data.dims.iter().map(|&d| DMatrix::identity(d, d)).collect(),
        z: DVector::zeros(data.nf),
        y: DVector::zeros(data.m),
        tau: 1.0,
        kappa: 1.0,
    };

    let tol = settings.tol;
    let mut mu_history = Vec::new();
    let mut iterations = 0;
    let mut stalled = false;
    let mut meas;
    // last iterate that met the loose tolerance, kept in case later
    // iterations degrade on nearly ill-posed problems
    let mut fallback: Option<(Iterate, Measures)> = None;
    let loose = settings_loose(tol);

    loop {
        let mu = (it.x.iter().zip(&it.s).map(|(x, s)| inner(x, s)).sum::<f64>() + it.tau * it.kappa)
            / (nu + 1.0);
        mu_history.push(mu);
        meas = measure(&data, &it);
        if !(mu.is_finite() && it.tau > 0.0 && it.kappa > 0.0) {
            stalled = true;
            break;
        }
        if converged(&meas, &it, tol) || infeasible(&meas, &it, tol).is_some() {
            break;
        }
        if loose_status(&meas, &it, loose).is_some() {
            fallback = Some((it.clone(), meas));
        }
        // complementarity underflow: no further progress is possible
        if mu < 1e-20 * mu_history[0] {
            break;
        }
        if iterations >= settings.max_iter || stalled {
            break;
        }
        iterations += 1;

        let scal: Option<Vec<NtScaling>> = it
            .x
            .iter()
            .zip(&it.s)
            .map(|(x, s)| NtScaling::new(x, s))
            .collect();
        let Some(scal) = scal else {
            stalled = true;
            continue;
        };
        let Some(kkt) = Kkt::factor(&data, &scal) else {
            stalled = true;
            continue;
        };

        // residuals
        let r_p = &data.b * it.tau - data.apply_a(&it.x, Some(&it.z));
        let aty = data.apply_at(&it.y);
        let r_d: Vec<DMatrix<f64>> = (0..data.dims.len())
            .map(|k| &data.c_blocks[k] * it.tau - &aty[k] - &it.s[k])
            .collect();
        let r_df = &data.c_free * it.tau - data.f.transpose() * &it.y;
        let cx: f64 = data.c_blocks.iter().zip(&it.x).map(|(c, x)| inner(c, x)).sum::<f64>()
            + data.c_free.dot(&it.z);
        let r_g = it.kappa + cx - data.b.dot(&it.y);

        // dτ coefficient system, shared by predictor and corrector
        let wcw: Vec<DMatrix<f64>> = (0..data.dims.len())
            .map(|k| &scal[k].w * &data.c_blocks[k] * &scal[k].w)
            .collect();
        let a_wcw = data.apply_a(&wcw, None);
        let h1 = &data.b + &a_wcw;
        let (y1, z1) = kkt.solve(&data, &h1, &data.c_free);
        let c_wcw: f64 = data.c_blocks.iter().zip(&wcw).map(|(c, w)| inner(c, w)).sum();
        let b_minus_a = &data.b - &a_wcw;

        let direction = |eta: f64, sigma_mu: f64, corr: Option<&Direction>| -> Direction {
            let nb = data.dims.len();
            let mut d_mats = Vec::with_capacity(nb);
            for k in 0..nb {
                let lam = &scal[k].lam;
                let n = lam.len();
                let mut rc = DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        sigma_mu - lam[i] * lam[i]
                    } else {
                        0.0
                    }
                });
                if let Some(a) = corr {
                    let dxs = scal[k].scale_primal(&a.dx[k]);
                    let dss = scal[k].scale_dual(&a.ds[k]);
                    rc -= sym_prod(&dxs, &dss);
                }
                let u = scal[k].lyap_solve(&rc);
                let gug = &scal[k].g * u * scal[k].g.transpose();
                let wrw = &scal[k].w * &r_d[k] * &scal[k].w;
                d_mats.push(gug - wrw * eta);
            }
            let r_tk = sigma_mu - it.tau * it.kappa - corr.map_or(0.0, |a| a.dtau * a.dkappa);
            let rhs_p = &r_p * eta - data.apply_a(&d_mats, None);
            let rhs_f = &r_df * eta;
            let (y2, z2) = kkt.solve(&data, &rhs_p, &rhs_f);
            let c_d: f64 = data.c_blocks.iter().zip(&d_mats).map(|(c, d)| inner(c, d)).sum();
            let denom = b_minus_a.dot(&y1) + c_wcw - data.c_free.dot(&z1) + it.kappa / it.tau;
            let numer = eta * r_g + r_tk / it.tau - b_minus_a.dot(&y2) + c_d + data.c_free.dot(&z2);
            let dtau = numer / denom;
            let dy = &y2 + &y1 * dtau;
            let dz = &z2 + &z1 * dtau;
            let atdy = data.apply_at(&dy);
            let mut dx = Vec::with_capacity(nb);
            let mut ds = Vec::with_capacity(nb);
            for k in 0..nb {
                let t = &atdy[k] - &data.c_blocks[k] * dtau;
                let mut dxk = &scal[k].w * t * &scal[k].w + &d_mats[k];
                symmetrize(&mut dxk);
                let mut dsk = &r_d[k] * eta + &data.c_blocks[k] * dtau - &atdy[k];
                symmetrize(&mut dsk);
                dx.push(dxk);
                ds.push(dsk);
            }
            let dkappa = (r_tk - it.kappa * dtau) / it.tau;
            Direction {
                dx,
                ds,
                dz,
                dy,
                dtau,
                dkappa,
            }
        };

        let step_len = |d: &Direction| -> f64 {
            let mut a = f64::INFINITY;
            for k in 0..data.dims.len() {
                a = a.min(scal[k].max_step(&scal[k].scale_primal(&d.dx[k])));
                a = a.min(scal[k].max_step(&scal[k].scale_dual(&d.ds[k])));
            }
            if d.dtau < 0.0 {
                a = a.min(-it.tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-it.kappa / d.dkappa);
            }
            a
        };

        let aff = direction(1.0, 0.0, None);
        let alpha_aff = step_len(&aff).min(1.0);
        let sigma = (1.0 - alpha_aff).max(0.0).powi(3);
        let dir = direction(1.0 - sigma, sigma * mu, Some(&aff));
        let alpha = (STEP_FRACTION * step_len(&dir)).min(1.0);
        if !alpha.is_finite() || alpha < 1e-12 {
            stalled = true;
            continue;
        }

        for k in 0..data.dims.len() {
            it.x[k] += &dir.dx[k] * alpha;
            it.s[k] += &dir.ds[k] * alpha;
            symmetrize(&mut it.x[k]);
            symmetrize(&mut it.s[k]);
        }
        it.z += &dir.dz * alpha;
        it.y += &dir.dy * alpha;
        it.tau += dir.dtau * alpha;
        it.kappa += dir.dkappa * alpha;

        if !(it.tau.is_finite() && it.kappa.is_finite()) {
            stalled = true;
        }
        // rescale the homogeneous iterate when it drifts far from unit scale
        let scale = it.tau.max(it.kappa);
        if scale > 1e6 || scale < 1e-6 {
            let s = 1.0 / scale;
            for k in 0..data.dims.len() {
                it.x[k] *= s;
                it.s[k] *= s;
            }
            it.z *= s;
            it.y *= s;
            it.tau *= s;
            it.kappa *= s;
        }
    }

    let done = converged(&meas, &it, tol) || infeasible(&meas, &it, tol).is_some();
    if stalled || !done {
        if let Some((best, m)) = fallback {
            if !(meas.pres.is_finite() && loose_status(&meas, &it, loose).is_some()) {
                it = best;
                meas = m;
            }
        }
    }
    Ok(finish(&data, it, meas, tol, iterations, mu_history, start))
}

fn converged(m: &Measures, it: &Iterate, tol: f64) -> bool {
    m.pres <= tol && m.dres <= tol && m.gap <= tol && it.tau > 100.0 * it.kappa
}

fn infeasible(m: &Measures, it: &Iterate, tol: f64) -> Option<SdpStatus> {
    if it.kappa > it.tau {
        if m.pinf.is_some_and(|r| r <= tol) {
            return Some(SdpStatus::PrimalInfeasible);
        }
        if m.dinf.is_some_and(|r| r <= tol) {
            return Some(SdpStatus::DualInfeasible);
        }
    }
    None
}

/// Direction the iterate leans at the loose tolerance, if any.
fn loose_status(m: &Measures, it: &Iterate, loose: f64) -> Option<SdpStatus> {
    if m.pres <= loose && m.dres <= loose && m.gap <= loose && it.tau > it.kappa {
        Some(SdpStatus::Feasible)
    } else if m.pinf.is_some_and(|r| r <= loose) && it.kappa > it.tau {
        Some(SdpStatus::PrimalInfeasible)
    } else if m.dinf.is_some_and(|r| r <= loose) && it.kappa > it.tau {
        Some(SdpStatus::DualInfeasible)
    } else {
        None
    }
}

fn finish(
    data: &Data,
    it: Iterate,
    meas: Measures,
    tol: f64,
    iterations: usize,
    mu_history: Vec<f64>,
    start: Instant,
) -> SdpSolution {
    let loose = settings_loose(tol);
    let tau = it.tau;
    let kappa = it.kappa;
    let ratio = (tau - kappa) / (tau + kappa);
    let by = data.b.dot(&it.y);

    let (status, hint) = if converged(&meas, &it, tol) && tau > 100.0 * kappa {
        (SdpStatus::Feasible, None)
    } else if let Some(st) = infeasible(&meas, &it, tol).filter(|_| kappa > 100.0 * tau) {
        (st, None)
    } else if let Some(h) = loose_status(&meas, &it, loose) {
        (SdpStatus::Inaccurate, Some(h))
    } else {
        (SdpStatus::Failed, None)
    };

    let certificate = match (status, hint) {
        (SdpStatus::PrimalInfeasible, _) | (SdpStatus::Inaccurate, Some(SdpStatus::PrimalInfeasible)) if by > 0.0 => {
            Some(super::InfeasibilityCertificate {
                y: (&it.y / by).iter().copied().collect(),
                s_blocks: it.s.iter().map(|s| s / by).collect(),
            })
        }
        _ => None,
    };

    SdpSolution {
        status,
        inaccurate_hint: hint,
        feasibility_ratio: ratio,
        x_blocks: it.x.iter().map(|x| x / tau).collect(),
        x_free: (&it.z / tau).iter().copied().collect(),
        y: (&it.y / tau).iter().copied().collect(),
        s_blocks: it.s.iter().map(|s| s / tau).collect(),
        residuals: Residuals {
            primal: meas.pres,
            dual: meas.dres,
            gap: meas.gap,
        },
        primal_objective: meas.pobj,
        dual_objective: meas.dobj,
        tau,
        kappa,
        iterations,
        solve_time: start.elapsed().as_secs_f64(),
        mu_history,
        certificate,
    }
}

fn settings_loose(tol: f64) -> f64 {
    tol.max(1e-5)
}
