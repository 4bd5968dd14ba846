use super::{norm2, solver::Preconditioner, SparseMatrix};

/// Restarted GMRES settings.
#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { restart: 50, max_iterations: 5000, tolerance: super::DEFAULT_TOLERANCE }
    }
}

/// Right-preconditioned restarted GMRES. Returns the iterate, the iteration
/// count and the true relative residual `‖b - A x‖ / ‖b‖`.
pub fn gmres(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: &dyn Preconditioner,
    opts: GmresOptions,
) -> (Vec<f64>, usize, f64) {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bnorm == 0.0 {
        return (vec![0.0; n], 0, 0.0);
    }
    let m = opts.restart.max(1);
    let mut total = 0;
    let mut ax = vec![0.0; n];

    loop {
        a.matvec_into(&x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta / bnorm <= opts.tolerance || total >= opts.max_iterations {
            return (x, total, beta / bnorm);
        }

        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..m {
            let zk = precond.apply(&v[k]);
            let mut w = vec![0.0; n];
            a.matvec_into(&zk, &mut w);
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hij: f64 = w.iter().zip(vi).map(|(a, b)| a * b).sum();
                h[i][k] = hij;
                for (wl, vl) in w.iter_mut().zip(vi) {
                    *wl -= hij * vl;
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;

            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if d == 0.0 {
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;

            if g[k + 1].abs() / bnorm <= opts.tolerance * 0.5 || hn == 0.0 || total >= opts.max_iterations {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }

        if k_used == 0 {
            return (x, total, beta / bnorm);
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            for (xl, zl) in x.iter_mut().zip(zi) {
                *xl += yi * zl;
            }
        }
    }
}
