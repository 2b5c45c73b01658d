use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues of a symmetric matrix, ascending.
///
/// Closed form for `d <= 2`; nalgebra's symmetric QR iteration otherwise.
/// The 2x2 formula is exactly odd under `m -> -m`, which the sign-symmetry
/// checks of the operator module rely on.
pub fn eigenvalues_sym(m: &Mat) -> Result<Vec<f64>> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::InvalidParams(format!("matrix is {}x{}", d, m.ncols())));
    }
    let scale = m.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let mut asym = 0.0_f64;
    for i in 0..d {
        for j in i + 1..d {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Asymmetric(asym));
    }
    let mut ev = match d {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        2 => {
            let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
            let mean = 0.5 * (a + c);
            let rad = (0.5 * (a - c)).hypot(b);
            vec![mean - rad, mean + rad]
        }
        _ => SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect(),
    };
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

/// Spectral norm (largest singular value).
pub fn operator_norm(m: &Mat) -> f64 {
    let g = m.transpose() * m;
    let g = (&g + g.transpose()) * 0.5;
    eigenvalues_sym(&g)
        .ok()
        .and_then(|ev| ev.last().copied())
        .unwrap_or(0.0)
        .max(0.0)
        .sqrt()
}
