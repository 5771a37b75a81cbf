use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{PrecisionEstimate, PrecisionMethod};
use crate::data::{gram_matrix, Dataset};
use crate::error::{Error, Result};
use crate::lasso::{solve_gram, GramProblem, LassoConfig};
use crate::linalg;

struct NodeRow {
    theta: DVector<f64>,
    tau2: f64,
    converged: bool,
}

/// Nodewise LASSO estimate of the precision matrix.
///
/// Row `j` regresses column `j` on the remaining columns with objective
/// `(1/n)‖Xⱼ − X₋ⱼθ‖² + 2λⱼ‖θ‖₁`, sets
/// `τ̂ⱼ² = (1/n)‖Xⱼ − X₋ⱼθ̂ⱼ‖² + λⱼ‖θ̂ⱼ‖₁`, and fills row `j` of `Θ̂` with
/// `(−θ̂ⱼ, 1 at position j) / τ̂ⱼ²`.
pub fn nodewise_lasso(d: &Dataset, penalties: &[f64]) -> Result<PrecisionEstimate> {
    let p = d.p();
    if p < 2 {
        return Err(Error::invalid("nodewise regression needs p >= 2"));
    }
    if penalties.len() != p {
        return Err(Error::DimensionMismatch {
            what: "nodewise penalties",
            expected: p,
            got: penalties.len(),
        });
    }
    if let Some(l) = penalties.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::invalid(format!("nodewise penalties must be positive, got {l}")));
    }
    let gram = gram_matrix(d);

    let rows: Vec<NodeRow> = (0..p)
        .into_par_iter()
        .map(|j| node_row(d, &gram, j, penalties[j]))
        .collect::<Result<_>>()?;

    let mut theta = DMatrix::zeros(p, p);
    for (j, row) in rows.iter().enumerate() {
        theta[(j, j)] = 1.0 / row.tau2;
        for (k, &coef) in row.theta.iter().enumerate() {
            let col = if k < j { k } else { k + 1 };
            theta[(j, col)] = -coef / row.tau2;
        }
    }
    let converged = rows.iter().all(|r| r.converged);
    if !converged {
        log::warn!("some nodewise regressions hit the iteration cap");
    }
    let constraint_norm = linalg::identity_residual_max(&theta, &gram);
    Ok(PrecisionEstimate {
        theta,
        method: PrecisionMethod::Nodewise,
        row_penalties: penalties.to_vec(),
        residual_scales: rows.iter().map(|r| r.tau2).collect(),
        constraint_norm,
        converged,
    })
}

fn node_row(d: &Dataset, gram: &DMatrix<f64>, j: usize, lambda: f64) -> Result<NodeRow> {
    let others: Vec<usize> = (0..d.p()).filter(|&k| k != j).collect();
    let problem = GramProblem {
        gram: gram.select_rows(&others).select_columns(&others),
        xty: DVector::from_iterator(others.len(), others.iter().map(|&k| gram[(k, j)])),
        yty: gram[(j, j)],
    };
    // tight enough that the KKT bound on ‖Θ̂Ω̂ − I‖_max holds to rounding
    let cfg = LassoConfig::new(2.0 * lambda).with_tolerance(1e-12).with_max_iterations(100_000);
    let fit = solve_gram(&problem, &cfg)?;
    let theta = fit.coefficients.0;
    let tau2 = residual_scale(d, j, &theta, lambda);
    if !(tau2 > 0.0) || !tau2.is_finite() {
        return Err(Error::numerical(format!(
            "nodewise residual scale for column {j} is {tau2}; the column is degenerate"
        )));
    }
    Ok(NodeRow {
        theta,
        tau2,
        converged: fit.converged,
    })
}

/// `(1/n)‖Xⱼ − X₋ⱼθ‖² + λ‖θ‖₁`, with `θ` indexed over the columns other than `j`.
pub(crate) fn residual_scale(d: &Dataset, j: usize, theta: &DVector<f64>, lambda: f64) -> f64 {
    let x = d.design();
    let mut r = x.column(j).into_owned();
    for (k, &coef) in theta.iter().enumerate() {
        if coef != 0.0 {
            let col = if k < j { k } else { k + 1 };
            r.axpy(-coef, &x.column(col), 1.0);
        }
    }
    r.norm_squared() / d.n() as f64 + lambda * theta.lp_norm(1)
}
