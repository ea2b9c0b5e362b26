use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::measures::{TransportMap, TransportPlan};

/// Collapse each row of a coupling to the mean of its target points.
///
/// `image_i = sum_j pi_ij y_j / sum_j pi_ij`. The assignment is filled in
/// when every row has exactly one nonzero entry and those entries hit
/// distinct targets.
pub fn barycentric_map(plan: &TransportPlan, targets: ArrayView2<'_, f64>) -> Result<TransportMap> {
    let (n, k) = plan.coupling.dim();
    if targets.nrows() != k {
        return Err(Error::LengthMismatch(k, targets.nrows()));
    }
    let d = targets.ncols();
    let mut images = Array2::zeros((n, d));
    let mut assignment = Vec::with_capacity(n);
    let mut single = true;
    for i in 0..n {
        let row = plan.coupling.row(i);
        let mass: f64 = row.sum();
        if !(mass > 0.0) {
            return Err(Error::DegenerateRow(i));
        }
        let mut nz = row.iter().enumerate().filter(|(_, &w)| w != 0.0);
        match (nz.next(), nz.next()) {
            (Some((j, _)), None) => {
                images.row_mut(i).assign(&targets.row(j));
                assignment.push(j);
            }
            _ => {
                single = false;
                let mut img = images.row_mut(i);
                for (j, &w) in row.iter().enumerate() {
                    if w != 0.0 {
                        img.scaled_add(w, &targets.row(j));
                    }
                }
                img /= mass;
            }
        }
    }
    let assignment = if single && n == k {
        let mut seen = vec![false; k];
        let bijective = assignment
            .iter()
            .all(|&j| !std::mem::replace(&mut seen[j], true));
        bijective.then_some(assignment)
    } else {
        None
    };
    Ok(TransportMap { images, assignment })
}
