use crate::datamodel::RegistrationInstance;
use crate::sogeom::{project_to_so, Checked, Rotation};
use crate::Matrix;

/// Least-squares rotation: the nearest rotation to `M = sum_i y_i x_i^T`.
pub fn solve_wahba_ls(inst: &RegistrationInstance) -> Checked<Rotation> {
    let d = inst.dim();
    let mut m = Matrix::zeros(d, d);
    for (x, y) in inst.x().rows().zip(inst.y().rows()) {
        for (i, yi) in y.iter().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                m[(i, j)] += yi * xj;
            }
        }
    }
    project_to_so(&m)
}
