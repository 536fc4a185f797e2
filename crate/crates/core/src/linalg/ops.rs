use super::matrix::ComplexMatrix;
use super::operators::{check_same_dim, DensityMatrix, HermitianOperator, StateVector, UnitaryOperator};
use crate::error::{Error, Result};

/// Which factor of a bipartite space survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    Left,
    Right,
}

/// Kronecker product; the left factor is the slow index.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Partial trace of an arbitrary square matrix on `d_left ⊗ d_right`.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (dl, dr) = dims;
    if dl == 0 || dr == 0 {
        return Err(Error::dim("partial trace factor of dimension 0"));
    }
    if !m.is_square() || m.rows() != dl * dr {
        return Err(Error::dim(format!(
            "partial trace over {dl}x{dr} needs a {}-dimensional square matrix, got {}x{}",
            dl * dr,
            m.rows(),
            m.cols()
        )));
    }
    Ok(match keep {
        Keep::Left => ComplexMatrix::from_fn(dl, dl, |a, b| (0..dr).map(|r| m[(a * dr + r, b * dr + r)]).sum()),
        Keep::Right => ComplexMatrix::from_fn(dr, dr, |a, b| (0..dl).map(|l| m[(l * dr + a, l * dr + b)]).sum()),
    })
}

pub fn partial_trace(rho: &DensityMatrix, dims: (usize, usize), keep: Keep) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_trusted(partial_trace_matrix(rho.matrix(), dims, keep)?))
}

/// |ψ⟩⟨ψ|.
pub fn projector_from_state(psi: &StateVector) -> HermitianOperator {
    HermitianOperator::from_trusted(ComplexMatrix::outer(psi.amplitudes(), psi.amplitudes()))
}

/// `U A U†`.
pub fn conjugate(a: &ComplexMatrix, u: &UnitaryOperator) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::dim("conjugation needs a square operand"));
    }
    check_same_dim(a.rows(), u.dim(), "conjugation")?;
    Ok(&(u.matrix() * a) * &u.matrix().adjoint())
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::linalg::matrix::I;

    #[test]
    fn kron_of_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor_product(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_left_factor_is_slow() {
        let z = HermitianOperator::sigma_z();
        let k = tensor_product(z.matrix(), &ComplexMatrix::identity(2));
        assert_eq!(k, ComplexMatrix::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0]));
    }

    #[test]
    fn xx_is_an_involution() {
        let x = HermitianOperator::sigma_x();
        let xx = tensor_product(x.matrix(), x.matrix());
        assert_eq!(&xx * &xx, ComplexMatrix::identity(4));
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let s = 1.0 / 2f64.sqrt();
        let bell = StateVector::new(vec![
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(s, 0.0),
        ])
        .unwrap();
        let r = partial_trace(&DensityMatrix::from_pure(&bell), (2, 2), Keep::Left).unwrap();
        assert!(r.matrix().max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);
    }

    #[test]
    fn product_state_traces_to_factors() {
        let rs = DensityMatrix::new(ComplexMatrix::from_row_major(
            2,
            2,
            vec![Complex64::new(0.7, 0.0), Complex64::new(0.1, 0.2), Complex64::new(0.1, -0.2), Complex64::new(0.3, 0.0)],
        ).unwrap())
        .unwrap();
        let ro = DensityMatrix::from_pure(&StateVector::plus());
        let joint = DensityMatrix::new(tensor_product(rs.matrix(), ro.matrix())).unwrap();
        let left = partial_trace(&joint, (2, 2), Keep::Left).unwrap();
        assert!(left.matrix().max_abs_diff(rs.matrix()) < 1e-15);
        let right = partial_trace(&joint, (2, 2), Keep::Right).unwrap();
        assert!(right.matrix().max_abs_diff(ro.matrix()) < 1e-15);
    }

    #[test]
    fn basis_product_keep_right() {
        let psi = StateVector::basis(4, 1).unwrap(); // |01⟩
        let r = partial_trace(&DensityMatrix::from_pure(&psi), (2, 2), Keep::Right).unwrap();
        assert_eq!(r.matrix(), &ComplexMatrix::from_real_diagonal(&[0.0, 1.0]));
    }

    #[test]
    fn partial_trace_rejects_mismatch() {
        let rho = DensityMatrix::maximally_mixed(6);
        assert!(matches!(partial_trace(&rho, (2, 2), Keep::Left), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn projector_examples() {
        let p0 = projector_from_state(&StateVector::basis(2, 0).unwrap());
        assert_eq!(p0.matrix(), &ComplexMatrix::from_real_diagonal(&[1.0, 0.0]));
        let pp = projector_from_state(&StateVector::plus());
        assert!(pp.matrix().as_slice().iter().all(|z| (z - Complex64::new(0.5, 0.0)).norm() < 1e-15));
        let phased = projector_from_state(&StateVector::basis(2, 0).unwrap().with_phase(1.234));
        assert!(phased.matrix().max_abs_diff(p0.matrix()) < 1e-15);
    }

    #[test]
    fn conjugation_examples() {
        let z = HermitianOperator::sigma_z();
        let same = conjugate(z.matrix(), &UnitaryOperator::identity(2)).unwrap();
        assert_eq!(&same, z.matrix());
        let x = UnitaryOperator::new(HermitianOperator::sigma_x().into_matrix()).unwrap();
        let flipped = conjugate(z.matrix(), &x).unwrap();
        assert_eq!(flipped, z.matrix().scale_real(-1.0));
        let d = ComplexMatrix::from_real_diagonal(&[0.3, -2.0]);
        let phase = UnitaryOperator::new(ComplexMatrix::from_diagonal(&[I, Complex64::from_polar(1.0, 0.4)])).unwrap();
        assert!(conjugate(&d, &phase).unwrap().max_abs_diff(&d) < 1e-16);
        assert!(conjugate(&ComplexMatrix::identity(3), &x).is_err());
    }
}
