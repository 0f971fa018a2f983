use crate::error::Result;
use crate::measure::LineMeasure;
use crate::pwl::{PwlError, PwlFunction, Tail};
use crate::tol;

/// The distributional second derivative of a finite convex PWL function:
/// an atom at each breakpoint weighted by its slope jump. Jumps at or below
/// [`tol::EXACT`] are dropped.
pub fn monge_ampere(f: &PwlFunction) -> Result<LineMeasure> {
    let (Tail::Slope(left), Tail::Slope(right)) = (f.left_tail(), f.right_tail()) else {
        return Err(PwlError::InfiniteSlope.into());
    };
    let mut slopes = Vec::with_capacity(f.breakpoints().len() + 1);
    slopes.push(left);
    slopes.extend(f.segment_slopes());
    slopes.push(right);
    let atoms = f
        .breakpoints()
        .iter()
        .zip(slopes.windows(2))
        .map(|(&b, s)| (b, s[1] - s[0]))
        .filter(|&(_, jump)| jump > tol::EXACT)
        .collect();
    LineMeasure::new(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn abs_has_one_atom() {
        let m = monge_ampere(&PwlFunction::abs_at(0.0, 1.0)).unwrap();
        assert_eq!(m.atoms(), &[(0.0, 2.0)]);
    }

    #[test]
    fn double_hinge() {
        let f = PwlFunction::affine(0.0, 0.0)
            .max(&PwlFunction::affine(1.0, -1.0))
            .unwrap()
            .max(&PwlFunction::affine(-1.0, -1.0))
            .unwrap();
        let m = monge_ampere(&f).unwrap();
        assert_eq!(m.atoms(), &[(-1.0, 1.0), (1.0, 1.0)]);
    }

    #[test]
    fn affine_is_empty() {
        assert!(monge_ampere(&PwlFunction::affine(2.0, 1.0)).unwrap().atoms().is_empty());
    }

    #[test]
    fn indicator_rejected() {
        let f = PwlFunction::indicator(-1.0, 1.0).unwrap();
        assert_eq!(monge_ampere(&f), Err(Error::Pwl(PwlError::InfiniteSlope)));
    }
}
