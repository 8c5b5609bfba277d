use num_traits::{Float, FromPrimitive};

/// Scalar type for all similarity and divergence math.
///
/// The alignment matrix, KL divergence, DV and PD are generic over this so
/// f32 and f64 both work; the crate-root aliases fix f64 for the CLI path.
pub trait Scalar: Float + FromPrimitive + Send + Sync + std::fmt::Debug + 'static {
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).unwrap_or_else(|| Self::from_f64(v as f64).unwrap())
    }
}

impl<T> Scalar for T where T: Float + FromPrimitive + Send + Sync + std::fmt::Debug + 'static {}
