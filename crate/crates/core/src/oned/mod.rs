//! One-dimensional kernel calculus: Monge–Ampère measures, kernel
//! decomposition, extraction and the worked example operators.

mod examples;
mod kernel;
mod monge_ampere;

pub use examples::{example_phi_convexity_certificate, CertificateReport, MaEndo, PhiEndo, Zeta};
pub use kernel::{
    detect_r, kernel_decompose, kernel_extract, kernel_is_monotone, Kernel1D, KernelDecomposition,
    KernelEndo, KernelGrid, KernelSource,
};
pub use monge_ampere::monge_ampere;
