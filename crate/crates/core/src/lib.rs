//! Numerical laboratory for spherical maximal operators over fractal
//! dilation sets, restricted to radial functions.

pub mod dilation_sets;
pub mod fit;
pub mod numeric;
pub mod par;
pub mod artifacts;
pub mod spectra;
pub mod type_sets;
pub mod quadrature;
pub mod radial_averages;
pub mod maximal_ops;
pub mod experiments;
