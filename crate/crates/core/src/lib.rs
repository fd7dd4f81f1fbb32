pub mod exterior;
pub mod norms;
pub mod quadrature;
pub mod densities;
pub mod finsler;
pub mod curves;
pub mod crofton;
pub mod variation;
pub mod cartan;
