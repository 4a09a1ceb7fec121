//! Braid words, the reduced Burau representation, Alexander polynomials of
//! closures, and band representations.

mod band;
mod burau;
mod laurent;
mod word;

pub use band::{
    band_euler_characteristic, match_band_template, Band, BandRepresentation, BandSurface,
    TemplateMismatch,
};
pub use burau::{alexander_of_closure, reduced_burau, LaurentMatrix};
pub use laurent::LaurentPolynomial;
pub use word::{cyclically_equal, BraidError, BraidWord, Letter};
