//! Exact 2-adic spinor norm computations for skew-hermitian lattices over
//! the quaternion division algebra `D = (pi, Delta / Q_2)`.
//!
//! * [`padic2`]: valuations, square classes and Hilbert symbols on exact rationals.
//! * [`quatalg`]: arithmetic in `D` and its maximal order.
//! * [`spinor_search`]: the k-star conditions for binary lattices and the bounded
//!   witness search that decides them.
//! * [`spinor_table`]: the classification of the spinor image `H(L)` from
//!   Jordan-type data.
//! * [`genus_global`]: spinor class fields over `Q` from local images.

pub mod error;
pub mod genus_global;
pub mod padic2;
pub mod quatalg;
pub mod spinor_search;
pub mod spinor_table;

pub use error::{Error, Result};
pub use padic2::{Place, Rat, SquareClass2, UnitDefectClass};
pub use quatalg::{AlgebraParams, Quat};


pub use spinor_search::{
    decide_h_binary, default_bound, kstar_check, search_witness, search_witness_with, verify_witness_tables,
    BoundJustification, KStarInstance, KStarReport, SearchConfig, SearchOutcome, SearchStatus, Strategy,
};
pub use spinor_table::{spinor_image, LatticeDescriptor, SpinorImage};
pub use genus_global::{field_in_sigma, spinor_class_field, ClassFieldResult, LocalImageSpec, RealCondition};
