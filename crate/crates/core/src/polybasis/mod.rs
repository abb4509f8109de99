//! Multi-index sets, Legendre evaluation and polynomial design matrices.

mod design;
mod legendre;
mod multi_index;
mod schedule;

pub use design::{assemble_design, compute_preconditioner, DesignBundle, DesignOrder};
pub use legendre::{
    fill_legendre, fill_legendre_derivs, legendre_derivs_1d, legendre_values_1d, LegendreTable,
};
pub use multi_index::{enumerate_indices, BasisKind, BasisSpec, MultiIndex, MultiIndexSet};
pub use schedule::degree_schedule;
