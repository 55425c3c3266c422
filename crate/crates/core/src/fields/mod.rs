//! Grid geometry, grid functions and their measures.

mod build;
mod grid;
pub mod io;

pub use build::{
    build_coefficients, build_field, CoefficientField, CoefficientSpec, DiffusionKind, DriftKind,
    FieldKind, SourceKind,
};
pub(crate) use grid::dist;
pub use grid::{
    energy_integrals, energy_integrals_signed, grid_measure, measure_level_set, oscillation,
    slice_energy, truncate, truncate_value, Cylinder, EnergyIntegrals, GridField, GridSpec,
    LevelSet, Selection, Sign, SliceEnergy, SpatialField, SpatialGrid,
};
