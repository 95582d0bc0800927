//! Numerical potential theory on planar grid domains: Mazurkiewicz distances and
//! boundaries, relative Sobolev capacities, p-harmonic Dirichlet and obstacle solvers,
//! Perron solutions with respect to split boundaries, and a random-walk oracle.

pub mod cantor;
pub mod capacity;
pub mod domain;
pub mod energy;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod mc_oracle;
pub mod metric;
pub mod perron;
pub mod solver;

pub use capacity::{estimate_capacity, CapacityEstimate, CapacityVariant, TargetSet, VariantTag, Witness};
pub use domain::{gen_domain, CellSet, DomainRecipe, GridDomain, RecipeKind, WeightMode};
pub use error::{Error, Result};
pub use field::{NormParts, ScalarField};
pub use grid::GridSpec;
pub use mc_oracle::{harmonic_measure_mc, McEstimate, WalkConfig, WalkData};
pub use metric::{build_maz_boundary, default_schedule, DistInterval, MazBoundary, MazBoundaryPoint};
pub use perron::{perron_solve, MazBoundaryData, PerronResult};
pub use solver::{solve_dirichlet, BoundaryData, DirichletProblem, SolveOptions, SolveReport};
