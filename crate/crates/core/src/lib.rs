//! Independence models represented by their elementary triplets.
//!
//! A model over a universe of variables is stored as the set of elementary
//! triplets `i ⟂ j | K` it contains, closed under the semigraphoid, graphoid
//! or compositional-graphoid rules. On top of that representation the crate
//! answers membership queries, enumerates dominant triplets and grids, builds
//! minimal independence maps of DAGs, combines models, and identifies causal
//! effects from regime-indexed independences.

pub mod causal;
pub mod cli;
pub mod closure;
pub mod error;
pub mod graphmap;
pub mod io;
pub mod model;
pub mod query;
pub mod setops;
pub mod table;
pub mod triplet;
pub mod universe;
pub mod varset;

pub use causal::{CausalGraph, CausalModel, CausalQuery, Estimand, Expr, PlanQuery, Regime, RegimeDsepModel, StructuralModel};
pub use closure::{close_elementary, close_triplets_oracle, enumerate_model, expand_e, expand_model};
pub use error::{Error, Result};
pub use graphmap::{all_pa, build_mim, d_separated, has_perfect_map, induced_elementary_model, verify_factorization, Dag};
pub use io::{extract_model_from_table, load_table, parse_model, serialize_model, ModelFile};
pub use model::{ElementaryModel, ElementarySource};
pub use query::{dominant_triplets, grid_dag, is_member, is_submodel, maximal_grids, GridScope};
pub use setops::{intersect, union_max_subset, union_min_superset, union_with_context};
pub use table::{Conditional, JointTable};
pub use triplet::{AxiomLevel, ElementaryTriplet, Triplet};
pub use universe::{Context, Universe};
pub use varset::VarSet;
