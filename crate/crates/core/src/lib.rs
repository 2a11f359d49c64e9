//! Bounded-memory streaming persistent homology over Vietoris-Rips
//! filtrations.
//!
//! Edges of the neighbourhood graph live in a sorted on-disk file and are
//! consumed one at a time. Each edge updates a registry of maximal cliques,
//! which emits exactly the simplices that edge introduces; those feed
//! straight into an incremental Z/2 persistence reduction, and every closed
//! interval is spilled to disk immediately. The whole computational state
//! checkpoints to a single file and resumes deterministically: an
//! interrupted run reproduces the uninterrupted run's output byte for byte.

pub mod checkpoint;
pub mod cliques;
pub mod edgefile;
pub mod extsort;
pub mod intervals;
pub mod oracle;
pub mod plot;
pub mod points;
pub mod reduction;
pub mod selfcheck;
pub mod session;
pub mod simplex;

pub use cliques::{maximal_filter, CliqueRegistry, RetentionPolicy};
pub use edgefile::{compute_edges, EdgeCursor, EdgeFile, EdgeWriter};
pub use extsort::external_sort_edges;
pub use points::{DistanceMatrix, EdgeSource, PointCloud, PointMetric};
pub use reduction::PersistenceState;
pub use session::{RunOutcome, Session, SessionConfig, Summary};
pub use simplex::{simplex_order, Clique, Edge, Interval, SimplexEntry, VertexId};
