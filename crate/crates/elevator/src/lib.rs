//! An adjoint-modal polymorphic calculus with contextual templates.
//!
//! Modes form a user-supplied preorder; each mode admits a subset of the
//! structural rules. Templates (`susp`) are open terms tagged with a higher
//! mode and spliced with `force ... @ (...)`; lower modes treat them as
//! syntax while higher modes evaluate inside them.

pub mod equiv;
pub mod eval;
pub mod frontend;
pub mod gen;
pub mod mode_spec;
pub mod props;
pub mod subst;
pub mod syntax;
pub mod typing;
