//! Example systems built as checkable objects.

pub mod extension;
pub mod fig1;
pub mod layered;
pub mod substitution;

pub use fig1::{fig1_circle, fig1_points, Fig1Points};
pub use layered::{dense_shadowable_example, Layer, LayeredSpace};
pub use extension::{extension_builder, verify_extension_claims, ExtensionReport, ExtensionSpace};
pub use substitution::{Substitution, SubstitutionSubshift};
