//! Views, viewsets and the composition algebra over them.

mod chart;
mod ops;
mod view;

pub use chart::{chart_spec, ChartColumn, ChartSpec, LayoutMode};
pub use ops::{
    compose_binary, composition_verdict, drop_single_value_dims, explode, extract, hier_stat_compose, hier_union_compose, stat_compose,
    stat_compose_nonexact, union_compose, viewset_cross, viewset_stat, viewset_union, viewset_view, BinaryOp,
    ComposeOptions, Env, Side,
};
pub use view::{Channel, MarkType, View, ViewDef, ViewSet, VisualMapping};
