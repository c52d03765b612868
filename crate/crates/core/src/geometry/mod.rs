//! Charts, metric fields, bi-Lipschitz maps and the metric quantities
//! measured on meshes.

mod manifold;
mod maps;
mod metric;
mod ops;

pub use manifold::{
    matrix_from_rows, metric_eigen_bounds, Chart, ChartBox, Manifold, ManifoldConfig, ManifoldKind, PsiProfile,
    RoughCoefficient, SecondChartConfig, Transition,
};
pub use maps::{pullback_metric, BiLipschitzMap};
pub use metric::{eigen_range, generalized_eigen_range, quasi_isometry_constant, spd_sqrt, MetricField};
pub use ops::{dirichlet_form_comparison, path_distance, volume, FormComparison};
