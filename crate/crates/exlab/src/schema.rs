//! Column layouts of every CSV the runner writes.
//!
//! The plotting side reads these through `exlab schemas`, so a column added
//! here is automatically part of the published contract.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Column {
    pub name: &'static str,
    /// `int`, `float`, `string` or `bool`.
    #[serde(rename = "type")]
    pub ty: &'static str,
    pub doc: &'static str,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Schema {
    pub file: &'static str,
    /// Figure kind that consumes the file, if any.
    pub figure: Option<&'static str>,
    pub columns: &'static [Column],
}

impl Schema {
    pub fn header(&self) -> Vec<&'static str> {
        self.columns.iter().map(|c| c.name).collect()
    }
}

const fn col(name: &'static str, ty: &'static str, doc: &'static str) -> Column {
    Column { name, ty, doc }
}

pub const NORMAL_MODES: Schema = Schema {
    file: "normal_modes.csv",
    figure: None,
    columns: &[
        col("rho1", "float", "first-class density"),
        col("rho2", "float", "second-class density"),
        col("quantity", "string", "C, A, R, G1, G2 (matrices); v, lambda, j, chi (vectors); residual"),
        col("row", "int", "row index, 1-based; vector component for vectors"),
        col("col", "int", "column index, 1-based; 0 for vectors"),
        col("value", "float", "entry"),
    ],
};

pub const CURRENTS: Schema = Schema {
    file: "currents.csv",
    figure: None,
    columns: &[
        col("species", "int", "1 = first class, 2 = second class"),
        col("t", "float", "physical time"),
        col("j", "float", "current per bond and unit time"),
        col("stderr", "float", "standard error across replicas"),
        col("expected", "float", "closed-form current"),
        col("z", "float", "(j - expected) / stderr"),
        col("replicas", "int", "independent replicas"),
        col("bonds", "int", "bonds observed per replica"),
    ],
};

pub const TWO_POINT: Schema = Schema {
    file: "two_point.csv",
    figure: Some("two_point"),
    columns: &[
        col("j", "int", "lattice offset"),
        col("t", "float", "physical time"),
        col("entry", "string", "ab with a, b in {1, 2}: marginal 1 = first class, 2 = all particles"),
        col("mean", "float", "origin-averaged covariance"),
        col("stderr", "float", "standard error across replicas"),
        col("replicas", "int", "independent replicas"),
    ],
};

pub const SUSCEPTIBILITY: Schema = Schema {
    file: "susceptibility.csv",
    figure: None,
    columns: &[
        col("coords", "string", "species or marginal"),
        col("entry", "string", "ab with a, b in {1, 2}"),
        col("value", "float", "sum of the two-point function over the offset range"),
        col("stderr", "float", "standard error across replicas"),
        col("expected", "float", "closed-form limit"),
        col("z", "float", "(value - expected) / stderr"),
        col("t", "float", "physical time"),
        col("replicas", "int", "independent replicas"),
    ],
};

pub const LAPLACIAN: Schema = Schema {
    file: "laplacian_residual.csv",
    figure: Some("residual"),
    columns: &[
        col("i", "int", "offset"),
        col("t", "float", "first time"),
        col("t_tilde", "float", "second time"),
        col("x", "int", "first site"),
        col("x_tilde", "int", "second site"),
        col("lhs", "float", "covariance side"),
        col("lhs_stderr", "float", "standard error of lhs"),
        col("rhs", "float", "two-point side"),
        col("rhs_stderr", "float", "standard error of rhs"),
        col("residual", "float", "lhs - rhs"),
        col("stderr", "float", "paired standard error of the residual"),
        col("z", "float", "residual / stderr"),
        col("replicas", "int", "independent replicas"),
    ],
};

pub const INTEGRATED: Schema = Schema {
    file: "integrated_correlation.csv",
    figure: None,
    columns: &[
        col("t", "float", "physical time"),
        col("v", "float", "speed of the moving frame"),
        col("entry", "string", "ab with a, b in {1, 2}"),
        col("value", "float", "integrated scaled correlation"),
        col("stderr", "float", "standard error across replicas"),
        col("replicas", "int", "independent replicas"),
        col("origins", "int", "origins averaged per replica"),
    ],
};

pub const DECOUPLING: Schema = Schema {
    file: "decoupling.csv",
    figure: Some("decoupling"),
    columns: &[
        col("kind", "string", "stationary, flat or general"),
        col("t", "float", "time"),
        col("samples", "int", "joint samples"),
        col("runs", "int", "independent runs behind the samples"),
        col("pearson", "float", "correlation of the two rescaled heights"),
        col("pearson_stderr", "float", "grouped jackknife standard error"),
        col("sup_cdf_gap", "float", "sup |F(s, r) - F1(s) F2(r)| over the grid"),
        col("mean_first", "float", "mean rescaled first-class height"),
        col("mean_all", "float", "mean rescaled all-particle height"),
        col("var_first", "float", "variance of the first-class height"),
        col("var_all", "float", "variance of the all-particle height"),
    ],
};

pub const ENDPOINT_TAIL: Schema = Schema {
    file: "endpoint_tail.csv",
    figure: Some("tail"),
    columns: &[
        col("M", "float", "deviation threshold in units of t^(2/3)"),
        col("exceed_prob", "float", "fraction of paths exceeding M"),
        col("stderr", "float", "binomial standard error"),
        col("replicas", "int", "independent paths"),
        col("t", "float", "time"),
    ],
};

pub const ENDPOINT_FIT: Schema = Schema {
    file: "endpoint_fit.csv",
    figure: None,
    columns: &[
        col("t", "float", "time"),
        col("c", "float", "fitted exponent in P = C exp(-c M^2); empty without a fit"),
        col("intercept", "float", "fitted ln C"),
        col("r2", "float", "coefficient of determination"),
        col("buffer_hits", "int", "paths that reached the window edge"),
        col("replicas", "int", "independent paths"),
    ],
};

pub const GEODESIC: Schema = Schema {
    file: "geodesic_check.csv",
    figure: None,
    columns: &[
        col("path", "int", "path index"),
        col("x", "int", "starting site at time t"),
        col("tie_rule", "string", "leftmost, rightmost or random"),
        col("admissible", "bool", "path passed the admissibility check"),
        col("tau", "float", "intermediate time"),
        col("y", "int", "path position at tau"),
        col("outcome", "string", "holds, fails or inconclusive"),
        col("lhs", "int", "height at (x, t); empty unless the identity fails"),
        col("rhs", "int", "decomposed height; empty unless the identity fails"),
    ],
};

pub const QUEUE_TAILS: Schema = Schema {
    file: "queue_tails.csv",
    figure: Some("queue_tail"),
    columns: &[
        col("series", "string", "queue or return_time"),
        col("n", "int", "level"),
        col("tail_prob", "float", "empirical P(X >= n)"),
        col("samples", "int", "observations behind the series"),
    ],
};

pub const QUEUE_FIT: Schema = Schema {
    file: "queue_fit.csv",
    figure: None,
    columns: &[
        col("series", "string", "queue or return_time"),
        col("slope", "float", "fitted slope of ln P(X >= n)"),
        col("intercept", "float", "fitted intercept"),
        col("r2", "float", "coefficient of determination"),
        col("theta", "float", "closed-form decay rate for q = 0; empty otherwise"),
    ],
};

pub const QUEUE_DRIFT: Schema = Schema {
    file: "queue_drift.csv",
    figure: None,
    columns: &[
        col("c", "float", "drift constant"),
        col("x0", "int", "threshold level"),
        col("beta", "float", "drift exponent"),
        col("b", "float", "bound inside the threshold"),
        col("worst", "float", "largest drift margin found"),
        col("holds", "bool", "drift condition satisfied"),
    ],
};

pub const ASSUMPTION15: Schema = Schema {
    file: "assumption15.csv",
    figure: None,
    columns: &[
        col("metric", "string", "variance_ratio, variance_ratio_stderr, sigma_a_squared, threshold, fraction_below, forms_agree, max_sup"),
        col("value", "float", "value; booleans are 0 or 1"),
    ],
};

pub const ASSUMPTION15_SUPS: Schema = Schema {
    file: "assumption15_sups.csv",
    figure: None,
    columns: &[
        col("sample", "int", "sample index"),
        col("sup_abs", "int", "sup of |delta_h| over the y range"),
    ],
};

pub const PATH_DUMP: Schema = Schema {
    file: "paths/path_<k>.csv",
    figure: None,
    columns: &[
        col("tau", "float", "time of the breakpoint"),
        col("x", "int", "position from tau on, backwards in time"),
    ],
};

pub const ALL: [&Schema; 16] = [
    &NORMAL_MODES,
    &CURRENTS,
    &TWO_POINT,
    &SUSCEPTIBILITY,
    &LAPLACIAN,
    &INTEGRATED,
    &DECOUPLING,
    &ENDPOINT_TAIL,
    &ENDPOINT_FIT,
    &GEODESIC,
    &QUEUE_TAILS,
    &QUEUE_FIT,
    &QUEUE_DRIFT,
    &ASSUMPTION15,
    &ASSUMPTION15_SUPS,
    &PATH_DUMP,
];

/// Shape of `manifest.json`, as a JSON Schema document.
pub fn manifest_schema() -> serde_json::Value {
    serde_json::json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "exlab run manifest",
        "type": "object",
        "required": ["artifact", "version", "kind", "config", "seeds", "threads", "started", "finished", "outputs"],
        "properties": {
            "artifact": {"const": "exlab"},
            "version": {"type": "string"},
            "kind": {"type": "string"},
            "config": {
                "type": "object",
                "description": "every effective key = value entry; running it again reproduces the CSV bodies",
                "additionalProperties": {"type": "string"}
            },
            "seeds": {
                "type": "object",
                "required": ["master", "rule", "first_replicas"],
                "properties": {
                    "master": {"type": "integer"},
                    "rule": {"type": "string"},
                    "first_replicas": {"type": "array", "items": {"type": "integer"}}
                }
            },
            "threads": {"type": "integer"},
            "started": {"type": "string", "format": "date-time"},
            "finished": {"type": "string", "format": "date-time"},
            "outputs": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["file", "rows"],
                    "properties": {
                        "file": {"type": "string"},
                        "rows": {"type": "integer"},
                        "columns": {"type": "array", "items": {"type": "string"}}
                    }
                }
            }
        }
    })
}

/// Every schema in one JSON document.
pub fn catalogue() -> serde_json::Value {
    serde_json::json!({
        "csv": ALL,
        "manifest": manifest_schema(),
    })
}
