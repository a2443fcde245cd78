/// Numeric tolerances shared by geometry, group validation and dedup
/// cross-checks. Calibrated for double precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Geometric equality of points and maps.
    pub geometric: f64,
    /// Largest `|det - 1|` accepted by [`crate::halfplane::Moebius::canonicalize`].
    pub det_reject: f64,
    /// Entries at or below this magnitude are skipped when fixing the PSL2 sign.
    pub sign_threshold: f64,
    /// Entrywise tolerance for the relator product being the identity.
    pub relator: f64,
    /// Generators must satisfy `|trace| > 2 + hyperbolic_trace`.
    pub hyperbolic_trace: f64,
    /// Distances at or below this are treated as zero (identity records).
    pub zero_distance: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        geometric: 1e-9,
        det_reject: 1e-6,
        sign_threshold: 1e-9,
        relator: 1e-8,
        hyperbolic_trace: 1e-6,
        zero_distance: 1e-9,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
