//! Reference estimates and standard errors for the toy example, keyed by parameter name.

pub const REFERENCE: [(&str, f64, f64); 26] = [
    ("y1 1|2", -1.006292, 0.074042),
    ("y1 2|3", 1.025590, 0.070709),
    ("y2 1|2", -1.940256, 0.090877),
    ("y2 2|3", 2.000534, 0.090580),
    ("beta0.z1", -1.000729, 0.032022),
    ("beta0.z2", 0.939933, 0.063967),
    ("y1X1", 1.980493, 0.095712),
    ("y2X1", 1.978757, 0.083675),
    ("z1X1", 2.022099, 0.033480),
    ("z2X1", 2.069122, 0.066792),
    ("y1X2", -0.017407, 0.045554),
    ("y2X2", -0.035601, 0.045292),
    ("z1X2", -0.018743, 0.031548),
    ("z2X2", -0.070176, 0.063849),
    ("y1X3", -1.926444, 0.094785),
    ("y2X3", -2.005459, 0.087264),
    ("z1X3", -2.010065, 0.035192),
    ("z2X3", -1.977850, 0.069517),
    ("sigma.z1", 0.992114, 0.021779),
    ("sigma.z2", 1.985102, 0.044032),
    ("corr_y1_y2", 0.6363705, 0.0502925),
    ("corr_y1_z1", 0.7799013, 0.0197699),
    ("corr_y1_z2", 0.6542121, 0.0299041),
    ("corr_y2_z1", 0.9188427, 0.0130324),
    ("corr_y2_z2", 0.8011830, 0.0222478),
    ("corr_z1_z2", 0.8962955, 0.0061244),
];

pub fn reference(name: &str) -> (f64, f64) {
    let (_, est, se) = REFERENCE
        .iter()
        .find(|(n, _, _)| *n == name)
        .unwrap_or_else(|| panic!("{name}"));
    (*est, *se)
}
