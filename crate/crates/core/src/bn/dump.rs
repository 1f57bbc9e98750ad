//! Canonical text dump used for golden-file comparisons.

use std::fmt::Write as _;

use super::{BayesianNetwork, CptTable};

/// One line per variable, then one line per CPT row, probabilities with 12
/// significant digits. Deterministic CPTs print their circuit size instead.
pub fn canonical_dump(bn: &BayesianNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "network {}", bn.name());
    for var in bn.variables() {
        let _ = writeln!(out, "variable {} : {}", var.name, var.values.join(" "));
    }
    for v in 0..bn.num_vars() {
        let name = &bn.variable(v).name;
        let parents: Vec<&str> = bn.parents(v).iter().map(|&p| bn.variable(p).name.as_str()).collect();
        match &bn.cpt(v).table {
            CptTable::Dense(rows) => {
                let _ = writeln!(out, "cpt {name} | {}", parents.join(" "));
                for (r, row) in rows.iter().enumerate() {
                    let probs: Vec<String> = row.iter().map(|&p| sig12(p)).collect();
                    let _ = writeln!(out, "row {name} {} : {}", bn.row_label(v, r), probs.join(" "));
                }
            }
            CptTable::Deterministic(det) => {
                let _ = writeln!(
                    out,
                    "cpt {name} | {} = circuit({} gates)",
                    parents.join(" "),
                    det.circuit.num_gates()
                );
            }
        }
    }
    out
}

/// `%.12g`-style formatting.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // Rounding can carry into a new digit (e.g. 9.99..→10.0); that is
        // still 12 significant digits after trimming.
        trim_zeros(&s)
    } else {
        let s = format!("{x:.11e}");
        let (mant, e) = s.split_once('e').unwrap();
        format!("{}e{}", trim_zeros(mant), e)
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.8), "0.8");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(2.0 / 3.0 * 1e-7), "6.66666666667e-8");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(123.456), "123.456");
    }
}
