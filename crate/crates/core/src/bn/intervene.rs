use std::collections::BTreeMap;

use super::{BayesianNetwork, BnError, Cpt, CptTable, InterventionSpec, Result, VarId, ROW_SUM_TOLERANCE};

/// New distribution for one CPT row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowReplacement {
    pub var: VarId,
    pub row: usize,
    pub distribution: Vec<f64>,
}

fn check_distribution(bn: &BayesianNetwork, var: VarId, row: usize, dist: &[f64]) -> Result<()> {
    let bad = |reason: String| BnError::InvalidDistribution {
        variable: bn.variable(var).name.clone(),
        row,
        reason,
    };
    if dist.len() != bn.cardinality(var) {
        return Err(bad(format!("{} entries for {} values", dist.len(), bn.cardinality(var))));
    }
    if let Some(p) = dist.iter().find(|p| !(0.0..=1.0).contains(*p) || p.is_nan()) {
        return Err(bad(format!("entry {p} outside [0, 1]")));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(bad(format!("sums to {sum}")));
    }
    Ok(())
}

impl BayesianNetwork {
    /// Parametric intervention: replaces the given rows of intervenable CPTs.
    pub fn apply_parametric(&self, spec: &InterventionSpec, replacements: &[RowReplacement]) -> Result<BayesianNetwork> {
        let mut cpts = self.cpts.clone();
        for rep in replacements {
            if rep.var >= self.num_vars() || !spec.contains(rep.var) {
                let name = self
                    .variables
                    .get(rep.var)
                    .map(|v| v.name.clone())
                    .unwrap_or_else(|| rep.var.to_string());
                return Err(BnError::InvalidIntervention(format!("`{name}` is not intervenable")));
            }
            // For structural specs the CPT being edited may already be rewired.
            let CptTable::Dense(rows) = &mut cpts[rep.var].table else {
                return Err(BnError::InvalidIntervention("deterministic CPTs cannot be edited".into()));
            };
            if rep.row >= rows.len() {
                return Err(BnError::UnknownRow {
                    variable: self.variable(rep.var).name.clone(),
                    row: rep.row,
                });
            }
            check_distribution(self, rep.var, rep.row, &rep.distribution)?;
            rows[rep.row] = rep.distribution.clone();
        }
        Ok(BayesianNetwork::from_parts_unchecked(
            self.name.clone(),
            self.variables.clone(),
            cpts,
        ))
    }

    /// Structural intervention: every intervenable `W` gets parents `C_W(W)`
    /// and the supplied CPT (rows over the context, last parent fastest).
    /// Variables whose context equals their parents may be omitted and keep
    /// their CPT.
    pub fn apply_structural(
        &self,
        spec: &InterventionSpec,
        new_cpts: &BTreeMap<VarId, Vec<Vec<f64>>>,
    ) -> Result<BayesianNetwork> {
        spec.validate(self)?;
        if !spec.is_structural() {
            return Err(BnError::InvalidIntervention("apply_structural needs a structural spec".into()));
        }
        for &w in new_cpts.keys() {
            if !spec.contains(w) {
                return Err(BnError::InvalidIntervention(format!(
                    "`{}` is not intervenable",
                    self.variable(w).name
                )));
            }
        }
        let mut out = self.clone();
        for &w in &spec.intervenable {
            let ctx = spec.parents_after(self, w).to_vec();
            let rows = match new_cpts.get(&w) {
                Some(rows) => rows.clone(),
                None if ctx == self.parents(w) => continue,
                None => {
                    return Err(BnError::ParentMismatch {
                        variable: self.variable(w).name.clone(),
                        expected: ctx.iter().map(|&c| self.variable(c).name.clone()).collect(),
                        found: self.parents(w).iter().map(|&c| self.variable(c).name.clone()).collect(),
                    })
                }
            };
            let nrows: usize = ctx.iter().map(|&c| self.cardinality(c)).product();
            if rows.len() != nrows {
                return Err(BnError::InvalidDistribution {
                    variable: self.variable(w).name.clone(),
                    row: rows.len(),
                    reason: format!("{} rows given, context has {nrows} instantiations", rows.len()),
                });
            }
            for (r, row) in rows.iter().enumerate() {
                check_distribution(self, w, r, row)?;
            }
            out = out.with_cpt(Cpt::dense(w, ctx, rows));
        }
        Ok(out)
    }
}
