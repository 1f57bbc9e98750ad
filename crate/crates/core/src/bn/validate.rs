use std::collections::HashSet;
use std::fmt;

use super::{BayesianNetwork, CptTable, ROW_SUM_TOLERANCE};

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateVariable(String),
    DuplicateValue { variable: String, value: String },
    NoValues(String),
    MissingCpt(String),
    UnknownParent { variable: String, parent: usize },
    Cycle(Vec<String>),
    RowCount { variable: String, expected: usize, found: usize },
    RowLength { variable: String, row: usize, expected: usize, found: usize },
    EntryOutOfRange { variable: String, row: usize, value: f64 },
    RowSum { variable: String, row: usize, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateVariable(v) => write!(f, "duplicate variable name `{v}`"),
            Violation::DuplicateValue { variable, value } => {
                write!(f, "variable `{variable}` lists value `{value}` twice")
            }
            Violation::NoValues(v) => write!(f, "variable `{v}` has no values"),
            Violation::MissingCpt(v) => write!(f, "variable `{v}` has no CPT"),
            Violation::UnknownParent { variable, parent } => {
                write!(f, "CPT of `{variable}` references unknown parent index {parent}")
            }
            Violation::Cycle(vs) => write!(f, "directed cycle through {}", vs.join(" -> ")),
            Violation::RowCount { variable, expected, found } => {
                write!(f, "CPT of `{variable}` has {found} rows, expected {expected}")
            }
            Violation::RowLength { variable, row, expected, found } => {
                write!(f, "CPT of `{variable}` row {row} has {found} entries, expected {expected}")
            }
            Violation::EntryOutOfRange { variable, row, value } => {
                write!(f, "CPT of `{variable}` row {row} has entry {value} outside [0, 1]")
            }
            Violation::RowSum { variable, row, sum } => {
                write!(f, "CPT of `{variable}` row {row} sums to {sum}")
            }
        }
    }
}

/// All violations found in a network. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

impl BayesianNetwork {
    /// Checks acyclicity, CPT shapes and row sums. Reports every violation
    /// rather than stopping at the first.
    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::new();
        let n = self.num_vars();
        let mut names = HashSet::new();
        for var in self.variables() {
            if !names.insert(var.name.as_str()) {
                out.push(Violation::DuplicateVariable(var.name.clone()));
            }
            if var.values.is_empty() {
                out.push(Violation::NoValues(var.name.clone()));
            }
            let mut seen = HashSet::new();
            for value in &var.values {
                if !seen.insert(value.as_str()) {
                    out.push(Violation::DuplicateValue {
                        variable: var.name.clone(),
                        value: value.clone(),
                    });
                }
            }
        }
        let covered: Vec<bool> = {
            let mut c = vec![false; n];
            for cpt in self.cpts() {
                if cpt.child < n {
                    c[cpt.child] = true;
                }
            }
            c
        };
        let cpts_aligned = self.cpts().len() == n && covered.iter().all(|&c| c);
        for (v, &c) in covered.iter().enumerate() {
            if !c {
                out.push(Violation::MissingCpt(self.variable(v).name.clone()));
            }
        }
        if !cpts_aligned {
            return ValidationReport { violations: out };
        }
        let mut parents_ok = true;
        for cpt in self.cpts() {
            for &p in &cpt.parents {
                if p >= n {
                    parents_ok = false;
                    out.push(Violation::UnknownParent {
                        variable: self.variable(cpt.child).name.clone(),
                        parent: p,
                    });
                }
            }
        }
        if !parents_ok {
            return ValidationReport { violations: out };
        }
        if self.try_topological_order().is_none() {
            out.push(Violation::Cycle(self.find_cycle()));
        }
        for cpt in self.cpts() {
            let name = &self.variable(cpt.child).name;
            let rows_expected = self.num_rows(cpt.child);
            let card = self.cardinality(cpt.child);
            let CptTable::Dense(rows) = &cpt.table else {
                continue;
            };
            if rows.len() != rows_expected {
                out.push(Violation::RowCount {
                    variable: name.clone(),
                    expected: rows_expected,
                    found: rows.len(),
                });
            }
            for (r, row) in rows.iter().enumerate() {
                if row.len() != card {
                    out.push(Violation::RowLength {
                        variable: name.clone(),
                        row: r,
                        expected: card,
                        found: row.len(),
                    });
                    continue;
                }
                for &p in row {
                    if !(0.0..=1.0).contains(&p) || p.is_nan() {
                        out.push(Violation::EntryOutOfRange {
                            variable: name.clone(),
                            row: r,
                            value: p,
                        });
                    }
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    out.push(Violation::RowSum {
                        variable: name.clone(),
                        row: r,
                        sum,
                    });
                }
            }
        }
        ValidationReport { violations: out }
    }

    fn find_cycle(&self) -> Vec<String> {
        // Iterative DFS colouring; returns the first back-edge cycle found.
        let n = self.num_vars();
        let mut state = vec![0u8; n];
        let mut stack_path: Vec<usize> = Vec::new();
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            state[start] = 1;
            stack_path.push(start);
            while let Some(&mut (v, ref mut i)) = stack.last_mut() {
                let parents = self.parents(v);
                if *i < parents.len() {
                    let p = parents[*i];
                    *i += 1;
                    match state[p] {
                        0 => {
                            state[p] = 1;
                            stack.push((p, 0));
                            stack_path.push(p);
                        }
                        1 => {
                            let pos = stack_path.iter().position(|&x| x == p).unwrap();
                            let mut cycle: Vec<String> = stack_path[pos..]
                                .iter()
                                .rev()
                                .map(|&x| self.variable(x).name.clone())
                                .collect();
                            cycle.push(self.variable(stack_path[stack_path.len() - 1]).name.clone());
                            return cycle;
                        }
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                    stack.pop();
                    stack_path.pop();
                }
            }
        }
        Vec::new()
    }
}

#[cfg(test)]
mod tests {
    use crate::bn::{BayesianNetwork, BnError, Cpt, Variable};

    #[test]
    fn cycle_is_reported_with_path() {
        let vars = vec![Variable::new("A", &["0", "1"]), Variable::new("B", &["0", "1"])];
        let cpts = vec![
            Cpt::dense(0, vec![1], vec![vec![0.5, 0.5]; 2]),
            Cpt::dense(1, vec![0], vec![vec![0.5, 0.5]; 2]),
        ];
        let bn = BayesianNetwork::from_parts_unchecked("cyc", vars.clone(), cpts.clone());
        let report = bn.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, super::Violation::Cycle(p) if p.len() == 3)));
        assert!(matches!(BayesianNetwork::new("cyc", vars, cpts), Err(BnError::Invalid(_))));
    }

    #[test]
    fn row_sum_out_of_tolerance_is_reported() {
        let vars = vec![Variable::new("A", &["0", "1"])];
        let bad = vec![Cpt::dense(0, vec![], vec![vec![0.5, 0.6]])];
        let report = BayesianNetwork::from_parts_unchecked("r", vars.clone(), bad).validate();
        assert_eq!(report.violations.len(), 1);
        // Within tolerance: accepted and renormalized.
        let near = vec![Cpt::dense(0, vec![], vec![vec![0.5, 0.5 + 5e-10]])];
        let bn = BayesianNetwork::new("r", vars, near).unwrap();
        let s: f64 = bn.cpt(0).rows().unwrap()[0].iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn collects_multiple_violations() {
        let vars = vec![Variable::new("A", &["0", "0"]), Variable::new("A", &["1"])];
        let cpts = vec![
            Cpt::dense(0, vec![], vec![vec![1.2, -0.2]]),
            Cpt::dense(1, vec![0], vec![vec![1.0]]),
        ];
        let report = BayesianNetwork::from_parts_unchecked("m", vars, cpts).validate();
        // duplicate name, duplicate value, two entries out of range, row count
        assert!(report.violations.len() >= 4, "{report}");
    }
}
