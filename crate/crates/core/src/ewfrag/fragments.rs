use super::EwfError;

/// Disjoint groups of local orbitals covering the basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentSpec {
    pub groups: Vec<Vec<usize>>,
    pub labels: Vec<String>,
}

impl FragmentSpec {
    /// One fragment per atom, in ascending atom order.
    pub fn per_atom(atoms: &[usize]) -> Result<Self, EwfError> {
        let mut ids: Vec<usize> = atoms.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let groups: Vec<Vec<usize>> = ids
            .iter()
            .map(|&a| (0..atoms.len()).filter(|&i| atoms[i] == a).collect())
            .collect();
        let labels = ids.iter().map(|a| format!("atom{a}")).collect();
        Self::explicit(groups, labels, atoms.len())
    }

    /// A single fragment spanning the whole basis.
    pub fn whole(n: usize) -> Self {
        Self {
            groups: vec![(0..n).collect()],
            labels: vec!["all".into()],
        }
    }

    /// Validates that `groups` partition `0..n`.
    pub fn explicit(groups: Vec<Vec<usize>>, labels: Vec<String>, n: usize) -> Result<Self, EwfError> {
        if groups.len() != labels.len() {
            return Err(EwfError::Fragment(format!(
                "{} groups but {} labels",
                groups.len(),
                labels.len()
            )));
        }
        let mut owner = vec![None; n];
        for (g, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(EwfError::Fragment(format!("fragment {g} is empty")));
            }
            for &i in group {
                if i >= n {
                    return Err(EwfError::Fragment(format!("orbital {i} outside basis of {n}")));
                }
                if let Some(prev) = owner[i].replace(g) {
                    return Err(EwfError::Fragment(format!(
                        "orbital {i} in fragments {prev} and {g}"
                    )));
                }
            }
        }
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(EwfError::Fragment(format!("orbital {i} belongs to no fragment")));
        }
        let groups = groups
            .into_iter()
            .map(|mut g| {
                g.sort_unstable();
                g
            })
            .collect();
        Ok(Self { groups, labels })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_atom_groups() {
        let f = FragmentSpec::per_atom(&[0, 0, 1, 2, 2]).unwrap();
        assert_eq!(f.groups, vec![vec![0, 1], vec![2], vec![3, 4]]);
    }

    #[test]
    fn overlap_and_gaps_rejected() {
        assert!(FragmentSpec::explicit(vec![vec![0, 1], vec![1, 2]], vec!["a".into(), "b".into()], 3).is_err());
        assert!(FragmentSpec::explicit(vec![vec![0], vec![2]], vec!["a".into(), "b".into()], 3).is_err());
        assert!(FragmentSpec::explicit(vec![vec![0, 1, 2]], vec!["a".into()], 3).is_ok());
    }
}
