//! Coarse/fine splitting of a level's variable set.

/// C/F partition over n variables; C and F are disjoint and cover all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    c_flags: Vec<bool>,
}

impl Partition {
    /// Everything fine (C empty).
    pub fn all_fine(n: usize) -> Self {
        Partition {
            c_flags: vec![false; n],
        }
    }

    /// Everything coarse.
    pub fn all_coarse(n: usize) -> Self {
        Partition {
            c_flags: vec![true; n],
        }
    }

    pub fn from_coarse_indices(n: usize, coarse: &[usize]) -> Self {
        let mut c_flags = vec![false; n];
        for &i in coarse {
            c_flags[i] = true;
        }
        Partition { c_flags }
    }

    pub fn len(&self) -> usize {
        self.c_flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_flags.is_empty()
    }

    pub fn is_coarse(&self, i: usize) -> bool {
        self.c_flags[i]
    }

    pub fn set_coarse(&mut self, i: usize) {
        self.c_flags[i] = true;
    }

    pub fn n_coarse(&self) -> usize {
        self.c_flags.iter().filter(|&&c| c).count()
    }

    pub fn n_fine(&self) -> usize {
        self.len() - self.n_coarse()
    }

    /// Coarse indices in ascending order.
    pub fn coarse_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.c_flags[i]).collect()
    }

    pub fn fine_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.c_flags[i]).collect()
    }

    /// Coarse-side index of each variable (position within the coarse set).
    pub fn coarse_rank(&self) -> Vec<Option<usize>> {
        let mut rank = vec![None; self.len()];
        let mut next = 0;
        for i in 0..self.len() {
            if self.c_flags[i] {
                rank[i] = Some(next);
                next += 1;
            }
        }
        rank
    }

    pub fn is_superset_of(&self, other: &Partition) -> bool {
        self.len() == other.len()
            && (0..self.len()).all(|i| !other.c_flags[i] || self.c_flags[i])
    }
}
