//! Residue-class sets and the swap-action closure modulo m.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadruple::{is_primitive, Quadruple};

/// A subset of Z/mZ.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResidueClassSet {
    modulus: u64,
    members: Vec<bool>,
}

impl ResidueClassSet {
    pub fn empty(modulus: u64) -> Self {
        assert!(modulus > 0, "modulus must be positive");
        ResidueClassSet { modulus, members: vec![false; modulus as usize] }
    }

    pub fn full(modulus: u64) -> Self {
        assert!(modulus > 0, "modulus must be positive");
        ResidueClassSet { modulus, members: vec![true; modulus as usize] }
    }

    pub fn from_iter(modulus: u64, values: impl IntoIterator<Item = i128>) -> Self {
        let mut s = Self::empty(modulus);
        for v in values {
            s.insert(v);
        }
        s
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn insert(&mut self, v: i128) {
        let r = v.rem_euclid(self.modulus as i128) as usize;
        self.members[r] = true;
    }

    pub fn contains(&self, v: i128) -> bool {
        self.members[v.rem_euclid(self.modulus as i128) as usize]
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Members in increasing order.
    pub fn members(&self) -> Vec<u64> {
        (0..self.modulus).filter(|&r| self.members[r as usize]).collect()
    }

    pub fn is_subset(&self, other: &ResidueClassSet) -> bool {
        self.modulus == other.modulus
            && self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    /// Residues of `other` that are missing here.
    pub fn missing_from(&self, other: &ResidueClassSet) -> Vec<u64> {
        other.members().into_iter().filter(|&r| !self.members[r as usize]).collect()
    }

    /// Units of Z/mZ.
    pub fn units(modulus: u64) -> Self {
        Self::from_iter(
            modulus,
            (0..modulus)
                .filter(|&r| crate::quadruple::gcd_u64(r, modulus) == 1)
                .map(|r| r as i128),
        )
    }
}

impl fmt::Display for ResidueClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<String> = self.members().iter().map(u64::to_string).collect();
        write!(f, "{{{}}} mod {}", m.join(","), self.modulus)
    }
}

/// All quadruples reachable from `q` mod `m` under the four swaps.
pub fn orbit_mod(q: &Quadruple, m: u64) -> Vec<[u64; 4]> {
    let start = q.0.map(|x| (x as i128).rem_euclid(m as i128) as u64);
    let mut seen: HashSet<[u64; 4]> = HashSet::new();
    let mut stack = vec![start];
    seen.insert(start);
    let mut out = Vec::new();
    while let Some(v) = stack.pop() {
        out.push(v);
        let s = v.iter().sum::<u64>();
        for k in 0..4 {
            let mut w = v;
            // 2(s - v_k) - v_k mod m
            w[k] = ((2 * (s - v[k]) % m) + 2 * m - v[k]) % m;
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Residues mod m attained by curvatures of the packing containing `q`.
pub fn admissible_residues(q: &Quadruple, m: u64) -> Result<ResidueClassSet> {
    if m == 0 {
        return Err(Error::BadModulus { modulus: 0, reason: "modulus must be positive" });
    }
    let q = q.validated()?;
    if !is_primitive(&q) {
        return Err(Error::NotPrimitive(q.to_string()));
    }
    let mut set = ResidueClassSet::empty(m);
    for v in orbit_mod(&q, m) {
        for x in v {
            set.insert(x as i128);
        }
    }
    Ok(set)
}

/// Residue classes mod 8 taken by the odd curvatures of a packing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mod8Case {
    All1,
    All5,
    Mixed37,
}

pub fn mod8_case(root: &Quadruple) -> Result<Mod8Case> {
    let set = admissible_residues(root, 8)?;
    let odd: Vec<u64> = set.members().into_iter().filter(|r| r % 2 == 1).collect();
    match odd.as_slice() {
        [1] => Ok(Mod8Case::All1),
        [5] => Ok(Mod8Case::All5),
        s if !s.is_empty() && s.iter().all(|&r| r == 3 || r == 7) => Ok(Mod8Case::Mixed37),
        _ => Err(Error::InconsistentCase(format!("odd residues {odd:?} mod 8 for ({root})"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_moduli() {
        let q = Quadruple::new(-1, 2, 2, 3);
        assert_eq!(admissible_residues(&q, 2).unwrap().members(), vec![0, 1]);
        let r24 = admissible_residues(&q, 24).unwrap();
        assert!([6, 8].contains(&r24.len()), "{r24}");
        let p = Quadruple::new(-6, 11, 14, 15);
        assert_eq!(admissible_residues(&p, 5).unwrap().len(), 5);
    }

    #[test]
    fn mod8_examples() {
        assert_eq!(mod8_case(&Quadruple::new(-1, 2, 2, 3)).unwrap(), Mod8Case::Mixed37);
        assert_eq!(mod8_case(&Quadruple::new(-6, 11, 14, 15)).unwrap(), Mod8Case::Mixed37);
        assert_eq!(mod8_case(&Quadruple::new(-3, 5, 8, 8)).unwrap(), Mod8Case::All5);
        assert_eq!(mod8_case(&Quadruple::new(0, 0, 1, 1)).unwrap(), Mod8Case::All1);
    }

    #[test]
    fn two_odd_entries_mod_2() {
        for q in [Quadruple::new(-1, 2, 2, 3), Quadruple::new(-47, 97, 100, 108)] {
            for v in orbit_mod(&q, 2) {
                assert_eq!(v.iter().filter(|&&x| x == 1).count(), 2);
            }
        }
    }

    #[test]
    fn set_operations() {
        let u = ResidueClassSet::units(12);
        assert_eq!(u.members(), vec![1, 5, 7, 11]);
        let mut s = ResidueClassSet::empty(12);
        s.insert(-1);
        s.insert(13);
        assert_eq!(s.members(), vec![1, 11]);
        assert!(s.is_subset(&u));
        assert_eq!(s.missing_from(&u), vec![5, 7]);
        assert_eq!(s.to_string(), "{1,11} mod 12");
    }
}
