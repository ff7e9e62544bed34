//! Finite groups as validated Cayley tables.

use std::collections::VecDeque;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    /// Row-major: `table[a * order + b]` is the index of `a * b`.
    table: Vec<u32>,
    inverse: Vec<u32>,
    identity: u32,
    generators: Vec<u32>,
    distance: Vec<u32>,
}

impl FiniteGroup {
    /// Validate a Cayley table and build the word-length table for the
    /// given generators (closed under inversion here). With no generators a
    /// greedy generating set is picked by index order.
    pub fn from_table(order: usize, table: Vec<u32>, generators: Option<Vec<u32>>) -> Result<Self> {
        if order == 0 {
            return Err(LabError::Usage("a group has at least one element".into()));
        }
        if table.len() != order * order {
            return Err(LabError::Usage(format!(
                "Cayley table of order {order} needs {} entries, got {}",
                order * order,
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|&&x| x as usize >= order) {
            return Err(LabError::Usage(format!("table entry {bad} out of range")));
        }
        let mul = |a: usize, b: usize| table[a * order + b] as usize;
        let identity = (0..order)
            .find(|&e| (0..order).all(|x| mul(e, x) == x && mul(x, e) == x))
            .ok_or_else(|| LabError::Usage("Cayley table has no identity".into()))?;
        let mut inverse = vec![0u32; order];
        for (a, inv) in inverse.iter_mut().enumerate() {
            let b = (0..order)
                .find(|&b| mul(a, b) == identity && mul(b, a) == identity)
                .ok_or_else(|| LabError::Usage(format!("element {a} has no inverse")))?;
            *inv = b as u32;
        }
        for a in 0..order {
            for b in 0..order {
                let ab = mul(a, b);
                for c in 0..order {
                    if mul(ab, c) != mul(a, mul(b, c)) {
                        return Err(LabError::Usage(format!(
                            "Cayley table not associative at ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }

        let mut group = FiniteGroup {
            order,
            table,
            inverse,
            identity: identity as u32,
            generators: Vec::new(),
            distance: Vec::new(),
        };
        let gens = match generators {
            Some(g) => g,
            None => group.greedy_generators(),
        };
        group.set_generators(&gens)?;
        Ok(group)
    }

    fn greedy_generators(&self) -> Vec<u32> {
        let mut gens = Vec::new();
        let mut reached = self.closure(&gens);
        for g in 0..self.order as u32 {
            if !reached[g as usize] {
                gens.push(g);
                reached = self.closure(&gens);
            }
        }
        gens
    }

    fn closure(&self, gens: &[u32]) -> Vec<bool> {
        let mut seen = vec![false; self.order];
        seen[self.identity as usize] = true;
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &s in gens {
                let y = self.mul(s, x);
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    fn set_generators(&mut self, gens: &[u32]) -> Result<()> {
        let mut sym: Vec<u32> = Vec::new();
        for &g in gens {
            if g as usize >= self.order {
                return Err(LabError::Usage(format!("generator {g} out of range")));
            }
            if g == self.identity {
                continue;
            }
            for x in [g, self.inverse[g as usize]] {
                if !sym.contains(&x) {
                    sym.push(x);
                }
            }
        }
        let mut distance = vec![u32::MAX; self.order];
        distance[self.identity as usize] = 0;
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &s in &sym {
                let y = self.mul(s, x) as usize;
                if distance[y] == u32::MAX {
                    distance[y] = distance[x as usize] + 1;
                    queue.push_back(y as u32);
                }
            }
        }
        if distance.contains(&u32::MAX) {
            return Err(LabError::Usage("generators do not generate the group".into()));
        }
        self.generators = sym;
        self.distance = distance;
        Ok(())
    }

    /// Build from permutations of `0..degree`; products compose as
    /// `(a * b)(x) = a(b(x))`.
    pub fn from_permutations(perms: Vec<Vec<usize>>, generators: &[Vec<usize>]) -> Result<Self> {
        let order = perms.len();
        let index = |p: &[usize]| perms.iter().position(|q| q.as_slice() == p);
        let mut table = Vec::with_capacity(order * order);
        for a in &perms {
            for b in &perms {
                let ab: Vec<usize> = b.iter().map(|&x| a[x]).collect();
                let k = index(&ab)
                    .ok_or_else(|| LabError::Usage("permutation set not closed".into()))?;
                table.push(k as u32);
            }
        }
        let gens = generators
            .iter()
            .map(|g| index(g).map(|k| k as u32))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| LabError::Usage("generator not in permutation set".into()))?;
        Self::from_table(order, table, Some(gens))
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LabError::Usage("cyclic group order must be positive".into()));
        }
        let table = (0..n)
            .flat_map(|a| (0..n).map(move |b| ((a + b) % n) as u32))
            .collect();
        let gens = if n > 1 { vec![1] } else { vec![] };
        Self::from_table(n, table, Some(gens))
    }

    /// All permutations of `0..n` in lexicographic order; generated by the
    /// transposition (0 1) and the cycle x -> x+1.
    pub fn symmetric(n: usize) -> Result<Self> {
        if n == 0 || n > 6 {
            return Err(LabError::Usage(format!("symmetric group degree {n} unsupported (1..=6)")));
        }
        let perms = lex_permutations(n);
        let mut gens = Vec::new();
        if n >= 2 {
            let mut t: Vec<usize> = (0..n).collect();
            t.swap(0, 1);
            gens.push(t);
            gens.push((0..n).map(|x| (x + 1) % n).collect());
        }
        Self::from_permutations(perms, &gens)
    }

    /// Even permutations of `0..n`, generated by the 3-cycles (0 1 i).
    pub fn alternating(n: usize) -> Result<Self> {
        if n == 0 || n > 6 {
            return Err(LabError::Usage(format!("alternating group degree {n} unsupported (1..=6)")));
        }
        let perms: Vec<Vec<usize>> = lex_permutations(n).into_iter().filter(|p| is_even(p)).collect();
        let gens: Vec<Vec<usize>> = (2..n)
            .map(|i| {
                let mut c: Vec<usize> = (0..n).collect();
                c[0] = 1;
                c[1] = i;
                c[i] = 0;
                c
            })
            .collect();
        Self::from_permutations(perms, &gens)
    }

    /// Symmetries of the regular n-gon, order 2n. Index `i + n*j` is r^i s^j.
    pub fn dihedral(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LabError::Usage("dihedral parameter must be positive".into()));
        }
        let order = 2 * n;
        let mut table = Vec::with_capacity(order * order);
        for a in 0..order {
            let (ra, sa) = (a % n, a / n);
            for b in 0..order {
                let (rb, sb) = (b % n, b / n);
                let r = if sa == 0 { (ra + rb) % n } else { (ra + n - rb) % n };
                let s = (sa + sb) % 2;
                table.push((r + n * s) as u32);
            }
        }
        let gens = if n > 1 { vec![1, n as u32] } else { vec![n as u32] };
        Self::from_table(order, table, Some(gens))
    }

    /// Quaternion group {±1, ±i, ±j, ±k}: index `u + 4*s` is (-1)^s times
    /// unit u in (1, i, j, k). Generated by i and j.
    pub fn quaternion8() -> Result<Self> {
        // unit products: (sign, unit)
        const UNIT: [[(u32, u32); 4]; 4] = [
            [(0, 0), (0, 1), (0, 2), (0, 3)],
            [(0, 1), (1, 0), (0, 3), (1, 2)],
            [(0, 2), (1, 3), (1, 0), (0, 1)],
            [(0, 3), (0, 2), (1, 1), (1, 0)],
        ];
        let mut table = Vec::with_capacity(64);
        for a in 0..8u32 {
            for b in 0..8u32 {
                let (s, u) = UNIT[(a % 4) as usize][(b % 4) as usize];
                let sign = (a / 4 + b / 4 + s) % 2;
                table.push(u + 4 * sign);
            }
        }
        Self::from_table(8, table, Some(vec![1, 2]))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> u32 {
        self.identity
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.table[a as usize * self.order + b as usize]
    }

    pub fn inv(&self, a: u32) -> u32 {
        self.inverse[a as usize]
    }

    pub fn length(&self, a: u32) -> u32 {
        self.distance[a as usize]
    }

    /// Largest word length.
    pub fn diameter(&self) -> u32 {
        self.distance.iter().copied().max().unwrap_or(0)
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order as u32).all(|a| (0..self.order as u32).all(|b| self.mul(a, b) == self.mul(b, a)))
    }
}

fn lex_permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                prefix.push(x);
                rec(prefix, used, out);
                prefix.pop();
                used[x] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn is_even(p: &[usize]) -> bool {
    let inversions = (0..p.len())
        .flat_map(|i| (i + 1..p.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| p[i] > p[j])
        .count();
    inversions % 2 == 0
}
