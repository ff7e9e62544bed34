use std::hash::BuildHasher;
use std::ops::Range;

use hashbrown::HashTable;
use rustc_hash::FxBuildHasher;

use super::{Element, Group};
use crate::error::{LabError, Result};

const NONE: u32 = u32::MAX;

/// Breadth-first enumeration of `B_radius(e)`.
///
/// Elements are numbered in discovery order with the generators tried in
/// their fixed order, so `B_n` is the index prefix `0..ball_len(n)` for every
/// `n <= radius`. Canonical forms live in one flat arena; the hash table
/// stores indices only.
///
/// The left Cayley graph `i -> index(s * g_i)` is recorded for every element
/// of length `< radius`; entries for the outermost sphere are absent.
pub struct BallIndex {
    radius: usize,
    ngens: usize,
    arena: Vec<i32>,
    offsets: Vec<usize>,
    table: HashTable<u32>,
    hasher: FxBuildHasher,
    level_start: Vec<usize>,
    lengths: Vec<u32>,
    left: Vec<u32>,
    parent: Vec<(u32, u16)>,
}

impl BallIndex {
    pub(crate) fn build(group: &Group, radius: usize, max_elements: usize) -> Result<BallIndex> {
        let gens = group.generators().to_vec();
        let mut ball = BallIndex {
            radius,
            ngens: gens.len(),
            arena: Vec::new(),
            offsets: vec![0],
            table: HashTable::new(),
            hasher: FxBuildHasher,
            level_start: vec![0],
            lengths: Vec::new(),
            left: Vec::new(),
            parent: Vec::new(),
        };
        ball.insert(group.identity().form(), 0, (NONE, 0));
        ball.level_start.push(1);
        for n in 0..radius {
            let level = ball.level_start[n]..ball.level_start[n + 1];
            for i in level {
                let g = Element::from_form(ball.form(i));
                for (s, gen) in gens.iter().enumerate() {
                    let y = group.mul(gen, &g);
                    let j = match ball.find(y.form()) {
                        Some(j) => j,
                        None => ball.insert(y.form(), n as u32 + 1, (i as u32, s as u16)),
                    };
                    ball.left[i * ball.ngens + s] = j as u32;
                }
                if ball.len() > max_elements {
                    return Err(LabError::Resource {
                        reason: format!(
                            "ball of radius {radius} in {} exceeds {max_elements} elements",
                            group.descriptor()
                        ),
                        largest_radius: n,
                    });
                }
            }
            ball.level_start.push(ball.len());
        }
        ball.arena.shrink_to_fit();
        Ok(ball)
    }

    fn find(&self, form: &[i32]) -> Option<usize> {
        let hash = self.hasher.hash_one(form);
        self.table
            .find(hash, |&k| self.form(k as usize) == form)
            .map(|&k| k as usize)
    }

    fn insert(&mut self, form: &[i32], length: u32, parent: (u32, u16)) -> usize {
        let idx = self.lengths.len();
        self.arena.extend_from_slice(form);
        self.offsets.push(self.arena.len());
        self.lengths.push(length);
        self.parent.push(parent);
        self.left.extend(std::iter::repeat_n(NONE, self.ngens));
        let BallIndex { arena, offsets, table, hasher, .. } = self;
        let hash = hasher.hash_one(form);
        table.insert_unique(hash, idx as u32, |&k| {
            let k = k as usize;
            hasher.hash_one(&arena[offsets[k]..offsets[k + 1]])
        });
        idx
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    /// `|B_n|` for `n <= radius`.
    pub fn ball_len(&self, n: usize) -> usize {
        assert!(n <= self.radius, "ball radius {n} beyond index radius {}", self.radius);
        self.level_start[n + 1]
    }

    /// Index range of the sphere `S_n`.
    pub fn level_range(&self, n: usize) -> Range<usize> {
        assert!(n <= self.radius, "sphere radius {n} beyond index radius {}", self.radius);
        self.level_start[n]..self.level_start[n + 1]
    }

    pub fn form(&self, i: usize) -> &[i32] {
        &self.arena[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn element(&self, i: usize) -> Element {
        Element::from_form(self.form(i))
    }

    pub fn length(&self, i: usize) -> u32 {
        self.lengths[i]
    }

    pub fn index_of(&self, g: &Element) -> Option<usize> {
        self.find(g.form())
    }

    /// Index of `s * g_i` for generator number `s`, when recorded.
    pub fn left_neighbor(&self, i: usize, s: usize) -> Option<usize> {
        match self.left[i * self.ngens + s] {
            NONE => None,
            j => Some(j as usize),
        }
    }

    /// Generator numbers `s_1, ..., s_k` with `g_i = s_1 s_2 ... s_k`, k = l(g_i).
    pub fn word_of(&self, mut i: usize) -> Vec<u16> {
        let mut word = Vec::with_capacity(self.lengths[i] as usize);
        while self.parent[i].0 != NONE {
            let (p, s) = self.parent[i];
            word.push(s);
            i = p as usize;
        }
        word
    }

    /// Index of `h * g_j` where `word` spells `h` (see [`Self::word_of`]).
    /// `None` when a step leaves the recorded part of the graph.
    pub fn translate(&self, word: &[u16], j: usize) -> Option<usize> {
        word.iter().rev().try_fold(j, |k, &s| self.left_neighbor(k, s as usize))
    }
}
