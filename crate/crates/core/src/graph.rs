//! Welded trees and the welded-tree-path graph.
//!
//! A welded tree of height `h` is two balanced binary trees (roots `s` and
//! `t`, `2^h` leaves each) whose leaves are joined by a random cycle that
//! alternates between the two leaf sets. The welded-tree-path graph stacks
//! `n` such trees along a path `p_1 .. p_n`: `p_i` is joined to `s_i`, root
//! `t_i` carries `i + 1` pendant plug edges `(m, n)` so that its degree is
//! `i + 3`, and one random cycle runs through every plug `n` vertex.
//!
//! Vertices are addressed internally by dense [`VertexId`]s; the opaque
//! [`VertexName`] bit strings only matter at the oracle boundary.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Widest supported vertex name.
pub const MAX_NAME_BITS: u32 = 128;

/// Tallest welded tree the builders accept.
pub const MAX_TREE_HEIGHT: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A vertex name: a fixed-width bit string stored in the low bits of a `u128`.
///
/// The width is a property of the graph, not of the name, so formatting and
/// parsing take it explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexName(u128);

impl VertexName {
    pub const fn from_bits(bits: u128) -> Self {
        VertexName(bits)
    }

    pub const fn bits(self) -> u128 {
        self.0
    }

    pub const fn zero() -> Self {
        VertexName(0)
    }

    /// The all-one string of the given width.
    pub fn ones(width: u32) -> Self {
        VertexName(name_mask(width))
    }

    pub fn fits(self, width: u32) -> bool {
        self.0 & !name_mask(width) == 0
    }

    /// Lowercase hex, zero-padded to `ceil(width / 4)` digits.
    pub fn hex(self, width: u32) -> HexName {
        HexName { name: self, digits: hex_digits(width) }
    }

    pub fn parse_hex(text: &str, width: u32) -> Result<Self, NameParseError> {
        if text.len() != hex_digits(width) {
            return Err(NameParseError::Length { expected: hex_digits(width), found: text.len() });
        }
        if !text.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
            return Err(NameParseError::NotLowerHex);
        }
        let bits = u128::from_str_radix(text, 16).map_err(|_| NameParseError::NotLowerHex)?;
        let name = VertexName(bits);
        if !name.fits(width) {
            return Err(NameParseError::TooWide { width });
        }
        Ok(name)
    }
}

pub fn hex_digits(width: u32) -> usize {
    width.div_ceil(4) as usize
}

fn name_mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

pub struct HexName {
    name: VertexName,
    digits: usize,
}

impl fmt::Display for HexName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$x}", self.name.0, width = self.digits)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NameParseError {
    Length { expected: usize, found: usize },
    NotLowerHex,
    TooWide { width: u32 },
}

impl fmt::Display for NameParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NameParseError::Length { expected, found } => {
                write!(f, "expected {expected} hex digits, found {found}")
            }
            NameParseError::NotLowerHex => f.write_str("name is not lowercase hex"),
            NameParseError::TooWide { width } => write!(f, "name does not fit in {width} bits"),
        }
    }
}

impl core::error::Error for NameParseError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// What a vertex is in the construction. Tree and plug indices are 1-based.
///
/// Tree levels count from the vertex's own root: `s` and `t` sit at level 0
/// and leaves at level `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexRole {
    Path(u32),
    RootS(u32),
    RootT(u32),
    TreeInternal { tree: u32, side: Side, level: u32 },
    TreeLeaf { tree: u32, side: Side },
    PlugM { tree: u32, k: u32 },
    PlugN { tree: u32, k: u32 },
}

impl VertexRole {
    /// The welded tree this vertex belongs to, if any.
    pub fn tree(self) -> Option<u32> {
        match self {
            VertexRole::Path(_) | VertexRole::PlugM { .. } | VertexRole::PlugN { .. } => None,
            VertexRole::RootS(i) | VertexRole::RootT(i) => Some(i),
            VertexRole::TreeInternal { tree, .. } | VertexRole::TreeLeaf { tree, .. } => Some(tree),
        }
    }

    /// Column index `0 ..= 2h + 1` running from `s` to `t` through a welded
    /// tree of height `h`.
    pub fn column(self, height: u32) -> Option<u32> {
        let across = |side: Side, level: u32| match side {
            Side::Left => level,
            Side::Right => 2 * height + 1 - level,
        };
        match self {
            VertexRole::RootS(_) => Some(0),
            VertexRole::RootT(_) => Some(2 * height + 1),
            VertexRole::TreeInternal { side, level, .. } => Some(across(side, level)),
            VertexRole::TreeLeaf { side, .. } => Some(across(side, height)),
            _ => None,
        }
    }
}

fn side_tag(side: Side) -> &'static str {
    match side {
        Side::Left => "L",
        Side::Right => "R",
    }
}

impl fmt::Display for VertexRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VertexRole::Path(i) => write!(f, "p:{i}"),
            VertexRole::RootS(i) => write!(f, "s:{i}"),
            VertexRole::RootT(i) => write!(f, "t:{i}"),
            VertexRole::TreeInternal { tree, side, level } => {
                write!(f, "int:{tree}:{}:{level}", side_tag(side))
            }
            VertexRole::TreeLeaf { tree, side } => write!(f, "leaf:{tree}:{}", side_tag(side)),
            VertexRole::PlugM { tree, k } => write!(f, "m:{tree}:{k}"),
            VertexRole::PlugN { tree, k } => write!(f, "n:{tree}:{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleParseError(pub String);

impl fmt::Display for RoleParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unrecognised vertex role `{}`", self.0)
    }
}

impl core::error::Error for RoleParseError {}

impl FromStr for VertexRole {
    type Err = RoleParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || RoleParseError(String::from(text));
        let parts: Vec<&str> = text.split(':').collect();
        let num = |s: &str| -> Result<u32, RoleParseError> {
            match s.parse::<u32>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(bad()),
            }
        };
        let side = |s: &str| match s {
            "L" => Ok(Side::Left),
            "R" => Ok(Side::Right),
            _ => Err(bad()),
        };
        match parts.as_slice() {
            ["p", i] => Ok(VertexRole::Path(num(i)?)),
            ["s", i] => Ok(VertexRole::RootS(num(i)?)),
            ["t", i] => Ok(VertexRole::RootT(num(i)?)),
            ["int", t, s, l] => Ok(VertexRole::TreeInternal {
                tree: num(t)?,
                side: side(s)?,
                level: num(l)?,
            }),
            ["leaf", t, s] => Ok(VertexRole::TreeLeaf { tree: num(t)?, side: side(s)? }),
            ["m", t, k] => Ok(VertexRole::PlugM { tree: num(t)?, k: num(k)? }),
            ["n", t, k] => Ok(VertexRole::PlugN { tree: num(t)?, k: num(k)? }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphError {
    InvalidParameter(String),
    MissingVertex(VertexId),
    MissingEdge(VertexId, VertexId),
    NameSpaceExhausted { vertices: usize, name_bits: u32 },
    MalformedParts(String),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            GraphError::MissingVertex(v) => write!(f, "no vertex {v}"),
            GraphError::MissingEdge(u, v) => write!(f, "no edge {u}-{v}"),
            GraphError::NameSpaceExhausted { vertices, name_bits } => write!(
                f,
                "cannot draw {vertices} distinct names from {name_bits}-bit strings"
            ),
            GraphError::MalformedParts(msg) => write!(f, "malformed graph: {msg}"),
        }
    }
}

impl core::error::Error for GraphError {}

/// An undirected graph with named, role-annotated vertices.
///
/// Neighbour lists are kept sorted. Self-loops and parallel edges can be
/// represented (so that a tampered file loads and then fails
/// [`WeldedTreePathGraph::validate`]) but the builders never produce them.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledGraph {
    name_bits: u32,
    adjacency: Vec<Vec<VertexId>>,
    names: Vec<VertexName>,
    roles: Vec<VertexRole>,
    by_name: BTreeMap<VertexName, VertexId>,
    by_role: BTreeMap<VertexRole, VertexId>,
}

impl LabeledGraph {
    pub fn from_parts(
        name_bits: u32,
        names: Vec<VertexName>,
        roles: Vec<VertexRole>,
        edges: &[(VertexId, VertexId)],
    ) -> Result<Self, GraphError> {
        if names.len() != roles.len() {
            return Err(GraphError::MalformedParts(format!(
                "{} names for {} roles",
                names.len(),
                roles.len()
            )));
        }
        if name_bits == 0 || name_bits > MAX_NAME_BITS {
            return Err(GraphError::InvalidParameter(format!("name width {name_bits}")));
        }
        if names.len() > u32::MAX as usize {
            return Err(GraphError::MalformedParts(String::from("too many vertices")));
        }
        let mut graph = LabeledGraph {
            name_bits,
            adjacency: vec![Vec::new(); names.len()],
            names,
            roles,
            by_name: BTreeMap::new(),
            by_role: BTreeMap::new(),
        };
        for &(u, v) in edges {
            graph.add_edge(u, v)?;
        }
        graph.reindex();
        Ok(graph)
    }

    fn reindex(&mut self) {
        self.by_name.clear();
        self.by_role.clear();
        for (i, (&name, &role)) in self.names.iter().zip(&self.roles).enumerate() {
            self.by_name.entry(name).or_insert(VertexId(i as u32));
            self.by_role.entry(role).or_insert(VertexId(i as u32));
        }
    }

    pub fn name_bits(&self) -> u32 {
        self.name_bits
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.adjacency.len() as u32).map(VertexId)
    }

    fn check(&self, v: VertexId) -> Result<(), GraphError> {
        if v.index() < self.adjacency.len() {
            Ok(())
        } else {
            Err(GraphError::MissingVertex(v))
        }
    }

    /// Sorted neighbours of `v`. Panics if `v` is out of range.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v.index()]
    }

    pub fn degree(&self, v: VertexId) -> Result<usize, GraphError> {
        self.check(v)?;
        Ok(self.adjacency[v.index()].len())
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        u.index() < self.adjacency.len() && self.adjacency[u.index()].binary_search(&v).is_ok()
    }

    pub fn name(&self, v: VertexId) -> VertexName {
        self.names[v.index()]
    }

    pub fn names(&self) -> &[VertexName] {
        &self.names
    }

    pub fn role(&self, v: VertexId) -> VertexRole {
        self.roles[v.index()]
    }

    pub fn roles(&self) -> &[VertexRole] {
        &self.roles
    }

    pub fn vertex_by_name(&self, name: VertexName) -> Option<VertexId> {
        self.by_name.get(&name).copied()
    }

    pub fn vertex_by_role(&self, role: VertexRole) -> Option<VertexId> {
        self.by_role.get(&role).copied()
    }

    /// Replaces one vertex name. Duplicates are accepted here and reported by
    /// validation.
    pub fn set_name(&mut self, v: VertexId, name: VertexName) -> Result<(), GraphError> {
        self.check(v)?;
        self.names[v.index()] = name;
        self.reindex();
        Ok(())
    }

    /// Replaces every vertex name at once, keeping the structure.
    pub fn set_names(&mut self, names: Vec<VertexName>) -> Result<(), GraphError> {
        if names.len() != self.names.len() {
            return Err(GraphError::MalformedParts(format!(
                "{} names for {} vertices",
                names.len(),
                self.names.len()
            )));
        }
        self.names = names;
        self.reindex();
        Ok(())
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<(), GraphError> {
        self.check(u)?;
        self.check(v)?;
        insert_sorted(&mut self.adjacency[u.index()], v);
        if u != v {
            insert_sorted(&mut self.adjacency[v.index()], u);
        }
        Ok(())
    }

    /// Removes one copy of the undirected edge `u-v` from both endpoints.
    pub fn delete_edge(&mut self, u: VertexId, v: VertexId) -> Result<(), GraphError> {
        self.check(u)?;
        self.check(v)?;
        let pos_u = self.adjacency[u.index()]
            .binary_search(&v)
            .map_err(|_| GraphError::MissingEdge(u, v))?;
        self.adjacency[u.index()].remove(pos_u);
        if u != v {
            if let Ok(pos_v) = self.adjacency[v.index()].binary_search(&u) {
                self.adjacency[v.index()].remove(pos_v);
            }
        }
        Ok(())
    }

    /// Every edge once as `(low, high)`, lexicographically sorted. Parallel
    /// edges repeat.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for (u, list) in self.adjacency.iter().enumerate() {
            let u = VertexId(u as u32);
            for &v in list {
                if u <= v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Connected-component label for every vertex, plus the number of
    /// components.
    pub fn component_labels(&self) -> (Vec<u32>, usize) {
        components_of(&self.adjacency)
    }
}

fn insert_sorted(list: &mut Vec<VertexId>, v: VertexId) {
    let pos = list.partition_point(|&w| w <= v);
    list.insert(pos, v);
}

pub(crate) fn components_of(adjacency: &[Vec<VertexId>]) -> (Vec<u32>, usize) {
    const UNSEEN: u32 = u32::MAX;
    let mut label = vec![UNSEEN; adjacency.len()];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for root in 0..adjacency.len() {
        if label[root] != UNSEEN {
            continue;
        }
        label[root] = count;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &w in &adjacency[u] {
                if label[w.index()] == UNSEEN {
                    label[w.index()] = count;
                    queue.push_back(w.index());
                }
            }
        }
        count += 1;
    }
    (label, count as usize)
}

#[derive(Default)]
struct Builder {
    adjacency: Vec<Vec<VertexId>>,
    roles: Vec<VertexRole>,
}

impl Builder {
    fn add(&mut self, role: VertexRole) -> VertexId {
        let id = VertexId(self.adjacency.len() as u32);
        self.adjacency.push(Vec::new());
        self.roles.push(role);
        id
    }

    fn connect(&mut self, a: VertexId, b: VertexId) {
        self.adjacency[a.index()].push(b);
        self.adjacency[b.index()].push(a);
    }

    fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list {
                if (u as u32) < v.0 {
                    out.push((VertexId(u as u32), v));
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn finish(mut self, name_bits: u32, names: Vec<VertexName>) -> LabeledGraph {
        for list in &mut self.adjacency {
            list.sort_unstable();
        }
        let mut graph = LabeledGraph {
            name_bits,
            adjacency: self.adjacency,
            names,
            roles: self.roles,
            by_name: BTreeMap::new(),
            by_role: BTreeMap::new(),
        };
        graph.reindex();
        graph
    }
}

struct WeldLayout {
    s: VertexId,
    t: VertexId,
    leaf_cycle: Vec<VertexId>,
}

/// Adds one welded tree to `builder`. Each side is laid out in heap order
/// (children of `j` at `2j + 1`, `2j + 2`), left side first.
fn weld_into<R: Rng + ?Sized>(
    builder: &mut Builder,
    tree: u32,
    height: u32,
    rng: &mut R,
) -> WeldLayout {
    let per_side = (1usize << (height + 1)) - 1;
    let first_leaf = (1usize << height) - 1;
    let mut sides = [Vec::with_capacity(per_side), Vec::with_capacity(per_side)];
    for (slot, side) in [Side::Left, Side::Right].into_iter().enumerate() {
        for j in 0..per_side {
            let level = usize::BITS - 1 - (j + 1).leading_zeros();
            let role = if j == 0 {
                match side {
                    Side::Left => VertexRole::RootS(tree),
                    Side::Right => VertexRole::RootT(tree),
                }
            } else if level == height {
                VertexRole::TreeLeaf { tree, side }
            } else {
                VertexRole::TreeInternal { tree, side, level }
            };
            let id = builder.add(role);
            sides[slot].push(id);
            if j > 0 {
                builder.connect(sides[slot][(j - 1) / 2], id);
            }
        }
    }
    let mut left: Vec<VertexId> = sides[0][first_leaf..].to_vec();
    let mut right: Vec<VertexId> = sides[1][first_leaf..].to_vec();
    left.shuffle(rng);
    right.shuffle(rng);
    let leaves = left.len();
    let mut leaf_cycle = Vec::with_capacity(2 * leaves);
    for j in 0..leaves {
        builder.connect(left[j], right[j]);
        builder.connect(right[j], left[(j + 1) % leaves]);
        leaf_cycle.push(left[j]);
        leaf_cycle.push(right[j]);
    }
    WeldLayout { s: sides[0][0], t: sides[1][0], leaf_cycle }
}

fn check_height(height: u32) -> Result<(), GraphError> {
    if height == 0 || height > MAX_TREE_HEIGHT {
        return Err(GraphError::InvalidParameter(format!(
            "tree height must be in 1..={MAX_TREE_HEIGHT}, got {height}"
        )));
    }
    Ok(())
}

/// Number of vertices in a welded tree of the given height.
pub fn welded_tree_vertex_count(height: u32) -> usize {
    (1usize << (height + 2)) - 2
}

/// An unnamed welded tree: roles, edges and the leaf cycle in walk order.
#[derive(Clone, Debug, PartialEq)]
pub struct WeldedTreeFragment {
    pub height: u32,
    pub roles: Vec<VertexRole>,
    pub edges: Vec<(VertexId, VertexId)>,
    pub s: VertexId,
    pub t: VertexId,
    pub leaf_cycle: Vec<VertexId>,
}

pub fn build_welded_tree<R: Rng + ?Sized>(
    height: u32,
    rng: &mut R,
) -> Result<WeldedTreeFragment, GraphError> {
    check_height(height)?;
    let mut builder = Builder::default();
    let layout = weld_into(&mut builder, 1, height, rng);
    Ok(WeldedTreeFragment {
        height,
        edges: builder.edges(),
        roles: builder.roles,
        s: layout.s,
        t: layout.t,
        leaf_cycle: layout.leaf_cycle,
    })
}

/// Draws distinct names for `vertex_count` vertices.
///
/// `pinned` names are kept as given; every other vertex gets a name drawn
/// uniformly without replacement from the `name_bits`-wide strings, never
/// the all-zero or all-one string.
pub fn assign_names<R: Rng + ?Sized>(
    vertex_count: usize,
    pinned: &[(VertexId, VertexName)],
    name_bits: u32,
    rng: &mut R,
) -> Result<Vec<VertexName>, GraphError> {
    if name_bits == 0 || name_bits > MAX_NAME_BITS {
        return Err(GraphError::InvalidParameter(format!("name width {name_bits}")));
    }
    let exhausted = GraphError::NameSpaceExhausted { vertices: vertex_count, name_bits };
    let mask = name_mask(name_bits);
    if name_bits < 128 && (vertex_count as u128) > mask - 1 + pinned.len() as u128 {
        return Err(exhausted);
    }
    let mut used: BTreeSet<u128> = BTreeSet::new();
    used.insert(0);
    used.insert(mask);
    let mut names: Vec<Option<VertexName>> = vec![None; vertex_count];
    for &(v, name) in pinned {
        if v.index() >= vertex_count {
            return Err(GraphError::MissingVertex(v));
        }
        names[v.index()] = Some(name);
        used.insert(name.0);
    }
    let mut attempts_left = 64 * vertex_count as u64 + 1024;
    for slot in names.iter_mut().filter(|n| n.is_none()) {
        loop {
            if attempts_left == 0 {
                return Err(exhausted);
            }
            attempts_left -= 1;
            let candidate = rng.gen::<u128>() & mask;
            if used.insert(candidate) {
                *slot = Some(VertexName(candidate));
                break;
            }
        }
    }
    Ok(names.into_iter().map(|n| n.unwrap_or(VertexName(0))).collect())
}

/// Default name width for a graph of `vertex_count` vertices:
/// `max(floor_bits, ceil(log2 V) + 2)`.
pub fn default_name_bits(vertex_count: usize, floor_bits: u32) -> u32 {
    let log = usize::BITS - vertex_count.saturating_sub(1).leading_zeros();
    floor_bits.max(log + 2).min(MAX_NAME_BITS)
}

fn check_name_width(vertex_count: usize, name_bits: u32) -> Result<(), GraphError> {
    if name_bits == 0 || name_bits > MAX_NAME_BITS {
        return Err(GraphError::InvalidParameter(format!(
            "name width must be in 1..={MAX_NAME_BITS}, got {name_bits}"
        )));
    }
    if name_bits < 128 && (1u128 << name_bits) < 4 * vertex_count as u128 {
        return Err(GraphError::InvalidParameter(format!(
            "{name_bits}-bit names are too narrow for {vertex_count} vertices"
        )));
    }
    Ok(())
}

/// A standalone named welded tree, `s` named all-zero.
#[derive(Clone, Debug, PartialEq)]
pub struct WeldedTree {
    height: u32,
    graph: LabeledGraph,
    s: VertexId,
    t: VertexId,
}

impl WeldedTree {
    pub fn build(height: u32, seed: u64) -> Result<Self, GraphError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build_with(height, None, &mut rng)
    }

    pub fn build_with<R: Rng + ?Sized>(
        height: u32,
        name_bits: Option<u32>,
        rng: &mut R,
    ) -> Result<Self, GraphError> {
        let fragment = build_welded_tree(height, rng)?;
        let count = fragment.roles.len();
        let bits = name_bits.unwrap_or_else(|| default_name_bits(count, 2 * height));
        check_name_width(count, bits)?;
        let names = assign_names(count, &[(fragment.s, VertexName::zero())], bits, rng)?;
        let graph = LabeledGraph::from_parts(bits, names, fragment.roles, &fragment.edges)?;
        Ok(WeldedTree { height, graph, s: fragment.s, t: fragment.t })
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.graph
    }

    pub fn s(&self) -> VertexId {
        self.s
    }

    pub fn t(&self) -> VertexId {
        self.t
    }

    pub fn validate(&self) -> Vec<Violation> {
        let g = &self.graph;
        let mut out = structural_violations(g);
        let (_, components) = g.component_labels();
        if components != 1 {
            out.push(Violation::Disconnected { components });
        }
        for v in g.vertices() {
            let expected = if v == self.s || v == self.t { 2 } else { 3 };
            let actual = g.neighbors(v).len();
            if actual != expected {
                out.push(Violation::DegreeMismatch { vertex: v, role: g.role(v), expected, actual });
            }
        }
        out.extend(leaf_cycle_violations(g, self.height));
        out.extend(name_violations(g));
        if g.name(self.s) != VertexName::zero() {
            out.push(Violation::EndpointName { vertex: self.s, expected: VertexName::zero() });
        }
        out
    }
}

/// Parameters of a welded-tree-path graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphParams {
    /// Path length and height of every welded tree; even and at least 2.
    pub n: u32,
    pub name_bits: u32,
    pub seed: u64,
}

/// `n * 2^(n+2) + n^2 + 2n`: `n` path vertices, `n` welded trees and
/// `sum_{i=1..n} 2(i+1)` plug vertices.
pub fn path_graph_vertex_count(n: u32) -> usize {
    let n = n as usize;
    n * welded_tree_vertex_count(n as u32) + n + n * (n + 3)
}

impl GraphParams {
    /// Parameters with the default name width `max(2n, ceil(log2 V) + 2)`.
    pub fn new(n: u32, seed: u64) -> Result<Self, GraphError> {
        check_n(n)?;
        let name_bits = default_name_bits(path_graph_vertex_count(n), 2 * n);
        let params = GraphParams { n, name_bits, seed };
        params.validate()?;
        Ok(params)
    }

    pub fn with_name_bits(self, name_bits: u32) -> Result<Self, GraphError> {
        let params = GraphParams { name_bits, ..self };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        check_n(self.n)?;
        check_name_width(self.vertex_count(), self.name_bits)
    }

    pub fn vertex_count(&self) -> usize {
        path_graph_vertex_count(self.n)
    }
}

fn check_n(n: u32) -> Result<(), GraphError> {
    if n < 2 || n % 2 != 0 {
        return Err(GraphError::InvalidParameter(format!("n must be even and >= 2, got {n}")));
    }
    check_height(n)
}

/// Every role the construction produces for a given `n`, in id order.
fn expected_roles(n: u32) -> Vec<VertexRole> {
    let mut b = Builder::default();
    for i in 1..=n {
        b.add(VertexRole::Path(i));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for i in 1..=n {
        weld_into(&mut b, i, n, &mut rng);
        for k in 1..=i + 1 {
            b.add(VertexRole::PlugM { tree: i, k });
            b.add(VertexRole::PlugN { tree: i, k });
        }
    }
    b.roles
}

/// The welded-tree-path graph `G` together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct WeldedTreePathGraph {
    params: GraphParams,
    graph: LabeledGraph,
}

impl WeldedTreePathGraph {
    pub fn build(params: GraphParams) -> Result<Self, GraphError> {
        params.validate()?;
        let n = params.n;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut b = Builder::default();
        let path: Vec<VertexId> = (1..=n).map(|i| b.add(VertexRole::Path(i))).collect();
        for pair in path.windows(2) {
            b.connect(pair[0], pair[1]);
        }
        let mut plug_ns = Vec::new();
        for i in 1..=n {
            let layout = weld_into(&mut b, i, n, &mut rng);
            b.connect(path[i as usize - 1], layout.s);
            for k in 1..=i + 1 {
                let m = b.add(VertexRole::PlugM { tree: i, k });
                let nv = b.add(VertexRole::PlugN { tree: i, k });
                b.connect(m, nv);
                b.connect(layout.t, m);
                plug_ns.push(nv);
            }
        }
        plug_ns.shuffle(&mut rng);
        for j in 0..plug_ns.len() {
            b.connect(plug_ns[j], plug_ns[(j + 1) % plug_ns.len()]);
        }
        let pinned = [
            (path[0], VertexName::zero()),
            (path[n as usize - 1], VertexName::ones(params.name_bits)),
        ];
        let names = assign_names(b.roles.len(), &pinned, params.name_bits, &mut rng)?;
        let graph = b.finish(params.name_bits, names);
        Ok(WeldedTreePathGraph { params, graph })
    }

    /// Wraps a graph that was loaded from elsewhere. The role set must be
    /// exactly the one the construction produces for `params.n`; everything
    /// else (edges, names) is left to [`validate`](Self::validate).
    pub fn from_parts(params: GraphParams, graph: LabeledGraph) -> Result<Self, GraphError> {
        params.validate()?;
        if graph.name_bits() != params.name_bits {
            return Err(GraphError::MalformedParts(format!(
                "graph uses {}-bit names, parameters say {}",
                graph.name_bits(),
                params.name_bits
            )));
        }
        let mut expected = expected_roles(params.n);
        let mut found = graph.roles().to_vec();
        if expected.len() != found.len() {
            return Err(GraphError::MalformedParts(format!(
                "expected {} vertices for n = {}, found {}",
                expected.len(),
                params.n,
                found.len()
            )));
        }
        expected.sort_unstable();
        found.sort_unstable();
        if let Some((want, got)) = expected.iter().zip(&found).find(|(a, b)| a != b) {
            return Err(GraphError::MalformedParts(format!(
                "role set mismatch: expected {want}, found {got}"
            )));
        }
        Ok(WeldedTreePathGraph { params, graph })
    }

    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    pub fn n(&self) -> u32 {
        self.params.n
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.graph
    }

    pub fn graph_mut(&mut self) -> &mut LabeledGraph {
        &mut self.graph
    }

    fn role_vertex(&self, role: VertexRole) -> VertexId {
        self.graph
            .vertex_by_role(role)
            .unwrap_or_else(|| panic!("role {role} is not part of this graph"))
    }

    pub fn path_vertex(&self, i: u32) -> VertexId {
        self.role_vertex(VertexRole::Path(i))
    }

    pub fn x(&self) -> VertexId {
        self.path_vertex(1)
    }

    pub fn y(&self) -> VertexId {
        self.path_vertex(self.params.n)
    }

    pub fn root_s(&self, i: u32) -> VertexId {
        self.role_vertex(VertexRole::RootS(i))
    }

    pub fn root_t(&self, i: u32) -> VertexId {
        self.role_vertex(VertexRole::RootT(i))
    }

    pub fn plug_m(&self, tree: u32, k: u32) -> VertexId {
        self.role_vertex(VertexRole::PlugM { tree, k })
    }

    pub fn plug_n(&self, tree: u32, k: u32) -> VertexId {
        self.role_vertex(VertexRole::PlugN { tree, k })
    }

    /// The degree this vertex has in a freshly built graph.
    pub fn expected_degree(&self, role: VertexRole) -> usize {
        let n = self.params.n;
        match role {
            VertexRole::Path(i) if i == 1 || i == n => 2,
            VertexRole::RootT(i) => i as usize + 3,
            VertexRole::PlugM { .. } => 2,
            _ => 3,
        }
    }

    /// Every invariant violation of the current graph; empty when valid.
    pub fn validate(&self) -> Vec<Violation> {
        let g = &self.graph;
        let mut out = structural_violations(g);
        let (_, components) = g.component_labels();
        if components != 1 {
            out.push(Violation::Disconnected { components });
        }

        let mut high_expected = BTreeSet::new();
        let mut two_expected = BTreeSet::new();
        for v in g.vertices() {
            let role = g.role(v);
            let expected = self.expected_degree(role);
            let actual = g.neighbors(v).len();
            if actual != expected {
                out.push(Violation::DegreeMismatch { vertex: v, role, expected, actual });
            }
            match expected {
                2 => {
                    two_expected.insert(v);
                }
                d if d >= 4 => {
                    high_expected.insert(v);
                }
                _ => {}
            }
        }
        let high_found: BTreeSet<VertexId> = g.vertices().filter(|&v| g.neighbors(v).len() >= 4).collect();
        if high_found != high_expected {
            out.push(Violation::HighDegreeSet {
                unexpected: high_found.difference(&high_expected).copied().collect(),
                missing: high_expected.difference(&high_found).copied().collect(),
            });
        }
        let two_found: BTreeSet<VertexId> = g.vertices().filter(|&v| g.neighbors(v).len() == 2).collect();
        if two_found != two_expected {
            out.push(Violation::DegreeTwoSet {
                unexpected: two_found.difference(&two_expected).copied().collect(),
                missing: two_expected.difference(&two_found).copied().collect(),
            });
        }

        out.extend(leaf_cycle_violations(g, self.params.n));
        out.extend(name_violations(g));
        let x = self.x();
        if g.name(x) != VertexName::zero() {
            out.push(Violation::EndpointName { vertex: x, expected: VertexName::zero() });
        }
        let y = self.y();
        let ones = VertexName::ones(self.params.name_bits);
        if g.name(y) != ones {
            out.push(Violation::EndpointName { vertex: y, expected: ones });
        }
        out
    }
}

/// One broken invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    SelfLoop { vertex: VertexId },
    MultiEdge { u: VertexId, v: VertexId },
    Asymmetric { u: VertexId, v: VertexId },
    Disconnected { components: usize },
    DegreeMismatch { vertex: VertexId, role: VertexRole, expected: usize, actual: usize },
    /// The degree >= 4 vertices are not exactly the `t_i` roots.
    HighDegreeSet { unexpected: Vec<VertexId>, missing: Vec<VertexId> },
    /// The degree-2 vertices are not exactly `{p_1, p_n}` and the plug `m`s.
    DegreeTwoSet { unexpected: Vec<VertexId>, missing: Vec<VertexId> },
    LeafCycle { tree: u32, vertex: VertexId, problem: LeafCycleProblem },
    DuplicateName { name: VertexName, first: VertexId, second: VertexId },
    NameTooWide { vertex: VertexId },
    EndpointName { vertex: VertexId, expected: VertexName },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafCycleProblem {
    /// A leaf is joined to a leaf on its own side.
    SameSide,
    /// A leaf does not have exactly two leaf neighbours.
    LeafDegree(usize),
    /// The leaf edges do not form one cycle through every leaf.
    NotHamiltonian { cycle_length: usize, leaves: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { vertex } => write!(f, "self-loop at {vertex}"),
            Violation::MultiEdge { u, v } => write!(f, "parallel edges {u}-{v}"),
            Violation::Asymmetric { u, v } => write!(f, "edge {u}-{v} is not symmetric"),
            Violation::Disconnected { components } => {
                write!(f, "graph has {components} connected components")
            }
            Violation::DegreeMismatch { vertex, role, expected, actual } => {
                write!(f, "deg({role} {vertex}) = {actual}, expected {expected}")
            }
            Violation::HighDegreeSet { unexpected, missing } => write!(
                f,
                "degree>=4 set differs from the t roots: unexpected {unexpected:?}, missing {missing:?}"
            ),
            Violation::DegreeTwoSet { unexpected, missing } => write!(
                f,
                "degree-2 set differs from p_1, p_n and plug m vertices: unexpected {unexpected:?}, missing {missing:?}"
            ),
            Violation::LeafCycle { tree, vertex, problem } => {
                write!(f, "leaf cycle of tree {tree} broken at {vertex}: {problem:?}")
            }
            Violation::DuplicateName { name, first, second } => {
                write!(f, "name {:#x} used by {first} and {second}", name.bits())
            }
            Violation::NameTooWide { vertex } => write!(f, "name of {vertex} exceeds the name width"),
            Violation::EndpointName { vertex, expected } => {
                write!(f, "endpoint {vertex} should be named {:#x}", expected.bits())
            }
        }
    }
}

fn structural_violations(g: &LabeledGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    for u in g.vertices() {
        let list = g.neighbors(u);
        for (j, &v) in list.iter().enumerate() {
            let first_copy = j == 0 || list[j - 1] != v;
            if !first_copy {
                if u < v || u == v {
                    out.push(Violation::MultiEdge { u, v });
                }
                continue;
            }
            if v == u {
                out.push(Violation::SelfLoop { vertex: u });
                continue;
            }
            if v.index() >= g.vertex_count() {
                out.push(Violation::Asymmetric { u, v });
                continue;
            }
            let forward = list.iter().filter(|&&w| w == v).count();
            let backward = g.neighbors(v).iter().filter(|&&w| w == u).count();
            if forward != backward && u < v {
                out.push(Violation::Asymmetric { u, v });
            }
        }
    }
    out
}

fn leaf_cycle_violations(g: &LabeledGraph, height: u32) -> Vec<Violation> {
    let mut leaves: BTreeMap<u32, Vec<VertexId>> = BTreeMap::new();
    for v in g.vertices() {
        if let VertexRole::TreeLeaf { tree, .. } = g.role(v) {
            leaves.entry(tree).or_default().push(v);
        }
    }
    let mut out = Vec::new();
    'trees: for (&tree, list) in &leaves {
        let leaf_side = |v: VertexId| match g.role(v) {
            VertexRole::TreeLeaf { tree: t, side } if t == tree => Some(side),
            _ => None,
        };
        for &v in list {
            let own = leaf_side(v).expect("leaf role");
            let cycle_nbrs: Vec<VertexId> =
                g.neighbors(v).iter().copied().filter(|&w| leaf_side(w).is_some()).collect();
            if cycle_nbrs.iter().any(|&w| leaf_side(w) == Some(own)) {
                out.push(Violation::LeafCycle { tree, vertex: v, problem: LeafCycleProblem::SameSide });
                continue 'trees;
            }
            if cycle_nbrs.len() != 2 {
                out.push(Violation::LeafCycle {
                    tree,
                    vertex: v,
                    problem: LeafCycleProblem::LeafDegree(cycle_nbrs.len()),
                });
                continue 'trees;
            }
        }
        // Every leaf has two opposite-side leaf neighbours; walk the cycle.
        let start = list[0];
        let mut prev = start;
        let mut cur = g.neighbors(start).iter().copied().find(|&w| leaf_side(w).is_some()).unwrap();
        let mut length = 1;
        while cur != start && length <= list.len() {
            let next = g
                .neighbors(cur)
                .iter()
                .copied()
                .find(|&w| leaf_side(w).is_some() && w != prev)
                .unwrap_or(prev);
            prev = cur;
            cur = next;
            length += 1;
        }
        let expected = 2usize << height;
        if length != list.len() || list.len() != expected {
            out.push(Violation::LeafCycle {
                tree,
                vertex: start,
                problem: LeafCycleProblem::NotHamiltonian { cycle_length: length, leaves: list.len() },
            });
        }
    }
    out
}

fn name_violations(g: &LabeledGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen: BTreeMap<VertexName, VertexId> = BTreeMap::new();
    for v in g.vertices() {
        let name = g.name(v);
        if !name.fits(g.name_bits()) {
            out.push(Violation::NameTooWide { vertex: v });
        }
        if let Some(&first) = seen.get(&name) {
            out.push(Violation::DuplicateName { name, first, second: v });
        } else {
            seen.insert(name, v);
        }
    }
    out
}
