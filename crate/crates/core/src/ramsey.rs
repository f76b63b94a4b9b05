//! Monochromatic extraction within one class.
//!
//! The engine follows the strong-from-weak recursion: take the first point
//! `y_j` of the current stream `X_j` as a pivot, fix it in the coloring,
//! recursively thin `X_j \ {y_j}` to a set that is monochromatic for the
//! fixed coloring, and record the color as `y_j`'s pivot color. A final
//! pigeonhole over pivot colors selects the output. Every output set is
//! monochromatic by construction; the majority guesses only affect whether
//! the search terminates within its fuel.

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorings::{Color, Coloring, ColoringError, TypeTable};
use crate::relspace::{OmegaEnum, Point, RelError, Section, Space};

pub const ENGINE_VERSION: &str = concat!("ramsey-lab/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RamseyError {
    #[error("fuel exhausted after {spent} steps with {} pivots found", partial.len())]
    FuelExhausted { spent: u64, partial: Vec<Point> },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Coloring(ColoringError),
}

impl From<ColoringError> for RamseyError {
    fn from(e: ColoringError) -> Self {
        match e {
            ColoringError::Rel(RelError::FuelExhausted(spent)) => RamseyError::FuelExhausted { spent, partial: Vec::new() },
            e => RamseyError::Coloring(e),
        }
    }
}

impl From<RelError> for RamseyError {
    fn from(e: RelError) -> Self {
        ColoringError::from(e).into()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractParams {
    pub t: usize,
    pub horizon: usize,
    pub fuel: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonoCertificate {
    pub points: Vec<Point>,
    pub color: Color,
    pub coloring: Coloring,
    pub backend: Space,
    pub anchor: Point,
    pub params: ExtractParams,
    /// Some majority vote saw fewer elements than there are colors.
    pub thin_evidence: bool,
    pub verified: bool,
    pub engine_version: String,
}

/// One level of the top-level recursion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelState {
    pub level: usize,
    pub pivot: Point,
    /// `c_j`: the coloring with the pivot fixed.
    pub derived: Coloring,
    pub pivot_color: Color,
    /// The first elements of `X_{j+1}`.
    pub next_stream_head: Vec<Point>,
}

/// Majority vote over the first `horizon` items, least color on ties.
/// Returns the color, a thin-evidence flag, and the lazily filtered stream.
pub fn pigeonhole_by<T, I, F, E>(
    stream: I,
    k: u32,
    horizon: usize,
    mut color: F,
) -> Result<(Color, bool, impl Iterator<Item = Result<T, E>>), E>
where
    I: Iterator<Item = T>,
    F: FnMut(&T) -> Result<Color, E>,
{
    let mut stream = stream;
    let mut seen = Vec::with_capacity(horizon);
    let mut counts = vec![0usize; k as usize + 1];
    for item in stream.by_ref().take(horizon) {
        let a = color(&item)?;
        counts[a as usize] += 1;
        seen.push((item, a));
    }
    let chosen = majority(&counts);
    let thin = seen.len() < k as usize;
    let head = seen.into_iter().filter(move |(_, a)| *a == chosen).map(|(x, _)| Ok(x));
    let tail = stream.filter_map(move |x| match color(&x) {
        Ok(a) if a == chosen => Some(Ok(x)),
        Ok(_) => None,
        Err(e) => Some(Err(e)),
    });
    Ok((chosen, thin, head.chain(tail)))
}

/// [`pigeonhole_by`] for a dimension-1 coloring.
pub fn pigeonhole_filter<'a, I>(
    space: &'a Space,
    c: &'a Coloring,
    stream: I,
    horizon: usize,
) -> Result<(Color, bool, impl Iterator<Item = Result<Point, ColoringError>> + 'a), ColoringError>
where
    I: Iterator<Item = Point> + 'a,
{
    if c.dim() != 1 {
        return Err(ColoringError::WrongArity { expected: 1, got: c.dim() });
    }
    pigeonhole_by(stream, c.colors(), horizon, move |x| c.color_refs(space, &[x]))
}

fn majority(counts: &[usize]) -> Color {
    let mut best = 1;
    for (a, &n) in counts.iter().enumerate().skip(1) {
        if n > counts[best] {
            best = a;
        }
    }
    best as Color
}

type NodeId = usize;

enum Kind {
    Base,
    /// The parent stream without its first element.
    Tail { parent: NodeId },
    /// Pigeonhole over `c(fixed ∪ {z})` for `z` in the parent.
    Filter { parent: NodeId, scanned: Vec<Color>, color: Option<Color> },
    /// Pivot recursion over `c(fixed ∪ ·)`; `stream` is the current `X_j`.
    Pivot { stream: NodeId, pivots: Vec<(usize, Color)>, color: Option<Color>, cursor: usize },
}

struct Node {
    kind: Kind,
    fixed: Vec<usize>,
    out: Vec<usize>,
}

/// Running majority vote. Once some color holds more than half of the
/// horizon the outcome of the full vote is settled and the scan may stop.
struct Vote {
    counts: Vec<usize>,
    seen: usize,
    horizon: usize,
}

impl Vote {
    fn new(k: u32, horizon: usize) -> Self {
        Vote { counts: vec![0; k as usize + 1], seen: 0, horizon }
    }

    fn add(&mut self, a: Color) {
        self.counts[a as usize] += 1;
        self.seen += 1;
    }

    fn settled(&self) -> bool {
        self.seen >= self.horizon || self.counts.iter().any(|&n| 2 * n > self.horizon)
    }

    fn winner(&self) -> Color {
        majority(&self.counts)
    }
}

/// The general strategy: streams are materialized node by node, and every
/// element is evaluated at each filter it passes. Stream elements are
/// indices into the cached base enumeration.
struct Generic<'a> {
    space: &'a Space,
    anchor: Point,
    coloring: &'a Coloring,
    horizon: usize,
    fuel: u64,
    spent: u64,
    thin: bool,
    base: OmegaEnum,
    points: Vec<Point>,
    nodes: Vec<Node>,
    root: NodeId,
}

impl<'a> Generic<'a> {
    fn new(
        space: &'a Space,
        coloring: &'a Coloring,
        anchor: &Point,
        horizon: usize,
        fuel: u64,
    ) -> Result<Self, RamseyError> {
        let base = space.omega_enumerate(anchor)?;
        let mut ex = Generic {
            space,
            anchor: anchor.clone(),
            coloring,
            horizon,
            fuel,
            spent: 0,
            thin: false,
            base,
            points: Vec::new(),
            nodes: vec![Node { kind: Kind::Base, fixed: Vec::new(), out: Vec::new() }],
            root: 0,
        };
        ex.root = ex.level_node(0, Vec::new());
        Ok(ex)
    }

    fn color(&mut self) -> Result<Color, RamseyError> {
        self.decide(self.root).map_err(|e| self.with_partial(e))
    }

    fn get(&mut self, i: usize) -> Result<Point, RamseyError> {
        match self.pull(self.root, i) {
            Ok(ix) => Ok(self.points[ix].clone()),
            Err(e) => Err(self.with_partial(e)),
        }
    }

    fn levels(&self) -> Vec<LevelState> {
        let Kind::Pivot { pivots, .. } = &self.nodes[self.root].kind else {
            return Vec::new();
        };
        // level j's child is the node whose fixed set is [y_j]
        pivots
            .iter()
            .enumerate()
            .map(|(level, &(y, pivot_color))| {
                let child = self.nodes.iter().position(|n| n.fixed == [y]);
                let next_stream_head = child
                    .map(|c| self.nodes[c].out.iter().take(8).map(|&i| self.points[i].clone()).collect())
                    .unwrap_or_default();
                LevelState {
                    level,
                    pivot: self.points[y].clone(),
                    derived: Coloring::Fix { base: Box::new(self.coloring.clone()), point: self.points[y].clone() },
                    pivot_color,
                    next_stream_head,
                }
            })
            .collect()
    }

    fn with_partial(&self, e: RamseyError) -> RamseyError {
        match e {
            RamseyError::FuelExhausted { spent, .. } => {
                let partial = match &self.nodes[self.root].kind {
                    Kind::Pivot { pivots, .. } => pivots.iter().map(|&(y, _)| self.points[y].clone()).collect(),
                    _ => self.nodes[self.root].out.iter().map(|&y| self.points[y].clone()).collect(),
                };
                RamseyError::FuelExhausted { spent, partial }
            }
            e => e,
        }
    }

    fn burn(&mut self) -> Result<(), RamseyError> {
        if self.spent >= self.fuel {
            return Err(RamseyError::FuelExhausted { spent: self.spent, partial: Vec::new() });
        }
        self.spent += 1;
        Ok(())
    }

    fn level_node(&mut self, parent: NodeId, fixed: Vec<usize>) -> NodeId {
        let kind = if self.coloring.dim() - fixed.len() == 1 {
            Kind::Filter { parent, scanned: Vec::new(), color: None }
        } else {
            Kind::Pivot { stream: parent, pivots: Vec::new(), color: None, cursor: 0 }
        };
        self.add(kind, fixed)
    }

    fn add(&mut self, kind: Kind, fixed: Vec<usize>) -> NodeId {
        self.nodes.push(Node { kind, fixed, out: Vec::new() });
        self.nodes.len() - 1
    }

    /// `c(fixed ∪ {z})` for the fixed points of a dimension-1 node.
    fn eval(&mut self, node: NodeId, z: usize) -> Result<Color, RamseyError> {
        self.burn()?;
        let mut set: Vec<&Point> = self.nodes[node].fixed.iter().map(|&i| &self.points[i]).collect();
        set.push(&self.points[z]);
        Ok(self.coloring.color_refs(self.space, &set)?)
    }

    fn pull(&mut self, node: NodeId, i: usize) -> Result<usize, RamseyError> {
        while self.nodes[node].out.len() <= i {
            // stream chains nest once per level of every recursion depth
            let next = stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || self.step(node))?;
            self.nodes[node].out.push(next);
        }
        Ok(self.nodes[node].out[i])
    }

    fn step(&mut self, node: NodeId) -> Result<usize, RamseyError> {
        match self.nodes[node].kind {
            Kind::Base => {
                self.burn()?;
                let p = self.base.next().expect("class enumerations are infinite");
                self.points.push(p);
                Ok(self.points.len() - 1)
            }
            Kind::Tail { parent } => {
                let k = self.nodes[node].out.len();
                self.pull(parent, k + 1)
            }
            Kind::Filter { parent, .. } => {
                let a = self.decide(node)?;
                loop {
                    let z = self.scan_next(node, parent)?;
                    if self.last_scanned(node) == a {
                        return Ok(z);
                    }
                }
            }
            Kind::Pivot { .. } => {
                let a = self.decide(node)?;
                loop {
                    let Kind::Pivot { pivots, cursor, .. } = &mut self.nodes[node].kind else { unreachable!() };
                    if *cursor < pivots.len() {
                        let (y, b) = pivots[*cursor];
                        *cursor += 1;
                        if b == a {
                            return Ok(y);
                        }
                    } else {
                        self.extend_pivots(node)?;
                    }
                }
            }
        }
    }

    /// Evaluates the filter on the next unscanned parent element.
    fn scan_next(&mut self, node: NodeId, parent: NodeId) -> Result<usize, RamseyError> {
        let Kind::Filter { scanned, .. } = &self.nodes[node].kind else { unreachable!() };
        let z = self.pull(parent, scanned.len())?;
        let b = self.eval(node, z)?;
        let Kind::Filter { scanned, .. } = &mut self.nodes[node].kind else { unreachable!() };
        scanned.push(b);
        Ok(z)
    }

    fn last_scanned(&self, node: NodeId) -> Color {
        let Kind::Filter { scanned, .. } = &self.nodes[node].kind else { unreachable!() };
        *scanned.last().expect("scanned at least once")
    }

    fn extend_pivots(&mut self, node: NodeId) -> Result<(), RamseyError> {
        let Kind::Pivot { stream, .. } = self.nodes[node].kind else { unreachable!() };
        let y = self.pull(stream, 0)?;
        let tail = self.add(Kind::Tail { parent: stream }, Vec::new());
        let mut fixed = self.nodes[node].fixed.clone();
        fixed.push(y);
        let child = self.level_node(tail, fixed);
        let b = self.decide(child)?;
        let Kind::Pivot { stream, pivots, .. } = &mut self.nodes[node].kind else { unreachable!() };
        pivots.push((y, b));
        *stream = child;
        Ok(())
    }

    /// The node's color: the majority over its first `horizon` candidates,
    /// least color on ties. The vote stops once its outcome is settled.
    fn decide(&mut self, node: NodeId) -> Result<Color, RamseyError> {
        let k = self.coloring.colors();
        match &self.nodes[node].kind {
            Kind::Filter { color: Some(a), .. } | Kind::Pivot { color: Some(a), .. } => return Ok(*a),
            Kind::Base | Kind::Tail { .. } => unreachable!("only extraction nodes carry colors"),
            _ => {}
        }
        let mut vote = Vote::new(k, self.horizon);
        match self.nodes[node].kind {
            Kind::Filter { parent, .. } => {
                while !vote.settled() {
                    self.scan_next(node, parent)?;
                    vote.add(self.last_scanned(node));
                }
            }
            Kind::Pivot { .. } => loop {
                let Kind::Pivot { pivots, .. } = &self.nodes[node].kind else { unreachable!() };
                if let Some(&(_, b)) = pivots.get(vote.seen) {
                    vote.add(b);
                } else if vote.settled() {
                    break;
                } else {
                    self.extend_pivots(node)?;
                }
            },
            _ => unreachable!(),
        }
        if self.horizon < k as usize {
            self.thin = true;
        }
        let a = vote.winner();
        match &mut self.nodes[node].kind {
            Kind::Filter { parent, scanned, color } => {
                *color = Some(a);
                // the output so far is the scanned prefix restricted to `a`
                let parent = *parent;
                let hits: Vec<usize> = scanned.iter().enumerate().filter(|(_, &b)| b == a).map(|(p, _)| p).collect();
                self.nodes[node].out = hits.iter().map(|&p| self.nodes[parent].out[p]).collect();
            }
            Kind::Pivot { color, .. } => *color = Some(a),
            _ => unreachable!(),
        }
        Ok(a)
    }
}

type SrcId = usize;

/// A materialized sequence of base indices: the enumeration itself or the
/// output of a pivot node.
struct Source {
    items: Vec<usize>,
    producer: Option<NodeId>,
}

/// The elements of a source from position `pos` on whose type is in `mask`.
#[derive(Clone, Copy)]
struct View {
    src: SrcId,
    mask: u32,
    pos: usize,
}

struct TypedNode {
    /// Remaining dimension of the coloring once `fixed` is fixed.
    dim: usize,
    offset: usize,
    fixed: Vec<usize>,
    stream: View,
    /// `X_{j+1}` for every level so far.
    history: Vec<View>,
    pivots: Vec<(usize, Color)>,
    color: Option<Color>,
    cursor: usize,
    out: SrcId,
}

/// The strategy for compiled colorings. A dimension-1 filter keeps exactly
/// the points of some set of types, so a chain of filters over one source is
/// a type mask over it and nothing passes through intermediate streams. It
/// makes the same choices as [`Generic`] and emits the same points.
struct Typed<'a> {
    space: &'a Space,
    anchor: Point,
    coloring: &'a Coloring,
    table: TypeTable,
    horizon: usize,
    fuel: u64,
    spent: u64,
    thin: bool,
    base: OmegaEnum,
    points: Vec<Point>,
    types: Vec<u8>,
    sources: Vec<Source>,
    nodes: Vec<TypedNode>,
    /// Dimension-1 root: the decided color and the surviving types.
    flat: Option<(Color, u32)>,
}

const ALL_TYPES: u32 = u32::MAX;

impl<'a> Typed<'a> {
    fn new(space: &'a Space, coloring: &'a Coloring, anchor: &Point, table: TypeTable, horizon: usize, fuel: u64) -> Result<Self, RamseyError> {
        let base = space.omega_enumerate(anchor)?;
        let mut ex = Typed {
            space,
            anchor: anchor.clone(),
            coloring,
            table,
            horizon,
            fuel,
            spent: 0,
            thin: false,
            base,
            points: Vec::new(),
            types: Vec::new(),
            sources: vec![Source { items: Vec::new(), producer: None }],
            nodes: Vec::new(),
            flat: None,
        };
        let root_view = View { src: 0, mask: ALL_TYPES, pos: 0 };
        ex.add_node(coloring.dim(), 0, Vec::new(), root_view);
        Ok(ex)
    }

    fn add_node(&mut self, dim: usize, offset: usize, fixed: Vec<usize>, stream: View) -> NodeId {
        let id = self.nodes.len();
        self.sources.push(Source { items: Vec::new(), producer: Some(id) });
        let out = self.sources.len() - 1;
        self.nodes.push(TypedNode {
            dim,
            offset,
            fixed,
            stream,
            history: Vec::new(),
            pivots: Vec::new(),
            color: None,
            cursor: 0,
            out,
        });
        id
    }

    fn burn(&mut self) -> Result<(), RamseyError> {
        if self.spent >= self.fuel {
            return Err(RamseyError::FuelExhausted { spent: self.spent, partial: Vec::new() });
        }
        self.spent += 1;
        Ok(())
    }

    fn item(&mut self, src: SrcId, i: usize) -> Result<usize, RamseyError> {
        while self.sources[src].items.len() <= i {
            let next = match self.sources[src].producer {
                None => {
                    self.burn()?;
                    let p = self.base.next().expect("class enumerations are infinite");
                    self.types.push(self.table.point_type(&p));
                    self.points.push(p);
                    self.points.len() - 1
                }
                Some(node) => self.next_output(node)?,
            };
            self.sources[src].items.push(next);
        }
        Ok(self.sources[src].items[i])
    }

    /// Position and element of the first member of the view.
    fn first(&mut self, view: View) -> Result<(usize, usize), RamseyError> {
        let mut pos = view.pos;
        loop {
            let z = self.item(view.src, pos)?;
            if view.mask >> self.types[z] & 1 == 1 {
                return Ok((pos, z));
            }
            self.burn()?;
            pos += 1;
        }
    }

    /// Majority vote of the filter `c(fixed ∪ {z})`, `fixed` encoded by
    /// `offset`, over the view; returns the color and the surviving view.
    fn filter(&mut self, offset: usize, view: View) -> Result<(Color, View), RamseyError> {
        let mut vote = Vote::new(self.coloring.colors(), self.horizon);
        let mut cursor = view;
        while !vote.settled() {
            let (pos, z) = self.first(cursor)?;
            self.burn()?;
            vote.add(self.table.color_at(offset + self.types[z] as usize));
            cursor.pos = pos + 1;
        }
        if self.horizon < self.coloring.colors() as usize {
            self.thin = true;
        }
        let a = vote.winner();
        let keep = (0..self.table.width())
            .filter(|&t| self.table.color_at(offset + t) == a)
            .fold(0u32, |m, t| m | 1 << t);
        Ok((a, View { mask: view.mask & keep, ..view }))
    }

    fn extend_pivots(&mut self, node: NodeId) -> Result<(), RamseyError> {
        let TypedNode { dim, offset, stream, .. } = self.nodes[node];
        let (pos, y) = self.first(stream)?;
        let child_offset = (offset + self.types[y] as usize) * self.table.width();
        let rest = View { pos: pos + 1, ..stream };
        let (b, next) = if dim == 2 {
            self.filter(child_offset, rest)?
        } else {
            let mut fixed = self.nodes[node].fixed.clone();
            fixed.push(y);
            let child = self.add_node(dim - 1, child_offset, fixed, rest);
            let b = self.decide(child)?;
            (b, View { src: self.nodes[child].out, mask: ALL_TYPES, pos: 0 })
        };
        let n = &mut self.nodes[node];
        n.pivots.push((y, b));
        n.history.push(next);
        n.stream = next;
        Ok(())
    }

    fn decide(&mut self, node: NodeId) -> Result<Color, RamseyError> {
        if let Some(a) = self.nodes[node].color {
            return Ok(a);
        }
        let mut vote = Vote::new(self.coloring.colors(), self.horizon);
        loop {
            if let Some(&(_, b)) = self.nodes[node].pivots.get(vote.seen) {
                vote.add(b);
            } else if vote.settled() {
                break;
            } else {
                self.extend_pivots(node)?;
            }
        }
        if self.horizon < self.coloring.colors() as usize {
            self.thin = true;
        }
        let a = vote.winner();
        self.nodes[node].color = Some(a);
        Ok(a)
    }

    fn next_output(&mut self, node: NodeId) -> Result<usize, RamseyError> {
        let a = self.decide(node)?;
        loop {
            let n = &mut self.nodes[node];
            if let Some(&(y, b)) = n.pivots.get(n.cursor) {
                n.cursor += 1;
                if b == a {
                    return Ok(y);
                }
            } else {
                self.extend_pivots(node)?;
            }
        }
    }

    fn root_color(&mut self) -> Result<Color, RamseyError> {
        if self.coloring.dim() > 1 {
            return self.decide(0);
        }
        if let Some((a, _)) = self.flat {
            return Ok(a);
        }
        let (a, view) = self.filter(0, View { src: 0, mask: ALL_TYPES, pos: 0 })?;
        self.flat = Some((a, view.mask));
        Ok(a)
    }

    fn color(&mut self) -> Result<Color, RamseyError> {
        self.root_color().map_err(|e| self.with_partial(e))
    }

    fn get(&mut self, i: usize) -> Result<Point, RamseyError> {
        let r = self.root_color().and_then(|_| match self.flat {
            Some((_, mask)) => {
                let mut view = View { src: 0, mask, pos: 0 };
                let mut z = 0;
                for _ in 0..=i {
                    let (pos, found) = self.first(view)?;
                    z = found;
                    view.pos = pos + 1;
                }
                Ok(z)
            }
            None => {
                let out = self.nodes[0].out;
                self.item(out, i)
            }
        });
        match r {
            Ok(z) => Ok(self.points[z].clone()),
            Err(e) => Err(self.with_partial(e)),
        }
    }

    fn with_partial(&self, e: RamseyError) -> RamseyError {
        match e {
            RamseyError::FuelExhausted { spent, .. } => {
                let partial = match self.flat {
                    Some(_) => Vec::new(),
                    None => self.nodes[0].pivots.iter().map(|&(y, _)| self.points[y].clone()).collect(),
                };
                RamseyError::FuelExhausted { spent, partial }
            }
            e => e,
        }
    }

    /// Already materialized members of a view, without extending anything.
    fn peek(&self, view: View, limit: usize) -> Vec<Point> {
        self.sources[view.src].items[view.pos.min(self.sources[view.src].items.len())..]
            .iter()
            .filter(|&&z| view.mask >> self.types[z] & 1 == 1)
            .take(limit)
            .map(|&z| self.points[z].clone())
            .collect()
    }

    fn levels(&self) -> Vec<LevelState> {
        if self.flat.is_some() || self.nodes.is_empty() {
            return Vec::new();
        }
        let root = &self.nodes[0];
        root.pivots
            .iter()
            .zip(&root.history)
            .enumerate()
            .map(|(level, (&(y, pivot_color), &next))| LevelState {
                level,
                pivot: self.points[y].clone(),
                derived: Coloring::Fix { base: Box::new(self.coloring.clone()), point: self.points[y].clone() },
                pivot_color,
                next_stream_head: self.peek(next, 8),
            })
            .collect()
    }
}

enum Strategy<'a> {
    Generic(Generic<'a>),
    Typed(Typed<'a>),
}

/// Lazy monochromatic extraction within the class of an anchor.
///
/// Colorings that compile to a [`TypeTable`] run on a type-mask strategy;
/// everything else evaluates the coloring at every filter. Both strategies
/// emit the same points; only their step counts differ.
pub struct Extractor<'a> {
    strategy: Strategy<'a>,
}

impl<'a> Extractor<'a> {
    pub fn new(space: &'a Space, coloring: &'a Coloring, anchor: &Point, horizon: usize, fuel: u64) -> Result<Self, RamseyError> {
        Self::check(coloring, horizon)?;
        let strategy = match coloring.type_table(anchor) {
            Some(table) => Strategy::Typed(Typed::new(space, coloring, anchor, table, horizon, fuel)?),
            None => Strategy::Generic(Generic::new(space, coloring, anchor, horizon, fuel)?),
        };
        Ok(Extractor { strategy })
    }

    /// Forces the general strategy, evaluating the coloring directly.
    pub fn generic(space: &'a Space, coloring: &'a Coloring, anchor: &Point, horizon: usize, fuel: u64) -> Result<Self, RamseyError> {
        Self::check(coloring, horizon)?;
        Ok(Extractor { strategy: Strategy::Generic(Generic::new(space, coloring, anchor, horizon, fuel)?) })
    }

    fn check(coloring: &Coloring, horizon: usize) -> Result<(), RamseyError> {
        coloring.check()?;
        if horizon == 0 {
            return Err(RamseyError::InvalidParams("horizon must be positive".into()));
        }
        Ok(())
    }

    pub fn strategy(&self) -> &'static str {
        match self.strategy {
            Strategy::Generic(_) => "generic",
            Strategy::Typed(_) => "typed",
        }
    }

    /// The color shared by every output element.
    pub fn color(&mut self) -> Result<Color, RamseyError> {
        match &mut self.strategy {
            Strategy::Generic(g) => g.color(),
            Strategy::Typed(t) => t.color(),
        }
    }

    /// The `i`-th output point.
    pub fn get(&mut self, i: usize) -> Result<Point, RamseyError> {
        match &mut self.strategy {
            Strategy::Generic(g) => g.get(i),
            Strategy::Typed(t) => t.get(i),
        }
    }

    /// Work units spent: enumeration draws, stream examinations and
    /// coloring evaluations.
    pub fn steps(&self) -> u64 {
        match &self.strategy {
            Strategy::Generic(g) => g.spent,
            Strategy::Typed(t) => t.spent,
        }
    }

    /// Number of class points drawn from the enumeration so far.
    pub fn base_len(&self) -> usize {
        match &self.strategy {
            Strategy::Generic(g) => g.points.len(),
            Strategy::Typed(t) => t.points.len(),
        }
    }

    /// Some majority vote saw fewer candidates than there are colors.
    pub fn thin_evidence(&self) -> bool {
        match &self.strategy {
            Strategy::Generic(g) => g.thin,
            Strategy::Typed(t) => t.thin,
        }
    }

    /// Top-level recursion states computed so far (empty for dimension 1).
    pub fn levels(&self) -> Vec<LevelState> {
        match &self.strategy {
            Strategy::Generic(g) => g.levels(),
            Strategy::Typed(t) => t.levels(),
        }
    }

    /// The certificate for the first `t` output points.
    pub fn certificate(&mut self, t: usize) -> Result<MonoCertificate, RamseyError> {
        let (space, coloring, anchor, horizon, fuel) = match &self.strategy {
            Strategy::Generic(g) => (g.space.clone(), g.coloring, g.anchor.clone(), g.horizon, g.fuel),
            Strategy::Typed(t) => (t.space.clone(), t.coloring, t.anchor.clone(), t.horizon, t.fuel),
        };
        check_params(coloring, t)?;
        let color = self.color()?;
        let points = (0..t).map(|i| self.get(i)).collect::<Result<Vec<_>, _>>()?;
        let mut cert = MonoCertificate {
            points,
            color,
            coloring: coloring.clone(),
            backend: space,
            anchor,
            params: ExtractParams { t, horizon, fuel },
            thin_evidence: self.thin_evidence(),
            verified: false,
            engine_version: ENGINE_VERSION.to_string(),
        };
        cert.verified = verify_certificate(coloring, &cert);
        Ok(cert)
    }
}

fn check_params(c: &Coloring, t: usize) -> Result<(), RamseyError> {
    if t < c.dim() || t == 0 {
        return Err(RamseyError::InvalidParams(format!("T = {t} must be at least the dimension {}", c.dim())));
    }
    Ok(())
}

/// Extracts `t` points of `[anchor]` all of whose `n`-subsets share one color.
pub fn extract_monochromatic(
    space: &Space,
    c: &Coloring,
    anchor: &Point,
    t: usize,
    horizon: usize,
    fuel: u64,
) -> Result<MonoCertificate, RamseyError> {
    check_params(c, t)?;
    Extractor::new(space, c, anchor, horizon, fuel)?.certificate(t)
}

/// Exhaustive recheck: every `n`-subset of the points has the stated color.
pub fn verify_certificate(c: &Coloring, cert: &MonoCertificate) -> bool {
    let n = c.dim();
    if cert.points.len() < n {
        return false;
    }
    let distinct: BTreeSet<&Point> = cert.points.iter().collect();
    if distinct.len() != cert.points.len() {
        return false;
    }
    cert.points
        .iter()
        .cloned()
        .combinations(n)
        .all(|set| matches!(c.color(&cert.backend, &set), Ok(a) if a == cert.color))
}

/// The unbounded monochromatic stream of a product class, anchored at the
/// transversal point so that it is the same for every member of the class.
pub struct MonoStream<'a> {
    ex: Extractor<'a>,
    next: usize,
    color: Color,
}

impl<'a> MonoStream<'a> {
    pub fn color(&self) -> Color {
        self.color
    }

    pub fn steps(&self) -> u64 {
        self.ex.steps()
    }
}

impl Iterator for MonoStream<'_> {
    type Item = Result<Point, RamseyError>;

    fn next(&mut self) -> Option<Self::Item> {
        let r = self.ex.get(self.next);
        self.next += 1;
        Some(r)
    }
}

pub fn monochromatic_stream<'a>(
    space: &'a Space,
    c: &'a Coloring,
    class_id: &str,
    horizon: usize,
    fuel: u64,
) -> Result<MonoStream<'a>, RamseyError> {
    if !space.is_smooth() {
        return Err(RamseyError::InvalidParams("monochromatic streams need the smooth backend".into()));
    }
    let anchor = space.selector(&Point::indexed(class_id, 0))?;
    let mut ex = Extractor::new(space, c, &anchor, horizon, fuel)?;
    let color = ex.color()?;
    Ok(MonoStream { ex, next: 0, color })
}

/// Extracts against the extension of `c` off the section `y`, then retracts
/// the witness into `y`. Coinciding retractions are merged, so the output is
/// the set of images, cut at its first `t` distinct members.
pub fn push_section(
    space: &Space,
    y: &Section,
    c: &Coloring,
    anchor: &Point,
    t: usize,
    horizon: usize,
    fuel: u64,
) -> Result<MonoCertificate, RamseyError> {
    check_params(c, t)?;
    let extended = Coloring::extend(c.clone(), y.clone(), fuel)?;
    let mut ex = Extractor::new(space, &extended, anchor, horizon, fuel)?;
    let color = ex.color()?;
    let mut points: Vec<Point> = Vec::with_capacity(t);
    let mut i = 0;
    while points.len() < t {
        let w = ex.get(i)?;
        i += 1;
        let z = space.retract(y, &w, fuel)?;
        if !points.contains(&z) {
            points.push(z);
        }
    }
    let mut cert = MonoCertificate {
        points,
        color,
        coloring: c.clone(),
        backend: space.clone(),
        anchor: anchor.clone(),
        params: ExtractParams { t, horizon, fuel },
        thin_evidence: ex.thin_evidence(),
        verified: false,
        engine_version: ENGINE_VERSION.to_string(),
    };
    cert.verified = verify_certificate(c, &cert);
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorings::parity_component;
    use crate::seqspace::EvpSeq;

    fn p(s: &str) -> Point {
        s.parse().unwrap()
    }

    #[test]
    fn pigeonhole_examples() {
        let (a, thin, rest) = pigeonhole_by(0..100u32, 2, 10, |_| Ok::<_, ()>(1)).unwrap();
        assert_eq!((a, thin), (1, false));
        assert_eq!(rest.take(5).map(Result::unwrap).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);

        let (a, _, rest) = pigeonhole_by(0..100u32, 2, 10, |x| Ok::<_, ()>(1 + x % 2)).unwrap();
        assert_eq!(a, 1);
        assert_eq!(rest.take(6).map(Result::unwrap).collect::<Vec<_>>(), vec![0, 2, 4, 6, 8, 10]);

        let (a, _, rest) = pigeonhole_by(0..100u32, 2, 10, |_| Ok::<_, ()>(2)).unwrap();
        assert_eq!(a, 2);
        assert_eq!(rest.count(), 100);

        let (_, thin, _) = pigeonhole_by(0..100u32, 3, 2, |_| Ok::<_, ()>(1)).unwrap();
        assert!(thin);
    }

    #[test]
    fn pigeonhole_on_a_coloring() {
        let e0 = Space::E0;
        let c = Coloring::fix(Coloring::Parity, p("e|01")).unwrap();
        let stream = e0.omega_enumerate(&p("e|01")).unwrap().skip(1);
        let (a, _, rest) = pigeonhole_filter(&e0, &c, stream, 64).unwrap();
        let x = "e|01".parse::<EvpSeq>().unwrap();
        for z in rest.take(10) {
            let z = z.unwrap();
            assert_eq!(c.color(&e0, std::slice::from_ref(&z)).unwrap(), a);
            let same = parity_component(&x, z.as_seq().unwrap()).unwrap();
            assert_eq!(same, a == 1);
        }
    }

    #[test]
    fn constant_coloring_returns_enumeration() {
        let e0 = Space::E0;
        let c = Coloring::constant(2, 3, 3).unwrap();
        let anchor = p("e|0");
        let cert = extract_monochromatic(&e0, &c, &anchor, 5, 64, 1 << 20).unwrap();
        let expected: Vec<Point> = e0.omega_enumerate(&anchor).unwrap().take(5).collect();
        assert_eq!(cert.points, expected);
        assert_eq!(cert.color, 3);
        assert!(cert.verified);
    }

    #[test]
    fn parity_certificate_is_trapped() {
        let e0 = Space::E0;
        let x = p("e|01");
        let cert = extract_monochromatic(&e0, &Coloring::Parity, &x, 6, 64, 1 << 20).unwrap();
        assert!(cert.verified);
        assert_eq!(cert.color, 1);
        let first = cert.points[0].as_seq().unwrap();
        for q in &cert.points {
            assert!(parity_component(first, q.as_seq().unwrap()).unwrap());
        }
    }

    #[test]
    fn parity_tracks_the_anchor_component() {
        let e0 = Space::E0;
        let x = "1|011".parse::<EvpSeq>().unwrap();
        let y = x.act(&crate::seqspace::FiniteFlip::from_positions([3]));
        let cx = extract_monochromatic(&e0, &Coloring::Parity, &x.clone().into(), 4, 64, 1 << 20).unwrap();
        let cy = extract_monochromatic(&e0, &Coloring::Parity, &y.into(), 4, 64, 1 << 20).unwrap();
        let a = cx.points[0].as_seq().unwrap();
        let b = cy.points[0].as_seq().unwrap();
        assert!(!parity_component(a, b).unwrap());
    }

    #[test]
    fn random_dimension_three() {
        let e0 = Space::E0;
        let c = Coloring::random(42, 3, 2).unwrap();
        let cert = extract_monochromatic(&e0, &c, &p("e|01"), 6, 64, 1 << 24).unwrap();
        assert!(cert.verified);
        assert_eq!(cert.points.len(), 6);
    }

    #[test]
    fn verify_rejects_tampering() {
        let e0 = Space::E0;
        let mut cert = extract_monochromatic(&e0, &Coloring::Parity, &p("e|01"), 4, 64, 1 << 20).unwrap();
        let last = cert.points[3].as_seq().unwrap().act(&crate::seqspace::FiniteFlip::from_positions([20]));
        cert.points[3] = last.into();
        assert!(!verify_certificate(&Coloring::Parity, &cert));
    }

    #[test]
    fn prefix_consistency() {
        let e0 = Space::E0;
        let c = Coloring::random(5, 2, 3).unwrap();
        let long = extract_monochromatic(&e0, &c, &p("0|011"), 9, 32, 1 << 22).unwrap();
        let short = extract_monochromatic(&e0, &c, &p("0|011"), 8, 32, 1 << 22).unwrap();
        assert_eq!(&long.points[..8], &short.points[..]);
    }

    #[test]
    fn smooth_stream_is_anchor_free() {
        let sm = Space::smooth(["c"]);
        let c = Coloring::random(9, 2, 2).unwrap();
        let s: Vec<Point> = monochromatic_stream(&sm, &c, "c", 32, 1 << 20).unwrap().take(8).map(Result::unwrap).collect();
        let cert = extract_monochromatic(&sm, &c, &p("c:0"), 8, 32, 1 << 20).unwrap();
        assert_eq!(s, cert.points);
        let other = extract_monochromatic(&sm, &c, &p("c:7"), 8, 32, 1 << 20).unwrap();
        assert_eq!(other.points, cert.points);

        let k = Coloring::constant(2, 2, 1).unwrap();
        let s: Vec<Point> = monochromatic_stream(&sm, &k, "c", 32, 1 << 20).unwrap().take(5).map(Result::unwrap).collect();
        assert_eq!(s, (0..5).map(|i| Point::indexed("c", i)).collect::<Vec<_>>());
    }

    #[test]
    fn push_section_examples() {
        let e0 = Space::E0;
        let anchor = p("e|01");
        let whole = push_section(&e0, &Section::All, &Coloring::Parity, &anchor, 5, 64, 1 << 20).unwrap();
        let plain = extract_monochromatic(&e0, &Coloring::Parity, &anchor, 5, 64, 1 << 20).unwrap();
        assert_eq!(whole.points, plain.points);

        let y: Section = "bit[0]=1".parse().unwrap();
        let cert = push_section(&e0, &y, &Coloring::Parity, &anchor, 4, 64, 1 << 20).unwrap();
        assert!(cert.verified);
        assert!(cert.points.iter().all(|q| y.contains(q)));

        let missing = Section::ClassOf(p("e|1"));
        let err = push_section(&e0, &missing, &Coloring::Parity, &anchor, 4, 64, 64).unwrap_err();
        assert!(matches!(err, RamseyError::FuelExhausted { .. }));
    }

    #[test]
    fn fuel_exhaustion_reports_partial_pivots() {
        let e0 = Space::E0;
        let err = extract_monochromatic(&e0, &Coloring::Parity, &p("e|01"), 6, 64, 500).unwrap_err();
        assert!(matches!(err, RamseyError::FuelExhausted { spent: 500, .. }));
    }

    #[test]
    fn levels_follow_the_recursion() {
        let e0 = Space::E0;
        let mut ex = Extractor::new(&e0, &Coloring::Parity, &p("e|01"), 16, 1 << 20).unwrap();
        ex.get(3).unwrap();
        let levels = ex.levels();
        assert!(levels.len() >= 4);
        assert_eq!(levels[0].pivot, p("e|01"));
        for w in levels.windows(2) {
            assert_eq!(w[0].next_stream_head.first(), Some(&w[1].pivot));
            assert_eq!(w[0].derived.dim(), 1);
        }
    }

    #[test]
    fn strategies_agree() {
        let e0 = Space::E0;
        let sm = Space::smooth(["c", "d"]);
        for (space, anchor) in [(&e0, p("01|011")), (&sm, p("d:2"))] {
            for seed in 0..6 {
                for n in 1..=3 {
                    let c = Coloring::random(seed, n, 2 + (seed % 2) as u32).unwrap();
                    let mut g = Extractor::generic(space, &c, &anchor, 12, 1 << 24).unwrap();
                    let mut f = Extractor::new(space, &c, &anchor, 12, 1 << 24).unwrap();
                    assert_eq!(f.strategy(), "typed");
                    assert_eq!(g.certificate(6).unwrap(), f.certificate(6).unwrap(), "seed {seed} n {n}");
                    let (gl, fl) = (g.levels(), f.levels());
                    let common = gl.len().min(fl.len());
                    for (a, b) in gl[..common].iter().zip(&fl[..common]) {
                        assert_eq!((&a.pivot, a.pivot_color), (&b.pivot, b.pivot_color));
                    }
                }
            }
        }
    }

    #[test]
    fn horizon_sixty_four_in_dimension_three() {
        let e0 = Space::E0;
        for seed in 0..4 {
            let c = Coloring::random(seed, 3, 3).unwrap();
            let cert = extract_monochromatic(&e0, &c, &p("e|0111"), 8, 64, 1 << 26).unwrap();
            assert!(cert.verified);
        }
    }
}
