//! One-counter processes and their operational semantics.
//!
//! An [`Ocp`] has finitely many control locations, a labelling of locations by
//! propositions, and two transition relations: zero transitions fire when the
//! counter is 0 and may only keep or increment it, positive transitions fire
//! when the counter is positive and may decrement, keep or increment it. A
//! one-counter net is an OCP whose zero transitions are all positive
//! transitions as well.
//!
//! Locations are interned to dense [`LocId`]s. Deadlocks are allowed and
//! never patched with implicit self-loops.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OcpError {
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("location id {0} is out of range")]
    BadLocationId(usize),
    #[error("zero transition {src} -> {dst} has delta {delta}, expected 0 or +1")]
    BadZeroDelta { src: String, delta: i64, dst: String },
    #[error("positive transition {src} -> {dst} has delta {delta}, expected -1, 0 or +1")]
    BadPosDelta { src: String, delta: i64, dst: String },
    #[error("zero transition {src} -> {dst} has negative weight {weight}")]
    NegativeZeroWeight { src: String, weight: i64, dst: String },
    #[error("an OCP needs at least one control location")]
    NoLocations,
}

/// Dense identifier of a control location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocId(pub u32);

impl LocId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Which of the two transition relations a transition belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Zero,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub src: LocId,
    pub delta: i8,
    pub dst: LocId,
}

/// A state `(q, n)` of the infinite transition system of an OCP.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub location: LocId,
    pub counter: BigUint,
}

impl Configuration {
    pub fn new(location: LocId, counter: impl Into<BigUint>) -> Self {
        Configuration {
            location,
            counter: counter.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ocp {
    names: Vec<String>,
    by_name: HashMap<String, LocId>,
    props: BTreeMap<String, FixedBitSet>,
    zero: Vec<Vec<(i8, LocId)>>,
    pos: Vec<Vec<(i8, LocId)>>,
}

impl Ocp {
    pub fn num_locations(&self) -> usize {
        self.names.len()
    }

    pub fn locations(&self) -> impl Iterator<Item = LocId> + '_ {
        (0..self.names.len() as u32).map(LocId)
    }

    pub fn name(&self, loc: LocId) -> &str {
        &self.names[loc.index()]
    }

    pub fn loc(&self, name: &str) -> Result<LocId, OcpError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| OcpError::UnknownLocation(name.to_string()))
    }

    fn check(&self, loc: LocId) -> Result<(), OcpError> {
        if loc.index() < self.names.len() {
            Ok(())
        } else {
            Err(OcpError::BadLocationId(loc.index()))
        }
    }

    /// Propositions with a non-empty extension, in lexicographic order.
    pub fn propositions(&self) -> impl Iterator<Item = &str> {
        self.props.keys().map(String::as_str)
    }

    /// Locations labelled by `prop`; `None` if no location carries it.
    pub fn label_set(&self, prop: &str) -> Option<&FixedBitSet> {
        self.props.get(prop)
    }

    pub fn has_label(&self, loc: LocId, prop: &str) -> bool {
        self.props
            .get(prop)
            .is_some_and(|set| set.contains(loc.index()))
    }

    pub fn labels_of(&self, loc: LocId) -> impl Iterator<Item = &str> {
        self.props
            .iter()
            .filter(move |(_, set)| set.contains(loc.index()))
            .map(|(p, _)| p.as_str())
    }

    /// Outgoing transitions of `loc` on the given side as `(delta, dst)`,
    /// sorted by destination then delta.
    pub fn outgoing(&self, side: Side, loc: LocId) -> &[(i8, LocId)] {
        match side {
            Side::Zero => &self.zero[loc.index()],
            Side::Positive => &self.pos[loc.index()],
        }
    }

    pub fn transitions(&self, side: Side) -> impl Iterator<Item = Transition> + '_ {
        let table = match side {
            Side::Zero => &self.zero,
            Side::Positive => &self.pos,
        };
        table.iter().enumerate().flat_map(|(src, outs)| {
            outs.iter().map(move |&(delta, dst)| Transition {
                src: LocId(src as u32),
                delta,
                dst,
            })
        })
    }

    /// `|Q| + sum |Q_p| + |delta_0| + |delta_>0|`.
    pub fn size(&self) -> usize {
        self.names.len()
            + self.props.values().map(|s| s.count_ones(..)).sum::<usize>()
            + self.zero.iter().map(Vec::len).sum::<usize>()
            + self.pos.iter().map(Vec::len).sum::<usize>()
    }

    /// True iff every zero transition is also a positive transition.
    pub fn is_net(&self) -> bool {
        self.zero
            .iter()
            .zip(&self.pos)
            .all(|(z, p)| {
                z.iter()
                    .all(|&(d, q)| p.binary_search_by_key(&(q, d), |&(d, q)| (q, d)).is_ok())
            })
    }

    /// One-step successors of a configuration, ordered by destination and
    /// then by delta. Empty for deadlocks.
    pub fn successors(&self, c: &Configuration) -> Result<Vec<Configuration>, OcpError> {
        self.check(c.location)?;
        let side = if c.counter.is_zero() {
            Side::Zero
        } else {
            Side::Positive
        };
        Ok(self
            .outgoing(side, c.location)
            .iter()
            .map(|&(delta, dst)| {
                let counter = match delta {
                    1 => &c.counter + 1u32,
                    -1 => &c.counter - 1u32,
                    _ => c.counter.clone(),
                };
                Configuration {
                    location: dst,
                    counter,
                }
            })
            .collect())
    }

    /// A builder seeded with every location, label and transition of `self`.
    pub fn to_builder(&self) -> OcpBuilder {
        let mut b = OcpBuilder::new();
        b.embed("", self);
        b
    }
}

/// Incremental construction of an [`Ocp`]. Locations are created on first
/// mention and keep their creation order.
#[derive(Debug, Clone, Default)]
pub struct OcpBuilder {
    names: Vec<String>,
    by_name: HashMap<String, LocId>,
    props: BTreeMap<String, BTreeSet<LocId>>,
    zero: BTreeSet<Transition>,
    pos: BTreeSet<Transition>,
}

impl OcpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn location(&mut self, name: &str) -> LocId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = LocId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn lookup(&self, name: &str) -> Option<LocId> {
        self.by_name.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn name(&self, loc: LocId) -> &str {
        &self.names[loc.index()]
    }

    pub fn num_locations(&self) -> usize {
        self.names.len()
    }

    pub fn label(&mut self, prop: &str, loc: LocId) -> &mut Self {
        self.props.entry(prop.to_string()).or_default().insert(loc);
        self
    }

    pub fn zero(&mut self, src: LocId, delta: i64, dst: LocId) -> Result<&mut Self, OcpError> {
        if !(0..=1).contains(&delta) {
            return Err(OcpError::BadZeroDelta {
                src: self.names[src.index()].clone(),
                delta,
                dst: self.names[dst.index()].clone(),
            });
        }
        self.zero.insert(Transition {
            src,
            delta: delta as i8,
            dst,
        });
        Ok(self)
    }

    pub fn pos(&mut self, src: LocId, delta: i64, dst: LocId) -> Result<&mut Self, OcpError> {
        if !(-1..=1).contains(&delta) {
            return Err(OcpError::BadPosDelta {
                src: self.names[src.index()].clone(),
                delta,
                dst: self.names[dst.index()].clone(),
            });
        }
        self.pos.insert(Transition {
            src,
            delta: delta as i8,
            dst,
        });
        Ok(self)
    }

    /// Adds `(src, delta, dst)` to both relations; `delta` must be 0 or +1.
    pub fn both(&mut self, src: LocId, delta: i64, dst: LocId) -> Result<&mut Self, OcpError> {
        self.zero(src, delta, dst)?;
        self.pos(src, delta, dst)
    }

    /// Copies `other` into this builder with every location name prefixed by
    /// `prefix`. Returns the new ids indexed by `other`'s ids.
    pub fn embed(&mut self, prefix: &str, other: &Ocp) -> Vec<LocId> {
        let map: Vec<LocId> = other
            .names
            .iter()
            .map(|n| self.location(&format!("{prefix}{n}")))
            .collect();
        for (prop, set) in &other.props {
            for i in set.ones() {
                self.label(prop, map[i]);
            }
        }
        for side in [Side::Zero, Side::Positive] {
            for t in other.transitions(side) {
                let t = Transition {
                    src: map[t.src.index()],
                    delta: t.delta,
                    dst: map[t.dst.index()],
                };
                match side {
                    Side::Zero => self.zero.insert(t),
                    Side::Positive => self.pos.insert(t),
                };
            }
        }
        map
    }

    pub fn build(self) -> Result<Ocp, OcpError> {
        let n = self.names.len();
        if n == 0 {
            return Err(OcpError::NoLocations);
        }
        let mut zero = vec![Vec::new(); n];
        let mut pos = vec![Vec::new(); n];
        for t in &self.zero {
            zero[t.src.index()].push((t.delta, t.dst));
        }
        for t in &self.pos {
            pos[t.src.index()].push((t.delta, t.dst));
        }
        for outs in zero.iter_mut().chain(pos.iter_mut()) {
            outs.sort_by_key(|&(delta, dst)| (dst, delta));
        }
        let props = self
            .props
            .into_iter()
            .filter(|(_, set)| !set.is_empty())
            .map(|(p, set)| {
                let mut bits = FixedBitSet::with_capacity(n);
                for l in set {
                    bits.insert(l.index());
                }
                (p, bits)
            })
            .collect();
        Ok(Ocp {
            names: self.names,
            by_name: self.by_name,
            props,
            zero,
            pos,
        })
    }
}

/// A transition whose counter effect is an arbitrary integer, counted in
/// unary for size purposes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedTransition {
    pub src: String,
    pub weight: i64,
    pub dst: String,
}

/// An OCP description whose transitions may carry arbitrary integer weights
/// (naturals for zero transitions). [`normalize_weighted`] expands it into
/// unit steps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightedOcpSpec {
    pub locations: Vec<String>,
    pub labels: Vec<(String, String)>,
    pub zero: Vec<WeightedTransition>,
    pub pos: Vec<WeightedTransition>,
}

impl WeightedOcpSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn location(&mut self, name: &str) -> &mut Self {
        if !self.locations.iter().any(|l| l == name) {
            self.locations.push(name.to_string());
        }
        self
    }

    pub fn label(&mut self, prop: &str, loc: &str) -> &mut Self {
        self.location(loc);
        self.labels.push((prop.to_string(), loc.to_string()));
        self
    }

    pub fn zero(&mut self, src: &str, weight: i64, dst: &str) -> &mut Self {
        self.location(src).location(dst);
        self.zero.push(WeightedTransition {
            src: src.to_string(),
            weight,
            dst: dst.to_string(),
        });
        self
    }

    pub fn pos(&mut self, src: &str, weight: i64, dst: &str) -> &mut Self {
        self.location(src).location(dst);
        self.pos.push(WeightedTransition {
            src: src.to_string(),
            weight,
            dst: dst.to_string(),
        });
        self
    }

    pub fn both(&mut self, src: &str, weight: i64, dst: &str) -> &mut Self {
        self.zero(src, weight, dst).pos(src, weight, dst)
    }

    /// Size with weights counted in unary.
    pub fn size(&self) -> usize {
        let unary = |ts: &[WeightedTransition]| {
            ts.iter()
                .map(|t| t.weight.unsigned_abs().max(1) as usize)
                .sum::<usize>()
        };
        self.locations.len() + self.labels.len() + unary(&self.zero) + unary(&self.pos)
    }
}

/// A location introduced by [`normalize_weighted`] inside the unit-step chain
/// of a weighted transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreshLocation {
    pub loc: LocId,
    pub side: Side,
    /// Index of the originating transition in the spec's `zero`/`pos` list.
    pub transition: usize,
    /// Position in the chain, starting at 1 for the location after `src`.
    pub step: usize,
}

#[derive(Debug, Clone)]
pub struct NormalizedOcp {
    pub ocp: Ocp,
    /// `original[i]` is the id of `spec.locations[i]`.
    pub original: Vec<LocId>,
    pub fresh: Vec<FreshLocation>,
}

/// Expands every weight-`k` transition into a chain of `|k|` unit steps
/// through fresh, unlabelled locations.
///
/// For a zero transition with weight `k >= 2` only the first link fires at
/// counter 0; the remaining links run at positive counters and therefore go
/// into the positive relation.
pub fn normalize_weighted(spec: &WeightedOcpSpec) -> Result<NormalizedOcp, OcpError> {
    let mut b = OcpBuilder::new();
    let original: Vec<LocId> = spec.locations.iter().map(|l| b.location(l)).collect();
    for (prop, loc) in &spec.labels {
        let id = b.location(loc);
        b.label(prop, id);
    }
    let mut fresh = Vec::new();
    for (side, list) in [(Side::Zero, &spec.zero), (Side::Positive, &spec.pos)] {
        for (idx, t) in list.iter().enumerate() {
            if side == Side::Zero && t.weight < 0 {
                return Err(OcpError::NegativeZeroWeight {
                    src: t.src.clone(),
                    weight: t.weight,
                    dst: t.dst.clone(),
                });
            }
            let src = b.location(&t.src);
            let dst = b.location(&t.dst);
            let len = t.weight.unsigned_abs() as usize;
            if len <= 1 {
                match side {
                    Side::Zero => b.zero(src, t.weight, dst)?,
                    Side::Positive => b.pos(src, t.weight, dst)?,
                };
                continue;
            }
            let unit = t.weight.signum();
            let tag = if side == Side::Zero { 'z' } else { 'p' };
            let mut prev = src;
            for step in 1..=len {
                let next = if step == len {
                    dst
                } else {
                    let mut name = format!("{}~{tag}{idx}.{step}", t.src);
                    while b.contains(&name) {
                        name.push('\'');
                    }
                    let loc = b.location(&name);
                    fresh.push(FreshLocation {
                        loc,
                        side,
                        transition: idx,
                        step,
                    });
                    loc
                };
                if side == Side::Zero && step == 1 {
                    b.zero(prev, unit, next)?;
                } else {
                    b.pos(prev, unit, next)?;
                }
                prev = next;
            }
        }
    }
    Ok(NormalizedOcp {
        ocp: b.build()?,
        original,
        fresh,
    })
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.location.0, self.counter)
    }
}
