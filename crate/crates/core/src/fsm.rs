//! Finite-state machine skeleton `s_{t+1} = f(s_t, x_t)` with an optional
//! recover map `g(s_{t+1}) = x_t`, plus the structural checks the exponent
//! theory relies on.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph;
use crate::{Error, Result};

/// States are dense indices `0..S` in declaration order; symbols are dense
/// indices `0..K` into `alphabet`, whose entries carry the numeric value of
/// each symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMachine {
    states: Vec<String>,
    alphabet: Vec<f64>,
    next_state: Vec<usize>,
    recover: Option<Vec<usize>>,
}

impl StateMachine {
    /// `next_state` is row-major: entry `s * K + x` is `f(s, x)`.
    pub fn new(states: Vec<String>, alphabet: Vec<f64>, next_state: Vec<usize>, recover: Option<Vec<usize>>) -> Result<Self> {
        let s = states.len();
        let k = alphabet.len();
        if s == 0 {
            return Err(Error::InvalidMachine("no states".into()));
        }
        if k < 2 {
            return Err(Error::InvalidMachine("alphabet needs at least two symbols".into()));
        }
        if next_state.len() != s * k {
            return Err(Error::InvalidMachine(format!(
                "next-state table has {} entries, expected {}",
                next_state.len(),
                s * k
            )));
        }
        if let Some(bad) = next_state.iter().find(|&&t| t >= s) {
            return Err(Error::InvalidMachine(format!("next state {bad} out of range")));
        }
        for (i, name) in states.iter().enumerate() {
            if states[..i].contains(name) {
                return Err(Error::InvalidMachine(format!("duplicate state '{name}'")));
            }
        }
        let machine = StateMachine {
            states,
            alphabet,
            next_state,
            recover: None,
        };
        match recover {
            None => Ok(machine),
            Some(g) => machine.with_recover(g),
        }
    }

    /// Builds a machine from closures; convenient for structured machines.
    pub fn from_fn(
        states: Vec<String>,
        alphabet: Vec<f64>,
        f: impl Fn(usize, usize) -> usize,
        g: Option<&dyn Fn(usize) -> usize>,
    ) -> Result<Self> {
        let (s, k) = (states.len(), alphabet.len());
        let table = (0..s * k).map(|i| f(i / k, i % k)).collect();
        let recover = g.map(|g| (0..s).map(g).collect());
        Self::new(states, alphabet, table, recover)
    }

    /// Attaches a recover map after checking `g(f(s, x)) = x` everywhere.
    pub fn with_recover(mut self, g: Vec<usize>) -> Result<Self> {
        if g.len() != self.num_states() {
            return Err(Error::InvalidMachine("recover table is not total".into()));
        }
        if g.iter().any(|&x| x >= self.num_symbols()) {
            return Err(Error::InvalidMachine("recover symbol out of range".into()));
        }
        for s in 0..self.num_states() {
            for x in 0..self.num_symbols() {
                let t = self.next(s, x);
                if g[t] != x {
                    return Err(Error::InvalidMachine(format!(
                        "recover map inconsistent: g(f({}, {})) != {}",
                        self.states[s], x, x
                    )));
                }
            }
        }
        self.recover = Some(g);
        Ok(self)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[f64] {
        &self.alphabet
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    #[inline]
    pub fn next(&self, state: usize, symbol: usize) -> usize {
        self.next_state[state * self.alphabet.len() + symbol]
    }

    #[inline]
    pub fn recover(&self, state: usize) -> Option<usize> {
        self.recover.as_ref().map(|g| g[state])
    }

    pub fn recover_table(&self) -> Option<&[usize]> {
        self.recover.as_deref()
    }

    pub fn next_state_table(&self) -> &[usize] {
        &self.next_state
    }

    pub fn has_self_transition(&self, state: usize) -> bool {
        (0..self.num_symbols()).any(|x| self.next(state, x) == state)
    }

    fn transition_graph(&self) -> Vec<Vec<usize>> {
        graph::adjacency(
            self.num_states(),
            (0..self.num_states())
                .flat_map(|s| (0..self.num_symbols()).map(move |x| (s, x)))
                .map(|(s, x)| (s, self.next(s, x))),
        )
    }
}

/// Result of [`augment`]: the new machine together with the origin of each
/// augmented state.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub machine: StateMachine,
    /// Original state of each augmented state.
    pub base_state: Vec<usize>,
    /// Last input symbol stored in each augmented state.
    pub last_symbol: Vec<usize>,
}

/// Replaces the state by `(s_t, x_{t-1})` so that the previous input becomes
/// recoverable. Only states reachable in one step are kept, i.e. the image
/// `{(f(s, x), x)}`, ordered by (original state, symbol).
pub fn augment(machine: &StateMachine) -> Result<Augmented> {
    if machine.recover.is_some() {
        return Err(Error::AlreadyRecoverable);
    }
    let (s_count, k) = (machine.num_states(), machine.num_symbols());
    let mut present = vec![false; s_count * k];
    for s in 0..s_count {
        for x in 0..k {
            present[machine.next(s, x) * k + x] = true;
        }
    }
    let mut id = vec![usize::MAX; s_count * k];
    let mut base_state = Vec::new();
    let mut last_symbol = Vec::new();
    let mut names = Vec::new();
    for (code, _) in present.iter().enumerate().filter(|(_, p)| **p) {
        let (s, x) = (code / k, code % k);
        id[code] = base_state.len();
        base_state.push(s);
        last_symbol.push(x);
        names.push(format!("{}|{}", machine.states[s], machine.alphabet[x]));
    }
    let table = base_state
        .iter()
        .flat_map(|&s| (0..k).map(move |x| (s, x)))
        .map(|(s, x)| id[machine.next(s, x) * k + x])
        .collect();
    let aug = StateMachine::new(names, machine.alphabet.clone(), table, Some(last_symbol.clone()))?;
    Ok(Augmented {
        machine: aug,
        base_state,
        last_symbol,
    })
}

/// A feasible state pair `(from, to)` together with the input symbol
/// `g(to)` that drives the transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pair {
    pub from: usize,
    pub to: usize,
    pub symbol: usize,
}

/// Feasible state pairs in canonical (lexicographic) order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasiblePairSet {
    num_states: usize,
    pairs: Vec<Pair>,
    index: BTreeMap<(usize, usize), usize>,
}

impl FeasiblePairSet {
    /// Builds a pair set from explicit arcs `(from, to, symbol)`. `(from, to)`
    /// must be unique.
    pub fn from_arcs(num_states: usize, arcs: &[(usize, usize, usize)]) -> Result<Self> {
        let mut pairs: Vec<Pair> = arcs.iter().map(|&(from, to, symbol)| Pair { from, to, symbol }).collect();
        if pairs.iter().any(|p| p.from >= num_states || p.to >= num_states) {
            return Err(Error::InvalidMachine("arc endpoint out of range".into()));
        }
        pairs.sort();
        let mut index = BTreeMap::new();
        for (i, p) in pairs.iter().enumerate() {
            if index.insert((p.from, p.to), i).is_some() {
                return Err(Error::InvalidMachine(format!("duplicate arc ({}, {})", p.from, p.to)));
            }
        }
        Ok(FeasiblePairSet { num_states, pairs, index })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn get(&self, i: usize) -> Pair {
        self.pairs[i]
    }

    pub fn index_of(&self, from: usize, to: usize) -> Option<usize> {
        self.index.get(&(from, to)).copied()
    }

    /// Pair indices along the cyclic transitions of a state path.
    pub fn path_pairs(&self, path: &[usize]) -> Result<Vec<usize>> {
        let n = path.len();
        (0..n)
            .map(|t| self.index_of(path[t], path[(t + 1) % n]).ok_or(Error::InconsistentPath(t)))
            .collect()
    }
}

/// All pairs `(s, f(s, x))`; with a valid recover map these are exactly the
/// pairs with `s+ = f(s, g(s+))`, and `(s, x) -> (s, f(s, x))` is a bijection.
pub fn feasible_pairs(machine: &StateMachine) -> Result<FeasiblePairSet> {
    let g = machine.recover.as_ref().ok_or(Error::MissingRecover)?;
    let mut arcs = Vec::with_capacity(machine.num_states() * machine.num_symbols());
    for s in 0..machine.num_states() {
        for x in 0..machine.num_symbols() {
            let t = machine.next(s, x);
            arcs.push((s, t, g[t]));
        }
    }
    FeasiblePairSet::from_arcs(machine.num_states(), &arcs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuralReport {
    pub irreducible: bool,
    pub doubly_irreducible: bool,
    /// `(sigma, r)`: every state reaches `sigma` by some input string of
    /// length exactly `r`.
    pub approach_state: Option<(usize, usize)>,
}

pub fn default_max_r(machine: &StateMachine) -> usize {
    let s = machine.num_states();
    s * (s + 1)
}

pub fn check_structure(machine: &StateMachine, max_r: usize) -> StructuralReport {
    let adj = machine.transition_graph();
    let irreducible = graph::strongly_connected(&adj);
    let doubly_irreducible = irreducible && product_strongly_connected(machine);
    StructuralReport {
        irreducible,
        doubly_irreducible,
        approach_state: approach_state(machine, &adj, max_r),
    }
}

fn product_strongly_connected(machine: &StateMachine) -> bool {
    let (s, k) = (machine.num_states(), machine.num_symbols());
    let mut adj = vec![Vec::new(); s * s];
    for a in 0..s {
        for b in 0..s {
            let node = &mut adj[a * s + b];
            for x in 0..k {
                for y in 0..k {
                    node.push(machine.next(a, x) * s + machine.next(b, y));
                }
            }
            node.sort_unstable();
            node.dedup();
        }
    }
    graph::strongly_connected(&adj)
}

fn approach_state(machine: &StateMachine, adj: &[Vec<usize>], max_r: usize) -> Option<(usize, usize)> {
    let s_count = machine.num_states();
    let mut reverse = vec![Vec::new(); s_count];
    for (a, outs) in adj.iter().enumerate() {
        for &b in outs {
            reverse[b].push(a);
        }
    }
    // a self-transition at sigma lets every shorter path be padded
    let mut best: Option<(usize, usize)> = None;
    for sigma in (0..s_count).filter(|&s| machine.has_self_transition(s)) {
        let dist = graph::bfs(&reverse, sigma);
        if dist.contains(&usize::MAX) {
            continue;
        }
        let r = dist.iter().copied().max().unwrap_or(0).max(1);
        if r <= max_r && best.is_none_or(|(_, br)| r < br) {
            best = Some((sigma, r));
        }
    }
    if best.is_some() {
        return best;
    }
    for sigma in 0..s_count {
        let mut current = vec![false; s_count];
        current[sigma] = true;
        for r in 1..=max_r {
            if best.is_some_and(|(_, br)| r >= br) {
                break;
            }
            let next: Vec<bool> = (0..s_count).map(|s| adj[s].iter().any(|&t| current[t])).collect();
            if next.iter().all(|&b| b) {
                best = Some((sigma, r));
                break;
            }
            if next == current {
                break;
            }
            current = next;
        }
    }
    best
}

/// Order-`k` shift register over `alphabet`: the state holds the last `k`
/// inputs (oldest first) and `g` returns the newest. State names are the
/// stored values joined by commas.
pub fn shift_register(alphabet: &[f64], k: usize) -> Result<StateMachine> {
    if k == 0 {
        return Err(Error::InvalidArgument("shift register order must be positive".into()));
    }
    let base = alphabet.len();
    let count = base
        .checked_pow(k as u32)
        .ok_or_else(|| Error::InvalidArgument("state space too large".into()))?;
    let names = (0..count)
        .map(|code| {
            let digits = tuple_digits(code, base, k);
            let parts: Vec<String> = digits.iter().map(|&d| format!("{}", alphabet[d])).collect();
            parts.join(",")
        })
        .collect();
    let f = |s: usize, x: usize| (s * base + x) % count;
    let g = |s: usize| s % base;
    StateMachine::from_fn(names, alphabet.to_vec(), f, Some(&g))
}

/// Base-`base` digits of `code`, most significant (oldest) first.
pub fn tuple_digits(mut code: usize, base: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0; len];
    for d in digits.iter_mut().rev() {
        *d = code % base;
        code /= base;
    }
    digits
}
