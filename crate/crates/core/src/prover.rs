//! Proof search over normal states.
//!
//! Three rules: applying a linear implication, distributing a modal
//! attribute over an implication (lift), and restructuring a resource with a
//! path equation. The search is memoized on a canonical encoding of the
//! state; results are proof trees, so orderings of independent steps
//! collapse into one derivation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::rc::Rc;

use thiserror::Error;

use crate::formula::{natural_type, Attr, FFormula};
use crate::fterm::{Equation, NormalState, Resource, Uses};
use crate::lambda::{check_label_presence, label_apply, Canon, LabelError, LambdaTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    /// Largest modal depth a path equation may produce.
    pub max_depth: usize,
    /// Largest number of distinct states expanded.
    pub max_nodes: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_depth: 8,
            max_nodes: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Apply {
        fun: usize,
        arg: usize,
        result: Resource,
    },
    Lift {
        input: usize,
        attr: Attr,
        result: Resource,
    },
    Restructure {
        input: usize,
        equation: usize,
        result: Resource,
    },
}

impl Step {
    pub fn rule_name(&self) -> &'static str {
        match self {
            Step::Apply { .. } => "apply",
            Step::Lift { .. } => "lift",
            Step::Restructure { .. } => "patheq",
        }
    }

    /// Ids consumed by the step. A restructuring lists the resource, then the
    /// equation.
    pub fn inputs(&self) -> Vec<usize> {
        match self {
            Step::Apply { fun, arg, .. } => vec![*fun, *arg],
            Step::Lift { input, .. } => vec![*input],
            Step::Restructure {
                input, equation, ..
            } => vec![*input, *equation],
        }
    }

    pub fn result(&self) -> &Resource {
        match self {
            Step::Apply { result, .. }
            | Step::Lift { result, .. }
            | Step::Restructure { result, .. } => result,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("no resource with id {0}")]
    UnknownResource(usize),
    #[error("no equation with id {0}")]
    UnknownEquation(usize),
    #[error("a resource cannot be applied to itself")]
    SelfApplication,
    #[error("`{0}` is not a modal over an implication")]
    NotLiftable(String),
    #[error("`{0}` is not an implication")]
    NotImplication(String),
    #[error("argument `{arg}` does not match antecedent `{antecedent}`")]
    Mismatch { antecedent: String, arg: String },
    #[error("`{formula}` does not start with `{path}`")]
    PrefixMismatch { formula: String, path: String },
    #[error("equation `{0}` has no uses left")]
    Exhausted(String),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error("step result `{found}` differs from recorded `{expected}`")]
    Replay { expected: String, found: String },
}

/// The formula obtained by distributing the innermost attribute of a modal
/// chain over the implication it governs, with that attribute.
pub fn lift_formula(phi: &FFormula) -> Option<(Attr, FFormula)> {
    let (prefix, body) = phi.modal_prefix();
    let FFormula::Implic(a, b) = body else {
        return None;
    };
    let (attr, outer) = prefix.split_last()?;
    let outer: Vec<Attr> = outer.iter().map(|&x| x.clone()).collect();
    let inner = FFormula::implic(
        FFormula::modal((*attr).clone(), (**a).clone()),
        FFormula::modal((*attr).clone(), (**b).clone()),
    );
    let lifted = FFormula::under_path(&outer, inner);
    debug_assert_eq!(natural_type(phi), natural_type(&lifted));
    Some(((*attr).clone(), lifted))
}

/// Distributes a modal over an implication; keeps id and label.
pub fn lift(r: &Resource) -> Result<Resource, StepError> {
    let (_, formula) =
        lift_formula(&r.formula).ok_or_else(|| StepError::NotLiftable(r.formula.to_string()))?;
    Ok(Resource {
        id: r.id,
        formula,
        label: r.label.clone(),
    })
}

fn take_resource(state: &mut NormalState, id: usize) -> Result<Resource, StepError> {
    let pos = state
        .resources
        .iter()
        .position(|r| r.id == id)
        .ok_or(StepError::UnknownResource(id))?;
    Ok(state.resources.remove(pos))
}

fn push_result(state: &mut NormalState, formula: FFormula, label: Option<LambdaTerm>) -> Resource {
    let id = state.take_id();
    let r = Resource { id, formula, label };
    state.resources.push(r.clone());
    r
}

fn applied(fun: &Resource, arg: &Resource) -> Result<(FFormula, Option<LambdaTerm>), StepError> {
    let FFormula::Implic(antecedent, consequent) = &fun.formula else {
        return Err(StepError::NotImplication(fun.formula.to_string()));
    };
    if **antecedent != arg.formula {
        return Err(StepError::Mismatch {
            antecedent: antecedent.to_string(),
            arg: arg.formula.to_string(),
        });
    }
    let label = label_apply(fun.label.as_ref(), &fun.formula, arg.label.as_ref())?;
    Ok(((**consequent).clone(), label))
}

fn restructured(r: &Resource, eq: &Equation) -> Result<FFormula, StepError> {
    if !eq.uses.available() {
        return Err(StepError::Exhausted(eq.to_string()));
    }
    let rest = r
        .formula
        .strip_path(&eq.lhs)
        .ok_or_else(|| StepError::PrefixMismatch {
            formula: r.formula.to_string(),
            path: path_text(&eq.lhs),
        })?;
    Ok(FFormula::under_path(&eq.rhs, rest.clone()))
}

fn path_text(path: &[Attr]) -> String {
    path.iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Replaces the resource `id` by its lifted form under a fresh id.
pub fn lift_in(state: &NormalState, id: usize) -> Result<NormalState, StepError> {
    lift_step(state, id).map(|(s, _)| s)
}

fn lift_step(state: &NormalState, id: usize) -> Result<(NormalState, Step), StepError> {
    let mut next = state.clone();
    let r = take_resource(&mut next, id)?;
    let (attr, formula) =
        lift_formula(&r.formula).ok_or_else(|| StepError::NotLiftable(r.formula.to_string()))?;
    let result = push_result(&mut next, formula, r.label);
    Ok((
        next,
        Step::Lift {
            input: id,
            attr,
            result,
        },
    ))
}

/// Consumes `fun` and `arg`, adding the consequent with its combined label.
pub fn apply_implication(
    state: &NormalState,
    fun: usize,
    arg: usize,
) -> Result<NormalState, StepError> {
    apply_step(state, fun, arg).map(|(s, _)| s)
}

fn apply_step(
    state: &NormalState,
    fun: usize,
    arg: usize,
) -> Result<(NormalState, Step), StepError> {
    if fun == arg {
        return Err(StepError::SelfApplication);
    }
    let mut next = state.clone();
    let f = take_resource(&mut next, fun)?;
    let a = take_resource(&mut next, arg)?;
    let (formula, label) = applied(&f, &a)?;
    let result = push_result(&mut next, formula, label);
    Ok((next, Step::Apply { fun, arg, result }))
}

/// Moves resource `r` from the equation's left path to its right path.
pub fn apply_path_eq(state: &NormalState, eq: usize, r: usize) -> Result<NormalState, StepError> {
    path_eq_step(state, eq, r).map(|(s, _)| s)
}

fn path_eq_step(
    state: &NormalState,
    eq: usize,
    r: usize,
) -> Result<(NormalState, Step), StepError> {
    let mut next = state.clone();
    let e = next
        .equations
        .iter_mut()
        .find(|e| e.id == eq)
        .ok_or(StepError::UnknownEquation(eq))?;
    let res = state.resource(r).ok_or(StepError::UnknownResource(r))?;
    let formula = restructured(res, e)?;
    e.uses = e.uses.consume();
    let old = take_resource(&mut next, r)?;
    let result = push_result(&mut next, formula, old.label);
    Ok((
        next,
        Step::Restructure {
            input: r,
            equation: eq,
            result,
        },
    ))
}

// ---------------------------------------------------------------------------
// Derivations

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub initial: NormalState,
    pub steps: Vec<Step>,
    pub conclusion: Resource,
}

impl Derivation {
    /// Re-executes the steps, returning every intermediate state including
    /// the initial and final ones.
    pub fn replay(&self) -> Result<Vec<NormalState>, StepError> {
        let mut states = vec![self.initial.clone()];
        let mut cur = self.initial.clone();
        for step in &self.steps {
            let (next, got) = match step {
                Step::Apply { fun, arg, .. } => apply_step(&cur, *fun, *arg)?,
                Step::Lift { input, .. } => lift_step(&cur, *input)?,
                Step::Restructure {
                    input, equation, ..
                } => path_eq_step(&cur, *equation, *input)?,
            };
            if got != *step {
                return Err(StepError::Replay {
                    expected: step.result().to_string(),
                    found: got.result().to_string(),
                });
            }
            states.push(next.clone());
            cur = next;
        }
        match cur.resources.as_slice() {
            [only] if *only == self.conclusion => Ok(states),
            _ => Err(StepError::Replay {
                expected: self.conclusion.to_string(),
                found: cur.to_string(),
            }),
        }
    }

    pub fn count(&self, rule: &str) -> usize {
        self.steps.iter().filter(|s| s.rule_name() == rule).count()
    }

    /// Natural-deduction rendering: conclusion first, premises indented
    /// beneath it.
    pub fn proof_text(&self) -> String {
        let producers: HashMap<usize, &Step> =
            self.steps.iter().map(|s| (s.result().id, s)).collect();
        let mut out = String::new();
        self.render(self.conclusion.id, 0, &producers, &mut out);
        out
    }

    fn render(&self, id: usize, depth: usize, producers: &HashMap<usize, &Step>, out: &mut String) {
        let pad = "  ".repeat(depth);
        match producers.get(&id) {
            Some(step) => {
                let _ = writeln!(out, "{pad}{}    [{}]", step.result(), step.rule_name());
                match step {
                    Step::Apply { fun, arg, .. } => {
                        self.render(*fun, depth + 1, producers, out);
                        self.render(*arg, depth + 1, producers, out);
                    }
                    Step::Lift { input, .. } => self.render(*input, depth + 1, producers, out),
                    Step::Restructure {
                        input, equation, ..
                    } => {
                        self.render(*input, depth + 1, producers, out);
                        if let Some(eq) = self.initial.equation(*equation) {
                            let _ = writeln!(out, "{pad}  {eq}");
                        }
                    }
                }
            }
            None => match self.initial.resource(id) {
                Some(r) => {
                    let _ = writeln!(out, "{pad}{r}");
                }
                None => {
                    let _ = writeln!(out, "{pad}#{id}");
                }
            },
        }
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.proof_text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Nodes(usize),
    Depth(usize),
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Nodes(n) => write!(f, "node limit {n}"),
            Bound::Depth(n) => write!(f, "modal depth limit {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search budget exceeded ({bound}) after {explored} states")]
    Budget {
        bound: Bound,
        explored: usize,
        diagnostics: Vec<String>,
    },
    #[error("ill-labelled initial state: {0}")]
    Label(#[from] LabelError),
}

// ---------------------------------------------------------------------------
// Search

/// A resource inside a canonical search node; compared by formula and
/// canonical label.
#[derive(Debug, Clone)]
struct Slot {
    formula: FFormula,
    label: Option<LambdaTerm>,
    canon: Option<Canon>,
}

impl Slot {
    fn new(formula: FFormula, label: Option<LambdaTerm>) -> Self {
        let canon = label.as_ref().map(LambdaTerm::canonical);
        Slot {
            formula,
            label,
            canon,
        }
    }

    fn resource(&self, id: usize) -> Resource {
        Resource {
            id,
            formula: self.formula.clone(),
            label: self.label.clone(),
        }
    }
}

impl PartialEq for Slot {
    fn eq(&self, other: &Self) -> bool {
        self.formula == other.formula && self.canon == other.canon
    }
}

impl Eq for Slot {}

impl std::hash::Hash for Slot {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.formula.hash(state);
        self.canon.hash(state);
    }
}

impl PartialOrd for Slot {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Slot {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.formula, &self.canon).cmp(&(&other.formula, &other.canon))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct EqSlot {
    lhs: Vec<Attr>,
    rhs: Vec<Attr>,
    uses: Uses,
}

/// Canonical state: both vectors sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Node {
    res: Vec<Slot>,
    eqs: Vec<EqSlot>,
}

/// Proof tree over the slots of one node. Leaves and equation references are
/// slot indices of that node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum PTree {
    Leaf(u32),
    Apply(Rc<PTree>, Rc<PTree>),
    Lift(Rc<PTree>),
    Restructure(Rc<PTree>, u32),
}

impl PTree {
    fn map(&self, leaf: &impl Fn(u32) -> PTree, eq: &impl Fn(u32) -> u32) -> PTree {
        match self {
            PTree::Leaf(i) => leaf(*i),
            PTree::Apply(f, a) => PTree::Apply(Rc::new(f.map(leaf, eq)), Rc::new(a.map(leaf, eq))),
            PTree::Lift(t) => PTree::Lift(Rc::new(t.map(leaf, eq))),
            PTree::Restructure(t, e) => PTree::Restructure(Rc::new(t.map(leaf, eq)), eq(*e)),
        }
    }
}

/// Where a child slot came from: a parent slot, or a fragment built from
/// parent slots by one rule.
#[derive(Debug, Clone)]
enum Origin {
    Old(u32),
    New(PTree),
}

struct Move {
    child: Node,
    res_origin: Vec<Origin>,
    eq_origin: Vec<u32>,
}

fn build_child(mut res: Vec<(Slot, Origin)>, mut eqs: Vec<(EqSlot, u32)>) -> Move {
    res.sort_by(|a, b| a.0.cmp(&b.0));
    eqs.sort_by(|a, b| a.0.cmp(&b.0));
    let (res, res_origin): (Vec<_>, Vec<_>) = res.into_iter().unzip();
    let (eqs, eq_origin): (Vec<_>, Vec<_>) = eqs.into_iter().unzip();
    Move {
        child: Node { res, eqs },
        res_origin,
        eq_origin,
    }
}

fn node_moves(node: &Node, config: &SearchConfig) -> Result<Vec<Move>, MoveError> {
    let mut out = Vec::new();
    let n = node.res.len();
    let keep = |skip: &[usize]| -> Vec<(Slot, Origin)> {
        (0..n)
            .filter(|i| !skip.contains(i))
            .map(|i| (node.res[i].clone(), Origin::Old(i as u32)))
            .collect()
    };
    let all_eqs = || -> Vec<(EqSlot, u32)> {
        node.eqs
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i as u32))
            .collect()
    };
    for (i, fun) in node.res.iter().enumerate() {
        let FFormula::Implic(antecedent, consequent) = &fun.formula else {
            continue;
        };
        for (j, arg) in node.res.iter().enumerate() {
            if i == j || arg.formula != **antecedent {
                continue;
            }
            let label = label_apply(fun.label.as_ref(), &fun.formula, arg.label.as_ref())
                .map_err(MoveError::Label)?;
            let mut res = keep(&[i, j]);
            res.push((
                Slot::new((**consequent).clone(), label),
                Origin::New(PTree::Apply(
                    Rc::new(PTree::Leaf(i as u32)),
                    Rc::new(PTree::Leaf(j as u32)),
                )),
            ));
            out.push(build_child(res, all_eqs()));
        }
    }
    for (i, r) in node.res.iter().enumerate() {
        if let Some((_, formula)) = lift_formula(&r.formula) {
            let mut res = keep(&[i]);
            res.push((
                Slot::new(formula, r.label.clone()),
                Origin::New(PTree::Lift(Rc::new(PTree::Leaf(i as u32)))),
            ));
            out.push(build_child(res, all_eqs()));
        }
    }
    for (k, eq) in node.eqs.iter().enumerate() {
        if !eq.uses.available() || (eq.lhs == eq.rhs && eq.uses == Uses::Unbounded) {
            continue;
        }
        for (i, r) in node.res.iter().enumerate() {
            let Some(rest) = r.formula.strip_path(&eq.lhs) else {
                continue;
            };
            let formula = FFormula::under_path(&eq.rhs, rest.clone());
            if formula.modal_depth() > config.max_depth {
                return Err(MoveError::Depth);
            }
            let mut res = keep(&[i]);
            res.push((
                Slot::new(formula, r.label.clone()),
                Origin::New(PTree::Restructure(Rc::new(PTree::Leaf(i as u32)), k as u32)),
            ));
            let mut eqs = all_eqs();
            let used = eq.uses.consume();
            if used.available() {
                eqs[k].0.uses = used;
            } else {
                eqs.remove(k);
            }
            out.push(build_child(res, eqs));
        }
    }
    Ok(out)
}

enum MoveError {
    Depth,
    Label(LabelError),
}

struct Search<'a> {
    goal: &'a FFormula,
    config: SearchConfig,
    memo: HashMap<Node, Rc<Vec<PTree>>>,
    on_path: HashSet<Node>,
    explored: usize,
    cycle_hits: usize,
}

enum Stop {
    Budget(Bound),
    Label(LabelError),
}

impl Search<'_> {
    fn is_goal(&self, node: &Node) -> bool {
        node.res.len() == 1 && node.res[0].formula == *self.goal
    }

    fn expand(&mut self, node: &Node) -> Result<Rc<Vec<PTree>>, Stop> {
        if let Some(hit) = self.memo.get(node) {
            return Ok(hit.clone());
        }
        if self.on_path.contains(node) {
            self.cycle_hits += 1;
            return Ok(Rc::new(Vec::new()));
        }
        self.explored += 1;
        if self.explored > self.config.max_nodes {
            return Err(Stop::Budget(Bound::Nodes(self.config.max_nodes)));
        }
        let hits_before = self.cycle_hits;
        self.on_path.insert(node.clone());
        let mut found = BTreeSet::new();
        if self.is_goal(node) {
            found.insert(PTree::Leaf(0));
        }
        let moves = node_moves(node, &self.config).map_err(|e| match e {
            MoveError::Depth => Stop::Budget(Bound::Depth(self.config.max_depth)),
            MoveError::Label(l) => Stop::Label(l),
        });
        let moves = match moves {
            Ok(m) => m,
            Err(e) => {
                self.on_path.remove(node);
                return Err(e);
            }
        };
        for mv in moves {
            let sub = match self.expand(&mv.child) {
                Ok(s) => s,
                Err(e) => {
                    self.on_path.remove(node);
                    return Err(e);
                }
            };
            let leaf = |j: u32| match &mv.res_origin[j as usize] {
                Origin::Old(i) => PTree::Leaf(*i),
                Origin::New(t) => t.clone(),
            };
            let eq = |e: u32| mv.eq_origin[e as usize];
            for t in sub.iter() {
                found.insert(t.map(&leaf, &eq));
            }
        }
        self.on_path.remove(node);
        let result = Rc::new(found.into_iter().collect::<Vec<_>>());
        // Results that depended on a cut cycle are only valid on this path.
        if self.cycle_hits == hits_before {
            self.memo.insert(node.clone(), result.clone());
        }
        Ok(result)
    }
}

/// The initial state as a canonical node plus the original id of every slot.
fn root_node(state: &NormalState) -> (Node, Vec<usize>, Vec<usize>) {
    let mut res: Vec<(Slot, usize)> = state
        .resources
        .iter()
        .map(|r| (Slot::new(r.formula.clone(), r.label.clone()), r.id))
        .collect();
    res.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut eqs: Vec<(EqSlot, usize)> = state
        .equations
        .iter()
        .filter(|e| e.uses.available())
        .map(|e| {
            (
                EqSlot {
                    lhs: e.lhs.clone(),
                    rhs: e.rhs.clone(),
                    uses: e.uses,
                },
                e.id,
            )
        })
        .collect();
    eqs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let (res, res_ids) = res.into_iter().unzip();
    let (eqs, eq_ids) = eqs.into_iter().unzip();
    (Node { res, eqs }, res_ids, eq_ids)
}

fn check_initial(state: &NormalState, config: &SearchConfig) -> Result<(), SearchError> {
    for r in &state.resources {
        check_label_presence(&r.formula, r.label.as_ref())?;
        if r.formula.modal_depth() > config.max_depth {
            return Err(SearchError::Budget {
                bound: Bound::Depth(config.max_depth),
                explored: 0,
                diagnostics: vec![format!("initial resource `{r}` is too deep")],
            });
        }
    }
    Ok(())
}

fn first_of_class<T: PartialEq>(items: &[T]) -> Vec<u32> {
    let mut rep = Vec::with_capacity(items.len());
    for (i, x) in items.iter().enumerate() {
        let r = if i > 0 && items[i - 1] == *x {
            rep[i - 1]
        } else {
            i as u32
        };
        rep.push(r);
    }
    rep
}

/// Turns a canonical proof tree back into a step sequence over the original
/// ids. Members of a class of identical resources are handed out in order.
struct Materializer<'a> {
    node: &'a Node,
    res_ids: &'a [usize],
    eq_ids: &'a [usize],
    state: NormalState,
    res_members: BTreeMap<u32, Vec<u32>>,
    res_used: BTreeMap<u32, usize>,
    eq_members: BTreeMap<u32, Vec<u32>>,
    eq_used: BTreeMap<u32, Vec<u32>>,
    steps: Vec<Step>,
}

impl<'a> Materializer<'a> {
    fn new(
        initial: &NormalState,
        node: &'a Node,
        res_ids: &'a [usize],
        eq_ids: &'a [usize],
    ) -> Self {
        let mut res_members: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (i, r) in first_of_class(&node.res).into_iter().enumerate() {
            res_members.entry(r).or_default().push(i as u32);
        }
        let mut eq_members: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (i, r) in first_of_class(&node.eqs).into_iter().enumerate() {
            eq_members.entry(r).or_default().push(i as u32);
        }
        Materializer {
            node,
            res_ids,
            eq_ids,
            state: initial.clone(),
            res_members,
            res_used: BTreeMap::new(),
            eq_members,
            eq_used: BTreeMap::new(),
            steps: Vec::new(),
        }
    }

    fn equation_for(&mut self, rep: u32) -> usize {
        let members = &self.eq_members[&rep];
        let used = self.eq_used.entry(rep).or_default();
        let slot = members
            .iter()
            .copied()
            .find(|&m| {
                let count = used.iter().filter(|&&u| u == m).count() as u32;
                match self.node.eqs[m as usize].uses {
                    Uses::Bounded(n) => count < n,
                    Uses::Unbounded => true,
                }
            })
            .unwrap_or(members[0]);
        used.push(slot);
        self.eq_ids[slot as usize]
    }

    fn walk(&mut self, tree: &PTree) -> usize {
        match tree {
            PTree::Leaf(rep) => {
                let used = self.res_used.entry(*rep).or_insert(0);
                let slot = self.res_members[rep][*used];
                *used += 1;
                self.res_ids[slot as usize]
            }
            PTree::Apply(f, a) => {
                let fun = self.walk(f);
                let arg = self.walk(a);
                let (next, step) = apply_step(&self.state, fun, arg)
                    .expect("search only records valid applications");
                self.finish(next, step)
            }
            PTree::Lift(t) => {
                let input = self.walk(t);
                let (next, step) =
                    lift_step(&self.state, input).expect("search only records valid lifts");
                self.finish(next, step)
            }
            PTree::Restructure(t, rep) => {
                let input = self.walk(t);
                let eq = self.equation_for(*rep);
                let (next, step) = path_eq_step(&self.state, eq, input)
                    .expect("search only records valid restructurings");
                self.finish(next, step)
            }
        }
    }

    fn finish(&mut self, next: NormalState, step: Step) -> usize {
        let id = step.result().id;
        self.state = next;
        self.steps.push(step);
        id
    }
}

fn step_key(d: &Derivation) -> Vec<(Vec<usize>, usize)> {
    d.steps
        .iter()
        .map(|s| (s.inputs(), s.result().id))
        .collect()
}

/// Every derivation of `goal` from `state`, up to reordering of independent
/// steps and exchange of identical resources.
pub fn derive(
    state: &NormalState,
    goal: &FFormula,
    config: &SearchConfig,
) -> Result<Vec<Derivation>, SearchError> {
    check_initial(state, config)?;
    let (root, res_ids, eq_ids) = root_node(state);
    let mut search = Search {
        goal,
        config: *config,
        memo: HashMap::new(),
        on_path: HashSet::new(),
        explored: 0,
        cycle_hits: 0,
    };
    let trees = match search.expand(&root) {
        Ok(t) => t,
        Err(Stop::Label(e)) => return Err(SearchError::Label(e)),
        Err(Stop::Budget(bound)) => {
            return Err(SearchError::Budget {
                bound,
                explored: search.explored,
                diagnostics: vec![format!(
                    "search stopped after {} states; {} fully explored",
                    search.explored,
                    search.memo.len()
                )],
            })
        }
    };
    let res_rep = first_of_class(&root.res);
    let eq_rep = first_of_class(&root.eqs);
    let canonical: BTreeSet<PTree> = trees
        .iter()
        .map(|t| {
            t.map(&|i| PTree::Leaf(res_rep[i as usize]), &|e| {
                eq_rep[e as usize]
            })
        })
        .collect();
    let mut out: Vec<Derivation> = canonical
        .iter()
        .map(|t| {
            let mut m = Materializer::new(state, &root, &res_ids, &eq_ids);
            let id = m.walk(t);
            let conclusion = m.state.resource(id).cloned().expect("conclusion present");
            Derivation {
                initial: state.clone(),
                steps: m.steps,
                conclusion,
            }
        })
        .collect();
    out.sort_by_cached_key(step_key);
    Ok(out)
}

/// Conclusion labels, deduplicated up to α-equivalence, in canonical order.
pub fn readings(derivs: &[Derivation]) -> Vec<LambdaTerm> {
    let mut seen: BTreeMap<Canon, LambdaTerm> = BTreeMap::new();
    for d in derivs {
        if let Some(l) = &d.conclusion.label {
            seen.entry(l.canonical()).or_insert_with(|| l.clone());
        }
    }
    seen.into_values().collect()
}

// ---------------------------------------------------------------------------
// Diagnostics

/// Minimal leftovers of failed searches. Empty when the goal is reachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnosis {
    pub goal: FFormula,
    /// Resource multisets at dead ends with the fewest resources.
    pub leftovers: Vec<Vec<Resource>>,
    /// Set when the exploration hit the node limit.
    pub truncated: bool,
}

impl Diagnosis {
    pub fn is_empty(&self) -> bool {
        self.leftovers.is_empty()
    }

    fn size(&self) -> Option<usize> {
        self.leftovers.first().map(Vec::len)
    }

    /// Keeps the smallest leftovers across several diagnoses.
    pub fn merge(goal: &FFormula, parts: impl IntoIterator<Item = Diagnosis>) -> Diagnosis {
        let mut out = Diagnosis {
            goal: goal.clone(),
            leftovers: Vec::new(),
            truncated: false,
        };
        for d in parts {
            out.truncated |= d.truncated;
            match (out.size(), d.size()) {
                (_, None) => {}
                (Some(a), Some(b)) if a < b => {}
                (Some(a), Some(b)) if a == b => {
                    for l in d.leftovers {
                        if !out.leftovers.contains(&l) {
                            out.leftovers.push(l);
                        }
                    }
                }
                _ => out.leftovers = d.leftovers,
            }
        }
        out
    }

    /// One `unconsumed:` line per leftover multiset (minus one resource of
    /// the goal type), then one line per antecedent left waiting.
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut waiting = BTreeSet::new();
        for left in &self.leftovers {
            let mut items: Vec<&Resource> = left.iter().collect();
            if let Some(pos) = items.iter().position(|r| r.formula == self.goal) {
                items.remove(pos);
            }
            let text: Vec<String> = items.iter().map(|r| r.to_string()).collect();
            let line = format!("unconsumed: {}", text.join("; "));
            if !out.contains(&line) {
                out.push(line);
            }
            for r in items {
                let (prefix, body) = r.formula.modal_prefix();
                if let FFormula::Implic(a, _) = body {
                    let path: Vec<Attr> = prefix.into_iter().cloned().collect();
                    waiting.insert(FFormula::under_path(&path, (**a).clone()).to_string());
                }
            }
        }
        out.extend(
            waiting
                .into_iter()
                .map(|a| format!("unsatisfied antecedent: {a}")),
        );
        if self.truncated {
            out.push("diagnosis incomplete: node limit reached".to_string());
        }
        out
    }
}

/// Explores every reachable state and reports the smallest dead ends.
pub fn diagnose(state: &NormalState, goal: &FFormula, config: &SearchConfig) -> Diagnosis {
    let (root, _, _) = root_node(state);
    let mut seen = HashSet::new();
    let mut stack = vec![root];
    let mut dead: Vec<Node> = Vec::new();
    let mut reachable = false;
    let mut truncated = false;
    while let Some(node) = stack.pop() {
        if !seen.insert(node.clone()) {
            continue;
        }
        if seen.len() > config.max_nodes {
            truncated = true;
            break;
        }
        if node.res.len() == 1 && node.res[0].formula == *goal {
            reachable = true;
            break;
        }
        match node_moves(&node, config) {
            Ok(moves) if moves.is_empty() => dead.push(node),
            Ok(moves) => stack.extend(moves.into_iter().map(|m| m.child)),
            Err(_) => truncated = true,
        }
    }
    let mut out = Diagnosis {
        goal: goal.clone(),
        leftovers: Vec::new(),
        truncated: truncated && !reachable,
    };
    if reachable {
        return out;
    }
    if let Some(min) = dead.iter().map(|n| n.res.len()).min() {
        let mut picked: Vec<Vec<Resource>> = dead
            .iter()
            .filter(|n| n.res.len() == min)
            .map(|n| {
                n.res
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s.resource(i))
                    .collect()
            })
            .collect();
        picked.sort_by_cached_key(|l: &Vec<Resource>| {
            l.iter().map(|r| r.to_string()).collect::<Vec<_>>()
        });
        out.leftovers = picked;
    }
    out
}
