#!/usr/bin/env python3
"""Decision trees over finite-domain variables

A tree is either a Leaf carrying a label or a Node testing one variable with
one child per value of that variable. Trees are immutable; every operation
returns a new tree.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import (Any, Callable, Dict, FrozenSet, Generic, Iterator, List,
                    Optional, Sequence, Tuple, TypeVar, Union)

from sdyna.utils.errors import DomainError, ProblemFormatError, TreeStructureError

logger = logging.getLogger(__name__)

L = TypeVar('L')
State = Tuple[int, ...]

NUMERIC_TOLERANCE = 1e-12


@dataclass(frozen=True)
class DomainSpec:
    """Domain sizes of a variable table, indexed by VarId

    Variables need at least two values. The trailing `appended` attributes
    (the action of a reward domain) only need one.
    """
    sizes: Tuple[int, ...]
    appended: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'sizes', tuple(int(s) for s in self.sizes))
        n_variables = len(self.sizes) - self.appended
        for var, size in enumerate(self.sizes):
            floor = 2 if var < n_variables else 1
            if size < floor:
                raise DomainError(f"variable {var} has domain size {size}, needs at least {floor}")

    @property
    def n_vars(self) -> int:
        return len(self.sizes)

    @property
    def n_states(self) -> int:
        return math.prod(self.sizes)

    def states(self) -> Iterator[State]:
        """All states, variable 0 most significant"""
        return itertools.product(*(range(size) for size in self.sizes))

    def state_index(self, state: Sequence[int]) -> int:
        index = 0
        for value, size in zip(state, self.sizes):
            index = index * size + value
        return index

    def state_from_index(self, index: int) -> State:
        values = []
        for size in reversed(self.sizes):
            index, value = divmod(index, size)
            values.append(value)
        return tuple(reversed(values))

    def validate_state(self, state: Sequence[int]) -> State:
        """Return state as a tuple, raising DomainError if it does not fit"""
        if len(state) != len(self.sizes):
            raise DomainError(f"state has {len(state)} values, expected {len(self.sizes)}")
        for var, (value, size) in enumerate(zip(state, self.sizes)):
            if not 0 <= value < size:
                raise DomainError(f"value {value} of variable {var} outside domain of size {size}")
        return tuple(int(v) for v in state)

    def extended(self, size: int) -> 'DomainSpec':
        """Domain with one extra attribute appended (e.g. the action)"""
        return DomainSpec(self.sizes + (size,), self.appended + 1)


@dataclass(frozen=True)
class Leaf(Generic[L]):
    label: L


@dataclass(frozen=True)
class Node:
    var: int
    children: Tuple['DecisionTree', ...]

    def __post_init__(self):
        object.__setattr__(self, 'children', tuple(self.children))


DecisionTree = Union[Leaf, Node]


@dataclass(frozen=True)
class LeafRegion(Generic[L]):
    """A leaf, the assignments fixed along its path, and the number of states it covers"""
    label: L
    assignment: Tuple[Tuple[int, int], ...]
    region_size: int

    @property
    def fixed(self) -> Dict[int, int]:
        return dict(self.assignment)


def labels_equal(a: Any, b: Any) -> bool:
    """Exact equality for discrete labels, 1e-12 absolute tolerance for numbers"""
    if isinstance(a, bool) or isinstance(b, bool):
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return abs(a - b) <= NUMERIC_TOLERANCE
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(labels_equal(x, y) for x, y in zip(a, b))
    return a == b


def make_node(var: int, children: Sequence[DecisionTree]) -> DecisionTree:
    """Build a Node, collapsing it when every child is the same leaf"""
    first = children[0]
    if isinstance(first, Leaf) and all(
            isinstance(child, Leaf) and labels_equal(child.label, first.label)
            for child in children[1:]):
        return first
    return Node(var, tuple(children))


def evaluate(tree: DecisionTree, state: Sequence[int]) -> Any:
    """Label of the leaf reached by state"""
    node = tree
    while isinstance(node, Node):
        if node.var >= len(state):
            raise TreeStructureError(f"tree tests variable {node.var} but state has {len(state)} values")
        value = state[node.var]
        if not 0 <= value < len(node.children):
            raise TreeStructureError(
                f"node on variable {node.var} has {len(node.children)} children, value {value} has none")
        node = node.children[value]
    return node.label


def _resolve(tree: DecisionTree, context: Dict[int, int]) -> DecisionTree:
    while isinstance(tree, Node) and tree.var in context:
        tree = tree.children[context[tree.var]]
    return tree


def merge(trees: Sequence[DecisionTree], combiner: Callable[[Tuple[Any, ...]], Any]) -> DecisionTree:
    """Single tree holding every partition of trees, leaves labeled by combiner(labels)

    Descends the first tree that still has an untested variable and resolves
    every other tree against the assignments made so far, so each variable is
    tested at most once per path.
    """
    if not trees:
        raise ValueError("merge needs at least one tree")

    def go(pending: List[DecisionTree], context: Dict[int, int]) -> DecisionTree:
        pending = [_resolve(t, context) for t in pending]
        for t in pending:
            if isinstance(t, Node):
                children = []
                for value in range(len(t.children)):
                    context[t.var] = value
                    children.append(go(pending, context))
                del context[t.var]
                return make_node(t.var, children)
        return Leaf(combiner(tuple(t.label for t in pending)))

    return go(list(trees), {})


def restrict(tree: DecisionTree, var: int, value: int) -> DecisionTree:
    """Tree with var fixed to value"""
    if isinstance(tree, Leaf):
        return tree
    if tree.var == var:
        if not 0 <= value < len(tree.children):
            raise DomainError(f"value {value} outside domain of variable {var}")
        return restrict(tree.children[value], var, value)
    return make_node(tree.var, [restrict(child, var, value) for child in tree.children])


def simplify(tree: DecisionTree) -> DecisionTree:
    """Collapse nodes whose children are identical leaves, bottom-up"""
    if isinstance(tree, Leaf):
        return tree
    return make_node(tree.var, [simplify(child) for child in tree.children])


def map_leaves(tree: DecisionTree, fn: Callable[[Any], Any], collapse: bool = True) -> DecisionTree:
    """Relabel every leaf with fn(label)"""
    if isinstance(tree, Leaf):
        return Leaf(fn(tree.label))
    children = [map_leaves(child, fn, collapse) for child in tree.children]
    return make_node(tree.var, children) if collapse else Node(tree.var, tuple(children))


def leaf_regions(tree: DecisionTree, domain: DomainSpec) -> List[LeafRegion]:
    """Every leaf with its path assignment and region size S_l"""
    regions = []
    total = domain.n_states

    def walk(node: DecisionTree, path: Tuple[Tuple[int, int], ...], fixed_size: int):
        if isinstance(node, Leaf):
            regions.append(LeafRegion(node.label, path, total // fixed_size))
            return
        size = domain.sizes[node.var]
        for value, child in enumerate(node.children):
            walk(child, path + ((node.var, value),), fixed_size * size)

    walk(tree, (), 1)
    return regions


def leaves(tree: DecisionTree) -> Iterator[Any]:
    """Leaf labels in depth-first order"""
    if isinstance(tree, Leaf):
        yield tree.label
        return
    for child in tree.children:
        yield from leaves(child)


def tested_variables(tree: DecisionTree) -> FrozenSet[int]:
    """Variables tested anywhere in tree"""
    found = set()
    stack = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Node):
            found.add(node.var)
            stack.extend(node.children)
    return frozenset(found)


def node_count(tree: DecisionTree) -> int:
    """Internal nodes plus leaves"""
    if isinstance(tree, Leaf):
        return 1
    return 1 + sum(node_count(child) for child in tree.children)


def leaf_count(tree: DecisionTree) -> int:
    if isinstance(tree, Leaf):
        return 1
    return sum(leaf_count(child) for child in tree.children)


def validate_tree(tree: DecisionTree, domain: DomainSpec) -> None:
    """Check child counts and that no variable repeats on a path"""
    def walk(node: DecisionTree, on_path: FrozenSet[int]):
        if isinstance(node, Leaf):
            return
        if not 0 <= node.var < domain.n_vars:
            raise TreeStructureError(f"tree tests unknown variable {node.var}")
        if node.var in on_path:
            raise TreeStructureError(f"variable {node.var} tested twice on one path")
        if len(node.children) != domain.sizes[node.var]:
            raise TreeStructureError(
                f"node on variable {node.var} has {len(node.children)} children, "
                f"domain has {domain.sizes[node.var]} values")
        for child in node.children:
            walk(child, on_path | {node.var})

    walk(tree, frozenset())


def tree_to_dict(tree: DecisionTree, names: Sequence[str],
                 encode: Optional[Callable[[Any], Any]] = None) -> Dict[str, Any]:
    """Nested-record form: {"leaf": label} or {"test": name, "children": [...]}"""
    if isinstance(tree, Leaf):
        return {'leaf': encode(tree.label) if encode else tree.label}
    return {
        'test': names[tree.var],
        'children': [tree_to_dict(child, names, encode) for child in tree.children],
    }


def tree_from_dict(data: Any, names: Sequence[str], sizes: Sequence[int],
                   decode: Optional[Callable[[Any, str], Any]] = None,
                   field: str = 'tree') -> DecisionTree:
    """Parse the nested-record form; decode(raw_label, field) converts leaf labels"""
    index = {name: i for i, name in enumerate(names)}

    def parse(node: Any, where: str, on_path: FrozenSet[int]) -> DecisionTree:
        if not isinstance(node, dict):
            raise ProblemFormatError("expected an object with 'leaf' or 'test'", field=where)
        if 'leaf' in node:
            raw = node['leaf']
            return Leaf(decode(raw, where) if decode else raw)
        if 'test' not in node or 'children' not in node:
            raise ProblemFormatError("expected 'leaf' or 'test' with 'children'", field=where)
        name = node['test']
        if name not in index:
            raise ProblemFormatError(f"unknown variable '{name}'", field=where)
        var = index[name]
        if var in on_path:
            raise ProblemFormatError(f"variable '{name}' tested twice on one path", field=where)
        children = node['children']
        if not isinstance(children, list) or len(children) != sizes[var]:
            raise ProblemFormatError(
                f"test on '{name}' needs {sizes[var]} children", field=where)
        parsed = [parse(child, f"{where}.children[{k}]", on_path | {var})
                  for k, child in enumerate(children)]
        return Node(var, tuple(parsed))

    return parse(data, field, frozenset())
