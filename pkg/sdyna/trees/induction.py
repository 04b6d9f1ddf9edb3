#!/usr/bin/env python3
"""Incremental decision-tree induction with chi-square gated splits

A LearnerTree ingests a stream of <attributes, class> examples and keeps a
tree estimating P(class | attributes). Every node keeps the contingency
tables (attribute value x class) of the examples that reach it, so the best
test of any node can be rescored in one vectorized call. Leaves store their
examples; a subtree whose installed test is no longer the best one is rebuilt
from the examples below it.
"""

import logging
from dataclasses import dataclass, asdict
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from sdyna.stats.chi_square import chi2_statistics
from sdyna.trees.decision_tree import DecisionTree, Leaf, Node
from sdyna.utils.errors import DomainError

logger = logging.getLogger(__name__)

Example = Tuple[Tuple[int, ...], int]


@dataclass
class InductionConfig:
    """Split gating and restructuring thresholds"""
    tau_chi2: float = 7.88
    restructure_margin: float = 0.0

    def __post_init__(self):
        if self.tau_chi2 < 0:
            raise ValueError(f"tau_chi2 must be >= 0 (got {self.tau_chi2})")
        if self.restructure_margin < 0:
            raise ValueError(f"restructure_margin must be >= 0 (got {self.restructure_margin})")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'InductionConfig':
        known_fields = {f.name for f in cls.__dataclass_fields__.values()}
        return cls(**{k: v for k, v in data.items() if k in known_fields})


@dataclass(frozen=True)
class ClassDistribution:
    """Class counts at a leaf; probabilities are uniform when nothing was counted"""
    counts: Tuple[int, ...]
    values: Tuple[Any, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def probabilities(self) -> Tuple[float, ...]:
        total = self.total
        if total == 0:
            if not self.counts:
                return ()
            return tuple(1.0 / len(self.counts) for _ in self.counts)
        return tuple(c / total for c in self.counts)

    def expected_value(self) -> float:
        """Mean of numeric class values; 0.0 when empty"""
        total = self.total
        if total == 0:
            return 0.0
        return float(sum(c * v for c, v in zip(self.counts, self.values)) / total)


class NodeStatistics:
    """Class counts and one contingency table per attribute for the examples reaching a node"""

    def __init__(self, attribute_sizes: np.ndarray, candidates: np.ndarray, n_classes: int):
        self.attribute_sizes = attribute_sizes
        self.candidates = candidates
        self.tables = np.zeros((len(attribute_sizes), int(attribute_sizes.max()), n_classes), dtype=np.int64)
        self.class_counts = np.zeros(n_classes, dtype=np.int64)
        self._rows = np.arange(len(attribute_sizes))

    @classmethod
    def from_examples(cls, examples: Sequence[Example], attribute_sizes: np.ndarray,
                      candidates: np.ndarray, n_classes: int) -> 'NodeStatistics':
        stats = cls(attribute_sizes, candidates, n_classes)
        if examples:
            attrs = np.array([e[0] for e in examples], dtype=np.intp)
            classes = np.array([e[1] for e in examples], dtype=np.intp)
            rows = np.broadcast_to(stats._rows, attrs.shape)
            cols = np.broadcast_to(classes[:, None], attrs.shape)
            np.add.at(stats.tables, (rows, attrs, cols), 1)
            stats.class_counts += np.bincount(classes, minlength=n_classes)
        return stats

    @property
    def count(self) -> int:
        return int(self.class_counts.sum())

    def add(self, attrs: np.ndarray, cls: int):
        self.tables[self._rows, attrs, cls] += 1
        self.class_counts[cls] += 1

    def add_class(self):
        self.tables = np.pad(self.tables, ((0, 0), (0, 0), (0, 1)))
        self.class_counts = np.pad(self.class_counts, (0, 1))

    def is_pure(self) -> bool:
        return int(np.count_nonzero(self.class_counts)) <= 1

    def chi2_scores(self, attributes: np.ndarray) -> np.ndarray:
        """Chi-square statistic of each listed attribute against the class"""
        if self.is_pure() or self.tables.shape[1] < 2:
            return np.zeros(len(attributes))
        return chi2_statistics(self.tables[attributes])

    def chi2_of(self, attribute: int) -> float:
        return float(self.chi2_scores(np.array([attribute]))[0])


def best_test(stats: NodeStatistics) -> Optional[Tuple[int, float]]:
    """Candidate attribute with maximal chi-square, lowest VarId on ties"""
    candidates = np.flatnonzero(stats.candidates)
    if candidates.size == 0:
        return None
    scores = stats.chi2_scores(candidates)
    best = int(np.argmax(scores))
    return int(candidates[best]), float(scores[best])


def split_decision(chi2: float, config: InductionConfig) -> bool:
    """Install a test only if its statistic reaches the threshold"""
    return chi2 >= config.tau_chi2


class _LearnerNode:
    __slots__ = ('stats', 'test', 'children', 'examples', 'installed_chi2')

    def __init__(self, stats: NodeStatistics, examples: List[Example]):
        self.stats = stats
        self.test: Optional[int] = None
        self.children: Optional[List['_LearnerNode']] = None
        self.examples: Optional[List[Example]] = examples
        self.installed_chi2: Optional[float] = None

    @property
    def is_leaf(self) -> bool:
        return self.test is None


class LearnerTree:
    """Decision tree learned incrementally from <attributes, class> examples

    class_values fixes the class domain (CPD learners); leave it None to
    discover class values as they arrive (reward learner).
    """

    def __init__(self, attribute_sizes: Sequence[int], class_values: Optional[Sequence[Any]] = None,
                 config: Optional[InductionConfig] = None):
        if not attribute_sizes:
            raise DomainError("a learner needs at least one attribute")
        self.attribute_sizes = np.asarray(attribute_sizes, dtype=np.intp)
        self.config = config or InductionConfig()
        self._open_classes = class_values is None
        self.class_values: List[Any] = [] if class_values is None else list(class_values)
        self._class_index: Dict[Any, int] = {v: i for i, v in enumerate(self.class_values)}
        self.root = self._new_leaf(np.ones(len(self.attribute_sizes), dtype=bool), [])
        self._n_examples = 0
        self._frozen: Optional[DecisionTree] = None

    # -- construction helpers -------------------------------------------

    def _new_leaf(self, candidates: np.ndarray, examples: List[Example]) -> _LearnerNode:
        stats = NodeStatistics.from_examples(examples, self.attribute_sizes, candidates,
                                             max(len(self.class_values), 1))
        return _LearnerNode(stats, examples)

    def _validate(self, attributes: Sequence[int]) -> Tuple[int, ...]:
        if len(attributes) != len(self.attribute_sizes):
            raise DomainError(f"expected {len(self.attribute_sizes)} attributes, got {len(attributes)}")
        attrs = tuple(int(v) for v in attributes)
        for i, (value, size) in enumerate(zip(attrs, self.attribute_sizes)):
            if not 0 <= value < size:
                raise DomainError(f"attribute {i} value {value} outside domain of size {size}")
        return attrs

    def _class_id(self, class_value: Any) -> int:
        if class_value in self._class_index:
            return self._class_index[class_value]
        if not self._open_classes:
            raise DomainError(f"class value {class_value!r} outside declared classes {self.class_values}")
        self._class_index[class_value] = len(self.class_values)
        self.class_values.append(class_value)
        if len(self.class_values) > 1:
            for node in self._nodes():
                node.stats.add_class()
        return self._class_index[class_value]

    def _nodes(self) -> Iterator[_LearnerNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if node.children:
                stack.extend(node.children)

    # -- growth and restructuring ---------------------------------------

    def _split(self, node: _LearnerNode, var: int, chi2: float):
        size = int(self.attribute_sizes[var])
        buckets: List[List[Example]] = [[] for _ in range(size)]
        for example in node.examples:
            buckets[example[0][var]].append(example)
        candidates = node.stats.candidates.copy()
        candidates[var] = False
        node.children = [self._new_leaf(candidates, bucket) for bucket in buckets]
        node.test = var
        node.examples = None
        node.installed_chi2 = chi2

    def _grow(self, start: _LearnerNode):
        """Split leaves top-down while the best test passes the threshold"""
        stack = [start]
        while stack:
            node = stack.pop()
            if node.stats.is_pure():
                continue
            choice = best_test(node.stats)
            if choice is None:
                continue
            var, chi2 = choice
            if not split_decision(chi2, self.config):
                continue
            self._split(node, var, chi2)
            stack.extend(node.children)

    def _collect(self, node: _LearnerNode) -> List[Example]:
        if node.is_leaf:
            return list(node.examples)
        collected = []
        for child in node.children:
            collected.extend(self._collect(child))
        return collected

    def _rebuild(self, node: _LearnerNode):
        examples = self._collect(node)
        logger.debug(f"Rebuilding subtree on attribute {node.test} from {len(examples)} examples")
        node.test = None
        node.children = None
        node.installed_chi2 = None
        node.examples = examples
        self._grow(node)

    def _needs_restructure(self, node: _LearnerNode) -> bool:
        candidates = np.flatnonzero(node.stats.candidates)
        scores = node.stats.chi2_scores(candidates)
        installed = float(scores[np.searchsorted(candidates, node.test)])
        if not split_decision(installed, self.config):
            return True
        return installed < float(scores.max()) - self.config.restructure_margin

    # -- public operations ----------------------------------------------

    def add_example(self, attributes: Sequence[int], class_value: Any) -> 'LearnerTree':
        """Route one example to its leaf, update statistics, keep best tests installed"""
        attrs = self._validate(attributes)
        cls = self._class_id(class_value)
        vector = np.asarray(attrs, dtype=np.intp)
        path = []
        node = self.root
        while True:
            node.stats.add(vector, cls)
            path.append(node)
            if node.is_leaf:
                break
            node = node.children[attrs[node.test]]
        node.examples.append((attrs, cls))
        self._n_examples += 1
        self._frozen = None

        for internal in path[:-1]:
            if self._needs_restructure(internal):
                self._rebuild(internal)
                return self
        self._grow(node)
        return self

    def add_examples(self, examples: Sequence[Tuple[Sequence[int], Any]]) -> 'LearnerTree':
        """Ingest a batch and rebuild the whole tree once from every stored example"""
        batch = [(self._validate(attrs), self._class_id(value)) for attrs, value in examples]
        stored = self._collect(self.root) + batch
        self.root = self._new_leaf(np.ones(len(self.attribute_sizes), dtype=bool), stored)
        self._n_examples += len(batch)
        self._frozen = None
        self._grow(self.root)
        return self

    def ensure_best_test(self) -> 'LearnerTree':
        """Rebuild every subtree whose installed test is no longer the best one"""
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                continue
            if self._needs_restructure(node):
                self._rebuild(node)
                self._frozen = None
                continue
            stack.extend(node.children)
        return self

    def _leaf_for(self, attributes: Sequence[int]) -> _LearnerNode:
        attrs = self._validate(attributes)
        node = self.root
        while not node.is_leaf:
            node = node.children[attrs[node.test]]
        return node

    def _distribution(self, stats: NodeStatistics) -> ClassDistribution:
        counts = tuple(int(c) for c in stats.class_counts[:len(self.class_values)])
        return ClassDistribution(counts, tuple(self.class_values))

    def predict_distribution(self, attributes: Sequence[int]) -> ClassDistribution:
        """Maximum-likelihood class distribution of the leaf reached by attributes"""
        return self._distribution(self._leaf_for(attributes).stats)

    def predict_value(self, attributes: Sequence[int]) -> float:
        """Expected numeric class value at the leaf reached by attributes"""
        return self.predict_distribution(attributes).expected_value()

    def freeze(self) -> DecisionTree:
        """Immutable snapshot whose leaves carry the current ClassDistributions"""
        if self._frozen is None:
            def snapshot(node: _LearnerNode) -> DecisionTree:
                if node.is_leaf:
                    return Leaf(self._distribution(node.stats))
                return Node(node.test, tuple(snapshot(child) for child in node.children))
            self._frozen = snapshot(self.root)
        return self._frozen

    # -- inspection -----------------------------------------------------

    @property
    def example_count(self) -> int:
        return self._n_examples

    def stored_examples(self) -> List[Example]:
        return self._collect(self.root)

    def node_count(self) -> int:
        return sum(1 for _ in self._nodes())

    def installed_tests(self) -> List[Tuple[int, float]]:
        """(attribute, chi-square at installation) for every internal node"""
        return [(node.test, node.installed_chi2) for node in self._nodes() if not node.is_leaf]

    def tested_attributes(self) -> frozenset:
        return frozenset(node.test for node in self._nodes() if not node.is_leaf)
