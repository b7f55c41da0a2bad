"""Label matrices and ground truth: parsing, validation, serialization.

File formats (bit-exact):

* Label file: UTF-8 text, one ``item_id worker_id label`` triple per line,
  whitespace-separated tokens. Ids and label tokens are arbitrary
  whitespace-free strings. Lines starting with ``#`` and blank lines are
  skipped. Duplicate (item, worker) pairs are an error.
* Truth file: one ``item_id label`` pair per line, same comment/blank rules.
  Item ids must already exist in the label matrix; truth may be partial.

Items, workers and label tokens are re-indexed densely by first appearance
(0-based for items/workers, 1-based for labels), unless an explicit ordered
class list is supplied.
"""

from __future__ import annotations

import heapq
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import InputError

MISSING = 0  # internal sentinel in the dense label array


@dataclass(frozen=True)
class LabelMatrix:
    """Items x workers categorical observations with explicit missingness.

    ``labels`` is a dense (n_items, n_workers) int16 array holding values in
    1..n_classes, with 0 marking a missing observation. The array is made
    read-only so instances can be shared freely across threads.
    """

    labels: np.ndarray
    n_classes: int
    item_ids: tuple[str, ...]
    worker_ids: tuple[str, ...]
    class_tokens: tuple[str, ...]

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int16)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 2:
            raise InputError("label array must be 2-dimensional")
        if len(self.item_ids) != labels.shape[0]:
            raise InputError("item_ids length does not match label array")
        if len(self.worker_ids) != labels.shape[1]:
            raise InputError("worker_ids length does not match label array")
        if len(self.class_tokens) != self.n_classes:
            raise InputError("class_tokens length does not match n_classes")
        if labels.size and (labels.min() < 0 or labels.max() > self.n_classes):
            raise InputError("labels out of range 1..n_classes")

    @property
    def n_items(self) -> int:
        return self.labels.shape[0]

    @property
    def n_workers(self) -> int:
        return self.labels.shape[1]

    @property
    def n_entries(self) -> int:
        return int(np.count_nonzero(self.labels))

    def entries(self) -> Iterator[tuple[int, int, int]]:
        """Yield (item, worker, label) triples in (item, worker) order."""
        for n, i in zip(*np.nonzero(self.labels)):
            yield int(n), int(i), int(self.labels[n, i])

    def item_index(self, item_id: str) -> int:
        try:
            return self._item_lookup[item_id]
        except KeyError:
            raise InputError(f"unknown item id {item_id!r}") from None

    def class_index(self, token: str) -> int:
        try:
            return self._class_lookup[token]
        except KeyError:
            raise InputError(f"unknown label token {token!r}") from None

    @property
    def _item_lookup(self) -> dict[str, int]:
        lookup = self.__dict__.get("_item_lookup_cache")
        if lookup is None:
            lookup = {s: i for i, s in enumerate(self.item_ids)}
            self.__dict__["_item_lookup_cache"] = lookup
        return lookup

    @property
    def _class_lookup(self) -> dict[str, int]:
        lookup = self.__dict__.get("_class_lookup_cache")
        if lookup is None:
            lookup = {s: c + 1 for c, s in enumerate(self.class_tokens)}
            self.__dict__["_class_lookup_cache"] = lookup
        return lookup

    def to_text(self) -> str:
        """Serialize to the label-file format.

        Entries are emitted in an order whose first appearances of item ids,
        worker ids and label tokens reproduce the stored index assignment, so
        parse -> to_text -> parse is an identity.
        """
        order = _emission_order(self.labels)
        lines = []
        for n, i in order:
            lines.append(
                f"{self.item_ids[n]} {self.worker_ids[i]} "
                f"{self.class_tokens[self.labels[n, i] - 1]}"
            )
        return "\n".join(lines) + "\n"

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelMatrix):
            return NotImplemented
        return (
            self.n_classes == other.n_classes
            and self.item_ids == other.item_ids
            and self.worker_ids == other.worker_ids
            and self.class_tokens == other.class_tokens
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True)
class GroundTruth:
    """Partial item -> label map; 0 marks an unlabeled item."""

    labels: np.ndarray  # (n_items,) int16, 0 = unknown
    n_classes: int = field(default=0)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int16)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1:
            raise InputError("truth array must be 1-dimensional")
        if labels.size and (labels.min() < 0 or (self.n_classes and labels.max() > self.n_classes)):
            raise InputError("truth labels out of range 1..n_classes")

    @property
    def n_labeled(self) -> int:
        return int(np.count_nonzero(self.labels))

    @property
    def covered(self) -> np.ndarray:
        return self.labels > 0

    def items(self) -> Iterator[tuple[int, int]]:
        for n in np.nonzero(self.labels)[0]:
            yield int(n), int(self.labels[n])

    def to_text(self, matrix: LabelMatrix) -> str:
        lines = [
            f"{matrix.item_ids[n]} {matrix.class_tokens[c - 1]}"
            for n, c in self.items()
        ]
        return "\n".join(lines) + "\n"


def _content_lines(text: str) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def parse_labels(
    text: str,
    n_classes: int | None = None,
    classes: Sequence[str] | None = None,
) -> LabelMatrix:
    """Parse a label file into a LabelMatrix.

    Parameters
    ----------
    text : str
        Label file content (``item worker label`` per line).
    n_classes : int, optional
        Declared number of classes; more distinct label tokens than this is
        an error. Ignored when ``classes`` is given.
    classes : sequence of str, optional
        Explicit ordered class list; label tokens outside it are an error
        and the token order fixes the 1..C coding.
    """
    if classes is not None:
        class_tokens: list[str] = list(classes)
        if len(set(class_tokens)) != len(class_tokens):
            raise InputError("class list contains duplicates")
        n_classes = len(class_tokens)
        class_map = {s: c + 1 for c, s in enumerate(class_tokens)}
        extend_classes = False
    else:
        class_tokens = []
        class_map = {}
        extend_classes = True

    item_map: dict[str, int] = {}
    worker_map: dict[str, int] = {}
    item_ids: list[str] = []
    worker_ids: list[str] = []
    triples: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int]] = set()

    for lineno, line in _content_lines(text):
        tokens = line.split()
        if len(tokens) != 3:
            raise InputError(f"line {lineno}: expected 3 tokens, got {len(tokens)}")
        item_tok, worker_tok, label_tok = tokens

        n = item_map.get(item_tok)
        if n is None:
            n = item_map[item_tok] = len(item_ids)
            item_ids.append(item_tok)
        i = worker_map.get(worker_tok)
        if i is None:
            i = worker_map[worker_tok] = len(worker_ids)
            worker_ids.append(worker_tok)
        c = class_map.get(label_tok)
        if c is None:
            if not extend_classes:
                raise InputError(f"line {lineno}: unknown label token {label_tok!r}")
            if n_classes is not None and len(class_tokens) >= n_classes:
                raise InputError(
                    f"line {lineno}: more distinct labels than declared "
                    f"n_classes={n_classes}"
                )
            class_tokens.append(label_tok)
            c = class_map[label_tok] = len(class_tokens)

        if (n, i) in seen:
            raise InputError(
                f"line {lineno}: duplicate label for item {item_tok!r} "
                f"worker {worker_tok!r}"
            )
        seen.add((n, i))
        triples.append((n, i, c))

    if not triples:
        raise InputError("no entries")

    if n_classes is None:
        n_classes = len(class_tokens)
    elif extend_classes and len(class_tokens) < n_classes:
        # declared C larger than what the data shows: pad token list
        class_tokens.extend(
            f"_class{c}" for c in range(len(class_tokens) + 1, n_classes + 1)
        )

    labels = np.zeros((len(item_ids), len(worker_ids)), dtype=np.int16)
    for n, i, c in triples:
        labels[n, i] = c

    return LabelMatrix(
        labels=labels,
        n_classes=n_classes,
        item_ids=tuple(item_ids),
        worker_ids=tuple(worker_ids),
        class_tokens=tuple(class_tokens),
    )


def parse_ground_truth(text: str, matrix: LabelMatrix) -> GroundTruth:
    """Parse a truth file, resolving ids through ``matrix``."""
    labels = np.zeros(matrix.n_items, dtype=np.int16)
    for lineno, line in _content_lines(text):
        tokens = line.split()
        if len(tokens) != 2:
            raise InputError(f"line {lineno}: expected 2 tokens, got {len(tokens)}")
        item_tok, label_tok = tokens
        n = matrix.item_index(item_tok)
        c = matrix.class_index(label_tok)
        if labels[n] and labels[n] != c:
            raise InputError(f"line {lineno}: conflicting truth for item {item_tok!r}")
        labels[n] = c
    return GroundTruth(labels=labels, n_classes=matrix.n_classes)


def _emission_order(labels: np.ndarray) -> list[tuple[int, int]]:
    """Order entries so items, workers and classes first appear in index order.

    Plain (item, worker) sorting can promote a late-indexed worker ahead of
    an earlier one (its first entry may sit on an earlier item), which would
    break the round-trip identity. A valid order always exists because the
    indices were themselves assigned by first appearance; this greedy
    scheduler reconstructs one deterministically.
    """
    by_item: dict[int, list[tuple[int, int]]] = defaultdict(list)
    by_worker: dict[int, list[tuple[int, int]]] = defaultdict(list)
    items_nz, workers_nz = np.nonzero(labels)
    total = len(items_nz)
    for n, i in zip(items_nz.tolist(), workers_nz.tolist()):
        by_item[n].append((n, i))
        by_worker[i].append((n, i))
    for lst in by_item.values():
        lst.sort()
    for lst in by_worker.values():
        lst.sort()

    emitted: set[tuple[int, int]] = set()
    ready: list[tuple[int, int]] = []  # heap: both ids introduced
    deferred: list[tuple[int, int]] = []  # ids introduced, class not yet
    fi = fw = 0  # item/worker frontiers: indices strictly below are introduced
    fc = 1  # class frontier: labels <= fc may be emitted (== fc introduces it)

    def push_for_item(n):
        for e in by_item[n]:
            if e[1] < fw and e not in emitted:
                heapq.heappush(ready, e)

    def push_for_worker(i):
        for e in by_worker[i]:
            if e[0] < fi and e not in emitted:
                heapq.heappush(ready, e)

    def bump(entry):
        nonlocal fi, fw, fc
        n, i = entry
        if labels[entry] == fc:
            fc += 1
            still = []
            for e in deferred:
                if labels[e] <= fc:
                    heapq.heappush(ready, e)
                else:
                    still.append(e)
            deferred[:] = still
        if n == fi:
            fi += 1
            push_for_item(n)
        if i == fw:
            fw += 1
            push_for_worker(i)

    def frontier_entry():
        # an entry introducing the next item or worker must exist (the
        # original first-appearance order is a witness schedule)
        for e in by_item.get(fi, ()):
            if e not in emitted and (e[1] < fw or e[1] == fw) and labels[e] <= fc:
                return e
        for e in by_worker.get(fw, ()):
            if e not in emitted and e[0] < fi and labels[e] <= fc:
                return e
        raise AssertionError("no valid emission order; label matrix corrupt")

    order: list[tuple[int, int]] = []
    while len(order) < total:
        entry = None
        while ready:
            head = heapq.heappop(ready)
            if head in emitted:
                continue
            if labels[head] > fc:
                deferred.append(head)
                continue
            entry = head
            break
        if entry is None:
            entry = frontier_entry()
        emitted.add(entry)
        order.append(entry)
        bump(entry)
    return order
