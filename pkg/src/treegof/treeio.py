"""File formats: tree-sample files (JSON lines) and sequence files.

Tree sample files hold one JSON object per line, ``{"nodes": [label, ...]}``,
where a label is the concatenation of single-character tokens (or tokens
joined by "," when any token is longer).  ``""`` is the root and an empty
array is the empty tree.  An optional first line
``{"space": {"m": 2, "tokens": ["1", "2"], "L": 8}}`` declares the space.

Sequence files are plain text, one sequence per line; lines starting with
">" are record headers and are skipped, so FASTA-style files with one-line
records parse unchanged.
"""

from __future__ import annotations

import json
from typing import Iterable

from .errors import DataError, SuffixClosureError
from .space import Tree, TreeSample, TreeSpace


def _space_from_header(obj: dict) -> TreeSpace:
    spec = obj["space"]
    tokens = spec.get("tokens")
    if tokens is None:
        m = int(spec["m"])
        tokens = [str(i + 1) for i in range(m)]
    space = TreeSpace(tokens, int(spec["L"]))
    if "m" in spec and int(spec["m"]) != space.m:
        raise DataError("header field m disagrees with the token list")
    return space


def space_header(space: TreeSpace, extra: dict | None = None) -> str:
    obj = {"space": {"m": space.m, "tokens": list(space.tokens), "L": space.L}}
    if extra:
        obj.update(extra)
    return json.dumps(obj)


def parse_tree_lines(
    text: str | Iterable[str],
    space: TreeSpace | None = None,
    on_violation: str = "reject",
) -> TreeSample:
    """Parse a tree-sample file into a :class:`TreeSample`.

    ``on_violation`` is ``"reject"`` (error on an orphan node) or
    ``"close"`` (add the missing suffixes).
    """
    if on_violation not in ("reject", "close"):
        raise DataError("on_violation must be 'reject' or 'close'")
    lines = text.splitlines() if isinstance(text, str) else list(text)
    trees: list[Tree] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"line {lineno}: invalid JSON ({e})") from None
        if not isinstance(obj, dict):
            raise DataError(f"line {lineno}: expected a JSON object")
        if "space" in obj:
            declared = _space_from_header(obj)
            if space is not None and declared != space:
                raise DataError(f"line {lineno}: header space mismatch")
            space = declared
            continue
        if "nodes" not in obj:
            raise DataError(f"line {lineno}: missing 'nodes' field")
        if space is None:
            raise DataError("no space given and no header line found")
        try:
            cfg = Tree.from_labels(space, obj["nodes"])
        except SuffixClosureError:
            if on_violation == "reject":
                raise DataError(
                    f"line {lineno}: node set violates suffix closure"
                ) from None
            from .space import Configuration

            orphaned = Configuration.from_labels(space, obj["nodes"])
            cfg = Tree(space, space.suffix_closure(orphaned.membership))
        except DataError as e:
            raise DataError(f"line {lineno}: {e}") from None
        trees.append(cfg)
    if space is None:
        raise DataError("no space given and no header line found")
    return TreeSample(space, trees)


def serialize_tree_lines(sample: TreeSample, header: bool = True) -> str:
    """Inverse of :func:`parse_tree_lines` (round-trips exactly)."""
    out = []
    if header:
        out.append(space_header(sample.space))
    for t in sample:
        out.append(json.dumps({"nodes": t.labels()}))
    return "\n".join(out) + "\n"


def read_sequences(text: str | Iterable[str]) -> list[str]:
    """Sequences from plain text, skipping blank and '>' header lines."""
    lines = text.splitlines() if isinstance(text, str) else list(text)
    seqs = []
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith(">"):
            continue
        seqs.append(line)
    return seqs
