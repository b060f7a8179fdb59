"""Commit / country / repo-language tables and the user-user projection."""

from __future__ import annotations

import csv
import io
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date
from itertools import combinations
from typing import IO, Iterable, Mapping

import numpy as np

from .graph import Graph, graph_from_arrays, induced_subgraph, remove_isolates

log = logging.getLogger(__name__)

COMMIT_HEADER = ("repo", "login", "date", "added", "deleted")
COUNTRY_HEADER = ("login", "country_code")
LANGUAGE_HEADER = ("repo", "language", "bytes")
REPO_CONTRIBUTOR_CAP = 10_000

_COUNTRY_RE = re.compile(r"^[A-Z]{2}$")


class InputFormatError(ValueError):
    """A table is missing its header or is otherwise unusable."""


class AttributeConflictError(ValueError):
    def __init__(self, users):
        self.users = sorted(users)
        super().__init__(f"conflicting country rows for users: {', '.join(self.users)}")


@dataclass(frozen=True)
class CommitRecord:
    repo_name: str
    user_login: str
    date: date
    lines_added: int
    lines_deleted: int


@dataclass(frozen=True)
class RepoLanguageRecord:
    repo_name: str
    language: str
    bytes: int


@dataclass(frozen=True)
class UserCountryRecord:
    user_login: str
    country_code: str


@dataclass
class ParseReport:
    rows: int = 0
    skipped: int = 0
    problems: list[str] = field(default_factory=list)

    def skip(self, lineno: int, reason: str) -> None:
        self.skipped += 1
        if len(self.problems) < 20:
            self.problems.append(f"line {lineno}: {reason}")


def _open_text(stream) -> IO[str]:
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(stream.decode("utf-8"))
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8", newline="")


def _rows(stream, header: tuple[str, ...], what: str):
    reader = csv.reader(_open_text(stream))
    first = next(reader, None)
    if first is None or tuple(c.strip().lower() for c in first) != header:
        raise InputFormatError(f"{what} table must start with header {','.join(header)}; got {first!r}")
    for lineno, row in enumerate(reader, 2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        yield lineno, [c.strip() for c in row]


def parse_commits(stream) -> tuple[list[CommitRecord], ParseReport]:
    """Parse ``repo,login,date,added,deleted`` rows; bad rows are skipped
    and tallied in the returned report."""
    out: list[CommitRecord] = []
    report = ParseReport()
    for lineno, row in _rows(stream, COMMIT_HEADER, "commit"):
        report.rows += 1
        if len(row) != 5:
            report.skip(lineno, f"expected 5 fields, got {len(row)}")
            continue
        repo, login, day, added, deleted = row
        if not repo or not login:
            report.skip(lineno, "empty repo or login")
            continue
        try:
            rec = CommitRecord(repo, login, date.fromisoformat(day[:10]), int(added), int(deleted))
        except ValueError as exc:
            report.skip(lineno, str(exc))
            continue
        if rec.lines_added < 0 or rec.lines_deleted < 0:
            report.skip(lineno, "negative line count")
            continue
        out.append(rec)
    if report.skipped:
        log.warning("commit table: skipped %d of %d rows", report.skipped, report.rows)
    return out, report


def parse_countries(stream) -> list[UserCountryRecord]:
    """Rows with a well-formed ISO alpha-2 code; others are dropped."""
    out = []
    for _, row in _rows(stream, COUNTRY_HEADER, "country"):
        if len(row) != 2 or not row[0]:
            continue
        code = row[1].upper()
        if _COUNTRY_RE.match(code):
            out.append(UserCountryRecord(row[0], code))
    return out


def parse_repo_languages(stream) -> list[RepoLanguageRecord]:
    out = []
    seen = set()
    for lineno, row in _rows(stream, LANGUAGE_HEADER, "repo-language"):
        if len(row) != 3 or not row[0] or not row[1]:
            continue
        try:
            nbytes = int(row[2])
        except ValueError:
            continue
        if nbytes < 0 or (row[0], row[1]) in seen:
            continue
        seen.add((row[0], row[1]))
        out.append(RepoLanguageRecord(row[0], row[1], nbytes))
    return out


def filter_bots(records: list[CommitRecord], suffix: str = "bot") -> tuple[list[CommitRecord], int]:
    """Drop every commit by a login ending in ``suffix`` (case-insensitive)."""
    suffix = suffix.lower()
    bots = {r.user_login for r in records if r.user_login.lower().endswith(suffix)}
    if not bots:
        return list(records), 0
    return [r for r in records if r.user_login not in bots], len(bots)


def project_collaboration(records: Iterable[CommitRecord],
                          repo_cap: int = REPO_CONTRIBUTOR_CAP) -> Graph:
    """User-user graph: edge weight = number of distinct repositories two users
    both committed to. Users without any co-contributor are left out. Nodes
    are numbered in sorted login order."""
    contributors: dict[str, set[str]] = defaultdict(set)
    for r in records:
        contributors[r.repo_name].add(r.user_login)

    shared: dict[tuple[str, str], int] = defaultdict(int)
    for repo in sorted(contributors):
        users = contributors[repo]
        if len(users) > repo_cap:
            log.warning("skipping repo %s: %d contributors exceeds cap %d", repo, len(users), repo_cap)
            continue
        for pair in combinations(sorted(users), 2):
            shared[pair] += 1

    logins = sorted({u for pair in shared for u in pair})
    index = {u: i for i, u in enumerate(logins)}
    pairs = sorted(shared)
    u = np.array([index[a] for a, _ in pairs], dtype=np.int64)
    v = np.array([index[b] for _, b in pairs], dtype=np.int64)
    w = np.array([shared[p] for p in pairs], dtype=np.float64)
    return graph_from_arrays(u, v, w, node_count=len(logins), names=logins)


def unique_countries(countries: Iterable[UserCountryRecord]) -> dict[str, str]:
    """Users with exactly one distinct country; multi-country users are dropped."""
    seen: dict[str, set[str]] = defaultdict(set)
    for rec in countries:
        seen[rec.user_login].add(rec.country_code)
    return {u: next(iter(cs)) for u, cs in seen.items() if len(cs) == 1}


def subset_international(g: Graph, countries: Iterable[UserCountryRecord]) -> Graph:
    """Induced subgraph on users with a single valid country, minus the
    isolates that the cut creates."""
    mapped = unique_countries(countries)
    if g.names is None:
        raise ValueError("graph carries no user logins")
    keep = np.array([i for i, name in enumerate(g.names) if name in mapped], dtype=np.int64)
    sub, _ = induced_subgraph(g, keep)
    sub, _ = remove_isolates(sub)
    return sub


@dataclass
class AttributeMap:
    """Per-node attributes; ``None`` marks a user absent from a table."""

    country: list[str | None]
    language: list[str | None]

    def coverage(self) -> dict[str, float]:
        n = len(self.country) or 1
        return {
            "country": sum(c is not None for c in self.country) / n,
            "language": sum(lang is not None for lang in self.language) / n,
        }


def join_attributes(names: list[str], countries: Iterable[UserCountryRecord],
                    languages: Mapping[str, str] | None = None) -> AttributeMap:
    """Attach country and primary language to each node of the user index.

    A user with two different country rows is an error here (unlike
    :func:`subset_international`, which silently excludes such users)."""
    seen: dict[str, set[str]] = defaultdict(set)
    for rec in countries:
        seen[rec.user_login].add(rec.country_code)
    present = set(names)
    conflicts = [u for u, cs in seen.items() if len(cs) > 1 and u in present]
    if conflicts:
        raise AttributeConflictError(conflicts)
    languages = languages or {}
    country = [next(iter(seen[u])) if u in seen else None for u in names]
    language = [languages.get(u) for u in names]
    return AttributeMap(country, language)
