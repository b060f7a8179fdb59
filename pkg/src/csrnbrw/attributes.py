"""Primary-language assignment rules and per-community language counts.

Only repositories carrying exactly one language are used. All ties are
broken towards the lexicographically smallest language.
"""

from __future__ import annotations

import csv
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ingest import CommitRecord, RepoLanguageRecord
from .partition import Partition

RULES = {1: "bytes", 2: "commits", 3: "majority", 4: "ownership"}


@dataclass(frozen=True)
class SingleLanguageRepos:
    language: dict[str, str]
    bytes: dict[str, int]
    fraction: float  # share of all repos that carry a single language


@dataclass(frozen=True)
class UserLanguageMap:
    languages: dict[str, str]
    rule_id: int

    def __len__(self):
        return len(self.languages)


def single_language_repos(langs: Iterable[RepoLanguageRecord]) -> SingleLanguageRepos:
    per_repo: dict[str, list[RepoLanguageRecord]] = defaultdict(list)
    for rec in langs:
        per_repo[rec.repo_name].append(rec)
    single = {r: recs[0] for r, recs in per_repo.items() if len(recs) == 1}
    frac = len(single) / len(per_repo) if per_repo else 0.0
    return SingleLanguageRepos({r: s.language for r, s in single.items()},
                               {r: s.bytes for r, s in single.items()}, frac)


def _argmax(scores: Mapping[str, float]) -> str:
    top = max(scores.values())
    return min(lang for lang, s in scores.items() if s == top)


def _touched(commits: Iterable[CommitRecord], repo_langs: Mapping[str, str]):
    """user -> Counter(repo -> commit count), single-language repos only."""
    out: dict[str, Counter] = defaultdict(Counter)
    for c in commits:
        if c.repo_name in repo_langs:
            out[c.user_login][c.repo_name] += 1
    return out


def rule1_bytes(commits, repo_langs: Mapping[str, str], repo_bytes: Mapping[str, int]) -> UserLanguageMap:
    """Language of the largest (by bytes) repository the user touched."""
    result = {}
    for user, repos in _touched(commits, repo_langs).items():
        top = max(repo_bytes.get(r, 0) for r in repos)
        result[user] = min(repo_langs[r] for r in repos if repo_bytes.get(r, 0) == top)
    return UserLanguageMap(result, 1)


def rule2_commits(commits, repo_langs: Mapping[str, str]) -> UserLanguageMap:
    """Language with the most commits by the user."""
    result = {}
    for user, repos in _touched(commits, repo_langs).items():
        per_lang: Counter = Counter()
        for r, k in repos.items():
            per_lang[repo_langs[r]] += k
        result[user] = _argmax(per_lang)
    return UserLanguageMap(result, 2)


def _repo_vote(repos: Iterable[str], repo_langs: Mapping[str, str]) -> str:
    return _argmax(Counter(repo_langs[r] for r in repos))


def rule3_majority(commits, repo_langs: Mapping[str, str]) -> UserLanguageMap:
    """Most common language over the distinct repos touched; each repo votes once."""
    touched = _touched(commits, repo_langs)
    return UserLanguageMap({u: _repo_vote(repos, repo_langs) for u, repos in touched.items()}, 3)


def repo_owners(repo_names: Iterable[str]) -> dict[str, str]:
    """Owner login parsed from ``owner/repo`` names; names without a slash have no owner."""
    return {r: r.split("/", 1)[0] for r in repo_names if "/" in r and r.split("/", 1)[0]}


def rule4_ownership(commits, repo_langs: Mapping[str, str], repo_bytes: Mapping[str, int],
                    owners: Mapping[str, str] | None = None) -> UserLanguageMap:
    """Majority language over the user's own repositories (those they touched
    and whose owner is them); users owning none fall back to rule 1."""
    commits = list(commits)
    owners = repo_owners(repo_langs) if owners is None else owners
    fallback = rule1_bytes(commits, repo_langs, repo_bytes).languages
    result = {}
    for user, repos in _touched(commits, repo_langs).items():
        own = [r for r in repos if owners.get(r) == user]
        result[user] = _repo_vote(own, repo_langs) if own else fallback[user]
    return UserLanguageMap(result, 4)


def assign_all(commits: Sequence[CommitRecord], langs: SingleLanguageRepos,
               rules: Iterable[int] = (1, 2, 3, 4)) -> dict[int, UserLanguageMap]:
    out = {}
    for rid in rules:
        if rid == 1:
            out[1] = rule1_bytes(commits, langs.language, langs.bytes)
        elif rid == 2:
            out[2] = rule2_commits(commits, langs.language)
        elif rid == 3:
            out[3] = rule3_majority(commits, langs.language)
        elif rid == 4:
            out[4] = rule4_ownership(commits, langs.language, langs.bytes)
        else:
            raise ValueError(f"unknown language rule {rid}")
    return out


def language_proportions(m: UserLanguageMap) -> dict[str, float]:
    if not m.languages:
        raise ValueError("empty language map")
    counts = Counter(m.languages.values())
    n = len(m.languages)
    return {lang: counts[lang] / n for lang in sorted(counts)}


def distinct_languages_per_community(p: Partition, m: UserLanguageMap,
                                     names: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Distinct assigned languages in each community.

    Returns ``(counts, unlabeled)`` where ``unlabeled[c]`` flags communities
    with no member carrying a language (their count is 0)."""
    seen: list[set[str]] = [set() for _ in range(p.community_count)]
    for node, comm in enumerate(p.labels.tolist()):
        lang = m.languages.get(names[node])
        if lang is not None:
            seen[comm].add(lang)
    counts = np.array([len(s) for s in seen], dtype=np.int64)
    return counts, counts == 0


def write_language_csv(maps: Iterable[UserLanguageMap], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["login", "language", "rule_id"])
        for m in maps:
            for user in sorted(m.languages):
                w.writerow([user, m.languages[user], m.rule_id])


def read_language_csv(path: str | Path) -> dict[int, UserLanguageMap]:
    per_rule: dict[int, dict[str, str]] = defaultdict(dict)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            per_rule[int(row["rule_id"])][row["login"]] = row["language"]
    return {rid: UserLanguageMap(langs, rid) for rid, langs in sorted(per_rule.items())}
