"""Two small commit tables illustrating how cycle weighting changes Louvain.

``clique_pair``: a 4-user repo and a 5-user repo bridged by a third repo
shared by two users of the second and one of the first. Both methods find
the two groups.

``star_and_clique``: one user co-authors a separate repo with each of eight
others (a star, no cycles), plus five users sharing one repo (a clique).
Plain Louvain returns the star and the clique; with cycle weighting the
star's edges carry zero weight and its nine users end up as singletons.
"""

from __future__ import annotations

from datetime import date

from .ingest import COMMIT_HEADER, CommitRecord

GREEK = ["alpha", "beta", "gamma", "delta", "rho"]

_DAY = date(2019, 1, 1)


def _records(repos: dict[str, list[str]]) -> list[CommitRecord]:
    return [CommitRecord(repo, user, _DAY, 10, 0) for repo, users in repos.items() for user in users]


def clique_pair() -> list[CommitRecord]:
    return _records({
        "team/repo1": ["a", "b", "c", "d"],
        "team/repo2": list(GREEK),
        "team/repo3": ["alpha", "beta", "d"],
    })


CLIQUE_PAIR_GROUPS = [frozenset("abcd"), frozenset(GREEK)]


def star_and_clique() -> list[CommitRecord]:
    repos = {f"b/project-{x}": ["b", x] for x in "acdefghi"}
    repos["greek/shared"] = list(GREEK)
    return _records(repos)


STAR_GROUP = frozenset("abcdefghi")
CLIQUE_GROUP = frozenset(GREEK)


def to_csv(records: list[CommitRecord]) -> str:
    lines = [",".join(COMMIT_HEADER)]
    for r in records:
        lines.append(f"{r.repo_name},{r.user_login},{r.date.isoformat()},{r.lines_added},{r.lines_deleted}")
    return "\n".join(lines) + "\n"
