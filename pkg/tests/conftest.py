import itertools

import numpy as np
import pytest
from scipy.special import zeta

from csrnbrw import toys
from csrnbrw.graph import build_graph
from csrnbrw.ingest import project_collaboration


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the verdict for one acceptance criterion; the line is printed in
    the terminal summary."""
    def record(number, title, passed, detail=""):
        _CRITERIA[number] = f"criterion {number:>2}  {'PASS' if passed else 'FAIL'}  {title}  [{detail}]"
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])


def set_partitions(n):
    """All set partitions of range(n) as restricted-growth label tuples."""
    def rec(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for lab in range(top + 2):
            yield from rec(prefix + [lab], max(top, lab))
    if n == 0:
        yield ()
        return
    yield from rec([0], 0)


def modularity_by_formula(n, edges, labels):
    """Q straight from the double sum over node pairs of the adjacency matrix."""
    A = np.zeros((n, n))
    for u, v, w in edges:
        A[u, v] += w
        A[v, u] += w
    k = A.sum(axis=1)
    two_m = A.sum()
    q = 0.0
    for i in range(n):
        for j in range(n):
            if labels[i] == labels[j]:
                q += A[i, j] - k[i] * k[j] / two_m
    return q / two_m


def random_connected_edges(n, rng, p=0.5, weighted=False):
    """Random connected graph: a random spanning tree plus extra edges."""
    order = rng.permutation(n)
    edges = {}
    for i in range(1, n):
        u, v = int(order[i]), int(order[rng.integers(0, i)])
        edges[(min(u, v), max(u, v))] = 1.0
    for u, v in itertools.combinations(range(n), 2):
        if (u, v) not in edges and rng.random() < p:
            edges[(u, v)] = 1.0
    if weighted:
        edges = {e: float(rng.integers(1, 5)) for e in edges}
    return [(u, v, w) for (u, v), w in sorted(edges.items())]


def discrete_power_law(alpha, n, rng, xmin=1, table=200_000):
    """Inverse-CDF draws from P(x) ~ x^-alpha, x >= xmin.

    Exact on the first ``table`` support points; the remaining mass (tiny for
    alpha > 2) comes from the continuous approximation."""
    xs = np.arange(xmin, xmin + table, dtype=float)
    norm = zeta(alpha, xmin)
    ccdf = zeta(alpha, xs) / norm
    u = rng.random(n)
    out = xs[np.searchsorted(-ccdf, -u, side="right") - 1].astype(np.int64)
    rest = zeta(alpha, xmin + table) / norm
    far = u < rest
    top = xmin + table - 0.5
    out[far] = np.floor(top * (u[far] / rest) ** (-1 / (alpha - 1)) + 0.5).astype(np.int64)
    return out


@pytest.fixture
def triangle():
    return build_graph([(0, 1, 1), (1, 2, 1), (0, 2, 1)])


@pytest.fixture
def two_triangles_bridged():
    return build_graph([(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1), (2, 3, 1)])


@pytest.fixture
def clique_pair_graph():
    return project_collaboration(toys.clique_pair())


@pytest.fixture
def star_clique_graph():
    return project_collaboration(toys.star_and_clique())


def rule_divergence_tables(teams=10, size=5, drifters=2):
    """Commit, language and country tables where rules 2 and 3 disagree.

    Every team shares one Python repo (ten commits per member). The first
    ``drifters`` members of each team also push one commit to each of two
    Java repos nobody else touches, so their repo vote says Java while their
    commit count says Python. Returns (commits_csv, languages_csv,
    countries_csv, drifting logins)."""
    commits = ["repo,login,date,added,deleted"]
    langs = ["repo,language,bytes"]
    countries = ["login,country_code"]
    drift = set()
    for t in range(teams):
        core = f"team{t}/core"
        langs.append(f"{core},Python,90000")
        for j in range(size):
            login = f"t{t}u{j}"
            countries.append(f"{login},{'US' if (t + j) % 3 else 'DE'}")
            commits += [f"{core},{login},2020-01-{d + 1:02d},5,1" for d in range(10)]
            if j < drifters:
                drift.add(login)
                for side in ("a", "b"):
                    repo = f"side{t}{j}/{side}"
                    langs.append(f"{repo},Java,100")
                    commits.append(f"{repo},{login},2020-02-01,3,0")
    return "\n".join(commits) + "\n", "\n".join(langs) + "\n", "\n".join(countries) + "\n", drift
