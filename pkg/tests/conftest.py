import numpy as np
import pytest

from chebfilter.graph import Graph


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < p
    return Graph.from_edges(n, np.stack([iu[0][keep], iu[1][keep]], axis=1))


@pytest.fixture
def small_graph():
    return random_graph(12, 0.3, 1)


def write_dataset(tmp_path, edges, features, labels):
    e = tmp_path / "edges.txt"
    f = tmp_path / "features.csv"
    y = tmp_path / "labels.txt"
    e.write_text("".join(f"{u} {v}\n" for u, v in edges))
    f.write_text("".join(",".join(repr(float(v)) for v in row) + "\n" for row in features))
    y.write_text("".join(f"{int(c)}\n" for c in labels))
    return e, f, y


# -- acceptance reporting ----------------------------------------------------
# test_acceptance.py appends (number, title, status, seconds, detail) here;
# the summary hook prints one line per criterion after the run.
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, seconds, detail in sorted(ACCEPTANCE):
        line = f"criterion {number:>2} {status:<7} {seconds:7.2f}s  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
