import numpy as np
import pytest

from visrank import EmbeddingSpace, HypothesisList, VisualContext, build_ulm
from visrank.relatedness import CooccurrenceTable

ACCEPTANCE_RESULTS: list[tuple[str, bool, float, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, seconds, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {name} ({seconds:.2f}s){' - ' + detail if detail else ''}")


@pytest.fixture
def parking_models():
    """Small models reproducing the pay/bay/pby over 'parking' scenario."""
    ulm = build_ulm({"pay": 500, "bay": 400, "the": 5000, "street": 300, "exit": 200, "parking": 100})
    swe = EmbeddingSpace({
        "parking": [1.0, 0.0, 0.0],
        "pay": [0.9, 0.3, 0.1],
        "bay": [0.1, 0.9, 0.3],
        "street": [0.6, 0.1, 0.7],
        "exit": [0.1, 0.2, 0.9],
    })
    twe = EmbeddingSpace({
        "parking": [0.0, 1.0],
        "pay": [0.2, 0.95],
        "bay": [0.9, -0.1],
        "street": [1.0, 0.0],
    })
    tdp = CooccurrenceTable({("pay", "parking"): 4, ("exit", "street"): 6},
                            {"parking": 10, "street": 8})
    return ulm, swe, twe, tdp


@pytest.fixture
def parking_record():
    hyps = HypothesisList("im1", (("bay", 0.45), ("pay", 0.40), ("pby", 0.15)), gold="pay")
    ctx = VisualContext("im1", (("parking", 0.82), ("street", 0.1)))
    return hyps, ctx


def random_space(rng: np.random.Generator, words, dim=8) -> EmbeddingSpace:
    return EmbeddingSpace({w: rng.normal(size=dim) for w in words})
