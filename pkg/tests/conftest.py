import numpy as np
import pytest

from hyperrank.spaces import DiagonalEmbedding, flat, horospherical_model, perturbed_model, product, pullback_diagonal, stretch


def h2h2_embedding():
    return DiagonalEmbedding([horospherical_model(2), horospherical_model(2)])


def metric_corpus():
    """The seven corpus metrics, keyed by a short name."""
    emb = h2h2_embedding()
    pb = pullback_diagonal(emb)
    return {
        "flat": flat(3),
        "H2": horospherical_model(2),
        "H3a2": horospherical_model(3, a=2.0),
        "perturbed": perturbed_model(3),
        "product": product([horospherical_model(2), horospherical_model(2)]),
        "pullback": pb,
        "stretched": stretch(pb, 3.0),
    }


def horospherical_corpus():
    c = metric_corpus()
    return {k: c[k] for k in ("H2", "H3a2", "perturbed", "pullback", "stretched")}


@pytest.fixture(scope="session")
def corpus():
    return metric_corpus()


@pytest.fixture(scope="session")
def emb():
    return h2h2_embedding()


@pytest.fixture(scope="session")
def pullback(emb):
    return pullback_diagonal(emb)


def random_points(g, n, seed, shrink=1.0):
    rng = np.random.default_rng(seed)
    box = np.asarray(g.box, dtype=float)
    mid = box.mean(axis=1)
    half = 0.5 * (box[:, 1] - box[:, 0]) * shrink
    return mid - half + rng.random((n, g.dim)) * 2 * half
