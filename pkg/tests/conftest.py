import json

import numpy as np
import pytest

from fap.core import AspectLexicon, default_lexicon, lexicon_from_json
from fap.pipeline import SplitPlan, SynthConfig, make_split, synth_generate


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture
def write_lexicon(tmp_path):
    def _write(aspects, name="lex.json"):
        path = tmp_path / name
        path.write_text(json.dumps({"aspects": aspects}), encoding="utf-8")
        return path
    return _write


def small_lexicon(**sides) -> AspectLexicon:
    aspects = [{"id": i + 1, "name": k, "left": v[0], "right": v[1]}
               for i, (k, v) in enumerate(sides.items())]
    return lexicon_from_json({"aspects": aspects})


@pytest.fixture(scope="session")
def flip_data(lexicon):
    """Two nouns with mirrored polarity directions, standard split."""
    cfg = SynthConfig(dim=16, nouns=("dog", "cat"), images_per_cell=200, separation=6.0,
                      noun_flip=True, seed=11)
    data, report = synth_generate(cfg, lexicon)
    return make_split(data, SplitPlan(seed=0)), report


@pytest.fixture(scope="session")
def multi_aspect_data(lexicon):
    """Three nouns over two or three aspects with noun-dependent aspect sets."""
    cfg = SynthConfig(dim=8, nouns=("dog", "cat", "man"),
                      aspects={"dog": ("age", "evaluation", "activity"),
                               "cat": ("age", "happiness"), "man": ("evaluation", "age")},
                      images_per_cell=60, separation=4.0, noun_flip=False, seed=5)
    data, _ = synth_generate(cfg, lexicon)
    return make_split(data, SplitPlan(seed=1))


def rand_unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
