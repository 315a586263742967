import datetime as dt
from pathlib import Path

import pytest

from earlysignal.georesolve import load_gazetteer, load_boundaries

DATA = Path(__file__).parent / "data"

# filled by test_acceptance, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def read_tsv(name):
    """Rows of a tab-separated fixture; lines starting with # are comments."""
    lines = (DATA / name).read_text(encoding="utf-8").splitlines()
    return [l.split("\t") for l in lines if l and not l.startswith("#")]


def grid_boundaries(gaz, path: Path, size=1.0):
    """Write square polygons for every sub-national region, laid out on a grid."""
    import json

    feats = []
    for i, code in enumerate(sorted(r.code for r in gaz.sub_regions())):
        x0, y0 = -20.0 + (i % 20) * size, 30.0 + (i // 20) * size
        ring = [[x0, y0], [x0 + size, y0], [x0 + size, y0 + size], [x0, y0 + size], [x0, y0]]
        feats.append({"type": "Feature", "properties": {"code": code, "name": gaz.regions[code].name,
                                                        "population": 1000 * (i + 1)},
                      "geometry": {"type": "Polygon", "coordinates": [ring]}})
    path.write_text(json.dumps({"type": "FeatureCollection", "features": feats}), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def gazetteer():
    return load_gazetteer()


@pytest.fixture(scope="session")
def grid_gazetteer(tmp_path_factory):
    gaz = load_gazetteer()
    load_boundaries(gaz, grid_boundaries(gaz, tmp_path_factory.mktemp("geo") / "grid.geojson"))
    return gaz


@pytest.fixture(scope="session")
def bundled_corpus(tmp_path_factory):
    """The bundled scenario written to disk once per session."""
    from earlysignal.synthgen import load_scenario, write_corpus

    spec, pipe = load_scenario()
    out = tmp_path_factory.mktemp("corpus")
    paths = write_corpus(spec, out, pipe)
    return spec, paths


@pytest.fixture(scope="session")
def bundled_run(bundled_corpus, tmp_path_factory):
    """One full pipeline run over the bundled corpus: (config, output dir, status)."""
    from earlysignal.config import load_config
    from earlysignal.pipeline import run_pipeline

    _, paths = bundled_corpus
    cfg = load_config(paths["config"])
    out = tmp_path_factory.mktemp("run")
    status = run_pipeline(cfg, out)
    return cfg, out, status


def d(s: str) -> dt.date:
    return dt.date.fromisoformat(s)
