import json

import pytest

from scn.config import config_from_dict, default_config_text, load_config


@pytest.fixture(scope="session")
def default_doc():
    return json.loads(default_config_text())


@pytest.fixture(scope="session")
def cfg():
    return load_config()


@pytest.fixture
def make_cfg(default_doc):
    """Build a config from the bundled document with section-level overrides."""
    def build(**sections):
        doc = json.loads(json.dumps(default_doc))
        for name, changes in sections.items():
            doc[name] = {**doc.get(name, {}), **changes}
        return config_from_dict(doc)
    return build




def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
