import pytest

from mforge.config import ConfigError, SystemConfig, parse_interval, parse_number
from mforge.expr import parse

TEXT = """
# oscillator with a custom domain
[system]
name = oscillator1

[params]
k = 0.5    # softer
a = 2

[domain]
x = [-1.5, 1.5]

[task]
mu = "1/(1 + k*x^2)"
"""


def test_parse_sections():
    cfg = SystemConfig.from_text(TEXT)
    assert cfg.name == "oscillator1" and cfg.F is None
    assert cfg.params == {"k": 0.5, "a": 2.0}
    assert cfg.domain == {"x": (-1.5, 1.5)}
    assert cfg.task == {"mu": "1/(1 + k*x^2)"}


def test_catalog_system_with_domain_override():
    s = SystemConfig.from_text(TEXT).sode()
    assert s.params == {"k": 0.5, "a": 2.0}
    assert s.domain["x"] == (-1.5, 1.5)
    assert s.domain["v"][1] == pytest.approx(0.99 * 2 / 0.5 ** 0.5)


def test_custom_force():
    cfg = SystemConfig.from_text('[system]\nname = duffing\nF = "-x - b*x^3"\n[params]\nb = 0.1\n')
    s = cfg.sode()
    assert s.F == parse("-x - b*x^3")
    assert s.domain["x"] == (-1.0, 1.0)


def test_keys_are_case_sensitive():
    cfg = SystemConfig.from_text('[system]\nF = "-x"\nname = lin\n[task]\nI = "x^2 + v^2"\n')
    assert "I" in cfg.task and cfg.F == "-x"


def test_override_prefers_flags():
    cfg = SystemConfig.from_text(TEXT).override(params={"k": 1.0}, task={"mu": None, "I": "x"})
    assert cfg.params == {"k": 1.0, "a": 2.0}
    assert cfg.task == {"mu": "1/(1 + k*x^2)", "I": "x"}


@pytest.mark.parametrize("text", [
    "[system]\nname = pendulum\n",
    "[system]\nF = \"x +\"\n",
    "[params]\nk = one\n",
    "[domain]\nx = [1, 0]\n",
    "[domain]\nx = 3\n",
    "[other]\nq = 1\n",
    "no section header\n",
    "[system]\nname = oscillator2\n[params]\nk = 0\n",
    "[system]\nname = harmonic\n[params]\nk = 1\n",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        SystemConfig.from_text(text).sode()


def test_intervals_and_numbers():
    assert parse_interval("[-1, 2.5]") == (-1.0, 2.5)
    assert parse_interval("0,1") == (0.0, 1.0)
    assert parse_number("k", '"3"') == 3.0


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        SystemConfig.load(tmp_path / "none.ini")
