import json

import pytest

from ghicast.armax import ArmaxOrders
from ghicast.config import (
    STREAM_NARNN,
    STREAM_SYNTHETIC,
    ArmaxConfig,
    RunConfig,
    config_from_dict,
    load_config,
    save_config,
)
from ghicast.errors import ConfigError


def test_defaults():
    c = RunConfig()
    assert c.training_days == 30 and c.detrend_degree == 4
    assert c.armax.max_order == 6 and c.armax.selection == "error_scan"
    assert c.site.site_id == "725650"


def test_round_trip(tmp_path):
    c = config_from_dict({"seed": 5, "armax": {"fixed_orders": [2, 2, 1]},
                          "csv": {"ghi_col": "GHI", "hour_ending": True}})
    p = tmp_path / "c.json"
    save_config(c, p)
    back = load_config(p)
    assert back == c
    assert back.armax.fixed_orders == ArmaxOrders(2, 2, 1)
    assert json.loads(p.read_text())["schema"] == "ghicast.config/1"


@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"narnn": {"lags": 3}},
    {"armax": {"max_order": 0}},
    {"armax": {"selection": "bic"}},
    {"armax": {"train_days": 1}},
    {"training_days": 5, "armax": {"train_days": 6}},
    {"schema": "ghicast.config/99"},
    {"site": {"latitude": 1.0}},
])
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        config_from_dict(raw)


def test_malformed_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_component_seeds_are_distinct_and_stable():
    c = RunConfig(seed=42)
    assert c.component_seed(STREAM_NARNN) == RunConfig(seed=42).component_seed(STREAM_NARNN)
    assert c.component_seed(STREAM_NARNN) != c.component_seed(STREAM_SYNTHETIC)
    assert c.component_seed(STREAM_NARNN) != RunConfig(seed=43).component_seed(STREAM_NARNN)
    assert c.narnn_config().seed == c.component_seed(STREAM_NARNN)


def test_armax_config_defaults():
    assert ArmaxConfig().train_days == 6
