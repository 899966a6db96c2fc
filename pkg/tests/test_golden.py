from pathlib import Path

import pytest

from geosub.shock import baseline_model, sensitivity_sweep, sweep_csv
from geosub.validation import SWEEP_GRIDS, SWEEP_TIMES

GOLDEN = Path(__file__).parent / "golden"


@pytest.mark.parametrize("quantity", ["reliability", "failure_rate"])
@pytest.mark.parametrize("parameter", sorted(SWEEP_GRIDS))
def test_sweep_csv_is_byte_stable(parameter, quantity):
    rows = sensitivity_sweep(baseline_model(), parameter, SWEEP_GRIDS[parameter], SWEEP_TIMES, quantity=quantity)
    assert sweep_csv(rows) == (GOLDEN / f"sweep_{parameter}_{quantity}.csv").read_text()


def test_seeded_monte_carlo_sweep_is_byte_stable():
    rows = sensitivity_sweep(baseline_model(), "q", SWEEP_GRIDS["q"], (0.5, 1.0, 2.0, 4.0), mc_n=5000, seed=12345)
    assert sweep_csv(rows) == (GOLDEN / "sweep_q_reliability_mc.csv").read_text()
