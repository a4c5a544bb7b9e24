"""Shared fixtures and netlist generators for the test suite."""

from __future__ import annotations

import random
import re
from importlib.resources import files

import pytest

from vtcamo.cell import GateFunction
from vtcamo.device import DeviceParams
from vtcamo.netlist import Gate, Netlist, parse_bench

_TWO_INPUT = (GateFunction.NAND, GateFunction.NOR, GateFunction.AND,
              GateFunction.OR, GateFunction.XOR, GateFunction.XNOR)
_ONE_INPUT = (GateFunction.NOT, GateFunction.BUFF)


def bench_text(name: str) -> str:
    return (files("vtcamo") / "benches" / name).read_text()


def random_netlist(n_inputs: int, n_gates: int, seed: int,
                   p_single: float = 0.15) -> Netlist:
    """Seeded random DAG of plain gates; sinks become the outputs."""
    rng = random.Random(seed)
    inputs = tuple(f"i{k}" for k in range(n_inputs))
    nets = list(inputs)
    gates = []
    for k in range(n_gates):
        name = f"g{k:03d}"
        if rng.random() < p_single:
            func = rng.choice(_ONE_INPUT)
            fanins = (rng.choice(nets),)
        else:
            func = rng.choice(_TWO_INPUT)
            fanins = (rng.choice(nets), rng.choice(nets))
        gates.append(Gate(name, fanins, func=func))
        nets.append(name)
    driven = {f for g in gates for f in g.fanins}
    sinks = tuple(g.gate_id for g in gates if g.gate_id not in driven)
    outputs = sinks if sinks else (gates[-1].gate_id,)
    return Netlist(inputs, outputs, tuple(gates), (), ())


@pytest.fixture
def params() -> DeviceParams:
    return DeviceParams()


@pytest.fixture
def c17() -> Netlist:
    return parse_bench(bench_text("c17.bench"))


@pytest.fixture
def synth_mix() -> Netlist:
    return parse_bench(bench_text("synth_mix.bench"))


@pytest.fixture
def synth_wide() -> Netlist:
    return parse_bench(bench_text("synth_wide.bench"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion."""
    results = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", nodeid)
            if m:
                num = int(m.group(1))
                results[num] = results.get(num, True) and outcome == "passed"
    if not results:
        return
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        CRITERIA = {}
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(results):
        verdict = "PASS" if results[num] else "FAIL"
        label = CRITERIA.get(num, "")
        terminalreporter.write_line(f"criterion {num:02d}: {verdict}  {label}")
