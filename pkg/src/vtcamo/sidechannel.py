"""Side-channel analysis of programmed cells and countermeasures.

The programming of a cell is invisible in a layout image, but it is not
invisible in physics: each function leaves a distinct leakage and delay
fingerprint across local input vectors and operating temperatures. This
module builds those fingerprints (signatures), matches an unknown cell
against per-function templates, and implements two countermeasures:
inserting sink-terminated dummy cells until every function of a flavor
appears equally often (so chip-level aggregate measurements carry no
information about the mix), and shifting the pass-switch bias rails with
temperature so the switch overdrive, and with it the leakage spread a
thermal attacker relies on, stays put.
"""

from __future__ import annotations

import math
import random
import warnings
from dataclasses import dataclass

from .cell import CamoConfig, CellFlavor, GateFunction, config_for
from .device import (
    BiasPoint,
    DeviceParams,
    default_bias,
    gate_delay_estimate,
    gate_leakage,
)
from .errors import (
    BiasClampWarning,
    InsertionError,
    InvalidParameterError,
    TemplateSetError,
)
from .netlist import CamoKey, Gate, KeyEntry, Netlist

#: Operating range the measurement fixtures support.
MIN_TEMPERATURE_K = 200.0
MAX_TEMPERATURE_K = 400.0

DEFAULT_TEMPERATURES = (250.0, 300.0, 350.0)

_LOCAL_VECTORS = ((0, 0), (0, 1), (1, 0), (1, 1))

#: Floor applied before taking logs of measured quantities.
_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class Observation:
    """One measurement point: a local input vector at one temperature."""

    vector: tuple[int, int]
    temperature: float
    leakage_a: float
    delay_s: float


@dataclass(frozen=True)
class Signature:
    """Ordered measurement set characterizing one cell (or a whole chip)."""

    gate_id: str
    observations: tuple[Observation, ...]

    def grid(self) -> tuple[tuple[tuple[int, int], float], ...]:
        """The (vector, temperature) points this signature covers."""
        return tuple((o.vector, o.temperature) for o in self.observations)


def _check_temperatures(temperatures) -> tuple[float, ...]:
    temps = tuple(float(t) for t in temperatures)
    if not temps:
        raise InvalidParameterError("at least one temperature is required")
    for t in temps:
        if not MIN_TEMPERATURE_K <= t <= MAX_TEMPERATURE_K:
            raise InvalidParameterError(
                f"temperature {t} K outside the supported range "
                f"[{MIN_TEMPERATURE_K}, {MAX_TEMPERATURE_K}]")
    return temps


def thermal_compensated_bias(t: float, params: DeviceParams) -> BiasPoint:
    """Bias rails tracking the threshold drift so overdrive is constant.

    The N rail follows the falling threshold down, the P rail mirrors it
    up. Values are clamped to the supply range; clamping is reported as a
    BiasClampWarning because a clamped rail no longer compensates.
    """
    base = default_bias(params)
    shift = params.kvt * (t - params.t_ref)
    vg_n = base.vg_n - shift
    vg_p = base.vg_p + shift
    clamped_n = min(max(vg_n, 0.0), params.vdd)
    clamped_p = min(max(vg_p, 0.0), params.vdd)
    if clamped_n != vg_n or clamped_p != vg_p:
        warnings.warn(
            f"compensated bias clamped to the supply range at {t} K",
            BiasClampWarning)
    return BiasPoint(clamped_n, clamped_p)


def _bias_for(policy: str, t: float, params: DeviceParams) -> BiasPoint:
    if policy == "fixed":
        return default_bias(params)
    if policy == "thermal_compensated":
        return thermal_compensated_bias(t, params)
    raise InvalidParameterError(f"unknown bias policy {policy!r}")


def cell_signature(config: CamoConfig, temperatures=DEFAULT_TEMPERATURES,
                   params: DeviceParams | None = None,
                   bias_policy: str = "fixed",
                   gate_id: str = "cell") -> Signature:
    """Leakage/delay fingerprint of one programmed cell.

    Measures every local input vector at every temperature under the
    given bias policy.
    """
    params = params or DeviceParams()
    temps = _check_temperatures(temperatures)
    obs = []
    for vec in _LOCAL_VECTORS:
        for t in temps:
            bias = _bias_for(bias_policy, t, params)
            leak = gate_leakage(config, vec, t, bias, params)
            delay = gate_delay_estimate(config, vec, bias, params.vdd, t,
                                        params)
            obs.append(Observation(vec, t, leak, delay))
    return Signature(gate_id, tuple(obs))


def template_signatures(flavor: CellFlavor,
                        temperatures=DEFAULT_TEMPERATURES,
                        params: DeviceParams | None = None,
                        bias_policy: str = "fixed",
                        ) -> dict[GateFunction, Signature]:
    """Reference signature of every function a flavor can express."""
    return {
        func: cell_signature(config_for(func, flavor), temperatures, params,
                             bias_policy, gate_id=func.value)
        for func in sorted(flavor.function_set, key=lambda f: f.value)
    }


def measure_signature(net: Netlist, key: CamoKey,
                      mode: str = "per_gate",
                      temperatures=DEFAULT_TEMPERATURES,
                      params: DeviceParams | None = None,
                      bias_policy: str = "fixed") -> dict[str, Signature]:
    """Signatures of a locked netlist's camouflaged cells.

    ``per_gate`` models an attacker who can probe each cell in isolation
    and returns one signature per camouflaged gate. ``aggregate_only``
    models chip-level instruments: leakage sums over all cells and delay
    averages, returned as a single signature keyed "aggregate".
    """
    params = params or DeviceParams()
    temps = _check_temperatures(temperatures)
    camo = net.camo_gates()
    per_gate = {}
    for g in camo:
        entry = key.entries.get(g.gate_id)
        if entry is None:
            raise InvalidParameterError(
                f"key has no entry for camouflaged gate {g.gate_id!r}")
        config = config_for(entry.function, g.flavor)
        per_gate[g.gate_id] = cell_signature(config, temps, params,
                                             bias_policy, gate_id=g.gate_id)
    if mode == "per_gate":
        return per_gate
    if mode != "aggregate_only":
        raise InvalidParameterError(f"unknown measurement mode {mode!r}")
    if not per_gate:
        raise InvalidParameterError("netlist has no camouflaged gates")
    sigs = list(per_gate.values())
    obs = []
    for i in range(len(sigs[0].observations)):
        points = [s.observations[i] for s in sigs]
        obs.append(Observation(
            points[0].vector, points[0].temperature,
            sum(p.leakage_a for p in points),
            sum(p.delay_s for p in points) / len(points)))
    return {"aggregate": Signature("aggregate", tuple(obs))}


def add_measurement_noise(signature: Signature, sigma: float,
                          seed: int = 0) -> Signature:
    """Apply lognormal measurement noise to leakage and delay.

    ``sigma`` is the standard deviation of additive Gaussian noise in the
    log domain, i.e. each value is multiplied by exp(N(0, sigma)).
    """
    if sigma < 0 or not math.isfinite(sigma):
        raise InvalidParameterError(f"noise sigma must be finite and >= 0: "
                                    f"{sigma}")
    rng = random.Random(seed)
    obs = tuple(
        Observation(o.vector, o.temperature,
                    o.leakage_a * math.exp(rng.gauss(0.0, sigma)),
                    o.delay_s * math.exp(rng.gauss(0.0, sigma)))
        for o in signature.observations)
    return Signature(signature.gate_id, obs)


def _features(signature: Signature) -> list[float]:
    """Log-leakage and log-delay per point, plus thermal slopes per vector."""
    feats = []
    by_vector: dict[tuple[int, int], list[Observation]] = {}
    for o in signature.observations:
        feats.append(math.log10(max(o.leakage_a, _LOG_FLOOR)))
        feats.append(math.log10(max(o.delay_s, _LOG_FLOOR)))
        by_vector.setdefault(o.vector, []).append(o)
    for vec in sorted(by_vector):
        pts = sorted(by_vector[vec], key=lambda o: o.temperature)
        lo, hi = pts[0], pts[-1]
        feats.append(math.log10(max(hi.leakage_a, _LOG_FLOOR))
                     - math.log10(max(lo.leakage_a, _LOG_FLOOR)))
    return feats


@dataclass(frozen=True)
class Classification:
    """Best-matching function with a softmax-margin confidence."""

    function: GateFunction
    confidence: float
    distances: dict[GateFunction, float]


def classify_function(signature: Signature,
                      templates: dict[GateFunction, Signature],
                      ) -> Classification:
    """Match a measured signature against per-function templates.

    Features (log leakage, log delay, thermal leakage slope) are z-scored
    across the template set; the winner is the nearest template in L2
    distance. Confidence is the softmax probability margin between the
    best and second-best match, so 0 means a coin flip.
    """
    if len(templates) < 2:
        raise TemplateSetError("need at least two templates to classify")
    grids = {f: s.grid() for f, s in templates.items()}
    reference_grid = next(iter(grids.values()))
    if any(g != reference_grid for g in grids.values()):
        raise TemplateSetError("templates cover different measurement grids")
    if signature.grid() != reference_grid:
        raise TemplateSetError(
            "signature measurement grid does not match the templates")
    order = sorted(templates, key=lambda f: f.value)
    vectors = {f: _features(templates[f]) for f in order}
    probe = _features(signature)
    dims = len(probe)
    if any(not math.isfinite(x) for v in vectors.values() for x in v):
        raise TemplateSetError("template features are not finite")
    means = [sum(vectors[f][i] for f in order) / len(order)
             for i in range(dims)]
    stds = []
    for i in range(dims):
        var = sum((vectors[f][i] - means[i]) ** 2 for f in order) / len(order)
        stds.append(math.sqrt(var))
    distances = {}
    for f in order:
        d = 0.0
        for i in range(dims):
            if stds[i] == 0.0:
                continue
            d += ((vectors[f][i] - means[i]) / stds[i]
                  - (probe[i] - means[i]) / stds[i]) ** 2
        distances[f] = math.sqrt(d)
    ranked = sorted(order, key=lambda f: (distances[f], f.value))
    best, second = ranked[0], ranked[1]
    peak = max(-distances[f] for f in order)
    weights = {f: math.exp(-distances[f] - peak) for f in order}
    total = sum(weights.values())
    confidence = (weights[best] - weights[second]) / total
    return Classification(best, confidence, distances)


@dataclass(frozen=True)
class BalanceReport:
    """What balance_flavors inserted and the resulting function counts."""

    added: dict[str, GateFunction]
    counts_before: dict[GateFunction, int]
    counts_after: dict[GateFunction, int]


def balance_flavors(net: Netlist, key: CamoKey,
                    ) -> tuple[Netlist, CamoKey, BalanceReport]:
    """Insert sink-terminated dummy cells until every function count ties.

    Within each flavor present in the netlist, every function of that
    flavor's set is brought up to the current maximum count by adding
    camouflaged dummy gates whose outputs drive nothing, so the circuit
    function is untouched but aggregate leakage no longer depends on the
    real mix. Dummies tap the first available nets in definition order
    and are named bal0, bal1, ... skipping names already taken.
    """
    camo = net.camo_gates()
    if not camo:
        raise InsertionError("netlist has no camouflaged gates to balance")
    taps = list(net.inputs) + [g.gate_id for g in net.gates]
    if not taps:
        raise InsertionError("netlist has no nets to tap for dummy inputs")
    tap_a = taps[0]
    tap_b = taps[1] if len(taps) > 1 else taps[0]
    flavors = sorted({g.flavor for g in camo}, key=lambda f: f.value)
    counts_before: dict[GateFunction, int] = {}
    for flavor in flavors:
        for func in flavor.function_set:
            counts_before.setdefault(func, 0)
    for g in camo:
        counts_before[key.entries[g.gate_id].function] += 1
    used = {g.gate_id for g in net.gates} | set(net.inputs)
    next_index = 0

    def fresh_name() -> str:
        nonlocal next_index
        while f"bal{next_index}" in used:
            next_index += 1
        name = f"bal{next_index}"
        used.add(name)
        return name

    new_gates = list(net.gates)
    new_entries = dict(key.entries)
    added: dict[str, GateFunction] = {}
    counts_after = dict(counts_before)
    for flavor in flavors:
        funcs = sorted(flavor.function_set, key=lambda f: f.value)
        target = max(counts_after[f] for f in funcs)
        for func in funcs:
            while counts_after[func] < target:
                name = fresh_name()
                decoy = None
                if func in (GateFunction.INV, GateFunction.BUF):
                    decoy = tap_a
                new_gates.append(Gate(name, (tap_a, tap_b), flavor=flavor))
                new_entries[name] = KeyEntry(func, decoy)
                added[name] = func
                counts_after[func] += 1
    balanced = Netlist(net.inputs, net.outputs, tuple(new_gates),
                       net.pseudo_inputs, net.pseudo_outputs)
    return (balanced, CamoKey(new_entries),
            BalanceReport(added, counts_before, counts_after))
