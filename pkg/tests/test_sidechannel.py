"""Physical fingerprints: signatures, classification, countermeasures."""

import dataclasses
import math

import pytest

from vtcamo.camouflage import apply_camouflage
from vtcamo.cell import CellFlavor, GateFunction, config_for
from vtcamo.device import DeviceParams, default_bias
from vtcamo.errors import (
    BiasClampWarning,
    InsertionError,
    InvalidParameterError,
    TemplateSetError,
)
from vtcamo.netlist import CamoKey, KeyEntry, check_equivalence, parse_bench
from vtcamo.sidechannel import (
    DEFAULT_TEMPERATURES,
    MAX_TEMPERATURE_K,
    MIN_TEMPERATURE_K,
    add_measurement_noise,
    balance_flavors,
    cell_signature,
    classify_function,
    measure_signature,
    template_signatures,
    thermal_compensated_bias,
)

NOISE_TRIALS = 12
LOW_SIGMA = 0.02
HIGH_SIGMA = 5.0
SPREAD_TEMPS = (200.0, 250.0, 300.0, 350.0, 400.0)
AGG_REL_TOL = 1e-12

UNBALANCED = """\
INPUT(a)
INPUT(b)
OUTPUT(y)
g1 = NAND(a, b)
g2 = NAND(a, g1)
g3 = NAND(b, g1)
y = NOR(g2, g3)
"""

SWAPPED = """\
INPUT(a)
INPUT(b)
OUTPUT(y)
g1 = NOR(a, b)
g2 = NOR(a, g1)
g3 = NOR(b, g1)
y = NAND(g2, g3)
"""


def _accuracy(flavor, sigma, trials=NOISE_TRIALS):
    templates = template_signatures(flavor)
    hits = total = 0
    for func in sorted(flavor.function_set, key=lambda f: f.value):
        clean = cell_signature(config_for(func, flavor), gate_id=func.value)
        for seed in range(trials):
            noisy = add_measurement_noise(clean, sigma, seed=seed)
            total += 1
            if classify_function(noisy, templates).function is func:
                hits += 1
    return hits / total


class TestSignatures:
    def test_grid_covers_vectors_and_temperatures(self):
        sig = cell_signature(config_for(GateFunction.NAND, CellFlavor.CAMO8))
        assert len(sig.observations) == 4 * len(DEFAULT_TEMPERATURES)
        keys = {(o.vector, o.temperature) for o in sig.observations}
        assert len(keys) == len(sig.observations)
        assert all(o.leakage_a > 0 and o.delay_s >= 0
                   for o in sig.observations)

    @pytest.mark.parametrize("temps", [
        (150.0, 300.0),
        (300.0, 450.0),
        (),
    ])
    def test_temperature_window_is_enforced(self, temps):
        config = config_for(GateFunction.NAND, CellFlavor.CAMO8)
        with pytest.raises(InvalidParameterError):
            cell_signature(config, temperatures=temps)

    def test_window_bounds_are_inclusive(self):
        config = config_for(GateFunction.NAND, CellFlavor.CAMO8)
        sig = cell_signature(
            config, temperatures=(MIN_TEMPERATURE_K, MAX_TEMPERATURE_K))
        assert len(sig.observations) == 8


class TestClassification:
    @pytest.mark.parametrize("flavor", list(CellFlavor))
    def test_noiseless_recovery_is_perfect(self, flavor):
        templates = template_signatures(flavor)
        for func in flavor.function_set:
            sig = cell_signature(config_for(func, flavor),
                                 gate_id=func.value)
            result = classify_function(sig, templates)
            assert result.function is func
            assert 0.0 < result.confidence <= 1.0
            assert set(result.distances) == flavor.function_set

    def test_accuracy_degrades_with_noise(self):
        low = _accuracy(CellFlavor.CAMO8, LOW_SIGMA)
        high = _accuracy(CellFlavor.CAMO8, HIGH_SIGMA)
        assert low >= 0.9
        assert high <= low - 0.4

    def test_per_gate_measurement_matches_the_key(self, c17):
        locked, key = apply_camouflage(c17, ["10", "16", "22"],
                                       CellFlavor.CAMO8)
        templates = template_signatures(CellFlavor.CAMO8)
        sigs = measure_signature(locked, key, mode="per_gate")
        assert set(sigs) == {"10", "16", "22"}
        for gid, sig in sigs.items():
            assert classify_function(sig, templates).function is \
                key.entries[gid].function

    def test_template_set_is_validated(self):
        sig = cell_signature(config_for(GateFunction.NAND, CellFlavor.CAMO8))
        templates = template_signatures(CellFlavor.CAMO8)
        with pytest.raises(TemplateSetError):
            classify_function(sig, {})
        with pytest.raises(TemplateSetError):
            classify_function(
                sig, {GateFunction.NAND: templates[GateFunction.NAND]})
        shifted = template_signatures(CellFlavor.CAMO8,
                                      temperatures=(260.0, 310.0))
        with pytest.raises(TemplateSetError):
            classify_function(sig, shifted)

    def test_non_finite_template_rejected(self):
        sig = cell_signature(config_for(GateFunction.NAND, CellFlavor.CAMO8))
        templates = dict(template_signatures(CellFlavor.CAMO8))
        broken = templates[GateFunction.OR]
        first = dataclasses.replace(broken.observations[0],
                                    leakage_a=math.inf)
        templates[GateFunction.OR] = dataclasses.replace(
            broken, observations=(first,) + broken.observations[1:])
        with pytest.raises(TemplateSetError, match="finite"):
            classify_function(sig, templates)


class TestNoise:
    def test_same_seed_reproduces(self):
        sig = cell_signature(config_for(GateFunction.XOR, CellFlavor.CAMO8))
        a = add_measurement_noise(sig, 0.3, seed=7)
        b = add_measurement_noise(sig, 0.3, seed=7)
        c = add_measurement_noise(sig, 0.3, seed=8)
        assert a == b
        assert a != c

    def test_zero_sigma_is_identity(self):
        sig = cell_signature(config_for(GateFunction.XOR, CellFlavor.CAMO8))
        assert add_measurement_noise(sig, 0.0, seed=1) == sig

    @pytest.mark.parametrize("sigma", [-0.1, math.inf, math.nan])
    def test_bad_sigma_rejected(self, sigma):
        sig = cell_signature(config_for(GateFunction.XOR, CellFlavor.CAMO8))
        with pytest.raises(InvalidParameterError):
            add_measurement_noise(sig, sigma)


class TestThermalCompensation:
    def test_overdrive_is_held_constant(self, params):
        base = default_bias(params)
        for t in SPREAD_TEMPS:
            bias = thermal_compensated_bias(t, params)
            drift = params.kvt * (t - params.t_ref)
            assert abs((bias.vg_n + drift) - base.vg_n) < 1e-12
            assert abs((bias.vg_p - drift) - base.vg_p) < 1e-12

    def test_clamping_warns(self):
        params = DeviceParams(kvt=6e-3)
        with pytest.warns(BiasClampWarning):
            bias = thermal_compensated_bias(400.0, params)
        assert 0.0 <= bias.vg_n <= params.vdd
        assert 0.0 <= bias.vg_p <= params.vdd

    def test_leakage_spread_shrinks(self):
        config = config_for(GateFunction.NAND, CellFlavor.CAMO8)
        fixed = cell_signature(config, temperatures=SPREAD_TEMPS,
                               bias_policy="fixed")
        comp = cell_signature(config, temperatures=SPREAD_TEMPS,
                              bias_policy="thermal_compensated")

        def worst_spread(sig):
            spread = 0.0
            for vec in {o.vector for o in sig.observations}:
                leaks = [o.leakage_a for o in sig.observations
                         if o.vector == vec]
                spread = max(spread, (max(leaks) - min(leaks)) / min(leaks))
            return spread

        assert worst_spread(fixed) >= 5.0 * worst_spread(comp)

    def test_unknown_policy_rejected(self):
        config = config_for(GateFunction.NAND, CellFlavor.CAMO8)
        with pytest.raises(InvalidParameterError):
            cell_signature(config, bias_policy="adaptive")


class TestAggregate:
    def test_aggregate_sums_leakage_and_averages_delay(self, c17):
        locked, key = apply_camouflage(c17, ["10", "16"], CellFlavor.CAMO8)
        per_gate = measure_signature(locked, key, mode="per_gate")
        agg = measure_signature(locked, key, mode="aggregate_only")
        assert set(agg) == {"aggregate"}
        sigs = list(per_gate.values())
        for i, obs in enumerate(agg["aggregate"].observations):
            points = [s.observations[i] for s in sigs]
            assert obs.leakage_a == pytest.approx(
                sum(p.leakage_a for p in points), rel=AGG_REL_TOL)
            assert obs.delay_s == pytest.approx(
                sum(p.delay_s for p in points) / len(points),
                rel=AGG_REL_TOL)

    def test_unknown_mode_rejected(self, c17):
        locked, key = apply_camouflage(c17, ["10"], CellFlavor.CAMO8)
        with pytest.raises(InvalidParameterError):
            measure_signature(locked, key, mode="per_chip")

    def test_missing_key_entry_rejected(self, c17):
        locked, key = apply_camouflage(c17, ["10", "16"], CellFlavor.CAMO8)
        partial = CamoKey({"10": key.entries["10"]})
        with pytest.raises(InvalidParameterError):
            measure_signature(locked, partial)


class TestBalancing:
    def test_counts_equalize_with_sink_dummies(self):
        net = parse_bench(UNBALANCED)
        locked, key = apply_camouflage(net, ["g1", "g2", "g3", "y"],
                                       CellFlavor.CMOS3A)
        balanced, new_key, report = balance_flavors(locked, key)
        assert report.counts_before == {GateFunction.NAND: 3,
                                        GateFunction.NOR: 1,
                                        GateFunction.XOR: 0}
        assert report.counts_after == {GateFunction.NAND: 3,
                                       GateFunction.NOR: 3,
                                       GateFunction.XOR: 3}
        added_funcs = sorted(f.value for f in report.added.values())
        assert added_funcs == ["NOR", "NOR", "XOR", "XOR", "XOR"]
        assert set(report.added) == {f"bal{i}" for i in range(5)}
        verdict = check_equivalence(locked, balanced, key, new_key)
        assert verdict.equivalent

    def test_dummy_outputs_drive_nothing(self):
        net = parse_bench(UNBALANCED)
        locked, key = apply_camouflage(net, ["g1", "g2", "g3", "y"],
                                       CellFlavor.CMOS3A)
        balanced, _, report = balance_flavors(locked, key)
        fanins = {f for g in balanced.gates for f in g.fanins}
        assert not (set(report.added) & fanins)
        assert not (set(report.added) & set(balanced.outputs))

    def test_name_collisions_are_skipped(self):
        text = UNBALANCED + "OUTPUT(bal1)\nbal1 = AND(a, b)\n"
        net = parse_bench(text)
        locked, key = apply_camouflage(net, ["g1", "g2", "g3", "y"],
                                       CellFlavor.CMOS3A)
        _, _, report = balance_flavors(locked, key)
        assert "bal1" not in report.added
        assert len(report.added) == 5

    def test_plain_netlist_rejected(self, c17):
        with pytest.raises(InsertionError):
            balance_flavors(c17, CamoKey({}))

    def test_aggregate_hides_the_real_mix_once_balanced(self):
        readings = []
        for text in (UNBALANCED, SWAPPED):
            net = parse_bench(text)
            locked, key = apply_camouflage(net, ["g1", "g2", "g3", "y"],
                                           CellFlavor.CMOS3A)
            balanced, new_key, _ = balance_flavors(locked, key)
            agg = measure_signature(balanced, new_key,
                                    mode="aggregate_only")["aggregate"]
            readings.append(agg)
        first, second = readings
        for a, b in zip(first.observations, second.observations):
            assert a.leakage_a == pytest.approx(b.leakage_a, rel=AGG_REL_TOL)
            assert a.delay_s == pytest.approx(b.delay_s, rel=AGG_REL_TOL)


class TestBalancedC8:
    def test_inverter_dummies_carry_a_decoy(self, c17):
        locked, key = apply_camouflage(c17, ["10", "16"], CellFlavor.CAMO8)
        balanced, new_key, report = balance_flavors(locked, key)
        inv_like = [n for n, f in report.added.items()
                    if f in (GateFunction.INV, GateFunction.BUF)]
        assert inv_like
        for name in inv_like:
            assert new_key.entries[name].decoy_net is not None
        verdict = check_equivalence(locked, balanced, key, new_key)
        assert verdict.equivalent
