"""Compact MOSFET model and cell-level electrical estimates.

The drain current uses a single smooth interpolation between the
subthreshold exponential and the square law (EKV-style squared-softplus
inversion charge):

    i0 = 2 * n * kprime * (W/L) * phi_t**2
    vp = (vgs - vt) / n
    F(x) = ln(1 + exp(x / (2 * phi_t)))**2
    I = i0 * (t/t_ref)**-1.5 * (F(vp) - F(vp - vds))

which is exactly 0 at vds = 0, strictly increasing in vgs and vds,
reduces to i0 * exp((vgs - vt)/(n phi_t)) deep in subthreshold, and to
kprime * (W/L) * (vgs - vt)**2 / (2 n) in strong-inversion saturation.
Temperature enters through phi_t = kT/q, a -1.5 power mobility factor,
and a linear threshold shift vt(t) = vt - kvt * (t - t_ref).

All P-channel quantities are handled in magnitude convention: a P device
with source at vdd and gate bias vg_p sees vgs_mag = vdd - vg_p and is
evaluated with the same N-like equations using kprime_p.

Cell-level estimates model every programmable switch as a transmission
gate whose two members are drive-balanced (the pull-up member is sized up
to cancel the kprime_p deficit), while functional core transistors keep
the raw kprime_p. Switch gate biases are absolute voltages that do not
track vdd, which is what makes cell delay worsen at both low and high
supply: a low rail starves the pull-up route members, a high rail raises
the output swing faster than the fixed-bias pull-down route can follow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

from . import cell as _cell
from .cell import CamoConfig, GateFunction, P_SIDE_SWITCHES, VT
from .errors import ContentionCollapseError, InvalidParameterError

KB = 1.380649e-23
QE = 1.602176634e-19

#: Floor for the effective drive current after contention (amperes).
CONTENTION_CLAMP_A = 1e-12

#: Leakage attenuation per extra OFF transistor stacked in series.
OFF_STACK_FACTOR = 5.0

#: Largest allowed half-width of the bias optimizer search box (volts).
MAX_SEARCH_WINDOW_V = 0.2


@dataclass(frozen=True)
class DeviceParams:
    """Technology and cell parameters.

    vtn0 / vtp0_mag are the nominal (NVT) thresholds; HVT and LVT devices
    sit at nominal +delta_hvt and nominal -delta_lvt respectively.
    kprime_* includes mobility and oxide capacitance (A/V^2) and is
    multiplied by w_over_l per device.
    """

    vdd: float = 1.0
    vtn0: float = 0.3
    vtp0_mag: float = 0.3
    delta_hvt: float = 0.35
    delta_lvt: float = 0.35
    subthreshold_slope_n: float = 1.3
    kprime_n: float = 2.0e-4
    kprime_p: float = 1.0e-4
    w_over_l: float = 2.0
    kvt: float = 1.2e-3
    t_ref: float = 300.0
    c_load: float = 1.0e-15

    def __post_init__(self):
        for name in ("vdd", "subthreshold_slope_n", "kprime_n", "kprime_p",
                     "w_over_l", "t_ref", "c_load"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise InvalidParameterError(f"{name} must be positive, got {v}")
        for name in ("vtn0", "vtp0_mag", "delta_hvt", "delta_lvt", "kvt"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise InvalidParameterError(
                    f"{name} must be non-negative, got {v}")


@dataclass(frozen=True)
class BiasPoint:
    """Shared gate biases of the N-side and P-side switch members."""

    vg_n: float
    vg_p: float


def default_bias(params: DeviceParams) -> BiasPoint:
    """Mid-threshold bias: vg_n = (vtn0 + vtp0_mag)/2, mirrored for P."""
    mid = 0.5 * (params.vtn0 + params.vtp0_mag)
    return BiasPoint(vg_n=mid, vg_p=params.vdd - mid)


def thermal_voltage(t: float) -> float:
    if not math.isfinite(t) or t <= 0:
        raise InvalidParameterError(f"temperature must be positive, got {t}")
    return KB * t / QE


def vt_at_temperature(vt_nominal: float, t: float, params: DeviceParams) -> float:
    """Linear threshold shift: vt(t) = vt_nominal - kvt * (t - t_ref)."""
    if not math.isfinite(t) or t <= 0:
        raise InvalidParameterError(f"temperature must be positive, got {t}")
    return vt_nominal - params.kvt * (t - params.t_ref)


def _softplus(x: float) -> float:
    # log(1 + e^x) without overflow for large |x|.
    if x > 40.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def drain_current(vgs: float, vds: float, vt: float, t: float,
                  params: DeviceParams, kind: str = "n") -> float:
    """Drain current of a single device (see module equations).

    ``vt`` is the already temperature-adjusted threshold; ``t`` only sets
    the thermal voltage and the mobility factor. ``kind`` picks kprime_n
    or kprime_p; both polarities use magnitude conventions.
    """
    for name, v in (("vgs", vgs), ("vds", vds), ("vt", vt)):
        if not math.isfinite(v):
            raise InvalidParameterError(f"{name} must be finite, got {v}")
    if vds < 0:
        raise InvalidParameterError(f"vds must be >= 0, got {vds}")
    if kind == "n":
        kprime = params.kprime_n
    elif kind == "p":
        kprime = params.kprime_p
    else:
        raise InvalidParameterError(f"device kind must be 'n' or 'p': {kind!r}")
    phit = thermal_voltage(t)
    n = params.subthreshold_slope_n
    i0 = 2.0 * n * kprime * params.w_over_l * phit * phit
    mob = (t / params.t_ref) ** -1.5
    vp = (vgs - vt) / n
    fa = _softplus(vp / (2.0 * phit)) ** 2
    fb = _softplus((vp - vds) / (2.0 * phit)) ** 2
    return i0 * mob * (fa - fb)


def switch_ratio(delta_hvt: float, delta_lvt: float, bias: BiasPoint,
                 t: float, params: DeviceParams) -> float:
    """ION/IOFF of the N switch member at the given gate bias.

    ION flows through an LVT device (vt = vtn0 - delta_lvt), IOFF through
    an HVT device (vt = vtn0 + delta_hvt), both at vds = vdd. If IOFF
    underflows to zero the ratio is reported as +inf rather than crashing.
    """
    if delta_hvt < 0 or delta_lvt < 0:
        raise InvalidParameterError("threshold offsets must be >= 0")
    vt_on = vt_at_temperature(params.vtn0 - delta_lvt, t, params)
    vt_off = vt_at_temperature(params.vtn0 + delta_hvt, t, params)
    i_on = drain_current(bias.vg_n, params.vdd, vt_on, t, params)
    i_off = drain_current(bias.vg_n, params.vdd, vt_off, t, params)
    if i_off == 0.0:
        return math.inf
    return i_on / i_off


# --- functional core leakage ----------------------------------------------
#
# Each base function has a CMOS core described as pull-up / pull-down paths
# of (device kind, gate signal) entries. Signals: a, b, their complements
# na/nb, and y1 for the internal node of the AND/OR output inverter stage.
# A non-conducting path leaks through its OFF devices; series OFF devices
# attenuate by OFF_STACK_FACTOR per extra device.

_CORES: dict[GateFunction, tuple[tuple, tuple]] = {
    GateFunction.NAND: (
        ((("p", "a"),), (("p", "b"),)),
        ((("n", "a"), ("n", "b")),),
    ),
    GateFunction.AND: (
        ((("p", "a"),), (("p", "b"),), (("p", "y1"),)),
        ((("n", "a"), ("n", "b")), (("n", "y1"),)),
    ),
    GateFunction.NOR: (
        ((("p", "a"), ("p", "b")),),
        ((("n", "a"),), (("n", "b"),)),
    ),
    GateFunction.OR: (
        ((("p", "a"), ("p", "b")), (("p", "y1"),)),
        ((("n", "a"),), (("n", "b"),), (("n", "y1"),)),
    ),
    GateFunction.XOR: (
        ((("p", "a"), ("p", "nb")), (("p", "na"), ("p", "b"))),
        ((("n", "a"), ("n", "b")), (("n", "na"), ("n", "nb"))),
    ),
    GateFunction.XNOR: (
        ((("p", "a"), ("p", "b")), (("p", "na"), ("p", "nb"))),
        ((("n", "a"), ("n", "nb")), (("n", "na"), ("n", "b"))),
    ),
}


def _core_signals(func: GateFunction, a: int, b: int) -> dict[str, int]:
    sig = {"a": a, "b": b, "na": 1 - a, "nb": 1 - b}
    if func is GateFunction.AND:
        sig["y1"] = 1 - (a & b)
    elif func is GateFunction.OR:
        sig["y1"] = 1 - (a | b)
    return sig


def _effective_inputs(func: GateFunction, inputs: tuple[int, int]) -> tuple[int, int]:
    if func in (GateFunction.INV, GateFunction.BUF):
        return (0, inputs[1])
    return inputs


def _core_off_leakage(func: GateFunction, inputs: tuple[int, int],
                      t: float, params: DeviceParams) -> float:
    """Subthreshold leakage of the function's OFF core transistors."""
    base = _cell.UNDERLYING.get(func, func)
    eff = _effective_inputs(func, inputs)
    sig = _core_signals(base, *eff)
    vt_n = vt_at_temperature(params.vtn0, t, params)
    vt_p = vt_at_temperature(params.vtp0_mag, t, params)
    i_off = {
        "n": drain_current(0.0, params.vdd, vt_n, t, params, kind="n"),
        "p": drain_current(0.0, params.vdd, vt_p, t, params, kind="p"),
    }
    total = 0.0
    for network in _CORES[base]:
        for path in network:
            off = [kind for kind, s in path
                   if (sig[s] == 0 if kind == "n" else sig[s] == 1)]
            if not off:
                continue  # path conducts; no subthreshold leakage
            weakest = min(i_off[kind] for kind in off)
            total += weakest / OFF_STACK_FACTOR ** (len(off) - 1)
    return total


# --- switch-level leakage and drive ---------------------------------------

def _switch_member_currents(bias: BiasPoint, vdd: float, vt_n: float,
                            vt_p: float, t: float,
                            params: DeviceParams) -> tuple[float, float]:
    """(N member, P member) currents of one transmission-gate switch.

    Switch members are drive-balanced: both use kprime_n (the P member is
    assumed width-compensated). N member sees vgs = vg_n, P member sees
    vgs_mag = vdd - vg_p, both at full-rail vds.
    """
    i_n = drain_current(bias.vg_n, vdd, vt_n, t, params, kind="n")
    i_p = drain_current(vdd - bias.vg_p, vdd, vt_p, t, params, kind="n")
    return i_n, i_p


def switch_off_leakage(config: CamoConfig, t: float, bias: BiasPoint,
                       params: DeviceParams) -> float:
    """Total subthreshold current of all HVT switches in the config.

    Works on any switch assignment (the all-LVT hypothetical gives 0.0);
    no decoding is attempted.
    """
    vt_n = vt_at_temperature(params.vtn0 + params.delta_hvt, t, params)
    vt_p = vt_at_temperature(params.vtp0_mag + params.delta_hvt, t, params)
    i_n, i_p = _switch_member_currents(bias, params.vdd, vt_n, vt_p, t, params)
    count = sum(1 for v in config.switch_vt if v is VT.HVT)
    return count * (i_n + i_p)


def gate_leakage(config: CamoConfig, inputs: tuple[int, int], t: float,
                 bias: BiasPoint, params: DeviceParams) -> float:
    """Leakage of one programmed cell at a local input vector.

    Sum of the OFF (HVT) switch subthreshold currents and the OFF
    functional-core transistor currents for the effective inputs. The tie
    network replaces input 1 with 0 for INV/BUF programming.
    """
    if len(inputs) != 2 or any(v not in (0, 1) for v in inputs):
        raise InvalidParameterError(f"cell inputs must be two bits: {inputs!r}")
    func = _cell.decode(config)
    return (switch_off_leakage(config, t, bias, params)
            + _core_off_leakage(func, tuple(inputs), t, params))


@dataclass(frozen=True)
class DelayDetail:
    """Breakdown of a delay estimate, used by sweeps and tests."""

    delay_s: float
    i_on: float
    i_contend: float
    clamped: bool
    edge: str


def _route_switches(config: CamoConfig) -> list[int]:
    return [i for i in range(1, 11) if config.switch_vt[i - 1] is VT.LVT]


def _edge_detail(config: CamoConfig, func: GateFunction,
                 contend_inputs: tuple[int, int] | None, edge: str,
                 bias: BiasPoint, vdd_actual: float, t: float,
                 params: DeviceParams, include_contention: bool) -> DelayDetail:
    vt_on_n = vt_at_temperature(params.vtn0 - params.delta_lvt, t, params)
    vt_on_p = vt_at_temperature(params.vtp0_mag - params.delta_lvt, t, params)
    vt_off_n = vt_at_temperature(params.vtn0 + params.delta_hvt, t, params)
    vt_off_p = vt_at_temperature(params.vtp0_mag + params.delta_hvt, t, params)
    on_n, on_p = _switch_member_currents(bias, vdd_actual, vt_on_n, vt_on_p,
                                         t, params)
    off_n, off_p = _switch_member_currents(bias, vdd_actual, vt_off_n,
                                           vt_off_p, t, params)
    route = _route_switches(config)
    n_hvt = sum(1 for i in range(1, 11)
                if config.switch_vt[i - 1] is VT.HVT)
    if edge == "rise":
        i_on = len(route) * on_p
        i_contend = n_hvt * off_n
    else:
        i_on = len(route) * on_n
        i_contend = n_hvt * off_p
    if include_contention and contend_inputs is not None:
        i_contend += _core_off_leakage(func, contend_inputs, t, params)
    if not include_contention:
        i_contend = 0.0
    i_eff = i_on - i_contend
    if i_eff <= 0.0:
        raise ContentionCollapseError(
            f"OFF-switch contention ({i_contend:.3e} A) exceeds the "
            f"{edge} drive ({i_on:.3e} A) for config {config.serialize()}")
    clamped = i_eff < CONTENTION_CLAMP_A
    if clamped:
        i_eff = CONTENTION_CLAMP_A
    delay = params.c_load * vdd_actual / (2.0 * i_eff)
    return DelayDetail(delay, i_on, i_contend, clamped, edge)


def delay_detail(config: CamoConfig, inputs: tuple[int, int],
                 bias: BiasPoint, vdd_actual: float, t: float,
                 params: DeviceParams,
                 include_contention: bool = True) -> DelayDetail:
    """Worst-edge delay with its drive/contention breakdown.

    The edge arriving at the state f(inputs) additionally sees the OFF
    functional network at that vector as contention; the opposite edge
    sees only the OFF switch members. The reported figure is the slower
    of the two edges, which is what a fixed-bias cell exhibits: at low
    vdd the pull-up route starves, at high vdd the pull-down route's
    fixed overdrive cannot keep up with the larger swing.
    """
    if not math.isfinite(vdd_actual) or vdd_actual <= 0:
        raise InvalidParameterError(f"vdd_actual must be positive: {vdd_actual}")
    if len(inputs) != 2 or any(v not in (0, 1) for v in inputs):
        raise InvalidParameterError(f"cell inputs must be two bits: {inputs!r}")
    func = _cell.decode(config)
    out = _cell.behavior_table(func)[tuple(inputs)]
    primary_edge = "rise" if out == 1 else "fall"
    other_edge = "fall" if out == 1 else "rise"
    primary = _edge_detail(config, func, tuple(inputs), primary_edge, bias,
                           vdd_actual, t, params, include_contention)
    secondary = _edge_detail(config, func, None, other_edge, bias,
                             vdd_actual, t, params, include_contention)
    return primary if primary.delay_s >= secondary.delay_s else secondary


def gate_delay_estimate(config: CamoConfig, inputs: tuple[int, int],
                        bias: BiasPoint, vdd_actual: float, t: float,
                        params: DeviceParams,
                        include_contention: bool = True) -> float:
    """Worst-edge cell delay, c_load * vdd_actual / (2 * I_eff)."""
    return delay_detail(config, inputs, bias, vdd_actual, t, params,
                        include_contention).delay_s


_ALL_VECTORS = ((0, 0), (0, 1), (1, 0), (1, 1))


def cell_worst_delay(bias: BiasPoint, t: float, params: DeviceParams,
                     vdd_actual: float | None = None,
                     flavor: _cell.CellFlavor = _cell.CellFlavor.CAMO8,
                     ) -> float:
    """Max delay over every function of the flavor and every input vector."""
    if vdd_actual is None:
        vdd_actual = params.vdd
    worst = 0.0
    for func in sorted(flavor.function_set, key=lambda f: f.value):
        config = _cell.config_for(func, flavor)
        for vec in _ALL_VECTORS:
            d = gate_delay_estimate(config, vec, bias, vdd_actual, t, params)
            if d > worst:
                worst = d
    return worst


# --- sweeps and optimization ----------------------------------------------

SWEEP_CSV_HEADER = "delta_hvt,delta_lvt,ratio,delay_s"


@dataclass(frozen=True)
class SweepRow:
    delta_hvt: float
    delta_lvt: float
    ratio: float
    delay_s: float


def _grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0 or not math.isfinite(step):
        raise InvalidParameterError(f"grid step must be positive, got {step}")
    if hi < lo:
        raise InvalidParameterError(f"empty range ({lo}, {hi})")
    count = int(round((hi - lo) / step)) + 1
    pts = [round(lo + i * step, 12) for i in range(count)]
    return [p for p in pts if p <= hi + 1e-12]

def sweep_vt_window(hvt_range: tuple[float, float],
                    lvt_range: tuple[float, float], step: float,
                    bias: BiasPoint, t: float,
                    params: DeviceParams) -> list[SweepRow]:
    """Switch ratio and worst-case cell delay over a VT-offset grid.

    Rows are emitted in row-major order: delta_hvt outer, delta_lvt inner.
    """
    rows = []
    for dh in _grid(*hvt_range, step):
        for dl in _grid(*lvt_range, step):
            p = replace(params, delta_hvt=dh, delta_lvt=dl)
            ratio = switch_ratio(dh, dl, bias, t, p)
            delay = cell_worst_delay(bias, t, p)
            rows.append(SweepRow(dh, dl, ratio, delay))
    return rows


def sweep_to_csv(rows: Iterable[SweepRow]) -> str:
    """Render sweep rows as CSV with six significant digits."""
    lines = [SWEEP_CSV_HEADER]
    for r in rows:
        lines.append(f"{r.delta_hvt:.6g},{r.delta_lvt:.6g},"
                     f"{r.ratio:.6g},{r.delay_s:.6g}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BiasOptimum:
    """Result of the exhaustive bias/threshold co-search."""

    bias: BiasPoint
    delta_hvt: float
    delta_lvt: float
    delay_default_s: float
    delay_opt_s: float

    @property
    def delay_gain(self) -> float:
        """1 - optimized/default worst-case delay (0 when no gain)."""
        return 1.0 - self.delay_opt_s / self.delay_default_s


def optimize_bias(params: DeviceParams, search_window: float = 0.1,
                  grid_step: float = 0.05, t: float | None = None,
                  ) -> BiasOptimum:
    """Exhaustive grid search over switch biases and VT offset trims.

    Explores (vg_n, vg_p, delta_hvt, delta_lvt) within +-search_window of
    their defaults and minimizes the worst-case cell delay across all
    eight functions and all input vectors. Enumeration is sorted, and
    only strict improvements replace the incumbent, so ties resolve to
    the smallest vg_n, then vg_p, then the offset trims.
    """
    if not math.isfinite(search_window) or search_window < 0:
        raise InvalidParameterError(
            f"search_window must be >= 0, got {search_window}")
    if search_window > MAX_SEARCH_WINDOW_V:
        raise InvalidParameterError(
            f"search_window {search_window} exceeds {MAX_SEARCH_WINDOW_V} V")
    if grid_step <= 0 or not math.isfinite(grid_step):
        raise InvalidParameterError(f"grid_step must be positive: {grid_step}")
    if t is None:
        t = params.t_ref
    base_bias = default_bias(params)
    k = int(math.floor(search_window / grid_step + 1e-12))
    offsets = [i * grid_step for i in range(-k, k + 1)]
    d_default = cell_worst_delay(base_bias, t, params)
    best = None
    for dvn in offsets:
        for dvp in offsets:
            bias = BiasPoint(base_bias.vg_n + dvn, base_bias.vg_p + dvp)
            for dh in offsets:
                new_dh = params.delta_hvt + dh
                if new_dh <= 0 or new_dh >= params.vdd:
                    continue
                for dl in offsets:
                    new_dl = params.delta_lvt + dl
                    if new_dl <= 0 or new_dl >= params.vdd:
                        continue
                    p = replace(params, delta_hvt=new_dh, delta_lvt=new_dl)
                    try:
                        d = cell_worst_delay(bias, t, p)
                    except ContentionCollapseError:
                        continue
                    if best is None or d < best[0]:
                        best = (d, bias, new_dh, new_dl)
    if best is None:
        raise InvalidParameterError("bias search grid is empty")
    d_opt, bias, dh, dl = best
    return BiasOptimum(bias, dh, dl, d_default, d_opt)
