"""Monte Carlo engine for the controlled/stopped diffusion.

The optimal control keeps the state outside the interior of the control
region C: an initial jump moves a state started inside C to the boundary
point in the slope direction, reflecting boundaries are enforced by clamping
(the clamp distance accrues to the control cost), and repelling boundaries
fire a jump across C.  Stopping follows either the v-rule (stop on the
pre-control state) or the u-rule (stop on the post-control state, so the
controller's move at the stopping instant counts).

Per-path noise comes from counter-based streams keyed by (seed, path index),
so serial, chunked and parallel runs produce bit-identical paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AmbiguousRegion, StepTooLarge, UnverifiedGenerator
from .generator import Generator, RegionSet, eval_du, eval_u_array, in_interior
from .model import GameModel

NOISE_BLOCK = 1024
SLOPE_TOL = 1e-9


# ---------------------------------------------------------------------------
# strategy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Component:
    """Maximal interval of R \\ int C with the action taken at each finite
    endpoint when the diffusion tries to cross into C."""
    lo: float
    hi: float
    lo_act: str = "none"       # none | clamp | jump
    hi_act: str = "none"
    lo_target: float = math.nan
    hi_target: float = math.nan
    lo_dest: int = -1          # component index a lo-jump lands in
    hi_dest: int = -1


@dataclass(frozen=True)
class Strategy:
    stop_set: tuple
    control: tuple
    components: tuple
    regions: Optional[RegionSet] = None
    gen: Optional[Generator] = None
    controller_active: bool = True

    @property
    def barriers(self):
        out = []
        for c in self.components:
            if c.lo_act == "clamp":
                out.append((c.lo, +1))   # push keeps X >= lo
            if c.hi_act == "clamp":
                out.append((c.hi, -1))   # push keeps X <= hi
        return out

    @property
    def repelling_exits(self):
        out = []
        for c in self.components:
            if c.lo_act == "jump":
                out.append((c.lo, c.lo_target))
            if c.hi_act == "jump":
                out.append((c.hi, c.hi_target))
        return out

    def component_of(self, x):
        for i, c in enumerate(self.components):
            if c.lo - 1e-12 <= x <= c.hi + 1e-12:
                return i
        return -1

    def jump_map(self, x):
        """zeta(x): jump target for x inside int C (slope direction)."""
        if self.gen is None:
            raise UnverifiedGenerator("strategy carries no generator; zeta undefined")
        dl = eval_du(self.gen, x, "left")
        dr = eval_du(self.gen, x, "right")
        for a, b in self.control:
            if a < x < b:
                if abs(dl - 1.0) <= SLOPE_TOL:
                    return a     # sup{y < x : y not in C}
                if abs(dr + 1.0) <= SLOPE_TOL and dl < 1.0 - SLOPE_TOL:
                    return b     # inf{y > x : y not in C}
                raise AmbiguousRegion("no unit slope at %g inside C" % (x,))
        raise AmbiguousRegion("%g is not inside int C" % (x,))

    def min_region_width(self):
        widths = []
        rs = self.regions
        ivs = []
        if rs is not None:
            ivs = (list(rs.waiting) + list(rs.control)
                   + list(rs.stop_wait) + list(rs.stop_control))
        else:
            ivs = list(self.stop_set) + list(self.control)
        for a, b in ivs:
            if math.isfinite(a) and math.isfinite(b) and b - a > 1e-12:
                widths.append(b - a)
        return min(widths) if widths else math.inf


def strategy_from_generator(gen: Generator) -> Strategy:
    if gen.regions is None:
        raise UnverifiedGenerator(
            "generator carries no region decomposition; solve or verify first")
    rs = gen.regions
    control = tuple(rs.control)

    # components of R \ int C
    spans = []
    prev = -math.inf
    for a, b in sorted(control):
        if a > prev:
            spans.append([prev, a])
        prev = max(prev, b)
    if prev < math.inf:
        spans.append([prev, math.inf])

    def action(point):
        tag = rs.boundary_tags.get(point)
        if tag == "reflecting":
            return "clamp"
        if tag == "repelling":
            return "jump"
        raise AmbiguousRegion("no reflecting/repelling tag at C-boundary %g" % point)

    comps = []
    for lo, hi in spans:
        lo_act = action(lo) if math.isfinite(lo) else "none"
        hi_act = action(hi) if math.isfinite(hi) else "none"
        comps.append(dict(lo=lo, hi=hi, lo_act=lo_act, hi_act=hi_act,
                          lo_target=math.nan, hi_target=math.nan,
                          lo_dest=-1, hi_dest=-1))
    # jump targets: across the adjacent C interval to the next component
    for i, c in enumerate(comps):
        if c["lo_act"] == "jump":
            c["lo_target"] = comps[i - 1]["hi"]
            c["lo_dest"] = i - 1
        if c["hi_act"] == "jump":
            c["hi_target"] = comps[i + 1]["lo"]
            c["hi_dest"] = i + 1
    components = tuple(Component(**c) for c in comps)
    return Strategy(stop_set=tuple(rs.stop), control=control,
                    components=components, regions=rs, gen=gen)


def null_strategy(strat: Strategy) -> Strategy:
    """Controller deviation xi = 0: same stopping set, no control."""
    return Strategy(stop_set=strat.stop_set, control=(), components=(),
                    regions=strat.regions, gen=strat.gen, controller_active=False)


def shifted_strategy(strat: Strategy, shift: float) -> Strategy:
    """Controller deviation: every barrier/trigger moved into C by `shift`."""
    comps = []
    for c in strat.components:
        lo = c.lo - shift if math.isfinite(c.lo) else c.lo
        hi = c.hi + shift if math.isfinite(c.hi) else c.hi
        lt = c.lo_target + shift if math.isfinite(c.lo_target) else c.lo_target
        ht = c.hi_target - shift if math.isfinite(c.hi_target) else c.hi_target
        comps.append(Component(lo, hi, c.lo_act, c.hi_act, lt, ht,
                               c.lo_dest, c.hi_dest))
    return Strategy(stop_set=strat.stop_set, control=strat.control,
                    components=tuple(comps), regions=strat.regions,
                    gen=strat.gen, controller_active=strat.controller_active)


def wrong_jump_strategy(strat: Strategy, overshoot: float) -> Strategy:
    """Controller deviation: repelling jumps overshoot zeta by `overshoot`."""
    comps = []
    for c in strat.components:
        lt = c.lo_target - overshoot if math.isfinite(c.lo_target) else c.lo_target
        ht = c.hi_target + overshoot if math.isfinite(c.hi_target) else c.hi_target
        comps.append(Component(c.lo, c.hi, c.lo_act, c.hi_act, lt, ht,
                               c.lo_dest, c.hi_dest))
    return Strategy(stop_set=strat.stop_set, control=strat.control,
                    components=tuple(comps), regions=strat.regions,
                    gen=strat.gen, controller_active=strat.controller_active)


# ---------------------------------------------------------------------------
# records and estimates
# ---------------------------------------------------------------------------

@dataclass
class PathRecord:
    times: np.ndarray
    states: np.ndarray       # X_{t+} at each grid time; states[0] = X_{0+}
    x0: float
    dxi_plus: np.ndarray     # continuous upward control applied at times[i]
    dxi_minus: np.ndarray
    jumps: list              # (time, x_from, x_to)
    Lambda: np.ndarray
    stop_time: Optional[float]
    stop_state_pre: float
    stop_state_post: float
    flavor: str
    truncated: bool

    def total_variation(self):
        return (float(np.sum(self.dxi_plus) + np.sum(self.dxi_minus))
                + sum(abs(b - a) for _, a, b in self.jumps))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_paths: int
    dt: float
    horizon: float
    truncated_frac: float
    continuation_mean: float
    flavor: str
    x0: float

    def to_dict(self):
        return {k: getattr(self, k) for k in
                ("mean", "stderr", "n_paths", "dt", "horizon",
                 "truncated_frac", "continuation_mean", "flavor", "x0")}


def default_horizon(model: GameModel) -> float:
    return max(10.0 / model.discount, 20.0)


def _philox_stream(seed, idx):
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1),
                                                     int(idx) & (2**64 - 1)]))


def _in_set(ivs, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=bool)
    for a, b in ivs:
        out |= (x >= a) & (x <= b)
    return out


def _check_step(strat: Strategy, model: GameModel, dt: float):
    if dt > 0.1 / model.discount:
        raise StepTooLarge("dt=%g exceeds 0.1/delta=%g" % (dt, 0.1 / model.discount))
    w = strat.min_region_width()
    noise_std = model.sigma * math.sqrt(dt)
    if noise_std > 0.5 * w:
        raise StepTooLarge("per-step noise std %g exceeds half the smallest "
                           "region width %g" % (noise_std, w))


# ---------------------------------------------------------------------------
# the engine
# ---------------------------------------------------------------------------

def _run_paths(strat: Strategy, model: GameModel, x0: float, flavor: str,
               dt: float, horizon: float, seed: int, indices: np.ndarray,
               stopper: str = "rule", fixed_time: float = None,
               collect_jumps: bool = False, record: bool = False):
    """Simulate one chunk of paths (vectorized); returns per-path payoffs plus
    truncation diagnostics, and optionally jump events / a full PathRecord."""
    n = len(indices)
    delta = model.discount
    sig = model.sigma
    sqdt = math.sqrt(dt)
    n_steps = int(math.ceil(horizon / dt))
    stop_set = strat.stop_set
    active_ctrl = strat.controller_active and len(strat.components) > 0

    payoff = np.zeros(n)
    done = np.zeros(n, dtype=bool)
    truncated = np.zeros(n, dtype=bool)
    continuation = np.zeros(n)
    jump_events = []
    rec = None

    x_start = float(x0)
    init_jump = None
    in_int_c = bool(in_interior(strat.control, np.array([x0]))[0]) if active_ctrl else False
    in_s0 = bool(_in_set(stop_set, np.array([x0]))[0])
    stop_at_zero = stopper == "immediate" or (stopper == "rule" and in_s0)

    if flavor == "V":
        # stopper moves first at t=0: a time-0 jump is outside [0, tau[
        if stop_at_zero:
            payoff[:] = float(model.g(x0))
            done[:] = True
        elif in_int_c:
            target = strat.jump_map(x0)
            init_jump = (0.0, x_start, target)
            x_start = target
    elif flavor == "U":
        cost0 = 0.0
        if in_int_c:
            target = strat.jump_map(x0)
            init_jump = (0.0, float(x0), target)
            cost0 = abs(target - float(x0))
            x_start = target
        in_s_post = bool(_in_set(stop_set, np.array([x_start]))[0])
        if stopper == "immediate" or (stopper == "rule" and in_s_post):
            payoff[:] = cost0 + float(model.g(x_start))
            done[:] = True
    else:
        raise ValueError("flavor must be 'V' or 'U'")

    if record:
        rec = PathRecord(times=[0.0], states=[x_start], x0=float(x0),
                         dxi_plus=[0.0], dxi_minus=[0.0],
                         jumps=[init_jump] if init_jump else [],
                         Lambda=[0.0], stop_time=None,
                         stop_state_pre=float(x0), stop_state_post=x_start,
                         flavor=flavor, truncated=False)
        if done.all():
            rec.stop_time = 0.0
            _finalize_record(rec)
            return _engine_result(payoff, truncated, continuation, jump_events, rec)

    if collect_jumps and init_jump is not None:
        for idx in indices:
            jump_events.append((int(idx), 0.0, init_jump[1], init_jump[2]))

    if done.all():
        return _engine_result(payoff, truncated, continuation, jump_events, rec)

    # active-path state; the discount exp(-Lambda_t) = exp(-delta*t) is
    # deterministic, so it is a per-step scalar, never a per-path array
    pid = np.arange(n)
    X = np.full(n, x_start)
    run = np.zeros(n)
    cost = np.full(n, abs(x_start - float(x0)) if init_jump else 0.0)
    comp = np.full(n, strat.component_of(x_start) if active_ctrl else -1, dtype=np.int64)
    rngs = [_philox_stream(seed, idx) for idx in indices]
    block = None
    rows = None  # active position -> noise block row; the block is never copied
    have_h = not np.all(model.h(np.array([0.0, 1.0, -2.0])) == 0.0)
    have_drift = model.drift_const != 0.0 or model.drift_slope != 0.0
    vol = sig * sqdt

    j = 0
    while j < n_steps and len(pid) > 0:
        jb = j % NOISE_BLOCK
        if jb == 0:
            m = min(NOISE_BLOCK, n_steps - j)
            block = np.empty((len(pid), m))
            for i, rng in enumerate(rngs):
                block[i] = rng.standard_normal(m)
            rows = np.arange(len(pid))
        z = block[rows, jb]

        disc0 = math.exp(-delta * j * dt)
        if have_h:
            run = run + (disc0 * dt) * model.h(X)
        if have_drift:
            Xp = X + model.b(X) * dt + vol * z
        else:
            Xp = X + vol * z
        disc1 = math.exp(-delta * (j + 1) * dt)
        t_next = (j + 1) * dt

        stop_all = (stopper == "fixed" and fixed_time is not None
                    and t_next >= fixed_time - 1e-12)

        def _finish(mask, terminal_state):
            payoff[pid[mask]] = run[mask] + cost[mask] + disc1 * model.g(terminal_state[mask])
            done[pid[mask]] = True

        if flavor == "V":
            # stop decided on the pre-control state
            if stopper == "rule":
                stop_now = _in_set(stop_set, Xp)
            elif stop_all:
                stop_now = np.ones(len(pid), dtype=bool)
            else:
                stop_now = np.zeros(len(pid), dtype=bool)
            if stop_now.any():
                _finish(stop_now, Xp)
                if record and stop_now[0]:
                    rec.stop_time = t_next
                    rec.stop_state_pre = rec.stop_state_post = float(Xp[0])
                    rec.times.append(t_next)
                    rec.states.append(float(Xp[0]))
                    rec.dxi_plus.append(0.0)
                    rec.dxi_minus.append(0.0)
                    rec.Lambda.append(delta * t_next)
                keep = ~stop_now
                pid, X, Xp, run, cost, comp, rows = (
                    a[keep] for a in (pid, X, Xp, run, cost, comp, rows))
                rngs = [r for r, k in zip(rngs, keep) if k]
                if len(pid) == 0:
                    break

        pre_control = Xp.copy() if record else None
        step_plus = step_minus = 0.0
        if active_ctrl:
            for ci, c in enumerate(strat.components):
                m = comp == ci
                if not m.any():
                    continue
                if c.lo_act == "clamp" and math.isfinite(c.lo):
                    mm = m & (Xp < c.lo)
                    if mm.any():
                        amt = c.lo - Xp[mm]
                        cost[mm] += disc1 * amt
                        Xp[mm] = c.lo
                        if record and mm[0]:
                            step_plus += float(amt[0])
                elif c.lo_act == "jump" and math.isfinite(c.lo):
                    mm = m & (Xp <= c.lo)
                    if mm.any():
                        deep = mm & (Xp < c.lo_target)
                        hop = mm & ~deep
                        if hop.any():
                            amt = Xp[hop] - c.lo_target
                            cost[hop] += disc1 * amt
                            if collect_jumps:
                                for k in np.flatnonzero(hop):
                                    jump_events.append(
                                        (int(pid[k]), t_next, float(Xp[k]), c.lo_target))
                            if record and hop[0]:
                                rec.jumps.append((t_next, float(Xp[0]), c.lo_target))
                            Xp[hop] = c.lo_target
                        comp[mm] = c.lo_dest
                if c.hi_act == "clamp" and math.isfinite(c.hi):
                    mm = m & (Xp > c.hi)
                    if mm.any():
                        amt = Xp[mm] - c.hi
                        cost[mm] += disc1 * amt
                        Xp[mm] = c.hi
                        if record and mm[0]:
                            step_minus += float(amt[0])
                elif c.hi_act == "jump" and math.isfinite(c.hi):
                    mm = m & (Xp >= c.hi)
                    if mm.any():
                        deep = mm & (Xp > c.hi_target)
                        hop = mm & ~deep
                        if hop.any():
                            amt = c.hi_target - Xp[hop]
                            cost[hop] += disc1 * amt
                            if collect_jumps:
                                for k in np.flatnonzero(hop):
                                    jump_events.append(
                                        (int(pid[k]), t_next, float(Xp[k]), c.hi_target))
                            if record and hop[0]:
                                rec.jumps.append((t_next, float(Xp[0]), c.hi_target))
                            Xp[hop] = c.hi_target
                        comp[mm] = c.hi_dest
        X = Xp

        if record and len(pid) > 0:
            rec.times.append(t_next)
            rec.states.append(float(X[0]))
            rec.dxi_plus.append(step_plus)
            rec.dxi_minus.append(step_minus)
            rec.Lambda.append(delta * t_next)

        if flavor == "U":
            if stopper == "rule":
                stop_now = _in_set(stop_set, X)
            elif stop_all:
                stop_now = np.ones(len(pid), dtype=bool)
            else:
                stop_now = np.zeros(len(pid), dtype=bool)
            if stop_now.any():
                _finish(stop_now, X)
                if record and stop_now[0]:
                    rec.stop_time = t_next
                    rec.stop_state_pre = float(pre_control[0])
                    rec.stop_state_post = float(X[0])
                keep = ~stop_now
                pid, X, run, cost, comp, rows = (
                    a[keep] for a in (pid, X, run, cost, comp, rows))
                rngs = [r for r, k in zip(rngs, keep) if k]
        elif flavor == "V" and stop_all:
            # fixed-time stop fell between the pre-control check and here
            pass

        j += 1

    # horizon truncation
    if len(pid) > 0:
        payoff[pid] = run + cost
        truncated[pid] = True
        if strat.gen is not None:
            continuation[pid] = math.exp(-delta * n_steps * dt) * eval_u_array(strat.gen, X)
        if record:
            rec.truncated = True
            rec.stop_state_pre = rec.stop_state_post = float(X[0])

    if record:
        _finalize_record(rec)
    return _engine_result(payoff, truncated, continuation, jump_events, rec)


def _finalize_record(rec: PathRecord):
    rec.times = np.asarray(rec.times)
    rec.states = np.asarray(rec.states)
    rec.dxi_plus = np.asarray(rec.dxi_plus)
    rec.dxi_minus = np.asarray(rec.dxi_minus)
    rec.Lambda = np.asarray(rec.Lambda)


def _engine_result(payoff, truncated, continuation, jump_events, rec):
    return {"payoff": payoff, "truncated": truncated,
            "continuation": continuation, "jumps": jump_events, "record": rec}


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def simulate_path(strat: Strategy, model: GameModel, x0: float, dt: float,
                  horizon: float = None, seed: int = 0, flavor: str = "V",
                  stopper: str = "rule", fixed_time: float = None,
                  path_index: int = 0) -> PathRecord:
    if horizon is None:
        horizon = default_horizon(model)
    if horizon < 10.0 / model.discount - 1e-9:
        raise ValueError("horizon must cover 10/delta")
    _check_step(strat, model, dt)
    out = _run_paths(strat, model, x0, flavor, dt, horizon, seed,
                     np.array([path_index]), stopper=stopper,
                     fixed_time=fixed_time, record=True)
    return out["record"]


def payoff(path: PathRecord, model: GameModel, flavor: str) -> float:
    """Re-evaluate the discounted payoff of a recorded path under either
    stopping convention: V charges control on [0,tau[ and pays g at the
    pre-jump state, U charges [0,tau] and pays g at the post-jump state."""
    if flavor not in ("V", "U"):
        raise ValueError("flavor must be 'V' or 'U'")
    tau = path.stop_time
    t_end = path.times[-1] if tau is None else tau
    dt = float(path.times[1] - path.times[0]) if len(path.times) > 1 else 0.0
    disc = np.exp(-path.Lambda)

    total = 0.0
    if dt > 0:
        steps = path.times[:-1] < t_end - 1e-15
        total += float(np.sum(disc[:-1][steps] * model.h(path.states[:-1][steps]) * dt))

    if flavor == "V":
        cont_mask = path.times < t_end - 1e-15
    else:
        cont_mask = path.times <= t_end + 1e-15
    total += float(np.sum(disc[cont_mask] * (path.dxi_plus[cont_mask]
                                             + path.dxi_minus[cont_mask])))
    for t, a, b in path.jumps:
        if (flavor == "V" and t < t_end - 1e-15) or (flavor == "U" and t <= t_end + 1e-15):
            total += math.exp(-model.discount * t) * abs(b - a)

    if tau is not None:
        terminal = path.stop_state_pre if flavor == "V" else path.stop_state_post
        total += float(disc[-1] * model.g(terminal))
    return total


def estimate_value(strat: Strategy, model: GameModel, x0: float, flavor: str,
                   n_paths: int, dt: float, seed: int = 0,
                   horizon: float = None, stopper: str = "rule",
                   fixed_time: float = None, chunk: int = 16384) -> McEstimate:
    if horizon is None:
        horizon = default_horizon(model)
    _check_step(strat, model, dt)
    payoffs = np.empty(n_paths)
    truncated = np.zeros(n_paths, dtype=bool)
    continuation = np.zeros(n_paths)
    for start in range(0, n_paths, chunk):
        idx = np.arange(start, min(start + chunk, n_paths))
        out = _run_paths(strat, model, x0, flavor, dt, horizon, seed, idx,
                         stopper=stopper, fixed_time=fixed_time)
        payoffs[idx] = out["payoff"]
        truncated[idx] = out["truncated"]
        continuation[idx] = out["continuation"]
    mean = float(np.mean(payoffs))
    stderr = float(np.std(payoffs, ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    return McEstimate(mean=mean, stderr=stderr, n_paths=n_paths, dt=dt,
                      horizon=horizon, truncated_frac=float(np.mean(truncated)),
                      continuation_mean=float(np.mean(continuation)),
                      flavor=flavor, x0=float(x0))


def collect_jump_events(strat: Strategy, model: GameModel, x0: float,
                        flavor: str, n_paths: int, dt: float, seed: int = 0,
                        horizon: float = None, stopper: str = "rule"):
    """Jump events (path, time, from, to) over a batch, for accounting audits."""
    if horizon is None:
        horizon = default_horizon(model)
    _check_step(strat, model, dt)
    out = _run_paths(strat, model, x0, flavor, dt, horizon, seed,
                     np.arange(n_paths), stopper=stopper, collect_jumps=True)
    return out["jumps"]


def u_bounded_off_stop(gen: Generator, far: float = 1e6) -> bool:
    """Whether the generator stays bounded on the complement of S (the
    hypothesis behind the controller-deviation half of the saddle audit)."""
    rs = gen.regions
    if rs is None:
        return False
    stop = rs.stop
    probes = [x for x in (far, -far) if not _in_set(stop, np.array([x]))[0]]
    if not probes:
        return True
    near = 1.0 + max(abs(eval_u_array(gen, np.linspace(-3, 3, 64))).max(), 1.0)
    return all(abs(eval_u_array(gen, np.array([x]))[0]) < 10.0 * near for x in probes)


def saddle_audit(gen: Generator, model: GameModel, x0: float,
                 deviations=None, flavor: str = "U", n_paths: int = 20000,
                 dt: float = 1e-3, seed: int = 0, horizon: float = None,
                 rel_band: float = 0.02) -> list:
    """Monte Carlo audit of the saddle inequalities: stopper deviations must
    not beat the equilibrium from above, controller deviations from below."""
    strat = strategy_from_generator(gen)
    if deviations is None:
        w = strat.min_region_width()
        shift = 0.1 * w if math.isfinite(w) else 0.1
        deviations = [
            ("stopper", "tau0", None),
            ("stopper", "fixed", 0.5),
            ("stopper", "never", None),
            ("controller", "none", None),
            ("controller", "shift", shift),
            ("controller", "wrong_jump", shift),
        ]

    eq = estimate_value(strat, model, x0, flavor, n_paths, dt, seed=seed,
                        horizon=horizon)
    rows = [{"name": "equilibrium", "kind": "equilibrium", "flavor": flavor,
             "mean": eq.mean, "stderr": eq.stderr, "band": 0.0,
             "flag": "equilibrium"}]
    bounded = u_bounded_off_stop(gen)

    for k, (kind, name, arg) in enumerate(deviations):
        st, stopper, fixed = strat, "rule", None
        if kind == "stopper":
            if name == "tau0":
                stopper = "immediate"
            elif name == "fixed":
                stopper, fixed = "fixed", float(arg)
            elif name == "never":
                stopper = "never"
        else:
            if name == "none":
                st = null_strategy(strat)
            elif name == "shift":
                st = shifted_strategy(strat, float(arg))
            elif name == "wrong_jump":
                st = wrong_jump_strategy(strat, float(arg))
        est = estimate_value(st, model, x0, flavor, n_paths, dt,
                             seed=seed + 1000 * (k + 1), horizon=horizon,
                             stopper=stopper, fixed_time=fixed)
        band = 3.0 * math.hypot(eq.stderr, est.stderr) + rel_band * abs(eq.mean)
        if kind == "stopper":
            ok = est.mean <= eq.mean + band
            flag = "ok" if ok else "violation"
        else:
            if not bounded:
                flag = "outside boundedness hypothesis"
            else:
                ok = est.mean >= eq.mean - band
                flag = "ok" if ok else "violation"
        rows.append({"name": name, "kind": kind, "flavor": flavor,
                     "mean": est.mean, "stderr": est.stderr, "band": band,
                     "flag": flag})
    return rows
