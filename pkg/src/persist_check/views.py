"""
Timestamp sets and value sets underlying every assertion.

All sets are computed eagerly from the concrete memory; memories of litmus
programs are short.
"""

from typing import FrozenSet, Iterable

from persist_check.semantics import MachineState, Memory

TimestampSet = FrozenSet[int]
ValueSet = FrozenSet[int]


def vals(mem: Memory, stamps: Iterable[int]) -> ValueSet:
    """Values of the messages at the given timestamps."""
    return frozenset(mem[t].val for t in stamps)


def _shadow_free(mem: Memory, loc: str, lower: int, upper: int) -> TimestampSet:
    """Writes to loc at or after `lower` not followed by another loc write up to `upper`."""
    return frozenset(
        t
        for t in range(lower, len(mem))
        if mem[t].loc == loc and mem.noloc(upper, t, loc)
    )


def obs_ts_from(state: MachineState, tid: int, loc: str, t: int) -> TimestampSet:
    """Timestamps of loc that thread `tid` could observe with read view `t`."""
    mem = state.mem
    coh = state.thread(tid).coh[mem.index(loc)]
    return _shadow_free(mem, loc, coh, t)


def obs_ts(state: MachineState, tid: int, loc: str) -> TimestampSet:
    return obs_ts_from(state, tid, loc, state.thread(tid).vr_new)


def thread_view(state: MachineState, tid: int, loc: str) -> ValueSet:
    """The assertion [loc]_tid."""
    return vals(state.mem, obs_ts(state, tid, loc))


def persist_ts(state: MachineState, loc: str) -> TimestampSet:
    return _shadow_free(state.mem, loc, 0, state.maxper(loc))


def pview(state: MachineState, loc: str) -> ValueSet:
    """The assertion [loc]_P: values loc may hold after a crash."""
    return vals(state.mem, persist_ts(state, loc))


def async_ts(state: MachineState, tid: int, loc: str) -> TimestampSet:
    mem = state.mem
    return _shadow_free(mem, loc, 0, state.thread(tid).vp_async[mem.index(loc)])


def aview(state: MachineState, tid: int, loc: str) -> ValueSet:
    """The assertion [loc]_A_tid."""
    return vals(state.mem, async_ts(state, tid, loc))


def cond_view_ts(state: MachineState, tid: int, loc: str, value: int) -> TimestampSet:
    """Read views `tid` would have right after reading `value` from `loc`."""
    mem = state.mem
    ts = state.thread(tid)
    coh = ts.coh[mem.index(loc)]
    result = set()
    for t in obs_ts(state, tid, loc):
        if mem[t].val != value:
            continue
        result.add(ts.vr_new if t == coh else max(t, ts.vr_new))
    return frozenset(result)


def cond_obs_view(
    state: MachineState, tid: int, loc: str, value: int, other: str
) -> ValueSet:
    """The assertion <loc=value>[other]_tid."""
    stamps = set()
    for t in cond_view_ts(state, tid, loc, value):
        stamps |= obs_ts_from(state, tid, other, t)
    return vals(state.mem, stamps)


def last_ts(mem: Memory, loc: str) -> int:
    return mem.last_ts(loc)


def last_reader(state: MachineState, loc: str, tid: int) -> bool:
    """lastr: `tid` can only observe the last write to `loc`."""
    return obs_ts(state, tid, loc) == {last_ts(state.mem, loc)}


def last_flush(state: MachineState, loc: str, tid: int) -> bool:
    """lastflush: a flush of `loc` by `tid` would persist the last write."""
    return last_ts(state.mem, loc) <= max(state.thread(tid).maxcoh, state.maxper(loc))


def last_mfence(state: MachineState, loc: str, tid: int) -> bool:
    """lastmfence: an mfence by `tid` would make the last write to `loc` visible."""
    return last_ts(state.mem, loc) <= state.thread(tid).maxcoh


def last_val(state: MachineState, loc: str, value: int) -> bool:
    mem = state.mem
    return mem[last_ts(mem, loc)].val == value


def write_count(state: MachineState, loc: str, value: int) -> int:
    return sum(1 for msg in state.mem.msgs if msg.loc == loc and msg.val == value)
