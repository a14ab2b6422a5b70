import pytest

from safecell.apf import ControllerParams
from safecell.safety import Mode, SafetyMonitor, boundary_debounce, select_mode

PARAMS = ControllerParams()  # d_act 0.10, d_dct 0.15, d_at 0.30


# ---------------------------------------------------------------------------
# mode selection
# ---------------------------------------------------------------------------

def test_far_distance_is_mode1_silent():
    snap = select_mode(0.40, True, PARAMS)
    assert snap.mode is Mode.MODE1
    assert not snap.vib_left and not snap.vib_right
    assert not snap.fdcm_requested


def test_avoidance_ring_is_mode2_single_motor():
    snap = select_mode(0.20, True, PARAMS)
    assert snap.mode is Mode.MODE2
    assert snap.vib_left != snap.vib_right
    assert not snap.fdcm_requested


def test_critical_ring_is_mode3_both_motors():
    snap = select_mode(0.05, True, PARAMS)
    assert snap.mode is Mode.MODE3
    assert snap.vib_left and snap.vib_right
    assert snap.fdcm_requested


def test_marker_loss_is_mode4_regardless_of_distance():
    for d in (0.0, 0.05, 0.2, 0.5, 10.0):
        snap = select_mode(d, False, PARAMS)
        assert snap.mode is Mode.MODE4
        assert snap.vib_left and snap.vib_right
        assert snap.fdcm_requested


def test_mode2_motor_follows_facing_side():
    right = select_mode(0.2, True, PARAMS, facing_side=1)
    left = select_mode(0.2, True, PARAMS, facing_side=-1)
    assert right.vib_right and not right.vib_left
    assert left.vib_left and not left.vib_right


def test_negative_distance_rejected_when_visible():
    with pytest.raises(ValueError):
        select_mode(-0.1, True, PARAMS)


def test_mode_vibration_consistency_sweep():
    # exhaustive 1 mm sweep over [0, 1] m x visibility
    for visible in (True, False):
        for d_mm in range(0, 1001):
            snap = select_mode(d_mm / 1000.0, visible, PARAMS)
            if snap.mode is Mode.MODE1:
                assert not snap.vib_left and not snap.vib_right
            elif snap.mode is Mode.MODE2:
                assert snap.vib_left != snap.vib_right
            else:
                assert snap.vib_left and snap.vib_right
            assert snap.fdcm_requested == (snap.mode in (Mode.MODE3, Mode.MODE4))
            if not visible:
                assert snap.mode is Mode.MODE4


# ---------------------------------------------------------------------------
# boundary debounce
# ---------------------------------------------------------------------------

def raw(d, t, visible=True):
    return select_mode(d, visible, PARAMS, timestamp=t)


def test_fast_oscillation_across_boundary_holds_mode():
    # 50 Hz square oscillation across d_AT with 0.1 s dwell: committed mode fixed
    history = []
    committed_modes = []
    t = 0.0
    for i in range(100):
        d = 0.29 if i % 2 == 0 else 0.31
        candidate = raw(d, t)
        out = boundary_debounce(history, candidate, dwell=0.1)
        history.append(candidate)
        committed_modes.append(out.mode)
        t += 0.02
    assert all(m == committed_modes[0] for m in committed_modes)


def test_sustained_crossing_commits():
    history = [raw(0.35, i * 0.05) for i in range(10)]
    t0 = 10 * 0.05
    out = None
    for i in range(5):  # 0.2 s of sustained Mode2 indication
        candidate = raw(0.25, t0 + i * 0.05)
        out = boundary_debounce(history, candidate, dwell=0.1)
        history.append(candidate)
    assert out.mode is Mode.MODE2


def test_escalation_bypasses_dwell():
    history = [raw(0.35, i * 0.05) for i in range(10)]
    candidate = raw(0.05, 0.5)
    out = boundary_debounce(history, candidate, dwell=0.1)
    assert out.mode is Mode.MODE3  # same step, no dwell


def test_marker_loss_bypasses_dwell():
    history = [raw(0.35, i * 0.05) for i in range(10)]
    candidate = raw(0.35, 0.5, visible=False)
    out = boundary_debounce(history, candidate, dwell=0.1)
    assert out.mode is Mode.MODE4


def test_debounce_rejects_negative_dwell():
    with pytest.raises(ValueError):
        boundary_debounce([], raw(0.4, 0.0), dwell=-1.0)


# ---------------------------------------------------------------------------
# monitor (debounce + free-drive coupling)
# ---------------------------------------------------------------------------

def test_monitor_escalates_within_one_step():
    monitor = SafetyMonitor(PARAMS, dwell=0.1)
    out = monitor.update(0.4, True, 0.0, fdcm_active=False)
    assert out.mode is Mode.MODE1
    out = monitor.update(0.05, True, 0.01, fdcm_active=False)
    assert out.mode is Mode.MODE3


def test_monitor_holds_mode3_while_fdcm_active():
    monitor = SafetyMonitor(PARAMS, dwell=0.0)
    monitor.update(0.05, True, 0.0, fdcm_active=True)
    # distance is back in the Mode2 band but the robot still holds: haptics stay
    out = monitor.update(0.12, True, 0.1, fdcm_active=True)
    assert out.mode is Mode.MODE3
    out = monitor.update(0.2, True, 0.2, fdcm_active=False)
    assert out.mode is Mode.MODE2


def test_monitor_mode4_dominates():
    monitor = SafetyMonitor(PARAMS, dwell=0.1)
    for i, visible in enumerate([True, False, False, True]):
        out = monitor.update(0.5, visible, i * 0.01, fdcm_active=not visible)
        if not visible:
            assert out.mode is Mode.MODE4


def test_monitor_dwell_blocks_flicker():
    monitor = SafetyMonitor(PARAMS, dwell=0.1)
    modes = []
    for i in range(200):
        t = i * 0.01
        d = 0.29 if i % 2 == 0 else 0.31  # 50 Hz flicker across d_AT
        modes.append(monitor.update(d, True, t, fdcm_active=False).mode)
    assert all(m == modes[0] for m in modes)


def test_monitor_commits_after_dwell():
    monitor = SafetyMonitor(PARAMS, dwell=0.1)
    out = monitor.update(0.4, True, 0.0, fdcm_active=False)
    assert out.mode is Mode.MODE1
    for i in range(1, 25):
        out = monitor.update(0.2, True, i * 0.01, fdcm_active=False)
    assert out.mode is Mode.MODE2
    # and the change landed only after the dwell elapsed
    monitor.reset()
    monitor.update(0.4, True, 0.0, fdcm_active=False)
    early = monitor.update(0.2, True, 0.05, fdcm_active=False)
    assert early.mode is Mode.MODE1
