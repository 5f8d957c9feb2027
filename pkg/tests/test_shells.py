import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import hypershell as hs
from hypershell import oracle, shells
from hypershell.shells import (
    ZERO_SHELL_THRESHOLD,
    dissipation_floor,
    interacting_triple,
    interaction_bound_constant,
    interaction_coeffs,
    interaction_triples,
    partition_defect,
    psi_n,
    raw_interaction,
    shell_count,
    shell_energies,
    shell_frame,
    shell_trajectory,
    verify_interaction_bounds,
    verify_shell_ode,
)

# grid estimate of the sqrt-bump Lipschitz constant for the default profile,
# frozen at build time; the 1e5-point grid is deterministic
FROZEN_LIPSCHITZ = 4.451752693242723


def smooth_transition_reference(x: float) -> float:
    """Independent scalar evaluation of the transition profile."""
    def ramp(t):
        return math.exp(-1.0 / t) if t > 0 else 0.0

    if x <= 1.0:
        return 1.0
    if x >= 2.0:
        return 0.0
    up, down = ramp(2.0 - x), ramp(x - 1.0)
    return up / (up + down)


class TestBumpProfile:
    def test_plateaus_are_exact(self, profile):
        assert profile.transition(0.0) == 1.0
        assert profile.transition(1.0) == 1.0
        assert profile.transition(2.0) == 0.0
        assert profile.transition(5.0) == 0.0

    def test_monotone_and_strictly_decreasing_inside(self, profile):
        grid = np.linspace(1.0, 2.0, 10_001)
        values = profile.transition(grid)
        assert np.all(np.diff(values) <= 0.0)
        # strictness is only visible where values are fp-distinguishable
        inner = (values > 1e-12) & (values < 1.0 - 1e-12)
        idx = np.nonzero(inner)[0]
        assert np.all(np.diff(values[idx]) < 0.0)

    def test_matches_reference_formula(self, profile):
        for x in [0.3, 1.1, 1.5, 1.9, 2.2]:
            assert profile.transition(x) == pytest.approx(
                smooth_transition_reference(x), abs=1e-15
            )
        assert profile.transition(1.5) == 0.5  # symmetric midpoint is exact

    def test_bump_support_and_range(self, profile):
        grid = np.linspace(0.0, 3.0, 10_001)
        values = profile.bump(grid)
        assert np.all(values >= 0.0)
        assert np.all(values <= 1.0)
        outside = (grid <= 0.5) | (grid >= 2.0)
        assert np.all(values[outside] == 0.0)

    def test_dyadic_partition_on_radii(self, profile):
        grid = np.linspace(1.0, 200.0, 50_001)
        total = sum(profile.shell_weight(n, grid) for n in range(10))
        assert np.max(np.abs(total - 1.0)) < 1e-12

    def test_lipschitz_regression(self, profile):
        value = shells.lipschitz_sqrt_psi(profile)
        assert value > 0
        assert value == pytest.approx(FROZEN_LIPSCHITZ, rel=1e-12)
        assert shells.lipschitz_sqrt_psi(hs.BumpProfile()) == value


class TestShellGeometry:
    def test_counts_cover_the_lattice(self):
        assert shell_count(4, 2) == 4
        assert shell_count(16, 2) == 6
        assert shell_count(32, 2) == 7

    def test_partition_defect_zero(self, profile):
        assert partition_defect(profile, 8, 2) == 0.0
        assert partition_defect(profile, 16, 2) < 1e-12

    def test_psi_plateau_and_support(self, profile):
        assert psi_n(profile, 2, (4, 0)) == 1.0  # |k| = 2^n sits on the plateau
        assert psi_n(profile, 2, (2, 0)) == 0.0  # |k| = 2^(n-1) is outside
        assert psi_n(profile, 2, (1, 0)) == 0.0

    def test_psi_sums_to_one_at_34(self, profile):
        total = sum(psi_n(profile, n, (3, 4)) for n in range(6))
        assert total == pytest.approx(1.0, abs=1e-14)


class TestShellEnergies:
    def test_zero_state(self, profile):
        state = hs.SpectralState(2, 8, np.zeros((2, 17, 17), dtype=complex))
        assert np.all(shell_energies(state, profile) == 0.0)

    def test_single_pair_at_radius_three(self, profile):
        # |k| = 3 meets only shells 1 and 2; psi_1(3) = transition(1.5) = 1/2
        state = hs.single_mode_state(2, 8, (3, 0), amplitude=1.0)
        x = shell_energies(state, profile)
        x2 = x**2
        assert x2[1] == pytest.approx(2.0 * smooth_transition_reference(1.5), rel=1e-14)
        assert x2[1] + x2[2] == pytest.approx(2.0, rel=1e-14)
        assert np.all(x2[[0, 3, 4]] < 1e-30)

    def test_energy_split(self, profile, random_k8):
        x = shell_energies(random_k8, profile)
        total = hs.energy(random_k8)
        assert abs(np.sum(x**2) - total) < 1e-10 * total


class TestChiCoefficients:
    def test_empty_shell_floor_value(self, law_flat, profile):
        state = hs.single_mode_state(2, 8, (1, 0))
        chi = shells.chi_coeffs(state, law_flat, profile)
        assert chi[3] == 32.0  # 2^(2*3 - 2 + 1) with g == 1
        assert dissipation_floor(law_flat, 3) == 32.0

    def test_single_mode_on_plateau(self, law_flat, profile):
        state = hs.single_mode_state(2, 8, (4, 0))
        chi = shells.chi_coeffs(state, law_flat, profile)
        assert chi[2] == pytest.approx(2.0 * 16.0, rel=1e-14)

    def test_lower_bound_holds(self, law_log, profile, random_k8):
        chi = shells.chi_coeffs(random_k8, law_log, profile)
        for n, value in enumerate(chi):
            assert value >= dissipation_floor(law_log, n) * (1 - 1e-12)


class TestInteractionIndexSet:
    def test_examples(self):
        assert interacting_triple(3, 4, 5)
        assert not interacting_triple(1, 2, 5)
        assert interacting_triple(0, 9, 10)
        assert not interacting_triple(0, 9, 12)

    @given(
        l=st.integers(0, 12), m=st.integers(0, 12), n=st.integers(0, 12)
    )
    @settings(max_examples=120, deadline=None)
    def test_symmetric_in_all_slots(self, l, m, n):
        reference = interacting_triple(l, m, n)
        for p in itertools.permutations((l, m, n)):
            assert interacting_triple(*p) == reference

    def test_triples_listing(self):
        triples = interaction_triples(4)
        assert all(interacting_triple(*t) for t in triples)
        assert (0, 3, 3) in triples
        assert (0, 0, 3) not in triples


class TestInteractionCoefficients:
    def test_diagonal_vanishes(self, law_log, profile, random_k8):
        raw = interaction_coeffs(random_k8, law_log, profile, method="direct", symmetrize=False)
        scale = max(abs(v) for v in raw.values())
        for (l, m, n), value in raw.items():
            if m == n:
                assert abs(value) < 1e-12 * scale

    def test_antisymmetric_from_raw_sums(self, law_log, profile, random_k8):
        raw = interaction_coeffs(random_k8, law_log, profile, method="transform", symmetrize=False)
        scale = max(abs(v) for v in raw.values())
        worst = max(abs(raw[(l, m, n)] + raw[(l, n, m)]) for (l, m, n) in raw)
        assert worst < 1e-10 * scale

    def test_direct_and_transform_agree_with_oracle(self, law_log, profile, random_k8):
        direct = interaction_coeffs(random_k8, law_log, profile, method="direct", symmetrize=False)
        transform = interaction_coeffs(
            random_k8, law_log, profile, method="transform", symmetrize=False
        )
        scale = max(abs(v) for v in direct.values())
        for triple in direct:
            ref = oracle.phi_direct(random_k8, law_log, profile, *triple)
            assert abs(direct[triple] - ref) < 1e-10 * scale
            assert abs(transform[triple] - ref) < 1e-10 * scale

    def test_agreement_with_smoothing_exponent(self, law_smoothed, profile):
        state = hs.random_smooth_state(2, 8, decay=2.0, amplitude=1.0, seed=13)
        values = interaction_coeffs(state, law_smoothed, profile, method="transform")
        scale = max(abs(v) for v in values.values())
        for triple in [(0, 1, 2), (2, 3, 2), (1, 2, 3)]:
            ref = oracle.phi_direct(state, law_smoothed, profile, *triple)
            assert abs(values[triple] - ref) < 1e-10 * scale

    def test_zero_outside_support_exactly(self, law_log, profile, random_k8):
        count = shell_count(8, 2)
        for l in range(count):
            for m in range(count):
                for n in range(count):
                    if not interacting_triple(l, m, n):
                        assert raw_interaction(random_k8, law_log, profile, l, m, n) == 0.0

    def test_empty_shell_convention(self, law_log, profile):
        state = hs.single_mode_state(2, 8, (1, 0))
        values = interaction_coeffs(state, law_log, profile)
        assert all(v == 0.0 for v in values.values())

    def test_symmetrized_storage_mirrors(self, law_log, profile, random_k8):
        table = interaction_coeffs(random_k8, law_log, profile, method="direct", symmetrize=True)
        for (l, m, n), value in table.items():
            assert table[(l, n, m)] == -value
            if m == n:
                assert value == 0.0

    def test_thread_cap_does_not_change_values(self, law_log, profile, random_k8, monkeypatch):
        serial = interaction_coeffs(random_k8, law_log, profile, method="transform")
        monkeypatch.setenv("HYPERSHELL_THREADS", "4")
        threaded = interaction_coeffs(random_k8, law_log, profile, method="transform")
        assert serial == threaded


class TestInteractionBounds:
    def test_constant_pieces(self, profile):
        law = hs.DissipationLaw(alpha=2.0, beta=0.0, dim=2, g=hs.constant(1.0))
        c = interaction_bound_constant(law, profile)
        lipschitz = shells.lipschitz_sqrt_psi(profile)
        assert 2.0 ** (2 + 3) == 32.0
        assert c == pytest.approx(max(32.0, 2.0**20 * lipschitz), rel=1e-12)

    def test_beta_shifts_the_exponent(self, profile):
        law = hs.DissipationLaw(alpha=1.0, beta=1.0, dim=2, g=hs.constant(1.0))
        c = interaction_bound_constant(law, profile)
        lipschitz = shells.lipschitz_sqrt_psi(profile)
        assert c == pytest.approx(max(32.0, 2.0**17 * lipschitz), rel=1e-12)

    def test_zero_state_vacuous(self, law_log, profile):
        state = hs.SpectralState(2, 8, np.zeros((2, 17, 17), dtype=complex))
        frame = shell_frame(state, law_log, profile)
        report = verify_interaction_bounds(frame, law_log, profile)
        assert report.satisfied
        assert report.max_ratio == 0.0

    def test_random_state_bounded(self, law_log, profile, random_k8):
        frame = shell_frame(random_k8, law_log, profile)
        report = verify_interaction_bounds(frame, law_log, profile)
        assert report.satisfied


class TestShellOde:
    def test_single_mode_residual(self, law_flat, profile):
        config = hs.RunConfig(cutoff=4, dt=1e-3, t_end=0.02, sample_every=1)
        state = hs.single_mode_state(2, 4, (1, 0), amplitude=0.1)
        st_ = shell_trajectory(hs.integrate(state, law_flat, config), profile)
        report = verify_shell_ode(st_)
        assert report.max_residual < 1e-6

    def test_zero_state_residual(self, law_flat, profile):
        config = hs.RunConfig(cutoff=4, dt=1e-3, t_end=0.01, sample_every=1)
        zero = hs.SpectralState(2, 4, np.zeros((2, 9, 9), dtype=complex))
        st_ = shell_trajectory(hs.integrate(zero, law_flat, config), profile)
        assert verify_shell_ode(st_).max_residual == 0.0

    def test_needs_three_samples(self, law_flat, profile):
        config = hs.RunConfig(cutoff=4, dt=1e-2, t_end=0.01, sample_every=1)
        st_ = shell_trajectory(
            hs.integrate(hs.single_mode_state(2, 4, (1, 0)), law_flat, config), profile
        )
        with pytest.raises(ValueError):
            verify_shell_ode(st_)


def _lattice_tables(state, profile, count=6):
    """Wavevectors, norms, amplitudes, and per-shell masks for test loops."""
    K = state.cutoff
    axes = np.arange(-K, K + 1)
    kx, ky = np.meshgrid(axes, axes, indexing="ij")
    norms = np.sqrt(kx.astype(float) ** 2 + ky**2)
    masks = [np.asarray(profile.shell_weight(n, norms)) for n in range(count)]
    amp = np.sqrt(np.sum(np.abs(state.coeffs) ** 2, axis=0))
    return kx, ky, masks, amp


def _shifted_windows(K, h):
    side = 2 * K + 1
    k_sl = tuple(slice(max(0, s), side + min(0, s)) for s in h)
    q_sl = tuple(slice(max(0, -s), side + min(0, -s)) for s in h)
    return k_sl, q_sl


def _band_sums_reference(state, profile, h, m, n):
    """Both sums of the reflection identity, plus their gross magnitude."""
    K = state.cutoff
    kx, ky, masks, _ = _lattice_tables(state, profile)
    v = state.coeffs
    v_h = v[(slice(None),) + tuple(np.asarray(h) + K)]
    k_sl, q_sl = _shifted_windows(K, h)
    dot = v_h[0] * kx[k_sl] + v_h[1] * ky[k_sl]
    inner = np.sum(v[(slice(None),) + q_sl] * np.conj(v[(slice(None),) + k_sl]), axis=0)
    term = np.imag(dot * inner)
    forward = float(np.sum(masks[m][q_sl] * masks[n][k_sl] * term))
    backward = float(np.sum(masks[m][k_sl] * masks[n][q_sl] * term))
    gross = float(
        np.sum((masks[m][q_sl] * masks[n][k_sl] + masks[m][k_sl] * masks[n][q_sl]) * np.abs(term))
    )
    return forward, backward, gross


class TestStructureIdentities:
    def test_reflection_identity(self, profile, random_k8):
        # swapping the band roles of k and k-h flips the sign of the sum
        for h, m, n in [((1, 0), 1, 2), ((2, -1), 2, 2), ((-1, 3), 2, 3), ((4, 1), 3, 3)]:
            forward, backward, gross = _band_sums_reference(random_k8, profile, h, m, n)
            if gross == 0.0:
                assert forward == backward == 0.0
                continue
            assert abs(forward + backward) < 1e-12 * gross

    def test_cardinality_bound(self, profile, random_k8):
        # sum_h psi_a |v_h| sum_k sqrt(psi_b psi_c(k-h)) |v_k||v_{k-h}|
        #   <= 2^(d(a+3)/2) X_a X_b X_c
        state = random_k8
        K = state.cutoff
        x = shell_energies(state, profile)
        _, _, masks, amp = _lattice_tables(state, profile)
        for a, b, c in [(1, 2, 2), (2, 2, 3), (0, 1, 1), (3, 3, 2)]:
            total = 0.0
            for h_idx in np.argwhere(masks[a] * amp > 0):
                h = h_idx - K
                k_sl, q_sl = _shifted_windows(K, h)
                inner = float(
                    np.sum(
                        np.sqrt(masks[b][k_sl] * masks[c][q_sl]) * amp[k_sl] * amp[q_sl]
                    )
                )
                total += masks[a][tuple(h_idx)] * amp[tuple(h_idx)] * inner
            bound = 2.0 ** (1.0 * (a + 3)) * x[a] * x[b] * x[c]  # d/2 = 1 here
            assert total <= bound * (1 + 1e-12)
