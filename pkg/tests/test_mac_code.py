import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from macpolar.base_code import DecodingOrder, base_bit_channels, rate_tuple
from macpolar.channels import (bec, bsc, derived_two_user_mac, merge_outputs, mutual_information,
                               noiseless_mac, product_mac, same_channel)
from macpolar.errors import PreconditionError
from macpolar.mac_code import (MacPolarSpec, construct, encode, expand_order, fer_union_bound,
                               frozen_vectors, intermediate_fraction, mac_bit_channel_exact,
                               outer_z, position_map, separate_split_profile)
from macpolar.polarization import (bit_channel_exact, combine_minus, combine_plus,
                                   erasure_recursion, good_threshold)

from conftest import random_mac
from oracles import joint_by_definition


def split_identities_hold(W, order, n):
    """Length-2N channels are minus/plus of length-N ones, position by position."""
    N = 2**n
    for p in range(order.m * N):
        V = merge_outputs(mac_bit_channel_exact(W, order, n, p))
        lo = mac_bit_channel_exact(W, order, n + 1, 2 * p)
        hi = mac_bit_channel_exact(W, order, n + 1, 2 * p + 1)
        if not (same_channel(lo, combine_minus(V)) and same_channel(hi, combine_plus(V))):
            return False
    return True


def recursion_identities_hold(W, order, n):
    """Every position equals an outer bit-channel of its base channel."""
    K = 2**n // order.L
    l = order.L.bit_length() - 1
    base = base_bit_channels(W, order)
    for p in range(order.m * 2**n):
        k, s = divmod(p, K)
        if not same_channel(mac_bit_channel_exact(W, order, n, p),
                            bit_channel_exact(base[k], n - l, s)):
            return False
    return True


def test_expand_order():
    e = expand_order(DecodingOrder.parse("1,2,1,2"), 3)
    assert e.word == (1, 1, 1, 2, 2, 2, 1, 1, 1, 2, 2, 2)
    with pytest.raises(PreconditionError):
        expand_order(DecodingOrder((1,)), 0)


@pytest.mark.parametrize("word,n", [("1,2,2,1", 1), ("2,1,1,2", 2), ("1,2,3,1,2,3", 1)])
def test_split_identities(word, n, rng):
    order = DecodingOrder.parse(word)
    W = random_mac(rng, order.m, 2)
    assert split_identities_hold(W, order, n)


@pytest.mark.parametrize("word,n", [("1,2,2,1", 2), ("1,2,3,1,2,3", 2), ("2,1", 2)])
def test_recursion_identities(word, n, rng):
    order = DecodingOrder.parse(word)
    W = random_mac(rng, order.m, 2)
    assert recursion_identities_hold(W, order, n)


def test_position_map_is_bijection():
    order = DecodingOrder.parse("2,1,3,3,1,2")
    users, idx = position_map(order, 4)
    pairs = set(zip(users.tolist(), idx.tolist()))
    assert len(pairs) == 3 * 16 == len(users)
    spec = construct(noiseless_mac(3), order, 4)
    for p, (j, i) in enumerate(zip(users, idx)):
        assert spec.user_index(p) == (j, i)
        assert spec.global_position(j, i) == p


def test_encode_is_linear_and_separable(rng):
    spec = construct(noiseless_mac(2), DecodingOrder.parse("1,2,1,2"), 3)
    k = [len(s) for s in spec.info_sets]
    a = [rng.integers(0, 2, kj, dtype=np.uint8) for kj in k]
    b = [rng.integers(0, 2, kj, dtype=np.uint8) for kj in k]
    xa, xb = encode(spec, a), encode(spec, b)
    xab = encode(spec, [p ^ q for p, q in zip(a, b)])
    assert np.array_equal(xab, xa ^ xb)  # frozen bits are zero
    mixed = encode(spec, [a[0], b[1]])
    assert np.array_equal(mixed[0], xa[0]) and np.array_equal(mixed[1], xb[1])
    with pytest.raises(PreconditionError):
        encode(spec, [a[0]])


def test_noiseless_construction_uses_every_bit():
    spec = construct(noiseless_mac(3), DecodingOrder.parse("1,2,3,1,2,3"), 5)
    assert np.array_equal(spec.rates, np.ones(3))
    assert fer_union_bound(spec) == 0.0


def test_threshold_union_bound_algebra():
    W = derived_two_user_mac(bec(0.3))
    spec = construct(W, DecodingOrder.parse("1,2,1,2"), 6, beta=0.3)
    N = spec.N
    assert fer_union_bound(spec) < 2.0 ** (-(N**0.3))
    assert np.all(spec.z[0, spec.info_sets[0]] < good_threshold(N, 0.3, users=2))
    empty = MacPolarSpec(order=spec.order, n=6, info_sets=([], []),
                         frozen_values=frozen_vectors(2, N), z=spec.z)
    assert fer_union_bound(empty) == 0.0


def test_bec_product_z_matches_erasure_recursion():
    # for a product MAC each user polarizes its own BEC
    W = product_mac([bec(0.2), bec(0.6)])
    spec = construct(W, DecodingOrder.parse("1,2,1,2"), 5)
    assert np.allclose(spec.z[0], erasure_recursion(0.2, 5), atol=1e-12)
    assert np.allclose(spec.z[1], erasure_recursion(0.6, 5), atol=1e-12)


def test_target_selection_sizes():
    W = derived_two_user_mac(bec(0.4))
    order = DecodingOrder.parse("1,2,1,2")
    spec = construct(W, order, 6, selection="target")
    assert np.array_equal([len(s) for s in spec.info_sets],
                          np.rint(64 * rate_tuple(W, order)).astype(int))


def test_monte_carlo_outer_z_agrees_with_exact():
    W = derived_two_user_mac(bec(0.4))
    order = DecodingOrder.parse("1,2,1,2")
    exact, _ = outer_z(W, order, 6)
    est, hw = outer_z(W, order, 6, method="montecarlo", trials=4000, seed=1)
    assert np.all(np.abs(est - exact) <= 3 * hw)


def test_monte_carlo_outer_z_on_noisy_channel(rng):
    W = random_mac(rng, 2, 2)
    order = DecodingOrder.parse("2,1,1,2")
    exact, _ = outer_z(W, order, 3)
    est, hw = outer_z(W, order, 3, method="montecarlo", trials=3000, seed=2)
    assert np.mean(np.abs(est - exact) <= 3 * hw) >= 0.95
    assert np.all(np.abs(est - exact) <= 5 * hw)


def test_construct_validation():
    W = noiseless_mac(2)
    with pytest.raises(PreconditionError):
        construct(W, DecodingOrder.parse("1,2,3"), 3)
    with pytest.raises(PreconditionError):
        construct(W, DecodingOrder.parse("1,2"), 3, beta=0.7)
    with pytest.raises(PreconditionError):
        construct(W, DecodingOrder.parse("1,2,1,2"), 0)
    with pytest.raises(PreconditionError):
        construct(W, DecodingOrder.parse("1,2"), 3, selection="best")


def test_spec_json_round_trip(tmp_path):
    W = derived_two_user_mac(bsc(0.05))
    spec = construct(W, DecodingOrder.parse("2,1,1,2"), 5, frozen_seed=7)
    path = tmp_path / "code.json"
    spec.save(path)
    back = MacPolarSpec.load(path)
    assert back.order == spec.order and back.n == spec.n
    for a, b in zip(back.info_sets, spec.info_sets):
        assert np.array_equal(a, b)
    for a, b in zip(back.frozen_values, spec.frozen_values):
        assert np.array_equal(a, b)
    assert np.allclose(back.z, spec.z)


def test_separate_split_profile_small_cases():
    ones = separate_split_profile(bsc(0.0), 3)
    assert np.allclose(ones, [[1, 1, 2]] * 8)
    assert separate_split_profile(bec(0.5), 0)[0, 2] == pytest.approx(1.0)


def mutual_info_of_position(P, k):
    """I(bit k; y, bits before k) from a joint table in decoding order."""
    def h(prefix):
        Q = P.reshape(2**prefix, -1, P.shape[1]).sum(axis=1).ravel()
        Q = Q[Q > 0]
        return -(Q * np.log2(Q)).sum()
    return 1.0 + h(k) - h(k + 1)


@pytest.mark.parametrize("n", [1, 2])
def test_separate_split_profile_by_brute_force(n):
    """Each user runs its own length-N transform; bits are interleaved by time index."""
    Wp = bsc(0.12)
    W = derived_two_user_mac(Wp)
    N = 2**n
    prof = separate_split_profile(Wp, n)
    # v_i decoded just before u_i: u_i sees y, u^{i-1}, v^i
    P = joint_by_definition(W, (2, 1) * N)
    Q = joint_by_definition(W, (1, 2) * N)
    for i in range(N):
        assert prof[i, 0] == pytest.approx(mutual_info_of_position(P, 2 * i + 1), abs=1e-12)
        assert prof[i, 1] == pytest.approx(mutual_info_of_position(Q, 2 * i + 1), abs=1e-12)
        both = mutual_info_of_position(Q, 2 * i) + mutual_info_of_position(Q, 2 * i + 1)
        assert prof[i, 2] == pytest.approx(both, abs=1e-12)


def test_intermediate_fraction_shrinks():
    fr = [intermediate_fraction(separate_split_profile(bec(0.5), n)) for n in (4, 6, 8)]
    assert fr[0] > fr[1] > fr[2]


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 0.45))
def test_derived_mac_base_channels_for_single_bit(p):
    # with L = 1 the two corners are (I-, I+) and the square point (I, I)
    Wp = bsc(p)
    W = derived_two_user_mac(Wp)
    Im, Ip = mutual_information(combine_minus(Wp)), mutual_information(combine_plus(Wp))
    assert rate_tuple(W, DecodingOrder((1, 2))) == pytest.approx([Im, Ip], abs=1e-12)
    assert rate_tuple(W, DecodingOrder((2, 1))) == pytest.approx(
        [mutual_information(Wp)] * 2, abs=1e-12)
