import numpy as np
import pytest

from juliahull.dyadic import (
    DyadicInt,
    PrecisionExhausted,
    add_integer,
    double,
    from_digit_string,
    from_integer,
    from_pattern,
    kappa_map,
    modified_shift,
    negate,
    parse_kappa,
    run_profile,
    sample_f_window,
    shift,
)


def test_from_integer_examples():
    assert from_integer(6, 4).digits == (0, 1, 1, 0)
    assert from_integer(-1, 4).digits == (1, 1, 1, 1)
    # -5 = 11 mod 16
    assert from_integer(-5, 4).digits == (1, 1, 0, 1)


def test_representative_roundtrip():
    for n in (-37, -5, 0, 1, 6, 255, 1023):
        for m in (4, 8, 12):
            assert from_integer(n, m).to_representative() == n % (1 << m)


def test_equality_is_digitwise():
    assert from_integer(6, 4) == from_digit_string("0110")
    assert from_integer(6, 4) != from_integer(6, 5)


def test_digit_validation():
    with pytest.raises(ValueError):
        DyadicInt((0, 2))
    with pytest.raises(ValueError):
        DyadicInt(())


def test_shift_examples():
    assert shift(from_integer(6, 4)).to_representative() == 3
    minus_one = from_integer(-1, 8)
    assert shift(minus_one).digits == (1,) * 7
    assert shift(from_integer(1, 4)).to_representative() == 0
    with pytest.raises(PrecisionExhausted):
        shift(from_integer(1, 1))


def test_modified_shift_examples():
    assert modified_shift(from_integer(0, 4)).to_representative() == 0
    assert modified_shift(from_integer(1, 4)).to_representative() == 1
    assert modified_shift(from_integer(5, 4)).to_representative() == 3
    assert modified_shift(from_integer(-1, 8)).to_representative() == 0


def test_negate_examples():
    assert negate(from_integer(0, 4)).to_representative() == 0
    assert negate(from_integer(1, 4)).digits == (1, 1, 1, 1)
    assert negate(from_integer(5, 4)).to_representative() == 11


def test_modified_shift_is_negated_shift():
    rng = np.random.default_rng(7)
    for _ in range(500):
        bits = tuple(int(b) for b in rng.integers(0, 2, size=16))
        d = DyadicInt(bits)
        lhs = modified_shift(d)
        rhs = negate(shift(negate(d)))
        assert lhs.digits == rhs.digits


def test_kappa_map_examples():
    assert kappa_map(from_integer(0, 8), 6).to_representative() == 0
    # -1 maps to 1: first digit one, then the orbit sticks at zero
    assert kappa_map(from_integer(-1, 8), 6).digits == (1, 0, 0, 0, 0, 0)
    assert kappa_map(from_integer(6, 8), 6).digits == (0, 1, 0, 1, 1, 1)
    with pytest.raises(PrecisionExhausted):
        kappa_map(from_integer(6, 4), 4)


def test_kappa_map_intertwines_shifts():
    rng = np.random.default_rng(11)
    for _ in range(300):
        d = DyadicInt(tuple(int(b) for b in rng.integers(0, 2, size=20)))
        lhs = kappa_map(modified_shift(d), 10)
        rhs = shift(kappa_map(d, 11))
        assert lhs.digits == rhs.digits


def test_kappa_map_digit_formula():
    # beyond the first one-digit, the image digits are the flipped source digits
    rng = np.random.default_rng(13)
    for _ in range(300):
        bits = [0] * int(rng.integers(0, 4)) + [1]
        bits += [int(b) for b in rng.integers(0, 2, size=20 - len(bits))]
        d = DyadicInt(tuple(bits))
        n0 = bits.index(1)
        img = kappa_map(d, 16).digits
        assert all(img[k] == 0 for k in range(n0))
        assert img[n0] == 1
        for n in range(1, 16 - n0):
            assert img[n + n0] == (bits[n + n0] + 1) % 2


def test_kappa_map_run_growth():
    # bounded-run window of width N maps into one of width N + 1
    rng = np.random.default_rng(17)
    for _ in range(1000):
        n_run = int(rng.integers(1, 4))
        d = sample_f_window(rng, n_run, 40)
        img = kappa_map(d, 30)
        assert run_profile(img).max_run <= n_run + 1


def test_run_profile_examples():
    allones = from_integer(-1, 8)
    prof = run_profile(allones, 8)
    assert prof.max_one_run == 8 and prof.max_zero_run == 0
    alt = from_pattern("(10)*", 8)
    prof = run_profile(alt, 8)
    assert prof.max_one_run == 1 and prof.max_zero_run == 1
    prof = run_profile(from_integer(6, 8), 8)
    assert prof.max_zero_run == 5 and prof.max_one_run == 2
    assert prof.within(5) and not prof.within(4)
    with pytest.raises(PrecisionExhausted):
        run_profile(from_integer(6, 4), 8)


def test_sample_f_window_respects_runs():
    rng = np.random.default_rng(19)
    for n_run in (1, 2, 3):
        for _ in range(200):
            d = sample_f_window(rng, n_run, 32)
            assert run_profile(d).max_run <= n_run


def test_parse_kappa_forms():
    assert parse_kappa("6", 8).to_representative() == 6
    assert parse_kappa("-1", 4).digits == (1, 1, 1, 1)
    assert parse_kappa("0110", 8).digits == (0, 1, 1, 0)
    pat = parse_kappa("1(10)*", 9)
    assert pat.digits == (1, 1, 0, 1, 0, 1, 0, 1, 0)
    with pytest.raises(ValueError):
        parse_kappa("10a1", 8)


def test_double_and_add():
    d = from_integer(6, 8)
    assert double(d).to_representative() == 12
    assert double(d).precision == 9
    assert add_integer(d, 1).to_representative() == 7
    assert add_integer(from_integer(0, 8), -1).to_representative() == 255


def test_truncate_accounting():
    d = from_integer(6, 8)
    assert d.truncate(4).digits == (0, 1, 1, 0)
    with pytest.raises(PrecisionExhausted):
        d.truncate(9)
    with pytest.raises(PrecisionExhausted):
        d.truncate(0)
