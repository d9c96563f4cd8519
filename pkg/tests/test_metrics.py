import math
from itertools import product

import numpy as np
import pytest

from istbc.constellation import make_qam
from istbc.designs import alamouti_design, golden_design, integer_design, normalize
from istbc.errors import BudgetError
from istbc.metrics import (SPECTRUM_CSV_HEADER, code_papr, difference_spectrum,
                           normalized_min_trace, papr_qam_closed_form,
                           reference_papr_note, spectrum_csv_row)


def test_papr_closed_form_values():
    assert papr_qam_closed_form(4) == 1.0
    assert papr_qam_closed_form(16) == pytest.approx(1.8, abs=1e-15)
    assert papr_qam_closed_form(4096) == pytest.approx(3 * 63 / 65, rel=1e-14)
    assert 10 * math.log10(papr_qam_closed_form(4096)) == pytest.approx(4.635, abs=5e-4)


def test_papr_closed_form_rejects_non_square():
    for bad in (8, 32, 2, 15, 0):
        with pytest.raises(ValueError):
            papr_qam_closed_form(bad)


@pytest.mark.parametrize("n,m,expect", [
    (2, 2, 2.55), (2, 4, 4.21), (2, 6, 4.62),
    (3, 2, 3.67), (3, 4, 4.63), (3, 6, 4.75),
    (4, 2, 4.22), (4, 4, 4.73),
])
def test_code_papr_integer_rows(n, m, expect):
    db = code_papr(integer_design(n, m), make_qam(m))
    assert db == pytest.approx(expect, abs=0.03)


def test_code_papr_golden_rows():
    g = golden_design()
    assert code_papr(g, make_qam(2)) == pytest.approx(2.77, abs=0.05)
    assert code_papr(g, make_qam(4)) == pytest.approx(5.32, abs=0.05)
    assert code_papr(g, make_qam(6)) == pytest.approx(6.45, abs=0.05)


def test_code_papr_alamouti_equals_qam_papr():
    # entries are bare symbols, so the code PAPR is the constellation PAPR
    for m in (2, 4):
        db = code_papr(alamouti_design(), make_qam(m))
        assert db == pytest.approx(10 * math.log10(papr_qam_closed_form(2 ** m)), abs=1e-12)


def test_flagged_discrepancy_note():
    db = code_papr(integer_design(4, 6), make_qam(6))
    assert db == pytest.approx(10 * math.log10(3 * 4095 / 4097), rel=1e-12)
    note = reference_papr_note("ic", 4, 6, db)
    assert note is not None and "5.59" in note
    assert reference_papr_note("ic", 2, 2, 2.5527) is None


def brute_force_spectrum(design, constellation):
    """Literal enumeration over every difference vector (oracle)."""
    top = int(constellation.levels[-1])
    deltas = list(range(-2 * top, 2 * top + 1, 2))
    combos = np.array(list(product(deltas, repeat=design.k_real)), dtype=np.float64)
    mats = design.encode_real(combos)
    a = mats[:, 0, 0]
    d = mats[:, 1, 1]
    b = mats[:, 0, 1]
    c = mats[:, 1, 0]
    det = a * d - b * c
    det_re = np.rint(det.real).astype(np.int64)
    det_im = np.rint(det.imag).astype(np.int64)
    zero = (det_re == 0) & (det_im == 0)
    nonzero_delta = np.any(combos != 0, axis=1)
    traces = np.sum(np.abs(mats) ** 2, axis=(1, 2))
    det_sq = det_re.astype(np.float64) ** 2 + det_im.astype(np.float64) ** 2
    return {
        "count": combos.shape[0],
        "zero_det_nonzero_delta": int(np.count_nonzero(zero & nonzero_delta)),
        "raw_min_trace": float(traces[nonzero_delta].min()),
        "raw_min_det_sq": float(det_sq[~zero].min()),
    }


def test_spectrum_4qam_against_brute_force_oracle():
    design = integer_design(2, 2)
    q = make_qam(2)
    oracle = brute_force_spectrum(design, q)
    assert oracle["count"] == 3 ** 8 == 6561
    assert oracle["zero_det_nonzero_delta"] == 32
    assert oracle["raw_min_trace"] == 8.0
    assert oracle["raw_min_det_sq"] == 16.0

    spec = difference_spectrum(design, q)
    c = normalize(design, q)
    assert spec.exhaustive
    assert spec.distinct_count == oracle["count"]
    assert spec.zero_det_count == oracle["zero_det_nonzero_delta"]
    assert spec.min_trace == pytest.approx(oracle["raw_min_trace"] * c * c, abs=1e-15)
    assert spec.min_det_sq == pytest.approx(oracle["raw_min_det_sq"] * c ** 4, abs=1e-15)
    assert spec.min_trace == pytest.approx(0.4, abs=1e-12)
    assert spec.min_det_sq == pytest.approx(0.04, abs=1e-12)
    assert spec.zero_det_percent == pytest.approx(100 * 32 / 6561, rel=1e-12)


def test_spectrum_16qam_against_vectorized_brute_force():
    design = integer_design(2, 4)
    q = make_qam(4)
    oracle = brute_force_spectrum(design, q)
    spec = difference_spectrum(design, q)
    assert spec.distinct_count == oracle["count"] == 7 ** 8
    assert spec.zero_det_count == oracle["zero_det_nonzero_delta"]
    c = normalize(design, q)
    assert spec.min_trace == pytest.approx(oracle["raw_min_trace"] * c * c, rel=1e-12)
    assert spec.min_det_sq == pytest.approx(oracle["raw_min_det_sq"] * c ** 4, rel=1e-12)
    # published-table row
    assert spec.min_trace == pytest.approx(0.2, abs=1e-12)
    assert spec.min_det_sq == pytest.approx(1.384e-4, abs=5e-8)
    assert spec.zero_det_percent == pytest.approx(0.0011, abs=5e-5)


def test_spectrum_distinct_count_formula():
    assert difference_spectrum(integer_design(2, 2), make_qam(2)).distinct_count == 3 ** 8
    assert difference_spectrum(integer_design(2, 4), make_qam(4)).distinct_count == 7 ** 8
    assert difference_spectrum(integer_design(2, 6), make_qam(6)).distinct_count == 15 ** 8
    assert 15 ** 8 == 2562890625


def test_spectrum_64qam_row():
    spec = difference_spectrum(integer_design(2, 6), make_qam(6))
    assert spec.min_trace == pytest.approx(0.047, abs=1e-3)  # printed value truncates 260/5460
    assert spec.min_det_sq == pytest.approx(5.3e-7, abs=1e-8)
    # measured zero-determinant census for this construction; see the
    # 4-QAM/16-QAM oracle agreement above for the method's validation
    assert spec.zero_det_count == 992


def test_spectrum_scaling_covariance():
    # the reported normalized values are invariant to the unnormalized
    # representation: doubling every basis matrix quarters c^2 and leaves
    # the spectrum unchanged
    from istbc.designs import LinearDesign

    design = integer_design(2, 2)
    q2 = make_qam(2)
    doubled = LinearDesign(n=2, k_real=design.k_real, basis=2.0 * design.basis,
                           name="ic2x", exact_integer=True, alpha=design.alpha,
                           m=design.m)
    s1 = difference_spectrum(design, q2)
    s2 = difference_spectrum(doubled, q2)
    assert s2.norm_scale == pytest.approx(s1.norm_scale / 2, rel=1e-12)
    assert s2.min_trace == pytest.approx(s1.min_trace, rel=1e-12)
    assert s2.min_det_sq == pytest.approx(s1.min_det_sq, rel=1e-12)
    assert s2.zero_det_count == s1.zero_det_count
    assert s2.distinct_count == s1.distinct_count
    # raw (unnormalized) minima double-check against the known integers
    assert s1.min_trace / s1.norm_scale ** 2 == pytest.approx(8.0, rel=1e-12)
    assert s1.min_det_sq / s1.norm_scale ** 4 == pytest.approx(16.0, rel=1e-12)


def test_spectrum_zero_det_is_integer_exact():
    # dets are classified in integer arithmetic: the reported census is an int
    spec = difference_spectrum(integer_design(2, 2), make_qam(2))
    assert isinstance(spec.zero_det_count, int)
    assert spec.zero_det_count >= 1


def test_spectrum_golden_nonvanishing():
    spec = difference_spectrum(golden_design(), make_qam(2))
    assert spec.zero_det_count == 0
    assert spec.min_det_sq > 0.1


def test_spectrum_budget_gates():
    with pytest.raises(ValueError):
        difference_spectrum(integer_design(3, 2), make_qam(2))  # n=3 exhaustive rejected
    with pytest.raises(ValueError):
        difference_spectrum(integer_design(2, 2), make_qam(2), mode="nope")
    with pytest.raises(ValueError):
        difference_spectrum(integer_design(2, 2), make_qam(2), mode="sampled", budget=0)
    with pytest.raises(BudgetError):
        difference_spectrum(integer_design(2, 8), make_qam(8))  # 31^8 > 2^32
    difference_spectrum(integer_design(2, 8), make_qam(8), allow_long=True)


def test_sampled_spectrum_matches_layer_search_min_trace():
    design = integer_design(3, 2)
    q = make_qam(2)
    spec = difference_spectrum(design, q, mode="sampled", budget=5000, seed=1)
    assert not spec.exhaustive
    assert spec.min_trace == pytest.approx(normalized_min_trace(design, q), rel=1e-12)
    assert spec.distinct_count == 3 ** design.k_real
    assert spec.min_det_sq > 0


def test_sampled_spectrum_deterministic():
    design = integer_design(3, 2)
    q = make_qam(2)
    a = difference_spectrum(design, q, mode="sampled", budget=2000, seed=5)
    b = difference_spectrum(design, q, mode="sampled", budget=2000, seed=5)
    assert a == b


def test_min_trace_layer_search_matches_full_enumeration():
    # layer decomposition: the DFS over one layer equals the global minimum
    for m in (2, 4):
        design = integer_design(2, m)
        q = make_qam(m)
        oracle = brute_force_spectrum(design, q)
        c = normalize(design, q)
        assert normalized_min_trace(design, q) == pytest.approx(
            oracle["raw_min_trace"] * c * c, rel=1e-12)


def test_min_trace_published_values():
    assert normalized_min_trace(integer_design(2, 2), make_qam(2)) == pytest.approx(0.4, abs=1e-12)
    assert normalized_min_trace(integer_design(2, 4), make_qam(4)) == pytest.approx(0.2, abs=1e-12)
    assert normalized_min_trace(integer_design(2, 6), make_qam(6)) == pytest.approx(0.047, abs=1e-3)


def test_min_trace_rejects_non_integer_designs():
    with pytest.raises(ValueError):
        normalized_min_trace(golden_design(), make_qam(2))


def test_spectrum_csv_row_shape():
    spec = difference_spectrum(integer_design(2, 2), make_qam(2))
    row = spectrum_csv_row(spec)
    assert len(row.split(",")) == len(SPECTRUM_CSV_HEADER.split(","))
    assert row.split(",")[0] == "6561"
    d = spec.to_dict()
    assert list(d.keys()) == SPECTRUM_CSV_HEADER.split(",")
