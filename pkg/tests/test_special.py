import numpy as np
import pytest

from perilame.special import erfc, exp1

# reference values computed with 50-digit arithmetic (mpmath)
ERFC_REFS = [
    (1e-08, 0.9999999887162083290449),
    (0.001, 0.9988716212090307635966),
    (0.1, 0.8875370839817151015953),
    (0.3, 0.6713732405408725838104),
    (0.46875, 0.5073865267820620084118),
    (0.5, 0.4795001221869534623173),
    (1.0, 0.1572992070502851306588),
    (2.0, 0.004677734981047265837931),
    (3.5, 7.430983723414127455237e-7),
    (4.0, 1.541725790028001885216e-8),
    (5.0, 1.537459794428034850188e-12),
    (8.0, 1.122429717298292707997e-29),
    (12.0, 1.35626116920590421278e-64),
    (-0.3, 1.32862675945912741619),
    (-1.5, 1.966105146475310727067),
    (-4.5, 1.999999999803383955846),
]

EXP1_REFS = [
    (1e-10, 22.44863526513892394314),
    (1e-06, 13.23829589306249128881),
    (0.001, 6.331539364136149311207),
    (0.05, 2.467898488509974316756),
    (0.3, 0.9056766516758467398461),
    (0.7, 0.3737688432335091757706),
    (1.0, 0.2193839343955202736772),
    (1.0000001, 0.2193838976075798138478),
    (1.5, 0.1000195824066326519019),
    (2.5, 0.02491491787026973549563),
    (5.0, 0.001148295591275325797331),
    (10.0, 0.000004156968929685324277403),
    (30.0, 3.021552010688812544816e-15),
    (100.0, 3.683597761682032180235e-46),
    (500.0, 1.422076782253638422098e-220),
]


@pytest.mark.parametrize("x,ref", ERFC_REFS)
def test_erfc_reference_values(x, ref):
    assert abs(erfc(x) - ref) <= 1e-14 * abs(ref)


@pytest.mark.parametrize("x,ref", EXP1_REFS)
def test_exp1_reference_values(x, ref):
    assert abs(exp1(x) - ref) <= 1e-14 * abs(ref)


def test_vectorized_matches_scalar():
    xs = np.array([0.01, 0.3, 1.2, 3.4, 9.0])
    assert np.allclose(erfc(xs), [erfc(float(x)) for x in xs], rtol=0, atol=0)
    assert np.allclose(exp1(xs), [exp1(float(x)) for x in xs], rtol=0, atol=0)


def test_exp1_branch_seams():
    # accuracy must not degrade at the series / continued-fraction splits
    import mpmath

    for seam in (1.5, 4.0, 12.0):
        for x in np.linspace(seam - 0.05, seam + 0.05, 11):
            ref = float(mpmath.e1(x))
            assert abs(exp1(x) - ref) <= 2e-14 * ref


def test_exp1_rejects_nonpositive():
    with pytest.raises(ValueError):
        exp1(0.0)
    with pytest.raises(ValueError):
        exp1(np.array([1.0, -2.0]))


def test_erfc_limits():
    assert erfc(0.0) == 1.0
    assert erfc(40.0) == 0.0  # underflow region
    assert erfc(-40.0) == 2.0
