import numpy as np
import pytest

from qsmote_pgm.encodings import EncodingConfig
from qsmote_pgm.errors import ModelFormatError
from qsmote_pgm.kpgm import KPGMClassifier, kpgm_scores
from qsmote_pgm.logistic import fit_logistic
from qsmote_pgm.pgm import HelstromClassifier, PGMClassifier, pgm_scores
from qsmote_pgm.serialization import load_model, predict_labels, save_model


@pytest.fixture
def data():
    rng = np.random.default_rng(0)
    X = rng.random((30, 3))
    y = (X[:, 0] > 0.5).astype(int)
    return X, y, rng.random((10, 3))


@pytest.mark.parametrize("precision", ["double", "single"])
def test_povm_round_trip_is_exact(tmp_path, data, precision):
    X, y, Q = data
    clf = PGMClassifier(EncodingConfig("stereographic", 1.5, precision), 2).fit(X, y)
    path = tmp_path / "m.npz"
    save_model(path, clf.povm_, {"scaler_min": np.zeros(3)})
    model, pre = load_model(path)
    assert model.operators.dtype == clf.povm_.operators.dtype
    assert model.operators.tobytes() == clf.povm_.operators.tobytes()
    assert model.encoding == clf.encoding and model.n_copies == 2
    assert model.rank_tolerance == clf.povm_.rank_tolerance
    np.testing.assert_array_equal(pgm_scores(model, Q)[0], pgm_scores(clf.povm_, Q)[0])
    np.testing.assert_array_equal(pre["scaler_min"], np.zeros(3))


def test_gram_round_trip(tmp_path, data):
    X, y, Q = data
    clf = KPGMClassifier("amplitude", 3).fit(X, y)
    save_model(tmp_path / "k.npz", clf.model_)
    model, pre = load_model(tmp_path / "k.npz")
    assert pre == {}
    np.testing.assert_array_equal(kpgm_scores(model, Q), kpgm_scores(clf.model_, Q))
    for a, b in zip(model.class_index_sets, clf.model_.class_index_sets):
        np.testing.assert_array_equal(a, b)


def test_helstrom_and_logistic_round_trip(tmp_path, data):
    X, y, Q = data
    h = HelstromClassifier("amplitude", 2).fit(X, y)
    save_model(tmp_path / "h.npz", h.predictor_)
    model, _ = load_model(tmp_path / "h.npz")
    np.testing.assert_array_equal(predict_labels(model, Q), h.predict(Q))

    lr = fit_logistic(X, y)
    save_model(tmp_path / "l.npz", lr)
    model, _ = load_model(tmp_path / "l.npz")
    assert model.intercept_ == lr.intercept_
    np.testing.assert_array_equal(model.predict_proba(Q), lr.predict_proba(Q))


def test_bad_files(tmp_path):
    junk = tmp_path / "junk.npz"
    junk.write_bytes(b"not an archive")
    with pytest.raises(ModelFormatError):
        load_model(junk)
    np.savez(tmp_path / "other.npz", a=np.zeros(2))
    with pytest.raises(ModelFormatError, match="header"):
        load_model(tmp_path / "other.npz")
    with pytest.raises(TypeError):
        save_model(tmp_path / "x.npz", object())
