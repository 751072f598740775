"""Smoke test for the alqa_py extension.

Build and install first:
    pip install --no-build-isolation -e crates/python
then run:
    python python/smoke_test.py
"""

import math
import tempfile

import alqa_py


def main():
    corpus = alqa_py.Corpus.generate(30, seed=3, depth=2)
    ids = corpus.ids()
    assert len(corpus) == len(ids) == 30
    splits = {corpus.split(i) for i in ids}
    assert splits <= {"train", "validation", "test"}, splits

    image = corpus.slice(ids[0], 0)
    mask, inside, outside = alqa_py.segment(image)
    area = sum(map(sum, mask))
    assert 0 < area < len(mask) * len(mask[0])
    print(f"segment: area {area}, means {inside:.3f} / {outside:.3f}")

    names = alqa_py.feature_names()
    values = alqa_py.extract_features(image, mask)
    assert len(values) == len(names)
    assert all(math.isfinite(v) for v in values)
    print(f"features: {len(values)} values")

    rows, labels = [], []
    for i in ids:
        if corpus.split(i) != "train":
            continue
        for z in range(corpus.depth(i)):
            s = corpus.slice(i, z)
            m, _, _ = alqa_py.segment(s)
            rows.append(alqa_py.extract_features(s, m))
            labels.append(corpus.reference(i))
    model = alqa_py.Model.train(rows, labels, kind="svm", r=10)
    proba = model.slice_proba(rows[0])
    assert abs(sum(proba) - 1.0) < 1e-6
    cls, mean = model.predict_dataset(rows[:2])
    assert 1 <= cls <= 5 and len(mean) == 5
    with tempfile.TemporaryDirectory() as d:
        model.save(d)
        again = alqa_py.Model.load(d)
        assert again.slice_proba(rows[0]) == proba
    print(f"model: {len(rows)} training slices, first dataset -> class {cls}")

    assert alqa_py.slice_margin([0.6, 0.3, 0.1, 0.0, 0.0]) - 0.3 < 1e-12
    assert alqa_py.accuracy([1, 2, 3], [1, 2, 4]) == 2 / 3
    auc = alqa_py.roc_auc([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]], [1, 2, 1])
    assert auc == [1.0, 1.0], auc
    assert alqa_py.fleiss_kappa([[1, 3, 5, 2]] * 3) == 1.0
    comps, eig = alqa_py.pca([[0.3 * t, 0.6 * t] for t in range(-5, 6)], 1)
    assert abs(abs(comps[0][0]) - 1 / math.sqrt(5)) < 1e-9

    try:
        alqa_py.slice_margin([0.5, 0.6])
    except ValueError:
        pass
    else:
        raise AssertionError("malformed probabilities accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
