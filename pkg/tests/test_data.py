import numpy as np
import pytest
from hypothesis import given, strategies as st

from cbm_advbench.data import (
    ClassSignal,
    Label,
    LabeledDataset,
    SplitSpec,
    SyntheticConfig,
    kfold_partition,
    load_feature_csv,
    split_dataset,
    split_indices,
    synthesize_bearing_dataset,
    write_feature_csv,
)
from cbm_advbench.errors import ClassTooSmall, ConfigError, InvalidK, ParseError, UnknownLabel
from cbm_advbench.evaluation import cross_validate
from cbm_advbench.features import FEATURE_NAMES
from cbm_advbench.models import TrainConfig


@pytest.mark.parametrize(
    "text,label",
    [("Ball", Label.BALL), ("inner race", Label.INNER_RACE), ("InnerRace", Label.INNER_RACE),
     ("outer_race", Label.OUTER_RACE), ("OR", Label.OUTER_RACE), ("normal", Label.NORMAL),
     ("healthy", Label.NORMAL)],
)
def test_label_aliases(text, label):
    assert Label.parse(text) is label


def test_unknown_label():
    with pytest.raises(UnknownLabel):
        Label.parse("cage")


def test_label_names():
    assert [lab.canonical for lab in Label] == ["ball", "inner_race", "outer_race", "normal"]
    assert Label.OUTER_RACE.display == "OuterRace"


def _labels(counts):
    return np.concatenate([np.full(n, c) for c, n in enumerate(counts)])


def test_split_100_per_class():
    sub, att, vic = split_indices(_labels([100] * 4), SplitSpec())
    y = _labels([100] * 4)
    for part, want in ((sub, 40), (att, 20), (vic, 40)):
        assert list(np.bincount(y[part], minlength=4)) == [want] * 4


def test_split_table_sizes_partition_exactly():
    counts = [8162, 8162, 2056, 3371]
    y = _labels(counts)
    parts = split_indices(y, SplitSpec(seed=4))
    assert sum(p.size for p in parts) == 21751
    merged = np.sort(np.concatenate(parts))
    assert np.array_equal(merged, np.arange(21751))
    per_class = sum(np.bincount(y[p], minlength=4) for p in parts)
    assert list(per_class) == counts


@given(st.lists(st.integers(3, 60), min_size=1, max_size=4), st.integers(0, 2**31))
def test_split_is_stratified_partition(counts, seed):
    y = _labels(counts)
    sub, att, vic = split_indices(y, SplitSpec(seed=seed))
    assert np.array_equal(np.sort(np.concatenate([sub, att, vic])), np.arange(y.size))
    for c, n in enumerate(counts):
        assert np.sum(y[sub] == c) == int(np.floor(0.4 * n + 0.5))


def test_split_rejects_tiny_class():
    with pytest.raises(ClassTooSmall):
        split_indices(_labels([10, 2, 10, 10]), SplitSpec())


def test_split_fractions_must_sum_to_one():
    with pytest.raises(ConfigError):
        SplitSpec(0.5, 0.3, 0.3)


def test_split_dataset_is_seeded(small_dataset):
    a = split_dataset(small_dataset, SplitSpec(seed=9))
    b = split_dataset(small_dataset, SplitSpec(seed=9))
    c = split_dataset(small_dataset, SplitSpec(seed=10))
    assert np.array_equal(a[0].X, b[0].X)
    assert not np.array_equal(a[0].X, c[0].X)


@given(st.integers(2, 300), st.integers(2, 10), st.integers(0, 1000))
def test_kfold_union_and_disjointness(n, k, seed):
    if n < k:
        with pytest.raises(InvalidK):
            kfold_partition(n, k, seed)
        return
    folds = kfold_partition(n, k, seed)
    assert len(folds) == k
    vals = [set(v.tolist()) for _, v in folds]
    assert set().union(*vals) == set(range(n))
    assert sum(len(v) for v in vals) == n
    for train, val in folds:
        assert set(train.tolist()).isdisjoint(val.tolist())
        assert set(train.tolist()) | set(val.tolist()) == set(range(n))


def test_kfold_rejects_k_below_two():
    with pytest.raises(InvalidK):
        kfold_partition(10, 1)


def test_feature_csv_round_trip(tmp_path, small_dataset):
    path = tmp_path / "f.csv"
    write_feature_csv(path, small_dataset)
    back = load_feature_csv(path)
    assert np.array_equal(back.X, small_dataset.X)
    assert np.array_equal(back.y, small_dataset.y)
    assert path.read_text().splitlines()[1].endswith(",ball")


def test_feature_csv_errors_name_line(tmp_path):
    header = ",".join(FEATURE_NAMES) + ",label\n"
    path = tmp_path / "f.csv"
    path.write_text(header + ",".join(["1"] * 12) + ",ball\n" + ",".join(["1"] * 11) + ",x,ball\n")
    with pytest.raises(ParseError) as err:
        load_feature_csv(path)
    assert err.value.line == 3
    path.write_text(header + ",".join(["1"] * 12) + ",cage\n")
    with pytest.raises(UnknownLabel, match="line 2"):
        load_feature_csv(path)
    path.write_text("a,b\n")
    with pytest.raises(ParseError):
        load_feature_csv(path)


def test_dataset_is_read_only(small_dataset):
    with pytest.raises(ValueError):
        small_dataset.X[0, 0] = 1.0


def test_dataset_shape_checks():
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((3, 11)), np.zeros(3))


def test_generator_is_deterministic():
    cfg = SyntheticConfig(counts={lab: 12 for lab in Label}, seed=5)
    a = synthesize_bearing_dataset(cfg)[1]
    b = synthesize_bearing_dataset(cfg)[1]
    assert np.array_equal(a.X, b.X)
    assert list(a.class_counts()) == [12] * 4


def test_generator_rejects_carrier_above_nyquist():
    classes = dict(SyntheticConfig().classes)
    classes[Label.BALL] = ClassSignal(7000.0, 141.1, 0.2)
    with pytest.raises(ConfigError, match="Nyquist"):
        SyntheticConfig(classes=classes)


def _knn_cv(ds):
    # constant columns carry no information; map them to zero instead of scaling
    std = ds.X.std(axis=0)
    z = np.where(std > 0, (ds.X - ds.X.mean(axis=0)) / np.where(std > 0, std, 1.0), 0.0)
    z = ds.with_features(z, standardized=True)
    return cross_validate("knn", TrainConfig(), z, 5).mean_f1


def test_default_corpus_is_separable():
    assert _knn_cv(synthesize_bearing_dataset(SyntheticConfig())[1]) >= 0.95


def test_without_impulses_faults_are_indistinguishable():
    base = SyntheticConfig()
    classes = {lab: ClassSignal(cs.carrier_hz, cs.impulse_hz, 0.0, cs.noise_std) for lab, cs in base.classes.items()}
    ds = synthesize_bearing_dataset(SyntheticConfig(classes=classes))[1]
    assert _knn_cv(ds) <= 0.5
