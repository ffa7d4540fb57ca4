import numpy as np
import pytest

from sparseindex.data import NormalizationParams, SyntheticSpec, augment_noise, load_csv, normalize, simulate
from sparseindex.core import Dataset


def test_surfaces_at_known_points():
    # evaluate the three response surfaces through simulate with sigma=0
    from sparseindex.data import _surface

    x = np.zeros((1, 4))
    x[0, :2] = 1.0
    assert _surface("linear", x)[0] == pytest.approx(2.0)
    assert _surface("si", x)[0] == pytest.approx(3.0)
    x3 = np.zeros((1, 4))
    x3[0, :3] = 1.0
    assert _surface("np", x3)[0] == pytest.approx(1.0)


def test_simulate_deterministic_and_bounded():
    spec = SyntheticSpec("si", n=50, p=6, sigma=0.2, seed=42)
    a, b = simulate(spec), simulate(spec)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
    assert np.all(np.abs(a.x) <= 1.0)


def test_simulate_marginals():
    data = simulate(SyntheticSpec("linear", n=100_000, p=2, sigma=0.25, seed=1))
    assert np.all(np.abs(data.x.mean(axis=0)) <= 0.01)
    noise = data.y - 2 * (0.5 * data.x[:, 0] + 0.5 * data.x[:, 1])
    assert 0.25 * 0.97 <= noise.std() <= 0.25 * 1.03


def test_simulate_validation():
    with pytest.raises(ValueError):
        SyntheticSpec("np", n=10, p=2)
    with pytest.raises(ValueError):
        SyntheticSpec("linear", n=10, p=1)
    with pytest.raises(ValueError):
        SyntheticSpec("mystery", n=10, p=3)


def test_load_csv_five_rows_one_na(tmp_path):
    path = tmp_path / "five.csv"
    path.write_text("a,b,y\n1,2,3\n4,NA,6\n7,8,9\n10,11,12\n13,14,15\n", encoding="utf-8")
    data = load_csv(path, "y")
    assert data.n == 4 and data.p == 2


def test_load_csv_drops_incomplete_rows(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text(
        "a,b,y\n1,2,3\n4,NA,6\n7,8,9\n10,?,12\n13,14,\n0.5,0.25,1.5\n",
        encoding="utf-8",
    )
    data = load_csv(path, "y")
    assert data.n == 3 and data.p == 2
    assert np.allclose(data.y, [3.0, 9.0, 1.5])


def test_load_csv_header_only_and_missing_target(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("a,b,y\n", encoding="utf-8")
    with pytest.raises(ValueError, match="empty dataset"):
        load_csv(path, "y")
    with pytest.raises(ValueError, match="target column"):
        load_csv(path, "z")


def test_load_csv_auto_mpg_shape(tmp_path):
    # 392 complete rows plus a handful carrying '?' markers
    rng = np.random.default_rng(2)
    lines = ["c1,c2,c3,c4,c5,c6,c7,mpg"]
    for i in range(398):
        row = [f"{v:.3f}" for v in rng.uniform(0, 100, 8)]
        if i % 67 == 3:  # 6 rows with a missing cell
            row[3] = "?"
        lines.append(",".join(row))
    path = tmp_path / "mpg.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    data = load_csv(path, "mpg")
    assert data.n == 392 and data.p == 7


def test_normalize_maps_train_into_unit_box():
    rng = np.random.default_rng(3)
    train = Dataset(rng.uniform(0, 10, (40, 3)), rng.normal(2.0, 2.0, 40), check_bounds=False)
    normed, params = normalize(train, train)
    assert normed.x.min() >= -1.0 and normed.x.max() <= 1.0
    assert np.isclose(normed.x.max(), 1.0) and np.isclose(normed.x.min(), -1.0)
    assert float(np.std(normed.y)) == pytest.approx(0.5, abs=1e-9)
    # midpoint of a 0..10 column maps to 0
    mid = Dataset(np.full((2, 3), 5.0), np.zeros(2), check_bounds=False)
    params2 = NormalizationParams(np.zeros(3), np.full(3, 10.0), 1.0)
    assert np.allclose(params2.apply(mid).x, 0.0)


def test_normalize_clips_test_overflow():
    train = Dataset(np.array([[0.0], [10.0]]), np.array([0.0, 2.0]), check_bounds=False)
    test = Dataset(np.array([[12.0], [5.0]]), np.array([1.0, 1.0]), check_bounds=False)
    normed, _ = normalize(train, test)
    assert normed.x[0, 0] == 1.0
    assert normed.x[1, 0] == pytest.approx(0.0)


def test_normalize_scale_from_sd():
    train = Dataset(
        np.array([[0.0], [1.0], [2.0], [3.0]]),
        np.array([0.0, 2.0, 4.0, 6.0]),
        check_bounds=False,
    )
    _, params = normalize(train, train)
    assert params.y_scale == pytest.approx(0.5 / np.std([0.0, 2.0, 4.0, 6.0]))


def test_normalize_idempotent_on_train():
    rng = np.random.default_rng(4)
    train = Dataset(rng.uniform(-3, 7, (25, 4)), rng.normal(size=25) * 3, check_bounds=False)
    once, params = normalize(train, train)
    twice, params2 = normalize(once, once)
    assert np.allclose(once.x, twice.x, atol=1e-12)
    assert np.allclose(once.y, twice.y, atol=1e-12)


def test_normalize_constant_column_maps_to_zero():
    x = np.concatenate([np.full((10, 1), 3.0), np.random.default_rng(5).uniform(0, 1, (10, 1))], axis=1)
    train = Dataset(x, np.arange(10.0), check_bounds=False)
    normed, _ = normalize(train, train)
    assert np.all(normed.x[:, 0] == 0.0)


def test_normalize_rejects_constant_response():
    train = Dataset(np.random.default_rng(6).uniform(0, 1, (8, 2)), np.ones(8), check_bounds=False)
    with pytest.raises(ValueError, match="constant"):
        normalize(train, train)


def test_augment_noise_shapes_and_determinism():
    data = simulate(SyntheticSpec("si", n=20, p=3, sigma=0.2, seed=7))
    grown = augment_noise(data, factor=4, seed=11)
    assert grown.p == 12
    assert np.array_equal(grown.x[:, :3], data.x)
    assert np.all((grown.x[:, 3:] >= 0.0) & (grown.x[:, 3:] <= 1.0))
    again = augment_noise(data, factor=4, seed=11)
    assert np.array_equal(grown.x, again.x)

    seven = simulate(SyntheticSpec("si", n=10, p=7, sigma=0.2, seed=8))
    assert augment_noise(seven, factor=4, seed=0).p == 28
    with pytest.raises(ValueError):
        augment_noise(data, factor=1)
