"""Data pipeline contracts: file formats, PCA, patching, and splitting."""

import numpy as np
import pytest

from hsinet import formats, pipeline, synthetic
from hsinet.errors import (
    DataError,
    DimensionError,
    MagicError,
    NumericError,
    ParameterError,
    ShapeError,
    TruncatedError,
)


def _write_scene(tmp_path, rows=20, cols=16, depth=8, classes=3, seed=0):
    cube = synthetic.synthetic_scene(rows=rows, cols=cols, depth=depth,
                                     classes=classes, seed=seed)
    cube_path = tmp_path / "scene.hsc"
    labels_path = tmp_path / "scene.hsg"
    formats.write_hsc(cube_path, cube.values)
    formats.write_hsg(labels_path, cube.labels)
    return cube, cube_path, labels_path


# ---------------------------------------------------------------- formats

def test_hsc_round_trip_and_byte_length(tmp_path):
    rng = np.random.default_rng(1)
    values = rng.normal(size=(5, 7, 3)).astype(np.float32)
    path = tmp_path / "c.hsc"
    formats.write_hsc(path, values)
    data = path.read_bytes()
    assert data[:4] == b"HSC1"
    assert len(data) == 4 + 12 + 4 * 5 * 7 * 3
    # header stores width (M) before height (N)
    assert int.from_bytes(data[4:8], "little") == 7
    assert int.from_bytes(data[8:12], "little") == 5
    assert np.array_equal(formats.read_hsc(path), values)


def test_hsg_round_trip_and_byte_length(tmp_path):
    labels = np.arange(12, dtype=np.uint16).reshape(3, 4)
    path = tmp_path / "g.hsg"
    formats.write_hsg(path, labels)
    data = path.read_bytes()
    assert data[:4] == b"HSG1"
    assert len(data) == 4 + 8 + 2 * 12
    assert np.array_equal(formats.read_hsg(path), labels)


def test_format_error_paths(tmp_path):
    bad = tmp_path / "bad.hsc"
    bad.write_bytes(b"NOPE" + b"\x00" * 20)
    with pytest.raises(MagicError):
        formats.read_hsc(bad)

    header_only = tmp_path / "h.hsc"
    header_only.write_bytes(b"HSC1" + (3).to_bytes(4, "little") * 3)
    with pytest.raises(TruncatedError):
        formats.read_hsc(header_only)

    trailing = tmp_path / "t.hsg"
    labels = np.zeros((2, 2), dtype=np.uint16)
    formats.write_hsg(trailing, labels)
    trailing.write_bytes(trailing.read_bytes() + b"\x00")
    with pytest.raises(TruncatedError):
        formats.read_hsg(trailing)

    zero_dim = tmp_path / "z.hsc"
    zero_dim.write_bytes(b"HSC1" + (0).to_bytes(4, "little") * 3)
    with pytest.raises(DimensionError):
        formats.read_hsc(zero_dim)

    huge = tmp_path / "huge.hsc"
    huge.write_bytes(b"HSC1" + (2 ** 31).to_bytes(4, "little") * 3)
    with pytest.raises(DimensionError):
        formats.read_hsc(huge)


def test_load_cube_checks_geometry_and_finiteness(tmp_path):
    cube, cube_path, labels_path = _write_scene(tmp_path)
    loaded = pipeline.load_cube(cube_path, labels_path)
    assert (loaded.height, loaded.width, loaded.depth) == (20, 16, 8)
    assert loaded.n_classes == 3
    assert np.array_equal(loaded.values, cube.values)

    small = tmp_path / "small.hsg"
    formats.write_hsg(small, np.zeros((4, 4), dtype=np.uint16))
    with pytest.raises(DimensionError):
        pipeline.load_cube(cube_path, small)

    nan_cube = tmp_path / "nan.hsc"
    values = cube.values.copy()
    values[0, 0, 0] = np.nan
    formats.write_hsc(nan_cube, values)
    with pytest.raises(DataError):
        pipeline.load_cube(nan_cube, labels_path)


# -------------------------------------------------------------------- pca

def _random_cube(seed, rows=10, cols=10, depth=8):
    rng = np.random.default_rng(seed)
    # correlated bands so the spectrum of the covariance is interesting
    base = rng.normal(size=(rows, cols, 3))
    mix = rng.normal(size=(3, depth))
    values = (base @ mix + 0.1 * rng.normal(size=(rows, cols, depth)))
    return pipeline.DataCube(width=cols, height=rows, depth=depth,
                             values=values.astype(np.float32),
                             labels=np.ones((rows, cols), dtype=np.uint16))


def test_pca_components_orthonormal_and_sorted():
    cube = _random_cube(3)
    red = pipeline.pca_reduce(cube, 5, whiten=False)
    gram = red.components @ red.components.T
    np.testing.assert_allclose(gram, np.eye(5), atol=1e-5)
    assert np.all(np.diff(red.eigenvalues) <= 1e-12)
    assert red.values.shape == (10, 10, 5)


def test_pca_projected_means_zero_and_whitened_variance_one():
    cube = _random_cube(4, rows=16, cols=12)
    red = pipeline.pca_reduce(cube, 6, whiten=True)
    flat = red.values.reshape(-1, 6).astype(np.float64)
    np.testing.assert_allclose(flat.mean(axis=0), 0.0, atol=1e-4)
    np.testing.assert_allclose(flat.var(axis=0, ddof=1), 1.0, atol=1e-2)


def test_pca_full_rank_reconstruction():
    cube = _random_cube(5)
    red = pipeline.pca_reduce(cube, cube.depth, whiten=False)
    flat = cube.values.reshape(-1, cube.depth).astype(np.float64)
    centered = flat - red.mean
    recon = red.values.reshape(-1, cube.depth).astype(np.float64) @ red.components
    err = np.linalg.norm(recon - centered) / np.linalg.norm(centered)
    assert err < 1e-3


def test_pca_matches_svd_oracle_up_to_sign():
    cube = _random_cube(6)
    bands = 4
    red = pipeline.pca_reduce(cube, bands, whiten=False)
    flat = cube.values.reshape(-1, cube.depth).astype(np.float64)
    centered = flat - flat.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    ours = red.values.reshape(-1, bands)
    theirs = centered @ vt[:bands].T
    for k in range(bands):
        direct = np.abs(ours[:, k] - theirs[:, k]).max()
        flipped = np.abs(ours[:, k] + theirs[:, k]).max()
        assert min(direct, flipped) < 1e-4


def test_pca_identical_bands_concentrate_variance():
    rng = np.random.default_rng(8)
    band = rng.normal(size=(9, 9, 1))
    values = np.repeat(band, 6, axis=2).astype(np.float32)
    cube = pipeline.DataCube(width=9, height=9, depth=6, values=values,
                             labels=np.ones((9, 9), dtype=np.uint16))
    red = pipeline.pca_reduce(cube, 6, whiten=False)
    total = red.eigenvalues.sum()
    assert red.eigenvalues[0] / total > 0.9999


def test_pca_deterministic_with_fixed_sign():
    cube = _random_cube(9)
    a = pipeline.pca_reduce(cube, 5, whiten=True)
    b = pipeline.pca_reduce(cube, 5, whiten=True)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.components, b.components)
    for k in range(5):
        row = a.components[k]
        assert row[np.abs(row).argmax()] > 0


def test_pca_rejects_bad_band_count_and_nonfinite():
    cube = _random_cube(10)
    with pytest.raises(ParameterError):
        pipeline.pca_reduce(cube, 0)
    with pytest.raises(ParameterError):
        pipeline.pca_reduce(cube, cube.depth + 1)
    cube.values[0, 0, 0] = np.inf
    with pytest.raises(NumericError):
        pipeline.pca_reduce(cube, 2)


# ---------------------------------------------------------------- patches

def _reduced_from(values):
    n, m, b = values.shape
    return pipeline.ReducedCube(width=m, height=n, bands=b,
                                values=values.astype(np.float32),
                                mean=np.zeros(b), components=np.eye(b),
                                eigenvalues=np.ones(b))


def test_valid_mode_candidate_count_formula():
    for rows, cols, window in [(5, 5, 3), (8, 6, 5), (9, 9, 9), (12, 7, 3)]:
        values = np.zeros((rows, cols, 2), dtype=np.float32)
        labels = np.ones((rows, cols), dtype=np.uint16)
        red = _reduced_from(values)
        got = pipeline.extract_patches(red, labels, window, padding="valid")
        assert len(got) == (cols - window + 1) * (rows - window + 1)
        assert pipeline.candidate_positions(rows, cols, window) == len(got)


def test_patch_center_equals_cube_value_and_origin():
    rng = np.random.default_rng(2)
    values = rng.normal(size=(7, 6, 3)).astype(np.float32)
    labels = rng.integers(0, 3, size=(7, 6)).astype(np.uint16)
    red = _reduced_from(values)
    for padding in ("valid", "zero"):
        ps = pipeline.extract_patches(red, labels, 3, padding=padding)
        half = 1
        for i in range(len(ps)):
            col, row = ps.origins[i]
            assert labels[row, col] != 0
            assert ps.labels[i] == labels[row, col] - 1
            np.testing.assert_array_equal(ps.patches[i, half, half, :, 0],
                                          values[row, col])


def test_zero_pad_emits_every_labeled_pixel():
    cube = synthetic.synthetic_scene(rows=14, cols=11, depth=6, classes=2, seed=3)
    red = pipeline.pca_reduce(cube, 4)
    ps = pipeline.extract_patches(red, cube.labels, 5, padding="zero")
    assert len(ps) == int((cube.labels != 0).sum())
    assert ps.patches.shape == (len(ps), 5, 5, 4, 1)
    # border patches see zeros where the window hangs off the scene
    first_col, first_row = ps.origins[0]
    if first_row < 2 or first_col < 2:
        patch = ps.patches[0, :, :, :, 0]
        assert (patch == 0).any()


def test_patches_ordered_row_major_and_background_excluded():
    labels = np.zeros((6, 6), dtype=np.uint16)
    labels[1, 4] = 2
    labels[3, 2] = 1
    labels[5, 5] = 1
    values = np.zeros((6, 6, 2), dtype=np.float32)
    ps = pipeline.extract_patches(_reduced_from(values), labels, 3, padding="zero")
    assert [(int(c), int(r)) for c, r in ps.origins] == [(4, 1), (2, 3), (5, 5)]
    assert ps.labels.tolist() == [1, 0, 0]
    assert 0 not in (ps.labels + 1).tolist()


def test_extract_rejects_even_window_and_oversize_valid():
    values = np.zeros((5, 5, 2), dtype=np.float32)
    labels = np.ones((5, 5), dtype=np.uint16)
    red = _reduced_from(values)
    with pytest.raises(ParameterError):
        pipeline.extract_patches(red, labels, 4)
    with pytest.raises(ShapeError):
        pipeline.extract_patches(red, labels, 7, padding="valid")
    with pytest.raises(ParameterError):
        pipeline.extract_patches(red, labels, 3, padding="mirror")


# ------------------------------------------------------------------ split

def _patchset_with_labels(labels):
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    patches = np.zeros((n, 3, 3, 2, 1), dtype=np.float32)
    patches[:, 1, 1, 0, 0] = np.arange(n)
    origins = np.zeros((n, 2), dtype=np.int64)
    return pipeline.PatchSet(patches, labels, origins, 3)


def test_split_thirty_seventy():
    ps = _patchset_with_labels([0] * 100)
    train, test = pipeline.split_stratified(ps, 0.3, seed=1)
    assert len(train) == 30
    assert len(test) == 70


def test_split_is_disjoint_and_exhaustive():
    rng = np.random.default_rng(5)
    ps = _patchset_with_labels(rng.integers(0, 4, size=83))
    train, test = pipeline.split_stratified(ps, 0.25, seed=2)
    train_ids = set(train.patches[:, 1, 1, 0, 0].tolist())
    test_ids = set(test.patches[:, 1, 1, 0, 0].tolist())
    assert len(train_ids & test_ids) == 0
    assert len(train_ids | test_ids) == 83
    for cls in range(4):
        total = int((ps.labels == cls).sum())
        got = int((train.labels == cls).sum())
        assert got == int(np.floor(0.25 * total + 0.5))


def test_split_deterministic_per_seed():
    ps = _patchset_with_labels(np.arange(60) % 3)
    a_train, _ = pipeline.split_stratified(ps, 0.3, seed=7)
    b_train, _ = pipeline.split_stratified(ps, 0.3, seed=7)
    c_train, _ = pipeline.split_stratified(ps, 0.3, seed=8)
    assert np.array_equal(a_train.patches, b_train.patches)
    assert not np.array_equal(a_train.patches, c_train.patches)
    # per-class counts agree across seeds even though membership differs
    for cls in range(3):
        assert (a_train.labels == cls).sum() == (c_train.labels == cls).sum()


def test_split_gives_every_class_at_least_one_train_sample():
    ps = _patchset_with_labels([0] * 50 + [1] * 2)
    train, test = pipeline.split_stratified(ps, 0.1, seed=3)
    assert (train.labels == 1).sum() == 1
    assert (test.labels == 1).sum() == 1


def test_split_rejects_bad_fraction_and_empty_set():
    ps = _patchset_with_labels([0, 1])
    with pytest.raises(ParameterError):
        pipeline.split_stratified(ps, 0.0, seed=1)
    with pytest.raises(ParameterError):
        pipeline.split_stratified(ps, 1.0, seed=1)
    empty = ps.subset(np.array([], dtype=np.int64))
    with pytest.raises(DataError):
        pipeline.split_stratified(empty, 0.5, seed=1)
