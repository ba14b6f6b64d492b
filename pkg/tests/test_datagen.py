import gzip
import struct

import numpy as np
import pytest

from app.core.errors import CapacityError, IntegrityError, InvalidArgumentError, LabelError, ParseError
from datagen.blobs import TEST_STREAM, TRAIN_STREAM, blob_means, gen_blobs
from datagen.dataset import OOD_LABEL, Dataset, export_csv
from datagen.idx import load_idx, write_idx
from datagen.longtail import ImbalanceProfile, make_longtail_profile, subsample_longtail
from datagen.ood import gen_ood
from evaluation.metrics import ScoreSet, auroc
from evaluation.scores import fit_class_stats, mahalanobis_score
from schemas.data_schemas import BlobSpec


def _spec(**overrides) -> BlobSpec:
    values = dict(num_classes=10, dim=8, samples_per_class=100, mean_scale=3.0, noise_std=1.0, seed=5)
    values.update(overrides)
    return BlobSpec(**values)


class TestBlobs:
    def test_zero_noise_collapses_to_means(self):
        spec = _spec(noise_std=0.0)
        ds = gen_blobs(spec)
        np.testing.assert_array_equal(ds.features, blob_means(spec)[ds.labels])

    def test_same_seed_bitwise_identical(self):
        a, b = gen_blobs(_spec()), gen_blobs(_spec())
        assert a.features.tobytes() == b.features.tobytes()
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_counts(self):
        ds = gen_blobs(_spec())
        assert len(ds) == 1000
        np.testing.assert_array_equal(ds.class_counts(), 100)

    def test_streams_share_means_but_not_noise(self):
        train = gen_blobs(_spec(), stream=TRAIN_STREAM)
        test = gen_blobs(_spec(), stream=TEST_STREAM)
        assert not np.array_equal(train.features, test.features)
        for c in range(10):
            gap = train.features[train.labels == c].mean(axis=0) - test.features[test.labels == c].mean(axis=0)
            assert np.linalg.norm(gap) < 1.5


class TestDataset:
    def test_arrays_are_frozen_copies(self):
        features = np.zeros((3, 2))
        ds = Dataset(features, [0, 1, 1], 2)
        features[0, 0] = 9.0
        assert ds.features[0, 0] == 0.0
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1.0

    def test_label_out_of_range(self):
        with pytest.raises(LabelError):
            Dataset(np.zeros((2, 2)), [0, 2], 2)

    def test_ood_labels_only_when_uniform(self):
        assert Dataset(np.zeros((2, 2)), [OOD_LABEL, OOD_LABEL], 2).is_ood
        with pytest.raises(LabelError):
            Dataset(np.zeros((2, 2)), [0, OOD_LABEL], 2)

    def test_select_classes_relabels(self):
        ds = gen_blobs(_spec(num_classes=5, samples_per_class=4))
        kept = ds.select_classes([1, 3])
        assert kept.num_classes == 2
        assert len(kept) == 8
        np.testing.assert_array_equal(np.bincount(kept.labels), [4, 4])
        np.testing.assert_array_equal(kept.features[kept.labels == 1], ds.features[ds.labels == 3])

    def test_export_csv(self, tmp_path):
        ds = Dataset(np.array([[0.5, -1.0]]), [1], 2)
        export_csv(ds, tmp_path / "ds.csv")
        assert (tmp_path / "ds.csv").read_text() == "label,f0,f1\n1,0.5,-1\n"


class TestLongTail:
    def test_hundred_to_one(self):
        counts = make_longtail_profile(10, 100, 0.01).per_class_counts
        assert counts[0] == 100
        assert counts[-1] == 1
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_balanced(self):
        assert make_longtail_profile(10, 100, 1.0).per_class_counts == (100,) * 10

    def test_two_classes(self):
        assert make_longtail_profile(2, 50, 0.1).per_class_counts == (50, 5)

    def test_ratio_matches_factor(self):
        counts = make_longtail_profile(10, 500, 0.1).per_class_counts
        assert counts[0] / counts[-1] == pytest.approx(10.0, rel=0.02)

    @pytest.mark.parametrize("factor", [0.0, 1.5, -0.1])
    def test_factor_out_of_range(self, factor):
        with pytest.raises(InvalidArgumentError):
            make_longtail_profile(10, 100, factor)

    def test_profile_rejects_increasing_counts(self):
        with pytest.raises(IntegrityError):
            ImbalanceProfile(0.5, (5, 10))

    def test_subsample_histogram_matches_profile(self):
        ds = gen_blobs(_spec())
        profile = make_longtail_profile(10, 100, 0.1)
        lt = subsample_longtail(ds, profile, seed=0)
        assert tuple(lt.class_counts()) == profile.per_class_counts

    def test_balanced_profile_keeps_everything(self):
        ds = gen_blobs(_spec(num_classes=3, samples_per_class=7))
        lt = subsample_longtail(ds, make_longtail_profile(3, 7, 1.0), seed=1)
        order = np.lexsort(ds.features.T)
        lt_order = np.lexsort(lt.features.T)
        np.testing.assert_array_equal(ds.features[order], lt.features[lt_order])

    def test_capacity_error_names_class(self):
        ds = gen_blobs(_spec(num_classes=3, samples_per_class=5))
        with pytest.raises(CapacityError) as exc:
            subsample_longtail(ds, ImbalanceProfile(0.5, (6, 5, 5)), seed=0)
        assert exc.value.class_index == 0

    def test_subsample_is_seeded(self):
        ds = gen_blobs(_spec())
        profile = make_longtail_profile(10, 100, 0.1)
        a = subsample_longtail(ds, profile, seed=3)
        b = subsample_longtail(ds, profile, seed=3)
        assert a.features.tobytes() == b.features.tobytes()


class TestIdx:
    @staticmethod
    def _images(n: int = 6) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(0)
        return rng.integers(0, 256, size=(n, 4, 3), dtype=np.uint8), np.arange(n, dtype=np.uint8) % 3

    @pytest.mark.parametrize("suffix", ["", ".gz"])
    def test_write_then_load(self, tmp_path, suffix):
        images, labels = self._images()
        img_path, lbl_path = tmp_path / f"img{suffix}", tmp_path / f"lbl{suffix}"
        write_idx(images, labels, img_path, lbl_path)
        ds = load_idx(img_path, lbl_path)
        assert (len(ds), ds.dim, ds.num_classes) == (6, 12, 3)
        np.testing.assert_allclose(ds.features, images.reshape(6, -1) / 255.0)
        np.testing.assert_array_equal(ds.labels, labels)

    def test_header_layout(self, tmp_path):
        images, labels = self._images(2)
        write_idx(images, labels, tmp_path / "img", tmp_path / "lbl")
        assert struct.unpack(">4I", (tmp_path / "img").read_bytes()[:16]) == (0x803, 2, 4, 3)
        assert struct.unpack(">2I", (tmp_path / "lbl").read_bytes()[:8]) == (0x801, 2)

    def test_wrong_magic(self, tmp_path):
        images, labels = self._images(2)
        write_idx(images, labels, tmp_path / "img", tmp_path / "lbl")
        raw = bytearray((tmp_path / "img").read_bytes())
        raw[:4] = struct.pack(">I", 0x802)
        (tmp_path / "img").write_bytes(bytes(raw))
        with pytest.raises(ParseError, match="unexpected magic") as exc:
            load_idx(tmp_path / "img", tmp_path / "lbl")
        assert exc.value.field == "magic"

    def test_truncated_pixels(self, tmp_path):
        images, labels = self._images(2)
        write_idx(images, labels, tmp_path / "img", tmp_path / "lbl")
        (tmp_path / "img").write_bytes((tmp_path / "img").read_bytes()[:-5])
        with pytest.raises(ParseError) as exc:
            load_idx(tmp_path / "img", tmp_path / "lbl")
        assert exc.value.field == "pixels"

    def test_count_mismatch(self, tmp_path):
        images, labels = self._images(4)
        write_idx(images, labels, tmp_path / "img", tmp_path / "lbl")
        write_idx(images[:3], labels[:3], tmp_path / "img3", tmp_path / "lbl3")
        with pytest.raises(ParseError) as exc:
            load_idx(tmp_path / "img", tmp_path / "lbl3")
        assert exc.value.field == "count"

    def test_gzip_is_transparent(self, tmp_path):
        images, labels = self._images(3)
        write_idx(images, labels, tmp_path / "img.gz", tmp_path / "lbl.gz")
        raw = gzip.decompress((tmp_path / "img.gz").read_bytes())
        assert struct.unpack(">I", raw[:4])[0] == 0x803


class TestOOD:
    @pytest.mark.parametrize("kind", ["uniform_noise", "shifted_blobs"])
    def test_seeded_and_labelled(self, kind):
        ref = gen_blobs(_spec())
        a, b = gen_ood(kind, ref, 200, seed=9), gen_ood(kind, ref, 200, seed=9)
        assert a.features.tobytes() == b.features.tobytes()
        assert a.is_ood
        assert a.features.shape == (200, 8)

    def test_uniform_noise_stays_in_box(self):
        ref = gen_blobs(_spec())
        ood = gen_ood("uniform_noise", ref, 500, seed=0)
        assert np.all(ood.features >= ref.features.min(axis=0))
        assert np.all(ood.features <= ref.features.max(axis=0))

    def test_unknown_kind(self):
        with pytest.raises(InvalidArgumentError):
            gen_ood("svhn", gen_blobs(_spec()), 10, seed=0)

    def test_zero_offset_is_indistinguishable(self):
        train = gen_blobs(_spec(), stream=TRAIN_STREAM)
        test = gen_blobs(_spec(), stream=TEST_STREAM)
        near = gen_ood("shifted_blobs", train, 1000, seed=1, offset=0.0)
        stats = fit_class_stats(train.features, train.labels, 10)
        value = auroc(ScoreSet(mahalanobis_score(stats, test.features), mahalanobis_score(stats, near.features)))
        assert abs(value - 0.5) < 0.1

    def test_large_offset_is_separable(self):
        train = gen_blobs(_spec(), stream=TRAIN_STREAM)
        test = gen_blobs(_spec(), stream=TEST_STREAM)
        far = gen_ood("shifted_blobs", train, 1000, seed=1, offset=20.0)
        stats = fit_class_stats(train.features, train.labels, 10)
        value = auroc(ScoreSet(mahalanobis_score(stats, test.features), mahalanobis_score(stats, far.features)))
        assert value > 0.9
