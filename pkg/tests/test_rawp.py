"""Tests for ranked window pairing.

``brute_force_best`` below is the oracle: plain Python loops scoring
every candidate window, written before the vectorized implementation
and kept deliberately naive.  The implementation must agree with it
exactly — same region, same score — on every trial.
"""

import numpy as np
import pytest

from patchlight.errors import GeometryError, ParameterError
from patchlight.image_core import ImageBuffer, PatchRegion, crop
from patchlight.rawp import (
    MatchResult,
    SearchSpec,
    find_best_match,
    map_to_generated,
    pairing_score,
)


def brute_force_best(scene, patch, anchor, spec):
    """Oracle: exhaustively score every stride-aligned window placement.

    The search area is ``spec.area_height x spec.area_width`` centered on
    the anchor, shrunk to the scene when larger and slid back inside the
    scene when it overhangs.  Candidates start at the area origin and
    advance by ``spec.stride``; the winner is the lowest sum of absolute
    RGB differences, with ties going to the smallest top, then left.
    """
    scene_arr = scene.data
    patch_arr = patch.data
    win = spec.window
    eff_h = min(spec.area_height, scene.height)
    eff_w = min(spec.area_width, scene.width)
    top0 = anchor.top - (eff_h - win) // 2
    top0 = max(0, min(top0, scene.height - eff_h))
    left0 = anchor.left - (eff_w - win) // 2
    left0 = max(0, min(left0, scene.width - eff_w))
    best = None
    for i in range(0, eff_h - win + 1, spec.stride):
        for j in range(0, eff_w - win + 1, spec.stride):
            t, l = top0 + i, left0 + j
            score = 0.0
            for y in range(win):
                for x in range(win):
                    for c in range(scene_arr.shape[2]):
                        score += abs(
                            scene_arr[t + y, l + x, c] - patch_arr[y, x, c]
                        )
            if best is None or score < best[0]:
                best = (score, t, l)
    return PatchRegion(best[1], best[2], win, win), best[0]


def random_case(rng, scene_side, window):
    img = ImageBuffer(rng.uniform(size=(scene_side, scene_side, 3)))
    patch = ImageBuffer(rng.uniform(size=(window, window, 3)))
    top = int(rng.integers(0, scene_side - window + 1))
    left = int(rng.integers(0, scene_side - window + 1))
    return img, patch, PatchRegion(top, left, window, window)


class TestPairingScore:
    def test_identical_patches_score_zero(self):
        rng = np.random.default_rng(19)
        patch = ImageBuffer(rng.uniform(size=(5, 5, 3)))
        assert pairing_score(patch, patch) == 0.0

    def test_unit_differences_sum(self):
        black = ImageBuffer(np.zeros((1, 1, 3)))
        white = ImageBuffer(np.ones((1, 1, 3)))
        assert pairing_score(black, white) == 3.0

    def test_quarter_difference_grid(self):
        a = ImageBuffer(np.full((2, 2, 3), 0.5))
        b = ImageBuffer(np.full((2, 2, 3), 0.25))
        assert pairing_score(a, b) == pytest.approx(3.0, abs=1e-12)

    def test_rejects_shape_mismatch(self):
        a = ImageBuffer(np.zeros((2, 2, 3)))
        b = ImageBuffer(np.zeros((2, 3, 3)))
        with pytest.raises(ParameterError):
            pairing_score(a, b)

    def test_non_negative(self):
        rng = np.random.default_rng(30)
        a = ImageBuffer(rng.uniform(size=(4, 4, 3)))
        b = ImageBuffer(rng.uniform(size=(4, 4, 3)))
        assert pairing_score(a, b) >= 0.0


class TestSearchSpec:
    def test_for_window_default_geometry(self):
        spec = SearchSpec.for_window(16)
        assert spec == SearchSpec(area_height=24, area_width=24, window=16, stride=4)

    def test_for_window_scale_floor(self):
        spec = SearchSpec.for_window(15)
        assert (spec.area_height, spec.area_width) == (22, 22)

    def test_rejects_area_smaller_than_window(self):
        with pytest.raises(GeometryError):
            SearchSpec(area_height=8, area_width=16, window=12, stride=4)

    def test_rejects_nonpositive_stride(self):
        with pytest.raises(GeometryError):
            SearchSpec(area_height=16, area_width=16, window=8, stride=0)

    def test_rejects_scale_below_one(self):
        with pytest.raises(GeometryError):
            SearchSpec.for_window(16, area_scale=0.5)


class TestAgainstOracle:
    def test_exact_agreement_random_scenes(self):
        rng = np.random.default_rng(20)
        for trial in range(60):
            side = int(rng.integers(16, 33))
            window = int(rng.integers(4, min(13, side - 2)))
            img, patch, anchor = random_case(rng, side, window)
            stride = int(rng.integers(1, 5))
            scale = float(rng.uniform(1.0, 2.5))
            spec = SearchSpec.for_window(window, area_scale=scale, stride=stride)
            expected_region, expected_score = brute_force_best(
                img, patch, anchor, spec
            )
            result = find_best_match(img, patch, anchor, spec)
            assert result.best_region == expected_region
            assert result.score == pytest.approx(expected_score, abs=1e-9)

    def test_score_grid_matches_manual_scoring(self):
        rng = np.random.default_rng(21)
        img, patch, anchor = random_case(rng, 24, 8)
        spec = SearchSpec.for_window(8, area_scale=2.0, stride=2)
        result = find_best_match(img, patch, anchor, spec, keep_scores=True)
        for i in range(result.all_scores.shape[0]):
            for j in range(result.all_scores.shape[1]):
                t = result.area.top + i * spec.stride
                l = result.area.left + j * spec.stride
                window = crop(img, PatchRegion(t, l, 8, 8))
                assert result.all_scores[i, j] == pytest.approx(
                    pairing_score(window, patch), abs=1e-9
                )

    def test_score_is_minimum_of_table(self):
        rng = np.random.default_rng(31)
        img, patch, anchor = random_case(rng, 28, 8)
        result = find_best_match(
            img, patch, anchor, SearchSpec.for_window(8, stride=2), keep_scores=True
        )
        assert result.score == result.all_scores.min()


class TestPlantAndRecover:
    def test_planted_patch_recovered_exactly(self):
        rng = np.random.default_rng(22)
        for _ in range(40):
            side = int(rng.integers(24, 49))
            window = 8
            scene = rng.uniform(size=(side, side, 3))
            patch = rng.uniform(size=(window, window, 3))
            anchor_top = int(rng.integers(0, side - window + 1))
            anchor_left = int(rng.integers(0, side - window + 1))
            anchor = PatchRegion(anchor_top, anchor_left, window, window)
            spec = SearchSpec.for_window(window, area_scale=2.0, stride=2)
            # Plant at a stride-aligned candidate inside the search area.
            probe = find_best_match(
                ImageBuffer(scene), ImageBuffer(patch), anchor, spec, keep_scores=True
            )
            rows, cols = probe.all_scores.shape
            i = int(rng.integers(0, rows))
            j = int(rng.integers(0, cols))
            t = probe.area.top + i * spec.stride
            l = probe.area.left + j * spec.stride
            scene[t : t + window, l : l + window, :] = patch
            result = find_best_match(
                ImageBuffer(scene), ImageBuffer(patch), anchor, spec
            )
            assert result.best_region == PatchRegion(t, l, window, window)
            assert result.score == 0.0

    def test_patch_planted_at_anchor_is_found_with_default_geometry(self):
        # Default geometry (window 16, area 24, stride 4) places the
        # anchor on the candidate grid, so an exact copy at the anchor
        # must win with score zero.
        rng = np.random.default_rng(23)
        scene = rng.uniform(size=(64, 64, 3))
        patch = rng.uniform(size=(16, 16, 3))
        anchor = PatchRegion(24, 20, 16, 16)
        scene[24:40, 20:36, :] = patch
        result = find_best_match(
            ImageBuffer(scene), ImageBuffer(patch), anchor, SearchSpec.for_window(16)
        )
        assert result.best_region == anchor
        assert result.score == 0.0

    def test_patch_planted_one_stride_away(self):
        rng = np.random.default_rng(24)
        scene = rng.uniform(size=(64, 64, 3))
        patch = rng.uniform(size=(16, 16, 3))
        anchor = PatchRegion(24, 20, 16, 16)
        scene[28:44, 20:36, :] = patch  # anchor shifted by (+stride, 0)
        result = find_best_match(
            ImageBuffer(scene), ImageBuffer(patch), anchor, SearchSpec.for_window(16)
        )
        assert result.best_region == PatchRegion(28, 20, 16, 16)
        assert result.score == 0.0

    def test_zero_score_implies_identical_pixels(self):
        rng = np.random.default_rng(25)
        scene = rng.uniform(size=(48, 48, 3))
        patch = scene[8:24, 12:28, :].copy()
        anchor = PatchRegion(8, 12, 16, 16)
        result = find_best_match(
            ImageBuffer(scene), ImageBuffer(patch), anchor, SearchSpec.for_window(16)
        )
        assert result.score == 0.0
        found = crop(ImageBuffer(scene), result.best_region)
        np.testing.assert_array_equal(found.data, patch)


class TestGeometry:
    def test_tie_break_prefers_top_then_left(self):
        scene = ImageBuffer(np.full((20, 20, 3), 0.5))
        patch = ImageBuffer(np.full((6, 6, 3), 0.8))
        anchor = PatchRegion(7, 7, 6, 6)
        spec = SearchSpec.for_window(6, area_scale=2.0, stride=2)
        result = find_best_match(scene, patch, anchor, spec, keep_scores=True)
        # All candidates tie (uniform scene); the first one must win and
        # its score equals the uniform-vs-target distance.
        assert np.allclose(result.all_scores, result.score)
        assert result.best_region.top == result.area.top
        assert result.best_region.left == result.area.left
        uniform = crop(scene, result.best_region)
        assert result.score == pytest.approx(pairing_score(uniform, patch), abs=1e-12)

    def test_area_centered_on_interior_anchor(self):
        rng = np.random.default_rng(26)
        scene = ImageBuffer(rng.uniform(size=(64, 64, 3)))
        patch = ImageBuffer(rng.uniform(size=(16, 16, 3)))
        anchor = PatchRegion(24, 24, 16, 16)
        spec = SearchSpec.for_window(16)  # 24x24 area
        result = find_best_match(scene, patch, anchor, spec)
        assert result.area == PatchRegion(20, 20, 24, 24)

    def test_area_clamped_at_corner(self):
        rng = np.random.default_rng(27)
        scene = ImageBuffer(rng.uniform(size=(64, 64, 3)))
        patch = ImageBuffer(rng.uniform(size=(16, 16, 3)))
        anchor = PatchRegion(0, 48, 16, 16)
        result = find_best_match(scene, patch, anchor, SearchSpec.for_window(16))
        assert result.area == PatchRegion(0, 40, 24, 24)

    def test_area_shrinks_to_scene(self):
        rng = np.random.default_rng(28)
        scene = ImageBuffer(rng.uniform(size=(20, 20, 3)))
        patch = ImageBuffer(rng.uniform(size=(16, 16, 3)))
        anchor = PatchRegion(2, 2, 16, 16)
        result = find_best_match(scene, patch, anchor, SearchSpec.for_window(16))
        assert result.area == PatchRegion(0, 0, 20, 20)

    def test_match_always_inside_area_inside_scene(self):
        rng = np.random.default_rng(29)
        for _ in range(30):
            img, patch, anchor = random_case(rng, 32, 10)
            spec = SearchSpec.for_window(10, area_scale=1.7, stride=3)
            result = find_best_match(img, patch, anchor, spec)
            assert result.area.contains(result.best_region)
            assert img.full_region().contains(result.area)

    def test_translation_equivariance(self):
        # The same content shifted by a stride multiple, with the anchor
        # shifted alike (both searches interior), shifts the match alike.
        rng = np.random.default_rng(32)
        shift = 4
        canvas = rng.uniform(size=(72 + shift, 72 + shift, 3))
        scene_a = ImageBuffer(canvas[shift:, shift:, :])
        scene_b = ImageBuffer(canvas[: 72, : 72, :])
        patch = ImageBuffer(rng.uniform(size=(16, 16, 3)))
        anchor_a = PatchRegion(28, 28, 16, 16)
        anchor_b = anchor_a.shifted(shift, shift)
        spec = SearchSpec.for_window(16)
        result_a = find_best_match(scene_a, patch, anchor_a, spec)
        result_b = find_best_match(scene_b, patch, anchor_b, spec)
        assert result_b.best_region == result_a.best_region.shifted(shift, shift)
        assert result_b.score == pytest.approx(result_a.score, abs=1e-9)

    def test_halving_stride_never_raises_minimum(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            img, patch, anchor = random_case(rng, 40, 8)
            scores = [
                find_best_match(
                    img,
                    patch,
                    anchor,
                    SearchSpec.for_window(8, area_scale=2.0, stride=s),
                ).score
                for s in (4, 2, 1)
            ]
            assert scores[0] >= scores[1] >= scores[2]

    def test_anchor_must_match_window(self):
        img = ImageBuffer(np.zeros((32, 32, 3)))
        patch = ImageBuffer(np.zeros((8, 8, 3)))
        with pytest.raises(ParameterError):
            find_best_match(
                img, patch, PatchRegion(0, 0, 9, 8), SearchSpec.for_window(8)
            )

    def test_patch_must_match_window(self):
        img = ImageBuffer(np.zeros((32, 32, 3)))
        patch = ImageBuffer(np.zeros((9, 9, 3)))
        with pytest.raises(ParameterError):
            find_best_match(
                img, patch, PatchRegion(0, 0, 8, 8), SearchSpec.for_window(8)
            )

    def test_window_larger_than_scene_rejected(self):
        img = ImageBuffer(np.zeros((8, 8, 3)))
        patch = ImageBuffer(np.zeros((16, 16, 3)))
        with pytest.raises(GeometryError):
            find_best_match(
                img, patch, PatchRegion(0, 0, 16, 16), SearchSpec.for_window(16)
            )


class TestMapToGenerated:
    def test_crops_generated_scene_at_match(self):
        rng = np.random.default_rng(34)
        source = ImageBuffer(rng.uniform(size=(32, 32, 3)))
        generated = ImageBuffer(rng.uniform(size=(32, 32, 3)))
        patch = ImageBuffer(rng.uniform(size=(8, 8, 3)))
        anchor = PatchRegion(12, 12, 8, 8)
        match = find_best_match(source, patch, anchor, SearchSpec.for_window(8))
        out = map_to_generated(match, generated)
        np.testing.assert_array_equal(out.data, crop(generated, match.best_region).data)

    def test_untrained_generated_equals_source_patch(self):
        rng = np.random.default_rng(35)
        source = ImageBuffer(rng.uniform(size=(32, 32, 3)))
        patch = ImageBuffer(rng.uniform(size=(8, 8, 3)))
        anchor = PatchRegion(12, 12, 8, 8)
        match = find_best_match(source, patch, anchor, SearchSpec.for_window(8))
        out = map_to_generated(match, source)
        np.testing.assert_array_equal(out.data, crop(source, match.best_region).data)

    def test_result_is_a_match_result(self):
        rng = np.random.default_rng(36)
        img, patch, anchor = random_case(rng, 24, 8)
        result = find_best_match(img, patch, anchor, SearchSpec.for_window(8))
        assert isinstance(result, MatchResult)
        assert result.all_scores is None
