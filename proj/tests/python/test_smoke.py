# Copyright (C) 2026 safe-forge contributors
# SPDX-License-Identifier: Apache-2.0
"""Smoke tests for the python bindings."""

import numpy as np
import pytest

import safe_forge as sf


def test_scale_exponent_to_beta():
    assert sf.scale_exponent_to_beta(0) == 1.0
    assert sf.scale_exponent_to_beta(1) == pytest.approx(1.1)
    assert sf.scale_exponent_to_beta(2) == pytest.approx(1.21)
    with pytest.raises(Exception):
        sf.scale_exponent_to_beta(-1)


def test_build_weight_vector():
    wv = sf.build_weight_vector(6, [(1, 2), (4, 4)], sf.scale_exponent_to_beta(2))
    beta = sf.scale_exponent_to_beta(2)
    assert wv["weights"] == [1.0, beta, beta, 1.0, beta, 1.0]
    assert wv["key_indices"] == [1, 2, 4]

    ones = sf.build_weight_vector(4, [], 1.21)
    assert ones["weights"] == [1.0] * 4


def test_condition_embeddings_identity_is_exact():
    base = np.random.default_rng(0).normal(size=(5, 8))
    out = sf.condition_embeddings(base, [1.0] * 5)
    assert np.array_equal(out, base)

    scaled = sf.condition_embeddings(base, [1.0, 1.21, 1.0, 1.0, 1.0])
    assert np.array_equal(scaled[0], base[0])
    assert np.allclose(scaled[1], base[1] * 1.21)


def test_entropy_crop_uniform_image_centers():
    image = np.full((32, 64), 128, dtype=np.uint8)
    assert sf.entropy_crop(image, 32) == (16, 0, 32, 32)


def test_face_aware_crop_clamps():
    box = sf.face_aware_crop(100, 80, (0, 0, 8, 8), 40)
    assert box == (0, 0, 40, 40)


def test_frechet_distance_self_is_zero():
    feats = np.random.default_rng(1).normal(size=(200, 5))
    assert abs(sf.frechet_distance(feats, feats)) <= 1e-6


def test_parser_fallback_and_success():
    parsed = sf.parse_subject_response(
        '{"main_topic_word": "tiger", "additional_topic_words": ["books"]}',
        "structured-json",
        "a bronze tiger beside stacked books",
    )
    assert parsed["main"] == "tiger"
    assert parsed["additional"] == ["books"]
    assert not parsed["fallback"]

    garbled = sf.parse_subject_response("{{{ nope", "structured-json")
    assert garbled["fallback"]


def test_encoder_alignment():
    enc = sf.TinyTextEncoder()
    caption = "a bronze tiger beside stacked books"
    tokens = enc.tokenize(caption)
    assert tokens[0][3] and tokens[-1][3]  # specials bracket the caption
    emb = enc.encode(caption)
    assert emb.shape == (len(tokens), enc.dim())

    spans, dropped = enc.align_phrases(caption, ["bronze tiger", "zebra"])
    assert spans == [(2, 3)]
    assert dropped == ["zebra"]


def test_word_count():
    assert sf.word_count("The school offers clothing, including shoes, to its students.") == 9
