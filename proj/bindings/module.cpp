// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "safeforge/builtin_models.hpp"
#include "safeforge/conditioning.hpp"
#include "safeforge/curation.hpp"
#include "safeforge/grounding.hpp"
#include "safeforge/metrics.hpp"
#include "safeforge/subjects.hpp"
#include "safeforge/text.hpp"

namespace py = pybind11;

namespace {

using safeforge::img::Box;
using safeforge::img::Image;

Image image_from_array(const py::array_t<std::uint8_t>& array) {
    const auto info = array.request();
    if (info.ndim != 2 && info.ndim != 3) {
        throw py::value_error("expected HxW or HxWxC uint8 array");
    }
    const int h = static_cast<int>(info.shape[0]);
    const int w = static_cast<int>(info.shape[1]);
    const int c = info.ndim == 3 ? static_cast<int>(info.shape[2]) : 1;
    if (c != 1 && c != 3) throw py::value_error("channels must be 1 or 3");
    Image img(w, h, c);
    if (info.ndim == 2) {
        const auto a = array.unchecked<2>();
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) img.at(x, y) = a(y, x);
        }
    } else {
        const auto a = array.unchecked<3>();
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int ch = 0; ch < c; ++ch) img.at(x, y, ch) = a(y, x, ch);
            }
        }
    }
    return img;
}

py::tuple box_to_tuple(const Box& b) { return py::make_tuple(b.x, b.y, b.w, b.h); }

std::vector<safeforge::conditioning::TokenSpan> spans_from_list(
    const std::vector<std::pair<int, int>>& spans) {
    std::vector<safeforge::conditioning::TokenSpan> out;
    out.reserve(spans.size());
    for (const auto& [first, last] : spans) out.push_back({first, last});
    return out;
}

}  // namespace

PYBIND11_MODULE(_safe_forge, m) {
    m.doc() = "Subject-aware conditioning, cropping and evaluation primitives";

    m.def("scale_exponent_to_beta", &safeforge::conditioning::scale_exponent_to_beta,
          py::arg("k"), "beta = 1.1^k for the x-k scale grid");

    m.def(
        "build_weight_vector",
        [](int token_count, const std::vector<std::pair<int, int>>& spans,
           double beta, const std::optional<std::vector<bool>>& special) {
            const auto wv = safeforge::conditioning::build_weight_vector(
                token_count, spans_from_list(spans), beta,
                special ? &*special : nullptr);
            py::dict out;
            out["weights"] = wv.weights;
            out["beta"] = wv.beta;
            out["key_indices"] = wv.key_indices;
            return out;
        },
        py::arg("token_count"), py::arg("key_spans"), py::arg("beta"),
        py::arg("special_positions") = std::nullopt,
        "Per-token scale multipliers: beta on key indices, 1 elsewhere");

    m.def(
        "condition_embeddings",
        [](const Eigen::MatrixXd& base, const std::vector<double>& weights,
           bool renormalize) {
            safeforge::conditioning::EmbeddingSequence seq;
            seq.vectors = base;
            seq.token_ids.assign(static_cast<std::size_t>(base.rows()), 0);
            seq.special.assign(static_cast<std::size_t>(base.rows()), false);
            safeforge::conditioning::WeightVector wv;
            wv.weights = weights;
            wv.beta = 1.0;
            return safeforge::conditioning::condition_embeddings(seq, wv,
                                                                 renormalize)
                .vectors;
        },
        py::arg("embeddings"), py::arg("weights"), py::arg("renormalize") = false,
        "Row-wise scaling of encoder output; weight-1 rows are bit-identical");

    m.def(
        "entropy_crop",
        [](const py::array_t<std::uint8_t>& image, int target) {
            return box_to_tuple(
                safeforge::curation::entropy_crop(image_from_array(image), target));
        },
        py::arg("image"), py::arg("target"),
        "Max-entropy square window after short-side resize; (x, y, w, h)");

    m.def(
        "face_aware_crop",
        [](int image_width, int image_height,
           const std::tuple<int, int, int, int>& face_box, int target) {
            Image dummy(image_width, image_height, 1);
            const auto [x, y, w, h] = face_box;
            return box_to_tuple(safeforge::grounding::face_aware_crop(
                dummy, Box{x, y, w, h}, target));
        },
        py::arg("image_width"), py::arg("image_height"), py::arg("face_box"),
        py::arg("target"),
        "Window of side `target` whose center is nearest the box centroid");

    m.def(
        "frechet_distance",
        [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
            return safeforge::metrics::frechet_distance(
                safeforge::metrics::FeatureSet(a, "numpy"),
                safeforge::metrics::FeatureSet(b, "numpy"));
        },
        py::arg("features_a"), py::arg("features_b"),
        "Frechet distance between Gaussian fits of two feature sets");

    m.def(
        "parse_subject_response",
        [](const std::string& raw, const std::string& family,
           const std::optional<std::string>& caption) {
            auto ann = safeforge::subjects::parse_subject_response(
                raw, safeforge::subjects::family_from_name(family));
            if (caption) safeforge::subjects::validate_phrases(ann, *caption);
            py::dict out;
            out["main"] = ann.main_subject ? py::cast(*ann.main_subject)
                                           : py::none();
            out["additional"] = ann.additional_subjects;
            out["fallback"] = ann.fallback_used;
            out["dropped"] = ann.dropped_phrases;
            return out;
        },
        py::arg("raw"), py::arg("family") = "structured-json",
        py::arg("caption") = std::nullopt,
        "Parse an LLM completion into subjects; never raises on bad input");

    m.def("word_count",
          [](const std::string& s) { return safeforge::text::word_count(s); },
          py::arg("text"), "Whitespace-delimited alphanumeric word count");

    m.def("chi_square_pvalue", &safeforge::metrics::chi_square_pvalue,
          py::arg("statistic"), py::arg("dof"));

    py::class_<safeforge::builtin::TinyTextEncoder>(m, "TinyTextEncoder")
        .def(py::init<>())
        .def("dim", &safeforge::builtin::TinyTextEncoder::dim)
        .def("context_limit", &safeforge::builtin::TinyTextEncoder::context_limit)
        .def(
            "tokenize",
            [](const safeforge::builtin::TinyTextEncoder& enc,
               const std::string& caption) {
                const auto toks = enc.tokenize(caption);
                py::list out;
                for (std::size_t i = 0; i < toks.ids.size(); ++i) {
                    out.append(py::make_tuple(toks.ids[i], toks.offsets[i].begin,
                                              toks.offsets[i].end,
                                              static_cast<bool>(toks.special[i])));
                }
                return out;
            },
            py::arg("caption"), "List of (id, begin, end, is_special)")
        .def(
            "encode",
            [](const safeforge::builtin::TinyTextEncoder& enc,
               const std::string& caption) { return enc.encode(caption).vectors; },
            py::arg("caption"))
        .def(
            "align_phrases",
            [](const safeforge::builtin::TinyTextEncoder& enc,
               const std::string& caption, const std::vector<std::string>& phrases) {
                std::vector<std::string> dropped;
                const auto spans = safeforge::conditioning::align_phrases_to_tokens(
                    caption, phrases, enc, &dropped);
                py::list out;
                for (const auto& s : spans) out.append(py::make_tuple(s.first, s.last));
                return py::make_tuple(out, dropped);
            },
            py::arg("caption"), py::arg("phrases"),
            "Inclusive token spans covering each phrase occurrence");
}
