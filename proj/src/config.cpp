// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#include "safeforge/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "safeforge/error.hpp"
#include "safeforge/text.hpp"

namespace safeforge::config {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out.push_back(',');
        out += p;
    }
    return out;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    for (const auto& piece : text::split(value, ',')) {
        const std::string t = text::trim(piece);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct Parser {
    std::vector<std::string> errors;

    void fail(const std::string& key, const std::string& why) {
        errors.push_back(key + ": " + why);
    }

    bool to_double(const std::string& key, const std::string& v, double& out) {
        try {
            std::size_t idx = 0;
            out = std::stod(v, &idx);
            if (idx != v.size()) throw std::invalid_argument("trailing");
            return true;
        } catch (...) {
            fail(key, "not a number: '" + v + "'");
            return false;
        }
    }

    bool to_int(const std::string& key, const std::string& v, long long& out) {
        const auto res =
            std::from_chars(v.data(), v.data() + v.size(), out);
        if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
            fail(key, "not an integer: '" + v + "'");
            return false;
        }
        return true;
    }

    bool to_u64(const std::string& key, const std::string& v, std::uint64_t& out) {
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
            fail(key, "not an unsigned integer: '" + v + "'");
            return false;
        }
        return true;
    }

    bool to_bool(const std::string& key, const std::string& v, bool& out) {
        if (v == "true" || v == "1") {
            out = true;
            return true;
        }
        if (v == "false" || v == "0") {
            out = false;
            return true;
        }
        fail(key, "not a boolean: '" + v + "'");
        return false;
    }
};

}  // namespace

std::string PipelineConfig::resolved_work_manifest() const {
    return (fs::path(output_root) / "manifest.work.jsonl").string();
}

std::string PipelineConfig::resolved_cache_dir() const {
    if (!cache_dir.empty()) return cache_dir;
    if (const char* env = std::getenv("SAFE_CACHE_DIR")) return env;
    return (fs::path(output_root) / "cache").string();
}

std::string PipelineConfig::resolved_subjects_sidecar() const {
    return subjects_sidecar.empty()
               ? (fs::path(output_root) / "subjects.jsonl").string()
               : subjects_sidecar;
}

std::string PipelineConfig::resolved_rewrites_sidecar() const {
    return rewrites_sidecar.empty()
               ? (fs::path(output_root) / "rewrites.jsonl").string()
               : rewrites_sidecar;
}

std::string PipelineConfig::resolved_checkpoint() const {
    return checkpoint.empty()
               ? (fs::path(output_root) / "dfe_checkpoint.bin").string()
               : checkpoint;
}

std::string PipelineConfig::resolved_generated_dir() const {
    return generated_dir.empty()
               ? (fs::path(output_root) / "generated").string()
               : generated_dir;
}

std::string PipelineConfig::resolved_report_path() const {
    return report_path.empty()
               ? (fs::path(output_root) / "report.jsonl").string()
               : report_path;
}

std::string PipelineConfig::resolved_entity_profiles() const {
    return entity_profiles.empty()
               ? (fs::path(output_root) / "profiles").string()
               : entity_profiles;
}

PipelineConfig parse_config_text(const std::string& content) {
    PipelineConfig cfg;
    Parser p;

    std::map<std::string, std::function<void(const std::string&)>> setters;
    auto set_string = [&](const char* key, std::string& target) {
        setters[key] = [&target](const std::string& v) { target = v; };
    };
    auto set_double = [&](const char* key, double& target) {
        setters[key] = [&p, key, &target](const std::string& v) {
            double d;
            if (p.to_double(key, v, d)) target = d;
        };
    };
    auto set_int = [&](const char* key, int& target) {
        setters[key] = [&p, key, &target](const std::string& v) {
            long long i;
            if (p.to_int(key, v, i)) target = static_cast<int>(i);
        };
    };
    auto set_size = [&](const char* key, std::size_t& target) {
        setters[key] = [&p, key, &target](const std::string& v) {
            long long i;
            if (p.to_int(key, v, i)) target = static_cast<std::size_t>(i);
        };
    };
    auto set_u64 = [&](const char* key, std::uint64_t& target) {
        setters[key] = [&p, key, &target](const std::string& v) {
            std::uint64_t u;
            if (p.to_u64(key, v, u)) target = u;
        };
    };
    auto set_bool = [&](const char* key, bool& target) {
        setters[key] = [&p, key, &target](const std::string& v) {
            bool b;
            if (p.to_bool(key, v, b)) target = b;
        };
    };
    auto set_list = [&](const char* key, std::vector<std::string>& target) {
        setters[key] = [&target](const std::string& v) { target = split_list(v); };
    };

    set_string("paths.manifest", cfg.manifest);
    set_string("paths.image_root", cfg.image_root);
    set_string("paths.output_root", cfg.output_root);
    set_string("paths.cache_dir", cfg.cache_dir);
    set_string("paths.kb_snapshot", cfg.kb_snapshot);
    set_string("paths.entity_profiles", cfg.entity_profiles);
    set_string("paths.ner_dictionary", cfg.ner_dictionary);
    set_string("paths.llm_responses", cfg.llm_responses);
    set_string("paths.subjects_sidecar", cfg.subjects_sidecar);
    set_string("paths.rewrites_sidecar", cfg.rewrites_sidecar);
    set_string("paths.checkpoint", cfg.checkpoint);
    set_string("paths.generated_dir", cfg.generated_dir);
    set_string("paths.reference_dir", cfg.reference_dir);
    set_string("paths.report", cfg.report_path);

    set_string("models.text_encoder", cfg.text_encoder_id);
    set_string("models.backbone", cfg.backbone_id);
    set_string("models.reward", cfg.reward_id);
    set_string("models.preference", cfg.preference_id);
    set_string("models.iqa", cfg.iqa_id);
    set_string("models.detector", cfg.detector_id);
    set_string("models.recognizer", cfg.recognizer_id);
    set_string("models.llm", cfg.llm_id);
    set_string("models.feature_extractor", cfg.feature_extractor_id);
    set_string("models.ner", cfg.ner_id);
    set_string("models.linker", cfg.linker_id);
    set_string("models.sentence_sim", cfg.sentence_sim_id);

    set_double("filters.iqa_threshold", cfg.iqa_threshold);
    set_size("filters.min_words", cfg.min_words);
    set_list("filters.exclude_entities", cfg.excluded_entities);
    set_double("filters.min_similarity", cfg.min_similarity);
    set_double("filters.cluster_min_similarity", cfg.cluster_min_similarity);
    set_size("filters.min_samples", cfg.min_samples);
    set_double("filters.face_min_confidence", cfg.face_min_confidence);
    set_bool("filters.face_flag", cfg.face_flag);
    set_int("image.target", cfg.crop_target);
    set_list("cluster.taxonomy", cfg.taxonomy);

    set_double("split.train", cfg.split_train);
    set_double("split.val", cfg.split_val);
    set_double("split.test", cfg.split_test);

    set_string("subjects.template", cfg.subjects_template);
    set_string("subjects.mode", cfg.subjects_mode);
    set_bool("conditioning.renormalize", cfg.renormalize);

    set_u64("seed", cfg.seed);

    set_double("train.learning_rate", cfg.train.learning_rate);
    set_int("train.epochs", cfg.train.epochs);
    set_int("train.scheduler_timesteps", cfg.train.scheduler_timesteps);
    set_int("train.loss_t_min", cfg.train.loss_t_min);
    set_int("train.loss_t_max", cfg.train.loss_t_max);
    set_int("train.rank", cfg.train.adapter_rank);
    set_double("train.alpha", cfg.train.adapter_alpha);
    set_int("train.batch_size", cfg.train.batch_size);
    set_u64("train.seed", cfg.train.seed);
    set_int("train.scale_exp", cfg.train.scale_exp);
    set_int("train.checkpoint_interval", cfg.train.checkpoint_interval);
    set_bool("train.cross_attention_only", cfg.train.cross_attention_only);

    set_double("generate.guidance_scale", cfg.generate.guidance_scale);
    set_int("generate.steps", cfg.generate.num_inference_steps);
    set_int("generate.resolution", cfg.generate.resolution);
    set_int("generate.scale_exp", cfg.generate.scale_exp);
    setters["generate.seeds"] = [&p, &cfg](const std::string& v) {
        std::vector<std::uint64_t> seeds;
        for (const auto& s : split_list(v)) {
            std::uint64_t u;
            if (p.to_u64("generate.seeds", s, u)) seeds.push_back(u);
        }
        if (!seeds.empty()) cfg.generate.seeds = seeds;
    };
    setters["generate.mode"] = [&p, &cfg](const std::string& v) {
        try {
            cfg.generate.mode = gen::mode_from_name(v);
        } catch (const Error&) {
            p.fail("generate.mode", "unknown mode '" + v + "'");
        }
    };
    setters["generate.checkpoint"] = [&cfg](const std::string& v) {
        if (v.empty() || v == "none") {
            cfg.generate.checkpoint.reset();
        } else {
            cfg.generate.checkpoint = v;
        }
    };

    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = text::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            p.fail("line " + std::to_string(lineno), "expected key=value");
            continue;
        }
        const std::string key = text::trim(t.substr(0, eq));
        const std::string value = text::trim(t.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            p.fail(key, "unknown key");
            continue;
        }
        it->second(value);
    }

    // Range validation.
    if (cfg.iqa_threshold < 0.0 || cfg.iqa_threshold > 1.0) {
        p.fail("filters.iqa_threshold", "must be in [0, 1]");
    }
    if (cfg.min_words < 1) p.fail("filters.min_words", "must be >= 1");
    if (cfg.min_similarity < -1.0 || cfg.min_similarity > 1.0) {
        p.fail("filters.min_similarity", "must be in [-1, 1]");
    }
    if (cfg.cluster_min_similarity <= 0.0 || cfg.cluster_min_similarity > 1.0) {
        p.fail("filters.cluster_min_similarity", "must be in (0, 1]");
    }
    if (cfg.face_min_confidence < 0.0 || cfg.face_min_confidence > 1.0) {
        p.fail("filters.face_min_confidence", "must be in [0, 1]");
    }
    if (cfg.crop_target < 8) p.fail("image.target", "must be >= 8");
    const double ratio_sum = cfg.split_train + cfg.split_val + cfg.split_test;
    if (std::abs(ratio_sum - 1.0) > 1e-9) {
        p.fail("split.*", "ratios must sum to 1");
    }
    if (cfg.subjects_template != "structured-json" &&
        cfg.subjects_template != "list-style") {
        p.fail("subjects.template", "must be structured-json or list-style");
    }
    if (cfg.subjects_mode != "subjects" && cfg.subjects_mode != "rewrite") {
        p.fail("subjects.mode", "must be subjects or rewrite");
    }
    if (cfg.manifest.empty()) p.fail("paths.manifest", "must not be empty");
    if (cfg.output_root.empty()) p.fail("paths.output_root", "must not be empty");
    try {
        cfg.train.validate();
    } catch (const Error& e) {
        p.fail("train.*", e.what());
    }
    try {
        cfg.generate.validate();
    } catch (const Error& e) {
        p.fail("generate.*", e.what());
    }

    if (!p.errors.empty()) {
        std::string all;
        for (const auto& e : p.errors) {
            if (!all.empty()) all += "; ";
            all += e;
        }
        throw Error("config_invalid", all);
    }
    return cfg;
}

PipelineConfig validate_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config_open_failed", path);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    return parse_config_text(content);
}

std::string emit_config(const PipelineConfig& cfg) {
    std::ostringstream os;
    os << "paths.manifest = " << cfg.manifest << "\n";
    os << "paths.image_root = " << cfg.image_root << "\n";
    os << "paths.output_root = " << cfg.output_root << "\n";
    os << "paths.cache_dir = " << cfg.cache_dir << "\n";
    os << "paths.kb_snapshot = " << cfg.kb_snapshot << "\n";
    os << "paths.entity_profiles = " << cfg.entity_profiles << "\n";
    os << "paths.ner_dictionary = " << cfg.ner_dictionary << "\n";
    os << "paths.llm_responses = " << cfg.llm_responses << "\n";
    os << "paths.subjects_sidecar = " << cfg.subjects_sidecar << "\n";
    os << "paths.rewrites_sidecar = " << cfg.rewrites_sidecar << "\n";
    os << "paths.checkpoint = " << cfg.checkpoint << "\n";
    os << "paths.generated_dir = " << cfg.generated_dir << "\n";
    os << "paths.reference_dir = " << cfg.reference_dir << "\n";
    os << "paths.report = " << cfg.report_path << "\n";
    os << "models.text_encoder = " << cfg.text_encoder_id << "\n";
    os << "models.backbone = " << cfg.backbone_id << "\n";
    os << "models.reward = " << cfg.reward_id << "\n";
    os << "models.preference = " << cfg.preference_id << "\n";
    os << "models.iqa = " << cfg.iqa_id << "\n";
    os << "models.detector = " << cfg.detector_id << "\n";
    os << "models.recognizer = " << cfg.recognizer_id << "\n";
    os << "models.llm = " << cfg.llm_id << "\n";
    os << "models.feature_extractor = " << cfg.feature_extractor_id << "\n";
    os << "models.ner = " << cfg.ner_id << "\n";
    os << "models.linker = " << cfg.linker_id << "\n";
    os << "models.sentence_sim = " << cfg.sentence_sim_id << "\n";
    os << "filters.iqa_threshold = " << format_double(cfg.iqa_threshold) << "\n";
    os << "filters.min_words = " << cfg.min_words << "\n";
    os << "filters.exclude_entities = " << join(cfg.excluded_entities) << "\n";
    os << "filters.min_similarity = " << format_double(cfg.min_similarity) << "\n";
    os << "filters.cluster_min_similarity = "
       << format_double(cfg.cluster_min_similarity) << "\n";
    os << "filters.min_samples = " << cfg.min_samples << "\n";
    os << "filters.face_min_confidence = "
       << format_double(cfg.face_min_confidence) << "\n";
    os << "filters.face_flag = " << (cfg.face_flag ? "true" : "false") << "\n";
    os << "image.target = " << cfg.crop_target << "\n";
    os << "cluster.taxonomy = " << join(cfg.taxonomy) << "\n";
    os << "split.train = " << format_double(cfg.split_train) << "\n";
    os << "split.val = " << format_double(cfg.split_val) << "\n";
    os << "split.test = " << format_double(cfg.split_test) << "\n";
    os << "subjects.template = " << cfg.subjects_template << "\n";
    os << "subjects.mode = " << cfg.subjects_mode << "\n";
    os << "conditioning.renormalize = " << (cfg.renormalize ? "true" : "false") << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "train.learning_rate = " << format_double(cfg.train.learning_rate) << "\n";
    os << "train.epochs = " << cfg.train.epochs << "\n";
    os << "train.scheduler_timesteps = " << cfg.train.scheduler_timesteps << "\n";
    os << "train.loss_t_min = " << cfg.train.loss_t_min << "\n";
    os << "train.loss_t_max = " << cfg.train.loss_t_max << "\n";
    os << "train.rank = " << cfg.train.adapter_rank << "\n";
    os << "train.alpha = " << format_double(cfg.train.adapter_alpha) << "\n";
    os << "train.batch_size = " << cfg.train.batch_size << "\n";
    os << "train.seed = " << cfg.train.seed << "\n";
    os << "train.scale_exp = " << cfg.train.scale_exp << "\n";
    os << "train.checkpoint_interval = " << cfg.train.checkpoint_interval << "\n";
    os << "train.cross_attention_only = "
       << (cfg.train.cross_attention_only ? "true" : "false") << "\n";
    os << "generate.guidance_scale = "
       << format_double(cfg.generate.guidance_scale) << "\n";
    os << "generate.steps = " << cfg.generate.num_inference_steps << "\n";
    os << "generate.resolution = " << cfg.generate.resolution << "\n";
    os << "generate.scale_exp = " << cfg.generate.scale_exp << "\n";
    {
        std::string seeds;
        for (const auto s : cfg.generate.seeds) {
            if (!seeds.empty()) seeds.push_back(',');
            seeds += std::to_string(s);
        }
        os << "generate.seeds = " << seeds << "\n";
    }
    os << "generate.mode = " << gen::mode_name(cfg.generate.mode) << "\n";
    os << "generate.checkpoint = "
       << (cfg.generate.checkpoint ? *cfg.generate.checkpoint : "none") << "\n";
    return os.str();
}

}  // namespace safeforge::config
