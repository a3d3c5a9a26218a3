// Copyright (C) 2026 safe-forge contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safeforge/config.hpp"
#include "safeforge/metrics.hpp"

namespace safeforge::pipeline {

enum class Stage { Ingest, Curate, Ground, Subjects, Condition, Train, Generate, Evaluate };

std::string stage_name(Stage s);
Stage stage_from_name(const std::string& name);
std::vector<Stage> stages_from_csv(const std::string& csv);

// Append-only stage ledger (JSONL); the latest row per stage wins. A stage
// is skipped when its input hash matches the recorded one and the recorded
// outputs still hash the same.
class StageLedger {
public:
    explicit StageLedger(std::string path);

    struct Entry {
        std::string input_hash;
        std::map<std::string, std::string> output_hashes;  // path -> hash
    };

    const Entry* find(Stage s) const;
    bool completed(Stage s) const { return find(s) != nullptr; }
    void record(Stage s, Entry entry);

private:
    std::string path_;
    std::map<std::string, Entry> entries_;
};

struct StageOutcome {
    Stage stage;
    bool skipped = false;
    std::string detail;
};

struct RunResult {
    std::vector<StageOutcome> outcomes;
    std::optional<metrics::EvalReport> report;  // from the evaluate stage
};

// Runs stages in the given order against the shared manifest. Dependencies
// must be satisfied by earlier stages in the list or by completed ledger
// entries; otherwise Error("stage_dependency_missing") names the missing
// prerequisite.
RunResult run_pipeline(const std::vector<Stage>& stages,
                       const config::PipelineConfig& config,
                       std::ostream* log = nullptr);

// Individual stages (also the CLI subcommand entry points).
void stage_ingest(const config::PipelineConfig& config);
void stage_curate(const config::PipelineConfig& config);
void stage_ground(const config::PipelineConfig& config);
void stage_subjects(const config::PipelineConfig& config);
void stage_condition(const config::PipelineConfig& config);
void stage_train(const config::PipelineConfig& config);
void stage_generate(const config::PipelineConfig& config);
metrics::EvalReport stage_evaluate(const config::PipelineConfig& config);

}  // namespace safeforge::pipeline
