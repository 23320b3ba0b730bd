#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "forge/multilingual.hpp"
#include "forge/record.hpp"
#include "forge/reward.hpp"

namespace forge::datasets {

struct SftExample {
    std::string input;   // labeled Question / Original Answer / Critique sections
    std::string output;  // golden answer
    std::string language;
    std::string record_id;

    bool operator==(const SftExample&) const = default;
};

struct DpoExample {
    std::string prompt;
    std::string chosen;
    std::string rejected;
    double s_f1 = 0.0;
    std::string record_id;

    bool operator==(const DpoExample&) const = default;
};

std::string sft_input(std::string_view question, std::string_view original_answer, std::string_view critique);

SftExample make_sft_example(const KnowledgeRecord& record);
SftExample make_sft_example(const multilingual::LocalizedRecord& record);

// One line per base record and per localized record, sorted by (record_id,
// language). Any localized record not `passed` raises ExportGateViolation
// before anything is written.
std::size_t export_sft(std::span<const KnowledgeRecord> records,
                       std::span<const multilingual::LocalizedRecord> localized, const std::filesystem::path& path);

// One line per pair sorted by record_id. chosen == rejected raises
// InvariantViolation before anything is written.
std::size_t export_dpo(std::span<const reward::PreferencePair> pairs, const std::filesystem::path& path);

std::vector<SftExample> import_sft(const std::filesystem::path& path);
std::vector<DpoExample> import_dpo(const std::filesystem::path& path);

// Reference hyperparameters handed to an external trainer. Documentation
// only; nothing here trains.
struct TrainingHyperparams {
    double sft_learning_rate = 1e-5;
    double dpo_learning_rate = 5e-6;
    double warmup_ratio = 0.1;
    int batch_size = 16;
    int max_steps = 1000;
    int lora_rank = 16;
};

struct TrainingPaths {
    std::filesystem::path sft_dataset;
    std::filesystem::path dpo_dataset;
};

// Flat "key = value" file. Empty dataset paths raise PreconditionViolation.
void emit_training_config(const TrainingPaths& paths, const TrainingHyperparams& hyperparams,
                          const std::filesystem::path& out);

std::vector<std::pair<std::string, std::string>> read_training_config(const std::filesystem::path& path);

}  // namespace forge::datasets
