#include "forge/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

#include "forge/error.hpp"
#include "forge/text.hpp"

namespace forge::datasets {

using nlohmann::json;
using nlohmann::ordered_json;

std::string sft_input(std::string_view question, std::string_view original_answer, std::string_view critique) {
    std::string out = "Question:\n";
    out.append(question);
    out += "\n\nOriginal Answer:\n";
    out.append(original_answer);
    out += "\n\nCritique:\n";
    out.append(critique);
    return out;
}

SftExample make_sft_example(const KnowledgeRecord& r) {
    return {sft_input(r.question, r.target.text, r.critique), r.golden.text, r.language, r.record_id};
}

SftExample make_sft_example(const multilingual::LocalizedRecord& r) {
    return {sft_input(r.question, r.target, r.critique), r.golden, r.language, r.base_record_id};
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::FileUnwritable, "cannot write " + path.string());
    return out;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot read " + path.string());
    std::vector<json> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw Error(ErrorKind::SchemaViolation, path.string() + ":" + std::to_string(line_no) + " is not JSON");
        out.push_back(std::move(j));
    }
    return out;
}

void require_nonempty(const SftExample& e) {
    if (e.input.empty() || e.output.empty() || e.language.empty() || e.record_id.empty())
        throw Error(ErrorKind::InvariantViolation, "SFT example for '" + e.record_id + "' has an empty field");
}

}  // namespace

std::size_t export_sft(std::span<const KnowledgeRecord> records,
                       std::span<const multilingual::LocalizedRecord> localized, const std::filesystem::path& path) {
    for (const auto& l : localized)
        if (l.alignment != multilingual::Alignment::passed)
            throw Error(ErrorKind::ExportGateViolation, "localized record " + l.base_record_id + "@" + l.language +
                                                            " has alignment " +
                                                            std::string(multilingual::alignment_name(l.alignment)));
    std::vector<SftExample> examples;
    examples.reserve(records.size() + localized.size());
    for (const auto& r : records) examples.push_back(make_sft_example(r));
    for (const auto& l : localized) examples.push_back(make_sft_example(l));
    for (const auto& e : examples) require_nonempty(e);
    std::stable_sort(examples.begin(), examples.end(), [](const SftExample& a, const SftExample& b) {
        return std::tie(a.record_id, a.language) < std::tie(b.record_id, b.language);
    });

    auto out = open_for_write(path);
    for (const auto& e : examples) {
        ordered_json j;
        j["input"] = e.input;
        j["output"] = e.output;
        j["language"] = e.language;
        j["record_id"] = e.record_id;
        out << j.dump() << '\n';
    }
    return examples.size();
}

std::size_t export_dpo(std::span<const reward::PreferencePair> pairs, const std::filesystem::path& path) {
    for (const auto& p : pairs)
        if (p.chosen == p.rejected)
            throw Error(ErrorKind::InvariantViolation, "pair " + p.record_id + " has chosen == rejected");
    std::vector<const reward::PreferencePair*> sorted;
    for (const auto& p : pairs) sorted.push_back(&p);
    std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->record_id < b->record_id; });

    auto out = open_for_write(path);
    for (const auto* p : sorted) {
        ordered_json j;
        j["prompt"] = p->prompt;
        j["chosen"] = p->chosen;
        j["rejected"] = p->rejected;
        j["s_f1"] = p->s_f1;
        j["record_id"] = p->record_id;
        out << j.dump() << '\n';
    }
    return sorted.size();
}

std::vector<SftExample> import_sft(const std::filesystem::path& path) {
    std::vector<SftExample> out;
    for (const auto& j : read_jsonl(path))
        out.push_back({j.at("input").get<std::string>(), j.at("output").get<std::string>(),
                       j.at("language").get<std::string>(), j.at("record_id").get<std::string>()});
    return out;
}

std::vector<DpoExample> import_dpo(const std::filesystem::path& path) {
    std::vector<DpoExample> out;
    for (const auto& j : read_jsonl(path))
        out.push_back({j.at("prompt").get<std::string>(), j.at("chosen").get<std::string>(),
                       j.at("rejected").get<std::string>(), j.at("s_f1").get<double>(),
                       j.at("record_id").get<std::string>()});
    return out;
}

void emit_training_config(const TrainingPaths& paths, const TrainingHyperparams& hp, const std::filesystem::path& out_path) {
    if (paths.sft_dataset.empty()) throw Error(ErrorKind::PreconditionViolation, "SFT dataset path is missing");
    if (paths.dpo_dataset.empty()) throw Error(ErrorKind::PreconditionViolation, "DPO dataset path is missing");
    auto out = open_for_write(out_path);
    out << "# reference training configuration for an external SFT -> DPO trainer\n";
    out << "sft_dataset = " << paths.sft_dataset.generic_string() << '\n';
    out << "dpo_dataset = " << paths.dpo_dataset.generic_string() << '\n';
    out << "sft_learning_rate = " << text::format_number(hp.sft_learning_rate) << '\n';
    out << "dpo_learning_rate = " << text::format_number(hp.dpo_learning_rate) << '\n';
    out << "warmup_ratio = " << text::format_number(hp.warmup_ratio) << '\n';
    out << "batch_size = " << hp.batch_size << '\n';
    out << "max_steps = " << hp.max_steps << '\n';
    out << "lora_rank = " << hp.lora_rank << '\n';
}

std::vector<std::pair<std::string, std::string>> read_training_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot read " + path.string());
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::SchemaViolation, "bad config line: " + t);
        out.emplace_back(text::trim(t.substr(0, eq)), text::trim(t.substr(eq + 1)));
    }
    return out;
}

}  // namespace forge::datasets
