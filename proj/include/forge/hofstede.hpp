#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/backend.hpp"
#include "forge/issues.hpp"

namespace forge::hofstede {

inline constexpr int kQuestionCount = 24;

struct VsmResponseSet {
    std::map<int, double> means;  // question index 1..24 -> mean answer in [1,5]
    std::size_t n_respondents = 1;
};

struct VsmConstants {
    double c_pdi = 0.0, c_idv = 0.0, c_mas = 0.0, c_uai = 0.0, c_lto = 0.0, c_ivr = 0.0;
};

struct DimensionScores {
    double pdi = 0.0, idv = 0.0, mas = 0.0, uai = 0.0, lto = 0.0, ivr = 0.0;

    std::array<double, 6> as_array() const { return {pdi, idv, mas, uai, lto, ivr}; }
    bool operator==(const DimensionScores&) const = default;
};

inline constexpr std::array<const char*, 6> kDimensionNames = {"pdi", "idv", "mas", "uai", "lto", "ivr"};

// Throws IncompleteSurvey when a mean is missing, PreconditionViolation when
// one lies outside [1,5].
void validate(const VsmResponseSet& responses);

DimensionScores score_dimensions(const VsmResponseSet& responses, const VsmConstants& constants = {});

double cultural_distance(const DimensionScores& model, const DimensionScores& reference);

struct SurveyQuestion {
    std::string text;
    std::vector<std::string> options;  // labels for answers 1..5
};

struct SurveyConfig {
    std::vector<SurveyQuestion> questions;  // exactly 24, in VSM order
};

// {"options": [...], "questions": ["text" | {"text", "options"}, ...]}.
// Per-question options override the shared list.
SurveyConfig survey_from_json(const nlohmann::json& j);
SurveyConfig load_survey(const std::filesystem::path& path);

std::string survey_user_prompt(const SurveyQuestion& q);

// Leading digit 1-5, or a leading option letter A-E mapped to 1-5.
std::optional<int> parse_vsm_answer(std::string_view reply);

// Asks every question `repetitions` times under the culture persona. Reply
// r uses seed r. Unparseable replies are dropped and reported; a question left
// with none raises IncompleteSurvey.
VsmResponseSet collect_vsm_responses(backend::Backend& backend, const std::string& culture,
                                     const SurveyConfig& survey, int repetitions, IssueLog* issues = nullptr);

nlohmann::ordered_json scores_to_json(const DimensionScores& s);
DimensionScores scores_from_json(const nlohmann::json& j);
VsmConstants constants_from_json(const nlohmann::json& j);

// Lines of {"culture","pdi","idv","mas","uai","lto","ivr"}.
std::map<std::string, DimensionScores> load_reference_scores(const std::filesystem::path& path);

}  // namespace forge::hofstede
