#include "forge/hofstede.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/prompts.hpp"
#include "forge/text.hpp"

namespace forge::hofstede {

using nlohmann::json;
using nlohmann::ordered_json;

void validate(const VsmResponseSet& responses) {
    for (int q = 1; q <= kQuestionCount; ++q) {
        auto it = responses.means.find(q);
        if (it == responses.means.end())
            throw Error(ErrorKind::IncompleteSurvey, "missing mean for question " + std::to_string(q));
        if (!(it->second >= 1.0 && it->second <= 5.0))
            throw Error(ErrorKind::PreconditionViolation, "mean for question " + std::to_string(q) + " outside [1,5]");
    }
    if (responses.n_respondents == 0) throw Error(ErrorKind::PreconditionViolation, "no respondents");
}

DimensionScores score_dimensions(const VsmResponseSet& responses, const VsmConstants& c) {
    validate(responses);
    auto m = [&](int q) { return responses.means.at(q); };
    DimensionScores s;
    s.pdi = 35 * (m(7) - m(2)) + 25 * (m(20) - m(23)) + c.c_pdi;
    s.idv = 35 * (m(4) - m(1)) + 35 * (m(9) - m(6)) + c.c_idv;
    s.mas = 35 * (m(5) - m(3)) + 25 * (m(8) - m(10)) + c.c_mas;
    s.uai = 40 * (m(18) - m(15)) + 25 * (m(21) - m(24)) + c.c_uai;
    s.lto = 40 * (m(13) - m(14)) + 25 * (m(19) - m(22)) + c.c_lto;
    s.ivr = 35 * (m(12) - m(11)) + 40 * (m(17) - m(16)) + c.c_ivr;
    return s;
}

double cultural_distance(const DimensionScores& model, const DimensionScores& reference) {
    const auto a = model.as_array();
    const auto b = reference.as_array();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sum);
}

SurveyConfig survey_from_json(const json& j) {
    std::vector<std::string> shared;
    if (j.contains("options")) shared = j["options"].get<std::vector<std::string>>();
    SurveyConfig cfg;
    for (const auto& q : j.at("questions")) {
        SurveyQuestion sq;
        if (q.is_string()) {
            sq.text = q.get<std::string>();
            sq.options = shared;
        } else {
            sq.text = q.at("text").get<std::string>();
            sq.options = q.contains("options") ? q["options"].get<std::vector<std::string>>() : shared;
        }
        if (text::is_blank(sq.text)) throw Error(ErrorKind::ConfigError, "blank survey question");
        if (sq.options.size() != 5)
            throw Error(ErrorKind::ConfigError, "survey question needs 5 option labels: " + sq.text);
        cfg.questions.push_back(std::move(sq));
    }
    if (cfg.questions.size() != kQuestionCount)
        throw Error(ErrorKind::ConfigError,
                    "survey must list 24 questions, got " + std::to_string(cfg.questions.size()));
    return cfg;
}

SurveyConfig load_survey(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot read " + path.string());
    try {
        return survey_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigError, path.string() + ": " + e.what());
    }
}

std::string survey_user_prompt(const SurveyQuestion& q) {
    std::string p = q.text + "\n";
    for (std::size_t i = 0; i < q.options.size(); ++i) p += std::to_string(i + 1) + ". " + q.options[i] + "\n";
    p += prompts::survey_answer_format;
    return p;
}

std::optional<int> parse_vsm_answer(std::string_view reply) {
    std::size_t i = 0;
    while (i < reply.size() &&
           (std::isspace(static_cast<unsigned char>(reply[i])) || reply[i] == '(' || reply[i] == '"' || reply[i] == '\''))
        ++i;
    if (i >= reply.size()) return std::nullopt;
    const char c = reply[i];
    const bool boundary = i + 1 >= reply.size() || !std::isalnum(static_cast<unsigned char>(reply[i + 1]));
    if (!boundary) return std::nullopt;
    if (c >= '1' && c <= '5') return c - '0';
    const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (u >= 'A' && u <= 'E') return u - 'A' + 1;
    return std::nullopt;
}

VsmResponseSet collect_vsm_responses(backend::Backend& backend, const std::string& culture, const SurveyConfig& survey,
                                     int repetitions, IssueLog* issues) {
    if (repetitions < 1) throw Error(ErrorKind::PreconditionViolation, "repetitions must be >= 1");
    if (survey.questions.size() != kQuestionCount)
        throw Error(ErrorKind::PreconditionViolation, "survey must hold 24 questions");
    const auto system = prompts::fill_named(prompts::survey_persona, "culture", culture);
    const std::size_t reps = static_cast<std::size_t>(repetitions);
    const std::size_t total = survey.questions.size() * reps;

    auto answers = parallel_map<std::optional<int>>(total, backend.config().max_concurrency, [&](std::size_t k) {
        const std::size_t q = k / reps;
        const std::size_t r = k % reps;
        backend::PromptRequest req;
        req.role = backend::Role::target;
        req.system_prompt = system;
        req.user_prompt = survey_user_prompt(survey.questions[q]);
        req.seed = static_cast<std::int64_t>(r);
        const auto subject = culture + "#Q" + std::to_string(q + 1) + "#" + std::to_string(r);
        std::string reply;
        try {
            reply = backend.complete(req).text;
        } catch (const Error& e) {
            note(issues, "hofstede", subject, e.what());
            return std::optional<int>{};
        }
        auto v = parse_vsm_answer(reply);
        if (!v)
            note(issues, "hofstede", subject,
                 std::string(error_kind_name(ErrorKind::UnparseableChoice)) + ": " + text::trim(reply));
        return v;
    });

    VsmResponseSet out;
    out.n_respondents = reps;
    for (std::size_t q = 0; q < survey.questions.size(); ++q) {
        double sum = 0.0;
        int n = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            if (const auto& v = answers[q * reps + r]) {
                sum += *v;
                ++n;
            }
        }
        if (n == 0)
            throw Error(ErrorKind::IncompleteSurvey,
                        culture + ": no parseable replies for question " + std::to_string(q + 1));
        out.means[static_cast<int>(q + 1)] = sum / n;
    }
    return out;
}

ordered_json scores_to_json(const DimensionScores& s) {
    ordered_json j;
    const auto a = s.as_array();
    for (std::size_t i = 0; i < a.size(); ++i) j[kDimensionNames[i]] = a[i];
    return j;
}

DimensionScores scores_from_json(const json& j) {
    return {j.at("pdi").get<double>(), j.at("idv").get<double>(), j.at("mas").get<double>(),
            j.at("uai").get<double>(), j.at("lto").get<double>(), j.at("ivr").get<double>()};
}

VsmConstants constants_from_json(const json& j) {
    return {j.value("pdi", 0.0), j.value("idv", 0.0), j.value("mas", 0.0),
            j.value("uai", 0.0), j.value("lto", 0.0), j.value("ivr", 0.0)};
}

std::map<std::string, DimensionScores> load_reference_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::FileUnreadable, "cannot read " + path.string());
    std::map<std::string, DimensionScores> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        try {
            const auto j = json::parse(line);
            out[j.at("culture").get<std::string>()] = scores_from_json(j);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::SchemaViolation, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace forge::hofstede
