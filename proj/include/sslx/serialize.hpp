#ifndef SSLX_SERIALIZE_HPP
#define SSLX_SERIALIZE_HPP

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslx/asymptotics.hpp"
#include "sslx/estimation.hpp"
#include "sslx/experiments.hpp"
#include "sslx/fixtures.hpp"
#include "sslx/io.hpp"
#include "sslx/tradeoff.hpp"

namespace sslx {

using json = nlohmann::json;

// Raised for malformed configuration; the CLI maps it to the usage exit code.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- JSON -> domain objects --------------------------------------------------

inline Selector selector_from_json(const json& j) {
    const std::string type = j.value("type", "");
    if (type == "full") return FullSelector{};
    if (type == "empty") return EmptySelector{};
    if (type == "prefix_fraction") {
        if (!j.contains("fraction")) throw ConfigError("selector prefix_fraction needs 'fraction'");
        return PrefixFraction{j["fraction"].get<double>()};
    }
    if (type == "window") {
        ContiguousWindow w;
        w.length = j.value("length", 1);
        const std::string placement = j.value("placement", "prefix");
        if (placement == "prefix")
            w.placement = ContiguousWindow::Placement::Prefix;
        else if (placement == "random")
            w.placement = ContiguousWindow::Placement::UniformRandom;
        else
            throw ConfigError("selector window: unknown placement '" + placement + "'");
        return w;
    }
    if (type == "explicit") {
        ExplicitIndexSet e;
        if (!j.contains("positions_by_length"))
            throw ConfigError("selector explicit needs 'positions_by_length'");
        for (const auto& [key, val] : j["positions_by_length"].items())
            e.positions_by_length[std::stoi(key)] = val.get<std::vector<int>>();
        return e;
    }
    throw ConfigError("unknown selector type '" + type + "'");
}

inline LabelingPolicy policy_from_json(const json& j) {
    LabelingPolicy p;
    if (j.contains("all_or_nothing")) {
        p = LabelingPolicy::all_or_nothing(j["all_or_nothing"].get<double>());
    } else if (j.value("thirds", false)) {
        p = LabelingPolicy::thirds();
    } else if (j.contains("components")) {
        for (const auto& c : j["components"])
            p.components.push_back({selector_from_json(c.at("selector")),
                                    c.at("weight").get<double>()});
    } else {
        throw ConfigError("policy: expected 'all_or_nothing', 'thirds', or 'components'");
    }
    p.validate();
    return p;
}

inline LengthDistribution lengths_from_json(const json& j) {
    LengthDistribution d;
    if (j.contains("fixed")) {
        d = LengthDistribution::fixed(j["fixed"].get<int>());
    } else {
        d.support = j.at("support").get<std::vector<int>>();
        d.probabilities = j.at("probabilities").get<std::vector<double>>();
    }
    d.validate();
    return d;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw ConfigError("matrix: empty");
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw ConfigError("matrix: ragged rows");
        for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
    }
    return m;
}

inline NaiveBayesModel naive_bayes_from_json(const json& j) {
    if (j.contains("file")) return load_naive_bayes(j["file"].get<std::string>());
    if (j.contains("random")) {
        const auto& r = j["random"];
        return random_naive_bayes(r.at("classes").get<int>(), r.at("vocab").get<int>(),
                                  r.value("doc_length", 20), r.value("seed", 7),
                                  r.value("concentration", 1.0));
    }
    if (j.value("standard_fixture", false)) return standard_nb_fixture();
    return NaiveBayesModel(vector_from_json(j.at("prior")),
                           matrix_from_json(j.at("conditionals")),
                           j.value("doc_length", 20));
}

inline ChainModel chain_from_json(const json& j) {
    if (j.contains("file")) return load_chain(j["file"].get<std::string>());
    if (j.contains("random")) {
        const auto& r = j["random"];
        return random_chain(r.at("states").get<int>(), r.at("vocab").get<int>(),
                            r.value("seed", 7), r.value("concentration", 1.0));
    }
    if (j.value("standard_fixture", false)) return standard_chain_fixture();
    return ChainModel(vector_from_json(j.at("initial")), matrix_from_json(j.at("transition")),
                      matrix_from_json(j.at("emission")));
}

inline EmConfig em_from_json(const json& j) {
    EmConfig c;
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.tolerance = j.value("tolerance", c.tolerance);
    c.restarts = j.value("restarts", c.restarts);
    c.smoothing = j.value("smoothing", c.smoothing);
    c.init_noise = j.value("init_noise", c.init_noise);
    c.seed = j.value("seed", c.seed);
    c.allow_unlabeled = j.value("allow_unlabeled", c.allow_unlabeled);
    c.validate();
    return c;
}

inline AsymptoticReport::Method method_from_json(const json& j, const char* key = "method") {
    const std::string m = j.value(key, "enumeration");
    if (m == "enumeration") return AsymptoticReport::Method::Enumeration;
    if (m == "monte_carlo") return AsymptoticReport::Method::MonteCarlo;
    throw ConfigError(std::string("unknown method '") + m + "'");
}

// --- domain objects -> JSON --------------------------------------------------

inline json to_json(const Eigen::VectorXd& v) {
    json j = json::array();
    for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

inline json to_json(const Eigen::MatrixXd& m) {
    json j = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        j.push_back(row);
    }
    return j;
}

inline json params_to_json(const ParamVector& p) {
    json blocks = json::array();
    const auto rows = p.to_probabilities();
    for (std::size_t i = 0; i < rows.size(); ++i)
        blocks.push_back({{"name", p.layout().block(i).name}, {"probabilities", to_json(rows[i])}});
    return {{"free_values", to_json(p.values())}, {"blocks", blocks}};
}

inline json fit_to_json(const FitResult& f) {
    return {{"estimate", params_to_json(f.estimate)},
            {"log_likelihood", f.log_likelihood},
            {"iterations", f.iterations},
            {"trace", f.trace},
            {"restart_index", f.restart_index}};
}

inline json report_to_json(const AsymptoticReport& r) {
    json j = {{"sigma", to_json(r.sigma)},
              {"eigenvalues", to_json(r.eigenvalues)},
              {"rank_deficient", r.rank_deficient},
              {"method", r.method == AsymptoticReport::Method::Enumeration ? "enumeration"
                                                                           : "monte_carlo"}};
    if (r.inverse_sigma) {
        j["inverse_sigma"] = to_json(*r.inverse_sigma);
        j["trace_inverse"] = r.trace_inverse;
        j["log_trace_inverse"] = r.log_trace_inverse;
    }
    if (r.rank_deficient) j["null_directions"] = to_json(r.null_directions);
    if (r.monte_carlo)
        j["monte_carlo"] = {{"samples", r.monte_carlo->samples},
                            {"max_entry_standard_error", r.monte_carlo->max_entry_standard_error}};
    return j;
}

inline json solution_to_json(const TradeoffSolution& s) {
    json table = json::array();
    for (const auto& e : s.evaluations)
        table.push_back({{"id", e.candidate.id},
                         {"n", e.candidate.n},
                         {"lambda", e.candidate.lambda},
                         {"cost", e.cost},
                         {"trace_inverse", e.trace_inverse},
                         {"error", e.error},
                         {"feasible", e.feasible},
                         {"on_frontier", e.on_frontier}});
    json j = {{"feasible", s.feasible}, {"candidates", table}};
    if (s.feasible) {
        j["chosen_index"] = s.chosen_index;
        j["chosen_id"] = s.evaluations[s.chosen_index].candidate.id;
        j["objective_value"] = s.objective_value;
    } else {
        j["infeasibility_reason"] = s.infeasibility_reason;
    }
    return j;
}

inline json plan_to_json(const TwoStagePlan& p) {
    return {{"initial_labels", p.initial_labels},
            {"plug_in_estimate", params_to_json(p.plug_in_estimate)},
            {"estimated_trace", p.estimated_trace},
            {"reference_lambda", p.reference_lambda},
            {"solution", solution_to_json(p.solution)}};
}

inline json study_to_json(const StudyResult& s) {
    // aggregates per (grid point, metric), recomputable from the CSV rows
    std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
    for (const auto& r : s.rows)
        if (r.replicate >= 0) groups[{r.grid_id, r.metric}].push_back(r.value);
    json aggregates = json::array();
    for (const auto& [key, vals] : groups) {
        double m = mean(vals);
        double var = 0.0;
        for (double v : vals) var += (v - m) * (v - m);
        var = vals.size() > 1 ? var / (vals.size() - 1) : 0.0;
        aggregates.push_back({{"grid_id", key.first},
                              {"metric", key.second},
                              {"count", vals.size()},
                              {"mean", m},
                              {"median", median(vals)},
                              {"std", std::sqrt(var)}});
    }
    json grid_rows = json::array();
    for (const auto& r : s.rows)
        if (r.replicate < 0)
            grid_rows.push_back({{"grid_id", r.grid_id}, {"metric", r.metric}, {"value", r.value}});
    return {{"schema", "sslx-study-v1"},
            {"perplexity_definition",
             "exp(-mean per-sequence complete-data log-likelihood on held-out data)"},
            {"aggregates", aggregates},
            {"grid_values", grid_rows}};
}

inline void write_json_file(const json& j, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("write_json_file: cannot open " + path);
    os << j.dump(2) << '\n';
}

inline json load_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open config file " + path);
    try {
        // comments allowed in config files
        return json::parse(is, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
}

} // namespace sslx

#endif
