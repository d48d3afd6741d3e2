#include "mdreg/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "mdreg/errors.hpp"

namespace mdreg {

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& reason) {
    throw ConfigError(key + ": " + reason);
}

double as_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double parsed = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size())
        fail(key, "expected a number, found '" + value + "'");
    return parsed;
}

std::uint64_t as_u64(const std::string& key, const std::string& value) {
    if (value.empty() || value[0] == '-' || value[0] == '+')
        fail(key, "expected an unsigned integer, found '" + value + "'");
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(value.c_str(), &end, 10);
    if (end != value.c_str() + value.size())
        fail(key, "expected an unsigned integer, found '" + value + "'");
    return parsed;
}

std::size_t as_size(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(as_u64(key, value));
}

bool as_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    fail(key, "expected true/false, found '" + value + "'");
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

struct Key {
    const char* name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& key_table() {
    static const std::vector<Key> table = [] {
        std::vector<Key> keys;
        const auto size_key = [&](const char* name, std::size_t RunConfig::* field) {
            keys.push_back({name,
                            [name, field](RunConfig& c, const std::string& v) {
                                c.*field = as_size(name, v);
                            },
                            [field](const RunConfig& c) { return std::to_string(c.*field); }});
        };
        const auto u64_key = [&](const char* name, std::uint64_t RunConfig::* field) {
            keys.push_back({name,
                            [name, field](RunConfig& c, const std::string& v) {
                                c.*field = as_u64(name, v);
                            },
                            [field](const RunConfig& c) { return std::to_string(c.*field); }});
        };
        const auto double_key = [&](const char* name, double RunConfig::* field) {
            keys.push_back({name,
                            [name, field](RunConfig& c, const std::string& v) {
                                c.*field = as_double(name, v);
                            },
                            [field](const RunConfig& c) { return format_double(c.*field); }});
        };
        const auto bool_key = [&](const char* name, bool RunConfig::* field) {
            keys.push_back({name,
                            [name, field](RunConfig& c, const std::string& v) {
                                c.*field = as_bool(name, v);
                            },
                            [field](const RunConfig& c) {
                                return std::string(c.*field ? "true" : "false");
                            }});
        };
        const auto enum_key = [&]<typename E>(const char* name, E RunConfig::* field,
                                              std::vector<std::pair<std::string, E>> values) {
            keys.push_back(
                {name,
                 [name, field, values](RunConfig& c, const std::string& v) {
                     for (const auto& [word, item] : values)
                         if (word == v) {
                             c.*field = item;
                             return;
                         }
                     std::string expected;
                     for (const auto& [word, item] : values)
                         expected += expected.empty() ? word : "|" + word;
                     fail(name, "expected one of " + expected + ", found '" + v + "'");
                 },
                 [field, values](const RunConfig& c) {
                     for (const auto& [word, item] : values)
                         if (c.*field == item) return word;
                     return std::string("?");
                 }});
        };

        size_key("descriptor_k", &RunConfig::descriptor_k);
        u64_key("descriptor_seed", &RunConfig::descriptor_seed);
        double_key("voxel_size", &RunConfig::voxel_size);
        size_key("graph_k", &RunConfig::graph_k);
        u64_key("graph_seed", &RunConfig::graph_seed);
        enum_key("graph_neighbor_source", &RunConfig::graph_neighbor_source,
                 {{"graph_features", NeighborSource::graph_features},
                  {"input_features", NeighborSource::input_features}});
        u64_key("fusion_seed", &RunConfig::fusion_seed);
        double_key("lambda_coord", &RunConfig::lambda_coord);
        double_key("lambda_feat", &RunConfig::lambda_feat);
        double_key("lambda_graph", &RunConfig::lambda_graph);
        bool_key("scaled_attention", &RunConfig::scaled_attention);
        double_key("patch_sigma", &RunConfig::patch_sigma);
        size_key("patch_topk", &RunConfig::patch_topk);
        enum_key("patch_normalization", &RunConfig::patch_normalization,
                 {{"rows", PatchNormalization::rows}, {"global", PatchNormalization::global}});
        bool_key("patch_mutual", &RunConfig::patch_mutual);
        size_key("point_k", &RunConfig::point_k);
        size_key("sinkhorn_iterations", &RunConfig::sinkhorn_iterations);
        double_key("sinkhorn_temperature", &RunConfig::sinkhorn_temperature);
        double_key("confidence_floor", &RunConfig::confidence_floor);
        double_key("consistency_delta", &RunConfig::consistency_delta);
        double_key("consistency_keep", &RunConfig::consistency_keep);
        size_key("consistency_rounds", &RunConfig::consistency_rounds);
        enum_key("estimator", &RunConfig::estimator,
                 {{"dism", Estimator::dism},
                  {"ransac", Estimator::ransac},
                  {"lgr", Estimator::lgr}});
        double_key("epsilon", &RunConfig::epsilon);
        size_key("dism_iterations", &RunConfig::dism_iterations);
        enum_key("decay_mode", &RunConfig::decay_mode,
                 {{"per_pair", DecayMode::per_pair}, {"uniform", DecayMode::uniform}});
        size_key("ransac_max_iterations", &RunConfig::ransac_max_iterations);
        double_key("ransac_inlier_threshold", &RunConfig::ransac_inlier_threshold);
        double_key("ransac_confidence", &RunConfig::ransac_confidence);
        u64_key("ransac_seed", &RunConfig::ransac_seed);
        double_key("lgr_threshold", &RunConfig::lgr_threshold);
        size_key("lgr_rounds", &RunConfig::lgr_rounds);
        double_key("inlier_tau", &RunConfig::inlier_tau);
        double_key("rmse_tau", &RunConfig::rmse_tau);
        double_key("fmr_tau", &RunConfig::fmr_tau);
        enum_key("success_criterion", &RunConfig::success_criterion,
                 {{"rmse", SuccessCriterion::rmse},
                  {"thresholds", SuccessCriterion::thresholds}});
        size_key("workers", &RunConfig::workers);
        bool_key("include_timing", &RunConfig::include_timing);
        return keys;
    }();
    return table;
}

std::string trim(const std::string& text) {
    std::size_t begin = 0, end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return text.substr(begin, end - begin);
}

void check_positive(const char* key, double value) {
    if (!(value > 0.0) || !std::isfinite(value))
        fail(key, "must be positive and finite, got " + format_double(value));
}

void check_non_negative(const char* key, double value) {
    if (!(value >= 0.0) || !std::isfinite(value))
        fail(key, "must be non-negative and finite, got " + format_double(value));
}

} // namespace

void validate_config(const RunConfig& config) {
    if (config.descriptor_k < 4) fail("descriptor_k", "descriptor computation needs k >= 4");
    check_non_negative("voxel_size", config.voxel_size);
    if (config.graph_k < 1) fail("graph_k", "must be at least 1");
    if (!std::isfinite(config.lambda_coord)) fail("lambda_coord", "must be finite");
    if (!std::isfinite(config.lambda_feat)) fail("lambda_feat", "must be finite");
    if (!std::isfinite(config.lambda_graph)) fail("lambda_graph", "must be finite");
    check_non_negative("patch_sigma", config.patch_sigma);
    if (config.point_k < 1) fail("point_k", "must be at least 1");
    if (config.sinkhorn_iterations < 1) fail("sinkhorn_iterations", "must be at least 1");
    check_positive("sinkhorn_temperature", config.sinkhorn_temperature);
    if (!(config.confidence_floor >= 0.0 && config.confidence_floor <= 1.0))
        fail("confidence_floor", "must lie in [0, 1]");
    check_non_negative("consistency_delta", config.consistency_delta);
    if (!(config.consistency_keep >= 0.0 && config.consistency_keep <= 1.0))
        fail("consistency_keep", "must lie in [0, 1]");
    check_non_negative("epsilon", config.epsilon);
    if (config.ransac_max_iterations < 1) fail("ransac_max_iterations", "must be at least 1");
    check_positive("ransac_inlier_threshold", config.ransac_inlier_threshold);
    if (!(config.ransac_confidence > 0.0 && config.ransac_confidence < 1.0))
        fail("ransac_confidence", "must lie strictly between 0 and 1");
    check_positive("lgr_threshold", config.lgr_threshold);
    if (config.lgr_rounds < 1) fail("lgr_rounds", "must be at least 1");
    check_positive("inlier_tau", config.inlier_tau);
    check_positive("rmse_tau", config.rmse_tau);
    if (!(config.fmr_tau >= 0.0 && config.fmr_tau <= 1.0))
        fail("fmr_tau", "must lie in [0, 1]");
    if (config.workers < 1) fail("workers", "must be at least 1");
}

RunConfig parse_config(const std::string& text) {
    RunConfig config;
    std::set<std::string> seen;
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" +
                              line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!seen.insert(key).second)
            throw ConfigError("duplicate key '" + key + "' (line " + std::to_string(line_no) +
                              ")");
        bool known = false;
        for (const Key& entry : key_table()) {
            if (key == entry.name) {
                entry.set(config, value);
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError("unknown key '" + key + "'");
    }
    validate_config(config);
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& config) {
    std::string out;
    for (const Key& entry : key_table()) {
        out += entry.name;
        out += '=';
        out += entry.get(config);
        out += '\n';
    }
    return out;
}

const char* estimator_name(Estimator estimator) {
    switch (estimator) {
        case Estimator::dism: return "dism";
        case Estimator::ransac: return "ransac";
        case Estimator::lgr: return "lgr";
    }
    throw InternalError("estimator_name: unhandled estimator");
}

Estimator parse_estimator(const std::string& token) {
    if (token == "dism") return Estimator::dism;
    if (token == "ransac") return Estimator::ransac;
    if (token == "lgr") return Estimator::lgr;
    throw ConfigError("estimator: expected one of dism|ransac|lgr, found '" + token + "'");
}

const std::vector<std::string>& config_key_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const Key& entry : key_table()) out.push_back(entry.name);
        return out;
    }();
    return names;
}

void set_config_key(RunConfig& config, const std::string& key, const std::string& value) {
    for (const Key& entry : key_table())
        if (entry.name == key) {
            entry.set(config, value);
            return;
        }
    throw ConfigError("unknown key '" + key + "'");
}

} // namespace mdreg
