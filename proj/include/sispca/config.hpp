#pragma once

#include "sispca/csv.hpp"
#include "sispca/model.hpp"
#include "sispca/tuning.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sispca::io {

using nlohmann::json;

/// Declarative experiment description. The on-disk format is a JSON document
/// with nested sections; see the README for the grammar.
struct ExperimentConfig {
    struct Data {
        std::string path;
        char delimiter = ',';
        bool has_header = true;
        std::optional<std::string> id_column;
    };
    struct Preprocess {
        bool center = true;  // always true; kept explicit in the file
        bool scale = false;
    };
    struct TargetRef {
        // exactly one of: none, labels_column, columns
        bool none = false;
        std::optional<std::string> labels_column;
        std::vector<std::string> columns;
    };
    struct Subspace {
        std::string name;
        Index dim = 1;
        TargetRef target;
        std::string kernel = "auto";  // auto | delta | linear
        std::string latent_kernel = "linear";  // linear | gaussian
        std::optional<double> latent_width;    // gaussian only; empty = median
    };
    struct Tune {
        std::vector<double> grid;  // explicit values; empty = default ladder
        int n_clusters = 0;        // 0 = auto (eigengap)
    };

    Data data;
    std::optional<Data> targets_file;
    Preprocess preprocess;
    std::vector<Subspace> subspaces;
    model::FitConfig fit;
    std::optional<Tune> tune;
    std::vector<std::string> feature_columns;  // explicit override; empty = infer
    std::optional<std::string> silhouette_labels_column;  // report silhouettes on request
    Index silhouette_components = 3;
};

namespace detail {

inline ExperimentConfig::Data parse_data_section(const json& j) {
    ExperimentConfig::Data out;
    out.path = j.at("path").get<std::string>();
    if (j.contains("delimiter")) {
        const auto d = j.at("delimiter").get<std::string>();
        if (d.size() != 1) throw ConfigError("config: delimiter must be a single character");
        out.delimiter = d[0];
    }
    if (j.contains("has_header")) out.has_header = j.at("has_header").get<bool>();
    if (j.contains("id_column")) out.id_column = j.at("id_column").get<std::string>();
    return out;
}

inline json dump_data_section(const ExperimentConfig::Data& d) {
    json j;
    j["path"] = d.path;
    j["delimiter"] = std::string(1, d.delimiter);
    j["has_header"] = d.has_header;
    if (d.id_column) j["id_column"] = *d.id_column;
    return j;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    if (!j.contains("data")) throw ConfigError("config: missing 'data' section");
    cfg.data = detail::parse_data_section(j.at("data"));
    if (j.contains("targets")) cfg.targets_file = detail::parse_data_section(j.at("targets"));
    if (j.contains("preprocess")) {
        const auto& p = j.at("preprocess");
        if (p.contains("center") && !p.at("center").get<bool>())
            throw ConfigError("config: preprocess.center cannot be disabled");
        if (p.contains("scale")) cfg.preprocess.scale = p.at("scale").get<bool>();
    }
    if (!j.contains("subspaces") || !j.at("subspaces").is_array() || j.at("subspaces").empty())
        throw ConfigError("config: 'subspaces' must be a non-empty array");
    std::set<std::string> names;
    for (const auto& js : j.at("subspaces")) {
        ExperimentConfig::Subspace sub;
        sub.name = js.at("name").get<std::string>();
        if (!names.insert(sub.name).second)
            throw ConfigError("config: duplicate subspace name '" + sub.name + "'");
        sub.dim = js.at("dim").get<Index>();
        const auto& jt = js.at("target");
        if (jt.is_string()) {
            if (jt.get<std::string>() != "none")
                throw ConfigError("config: subspace '" + sub.name +
                                  "': target must be \"none\" or an object");
            sub.target.none = true;
        } else {
            if (jt.contains("labels_column"))
                sub.target.labels_column = jt.at("labels_column").get<std::string>();
            if (jt.contains("columns"))
                sub.target.columns = jt.at("columns").get<std::vector<std::string>>();
            if (jt.contains("column"))
                sub.target.columns.push_back(jt.at("column").get<std::string>());
            if (sub.target.labels_column.has_value() == !sub.target.columns.empty())
                throw ConfigError("config: subspace '" + sub.name +
                                  "': target needs exactly one of labels_column/columns");
        }
        if (js.contains("kernel")) sub.kernel = js.at("kernel").get<std::string>();
        if (sub.kernel != "auto" && sub.kernel != "delta" && sub.kernel != "linear")
            throw ConfigError("config: subspace '" + sub.name + "': unknown kernel '" +
                              sub.kernel + "'");
        if (js.contains("latent_kernel")) {
            const auto& jl = js.at("latent_kernel");
            if (jl.is_string()) {
                sub.latent_kernel = jl.get<std::string>();
            } else {
                sub.latent_kernel = "gaussian";
                if (jl.contains("width")) sub.latent_width = jl.at("width").get<double>();
            }
            if (sub.latent_kernel != "linear" && sub.latent_kernel != "gaussian")
                throw ConfigError("config: subspace '" + sub.name + "': unknown latent kernel");
        }
        cfg.subspaces.push_back(std::move(sub));
    }
    if (j.contains("fit")) {
        const auto& jf = j.at("fit");
        if (jf.contains("lambda")) cfg.fit.lambda = jf.at("lambda").get<double>();
        if (jf.contains("max_iter")) cfg.fit.max_iter = jf.at("max_iter").get<int>();
        if (jf.contains("rel_tol")) cfg.fit.rel_tol = jf.at("rel_tol").get<double>();
        if (jf.contains("seed")) cfg.fit.seed = jf.at("seed").get<std::uint64_t>();
        if (jf.contains("learning_rate"))
            cfg.fit.learning_rate = jf.at("learning_rate").get<double>();
        if (jf.contains("algorithm")) {
            const auto a = jf.at("algorithm").get<std::string>();
            if (a == "linear")
                cfg.fit.algorithm = model::Algorithm::Linear;
            else if (a == "general")
                cfg.fit.algorithm = model::Algorithm::General;
            else
                throw ConfigError("config: unknown algorithm '" + a + "'");
        }
        if (jf.contains("init_ordering")) {
            const auto o = jf.at("init_ordering").get<std::string>();
            if (o == "auto")
                cfg.fit.init_ordering = model::InitOrdering::Auto;
            else if (o == "fixed")
                cfg.fit.init_ordering = model::InitOrdering::Fixed;
            else
                throw ConfigError("config: unknown init_ordering '" + o + "'");
        }
    }
    cfg.fit.validate();
    if (j.contains("tune")) {
        ExperimentConfig::Tune tune;
        const auto& jt = j.at("tune");
        if (jt.contains("grid")) {
            const auto& jg = jt.at("grid");
            if (jg.is_array()) {
                tune.grid = jg.get<std::vector<double>>();
            } else {
                const double lo = jg.at("min").get<double>();
                const double hi = jg.at("max").get<double>();
                const int count = jg.at("count").get<int>();
                if (count < 2 || !(hi > lo) || !(lo > 0.0))
                    throw ConfigError("config: tune.grid needs 0 < min < max and count >= 2");
                const bool with_zero = jg.value("include_zero", true);
                if (with_zero) tune.grid.push_back(0.0);
                for (int i = 0; i < count; ++i) {
                    const double t = static_cast<double>(i) / (count - 1);
                    tune.grid.push_back(lo * std::pow(hi / lo, t));
                }
            }
            tuning::LambdaGrid grid{tune.grid};
            grid.validate();
        } else {
            tune.grid = tuning::LambdaGrid::default_grid().values;
        }
        if (jt.contains("n_clusters")) tune.n_clusters = jt.at("n_clusters").get<int>();
        cfg.tune = std::move(tune);
    }
    if (j.contains("features"))
        cfg.feature_columns = j.at("features").get<std::vector<std::string>>();
    if (j.contains("report")) {
        const auto& jr = j.at("report");
        if (jr.contains("silhouette_labels_column"))
            cfg.silhouette_labels_column = jr.at("silhouette_labels_column").get<std::string>();
        if (jr.contains("silhouette_components"))
            cfg.silhouette_components = jr.at("silhouette_components").get<Index>();
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& err) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + err.what());
    }
    return parse_config(j);
}

inline json dump_config(const ExperimentConfig& cfg) {
    json j;
    j["data"] = detail::dump_data_section(cfg.data);
    if (cfg.targets_file) j["targets"] = detail::dump_data_section(*cfg.targets_file);
    j["preprocess"] = {{"center", true}, {"scale", cfg.preprocess.scale}};
    j["subspaces"] = json::array();
    for (const auto& sub : cfg.subspaces) {
        json js;
        js["name"] = sub.name;
        js["dim"] = sub.dim;
        if (sub.target.none) {
            js["target"] = "none";
        } else if (sub.target.labels_column) {
            js["target"] = {{"labels_column", *sub.target.labels_column}};
        } else {
            js["target"] = {{"columns", sub.target.columns}};
        }
        js["kernel"] = sub.kernel;
        if (sub.latent_kernel == "gaussian") {
            if (sub.latent_width)
                js["latent_kernel"] = {{"width", *sub.latent_width}};
            else
                js["latent_kernel"] = "gaussian";
        } else {
            js["latent_kernel"] = "linear";
        }
        j["subspaces"].push_back(std::move(js));
    }
    j["fit"] = {
        {"lambda", cfg.fit.lambda},
        {"max_iter", cfg.fit.max_iter},
        {"rel_tol", cfg.fit.rel_tol},
        {"algorithm", cfg.fit.algorithm == model::Algorithm::Linear ? "linear" : "general"},
        {"init_ordering",
         cfg.fit.init_ordering == model::InitOrdering::Auto ? "auto" : "fixed"},
        {"seed", cfg.fit.seed},
        {"learning_rate", cfg.fit.learning_rate},
    };
    if (cfg.tune) {
        j["tune"] = {{"grid", cfg.tune->grid}, {"n_clusters", cfg.tune->n_clusters}};
    }
    if (!cfg.feature_columns.empty()) j["features"] = cfg.feature_columns;
    if (cfg.silhouette_labels_column) {
        j["report"] = {{"silhouette_labels_column", *cfg.silhouette_labels_column},
                       {"silhouette_components", cfg.silhouette_components}};
    }
    return j;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(dump_config(cfg).dump())));
    return std::string(buf, 16);
}

}  // namespace sispca::io
