#pragma once

#include "sispca/config.hpp"
#include "sispca/csv.hpp"
#include "sispca/metrics.hpp"
#include "sispca/model.hpp"
#include "sispca/simulate.hpp"
#include "sispca/tuning.hpp"
#include "sispca/version.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sispca::io {

namespace fs = std::filesystem;

/// Everything a fit/tune run needs in memory: preprocessed features, specs,
/// and the columns kept around for reporting.
struct ResolvedExperiment {
    model::DataMatrix X;
    std::vector<model::SubspaceSpec> specs;
    std::vector<std::string> feature_names;
    std::optional<std::vector<std::string>> silhouette_labels;
    Index silhouette_components = 3;
};

namespace detail {

inline bool cell_is_numeric(const std::string& cell) {
    if (cell.empty()) return false;
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    return res.ec == std::errc{} && res.ptr == cell.data() + cell.size() && !std::isnan(v);
}

inline bool column_is_numeric(const Table& table, Index col) {
    for (const auto& row : table.rows)
        if (!cell_is_numeric(row[static_cast<std::size_t>(col)])) return false;
    return !table.rows.empty();
}

/// Finds the table holding a column: the targets file wins when it has it.
inline const Table* locate_column(const Table& data, const Table* targets,
                                  const std::string& name) {
    if (targets && targets->has_column(name)) return targets;
    if (data.has_column(name)) return &data;
    throw ConfigError("target column '" + name + "' not found in data or targets file");
}

}  // namespace detail

inline ResolvedExperiment resolve_experiment(const ExperimentConfig& cfg,
                                             const fs::path& base_dir = {}) {
    const auto resolve_path = [&](const std::string& p) {
        fs::path path(p);
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        return path.string();
    };
    const Table data = read_table(resolve_path(cfg.data.path), cfg.data.delimiter,
                                  cfg.data.has_header);
    std::optional<Table> targets;
    if (cfg.targets_file)
        targets = read_table(resolve_path(cfg.targets_file->path), cfg.targets_file->delimiter,
                             cfg.targets_file->has_header);
    const Table* targets_ptr = targets ? &*targets : nullptr;

    // Columns referenced as supervision never enter the feature matrix.
    std::set<std::string> reserved;
    if (cfg.data.id_column) reserved.insert(*cfg.data.id_column);
    for (const auto& sub : cfg.subspaces) {
        if (sub.target.labels_column) reserved.insert(*sub.target.labels_column);
        for (const auto& c : sub.target.columns) reserved.insert(c);
    }
    if (cfg.silhouette_labels_column) reserved.insert(*cfg.silhouette_labels_column);

    ResolvedExperiment out;
    if (!cfg.feature_columns.empty()) {
        out.feature_names = cfg.feature_columns;
    } else {
        for (std::size_t c = 0; c < data.header.size(); ++c) {
            if (reserved.count(data.header[c])) continue;
            if (!detail::column_is_numeric(data, static_cast<Index>(c))) continue;
            out.feature_names.push_back(data.header[c]);
        }
        if (out.feature_names.empty())
            throw ConfigError("no numeric feature columns remain after excluding targets");
    }
    const Matrix raw = numeric_columns(data, out.feature_names, "feature matrix");
    out.X = model::DataMatrix::standardize(raw, cfg.preprocess.scale);

    for (const auto& sub : cfg.subspaces) {
        model::SubspaceSpec spec;
        spec.name = sub.name;
        spec.dim = sub.dim;
        if (sub.latent_kernel == "gaussian")
            spec.latent_kernel = sub.latent_width
                                     ? model::LatentKernel::gaussian_width(*sub.latent_width)
                                     : model::LatentKernel::gaussian();
        if (sub.target.none) {
            spec.target = kernels::SupervisionTarget::identity(sub.name);
        } else if (sub.target.labels_column) {
            const Table* t = detail::locate_column(data, targets_ptr, *sub.target.labels_column);
            spec.target = kernels::SupervisionTarget::categorical(
                string_column(*t, *sub.target.labels_column), *sub.target.labels_column);
        } else {
            // Column-based target: kernel 'auto' picks linear for numeric
            // columns and delta for a single non-numeric one.
            bool numeric = true;
            for (const auto& name : sub.target.columns) {
                const Table* t = detail::locate_column(data, targets_ptr, name);
                numeric = numeric && detail::column_is_numeric(*t, t->column_index(name));
            }
            std::string kernel = sub.kernel;
            if (kernel == "auto") kernel = numeric ? "linear" : "delta";
            if (kernel == "linear") {
                Matrix Y(static_cast<Index>(data.rows.size()),
                         static_cast<Index>(sub.target.columns.size()));
                for (std::size_t c = 0; c < sub.target.columns.size(); ++c) {
                    const Table* t =
                        detail::locate_column(data, targets_ptr, sub.target.columns[c]);
                    Y.col(static_cast<Index>(c)) =
                        numeric_columns(*t, {sub.target.columns[c]},
                                        "target '" + sub.name + "'");
                }
                spec.target = kernels::SupervisionTarget::continuous(std::move(Y), sub.name);
            } else {
                if (sub.target.columns.size() != 1)
                    throw ConfigError("subspace '" + sub.name +
                                      "': delta kernel expects exactly one labels column");
                const Table* t = detail::locate_column(data, targets_ptr, sub.target.columns[0]);
                spec.target = kernels::SupervisionTarget::categorical(
                    string_column(*t, sub.target.columns[0]), sub.target.columns[0]);
            }
        }
        out.specs.push_back(std::move(spec));
    }

    if (cfg.silhouette_labels_column) {
        const Table* t = detail::locate_column(data, targets_ptr, *cfg.silhouette_labels_column);
        out.silhouette_labels = string_column(*t, *cfg.silhouette_labels_column);
        out.silhouette_components = cfg.silhouette_components;
    }
    return out;
}

namespace detail {

inline std::vector<std::string> component_header(const std::string& prefix, Index d) {
    std::vector<std::string> h;
    h.reserve(static_cast<std::size_t>(d));
    for (Index c = 0; c < d; ++c) h.push_back(prefix + "PC" + std::to_string(c + 1));
    return h;
}

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << j.dump(2) << "\n";
}

inline json fit_metrics_json(const model::FittedModel& model,
                             const ResolvedExperiment& experiment) {
    json j;
    j["objective_trace"] = model.objective_trace;
    j["converged"] = model.converged;
    json order = json::array();
    for (Index idx : model.update_order) order.push_back(model.specs[static_cast<std::size_t>(idx)].name);
    j["update_order"] = order;

    j["subspaces"] = json::array();
    for (std::size_t s = 0; s < model.subspaces.size(); ++s) {
        const auto& sub = model.subspaces[s];
        json js;
        js["name"] = model.specs[s].name;
        js["dim"] = model.specs[s].dim;
        std::vector<double> ev(sub.explained_variance.data(),
                               sub.explained_variance.data() + sub.explained_variance.size());
        js["explained_variance"] = ev;
        j["subspaces"].push_back(std::move(js));
    }

    if (model.subspaces.size() >= 2) {
        j["pairwise"] = json::array();
        const auto report = metrics::subspace_hsic_report(model);
        for (const auto& pair : report) {
            json jp;
            jp["a"] = model.specs[pair.i].name;
            jp["b"] = model.specs[pair.j].name;
            jp["hsic_linear"] = pair.hsic_linear;
            jp["hsic_gaussian"] = pair.hsic_gaussian;
            jp["grassmann"] = metrics::grassmann_geodesic(
                metrics::score_basis(model.subspaces[pair.i].Z),
                metrics::score_basis(model.subspaces[pair.j].Z));
            j["pairwise"].push_back(std::move(jp));
        }
    }

    if (experiment.silhouette_labels) {
        json sil;
        for (std::size_t s = 0; s < model.subspaces.size(); ++s) {
            const Matrix& Z = model.subspaces[s].Z;
            const Index k = std::min(experiment.silhouette_components, Z.cols());
            sil[model.specs[s].name] =
                metrics::silhouette(Z.leftCols(k), *experiment.silhouette_labels);
        }
        j["silhouettes"] = std::move(sil);
    }
    j["conventions"] = {
        {"grassmann_space", "orthonormalized centered scores"},
        {"hsic_linear", "unnormalized, linear kernels on scores"},
        {"hsic_gaussian", "normalized by (n-1)^2, median bandwidth per subspace"},
    };
    return j;
}

inline json manifest_json(const std::string& command, const ExperimentConfig* cfg,
                          std::uint64_t seed, const std::vector<std::string>& artifacts) {
    json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["seed"] = seed;
    if (cfg) {
        j["config"] = dump_config(*cfg);
        j["config_hash"] = config_hash(*cfg);
    }
    j["artifacts"] = artifacts;
    return j;
}

}  // namespace detail

struct RunArtifacts {
    fs::path out_dir;
    std::vector<std::string> files;
};

/// Fit command: fits the configured model and writes loadings, scores, a
/// metrics report, and a manifest into out_dir.
inline RunArtifacts cmd_fit(const std::string& config_path, const std::string& out_dir,
                            std::optional<std::uint64_t> seed_override = {}) {
    ExperimentConfig cfg = load_config(config_path);
    if (seed_override) cfg.fit.seed = *seed_override;
    const ResolvedExperiment experiment =
        resolve_experiment(cfg, fs::path(config_path).parent_path());

    const model::FittedModel fitted =
        cfg.fit.algorithm == model::Algorithm::Linear
            ? model::fit_linear(experiment.X, experiment.specs, cfg.fit)
            : model::fit_general(experiment.X, experiment.specs, cfg.fit);

    RunArtifacts artifacts;
    artifacts.out_dir = out_dir;
    fs::create_directories(artifacts.out_dir);
    for (std::size_t s = 0; s < fitted.subspaces.size(); ++s) {
        const auto& spec = fitted.specs[s];
        const auto& sub = fitted.subspaces[s];
        const auto header = detail::component_header("", spec.dim);
        const std::string loadings = spec.name + "_loadings.csv";
        const std::string scores = spec.name + "_scores.csv";
        write_matrix_csv((artifacts.out_dir / loadings).string(), sub.U, header);
        write_matrix_csv((artifacts.out_dir / scores).string(), sub.Z, header);
        artifacts.files.push_back(loadings);
        artifacts.files.push_back(scores);
    }
    detail::write_json(artifacts.out_dir / "metrics.json",
                       detail::fit_metrics_json(fitted, experiment));
    artifacts.files.push_back("metrics.json");
    detail::write_json(artifacts.out_dir / "manifest.json",
                       detail::manifest_json("fit", &cfg, cfg.fit.seed, artifacts.files));
    artifacts.files.push_back("manifest.json");
    return artifacts;
}

/// Tune command: lambda grid scan, affinity matrix, spectral clusters, and a
/// recommended lambda.
inline RunArtifacts cmd_tune(const std::string& config_path, const std::string& out_dir,
                             unsigned workers = 1) {
    ExperimentConfig cfg = load_config(config_path);
    if (!cfg.tune) throw ConfigError("cmd_tune: config has no 'tune' section");
    const ResolvedExperiment experiment =
        resolve_experiment(cfg, fs::path(config_path).parent_path());

    const tuning::ScanResult scan =
        tuning::lambda_scan(experiment.X, experiment.specs, cfg.tune->grid, cfg.fit, workers);

    RunArtifacts artifacts;
    artifacts.out_dir = out_dir;
    fs::create_directories(artifacts.out_dir);

    // Per-lambda metrics table.
    {
        std::ofstream table((artifacts.out_dir / "lambda_metrics.csv").string(),
                            std::ios::binary);
        table << "lambda,converged,objective,supervision,disentanglement,"
                 "mean_pairwise_hsic_linear,mean_pairwise_grassmann\n";
        for (std::size_t i = 0; i < scan.lambdas.size(); ++i) {
            if (!scan.models[i]) continue;
            const auto& m = *scan.models[i];
            const auto parts =
                model::objective(experiment.X.values, m.subspaces, m.specs, scan.lambdas[i]);
            double mean_hsic = 0.0, mean_grass = 0.0;
            int pairs = 0;
            for (std::size_t a = 0; a < m.subspaces.size(); ++a) {
                for (std::size_t b = a + 1; b < m.subspaces.size(); ++b) {
                    mean_hsic += kernels::linear_hsic(m.subspaces[a].Z, m.subspaces[b].Z);
                    mean_grass += metrics::grassmann_geodesic(
                        metrics::score_basis(m.subspaces[a].Z),
                        metrics::score_basis(m.subspaces[b].Z));
                    ++pairs;
                }
            }
            if (pairs > 0) {
                mean_hsic /= pairs;
                mean_grass /= pairs;
            }
            table << format_double(scan.lambdas[i]) << "," << (m.converged ? 1 : 0) << ","
                  << format_double(parts.value) << "," << format_double(parts.supervision) << ","
                  << format_double(parts.disentanglement) << "," << format_double(mean_hsic)
                  << "," << format_double(mean_grass) << "\n";
        }
    }
    artifacts.files.push_back("lambda_metrics.csv");

    std::vector<std::string> lambda_header;
    for (double l : scan.affinity.lambdas) lambda_header.push_back("lambda_" + format_double(l));
    write_matrix_csv((artifacts.out_dir / "affinity.csv").string(), scan.affinity.values,
                     lambda_header);
    artifacts.files.push_back("affinity.csv");

    json report;
    report["lambdas"] = scan.lambdas;
    json failures = json::object();
    for (std::size_t i = 0; i < scan.lambdas.size(); ++i)
        if (!scan.failures[i].empty()) failures[format_double(scan.lambdas[i])] = scan.failures[i];
    report["failures"] = failures;
    if (scan.affinity.values.rows() >= 2) {
        const auto clusters = tuning::spectral_cluster(
            scan.affinity, cfg.tune->n_clusters, cfg.fit.seed);
        report["cluster_labels"] = clusters.labels;
        report["n_clusters"] = clusters.n_clusters;
        report["cluster_representatives"] = clusters.representatives;
        report["recommended_lambda"] = clusters.recommended_lambda;
        report["degenerate_affinity"] = clusters.degenerate;
    } else {
        report["cluster_labels"] = std::vector<int>(scan.affinity.lambdas.size(), 0);
        report["n_clusters"] = 1;
        report["cluster_representatives"] =
            std::vector<double>{scan.affinity.lambdas.empty() ? 0.0 : scan.affinity.lambdas[0]};
        report["recommended_lambda"] =
            scan.affinity.lambdas.empty() ? 0.0 : scan.affinity.lambdas[0];
        report["degenerate_affinity"] = false;
    }
    report["conventions"] = {{"affinity_space", "orthonormalized centered scores"},
                             {"representative_rule", "lower median lambda within cluster"}};
    detail::write_json(artifacts.out_dir / "scan.json", report);
    artifacts.files.push_back("scan.json");
    detail::write_json(artifacts.out_dir / "manifest.json",
                       detail::manifest_json("tune", &cfg, cfg.fit.seed, artifacts.files));
    artifacts.files.push_back("manifest.json");
    return artifacts;
}

/// Simulate command: writes the synthetic dataset bundle (observations,
/// supervision targets, ground truth, mixing matrix).
inline RunArtifacts cmd_simulate(Index n, std::uint64_t seed, const std::string& out_dir,
                                 const simulate::SimulationOptions& options = {}) {
    const auto data = simulate::generate(n, seed, options);
    RunArtifacts artifacts;
    artifacts.out_dir = out_dir;
    fs::create_directories(artifacts.out_dir);

    std::vector<std::string> x_header;
    for (Index c = 0; c < data.X.cols(); ++c) x_header.push_back("x" + std::to_string(c));
    write_matrix_csv((artifacts.out_dir / "X.csv").string(), data.X, x_header);
    artifacts.files.push_back("X.csv");

    {
        std::ofstream targets((artifacts.out_dir / "targets.csv").string(), std::ios::binary);
        targets << "S1_label,S2_x,S2_y\n";
        for (Index i = 0; i < data.X.rows(); ++i)
            targets << data.labels_S1[static_cast<std::size_t>(i)] << ","
                    << format_double(data.coords_S2(i, 0)) << ","
                    << format_double(data.coords_S2(i, 1)) << "\n";
    }
    artifacts.files.push_back("targets.csv");

    Matrix truth(data.X.rows(), 7);
    truth << data.S1, data.S2, data.S3, data.angle_S3;
    write_matrix_csv((artifacts.out_dir / "truth.csv").string(), truth,
                     {"S1_1", "S1_2", "S2_1", "S2_2", "S3_1", "S3_2", "S3_angle"});
    artifacts.files.push_back("truth.csv");

    std::vector<std::string> mix_header;
    for (Index c = 0; c < data.mixing.cols(); ++c) mix_header.push_back("x" + std::to_string(c));
    write_matrix_csv((artifacts.out_dir / "mixing.csv").string(), data.mixing, mix_header);
    artifacts.files.push_back("mixing.csv");

    json manifest = detail::manifest_json("simulate", nullptr, seed, artifacts.files);
    manifest["n"] = n;
    manifest["options"] = {{"gaussian_mean_x", options.gaussian_mean_x},
                           {"grid_half_span", options.grid_half_span},
                           {"grid_jitter", options.grid_jitter},
                           {"ring_radius", options.ring_radius},
                           {"ring_jitter", options.ring_jitter},
                           {"observation_noise", options.observation_noise}};
    detail::write_json(artifacts.out_dir / "manifest.json", manifest);
    artifacts.files.push_back("manifest.json");
    return artifacts;
}

struct MetricsRequest {
    std::vector<std::string> scores_paths;
    std::optional<std::string> labels_path;
    std::optional<std::string> labels_column;
    std::optional<std::string> target_path;
    std::optional<std::string> target_column;
    std::optional<std::string> against_path;
};

/// Metrics command: silhouettes, Spearman correlations, and subspace
/// distances between already-written score artifacts.
inline json cmd_metrics(const MetricsRequest& request) {
    if (request.scores_paths.empty()) throw ConfigError("cmd_metrics: no score files given");
    std::optional<std::vector<std::string>> labels;
    if (request.labels_path) {
        const Table t = read_table(*request.labels_path);
        if (!request.labels_column) throw ConfigError("cmd_metrics: --labels-column is required");
        labels = string_column(t, *request.labels_column);
    }
    std::optional<Vector> target;
    if (request.target_path) {
        const Table t = read_table(*request.target_path);
        if (!request.target_column) throw ConfigError("cmd_metrics: --target-column is required");
        target = numeric_columns(t, {*request.target_column}, "target").col(0);
    }
    std::optional<Matrix> against;
    if (request.against_path) against = read_matrix_csv(*request.against_path);

    json out;
    out["files"] = json::object();
    for (const auto& path : request.scores_paths) {
        const Matrix Z = read_matrix_csv(path);
        json entry;
        if (labels) {
            if (static_cast<Index>(labels->size()) != Z.rows())
                throw DimensionError("cmd_metrics: labels row count does not match '" + path +
                                     "'");
            entry["silhouette"] = metrics::silhouette(Z, *labels);
        }
        if (target) {
            if (target->size() != Z.rows())
                throw DimensionError("cmd_metrics: target row count does not match '" + path +
                                     "'");
            entry["max_abs_spearman"] = metrics::max_abs_spearman(Z, *target);
        }
        if (against) {
            if (against->rows() != Z.rows())
                throw DimensionError("cmd_metrics: --against row count does not match '" + path +
                                     "'");
            const Matrix Qa = metrics::score_basis(Z);
            const Matrix Qb = metrics::score_basis(*against);
            entry["grassmann_vs_against"] = metrics::grassmann_geodesic(Qa, Qb);
            entry["affinity_vs_against"] = metrics::fubini_study_affinity(
                Qa, Qb, std::min(Qa.cols(), Qb.cols()));
        }
        out["files"][path] = std::move(entry);
    }
    return out;
}

inline RunArtifacts cmd_metrics_to_dir(const MetricsRequest& request, const std::string& out_dir) {
    const json report = cmd_metrics(request);
    RunArtifacts artifacts;
    artifacts.out_dir = out_dir;
    fs::create_directories(artifacts.out_dir);
    detail::write_json(artifacts.out_dir / "metrics.json", report);
    artifacts.files.push_back("metrics.json");
    detail::write_json(artifacts.out_dir / "manifest.json",
                       detail::manifest_json("metrics", nullptr, 0, artifacts.files));
    artifacts.files.push_back("manifest.json");
    return artifacts;
}

}  // namespace sispca::io
