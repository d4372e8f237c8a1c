#pragma once

// Read-only JSON API over a registry.
//
//   GET  /api/combinations
//   GET  /api/evaluation-table?subset=&severity=&arch=
//   GET  /api/snapshot/{combo}/{dataset}?class=
//   GET  /api/trajectories?ref=&cmp=&class=&dataset=
//   GET  /api/density?combo=&dataset=&class=&metric=
//   GET  /api/correlations?combo=
//   GET  /api/margin-shift?ref=&cmp=
//   POST /api/subsets        body {"sample_ids":[...], "note":"..."}
//
// Handlers are plain functions of (registry state, request), so identical
// requests against an unchanged registry return identical bodies.

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "geoprune/registry.hpp"
#include "geoprune/stats.hpp"

namespace httplib {
class Server;
}

namespace geoprune {

namespace api {
// Serializations shared by the service and the CLI --json output.
std::string combinations_json(const std::vector<Combination>& combos);
std::string evaluation_table_json(const EvaluationTable& table, const std::vector<DeltaCell>* delta = nullptr);
std::string snapshot_json(const GeometrySnapshot& snapshot, std::optional<std::uint32_t> class_label = std::nullopt);
std::string trajectories_json(const TrajectoryResult& result);
std::string density_json(const DensityCurve& curve);
std::string correlations_json(const std::string& combo_id, const CorrelationReport& report);
std::string margin_shift_json(const MarginShiftReport& report);
std::string subset_json(const SubsetSelection& subset);
std::string angle_experiment_json(const AngleExperimentResult& result);
std::string error_json(const std::string& message);
}  // namespace api

inline constexpr const char* kRegistryEnvVar = "GEOPRUNE_REGISTRY";

struct ServiceConfig {
    std::filesystem::path registry_root;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::vector<std::string> allowed_origins;

    /// GEOPRUNE_REGISTRY, when set, replaces registry_root.
    ServiceConfig with_env_overrides() const;
    /// Throws NotFound if the registry root is missing, std::invalid_argument on a bad port.
    void validate() const;
};

struct Request {
    std::string method = "GET";
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
    std::string origin;  // value of the Origin header, if any
};

struct Response {
    int status = 200;
    std::string body;
    std::map<std::string, std::string> headers;
};

class Service {
public:
    explicit Service(ServiceConfig cfg);

    const ServiceConfig& config() const { return cfg_; }
    Response handle(const Request& req);
    /// Blocks until stop() is called. Throws std::runtime_error if the port cannot be bound.
    void serve();
    void stop();

private:
    Response dispatch(const Request& req);
    Response get_combinations(const Request& req);
    Response get_evaluation_table(const Request& req);
    Response get_snapshot(const Request& req, const std::string& combo, const std::string& dataset);
    Response get_trajectories(const Request& req);
    Response get_density(const Request& req);
    Response get_correlations(const Request& req);
    Response get_margin_shift(const Request& req);
    Response post_subset(const Request& req);

    ServiceConfig cfg_;
    Registry registry_;
    std::mutex subset_mutex_;
    httplib::Server* server_ = nullptr;  // set while serve() runs
    std::mutex server_mutex_;
};

/// The density series of one metric over a snapshot. metric is angle_true,
/// length or margin; degenerate samples are left out of angle_true.
std::vector<double> metric_values(const GeometrySnapshot& snapshot, TrajectoryMetric metric,
                                  std::optional<std::uint32_t> class_label = std::nullopt);

}  // namespace geoprune
