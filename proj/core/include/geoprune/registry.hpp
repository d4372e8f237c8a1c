#pragma once

// File-based store of trained/pruned model combinations and their snapshots.
//
// Layout under the registry root:
//   <combo-id>/manifest.json          combination record, checkpoint manifest,
//                                     snapshot index with sha256 per file
//   <combo-id>/checkpoint.bin         checkpoint blob (see io.hpp)
//   <combo-id>/snapshot-<dataset>.bin GPSN snapshot (see geometry.hpp)
//   subsets/<subset-id>.json          saved sample-id selections
//
// Dataset ids are "clean" for the uncorrupted test set and "<type>@<severity>"
// for corrupted copies. Every file is written to a temporary name and renamed
// into place, and the manifest is rewritten last, so a reader never sees a
// snapshot the manifest does not describe in full.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoprune/corruption.hpp"
#include "geoprune/geometry.hpp"
#include "geoprune/network.hpp"
#include "geoprune/pruning.hpp"
#include "geoprune/stats.hpp"

namespace geoprune {

inline constexpr const char* kCleanDataset = "clean";

std::string variant_dataset_id(const std::string& type, int severity);
/// Splits "<type>@<severity>"; nullopt for "clean" or anything without '@'.
std::optional<std::pair<std::string, int>> parse_variant_dataset_id(const std::string& id);

struct Combination {
    std::string id;
    std::string architecture;
    PruneMethod method = PruneMethod::none;
    double prune_rate = 0.0;
    std::string dataset_id;  // training dataset
    std::string checkpoint_path;
    double clean_accuracy = 0.0;

    /// Throws std::invalid_argument on a bad id, rate outside [0, 1) or accuracy outside [0, 1].
    void validate() const;
    friend bool operator==(const Combination&, const Combination&) = default;
};

/// "<architecture>.<method>.r<rate*1000>.<dataset>", with unsafe characters replaced.
std::string default_combination_id(const Combination& c);

struct SubsetSelection {
    std::string id;
    std::vector<std::uint64_t> sample_ids;  // sorted, unique
    std::string note;

    friend bool operator==(const SubsetSelection&, const SubsetSelection&) = default;
};

/// Content id of a sorted id set, so the same selection always gets the same id.
std::string subset_id_for(std::span<const std::uint64_t> sorted_ids);

class Registry {
public:
    /// Opens an existing root; throws NotFound if it is not a directory.
    static Registry open(const std::filesystem::path& root);
    /// Creates the root if needed.
    static Registry create(const std::filesystem::path& root);

    const std::filesystem::path& root() const { return root_; }

    /// Writes checkpoint, snapshots and manifest. Throws RegistryError on a
    /// duplicate id. Returns the id.
    std::string register_combination(Combination combo, const Network& net,
                                     std::span<const GeometrySnapshot> snapshots = {});
    /// Adds one snapshot to an existing combination. Snapshots are immutable,
    /// so adding a dataset id that is already present throws RegistryError.
    void add_snapshot(const std::string& combo_id, const GeometrySnapshot& snapshot);

    bool contains(const std::string& combo_id) const;
    /// Sorted by id.
    std::vector<Combination> combinations() const;
    Combination combination(const std::string& combo_id) const;
    /// Dataset ids with a stored snapshot, sorted.
    std::vector<std::string> snapshot_datasets(const std::string& combo_id) const;
    bool has_snapshot(const std::string& combo_id, const std::string& dataset_id) const;
    /// Verifies the recorded sha256 before decoding.
    GeometrySnapshot load_snapshot(const std::string& combo_id, const std::string& dataset_id) const;
    std::vector<unsigned char> snapshot_bytes(const std::string& combo_id, const std::string& dataset_id) const;
    Network load_network(const std::string& combo_id) const;

    /// Sample ids of every stored clean snapshot; subsets are checked against it.
    std::vector<std::uint64_t> known_sample_ids() const;
    /// Validates and stores a selection. Empty selections and ids outside
    /// known_sample_ids() throw (UnknownSampleId names the first offender).
    /// Saving the same id set twice returns the existing record.
    SubsetSelection save_subset(std::vector<std::uint64_t> sample_ids, std::string note);
    SubsetSelection load_subset(const std::string& subset_id) const;
    std::vector<std::string> subset_ids() const;

private:
    explicit Registry(std::filesystem::path root) : root_(std::move(root)) {}
    std::filesystem::path combo_dir(const std::string& combo_id) const;

    std::filesystem::path root_;
};

// ---- evaluation table -------------------------------------------------------

struct EvaluationCell {
    std::string combination_id;
    double prune_rate = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy = 0.0;

    friend bool operator==(const EvaluationCell&, const EvaluationCell&) = default;
};

struct MethodSeries {
    std::string method;
    std::vector<EvaluationCell> cells;  // ascending prune rate, then combination id
    double max_accuracy = 0.0;

    friend bool operator==(const MethodSeries&, const MethodSeries&) = default;
};

struct EvaluationRow {
    std::string key;                  // "clean", a corruption type, or "<type>@<severity>"
    std::vector<MethodSeries> methods;  // in ranking order

    std::vector<std::string> ranking() const;
    friend bool operator==(const EvaluationRow&, const EvaluationRow&) = default;
};

struct EvaluationTable {
    std::vector<EvaluationRow> rows;
    std::optional<std::string> subset_id;

    const EvaluationRow& row(const std::string& key) const;
    friend bool operator==(const EvaluationTable&, const EvaluationTable&) = default;
};

struct EvaluationOptions {
    /// Corruption types for the rows after "clean". Empty means clean only.
    std::vector<std::string> types;
    bool per_severity = false;
    const SubsetSelection* subset = nullptr;
    std::optional<std::string> architecture;
};

using SnapshotLoader = std::function<GeometrySnapshot(const std::string& combo_id, const std::string& dataset_id)>;

/// Cell accuracy = correct / total over the subset (or every sample). A type
/// row pools all five severities. Methods are ranked by their best accuracy,
/// descending, ties by method name. Throws NotFound for a missing cell.
EvaluationTable evaluation_table(std::span<const Combination> combos, const SnapshotLoader& load,
                                 const EvaluationOptions& opts);
EvaluationTable evaluation_table(const Registry& registry, const EvaluationOptions& opts);

/// Corruption types for which every combination holds all five severities.
std::vector<std::string> common_suite_types(const Registry& registry, std::span<const Combination> combos);

struct DeltaCell {
    std::string row;
    std::string method;
    std::string combination_id;
    double prune_rate = 0.0;
    double full = 0.0;
    double subset = 0.0;
    double delta = 0.0;  // subset - full
};

/// Throws std::invalid_argument when the two tables do not have the same cells.
std::vector<DeltaCell> subset_delta(const EvaluationTable& full, const EvaluationTable& subset);

// ---- trajectories -----------------------------------------------------------

enum class TrajectoryCategory { both_wrong, ref_correct_only, cmp_correct_only, both_correct };
std::string_view to_string(TrajectoryCategory c);
TrajectoryCategory categorize(bool ref_correct, bool cmp_correct);

struct TrajectoryPair {
    std::uint64_t sample_id = 0;
    GeometrySample ref;
    GeometrySample cmp;
    TrajectoryCategory category = TrajectoryCategory::both_wrong;
};

struct TrajectoryResult {
    std::vector<TrajectoryPair> pairs;            // ascending sample id
    std::vector<std::uint64_t> missing_in_ref;    // class members only in cmp
    std::vector<std::uint64_t> missing_in_cmp;    // class members only in ref
};

/// Joins two snapshots of the same dataset on sample id, keeping samples whose
/// true label is `class_label` (all samples when nullopt). With `strict`, any
/// id present on one side only throws RegistryError listing the ids;
/// otherwise they are reported in the result.
TrajectoryResult trajectories(const GeometrySnapshot& ref, const GeometrySnapshot& cmp,
                              std::optional<std::uint32_t> class_label, bool strict = true);

enum class TrajectoryMetric { angle_true, length, margin };
std::string_view to_string(TrajectoryMetric m);
TrajectoryMetric parse_trajectory_metric(std::string_view name);

enum class DeltaPredicate { increased, decreased, unchanged, abs_at_least };
std::string_view to_string(DeltaPredicate p);
DeltaPredicate parse_delta_predicate(std::string_view name);

/// cmp - ref for one metric; margin is the signed margin.
double metric_delta(const TrajectoryPair& pair, TrajectoryMetric metric);

struct MetricSelection {
    SubsetSelection selection;  // id filled from content; may be empty
    std::size_t excluded_degenerate = 0;
    bool empty_warning = false;
};

/// Pairs with a degenerate sample on either side are excluded.
MetricSelection metric_difference_select(std::span<const TrajectoryPair> pairs, TrajectoryMetric metric,
                                         DeltaPredicate predicate, double threshold = 0.0);

// ---- cross-snapshot analytics ----------------------------------------------

/// Per-sample robustness recounted from stored variant snapshots: for each id
/// of `clean`, the number of variant snapshots that classify it correctly.
/// Throws RegistryError if a variant lacks an id of the clean snapshot.
std::vector<RobustnessRecord> robustness_from_snapshots(const GeometrySnapshot& clean,
                                                        std::span<const GeometrySnapshot> variants);

/// Clean snapshot plus every "<type>@<severity>" snapshot of a combination.
struct SuiteSnapshots {
    GeometrySnapshot clean;
    std::vector<GeometrySnapshot> variants;  // sorted by dataset id
};
SuiteSnapshots load_suite_snapshots(const Registry& registry, const std::string& combo_id);

struct MarginShiftReport {
    std::string ref_id;
    std::string cmp_id;
    RelativeMarginChange ref;
    RelativeMarginChange cmp;
    double ref_clean_accuracy = 0.0;
    double cmp_clean_accuracy = 0.0;
    bool accuracy_matched = false;  // |ref - cmp| clean accuracy <= tolerance
    bool ref_more_stable = false;   // median(ref) <= median(cmp)
};

inline constexpr double kMatchedAccuracyTolerance = 0.02;

MarginShiftReport margin_shift(const SuiteSnapshots& ref, const SuiteSnapshots& cmp, std::string ref_id,
                               std::string cmp_id);
MarginShiftReport margin_shift(const Registry& registry, const std::string& ref_id, const std::string& cmp_id);

}  // namespace geoprune
