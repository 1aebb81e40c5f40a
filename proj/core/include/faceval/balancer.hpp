#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "faceval/dataset.hpp"
#include "faceval/histogram.hpp"

namespace faceval {

enum class PoseMode {
  /// Greedy selection toward the full dataset's pose histogram.
  preserve_original,
  /// Negative control: greedy selection toward equal per-bin counts.
  uniform_bins,
};

std::string to_string(PoseMode mode);
PoseMode pose_mode_from_string(const std::string& s);

struct BalanceConfig {
  /// Scenario axis whose cells are balanced (default: the full 12-cell
  /// cross-product).
  GroupAxis cells = GroupAxis::full_cell;
  /// Samples per (identity x cell); nullopt = auto (largest k feasible
  /// for the identities that survive the zero-cell drop).
  std::optional<int> k;
  std::vector<double> pose_bin_edges = uniform_pose_edges();
  double pose_tolerance = 0.15;
  uint64_t rng_seed = 0;
  PoseMode pose_mode = PoseMode::preserve_original;
};

void validate_balance_config(const BalanceConfig& config);

struct SelectedAnnotation {
  std::string frame_id;
  std::string annotation_id;

  friend auto operator<=>(const SelectedAnnotation&,
                          const SelectedAnnotation&) = default;
};

struct SubsetSpec {
  std::string subset_id;
  int k = 0;
  BalanceConfig config;
  /// Sorted by (frame_id, annotation_id); no duplicates.
  std::vector<SelectedAnnotation> selected;
  PoseHistogram achieved_histogram;
  /// Distance of the subset's pose histogram to the full dataset's.
  double achieved_distance = 0.0;
  /// Dropped identities, tolerance misses - never silent.
  std::vector<std::string> warnings;
};

/// Greedy pose-matched pick of k candidates: each step adds the candidate
/// whose inclusion minimizes histogram_distance(selection, reference);
/// exact ties are broken by a seeded random choice. Returns the selection
/// in pick order.
std::vector<const FaceAnnotation*> greedy_pose_select(
    const std::vector<const FaceAnnotation*>& candidates, int k,
    const PoseHistogram& reference, uint64_t rng_seed);

/// Builds one balanced subset over the manifest's uncompressed source
/// frames: per identity, per cell, exactly k annotations, selected to
/// preserve the full dataset's pose histogram (or the uniform-bins
/// negative control). Deterministic given config.rng_seed.
SubsetSpec plan_balanced_subset(const Manifest& manifest,
                                const BalanceConfig& config);

struct DisjointSubsetsResult {
  std::vector<SubsetSpec> subsets;
  /// Set when fewer than the requested subsets could be produced.
  std::optional<std::string> insufficient_data;
};

/// Repeated planning with prior selections masked out. Every subset is
/// scored against the ORIGINAL full-dataset pose reference; with k=auto
/// the value is resolved once, on the unmasked manifest. Infeasibility at
/// subset j < m returns the j completed subsets plus a report, never an
/// exception.
DisjointSubsetsResult extract_disjoint_subsets(const Manifest& manifest,
                                               const BalanceConfig& config,
                                               int m);

std::unordered_set<std::string> selected_annotation_ids(const SubsetSpec& spec);

std::string subset_to_json(const SubsetSpec& spec);
void save_subset(const SubsetSpec& spec, const std::filesystem::path& path);
SubsetSpec load_subset(const std::filesystem::path& path);

}  // namespace faceval
