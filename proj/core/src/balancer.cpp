#include "faceval/balancer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "faceval/report.hpp"
#include "faceval/rng.hpp"

namespace faceval {

using ojson = nlohmann::ordered_json;

std::string to_string(PoseMode mode) {
  return mode == PoseMode::preserve_original ? "preserve_original"
                                             : "uniform_bins";
}

PoseMode pose_mode_from_string(const std::string& s) {
  if (s == "preserve_original") return PoseMode::preserve_original;
  if (s == "uniform_bins") return PoseMode::uniform_bins;
  throw ValidationError("unknown pose mode '" + s + "'");
}

void validate_balance_config(const BalanceConfig& config) {
  if (config.k && *config.k < 1) {
    throw ValidationError("balance config: explicit k must be >= 1");
  }
  if (!(config.pose_tolerance > 0.0 && config.pose_tolerance <= 2.0)) {
    throw ValidationError("balance config: pose tolerance must be in (0, 2]");
  }
  if (config.pose_bin_edges.size() < 2) {
    throw ValidationError("balance config: pose bin edges need >= 2 entries");
  }
}

namespace {

// Raw (unnormalized) per-angle counts; cheaper to update than a
// PoseHistogram during the greedy loop.
struct RunningCounts {
  std::vector<double> yaw, pitch, roll;
  double n = 0.0;

  explicit RunningCounts(size_t bins)
      : yaw(bins, 0.0), pitch(bins, 0.0), roll(bins, 0.0) {}
};

struct BinTriple {
  size_t yaw, pitch, roll;
};

double distance_if_added(const RunningCounts& counts, const BinTriple& add,
                         const PoseHistogram& reference) {
  const double n = counts.n + 1.0;
  double total = 0.0;
  const size_t bins = counts.yaw.size();
  for (size_t b = 0; b < bins; ++b) {
    total += std::abs((counts.yaw[b] + (b == add.yaw ? 1.0 : 0.0)) / n -
                      reference.yaw.counts[b]);
    total += std::abs((counts.pitch[b] + (b == add.pitch ? 1.0 : 0.0)) / n -
                      reference.pitch.counts[b]);
    total += std::abs((counts.roll[b] + (b == add.roll ? 1.0 : 0.0)) / n -
                      reference.roll.counts[b]);
  }
  return total / 3.0;
}

PoseHistogram uniform_reference(const std::vector<double>& edges) {
  const size_t bins = edges.size() - 1;
  PoseHistogram h;
  for (Histogram1D* m : {&h.yaw, &h.pitch, &h.roll}) {
    m->edges = edges;
    m->counts.assign(bins, 1.0 / static_cast<double>(bins));
  }
  return h;
}

}  // namespace

namespace {

// Greedy core shared by the public entry point and the planner; `counts`
// carries the running selection histogram (the planner threads it across
// the cells of one identity).
std::vector<const FaceAnnotation*> greedy_select_impl(
    const std::vector<const FaceAnnotation*>& candidates, int k,
    const PoseHistogram& reference, Rng& rng, RunningCounts& counts) {
  if (k < 1) throw ValidationError("greedy selection needs k >= 1");
  if (static_cast<int>(candidates.size()) < k) {
    throw EvalError("greedy selection: " + std::to_string(candidates.size()) +
                    " candidates cannot satisfy k=" + std::to_string(k));
  }
  const std::vector<double>& edges = reference.yaw.edges;

  std::vector<BinTriple> triples;
  triples.reserve(candidates.size());
  for (const FaceAnnotation* a : candidates) {
    triples.push_back({bin_index(edges, a->pose.yaw),
                       bin_index(edges, a->pose.pitch),
                       bin_index(edges, a->pose.roll)});
  }

  std::vector<bool> used(candidates.size(), false);
  std::vector<const FaceAnnotation*> picked;
  std::vector<size_t> ties;
  picked.reserve(k);

  for (int step = 0; step < k; ++step) {
    double best = std::numeric_limits<double>::infinity();
    ties.clear();
    for (size_t i = 0; i < candidates.size(); ++i) {
      if (used[i]) continue;
      const double d = distance_if_added(counts, triples[i], reference);
      if (d < best) {
        best = d;
        ties.clear();
        ties.push_back(i);
      } else if (d == best) {
        ties.push_back(i);
      }
    }
    const size_t chosen = ties[rng.bounded(ties.size())];
    used[chosen] = true;
    picked.push_back(candidates[chosen]);
    counts.yaw[triples[chosen].yaw] += 1.0;
    counts.pitch[triples[chosen].pitch] += 1.0;
    counts.roll[triples[chosen].roll] += 1.0;
    counts.n += 1.0;
  }
  return picked;
}

}  // namespace

std::vector<const FaceAnnotation*> greedy_pose_select(
    const std::vector<const FaceAnnotation*>& candidates, int k,
    const PoseHistogram& reference, uint64_t rng_seed) {
  Rng rng(rng_seed);
  RunningCounts counts(reference.yaw.edges.size() - 1);
  return greedy_select_impl(candidates, k, reference, rng, counts);
}

namespace {

struct CandidatePool {
  // identity -> cell label -> (frame index, annotation index), ordered.
  std::map<std::string, std::map<std::string, std::vector<std::pair<size_t, size_t>>>>
      by_identity;
  std::vector<std::string> cells_present;
  std::vector<const FaceAnnotation*> all_annotations;
};

CandidatePool collect_candidates(
    const Manifest& manifest, GroupAxis axis,
    const std::unordered_set<std::string>* excluded) {
  CandidatePool pool;
  std::unordered_set<std::string> cells;
  for (size_t fi = 0; fi < manifest.frames.size(); ++fi) {
    const FrameRecord& f = manifest.frames[fi];
    if (f.qp) continue;  // balancing runs on uncompressed source frames
    const std::string cell = group_label(f, axis);
    for (size_t ai = 0; ai < f.annotations.size(); ++ai) {
      const FaceAnnotation& a = f.annotations[ai];
      pool.all_annotations.push_back(&a);
      if (cells.insert(cell).second) pool.cells_present.push_back(cell);
      if (excluded != nullptr && excluded->contains(a.annotation_id)) continue;
      pool.by_identity[a.identity_id][cell].emplace_back(fi, ai);
    }
  }
  std::sort(pool.cells_present.begin(), pool.cells_present.end());
  return pool;
}

SubsetSpec plan_impl(const Manifest& manifest, const BalanceConfig& config,
                     const std::unordered_set<std::string>* excluded,
                     const std::string& subset_id) {
  validate_balance_config(config);
  CandidatePool pool = collect_candidates(manifest, config.cells, excluded);
  if (pool.all_annotations.empty()) {
    throw EvalError("balance: manifest has no uncompressed source annotations");
  }

  SubsetSpec spec;
  spec.subset_id = subset_id;
  spec.config = config;

  // Reference histogram over the FULL original dataset, exclusions and all.
  const PoseHistogram original_reference =
      compute_pose_histogram(pool.all_annotations, config.pose_bin_edges);
  const PoseHistogram selection_target =
      config.pose_mode == PoseMode::preserve_original
          ? original_reference
          : uniform_reference(config.pose_bin_edges);

  // Identities with an empty cell can never be balanced; drop them first.
  std::map<std::string, int> min_count;  // per surviving identity
  for (const auto& [identity, by_cell] : pool.by_identity) {
    int lowest = std::numeric_limits<int>::max();
    std::string empty_cell;
    for (const std::string& cell : pool.cells_present) {
      auto it = by_cell.find(cell);
      const int count = it == by_cell.end() ? 0 : static_cast<int>(it->second.size());
      if (count == 0) empty_cell = cell;
      lowest = std::min(lowest, count);
    }
    if (lowest <= 0) {
      spec.warnings.push_back("identity '" + identity +
                              "' dropped: no candidates in cell '" +
                              empty_cell + "'");
    } else {
      min_count[identity] = lowest;
    }
  }
  if (min_count.empty()) {
    throw EvalError("infeasible balance: no identity has candidates in every cell");
  }

  int k;
  if (config.k) {
    k = *config.k;
    for (auto it = min_count.begin(); it != min_count.end();) {
      if (it->second < k) {
        spec.warnings.push_back("identity '" + it->first + "' dropped: only " +
                                std::to_string(it->second) +
                                " candidates in its scarcest cell, need " +
                                std::to_string(k));
        it = min_count.erase(it);
      } else {
        ++it;
      }
    }
    if (min_count.empty()) {
      throw EvalError("infeasible balance: no identity has " +
                      std::to_string(k) + " candidates in every cell");
    }
  } else {
    k = std::numeric_limits<int>::max();
    for (const auto& [identity, lowest] : min_count) k = std::min(k, lowest);
  }
  spec.k = k;

  // Selection runs per identity (independent, deterministic seeds) with
  // the running histogram threaded across that identity's cells, so the
  // cells jointly track the reference instead of each repeating the same
  // modal-bin picks.
  std::vector<const FaceAnnotation*> chosen;
  for (const auto& [identity, lowest] : min_count) {
    (void)lowest;
    const auto& by_cell = pool.by_identity.at(identity);
    Rng rng(Rng::derive(config.rng_seed, "select:" + identity));
    RunningCounts counts(config.pose_bin_edges.size() - 1);
    for (const std::string& cell : pool.cells_present) {
      std::vector<const FaceAnnotation*> candidates;
      std::vector<const std::pair<size_t, size_t>*> locs;
      for (const auto& loc : by_cell.at(cell)) {
        candidates.push_back(&manifest.frames[loc.first].annotations[loc.second]);
        locs.push_back(&loc);
      }
      const auto picked =
          greedy_select_impl(candidates, k, selection_target, rng, counts);
      for (const FaceAnnotation* a : picked) {
        chosen.push_back(a);
        for (size_t i = 0; i < candidates.size(); ++i) {
          if (candidates[i] == a) {
            spec.selected.push_back(
                {manifest.frames[locs[i]->first].frame_id, a->annotation_id});
            break;
          }
        }
      }
    }
  }

  std::sort(spec.selected.begin(), spec.selected.end());
  spec.achieved_histogram =
      compute_pose_histogram(chosen, config.pose_bin_edges);
  spec.achieved_distance =
      histogram_distance(spec.achieved_histogram, original_reference);
  if (config.pose_mode == PoseMode::preserve_original &&
      spec.achieved_distance > config.pose_tolerance) {
    spec.warnings.push_back(
        "achieved pose distance " + format_double(spec.achieved_distance) +
        " exceeds the tolerance " + format_double(config.pose_tolerance));
  }
  return spec;
}

}  // namespace

SubsetSpec plan_balanced_subset(const Manifest& manifest,
                                const BalanceConfig& config) {
  return plan_impl(manifest, config, nullptr, "subset_0");
}

DisjointSubsetsResult extract_disjoint_subsets(const Manifest& manifest,
                                               const BalanceConfig& config,
                                               int m) {
  if (m < 1) throw ValidationError("subset count m must be >= 1");
  DisjointSubsetsResult result;

  // Resolve auto-k once, on the unmasked manifest, so every subset is
  // balanced at the same k.
  BalanceConfig fixed = config;
  if (!fixed.k) {
    fixed.k = plan_impl(manifest, config, nullptr, "probe").k;
  }

  std::unordered_set<std::string> excluded;
  for (int j = 0; j < m; ++j) {
    SubsetSpec spec;
    try {
      spec = plan_impl(manifest, fixed, excluded.empty() ? nullptr : &excluded,
                       "subset_" + std::to_string(j));
    } catch (const EvalError& e) {
      result.insufficient_data = "stopped after " + std::to_string(j) + " of " +
                                 std::to_string(m) + " subsets: " + e.what();
      return result;
    }
    for (const SelectedAnnotation& s : spec.selected) {
      excluded.insert(s.annotation_id);
    }
    result.subsets.push_back(std::move(spec));
  }
  return result;
}

std::unordered_set<std::string> selected_annotation_ids(const SubsetSpec& spec) {
  std::unordered_set<std::string> ids;
  ids.reserve(spec.selected.size());
  for (const SelectedAnnotation& s : spec.selected) ids.insert(s.annotation_id);
  return ids;
}

namespace {

ojson histogram_json(const Histogram1D& h) {
  return ojson{{"edges", h.edges}, {"counts", h.counts}};
}

Histogram1D histogram_from_json(const nlohmann::json& v) {
  Histogram1D h;
  h.edges = v.at("edges").get<std::vector<double>>();
  h.counts = v.at("counts").get<std::vector<double>>();
  return h;
}

ojson config_json(const BalanceConfig& c) {
  ojson v;
  v["cells"] = to_string(c.cells);
  if (c.k) {
    v["k"] = *c.k;
  } else {
    v["k"] = "auto";
  }
  v["pose_bin_edges"] = c.pose_bin_edges;
  v["pose_tolerance"] = c.pose_tolerance;
  v["rng_seed"] = c.rng_seed;
  v["pose_mode"] = to_string(c.pose_mode);
  return v;
}

}  // namespace

std::string subset_to_json(const SubsetSpec& spec) {
  ojson v;
  v["subset_id"] = spec.subset_id;
  v["k"] = spec.k;
  v["config"] = config_json(spec.config);
  ojson sel = ojson::array();
  for (const SelectedAnnotation& s : spec.selected) {
    sel.push_back(ojson{{"frame_id", s.frame_id},
                        {"annotation_id", s.annotation_id}});
  }
  v["selected"] = std::move(sel);
  v["achieved_distance"] = spec.achieved_distance;
  v["pose_histogram"] = ojson{{"yaw", histogram_json(spec.achieved_histogram.yaw)},
                              {"pitch", histogram_json(spec.achieved_histogram.pitch)},
                              {"roll", histogram_json(spec.achieved_histogram.roll)}};
  v["warnings"] = spec.warnings;
  return v.dump(2) + "\n";
}

void save_subset(const SubsetSpec& spec, const std::filesystem::path& path) {
  write_text_atomic(path, subset_to_json(spec));
}

SubsetSpec load_subset(const std::filesystem::path& path) {
  nlohmann::json v;
  try {
    v = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  SubsetSpec spec;
  spec.subset_id = v.at("subset_id").get<std::string>();
  spec.k = v.at("k").get<int>();
  const auto& c = v.at("config");
  spec.config.cells = axis_from_string(c.at("cells").get<std::string>());
  if (c.at("k").is_number_integer()) {
    spec.config.k = c.at("k").get<int>();
  }
  spec.config.pose_bin_edges = c.at("pose_bin_edges").get<std::vector<double>>();
  spec.config.pose_tolerance = c.at("pose_tolerance").get<double>();
  spec.config.rng_seed = c.at("rng_seed").get<uint64_t>();
  spec.config.pose_mode = pose_mode_from_string(c.at("pose_mode").get<std::string>());
  for (const auto& s : v.at("selected")) {
    spec.selected.push_back({s.at("frame_id").get<std::string>(),
                             s.at("annotation_id").get<std::string>()});
  }
  spec.achieved_distance = v.at("achieved_distance").get<double>();
  const auto& h = v.at("pose_histogram");
  spec.achieved_histogram.yaw = histogram_from_json(h.at("yaw"));
  spec.achieved_histogram.pitch = histogram_from_json(h.at("pitch"));
  spec.achieved_histogram.roll = histogram_from_json(h.at("roll"));
  spec.warnings = v.at("warnings").get<std::vector<std::string>>();
  return spec;
}

}  // namespace faceval
