#include "faceval/homography.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "faceval/report.hpp"
#include "faceval/rng.hpp"

namespace faceval {

using ojson = nlohmann::ordered_json;

void validate_ransac_config(const RansacConfig& config) {
  if (!(config.inlier_threshold_px > 0.0)) {
    throw ValidationError("ransac: inlier threshold must be positive");
  }
  if (!(config.confidence > 0.0 && config.confidence < 1.0)) {
    throw ValidationError("ransac: confidence must be in (0, 1)");
  }
  if (config.max_iterations < 1) {
    throw ValidationError("ransac: max iterations must be >= 1");
  }
  if (config.min_inliers < 4) {
    throw ValidationError("ransac: min inliers must be >= 4");
  }
}

Point warp_point(const Eigen::Matrix3d& h, const Point& p) {
  const Eigen::Vector3d v = h * Eigen::Vector3d(p.x, p.y, 1.0);
  if (std::abs(v(2)) < 1e-12) {
    throw GeometryError("point maps to infinity under the homography");
  }
  return Point{v(0) / v(2), v(1) / v(2)};
}

double symmetric_transfer_error(const Eigen::Matrix3d& h,
                                const Eigen::Matrix3d& h_inv,
                                const Point& src, const Point& dst) {
  const Point fwd = warp_point(h, src);
  const Point bwd = warp_point(h_inv, dst);
  const double fe = std::hypot(fwd.x - dst.x, fwd.y - dst.y);
  const double be = std::hypot(bwd.x - src.x, bwd.y - src.y);
  return 0.5 * (fe + be);
}

namespace {

struct Normalization {
  Eigen::Matrix3d transform;
  std::vector<Point> points;
};

// Hartley normalization: centroid to origin, mean distance sqrt(2).
Normalization normalize_points(const std::vector<Point>& pts) {
  double cx = 0.0, cy = 0.0;
  for (const Point& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const Point& p : pts) {
    mean_dist += std::hypot(p.x - cx, p.y - cy);
  }
  mean_dist /= static_cast<double>(pts.size());
  const double scale = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;

  Normalization n;
  n.transform << scale, 0, -scale * cx, 0, scale, -scale * cy, 0, 0, 1;
  n.points.reserve(pts.size());
  for (const Point& p : pts) {
    n.points.push_back({scale * (p.x - cx), scale * (p.y - cy)});
  }
  return n;
}

bool three_collinear(const Point& a, const Point& b, const Point& c) {
  const double area2 = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  const double scale = std::max({std::abs(b.x - a.x), std::abs(b.y - a.y),
                                 std::abs(c.x - a.x), std::abs(c.y - a.y), 1.0});
  return std::abs(area2) < 1e-9 * scale * scale;
}

bool degenerate_quad(const std::array<Point, 4>& p) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        if (three_collinear(p[i], p[j], p[k])) return true;
      }
    }
  }
  return false;
}

int adaptive_iterations(double inlier_ratio, double confidence, int cap) {
  const double w4 = std::pow(std::clamp(inlier_ratio, 0.0, 1.0), 4);
  if (w4 >= 1.0) return 1;
  const double denom = std::log1p(-std::min(w4, 1.0 - 1e-12));
  if (denom >= 0.0) return cap;
  const double n = std::log1p(-confidence) / denom;
  if (!std::isfinite(n) || n >= static_cast<double>(cap)) return cap;
  return std::max(1, static_cast<int>(std::ceil(n)));
}

}  // namespace

Eigen::Matrix3d fit_homography_dlt(const std::vector<Point>& src,
                                   const std::vector<Point>& dst) {
  if (src.size() < 4 || src.size() != dst.size()) {
    throw GeometryError("homography fit needs >= 4 point pairs");
  }
  const Normalization ns = normalize_points(src);
  const Normalization nd = normalize_points(dst);

  const size_t n = src.size();
  Eigen::MatrixXd a(2 * n, 9);
  for (size_t i = 0; i < n; ++i) {
    const double x = ns.points[i].x, y = ns.points[i].y;
    const double u = nd.points[i].x, v = nd.points[i].y;
    a.row(2 * i) << x, y, 1, 0, 0, 0, -x * u, -y * u, -u;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -x * v, -y * v, -v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  // Rank must be 8 for a unique (up to scale) solution.
  if (svd.singularValues()(7) < 1e-9 * svd.singularValues()(0)) {
    throw GeometryError("degenerate configuration: homography is not unique");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  Eigen::Matrix3d result = nd.transform.inverse() * hn * ns.transform;
  if (std::abs(result(2, 2)) < 1e-12) {
    throw GeometryError("degenerate homography: cannot normalize H(2,2) to 1");
  }
  result /= result(2, 2);
  if (std::abs(result.determinant()) < 1e-12 ||
      std::abs(result.block<2, 2>(0, 0).determinant()) < 1e-12) {
    throw GeometryError("degenerate homography: singular after normalization");
  }
  return result;
}

Homography estimate_homography(const std::vector<Correspondence>& matches,
                               const RansacConfig& config) {
  validate_ransac_config(config);
  const size_t n = matches.size();
  if (n < 4) {
    throw GeometryError("homography estimation needs >= 4 correspondences, got " +
                        std::to_string(n));
  }

  Rng rng(config.rng_seed);
  std::vector<char> best_mask;
  int best_inliers = 0;
  int valid_samples = 0;
  int iteration_cap = config.max_iterations;

  std::vector<Point> sample_src(4), sample_dst(4);
  for (int iter = 0; iter < iteration_cap; ++iter) {
    // Sample 4 distinct correspondences.
    std::array<size_t, 4> idx;
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = rng.bounded(n);
        fresh = true;
        for (int j = 0; j < k; ++j) fresh &= idx[j] != idx[k];
      } while (!fresh);
    }
    std::array<Point, 4> quad_src{matches[idx[0]].src, matches[idx[1]].src,
                                  matches[idx[2]].src, matches[idx[3]].src};
    std::array<Point, 4> quad_dst{matches[idx[0]].dst, matches[idx[1]].dst,
                                  matches[idx[2]].dst, matches[idx[3]].dst};
    if (degenerate_quad(quad_src) || degenerate_quad(quad_dst)) continue;

    Eigen::Matrix3d h;
    try {
      for (int k = 0; k < 4; ++k) {
        sample_src[k] = quad_src[k];
        sample_dst[k] = quad_dst[k];
      }
      h = fit_homography_dlt(sample_src, sample_dst);
    } catch (const GeometryError&) {
      continue;
    }
    ++valid_samples;

    Eigen::Matrix3d h_inv;
    try {
      h_inv = invert_homography(h);
    } catch (const GeometryError&) {
      continue;
    }
    std::vector<char> mask(n, 0);
    int inliers = 0;
    for (size_t i = 0; i < n; ++i) {
      double err;
      try {
        err = symmetric_transfer_error(h, h_inv, matches[i].src, matches[i].dst);
      } catch (const GeometryError&) {
        continue;
      }
      if (err <= config.inlier_threshold_px) {
        mask[i] = 1;
        ++inliers;
      }
    }
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best_mask = std::move(mask);
      iteration_cap = std::min(
          config.max_iterations,
          adaptive_iterations(static_cast<double>(inliers) / static_cast<double>(n),
                              config.confidence, config.max_iterations));
    }
  }

  if (valid_samples == 0) {
    throw GeometryError("all RANSAC samples were degenerate (collinear points)");
  }
  if (best_inliers < config.min_inliers) {
    throw GeometryError("no consensus: best inlier count " +
                        std::to_string(best_inliers) + " is below the minimum " +
                        std::to_string(config.min_inliers));
  }

  // Refit on all inliers, then report the final consensus.
  std::vector<Point> in_src, in_dst;
  for (size_t i = 0; i < n; ++i) {
    if (best_mask[i]) {
      in_src.push_back(matches[i].src);
      in_dst.push_back(matches[i].dst);
    }
  }
  Homography result;
  result.matrix = fit_homography_dlt(in_src, in_dst);
  const Eigen::Matrix3d inv = invert_homography(result.matrix);

  double err_sum = 0.0;
  int final_inliers = 0;
  for (const Correspondence& c : matches) {
    const double err = symmetric_transfer_error(result.matrix, inv, c.src, c.dst);
    if (err <= config.inlier_threshold_px) {
      ++final_inliers;
      err_sum += err;
    }
  }
  if (final_inliers < config.min_inliers) {
    throw GeometryError("no consensus after refit: inlier count " +
                        std::to_string(final_inliers) + " is below the minimum " +
                        std::to_string(config.min_inliers));
  }
  result.inliers = final_inliers;
  result.mean_error_px = err_sum / static_cast<double>(final_inliers);
  return result;
}

Box warp_box(const Eigen::Matrix3d& h, const Box& box) {
  const Point corners[4] = {{box.x_min, box.y_min},
                            {box.x_max, box.y_min},
                            {box.x_max, box.y_max},
                            {box.x_min, box.y_max}};
  Box out{std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};
  for (const Point& c : corners) {
    const Point w = warp_point(h, c);
    out.x_min = std::min(out.x_min, w.x);
    out.y_min = std::min(out.y_min, w.y);
    out.x_max = std::max(out.x_max, w.x);
    out.y_max = std::max(out.y_max, w.y);
  }
  return out;
}

Landmarks warp_landmarks(const Eigen::Matrix3d& h, const Landmarks& lm) {
  Landmarks out;
  for (size_t i = 0; i < lm.size(); ++i) out[i] = warp_point(h, lm[i]);
  return out;
}

Eigen::Matrix3d invert_homography(const Eigen::Matrix3d& h) {
  if (std::abs(h.determinant()) < 1e-12) {
    throw GeometryError("homography is not invertible");
  }
  return h.inverse();
}

const Homography* HomographyStore::lookup(const std::string& capture_id,
                                          Location location) const {
  if (auto it = by_capture.find(capture_id); it != by_capture.end()) {
    return &it->second;
  }
  if (auto it = by_location.find(to_string(location)); it != by_location.end()) {
    return &it->second;
  }
  return nullptr;
}

namespace {

ojson homography_json(const std::string& key_name, const std::string& key,
                      const Homography& h) {
  ojson v;
  v[key_name] = key;
  ojson mat = ojson::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) mat.push_back(h.matrix(r, c));
  }
  v["H"] = std::move(mat);
  v["inliers"] = h.inliers;
  v["mean_error_px"] = h.mean_error_px;
  return v;
}

Homography parse_homography(const nlohmann::json& v, const std::string& ctx) {
  Homography h;
  const auto& mat = v.at("H");
  if (!mat.is_array() || mat.size() != 9) {
    throw ParseError(ctx + ": field 'H' must hold 9 row-major values");
  }
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) h.matrix(r, c) = mat[3 * r + c].get<double>();
  }
  h.inliers = v.value("inliers", 0);
  h.mean_error_px = v.value("mean_error_px", 0.0);
  if (std::abs(h.matrix.determinant()) < 1e-12 ||
      std::abs(h.matrix.block<2, 2>(0, 0).determinant()) < 1e-12) {
    throw ValidationError(ctx + ": stored homography is degenerate");
  }
  return h;
}

}  // namespace

HomographyStore load_homography_store(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("homographies")) {
    throw ParseError(path.string() + ": expected {\"homographies\": [...]}");
  }
  HomographyStore store;
  for (const auto& entry : doc["homographies"]) {
    const std::string ctx = path.string();
    if (entry.contains("location")) {
      store.by_location[entry["location"].get<std::string>()] =
          parse_homography(entry, ctx);
    } else if (entry.contains("capture_id")) {
      store.by_capture[entry["capture_id"].get<std::string>()] =
          parse_homography(entry, ctx);
    } else {
      throw ParseError(ctx + ": store entry needs 'location' or 'capture_id'");
    }
  }
  return store;
}

void save_homography_store(const HomographyStore& store,
                           const std::filesystem::path& path) {
  ojson doc;
  ojson entries = ojson::array();
  for (const auto& [loc, h] : store.by_location) {
    entries.push_back(homography_json("location", loc, h));
  }
  for (const auto& [cap, h] : store.by_capture) {
    entries.push_back(homography_json("capture_id", cap, h));
  }
  doc["homographies"] = std::move(entries);
  write_text_atomic(path, doc.dump(2) + "\n");
}

std::vector<Correspondence> load_correspondences(
    const std::filesystem::path& path) {
  std::vector<Correspondence> out;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    nlohmann::json v;
    try {
      v = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(ctx + ": " + e.what());
    }
    Correspondence c;
    c.capture_id = v.at("capture_id").get<std::string>();
    const auto& s = v.at("src");
    const auto& d = v.at("dst");
    if (!s.is_array() || s.size() != 2 || !d.is_array() || d.size() != 2) {
      throw ParseError(ctx + ": 'src' and 'dst' must be [x, y]");
    }
    c.src = {s[0].get<double>(), s[1].get<double>()};
    c.dst = {d[0].get<double>(), d[1].get<double>()};
    if (v.contains("confidence") && !v["confidence"].is_null()) {
      c.confidence = v["confidence"].get<double>();
    }
    if (!std::isfinite(c.src.x) || !std::isfinite(c.src.y) ||
        !std::isfinite(c.dst.x) || !std::isfinite(c.dst.y)) {
      throw ValidationError(ctx + ": correspondence coordinates must be finite");
    }
    out.push_back(std::move(c));
  }
  return out;
}

void save_correspondences(const std::vector<Correspondence>& matches,
                          const std::filesystem::path& path) {
  std::ostringstream out;
  for (const Correspondence& c : matches) {
    ojson v;
    v["capture_id"] = c.capture_id;
    v["src"] = ojson::array({c.src.x, c.src.y});
    v["dst"] = ojson::array({c.dst.x, c.dst.y});
    if (c.confidence) v["confidence"] = *c.confidence;
    out << v.dump() << '\n';
  }
  write_text_atomic(path, out.str());
}

}  // namespace faceval
