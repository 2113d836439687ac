#pragma once

// Result tables from evaluation logs, and plot data for the learned noise
// correction field.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "model.hpp"
#include "simworld.hpp"

namespace robust_grasp {

class IncompleteGrid : public std::runtime_error {
 public:
  IncompleteGrid(const std::string& what, std::vector<std::string> missing)
      : std::runtime_error(what), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

// One evaluation outcome. kind is "binary" (held-out accuracy) or "sim"
// (simulated top-1 grasp success).
struct EvalEntry {
  std::string kind = "binary";
  std::string model;
  std::string train_set;
  std::string test_set;
  double value = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"kind", kind}, {"model", model}, {"train_set", train_set}, {"test_set", test_set},
            {"value", value}, {"seed", seed}};
  }
  static EvalEntry from_json(const nlohmann::json& j) {
    EvalEntry e;
    e.kind = j.at("kind").get<std::string>();
    e.model = j.at("model").get<std::string>();
    e.train_set = j.at("train_set").get<std::string>();
    e.test_set = j.at("test_set").get<std::string>();
    e.value = j.at("value").get<double>();
    e.seed = j.value("seed", std::uint64_t{0});
    return e;
  }
};

// Every *.jsonl under dir, files in name order; lines without "kind" (for
// example training metrics) are skipped.
inline std::vector<EvalEntry> read_eval_entries(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("report: not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& f : fs::directory_iterator(dir))
    if (f.is_regular_file() && f.path().extension() == ".jsonl") files.push_back(f.path());
  std::sort(files.begin(), files.end());
  std::vector<EvalEntry> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) throw InvalidInput("report: malformed line in " + f.filename().string());
      if (!j.is_object() || !j.contains("kind")) continue;
      out.push_back(EvalEntry::from_json(j));
    }
  }
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidInput("median of empty set");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace detail {

inline std::string pct(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << 100.0 * v;
  return s.str();
}

inline std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

}  // namespace detail

// Table per kind: rows (model, train set), columns test sets, cells the
// median over seeds. Throws IncompleteGrid naming each missing cell.
inline std::string report_tables(const std::vector<EvalEntry>& entries) {
  if (entries.empty()) throw IncompleteGrid("report: no evaluation entries", {});
  std::map<std::string, std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<double>>>>
      cells;
  std::map<std::string, std::set<std::string>> columns;
  for (const auto& e : entries) {
    cells[e.kind][{e.model, e.train_set}][e.test_set].push_back(e.value);
    columns[e.kind].insert(e.test_set);
  }
  std::vector<std::string> missing;
  for (const auto& [kind, rows] : cells)
    for (const auto& [row, cols] : rows)
      for (const auto& c : columns[kind])
        if (!cols.count(c)) missing.push_back(kind + ": (" + row.first + ", " + row.second + ") on " + c);
  if (!missing.empty()) {
    std::string msg = "report: incomplete grid, missing";
    for (const auto& m : missing) msg += "\n  " + m;
    throw IncompleteGrid(msg, missing);
  }

  std::ostringstream out;
  for (const auto& [kind, rows] : cells) {
    out << (kind == "binary" ? "Binary classification accuracy (%), held-out data"
                             : kind == "sim" ? "Simulated top-1 grasp success (%)" : kind)
        << "\n";
    out << detail::pad("model", 16) << detail::pad("train set", 16);
    for (const auto& c : columns[kind]) out << detail::pad(c, 14);
    out << "\n";
    for (const auto& [row, cols] : rows) {
      out << detail::pad(row.first, 16) << detail::pad(row.second, 16);
      for (const auto& c : columns[kind]) {
        const auto& v = cols.at(c);
        out << detail::pad(detail::pct(median(v)) + " (n=" + std::to_string(v.size()) + ")", 14);
      }
      out << "\n";
    }
    if (kind == "binary")
      out << "reference (not reproducible - physical data): Patch-Grasp Lab-Baxter/Lab-Baxter 76.9, "
             "Patch-Grasp Home-LCA/Home-LCA 69.9, Robust-Grasp Home-LCA/Home-LCA 73.0\n";
    if (kind == "sim")
      out << "reference (not reproducible - physical data): Real-LCA overall 62.08; Real-Sawyer "
             "Robust-Grasp 77.50, Patch-Grasp (Home-LCA) 56.25, Patch-Grasp (Lab-Baxter) 1.25\n";
    out << "\n";
  }
  return out.str();
}

inline std::string report_tables(const std::filesystem::path& metrics_dir) {
  return report_tables(read_eval_entries(metrics_dir));
}

// A point counts as consistent when the predicted correction and the true
// displacement (times sign) are within 45 degrees. Zero vectors never count.
inline bool direction_consistent(const Pixel& predicted, std::array<double, 2> truth, int sign) {
  const double pn = std::hypot(double(predicted.x), double(predicted.y));
  const double tn = std::hypot(truth[0], truth[1]);
  if (pn == 0 || tn == 0) return false;
  const double c = sign * (predicted.x * truth[0] + predicted.y * truth[1]) / (pn * tn);
  return c >= 1.0 / std::sqrt(2.0) - 1e-12;
}

inline double field_consistency(const std::vector<CorrectionVector>& field, const NoiseTransform& truth, int sign) {
  if (field.empty()) return 0;
  std::size_t ok = 0;
  for (const auto& v : field)
    ok += direction_consistent(v.displacement, truth.displacement(v.pixel.x, v.pixel.y), sign);
  return static_cast<double>(ok) / static_cast<double>(field.size());
}

// Mean predicted correction, used to compare robots.
inline std::array<double, 2> dominant_direction(const std::vector<CorrectionVector>& field) {
  std::array<double, 2> m{0, 0};
  for (const auto& v : field) {
    m[0] += v.displacement.x;
    m[1] += v.displacement.y;
  }
  if (!field.empty()) {
    m[0] /= double(field.size());
    m[1] /= double(field.size());
  }
  return m;
}

struct NoiseFieldPlot {
  std::vector<CorrectionVector> field;
  double consistency = 0;
  int sign = 1;
};

// Writes "x y dx dy true_dx true_dy" rows for an n x n grid, then a score
// line. With sign 0 the better of both orientations is reported.
template <class S>
NoiseFieldPlot emit_noise_field_plot(const RobustGraspModel<S>& model, const Raster& scene, int robot_id, int grid_n,
                                     const NoiseTransform& truth, std::ostream& out, int sign = 0) {
  if (robot_id < 0 || robot_id >= model.config().robot_count)
    throw InvalidInput("viz-noise: robot id " + std::to_string(robot_id) + " not in checkpoint");
  if (grid_n <= 0) throw InvalidInput("viz-noise: grid must be positive");
  const auto grid = probe_grid(scene.width, grid_n);
  NoiseFieldPlot plot;
  plot.field = noise_correction_field(model, scene, robot_id, std::span<const Pixel>(grid));
  if (sign == 0) {
    const double a = field_consistency(plot.field, truth, 1), b = field_consistency(plot.field, truth, -1);
    plot.sign = a >= b ? 1 : -1;
    plot.consistency = std::max(a, b);
  } else {
    plot.sign = sign > 0 ? 1 : -1;
    plot.consistency = field_consistency(plot.field, truth, plot.sign);
  }
  out << "# x y dx dy true_dx true_dy\n";
  out << std::setprecision(6);
  for (const auto& v : plot.field) {
    const auto t = truth.displacement(v.pixel.x, v.pixel.y);
    out << v.pixel.x << ' ' << v.pixel.y << ' ' << v.displacement.x << ' ' << v.displacement.y << ' ' << t[0] << ' '
        << t[1] << '\n';
  }
  out << "# consistency " << std::fixed << std::setprecision(2) << 100.0 * plot.consistency << "% orientation "
      << (plot.sign > 0 ? "aligned" : "anti-aligned") << " robot " << robot_id << "\n";
  return plot;
}

}  // namespace robust_grasp
