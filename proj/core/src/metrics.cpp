#include "matlift/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "matlift/error.hpp"

namespace matlift::metrics {

Confusion confusion(const BinaryMask& pred, const BinaryMask& truth) {
  if (!pred.same_shape(truth)) {
    fail(ErrorCode::kInvalidArgument, "metrics: mask shapes differ (" +
                                          std::to_string(pred.width()) + "x" +
                                          std::to_string(pred.height()) + " vs " +
                                          std::to_string(truth.width()) + "x" +
                                          std::to_string(truth.height()) + ")");
  }
  Confusion c;
  const auto& p = pred.pixels.data();
  const auto& t = truth.pixels.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool a = p[i] != 0;
    const bool b = t[i] != 0;
    c.tp += a && b;
    c.fp += a && !b;
    c.fn += !a && b;
    c.tn += !a && !b;
  }
  return c;
}

double iou(const Confusion& c) {
  const std::size_t uni = c.tp + c.fp + c.fn;
  return uni == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(uni);
}

double miou(const BinaryMask& a, const BinaryMask& b) { return iou(confusion(a, b)); }

PrecisionRecallF1 precision_recall_f1(const Confusion& c) {
  if (c.tp + c.fp + c.fn == 0) return {1.0, 1.0, 1.0};
  PrecisionRecallF1 r;
  r.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  r.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  r.f1 = r.precision + r.recall == 0.0 ? 0.0
                                       : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

PrecisionRecallF1 precision_recall_f1(const BinaryMask& pred, const BinaryMask& truth) {
  return precision_recall_f1(confusion(pred, truth));
}

double hamming_pct(const BinaryMask& a, const BinaryMask& b) {
  const Confusion c = confusion(a, b);
  const std::size_t total = c.tp + c.fp + c.fn + c.tn;
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(c.fp + c.fn) / static_cast<double>(total);
}

double pooled_iou(std::span<const BinaryMask> a, std::span<const BinaryMask> b) {
  if (a.size() != b.size()) fail(ErrorCode::kInvalidArgument, "pooled_iou: view counts differ");
  Confusion total;
  for (std::size_t i = 0; i < a.size(); ++i) total += confusion(a[i], b[i]);
  return iou(total);
}

Summary summarize(std::span<const double> samples) {
  Summary s;
  s.n = samples.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

namespace {

nlohmann::json summary_json(const Summary& s) {
  return {{"mean", s.mean}, {"ci95", s.ci95}, {"n", s.n}};
}

std::string pm(const Summary& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%6.2f ± %5.2f", 100.0 * s.mean, 100.0 * s.ci95);
  return buf;
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["scene"] = scene;
  j["config"] = config;
  j["accuracy"] = nlohmann::json::array();
  for (const auto& m : accuracy) {
    j["accuracy"].push_back({{"material", m.material},
                             {"name", m.name},
                             {"miou", summary_json(m.miou)},
                             {"f1", summary_json(m.f1)},
                             {"precision", summary_json(m.precision)},
                             {"recall", summary_json(m.recall)}});
  }
  if (consistency) j["consistency_hamming_x100"] = *consistency;
  if (robustness) j["robustness_hamming_x100"] = *robustness;
  j["warnings"] = warnings;
  return j;
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  char line[512];
  int width = 24;
  for (const auto& m : accuracy) {
    width = std::max<int>(width, config.size() + 4 + std::max<std::size_t>(m.name.size(), 4) + 1);
  }
  width = std::max<int>(width, config.size() + 1);
  if (!accuracy.empty()) {
    out << "Selection accuracy (x100, mean ± 95% CI): " << scene << '\n';
    std::snprintf(line, sizeof line, "%-*s %-16s %-16s %-16s %-16s\n", width, "config / material", "mIoU",
                  "F1", "Precision", "Recall");
    out << line;
    for (const auto& m : accuracy) {
      const std::string label = config + " / " + (m.name.empty() ? std::to_string(m.material) : m.name);
      std::snprintf(line, sizeof line, "%-*s %-16s %-16s %-16s %-16s\n", width, label.c_str(),
                    pm(m.miou).c_str(), pm(m.f1).c_str(), pm(m.precision).c_str(),
                    pm(m.recall).c_str());
      out << line;
    }
    // Mean row over materials.
    Summary avg_iou, avg_f1, avg_p, avg_r;
    for (const auto& m : accuracy) {
      avg_iou.mean += m.miou.mean / accuracy.size();
      avg_f1.mean += m.f1.mean / accuracy.size();
      avg_p.mean += m.precision.mean / accuracy.size();
      avg_r.mean += m.recall.mean / accuracy.size();
    }
    const std::string label = config + " / mean";
    std::snprintf(line, sizeof line, "%-*s %-16s %-16s %-16s %-16s\n", width, label.c_str(),
                  pm(avg_iou).c_str(), pm(avg_f1).c_str(), pm(avg_p).c_str(), pm(avg_r).c_str());
    out << line;
  }
  if (consistency || robustness) {
    out << "Hamming distance (x100, lower is better): " << scene << '\n';
    std::snprintf(line, sizeof line, "%-*s %-14s %-14s\n", width, "config", "consistency", "robustness");
    out << line;
    const auto cell = [](const std::optional<double>& v) {
      char b[32];
      if (v) {
        std::snprintf(b, sizeof b, "%.2f", *v);
      } else {
        std::snprintf(b, sizeof b, "-");
      }
      return std::string(b);
    };
    std::snprintf(line, sizeof line, "%-*s %-14s %-14s\n", width, config.c_str(), cell(consistency).c_str(),
                  cell(robustness).c_str());
    out << line;
  }
  for (const auto& w : warnings) out << "warning: " << w << '\n';
  return out.str();
}

}  // namespace matlift::metrics
