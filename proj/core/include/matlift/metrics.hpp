#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "matlift/raster.hpp"

namespace matlift::metrics {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
};

/// Throws kInvalidArgument on shape mismatch.
Confusion confusion(const BinaryMask& pred, const BinaryMask& truth);

/// |a and b| / |a or b|; 1 when both are empty.
double miou(const BinaryMask& a, const BinaryMask& b);
double iou(const Confusion& c);

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Zero denominators give 0, except pred and truth both empty, which gives (1, 1, 1).
PrecisionRecallF1 precision_recall_f1(const BinaryMask& pred, const BinaryMask& truth);
PrecisionRecallF1 precision_recall_f1(const Confusion& c);

/// 100 * fraction of differing pixels.
double hamming_pct(const BinaryMask& a, const BinaryMask& b);

/// IoU of the concatenation of several views.
double pooled_iou(std::span<const BinaryMask> a, std::span<const BinaryMask> b);

/// Mean with a normal-approximation 95% confidence half-width.
struct Summary {
  double mean = 0.0;
  double ci95 = 0.0;
  std::size_t n = 0;
};
Summary summarize(std::span<const double> samples);

struct MaterialAccuracy {
  int material = 0;
  std::string name;
  Summary miou;
  Summary f1;
  Summary precision;
  Summary recall;
};

struct EvalReport {
  std::string scene;
  std::string config;  // row label, e.g. "synthetic/zero-noise"
  std::vector<MaterialAccuracy> accuracy;
  std::optional<double> consistency;  // Hamming x100, lower is better
  std::optional<double> robustness;   // Hamming x100, lower is better
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  /// Aligned text table; accuracy values scaled by 100 for display.
  std::string to_table() const;
};

}  // namespace matlift::metrics
