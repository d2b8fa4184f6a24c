// Copyright (c) 2026, the codeshield authors
// SPDX-License-Identifier: Apache-2.0
//
// Metrics, ROC, histograms, leave-one-attack-out, feature ablation,
// saliency summaries and report export. Poisoned is the positive class.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeshield/corpus.hpp"
#include "codeshield/detector.hpp"
#include "codeshield/features.hpp"

namespace codeshield {

struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::size_t total() const { return tp + tn + fp + fn; }
  bool operator==(const Confusion&) const = default;
};

struct RocPoint {
  double threshold = 0;  // predict poisoned when p_poison >= threshold
  double fpr = 0;
  double tpr = 0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // fpr non-decreasing, (0,0) first, (1,1) last
  double area = 0;
};

struct EvaluationReport {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  Confusion confusion;
  RocCurve roc;  // empty when no probabilities or a single class
  std::vector<std::pair<std::string, double>> probabilities;  // (id, p_poison)
  nlohmann::json metadata = nlohmann::json::object();
};

/// Metrics from a confusion matrix, with precision = 1 when TP + FP = 0,
/// recall = 1 when TP + FN = 0 and F1 = 0 when precision + recall = 0.
EvaluationReport metrics_from_confusion(const Confusion& c);

/// predictions and labels are 0 (clean) / 1 (poisoned). Throws Error on a
/// length mismatch or empty input.
EvaluationReport compute_metrics(std::span<const int> predictions, std::span<const int> labels);

/// Threshold sweep over the unique scores plus the 0 and 1 endpoints; area
/// by the trapezoid rule. Throws Error unless both classes are present.
RocCurve roc_curve(std::span<const double> p_poison, std::span<const int> labels);

struct Histogram {
  std::size_t bins = 0;
  std::vector<std::size_t> clean;     // per bin
  std::vector<std::size_t> poisoned;  // per bin
};

/// Bin of p is min(floor(p * bins), bins - 1). Throws Error for bins == 0.
Histogram probability_histogram(std::span<const double> p_poison, std::span<const int> labels,
                                std::size_t bins);

/// Scores with the 0.5 rule, attaches ROC (when both classes occur) and ids.
EvaluationReport evaluate_scores(const std::vector<std::string>& ids,
                                 std::span<const double> p_poison, std::span<const int> labels);

nlohmann::json to_json(const EvaluationReport& report);
std::string roc_csv(const RocCurve& roc);
std::string histogram_csv(const Histogram& histogram);

/// Sum of saliency over each layout segment.
std::vector<std::pair<std::string, double>> segment_sums(std::span<const double> saliency,
                                                         const FeatureLayout& layout);
/// One row per sample: id, then one column per segment sum.
std::string saliency_csv(const std::vector<std::string>& ids,
                         const std::vector<std::vector<double>>& saliency,
                         const FeatureLayout& layout);

/// JSON lines {"id", "label", "segment", "values"}, one per sample and
/// segment, after a leading "# ..." comment line. Throws Error when the file
/// cannot be written.
void export_vectors_for_projection(const std::vector<FeatureVector>& vectors,
                                   const std::map<std::string, Label>& labels,
                                   const FeatureLayout& layout, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Train/evaluate protocols over precomputed features.

/// Feature vectors keyed by sample id, all built under `layout`.
struct FeatureTable {
  FeatureLayout layout;
  std::map<std::string, std::vector<float>> vectors;

  /// Vectors for `samples` restricted to the `target` layout's segments.
  LabeledVectors gather(const std::vector<const CodeSample*>& samples,
                        const FeatureLayout& target) const;
};

struct ExperimentResult {
  EvaluationReport report;
  TrainReport training;
  DetectorModel model;
};

/// Trains a fresh detector on train/val and evaluates it on test.
ExperimentResult train_and_evaluate(const std::vector<const CodeSample*>& train_samples,
                                    const std::vector<const CodeSample*>& val_samples,
                                    const std::vector<const CodeSample*>& test_samples,
                                    const FeatureTable& table, const FeatureLayout& layout,
                                    const DetectorConfig& config);

/// Trains on the primary train/val splits without any `excluded` sample and
/// tests on the unseen manifest's `excluded` poisoned samples plus as many
/// unseen clean samples (chosen by a seeded hash of the id). Throws Error
/// when the attack is absent from either manifest.
ExperimentResult leave_one_attack_out(const DatasetManifest& primary,
                                      const DatasetManifest& unseen, Attack excluded,
                                      const FeatureTable& table, const FeatureLayout& layout,
                                      const DetectorConfig& config, std::uint64_t seed);

struct AblationSpec {
  std::vector<FeatureMode> modes;
  /// Throws ConfigError when a mode repeats or the list is empty.
  void validate() const;
};

struct AblationRow {
  FeatureMode mode;
  std::size_t feature_length = 0;
  EvaluationReport report;
};

/// One train/evaluate cycle per mode on the primary splits. `layouts` maps
/// every requested mode to its layout; the table must hold a superset.
std::vector<AblationRow> feature_ablation(const DatasetManifest& primary,
                                          const FeatureTable& table,
                                          const std::map<FeatureMode, FeatureLayout>& layouts,
                                          const AblationSpec& spec, const DetectorConfig& config);

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace codeshield
