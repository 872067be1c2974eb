#pragma once

#include <array>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ov3d/box.hpp"

namespace ov3d {

/// A box placed in a frame. Used for predictions and ground truth alike;
/// ground truth may carry NaN velocity when unknown.
struct SceneBox {
  std::string frame_id;
  Box3D box;
  std::optional<std::string> attribute;
  std::optional<int> num_pts;
};

using GtBox = SceneBox;

struct MatchConfig {
  std::vector<double> dist_thresholds{0.5, 1.0, 2.0, 4.0};
  double tp_threshold{2.0};
  double min_recall{0.1};
  double min_precision{0.1};
  /// Classes whose orientation error wraps at pi instead of 2 pi.
  std::set<std::string> half_period_classes;

  void validate() const;
};

/// One prediction's fate in a (class, threshold) evaluation. Entries are in
/// processing order: score descending, lower prediction index first on ties.
struct DetectionMatch {
  std::size_t pred_index{0};
  std::optional<std::size_t> gt_index;
  double distance{0.0};  // to the matched GT, or to the nearest free GT (inf if none)
  double score{0.0};
  bool is_tp{false};
};

/// Greedy center-distance matching within each frame: each prediction of the
/// class takes the nearest still-unmatched GT of the class if it lies within
/// `threshold` meters on the ground plane.
std::vector<DetectionMatch> match_greedy(std::span<const SceneBox> preds, std::span<const SceneBox> gts,
                                         const std::string& label, double threshold);

double center_distance(const Box3D& a, const Box3D& b);
/// IoU of the two boxes after aligning centers and yaw.
double scale_iou(const Box3D& a, const Box3D& b);
/// Smallest absolute yaw difference modulo `period`, in [0, pi].
double yaw_diff(double yaw_gt, double yaw_pred, double period = 2 * kPi);

struct TpErrors {
  double ate{1.0}, ase{1.0}, aoe{1.0}, ave{1.0}, aae{1.0};

  std::array<double, 5> as_array() const { return {ate, ase, aoe, ave, aae}; }
};

/// Precision, confidence and running-mean TP errors sampled at 101 evenly
/// spaced recall levels, as in the nuScenes devkit.
struct PrCurve {
  static constexpr int kSamples = 101;
  using Samples = std::array<double, kSamples>;

  Samples recall{}, precision{}, confidence{};
  std::array<Samples, 5> tp_error{};  // ATE, ASE, AOE, AVE, AAE
  std::size_t num_gt{0};
  bool has_tp{false};

  /// Index of the last non-zero confidence sample (0 if none).
  int max_recall_index() const;
};

PrCurve build_pr_curve(std::span<const DetectionMatch> matches, std::span<const SceneBox> preds,
                   std::span<const SceneBox> gts, std::size_t num_gt, double orientation_period = 2 * kPi);

/// Mean clipped precision over recall samples above min_recall.
double average_precision(const PrCurve& curve, double min_recall, double min_precision);
double average_precision(std::span<const DetectionMatch> matches, std::size_t num_gt, double min_recall,
                         double min_precision);

/// TP errors averaged over recall samples from just above min_recall up to
/// the maximum achieved recall. Every metric is 1 when that range is empty.
TpErrors tp_errors(const PrCurve& curve, double min_recall);

/// Fraction of GT boxes matched using all predictions.
double achieved_recall(std::span<const DetectionMatch> matches, std::size_t num_gt);

/// Mean of per-(class, threshold) achieved recall values.
double mean_recall(std::span<const double> recalls);

/// (5 mAP + sum(1 - min(1, err))) / 10.
double nds(double mean_ap, const TpErrors& mean_errors);

struct ClassMetrics {
  std::string label;
  std::size_t num_gt{0}, num_pred{0};
  std::vector<double> ap;      // per distance threshold
  std::vector<double> recall;  // per distance threshold
  TpErrors tp;
};

struct MetricsReport {
  MatchConfig config;
  std::vector<ClassMetrics> classes;
  double mean_ap{0.0};
  TpErrors mean_tp;
  double mean_recall{0.0};
  double nds{0.0};
};

/// Full evaluation. With an empty class list every GT label is evaluated;
/// listed classes without GT are skipped.
MetricsReport evaluate(std::span<const SceneBox> preds, std::span<const SceneBox> gts,
                       const std::vector<std::string>& classes, const MatchConfig& cfg);

nlohmann::ordered_json to_json(const MetricsReport& report);
/// Aligned text table: per-class rows, then mAP mATE mASE mAOE mAVE mAAE mAR NDS.
std::string format_table(const MetricsReport& report);

}  // namespace ov3d
