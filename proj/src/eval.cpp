#include "ov3d/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

namespace ov3d {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Piecewise-linear interpolation with numpy.interp semantics: xp ascending
// (duplicates allowed, the last of a run wins), `left`/`right` outside.
double interp(double x, std::span<const double> xp, std::span<const double> fp, double left, double right) {
  const std::size_t n = xp.size();
  if (x < xp.front()) return left;
  if (x > xp.back()) return right;
  const std::size_t j = static_cast<std::size_t>(std::upper_bound(xp.begin(), xp.end(), x) - xp.begin()) - 1;
  if (j == n - 1 || xp[j] == x) return fp[j];
  const double slope = (fp[j + 1] - fp[j]) / (xp[j + 1] - xp[j]);
  double r = slope * (x - xp[j]) + fp[j];
  if (std::isnan(r)) {
    r = slope * (x - xp[j + 1]) + fp[j + 1];
    if (std::isnan(r) && fp[j] == fp[j + 1]) r = fp[j];
  }
  return r;
}

// Running mean ignoring NaN; all-NaN input yields ones.
std::vector<double> cummean(const std::vector<double>& x) {
  std::vector<double> out(x.size(), 0.0);
  if (std::all_of(x.begin(), x.end(), [](double v) { return std::isnan(v); })) {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isnan(x[i])) {
      sum += x[i];
      ++count;
    }
    out[i] = count ? sum / static_cast<double>(count) : 0.0;
  }
  return out;
}

int first_recall_index(double min_recall) {
  return static_cast<int>(std::nearbyint(100.0 * min_recall)) + 1;
}

double velocity_l2(const Box3D& gt, const Box3D& pred) { return (gt.velocity - pred.velocity).norm(); }

double attribute_error(const SceneBox& gt, const SceneBox& pred) {
  if (!gt.attribute) return kNaN;
  return pred.attribute && *pred.attribute == *gt.attribute ? 0.0 : 1.0;
}

}  // namespace

void MatchConfig::validate() const {
  if (dist_thresholds.empty()) throw ConfigError("at least one distance threshold is required");
  for (std::size_t i = 0; i < dist_thresholds.size(); ++i) {
    if (!(dist_thresholds[i] > 0.0)) throw ConfigError("distance thresholds must be positive");
    if (i > 0 && !(dist_thresholds[i] > dist_thresholds[i - 1])) {
      throw ConfigError("distance thresholds must be strictly ascending");
    }
  }
  if (std::find(dist_thresholds.begin(), dist_thresholds.end(), tp_threshold) == dist_thresholds.end()) {
    throw ConfigError("tp_threshold must be one of the distance thresholds");
  }
  if (!(min_recall >= 0.0 && min_recall < 1.0)) throw ConfigError("min_recall must lie in [0, 1)");
  if (!(min_precision >= 0.0 && min_precision < 1.0)) throw ConfigError("min_precision must lie in [0, 1)");
}

double center_distance(const Box3D& a, const Box3D& b) { return (a.center.head<2>() - b.center.head<2>()).norm(); }

double scale_iou(const Box3D& a, const Box3D& b) {
  const double inter = a.size.cwiseMin(b.size).prod();
  const double uni = a.size.prod() + b.size.prod() - inter;
  return inter / uni;
}

double yaw_diff(double yaw_gt, double yaw_pred, double period) {
  double d = std::fmod(yaw_gt - yaw_pred + period / 2, period);
  if (d < 0) d += period;
  d -= period / 2;
  if (d > kPi) d -= 2 * kPi;
  return std::abs(d);
}

std::vector<DetectionMatch> match_greedy(std::span<const SceneBox> preds, std::span<const SceneBox> gts,
                                         const std::string& label, double threshold) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].box.label == label) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].box.score > preds[b].box.score; });

  std::map<std::string, std::vector<std::size_t>> gt_by_frame;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gts[g].box.label == label) gt_by_frame[gts[g].frame_id].push_back(g);
  }
  std::vector<char> taken(gts.size(), 0);

  std::vector<DetectionMatch> out;
  out.reserve(order.size());
  for (const std::size_t p : order) {
    DetectionMatch m;
    m.pred_index = p;
    m.score = preds[p].box.score;
    m.distance = std::numeric_limits<double>::infinity();
    std::optional<std::size_t> nearest;
    if (const auto it = gt_by_frame.find(preds[p].frame_id); it != gt_by_frame.end()) {
      for (const std::size_t g : it->second) {
        if (taken[g]) continue;
        const double d = center_distance(preds[p].box, gts[g].box);
        if (d < m.distance) {
          m.distance = d;
          nearest = g;
        }
      }
    }
    if (nearest && m.distance <= threshold) {
      m.is_tp = true;
      m.gt_index = nearest;
      taken[*nearest] = 1;
    }
    out.push_back(m);
  }
  return out;
}

int PrCurve::max_recall_index() const {
  for (int i = kSamples - 1; i >= 0; --i) {
    if (confidence[static_cast<std::size_t>(i)] != 0.0) return i;
  }
  return 0;
}

PrCurve build_pr_curve(std::span<const DetectionMatch> matches, std::span<const SceneBox> preds,
                   std::span<const SceneBox> gts, std::size_t num_gt, double orientation_period) {
  PrCurve curve;
  curve.num_gt = num_gt;
  for (int i = 0; i < PrCurve::kSamples; ++i) {
    curve.recall[static_cast<std::size_t>(i)] = i == PrCurve::kSamples - 1 ? 1.0 : static_cast<double>(i) * 0.01;
  }
  curve.tp_error.fill({});
  for (auto& e : curve.tp_error) e.fill(1.0);

  std::vector<double> prec, rec, conf;
  std::vector<double> tp_conf;
  std::array<std::vector<double>, 5> errs;
  double tp = 0.0, fp = 0.0;
  for (const DetectionMatch& m : matches) {
    if (m.is_tp) {
      tp += 1.0;
      const SceneBox& gt = gts[*m.gt_index];
      const SceneBox& pr = preds[m.pred_index];
      tp_conf.push_back(m.score);
      errs[0].push_back(center_distance(gt.box, pr.box));
      errs[1].push_back(1.0 - scale_iou(gt.box, pr.box));
      errs[2].push_back(yaw_diff(gt.box.yaw, pr.box.yaw, orientation_period));
      errs[3].push_back(velocity_l2(gt.box, pr.box));
      errs[4].push_back(attribute_error(gt, pr));
    } else {
      fp += 1.0;
    }
    prec.push_back(tp / (fp + tp));
    rec.push_back(tp / static_cast<double>(num_gt));
    conf.push_back(m.score);
  }
  if (tp_conf.empty() || num_gt == 0) return curve;  // precision and confidence stay zero, errors one
  curve.has_tp = true;

  for (int i = 0; i < PrCurve::kSamples; ++i) {
    const auto s = static_cast<std::size_t>(i);
    curve.precision[s] = interp(curve.recall[s], rec, prec, prec.front(), 0.0);
    curve.confidence[s] = interp(curve.recall[s], rec, conf, conf.front(), 0.0);
  }

  std::vector<double> conf_asc(tp_conf.rbegin(), tp_conf.rend());
  for (std::size_t k = 0; k < errs.size(); ++k) {
    const std::vector<double> mean = cummean(errs[k]);
    const std::vector<double> mean_rev(mean.rbegin(), mean.rend());
    for (std::size_t s = 0; s < PrCurve::kSamples; ++s) {
      curve.tp_error[k][s] = interp(curve.confidence[s], conf_asc, mean_rev, mean_rev.front(), mean_rev.back());
    }
  }
  return curve;
}

double average_precision(const PrCurve& curve, double min_recall, double min_precision) {
  const int first = first_recall_index(min_recall);
  if (first >= PrCurve::kSamples) return 0.0;
  double sum = 0.0;
  for (int i = first; i < PrCurve::kSamples; ++i) {
    sum += std::max(curve.precision[static_cast<std::size_t>(i)] - min_precision, 0.0);
  }
  return sum / static_cast<double>(PrCurve::kSamples - first) / (1.0 - min_precision);
}

double average_precision(std::span<const DetectionMatch> matches, std::size_t num_gt, double min_recall,
                         double min_precision) {
  // Precision does not depend on box contents, so a synthetic TP pairing suffices.
  std::vector<SceneBox> dummy(1);
  std::vector<DetectionMatch> local(matches.begin(), matches.end());
  for (auto& m : local) {
    m.pred_index = 0;
    if (m.is_tp) m.gt_index = 0;
  }
  return average_precision(build_pr_curve(local, dummy, dummy, num_gt), min_recall, min_precision);
}

TpErrors tp_errors(const PrCurve& curve, double min_recall) {
  const int first = first_recall_index(min_recall);
  const int last = curve.max_recall_index();
  std::array<double, 5> v{1.0, 1.0, 1.0, 1.0, 1.0};
  if (last >= first) {
    for (std::size_t k = 0; k < 5; ++k) {
      double sum = 0.0;
      for (int i = first; i <= last; ++i) sum += curve.tp_error[k][static_cast<std::size_t>(i)];
      v[k] = sum / static_cast<double>(last - first + 1);
    }
  }
  return {v[0], v[1], v[2], v[3], v[4]};
}

double achieved_recall(std::span<const DetectionMatch> matches, std::size_t num_gt) {
  if (num_gt == 0) return 0.0;
  const auto tps = std::count_if(matches.begin(), matches.end(), [](const DetectionMatch& m) { return m.is_tp; });
  return static_cast<double>(tps) / static_cast<double>(num_gt);
}

double mean_recall(std::span<const double> recalls) {
  if (recalls.empty()) return 0.0;
  return std::accumulate(recalls.begin(), recalls.end(), 0.0) / static_cast<double>(recalls.size());
}

double nds(double mean_ap, const TpErrors& e) {
  double total = 5.0 * mean_ap;
  for (const double err : e.as_array()) total += 1.0 - std::min(1.0, err);
  return total / 10.0;
}

MetricsReport evaluate(std::span<const SceneBox> preds, std::span<const SceneBox> gts,
                       const std::vector<std::string>& classes, const MatchConfig& cfg) {
  cfg.validate();
  std::vector<std::string> labels = classes;
  if (labels.empty()) {
    std::set<std::string> seen;
    for (const auto& g : gts) seen.insert(g.box.label);
    labels.assign(seen.begin(), seen.end());
  }

  MetricsReport report;
  report.config = cfg;
  std::vector<double> recalls;
  for (const std::string& label : labels) {
    ClassMetrics cm;
    cm.label = label;
    cm.num_gt = static_cast<std::size_t>(
        std::count_if(gts.begin(), gts.end(), [&](const SceneBox& g) { return g.box.label == label; }));
    cm.num_pred = static_cast<std::size_t>(
        std::count_if(preds.begin(), preds.end(), [&](const SceneBox& p) { return p.box.label == label; }));
    if (cm.num_gt == 0) continue;
    const double period = cfg.half_period_classes.count(label) ? kPi : 2 * kPi;
    for (const double th : cfg.dist_thresholds) {
      const auto matches = match_greedy(preds, gts, label, th);
      const PrCurve curve = build_pr_curve(matches, preds, gts, cm.num_gt, period);
      cm.ap.push_back(average_precision(curve, cfg.min_recall, cfg.min_precision));
      cm.recall.push_back(achieved_recall(matches, cm.num_gt));
      recalls.push_back(cm.recall.back());
      if (th == cfg.tp_threshold) cm.tp = tp_errors(curve, cfg.min_recall);
    }
    report.classes.push_back(std::move(cm));
  }

  if (!report.classes.empty()) {
    const double n = static_cast<double>(report.classes.size());
    double ap_sum = 0.0;
    std::array<double, 5> tp_sum{};
    for (const auto& cm : report.classes) {
      ap_sum += std::accumulate(cm.ap.begin(), cm.ap.end(), 0.0) / static_cast<double>(cm.ap.size());
      const auto e = cm.tp.as_array();
      for (std::size_t k = 0; k < 5; ++k) tp_sum[k] += e[k];
    }
    report.mean_ap = ap_sum / n;
    report.mean_tp = {tp_sum[0] / n, tp_sum[1] / n, tp_sum[2] / n, tp_sum[3] / n, tp_sum[4] / n};
  }
  report.mean_recall = mean_recall(recalls);
  report.nds = nds(report.mean_ap, report.mean_tp);
  return report;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["dist_thresholds"] = r.config.dist_thresholds;
  j["tp_threshold"] = r.config.tp_threshold;
  j["min_recall"] = r.config.min_recall;
  j["min_precision"] = r.config.min_precision;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (const auto& cm : r.classes) {
    nlohmann::ordered_json c;
    c["num_gt"] = cm.num_gt;
    c["num_pred"] = cm.num_pred;
    c["ap"] = cm.ap;
    c["recall"] = cm.recall;
    c["ate"] = cm.tp.ate;
    c["ase"] = cm.tp.ase;
    c["aoe"] = cm.tp.aoe;
    c["ave"] = cm.tp.ave;
    c["aae"] = cm.tp.aae;
    per_class[cm.label] = std::move(c);
  }
  j["classes"] = std::move(per_class);
  j["mAP"] = r.mean_ap;
  j["mATE"] = r.mean_tp.ate;
  j["mASE"] = r.mean_tp.ase;
  j["mAOE"] = r.mean_tp.aoe;
  j["mAVE"] = r.mean_tp.ave;
  j["mAAE"] = r.mean_tp.aae;
  j["mAR"] = r.mean_recall;
  j["NDS"] = r.nds;
  return j;
}

std::string format_table(const MetricsReport& r) {
  std::string out = fmt::format("{:<24}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}\n", "Class", "AP", "ATE", "ASE", "AOE",
                                "AVE", "AAE", "AR");
  for (const auto& cm : r.classes) {
    const double ap = std::accumulate(cm.ap.begin(), cm.ap.end(), 0.0) / static_cast<double>(cm.ap.size());
    const double ar =
        std::accumulate(cm.recall.begin(), cm.recall.end(), 0.0) / static_cast<double>(cm.recall.size());
    out += fmt::format("{:<24}{:>7.2f}%{:>8.3f}{:>8.3f}{:>8.3f}{:>8.3f}{:>8.3f}{:>7.2f}%\n", cm.label, 100 * ap,
                       cm.tp.ate, cm.tp.ase, cm.tp.aoe, cm.tp.ave, cm.tp.aae, 100 * ar);
  }
  out += '\n';
  out += fmt::format("{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}\n", "mAP", "mATE", "mASE", "mAOE", "mAVE", "mAAE",
                     "mAR", "NDS");
  out += fmt::format("{:>7.2f}%{:>8.3f}{:>8.3f}{:>8.3f}{:>8.3f}{:>8.3f}{:>7.2f}%{:>7.2f}%\n", 100 * r.mean_ap,
                     r.mean_tp.ate, r.mean_tp.ase, r.mean_tp.aoe, r.mean_tp.ave, r.mean_tp.aae,
                     100 * r.mean_recall, 100 * r.nds);
  return out;
}

}  // namespace ov3d
